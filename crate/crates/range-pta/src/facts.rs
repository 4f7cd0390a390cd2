//! Line-oriented fact format.
//!
//! ```text
//! class Object
//! class A extends Object implements I,J
//! interface I extends J
//! field f : A
//! var x : A
//! alloc o1 : A[]
//! new x o1
//! assign y x
//! store b f x
//! load y b f
//! ```
//!
//! `#` starts a comment. Declarations may appear in any order relative to
//! the statements that use them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use range_pta_core::hierarchy::{ClassDecl, HierarchyError, InterfaceDecl};
use range_pta_core::pag::PagError;
use range_pta_core::{ClassHierarchy, Pag, Program, TypeKind};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FactsErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("name `{0}` is already declared")]
    DuplicateName(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("undeclared allocation site `{0}`")]
    UndeclaredAlloc(String),
    #[error("undeclared field `{0}`")]
    UndeclaredField(String),
    #[error("{0}")]
    Hierarchy(HierarchyError),
    #[error("{0}")]
    Graph(PagError),
}

/// A diagnostic with a 1-based line and column.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {kind}")]
pub struct FactsError {
    pub line: usize,
    pub column: usize,
    pub kind: FactsErrorKind,
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

#[derive(Debug)]
struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
}

impl Line<'_> {
    fn err(&self, at: usize, kind: FactsErrorKind) -> FactsError {
        FactsError {
            line: self.number,
            column: match self.tokens.get(at) {
                Some(t) => t.column,
                // Past the last token: point just after it.
                None => self
                    .tokens
                    .last()
                    .map_or(1, |t| t.column + t.text.chars().count()),
            },
            kind,
        }
    }

    fn syntax(&self, at: usize, msg: impl Into<String>) -> FactsError {
        self.err(at, FactsErrorKind::Syntax(msg.into()))
    }

    fn text(&self, k: usize) -> &str {
        self.tokens[k].text
    }

    fn expect_len(&self, n: usize, shape: &str) -> Result<(), FactsError> {
        if self.tokens.len() == n {
            Ok(())
        } else {
            let at = self.tokens.len().min(n);
            Err(self.syntax(at, format!("expected `{shape}`")))
        }
    }
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in body.char_indices().chain([(body.len(), ' ')]) {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push(Token {
                        text: &body[s..pos],
                        column: body[..s].chars().count() + 1,
                    });
                    start = None;
                }
                (false, None) => start = Some(pos),
                _ => {}
            }
        }
        if !tokens.is_empty() {
            lines.push(Line {
                number: i + 1,
                tokens,
            });
        }
    }
    lines
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '.'))
}

fn is_type_name(s: &str) -> bool {
    let mut base = s;
    while let Some(stripped) = base.strip_suffix("[]") {
        base = stripped;
    }
    is_ident(base)
}

fn ident<'a>(line: &'a Line<'_>, k: usize) -> Result<&'a str, FactsError> {
    let t = line.text(k);
    if is_ident(t) {
        Ok(t)
    } else {
        Err(line.syntax(k, format!("invalid identifier `{t}`")))
    }
}

/// Names after a keyword, comma separated; spaces around commas are tolerated.
fn name_list(line: &Line<'_>, from: usize) -> Result<Vec<String>, FactsError> {
    if from >= line.tokens.len() {
        return Err(line.syntax(from, "expected a name list"));
    }
    let mut names = Vec::new();
    for k in from..line.tokens.len() {
        for part in line.text(k).split(',') {
            if part.is_empty() {
                continue;
            }
            if !is_ident(part) {
                return Err(line.syntax(k, format!("invalid identifier `{part}`")));
            }
            names.push(part.to_string());
        }
    }
    if names.is_empty() {
        return Err(line.syntax(from, "expected a name list"));
    }
    Ok(names)
}

/// Parses `name : Type` starting at token 1.
fn typed_decl<'a>(line: &'a Line<'_>, what: &str) -> Result<(&'a str, &'a str), FactsError> {
    line.expect_len(4, &format!("{what} <name> : <Type>"))?;
    let name = ident(line, 1)?;
    if line.text(2) != ":" {
        return Err(line.syntax(2, "expected `:`"));
    }
    let ty = line.text(3);
    if !is_type_name(ty) {
        return Err(line.syntax(3, format!("invalid type name `{ty}`")));
    }
    Ok((name, ty))
}

/// Finds where a hierarchy diagnostic should point.
fn locate(decls: &[&Line<'_>], err: &HierarchyError) -> (usize, usize) {
    let name = match err {
        HierarchyError::UnknownType(n)
        | HierarchyError::DuplicateType(n)
        | HierarchyError::InheritanceCycle(n)
        | HierarchyError::MultipleParents(n)
        | HierarchyError::InvalidName(n)
        | HierarchyError::MultipleRoots(_, n)
        | HierarchyError::KindMismatch { name: n, .. } => Some(n.as_str()),
        _ => None,
    };
    let is_dup = matches!(
        err,
        HierarchyError::DuplicateType(_)
            | HierarchyError::MultipleParents(_)
            | HierarchyError::MultipleRoots(..)
    );
    let mut hits = decls.iter().flat_map(|l| {
        l.tokens
            .iter()
            .enumerate()
            .filter(move |(k, t)| {
                name.is_some_and(|n| t.text.split(',').any(|p| p == n)) && (*k == 1 || !is_dup)
            })
            .map(move |(_, t)| (l.number, t.column))
    });
    let first = hits.next();
    let pick = if is_dup { hits.next().or(first) } else { first };
    pick.or_else(|| decls.first().map(|l| (l.number, 1)))
        .unwrap_or((1, 1))
}

fn graph_error(line: &Line<'_>, at: usize, e: PagError) -> FactsError {
    let kind = match e {
        PagError::DuplicateName(n) => FactsErrorKind::DuplicateName(n),
        PagError::UndeclaredVariable(n) => FactsErrorKind::UndeclaredVariable(n),
        PagError::UndeclaredAlloc(n) => FactsErrorKind::UndeclaredAlloc(n),
        PagError::UndeclaredField(n) => FactsErrorKind::UndeclaredField(n),
        other => FactsErrorKind::Graph(other),
    };
    line.err(at, kind)
}

/// Column of the first operand naming `name`, for undeclared-name errors.
fn operand_of(line: &Line<'_>, e: &PagError) -> usize {
    let name = match e {
        PagError::UndeclaredVariable(n)
        | PagError::UndeclaredAlloc(n)
        | PagError::UndeclaredField(n) => n,
        _ => return 1,
    };
    (1..line.tokens.len())
        .find(|&k| line.text(k) == name)
        .unwrap_or(1)
}

pub fn parse_program(text: &str) -> Result<Program, FactsError> {
    let lines = tokenize(text);
    let mut classes = Vec::new();
    let mut interfaces = Vec::new();
    let mut decl_lines = Vec::new();
    let mut typed = Vec::new();
    let mut stmts = Vec::new();

    for line in &lines {
        match line.text(0) {
            "class" => {
                if line.tokens.len() < 2 {
                    return Err(line.syntax(1, "expected a class name"));
                }
                let name = ident(line, 1)?;
                let mut parent = None;
                let mut ifaces = Vec::new();
                let mut k = 2;
                if k < line.tokens.len() && line.text(k) == "extends" {
                    if k + 1 >= line.tokens.len() {
                        return Err(line.syntax(k + 1, "expected a parent class"));
                    }
                    parent = Some(ident(line, k + 1)?.to_string());
                    k += 2;
                }
                if k < line.tokens.len() {
                    if line.text(k) != "implements" {
                        return Err(line.syntax(k, format!("unexpected `{}`", line.text(k))));
                    }
                    ifaces = name_list(line, k + 1)?;
                }
                let iface_refs: Vec<&str> = ifaces.iter().map(String::as_str).collect();
                classes.push(ClassDecl::new(name, parent.as_deref(), &iface_refs));
                decl_lines.push(line);
            }
            "interface" => {
                if line.tokens.len() < 2 {
                    return Err(line.syntax(1, "expected an interface name"));
                }
                let name = ident(line, 1)?;
                let mut extends = Vec::new();
                if line.tokens.len() > 2 {
                    if line.text(2) != "extends" {
                        return Err(line.syntax(2, format!("unexpected `{}`", line.text(2))));
                    }
                    extends = name_list(line, 3)?;
                }
                let refs: Vec<&str> = extends.iter().map(String::as_str).collect();
                interfaces.push(InterfaceDecl::new(name, &refs));
                decl_lines.push(line);
            }
            "field" | "var" | "alloc" => {
                let (name, ty) = typed_decl(line, line.text(0))?;
                typed.push((line, name, ty));
            }
            "new" | "assign" => {
                let shape = if line.text(0) == "new" {
                    "new <var> <alloc>"
                } else {
                    "assign <dst> <src>"
                };
                line.expect_len(3, shape)?;
                ident(line, 1)?;
                ident(line, 2)?;
                stmts.push(line);
            }
            "store" | "load" => {
                let shape = if line.text(0) == "store" {
                    "store <base> <field> <src>"
                } else {
                    "load <dst> <base> <field>"
                };
                line.expect_len(4, shape)?;
                for k in 1..4 {
                    ident(line, k)?;
                }
                stmts.push(line);
            }
            other => return Err(line.syntax(0, format!("unknown directive `{other}`"))),
        }
    }

    let mut hierarchy = ClassHierarchy::build(&classes, &interfaces).map_err(|e| {
        let (line, column) = locate(&decl_lines, &e);
        FactsError {
            line,
            column,
            kind: FactsErrorKind::Hierarchy(e),
        }
    })?;

    // Array types get ids in name order, independent of where they first appear.
    let arrays: BTreeSet<&str> = typed
        .iter()
        .map(|(_, _, ty)| *ty)
        .filter(|ty| ty.ends_with("[]"))
        .collect();
    for ty in arrays {
        if hierarchy.resolve(ty).is_err() {
            let (line, ..) = typed
                .iter()
                .find(|(_, _, t)| *t == ty)
                .expect("collected above");
            return Err(line.err(3, FactsErrorKind::UnknownType(ty.to_string())));
        }
    }

    let mut pag = Pag::new();
    for (kind, name, ty_name, line) in typed.iter().map(|(l, n, t)| (l.text(0), *n, *t, *l)) {
        let ty = hierarchy
            .lookup(ty_name)
            .ok_or_else(|| line.err(3, FactsErrorKind::UnknownType(ty_name.to_string())))?;
        let res = match kind {
            "field" => pag.add_field(name, ty).map(|_| ()),
            "var" => pag.add_var(name, ty).map(|_| ()),
            _ => pag.add_alloc(&hierarchy, name, ty).map(|_| ()),
        };
        res.map_err(|e| {
            let at = if matches!(e, PagError::InterfaceAllocation(_)) {
                3
            } else {
                1
            };
            graph_error(line, at, e)
        })?;
    }

    for line in stmts {
        let t = |k| line.text(k);
        let res = match t(0) {
            "new" => pag.add_new(t(1), t(2)),
            "assign" => pag.add_assign(t(1), t(2)),
            "store" => pag.add_store(t(1), t(2), t(3)),
            _ => pag.add_load(t(1), t(2), t(3)),
        };
        res.map_err(|e| graph_error(line, operand_of(line, &e), e))?;
    }

    Ok(Program { hierarchy, pag })
}

/// Prints `p` so that parsing the output yields an equal program.
pub fn print_program(p: &Program) -> String {
    let h = &p.hierarchy;
    let mut out = String::new();
    let names = |ids: &[range_pta_core::TypeId]| {
        ids.iter().map(|&t| h.name(t)).collect::<Vec<_>>().join(",")
    };
    for t in h.type_ids().filter(|&t| h.kind(t) == TypeKind::Class) {
        write!(out, "class {}", h.name(t)).unwrap();
        if let Some(parent) = h.parent(t) {
            write!(out, " extends {}", h.name(parent)).unwrap();
        }
        if !h.direct_interfaces(t).is_empty() {
            write!(out, " implements {}", names(h.direct_interfaces(t))).unwrap();
        }
        out.push('\n');
    }
    for t in h.type_ids().filter(|&t| h.is_interface(t)) {
        write!(out, "interface {}", h.name(t)).unwrap();
        if !h.direct_interfaces(t).is_empty() {
            write!(out, " extends {}", names(h.direct_interfaces(t))).unwrap();
        }
        out.push('\n');
    }
    let pag = &p.pag;
    for (kw, nodes) in [
        ("field", pag.fields()),
        ("var", pag.vars()),
        ("alloc", pag.allocs()),
    ] {
        for n in nodes {
            writeln!(out, "{kw} {} : {}", n.name, h.name(n.ty)).unwrap();
        }
    }
    for e in &pag.news {
        writeln!(
            out,
            "new {} {}",
            pag.var(e.var).name,
            pag.alloc(e.alloc).name
        )
        .unwrap();
    }
    for e in &pag.assigns {
        writeln!(
            out,
            "assign {} {}",
            pag.var(e.dst).name,
            pag.var(e.src).name
        )
        .unwrap();
    }
    for e in &pag.stores {
        writeln!(
            out,
            "store {} {} {}",
            pag.var(e.base).name,
            pag.field(e.field).name,
            pag.var(e.src).name
        )
        .unwrap();
    }
    for e in &pag.loads {
        writeln!(
            out,
            "load {} {} {}",
            pag.var(e.dst).name,
            pag.var(e.base).name,
            pag.field(e.field).name
        )
        .unwrap();
    }
    out
}
