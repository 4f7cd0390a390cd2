//! Deterministic synthetic corpora in the fact format.

use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use range_pta_core::hierarchy::{ClassDecl, InterfaceDecl};
use range_pta_core::{ChunkConfig, ClassHierarchy, TypeId};
use serde::Deserialize;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid generator parameters: {0}")]
pub struct InvalidParams(pub String);

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    /// Classes including the root `Object`.
    pub classes: usize,
    /// Longest superclass chain below the root.
    pub max_depth: usize,
    pub interfaces: usize,
    /// Allocation sites per class type, inclusive range.
    pub allocs_min: usize,
    pub allocs_max: usize,
    pub vars: usize,
    /// Total `new`/`assign`/`store`/`load` lines.
    pub statements: usize,
    /// Share of non-`new` statements that are stores or loads.
    pub store_load_ratio: f64,
    /// Share of typed choices that ignore subtyping.
    pub violation_rate: f64,
    pub fields: usize,
    /// Pads per-class alloc counts so every interval is aligned to this chunk width.
    pub pad_chunk: Option<u32>,
    /// Element classes that also get array-typed variables and sites.
    pub arrays: usize,
    /// Probability that a class implements an interface.
    pub implements_rate: f64,
    /// Share of typed choices that insist on the exact type rather than any subtype.
    pub exact_type_rate: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            classes: 1000,
            max_depth: 8,
            interfaces: 40,
            allocs_min: 0,
            allocs_max: 10,
            vars: 5000,
            statements: 20000,
            store_load_ratio: 0.25,
            violation_rate: 0.05,
            fields: 40,
            pad_chunk: None,
            arrays: 10,
            implements_rate: 0.2,
            exact_type_rate: 0.5,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), InvalidParams> {
        let fail = |m: &str| Err(InvalidParams(m.into()));
        if self.classes == 0 {
            return fail("classes must be at least 1");
        }
        if self.max_depth >= self.classes && self.classes > 1 {
            return fail("max_depth must be below the class count");
        }
        if self.classes > 1 && self.max_depth == 0 {
            return fail("max_depth must be positive when there are subclasses");
        }
        if self.allocs_min > self.allocs_max {
            return fail("allocs_min exceeds allocs_max");
        }
        if self.allocs_max == 0 && self.pad_chunk.is_none() {
            return fail("allocs_max must be positive");
        }
        if self.vars == 0 {
            return fail("vars must be at least 1");
        }
        for (name, r) in [
            ("store_load_ratio", self.store_load_ratio),
            ("violation_rate", self.violation_rate),
            ("implements_rate", self.implements_rate),
            ("exact_type_rate", self.exact_type_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(InvalidParams(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.fields == 0 && self.store_load_ratio > 0.0 {
            return fail("stores and loads need at least one field");
        }
        if self.arrays >= self.classes {
            return fail("arrays must be below the class count");
        }
        if let Some(cb) = self.pad_chunk {
            if ChunkConfig::new(cb).is_err() {
                return fail("pad_chunk must be 8, 16, 32 or 64");
            }
        }
        Ok(())
    }

    /// Smallest valid program: one class, one variable, one site.
    pub fn minimal() -> Self {
        GenParams {
            classes: 1,
            max_depth: 0,
            interfaces: 0,
            allocs_min: 1,
            allocs_max: 1,
            vars: 1,
            statements: 1,
            store_load_ratio: 0.0,
            violation_rate: 0.0,
            fields: 0,
            pad_chunk: None,
            arrays: 0,
            implements_rate: 0.0,
            exact_type_rate: 0.0,
        }
    }
}

struct Typed {
    name: String,
    ty: TypeId,
}

struct Picker<'a> {
    pool: &'a [Typed],
    violation: f64,
    exact: f64,
}

impl<'a> Picker<'a> {
    /// An entry of type `exact`, else one whose type satisfies `ok`; any entry
    /// at the violation rate or when nothing qualifies.
    fn pick(&self, rng: &mut ChaCha8Rng, exact: TypeId, ok: impl Fn(TypeId) -> bool) -> &'a Typed {
        if !rng.random_bool(self.violation) {
            if rng.random_bool(self.exact) {
                let same: Vec<&Typed> = self.pool.iter().filter(|t| t.ty == exact).collect();
                if let Some(t) = same.choose(rng) {
                    return t;
                }
            }
            let fits: Vec<&Typed> = self.pool.iter().filter(|t| ok(t.ty)).collect();
            if let Some(t) = fits.choose(rng) {
                return t;
            }
        }
        self.pool.choose(rng).expect("non-empty pool")
    }
}

pub fn generate(params: &GenParams, seed: u64) -> Result<String, InvalidParams> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();

    // Hierarchy: a chain of `max_depth` classes, then random parents of bounded depth.
    let iface_names: Vec<String> = (1..=params.interfaces).map(|i| format!("I{i}")).collect();
    let mut iface_extends: Vec<Vec<String>> = Vec::new();
    for i in 0..params.interfaces {
        let mut ext = Vec::new();
        if i > 0 && rng.random_bool(0.3) {
            ext.push(iface_names[rng.random_range(0..i)].clone());
        }
        iface_extends.push(ext);
    }
    let mut class_names = vec!["Object".to_string()];
    let mut parents: Vec<Option<usize>> = vec![None];
    let mut depth = vec![0usize];
    for c in 1..params.classes {
        let parent = if c <= params.max_depth {
            c - 1
        } else {
            loop {
                let p = rng.random_range(0..c);
                if depth[p] < params.max_depth {
                    break p;
                }
            }
        };
        class_names.push(format!("C{c}"));
        parents.push(Some(parent));
        depth.push(depth[parent] + 1);
    }
    let mut implements: Vec<Vec<String>> = vec![Vec::new(); params.classes];
    if !iface_names.is_empty() {
        for imp in implements.iter_mut().skip(1) {
            if rng.random_bool(params.implements_rate) {
                imp.push(iface_names.choose(&mut rng).unwrap().clone());
            }
        }
    }

    writeln!(out, "# synthetic corpus, seed {seed}").unwrap();
    for c in 0..params.classes {
        write!(out, "class {}", class_names[c]).unwrap();
        if let Some(p) = parents[c] {
            write!(out, " extends {}", class_names[p]).unwrap();
        }
        if !implements[c].is_empty() {
            write!(out, " implements {}", implements[c].join(",")).unwrap();
        }
        out.push('\n');
    }
    for (name, ext) in iface_names.iter().zip(&iface_extends) {
        write!(out, "interface {name}").unwrap();
        if !ext.is_empty() {
            write!(out, " extends {}", ext.join(",")).unwrap();
        }
        out.push('\n');
    }

    let class_decls: Vec<ClassDecl> = (0..params.classes)
        .map(|c| {
            let imps: Vec<&str> = implements[c].iter().map(String::as_str).collect();
            ClassDecl::new(
                &class_names[c],
                parents[c].map(|p| class_names[p].as_str()),
                &imps,
            )
        })
        .collect();
    let iface_decls: Vec<InterfaceDecl> = iface_names
        .iter()
        .zip(&iface_extends)
        .map(|(n, e)| {
            let refs: Vec<&str> = e.iter().map(String::as_str).collect();
            InterfaceDecl::new(n, &refs)
        })
        .collect();
    let mut h = ClassHierarchy::build(&class_decls, &iface_decls)
        .map_err(|e| InvalidParams(format!("generated hierarchy rejected: {e}")))?;

    // Concrete types: classes plus a few array types.
    let mut concrete: Vec<TypeId> = (0..params.classes)
        .map(|c| h.lookup(&class_names[c]).unwrap())
        .collect();
    let mut elems: Vec<usize> = (0..params.classes).collect();
    let (chosen, _) = elems.partial_shuffle(&mut rng, params.arrays);
    for &c in chosen.iter() {
        concrete.push(h.resolve(&format!("{}[]", class_names[c])).unwrap());
    }
    let ifaces: Vec<TypeId> = iface_names.iter().map(|n| h.lookup(n).unwrap()).collect();
    let declarable: Vec<TypeId> = concrete.iter().chain(&ifaces).copied().collect();

    let fields: Vec<Typed> = (1..=params.fields)
        .map(|i| Typed {
            name: format!("f{i}"),
            ty: *declarable.choose(&mut rng).unwrap(),
        })
        .collect();
    // Variables lean towards deeper types so that filtering matters.
    let vars: Vec<Typed> = (1..=params.vars)
        .map(|i| Typed {
            name: format!("v{i}"),
            ty: *declarable.choose(&mut rng).unwrap(),
        })
        .collect();

    let mut allocs: Vec<Typed> = Vec::new();
    for (k, &t) in concrete.iter().enumerate() {
        let mut n = rng.random_range(params.allocs_min..=params.allocs_max);
        if let Some(cb) = params.pad_chunk {
            let cb = cb as usize;
            n = if k == 0 {
                // The root's own sites sit at 1.., so it needs one less.
                (n + 1).div_ceil(cb).max(1) * cb - 1
            } else {
                n.div_ceil(cb) * cb
            };
        }
        for _ in 0..n {
            allocs.push(Typed {
                name: format!("o{}", allocs.len() + 1),
                ty: t,
            });
        }
    }

    for f in &fields {
        writeln!(out, "field {} : {}", f.name, h.name(f.ty)).unwrap();
    }
    for v in &vars {
        writeln!(out, "var {} : {}", v.name, h.name(v.ty)).unwrap();
    }
    for a in &allocs {
        writeln!(out, "alloc {} : {}", a.name, h.name(a.ty)).unwrap();
    }

    let picker = Picker {
        pool: &vars,
        violation: params.violation_rate,
        exact: params.exact_type_rate,
    };
    let mut budget = params.statements;
    for a in &allocs {
        if budget == 0 {
            break;
        }
        let x = picker.pick(&mut rng, a.ty, |t| h.is_subtype(a.ty, t));
        writeln!(out, "new {} {}", x.name, a.name).unwrap();
        budget -= 1;
    }
    for _ in 0..budget {
        if !fields.is_empty() && rng.random_bool(params.store_load_ratio) {
            let f = fields.choose(&mut rng).unwrap();
            let base = vars.choose(&mut rng).unwrap();
            if rng.random_bool(0.5) {
                let src = picker.pick(&mut rng, f.ty, |t| h.is_subtype(t, f.ty));
                writeln!(out, "store {} {} {}", base.name, f.name, src.name).unwrap();
            } else {
                let dst = picker.pick(&mut rng, f.ty, |t| h.is_subtype(f.ty, t));
                writeln!(out, "load {} {} {}", dst.name, base.name, f.name).unwrap();
            }
        } else {
            let src = vars.choose(&mut rng).unwrap();
            let dst = picker.pick(&mut rng, src.ty, |t| h.is_subtype(src.ty, t));
            writeln!(out, "assign {} {}", dst.name, src.name).unwrap();
        }
    }
    Ok(out)
}
