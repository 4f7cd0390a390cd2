#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use range_pta_core::hierarchy::{ClassDecl, InterfaceDecl};
use range_pta_core::{ClassHierarchy, Pag, Program, TypeId};

/// Random hierarchy: class 0 is the root, parents precede children,
/// interfaces only extend earlier interfaces.
#[derive(Clone, Debug)]
pub struct Shape {
    pub parents: Vec<Option<usize>>,
    pub class_ifaces: Vec<Vec<usize>>,
    pub iface_extends: Vec<Vec<usize>>,
    pub allocs: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ty {
    Class(usize),
    Iface(usize),
}

fn picks(raw: &[u32], bound: usize) -> Vec<usize> {
    if bound == 0 {
        return Vec::new();
    }
    let set: BTreeSet<usize> = raw.iter().map(|&r| r as usize % bound).collect();
    set.into_iter().collect()
}

pub fn shape(
    max_classes: usize,
    max_ifaces: usize,
    max_allocs: usize,
) -> impl Strategy<Value = Shape> {
    (1..=max_classes, 0..=max_ifaces)
        .prop_flat_map(move |(n, m)| {
            (
                prop::collection::vec(any::<u32>(), n),
                prop::collection::vec(prop::collection::vec(any::<u32>(), 0..=2), n),
                prop::collection::vec(prop::collection::vec(any::<u32>(), 0..=2), m),
                prop::collection::vec(any::<u32>(), 0..=max_allocs),
            )
        })
        .prop_map(|(pp, ci, ie, al)| {
            let n = pp.len();
            let m = ie.len();
            Shape {
                parents: (0..n)
                    .map(|c| (c > 0).then(|| pp[c] as usize % c))
                    .collect(),
                class_ifaces: ci.iter().map(|r| picks(r, m)).collect(),
                iface_extends: ie.iter().enumerate().map(|(i, r)| picks(r, i)).collect(),
                allocs: al.iter().map(|&r| r as usize % n).collect(),
            }
        })
}

impl Shape {
    pub fn class_name(c: usize) -> String {
        format!("C{c}")
    }

    pub fn iface_name(i: usize) -> String {
        format!("I{i}")
    }

    pub fn name(t: Ty) -> String {
        match t {
            Ty::Class(c) => Self::class_name(c),
            Ty::Iface(i) => Self::iface_name(i),
        }
    }

    pub fn types(&self) -> Vec<Ty> {
        (0..self.parents.len())
            .map(Ty::Class)
            .chain((0..self.iface_extends.len()).map(Ty::Iface))
            .collect()
    }

    pub fn hierarchy(&self) -> ClassHierarchy {
        let ci: Vec<Vec<String>> = self
            .class_ifaces
            .iter()
            .map(|l| l.iter().map(|&i| Self::iface_name(i)).collect())
            .collect();
        let ie: Vec<Vec<String>> = self
            .iface_extends
            .iter()
            .map(|l| l.iter().map(|&i| Self::iface_name(i)).collect())
            .collect();
        let classes: Vec<ClassDecl> = (0..self.parents.len())
            .map(|c| {
                let refs: Vec<&str> = ci[c].iter().map(String::as_str).collect();
                let parent = self.parents[c].map(Self::class_name);
                ClassDecl::new(&Self::class_name(c), parent.as_deref(), &refs)
            })
            .collect();
        let ifaces: Vec<InterfaceDecl> = ie
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let refs: Vec<&str> = l.iter().map(String::as_str).collect();
                InterfaceDecl::new(&Self::iface_name(i), &refs)
            })
            .collect();
        ClassHierarchy::build(&classes, &ifaces).expect("generated hierarchy is valid")
    }

    pub fn id(h: &ClassHierarchy, t: Ty) -> TypeId {
        h.lookup(&Self::name(t)).unwrap()
    }

    pub fn alloc_types(&self, h: &ClassHierarchy) -> Vec<TypeId> {
        self.allocs
            .iter()
            .map(|&c| Self::id(h, Ty::Class(c)))
            .collect()
    }

    fn iface_closure(&self, start: &[usize], out: &mut BTreeSet<usize>) {
        for &i in start {
            if out.insert(i) {
                self.iface_closure(&self.iface_extends[i], out);
            }
        }
    }

    /// Every supertype of class `c`, computed by walking parent links.
    pub fn supers_of_class(&self, c: usize) -> BTreeSet<Ty> {
        let mut out = BTreeSet::new();
        let mut ifaces = BTreeSet::new();
        let mut cur = Some(c);
        while let Some(k) = cur {
            out.insert(Ty::Class(k));
            self.iface_closure(&self.class_ifaces[k], &mut ifaces);
            cur = self.parents[k];
        }
        out.extend(ifaces.into_iter().map(Ty::Iface));
        out
    }

    /// Allocation site `a` may be stored in something declared as `t`.
    pub fn compatible(&self, a: usize, t: Ty) -> bool {
        self.supers_of_class(self.allocs[a]).contains(&t)
    }
}

/// Random statements over a random hierarchy.
#[derive(Clone, Debug)]
pub struct Prog {
    pub shape: Shape,
    pub var_types: Vec<Ty>,
    pub field_types: Vec<Ty>,
    pub news: Vec<(usize, usize)>,
    pub assigns: Vec<(usize, usize)>,
    pub stores: Vec<(usize, usize, usize)>,
    pub loads: Vec<(usize, usize, usize)>,
}

pub fn prog(
    max_classes: usize,
    max_allocs: usize,
    max_vars: usize,
    max_stmts: usize,
) -> impl Strategy<Value = Prog> {
    (shape(max_classes, 3, max_allocs), 1..=max_vars, 1..=3usize)
        .prop_flat_map(move |(shape, nv, nf)| {
            let nt = shape.types().len();
            let na = shape.allocs.len();
            let news = if na == 0 {
                Just(Vec::new()).boxed()
            } else {
                prop::collection::vec((0..nv, 0..na), 0..=na * 2).boxed()
            };
            (
                Just(shape),
                prop::collection::vec(0..nt, nv),
                prop::collection::vec(0..nt, nf),
                news,
                prop::collection::vec((0..nv, 0..nv), 0..=max_stmts),
                prop::collection::vec((0..nv, 0..nf, 0..nv), 0..=max_stmts / 3),
                prop::collection::vec((0..nv, 0..nv, 0..nf), 0..=max_stmts / 3),
            )
        })
        .prop_map(|(shape, vt, ft, news, assigns, stores, loads)| {
            let types = shape.types();
            Prog {
                var_types: vt.iter().map(|&k| types[k]).collect(),
                field_types: ft.iter().map(|&k| types[k]).collect(),
                shape,
                news,
                assigns,
                stores,
                loads,
            }
        })
}

impl Prog {
    pub fn program(&self) -> Program {
        let h = self.shape.hierarchy();
        let mut pag = Pag::new();
        for (k, &t) in self.var_types.iter().enumerate() {
            pag.add_var(&format!("v{k}"), Shape::id(&h, t)).unwrap();
        }
        for (k, &t) in self.field_types.iter().enumerate() {
            pag.add_field(&format!("f{k}"), Shape::id(&h, t)).unwrap();
        }
        for (k, &c) in self.shape.allocs.iter().enumerate() {
            pag.add_alloc(&h, &format!("o{k}"), Shape::id(&h, Ty::Class(c)))
                .unwrap();
        }
        for &(v, a) in &self.news {
            pag.add_new(&format!("v{v}"), &format!("o{a}")).unwrap();
        }
        for &(d, s) in &self.assigns {
            pag.add_assign(&format!("v{d}"), &format!("v{s}")).unwrap();
        }
        for &(b, f, s) in &self.stores {
            pag.add_store(&format!("v{b}"), &format!("f{f}"), &format!("v{s}"))
                .unwrap();
        }
        for &(d, b, f) in &self.loads {
            pag.add_load(&format!("v{d}"), &format!("v{b}"), &format!("f{f}"))
                .unwrap();
        }
        Program { hierarchy: h, pag }
    }

    /// Least fixpoint by brute-force iteration over allocation sites.
    /// `filtered` selects exact type filtering; otherwise no filtering.
    pub fn oracle(&self, filtered: bool) -> Oracle {
        let ok = |a: usize, t: Ty| !filtered || self.shape.compatible(a, t);
        let mut vars: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.var_types.len()];
        let mut fields: BTreeMap<(usize, usize), BTreeSet<usize>> = BTreeMap::new();
        loop {
            let mut changed = false;
            for &(v, a) in &self.news {
                if ok(a, self.var_types[v]) {
                    changed |= vars[v].insert(a);
                }
            }
            for &(d, s) in &self.assigns {
                let add: Vec<usize> = vars[s]
                    .iter()
                    .copied()
                    .filter(|&a| ok(a, self.var_types[d]))
                    .collect();
                for a in add {
                    changed |= vars[d].insert(a);
                }
            }
            for &(b, f, s) in &self.stores {
                for o in vars[b].clone() {
                    let add: Vec<usize> = vars[s]
                        .iter()
                        .copied()
                        .filter(|&a| ok(a, self.field_types[f]))
                        .collect();
                    let entry = fields.entry((o, f)).or_default();
                    for a in add {
                        changed |= entry.insert(a);
                    }
                }
            }
            for &(d, b, f) in &self.loads {
                for o in vars[b].clone() {
                    let add: Vec<usize> = fields
                        .get(&(o, f))
                        .map(|s| {
                            s.iter()
                                .copied()
                                .filter(|&a| ok(a, self.var_types[d]))
                                .collect()
                        })
                        .unwrap_or_default();
                    for a in add {
                        changed |= vars[d].insert(a);
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Oracle { vars, fields }
    }
}

/// Points-to sets by allocation site (not by index).
#[derive(Debug, PartialEq, Eq)]
pub struct Oracle {
    pub vars: Vec<BTreeSet<usize>>,
    pub fields: BTreeMap<(usize, usize), BTreeSet<usize>>,
}
