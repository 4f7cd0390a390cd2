//! Class hierarchy, allocation-site numbering and per-type intervals.
//!
//! Numbering walks the class tree depth-first. A class receives the indices
//! of its own allocation sites first, then those of its subclasses in
//! declaration order, so the interval recorded for a class covers exactly
//! the sites whose type is that class or one of its subclasses. Intervals are
//! recorded in postorder.
//!
//! Array types are synthetic classes whose parent mirrors the element type's
//! parent (`B[]` extends `A[]` when `B` extends `A`; `Object[]` extends the
//! root), so they get contiguous intervals like any other class.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::bitsets::{ChunkConfig, PlainBitVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(u32);

impl TypeId {
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    fn from_index(index: usize) -> Self {
        TypeId(index as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeKind {
    Class,
    Interface,
    /// Array of the given element type.
    Array(TypeId),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HierarchyError {
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("type `{0}` is declared more than once")]
    DuplicateType(String),
    #[error("inheritance cycle through `{0}`")]
    InheritanceCycle(String),
    #[error("class `{0}` is declared with more than one parent")]
    MultipleParents(String),
    #[error("no root class (a class without `extends`) is declared")]
    NoRoot,
    #[error("more than one root class: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("`{name}` is not {expected}")]
    KindMismatch {
        name: String,
        expected: &'static str,
    },
    #[error("`{0}` is not a valid declared type name")]
    InvalidName(String),
    #[error("allocation site #{0} has interface type `{1}`")]
    AllocOfInterface(usize, String),
}

/// Closed index range `[lower, upper]` over 1-based allocation indices.
///
/// Empty intervals are written `[lower, lower - 1]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lower: u32,
    upper: u32,
}

impl Interval {
    /// Returns `None` unless `lower >= 1` and `upper >= lower - 1`.
    pub fn new(lower: u32, upper: u32) -> Option<Self> {
        (lower >= 1 && upper + 1 >= lower).then_some(Interval { lower, upper })
    }

    pub fn empty_at(lower: u32) -> Self {
        assert!(lower >= 1, "interval lower bound must be at least 1");
        Interval {
            lower,
            upper: lower - 1,
        }
    }

    pub const fn lower(self) -> u32 {
        self.lower
    }

    pub const fn upper(self) -> u32 {
        self.upper
    }

    pub const fn is_empty(self) -> bool {
        self.upper < self.lower
    }

    pub const fn len(self) -> u32 {
        self.upper + 1 - self.lower
    }

    pub const fn contains(self, index: u32) -> bool {
        index >= self.lower && index <= self.upper
    }

    /// `other` is non-empty and lies inside `self`.
    pub const fn contains_interval(self, other: Interval) -> bool {
        !other.is_empty() && other.lower >= self.lower && other.upper <= self.upper
    }

    pub const fn intersects(self, other: Interval) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.lower <= other.upper
            && other.lower <= self.upper
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lower, self.upper)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub parent: Option<String>,
    pub interfaces: Vec<String>,
}

impl ClassDecl {
    pub fn new(name: &str, parent: Option<&str>, interfaces: &[&str]) -> Self {
        ClassDecl {
            name: name.to_string(),
            parent: parent.map(ToString::to_string),
            interfaces: interfaces.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterfaceDecl {
    pub name: String,
    pub extends: Vec<String>,
}

impl InterfaceDecl {
    pub fn new(name: &str, extends: &[&str]) -> Self {
        InterfaceDecl {
            name: name.to_string(),
            extends: extends.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TypeInfo {
    name: String,
    kind: TypeKind,
    parent: Option<TypeId>,
    children: Vec<TypeId>,
    /// Implemented interfaces for classes, extended interfaces for interfaces.
    interfaces: Vec<TypeId>,
    /// Every supertype including the type itself, sorted.
    supers: Vec<TypeId>,
}

/// Single-inheritance class tree plus interface relations.
///
/// Type ids are assigned to classes in declaration order, then interfaces,
/// then array types as they are resolved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassHierarchy {
    types: Vec<TypeInfo>,
    by_name: BTreeMap<String, TypeId>,
    root: TypeId,
}

impl ClassHierarchy {
    pub fn build(
        classes: &[ClassDecl],
        interfaces: &[InterfaceDecl],
    ) -> Result<Self, HierarchyError> {
        let mut types: Vec<TypeInfo> = Vec::with_capacity(classes.len() + interfaces.len());
        let mut by_name: BTreeMap<String, TypeId> = BTreeMap::new();

        for decl in classes {
            if decl.name.is_empty() || decl.name.contains('[') {
                return Err(HierarchyError::InvalidName(decl.name.clone()));
            }
            if let Some(&prev) = by_name.get(&decl.name) {
                let prev_decl = &classes[prev.index()];
                return Err(if prev_decl.parent != decl.parent {
                    HierarchyError::MultipleParents(decl.name.clone())
                } else {
                    HierarchyError::DuplicateType(decl.name.clone())
                });
            }
            by_name.insert(decl.name.clone(), TypeId::from_index(types.len()));
            types.push(TypeInfo {
                name: decl.name.clone(),
                kind: TypeKind::Class,
                parent: None,
                children: Vec::new(),
                interfaces: Vec::new(),
                supers: Vec::new(),
            });
        }
        for decl in interfaces {
            if decl.name.is_empty() || decl.name.contains('[') {
                return Err(HierarchyError::InvalidName(decl.name.clone()));
            }
            if by_name.contains_key(&decl.name) {
                return Err(HierarchyError::DuplicateType(decl.name.clone()));
            }
            by_name.insert(decl.name.clone(), TypeId::from_index(types.len()));
            types.push(TypeInfo {
                name: decl.name.clone(),
                kind: TypeKind::Interface,
                parent: None,
                children: Vec::new(),
                interfaces: Vec::new(),
                supers: Vec::new(),
            });
        }

        let lookup = |name: &str, want: TypeKind| -> Result<TypeId, HierarchyError> {
            let id = *by_name
                .get(name)
                .ok_or_else(|| HierarchyError::UnknownType(name.to_string()))?;
            if types[id.index()].kind != want {
                return Err(HierarchyError::KindMismatch {
                    name: name.to_string(),
                    expected: match want {
                        TypeKind::Interface => "an interface",
                        _ => "a class",
                    },
                });
            }
            Ok(id)
        };

        let mut root: Option<TypeId> = None;
        let mut parents = Vec::with_capacity(classes.len());
        let mut impls = Vec::with_capacity(classes.len());
        for (i, decl) in classes.iter().enumerate() {
            let parent = match &decl.parent {
                Some(p) => Some(lookup(p, TypeKind::Class)?),
                None => {
                    if let Some(r) = root {
                        return Err(HierarchyError::MultipleRoots(
                            classes[r.index()].name.clone(),
                            decl.name.clone(),
                        ));
                    }
                    root = Some(TypeId::from_index(i));
                    None
                }
            };
            parents.push(parent);
            let mut ifaces = Vec::with_capacity(decl.interfaces.len());
            for name in &decl.interfaces {
                let id = lookup(name, TypeKind::Interface)?;
                if !ifaces.contains(&id) {
                    ifaces.push(id);
                }
            }
            impls.push(ifaces);
        }
        let mut extends = Vec::with_capacity(interfaces.len());
        for decl in interfaces {
            let mut ids = Vec::with_capacity(decl.extends.len());
            for name in &decl.extends {
                let id = lookup(name, TypeKind::Interface)?;
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
            extends.push(ids);
        }

        // With a unique parentless class, a class whose parent chain does not
        // reach it within `n` steps sits on a cycle.
        let root = match root {
            Some(r) => r,
            None if classes.is_empty() => return Err(HierarchyError::NoRoot),
            None => return Err(HierarchyError::InheritanceCycle(classes[0].name.clone())),
        };
        for (i, decl) in classes.iter().enumerate() {
            let mut cur = i;
            let mut steps = 0;
            while let Some(p) = parents[cur] {
                cur = p.index();
                steps += 1;
                if steps > classes.len() {
                    return Err(HierarchyError::InheritanceCycle(decl.name.clone()));
                }
            }
        }

        for (i, parent) in parents.iter().enumerate() {
            types[i].parent = *parent;
            types[i].interfaces = impls[i].clone();
            if let Some(p) = parent {
                types[p.index()].children.push(TypeId::from_index(i));
            }
        }
        let iface_base = classes.len();
        for (j, ext) in extends.into_iter().enumerate() {
            types[iface_base + j].interfaces = ext;
        }

        let mut h = ClassHierarchy {
            types,
            by_name,
            root,
        };
        h.compute_interface_supers(iface_base)?;
        h.compute_class_supers();
        Ok(h)
    }

    fn compute_interface_supers(&mut self, iface_base: usize) -> Result<(), HierarchyError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.types.len();
        let mut mark = vec![Mark::New; n];
        for start in iface_base..n {
            if mark[start] != Mark::New {
                continue;
            }
            // (node, next extended interface to visit)
            let mut stack = vec![(start, 0usize)];
            mark[start] = Mark::Active;
            while let Some(&mut (node, ref mut pos)) = stack.last_mut() {
                if let Some(&next) = self.types[node].interfaces.get(*pos) {
                    *pos += 1;
                    match mark[next.index()] {
                        Mark::Active => {
                            return Err(HierarchyError::InheritanceCycle(
                                self.types[next.index()].name.clone(),
                            ))
                        }
                        Mark::New => {
                            mark[next.index()] = Mark::Active;
                            stack.push((next.index(), 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    stack.pop();
                    let mut supers = vec![TypeId::from_index(node), self.root];
                    for &ext in &self.types[node].interfaces {
                        supers.extend_from_slice(&self.types[ext.index()].supers);
                    }
                    supers.sort_unstable();
                    supers.dedup();
                    self.types[node].supers = supers;
                    mark[node] = Mark::Done;
                }
            }
        }
        Ok(())
    }

    fn compute_class_supers(&mut self) {
        let mut stack = vec![self.root];
        while let Some(t) = stack.pop() {
            let info = &self.types[t.index()];
            let mut supers = vec![t];
            if let Some(p) = info.parent {
                supers.extend_from_slice(&self.types[p.index()].supers);
            }
            for &i in &info.interfaces {
                supers.extend_from_slice(&self.types[i.index()].supers);
            }
            supers.sort_unstable();
            supers.dedup();
            stack.extend(info.children.iter().rev().copied());
            self.types[t.index()].supers = supers;
        }
    }

    pub fn root(&self) -> TypeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn type_ids(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.types.len()).map(TypeId::from_index)
    }

    pub fn lookup(&self, name: &str) -> Option<TypeId> {
        self.by_name.get(name).copied()
    }

    /// Looks up a type by name, materializing array types on first use.
    pub fn resolve(&mut self, name: &str) -> Result<TypeId, HierarchyError> {
        if let Some(id) = self.lookup(name) {
            return Ok(id);
        }
        let Some(elem_name) = name.strip_suffix("[]") else {
            return Err(HierarchyError::UnknownType(name.to_string()));
        };
        let elem = self.resolve(elem_name)?;
        let parent = match self.kind(elem) {
            TypeKind::Interface => {
                let root_array = format!("{}[]", self.name(self.root));
                self.resolve(&root_array)?
            }
            _ if elem == self.root => self.root,
            _ => {
                let elem_parent = self.types[elem.index()]
                    .parent
                    .expect("non-root class has a parent");
                let parent_array = format!("{}[]", self.name(elem_parent));
                self.resolve(&parent_array)?
            }
        };
        let id = TypeId::from_index(self.types.len());
        let mut supers = self.types[parent.index()].supers.clone();
        supers.push(id);
        supers.sort_unstable();
        self.types.push(TypeInfo {
            name: name.to_string(),
            kind: TypeKind::Array(elem),
            parent: Some(parent),
            children: Vec::new(),
            interfaces: Vec::new(),
            supers,
        });
        self.types[parent.index()].children.push(id);
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn name(&self, t: TypeId) -> &str {
        &self.types[t.index()].name
    }

    pub fn kind(&self, t: TypeId) -> TypeKind {
        self.types[t.index()].kind
    }

    pub fn is_interface(&self, t: TypeId) -> bool {
        self.kind(t) == TypeKind::Interface
    }

    pub fn parent(&self, t: TypeId) -> Option<TypeId> {
        self.types[t.index()].parent
    }

    /// Direct subclasses in declaration order (array types after declared classes).
    pub fn children(&self, t: TypeId) -> &[TypeId] {
        &self.types[t.index()].children
    }

    /// Interfaces directly implemented by a class, or directly extended by an interface.
    pub fn direct_interfaces(&self, t: TypeId) -> &[TypeId] {
        &self.types[t.index()].interfaces
    }

    pub fn is_subtype(&self, s: TypeId, t: TypeId) -> bool {
        self.types[s.index()].supers.binary_search(&t).is_ok()
    }

    pub fn is_subtype_by_name(&self, s: &str, t: &str) -> Result<bool, HierarchyError> {
        let get = |n: &str| {
            self.lookup(n)
                .ok_or_else(|| HierarchyError::UnknownType(n.to_string()))
        };
        Ok(self.is_subtype(get(s)?, get(t)?))
    }

    /// Renumbers allocation sites by a depth-first walk from the root.
    ///
    /// `alloc_types[k]` is the allocated type of site `k`; the returned
    /// numbering refers to sites by that position.
    pub fn number_allocations(
        &self,
        alloc_types: &[TypeId],
    ) -> Result<NumberingResult, HierarchyError> {
        let n_types = self.types.len();
        let mut class_allocs: Vec<Vec<u32>> = vec![Vec::new(); n_types];
        for (k, &t) in alloc_types.iter().enumerate() {
            if t.index() >= n_types {
                return Err(HierarchyError::UnknownType(format!("#{}", t.0)));
            }
            if self.is_interface(t) {
                return Err(HierarchyError::AllocOfInterface(
                    k,
                    self.name(t).to_string(),
                ));
            }
            class_allocs[t.index()].push(k as u32);
        }

        let total = alloc_types.len() as u32;
        let mut global_array = Vec::with_capacity(alloc_types.len());
        let mut type_of_index = Vec::with_capacity(alloc_types.len());
        let mut intervals = vec![Interval::empty_at(1); n_types];
        let mut postorder = Vec::new();
        let mut counter: u32 = 0;

        // Frame: (class, interval lower bound, next child position).
        let mut stack: Vec<(TypeId, u32, usize)> = Vec::new();
        let mut enter = |t: TypeId, counter: &mut u32, stack: &mut Vec<(TypeId, u32, usize)>| {
            let lower = *counter + 1;
            for &site in &class_allocs[t.index()] {
                *counter += 1;
                global_array.push(site);
                type_of_index.push(t);
            }
            stack.push((t, lower, 0));
        };
        enter(self.root, &mut counter, &mut stack);
        while let Some(&mut (t, lower, ref mut pos)) = stack.last_mut() {
            let children = &self.types[t.index()].children;
            if *pos < children.len() {
                let child = children[*pos];
                *pos += 1;
                enter(child, &mut counter, &mut stack);
            } else {
                stack.pop();
                intervals[t.index()] = Interval {
                    lower,
                    upper: counter,
                };
                postorder.push(t);
            }
        }
        debug_assert_eq!(counter, total);

        let mut index_of = vec![0u32; alloc_types.len()];
        for (slot, &site) in global_array.iter().enumerate() {
            index_of[site as usize] = slot as u32 + 1;
        }

        let mut iface_intervals = BTreeMap::new();
        for iface in self.type_ids().filter(|&t| self.is_interface(t)) {
            let mut list: Vec<Interval> = self
                .type_ids()
                .filter(|&c| !self.is_interface(c) && self.is_subtype(c, iface))
                .filter(|&c| self.parent(c).is_none_or(|p| !self.is_subtype(p, iface)))
                .map(|c| intervals[c.index()])
                .filter(|iv| !iv.is_empty())
                .collect();
            list.sort_unstable_by_key(|iv| iv.lower);
            let mut merged: Vec<Interval> = Vec::with_capacity(list.len());
            for iv in list {
                match merged.last_mut() {
                    Some(last) if iv.lower <= last.upper + 1 => {
                        last.upper = last.upper.max(iv.upper);
                    }
                    _ => merged.push(iv),
                }
            }
            iface_intervals.insert(iface, merged);
        }

        Ok(NumberingResult {
            global_array,
            index_of,
            type_of_index,
            intervals,
            iface_intervals,
            postorder,
            total,
        })
    }
}

/// Output of [`ClassHierarchy::number_allocations`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumberingResult {
    global_array: Vec<u32>,
    index_of: Vec<u32>,
    type_of_index: Vec<TypeId>,
    intervals: Vec<Interval>,
    iface_intervals: BTreeMap<TypeId, Vec<Interval>>,
    postorder: Vec<TypeId>,
    total: u32,
}

impl NumberingResult {
    pub fn total_allocs(&self) -> u32 {
        self.total
    }

    /// Sites ordered by index: element `i - 1` is the site numbered `i`.
    pub fn global_array(&self) -> &[u32] {
        &self.global_array
    }

    /// 1-based index assigned to allocation site `site`.
    pub fn index_of(&self, site: usize) -> u32 {
        self.index_of[site]
    }

    /// Allocation site holding `index`.
    pub fn site_at(&self, index: u32) -> usize {
        self.global_array[index as usize - 1] as usize
    }

    pub fn type_at(&self, index: u32) -> TypeId {
        self.type_of_index[index as usize - 1]
    }

    /// Number of types covered by this numbering.
    pub fn type_count(&self) -> usize {
        self.intervals.len()
    }

    /// Interval of a class or array type. `None` for interfaces and unknown ids.
    pub fn interval(&self, t: TypeId) -> Option<Interval> {
        if self.iface_intervals.contains_key(&t) {
            return None;
        }
        self.intervals.get(t.index()).copied()
    }

    /// Classes in the order their intervals were closed.
    pub fn postorder(&self) -> &[TypeId] {
        &self.postorder
    }

    /// A class maps to its own interval (possibly empty); an interface to the
    /// merged intervals of its topmost implementing classes, sorted and disjoint.
    pub fn intervals_of(&self, t: TypeId) -> Result<&[Interval], HierarchyError> {
        if let Some(list) = self.iface_intervals.get(&t) {
            return Ok(list);
        }
        self.intervals
            .get(t.index())
            .map(core::slice::from_ref)
            .ok_or_else(|| HierarchyError::UnknownType(format!("#{}", t.0)))
    }

    pub fn build_type_mask(
        &self,
        h: &ClassHierarchy,
        t: TypeId,
        chunk: ChunkConfig,
    ) -> Result<TypeMask, HierarchyError> {
        if t.index() >= self.intervals.len() || t.index() >= h.len() {
            return Err(HierarchyError::UnknownType(format!("#{}", t.0)));
        }
        let mut bits = PlainBitVector::new(self.total, chunk);
        for index in 1..=self.total {
            if h.is_subtype(self.type_at(index), t) {
                bits.set(index);
            }
        }
        Ok(TypeMask { for_type: t, bits })
    }
}

/// Bit `i` is set iff the site numbered `i` is compatible with `for_type`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeMask {
    pub for_type: TypeId,
    pub bits: PlainBitVector,
}
