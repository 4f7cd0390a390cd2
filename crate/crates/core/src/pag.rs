//! Pointer assignment graph.
//!
//! Variable nodes (locals, parameters, static fields), allocation nodes and
//! field signatures, connected by four edge kinds:
//!
//! - `new x o`: `o` flows into `pt(x)`
//! - `assign y x`: `pt(y) ⊇ pt(x)`
//! - `store b f x`: for every `o ∈ pt(b)`, `pt(o.f) ⊇ pt(x)`
//! - `load y b f`: for every `o ∈ pt(b)`, `pt(y) ⊇ pt(o.f)`
//!
//! Calls are expected to be lowered to assignments beforehand.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::hierarchy::{ClassHierarchy, HierarchyError, NumberingResult, TypeId};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub const fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(VarId);
id_type!(AllocId);
id_type!(FieldId);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PagError {
    #[error("name `{0}` is already declared")]
    DuplicateName(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("undeclared allocation site `{0}`")]
    UndeclaredAlloc(String),
    #[error("undeclared field `{0}`")]
    UndeclaredField(String),
    #[error("allocation site `{0}` must have a class or array type")]
    InterfaceAllocation(String),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AllocEdge {
    pub alloc: AllocId,
    pub var: VarId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssignEdge {
    pub dst: VarId,
    pub src: VarId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoreEdge {
    pub base: VarId,
    pub field: FieldId,
    pub src: VarId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LoadEdge {
    pub dst: VarId,
    pub base: VarId,
    pub field: FieldId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pag {
    vars: Vec<Node>,
    allocs: Vec<Node>,
    fields: Vec<Node>,
    var_names: BTreeMap<String, VarId>,
    alloc_names: BTreeMap<String, AllocId>,
    field_names: BTreeMap<String, FieldId>,
    pub news: Vec<AllocEdge>,
    pub assigns: Vec<AssignEdge>,
    pub stores: Vec<StoreEdge>,
    pub loads: Vec<LoadEdge>,
}

impl Pag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: &str, ty: TypeId) -> Result<VarId, PagError> {
        if self.var_names.contains_key(name) {
            return Err(PagError::DuplicateName(name.to_string()));
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Node {
            name: name.to_string(),
            ty,
        });
        self.var_names.insert(name.to_string(), id);
        Ok(id)
    }

    /// `h` rejects interface-typed sites.
    pub fn add_alloc(
        &mut self,
        h: &ClassHierarchy,
        name: &str,
        ty: TypeId,
    ) -> Result<AllocId, PagError> {
        if self.alloc_names.contains_key(name) {
            return Err(PagError::DuplicateName(name.to_string()));
        }
        if h.is_interface(ty) {
            return Err(PagError::InterfaceAllocation(name.to_string()));
        }
        let id = AllocId(self.allocs.len() as u32);
        self.allocs.push(Node {
            name: name.to_string(),
            ty,
        });
        self.alloc_names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_field(&mut self, name: &str, ty: TypeId) -> Result<FieldId, PagError> {
        if self.field_names.contains_key(name) {
            return Err(PagError::DuplicateName(name.to_string()));
        }
        let id = FieldId(self.fields.len() as u32);
        self.fields.push(Node {
            name: name.to_string(),
            ty,
        });
        self.field_names.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn var_id(&self, name: &str) -> Result<VarId, PagError> {
        self.var_names
            .get(name)
            .copied()
            .ok_or_else(|| PagError::UndeclaredVariable(name.to_string()))
    }

    pub fn alloc_id(&self, name: &str) -> Result<AllocId, PagError> {
        self.alloc_names
            .get(name)
            .copied()
            .ok_or_else(|| PagError::UndeclaredAlloc(name.to_string()))
    }

    pub fn field_id(&self, name: &str) -> Result<FieldId, PagError> {
        self.field_names
            .get(name)
            .copied()
            .ok_or_else(|| PagError::UndeclaredField(name.to_string()))
    }

    pub fn add_new(&mut self, var: &str, alloc: &str) -> Result<(), PagError> {
        let edge = AllocEdge {
            var: self.var_id(var)?,
            alloc: self.alloc_id(alloc)?,
        };
        self.news.push(edge);
        Ok(())
    }

    pub fn add_assign(&mut self, dst: &str, src: &str) -> Result<(), PagError> {
        let edge = AssignEdge {
            dst: self.var_id(dst)?,
            src: self.var_id(src)?,
        };
        self.assigns.push(edge);
        Ok(())
    }

    pub fn add_store(&mut self, base: &str, field: &str, src: &str) -> Result<(), PagError> {
        let edge = StoreEdge {
            base: self.var_id(base)?,
            field: self.field_id(field)?,
            src: self.var_id(src)?,
        };
        self.stores.push(edge);
        Ok(())
    }

    pub fn add_load(&mut self, dst: &str, base: &str, field: &str) -> Result<(), PagError> {
        let edge = LoadEdge {
            dst: self.var_id(dst)?,
            base: self.var_id(base)?,
            field: self.field_id(field)?,
        };
        self.loads.push(edge);
        Ok(())
    }

    pub fn vars(&self) -> &[Node] {
        &self.vars
    }

    pub fn allocs(&self) -> &[Node] {
        &self.allocs
    }

    pub fn fields(&self) -> &[Node] {
        &self.fields
    }

    pub fn var(&self, v: VarId) -> &Node {
        &self.vars[v.index()]
    }

    pub fn alloc(&self, a: AllocId) -> &Node {
        &self.allocs[a.index()]
    }

    pub fn field(&self, f: FieldId) -> &Node {
        &self.fields[f.index()]
    }

    pub fn statement_count(&self) -> usize {
        self.news.len() + self.assigns.len() + self.stores.len() + self.loads.len()
    }

    /// Variables used as the base of a store or load, ascending.
    pub fn dereferenced_vars(&self) -> Vec<VarId> {
        let set: BTreeSet<VarId> = self
            .stores
            .iter()
            .map(|s| s.base)
            .chain(self.loads.iter().map(|l| l.base))
            .collect();
        set.into_iter().collect()
    }
}

/// A parsed program: hierarchy plus graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub hierarchy: ClassHierarchy,
    pub pag: Pag,
}

impl Program {
    pub fn number(&self) -> Result<NumberingResult, HierarchyError> {
        let types: Vec<TypeId> = self.pag.allocs.iter().map(|a| a.ty).collect();
        self.hierarchy.number_allocations(&types)
    }
}
