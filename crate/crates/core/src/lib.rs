//! Type-aware points-to sets for Andersen-style analysis.
//!
//! Allocation sites are renumbered by a depth-first walk of the class
//! hierarchy so that every class owns one contiguous index interval covering
//! its own allocations and those of all its subclasses. Points-to sets can
//! then store bits only for the interval of their declared type
//! ([`bitsets::RangedBitVector`]), and unions filter by type implicitly.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; `std` only adds wall-clock timing of propagation.
//!
//! Modules:
//! - [`hierarchy`]: class/interface hierarchy, allocation numbering, intervals, type masks.
//! - [`bitsets`]: plain and ranged bit-vectors.
//! - [`ptsets`]: seven points-to set representations behind one contract.
//! - [`pag`]: pointer assignment graph model.
//! - [`solver`]: worklist propagation, solution comparison and precision metrics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bitsets;
pub mod hierarchy;
pub mod pag;
pub mod ptsets;
pub mod solver;

pub use bitsets::{ChunkConfig, PlainBitVector, RangedBitVector};
pub use hierarchy::{ClassHierarchy, Interval, NumberingResult, TypeId, TypeKind};
pub use pag::{Pag, Program};
pub use ptsets::{AnySet, PointsToSet, SetContext, SetKind};
pub use solver::{propagate, FilterMode, Solution, SolverConfig};
