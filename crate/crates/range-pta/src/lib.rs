//! File formats, synthetic corpora, reports and the command-line driver for
//! `range-pta-core`.

pub mod cli;
pub mod facts;
pub mod report;
pub mod synth;

pub use facts::{parse_program, print_program, FactsError};
pub use synth::{generate, GenParams};
