//! Core analysis for fuzzing-based mutation testing of C functions.
//!
//! This crate is `no_std` (with `alloc`) and contains everything that does
//! not touch the file system or spawn processes: the C front end, type
//! layout, mutant generation, driver and seed generation, the coverage-guided
//! input model, execution triage and campaign metrics.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ast;
pub mod ctype;
pub mod drivergen;
pub mod error;
pub mod fuzz;
pub mod layout;
pub mod lexer;
pub mod metrics;
pub mod mutgen;
pub mod parser;
pub mod seedgen;
pub mod signature;
pub mod triage;

pub use error::{Location, ParseError};
pub use parser::Unit;
