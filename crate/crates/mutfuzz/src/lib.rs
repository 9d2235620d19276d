//! Fuzzing-based mutation testing of C functions.
//!
//! A campaign preprocesses the subject, generates mutants, prunes the ones
//! the compiler cannot tell apart, then fuzzes a differential driver per
//! mutant until an input makes the mutated function's outputs diverge from
//! the original's. Killing inputs become regression test drivers.

pub mod campaign;
pub mod config;
pub mod covmap;
pub mod exec;
pub mod export;
pub mod fuzzer;
pub mod manifest;
pub mod rt;
pub mod tce;
pub mod toolchain;

pub use mutfuzz_core as core;
