//! The C support runtime vendored into every campaign directory.

use std::io;
use std::path::{Path, PathBuf};

pub const HEADER_NAME: &str = mutfuzz_core::drivergen::RUNTIME_HEADER;
pub const SOURCE_NAME: &str = "mutfuzz_rt.c";
pub const HEADER_SRC: &str = include_str!("rt/mutfuzz_rt.h");
pub const SOURCE_SRC: &str = include_str!("rt/mutfuzz_rt.c");

/// Environment variable naming the file that backs the coverage map.
pub const COVERAGE_MAP_ENV: &str = "MUTFUZZ_COVERAGE_MAP";

/// Writes header and source into `dir`; returns the source path.
pub fn write_runtime(dir: &Path) -> io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(HEADER_NAME), HEADER_SRC)?;
    let src = dir.join(SOURCE_NAME);
    std::fs::write(&src, SOURCE_SRC)?;
    Ok(src)
}
