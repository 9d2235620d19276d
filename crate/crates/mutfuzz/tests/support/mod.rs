//! Helpers shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mutfuzz::config::{CampaignConfig, Subject};
use mutfuzz::rt;
use mutfuzz::toolchain::{BuildConfig, Toolchain};

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy")
}

pub fn worker_exe() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_mutfuzz"))
}

pub fn toolchain() -> Toolchain {
    let cc = mutfuzz::toolchain::find_compiler().expect("a C compiler on PATH");
    Toolchain::new(BuildConfig { cc, ..BuildConfig::default() })
}

/// Compiles a standalone program against the runtime.
pub fn build_c(dir: &Path, name: &str, source: &str, instrument: bool) -> PathBuf {
    let tc = toolchain();
    let rt_dir = dir.join("rt");
    let rt_src = rt::write_runtime(&rt_dir).unwrap();
    let obj = rt_src.with_extension("o");
    if !obj.exists() {
        tc.compile_runtime(&rt_src).unwrap();
    }
    let src = dir.join(format!("{name}.c"));
    std::fs::write(&src, source).unwrap();
    let out = dir.join(name);
    tc.build_driver(&src, &[dir, &rt_dir], &obj, &out, instrument).unwrap();
    out
}

/// Campaign over toy subjects: (file, functions) pairs.
pub fn toy_config(subjects: &[(&str, &[&str])], budget_s: f64, workers: usize) -> CampaignConfig {
    let dir = toy_dir();
    CampaignConfig {
        seed: 7,
        budget_s,
        workers,
        annotations: Some(dir.join("annotations.toml")),
        subjects: subjects
            .iter()
            .map(|(f, fs)| Subject { file: dir.join(f), functions: fs.iter().map(|s| s.to_string()).collect() })
            .collect(),
        build: BuildConfig { cc: toolchain().cfg.cc, ..BuildConfig::default() },
        ..CampaignConfig::default()
    }
}
