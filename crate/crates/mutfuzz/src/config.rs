//! Campaign configuration and annotation files (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mutfuzz_core::signature::FunctionAnnotations;
use serde::{Deserialize, Serialize};

use crate::toolchain::BuildConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FuzzerKind {
    #[default]
    Builtin,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subject {
    pub file: PathBuf,
    /// Functions to test; empty means every function defined in the file.
    #[serde(default)]
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalFuzzer {
    /// Command template with `{seeds}`, `{out}` and `{target}` placeholders.
    pub command: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// `native`, `lp64` or `ilp32`.
    pub abi: String,
    pub annotations: Option<PathBuf>,
    pub subjects: Vec<Subject>,
    pub build: BuildConfig,
    pub budget_s: f64,
    pub exec_timeout_ms: u64,
    /// Replays of each kill candidate on the false-positive driver.
    pub fp_repeats: u32,
    /// Replays of each kill candidate on the mutant's own driver; all must
    /// reproduce the classification.
    pub reproduce_runs: u32,
    /// A timeout candidate is confirmed when the false-positive driver
    /// finishes within this multiple of the execution timeout.
    pub timeout_factor: f64,
    /// Rejected candidates tolerated before a mutant is given up as FP_ONLY.
    pub max_fp_candidates: usize,
    pub workers: usize,
    pub fuzzer: FuzzerKind,
    pub external: Option<ExternalFuzzer>,
    pub reuse: bool,
    pub seed: u64,
    /// Restricts generation to these operator ids.
    pub operators: Vec<String>,
    pub timeline_bin_s: f64,
    /// Emit and check regression test drivers for killed mutants.
    pub emit_tests: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            abi: "native".into(),
            annotations: None,
            subjects: Vec::new(),
            build: BuildConfig::default(),
            budget_s: 10_000.0,
            exec_timeout_ms: 1_000,
            fp_repeats: 1,
            reproduce_runs: 3,
            timeout_factor: 2.0,
            max_fp_candidates: 3,
            workers: 1,
            fuzzer: FuzzerKind::Builtin,
            external: None,
            reuse: false,
            seed: 0,
            operators: Vec::new(),
            timeline_bin_s: 60.0,
            emit_tests: true,
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })
}

impl CampaignConfig {
    /// Loads a config; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<CampaignConfig, ConfigError> {
        let mut cfg: CampaignConfig =
            toml::from_str(&read(path)?).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(a) = &mut self.annotations {
            fix(a);
        }
        for s in &mut self.subjects {
            fix(&mut s.file);
        }
        for i in &mut self.build.include_paths {
            fix(i);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.budget_s <= 0.0 || self.exec_timeout_ms == 0 {
            return Err(ConfigError::Invalid("budget and execution timeout must be positive".into()));
        }
        if self.fuzzer == FuzzerKind::External && self.external.is_none() {
            return Err(ConfigError::Invalid("fuzzer = \"external\" needs an [external] command".into()));
        }
        for op in &self.operators {
            op.parse::<mutfuzz_core::mutgen::Operator>().map_err(ConfigError::Invalid)?;
        }
        Ok(())
    }

    pub fn annotations(&self) -> Result<Annotations, ConfigError> {
        match &self.annotations {
            Some(p) => Annotations::load(p),
            None => Ok(Annotations::default()),
        }
    }
}

/// Per-function annotations keyed by function name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Annotations(pub BTreeMap<String, FunctionAnnotations>);

impl Annotations {
    pub fn load(path: &Path) -> Result<Annotations, ConfigError> {
        toml::from_str(&read(path)?).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    pub fn get(&self, function: &str) -> Option<&FunctionAnnotations> {
        self.0.get(function)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mutfuzz_core::signature::Direction;

    #[test]
    fn parses_config_and_annotations() {
        let cfg: CampaignConfig = toml::from_str(
            r#"
            budget_s = 60
            workers = 4
            [build]
            cc = "clang"
            sanitizers = ["address"]
            [[subjects]]
            file = "toy.c"
            functions = ["clamp"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.build.sanitizers, ["address"]);
        assert_eq!(cfg.exec_timeout_ms, 1000);
        cfg.validate().unwrap();

        let ann: Annotations = toml::from_str(
            r#"
            [fill]
            reset = "counter = 0;"
            [fill.params.buf]
            length = 16
            direction = "out"
            "#,
        )
        .unwrap();
        let f = ann.get("fill").unwrap();
        assert_eq!(f.params["buf"].length, Some(16));
        assert_eq!(f.params["buf"].direction, Some(Direction::Out));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<CampaignConfig>("bugdet_s = 3").is_err());
        let bad = CampaignConfig { operators: vec!["XYZ".into()], ..CampaignConfig::default() };
        assert!(bad.validate().is_err());
    }
}
