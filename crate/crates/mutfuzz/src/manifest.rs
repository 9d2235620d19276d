//! On-disk list of functions and mutants of a campaign.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use mutfuzz_core::metrics::Totals;
use mutfuzz_core::mutgen::{import_mutant, MutantSpec};
use mutfuzz_core::parser::Unit;
use serde::{Deserialize, Serialize};

use crate::tce::TceClass;

pub const FUNCTIONS_FILE: &str = "functions.json";
pub const MUTANTS_FILE: &str = "mutants.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionEntry {
    pub name: String,
    pub source: PathBuf,
    /// Set when no driver can be generated; the function has no mutants.
    #[serde(default)]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub spec: MutantSpec,
    pub tce: TceClass,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub functions: Vec<FunctionEntry>,
    pub mutants: Vec<ManifestEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {source}")]
    Json { file: PathBuf, line: usize, source: serde_json::Error },
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<(), ManifestError> {
        let f = serde_json::to_vec_pretty(&self.functions).expect("serializable");
        std::fs::write(dir.join(FUNCTIONS_FILE), f)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(MUTANTS_FILE))?);
        for m in &self.mutants {
            serde_json::to_writer(&mut out, m).expect("serializable");
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Manifest, ManifestError> {
        let ffile = dir.join(FUNCTIONS_FILE);
        let functions = serde_json::from_slice(&std::fs::read(&ffile)?)
            .map_err(|source| ManifestError::Json { file: ffile, line: 1, source })?;
        let mfile = dir.join(MUTANTS_FILE);
        let mut mutants = Vec::new();
        for (i, line) in std::io::BufReader::new(std::fs::File::open(&mfile)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            mutants.push(
                serde_json::from_str(&line).map_err(|source| ManifestError::Json { file: mfile.clone(), line: i + 1, source })?,
            );
        }
        Ok(Manifest { functions, mutants })
    }

    pub fn get(&self, mutant_id: &str) -> Option<&ManifestEntry> {
        self.mutants.iter().find(|m| m.spec.mutant_id == mutant_id)
    }

    pub fn kept(&self) -> impl Iterator<Item = &MutantSpec> {
        self.mutants.iter().filter(|m| m.tce == TceClass::Kept).map(|m| &m.spec)
    }

    pub fn totals(&self) -> Totals {
        let count = |f: &dyn Fn(&TceClass) -> bool| self.mutants.iter().filter(|m| f(&m.tce)).count();
        Totals {
            generated: self.mutants.len(),
            stillborn: count(&|c| matches!(c, TceClass::Stillborn { .. })),
            tce_equivalent: count(&|c| *c == TceClass::Equivalent),
            tce_duplicate: count(&|c| matches!(c, TceClass::Duplicate { .. })),
            tested: count(&|c| *c == TceClass::Kept),
        }
    }
}

/// Converts externally generated mutant files of one preprocessed unit into
/// specs. Each mutated text must differ from the original in one region
/// inside a single function definition; others are skipped with a reason.
pub fn import_external(
    unit: &Unit,
    file: &str,
    mutated: &[(String, String)],
) -> (Vec<MutantSpec>, Vec<(String, String)>) {
    let mut specs = Vec::new();
    let mut skipped = Vec::new();
    for (name, text) in mutated {
        let Some(mut spec) = import_mutant(&unit.source, text, "", "", file) else {
            skipped.push((name.clone(), "identical to the original".into()));
            continue;
        };
        let owner = unit
            .functions
            .iter()
            .find(|f| f.definition.as_ref().is_some_and(|d| d.body_span.contains(spec.span)));
        let Some(owner) = owner else {
            skipped.push((name.clone(), "edit lies outside every function body".into()));
            continue;
        };
        let stem = Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let stem: String = stem.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        spec.function = owner.name.clone();
        spec.mutant_id = format!("{}-{stem}-EXT", owner.name);
        specs.push(spec);
    }
    (specs, skipped)
}
