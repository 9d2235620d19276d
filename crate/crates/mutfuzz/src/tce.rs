//! Trivial compiler equivalence: mutants whose optimized object code equals
//! the original's (equivalent) or an earlier mutant's (duplicate) are
//! dropped before fuzzing; mutants that fail to compile are stillborn.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use mutfuzz_core::mutgen::{sha256_hex, MutantSpec};
use mutfuzz_core::parser::Unit;
use serde::{Deserialize, Serialize};

use crate::toolchain::{BuildError, Toolchain};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TceClass {
    Kept,
    Equivalent,
    Duplicate { of: String },
    Stillborn { error: String },
}

/// Unit text for the TCE build; a reference to the function keeps the
/// optimizer from dropping it when it is `static`.
fn tce_source(text: &str, function: &str) -> String {
    format!("{text}\nvoid *const mutfuzz_keep_{function} = (void *){function};\n")
}

pub fn object_hash(tc: &Toolchain, text: &str, function: &str, scratch: &Path) -> Result<String, BuildError> {
    Ok(sha256_hex(&tc.tce_object(&tce_source(text, function), scratch)?))
}

/// Classifies `mutants` of `function`, compiling with `workers` threads.
/// Sets `object_hash` on every mutant that compiled.
pub fn prune(
    tc: &Toolchain,
    unit: &Unit,
    function: &str,
    mutants: Vec<MutantSpec>,
    scratch: &Path,
    workers: usize,
) -> Result<Vec<(MutantSpec, TceClass)>, BuildError> {
    let original = object_hash(tc, &unit.source, function, scratch)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<String, String>>>> = Mutex::new(vec![None; mutants.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(m) = mutants.get(i) else { break };
                let r = match m.materialize(&unit.source) {
                    Ok(text) => object_hash(tc, &text, function, scratch).map_err(|e| match e {
                        BuildError::Failed { stderr, .. } => stderr.lines().find(|l| l.contains("error")).unwrap_or("").to_string(),
                        other => other.to_string(),
                    }),
                    Err(e) => Err(e.to_string()),
                };
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut first_with: HashMap<String, String> = HashMap::new();
    let results = results.into_inner().unwrap();
    Ok(mutants
        .into_iter()
        .zip(results)
        .map(|(mut m, r)| {
            let class = match r.expect("every mutant compiled") {
                Err(error) => TceClass::Stillborn { error },
                Ok(h) => {
                    m.object_hash = Some(h.clone());
                    if h == original {
                        TceClass::Equivalent
                    } else if let Some(of) = first_with.get(&h) {
                        TceClass::Duplicate { of: of.clone() }
                    } else {
                        first_with.insert(h, m.mutant_id.clone());
                        TceClass::Kept
                    }
                }
            };
            (m, class)
        })
        .collect())
}
