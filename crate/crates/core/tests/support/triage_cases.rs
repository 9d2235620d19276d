//! Hand-enumerated triage matrix: last checkpoint reached by the driver
//! against how the process ended.

use mutfuzz_core::triage::{classify_execution, Classification, ExitKind};

const ORIGINAL: &str = "Calling the original function\n";
const MUTATED: &str = "Calling the original function\nCalling the mutated function\n";
const KILLED: &str =
    "Calling the original function\nCalling the mutated function\nComparing result values:\nMutant killed\n";
const ALIVE: &str =
    "Calling the original function\nCalling the mutated function\nComparing result values:\nMutant alive\n";

/// `None` marks a log that cannot come from a well-behaved driver.
pub fn matrix() -> Vec<(&'static str, &'static str, ExitKind, Option<Classification>)> {
    use Classification::*;
    let abort = ExitKind::Signaled(6);
    let clean = ExitKind::Normal(0);
    let hang = ExitKind::Timeout;
    vec![
        ("original", ORIGINAL, clean, Some(OriginalCrash)),
        ("original", ORIGINAL, abort, Some(OriginalCrash)),
        ("original", ORIGINAL, hang, Some(OriginalTimeout)),
        ("mutated", MUTATED, clean, Some(MutantCrash)),
        ("mutated", MUTATED, ExitKind::Signaled(11), Some(MutantCrash)),
        ("mutated", MUTATED, hang, Some(TimeoutCandidate)),
        ("killed", KILLED, clean, None),
        ("killed", KILLED, abort, Some(DiffKill)),
        ("killed", KILLED, hang, Some(DiffKill)),
        ("alive", ALIVE, clean, Some(NoKill)),
        ("alive", ALIVE, abort, Some(NoKill)),
        ("alive", ALIVE, hang, Some(NoKill)),
    ]
}

/// Number of matching rows, or the first mismatch.
pub fn check_all() -> Result<usize, String> {
    let rows = matrix();
    for (stage, log, exit, want) in &rows {
        let got = classify_execution(log, *exit).ok();
        if got != *want {
            return Err(format!("{stage} / {exit:?}: got {got:?}, want {want:?}"));
        }
    }
    Ok(rows.len())
}
