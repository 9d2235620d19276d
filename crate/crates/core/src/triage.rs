//! Classification of single driver executions and per-mutant verdicts.

use alloc::string::String;
use alloc::vec::Vec;

use crate::drivergen::{CALLING_MUTATED, CALLING_ORIGINAL, COMPARING, MUTANT_ALIVE, MUTANT_KILLED};

/// Exit status the runtime uses when the input file cannot be read.
pub const EXIT_UNREADABLE_INPUT: i32 = 66;
pub const SIGABRT: i32 = 6;

/// Last checkpoint reached by a driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Start,
    Original,
    Mutated,
    Comparing,
    Killed,
    Alive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExitKind {
    Normal(i32),
    Signaled(i32),
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Classification {
    /// The original function did not return; the input is discarded.
    OriginalCrash,
    OriginalTimeout,
    MutantCrash,
    DiffKill,
    TimeoutCandidate,
    NoKill,
}

impl Classification {
    pub fn is_kill_candidate(self) -> bool {
        matches!(self, Classification::MutantCrash | Classification::DiffKill | Classification::TimeoutCandidate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TriageError {
    #[error("malformed driver log: {0}")]
    MalformedLog(String),
}

fn malformed(msg: &str) -> TriageError {
    TriageError::MalformedLog(msg.into())
}

/// Scans the captured output for checkpoint lines. Other lines (output of
/// the subject) are ignored; checkpoints out of order are an error.
pub fn last_stage(log: &str) -> Result<Stage, TriageError> {
    let mut stage = Stage::Start;
    for line in log.lines() {
        let next = match line.trim_end_matches('\r') {
            CALLING_ORIGINAL => Stage::Original,
            CALLING_MUTATED => Stage::Mutated,
            COMPARING => Stage::Comparing,
            MUTANT_KILLED => Stage::Killed,
            MUTANT_ALIVE => Stage::Alive,
            _ => continue,
        };
        let ok = matches!(
            (stage, next),
            (Stage::Start, Stage::Original)
                | (Stage::Original, Stage::Mutated)
                | (Stage::Mutated, Stage::Comparing)
                | (Stage::Comparing, Stage::Killed)
                | (Stage::Comparing, Stage::Alive)
        );
        if !ok {
            return Err(TriageError::MalformedLog(alloc::format!("{line:?} after {stage:?}")));
        }
        stage = next;
    }
    Ok(stage)
}

pub fn classify_stage(stage: Stage, exit: ExitKind) -> Result<Classification, TriageError> {
    use Classification::*;
    use ExitKind::*;
    Ok(match (stage, exit) {
        (Stage::Start, _) => return Err(malformed("no checkpoint reached")),
        // Leaving the process from inside the original counts as a crash of
        // the original.
        (Stage::Original, Normal(_) | Signaled(_)) => OriginalCrash,
        (Stage::Original, Timeout) => OriginalTimeout,
        (Stage::Mutated | Stage::Comparing, Normal(_) | Signaled(_)) => MutantCrash,
        (Stage::Mutated | Stage::Comparing, Timeout) => TimeoutCandidate,
        (Stage::Killed, Signaled(_) | Timeout) => DiffKill,
        (Stage::Killed, Normal(_)) => return Err(malformed("returned after a difference was reported")),
        (Stage::Alive, _) => NoKill,
    })
}

/// Classifies one driver execution from its output and exit status.
pub fn classify_execution(log: &str, exit: ExitKind) -> Result<Classification, TriageError> {
    classify_stage(last_stage(log)?, exit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Status {
    KilledByDiff,
    KilledByCrash,
    /// A non-terminating mutant whose original finished in time on replay.
    TimeoutKillCandidate,
    Live,
    FpOnly,
    OriginalCrashBlocked,
    Error,
}

impl Status {
    pub const ALL: [Status; 7] = [
        Status::KilledByDiff,
        Status::KilledByCrash,
        Status::TimeoutKillCandidate,
        Status::Live,
        Status::FpOnly,
        Status::OriginalCrashBlocked,
        Status::Error,
    ];

    pub fn is_killed(self) -> bool {
        matches!(self, Status::KilledByDiff | Status::KilledByCrash | Status::TimeoutKillCandidate)
    }

    /// Counted in the mutation-score denominator.
    pub fn is_tested(self) -> bool {
        self != Status::Error
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::KilledByDiff => "KILLED_BY_DIFF",
            Status::KilledByCrash => "KILLED_BY_CRASH",
            Status::TimeoutKillCandidate => "TIMEOUT_KILL_CANDIDATE",
            Status::Live => "LIVE",
            Status::FpOnly => "FP_ONLY",
            Status::OriginalCrashBlocked => "ORIGINAL_CRASH_BLOCKED",
            Status::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Provenance {
    Seed,
    Fuzzed,
    Reused,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KillingInput {
    /// Hex-encoded input bytes.
    pub input_hex: String,
    /// Seconds since the mutant's campaign started.
    pub at_s: f64,
    pub provenance: Provenance,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MutantVerdict {
    pub mutant_id: String,
    pub function: String,
    pub status: Status,
    pub killing_inputs: Vec<KillingInput>,
    pub wall_time_to_first_kill: Option<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub false_positives: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub original_crashes: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub executions: u64,
    /// Emitted regression test drivers, relative to the campaign directory.
    #[cfg_attr(feature = "serde", serde(default))]
    pub test_drivers: Vec<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub note: Option<String>,
}

impl MutantVerdict {
    pub fn new(mutant_id: &str, function: &str, status: Status) -> MutantVerdict {
        MutantVerdict {
            mutant_id: mutant_id.into(),
            function: function.into(),
            status,
            killing_inputs: Vec::new(),
            wall_time_to_first_kill: None,
            false_positives: 0,
            original_crashes: 0,
            executions: 0,
            test_drivers: Vec::new(),
            note: None,
        }
    }
}

/// Final status from the candidates that survived false-positive replay.
pub fn decide_status(confirmed: &[Classification], rejected: usize, original_crashes: usize) -> Status {
    if confirmed.contains(&Classification::DiffKill) {
        Status::KilledByDiff
    } else if confirmed.contains(&Classification::MutantCrash) {
        Status::KilledByCrash
    } else if confirmed.contains(&Classification::TimeoutCandidate) {
        Status::TimeoutKillCandidate
    } else if rejected > 0 {
        Status::FpOnly
    } else if original_crashes > 0 {
        Status::OriginalCrashBlocked
    } else {
        Status::Live
    }
}
