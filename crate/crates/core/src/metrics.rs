//! Mutation score, kill-time statistics and report aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::triage::{MutantVerdict, Provenance, Status};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no tested mutants")]
    EmptyCampaign,
    #[error("no killed mutants")]
    NoKills,
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    let scaled = x * 100.0;
    let r = if scaled >= 0.0 { (scaled + 0.5) as i64 } else { (scaled - 0.5) as i64 };
    r as f64 / 100.0
}

/// Killed over tested, as a percentage rounded to two decimals. Counts may
/// be fractional (averages over repeated runs).
pub fn compute_ms(killed: f64, tested: f64) -> Result<f64, MetricsError> {
    if tested <= 0.0 {
        return Err(MetricsError::EmptyCampaign);
    }
    Ok(round2(killed / tested * 100.0))
}

pub fn ms_of(verdicts: &[MutantVerdict]) -> Result<f64, MetricsError> {
    let tested = verdicts.iter().filter(|v| v.status.is_tested()).count();
    let killed = verdicts.iter().filter(|v| v.status.is_killed()).count();
    compute_ms(killed as f64, tested as f64)
}

/// Percentage points by which `a` exceeds `b`.
pub fn pp_difference(ms_a: f64, ms_b: f64) -> f64 {
    round2(ms_a - ms_b)
}

/// Relative reduction from `before` to `after`, in percent.
pub fn reduction_pct(before: f64, after: f64) -> f64 {
    round2((before - after) / before * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KillStats {
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn kill_time_stats_of(times: &[f64]) -> Result<KillStats, MetricsError> {
    if times.is_empty() {
        return Err(MetricsError::NoKills);
    }
    let mut t = times.to_vec();
    t.sort_by(f64::total_cmp);
    let n = t.len();
    let median = if n % 2 == 1 { t[n / 2] } else { (t[n / 2 - 1] + t[n / 2]) / 2.0 };
    Ok(KillStats { median, mean: t.iter().sum::<f64>() / n as f64, min: t[0], max: t[n - 1] })
}

/// Statistics over the time to first kill of killed mutants.
pub fn kill_time_stats(verdicts: &[MutantVerdict]) -> Result<KillStats, MetricsError> {
    let times: Vec<f64> =
        verdicts.iter().filter(|v| v.status.is_killed()).filter_map(|v| v.wall_time_to_first_kill).collect();
    kill_time_stats_of(&times)
}

/// Cumulative kills at the end of each `bin_s`-second bin, up to the last kill.
pub fn timeline(kill_times: &[f64], bin_s: f64) -> Vec<(f64, usize)> {
    if kill_times.is_empty() || bin_s <= 0.0 {
        return Vec::new();
    }
    let mut t = kill_times.to_vec();
    t.sort_by(f64::total_cmp);
    let last = t[t.len() - 1];
    let bins = (last / bin_s) as usize + 1;
    let mut out = Vec::with_capacity(bins);
    let mut i = 0;
    for b in 1..=bins {
        let edge = b as f64 * bin_s;
        while i < t.len() && t[i] < edge {
            i += 1;
        }
        out.push((edge, i));
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Totals {
    pub generated: usize,
    pub stillborn: usize,
    pub tce_equivalent: usize,
    pub tce_duplicate: usize,
    pub tested: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CampaignReport {
    pub schema_version: u32,
    pub totals: Totals,
    pub killed: usize,
    pub live: usize,
    pub fp_only: usize,
    pub errors: usize,
    pub status_counts: BTreeMap<String, usize>,
    pub mutation_score: Option<f64>,
    pub kill_stats: Option<KillStats>,
    pub provenance: BTreeMap<String, usize>,
    /// (seconds, cumulative kills) per bin.
    pub timeline: Vec<(f64, usize)>,
    /// (mutant id, seconds to first kill), sorted by id.
    pub kill_times: Vec<(String, f64)>,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

impl CampaignReport {
    /// `totals.tested` is recomputed from the verdicts; ERROR verdicts are
    /// reported but left out of the score.
    pub fn build(totals: Totals, verdicts: &[MutantVerdict], bin_s: f64) -> CampaignReport {
        let mut v: Vec<&MutantVerdict> = verdicts.iter().collect();
        v.sort_by(|a, b| a.mutant_id.cmp(&b.mutant_id));
        let count = |s: Status| v.iter().filter(|x| x.status == s).count();
        let mut status_counts = BTreeMap::new();
        for s in Status::ALL {
            status_counts.insert(String::from(s.as_str()), count(s));
        }
        let killed = v.iter().filter(|x| x.status.is_killed()).count();
        let fp_only = count(Status::FpOnly);
        let errors = count(Status::Error);
        let tested = v.len() - errors;
        let live = tested - killed - fp_only;
        let mut provenance = BTreeMap::new();
        for p in ["seed", "fuzzed", "reused"] {
            provenance.insert(String::from(p), 0);
        }
        for x in v.iter().filter(|x| x.status.is_killed()) {
            if let Some(first) = x.killing_inputs.first() {
                let key = match first.provenance {
                    Provenance::Seed => "seed",
                    Provenance::Fuzzed => "fuzzed",
                    Provenance::Reused => "reused",
                };
                *provenance.get_mut(key).unwrap() += 1;
            }
        }
        let kill_times: Vec<(String, f64)> = v
            .iter()
            .filter(|x| x.status.is_killed())
            .filter_map(|x| x.wall_time_to_first_kill.map(|t| (x.mutant_id.clone(), t)))
            .collect();
        let times: Vec<f64> = kill_times.iter().map(|(_, t)| *t).collect();
        CampaignReport {
            schema_version: REPORT_SCHEMA_VERSION,
            totals: Totals { tested, ..totals },
            killed,
            live,
            fp_only,
            errors,
            status_counts,
            mutation_score: compute_ms(killed as f64, tested as f64).ok(),
            kill_stats: kill_time_stats_of(&times).ok(),
            provenance,
            timeline: timeline(&times, bin_s),
            kill_times,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(compute_ms(118.2, 153.0), Ok(77.25));
        assert_eq!(compute_ms(0.0, 10.0), Ok(0.0));
        assert_eq!(compute_ms(10.0, 10.0), Ok(100.0));
        assert_eq!(compute_ms(1.0, 0.0), Err(MetricsError::EmptyCampaign));
        assert_eq!(pp_difference(89.1, 87.2), 1.9);
        assert_eq!(pp_difference(50.0, 75.0), -25.0);
        assert_eq!(reduction_pct(208.66, 142.00), 31.95);
    }

    #[test]
    fn stats_by_hand() {
        let s = kill_time_stats_of(&[9.0, 1.0, 4.0, 2.0, 14.0]).unwrap();
        assert_eq!(s, KillStats { median: 4.0, mean: 6.0, min: 1.0, max: 14.0 });
        let one = kill_time_stats_of(&[3.5]).unwrap();
        assert_eq!((one.median, one.mean, one.min, one.max), (3.5, 3.5, 3.5, 3.5));
        assert_eq!(kill_time_stats_of(&[]), Err(MetricsError::NoKills));
    }

    #[test]
    fn timeline_bins() {
        assert_eq!(timeline(&[5.0, 61.0, 59.0, 130.0], 60.0), [(60.0, 2), (120.0, 3), (180.0, 4)]);
    }
}
