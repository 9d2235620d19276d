mod support;

use std::os::unix::fs::PermissionsExt;
use std::path::Path;
use std::time::Duration;

use mutfuzz::campaign::Campaign;
use mutfuzz::fuzzer::{external_adapter, fuzz_loop, Decision, FindingDirs, FuzzConfig, FuzzError};
use mutfuzz_core::fuzz::HavocConfig;
use mutfuzz_core::triage::{Classification, Status};

const ALWAYS_KILLED: &str = r#"
#include "mutfuzz_rt.h"
int main(int argc, char **argv) {
    load_file(argv[1]);
    log_checkpoint("Calling the original function");
    log_checkpoint("Calling the mutated function");
    log_checkpoint("Comparing result values:");
    log_checkpoint("Mutant killed");
    safe_abort();
}
"#;

const NEVER_KILLED: &str = r#"
#include "mutfuzz_rt.h"
int main(int argc, char **argv) {
    int x;
    load_file(argv[1]);
    get_value(&x, sizeof x, 0);
    log_checkpoint("Calling the original function");
    log_checkpoint("Calling the mutated function");
    log_checkpoint("Comparing result values:");
    if (x == 12345) log_checkpoint("unreachable in practice");
    log_checkpoint("Mutant alive");
    return 0;
}
"#;

fn cfg(budget_ms: u64) -> FuzzConfig {
    FuzzConfig {
        budget: Duration::from_millis(budget_ms),
        exec_timeout: Duration::from_secs(1),
        prng_seed: 1,
        havoc: HavocConfig::default(),
    }
}

#[test]
fn first_seed_kills_an_always_divergent_driver() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "always", ALWAYS_KILLED, true);
    let dirs = FindingDirs { crashes: Some(dir.path().join("crashes")), precondition_violations: None };
    let out = fuzz_loop(&bin, &[vec![0xFF; 4], vec![0; 4]], &cfg(10_000), &dirs, &dir.path().join("work"), |_| Decision::Halt)
        .unwrap();
    assert_eq!(out.executions, 1);
    assert_eq!(out.candidates.len(), 1);
    let f = &out.candidates[0];
    assert_eq!(f.classification, Classification::DiffKill);
    assert!(f.from_seed);
    assert_eq!(f.input, vec![0xFF; 4]);
    assert_eq!(std::fs::read(dir.path().join("crashes/1.bin")).unwrap(), vec![0xFF; 4]);
}

#[test]
fn never_divergent_driver_runs_out_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let bin = support::build_c(dir.path(), "never", NEVER_KILLED, true);
    let out = fuzz_loop(&bin, &[vec![0; 4]], &cfg(1_500), &FindingDirs::default(), &dir.path().join("work"), |_| {
        Decision::Halt
    })
    .unwrap();
    assert!(out.candidates.is_empty());
    assert!(out.executions > 10, "{} executions", out.executions);
    assert!(out.elapsed >= Duration::from_millis(1_500));
    assert!(out.coverage_pairs > 0);
}

#[test]
fn missing_seeds_are_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let r = fuzz_loop(Path::new("/bin/true"), &[], &cfg(10), &FindingDirs::default(), dir.path(), |_| Decision::Halt);
    assert!(matches!(r, Err(FuzzError::SeedMissing)));
}

fn script(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}

#[test]
fn external_fuzzer_crashes_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds");
    std::fs::create_dir_all(&seeds).unwrap();
    std::fs::write(seeds.join("seed_1.bin"), b"abcd").unwrap();
    // Pretends to fuzz: reports the seed as a crash, then idles.
    let fake = script(dir.path(), "fake-fuzzer", r#"mkdir -p "$2/default/crashes"; cp "$1"/seed_1.bin "$2/default/crashes/id:000000"; sleep 30"#);
    let template = format!("{} {{seeds}} {{out}} {{target}}", fake.display());
    let out = dir.path().join("out");
    let start = std::time::Instant::now();
    let found = external_adapter(&template, &seeds, &out, Path::new("/bin/true"), Duration::from_secs(20)).unwrap();
    assert_eq!(found, vec![b"abcd".to_vec()]);
    assert!(start.elapsed() < Duration::from_secs(10), "adapter waited for the budget");
}

#[test]
fn external_fuzzer_without_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let quiet = script(dir.path(), "quiet", "exit 0");
    let template = format!("{} {{out}}", quiet.display());
    let r = external_adapter(&template, dir.path(), &dir.path().join("never"), Path::new("/bin/true"), Duration::from_secs(2));
    assert!(matches!(r, Err(FuzzError::CrashDirMissing(_))));
}

#[test]
fn failing_workers_are_retried_then_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = support::toy_config(&[("limit.c", &["at_limit"])], 1.0, 2);
    let campaign = Campaign::prepare(cfg, &dir.path().join("c")).unwrap();
    let ids: Vec<String> = campaign.kept_ids().into_iter().take(2).collect();
    assert_eq!(ids.len(), 2);
    let log = dir.path().join("attempts");
    let broken = script(dir.path(), "broken-worker", &format!("echo \"$5\" >> {}; exit 3", log.display()));
    let verdicts = campaign.schedule(&ids, 2, &broken);
    assert_eq!(verdicts.len(), 2);
    assert!(verdicts.iter().all(|v| v.status == Status::Error));
    let attempts = std::fs::read_to_string(&log).unwrap();
    for id in &ids {
        assert_eq!(attempts.lines().filter(|l| l == id).count(), 2, "{id} attempts");
    }
    let report = campaign.report(&verdicts);
    assert_eq!((report.errors, report.totals.tested, report.mutation_score), (2, 0, None));
}
