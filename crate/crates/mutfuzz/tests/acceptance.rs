//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! value, the pinned threshold and the elapsed time. Exits nonzero when any
//! criterion fails.
//!
//! `MUTFUZZ_ACCEPTANCE_BUDGET_S` overrides the per-mutant fuzzing budget of
//! the campaign criteria (default 60). `MUTFUZZ_ACCEPTANCE_ONLY` runs only
//! the criteria whose name contains the given substring.

mod support;

#[path = "../../core/tests/support/bucket_cases.rs"]
mod bucket_cases;
#[path = "../../core/tests/support/layout_cases.rs"]
mod layout_cases;
#[path = "../../core/tests/support/operator_cases.rs"]
mod operator_cases;
#[path = "../../core/tests/support/seed_cases.rs"]
mod seed_cases;
#[path = "../../core/tests/support/triage_cases.rs"]
mod triage_cases;

use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use mutfuzz::campaign::{unhex, Campaign};
use mutfuzz::exec;
use mutfuzz::rt::COVERAGE_MAP_ENV;
use mutfuzz::tce::TceClass;
use mutfuzz_core::drivergen::{MUTANT_KILLED, PASS};
use mutfuzz_core::layout::{compute_layout, probe_program, AbiProfile};
use mutfuzz_core::metrics::{compute_ms, ms_of, pp_difference};
use mutfuzz_core::mutgen::Operator;
use mutfuzz_core::triage::{ExitKind, MutantVerdict, Provenance, Status, SIGABRT};
use mutfuzz_core::Unit;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn budget_s() -> f64 {
    std::env::var("MUTFUZZ_ACCEPTANCE_BUDGET_S").ok().and_then(|s| s.parse().ok()).unwrap_or(60.0)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn layout() -> Outcome {
    let types = layout_cases::corpus_types();
    ensure(types.len() >= 20, || format!("only {} corpus types", types.len()))?;
    let lp64 = layout_cases::check_facts(&AbiProfile::lp64(), layout_cases::LP64_FACTS)?;
    let ilp32 = layout_cases::check_facts(&AbiProfile::ilp32(), layout_cases::ILP32_FACTS)?;
    let (size, kind_at, _, union_at) = layout_cases::position_record(&AbiProfile::ilp32());
    ensure(size == 8056 && kind_at == 0 && union_at == 4, || {
        format!("position record {size} bytes, kind@{kind_at}, union@{union_at}")
    })?;
    let live = match mutfuzz::toolchain::find_compiler() {
        Some(_) => format!(", {} facts re-probed on the host compiler", live_probe(&types)?),
        None => ", no compiler for a live probe".into(),
    };
    Ok(format!("{} types, {lp64} lp64 + {ilp32} ilp32 facts exact, position record 8056 bytes{live}", types.len()))
}

/// Compiles the probe program natively and compares every printed size and
/// offset with the layout computed under the probed ABI.
fn live_probe(types: &[&str]) -> Result<usize, String> {
    let tc = support::toolchain();
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let abi = tc.probe_abi(scratch.path()).map_err(|e| e.to_string())?;
    let unit = Unit::parse(layout_cases::CORPUS).map_err(|e| e.to_string())?;
    let src = scratch.path().join("probe.c");
    let bin = scratch.path().join("probe");
    std::fs::write(&src, probe_program(&unit.types, layout_cases::CORPUS, types)).map_err(|e| e.to_string())?;
    let cc = Command::new(&tc.cfg.cc).arg("-o").arg(&bin).arg(&src).output().map_err(|e| e.to_string())?;
    ensure(cc.status.success(), || String::from_utf8_lossy(&cc.stderr).into_owned())?;
    let out = Command::new(&bin).output().map_err(|e| e.to_string())?;
    let facts: String = String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with("align"))
        .map(|l| format!("{l}\n"))
        .collect();
    let checked = layout_cases::check_facts(&abi, &facts)?;
    let tpos = compute_layout(&unit.types, unit.types.typedef("T_POS").unwrap(), &abi).map_err(|e| e.to_string())?;
    ensure(tpos.size > 0, || "empty position record".into())?;
    Ok(checked)
}

fn seeds() -> Outcome {
    let n = seed_cases::check_all()?;
    Ok(format!(
        "{n} files of {} bytes, pattern repeated {} times in the union",
        seed_cases::FILE_LEN,
        seed_cases::UNION_REPEATS
    ))
}

fn bucketing() -> Outcome {
    let n = bucket_cases::check_all()?;
    ensure(n == 256, || format!("{n} counts checked"))?;
    Ok("256/256 hit counts agree".into())
}

fn operators() -> Outcome {
    let n = operator_cases::check_all()?;
    let covered: std::collections::BTreeSet<_> = operator_cases::cases().iter().map(|c| c.operator).collect();
    ensure(covered.len() == Operator::ALL.len(), || format!("{} operators covered", covered.len()))?;
    Ok(format!("{n} cases over {} operators", covered.len()))
}

fn triage() -> Outcome {
    let n = triage_cases::check_all()?;
    ensure(n == 12, || format!("{n} rows"))?;
    Ok("12/12 rows".into())
}

fn metrics() -> Outcome {
    let ms = compute_ms(118.2, 153.0).map_err(|e| e.to_string())?;
    let pp = pp_difference(89.1, 87.2);
    ensure(format!("{ms:.2}") == "77.25" && format!("{pp:.2}") == "1.90", || format!("ms {ms}, pp {pp}"))?;
    Ok(format!("ms {ms:.2}%, difference {pp:.2} pp"))
}

fn end_to_end() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = mutfuzz::config::CampaignConfig::load(&support::toy_dir().join("toy.toml")).map_err(|e| e.to_string())?;
    cfg.budget_s = budget_s();
    cfg.workers = 4;
    let campaign = Campaign::prepare(cfg, tmp.path()).map_err(|e| e.to_string())?;
    let ids = campaign.kept_ids();
    ensure(!ids.is_empty(), || "no kept mutants".into())?;
    let mut verdicts = campaign.schedule(&ids, 4, &support::worker_exe());
    let killed = verdicts.iter().filter(|v| v.status.is_killed()).count();
    let errors = verdicts.iter().filter(|v| v.status == Status::Error).count();
    let ratio = killed as f64 / ids.len() as f64;

    let (replays, tests) = check_kills(&campaign, &verdicts)?;
    let before = ms_of(&verdicts).map_err(|e| e.to_string())?;
    let reuse = campaign.reuse_inputs(&mut verdicts).map_err(|e| e.to_string())?;
    let after = ms_of(&verdicts).map_err(|e| e.to_string())?;
    ensure(after >= before, || format!("reuse lowered the score from {before} to {after}"))?;
    ensure(ratio >= 0.5, || format!("{killed}/{} kept mutants killed ({:.1}%), {errors} errors", ids.len(), ratio * 100.0))?;
    Ok(format!(
        "{killed}/{} killed ({:.1}% >= 50%), {errors} errors, {replays} diff kills replayed, {tests} tests pass; \
         reuse {before:.2}% -> {after:.2}% (+{} kills)",
        ids.len(),
        ratio * 100.0,
        reuse.new_kills.len()
    ))
}

/// Every differential kill replays to the kill checkpoint and an abort, and
/// every emitted test driver passes on the original.
fn check_kills(campaign: &Campaign, verdicts: &[MutantVerdict]) -> Result<(usize, usize), String> {
    let mut replays = 0;
    let mut tests = 0;
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    for v in verdicts {
        if v.status == Status::KilledByDiff {
            let fuzz = campaign.dir.join(&v.function).join(&v.mutant_id).join("drivers").join(format!("{}_fuzz", v.mutant_id));
            for k in &v.killing_inputs {
                let input = unhex(&k.input_hex).ok_or("bad input hex")?;
                let path = work.path().join("input");
                std::fs::write(&path, input).map_err(|e| e.to_string())?;
                let r = exec::run(&fuzz, [&path], &[(COVERAGE_MAP_ENV, "".as_ref())], Duration::from_secs(5))
                    .map_err(|e| e.to_string())?;
                let ok = r.exit == ExitKind::Signaled(SIGABRT) && r.stdout.lines().any(|l| l == MUTANT_KILLED);
                ensure(ok, || format!("{}: replay gave {:?}", v.mutant_id, r.exit))?;
                replays += 1;
            }
        }
        for rel in &v.test_drivers {
            tests += run_test_driver(&campaign.dir, rel).map(|()| 1).map_err(|e| format!("{}: {e}", v.mutant_id))?;
        }
    }
    ensure(replays > 0, || "no differential kills to replay".into())?;
    ensure(tests > 0, || "no test drivers emitted".into())?;
    Ok((replays, tests))
}

fn run_test_driver(dir: &Path, rel: &str) -> Result<(), String> {
    let bin = dir.join(rel).with_extension("");
    let r = exec::run(&bin, std::iter::empty::<&str>(), &[], Duration::from_secs(5)).map_err(|e| e.to_string())?;
    ensure(r.exit == ExitKind::Normal(0) && r.stdout.lines().any(|l| l == PASS), || {
        format!("{rel} gave {:?}", r.exit)
    })
}

fn nondeterminism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = support::toy_config(&[("clock.c", &["stamp"])], budget_s(), 4);
    let campaign = Campaign::prepare(cfg, tmp.path()).map_err(|e| e.to_string())?;
    let ids = campaign.kept_ids();
    ensure(!ids.is_empty(), || "no kept mutants".into())?;
    let verdicts = campaign.schedule(&ids, 4, &support::worker_exe());
    let killed: Vec<&str> = verdicts.iter().filter(|v| v.status.is_killed()).map(|v| v.mutant_id.as_str()).collect();
    ensure(killed.is_empty(), || format!("kills credited: {killed:?}"))?;
    let candidates: Vec<&MutantVerdict> = verdicts.iter().filter(|v| v.false_positives > 0).collect();
    ensure(!candidates.is_empty(), || "no kill candidates at all".into())?;
    let wrong: Vec<String> = candidates
        .iter()
        .filter(|v| v.status != Status::FpOnly)
        .map(|v| format!("{} {}", v.mutant_id, v.status.as_str()))
        .collect();
    ensure(wrong.is_empty(), || format!("candidates not FP_ONLY: {wrong:?}"))?;
    Ok(format!("{} mutants, {} with candidates all FP_ONLY, 0 kills", verdicts.len(), candidates.len()))
}

fn reuse() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = support::toy_config(&[("limit.c", &["at_limit"])], budget_s(), 1);
    let campaign = Campaign::prepare(cfg, tmp.path()).map_err(|e| e.to_string())?;
    // The kept mutant that carries `>=` -> `replacement`, following TCE
    // duplicates to their representative.
    let find = |replacement: &str| {
        let entry = campaign
            .manifest
            .mutants
            .iter()
            .find(|m| m.spec.operator == Some(Operator::Ror) && m.spec.original == ">=" && m.spec.replacement == replacement)
            .ok_or_else(|| format!("no ROR mutant `>=` -> `{replacement}`"))?;
        let id = match &entry.tce {
            TceClass::Kept => entry.spec.mutant_id.clone(),
            TceClass::Duplicate { of } => of.clone(),
            other => return Err(format!("`>=` -> `{replacement}` is {other:?}")),
        };
        campaign.spec(&id).cloned().map_err(|e| e.to_string())
    };
    // `>` differs from the original only at the boundary; `!=` also there.
    let fuzzed = find(">")?;
    let sibling = find("!=")?;
    let first = campaign.run_mutant(&fuzzed.mutant_id).map_err(|e| e.to_string())?;
    ensure(first.status.is_killed(), || format!("{} stayed {}", fuzzed.mutant_id, first.status.as_str()))?;
    let boundary = unhex(&first.killing_inputs[0].input_hex).ok_or("bad input hex")?;
    ensure(boundary.get(..4) == Some(&1000i32.to_le_bytes()[..]), || format!("killing input {boundary:02x?}"))?;

    let mut verdicts = vec![first, MutantVerdict::new(&sibling.mutant_id, &sibling.function, Status::Live)];
    let before = ms_of(&verdicts).map_err(|e| e.to_string())?;
    let summary = campaign.reuse_inputs(&mut verdicts).map_err(|e| e.to_string())?;
    let after = ms_of(&verdicts).map_err(|e| e.to_string())?;
    let v = &verdicts[1];
    ensure(v.status == Status::KilledByDiff, || format!("sibling is {}", v.status.as_str()))?;
    ensure(v.killing_inputs.iter().all(|k| k.provenance == Provenance::Reused), || "provenance not reused".into())?;
    ensure(v.executions == 0 && v.wall_time_to_first_kill.is_none(), || "sibling was fuzzed".into())?;
    ensure(after >= before, || format!("score fell from {before} to {after}"))?;
    Ok(format!(
        "{} killed by the input of {} in {} replay(s), score {before:.2}% -> {after:.2}%",
        sibling.mutant_id, fuzzed.mutant_id, summary.replays
    ))
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "layout-oracle", limit: Duration::from_secs(10), run: layout },
    Criterion { name: "seed-bytes", limit: Duration::from_secs(1), run: seeds },
    Criterion { name: "bucketing", limit: Duration::from_secs(1), run: bucketing },
    Criterion { name: "operators", limit: Duration::from_secs(5), run: operators },
    Criterion { name: "triage-table", limit: Duration::from_secs(1), run: triage },
    Criterion { name: "metrics", limit: Duration::from_secs(1), run: metrics },
    Criterion { name: "nondeterminism-guard", limit: Duration::from_secs(300), run: nondeterminism },
    Criterion { name: "input-reuse", limit: Duration::from_secs(300), run: reuse },
    Criterion { name: "end-to-end", limit: Duration::from_secs(1800), run: end_to_end },
];

fn main() -> ExitCode {
    let only = std::env::var("MUTFUZZ_ACCEPTANCE_ONLY").ok();
    let mut failed = 0;
    for c in CRITERIA {
        if only.as_deref().is_some_and(|o| !c.name.contains(o)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if elapsed > c.limit => Err(format!("{msg}; over the time limit")),
            other => other,
        };
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("{tag} {} ({:.2}s, limit {}s): {msg}", c.name, elapsed.as_secs_f64(), c.limit.as_secs());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
