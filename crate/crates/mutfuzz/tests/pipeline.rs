//! Whole pipeline on small subjects: prepare, fuzz one mutant in-process,
//! check the verdict and its artifacts.

mod support;

use mutfuzz::campaign::{unhex, Campaign};
use mutfuzz::config::{CampaignConfig, Subject};
use mutfuzz::tce::TceClass;
use mutfuzz::toolchain::BuildConfig;
use mutfuzz_core::triage::{Provenance, Status};

const MAGIC: i32 = 0x6162_6364;

fn campaign_for(source: &str, budget_s: f64) -> (tempfile::TempDir, Campaign) {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("subject.c");
    std::fs::write(&file, source).unwrap();
    let cfg = CampaignConfig {
        seed: 7,
        budget_s,
        subjects: vec![Subject { file, functions: Vec::new() }],
        build: BuildConfig { cc: support::toolchain().cfg.cc, ..BuildConfig::default() },
        ..CampaignConfig::default()
    };
    let campaign = Campaign::prepare(cfg, &tmp.path().join("campaign")).unwrap();
    (tmp, campaign)
}

/// The kept mutant carrying `replacement`, or the one it duplicates.
fn kept_with(campaign: &Campaign, replacement: &str) -> String {
    let entry = campaign
        .manifest
        .mutants
        .iter()
        .find(|m| m.spec.replacement == replacement)
        .unwrap_or_else(|| panic!("no mutant with `{replacement}`"));
    match &entry.tce {
        TceClass::Kept => entry.spec.mutant_id.clone(),
        TceClass::Duplicate { of } => of.clone(),
        other => panic!("`{replacement}` is {other:?}"),
    }
}

#[test]
fn magic_constant_is_found_by_fuzzing() {
    let (_tmp, campaign) = campaign_for("int magic(int x) { if (x == 0x61626364) return 1; return 0; }\n", 60.0);
    // Differs from the original only at the magic value and its successor.
    let id = kept_with(&campaign, &(MAGIC as i64 + 1).to_string());
    let v = campaign.run_mutant(&id).unwrap();
    assert_eq!(v.status, Status::KilledByDiff);
    let k = &v.killing_inputs[0];
    assert_eq!(k.provenance, Provenance::Fuzzed);
    let x = i32::from_le_bytes(unhex(&k.input_hex).unwrap()[..4].try_into().unwrap());
    assert!(x == MAGIC || x == MAGIC + 1, "killing value {x:#x}");
    assert!(v.wall_time_to_first_kill.unwrap() < 60.0);
    assert_eq!(v.test_drivers.len(), 1);
    assert!(campaign.dir.join(&v.test_drivers[0]).exists());
}

#[test]
fn divergent_mutant_is_killed_by_a_seed() {
    let (_tmp, campaign) = campaign_for("int twice(int x) { return x * 2; }\n", 20.0);
    let id = kept_with(&campaign, "+");
    let v = campaign.run_mutant(&id).unwrap();
    assert_eq!(v.status, Status::KilledByDiff);
    assert_eq!(v.killing_inputs[0].provenance, Provenance::Seed);
    assert_eq!(campaign.read_verdict(&id).as_ref(), Some(&v));
}

#[test]
fn equivalent_mutants_never_reach_fuzzing() {
    let (_tmp, campaign) = campaign_for("int keep(int x) { int y = x; return y; }\n", 5.0);
    let totals = campaign.manifest.totals();
    assert!(totals.tce_equivalent + totals.tce_duplicate > 0);
    assert_eq!(campaign.kept_ids().len(), totals.tested);
    assert_eq!(totals.generated, totals.tested + totals.tce_equivalent + totals.tce_duplicate + totals.stillborn);
}
