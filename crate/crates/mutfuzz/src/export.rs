//! Report files: the JSON summary, one CSV row per mutant and the
//! cumulative kill timeline. Output is sorted so reruns diff cleanly.

use std::path::Path;

use mutfuzz_core::metrics::CampaignReport;
use mutfuzz_core::triage::MutantVerdict;

pub const REPORT_JSON: &str = "report.json";
pub const MUTANTS_CSV: &str = "mutants.csv";
pub const TIMELINE_CSV: &str = "timeline.csv";

pub fn mutants_csv(verdicts: &[MutantVerdict]) -> String {
    let mut sorted: Vec<&MutantVerdict> = verdicts.iter().collect();
    sorted.sort_by(|a, b| a.mutant_id.cmp(&b.mutant_id));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "mutant_id",
        "function",
        "status",
        "wall_time_to_first_kill",
        "provenance",
        "false_positives",
        "original_crashes",
        "executions",
        "test_driver",
    ])
    .expect("in-memory write");
    for v in sorted {
        let first = v.killing_inputs.first();
        let provenance = first
            .map(|k| serde_json::to_value(k.provenance).ok().and_then(|j| j.as_str().map(str::to_owned)).unwrap_or_default())
            .unwrap_or_default();
        w.write_record([
            v.mutant_id.as_str(),
            v.function.as_str(),
            v.status.as_str(),
            &v.wall_time_to_first_kill.map(|t| format!("{t:.3}")).unwrap_or_default(),
            &provenance,
            &v.false_positives.to_string(),
            &v.original_crashes.to_string(),
            &v.executions.to_string(),
            v.test_drivers.first().map(String::as_str).unwrap_or(""),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn timeline_csv(report: &CampaignReport) -> String {
    let mut out = String::from("elapsed_s,cumulative_kills\n");
    for (t, n) in &report.timeline {
        out.push_str(&format!("{t},{n}\n"));
    }
    out
}

/// Writes the three report files into `dir`.
pub fn write_all(dir: &Path, report: &CampaignReport, verdicts: &[MutantVerdict]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(REPORT_JSON), serde_json::to_vec_pretty(report).expect("serializable"))?;
    std::fs::write(dir.join(MUTANTS_CSV), mutants_csv(verdicts))?;
    std::fs::write(dir.join(TIMELINE_CSV), timeline_csv(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mutfuzz_core::triage::Status;

    #[test]
    fn csv_is_sorted_and_quoted() {
        let mut a = MutantVerdict::new("f-0002-ROR", "f", Status::Live);
        a.note = Some("x".into());
        let b = MutantVerdict::new("f-0001-AOR", "f", Status::Error);
        let text = mutants_csv(&[a, b]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("f-0001-AOR,f,ERROR,"));
        assert!(lines[2].starts_with("f-0002-ROR,f,LIVE,"));
    }
}
