//! Layout facts printed by the compiler for the declarations in
//! `data/layout_corpus.h` (regenerated by `data/regen_layouts.py`).
#![allow(dead_code)]

use std::collections::BTreeSet;

use mutfuzz_core::layout::{compute_layout, AbiProfile};
use mutfuzz_core::Unit;

pub const CORPUS: &str = include_str!("../data/layout_corpus.h");
pub const LP64_FACTS: &str = include_str!("../data/layout_lp64.txt");
pub const ILP32_FACTS: &str = include_str!("../data/layout_ilp32.txt");

/// Checks `size`/`offset` lines (`align` lines are ignored) against the
/// computed layouts. Returns the number of facts checked.
pub fn check_facts(abi: &AbiProfile, facts: &str) -> Result<usize, String> {
    let unit = Unit::parse(CORPUS).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for line in facts.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 3 || parts[0] == "align" {
            continue;
        }
        let ty = unit.types.typedef(parts[1]).ok_or_else(|| format!("{} not parsed", parts[1]))?;
        let layout = compute_layout(&unit.types, ty, abi).map_err(|e| format!("{}: {e}", parts[1]))?;
        let want: u64 = parts.last().unwrap().parse().map_err(|_| format!("bad line `{line}`"))?;
        let got = match parts[0] {
            "size" => layout.size,
            "offset" => layout.field(parts[2]).ok_or_else(|| format!("{}.{} missing", parts[1], parts[2]))?.offset,
            other => return Err(format!("unknown fact {other}")),
        };
        if got != want {
            return Err(format!("{} under {}: got {got}, compiler says {want}", line, abi.name));
        }
        checked += 1;
    }
    Ok(checked)
}

pub fn types_in(facts: &str) -> BTreeSet<&str> {
    facts.lines().filter_map(|l| l.split_whitespace().nth(1)).collect()
}

/// Typedef names declared by the corpus, in declaration order of the facts.
pub fn corpus_types() -> Vec<&'static str> {
    types_in(LP64_FACTS).into_iter().collect()
}

/// (size, kind offset, union size, union offset) of the position record.
pub fn position_record(abi: &AbiProfile) -> (u64, u64, u64, u64) {
    let unit = Unit::parse(CORPUS).expect("corpus parses");
    let tpos = compute_layout(&unit.types, unit.types.typedef("T_POS").unwrap(), abi).unwrap();
    let kind = tpos.field("kind").unwrap();
    let u = tpos.field("u").unwrap();
    (tpos.size, kind.offset, u.size, u.offset)
}
