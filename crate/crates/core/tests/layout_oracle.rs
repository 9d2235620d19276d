//! Computed layouts against values printed by the compiler for the same
//! declarations.

#[path = "support/layout_cases.rs"]
mod layout_cases;

use mutfuzz_core::layout::AbiProfile;
use layout_cases::*;

#[test]
fn lp64_matches_compiler() {
    assert_eq!(check_facts(&AbiProfile::lp64(), LP64_FACTS), Ok(83));
}

#[test]
fn ilp32_matches_compiler() {
    assert_eq!(check_facts(&AbiProfile::ilp32(), ILP32_FACTS), Ok(83));
}

#[test]
fn corpus_is_wide_enough() {
    assert_eq!(types_in(LP64_FACTS), types_in(ILP32_FACTS));
    assert_eq!(corpus_types().len(), 26);
}

#[test]
fn position_record_sizes() {
    assert_eq!(position_record(&AbiProfile::ilp32()), (8056, 0, 8052, 4));
}
