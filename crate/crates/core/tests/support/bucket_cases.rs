//! Exhaustive hit-count classification against lower-bound thresholds.

use mutfuzz_core::fuzz::{bucketize, Bucket};

/// Class index of `count` from the lower bounds of the classes; `None`
/// for an edge that was not hit.
fn oracle(count: u8) -> Option<usize> {
    const LOWER: [u8; 8] = [1, 2, 3, 4, 8, 16, 32, 128];
    (count > 0).then(|| LOWER.iter().rposition(|&lo| count >= lo).unwrap())
}

pub fn check_all() -> Result<usize, String> {
    for c in 0..=255u8 {
        let got = bucketize(c).map(|b| Bucket::ALL.iter().position(|x| *x == b).unwrap());
        if got != oracle(c) {
            return Err(format!("count {c}: got {got:?}, want {:?}", oracle(c)));
        }
    }
    Ok(256)
}
