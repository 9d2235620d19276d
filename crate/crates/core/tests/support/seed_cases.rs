//! Seed files of the position-record validator, checked byte for byte
//! against the expected file image.

use mutfuzz_core::drivergen::DriverPlan;
use mutfuzz_core::layout::AbiProfile;
use mutfuzz_core::seedgen::{build_seed_files, SeedTable};
use mutfuzz_core::signature::signature_of;
use mutfuzz_core::Unit;

pub const CORPUS: &str = include_str!("../data/layout_corpus.h");
const VALIDATOR: &str = "typedef unsigned char flag;\nflag T_POS_IsConstraintValid(T_POS *pVal, int *pErrCode);\n";

pub const FILE_LEN: usize = 8060;
pub const UNION_REPEATS: usize = 2013;

/// The expected image of seed file `k`: kind, union words, error code,
/// all filled with the k-th int pattern.
pub fn expected_file(k: usize) -> Vec<u8> {
    let word = [-1i32, 0, 1][k].to_le_bytes();
    let mut out = Vec::new();
    out.extend_from_slice(&word);
    for _ in 0..UNION_REPEATS {
        out.extend_from_slice(&word);
    }
    out.extend_from_slice(&word);
    out
}

pub fn generated_files() -> Vec<Vec<u8>> {
    let mut unit = Unit::parse(&format!("{CORPUS}\n{VALIDATOR}")).expect("corpus parses");
    let abi = AbiProfile::ilp32();
    let sig = signature_of(&mut unit, "T_POS_IsConstraintValid", None).expect("signature");
    let plan = DriverPlan::new(&unit.types, &sig, &abi).expect("plan");
    build_seed_files(&plan, &SeedTable::default(), abi.int.size)
}

pub fn check_all() -> Result<usize, String> {
    let files = generated_files();
    if files.len() != 3 {
        return Err(format!("{} seed files, want 3", files.len()));
    }
    for (k, f) in files.iter().enumerate() {
        if f.len() != FILE_LEN {
            return Err(format!("seed {} has {} bytes, want {FILE_LEN}", k + 1, f.len()));
        }
        let want = expected_file(k);
        if let Some(i) = f.iter().zip(&want).position(|(a, b)| a != b) {
            return Err(format!("seed {} differs at byte {i}: {:#04x} vs {:#04x}", k + 1, f[i], want[i]));
        }
    }
    Ok(files.len())
}
