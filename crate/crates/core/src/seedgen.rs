//! Seed input files: every input segment is filled with the k-th
//! representative value of its type.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::ctype::PrimitiveClass;
use crate::drivergen::{DriverPlan, SegmentFill};

/// Ordered seed values per value family. Floating-point entries are raw bit
/// patterns, written little-endian like every other entry.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedTable {
    pub int: Vec<i64>,
    pub bool_: Vec<u8>,
    pub float32: Vec<u32>,
    pub float64: Vec<u64>,
    pub byte: Vec<u8>,
    pub timestamp: Vec<String>,
}

impl Default for SeedTable {
    fn default() -> Self {
        SeedTable {
            int: vec![-1, 0, 1],
            bool_: vec![0, 1],
            float32: vec![3_230_283_776, 0, 1_072_693_248],
            float64: vec![13_826_050_856_027_422_720, 0, 4_602_891_378_046_628_864],
            byte: vec![0xFF, 0x00, 0x41],
            timestamp: vec![
                "2145916800.999999999".into(),
                "1970-01-01T00:00:00Z".into(),
                "2038-01-01T00:00:00Z".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeedError {
    #[error("no seed pattern for {class:?} of width {width}")]
    UnknownClass { class: PrimitiveClass, width: u64 },
    #[error("seed index {index} out of range for {count} patterns")]
    IndexOutOfRange { index: usize, count: usize },
}

fn int_bytes(value: i64, width: u64) -> Vec<u8> {
    value.to_le_bytes().iter().copied().chain(core::iter::repeat(if value < 0 { 0xFF } else { 0 })).take(width as usize).collect()
}

impl SeedTable {
    /// Number of patterns available for a fill kind.
    pub fn count(&self, fill: SegmentFill) -> usize {
        match fill {
            SegmentFill::Primitive { class, .. } => match class {
                PrimitiveClass::SignedInt | PrimitiveClass::UnsignedInt => self.int.len(),
                PrimitiveClass::Bool => self.bool_.len(),
                PrimitiveClass::Float32 => self.float32.len(),
                PrimitiveClass::Float64 => self.float64.len(),
                PrimitiveClass::Byte => self.byte.len(),
            },
            SegmentFill::IntArray => self.int.len(),
            SegmentFill::Timestamp => self.timestamp.len(),
        }
    }

    /// Exact bit pattern of seed `index` for one primitive of `class`.
    pub fn seed_pattern(&self, class: PrimitiveClass, width: u64, index: usize) -> Result<Vec<u8>, SeedError> {
        let count = self.count(SegmentFill::Primitive { class, width });
        if index >= count {
            return Err(SeedError::IndexOutOfRange { index, count });
        }
        let unknown = SeedError::UnknownClass { class, width };
        Ok(match class {
            PrimitiveClass::SignedInt | PrimitiveClass::UnsignedInt if (1..=16).contains(&width) => {
                int_bytes(self.int[index], width)
            }
            PrimitiveClass::Bool if width >= 1 => int_bytes(i64::from(self.bool_[index]), width),
            PrimitiveClass::Byte if width == 1 => vec![self.byte[index]],
            PrimitiveClass::Float32 if width == 4 => self.float32[index].to_le_bytes().to_vec(),
            PrimitiveClass::Float64 if width == 8 => self.float64[index].to_le_bytes().to_vec(),
            _ => return Err(unknown),
        })
    }

    /// Bytes for a whole segment of `size` bytes using pattern `index`,
    /// cycling when the fill has fewer patterns.
    pub fn fill_segment(&self, fill: SegmentFill, size: u64, index: usize, int_width: u64) -> Vec<u8> {
        let count = self.count(fill);
        let size = size as usize;
        if count == 0 {
            return vec![0; size];
        }
        let k = index % count;
        let unit = match fill {
            SegmentFill::Timestamp => {
                let mut out = vec![0u8; size];
                let s = self.timestamp[k].as_bytes();
                // Leave room for the terminator.
                let n = s.len().min(size.saturating_sub(1));
                out[..n].copy_from_slice(&s[..n]);
                return out;
            }
            SegmentFill::IntArray => int_bytes(self.int[k], int_width),
            SegmentFill::Primitive { class, width } => match self.seed_pattern(class, width, k) {
                Ok(p) => p,
                Err(_) => int_bytes(self.int[k % self.int.len().max(1)], width.max(1)),
            },
        };
        unit.iter().copied().cycle().take(size).collect()
    }
}

/// Builds one to three seed files; file k fills every segment with the
/// k-th pattern of its fill kind. `int_width` is the ABI's `int` size.
pub fn build_seed_files(plan: &DriverPlan, table: &SeedTable, int_width: u64) -> Vec<Vec<u8>> {
    let files = plan.segments.iter().map(|s| table.count(s.fill)).max().unwrap_or(1).max(1);
    (0..files)
        .map(|k| {
            let mut buf = Vec::with_capacity(plan.input_len as usize);
            for seg in &plan.segments {
                debug_assert_eq!(seg.offset as usize, buf.len());
                buf.extend(table.fill_segment(seg.fill, seg.size, k, int_width));
            }
            buf
        })
        .collect()
}

/// `xxd`-style rendering: offset, sixteen bytes in groups of two, ASCII.
pub fn hexdump(bytes: &[u8]) -> String {
    let mut out = String::new();
    for (row, chunk) in bytes.chunks(16).enumerate() {
        let _ = write!(out, "{:08x}:", row * 16);
        for i in 0..16 {
            if i % 2 == 0 {
                out.push(' ');
            }
            match chunk.get(i) {
                Some(b) => {
                    let _ = write!(out, "{b:02x}");
                }
                None => out.push_str("  "),
            }
        }
        out.push_str("  ");
        for &b in chunk {
            out.push(if (0x20..0x7F).contains(&b) { b as char } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// Seed file name for index `k` (0-based).
pub fn seed_file_name(k: usize) -> String {
    format!("seed_{}.bin", k + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::AbiProfile;
    use crate::parser::Unit;
    use crate::signature::signature_of;

    fn seeds(src: &str, f: &str) -> Vec<Vec<u8>> {
        let mut u = Unit::parse(src).unwrap();
        let sig = signature_of(&mut u, f, None).unwrap();
        let plan = DriverPlan::new(&u.types, &sig, &AbiProfile::lp64()).unwrap();
        build_seed_files(&plan, &SeedTable::default(), 4)
    }

    #[test]
    fn two_ints() {
        let s = seeds("int f(int a, int b) { return a + b; }", "f");
        assert_eq!(s, [vec![0xFF; 8], vec![0; 8], vec![1, 0, 0, 0, 1, 0, 0, 0]]);
    }

    #[test]
    fn bool_cycles_back() {
        let s = seeds("int f(_Bool b, int x) { return b; }", "f");
        assert_eq!(s.len(), 3);
        assert_eq!(s[2][0], 0);
        assert_eq!(s[1][0], 1);
    }

    #[test]
    fn patterns() {
        let t = SeedTable::default();
        assert_eq!(t.seed_pattern(PrimitiveClass::Byte, 1, 2).unwrap(), [0x41]);
        assert_eq!(t.seed_pattern(PrimitiveClass::SignedInt, 4, 1).unwrap(), [0; 4]);
        assert_eq!(t.seed_pattern(PrimitiveClass::Float64, 8, 2).unwrap(), 4602891378046628864u64.to_le_bytes());
        assert_eq!(t.seed_pattern(PrimitiveClass::Float32, 4, 2).unwrap(), 0x3FF0_0000u32.to_le_bytes());
        assert!(matches!(t.seed_pattern(PrimitiveClass::Float32, 8, 0), Err(SeedError::UnknownClass { .. })));
        assert!(matches!(t.seed_pattern(PrimitiveClass::Bool, 1, 2), Err(SeedError::IndexOutOfRange { .. })));
    }

    #[test]
    fn timestamp_strings() {
        let t = SeedTable::default();
        let b = t.fill_segment(SegmentFill::Timestamp, 24, 1, 4);
        assert_eq!(&b[..20], b"1970-01-01T00:00:00Z");
        assert!(b[20..].iter().all(|&x| x == 0));
        assert_eq!(t.fill_segment(SegmentFill::Timestamp, 5, 2, 4), b"2038\0");
    }

    #[test]
    fn hexdump_rows() {
        let d = hexdump(&[0xFF, 0xFF, 0xFF, 0xFF, 0x41]);
        assert_eq!(d, "00000000: ffff ffff 41                             ....A\n");
    }
}
