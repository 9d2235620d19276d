//! Grey-box fuzzing engine without IO: coverage bookkeeping, havoc
//! mutation and pool selection. The caller executes inputs and feeds the
//! resulting coverage maps back.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of 8-bit edge counters shared with the driver runtime.
pub const MAP_SIZE: usize = 1 << 16;

/// Edge index of the transition `prev -> cur` between block ids.
pub fn edge_index(prev: u32, cur: u32) -> usize {
    (((prev >> 1) ^ cur) as usize) & (MAP_SIZE - 1)
}

/// Hit-count class of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Bucket {
    One,
    Two,
    Three,
    FourToSeven,
    EightToFifteen,
    SixteenToThirtyOne,
    ThirtyTwoToOneTwentySeven,
    OneTwentyEightPlus,
}

impl Bucket {
    pub const ALL: [Bucket; 8] = [
        Bucket::One,
        Bucket::Two,
        Bucket::Three,
        Bucket::FourToSeven,
        Bucket::EightToFifteen,
        Bucket::SixteenToThirtyOne,
        Bucket::ThirtyTwoToOneTwentySeven,
        Bucket::OneTwentyEightPlus,
    ];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Inclusive count range of the class.
    pub fn range(self) -> (u8, u8) {
        match self {
            Bucket::One => (1, 1),
            Bucket::Two => (2, 2),
            Bucket::Three => (3, 3),
            Bucket::FourToSeven => (4, 7),
            Bucket::EightToFifteen => (8, 15),
            Bucket::SixteenToThirtyOne => (16, 31),
            Bucket::ThirtyTwoToOneTwentySeven => (32, 127),
            Bucket::OneTwentyEightPlus => (128, 255),
        }
    }
}

pub fn bucketize(count: u8) -> Option<Bucket> {
    Some(match count {
        0 => return None,
        1 => Bucket::One,
        2 => Bucket::Two,
        3 => Bucket::Three,
        4..=7 => Bucket::FourToSeven,
        8..=15 => Bucket::EightToFifteen,
        16..=31 => Bucket::SixteenToThirtyOne,
        32..=127 => Bucket::ThirtyTwoToOneTwentySeven,
        128..=255 => Bucket::OneTwentyEightPlus,
    })
}

/// Saturating increment as done by the runtime's guard callback.
pub fn hit(map: &mut [u8], edge: usize) {
    let c = &mut map[edge & (MAP_SIZE - 1)];
    *c = c.saturating_add(1);
}

/// (edge, bucket) pairs of a completed execution's map.
pub fn signature(map: &[u8]) -> Vec<(u32, Bucket)> {
    map.iter().enumerate().filter_map(|(i, &c)| bucketize(c).map(|b| (i as u32, b))).collect()
}

/// Every (edge, bucket) pair seen so far, one bit per bucket.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalCoverage {
    seen: Vec<u8>,
    pairs: usize,
}

impl Default for GlobalCoverage {
    fn default() -> Self {
        GlobalCoverage { seen: vec![0; MAP_SIZE], pairs: 0 }
    }
}

impl GlobalCoverage {
    /// Pairs of `map` not seen before; empty means not novel. The global
    /// set is left untouched until [`GlobalCoverage::commit`].
    pub fn novel_pairs(&self, map: &[u8]) -> Vec<(u32, Bucket)> {
        map.iter()
            .enumerate()
            .filter_map(|(i, &c)| {
                let b = bucketize(c)?;
                (self.seen[i] & b.bit() == 0).then_some((i as u32, b))
            })
            .collect()
    }

    pub fn is_novel(&self, map: &[u8]) -> bool {
        map.iter().enumerate().any(|(i, &c)| bucketize(c).is_some_and(|b| self.seen[i] & b.bit() == 0))
    }

    pub fn commit(&mut self, pairs: &[(u32, Bucket)]) {
        for &(e, b) in pairs {
            let slot = &mut self.seen[e as usize];
            if *slot & b.bit() == 0 {
                *slot |= b.bit();
                self.pairs += 1;
            }
        }
    }

    pub fn pair_count(&self) -> usize {
        self.pairs
    }

    /// Distinct edges hit at least once.
    pub fn edge_count(&self) -> usize {
        self.seen.iter().filter(|&&s| s != 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HavocOp {
    BitFlip,
    Interesting,
    Arith,
    BlockDuplicate,
    BlockDelete,
    BlockShuffle,
    Splice,
    Truncate,
    Extend,
}

impl HavocOp {
    pub const ALL: [HavocOp; 9] = [
        HavocOp::BitFlip,
        HavocOp::Interesting,
        HavocOp::Arith,
        HavocOp::BlockDuplicate,
        HavocOp::BlockDelete,
        HavocOp::BlockShuffle,
        HavocOp::Splice,
        HavocOp::Truncate,
        HavocOp::Extend,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HavocConfig {
    /// Relative weight of each op, indexed like [`HavocOp::ALL`].
    pub weights: [u32; 9],
    /// Upper bound on stacked ops per mutation.
    pub max_stack: u32,
    pub max_len: usize,
    /// Extra constants, e.g. seed patterns or literals of the subject.
    pub dictionary: Vec<Vec<u8>>,
}

impl Default for HavocConfig {
    fn default() -> Self {
        HavocConfig { weights: [6, 6, 6, 2, 2, 2, 1, 1, 1], max_stack: 16, max_len: 1 << 16, dictionary: Vec::new() }
    }
}

const ARITH_MAX: u8 = 35;

fn interesting_constants() -> Vec<Vec<u8>> {
    let mut out: Vec<Vec<u8>> = Vec::new();
    for v in [0i64, 1, -1] {
        for w in [1usize, 2, 4, 8] {
            out.push(v.to_le_bytes()[..w].to_vec());
        }
    }
    out.push(vec![0x7F]);
    out.push(vec![0x80]);
    out.push(0x7FFFu16.to_le_bytes().to_vec());
    out.push(0x8000u16.to_le_bytes().to_vec());
    out.push(0xFFFFu16.to_le_bytes().to_vec());
    out.push(0x7FFF_FFFFu32.to_le_bytes().to_vec());
    out.push(0x8000_0000u32.to_le_bytes().to_vec());
    out
}

fn pick_op<R: RngCore>(rng: &mut R, weights: &[u32; 9]) -> HavocOp {
    let total: u32 = weights.iter().sum();
    let mut r = rng.gen_range(0..total.max(1));
    for (op, &w) in HavocOp::ALL.iter().zip(weights) {
        if r < w {
            return *op;
        }
        r -= w;
    }
    HavocOp::BitFlip
}

fn block<R: RngCore>(rng: &mut R, len: usize) -> (usize, usize) {
    let n = rng.gen_range(1..=len.clamp(1, 32).min(len.max(1)));
    let start = rng.gen_range(0..=len - n);
    (start, n)
}

/// Applies 1..=max_stack stacked ops; every drawn op is appended to
/// `trace`. The result is never empty.
pub fn havoc_mutate<R: RngCore>(
    input: &[u8],
    rng: &mut R,
    cfg: &HavocConfig,
    splice_partner: Option<&[u8]>,
    trace: &mut Vec<HavocOp>,
) -> Vec<u8> {
    let mut data = input.to_vec();
    if data.is_empty() {
        data.push(0);
    }
    let interesting = interesting_constants();
    let stack = rng.gen_range(1..=cfg.max_stack.max(1));
    for _ in 0..stack {
        let op = pick_op(rng, &cfg.weights);
        trace.push(op);
        let len = data.len();
        match op {
            HavocOp::BitFlip => {
                let bit = rng.gen_range(0..len * 8);
                data[bit / 8] ^= 1 << (bit % 8);
            }
            HavocOp::Interesting => {
                let use_dict = !cfg.dictionary.is_empty() && rng.gen_bool(0.5);
                let c = if use_dict {
                    &cfg.dictionary[rng.gen_range(0..cfg.dictionary.len())]
                } else {
                    &interesting[rng.gen_range(0..interesting.len())]
                };
                let n = c.len().min(len);
                // Parameters sit at offsets aligned to their size, so half
                // the writes land on a multiple of the token width.
                let at = if rng.gen_bool(0.5) {
                    n * rng.gen_range(0..=(len - n) / n)
                } else {
                    rng.gen_range(0..=len - n)
                };
                data[at..at + n].copy_from_slice(&c[..n]);
            }
            HavocOp::Arith => {
                let at = rng.gen_range(0..len);
                let delta = rng.gen_range(1..=ARITH_MAX);
                data[at] = if rng.gen_bool(0.5) { data[at].wrapping_add(delta) } else { data[at].wrapping_sub(delta) };
            }
            HavocOp::BlockDuplicate => {
                let (start, n) = block(rng, len);
                let piece = data[start..start + n].to_vec();
                let at = rng.gen_range(0..=len);
                data.splice(at..at, piece);
            }
            HavocOp::BlockDelete => {
                let (start, n) = block(rng, len);
                data.drain(start..start + n);
            }
            HavocOp::BlockShuffle => {
                let (start, n) = block(rng, len);
                for i in (1..n).rev() {
                    let j = rng.gen_range(0..=i);
                    data.swap(start + i, start + j);
                }
            }
            HavocOp::Splice => {
                let other = splice_partner.filter(|p| !p.is_empty()).unwrap_or(input);
                if !other.is_empty() {
                    let cut = rng.gen_range(0..=len.min(other.len()));
                    data.truncate(cut);
                    data.extend_from_slice(&other[cut.min(other.len())..]);
                }
            }
            HavocOp::Truncate => {
                let keep = rng.gen_range(0..len);
                data.truncate(keep);
            }
            HavocOp::Extend => {
                let n = rng.gen_range(1..=32);
                data.extend((0..n).map(|_| rng.gen::<u8>()));
            }
        }
        data.truncate(cfg.max_len.max(1));
        if data.is_empty() {
            data.push(0);
        }
    }
    data
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub input: Vec<u8>,
    pub new_pairs: Vec<(u32, Bucket)>,
    pub discovered_ms: u64,
    pub exec_us: u64,
    pub times_selected: u32,
}

impl PoolEntry {
    /// Selection weight: recently productive, short and fast entries first.
    pub fn weight(&self, newest_ms: u64) -> u64 {
        let productive = 1 + self.new_pairs.len().min(32) as u64;
        let recency = if newest_ms.saturating_sub(self.discovered_ms) < 5_000 { 2 } else { 1 };
        let brevity = 1 + self.input.len() as u64 / 64;
        let speed = 1 + self.exec_us / 1_000;
        let fatigue = 1 + u64::from(self.times_selected) / 8;
        (1_000 * productive * recency / (brevity * speed * fatigue)).max(1)
    }
}

/// Where an input handed out by the engine came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Seed(usize),
    Mutated,
}

/// Deterministic engine state: seeds first, then havoc over the pool.
#[derive(Debug, Clone)]
pub struct Engine {
    rng: ChaCha8Rng,
    cfg: HavocConfig,
    seeds: Vec<Vec<u8>>,
    pending: VecDeque<usize>,
    pub pool: Vec<PoolEntry>,
    pub coverage: GlobalCoverage,
    last_parent: Option<usize>,
    pub executions: u64,
    pub op_trace: Vec<HavocOp>,
    trace_ops: bool,
}

impl Engine {
    pub fn new(prng_seed: u64, cfg: HavocConfig, seeds: Vec<Vec<u8>>) -> Engine {
        let pending = (0..seeds.len()).collect();
        Engine {
            rng: ChaCha8Rng::seed_from_u64(prng_seed),
            cfg,
            seeds,
            pending,
            pool: Vec::new(),
            coverage: GlobalCoverage::default(),
            last_parent: None,
            executions: 0,
            op_trace: Vec::new(),
            trace_ops: false,
        }
    }

    /// Records every drawn havoc op in `op_trace`.
    pub fn with_op_trace(mut self) -> Engine {
        self.trace_ops = true;
        self
    }

    fn select(&mut self) -> Option<usize> {
        if self.pool.is_empty() {
            return None;
        }
        let newest = self.pool.iter().map(|e| e.discovered_ms).max().unwrap_or(0);
        let total: u64 = self.pool.iter().map(|e| e.weight(newest)).sum();
        let mut r = self.rng.gen_range(0..total);
        for (i, e) in self.pool.iter().enumerate() {
            let w = e.weight(newest);
            if r < w {
                return Some(i);
            }
            r -= w;
        }
        Some(self.pool.len() - 1)
    }

    /// Next input to execute.
    pub fn next_input(&mut self) -> (Vec<u8>, Origin) {
        if let Some(k) = self.pending.pop_front() {
            self.last_parent = None;
            return (self.seeds[k].clone(), Origin::Seed(k));
        }
        let (parent, partner) = match self.select() {
            Some(i) => {
                self.pool[i].times_selected += 1;
                self.last_parent = Some(i);
                let j = self.rng.gen_range(0..self.pool.len());
                (self.pool[i].input.clone(), self.pool[j].input.clone())
            }
            None => {
                self.last_parent = None;
                let k = if self.seeds.is_empty() { 0 } else { self.rng.gen_range(0..self.seeds.len()) };
                let s = self.seeds.get(k).cloned().unwrap_or_default();
                (s.clone(), s)
            }
        };
        let mut trace = Vec::new();
        let out = havoc_mutate(&parent, &mut self.rng, &self.cfg, Some(&partner), &mut trace);
        if self.trace_ops {
            self.op_trace.extend(trace);
        }
        (out, Origin::Mutated)
    }

    /// Feeds back one execution; returns the newly contributed pairs (the
    /// input joined the pool iff non-empty).
    pub fn observe(&mut self, input: &[u8], map: &[u8], exec_us: u64, now_ms: u64) -> usize {
        self.executions += 1;
        let pairs = self.coverage.novel_pairs(map);
        if pairs.is_empty() {
            return 0;
        }
        self.coverage.commit(&pairs);
        let n = pairs.len();
        self.pool.push(PoolEntry {
            input: input.to_vec(),
            new_pairs: pairs,
            discovered_ms: now_ms,
            exec_us,
            times_selected: 0,
        });
        n
    }

    pub fn pending_seeds(&self) -> usize {
        self.pending.len()
    }
}
