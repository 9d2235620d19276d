use mutfuzz_core::drivergen::DriverPlan;
use mutfuzz_core::fuzz::{havoc_mutate, Engine, HavocConfig, MAP_SIZE};
use mutfuzz_core::layout::{compute_layout, AbiProfile};
use mutfuzz_core::metrics::{compute_ms, ms_of};
use mutfuzz_core::mutgen::{generate_mutants, single_edit};
use mutfuzz_core::seedgen::{build_seed_files, SeedTable};
use mutfuzz_core::signature::signature_of;
use mutfuzz_core::triage::{MutantVerdict, Status};
use mutfuzz_core::Unit;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PRIMS: [(&str, u64, u64, u64, u64); 8] = [
    // (spelling, lp64 size, lp64 align, ilp32 size, ilp32 align)
    ("char", 1, 1, 1, 1),
    ("short", 2, 2, 2, 2),
    ("int", 4, 4, 4, 4),
    ("long", 8, 8, 4, 4),
    ("long long", 8, 8, 8, 4),
    ("float", 4, 4, 4, 4),
    ("double", 8, 8, 8, 4),
    ("void *", 8, 8, 4, 4),
];

/// Textbook struct layout over (size, align, count) members.
fn oracle_layout(fields: &[(u64, u64, u64)]) -> (Vec<u64>, u64) {
    let up = |v: u64, a: u64| v.div_ceil(a) * a;
    let mut off = 0;
    let mut max_align = 1;
    let mut offsets = Vec::new();
    for &(size, align, count) in fields {
        off = up(off, align);
        offsets.push(off);
        off += size * count;
        max_align = max_align.max(align);
    }
    (offsets, up(off, max_align))
}

fn rel_op() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["<", "<=", ">", ">=", "==", "!="])
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![Just("a".to_string()), Just("b".to_string()), (0u32..300).prop_map(|v| v.to_string())];
    leaf.prop_recursive(3, 16, 2, |inner| {
        (inner.clone(), prop::sample::select(vec!["+", "-", "*", "&", "|", "<<", "&&", "||"]), inner)
            .prop_map(|(l, op, r)| format!("({l} {op} {r})"))
    })
}

fn verdict(i: usize, status: Status) -> MutantVerdict {
    MutantVerdict::new(&format!("f-{i:04}-AOR"), "f", status)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn struct_layout_matches_oracle(members in prop::collection::vec((0usize..PRIMS.len(), 1u64..4), 1..8), ilp32 in any::<bool>()) {
        let mut src = String::from("typedef struct {\n");
        for (i, (k, n)) in members.iter().enumerate() {
            if *n == 1 {
                src.push_str(&format!("    {} m{i};\n", PRIMS[*k].0));
            } else {
                src.push_str(&format!("    {} m{i}[{n}];\n", PRIMS[*k].0));
            }
        }
        src.push_str("} S;\n");
        let unit = Unit::parse(&src).unwrap();
        let abi = if ilp32 { AbiProfile::ilp32() } else { AbiProfile::lp64() };
        let layout = compute_layout(&unit.types, unit.types.typedef("S").unwrap(), &abi).unwrap();
        let fields: Vec<(u64, u64, u64)> = members
            .iter()
            .map(|(k, n)| {
                let p = PRIMS[*k];
                if ilp32 { (p.3, p.4, *n) } else { (p.1, p.2, *n) }
            })
            .collect();
        let (offsets, size) = oracle_layout(&fields);
        prop_assert_eq!(layout.size, size);
        for (i, off) in offsets.iter().enumerate() {
            prop_assert_eq!(layout.field(&format!("m{i}")).unwrap().offset, *off);
        }
    }

    #[test]
    fn seed_files_cover_every_segment(kinds in prop::collection::vec(prop::sample::select(vec!["int", "char", "double", "float", "_Bool", "short", "unsigned char"]), 1..6)) {
        let params: Vec<String> = kinds.iter().enumerate().map(|(i, k)| format!("{k} p{i}")).collect();
        let mut unit = Unit::parse(&format!("int f({});", params.join(", "))).unwrap();
        let abi = AbiProfile::lp64();
        let sig = signature_of(&mut unit, "f", None).unwrap();
        let plan = DriverPlan::new(&unit.types, &sig, &abi).unwrap();
        let table = SeedTable::default();
        let files = build_seed_files(&plan, &table, abi.int.size);
        let want = plan.segments.iter().map(|s| table.count(s.fill)).max().unwrap();
        prop_assert_eq!(files.len(), want);
        for f in &files {
            prop_assert_eq!(f.len() as u64, plan.input_len);
        }
        // Distinct patterns of a segment appear across files.
        for s in &plan.segments {
            let seen: std::collections::BTreeSet<&[u8]> =
                files.iter().map(|f| &f[s.offset as usize..(s.offset + s.size) as usize]).collect();
            prop_assert_eq!(seen.len(), table.count(s.fill).min(files.len()));
        }
    }

    #[test]
    fn mutants_are_single_edits_in_the_body(e in expr(), op in rel_op()) {
        let src = format!("int g(int z) {{ return z; }}\nint f(int a, int b) {{ if (a {op} b) return {e}; return 0; }}\n");
        let unit = Unit::parse(&src).unwrap();
        let body = unit.function("f").unwrap().definition.as_ref().unwrap().body_span;
        for m in generate_mutants(&unit, "f", "f.c").unwrap() {
            let text = m.materialize(&src).unwrap();
            prop_assert_ne!(&text, &src);
            let (span, _) = single_edit(&src, &text).unwrap();
            prop_assert!(span.start >= body.start && span.end <= body.end, "{} escapes the body", m.mutant_id);
            prop_assert_eq!(m.revert(&text).unwrap(), src.clone());
        }
    }

    #[test]
    fn havoc_is_reproducible_and_bounded(input in prop::collection::vec(any::<u8>(), 0..256), seed in any::<u64>(), max_len in 1usize..512) {
        let cfg = HavocConfig { max_len, ..HavocConfig::default() };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut trace = Vec::new();
            (havoc_mutate(&input, &mut rng, &cfg, Some(&[1, 2, 3]), &mut trace), trace)
        };
        let (a, ta) = run();
        let (b, tb) = run();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(ta, tb);
        prop_assert!(!a.is_empty());
        prop_assert!(a.len() <= max_len.max(input.len()));
    }

    #[test]
    fn engine_replays_identically(seed in any::<u64>(), edges in prop::collection::vec(0usize..MAP_SIZE, 1..20)) {
        let seeds = vec![vec![0u8; 8], vec![0xFF; 8]];
        let drive = || {
            let mut e = Engine::new(seed, HavocConfig::default(), seeds.clone());
            let mut out = Vec::new();
            for i in 0..40 {
                let (input, _) = e.next_input();
                let mut map = vec![0u8; MAP_SIZE];
                map[edges[i % edges.len()]] = (input.len() % 200) as u8 + 1;
                e.observe(&input, &map, 10, i as u64);
                out.push(input);
            }
            (out, e.pool.len())
        };
        prop_assert_eq!(drive(), drive());
    }

    #[test]
    fn score_ignores_order_and_errors(statuses in prop::collection::vec(prop::sample::select(Status::ALL.to_vec()), 1..40), shift in 0usize..40) {
        let vs: Vec<MutantVerdict> = statuses.iter().enumerate().map(|(i, s)| verdict(i, *s)).collect();
        let mut rotated = vs.clone();
        let n = rotated.len();
        rotated.rotate_left(shift % n);
        prop_assert_eq!(ms_of(&vs), ms_of(&rotated));
        let tested = statuses.iter().filter(|s| s.is_tested()).count();
        let killed = statuses.iter().filter(|s| s.is_killed()).count();
        if tested > 0 {
            let ms = ms_of(&vs).unwrap();
            prop_assert!((0.0..=100.0).contains(&ms));
            prop_assert_eq!(ms, compute_ms(killed as f64, tested as f64).unwrap());
        }
    }
}
