//! Table of operator cases shared by the operator tests and the acceptance
//! harness. Expected replacement sets are built from the formal rule of each
//! operator, independently of the generator.

use mutfuzz_core::mutgen::{candidate_edits, Operator};
use mutfuzz_core::Unit;

pub struct Case {
    pub operator: Operator,
    pub source: &'static str,
    pub expected: Vec<(String, String)>,
}

fn pairs(original: &str, replacements: &[String]) -> Vec<(String, String)> {
    replacements.iter().map(|r| (original.to_string(), r.clone())).collect()
}

fn swap(set: &[&str], token: &str) -> Vec<String> {
    set.iter().filter(|s| **s != token).map(|s| s.to_string()).collect()
}

fn int_text(v: i64) -> String {
    if v < 0 {
        format!("({v})")
    } else {
        v.to_string()
    }
}

fn icr(i: i64) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for x in [1, -1, 0, i + 1, i - 1, -i] {
        let t = int_text(x);
        if x != i && !out.contains(&t) {
            out.push(t);
        }
    }
    out
}

fn deletion(expr: &str, lhs: &str, rhs: &str) -> Vec<(String, String)> {
    pairs(expr, &[lhs.to_string(), rhs.to_string()])
}

fn uoi(v: &str) -> Vec<String> {
    vec![format!("(--{v})"), format!("({v}--)"), format!("(++{v})"), format!("({v}++)")]
}

const ARITH: [&str; 5] = ["+", "-", "*", "/", "%"];
const ARITH_ASSIGN: [&str; 5] = ["+=", "-=", "*=", "/=", "%="];
const REL: [&str; 6] = [">", ">=", "<", "<=", "==", "!="];

pub fn cases() -> Vec<Case> {
    let cat = |parts: Vec<Vec<(String, String)>>| parts.into_iter().flatten().collect::<Vec<_>>();
    vec![
        Case {
            operator: Operator::Abs,
            source: "int f(int a, int b) { return a * b; }",
            expected: cat(vec![pairs("a", &["(-a)".into()]), pairs("b", &["(-b)".into()])]),
        },
        Case {
            operator: Operator::Aor,
            source: "int f(int a, int b) { a += b; return a % b; }",
            expected: cat(vec![pairs("+=", &swap(&ARITH_ASSIGN, "+=")), pairs("%", &swap(&ARITH, "%"))]),
        },
        Case { operator: Operator::Icr, source: "int f(void) { return 5; }", expected: pairs("5", &icr(5)) },
        Case { operator: Operator::Icr, source: "int f(int a) { return a + 0; }", expected: pairs("0", &icr(0)) },
        Case {
            operator: Operator::Lcr,
            source: "int f(int a, int b) { a &= b; return (a && b) || (a & b); }",
            expected: cat(vec![
                pairs("&=", &swap(&["&=", "|="], "&=")),
                pairs("&&", &swap(&["&&", "||"], "&&")),
                pairs("&&", &swap(&["&", "|", "&&"], "&&")),
                pairs("||", &swap(&["&&", "||"], "||")),
                pairs("&", &swap(&["&", "|", "&&"], "&")),
            ]),
        },
        Case {
            operator: Operator::Ror,
            source: "int f(int a, int b) { if (a <= b) return 1; while (a != b) a++; return 0; }",
            expected: cat(vec![
                pairs("a <= b", &["!(a <= b)".into()]),
                pairs("<=", &swap(&REL, "<=")),
                pairs("a != b", &["!(a != b)".into()]),
                pairs("!=", &swap(&REL, "!=")),
            ]),
        },
        Case {
            operator: Operator::Sdl,
            source: "int f(int a) { int b = a; b++; return b; }",
            expected: cat(vec![pairs("b++;", &[";".into()]), pairs("return b;", &[";".into()])]),
        },
        Case { operator: Operator::Uoi, source: "int f(int a) { return a; }", expected: pairs("a", &uoi("a")) },
        Case {
            operator: Operator::Aod,
            source: "void f(int x, int y) { x = x + y; }",
            expected: deletion("x + y", "x", "y"),
        },
        Case { operator: Operator::Lod, source: "int f(int a, int b) { return a || b; }", expected: deletion("a || b", "a", "b") },
        Case { operator: Operator::Rod, source: "int f(int a, int b) { return a >= b; }", expected: deletion("a >= b", "a", "b") },
        Case {
            operator: Operator::Bod,
            source: "int f(int a, int b) { return (a & b) | a; }",
            expected: cat(vec![deletion("(a & b) | a", "(a & b)", "a"), deletion("a & b", "a", "b")]),
        },
        Case {
            operator: Operator::Sod,
            source: "int f(int a, int b) { return a << b; }",
            expected: deletion("a << b", "a", "b"),
        },
        Case {
            operator: Operator::Lvr,
            source: "double f(double x) { return x * 2.5f + 0; }",
            expected: cat(vec![pairs("2.5f", &["(-2.5f)".into(), "0.0f".into()]), pairs("0", &["(-1)".into()])]),
        },
        Case {
            operator: Operator::Lvr,
            source: "int f(int a) { if (a) return true; return false; }",
            expected: cat(vec![pairs("true", &["false".into()]), pairs("false", &["true".into()])]),
        },
    ]
}

/// Edits the generator emits for `case.operator`, as (original, replacement).
pub fn emitted(case: &Case) -> Vec<(String, String)> {
    let unit = Unit::parse(case.source).expect("case parses");
    candidate_edits(&unit, "f")
        .expect("body parses")
        .into_iter()
        .filter(|e| e.operator == case.operator)
        .map(|e| (e.span.text(case.source).to_string(), e.replacement))
        .collect()
}

/// Compares emitted and expected sets for every case; returns the number of
/// cases checked or the first mismatch.
pub fn check_all() -> Result<usize, String> {
    let all = cases();
    for case in &all {
        let mut got = emitted(case);
        let mut want = case.expected.clone();
        got.sort();
        want.sort();
        if got != want {
            return Err(format!("{}: `{}`\n  emitted  {got:?}\n  expected {want:?}", case.operator, case.source));
        }
        if got.iter().any(|(o, r)| o == r) {
            return Err(format!("{}: identity replacement", case.operator));
        }
    }
    let covered: std::collections::BTreeSet<Operator> = all.iter().map(|c| c.operator).collect();
    if covered.len() != Operator::ALL.len() {
        return Err(format!("only {} operators covered", covered.len()));
    }
    Ok(all.len())
}
