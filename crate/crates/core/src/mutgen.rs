//! Source-level mutant generation.
//!
//! Mutants are single contiguous text edits inside the body of one function.
//! Sites are found on the span-carrying tree produced by
//! [`Unit::parse_body`], so every replacement is well-formed by construction
//! (modulo typing, which the compile step checks).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use sha2::{Digest, Sha256};

use crate::ast::{BinOp, Expr, ExprKind, Initializer, PostfixOp, Span, Stmt, StmtKind, UnaryOp};
use crate::error::ParseError;
use crate::lexer::parse_int_literal;
use crate::parser::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Operator {
    Abs,
    Aor,
    Icr,
    Lcr,
    Ror,
    Sdl,
    Uoi,
    Aod,
    Lod,
    Rod,
    Bod,
    Sod,
    Lvr,
}

impl Operator {
    pub const ALL: [Operator; 13] = [
        Operator::Abs,
        Operator::Aor,
        Operator::Icr,
        Operator::Lcr,
        Operator::Ror,
        Operator::Sdl,
        Operator::Uoi,
        Operator::Aod,
        Operator::Lod,
        Operator::Rod,
        Operator::Bod,
        Operator::Sod,
        Operator::Lvr,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Operator::Abs => "ABS",
            Operator::Aor => "AOR",
            Operator::Icr => "ICR",
            Operator::Lcr => "LCR",
            Operator::Ror => "ROR",
            Operator::Sdl => "SDL",
            Operator::Uoi => "UOI",
            Operator::Aod => "AOD",
            Operator::Lod => "LOD",
            Operator::Rod => "ROD",
            Operator::Bod => "BOD",
            Operator::Sod => "SOD",
            Operator::Lvr => "LVR",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operator::ALL.into_iter().find(|o| o.id().eq_ignore_ascii_case(s)).ok_or_else(|| format!("unknown operator `{s}`"))
    }
}

/// One mutation of one translation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MutantSpec {
    pub mutant_id: String,
    /// `None` for mutants imported from an external generator.
    pub operator: Option<Operator>,
    pub function: String,
    pub file: String,
    pub span: Span,
    pub original: String,
    pub replacement: String,
    /// SHA-256 (hex) of the unit text the span refers to.
    pub checksum: String,
    /// SHA-256 (hex) of the optimized object code, filled by the TCE step.
    pub object_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("mutant {0}: source changed since the mutant was generated")]
    StaleSpan(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

impl MutantSpec {
    /// The full unit with the replacement applied.
    pub fn materialize(&self, source: &str) -> Result<String, MutationError> {
        if sha256_hex(source.as_bytes()) != self.checksum
            || source.get(self.span.range()) != Some(self.original.as_str())
        {
            return Err(MutationError::StaleSpan(self.mutant_id.clone()));
        }
        let mut out = String::with_capacity(source.len() + self.replacement.len());
        out.push_str(&source[..self.span.start]);
        out.push_str(&self.replacement);
        out.push_str(&source[self.span.end..]);
        Ok(out)
    }

    /// Inverse of [`MutantSpec::materialize`].
    pub fn revert(&self, mutated: &str) -> Result<String, MutationError> {
        let end = self.span.start + self.replacement.len();
        if mutated.get(self.span.start..end) != Some(self.replacement.as_str()) {
            return Err(MutationError::StaleSpan(self.mutant_id.clone()));
        }
        let mut out = String::with_capacity(mutated.len());
        out.push_str(&mutated[..self.span.start]);
        out.push_str(&self.original);
        out.push_str(&mutated[end..]);
        Ok(out)
    }

    /// Span of the replacement inside the mutated text.
    pub fn mutated_span(&self) -> Span {
        Span::new(self.span.start, self.span.start + self.replacement.len())
    }
}

/// The single contiguous edit turning `original` into `mutated`, as
/// (span in `original`, replacement text). `None` when the texts are equal.
pub fn single_edit(original: &str, mutated: &str) -> Option<(Span, String)> {
    if original == mutated {
        return None;
    }
    let a = original.as_bytes();
    let b = mutated.as_bytes();
    let mut prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let max_suffix = a.len().min(b.len()) - prefix;
    let mut suffix = a.iter().rev().zip(b.iter().rev()).take(max_suffix).take_while(|(x, y)| x == y).count();
    // Keep the cut on char boundaries.
    while !original.is_char_boundary(prefix) || !mutated.is_char_boundary(prefix) {
        prefix -= 1;
    }
    while !original.is_char_boundary(a.len() - suffix) || !mutated.is_char_boundary(b.len() - suffix) {
        suffix -= 1;
    }
    Some((Span::new(prefix, a.len() - suffix), mutated[prefix..b.len() - suffix].to_string()))
}

/// A candidate edit before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edit {
    pub span: Span,
    pub operator: Operator,
    pub replacement: String,
}

const ARITH: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem];
const REL: [BinOp; 6] = [BinOp::Gt, BinOp::Ge, BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne];

/// Replacement operators for an operator token, per mutation operator.
pub fn operator_replacements(op: Operator, token: &str) -> Vec<&'static str> {
    let pick = |set: &[&'static str]| -> Vec<&'static str> {
        if set.contains(&token) {
            let mut v: Vec<&'static str> = set.iter().copied().filter(|s| *s != token).collect();
            v.dedup();
            v
        } else {
            Vec::new()
        }
    };
    match op {
        Operator::Aor => {
            let mut v = pick(&["+", "-", "*", "/", "%"]);
            v.extend(pick(&["+=", "-=", "*=", "/=", "%="]));
            v
        }
        Operator::Lcr => {
            let mut v = pick(&["&&", "||"]);
            v.extend(pick(&["&=", "|="]));
            for r in pick(&["&", "|", "&&"]) {
                if !v.contains(&r) {
                    v.push(r);
                }
            }
            v
        }
        Operator::Ror => pick(&[">", ">=", "<", "<=", "==", "!="]),
        _ => Vec::new(),
    }
}

/// ICR replacement values for integer literal `i`, in table order, without
/// the original value and without repeats.
pub fn icr_values(i: i128) -> Vec<i128> {
    let mut out = Vec::new();
    for x in [Some(1), Some(-1), Some(0), i.checked_add(1), i.checked_sub(1), i.checked_neg()].into_iter().flatten() {
        if x != i && !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn render_int(v: i128, suffix: &str) -> String {
    if v < 0 {
        format!("({v}{suffix})")
    } else {
        format!("{v}{suffix}")
    }
}

struct Walker<'a> {
    src: &'a str,
    unit: &'a Unit,
    params: &'a [String],
    edits: Vec<Edit>,
}

/// How an identifier occurrence is used by its parent.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Use {
    Value,
    /// Assignment target, `++`/`--` operand, `&` operand, member/index base,
    /// callee, `sizeof` operand: not a value use of a variable.
    NotValue,
}

impl Walker<'_> {
    fn push(&mut self, span: Span, operator: Operator, replacement: String) {
        if span.text(self.src) != replacement {
            self.edits.push(Edit { span, operator, replacement });
        }
    }

    fn is_variable(&self, name: &str) -> bool {
        if self.params.iter().any(|p| p == name) {
            return true;
        }
        if matches!(name, "true" | "false") {
            return false;
        }
        self.unit.types.enum_constant(name).is_none() && self.unit.function(name).is_none()
    }

    fn stmt(&mut self, s: &Stmt, deletable: bool) {
        if deletable
            && matches!(
                s.kind,
                StmtKind::Expr(_)
                    | StmtKind::Return(_)
                    | StmtKind::Break
                    | StmtKind::Continue
                    | StmtKind::Goto(_)
                    | StmtKind::If { .. }
                    | StmtKind::While { .. }
                    | StmtKind::DoWhile { .. }
                    | StmtKind::For { .. }
                    | StmtKind::Switch { .. }
            )
        {
            self.push(s.span, Operator::Sdl, ";".to_string());
        }
        match &s.kind {
            StmtKind::Compound(items) => items.iter().for_each(|i| self.stmt(i, true)),
            StmtKind::Decl(inits) => inits.iter().for_each(|i| self.init(i)),
            StmtKind::Expr(e) => self.expr(e, Use::Value),
            StmtKind::Empty | StmtKind::Break | StmtKind::Continue | StmtKind::Goto(_) => {}
            StmtKind::If { cond, then, otherwise } => {
                self.negate_condition(cond);
                self.expr(cond, Use::Value);
                self.stmt(then, true);
                if let Some(o) = otherwise {
                    self.stmt(o, true);
                }
            }
            StmtKind::While { cond, body } => {
                self.negate_condition(cond);
                self.expr(cond, Use::Value);
                self.stmt(body, true);
            }
            StmtKind::DoWhile { body, cond } => {
                self.stmt(body, true);
                self.negate_condition(cond);
                self.expr(cond, Use::Value);
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i, false);
                }
                if let Some(c) = cond {
                    self.expr(c, Use::Value);
                }
                if let Some(st) = step {
                    self.expr(st, Use::Value);
                }
                self.stmt(body, true);
            }
            StmtKind::Switch { cond, body } => {
                self.expr(cond, Use::Value);
                self.stmt(body, true);
            }
            StmtKind::Case { value, body } => {
                self.expr(value, Use::Value);
                self.stmt(body, true);
            }
            StmtKind::Default(body) | StmtKind::Labeled { body, .. } => self.stmt(body, true),
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    self.expr(v, Use::Value);
                }
            }
        }
    }

    fn init(&mut self, i: &Initializer) {
        match i {
            Initializer::Expr(e) => self.expr(e, Use::Value),
            Initializer::List(items) => items.iter().for_each(|i| self.init(i)),
        }
    }

    fn negate_condition(&mut self, cond: &Expr) {
        let text = cond.span.text(self.src);
        self.push(cond.span, Operator::Ror, format!("!({text})"));
    }

    fn operator_swaps(&mut self, op_span: Span, operators: &[Operator]) {
        let token = op_span.text(self.src);
        for &o in operators {
            for r in operator_replacements(o, token) {
                self.push(op_span, o, r.to_string());
            }
        }
    }

    fn expr(&mut self, e: &Expr, usage: Use) {
        match &e.kind {
            ExprKind::Ident(name) => {
                if usage == Use::Value && self.is_variable(name) {
                    self.push(e.span, Operator::Abs, format!("(-{name})"));
                    for r in [format!("(--{name})"), format!("({name}--)"), format!("(++{name})"), format!("({name}++)")] {
                        self.push(e.span, Operator::Uoi, r);
                    }
                }
                if matches!(name.as_str(), "true" | "false") {
                    let flip = if name == "true" { "false" } else { "true" };
                    self.push(e.span, Operator::Lvr, flip.to_string());
                }
            }
            ExprKind::IntLit => {
                let text = e.span.text(self.src);
                if let Some((v, suffix)) = parse_int_literal(text) {
                    if let Ok(v) = i128::try_from(v) {
                        for x in icr_values(v) {
                            self.push(e.span, Operator::Icr, render_int(x, suffix));
                        }
                        self.literal_value_replacements(e.span, v == 0, "0", "-1");
                    }
                }
            }
            ExprKind::FloatLit => {
                let text = e.span.text(self.src);
                let zero = is_zero_float(text);
                let suffix = float_suffix(text);
                let zero_lit = format!("0.0{suffix}");
                let minus_one = format!("-1.0{suffix}");
                self.literal_value_replacements(e.span, zero, &zero_lit, &minus_one);
            }
            ExprKind::CharLit => {
                let zero = crate::lexer::parse_char_literal(e.span.text(self.src)) == Some(0);
                self.literal_value_replacements(e.span, zero, "0", "-1");
            }
            ExprKind::StrLit | ExprKind::SizeofType(_) => {}
            ExprKind::Paren(inner) => self.expr(inner, usage),
            ExprKind::Unary { op, operand } => {
                let child = match op {
                    UnaryOp::AddrOf | UnaryOp::PreInc | UnaryOp::PreDec | UnaryOp::Deref => Use::NotValue,
                    _ => Use::Value,
                };
                self.expr(operand, child);
            }
            ExprKind::Postfix { op: PostfixOp::Inc | PostfixOp::Dec, operand } => self.expr(operand, Use::NotValue),
            ExprKind::Binary { op, op_span, lhs, rhs } => {
                let deletion = match op {
                    o if ARITH.contains(o) => Some(Operator::Aod),
                    BinOp::LogAnd | BinOp::LogOr => Some(Operator::Lod),
                    o if REL.contains(o) => Some(Operator::Rod),
                    BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => Some(Operator::Bod),
                    BinOp::Shl | BinOp::Shr => Some(Operator::Sod),
                    _ => None,
                };
                self.operator_swaps(*op_span, &[Operator::Aor, Operator::Lcr, Operator::Ror]);
                if let Some(d) = deletion {
                    self.push(e.span, d, lhs.span.text(self.src).to_string());
                    self.push(e.span, d, rhs.span.text(self.src).to_string());
                }
                self.expr(lhs, Use::Value);
                self.expr(rhs, Use::Value);
            }
            ExprKind::Assign { op_span, lhs, rhs, .. } => {
                self.operator_swaps(*op_span, &[Operator::Aor, Operator::Lcr]);
                let target = if matches!(lhs.unparen().kind, ExprKind::Ident(_)) { Use::NotValue } else { Use::Value };
                self.expr(lhs, target);
                self.expr(rhs, Use::Value);
            }
            ExprKind::Conditional { cond, then, otherwise } => {
                self.expr(cond, Use::Value);
                self.expr(then, Use::Value);
                self.expr(otherwise, Use::Value);
            }
            ExprKind::Cast { expr, .. } => self.expr(expr, Use::Value),
            ExprKind::Call { callee, args } => {
                self.expr(callee, Use::NotValue);
                args.iter().for_each(|a| self.expr(a, Use::Value));
            }
            ExprKind::Index { base, index } => {
                self.expr(base, Use::NotValue);
                self.expr(index, Use::Value);
            }
            ExprKind::Member { base, .. } => self.expr(base, Use::NotValue),
            ExprKind::Comma { lhs, rhs } => {
                self.expr(lhs, Use::Value);
                self.expr(rhs, Use::Value);
            }
            ExprKind::SizeofExpr(_) => {}
            ExprKind::CompoundLiteral { init, .. } => init.iter().for_each(|i| self.init(i)),
        }
    }

    /// LVR: `0 -> -1`, `l -> -l`, `l -> 0`.
    fn literal_value_replacements(&mut self, span: Span, is_zero: bool, zero: &str, minus_one: &str) {
        let text = span.text(self.src);
        if is_zero {
            self.push(span, Operator::Lvr, format!("({minus_one})"));
        } else {
            self.push(span, Operator::Lvr, format!("(-{text})"));
            self.push(span, Operator::Lvr, zero.to_string());
        }
    }
}

fn float_suffix(text: &str) -> &str {
    match text.as_bytes().last() {
        Some(b'f' | b'F' | b'l' | b'L') if !text.starts_with("0x") && !text.starts_with("0X") => &text[text.len() - 1..],
        _ => "",
    }
}

fn is_zero_float(text: &str) -> bool {
    let body = text.trim_end_matches(['f', 'F', 'l', 'L']);
    let mantissa = body.split(['e', 'E']).next().unwrap_or(body);
    !mantissa.is_empty() && mantissa.bytes().all(|b| b == b'0' || b == b'.')
}

/// All candidate edits in the body of `function`, in source order.
pub fn candidate_edits(unit: &Unit, function: &str) -> Result<Vec<Edit>, ParseError> {
    let body = unit.parse_body(function)?;
    let params: Vec<String> =
        unit.function(function).map(|f| f.param_names.iter().flatten().cloned().collect()).unwrap_or_default();
    let mut w = Walker { src: &unit.source, unit, params: &params, edits: Vec::new() };
    if let StmtKind::Compound(items) = &body.kind {
        items.iter().for_each(|s| w.stmt(s, true));
    }
    let mut edits = w.edits;
    edits.sort_by(|a, b| {
        (a.span.start, a.span.end, a.operator, &a.replacement).cmp(&(b.span.start, b.span.end, b.operator, &b.replacement))
    });
    edits.dedup();
    Ok(edits)
}

/// Generates every mutant of `function` with ids `<function>-<nnnn>-<OP>`.
pub fn generate_mutants(unit: &Unit, function: &str, file: &str) -> Result<Vec<MutantSpec>, ParseError> {
    let checksum = sha256_hex(unit.source.as_bytes());
    Ok(candidate_edits(unit, function)?
        .into_iter()
        .enumerate()
        .map(|(i, e)| MutantSpec {
            mutant_id: format!("{function}-{:04}-{}", i + 1, e.operator),
            operator: Some(e.operator),
            function: function.to_string(),
            file: file.to_string(),
            original: e.span.text(&unit.source).to_string(),
            span: e.span,
            replacement: e.replacement,
            checksum: checksum.clone(),
            object_hash: None,
        })
        .collect())
}

/// Builds a spec from an externally produced mutant file of the same unit.
pub fn import_mutant(
    original: &str,
    mutated: &str,
    mutant_id: &str,
    function: &str,
    file: &str,
) -> Option<MutantSpec> {
    let (span, replacement) = single_edit(original, mutated)?;
    Some(MutantSpec {
        mutant_id: mutant_id.to_string(),
        operator: None,
        function: function.to_string(),
        file: file.to_string(),
        original: span.text(original).to_string(),
        span,
        replacement,
        checksum: sha256_hex(original.as_bytes()),
        object_hash: None,
    })
}
