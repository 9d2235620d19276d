//! C driver programs: fuzz driver, false-positive driver, output-capture
//! driver, regression test driver, and the mutant injection that makes the
//! original and the mutated function coexist in one translation unit.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::ast::Span;
use crate::ctype::{CType, PrimitiveClass, TypeId, TypeTable};
use crate::layout::{compute_layout, AbiProfile, LayoutError};
use crate::lexer::{tokenize, TokenKind};
use crate::mutgen::{MutantSpec, MutationError};
use crate::parser::Unit;
use crate::signature::{Direction, FunctionSignature, ParamKind, ReturnKind};

pub const CALLING_ORIGINAL: &str = "Calling the original function";
pub const CALLING_MUTATED: &str = "Calling the mutated function";
pub const COMPARING: &str = "Comparing result values:";
pub const MUTANT_KILLED: &str = "Mutant killed";
pub const MUTANT_ALIVE: &str = "Mutant alive";
pub const PASS: &str = "PASS";

/// Every checkpoint in the order a driver emits them.
pub const CHECKPOINTS: [&str; 5] = [CALLING_ORIGINAL, CALLING_MUTATED, COMPARING, MUTANT_KILLED, MUTANT_ALIVE];

/// Prefix of the mutated copy of the function under test.
pub const MUTANT_PREFIX: &str = "mut_";
/// A `main` defined by the subject is renamed to this.
pub const SUBJECT_MAIN: &str = "mutfuzz_subject_main";
/// Header of the driver runtime.
pub const RUNTIME_HEADER: &str = "mutfuzz_rt.h";

/// How seed bytes for a segment are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentFill {
    /// `count` consecutive primitives of `width` bytes.
    Primitive { class: PrimitiveClass, width: u64 },
    /// Treated as an array of `int`.
    IntArray,
    /// An ISO 8601 timestamp string buffer.
    Timestamp,
}

/// Bytes of the input file that populate one parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub param: String,
    pub offset: u64,
    pub size: u64,
    pub fill: SegmentFill,
}

/// One output compared after both calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompareEntry {
    /// Parameter name or `return`.
    pub label: String,
    /// Byte length of the compared region; for pointer returns, the pointee
    /// region (the NULL flag is compared separately).
    pub size: u64,
    pub pointer_return: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VarPlan {
    name: String,
    /// Declaration of the variable with `{}` standing for its name.
    decl: String,
    kind: ParamKind,
    direction: Direction,
    nul_terminated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverPlan {
    pub function: String,
    pub segments: Vec<Segment>,
    pub compare: Vec<CompareEntry>,
    pub input_len: u64,
    pub reset: Option<String>,
    vars: Vec<VarPlan>,
    /// Declaration of the return variable with `{}` for its name.
    ret_decl: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DriverError {
    #[error("parameter `{param}` cannot be declared: {reason}")]
    UnsupportedParam { param: String, reason: String },
    #[error("`{0}` is already defined in the unit")]
    NameCollision(String),
    #[error("function `{0}` has no definition in the unit")]
    NoDefinition(String),
    #[error("mutant {0} edits text outside the function under test")]
    OutsideFunction(String),
    #[error("output `{label}` has {got} bytes, expected {want}")]
    LengthMismatch { label: String, got: usize, want: u64 },
    #[error(transparent)]
    Mutation(#[from] MutationError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

fn spell(types: &TypeTable, ty: TypeId, param: &str) -> Result<String, DriverError> {
    types.spell(ty, "{}").ok_or_else(|| DriverError::UnsupportedParam {
        param: param.to_string(),
        reason: format!("type `{}` has no name usable in a declaration", types.display_name(ty)),
    })
}

fn fill_of(types: &TypeTable, ty: TypeId, abi: &AbiProfile) -> SegmentFill {
    match types.get(types.resolve(ty)) {
        CType::Primitive(p) => match p.class() {
            Some(class) => SegmentFill::Primitive { class, width: abi.scalar(*p).map_or(4, |s| s.size) },
            None => SegmentFill::IntArray,
        },
        CType::Enum { .. } => SegmentFill::Primitive { class: PrimitiveClass::SignedInt, width: abi.enum_layout().size },
        CType::Array { elem, .. } => fill_of(types, *elem, abi),
        CType::Pointer { .. } => SegmentFill::Primitive { class: PrimitiveClass::UnsignedInt, width: abi.pointer.size },
        _ => SegmentFill::IntArray,
    }
}

impl DriverPlan {
    pub fn new(types: &TypeTable, sig: &FunctionSignature, abi: &AbiProfile) -> Result<DriverPlan, DriverError> {
        let mut vars = Vec::new();
        let mut segments = Vec::new();
        let mut compare = Vec::new();
        let mut offset = 0u64;
        for p in &sig.params {
            let (decl, size, fill) = match p.kind {
                ParamKind::Value => {
                    let l = compute_layout(types, p.ty, abi)?;
                    (spell(types, p.ty, &p.name)?, l.size, fill_of(types, p.ty, abi))
                }
                ParamKind::Buffer { elem, count } => {
                    let l = compute_layout(types, elem, abi)?;
                    let decl = spell(types, elem, &p.name)?.replace("{}", &format!("{{}}[{count}]"));
                    let fill = if p.timestamp { SegmentFill::Timestamp } else { fill_of(types, elem, abi) };
                    (decl, l.size * count, fill)
                }
                ParamKind::Opaque => (spell(types, p.ty, &p.name)?, 0, SegmentFill::IntArray),
            };
            if p.kind != ParamKind::Opaque {
                if p.direction.is_input() {
                    segments.push(Segment { param: p.name.clone(), offset, size, fill });
                    offset += size;
                }
                if p.direction.is_output() {
                    compare.push(CompareEntry { label: p.name.clone(), size, pointer_return: false });
                }
            }
            vars.push(VarPlan {
                name: p.name.clone(),
                decl,
                kind: p.kind,
                direction: p.direction,
                nul_terminated: p.nul_terminated,
            });
        }
        let ret_decl = match sig.ret_kind {
            ReturnKind::Void => None,
            ReturnKind::Value => {
                let l = compute_layout(types, sig.ret, abi)?;
                compare.push(CompareEntry { label: "return".into(), size: l.size, pointer_return: false });
                Some(spell(types, sig.ret, "return")?)
            }
            ReturnKind::Pointer { elem, count } => {
                let elem_size = if count == 0 { 0 } else { compute_layout(types, elem, abi)?.size };
                compare.push(CompareEntry { label: "return".into(), size: elem_size * count, pointer_return: true });
                Some(spell(types, sig.ret, "return")?)
            }
        };
        Ok(DriverPlan {
            function: sig.name.clone(),
            segments,
            compare,
            input_len: offset,
            reset: sig.reset.clone(),
            vars,
            ret_decl,
        })
    }

    fn declare_set(&self, out: &mut String, prefix: &str) {
        for v in &self.vars {
            let name = format!("{prefix}_{}", v.name);
            let _ = writeln!(out, "    {};", v.decl.replace("{}", &name));
            let _ = writeln!(out, "    __builtin_memset(&{name}, 0, sizeof({name}));");
        }
        if let Some(d) = &self.ret_decl {
            let name = format!("{prefix}_return");
            let _ = writeln!(out, "    {};", d.replace("{}", &name));
            let _ = writeln!(out, "    __builtin_memset(&{name}, 0, sizeof({name}));");
        }
    }

    fn fill_set(&self, out: &mut String, prefix: &str) {
        for v in &self.vars {
            if v.kind == ParamKind::Opaque || !v.direction.is_input() {
                continue;
            }
            let name = format!("{prefix}_{}", v.name);
            let _ = writeln!(out, "    get_value(&{name}, sizeof({name}), 0);");
            if v.nul_terminated {
                let _ = writeln!(out, "    {name}[sizeof({name}) / sizeof({name}[0]) - 1] = 0;");
            }
        }
    }

    fn call(&self, out: &mut String, prefix: &str, callee: &str) {
        let args: Vec<String> = self
            .vars
            .iter()
            .map(|v| match v.kind {
                ParamKind::Buffer { .. } => format!("{prefix}_{}", v.name),
                ParamKind::Value | ParamKind::Opaque => format!("{prefix}_{}", v.name),
            })
            .collect();
        let call = format!("{callee}({})", args.join(", "));
        if self.ret_decl.is_some() {
            let _ = writeln!(out, "    {prefix}_return = {call};");
        } else {
            let _ = writeln!(out, "    {call};");
        }
    }

    fn compare_all(&self, out: &mut String) {
        for c in &self.compare {
            let a = format!("origin_{}", c.label);
            let b = format!("mut_{}", c.label);
            if c.pointer_return {
                let _ = writeln!(out, "    mutfuzz_diff += ({a} == 0) != ({b} == 0);");
                if c.size > 0 {
                    let _ = writeln!(out, "    if ({a} && {b})");
                    let _ = writeln!(out, "        mutfuzz_diff += compare_value({a}, {b}, {});", c.size);
                }
            } else {
                let _ = writeln!(out, "    mutfuzz_diff += compare_value(&{a}, &{b}, sizeof({a}));");
            }
        }
    }

    fn differential(&self, unit_include: &str, second_callee: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#include \"{RUNTIME_HEADER}\"");
        let _ = writeln!(out, "#include \"{unit_include}\"");
        out.push('\n');
        out.push_str("int main(int argc, char **argv) {\n");
        out.push_str("    int mutfuzz_diff = 0;\n");
        out.push_str("    load_file(argc > 1 ? argv[1] : 0);\n");
        self.declare_set(&mut out, "origin");
        self.declare_set(&mut out, "mut");
        out.push('\n');
        self.fill_set(&mut out, "origin");
        let _ = writeln!(out, "    log_checkpoint(\"{CALLING_ORIGINAL}\");");
        self.call(&mut out, "origin", &self.function);
        out.push('\n');
        if let Some(reset) = &self.reset {
            for line in reset.lines() {
                let _ = writeln!(out, "    {line}");
            }
        }
        out.push_str("    seek_data_index(0);\n");
        self.fill_set(&mut out, "mut");
        let _ = writeln!(out, "    log_checkpoint(\"{CALLING_MUTATED}\");");
        self.call(&mut out, "mut", second_callee);
        out.push('\n');
        let _ = writeln!(out, "    log_checkpoint(\"{COMPARING}\");");
        self.compare_all(&mut out);
        out.push_str("    if (mutfuzz_diff != 0) {\n");
        let _ = writeln!(out, "        log_checkpoint(\"{MUTANT_KILLED}\");");
        out.push_str("        safe_abort();\n    }\n");
        let _ = writeln!(out, "    log_checkpoint(\"{MUTANT_ALIVE}\");");
        out.push_str("    return 0;\n}\n");
        out
    }

    /// Fuzz driver: original call, cursor reset, mutant call, comparison.
    /// `unit_include` names the file holding the injected unit.
    pub fn gen_fuzz_driver(&self, unit_include: &str) -> String {
        self.differential(unit_include, &format!("{MUTANT_PREFIX}{}", self.function))
    }

    /// Same program with the second call going to the original function.
    pub fn gen_fp_driver(&self, unit_include: &str) -> String {
        self.differential(unit_include, &self.function)
    }

    fn single_call_prologue(&self, out: &mut String) {
        self.declare_set(out, "origin");
        self.fill_set(out, "origin");
        let _ = writeln!(out, "    log_checkpoint(\"{CALLING_ORIGINAL}\");");
        self.call(out, "origin", &self.function);
    }

    /// Runs the original once and prints every compared output as
    /// `OUT <label> <hex>` lines (pointer returns add `OUT return_null <0|1>`).
    pub fn gen_capture_driver(&self, unit_include: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#include \"{RUNTIME_HEADER}\"");
        let _ = writeln!(out, "#include \"{unit_include}\"");
        out.push_str("\nint main(int argc, char **argv) {\n");
        out.push_str("    load_file(argc > 1 ? argv[1] : 0);\n");
        self.single_call_prologue(&mut out);
        for c in &self.compare {
            let v = format!("origin_{}", c.label);
            if c.pointer_return {
                let _ = writeln!(out, "    dump_hex(\"return_null\", \"\", 0, {v} == 0);");
                let _ = writeln!(out, "    if ({v}) dump_hex(\"{}\", {v}, {}, 0);", c.label, c.size);
            } else {
                let _ = writeln!(out, "    dump_hex(\"{}\", &{v}, sizeof({v}), 0);", c.label);
            }
        }
        out.push_str("    return 0;\n}\n");
        out
    }

    /// Regression test driver embedding the killing input and the outputs
    /// observed on the original. `observed` holds one entry per compare
    /// entry, in order; a pointer return that was NULL is given as `None`.
    pub fn gen_test_driver(
        &self,
        unit_include: &str,
        killing_input: &[u8],
        observed: &[Option<Vec<u8>>],
    ) -> Result<String, DriverError> {
        if observed.len() != self.compare.len() {
            return Err(DriverError::LengthMismatch {
                label: "outputs".into(),
                got: observed.len(),
                want: self.compare.len() as u64,
            });
        }
        let mut out = String::new();
        let _ = writeln!(out, "#include \"{RUNTIME_HEADER}\"");
        let _ = writeln!(out, "#include \"{unit_include}\"");
        out.push_str("\n/* input that kills the mutant */\n");
        write_byte_array(&mut out, "input_data", killing_input);
        out.push_str("/* expected values */\n");
        for (c, obs) in self.compare.iter().zip(observed) {
            match obs {
                Some(bytes) => {
                    if bytes.len() as u64 != c.size {
                        return Err(DriverError::LengthMismatch {
                            label: c.label.clone(),
                            got: bytes.len(),
                            want: c.size,
                        });
                    }
                    write_byte_array(&mut out, &format!("ex_{}", c.label), bytes);
                }
                None if c.pointer_return => {}
                None => {
                    return Err(DriverError::LengthMismatch { label: c.label.clone(), got: 0, want: c.size });
                }
            }
        }
        out.push_str("\nint main(void) {\n");
        out.push_str("    load_buffer(input_data, sizeof(input_data));\n");
        self.single_call_prologue(&mut out);
        out.push_str("    /* outputs of the original function */\n");
        for c in &self.compare {
            let v = format!("origin_{}", c.label);
            if c.pointer_return {
                let _ = writeln!(out, "    if ({v}) print_bytes(\"{}\", {v}, {});", c.label, c.size);
                let _ = writeln!(out, "    else print_bytes(\"{} (NULL)\", \"\", 0);", c.label);
            } else {
                let _ = writeln!(out, "    print_bytes(\"{}\", &{v}, sizeof({v}));", c.label);
            }
        }
        out.push_str("    /* assertions */\n");
        for (c, obs) in self.compare.iter().zip(observed) {
            let v = format!("origin_{}", c.label);
            match (c.pointer_return, obs) {
                (true, None) => {
                    let _ = writeln!(out, "    check_true(\"{} is NULL\", {v} == 0);", c.label);
                }
                (true, Some(_)) => {
                    let _ = writeln!(out, "    check_true(\"{} is not NULL\", {v} != 0);", c.label);
                    if c.size > 0 {
                        let _ = writeln!(out, "    check_equal(\"{0}\", {v}, ex_{0}, {1});", c.label, c.size);
                    }
                }
                (false, _) => {
                    let _ = writeln!(out, "    check_equal(\"{0}\", &{v}, ex_{0}, sizeof({v}));", c.label);
                }
            }
        }
        let _ = writeln!(out, "    log_checkpoint(\"{PASS}\");");
        out.push_str("    return 0;\n}\n");
        Ok(out)
    }

}

fn write_byte_array(out: &mut String, name: &str, bytes: &[u8]) {
    // A zero-length array is not valid C; keep one padding byte.
    let n = bytes.len().max(1);
    let _ = write!(out, "static const unsigned char {name}[{n}] = {{");
    if bytes.is_empty() {
        out.push_str("0");
    }
    for (i, b) in bytes.iter().enumerate() {
        if i % 16 == 0 {
            out.push_str("\n    ");
        }
        let _ = write!(out, "0x{b:02X},");
    }
    out.push_str("\n};\n");
}

/// Parses capture-driver output into one entry per compare entry.
pub fn parse_capture(plan: &DriverPlan, stdout: &str) -> Option<Vec<Option<Vec<u8>>>> {
    let mut values: Vec<(String, Vec<u8>)> = Vec::new();
    for line in stdout.lines() {
        let Some(rest) = line.strip_prefix("OUT ") else { continue };
        let mut it = rest.splitn(2, ' ');
        let label = it.next()?.to_string();
        let hex = it.next().unwrap_or("").trim();
        let bytes = (0..hex.len() / 2)
            .map(|i| u8::from_str_radix(hex.get(2 * i..2 * i + 2)?, 16).ok())
            .collect::<Option<Vec<u8>>>()?;
        values.push((label, bytes));
    }
    let find = |label: &str| values.iter().find(|(l, _)| l == label).map(|(_, b)| b.clone());
    plan.compare
        .iter()
        .map(|c| {
            if c.pointer_return {
                let null = find("return_null")?;
                if null.first() == Some(&1) {
                    Some(None)
                } else {
                    Some(Some(find(&c.label).unwrap_or_default()))
                }
            } else {
                find(&c.label).map(Some)
            }
        })
        .collect()
}

/// Returns the unit text with the original function untouched and a
/// `mut_`-prefixed mutated copy inserted right after it. Recursive calls in
/// the copy target the copy. A `main` defined by the subject is renamed.
pub fn inject_mutant(unit: &Unit, mutant: Option<&MutantSpec>, function: &str) -> Result<String, DriverError> {
    let mutated_name = format!("{MUTANT_PREFIX}{function}");
    if unit.function(&mutated_name).is_some() || unit.globals.iter().any(|g| g.name == mutated_name) {
        return Err(DriverError::NameCollision(mutated_name));
    }
    let decl = unit.function(function).ok_or_else(|| DriverError::NoDefinition(function.to_string()))?;
    let def = decl.definition.as_ref().ok_or_else(|| DriverError::NoDefinition(function.to_string()))?;
    let src = unit.source.as_str();

    let mut def_text = def.span.text(src).to_string();
    if let Some(m) = mutant {
        if !def.body_span.contains(m.span) {
            return Err(DriverError::OutsideFunction(m.mutant_id.clone()));
        }
        let full = m.materialize(src)?;
        let delta = m.replacement.len() as isize - m.original.len() as isize;
        let end = (def.span.end as isize + delta) as usize;
        def_text = full[def.span.start..end].to_string();
    }
    let renamed = rename_identifier(&def_text, function, &mutated_name);

    let mut out = String::with_capacity(src.len() + renamed.len() + 64);
    let main_span = unit.function("main").and_then(|f| f.definition.as_ref()).map(|d| d.name_span);
    let head = &src[..def.span.end];
    let tail = &src[def.span.end..];
    push_renaming_main(&mut out, head, 0, main_span);
    out.push_str("\n\n");
    out.push_str(&renamed);
    push_renaming_main(&mut out, tail, def.span.end, main_span);
    Ok(out)
}

fn push_renaming_main(out: &mut String, text: &str, base: usize, main: Option<Span>) {
    match main {
        Some(s) if s.start >= base && s.end <= base + text.len() => {
            out.push_str(&text[..s.start - base]);
            out.push_str(SUBJECT_MAIN);
            out.push_str(&text[s.end - base..]);
        }
        _ => out.push_str(text),
    }
}

/// Replaces every identifier token `from` with `to`.
pub fn rename_identifier(text: &str, from: &str, to: &str) -> String {
    let Ok(tokens) = tokenize(text) else { return text.to_string() };
    let mut out = String::with_capacity(text.len() + 16);
    let mut last = 0;
    for t in tokens {
        if t.kind == TokenKind::Ident && &text[t.start..t.end] == from {
            out.push_str(&text[last..t.start]);
            out.push_str(to);
            last = t.end;
        }
    }
    out.push_str(&text[last..]);
    out
}

/// The unit with a subject-defined `main` renamed, for drivers that only
/// call the original function.
pub fn subject_without_main(unit: &Unit) -> String {
    let mut out = String::with_capacity(unit.source.len());
    let main_span = unit.function("main").and_then(|f| f.definition.as_ref()).map(|d| d.name_span);
    push_renaming_main(&mut out, &unit.source, 0, main_span);
    out
}
