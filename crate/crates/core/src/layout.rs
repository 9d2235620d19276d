//! Byte layout of C types under an explicit ABI profile.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ctype::{CType, PrimKind, RecordKind, TypeId, TypeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalarLayout {
    pub size: u64,
    /// Alignment used when the scalar is a member of an aggregate.
    pub align: u64,
}

impl ScalarLayout {
    pub const fn new(size: u64, align: u64) -> Self {
        ScalarLayout { size, align }
    }
}

/// Primitive sizes and alignments of a target.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AbiProfile {
    pub name: String,
    pub little_endian: bool,
    pub bool_: ScalarLayout,
    pub char_: ScalarLayout,
    pub short: ScalarLayout,
    pub int: ScalarLayout,
    pub long: ScalarLayout,
    pub long_long: ScalarLayout,
    pub float: ScalarLayout,
    pub double: ScalarLayout,
    pub long_double: ScalarLayout,
    pub pointer: ScalarLayout,
}

impl AbiProfile {
    /// x86-64 System V.
    pub fn lp64() -> Self {
        AbiProfile {
            name: "lp64".to_string(),
            little_endian: true,
            bool_: ScalarLayout::new(1, 1),
            char_: ScalarLayout::new(1, 1),
            short: ScalarLayout::new(2, 2),
            int: ScalarLayout::new(4, 4),
            long: ScalarLayout::new(8, 8),
            long_long: ScalarLayout::new(8, 8),
            float: ScalarLayout::new(4, 4),
            double: ScalarLayout::new(8, 8),
            long_double: ScalarLayout::new(16, 16),
            pointer: ScalarLayout::new(8, 8),
        }
    }

    /// i386 System V: 8-byte scalars are only 4-byte aligned inside
    /// aggregates.
    pub fn ilp32() -> Self {
        AbiProfile {
            name: "ilp32".to_string(),
            little_endian: true,
            bool_: ScalarLayout::new(1, 1),
            char_: ScalarLayout::new(1, 1),
            short: ScalarLayout::new(2, 2),
            int: ScalarLayout::new(4, 4),
            long: ScalarLayout::new(4, 4),
            long_long: ScalarLayout::new(8, 4),
            float: ScalarLayout::new(4, 4),
            double: ScalarLayout::new(8, 4),
            long_double: ScalarLayout::new(12, 4),
            pointer: ScalarLayout::new(4, 4),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "lp64" => Some(Self::lp64()),
            "ilp32" => Some(Self::ilp32()),
            _ => None,
        }
    }

    pub fn scalar(&self, kind: PrimKind) -> Option<ScalarLayout> {
        use PrimKind::*;
        Some(match kind {
            Void => return None,
            Bool => self.bool_,
            Char | SChar | UChar => self.char_,
            Short | UShort => self.short,
            Int | UInt => self.int,
            Long | ULong => self.long,
            LongLong | ULongLong => self.long_long,
            Float => self.float,
            Double => self.double,
            LongDouble => self.long_double,
        })
    }

    /// Enumerations always take the size of `int`.
    pub fn enum_layout(&self) -> ScalarLayout {
        self.int
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FieldLayout {
    /// `None` for anonymous struct/union members.
    pub name: Option<String>,
    pub ty: TypeId,
    pub offset: u64,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypeLayout {
    pub size: u64,
    pub align: u64,
    /// Direct members of a record, in declaration order. Empty otherwise.
    pub fields: Vec<FieldLayout>,
    pub trailing_padding: u64,
}

impl TypeLayout {
    fn scalar(s: ScalarLayout) -> Self {
        TypeLayout { size: s.size, align: s.align, fields: Vec::new(), trailing_padding: 0 }
    }

    pub fn field(&self, name: &str) -> Option<&FieldLayout> {
        self.fields.iter().find(|f| f.name.as_deref() == Some(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("type `{0}` has no complete definition")]
    UnresolvedType(String),
    #[error("type `{0}` has size zero")]
    ZeroSizedType(String),
}

pub fn round_up(value: u64, align: u64) -> u64 {
    if align <= 1 {
        value
    } else {
        value.div_ceil(align) * align
    }
}

/// Computes the layout of `id`. A pure function of the type graph and the
/// profile.
pub fn compute_layout(types: &TypeTable, id: TypeId, abi: &AbiProfile) -> Result<TypeLayout, LayoutError> {
    let l = layout_inner(types, id, abi, &mut BTreeMap::new())?;
    if l.size == 0 {
        return Err(LayoutError::ZeroSizedType(types.display_name(id)));
    }
    Ok(l)
}

fn layout_inner(
    types: &TypeTable,
    id: TypeId,
    abi: &AbiProfile,
    memo: &mut BTreeMap<TypeId, TypeLayout>,
) -> Result<TypeLayout, LayoutError> {
    if let Some(l) = memo.get(&id) {
        return Ok(l.clone());
    }
    let unresolved = || LayoutError::UnresolvedType(types.display_name(id));
    let l = match types.get(id) {
        CType::Typedef { target, .. } => layout_inner(types, *target, abi, memo)?,
        CType::Primitive(p) => TypeLayout::scalar(abi.scalar(*p).ok_or_else(unresolved)?),
        CType::Enum { complete, .. } => {
            // A forward-declared enum is still int-sized in practice, but the
            // constants are unknown; treat it as unresolved like a record.
            if !complete {
                return Err(unresolved());
            }
            TypeLayout::scalar(abi.enum_layout())
        }
        CType::Pointer { .. } => TypeLayout::scalar(abi.pointer),
        CType::Array { elem, len } => {
            let e = layout_inner(types, *elem, abi, memo)?;
            let n = len.ok_or_else(unresolved)?;
            TypeLayout { size: e.size * n, align: e.align, fields: Vec::new(), trailing_padding: 0 }
        }
        CType::Record { kind, fields, complete, packed, align_attr, .. } => {
            if !complete {
                return Err(unresolved());
            }
            let mut out = Vec::with_capacity(fields.len());
            let mut offset = 0u64;
            let mut size = 0u64;
            let mut align = 1u64;
            for (i, f) in fields.iter().enumerate() {
                let is_last = i + 1 == fields.len();
                let fl = match (types.get(types.resolve(f.ty)), kind) {
                    // Flexible array member.
                    (CType::Array { elem, len: None }, RecordKind::Struct) if is_last && i > 0 => {
                        let e = layout_inner(types, *elem, abi, memo)?;
                        TypeLayout { size: 0, align: e.align, fields: Vec::new(), trailing_padding: 0 }
                    }
                    _ => layout_inner(types, f.ty, abi, memo)?,
                };
                let falign = if *packed { 1 } else { fl.align };
                align = align.max(falign);
                let at = match kind {
                    RecordKind::Struct => {
                        let at = round_up(offset, falign);
                        offset = at + fl.size;
                        size = offset;
                        at
                    }
                    RecordKind::Union => {
                        size = size.max(fl.size);
                        0
                    }
                };
                out.push(FieldLayout { name: f.name.clone(), ty: f.ty, offset: at, size: fl.size });
            }
            if let Some(a) = align_attr {
                align = align.max(*a);
            }
            let total = round_up(size, align);
            TypeLayout { size: total, align, fields: out, trailing_padding: total - size }
        }
        CType::Function { .. } | CType::Opaque { .. } => return Err(unresolved()),
    };
    memo.insert(id, l.clone());
    Ok(l)
}

/// C source of a program that prints `sizeof`/`_Alignof` of the named types
/// and `offsetof` of each of their named direct members, one fact per line:
/// `size <type> <n>`, `align <type> <n>`, `offset <type> <field> <n>`.
///
/// `prelude` must declare the types.
pub fn probe_program(types: &TypeTable, prelude: &str, names: &[&str]) -> String {
    let mut s = String::new();
    s.push_str("#include <stdio.h>\n#include <stddef.h>\n");
    s.push_str(prelude);
    s.push_str("\nint main(void) {\n");
    for name in names {
        s.push_str(&format!("    printf(\"size {name} %zu\\n\", sizeof({name}));\n"));
        s.push_str(&format!("    printf(\"align {name} %zu\\n\", (size_t)_Alignof({name}));\n"));
        let Some(id) = types.typedef(name) else { continue };
        if let CType::Record { fields, .. } = types.get(types.resolve(id)) {
            for f in fields.iter().filter_map(|f| f.name.as_deref()) {
                s.push_str(&format!(
                    "    printf(\"offset {name} {f} %zu\\n\", offsetof({name}, {f}));\n"
                ));
            }
        }
    }
    s.push_str("    return 0;\n}\n");
    s
}

/// Program printing the primitive sizes and in-aggregate alignments of the
/// compiling target as `<kind> <size> <align>` lines, parsed back by
/// [`parse_abi_probe`].
pub fn abi_probe_program() -> String {
    let mut s = String::from("#include <stdio.h>\n#include <stddef.h>\n");
    let rows = [
        ("bool", "_Bool"),
        ("char", "char"),
        ("short", "short"),
        ("int", "int"),
        ("long", "long"),
        ("long_long", "long long"),
        ("float", "float"),
        ("double", "double"),
        ("long_double", "long double"),
        ("pointer", "void *"),
    ];
    for (i, (_, c)) in rows.iter().enumerate() {
        s.push_str(&format!("struct probe{i} {{ char c; {c} v; }};\n"));
    }
    s.push_str("int main(void) {\n    unsigned one = 1;\n");
    s.push_str("    printf(\"little_endian %d\\n\", *(unsigned char *)&one == 1);\n");
    for (i, (k, c)) in rows.iter().enumerate() {
        s.push_str(&format!(
            "    printf(\"{k} %zu %zu\\n\", sizeof({c}), offsetof(struct probe{i}, v));\n"
        ));
    }
    s.push_str("    return 0;\n}\n");
    s
}

pub fn parse_abi_probe(name: &str, output: &str) -> Option<AbiProfile> {
    let mut p = AbiProfile::lp64();
    p.name = name.to_string();
    let mut seen = 0;
    for line in output.lines() {
        let mut it = line.split_whitespace();
        let key = it.next()?;
        let nums: Vec<u64> = it.map(|n| n.parse().ok()).collect::<Option<_>>()?;
        if key == "little_endian" {
            p.little_endian = nums.first() == Some(&1);
            continue;
        }
        let [size, align] = nums[..] else { return None };
        let slot = match key {
            "bool" => &mut p.bool_,
            "char" => &mut p.char_,
            "short" => &mut p.short,
            "int" => &mut p.int,
            "long" => &mut p.long,
            "long_long" => &mut p.long_long,
            "float" => &mut p.float,
            "double" => &mut p.double,
            "long_double" => &mut p.long_double,
            "pointer" => &mut p.pointer,
            _ => return None,
        };
        *slot = ScalarLayout::new(size, align);
        seen += 1;
    }
    (seen == 10).then_some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::Unit;

    fn layout(src: &str, name: &str, abi: &AbiProfile) -> TypeLayout {
        let u = Unit::parse(src).unwrap();
        compute_layout(&u.types, u.types.typedef(name).unwrap(), abi).unwrap()
    }

    #[test]
    fn int_is_four_bytes() {
        let l = layout("typedef int I;", "I", &AbiProfile::lp64());
        assert_eq!((l.size, l.align), (4, 4));
    }

    #[test]
    fn struct_padding_differs_between_profiles() {
        let src = "typedef struct { char c; double d; int i; } S;";
        let l = layout(src, "S", &AbiProfile::lp64());
        assert_eq!((l.size, l.align, l.field("d").unwrap().offset, l.trailing_padding), (24, 8, 8, 4));
        let l = layout(src, "S", &AbiProfile::ilp32());
        assert_eq!((l.size, l.align, l.field("d").unwrap().offset, l.trailing_padding), (16, 4, 4, 0));
    }

    #[test]
    fn unions_round_up_to_alignment() {
        let l = layout("typedef union { char c[5]; int i; } U;", "U", &AbiProfile::lp64());
        assert_eq!((l.size, l.align), (8, 4));
        assert!(l.fields.iter().all(|f| f.offset == 0));
    }

    #[test]
    fn packed_and_aligned_records() {
        let abi = AbiProfile::lp64();
        let l = layout("typedef struct __attribute__((packed)) { char c; int i; } P;", "P", &abi);
        assert_eq!((l.size, l.align, l.field("i").unwrap().offset), (5, 1, 1));
        let l = layout("typedef struct { char c; } __attribute__((aligned(16))) A;", "A", &abi);
        assert_eq!((l.size, l.align), (16, 16));
    }

    #[test]
    fn flexible_array_member_adds_no_size() {
        let l = layout("typedef struct { int n; double d[]; } F;", "F", &AbiProfile::lp64());
        assert_eq!((l.size, l.field("d").unwrap().offset), (8, 8));
    }

    #[test]
    fn incomplete_and_empty_types_are_errors() {
        let u = Unit::parse("struct s; typedef struct s S; typedef struct {} E;").unwrap();
        let abi = AbiProfile::lp64();
        assert!(matches!(
            compute_layout(&u.types, u.types.typedef("S").unwrap(), &abi),
            Err(LayoutError::UnresolvedType(_))
        ));
        assert!(matches!(
            compute_layout(&u.types, u.types.typedef("E").unwrap(), &abi),
            Err(LayoutError::ZeroSizedType(_))
        ));
    }

    #[test]
    fn abi_probe_output_round_trips() {
        let out = "little_endian 1\nbool 1 1\nchar 1 1\nshort 2 2\nint 4 4\nlong 4 4\nlong_long 8 4\n\
                   float 4 4\ndouble 8 4\nlong_double 12 4\npointer 4 4\n";
        let p = parse_abi_probe("ilp32", out).unwrap();
        assert_eq!(p, AbiProfile::ilp32());
        assert!(parse_abi_probe("x", "int 4 4\n").is_none());
    }
}
