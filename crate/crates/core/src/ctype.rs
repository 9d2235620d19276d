//! Arena-backed C type graph.
//!
//! Types reference each other through [`TypeId`]. Struct, union and enum tags
//! are interned on first mention so that self-referential records
//! (`struct node { struct node *next; }`) only close cycles through pointer
//! edges.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PrimKind {
    Void,
    Bool,
    Char,
    SChar,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Long,
    ULong,
    LongLong,
    ULongLong,
    Float,
    Double,
    LongDouble,
}

/// Value partition family used to pick seed patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PrimitiveClass {
    SignedInt,
    UnsignedInt,
    Float32,
    Float64,
    Bool,
    Byte,
}

impl PrimKind {
    pub const ALL: [PrimKind; 16] = [
        PrimKind::Void,
        PrimKind::Bool,
        PrimKind::Char,
        PrimKind::SChar,
        PrimKind::UChar,
        PrimKind::Short,
        PrimKind::UShort,
        PrimKind::Int,
        PrimKind::UInt,
        PrimKind::Long,
        PrimKind::ULong,
        PrimKind::LongLong,
        PrimKind::ULongLong,
        PrimKind::Float,
        PrimKind::Double,
        PrimKind::LongDouble,
    ];

    pub fn spelling(self) -> &'static str {
        match self {
            PrimKind::Void => "void",
            PrimKind::Bool => "_Bool",
            PrimKind::Char => "char",
            PrimKind::SChar => "signed char",
            PrimKind::UChar => "unsigned char",
            PrimKind::Short => "short",
            PrimKind::UShort => "unsigned short",
            PrimKind::Int => "int",
            PrimKind::UInt => "unsigned int",
            PrimKind::Long => "long",
            PrimKind::ULong => "unsigned long",
            PrimKind::LongLong => "long long",
            PrimKind::ULongLong => "unsigned long long",
            PrimKind::Float => "float",
            PrimKind::Double => "double",
            PrimKind::LongDouble => "long double",
        }
    }

    /// Seed class of the primitive; `None` for `void` and `long double`,
    /// which fall back to the int-array fill.
    pub fn class(self) -> Option<PrimitiveClass> {
        use PrimKind::*;
        Some(match self {
            Void | LongDouble => return None,
            Bool => PrimitiveClass::Bool,
            Char | SChar | UChar => PrimitiveClass::Byte,
            Short | Int | Long | LongLong => PrimitiveClass::SignedInt,
            UShort | UInt | ULong | ULongLong => PrimitiveClass::UnsignedInt,
            Float => PrimitiveClass::Float32,
            Double => PrimitiveClass::Float64,
        })
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, PrimKind::Void | PrimKind::Float | PrimKind::Double | PrimKind::LongDouble)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RecordKind {
    Struct,
    Union,
}

impl RecordKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RecordKind::Struct => "struct",
            RecordKind::Union => "union",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Field {
    /// `None` for anonymous struct/union members.
    pub name: Option<String>,
    pub ty: TypeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CType {
    Primitive(PrimKind),
    Enum {
        tag: Option<String>,
        constants: Vec<(String, i64)>,
        complete: bool,
    },
    Record {
        kind: RecordKind,
        tag: Option<String>,
        fields: Vec<Field>,
        complete: bool,
        packed: bool,
        align_attr: Option<u64>,
    },
    Array {
        elem: TypeId,
        len: Option<u64>,
    },
    Pointer {
        pointee: TypeId,
    },
    Function {
        ret: TypeId,
        params: Vec<TypeId>,
        variadic: bool,
    },
    Typedef {
        name: String,
        target: TypeId,
    },
    /// Compiler builtins and types whose declaration could not be parsed.
    Opaque {
        name: String,
    },
}

/// Coarse kind as seen by callers that do not care about typedef chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Primitive,
    Enum,
    Record,
    Union,
    Array,
    Pointer,
    Function,
    Opaque,
}

/// A top-level type definition, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeDef {
    Typedef(String),
    Tag(TypeId),
}

#[derive(Debug, Clone, Default)]
pub struct TypeTable {
    types: Vec<CType>,
    struct_tags: BTreeMap<String, TypeId>,
    union_tags: BTreeMap<String, TypeId>,
    enum_tags: BTreeMap<String, TypeId>,
    typedefs: BTreeMap<String, TypeId>,
    enum_constants: BTreeMap<String, i64>,
    prims: BTreeMap<PrimKind, TypeId>,
    order: Vec<TypeDef>,
}

impl TypeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: TypeId) -> &CType {
        &self.types[id.0 as usize]
    }

    pub(crate) fn get_mut(&mut self, id: TypeId) -> &mut CType {
        &mut self.types[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn add(&mut self, ty: CType) -> TypeId {
        let id = TypeId(self.types.len() as u32);
        self.types.push(ty);
        id
    }

    pub fn prim(&mut self, kind: PrimKind) -> TypeId {
        if let Some(&id) = self.prims.get(&kind) {
            return id;
        }
        let id = self.add(CType::Primitive(kind));
        self.prims.insert(kind, id);
        id
    }

    pub fn pointer_to(&mut self, pointee: TypeId) -> TypeId {
        self.add(CType::Pointer { pointee })
    }

    pub fn array_of(&mut self, elem: TypeId, len: Option<u64>) -> TypeId {
        self.add(CType::Array { elem, len })
    }

    pub fn typedef(&self, name: &str) -> Option<TypeId> {
        self.typedefs.get(name).copied()
    }

    pub fn is_typedef_name(&self, name: &str) -> bool {
        self.typedefs.contains_key(name)
    }

    pub fn typedef_names(&self) -> impl Iterator<Item = (&str, TypeId)> {
        self.typedefs.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn define_typedef(&mut self, name: &str, target: TypeId) -> TypeId {
        if let Some(&existing) = self.typedefs.get(name) {
            // Compatible redefinition is legal C11; keep the first one.
            return existing;
        }
        let id = self.add(CType::Typedef { name: name.to_string(), target });
        self.typedefs.insert(name.to_string(), id);
        self.order.push(TypeDef::Typedef(name.to_string()));
        id
    }

    pub fn define_opaque_typedef(&mut self, name: &str) -> TypeId {
        let target = self.add(CType::Opaque { name: name.to_string() });
        self.define_typedef(name, target)
    }

    /// Looks up or creates the (possibly incomplete) record for a tag.
    pub fn record_tag(&mut self, kind: RecordKind, tag: &str) -> TypeId {
        let map = match kind {
            RecordKind::Struct => &self.struct_tags,
            RecordKind::Union => &self.union_tags,
        };
        if let Some(&id) = map.get(tag) {
            return id;
        }
        let id = self.add(CType::Record {
            kind,
            tag: Some(tag.to_string()),
            fields: Vec::new(),
            complete: false,
            packed: false,
            align_attr: None,
        });
        match kind {
            RecordKind::Struct => self.struct_tags.insert(tag.to_string(), id),
            RecordKind::Union => self.union_tags.insert(tag.to_string(), id),
        };
        id
    }

    pub fn enum_tag(&mut self, tag: &str) -> TypeId {
        if let Some(&id) = self.enum_tags.get(tag) {
            return id;
        }
        let id = self.add(CType::Enum { tag: Some(tag.to_string()), constants: Vec::new(), complete: false });
        self.enum_tags.insert(tag.to_string(), id);
        id
    }

    pub fn struct_tag_id(&self, kind: RecordKind, tag: &str) -> Option<TypeId> {
        match kind {
            RecordKind::Struct => self.struct_tags.get(tag).copied(),
            RecordKind::Union => self.union_tags.get(tag).copied(),
        }
    }

    pub fn enum_tag_id(&self, tag: &str) -> Option<TypeId> {
        self.enum_tags.get(tag).copied()
    }

    pub(crate) fn note_tag_definition(&mut self, id: TypeId) {
        self.order.push(TypeDef::Tag(id));
    }

    pub fn add_enum_constant(&mut self, name: &str, value: i64) {
        self.enum_constants.insert(name.to_string(), value);
    }

    pub fn enum_constant(&self, name: &str) -> Option<i64> {
        self.enum_constants.get(name).copied()
    }

    pub fn definitions(&self) -> &[TypeDef] {
        &self.order
    }

    /// Follows typedef chains.
    pub fn resolve(&self, mut id: TypeId) -> TypeId {
        while let CType::Typedef { target, .. } = self.get(id) {
            id = *target;
        }
        id
    }

    pub fn node_kind(&self, id: TypeId) -> NodeKind {
        match self.get(self.resolve(id)) {
            CType::Primitive(_) => NodeKind::Primitive,
            CType::Enum { .. } => NodeKind::Enum,
            CType::Record { kind: RecordKind::Struct, .. } => NodeKind::Record,
            CType::Record { kind: RecordKind::Union, .. } => NodeKind::Union,
            CType::Array { .. } => NodeKind::Array,
            CType::Pointer { .. } => NodeKind::Pointer,
            CType::Function { .. } => NodeKind::Function,
            CType::Opaque { .. } => NodeKind::Opaque,
            CType::Typedef { .. } => unreachable!("resolve strips typedefs"),
        }
    }

    pub fn primitive(&self, id: TypeId) -> Option<PrimKind> {
        match self.get(self.resolve(id)) {
            CType::Primitive(p) => Some(*p),
            _ => None,
        }
    }

    /// Human readable name of a type for diagnostics.
    pub fn display_name(&self, id: TypeId) -> String {
        self.spell(id, "").unwrap_or_else(|| self.canonical(id))
    }

    /// Renders a C declaration `T name` for the type, or `None` when the type
    /// cannot be named (anonymous record without typedef, function types).
    pub fn spell(&self, id: TypeId, name: &str) -> Option<String> {
        let mut decl = String::from(name);
        let mut cur = id;
        // Declarator built inside-out; `needs_paren` tracks pointer-to-array.
        let mut last_was_pointer = false;
        loop {
            match self.get(cur) {
                CType::Pointer { pointee } => {
                    decl = format!("*{decl}");
                    last_was_pointer = true;
                    cur = *pointee;
                }
                CType::Array { elem, len } => {
                    if last_was_pointer {
                        decl = format!("({decl})");
                    }
                    match len {
                        Some(n) => decl = format!("{decl}[{n}]"),
                        None => decl = format!("{decl}[]"),
                    }
                    last_was_pointer = false;
                    cur = *elem;
                }
                CType::Function { .. } | CType::Opaque { .. } => {
                    if let CType::Opaque { name } = self.get(cur) {
                        return Some(join_decl(name, &decl));
                    }
                    return None;
                }
                CType::Primitive(p) => return Some(join_decl(p.spelling(), &decl)),
                CType::Typedef { name, .. } => return Some(join_decl(name, &decl)),
                CType::Record { kind, tag: Some(tag), .. } => {
                    return Some(join_decl(&format!("{} {}", kind.keyword(), tag), &decl))
                }
                CType::Enum { tag: Some(tag), .. } => return Some(join_decl(&format!("enum {tag}"), &decl)),
                CType::Record { tag: None, .. } | CType::Enum { tag: None, .. } => return None,
            }
        }
    }

    /// Structural description that is independent of arena ids. Named types
    /// (typedefs and tags) are referenced by name, which keeps the rendering
    /// finite for recursive records.
    pub fn canonical(&self, id: TypeId) -> String {
        self.canonical_inner(id, true)
    }

    fn canonical_inner(&self, id: TypeId, expand_named: bool) -> String {
        match self.get(id) {
            CType::Primitive(p) => p.spelling().to_string(),
            CType::Typedef { name, target } => {
                if expand_named {
                    format!("typedef {name} = {}", self.canonical_inner(*target, false))
                } else {
                    name.clone()
                }
            }
            CType::Opaque { name } => format!("opaque {name}"),
            CType::Pointer { pointee } => format!("ptr({})", self.canonical_inner(*pointee, false)),
            CType::Array { elem, len } => match len {
                Some(n) => format!("array[{n}]({})", self.canonical_inner(*elem, false)),
                None => format!("array[]({})", self.canonical_inner(*elem, false)),
            },
            CType::Function { ret, params, variadic } => {
                let ps: Vec<String> = params.iter().map(|p| self.canonical_inner(*p, false)).collect();
                format!(
                    "fn({}{}) -> {}",
                    ps.join(", "),
                    if *variadic { ", ..." } else { "" },
                    self.canonical_inner(*ret, false)
                )
            }
            CType::Enum { tag, constants, complete } => {
                if let (Some(tag), false) = (tag, expand_named) {
                    return format!("enum {tag}");
                }
                let cs: Vec<String> = constants.iter().map(|(n, v)| format!("{n}={v}")).collect();
                format!(
                    "enum {}{{{}}}{}",
                    tag.as_deref().unwrap_or("<anon>"),
                    cs.join(","),
                    if *complete { "" } else { " incomplete" }
                )
            }
            CType::Record { kind, tag, fields, complete, packed, align_attr } => {
                if let (Some(tag), false) = (tag, expand_named) {
                    return format!("{} {tag}", kind.keyword());
                }
                let fs: Vec<String> = fields
                    .iter()
                    .map(|f| {
                        let inner = match (self.get(f.ty), &f.name) {
                            // Anonymous members are always expanded inline.
                            (CType::Record { tag: None, .. }, _) | (CType::Enum { tag: None, .. }, _) => {
                                self.canonical_inner(f.ty, true)
                            }
                            _ => self.canonical_inner(f.ty, false),
                        };
                        format!("{}: {}", f.name.as_deref().unwrap_or("<anon>"), inner)
                    })
                    .collect();
                format!(
                    "{} {}{{{}}}{}{}{}",
                    kind.keyword(),
                    tag.as_deref().unwrap_or("<anon>"),
                    fs.join("; "),
                    if *complete { "" } else { " incomplete" },
                    if *packed { " packed" } else { "" },
                    align_attr.map(|a| format!(" aligned({a})")).unwrap_or_default()
                )
            }
        }
    }

    /// Pretty-prints every top-level type definition as C source that parses
    /// back into an equivalent graph.
    pub fn to_c_source(&self) -> String {
        let mut out = String::new();
        // Forward declarations allow pointer cycles between tags.
        for def in &self.order {
            if let TypeDef::Tag(id) = def {
                if let CType::Record { kind, tag: Some(tag), .. } = self.get(*id) {
                    out.push_str(&format!("{} {};\n", kind.keyword(), tag));
                }
            }
        }
        for def in &self.order {
            match def {
                TypeDef::Tag(id) => {
                    out.push_str(&self.print_tag_body(*id, 0));
                    out.push_str(";\n");
                }
                TypeDef::Typedef(name) => {
                    let id = self.typedefs[name];
                    let CType::Typedef { target, .. } = self.get(id) else { continue };
                    out.push_str("typedef ");
                    out.push_str(&self.print_decl(*target, name, 0));
                    out.push_str(";\n");
                }
            }
        }
        out
    }

    fn print_tag_body(&self, id: TypeId, indent: usize) -> String {
        let pad = "    ".repeat(indent + 1);
        match self.get(id) {
            CType::Record { kind, tag, fields, complete, packed, align_attr } => {
                let mut s = String::from(kind.keyword());
                if *packed || align_attr.is_some() {
                    let mut attrs = Vec::new();
                    if *packed {
                        attrs.push(String::from("packed"));
                    }
                    if let Some(a) = align_attr {
                        attrs.push(format!("aligned({a})"));
                    }
                    s.push_str(&format!(" __attribute__(({}))", attrs.join(", ")));
                }
                if let Some(t) = tag {
                    s.push(' ');
                    s.push_str(t);
                }
                if *complete {
                    s.push_str(" {\n");
                    for f in fields {
                        s.push_str(&pad);
                        s.push_str(&self.print_decl(f.ty, f.name.as_deref().unwrap_or(""), indent + 1));
                        s.push_str(";\n");
                    }
                    s.push_str(&"    ".repeat(indent));
                    s.push('}');
                }
                s
            }
            CType::Enum { tag, constants, complete } => {
                let mut s = String::from("enum");
                if let Some(t) = tag {
                    s.push(' ');
                    s.push_str(t);
                }
                if *complete {
                    s.push_str(" { ");
                    let cs: Vec<String> = constants.iter().map(|(n, v)| format!("{n} = {v}")).collect();
                    s.push_str(&cs.join(", "));
                    s.push_str(" }");
                }
                s
            }
            _ => self.spell(id, "").unwrap_or_default(),
        }
    }

    /// Declaration printer that inlines anonymous records and handles
    /// function pointers.
    fn print_decl(&self, id: TypeId, name: &str, indent: usize) -> String {
        let mut decl = String::from(name);
        let mut cur = id;
        let mut last_was_pointer = false;
        loop {
            match self.get(cur) {
                CType::Pointer { pointee } => {
                    decl = format!("*{decl}");
                    last_was_pointer = true;
                    cur = *pointee;
                }
                CType::Array { elem, len } => {
                    if last_was_pointer {
                        decl = format!("({decl})");
                    }
                    decl = match len {
                        Some(n) => format!("{decl}[{n}]"),
                        None => format!("{decl}[]"),
                    };
                    last_was_pointer = false;
                    cur = *elem;
                }
                CType::Function { ret, params, variadic } => {
                    if last_was_pointer {
                        decl = format!("({decl})");
                    }
                    let mut ps: Vec<String> = params.iter().map(|p| self.print_decl(*p, "", indent)).collect();
                    if *variadic {
                        ps.push(String::from("..."));
                    }
                    if ps.is_empty() {
                        ps.push(String::from("void"));
                    }
                    decl = format!("{decl}({})", ps.join(", "));
                    last_was_pointer = false;
                    cur = *ret;
                }
                CType::Record { tag: None, .. } | CType::Enum { tag: None, .. } => {
                    return join_decl(&self.print_tag_body(cur, indent), &decl);
                }
                _ => {
                    let base = self.spell(cur, "").unwrap_or_default();
                    return join_decl(&base, &decl);
                }
            }
        }
    }
}

fn join_decl(base: &str, decl: &str) -> String {
    if decl.is_empty() {
        base.to_string()
    } else {
        format!("{base} {decl}")
    }
}
