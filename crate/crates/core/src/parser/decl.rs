use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{FunctionDecl, FunctionDef, GlobalVar, Parser, TopItem};
use crate::ast::Span;
use crate::ctype::{CType, Field, PrimKind, RecordKind, TypeId};
use crate::error::{Location, ParseError};
use crate::lexer::{Punct, TokenKind};
use crate::parser::expr::eval_const;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Storage {
    None,
    Typedef,
    Extern,
    Static,
    Auto,
    Register,
}

#[derive(Debug, Clone)]
pub(crate) struct DeclSpec {
    pub storage: Storage,
    pub base: TypeId,
    pub inline: bool,
    pub anonymous_record: bool,
}

#[derive(Debug, Clone)]
pub(crate) enum DeclOp {
    Pointer,
    Array(Option<u64>),
    Function {
        params: Vec<(TypeId, Option<String>)>,
        variadic: bool,
    },
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Declarator {
    pub name: Option<(String, Span)>,
    /// Applied in order to the base type.
    pub ops: Vec<DeclOp>,
}

/// How array bounds in declarators are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoundMode {
    /// Bounds must be integer constant expressions.
    Constant,
    /// Non-constant bounds are accepted as unknown length (block scope).
    AllowVariable,
}

#[derive(Default)]
struct PrimCounts {
    void: u8,
    bool_: u8,
    char_: u8,
    short: u8,
    int: u8,
    long: u8,
    float: u8,
    double: u8,
    signed: u8,
    unsigned: u8,
}

impl PrimCounts {
    fn any(&self) -> bool {
        self.void + self.bool_ + self.char_ + self.short + self.int + self.long + self.float + self.double
            + self.signed
            + self.unsigned
            > 0
    }

    fn resolve(&self) -> Option<PrimKind> {
        let u = self.unsigned > 0;
        if self.signed > 0 && u {
            return None;
        }
        Some(if self.void > 0 {
            PrimKind::Void
        } else if self.bool_ > 0 {
            PrimKind::Bool
        } else if self.char_ > 0 {
            if u {
                PrimKind::UChar
            } else if self.signed > 0 {
                PrimKind::SChar
            } else {
                PrimKind::Char
            }
        } else if self.float > 0 {
            PrimKind::Float
        } else if self.double > 0 {
            if self.long > 0 {
                PrimKind::LongDouble
            } else {
                PrimKind::Double
            }
        } else if self.short > 0 {
            if u {
                PrimKind::UShort
            } else {
                PrimKind::Short
            }
        } else if self.long >= 2 {
            if u {
                PrimKind::ULongLong
            } else {
                PrimKind::LongLong
            }
        } else if self.long == 1 {
            if u {
                PrimKind::ULong
            } else {
                PrimKind::Long
            }
        } else if u {
            PrimKind::UInt
        } else {
            PrimKind::Int
        })
    }
}

const QUALIFIERS: &[&str] = &[
    "const",
    "volatile",
    "restrict",
    "__restrict",
    "__restrict__",
    "__const",
    "__const__",
    "__volatile",
    "__volatile__",
];

#[derive(Default)]
pub(crate) struct AttrInfo {
    pub packed: bool,
    pub aligned: Option<u64>,
}

impl Parser<'_> {
    pub(crate) fn is_attribute_start(&self) -> bool {
        matches!(
            self.peek_text(),
            Some("__attribute__" | "__attribute" | "__declspec" | "__asm__" | "__asm" | "asm")
        )
    }

    /// Skips GNU attributes and asm labels, collecting the layout-relevant
    /// ones.
    pub(crate) fn skip_attributes(&mut self) -> Result<AttrInfo, ParseError> {
        let mut info = AttrInfo::default();
        while self.is_attribute_start() {
            self.pos += 1;
            let span = self.skip_balanced_parens()?;
            let text = span.text(self.src);
            if text.contains("packed") {
                info.packed = true;
            }
            if let Some(i) = text.find("aligned") {
                let rest = &text[i + "aligned".len()..];
                let rest = rest.trim_start().trim_start_matches('(');
                let digits: String = rest.trim_start().chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
                info.aligned = crate::lexer::parse_int_literal(&digits).map(|(v, _)| v as u64).or(Some(16));
            }
        }
        Ok(info)
    }

    fn skip_qualifiers(&mut self) -> Result<(), ParseError> {
        loop {
            if let Some(t) = self.peek_text() {
                if QUALIFIERS.contains(&t) {
                    self.pos += 1;
                    continue;
                }
                if t == "_Atomic" {
                    return Err(self.unsupported("_Atomic qualifier"));
                }
            }
            if self.is_attribute_start() {
                self.skip_attributes()?;
                continue;
            }
            return Ok(());
        }
    }

    /// True when the current token can begin a declaration specifier list.
    pub(crate) fn is_decl_spec_start(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => self.is_spec_word(self.text(t)),
            _ => false,
        }
    }

    pub(crate) fn is_spec_word(&self, s: &str) -> bool {
        matches!(
            s,
            "typedef"
                | "extern"
                | "static"
                | "auto"
                | "register"
                | "inline"
                | "__inline"
                | "__inline__"
                | "_Noreturn"
                | "_Thread_local"
                | "__thread"
                | "__extension__"
                | "void"
                | "char"
                | "short"
                | "int"
                | "long"
                | "float"
                | "double"
                | "signed"
                | "__signed"
                | "__signed__"
                | "unsigned"
                | "_Bool"
                | "_Complex"
                | "__complex__"
                | "struct"
                | "union"
                | "enum"
                | "_Atomic"
                | "_Alignas"
                | "typeof"
                | "__typeof"
                | "__typeof__"
        ) || QUALIFIERS.contains(&s)
            || self.is_type_name(s)
    }

    pub(crate) fn decl_specifiers(&mut self) -> Result<DeclSpec, ParseError> {
        let mut storage = Storage::None;
        let mut inline = false;
        let mut counts = PrimCounts::default();
        let mut named: Option<TypeId> = None;
        let mut anonymous_record = false;
        let start = self.pos;

        loop {
            let Some(t) = self.peek().copied() else { break };
            if t.kind != TokenKind::Ident {
                break;
            }
            let s = self.text(&t);
            let set_storage = |cur: &mut Storage, new: Storage| *cur = new;
            match s {
                "typedef" => set_storage(&mut storage, Storage::Typedef),
                "extern" => set_storage(&mut storage, Storage::Extern),
                "static" => set_storage(&mut storage, Storage::Static),
                "auto" => set_storage(&mut storage, Storage::Auto),
                "register" => set_storage(&mut storage, Storage::Register),
                "_Thread_local" | "__thread" | "__extension__" | "_Noreturn" => {}
                "inline" | "__inline" | "__inline__" => inline = true,
                "void" => counts.void += 1,
                "_Bool" => counts.bool_ += 1,
                "char" => counts.char_ += 1,
                "short" => counts.short += 1,
                "int" => counts.int += 1,
                "long" => counts.long += 1,
                "float" => counts.float += 1,
                "double" => counts.double += 1,
                "signed" | "__signed" | "__signed__" => counts.signed += 1,
                "unsigned" => counts.unsigned += 1,
                "_Complex" | "__complex__" => return Err(self.unsupported("complex type")),
                "_Alignas" => return Err(self.unsupported("_Alignas specifier")),
                "typeof" | "__typeof" | "__typeof__" => return Err(self.unsupported("typeof specifier")),
                "__attribute__" | "__attribute" | "__declspec" => {
                    self.skip_attributes()?;
                    continue;
                }
                "struct" | "union" => {
                    if named.is_some() || counts.any() {
                        return Err(self.unexpected("a single type specifier"));
                    }
                    let kind = if s == "struct" { RecordKind::Struct } else { RecordKind::Union };
                    self.pos += 1;
                    let (id, anon) = self.record_specifier(kind)?;
                    named = Some(id);
                    anonymous_record = anon;
                    continue;
                }
                "enum" => {
                    if named.is_some() || counts.any() {
                        return Err(self.unexpected("a single type specifier"));
                    }
                    self.pos += 1;
                    named = Some(self.enum_specifier()?);
                    continue;
                }
                q if QUALIFIERS.contains(&q) => {}
                "_Atomic" => return Err(self.unsupported("_Atomic qualifier")),
                other => {
                    if named.is_none() && !counts.any() && self.is_type_name(other) {
                        let id = self.lookup_type_name(other).expect("is_type_name checked");
                        named = Some(id);
                    } else {
                        break;
                    }
                }
            }
            self.pos += 1;
        }

        let base = match (named, counts.any()) {
            (Some(_), true) => return Err(self.unexpected("a single type specifier")),
            (Some(id), false) => id,
            (None, true) => {
                let kind = counts.resolve().ok_or_else(|| self.unexpected("valid type specifier combination"))?;
                self.types.prim(kind)
            }
            (None, false) => {
                if self.pos == start {
                    return Err(self.unexpected("declaration specifiers"));
                }
                // Implicit int, e.g. `static x;` or `const y = 1;`.
                self.types.prim(PrimKind::Int)
            }
        };
        Ok(DeclSpec { storage, base, inline, anonymous_record })
    }

    /// Parses after `struct`/`union`. Returns the type and whether it is an
    /// anonymous definition.
    fn record_specifier(&mut self, kind: RecordKind) -> Result<(TypeId, bool), ParseError> {
        let mut attrs = self.skip_attributes()?;
        let tag = match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && !self.is_attribute_start() => {
                let t = *t;
                self.pos += 1;
                Some(self.text(&t).to_string())
            }
            _ => None,
        };
        let more = self.skip_attributes()?;
        attrs.packed |= more.packed;
        attrs.aligned = attrs.aligned.or(more.aligned);

        if !self.is_punct(Punct::LBrace) {
            let Some(tag) = tag else {
                return Err(self.unexpected("struct tag or body"));
            };
            return Ok((self.types.record_tag(kind, &tag), false));
        }

        let id = match &tag {
            Some(tag) => {
                let id = self.types.record_tag(kind, tag);
                if let CType::Record { complete: true, .. } = self.types.get(id) {
                    return Err(self.unsupported(&alloc::format!("redefinition of {} {}", kind.keyword(), tag)));
                }
                id
            }
            None => self.types.add(CType::Record {
                kind,
                tag: None,
                fields: Vec::new(),
                complete: false,
                packed: false,
                align_attr: None,
            }),
        };

        self.expect_punct(Punct::LBrace, "`{`")?;
        let mut fields = Vec::new();
        while !self.eat_punct(Punct::RBrace) {
            if self.at_end() {
                return Err(self.unexpected("`}`"));
            }
            if self.eat_punct(Punct::Semi) {
                continue;
            }
            if self.eat_keyword("_Static_assert") {
                self.skip_balanced_parens()?;
                self.expect_punct(Punct::Semi, "`;`")?;
                continue;
            }
            let spec = self.decl_specifiers()?;
            if self.eat_punct(Punct::Semi) {
                if spec.anonymous_record {
                    fields.push(Field { name: None, ty: spec.base });
                }
                continue;
            }
            loop {
                if self.is_punct(Punct::Colon) {
                    return Err(self.unsupported("bit-field member"));
                }
                let d = self.declarator(false, BoundMode::Constant)?;
                if self.is_punct(Punct::Colon) {
                    return Err(self.unsupported("bit-field member"));
                }
                self.skip_attributes()?;
                let (name, _) = d.name.clone().ok_or_else(|| self.unexpected("member name"))?;
                let ty = self.apply_ops(spec.base, &d.ops);
                fields.push(Field { name: Some(name), ty });
                if self.eat_punct(Punct::Comma) {
                    continue;
                }
                self.expect_punct(Punct::Semi, "`;` after member")?;
                break;
            }
        }
        let trailing = self.skip_attributes()?;
        attrs.packed |= trailing.packed;
        attrs.aligned = attrs.aligned.or(trailing.aligned);

        if let CType::Record { fields: f, complete, packed, align_attr, .. } = self.types.get_mut(id) {
            *f = fields;
            *complete = true;
            *packed = attrs.packed;
            *align_attr = attrs.aligned;
        }
        if tag.is_some() {
            self.types.note_tag_definition(id);
        }
        Ok((id, tag.is_none()))
    }

    fn enum_specifier(&mut self) -> Result<TypeId, ParseError> {
        self.skip_attributes()?;
        let tag = match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = *t;
                self.pos += 1;
                Some(self.text(&t).to_string())
            }
            _ => None,
        };
        self.skip_attributes()?;
        if self.is_punct(Punct::Colon) {
            return Err(self.unsupported("enum with fixed underlying type"));
        }
        if !self.is_punct(Punct::LBrace) {
            let Some(tag) = tag else {
                return Err(self.unexpected("enum tag or body"));
            };
            return Ok(self.types.enum_tag(&tag));
        }
        let id = match &tag {
            Some(t) => self.types.enum_tag(t),
            None => self.types.add(CType::Enum { tag: None, constants: Vec::new(), complete: false }),
        };
        self.expect_punct(Punct::LBrace, "`{`")?;
        let mut constants = Vec::new();
        let mut next: i64 = 0;
        while !self.eat_punct(Punct::RBrace) {
            let (name, _) = self.expect_ident("enumerator name")?;
            self.skip_attributes()?;
            if self.eat_punct(Punct::Assign) {
                let e = self.conditional_expr()?;
                next = eval_const(&e, self.src, self.types).ok_or_else(|| {
                    ParseError::Unsupported {
                        kind: alloc::format!("non-constant value for enumerator `{name}`"),
                        at: Location::of(self.src, e.span.start),
                    }
                })? as i64;
            }
            self.types.add_enum_constant(&name, next);
            self.declare(&name, false);
            constants.push((name, next));
            next = next.wrapping_add(1);
            if !self.eat_punct(Punct::Comma) {
                self.expect_punct(Punct::RBrace, "`,` or `}` in enum")?;
                break;
            }
        }
        if let CType::Enum { constants: c, complete, .. } = self.types.get_mut(id) {
            *c = constants;
            *complete = true;
        }
        if tag.is_some() {
            self.types.note_tag_definition(id);
        }
        self.skip_attributes()?;
        Ok(id)
    }

    /// Parses a (possibly abstract) declarator.
    pub(crate) fn declarator(&mut self, abstract_ok: bool, bounds: BoundMode) -> Result<Declarator, ParseError> {
        self.skip_attributes()?;
        let mut pointers = 0;
        while self.eat_punct(Punct::Star) {
            pointers += 1;
            self.skip_qualifiers()?;
        }
        let mut inner = Declarator::default();
        let mut name = None;
        match self.peek().copied() {
            Some(t) if t.kind == TokenKind::Ident && !self.is_attribute_start() => {
                let s = self.text(&t);
                if abstract_ok && self.is_type_name(s) {
                    // Start of a parameter list in an abstract declarator.
                } else {
                    self.pos += 1;
                    name = Some((s.to_string(), Span::new(t.start, t.end)));
                }
            }
            Some(t) if t.is_punct(Punct::LParen) => {
                let after = self.peek_at(1).copied();
                let nested = match after {
                    Some(a) if a.is_punct(Punct::Star) || a.is_punct(Punct::LParen) || a.is_punct(Punct::LBracket) => {
                        true
                    }
                    Some(a) if a.kind == TokenKind::Ident => !self.is_spec_word(self.text(&a)),
                    _ => false,
                };
                if nested {
                    self.pos += 1;
                    inner = self.declarator(abstract_ok, bounds)?;
                    self.expect_punct(Punct::RParen, "`)` closing declarator")?;
                }
            }
            _ => {}
        }
        if name.is_none() {
            name = inner.name.take();
        }
        if name.is_none() && !abstract_ok {
            return Err(self.unexpected("declarator name"));
        }

        let mut suffixes = Vec::new();
        loop {
            if self.is_punct(Punct::LBracket) {
                self.pos += 1;
                while self.eat_keyword("static") {}
                self.skip_qualifiers()?;
                if self.eat_punct(Punct::RBracket) {
                    suffixes.push(DeclOp::Array(None));
                    continue;
                }
                if self.is_punct(Punct::Star) && self.peek_at(1).is_some_and(|t| t.is_punct(Punct::RBracket)) {
                    return Err(self.unsupported("variable length array"));
                }
                let e = self.assignment_expr()?;
                self.expect_punct(Punct::RBracket, "`]`")?;
                match eval_const(&e, self.src, self.types) {
                    Some(n) if n >= 0 => suffixes.push(DeclOp::Array(Some(n as u64))),
                    Some(_) => {
                        return Err(ParseError::Unsupported {
                            kind: "negative array bound".to_string(),
                            at: Location::of(self.src, e.span.start),
                        })
                    }
                    None if bounds == BoundMode::AllowVariable => suffixes.push(DeclOp::Array(None)),
                    None => {
                        return Err(ParseError::Unsupported {
                            kind: "variable length array".to_string(),
                            at: Location::of(self.src, e.span.start),
                        })
                    }
                }
            } else if self.is_punct(Punct::LParen) {
                suffixes.push(self.parameter_list()?);
            } else if self.is_attribute_start() {
                self.skip_attributes()?;
            } else {
                break;
            }
        }

        let mut ops = Vec::new();
        ops.extend(core::iter::repeat_n(DeclOp::Pointer, pointers));
        ops.extend(suffixes.into_iter().rev());
        ops.extend(inner.ops);
        Ok(Declarator { name, ops })
    }

    fn parameter_list(&mut self) -> Result<DeclOp, ParseError> {
        self.expect_punct(Punct::LParen, "`(`")?;
        let mut params = Vec::new();
        let mut variadic = false;
        if self.eat_punct(Punct::RParen) {
            return Ok(DeclOp::Function { params, variadic });
        }
        if self.is_keyword("void") && self.peek_at(1).is_some_and(|t| t.is_punct(Punct::RParen)) {
            self.pos += 2;
            return Ok(DeclOp::Function { params, variadic });
        }
        self.push_scope();
        let result = (|| {
            loop {
                if self.eat_punct(Punct::Ellipsis) {
                    variadic = true;
                    self.expect_punct(Punct::RParen, "`)` after `...`")?;
                    break;
                }
                if !self.is_decl_spec_start() {
                    if self.peek().is_some_and(|t| t.kind == TokenKind::Ident) {
                        return Err(self.unsupported("K&R style parameter list"));
                    }
                    return Err(self.unexpected("parameter declaration"));
                }
                let spec = self.decl_specifiers()?;
                let d = self.declarator(true, BoundMode::AllowVariable)?;
                let ty = self.apply_ops(spec.base, &d.ops);
                let name = d.name.map(|(n, _)| n);
                if let Some(n) = &name {
                    self.declare(n, false);
                }
                params.push((ty, name));
                if self.eat_punct(Punct::Comma) {
                    continue;
                }
                self.expect_punct(Punct::RParen, "`,` or `)` in parameter list")?;
                break;
            }
            Ok(())
        })();
        self.pop_scope();
        result?;
        Ok(DeclOp::Function { params, variadic })
    }

    pub(crate) fn apply_ops(&mut self, base: TypeId, ops: &[DeclOp]) -> TypeId {
        let mut cur = base;
        for op in ops {
            cur = match op {
                DeclOp::Pointer => self.types.pointer_to(cur),
                DeclOp::Array(n) => self.types.array_of(cur, *n),
                DeclOp::Function { params, variadic } => self.types.add(CType::Function {
                    ret: cur,
                    params: params.iter().map(|(t, _)| *t).collect(),
                    variadic: *variadic,
                }),
            };
        }
        cur
    }

    /// `specifier-qualifier-list abstract-declarator?`. Returns the span and
    /// resulting type.
    pub(crate) fn type_name(&mut self) -> Result<(Span, TypeId), ParseError> {
        let start = self.cur_start();
        let spec = self.decl_specifiers()?;
        let d = self.declarator(true, BoundMode::AllowVariable)?;
        if d.name.is_some() {
            return Err(self.unexpected("abstract declarator"));
        }
        let ty = self.apply_ops(spec.base, &d.ops);
        Ok((Span::new(start, self.prev_end()), ty))
    }

    /// One top-level declaration or function definition.
    pub(crate) fn top_level(&mut self, items: &mut Vec<TopItem>) -> Result<(), ParseError> {
        if self.eat_punct(Punct::Semi) {
            return Ok(());
        }
        if self.eat_keyword("_Static_assert") {
            self.skip_balanced_parens()?;
            self.expect_punct(Punct::Semi, "`;`")?;
            return Ok(());
        }
        if self.is_keyword("__asm__") || self.is_keyword("asm") || self.is_keyword("__asm") {
            self.pos += 1;
            self.skip_qualifiers()?;
            self.skip_balanced_parens()?;
            self.expect_punct(Punct::Semi, "`;`")?;
            return Ok(());
        }
        let decl_start = self.cur_start();
        let spec = self.decl_specifiers()?;
        if self.eat_punct(Punct::Semi) {
            return Ok(());
        }
        let mut first = true;
        loop {
            let d = self.declarator(false, BoundMode::Constant)?;
            let (name, name_span) = d.name.clone().expect("non-abstract declarator has a name");
            let ty = self.apply_ops(spec.base, &d.ops);
            self.skip_attributes()?;

            if spec.storage == Storage::Typedef {
                self.types.define_typedef(&name, ty);
            } else if let CType::Function { .. } = self.types.get(ty) {
                let param_names = match d.ops.last() {
                    Some(DeclOp::Function { params, .. }) => params.iter().map(|(_, n)| n.clone()).collect(),
                    _ => Vec::new(),
                };
                let location = Location::of(self.src, name_span.start);
                if first && self.is_punct(Punct::LBrace) {
                    let body_span = self.skip_braces()?;
                    items.push(TopItem::Function(FunctionDecl {
                        name,
                        ty,
                        param_names,
                        is_static: spec.storage == Storage::Static,
                        is_inline: spec.inline,
                        location,
                        definition: Some(FunctionDef {
                            span: Span::new(decl_start, body_span.end),
                            name_span,
                            body_span,
                        }),
                    }));
                    return Ok(());
                }
                items.push(TopItem::Function(FunctionDecl {
                    name,
                    ty,
                    param_names,
                    is_static: spec.storage == Storage::Static,
                    is_inline: spec.inline,
                    location,
                    definition: None,
                }));
            } else {
                if self.eat_punct(Punct::Assign) {
                    self.skip_initializer()?;
                }
                items.push(TopItem::Global(GlobalVar {
                    name,
                    ty,
                    is_static: spec.storage == Storage::Static,
                    is_extern: spec.storage == Storage::Extern,
                }));
            }
            first = false;
            if self.eat_punct(Punct::Comma) {
                continue;
            }
            self.expect_punct(Punct::Semi, "`;` after declaration")?;
            return Ok(());
        }
    }

    fn skip_initializer(&mut self) -> Result<(), ParseError> {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            match t.kind {
                TokenKind::Punct(Punct::LBrace | Punct::LParen | Punct::LBracket) => depth += 1,
                TokenKind::Punct(Punct::RBrace | Punct::RParen | Punct::RBracket) => depth -= 1,
                TokenKind::Punct(Punct::Comma | Punct::Semi) if depth == 0 => return Ok(()),
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.unexpected("end of initializer"))
    }
}
