//! Parser for the supported C subset.
//!
//! Top-level declarations are parsed eagerly into a [`TypeTable`] plus a list
//! of function declarations. Function bodies are kept as spans and parsed on
//! demand by [`Unit::parse_body`], which returns a span-carrying statement
//! tree used by mutant generation.

mod decl;
mod expr;
mod stmt;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ast::{Span, Stmt};
use crate::ctype::{CType, TypeId, TypeTable};
use crate::error::{Location, ParseError};
use crate::lexer::{tokenize, Punct, Token, TokenKind};

pub use expr::eval_const;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    /// From the first declaration specifier to the closing brace.
    pub span: Span,
    pub name_span: Span,
    /// Includes the braces.
    pub body_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDecl {
    pub name: String,
    /// Always a [`CType::Function`].
    pub ty: TypeId,
    pub param_names: Vec<Option<String>>,
    pub is_static: bool,
    pub is_inline: bool,
    pub location: Location,
    pub definition: Option<FunctionDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: TypeId,
    pub is_static: bool,
    pub is_extern: bool,
}

/// A parsed translation unit.
#[derive(Debug, Clone)]
pub struct Unit {
    pub source: String,
    pub types: TypeTable,
    pub functions: Vec<FunctionDecl>,
    pub globals: Vec<GlobalVar>,
    /// Declarations skipped in lenient mode.
    pub diagnostics: Vec<ParseError>,
    tokens: Vec<Token>,
}

impl Unit {
    /// Parses a translation unit, failing on the first unsupported or
    /// malformed declaration.
    pub fn parse(source: &str) -> Result<Unit, ParseError> {
        Self::parse_with(source, false)
    }

    /// Parses a translation unit, skipping declarations that cannot be
    /// handled (typical for system headers) and recording a diagnostic for
    /// each. Typedef names introduced by skipped declarations become opaque.
    pub fn parse_lenient(source: &str) -> Result<Unit, ParseError> {
        Self::parse_with(source, true)
    }

    fn parse_with(source: &str, lenient: bool) -> Result<Unit, ParseError> {
        let tokens = tokenize(source)?;
        let mut unit = Unit {
            source: source.to_string(),
            types: TypeTable::new(),
            functions: Vec::new(),
            globals: Vec::new(),
            diagnostics: Vec::new(),
            tokens: Vec::new(),
        };
        let mut p = Parser::new(source, &tokens, &mut unit.types);
        let mut items = Vec::new();
        while !p.at_end() {
            let start = p.pos;
            match p.top_level(&mut items) {
                Ok(()) => {}
                Err(e) if lenient => {
                    p.pos = start;
                    let poisoned = p.recover_top_level();
                    if let Some(name) = poisoned {
                        if !p.types.is_typedef_name(&name) {
                            p.types.define_opaque_typedef(&name);
                        }
                    }
                    unit.diagnostics.push(e);
                }
                Err(e) => return Err(e),
            }
        }
        drop(p);
        for item in items {
            match item {
                TopItem::Function(f) => unit.merge_function(f),
                TopItem::Global(g) => unit.globals.push(g),
            }
        }
        unit.tokens = tokens;
        Ok(unit)
    }

    fn merge_function(&mut self, f: FunctionDecl) {
        if let Some(existing) = self.functions.iter_mut().find(|e| e.name == f.name) {
            if f.definition.is_some() {
                let is_static = existing.is_static || f.is_static;
                *existing = FunctionDecl { is_static, ..f };
            } else if existing.definition.is_none() {
                existing.param_names = f.param_names;
            }
        } else {
            self.functions.push(f);
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Parses the body of a defined function.
    pub fn parse_body(&self, name: &str) -> Result<Stmt, ParseError> {
        let func = self.function(name).ok_or_else(|| ParseError::Unsupported {
            kind: alloc::format!("no function named `{name}`"),
            at: Location::default(),
        })?;
        let def = func.definition.as_ref().ok_or_else(|| ParseError::Unsupported {
            kind: alloc::format!("function `{name}` has no body in this unit"),
            at: func.location,
        })?;
        let first = self.tokens.partition_point(|t| t.start < def.body_span.start);
        let mut types = self.types.clone();
        let mut p = Parser::new(&self.source, &self.tokens, &mut types);
        p.pos = first;
        p.push_scope();
        for pname in func.param_names.iter().flatten() {
            p.declare(pname, false);
        }
        let body = p.compound_statement()?;
        p.pop_scope();
        Ok(body)
    }

    /// Parses a standalone C type name (as used in annotations), e.g.
    /// `unsigned char` or `T_POS`. New types are added to this unit's table.
    pub fn parse_type_name(&mut self, text: &str) -> Result<TypeId, ParseError> {
        let tokens = tokenize(text)?;
        let mut p = Parser::new(text, &tokens, &mut self.types);
        let ty = p.type_name()?.1;
        if !p.at_end() {
            return Err(p.unexpected("end of type name"));
        }
        Ok(ty)
    }
}

pub(crate) enum TopItem {
    Function(FunctionDecl),
    Global(GlobalVar),
}

pub(crate) struct Parser<'a> {
    pub(crate) src: &'a str,
    pub(crate) toks: &'a [Token],
    pub(crate) pos: usize,
    pub(crate) types: &'a mut TypeTable,
    /// Block scopes: name -> is-typedef.
    scopes: Vec<BTreeMap<String, bool>>,
}

const BUILTIN_OPAQUE: &[&str] = &[
    "__builtin_va_list",
    "__int128",
    "__int128_t",
    "__uint128_t",
    "_Float16",
    "_Float32",
    "_Float32x",
    "_Float64",
    "_Float64x",
    "_Float128",
    "__float128",
    "__bf16",
];

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str, toks: &'a [Token], types: &'a mut TypeTable) -> Self {
        Parser { src, toks, pos: 0, types, scopes: Vec::new() }
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    pub(crate) fn peek_at(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    pub(crate) fn text(&self, t: &Token) -> &'a str {
        &self.src[t.start..t.end]
    }

    pub(crate) fn peek_text(&self) -> Option<&'a str> {
        self.peek().map(|t| &self.src[t.start..t.end])
    }

    pub(crate) fn is_punct(&self, p: Punct) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    pub(crate) fn is_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Ident && self.text(t) == kw)
    }

    pub(crate) fn eat_punct(&mut self, p: Punct) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn location(&self) -> Location {
        let off = self.peek().map_or(self.src.len(), |t| t.start);
        Location::of(self.src, off)
    }

    pub(crate) fn unexpected(&self, expected: &'static str) -> ParseError {
        let token = self.peek_text().unwrap_or("<end of input>").to_string();
        ParseError::Syntax { at: self.location(), token, expected }
    }

    pub(crate) fn unsupported(&self, kind: &str) -> ParseError {
        ParseError::Unsupported { kind: kind.to_string(), at: self.location() }
    }

    pub(crate) fn expect_punct(&mut self, p: Punct, expected: &'static str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.is_punct(p) => {
                let t = *t;
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    pub(crate) fn expect_ident(&mut self, expected: &'static str) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                let t = *t;
                self.pos += 1;
                Ok((self.text(&t).to_string(), Span::new(t.start, t.end)))
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    /// End offset of the previously consumed token.
    pub(crate) fn prev_end(&self) -> usize {
        self.pos.checked_sub(1).and_then(|i| self.toks.get(i)).map_or(0, |t| t.end)
    }

    pub(crate) fn cur_start(&self) -> usize {
        self.peek().map_or(self.src.len(), |t| t.start)
    }

    pub(crate) fn push_scope(&mut self) {
        self.scopes.push(BTreeMap::new());
    }

    pub(crate) fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    pub(crate) fn declare(&mut self, name: &str, is_typedef: bool) {
        if let Some(s) = self.scopes.last_mut() {
            s.insert(name.to_string(), is_typedef);
        }
    }

    pub(crate) fn is_type_name(&self, name: &str) -> bool {
        for s in self.scopes.iter().rev() {
            if let Some(&is_td) = s.get(name) {
                return is_td;
            }
        }
        self.types.is_typedef_name(name) || BUILTIN_OPAQUE.contains(&name)
    }

    /// Resolves a typedef or builtin name to a type, honoring block scopes.
    pub(crate) fn lookup_type_name(&mut self, name: &str) -> Option<TypeId> {
        for s in self.scopes.iter().rev() {
            if let Some(&is_td) = s.get(name) {
                if !is_td {
                    return None;
                }
                break;
            }
        }
        if let Some(id) = self.types.typedef(name) {
            return Some(id);
        }
        if BUILTIN_OPAQUE.contains(&name) {
            return Some(self.types.add(CType::Opaque { name: name.to_string() }));
        }
        None
    }

    /// Skips `(...)` with balanced parentheses; cursor must be at `(`.
    pub(crate) fn skip_balanced_parens(&mut self) -> Result<Span, ParseError> {
        let start = self.cur_start();
        self.expect_punct(Punct::LParen, "`(`")?;
        let mut depth = 1;
        while depth > 0 {
            let Some(t) = self.peek() else {
                return Err(self.unexpected("`)`"));
            };
            match t.kind {
                TokenKind::Punct(Punct::LParen) => depth += 1,
                TokenKind::Punct(Punct::RParen) => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        Ok(Span::new(start, self.prev_end()))
    }

    /// Skips a braced block; cursor must be at `{`.
    pub(crate) fn skip_braces(&mut self) -> Result<Span, ParseError> {
        let start = self.cur_start();
        self.expect_punct(Punct::LBrace, "`{`")?;
        let mut depth = 1;
        while depth > 0 {
            let Some(t) = self.peek() else {
                return Err(self.unexpected("`}`"));
            };
            match t.kind {
                TokenKind::Punct(Punct::LBrace) => depth += 1,
                TokenKind::Punct(Punct::RBrace) => depth -= 1,
                _ => {}
            }
            self.pos += 1;
        }
        Ok(Span::new(start, self.prev_end()))
    }

    /// Skips to the end of the current top-level declaration. Returns the
    /// declared name when the declaration was a typedef.
    fn recover_top_level(&mut self) -> Option<String> {
        let is_typedef = self.toks[self.pos..]
            .iter()
            .take_while(|t| !t.is_punct(Punct::Semi) && !t.is_punct(Punct::LBrace))
            .any(|t| self.text(t) == "typedef");
        let mut depth = 0i32;
        let mut last_ident: Option<String> = None;
        while let Some(t) = self.peek().copied() {
            self.pos += 1;
            match t.kind {
                TokenKind::Punct(Punct::LParen | Punct::LBracket) => depth += 1,
                TokenKind::Punct(Punct::RParen | Punct::RBracket) => depth -= 1,
                TokenKind::Punct(Punct::LBrace) => {
                    self.pos -= 1;
                    if self.skip_braces().is_err() {
                        self.pos = self.toks.len();
                        return None;
                    }
                    // A brace block not followed by a declarator ends a
                    // function definition.
                    let next_is_decl_part = self.peek().is_some_and(|n| {
                        n.kind == TokenKind::Ident || n.is_punct(Punct::Star) || n.is_punct(Punct::Semi)
                            || n.is_punct(Punct::LParen)
                    });
                    if depth == 0 && !next_is_decl_part && !is_typedef {
                        return None;
                    }
                }
                TokenKind::Punct(Punct::Semi) if depth <= 0 => {
                    return if is_typedef { last_ident } else { None };
                }
                TokenKind::Ident if depth <= 1 => {
                    let txt = self.text(&t);
                    if txt != "__attribute__" && txt != "__attribute" {
                        last_ident = Some(txt.to_string());
                    }
                }
                _ => {}
            }
        }
        None
    }
}

#[cfg(test)]
mod tests;
