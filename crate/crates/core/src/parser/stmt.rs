use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::decl::{BoundMode, Storage};
use super::Parser;
use crate::ast::{Span, Stmt, StmtKind};
use crate::error::ParseError;
use crate::lexer::{Punct, TokenKind};

impl Parser<'_> {
    fn mk_stmt(&self, kind: StmtKind, start: usize) -> Stmt {
        Stmt { kind, span: Span::new(start, self.prev_end()) }
    }

    pub(crate) fn compound_statement(&mut self) -> Result<Stmt, ParseError> {
        let start = self.cur_start();
        self.expect_punct(Punct::LBrace, "`{`")?;
        self.push_scope();
        let mut items = Vec::new();
        let result = loop {
            if self.eat_punct(Punct::RBrace) {
                break Ok(());
            }
            if self.at_end() {
                break Err(self.unexpected("`}`"));
            }
            match self.block_item() {
                Ok(s) => items.push(s),
                Err(e) => break Err(e),
            }
        };
        self.pop_scope();
        result?;
        Ok(self.mk_stmt(StmtKind::Compound(items), start))
    }

    fn starts_declaration(&self) -> bool {
        if !self.is_decl_spec_start() {
            return false;
        }
        // `T * x` where T is a typedef is a declaration; a label `T:` is not.
        !self.peek_at(1).is_some_and(|t| t.is_punct(Punct::Colon))
    }

    fn block_item(&mut self) -> Result<Stmt, ParseError> {
        if self.is_keyword("_Static_assert") {
            let start = self.cur_start();
            self.pos += 1;
            self.skip_balanced_parens()?;
            self.expect_punct(Punct::Semi, "`;`")?;
            return Ok(self.mk_stmt(StmtKind::Decl(Vec::new()), start));
        }
        if self.starts_declaration() {
            return self.local_declaration();
        }
        self.statement()
    }

    fn local_declaration(&mut self) -> Result<Stmt, ParseError> {
        let start = self.cur_start();
        let spec = self.decl_specifiers()?;
        let mut inits = Vec::new();
        if self.eat_punct(Punct::Semi) {
            return Ok(self.mk_stmt(StmtKind::Decl(inits), start));
        }
        loop {
            let d = self.declarator(false, BoundMode::AllowVariable)?;
            let (name, _) = d.name.clone().expect("named declarator");
            self.skip_attributes()?;
            if spec.storage == Storage::Typedef {
                let ty = self.apply_ops(spec.base, &d.ops);
                self.types.define_typedef(&name, ty);
                self.declare(&name, true);
            } else {
                self.declare(&name, false);
                if self.eat_punct(Punct::Assign) {
                    inits.push(self.initializer()?);
                }
            }
            if self.eat_punct(Punct::Comma) {
                continue;
            }
            self.expect_punct(Punct::Semi, "`;` after declaration")?;
            break;
        }
        Ok(self.mk_stmt(StmtKind::Decl(inits), start))
    }

    fn paren_expr(&mut self) -> Result<crate::ast::Expr, ParseError> {
        self.expect_punct(Punct::LParen, "`(`")?;
        let e = self.expression()?;
        self.expect_punct(Punct::RParen, "`)`")?;
        Ok(e)
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let start = self.cur_start();
        let Some(t) = self.peek().copied() else {
            return Err(self.unexpected("statement"));
        };
        if t.is_punct(Punct::LBrace) {
            return self.compound_statement();
        }
        if t.is_punct(Punct::Semi) {
            self.pos += 1;
            return Ok(self.mk_stmt(StmtKind::Empty, start));
        }
        if t.kind == TokenKind::Ident {
            let word = self.text(&t);
            match word {
                "if" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let then = Box::new(self.statement()?);
                    let otherwise = if self.eat_keyword("else") { Some(Box::new(self.statement()?)) } else { None };
                    return Ok(self.mk_stmt(StmtKind::If { cond, then, otherwise }, start));
                }
                "while" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.statement()?);
                    return Ok(self.mk_stmt(StmtKind::While { cond, body }, start));
                }
                "do" => {
                    self.pos += 1;
                    let body = Box::new(self.statement()?);
                    if !self.eat_keyword("while") {
                        return Err(self.unexpected("`while` after do body"));
                    }
                    let cond = self.paren_expr()?;
                    self.expect_punct(Punct::Semi, "`;` after do-while")?;
                    return Ok(self.mk_stmt(StmtKind::DoWhile { body, cond }, start));
                }
                "for" => {
                    self.pos += 1;
                    self.expect_punct(Punct::LParen, "`(` after for")?;
                    self.push_scope();
                    let r = self.for_rest(start);
                    self.pop_scope();
                    return r;
                }
                "switch" => {
                    self.pos += 1;
                    let cond = self.paren_expr()?;
                    let body = Box::new(self.statement()?);
                    return Ok(self.mk_stmt(StmtKind::Switch { cond, body }, start));
                }
                "case" => {
                    self.pos += 1;
                    let value = self.conditional_expr()?;
                    if self.is_punct(Punct::Ellipsis) {
                        return Err(self.unsupported("case range"));
                    }
                    self.expect_punct(Punct::Colon, "`:` after case label")?;
                    let body = Box::new(self.label_target()?);
                    return Ok(self.mk_stmt(StmtKind::Case { value, body }, start));
                }
                "default" => {
                    self.pos += 1;
                    self.expect_punct(Punct::Colon, "`:` after default")?;
                    let body = Box::new(self.label_target()?);
                    return Ok(self.mk_stmt(StmtKind::Default(body), start));
                }
                "break" | "continue" => {
                    self.pos += 1;
                    self.expect_punct(Punct::Semi, "`;`")?;
                    let kind = if word == "break" { StmtKind::Break } else { StmtKind::Continue };
                    return Ok(self.mk_stmt(kind, start));
                }
                "return" => {
                    self.pos += 1;
                    let value = if self.is_punct(Punct::Semi) { None } else { Some(self.expression()?) };
                    self.expect_punct(Punct::Semi, "`;` after return")?;
                    return Ok(self.mk_stmt(StmtKind::Return(value), start));
                }
                "goto" => {
                    self.pos += 1;
                    if self.is_punct(Punct::Star) {
                        return Err(self.unsupported("computed goto"));
                    }
                    let (label, _) = self.expect_ident("label")?;
                    self.expect_punct(Punct::Semi, "`;` after goto")?;
                    return Ok(self.mk_stmt(StmtKind::Goto(label), start));
                }
                "asm" | "__asm__" | "__asm" => return Err(self.unsupported("inline assembly")),
                _ => {}
            }
            if self.peek_at(1).is_some_and(|n| n.is_punct(Punct::Colon)) && !self.is_type_name(word) {
                self.pos += 2;
                let body = Box::new(self.label_target()?);
                return Ok(self.mk_stmt(StmtKind::Labeled { label: word.to_string(), body }, start));
            }
        }
        let e = self.expression()?;
        self.expect_punct(Punct::Semi, "`;` after expression")?;
        Ok(self.mk_stmt(StmtKind::Expr(e), start))
    }

    /// Statement following a label; C23 allows a declaration or nothing.
    fn label_target(&mut self) -> Result<Stmt, ParseError> {
        if self.is_punct(Punct::RBrace) {
            let at = self.cur_start();
            return Ok(Stmt { kind: StmtKind::Empty, span: Span::new(at, at) });
        }
        if self.starts_declaration() {
            return self.local_declaration();
        }
        self.statement()
    }

    fn for_rest(&mut self, start: usize) -> Result<Stmt, ParseError> {
        let init = if self.eat_punct(Punct::Semi) {
            None
        } else if self.starts_declaration() {
            Some(Box::new(self.local_declaration()?))
        } else {
            let s = self.cur_start();
            let e = self.expression()?;
            self.expect_punct(Punct::Semi, "`;` in for")?;
            Some(Box::new(self.mk_stmt(StmtKind::Expr(e), s)))
        };
        let cond = if self.is_punct(Punct::Semi) { None } else { Some(self.expression()?) };
        self.expect_punct(Punct::Semi, "`;` in for")?;
        let step = if self.is_punct(Punct::RParen) { None } else { Some(self.expression()?) };
        self.expect_punct(Punct::RParen, "`)` after for clauses")?;
        let body = Box::new(self.statement()?);
        Ok(self.mk_stmt(StmtKind::For { init, cond, step, body }, start))
    }
}
