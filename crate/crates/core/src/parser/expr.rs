use alloc::boxed::Box;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::Parser;
use crate::ast::{BinOp, Expr, ExprKind, Initializer, PostfixOp, Span, UnaryOp};
use crate::ctype::TypeTable;
use crate::error::ParseError;
use crate::lexer::{parse_char_literal, parse_int_literal, Punct, TokenKind};

fn binop_of(p: Punct) -> Option<(BinOp, u8)> {
    use BinOp::*;
    Some(match p {
        Punct::Star => (Mul, 10),
        Punct::Slash => (Div, 10),
        Punct::Percent => (Rem, 10),
        Punct::Plus => (Add, 9),
        Punct::Minus => (Sub, 9),
        Punct::Shl => (Shl, 8),
        Punct::Shr => (Shr, 8),
        Punct::Lt => (Lt, 7),
        Punct::Gt => (Gt, 7),
        Punct::Le => (Le, 7),
        Punct::Ge => (Ge, 7),
        Punct::EqEq => (Eq, 6),
        Punct::Ne => (Ne, 6),
        Punct::Amp => (BitAnd, 5),
        Punct::Caret => (BitXor, 4),
        Punct::Pipe => (BitOr, 3),
        Punct::AmpAmp => (LogAnd, 2),
        Punct::PipePipe => (LogOr, 1),
        _ => return None,
    })
}

fn assign_op_of(p: Punct) -> Option<Option<BinOp>> {
    use BinOp::*;
    Some(match p {
        Punct::Assign => None,
        Punct::PlusAssign => Some(Add),
        Punct::MinusAssign => Some(Sub),
        Punct::StarAssign => Some(Mul),
        Punct::SlashAssign => Some(Div),
        Punct::PercentAssign => Some(Rem),
        Punct::AmpAssign => Some(BitAnd),
        Punct::PipeAssign => Some(BitOr),
        Punct::CaretAssign => Some(BitXor),
        Punct::ShlAssign => Some(Shl),
        Punct::ShrAssign => Some(Shr),
        _ => return None,
    })
}

const UNSUPPORTED_BUILTINS: &[&str] = &[
    "_Generic",
    "__builtin_offsetof",
    "__builtin_va_arg",
    "__builtin_types_compatible_p",
    "_Alignof",
    "__alignof__",
];

impl Parser<'_> {
    fn mk(&self, kind: ExprKind, start: usize) -> Expr {
        Expr { kind, span: Span::new(start, self.prev_end()) }
    }

    /// Full expression including the comma operator.
    pub(crate) fn expression(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let mut e = self.assignment_expr()?;
        while self.eat_punct(Punct::Comma) {
            let rhs = self.assignment_expr()?;
            e = self.mk(ExprKind::Comma { lhs: Box::new(e), rhs: Box::new(rhs) }, start);
        }
        Ok(e)
    }

    pub(crate) fn assignment_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let lhs = self.conditional_expr()?;
        let Some(t) = self.peek().copied() else { return Ok(lhs) };
        let TokenKind::Punct(p) = t.kind else { return Ok(lhs) };
        let Some(op) = assign_op_of(p) else { return Ok(lhs) };
        self.pos += 1;
        let rhs = self.assignment_expr()?;
        Ok(self.mk(
            ExprKind::Assign { op, op_span: Span::new(t.start, t.end), lhs: Box::new(lhs), rhs: Box::new(rhs) },
            start,
        ))
    }

    pub(crate) fn conditional_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let cond = self.binary_expr(1)?;
        if !self.eat_punct(Punct::Question) {
            return Ok(cond);
        }
        if self.is_punct(Punct::Colon) {
            return Err(self.unsupported("conditional with omitted operand"));
        }
        let then = self.expression()?;
        self.expect_punct(Punct::Colon, "`:` in conditional expression")?;
        let otherwise = self.conditional_expr()?;
        Ok(self.mk(
            ExprKind::Conditional { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
            start,
        ))
    }

    fn binary_expr(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let mut lhs = self.cast_expr()?;
        loop {
            let Some(t) = self.peek().copied() else { break };
            let TokenKind::Punct(p) = t.kind else { break };
            let Some((op, prec)) = binop_of(p) else { break };
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.binary_expr(prec + 1)?;
            lhs = self.mk(
                ExprKind::Binary { op, op_span: Span::new(t.start, t.end), lhs: Box::new(lhs), rhs: Box::new(rhs) },
                start,
            );
        }
        Ok(lhs)
    }

    /// True when `(` at the cursor opens a type name.
    fn paren_starts_type(&self) -> bool {
        match self.peek_at(1) {
            Some(t) if t.kind == TokenKind::Ident => self.is_spec_word(self.text(t)),
            _ => false,
        }
    }

    fn cast_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        if self.is_punct(Punct::LParen) && self.paren_starts_type() {
            self.pos += 1;
            let (ty, _) = self.type_name()?;
            self.expect_punct(Punct::RParen, "`)` after type name")?;
            if self.is_punct(Punct::LBrace) {
                let init = self.initializer_list()?;
                let lit = self.mk(ExprKind::CompoundLiteral { ty, init }, start);
                return self.postfix_tail(lit, start);
            }
            let expr = self.cast_expr()?;
            return Ok(self.mk(ExprKind::Cast { ty, expr: Box::new(expr) }, start));
        }
        self.unary_expr()
    }

    fn unary_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let Some(t) = self.peek().copied() else {
            return Err(self.unexpected("expression"));
        };
        let op = match t.kind {
            TokenKind::Punct(Punct::Minus) => Some(UnaryOp::Neg),
            TokenKind::Punct(Punct::Plus) => Some(UnaryOp::Plus),
            TokenKind::Punct(Punct::Bang) => Some(UnaryOp::Not),
            TokenKind::Punct(Punct::Tilde) => Some(UnaryOp::BitNot),
            TokenKind::Punct(Punct::Star) => Some(UnaryOp::Deref),
            TokenKind::Punct(Punct::Amp) => Some(UnaryOp::AddrOf),
            TokenKind::Punct(Punct::PlusPlus) => Some(UnaryOp::PreInc),
            TokenKind::Punct(Punct::MinusMinus) => Some(UnaryOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.pos += 1;
            let operand = if matches!(op, UnaryOp::PreInc | UnaryOp::PreDec) {
                self.unary_expr()?
            } else {
                self.cast_expr()?
            };
            return Ok(self.mk(ExprKind::Unary { op, operand: Box::new(operand) }, start));
        }
        if t.is_punct(Punct::AmpAmp) {
            return Err(self.unsupported("address of label"));
        }
        if self.eat_keyword("sizeof") {
            if self.is_punct(Punct::LParen) && self.paren_starts_type() {
                self.pos += 1;
                let (ty, _) = self.type_name()?;
                self.expect_punct(Punct::RParen, "`)` after type name")?;
                if self.is_punct(Punct::LBrace) {
                    // sizeof applied to a compound literal.
                    let init = self.initializer_list()?;
                    let lit = self.mk(ExprKind::CompoundLiteral { ty, init }, ty.start - 1);
                    let lit = self.postfix_tail(lit, ty.start - 1)?;
                    return Ok(self.mk(ExprKind::SizeofExpr(Box::new(lit)), start));
                }
                return Ok(self.mk(ExprKind::SizeofType(ty), start));
            }
            let operand = self.unary_expr()?;
            return Ok(self.mk(ExprKind::SizeofExpr(Box::new(operand)), start));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let primary = self.primary_expr()?;
        self.postfix_tail(primary, start)
    }

    fn postfix_tail(&mut self, mut e: Expr, start: usize) -> Result<Expr, ParseError> {
        loop {
            if self.eat_punct(Punct::LBracket) {
                let index = self.expression()?;
                self.expect_punct(Punct::RBracket, "`]`")?;
                e = self.mk(ExprKind::Index { base: Box::new(e), index: Box::new(index) }, start);
            } else if self.eat_punct(Punct::LParen) {
                let mut args = Vec::new();
                if !self.eat_punct(Punct::RParen) {
                    loop {
                        args.push(self.assignment_expr()?);
                        if self.eat_punct(Punct::Comma) {
                            continue;
                        }
                        self.expect_punct(Punct::RParen, "`,` or `)` in call")?;
                        break;
                    }
                }
                e = self.mk(ExprKind::Call { callee: Box::new(e), args }, start);
            } else if self.is_punct(Punct::Dot) || self.is_punct(Punct::Arrow) {
                let arrow = self.is_punct(Punct::Arrow);
                self.pos += 1;
                let (field, _) = self.expect_ident("member name")?;
                e = self.mk(ExprKind::Member { base: Box::new(e), field, arrow }, start);
            } else if self.eat_punct(Punct::PlusPlus) {
                e = self.mk(ExprKind::Postfix { op: PostfixOp::Inc, operand: Box::new(e) }, start);
            } else if self.eat_punct(Punct::MinusMinus) {
                e = self.mk(ExprKind::Postfix { op: PostfixOp::Dec, operand: Box::new(e) }, start);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, ParseError> {
        let start = self.cur_start();
        let Some(t) = self.peek().copied() else {
            return Err(self.unexpected("expression"));
        };
        match t.kind {
            TokenKind::Ident => {
                let name = self.text(&t);
                if UNSUPPORTED_BUILTINS.contains(&name) {
                    return Err(self.unsupported(name));
                }
                if self.is_type_name(name) || self.is_spec_keyword(name) {
                    return Err(self.unexpected("expression"));
                }
                self.pos += 1;
                Ok(self.mk(ExprKind::Ident(name.to_string()), start))
            }
            TokenKind::Int => {
                self.pos += 1;
                Ok(self.mk(ExprKind::IntLit, start))
            }
            TokenKind::Float => {
                self.pos += 1;
                Ok(self.mk(ExprKind::FloatLit, start))
            }
            TokenKind::Char => {
                self.pos += 1;
                Ok(self.mk(ExprKind::CharLit, start))
            }
            TokenKind::Str => {
                while self.peek().is_some_and(|t| t.kind == TokenKind::Str) {
                    self.pos += 1;
                }
                Ok(self.mk(ExprKind::StrLit, start))
            }
            TokenKind::Punct(Punct::LParen) => {
                if self.peek_at(1).is_some_and(|t| t.is_punct(Punct::LBrace)) {
                    return Err(self.unsupported("statement expression"));
                }
                self.pos += 1;
                let inner = self.expression()?;
                self.expect_punct(Punct::RParen, "`)`")?;
                Ok(self.mk(ExprKind::Paren(Box::new(inner)), start))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    fn is_spec_keyword(&self, name: &str) -> bool {
        matches!(
            name,
            "int" | "char" | "short" | "long" | "float" | "double" | "void" | "signed" | "unsigned" | "_Bool"
                | "struct" | "union" | "enum" | "const" | "volatile" | "static" | "extern" | "typedef"
                | "if" | "else" | "while" | "for" | "do" | "switch" | "case" | "default" | "return"
                | "break" | "continue" | "goto"
        )
    }

    /// `{ initializer, ... }` with optional designators.
    pub(crate) fn initializer_list(&mut self) -> Result<Vec<Initializer>, ParseError> {
        self.expect_punct(Punct::LBrace, "`{`")?;
        let mut items = Vec::new();
        while !self.eat_punct(Punct::RBrace) {
            loop {
                if self.eat_punct(Punct::Dot) {
                    self.expect_ident("designator")?;
                } else if self.eat_punct(Punct::LBracket) {
                    self.conditional_expr()?;
                    if self.is_punct(Punct::Ellipsis) {
                        return Err(self.unsupported("range designator"));
                    }
                    self.expect_punct(Punct::RBracket, "`]`")?;
                } else {
                    break;
                }
            }
            if self.eat_punct(Punct::Assign) {}
            items.push(self.initializer()?);
            if !self.eat_punct(Punct::Comma) {
                self.expect_punct(Punct::RBrace, "`,` or `}` in initializer")?;
                break;
            }
        }
        Ok(items)
    }

    pub(crate) fn initializer(&mut self) -> Result<Initializer, ParseError> {
        if self.is_punct(Punct::LBrace) {
            Ok(Initializer::List(self.initializer_list()?))
        } else {
            Ok(Initializer::Expr(self.assignment_expr()?))
        }
    }
}

/// Evaluates an integer constant expression. Returns `None` for anything that
/// is not a compile-time integer constant this crate can evaluate without an
/// ABI (e.g. `sizeof`).
pub fn eval_const(e: &Expr, src: &str, types: &TypeTable) -> Option<i128> {
    use BinOp::*;
    Some(match &e.kind {
        ExprKind::IntLit => parse_int_literal(e.span.text(src))?.0 as i128,
        ExprKind::CharLit => parse_char_literal(e.span.text(src))? as i128,
        ExprKind::Ident(name) => types.enum_constant(name)? as i128,
        ExprKind::Paren(inner) => eval_const(inner, src, types)?,
        ExprKind::Cast { expr, .. } => eval_const(expr, src, types)?,
        ExprKind::Unary { op, operand } => {
            let v = eval_const(operand, src, types)?;
            match op {
                UnaryOp::Neg => v.checked_neg()?,
                UnaryOp::Plus => v,
                UnaryOp::Not => (v == 0) as i128,
                UnaryOp::BitNot => !v,
                _ => return None,
            }
        }
        ExprKind::Binary { op, lhs, rhs, .. } => {
            let a = eval_const(lhs, src, types)?;
            if *op == LogAnd && a == 0 {
                return Some(0);
            }
            if *op == LogOr && a != 0 {
                return Some(1);
            }
            let b = eval_const(rhs, src, types)?;
            match op {
                Add => a.checked_add(b)?,
                Sub => a.checked_sub(b)?,
                Mul => a.checked_mul(b)?,
                Div => a.checked_div(b)?,
                Rem => a.checked_rem(b)?,
                Shl => a.checked_shl(u32::try_from(b).ok()?)?,
                Shr => a.checked_shr(u32::try_from(b).ok()?)?,
                Lt => (a < b) as i128,
                Gt => (a > b) as i128,
                Le => (a <= b) as i128,
                Ge => (a >= b) as i128,
                Eq => (a == b) as i128,
                Ne => (a != b) as i128,
                BitAnd => a & b,
                BitOr => a | b,
                BitXor => a ^ b,
                LogAnd | LogOr => (b != 0) as i128,
            }
        }
        ExprKind::Conditional { cond, then, otherwise } => {
            if eval_const(cond, src, types)? != 0 {
                eval_const(then, src, types)?
            } else {
                eval_const(otherwise, src, types)?
            }
        }
        _ => return None,
    })
}
