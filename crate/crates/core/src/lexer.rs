//! Tokenizer for preprocessed C.
//!
//! Every token keeps its byte span into the original text so that later
//! stages (mutation, renaming) can rewrite source without re-printing it.
//! Comments and whitespace are dropped. Lines whose first non-blank byte is
//! `#` (line markers, pragmas) are skipped entirely.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Location, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Char,
    Str,
    Punct(Punct),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Punct {
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Colon,
    Question,
    Dot,
    Ellipsis,
    Arrow,
    PlusPlus,
    MinusMinus,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Amp,
    Pipe,
    Caret,
    Tilde,
    Bang,
    AmpAmp,
    PipePipe,
    Shl,
    Shr,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    Ne,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    PercentAssign,
    AmpAssign,
    PipeAssign,
    CaretAssign,
    ShlAssign,
    ShrAssign,
    Hash,
    HashHash,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        use Punct::*;
        match self {
            LParen => "(",
            RParen => ")",
            LBracket => "[",
            RBracket => "]",
            LBrace => "{",
            RBrace => "}",
            Semi => ";",
            Comma => ",",
            Colon => ":",
            Question => "?",
            Dot => ".",
            Ellipsis => "...",
            Arrow => "->",
            PlusPlus => "++",
            MinusMinus => "--",
            Plus => "+",
            Minus => "-",
            Star => "*",
            Slash => "/",
            Percent => "%",
            Amp => "&",
            Pipe => "|",
            Caret => "^",
            Tilde => "~",
            Bang => "!",
            AmpAmp => "&&",
            PipePipe => "||",
            Shl => "<<",
            Shr => ">>",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            EqEq => "==",
            Ne => "!=",
            Assign => "=",
            PlusAssign => "+=",
            MinusAssign => "-=",
            StarAssign => "*=",
            SlashAssign => "/=",
            PercentAssign => "%=",
            AmpAssign => "&=",
            PipeAssign => "|=",
            CaretAssign => "^=",
            ShlAssign => "<<=",
            ShrAssign => ">>=",
            Hash => "#",
            HashHash => "##",
        }
    }
}

// Longest match first.
const PUNCTS: &[(&str, Punct)] = &[
    ("...", Punct::Ellipsis),
    ("<<=", Punct::ShlAssign),
    (">>=", Punct::ShrAssign),
    ("->", Punct::Arrow),
    ("++", Punct::PlusPlus),
    ("--", Punct::MinusMinus),
    ("&&", Punct::AmpAmp),
    ("||", Punct::PipePipe),
    ("<<", Punct::Shl),
    (">>", Punct::Shr),
    ("<=", Punct::Le),
    (">=", Punct::Ge),
    ("==", Punct::EqEq),
    ("!=", Punct::Ne),
    ("+=", Punct::PlusAssign),
    ("-=", Punct::MinusAssign),
    ("*=", Punct::StarAssign),
    ("/=", Punct::SlashAssign),
    ("%=", Punct::PercentAssign),
    ("&=", Punct::AmpAssign),
    ("|=", Punct::PipeAssign),
    ("^=", Punct::CaretAssign),
    ("##", Punct::HashHash),
    ("(", Punct::LParen),
    (")", Punct::RParen),
    ("[", Punct::LBracket),
    ("]", Punct::RBracket),
    ("{", Punct::LBrace),
    ("}", Punct::RBrace),
    (";", Punct::Semi),
    (",", Punct::Comma),
    (":", Punct::Colon),
    ("?", Punct::Question),
    (".", Punct::Dot),
    ("+", Punct::Plus),
    ("-", Punct::Minus),
    ("*", Punct::Star),
    ("/", Punct::Slash),
    ("%", Punct::Percent),
    ("&", Punct::Amp),
    ("|", Punct::Pipe),
    ("^", Punct::Caret),
    ("~", Punct::Tilde),
    ("!", Punct::Bang),
    ("<", Punct::Lt),
    (">", Punct::Gt),
    ("=", Punct::Assign),
    ("#", Punct::Hash),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }
}

fn is_ident_start(b: u8) -> bool {
    b == b'_' || b == b'$' || b.is_ascii_alphabetic()
}

fn is_ident_continue(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line_start = true;

    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
            i += 2;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ParseError::Syntax {
                        at: Location::of(src, start),
                        token: "/*".into(),
                        expected: "end of comment",
                    });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        if b == b'#' && line_start {
            // Directive or line marker: skip the logical line.
            while i < bytes.len() && bytes[i] != b'\n' {
                if bytes[i] == b'\\' && bytes.get(i + 1) == Some(&b'\n') {
                    i += 1;
                }
                i += 1;
            }
            continue;
        }
        line_start = false;
        let start = i;

        // Character and string literals, with optional encoding prefix.
        let prefix_len = literal_prefix(&bytes[i..]);
        if let Some(&q) = bytes.get(i + prefix_len) {
            if (q == b'\'' || q == b'"') && (prefix_len > 0 || b == q) {
                i += prefix_len + 1;
                loop {
                    match bytes.get(i) {
                        None | Some(b'\n') => {
                            return Err(ParseError::Syntax {
                                at: Location::of(src, start),
                                token: src[start..i].into(),
                                expected: "closing quote",
                            })
                        }
                        Some(b'\\') => i += 2,
                        Some(&c) if c == q => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                let kind = if q == b'\'' { TokenKind::Char } else { TokenKind::Str };
                toks.push(Token { kind, start, end: i });
                continue;
            }
        }

        if is_ident_start(b) {
            while i < bytes.len() && is_ident_continue(bytes[i]) {
                i += 1;
            }
            toks.push(Token { kind: TokenKind::Ident, start, end: i });
            continue;
        }

        if b.is_ascii_digit() || (b == b'.' && bytes.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            // pp-number
            i += 1;
            while i < bytes.len() {
                let c = bytes[i];
                if (c == b'+' || c == b'-') && matches!(bytes[i - 1], b'e' | b'E' | b'p' | b'P') {
                    let hex = src[start..i].starts_with("0x") || src[start..i].starts_with("0X");
                    let exp_char = bytes[i - 1];
                    if !hex && matches!(exp_char, b'e' | b'E') || hex && matches!(exp_char, b'p' | b'P') {
                        i += 1;
                        continue;
                    }
                    break;
                }
                if is_ident_continue(c) || c == b'.' || c == b'\'' {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            let kind = if is_float_literal(text) { TokenKind::Float } else { TokenKind::Int };
            toks.push(Token { kind, start, end: i });
            continue;
        }

        let rest = &src[i..];
        match PUNCTS.iter().find(|(s, _)| rest.starts_with(s)) {
            Some((s, p)) => {
                i += s.len();
                toks.push(Token { kind: TokenKind::Punct(*p), start, end: i });
            }
            None => {
                let ch = rest.chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    at: Location::of(src, start),
                    token: ch.into(),
                    expected: "a C token",
                });
            }
        }
    }
    Ok(toks)
}

fn literal_prefix(rest: &[u8]) -> usize {
    if rest.starts_with(b"u8") && matches!(rest.get(2), Some(b'"') | Some(b'\'')) {
        2
    } else if matches!(rest.first(), Some(b'L') | Some(b'u') | Some(b'U'))
        && matches!(rest.get(1), Some(b'"') | Some(b'\''))
    {
        1
    } else {
        0
    }
}

fn is_float_literal(text: &str) -> bool {
    let lower = text.as_bytes();
    let hex = text.starts_with("0x") || text.starts_with("0X");
    if hex {
        lower.iter().any(|&c| c == b'.' || c == b'p' || c == b'P')
    } else {
        lower.iter().any(|&c| c == b'.' || c == b'e' || c == b'E')
    }
}

/// Splits an integer literal into its numeric value and suffix (`u`, `ul`, ...).
pub fn parse_int_literal(text: &str) -> Option<(u128, &str)> {
    let cleaned_end = text
        .char_indices()
        .rev()
        .take_while(|(_, c)| matches!(c, 'u' | 'U' | 'l' | 'L'))
        .last()
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (digits, suffix) = text.split_at(cleaned_end);
    let digits: alloc::string::String = digits.chars().filter(|&c| c != '\'').collect();
    let value = if let Some(h) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        u128::from_str_radix(h, 16).ok()?
    } else if let Some(b) = digits.strip_prefix("0b").or_else(|| digits.strip_prefix("0B")) {
        u128::from_str_radix(b, 2).ok()?
    } else if digits.len() > 1 && digits.starts_with('0') {
        u128::from_str_radix(&digits[1..], 8).ok()?
    } else {
        digits.parse::<u128>().ok()?
    };
    Some((value, suffix))
}

/// Value of a simple character constant (`'a'`, `'\n'`, `'\x41'`, `'\0'`).
pub fn parse_char_literal(text: &str) -> Option<i64> {
    let inner = text.trim_start_matches(['L', 'u', 'U', '8']).strip_prefix('\'')?.strip_suffix('\'')?;
    let mut chars = inner.chars();
    let c = chars.next()?;
    if c != '\\' {
        return if chars.next().is_none() { Some(c as i64) } else { None };
    }
    let esc = chars.next()?;
    let rest: alloc::string::String = chars.collect();
    let v = match esc {
        'n' => 10,
        't' => 9,
        'r' => 13,
        'a' => 7,
        'b' => 8,
        'f' => 12,
        'v' => 11,
        '\\' => 92,
        '\'' => 39,
        '"' => 34,
        '?' => 63,
        'x' => i64::from_str_radix(&rest, 16).ok()?,
        d if d.is_digit(8) => {
            let mut s = alloc::string::String::new();
            s.push(d);
            s.push_str(&rest);
            i64::from_str_radix(&s, 8).ok()?
        }
        _ => return None,
    };
    if esc != 'x' && !esc.is_ascii_digit() && !rest.is_empty() {
        return None;
    }
    Some(v)
}
