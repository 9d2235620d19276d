use alloc::string::String;
use core::fmt;

/// 1-based line/column position in a translation unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Location {
    pub line: u32,
    pub column: u32,
    pub offset: usize,
}

impl Location {
    pub fn of(src: &str, offset: usize) -> Location {
        let offset = offset.min(src.len());
        let before = &src.as_bytes()[..offset];
        let line = before.iter().filter(|&&b| b == b'\n').count() as u32 + 1;
        let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
        Location { line, column: (offset - line_start) as u32 + 1, offset }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {at}: unexpected `{token}`, expected {expected}")]
    Syntax { at: Location, token: String, expected: &'static str },
    #[error("unsupported construct at {at}: {kind}")]
    Unsupported { kind: String, at: Location },
}

impl ParseError {
    pub fn location(&self) -> Location {
        match self {
            ParseError::Syntax { at, .. } | ParseError::Unsupported { at, .. } => *at,
        }
    }
}
