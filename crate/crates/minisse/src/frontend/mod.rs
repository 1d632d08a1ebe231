//! MiniC frontend: lexing, parsing, semantic checking, CFG construction, a
//! reference interpreter, and a printer that turns ASTs back into source.
//!
//! The language is a small C subset built for analyzability: `int`, `char`,
//! and pointers; fixed-size global arrays; structured control flow only; calls
//! only as statements; no recursion, no pointer arithmetic, no division.

pub mod ast;
pub mod check;
pub mod cfg;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod pretty;

use crate::diag::{Diagnostic, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input: lexing or parsing failed.
    Syntax,
    /// Well-formed but ill-typed.
    Type,
    /// Well-formed C that MiniC deliberately excludes.
    Unsupported,
}

/// A frontend rejection, positioned at the offending token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub pos: Pos,
    pub msg: String,
}

impl FrontendError {
    pub fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError { kind: ErrorKind::Syntax, pos, msg: msg.into() }
    }

    pub fn type_(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError { kind: ErrorKind::Type, pos, msg: msg.into() }
    }

    pub fn unsupported(pos: Pos, msg: impl Into<String>) -> Self {
        FrontendError { kind: ErrorKind::Unsupported, pos, msg: msg.into() }
    }

    pub fn to_diagnostic(&self, file: &str) -> Diagnostic {
        Diagnostic::error(file, self.pos, &self.msg)
    }
}

impl std::fmt::Display for FrontendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Type => "type error",
            ErrorKind::Unsupported => "unsupported",
        };
        write!(f, "{}:{} {}: {}", self.pos.line, self.pos.col, kind, self.msg)
    }
}

impl std::error::Error for FrontendError {}

pub use ast::MiniCProgram;
pub use cfg::{build_cfg, restrict_to_entry, ProgramCfg};
pub use check::check;
pub use parser::parse;

/// Parse and check in one step — the standard way to admit source text.
pub fn parse_and_check(src: &str) -> Result<MiniCProgram, FrontendError> {
    let prog = parser::parse(src)?;
    check::check(&prog)?;
    Ok(prog)
}

/// Parse, check, and lower to a CFG.
pub fn compile(src: &str) -> Result<ProgramCfg, FrontendError> {
    Ok(build_cfg(parse_and_check(src)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Pos;

    #[test]
    fn error_display_carries_position_kind_and_message() {
        let e = FrontendError::type_(Pos::new(3, 7), "`x` is undeclared");
        let s = e.to_string();
        assert!(s.contains("3:7"));
        assert!(s.contains("type error"));
        assert!(s.contains("`x` is undeclared"));
        assert_eq!(
            e.to_diagnostic("f.mc").to_string(),
            "f.mc:3:7: error: `x` is undeclared"
        );
    }

    #[test]
    fn parse_and_check_accepts_a_whole_program() {
        assert!(parse_and_check("int g; void f(int n) { g = n; }").is_ok());
        assert!(parse_and_check("void f() { undeclared = 1; }").is_err());
    }
}
