//! Hand-rolled lexer for MiniC.
//!
//! Line comments (`//`), block comments (`/* */`), decimal integer literals,
//! identifiers/keywords, and the fixed punctuation set. String literals exist
//! solely as arguments of the `__fire` pseudo-statement. A bare `/` is
//! rejected here with a dedicated message: MiniC has no division.

use crate::diag::Pos;
use crate::frontend::FrontendError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    KwInt,
    KwChar,
    KwVoid,
    KwIf,
    KwElse,
    KwWhile,
    KwReturn,
    KwNull,
    KwExtern,
    KwFire,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    AndAnd,
    OrOr,
    Not,
    Plus,
    Minus,
    Star,
    Amp,
    PlusPlus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::KwInt => "`int`".into(),
            Tok::KwChar => "`char`".into(),
            Tok::KwVoid => "`void`".into(),
            Tok::KwIf => "`if`".into(),
            Tok::KwElse => "`else`".into(),
            Tok::KwWhile => "`while`".into(),
            Tok::KwReturn => "`return`".into(),
            Tok::KwNull => "`NULL`".into(),
            Tok::KwExtern => "`extern`".into(),
            Tok::KwFire => "`__fire`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Assign => "`=`".into(),
            Tok::Eq => "`==`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::AndAnd => "`&&`".into(),
            Tok::OrOr => "`||`".into(),
            Tok::Not => "`!`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Amp => "`&`".into(),
            Tok::PlusPlus => "`++`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn lex(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let mut chars: Vec<char> = source.chars().collect();
    // Sentinel simplifies two-character lookahead.
    chars.push('\0');
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() - 1 {
        let c = chars[i];
        let pos = Pos::new(line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => bump!(),
            '/' => {
                if chars[i + 1] == '/' {
                    while i < chars.len() - 1 && chars[i] != '\n' {
                        bump!();
                    }
                } else if chars[i + 1] == '*' {
                    bump!();
                    bump!();
                    loop {
                        if i >= chars.len() - 1 {
                            return Err(FrontendError::syntax(pos, "unterminated block comment"));
                        }
                        if chars[i] == '*' && chars[i + 1] == '/' {
                            bump!();
                            bump!();
                            break;
                        }
                        bump!();
                    }
                } else {
                    return Err(FrontendError::unsupported(
                        pos,
                        "division is not part of MiniC",
                    ));
                }
            }
            '0'..='9' => {
                let mut v: i64 = 0;
                while chars[i].is_ascii_digit() {
                    v = v
                        .checked_mul(10)
                        .and_then(|v| v.checked_add((chars[i] as u8 - b'0') as i64))
                        .ok_or_else(|| {
                            FrontendError::syntax(pos, "integer literal out of range")
                        })?;
                    bump!();
                }
                if chars[i].is_ascii_alphabetic() || chars[i] == '_' {
                    return Err(FrontendError::syntax(pos, "malformed integer literal"));
                }
                out.push(Token { tok: Tok::Int(v), pos });
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while chars[i].is_ascii_alphanumeric() || chars[i] == '_' {
                    bump!();
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.as_str() {
                    "int" => Tok::KwInt,
                    "char" => Tok::KwChar,
                    "void" => Tok::KwVoid,
                    "if" => Tok::KwIf,
                    "else" => Tok::KwElse,
                    "while" => Tok::KwWhile,
                    "return" => Tok::KwReturn,
                    "NULL" => Tok::KwNull,
                    "extern" => Tok::KwExtern,
                    "__fire" => Tok::KwFire,
                    _ => Tok::Ident(word),
                };
                out.push(Token { tok, pos });
            }
            '"' => {
                bump!();
                let start = i;
                while chars[i] != '"' {
                    if chars[i] == '\n' || i >= chars.len() - 1 {
                        return Err(FrontendError::syntax(pos, "unterminated string literal"));
                    }
                    bump!();
                }
                let s: String = chars[start..i].iter().collect();
                bump!();
                out.push(Token { tok: Tok::Str(s), pos });
            }
            _ => {
                let two = |a: char, b: char| c == a && chars[i + 1] == b;
                let (tok, width) = if two('=', '=') {
                    (Tok::Eq, 2)
                } else if two('!', '=') {
                    (Tok::Ne, 2)
                } else if two('<', '=') {
                    (Tok::Le, 2)
                } else if two('>', '=') {
                    (Tok::Ge, 2)
                } else if two('&', '&') {
                    (Tok::AndAnd, 2)
                } else if two('|', '|') {
                    (Tok::OrOr, 2)
                } else if two('+', '+') {
                    (Tok::PlusPlus, 2)
                } else {
                    let t = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '{' => Tok::LBrace,
                        '}' => Tok::RBrace,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ';' => Tok::Semi,
                        ',' => Tok::Comma,
                        '=' => Tok::Assign,
                        '<' => Tok::Lt,
                        '>' => Tok::Gt,
                        '!' => Tok::Not,
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '&' => Tok::Amp,
                        other => {
                            return Err(FrontendError::syntax(
                                pos,
                                format!("unexpected character `{other}`"),
                            ));
                        }
                    };
                    (t, 1)
                };
                for _ in 0..width {
                    bump!();
                }
                out.push(Token { tok, pos });
            }
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        lex(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_operators_and_keywords() {
        assert_eq!(
            toks("if (a <= b && c) { x++; }"),
            vec![
                Tok::KwIf,
                Tok::LParen,
                Tok::Ident("a".into()),
                Tok::Le,
                Tok::Ident("b".into()),
                Tok::AndAnd,
                Tok::Ident("c".into()),
                Tok::RParen,
                Tok::LBrace,
                Tok::Ident("x".into()),
                Tok::PlusPlus,
                Tok::Semi,
                Tok::RBrace,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(
            toks("a // whole line\n /* block\n spanning */ b"),
            vec![Tok::Ident("a".into()), Tok::Ident("b".into()), Tok::Eof]
        );
    }

    #[test]
    fn division_is_rejected_with_a_specific_message() {
        let err = lex("a / b").unwrap_err();
        assert!(err.to_string().contains("division"), "{err}");
    }

    #[test]
    fn positions_are_one_based_line_and_column() {
        let ts = lex("a\n  b").unwrap();
        assert_eq!(ts[0].pos, Pos::new(1, 1));
        assert_eq!(ts[1].pos, Pos::new(2, 3));
    }

    #[test]
    fn fire_keyword_and_string_literal() {
        assert_eq!(
            toks("__fire(\"lock_sm\", \"lock\", L);"),
            vec![
                Tok::KwFire,
                Tok::LParen,
                Tok::Str("lock_sm".into()),
                Tok::Comma,
                Tok::Str("lock".into()),
                Tok::Comma,
                Tok::Ident("L".into()),
                Tok::RParen,
                Tok::Semi,
                Tok::Eof,
            ]
        );
    }
}
