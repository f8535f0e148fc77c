use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{codes, Diagnostic};

/// Largest numeric literal accepted; keeps `n + 1` arithmetic in range.
pub const MAX_NAT: u32 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Nat(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Minus,
    Assign,
    Op(crate::temporal::CmpOp),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Assign => f.write_str("`=`"),
            Tok::Op(op) => write!(f, "`{op}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

fn advance(n: usize, i: &mut usize, col: &mut u32) {
    *i += n;
    *col += n as u32;
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    use crate::temporal::CmpOp;

    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(1, &mut i, &mut col);
            }
            continue;
        }
        let push = |tok: Tok, out: &mut Vec<Token>| out.push(Token { tok, line: tl, col: tc });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(1, &mut i, &mut col);
            }
            push(Tok::Ident(chars[start..i].iter().collect()), &mut out);
            continue;
        }
        if c.is_ascii_digit() {
            let mut value: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                value = value.saturating_mul(10).saturating_add(u64::from(chars[i] as u8 - b'0'));
                advance(1, &mut i, &mut col);
            }
            if value > u64::from(MAX_NAT) {
                return Err(Diagnostic::new(tl, tc, codes::NUMBER_TOO_LARGE, alloc::format!("number exceeds {MAX_NAT}")));
            }
            push(Tok::Nat(value as u32), &mut out);
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            ('-', _) => (Tok::Minus, 1),
            ('<', Some('=')) => (Tok::Op(CmpOp::Le), 2),
            ('>', Some('=')) => (Tok::Op(CmpOp::Ge), 2),
            ('=', Some('=')) => (Tok::Op(CmpOp::Eq), 2),
            ('<', _) => (Tok::Op(CmpOp::Lt), 1),
            ('>', _) => (Tok::Op(CmpOp::Gt), 1),
            ('=', _) => (Tok::Assign, 1),
            _ => {
                return Err(Diagnostic::new(tl, tc, codes::INVALID_CHARACTER, alloc::format!("unexpected character `{}`", c.escape_debug())));
            }
        };
        advance(len, &mut i, &mut col);
        push(tok, &mut out);
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
