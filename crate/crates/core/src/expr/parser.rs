//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' uint)?
//! base   := rational | 'i' | ident | 'D(' expr ')' | '(' expr ')'
//! ```
//!
//! `p/q` between integer literals folds into a rational constant unless the
//! denominator is zero, is raised to a power, or the numerator is itself a
//! divisor (`f/1/2` is `(f/1)/2`).

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{Expr, ExprKind, Span};
use crate::scalar::GaussRat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at line {}, column {}: found {}", self.line, self.column, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = src.char_indices().peekable();
    while let Some(&(off, ch)) = chars.peek() {
        let span = Span { offset: off, line, column: col };
        if ch == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if ch.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if ch.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push((Tok::Int(s.parse().expect("digits")), span));
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                s.push(d);
                chars.next();
                col += 1;
            }
            out.push((Tok::Ident(s), span));
            continue;
        }
        let tok = match ch {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            other => {
                return Err(ParseError { line, column: col, found: format!("character `{other}`"), expected: vec![] })
            }
        };
        chars.next();
        col += 1;
        out.push((tok, span));
    }
    let end = Span { offset: src.len(), line, column: col };
    out.push((Tok::Eof, end));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

const BASE_START: [&str; 5] = ["integer", "`i`", "identifier", "`D(`", "`(`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let (tok, span) = &self.toks[self.pos];
        ParseError {
            line: span.line,
            column: span.column,
            found: tok.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let span = self.span();
            let kind = match self.peek() {
                Tok::Plus => ExprKind::Add as fn(Box<Expr>, Box<Expr>) -> ExprKind,
                Tok::Minus => ExprKind::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr { kind: kind(Box::new(lhs), Box::new(rhs)), span };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor(false)?;
        loop {
            let span = self.span();
            let (kind, after_slash) = match self.peek() {
                Tok::Star => (ExprKind::Mul as fn(Box<Expr>, Box<Expr>) -> ExprKind, false),
                Tok::Slash => (ExprKind::Div as fn(Box<Expr>, Box<Expr>) -> ExprKind, true),
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor(after_slash)?;
            lhs = Expr { kind: kind(Box::new(lhs), Box::new(rhs)), span };
        }
    }

    fn factor(&mut self, after_slash: bool) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            let span = self.span();
            self.bump();
            let inner = self.factor(false)?;
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span });
        }
        let base = self.base(after_slash)?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let span = self.span();
        self.bump();
        match self.peek().clone() {
            Tok::Int(n) => {
                let Some(k) = n.to_u32() else {
                    return Err(self.error(&["exponent fitting in 32 bits"]));
                };
                self.bump();
                Ok(Expr { kind: ExprKind::Pow(Box::new(base), k), span })
            }
            _ => Err(self.error(&["nonnegative integer exponent"])),
        }
    }

    fn base(&mut self, after_slash: bool) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(p) => {
                self.bump();
                if !after_slash && *self.peek() == Tok::Slash && *self.peek_at(2) != Tok::Caret {
                    if let Tok::Int(q) = self.peek_at(1).clone() {
                        if !q.is_zero() {
                            self.bump();
                            self.bump();
                            let r = BigRational::new(p, q);
                            return Ok(Expr { kind: ExprKind::Const(GaussRat::real(r)), span });
                        }
                    }
                }
                Ok(Expr { kind: ExprKind::Const(GaussRat::real(BigRational::from_integer(p))), span })
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "i" {
                    return Ok(Expr { kind: ExprKind::Const(GaussRat::i()), span });
                }
                if name == "D" && *self.peek() == Tok::LParen {
                    self.bump();
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr { kind: ExprKind::Deriv(Box::new(inner)), span });
                }
                Ok(Expr { kind: ExprKind::Ident(name), span })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(&BASE_START)),
        }
    }
}

/// Parses expression source text. Unbound names are reported at evaluation.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(src)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}
