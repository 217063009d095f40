//! Expressions over named functions with a differentiation operator `D(·)`.

mod eval;
mod identity;
mod parser;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::expsum::ExpSum;
use crate::scalar::{format_rational, GaussRat};

pub use eval::{eval_expr, Evaluator, ExprError};
pub use identity::{check_identity, ConstancyReport, IdentityError, IdentityMode, IdentityOptions, Verdict};
pub use parser::{parse, ParseError};

/// Function bindings for evaluation and identity checks.
pub type Env = BTreeMap<String, ExpSum>;

/// Source position of a node (1-based line and column, 0-based byte offset).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Const(GaussRat),
    Ident(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Deriv(Box<Expr>),
}

/// Syntax tree node. Equality ignores source positions.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr { kind, span: Span::default() }
    }

    pub fn constant(c: GaussRat) -> Self {
        Self::new(ExprKind::Const(c))
    }

    pub fn ident(name: &str) -> Self {
        Self::new(ExprKind::Ident(name.to_string()))
    }

    /// Names of all referenced functions, sorted and deduplicated.
    pub fn idents(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ExprKind::Ident(n) = &e.kind {
                out.push(n.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// Deepest nesting of `D(·)`.
    pub fn deriv_depth(&self) -> usize {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Ident(_) => 0,
            ExprKind::Neg(a) | ExprKind::Pow(a, _) => a.deriv_depth(),
            ExprKind::Deriv(a) => 1 + a.deriv_depth(),
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) | ExprKind::Div(a, b) => {
                a.deriv_depth().max(b.deriv_depth())
            }
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Ident(_) => {}
            ExprKind::Neg(a) | ExprKind::Pow(a, _) | ExprKind::Deriv(a) => a.visit(f),
            ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) | ExprKind::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Add(..) | ExprKind::Sub(..) => 1,
            ExprKind::Mul(..) | ExprKind::Div(..) => 2,
            ExprKind::Neg(_) => 3,
            ExprKind::Pow(..) => 4,
            ExprKind::Const(c) if !(c.im.is_zero() && !c.re.is_negative()) && *c != GaussRat::i() => 1,
            _ => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match &self.kind {
            ExprKind::Const(c) => write_const(f, c),
            ExprKind::Ident(n) => write!(f, "{n}"),
            ExprKind::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 3)
            }
            ExprKind::Add(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " + ")?;
                b.write_at(f, 2)
            }
            ExprKind::Sub(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " - ")?;
                b.write_at(f, 2)
            }
            ExprKind::Mul(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "*")?;
                b.write_at(f, 3)
            }
            ExprKind::Div(a, b) => {
                a.write_at(f, 2)?;
                write!(f, "/")?;
                // a bare integer after '/' would fold into a rational literal
                if matches!(&b.kind, ExprKind::Const(c) if c.im.is_zero() && c.re.is_integer()) {
                    write!(f, "(")?;
                    b.write_at(f, 0)?;
                    write!(f, ")")
                } else {
                    b.write_at(f, 3)
                }
            }
            ExprKind::Pow(a, k) => {
                a.write_at(f, 5)?;
                write!(f, "^{k}")
            }
            ExprKind::Deriv(a) => {
                write!(f, "D(")?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &GaussRat) -> fmt::Result {
    if *c == GaussRat::i() {
        return write!(f, "i");
    }
    if c.im.is_zero() {
        return if c.re.is_negative() {
            write!(f, "{}", format_rational(&c.re))
        } else if c.re.is_integer() {
            write!(f, "{}", c.re.numer())
        } else {
            write!(f, "({})", format_rational(&c.re))
        };
    }
    let im = format!("{}*i", format_rational(&c.im.abs()));
    let sign = if c.im.is_negative() { "-" } else { "+" };
    if c.re.is_zero() {
        let neg = if c.im.is_negative() { "-" } else { "" };
        write!(f, "{neg}{im}")
    } else {
        write!(f, "{} {sign} {im}", format_rational(&c.re))
    }
}

/// Canonical source text; `parse` maps it back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}
