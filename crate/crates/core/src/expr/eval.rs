//! Pointwise evaluation by truncated Taylor series ("jets").
//!
//! Each node carries the Taylor coefficients of its value at `z` up to the
//! order needed by the enclosing `D(·)` nodes, plus a parallel magnitude
//! series that bounds the size of the intermediate terms. The magnitude is
//! what relative tolerances are measured against.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{Env, Expr, ExprKind};
use crate::expsum::{NumericSum, MAX_EXPONENT};

/// Smallest divisor magnitude accepted before reporting a pole.
pub const POLE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unbound identifier `{0}`")]
    Unbound(String),
    #[error("division by zero (pole) at z = {z}")]
    Pole { z: Complex64 },
    #[error("value overflows at z = {z}")]
    Overflow { z: Complex64 },
}

#[derive(Clone, Debug)]
struct Jet {
    c: Vec<Complex64>,
    mag: Vec<f64>,
}

impl Jet {
    fn constant(v: Complex64, len: usize) -> Jet {
        let mut c = vec![Complex64::new(0.0, 0.0); len];
        let mut mag = vec![0.0; len];
        c[0] = v;
        mag[0] = v.norm();
        Jet { c, mag }
    }

    fn len(&self) -> usize {
        self.c.len()
    }

    fn add(&self, o: &Jet, sign: f64) -> Jet {
        let n = self.len().min(o.len());
        Jet {
            c: (0..n).map(|k| self.c[k] + o.c[k] * sign).collect(),
            mag: (0..n).map(|k| self.mag[k] + o.mag[k]).collect(),
        }
    }

    fn mul(&self, o: &Jet) -> Jet {
        let n = self.len().min(o.len());
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut mag = vec![0.0; n];
        for k in 0..n {
            for j in 0..=k {
                c[k] += self.c[j] * o.c[k - j];
                mag[k] += self.mag[j] * o.mag[k - j];
            }
        }
        Jet { c, mag }
    }

    fn div(&self, o: &Jet, z: Complex64) -> Result<Jet, ExprError> {
        let b0 = o.c[0];
        if b0.norm() < POLE_THRESHOLD {
            return Err(ExprError::Pole { z });
        }
        let n = self.len().min(o.len());
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut mag = vec![0.0; n];
        for k in 0..n {
            let mut acc = self.c[k];
            let mut m = self.mag[k];
            for j in 1..=k {
                acc -= o.c[j] * c[k - j];
                m += o.mag[j] * mag[k - j];
            }
            c[k] = acc / b0;
            mag[k] = m / b0.norm();
        }
        Ok(Jet { c, mag })
    }

    fn pow(&self, k: u32) -> Jet {
        let mut acc = Jet::constant(Complex64::new(1.0, 0.0), self.len());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    fn deriv(&self) -> Jet {
        let n = self.len() - 1;
        Jet {
            c: (0..n).map(|k| self.c[k + 1] * (k as f64 + 1.0)).collect(),
            mag: (0..n).map(|k| self.mag[k + 1] * (k as f64 + 1.0)).collect(),
        }
    }
}

/// An expression bound to compiled functions, ready for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator {
    expr: Expr,
    funcs: BTreeMap<String, NumericSum>,
    order: usize,
}

impl Evaluator {
    pub fn new(expr: &Expr, env: &Env) -> Result<Self, ExprError> {
        let mut funcs = BTreeMap::new();
        for name in expr.idents() {
            let f = env.get(&name).ok_or_else(|| ExprError::Unbound(name.clone()))?;
            funcs.insert(name, f.compile());
        }
        Ok(Evaluator { expr: expr.clone(), funcs, order: expr.deriv_depth() })
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, ExprError> {
        self.eval_with_magnitude(z).map(|(v, _)| v)
    }

    /// Value together with the magnitude of the terms that produced it.
    pub fn eval_with_magnitude(&self, z: Complex64) -> Result<(Complex64, f64), ExprError> {
        self.eval_conditioned(z).map(|(v, m, _)| (v, m))
    }

    /// Also returns the smallest ratio `|divisor| / magnitude(divisor)` met
    /// during evaluation (1 when there is no division); small values flag
    /// points close to a pole.
    pub fn eval_conditioned(&self, z: Complex64) -> Result<(Complex64, f64, f64), ExprError> {
        let mut cond = 1.0;
        let jet = self.jet(&self.expr, z, self.order + 1, &mut cond)?;
        let v = jet.c[0];
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(ExprError::Overflow { z });
        }
        Ok((v, jet.mag[0], cond))
    }

    fn jet(&self, e: &Expr, z: Complex64, len: usize, cond: &mut f64) -> Result<Jet, ExprError> {
        Ok(match &e.kind {
            ExprKind::Const(c) => Jet::constant(c.to_complex(), len),
            ExprKind::Ident(name) => {
                let f = &self.funcs[name];
                if f.terms.iter().any(|(_, lam)| (lam * z).re > MAX_EXPONENT) {
                    return Err(ExprError::Overflow { z });
                }
                let (vals, scales) = f.derivatives(z, len - 1);
                let mut fact = 1.0;
                let mut c = Vec::with_capacity(len);
                let mut mag = Vec::with_capacity(len);
                for k in 0..len {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    c.push(vals[k] / fact);
                    mag.push(scales[k] / fact);
                }
                Jet { c, mag }
            }
            ExprKind::Neg(a) => {
                let j = self.jet(a, z, len, cond)?;
                Jet { c: j.c.iter().map(|v| -v).collect(), mag: j.mag }
            }
            ExprKind::Add(a, b) => self.jet(a, z, len, cond)?.add(&self.jet(b, z, len, cond)?, 1.0),
            ExprKind::Sub(a, b) => self.jet(a, z, len, cond)?.add(&self.jet(b, z, len, cond)?, -1.0),
            ExprKind::Mul(a, b) => self.jet(a, z, len, cond)?.mul(&self.jet(b, z, len, cond)?),
            ExprKind::Div(a, b) => {
                let num = self.jet(a, z, len, cond)?;
                let den = self.jet(b, z, len, cond)?;
                if den.mag[0] > 0.0 {
                    *cond = cond.min(den.c[0].norm() / den.mag[0]);
                }
                num.div(&den, z)?
            }
            ExprKind::Pow(a, k) => self.jet(a, z, len, cond)?.pow(*k),
            ExprKind::Deriv(a) => self.jet(a, z, len + 1, cond)?.deriv(),
        })
    }
}

/// Evaluates `e` at `z` with the functions bound in `env`.
pub fn eval_expr(e: &Expr, env: &Env, z: Complex64) -> Result<Complex64, ExprError> {
    Evaluator::new(e, env)?.eval(z)
}
