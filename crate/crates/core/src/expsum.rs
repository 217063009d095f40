//! Finite exponential sums `Σ cₖ·e^(λₖ z)` in canonical form.
//!
//! Canonical form: frequencies pairwise distinct, no zero coefficients, terms
//! sorted lexicographically by `(Re λ, Im λ)`. Every constructor and every
//! operation returns a canonical sum.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::scalar::{Mode, Scalar};

/// Absolute tolerance used to merge float-mode frequencies.
pub const DEFAULT_FREQ_TOL: f64 = 1e-12;

/// Largest real exponent accepted by [`ExpSum::evaluate`] before `e^x`
/// overflows an `f64`.
pub const MAX_EXPONENT: f64 = 709.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("e^(λz) overflows at z = {z}: exponent real part {exponent} exceeds {MAX_EXPONENT}")]
    Range { z: Complex64, exponent: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Scalar,
    pub freq: Scalar,
}

impl Term {
    pub fn new(coeff: impl Into<Scalar>, freq: impl Into<Scalar>) -> Self {
        Term { coeff: coeff.into(), freq: freq.into() }
    }
}

#[derive(Clone, Debug)]
pub struct ExpSum {
    terms: Vec<Term>,
}

impl ExpSum {
    /// Canonicalizes a raw term list with the default frequency tolerance.
    pub fn normalize(terms: impl IntoIterator<Item = Term>) -> Self {
        Self::normalize_with(terms, DEFAULT_FREQ_TOL)
    }

    /// Canonicalizes a raw term list: merges equal frequencies (exactly, or
    /// within `freq_tol` when either side is a float), drops zero
    /// coefficients and sorts.
    pub fn normalize_with(terms: impl IntoIterator<Item = Term>, freq_tol: f64) -> Self {
        let mut raw: Vec<Term> = terms.into_iter().collect();
        raw.sort_by(|a, b| a.freq.lex_cmp(&b.freq));
        let mut out: Vec<Term> = Vec::with_capacity(raw.len());
        for t in raw {
            match out.last_mut() {
                Some(last) if last.freq.approx_eq(&t.freq, freq_tol) => {
                    last.coeff = &last.coeff + &t.coeff;
                }
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.coeff.is_zero());
        ExpSum { terms: out }
    }

    pub fn zero() -> Self {
        ExpSum { terms: Vec::new() }
    }

    pub fn constant(c: impl Into<Scalar>) -> Self {
        Self::normalize([Term::new(c, Scalar::zero())])
    }

    /// `c·e^(λz)`.
    pub fn monomial(coeff: impl Into<Scalar>, freq: impl Into<Scalar>) -> Self {
        Self::normalize([Term::new(coeff, freq)])
    }

    /// `e^(λz)`.
    pub fn exp(freq: impl Into<Scalar>) -> Self {
        Self::monomial(Scalar::one(), freq)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when the only term (if any) has frequency zero.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.freq.is_zero())
    }

    pub fn mode(&self) -> Mode {
        self.terms.iter().fold(Mode::Exact, |m, t| m.join(t.coeff.mode()).join(t.freq.mode()))
    }

    pub fn is_exact(&self) -> bool {
        self.mode() == Mode::Exact
    }

    pub fn frequencies(&self) -> impl Iterator<Item = &Scalar> {
        self.terms.iter().map(|t| &t.freq)
    }

    /// Coefficient at frequency zero (the constant part).
    pub fn constant_term(&self) -> Scalar {
        self.terms.iter().find(|t| t.freq.is_zero()).map(|t| t.coeff.clone()).unwrap_or_else(Scalar::zero)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        Self::normalize(self.terms.iter().map(|t| Term { coeff: &t.coeff * c, freq: t.freq.clone() }))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = ExpSum::constant(Scalar::one());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Term-wise derivative: `(c, λ) ↦ (cλ, λ)`.
    pub fn differentiate(&self) -> Self {
        Self::normalize(self.terms.iter().map(|t| Term { coeff: &t.coeff * &t.freq, freq: t.freq.clone() }))
    }

    pub fn derivative(&self, order: u32) -> Self {
        (0..order).fold(self.clone(), |f, _| f.differentiate())
    }

    /// Float value at `z`; fails when a term's exponent would overflow.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64, EvalError> {
        let compiled = self.compile();
        for &(_, lam) in &compiled.terms {
            let e = (lam * z).re;
            if e > MAX_EXPONENT {
                return Err(EvalError::Range { z, exponent: e });
            }
        }
        Ok(compiled.eval(z))
    }

    /// Float snapshot for fast repeated evaluation.
    pub fn compile(&self) -> NumericSum {
        NumericSum { terms: self.terms.iter().map(|t| (t.coeff.to_complex(), t.freq.to_complex())).collect() }
    }

    /// Float-mode copy of this sum.
    pub fn to_float(&self) -> Self {
        Self::normalize(self.terms.iter().map(|t| Term { coeff: t.coeff.to_float(), freq: t.freq.to_float() }))
    }

    /// Equality with a tolerance on coefficients and frequencies; exact pairs
    /// are compared exactly.
    pub fn approx_eq(&self, other: &ExpSum, tol: f64) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|(a, b)| {
                a.freq.approx_eq(&b.freq, tol) && a.coeff.approx_eq(&b.coeff, tol * a.coeff.abs().max(1.0))
            })
    }
}

impl PartialEq for ExpSum {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, DEFAULT_FREQ_TOL)
    }
}

impl fmt::Display for ExpSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            if t.freq.is_zero() {
                write!(f, "({})", t.coeff)?;
            } else {
                write!(f, "({})·e^(({})z)", t.coeff, t.freq)?;
            }
        }
        Ok(())
    }
}

impl Add<&ExpSum> for &ExpSum {
    type Output = ExpSum;
    fn add(self, rhs: &ExpSum) -> ExpSum {
        ExpSum::normalize(self.terms.iter().chain(&rhs.terms).cloned())
    }
}

impl Sub<&ExpSum> for &ExpSum {
    type Output = ExpSum;
    fn sub(self, rhs: &ExpSum) -> ExpSum {
        self + &(-rhs)
    }
}

impl Neg for &ExpSum {
    type Output = ExpSum;
    fn neg(self) -> ExpSum {
        ExpSum { terms: self.terms.iter().map(|t| Term { coeff: -&t.coeff, freq: t.freq.clone() }).collect() }
    }
}

impl Mul<&ExpSum> for &ExpSum {
    type Output = ExpSum;
    fn mul(self, rhs: &ExpSum) -> ExpSum {
        ExpSum::normalize(
            self.terms.iter().flat_map(|a| {
                rhs.terms.iter().map(move |b| Term { coeff: &a.coeff * &b.coeff, freq: &a.freq + &b.freq })
            }),
        )
    }
}

macro_rules! owned_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait<ExpSum> for ExpSum {
            type Output = ExpSum;
            fn $method(self, rhs: ExpSum) -> ExpSum { (&self).$method(&rhs) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

/// A value represented as `mantissa · e^(log_scale)`, used where the value
/// itself would overflow an `f64`.
#[derive(Clone, Copy, Debug)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    /// `log|value|`; `-∞` at an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }
}

/// Float snapshot of an [`ExpSum`]: `(coefficient, frequency)` pairs.
#[derive(Clone, Debug)]
pub struct NumericSum {
    pub terms: Vec<(Complex64, Complex64)>,
}

impl NumericSum {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Neumaier::default();
        for &(c, lam) in &self.terms {
            acc.add(c * (lam * z).exp());
        }
        acc.sum()
    }

    /// Value together with `Σ|cₖ e^(λₖ z)|`, the magnitude against which
    /// cancellation is judged.
    pub fn eval_with_scale(&self, z: Complex64) -> (Complex64, f64) {
        let mut acc = Neumaier::default();
        let mut scale = 0.0;
        for &(c, lam) in &self.terms {
            let v = c * (lam * z).exp();
            scale += v.norm();
            acc.add(v);
        }
        (acc.sum(), scale)
    }

    /// Taylor data at `z`: `out[k] = f^(k)(z)` and `scales[k] = Σ|cλ^k e^(λz)|`.
    pub fn derivatives(&self, z: Complex64, order: usize) -> (Vec<Complex64>, Vec<f64>) {
        let mut acc = vec![Neumaier::default(); order + 1];
        let mut scales = vec![0.0; order + 1];
        for &(c, lam) in &self.terms {
            let mut v = c * (lam * z).exp();
            for k in 0..=order {
                scales[k] += v.norm();
                acc[k].add(v);
                v *= lam;
            }
        }
        (acc.into_iter().map(|a| a.sum()).collect(), scales)
    }

    /// Overflow-free evaluation: the largest term magnitude is factored out.
    pub fn eval_scaled(&self, z: Complex64) -> Scaled {
        if self.terms.is_empty() {
            return Scaled { mantissa: Complex64::new(0.0, 0.0), log_scale: 0.0 };
        }
        let exps: Vec<Complex64> = self.terms.iter().map(|&(c, lam)| c.ln() + lam * z).collect();
        let top = exps.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        let mut acc = Neumaier::default();
        for e in &exps {
            acc.add((e - top).exp());
        }
        Scaled { mantissa: acc.sum(), log_scale: top }
    }

    pub fn derivative(&self) -> NumericSum {
        NumericSum {
            terms: self
                .terms
                .iter()
                .filter(|(_, lam)| lam.re != 0.0 || lam.im != 0.0)
                .map(|&(c, lam)| (c * lam, lam))
                .collect(),
        }
    }

    /// `f − a` as a numeric sum.
    pub fn shifted(&self, a: Complex64) -> NumericSum {
        let mut terms = self.terms.clone();
        match terms.iter_mut().find(|(_, lam)| lam.re == 0.0 && lam.im == 0.0) {
            Some(t) => t.0 -= a,
            None => terms.push((-a, Complex64::new(0.0, 0.0))),
        }
        NumericSum { terms }
    }

    pub fn max_abs_freq(&self) -> f64 {
        self.terms.iter().map(|(_, l)| l.norm()).fold(0.0, f64::max)
    }
}

/// Taylor data with the dominant exponential factored out:
/// `f^(k)(z) = values[k]·e^log_scale`, and `masses[k]` is the matching
/// `Σ|cλ^k e^(λz)|` on the same scale.
#[derive(Clone, Debug)]
pub struct ScaledJet {
    pub values: Vec<Complex64>,
    pub masses: Vec<f64>,
    pub log_scale: f64,
}

impl ScaledJet {
    /// `|f^(k)| / Σ|terms of f^(k)|`, the relative size of the k-th derivative.
    pub fn relative(&self, k: usize) -> f64 {
        if self.masses[k] == 0.0 {
            0.0
        } else {
            self.values[k].norm() / self.masses[k]
        }
    }

    pub fn value(&self, k: usize) -> Complex64 {
        self.values[k] * self.log_scale.exp()
    }
}

/// A [`NumericSum`] with precomputed coefficient logarithms, for
/// overflow-free evaluation far from the origin.
#[derive(Clone, Debug)]
pub struct ScaledSum {
    terms: Vec<(Complex64, Complex64)>,
}

impl ScaledSum {
    pub fn new(f: &NumericSum) -> Self {
        ScaledSum {
            terms: f
                .terms
                .iter()
                .filter(|(c, _)| *c != Complex64::new(0.0, 0.0))
                .map(|&(c, lam)| (c.ln(), lam))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn jet(&self, z: Complex64, order: usize) -> ScaledJet {
        let top = self.terms.iter().map(|(lc, lam)| (lc + lam * z).re).fold(f64::NEG_INFINITY, f64::max);
        let top = if top.is_finite() { top } else { 0.0 };
        let mut acc = vec![Neumaier::default(); order + 1];
        let mut masses = vec![0.0; order + 1];
        for &(lc, lam) in &self.terms {
            let mut v = (lc + lam * z - top).exp();
            for k in 0..=order {
                masses[k] += v.norm();
                acc[k].add(v);
                v *= lam;
            }
        }
        ScaledJet { values: acc.into_iter().map(|a| a.sum()).collect(), masses, log_scale: top }
    }

    /// `f'(z)/f(z)`, the logarithmic derivative, together with `|f| / Σ|terms|`.
    pub fn log_derivative(&self, z: Complex64) -> (Complex64, f64) {
        let j = self.jet(z, 1);
        (j.values[1] / j.values[0], j.relative(0))
    }
}

/// Compensated complex summation.
#[derive(Clone, Copy, Default, Debug)]
struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    fn add(&mut self, v: Complex64) {
        self.sum.re = two_sum(self.sum.re, v.re, &mut self.comp.re);
        self.sum.im = two_sum(self.sum.im, v.im, &mut self.comp.im);
    }

    fn sum(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(s: f64, v: f64, comp: &mut f64) -> f64 {
    let t = s + v;
    if s.abs() >= v.abs() {
        *comp += (s - t) + v;
    } else {
        *comp += (v - t) + s;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussRat;
    use num_rational::BigRational;
    use num_traits::One;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalize_merges_and_drops() {
        let s = ExpSum::normalize([Term::new(1, 1), Term::new(1, 1)]);
        assert_eq!(s.terms(), &[Term::new(2, 1)]);
        let z = ExpSum::normalize([Term::new(1, 1), Term::new(-1, 1)]);
        assert!(z.is_zero());
        let k = ExpSum::normalize([Term::new(1, 0)]);
        assert!(k.is_constant());
        assert_eq!(k.constant_term(), Scalar::one());
    }

    #[test]
    fn normalize_sine_expansion_order() {
        // (e^{2iz} - e^{-2iz})/(2i) + 1/2 written out of order
        let half_i_inv =
            Scalar::Exact(GaussRat::new(BigRational::new(0.into(), 1.into()), -BigRational::new(1.into(), 2.into())));
        let two_i =
            Scalar::Exact(GaussRat::new(BigRational::from_integer(0.into()), BigRational::from_integer(2.into())));
        let s = ExpSum::normalize([
            Term::new(half_i_inv.clone(), two_i.clone()),
            Term::new(-&half_i_inv, -&two_i),
            Term::new(Scalar::ratio(1, 2), 0),
        ]);
        let freqs: Vec<_> = s.frequencies().cloned().collect();
        assert_eq!(freqs, vec![-&two_i, Scalar::zero(), two_i]);
        // sin(2z) + 1/2 at z = π/4 is 3/2
        let v = s.evaluate(c(std::f64::consts::FRAC_PI_4, 0.0)).unwrap();
        assert!((v - c(1.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn float_frequencies_merge_within_tolerance() {
        let s = ExpSum::normalize([
            Term::new(Scalar::float(1.0, 0.0), Scalar::float(1.0, 0.0)),
            Term::new(1, Scalar::float(1.0 + 1e-14, 0.0)),
        ]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.mode(), Mode::Float);
    }

    #[test]
    fn products_and_powers() {
        let e = ExpSum::exp(1);
        assert_eq!(&e * &e, ExpSum::exp(2));
        let q = ExpSum::exp(Scalar::ratio(1, 4)) + ExpSum::constant(1);
        let sq = q.pow(2);
        let want =
            ExpSum::normalize([Term::new(1, Scalar::ratio(1, 2)), Term::new(2, Scalar::ratio(1, 4)), Term::new(1, 0)]);
        assert_eq!(sq, want);
        assert!(sq.is_exact());
    }

    #[test]
    fn cube_of_literal_two_term_sum() {
        // (b e^{3z/2} + e^{-z/3})^3, b = 4/27
        let b = Scalar::ratio(4, 27);
        let f = ExpSum::monomial(b.clone(), Scalar::ratio(3, 2)) + ExpSum::exp(Scalar::ratio(-1, 3));
        let want = ExpSum::normalize([
            Term::new(b.pow(3), Scalar::ratio(9, 2)),
            Term::new(Scalar::int(3) * b.pow(2), Scalar::ratio(8, 3)),
            Term::new(Scalar::int(3) * b.clone(), Scalar::ratio(5, 6)),
            Term::new(1, -1),
        ]);
        assert_eq!(f.pow(3), want);
    }

    #[test]
    fn differentiate_examples() {
        assert_eq!(ExpSum::exp(1).differentiate(), ExpSum::exp(1));
        assert!(ExpSum::constant(5).differentiate().is_zero());
        let f = ExpSum::monomial(Scalar::ratio(4, 27), Scalar::ratio(2, 3)) + ExpSum::exp(Scalar::ratio(-1, 3));
        let want = ExpSum::monomial(Scalar::ratio(8, 81), Scalar::ratio(2, 3))
            + ExpSum::monomial(Scalar::ratio(-1, 3), Scalar::ratio(-1, 3));
        assert_eq!(f.differentiate(), want);
    }

    #[test]
    fn evaluate_examples_and_overflow() {
        assert_eq!(ExpSum::exp(1).evaluate(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let f = ExpSum::monomial(Scalar::ratio(4, 27), Scalar::ratio(2, 3)) + ExpSum::exp(Scalar::ratio(-1, 3));
        let v = f.evaluate(c(0.0, 0.0)).unwrap();
        assert!((v.re - 31.0 / 27.0).abs() < 1e-15);
        match ExpSum::exp(2).evaluate(c(400.0, 0.0)) {
            Err(EvalError::Range { exponent, .. }) => assert_eq!(exponent, 800.0),
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn scaled_evaluation_matches_direct_and_survives_overflow() {
        let f = ExpSum::monomial(Scalar::ratio(4, 27), Scalar::ratio(2, 3)) + ExpSum::exp(Scalar::ratio(-1, 3));
        let n = f.compile();
        let z = c(1.3, -0.4);
        let s = n.eval_scaled(z);
        let direct = n.eval(z);
        assert!((s.mantissa * s.log_scale.exp() - direct).norm() < 1e-13 * direct.norm());
        let big = n.eval_scaled(c(2000.0, 1.0));
        assert!((big.ln_abs() - ((4.0f64 / 27.0).ln() + 2000.0 * 2.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn shifted_adds_constant() {
        let n = ExpSum::exp(1).compile().shifted(c(1.0, 0.0));
        assert!(n.eval(c(0.0, 0.0)).norm() < 1e-15);
        let m = ExpSum::constant(3).compile().shifted(c(1.0, 0.0));
        assert_eq!(m.terms.len(), 1);
        assert_eq!(m.eval(c(5.0, 5.0)), c(2.0, 0.0));
    }

    #[test]
    fn one_is_one() {
        assert!(Scalar::Exact(GaussRat::real(BigRational::one())) == Scalar::one());
    }
}
