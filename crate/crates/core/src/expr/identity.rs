//! Deciding whether an expression is identically zero or constant.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use super::eval::{Evaluator, ExprError};
use super::{Env, Expr, ExprKind};
use crate::laurent::{infer_base, LaurentError, LaurentPoly};
use crate::scalar::{Mode, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityMode {
    /// Exact when all bindings are exact and commensurable, sampled otherwise.
    Auto,
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityOptions {
    pub mode: IdentityMode,
    pub samples: usize,
    pub radii: Vec<f64>,
    pub rel_tol: f64,
}

impl Default for IdentityOptions {
    fn default() -> Self {
        IdentityOptions { mode: IdentityMode::Auto, samples: 64, radii: vec![1.3, 2.7], rel_tol: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    IdenticallyZero,
    Constant(Scalar),
    NonConstant,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::IdenticallyZero => "identically_zero",
            Verdict::Constant(_) => "constant",
            Verdict::NonConstant => "non_constant",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Constant(c) => write!(f, "constant {c}"),
            v => f.write_str(v.label()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstancyReport {
    pub verdict: Verdict,
    /// `Exact` for coefficient-level proofs, `Float` for sampled verdicts.
    pub mode: Mode,
    pub witness: Option<(Complex64, Complex64)>,
    pub samples_used: usize,
}

impl ConstancyReport {
    pub fn is_exact(&self) -> bool {
        self.mode == Mode::Exact
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error("a denominator is identically zero")]
    DenominatorIdenticallyZero,
    #[error("every sample point hit a pole or overflow")]
    PoleAtAllSamples,
    #[error("exact mode unavailable: {0}")]
    NotExact(String),
    #[error(transparent)]
    Laurent(#[from] LaurentError),
}

/// Decides `e ≡ 0` or `e ≡ const` for the functions in `env`.
pub fn check_identity(e: &Expr, env: &Env, opts: &IdentityOptions) -> Result<ConstancyReport, IdentityError> {
    let evaluator = Evaluator::new(e, env)?;
    let names = e.idents();
    let exact_inputs = names.iter().all(|n| env[n].is_exact());
    let base = if exact_inputs { infer_base(names.iter().flat_map(|n| env[n].frequencies())).ok() } else { None };
    match (opts.mode, base) {
        (IdentityMode::Sampled, _) | (IdentityMode::Auto, None) => sampled(&evaluator, opts),
        (_, Some(base)) => exact(e, env, &base, &evaluator),
        (IdentityMode::Exact, None) => {
            let why = if exact_inputs { "frequencies are incommensurable" } else { "inputs contain floats" };
            Err(IdentityError::NotExact(why.into()))
        }
    }
}

/// Numerator/denominator pair in `t = e^(σz)`.
struct Frac {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl Frac {
    fn whole(num: LaurentPoly) -> Frac {
        let den = LaurentPoly::constant(num.base().clone(), Scalar::one());
        Frac { num, den }
    }

    /// Absorbs monomial denominators and exact quotients.
    fn reduce(self) -> Result<Frac, IdentityError> {
        if self.den.is_zero() {
            return Err(IdentityError::DenominatorIdenticallyZero);
        }
        if self.den.coeffs().len() == 1 {
            let (&d, c) = self.den.coeffs().iter().next().unwrap();
            let inv = c.inv().expect("nonzero coefficient");
            return Ok(Frac::whole(self.num.shift(-d).scale(&inv)));
        }
        let (q, exact) = self.num.div_exact(&self.den)?;
        Ok(if exact { Frac::whole(q) } else { self })
    }
}

fn compile(e: &Expr, lps: &BTreeMap<String, LaurentPoly>, base: &Scalar) -> Result<Frac, IdentityError> {
    let frac = match &e.kind {
        ExprKind::Const(c) => Frac::whole(LaurentPoly::constant(base.clone(), Scalar::Exact(c.clone()))),
        ExprKind::Ident(n) => Frac::whole(lps[n].clone()),
        ExprKind::Neg(a) => {
            let a = compile(a, lps, base)?;
            Frac { num: -&a.num, den: a.den }
        }
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) => {
            let a = compile(a, lps, base)?;
            let mut b = compile(b, lps, base)?;
            if matches!(e.kind, ExprKind::Sub(..)) {
                b.num = -&b.num;
            }
            if a.den == b.den {
                Frac { num: &a.num + &b.num, den: a.den }
            } else {
                Frac { num: &(&a.num * &b.den) + &(&b.num * &a.den), den: &a.den * &b.den }
            }
        }
        ExprKind::Mul(a, b) => {
            let a = compile(a, lps, base)?;
            let b = compile(b, lps, base)?;
            Frac { num: &a.num * &b.num, den: &a.den * &b.den }
        }
        ExprKind::Div(a, b) => {
            let a = compile(a, lps, base)?;
            let b = compile(b, lps, base)?;
            if b.num.is_zero() {
                return Err(IdentityError::DenominatorIdenticallyZero);
            }
            Frac { num: &a.num * &b.den, den: &a.den * &b.num }
        }
        ExprKind::Pow(a, k) => {
            let a = compile(a, lps, base)?;
            Frac { num: a.num.pow(*k), den: a.den.pow(*k) }
        }
        ExprKind::Deriv(a) => {
            let a = compile(a, lps, base)?;
            let num = &(&a.num.derivative_z() * &a.den) - &(&a.num * &a.den.derivative_z());
            Frac { num, den: a.den.pow(2) }
        }
    };
    frac.reduce()
}

fn exact(e: &Expr, env: &Env, base: &Scalar, evaluator: &Evaluator) -> Result<ConstancyReport, IdentityError> {
    let mut lps = BTreeMap::new();
    for n in e.idents() {
        lps.insert(n.clone(), LaurentPoly::from_expsum(&env[&n], Some(base))?);
    }
    let frac = compile(e, &lps, base)?;
    let report = |verdict, witness| ConstancyReport { verdict, mode: Mode::Exact, witness, samples_used: 0 };
    if frac.num.is_zero() {
        return Ok(report(Verdict::IdenticallyZero, None));
    }
    let (q, divisible) = frac.num.div_exact(&frac.den)?;
    if divisible {
        if let Some(c) = q.constant_value() {
            return Ok(report(Verdict::Constant(c.value), None));
        }
    }
    Ok(report(Verdict::NonConstant, Some(witness(evaluator))))
}

/// First point along a fixed spiral from the origin whose value differs from
/// the first finite value on it.
fn witness(evaluator: &Evaluator) -> (Complex64, Complex64) {
    let point = |k: usize| Complex64::from_polar(0.1 * k as f64, 0.7 * k as f64);
    let mut first = None;
    for k in 0..64 {
        let z = point(k);
        let Ok(v) = evaluator.eval(z) else { continue };
        match first {
            None => first = Some(v),
            Some(v0) if (v - v0).norm() > 1e-9 * v.norm().max(v0.norm()).max(1.0) => return (z, v),
            Some(_) => {}
        }
    }
    (point(63), Complex64::new(f64::NAN, f64::NAN))
}

/// Angle offset keeping samples off the axes and common lattice directions.
const ANGLE_OFFSET: f64 = 0.1234;
/// A sample is discarded when a divisor is this small relative to its magnitude.
const NEAR_POLE: f64 = 1e-6;

fn sampled(evaluator: &Evaluator, opts: &IdentityOptions) -> Result<ConstancyReport, IdentityError> {
    let per_circle = (opts.samples / opts.radii.len().max(1)).max(1);
    let mut values: Vec<(Complex64, Complex64, f64)> = Vec::new();
    for &r in &opts.radii {
        for k in 0..per_circle {
            let theta = 2.0 * PI * k as f64 / per_circle as f64 + ANGLE_OFFSET;
            // nudge the angle away from poles a few times before giving up
            for attempt in 0..4 {
                let z = Complex64::from_polar(r, theta + attempt as f64 * 0.37 * PI / per_circle as f64);
                if let Some((v, m)) = usable(evaluator, z) {
                    values.push((z, v, m));
                    break;
                }
            }
        }
    }
    if values.is_empty() {
        return Err(IdentityError::PoleAtAllSamples);
    }
    let n = values.len();
    let report = |verdict, witness| ConstancyReport { verdict, mode: Mode::Float, witness, samples_used: n };
    if n < opts.samples / 4 {
        return Ok(report(Verdict::Inconclusive, None));
    }
    let tol = opts.rel_tol;
    if values.iter().all(|(_, v, m)| v.norm() <= tol * m) {
        return Ok(report(Verdict::IdenticallyZero, None));
    }
    let mean = values.iter().map(|(_, v, _)| v).sum::<Complex64>() / n as f64;
    let worst = values
        .iter()
        .map(|&(z, v, m)| (z, v, (v - mean).norm() / m.max(mean.norm()).max(f64::MIN_POSITIVE)))
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap();
    if worst.2 <= tol {
        Ok(report(Verdict::Constant(Scalar::Float(mean)), None))
    } else {
        Ok(report(Verdict::NonConstant, Some((worst.0, worst.1))))
    }
}

fn usable(evaluator: &Evaluator, z: Complex64) -> Option<(Complex64, f64)> {
    let (v, m, cond) = evaluator.eval_conditioned(z).ok()?;
    (m.is_finite() && cond >= NEAR_POLE).then_some((v, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::expsum::ExpSum;

    fn family(delta: i64, beta: i64) -> ExpSum {
        let b2 = Scalar::ratio(4 * delta, 27 * beta * beta);
        ExpSum::monomial(b2, Scalar::ratio(2, 3)) + ExpSum::monomial(Scalar::int(beta), Scalar::ratio(-1, 3))
    }

    fn env(f: ExpSum) -> Env {
        Env::from([("f".to_string(), f)])
    }

    fn check(src: &str, f: ExpSum, mode: IdentityMode) -> ConstancyReport {
        let opts = IdentityOptions { mode, ..Default::default() };
        check_identity(&parse(src).unwrap(), &env(f), &opts).unwrap()
    }

    const ODE: &str = "D(f)^3 - f*D(f)^2 + (4/27)*(f^3 - 1)";
    const H3: &str = "D(f)^2*(f - D(f))/(f^3 - 1)";

    #[test]
    fn cubic_ode_holds_exactly() {
        let r = check(ODE, family(1, 1), IdentityMode::Auto);
        assert_eq!(r.verdict, Verdict::IdenticallyZero);
        assert!(r.is_exact());
        assert_eq!(r.samples_used, 0);
    }

    #[test]
    fn auxiliary_quotient_is_exactly_constant() {
        let r = check(H3, family(1, 1), IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::Constant(Scalar::ratio(4, 27)));
    }

    #[test]
    fn division_rewrite_agrees() {
        // h = a/b constant c  ⇔  a - c·b ≡ 0
        let r = check("D(f)^2*(f - D(f)) - (4/27)*(f^3 - 1)", family(1, 1), IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::IdenticallyZero);
    }

    #[test]
    fn exponential_auxiliary_numerator_vanishes() {
        let r = check("D(f)^2*(f - D(f)) / (f^2*(f - 1))", ExpSum::exp(1), IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::IdenticallyZero);
    }

    #[test]
    fn non_constant_witness_moves_off_the_origin_value() {
        let f = &ExpSum::constant(-1) + &ExpSum::exp(2);
        let r = check("D(f) - f", f, IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::NonConstant);
        let (z, v) = r.witness.unwrap();
        assert_eq!(z, Complex64::from_polar(0.1, 0.7));
        assert!((v - ((2.0 * z).exp() + 1.0)).norm() < 1e-12);
        assert!(v.norm() > 0.1);
    }

    #[test]
    fn zero_denominator_is_an_error() {
        let opts = IdentityOptions::default();
        let e = parse("f/(D(f) - f)").unwrap();
        assert_eq!(check_identity(&e, &env(ExpSum::exp(1)), &opts), Err(IdentityError::DenominatorIdenticallyZero));
        let e = parse("1/0").unwrap();
        assert_eq!(check_identity(&e, &Env::new(), &opts), Err(IdentityError::DenominatorIdenticallyZero));
        let sampled = IdentityOptions { mode: IdentityMode::Sampled, ..Default::default() };
        assert_eq!(check_identity(&e, &Env::new(), &sampled), Err(IdentityError::PoleAtAllSamples));
    }

    #[test]
    fn sampled_agrees_with_exact() {
        for (src, f) in [
            (ODE, family(1, 1)),
            (H3, family(2, 3)),
            ("D(f) - f", ExpSum::exp(2)),
            ("D(f) - f", ExpSum::exp(1)),
            ("D(D(f)) + 4*f", ExpSum::exp(Scalar::i() * Scalar::int(2)) - ExpSum::exp(Scalar::i() * Scalar::int(-2))),
        ] {
            let a = check(src, f.clone(), IdentityMode::Exact);
            let b = check(src, f, IdentityMode::Sampled);
            assert_eq!(a.verdict.label(), b.verdict.label(), "{src}");
            assert!(!b.is_exact());
            if let (Verdict::Constant(x), Verdict::Constant(y)) = (&a.verdict, &b.verdict) {
                assert!(x.approx_eq(y, 1e-9));
            }
        }
    }

    #[test]
    fn floats_and_incommensurable_inputs_fall_back_to_sampling() {
        let f = ExpSum::exp(1) + ExpSum::exp(Scalar::float(0.0, std::f64::consts::SQRT_2));
        let r = check("D(f) - f", f.clone(), IdentityMode::Auto);
        assert_eq!(r.verdict, Verdict::NonConstant);
        assert_eq!(r.mode, Mode::Float);
        assert_eq!(r.samples_used, 64);
        let opts = IdentityOptions { mode: IdentityMode::Exact, ..Default::default() };
        assert!(matches!(check_identity(&parse("f").unwrap(), &env(f), &opts), Err(IdentityError::NotExact(_))));
    }

    #[test]
    fn rational_functions_with_shared_factors() {
        // (f^2 - 1)/(f - 1) - f = 1 for f = e^z
        let r = check("(f^2 - 1)/(f - 1) - f", ExpSum::exp(1), IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::Constant(Scalar::one()));
        let r = check("D(f/(f + 1))*(f + 1)^2/f", ExpSum::exp(1), IdentityMode::Exact);
        assert_eq!(r.verdict, Verdict::Constant(Scalar::one()));
    }
}
