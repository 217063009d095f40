//! Named functions, the coefficient-matching solver for the cubic-curve
//! family, the cubic classifier and the sharing-question probe.

pub mod cubic;
pub mod derive;
pub mod poly;
pub mod probe;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{check_identity, parse, Env, Expr, IdentityError, IdentityMode, IdentityOptions, Verdict};
use crate::expsum::ExpSum;
use crate::scalar::Scalar;

pub use cubic::{classify_cubic, infinity_slice, CubicCurve, CubicError, CurveClass, LinearFactor};
pub use derive::{derive_family_constants, DerivationStep, DeriveError, DerivedConstants};
pub use probe::{question_probe, ProbeCandidate, ProbeError, ProbeGrid, ProbeOptions, ProbeReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("parameter `{0}` must be nonzero")]
    ZeroParameter(&'static str),
    #[error("parameters `a` and `b` must differ")]
    EqualParameters,
}

fn nonzero(name: &'static str, v: &Scalar) -> Result<(), FamilyError> {
    if v.is_zero() {
        Err(FamilyError::ZeroParameter(name))
    } else {
        Ok(())
    }
}

/// `(4δ/(27β²))e^{2z/3} + βe^{-z/3}`.
pub fn thm2prime_family(delta: &Scalar, beta: &Scalar) -> Result<ExpSum, FamilyError> {
    nonzero("delta", delta)?;
    nonzero("beta", beta)?;
    let lead = &(Scalar::int(4) * delta) / &(Scalar::int(27) * beta.pow(2));
    Ok(ExpSum::monomial(lead, Scalar::ratio(2, 3)) + ExpSum::monomial(beta.clone(), Scalar::ratio(-1, 3)))
}

/// `b(A²e^{z/2}/4 + Ae^{z/4} + 1)`, which is `b(Ae^{z/4}/2 + 1)²`.
pub fn thmc_family(b: &Scalar, a: &Scalar) -> Result<ExpSum, FamilyError> {
    nonzero("b", b)?;
    nonzero("A", a)?;
    let inner = ExpSum::monomial(a / &Scalar::int(2), Scalar::ratio(1, 4)) + ExpSum::constant(1);
    Ok(inner.pow(2).scale(b))
}

/// `Ce^{bz/(b-a)} + a`.
pub fn example1(c: &Scalar, a: &Scalar, b: &Scalar) -> Result<ExpSum, FamilyError> {
    nonzero("C", c)?;
    nonzero("a", a)?;
    nonzero("b", b)?;
    if a == b {
        return Err(FamilyError::EqualParameters);
    }
    Ok(ExpSum::monomial(c.clone(), b / &(b - a)) + ExpSum::constant(a.clone()))
}

/// `a·sin(kz)` in exponential form.
fn sine(a: &Scalar, k: i64) -> ExpSum {
    let c = a / &(Scalar::int(2) * Scalar::i());
    ExpSum::monomial(c.clone(), Scalar::i() * Scalar::int(k)) - ExpSum::monomial(c, Scalar::i() * Scalar::int(-k))
}

/// `(a/2)(sin 2z + 1)` and its derivative.
pub fn example2(a: &Scalar) -> Result<(ExpSum, ExpSum), FamilyError> {
    nonzero("a", a)?;
    let half = a / &Scalar::int(2);
    let f = sine(&half, 2) + ExpSum::constant(half);
    let fp = f.differentiate();
    Ok((f, fp))
}

/// `a·sin z` and its derivative.
pub fn example3(a: &Scalar) -> Result<(ExpSum, ExpSum), FamilyError> {
    nonzero("a", a)?;
    let f = sine(a, 1);
    let fp = f.differentiate();
    Ok((f, fp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyParams {
    Thm2Prime { delta: Scalar, beta: Scalar },
    Thmc { b: Scalar, a: Scalar },
    Example1 { c: Scalar, a: Scalar, b: Scalar },
    Example2 { a: Scalar },
    Example3 { a: Scalar },
}

impl FamilyParams {
    pub fn build(&self) -> Result<ExpSum, FamilyError> {
        match self {
            FamilyParams::Thm2Prime { delta, beta } => thm2prime_family(delta, beta),
            FamilyParams::Thmc { b, a } => thmc_family(b, a),
            FamilyParams::Example1 { c, a, b } => example1(c, a, b),
            FamilyParams::Example2 { a } => example2(a).map(|p| p.0),
            FamilyParams::Example3 { a } => example3(a).map(|p| p.0),
        }
    }
}

/// The bundled fixtures as `(file stem, function)`.
pub fn fixtures() -> Vec<(&'static str, ExpSum)> {
    let one = Scalar::one();
    let two = Scalar::int(2);
    vec![
        ("thm2prime_d1_b1", thm2prime_family(&one, &one).unwrap()),
        ("exp", ExpSum::exp(1)),
        ("example1_C1_a1_b2", example1(&one, &one, &two).unwrap()),
        ("example2_a1", example2(&one).unwrap().0),
        ("example3_a1", example3(&one).unwrap().0),
        ("thmC_b1_A2", thmc_family(&one, &two).unwrap()),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub expression: String,
    pub verdict: Verdict,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyIdentities {
    /// `(f')³ − f(f')² + (4/27)(f³ − δ) ≡ 0`.
    pub cubic_ode: IdentityCheck,
    /// `f'' − f'/3 − 2f/9 ≡ 0`.
    pub linear_ode: IdentityCheck,
    /// `(f')²(f − f')/(f³ − δ) ≡ 4/27`.
    pub quotient: IdentityCheck,
}

impl FamilyIdentities {
    pub fn all_hold(&self) -> bool {
        let four_27 = Scalar::ratio(4, 27);
        self.cubic_ode.exact
            && self.linear_ode.exact
            && self.quotient.exact
            && self.cubic_ode.verdict == Verdict::IdenticallyZero
            && self.linear_ode.verdict == Verdict::IdenticallyZero
            && self.quotient.verdict == Verdict::Constant(four_27)
    }
}

fn with_delta(template: &str, delta: &Scalar) -> Result<Expr, IdentityError> {
    let d =
        Expr::constant(delta.as_exact().cloned().ok_or_else(|| IdentityError::NotExact("delta is a float".into()))?);
    let mut e = parse(template).expect("built-in expression parses");
    substitute_ident(&mut e, "delta", &d);
    Ok(e)
}

fn substitute_ident(e: &mut Expr, name: &str, value: &Expr) {
    use crate::expr::ExprKind::*;
    match &mut e.kind {
        Ident(n) if n == name => *e = value.clone(),
        Neg(a) | Pow(a, _) | Deriv(a) => substitute_ident(a, name, value),
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => {
            substitute_ident(a, name, value);
            substitute_ident(b, name, value);
        }
        _ => {}
    }
}

fn run(e: Expr, env: &Env) -> Result<IdentityCheck, IdentityError> {
    let opts = IdentityOptions { mode: IdentityMode::Exact, ..IdentityOptions::default() };
    let r = check_identity(&e, env, &opts)?;
    Ok(IdentityCheck { expression: e.to_string(), exact: r.is_exact(), verdict: r.verdict })
}

/// Exact checks of the three identities satisfied by `thm2prime_family(δ, β)`.
pub fn verify_family_identities(delta: &Scalar, beta: &Scalar) -> Result<FamilyIdentities, FamilyIdentityError> {
    let f = thm2prime_family(delta, beta)?;
    verify_identities_for(&f, delta)
}

/// The same checks for an arbitrary function, e.g. a perturbed fixture.
pub fn verify_identities_for(f: &ExpSum, delta: &Scalar) -> Result<FamilyIdentities, FamilyIdentityError> {
    let env = Env::from([("f".to_string(), f.clone())]);
    Ok(FamilyIdentities {
        cubic_ode: run(with_delta("D(f)^3 - f*D(f)^2 + (4/27)*(f^3 - delta)", delta)?, &env)?,
        linear_ode: run(parse("D(D(f)) - (1/3)*D(f) - (2/9)*f").expect("built-in expression parses"), &env)?,
        quotient: run(with_delta("D(f)^2*(f - D(f))/(f^3 - delta)", delta)?, &env)?,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyIdentityError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
}
