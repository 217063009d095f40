//! Coefficient matching for the Laurent parametrization of the cubic curve
//! `Y³ − XY² + γ(X³ + c₂X² + c₁X + c₀) = 0` with
//! `X = b₂t² + b₁t + b₀ + 1/t` and `Y = α(2b₂t² + b₁t − 1/t)`.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::poly::{MPoly, UPoly};
use crate::scalar::{GaussRat, Scalar};

const ALPHA: usize = 0;
const GAMMA: usize = 1;
const B2: usize = 2;
const B1: usize = 3;
const B0: usize = 4;
const C2: usize = 5;
const C1: usize = 6;
/// Stands for `1/b₂`.
const W: usize = 7;
const T: usize = 8;
/// `t³·F` has only nonnegative powers of `t`.
const T_SHIFT: i64 = 3;

const NAMES: [&str; 9] = ["alpha", "gamma", "b2", "b1", "b0", "c2", "c1", "(1/b2)", "t"];

/// Unknowns in the order they are eliminated after the seed pair.
const LINEAR_STEPS: [(i64, usize); 5] = [(4, C2), (-2, B0), (3, B1), (-1, C1), (0, B2)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeriveError {
    #[error("delta must be nonzero")]
    ZeroDelta,
    #[error("delta must be exact")]
    NotExact,
    #[error("no admissible nonzero alpha solves the seed equations: {0}")]
    SeedUnsolvable(String),
    #[error("coefficient of t^{power} is not linear in {unknown}: {equation}")]
    NonlinearStep { power: i64, unknown: &'static str, equation: String },
    #[error("inconsistent system: coefficient of t^{power} is {residual}")]
    InconsistentSystem { power: i64, residual: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivationStep {
    pub powers: Vec<i64>,
    /// Equations after substituting earlier solutions, common factors removed.
    pub equations: Vec<String>,
    pub unknowns: Vec<String>,
    /// Solutions as displayed, possibly in terms of unknowns not yet fixed.
    pub solutions: Vec<String>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub alpha: Scalar,
    pub gamma: Scalar,
    pub b2: Scalar,
    pub b1: Scalar,
    pub b0: Scalar,
    pub c2: Scalar,
    pub c1: Scalar,
    pub c0: Scalar,
    /// Coefficients that failed to vanish; empty on success.
    pub residuals: BTreeMap<i64, Scalar>,
    pub steps: Vec<DerivationStep>,
    pub notes: Vec<String>,
}

fn show(p: &MPoly) -> String {
    p.display_with(&NAMES).to_string()
}

/// Coefficients of `t^k` in `Y³ − XY² + γ(X³ + c₂X² + c₁X + c₀)`.
fn curve_coefficients(c0: &GaussRat) -> BTreeMap<i64, MPoly> {
    let v = MPoly::var;
    let t = v(T);
    let two = GaussRat::from_int(2);
    // t·X and t·Y
    let tx = &(&(&(&v(B2) * &t.pow(3)) + &(&v(B1) * &t.pow(2))) + &(&v(B0) * &t)) + &MPoly::int(1);
    let ty = &v(ALPHA) * &(&(&(&v(B2) * &t.pow(3)).scale(&two) + &(&v(B1) * &t.pow(2))) - &MPoly::int(1));
    let cubic =
        &(&(&tx.pow(3) + &(&v(C2) * &(&tx.pow(2) * &t))) + &(&v(C1) * &(&tx * &t.pow(2)))) + &t.pow(3).scale(c0);
    let f = &(&ty.pow(3) - &(&tx * &ty.pow(2))) + &(&v(GAMMA) * &cubic);
    f.coefficients_in(T)
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| (k as i64 - T_SHIFT, c))
        .collect()
}

struct Solver {
    eqs: BTreeMap<i64, MPoly>,
    solved: Vec<(usize, MPoly)>,
}

impl Solver {
    fn reduced(&self, p: &MPoly) -> MPoly {
        let mut p = p.clone();
        for (var, value) in &self.solved {
            p = p.compose(*var, value).cancel_inverse(B2, W);
        }
        p
    }

    /// Removes powers of the unknowns assumed nonzero (`α`, `b₂`, `1/b₂`).
    fn strip(p: &MPoly) -> MPoly {
        let mut content = p.monomial_content();
        for (i, e) in content.iter_mut().enumerate() {
            if ![ALPHA, B2, W].contains(&i) {
                *e = 0;
            }
        }
        p.div_monomial(&content)
    }

    fn equation(&self, power: i64) -> MPoly {
        self.eqs.get(&power).map(|p| Solver::strip(&self.reduced(p))).unwrap_or_default()
    }

    fn fix(&mut self, var: usize, value: MPoly) {
        for (_, v) in &mut self.solved {
            *v = v.compose(var, &value).cancel_inverse(B2, W);
        }
        self.solved.push((var, value));
    }

    fn value(&self, var: usize) -> Option<GaussRat> {
        self.solved.iter().find(|(v, _)| *v == var).and_then(|(_, p)| p.as_constant())
    }
}

/// `1/(c·b₂^k·w^j)` for a single-term coefficient in `b₂` and `1/b₂`.
fn invert_monomial(p: &MPoly) -> Option<MPoly> {
    let mut it = p.terms();
    let (m, c) = it.next()?;
    if it.next().is_some() || m.iter().enumerate().any(|(i, e)| *e > 0 && i != B2 && i != W) {
        return None;
    }
    let eb = *m.get(B2).unwrap_or(&0);
    let ew = *m.get(W).unwrap_or(&0);
    let inv = MPoly::constant(c.inv()?);
    Some(&(&inv * &MPoly::var(W).pow(eb)) * &MPoly::var(B2).pow(ew))
}

/// Solves for the curve constants by matching coefficients of `t⁻³ … t⁶`,
/// with `c₀ = −δ`.
pub fn derive_family_constants(delta: &Scalar) -> Result<DerivedConstants, DeriveError> {
    if delta.is_zero() {
        return Err(DeriveError::ZeroDelta);
    }
    let c0 = -delta.as_exact().ok_or(DeriveError::NotExact)?;
    let eqs = curve_coefficients(&c0);
    let mut s = Solver { eqs, solved: vec![] };
    let mut steps = Vec::new();
    let mut notes = vec!["alpha and b2 are assumed nonzero".to_string()];

    // seed pair: t⁻³ gives γ in terms of α, t⁶ then fixes α
    let low = s.equation(-3);
    let high = s.equation(6);
    let low_parts = low.coefficients_in(GAMMA);
    if low_parts.len() != 2 || low_parts[1].as_constant().is_none() {
        return Err(DeriveError::SeedUnsolvable(show(&low)));
    }
    let gamma_expr = (-&low_parts[0]).scale(&low_parts[1].as_constant().unwrap().inv().unwrap());
    let in_alpha = high.compose(GAMMA, &gamma_expr);
    let poly = UPoly::from_mpoly(&in_alpha, ALPHA).ok_or_else(|| DeriveError::SeedUnsolvable(show(&in_alpha)))?;
    let roots: Vec<GaussRat> = poly.rational_roots().into_iter().map(|(r, _)| r).filter(|r| !r.is_zero()).collect();
    let [alpha] = roots.as_slice() else {
        return Err(DeriveError::SeedUnsolvable(show(&in_alpha)));
    };
    notes.push("alpha = 0 solves the seed equations and is discarded (t would be constant)".into());
    let gamma = gamma_expr.substitute(ALPHA, alpha);
    s.fix(ALPHA, MPoly::constant(alpha.clone()));
    s.fix(GAMMA, gamma.clone());
    steps.push(DerivationStep {
        powers: vec![6, -3],
        equations: vec![show(&high), show(&low)],
        unknowns: vec!["alpha".into(), "gamma".into()],
        solutions: vec![format!("alpha = {}", Scalar::Exact(alpha.clone())), format!("gamma = {}", show(&gamma))],
        note: None,
    });

    for (power, var) in LINEAR_STEPS {
        let eq = s.equation(power);
        let name = NAMES[var];
        let mut step = DerivationStep {
            powers: vec![power],
            equations: vec![show(&eq)],
            unknowns: vec![name.into()],
            solutions: vec![],
            note: None,
        };
        if eq.is_zero() {
            let note = format!(
                "the coefficient of t^{power} vanishes identically after substitution, so {name} is not determined; {name} = 0 is taken"
            );
            step.solutions.push(format!("{name} = 0"));
            step.note = Some(note.clone());
            notes.push(note);
            s.fix(var, MPoly::zero());
            steps.push(step);
            continue;
        }
        let parts = eq.coefficients_in(var);
        if parts.len() != 2 {
            if parts.len() == 1 {
                return Err(DeriveError::InconsistentSystem { power, residual: show(&eq) });
            }
            return Err(DeriveError::NonlinearStep { power, unknown: name, equation: show(&eq) });
        }
        let inv = invert_monomial(&parts[1]).ok_or_else(|| DeriveError::NonlinearStep {
            power,
            unknown: name,
            equation: show(&eq),
        })?;
        let value = (&-&parts[0] * &inv).cancel_inverse(B2, W);
        step.solutions.push(format!("{name} = {}", show(&value)));
        s.fix(var, value);
        steps.push(step);
    }

    let b2 = s.value(B2).expect("b2 solved last");
    let b2_inv = b2.inv().ok_or_else(|| DeriveError::InconsistentSystem { power: 0, residual: "b2 = 0".into() })?;
    s.fix(W, MPoly::constant(b2_inv));

    let mut residuals = BTreeMap::new();
    for (&power, p) in &s.eqs {
        let r = s.reduced(p);
        if !r.is_zero() {
            residuals.insert(power, r);
        }
    }
    if let Some((&power, r)) = residuals.iter().next() {
        return Err(DeriveError::InconsistentSystem { power, residual: show(r) });
    }
    let get = |var: usize| Scalar::Exact(s.value(var).expect("every unknown is fixed"));
    Ok(DerivedConstants {
        alpha: get(ALPHA),
        gamma: get(GAMMA),
        b2: get(B2),
        b1: get(B1),
        b0: get(B0),
        c2: get(C2),
        c1: get(C1),
        c0: Scalar::Exact(c0),
        residuals: BTreeMap::new(),
        steps,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::ExpSum;
    use crate::families::thm2prime_family;
    use crate::laurent::LaurentPoly;

    #[test]
    fn delta_one() {
        let d = derive_family_constants(&Scalar::one()).unwrap();
        assert_eq!(d.alpha, Scalar::ratio(1, 3));
        assert_eq!(d.gamma, Scalar::ratio(4, 27));
        assert_eq!(d.b2, Scalar::ratio(4, 27));
        for v in [&d.b1, &d.b0, &d.c2, &d.c1] {
            assert_eq!(*v, Scalar::zero());
        }
        assert!(d.residuals.is_empty());
    }

    #[test]
    fn seed_equations_are_recorded() {
        let d = derive_family_constants(&Scalar::one()).unwrap();
        assert_eq!(d.steps[0].equations, vec!["8*alpha^3 - 4*alpha^2 + gamma", "-alpha^3 - alpha^2 + gamma"]);
        let order: Vec<i64> = d.steps.iter().flat_map(|s| s.powers.clone()).collect();
        assert_eq!(order, vec![6, -3, 4, -2, 3, -1, 0]);
    }

    #[test]
    fn b1_is_left_free() {
        let d = derive_family_constants(&Scalar::one()).unwrap();
        let step = d.steps.iter().find(|s| s.unknowns == ["b1"]).unwrap();
        assert_eq!(step.equations, vec!["0"]);
        assert!(step.note.is_some());
        let c2 = d.steps.iter().find(|s| s.unknowns == ["c2"]).unwrap();
        assert_eq!(c2.solutions, vec!["c2 = -3/4*b1^2*(1/b2)"]);
    }

    #[test]
    fn b2_scales_with_delta() {
        for (n, den) in [(1, 1), (-1, 1), (2, 1), (1, 3), (-2, 1)] {
            let delta = Scalar::ratio(n, den);
            let d = derive_family_constants(&delta).unwrap();
            assert_eq!(d.b2, &Scalar::ratio(4, 27) * &delta);
            assert_eq!(d.gamma, Scalar::ratio(4, 27));
        }
        assert_eq!(derive_family_constants(&Scalar::zero()), Err(DeriveError::ZeroDelta));
        assert_eq!(derive_family_constants(&Scalar::float(1.0, 0.0)), Err(DeriveError::NotExact));
    }

    #[test]
    fn parametrization_lies_on_the_curve() {
        // X = f and Y = f' as Laurent polynomials in t = e^{z/3}
        let f = thm2prime_family(&Scalar::one(), &Scalar::one()).unwrap();
        let base = Scalar::ratio(1, 3);
        let x = LaurentPoly::from_expsum(&f, Some(&base)).unwrap();
        let y = LaurentPoly::from_expsum(&f.differentiate(), Some(&base)).unwrap();
        let gamma = Scalar::ratio(4, 27);
        let lhs = &(&y.pow(3) - &(&x * &y.pow(2)))
            + &(&x.pow(3) - &LaurentPoly::constant(base.clone(), Scalar::one())).scale(&gamma);
        assert!(lhs.is_zero());
        // the curve's b₁ freedom: e^{2z/3} + e^{z/3} + 1/3 + e^{-z/3}
        let g = ExpSum::exp(Scalar::ratio(2, 3))
            + ExpSum::exp(Scalar::ratio(1, 3))
            + ExpSum::constant(Scalar::ratio(1, 3))
            + ExpSum::exp(Scalar::ratio(-1, 3));
        let x = LaurentPoly::from_expsum(&g, Some(&base)).unwrap();
        let y = LaurentPoly::from_expsum(&g.differentiate(), Some(&base)).unwrap();
        let c = |n, d| LaurentPoly::constant(base.clone(), Scalar::ratio(n, d));
        let p = &(&(&x.pow(3) + &(&c(-3, 4) * &x.pow(2))) + &(&c(-13, 3) * &x)) + &c(-169, 27);
        let lhs = &(&y.pow(3) - &(&x * &y.pow(2))) + &p.scale(&gamma);
        assert!(lhs.is_zero());
    }
}
