//! Classification of the projective cubics
//! `Y³ − XY² + γ(X³ + c₂X²Z + c₁XZ² + c₀Z³) = 0`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::poly::{complex_roots, MPoly, UPoly};
use crate::scalar::{GaussRat, Scalar};

/// Magnitude tolerance for float inputs.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Float residuals between `NUMERIC_TOL` and this bound are ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-6;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicCurve {
    pub gamma: Scalar,
    pub c2: Scalar,
    pub c1: Scalar,
    pub c0: Scalar,
}

impl CubicCurve {
    pub fn new(gamma: Scalar, c2: Scalar, c1: Scalar, c0: Scalar) -> Self {
        CubicCurve { gamma, c2, c1, c0 }
    }

    pub fn is_exact(&self) -> bool {
        [&self.gamma, &self.c2, &self.c1, &self.c0].iter().all(|s| s.is_exact())
    }

    fn exact_params(&self) -> Option<[GaussRat; 4]> {
        Some([
            self.gamma.as_exact()?.clone(),
            self.c2.as_exact()?.clone(),
            self.c1.as_exact()?.clone(),
            self.c0.as_exact()?.clone(),
        ])
    }

    /// The homogeneous cubic in `X, Y, Z` (variables 0, 1, 2); exact inputs only.
    pub fn homogeneous(&self) -> Option<MPoly> {
        let [g, c2, c1, c0] = self.exact_params()?;
        let (x, y, z) = (MPoly::var(X), MPoly::var(Y), MPoly::var(Z));
        let p = &(&(&x.pow(3) + &(&x.pow(2) * &z).scale(&c2)) + &(&x * &z.pow(2)).scale(&c1)) + &z.pow(3).scale(&c0);
        Some(&(&y.pow(3) - &(&x * &y.pow(2))) + &p.scale(&g))
    }
}

impl fmt::Display for CubicCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Y^3 - X*Y^2 + ({})*(X^3 + ({})*X^2*Z + ({})*X*Z^2 + ({})*Z^3)",
            self.gamma, self.c2, self.c1, self.c0
        )
    }
}

/// The line `Y − uX + vZ = 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearFactor {
    pub u: Scalar,
    pub v: Scalar,
}

impl fmt::Display for LinearFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Y - ({})*X + ({})*Z", self.u, self.v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CurveClass {
    Reducible {
        factor: LinearFactor,
    },
    /// The unique singular point in projective coordinates `[X : Y : Z]`.
    SingularGenus0 {
        point: [Scalar; 3],
    },
    SmoothGenus1,
}

impl CurveClass {
    pub fn label(&self) -> &'static str {
        match self {
            CurveClass::Reducible { .. } => "reducible",
            CurveClass::SingularGenus0 { .. } => "singular_genus0",
            CurveClass::SmoothGenus1 => "smooth_genus1",
        }
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveClass::Reducible { factor } => write!(f, "reducible, factor {factor}"),
            CurveClass::SingularGenus0 { point: [x, y, z] } => write!(f, "singular, genus 0, at [{x} : {y} : {z}]"),
            CurveClass::SmoothGenus1 => f.write_str("smooth, genus 1"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CubicError {
    #[error("gamma = 0 degenerates the curve")]
    DegenerateGamma,
    #[error("numerically ambiguous {what} (residual {residual:e}); pass exact rationals to decide")]
    NumericAmbiguity { what: &'static str, residual: f64 },
    #[error("found {0} singular points on an irreducible cubic")]
    MultipleSingularPoints(usize),
}

/// Roots with multiplicities: rational roots exactly, the rest as floats.
fn mixed_roots(p: &UPoly) -> Vec<(Scalar, u32)> {
    let exact = p.rational_roots();
    let mut rest = p.clone();
    for (r, m) in &exact {
        let lin = UPoly::new(vec![-r, GaussRat::one()]);
        for _ in 0..*m {
            rest = rest.div_rem(&lin).0;
        }
    }
    let mut out: Vec<(Scalar, u32)> = exact.into_iter().map(|(r, m)| (Scalar::Exact(r), m)).collect();
    let c: Vec<Complex64> = rest.coeffs().iter().map(GaussRat::to_complex).collect();
    out.extend(complex_roots(&c).into_iter().map(|z| (Scalar::from(z), 1)));
    out
}

/// Roots `y = Y/X` of the `Z = 0` slice `y³ − y² + γ`, with multiplicities.
pub fn infinity_slice(curve: &CubicCurve) -> Result<Vec<(Scalar, u32)>, CubicError> {
    if curve.gamma.is_zero() {
        return Err(CubicError::DegenerateGamma);
    }
    match curve.gamma.as_exact() {
        Some(g) => {
            Ok(mixed_roots(&UPoly::new(vec![g.clone(), GaussRat::zero(), GaussRat::from_int(-1), GaussRat::one()])))
        }
        None => {
            let g = curve.gamma.to_complex();
            let one = Complex64::new(1.0, 0.0);
            Ok(cluster(complex_roots(&[g, Complex64::new(0.0, 0.0), -one, one])))
        }
    }
}

/// Merges numerically coincident roots.
fn cluster(roots: Vec<Complex64>) -> Vec<(Scalar, u32)> {
    let mut out: Vec<(Complex64, u32)> = Vec::new();
    for r in roots {
        match out.iter_mut().find(|(c, _)| (c - r).norm() <= 1e-6 * (1.0 + r.norm())) {
            Some((c, m)) => {
                *c = (*c * *m as f64 + r) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => out.push((r, 1)),
        }
    }
    out.into_iter().map(|(c, m)| (Scalar::from(c), m)).collect()
}

pub fn classify_cubic(curve: &CubicCurve) -> Result<CurveClass, CubicError> {
    if curve.gamma.is_zero() {
        return Err(CubicError::DegenerateGamma);
    }
    match curve.exact_params() {
        Some(p) => classify_exact(curve, &p),
        None => classify_float(curve),
    }
}

fn upoly(cs: &[GaussRat]) -> UPoly {
    UPoly::new(cs.to_vec())
}

fn gcd_all(ps: &[UPoly]) -> UPoly {
    ps.iter().fold(UPoly::new(vec![]), |acc, p| if acc.is_zero() { p.monic() } else { acc.gcd(p) })
}

/// Coefficient conditions on `v` for `Y − uX + vZ` to divide the cubic,
/// after the `X³` coefficient `u³ − u² + γ` vanishes.
fn factor_conditions(u: &GaussRat, [g, c2, c1, c0]: &[GaussRat; 4]) -> [UPoly; 3] {
    let two = GaussRat::from_int(2);
    let three = GaussRat::from_int(3);
    let zero = GaussRat::zero();
    [
        upoly(&[g * c2, &(&two * u) - &(&three * &(u * u))]),
        upoly(&[g * c1, zero.clone(), &(&three * u) - &GaussRat::one()]),
        upoly(&[g * c0, zero.clone(), zero, GaussRat::from_int(-1)]),
    ]
}

fn find_factor_exact(params: &[GaussRat; 4]) -> Result<Option<LinearFactor>, CubicError> {
    let g = &params[0];
    let q = upoly(&[g.clone(), GaussRat::zero(), GaussRat::from_int(-1), GaussRat::one()]);
    for (u, _) in mixed_roots(&q) {
        match u {
            Scalar::Exact(u) => {
                let conds = factor_conditions(&u, params);
                let common = gcd_all(&conds);
                if common.degree().unwrap_or(0) == 0 {
                    continue;
                }
                let v = match mixed_roots(&common).into_iter().next() {
                    Some((v, _)) => v,
                    None => continue,
                };
                return Ok(Some(LinearFactor { u: Scalar::Exact(u), v }));
            }
            Scalar::Float(u) => {
                let p = params.clone().map(|c| c.to_complex());
                if let Some(f) = numeric_factor_for(u, &p)? {
                    return Ok(Some(f));
                }
            }
        }
    }
    Ok(None)
}

fn horner(cs: &[Complex64], x: Complex64) -> Complex64 {
    cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn scale_of(p: &[Complex64; 4]) -> f64 {
    1.0 + p[0].norm() * (1.0 + p[1].norm() + p[2].norm() + p[3].norm())
}

fn numeric_factor_for(u: Complex64, p: &[Complex64; 4]) -> Result<Option<LinearFactor>, CubicError> {
    let [g, c2, c1, c0] = *p;
    let zero = Complex64::new(0.0, 0.0);
    let conds = [
        vec![g * c2, 2.0 * u - 3.0 * u * u],
        vec![g * c1, zero, 3.0 * u - 1.0],
        vec![g * c0, zero, zero, Complex64::new(-1.0, 0.0)],
    ];
    let scale = scale_of(p);
    let mut best = f64::INFINITY;
    for v in complex_roots(&conds[2]) {
        let r = conds.iter().map(|c| horner(c, v).norm()).fold(0.0, f64::max) / scale;
        if r <= NUMERIC_TOL {
            return Ok(Some(LinearFactor { u: Scalar::from(u), v: Scalar::from(v) }));
        }
        best = best.min(r);
    }
    if best <= AMBIGUITY_TOL {
        return Err(CubicError::NumericAmbiguity { what: "linear factor", residual: best });
    }
    Ok(None)
}

fn normalize_exact(p: [GaussRat; 3]) -> [Scalar; 3] {
    p.map(Scalar::Exact)
}

/// Singular points: the `Z = 0` chart, then the affine chart on the two
/// lines where `∂F/∂Y = Y(3Y − 2X)` vanishes.
fn singular_points_exact(curve: &CubicCurve, params: &[GaussRat; 4]) -> Vec<[Scalar; 3]> {
    let f = curve.homogeneous().expect("exact curve");
    let grad = [f.partial(X), f.partial(Y), f.partial(Z)];
    let vanishes = |pt: &[GaussRat; 3]| f.eval(pt).is_zero() && grad.iter().all(|d| d.eval(pt).is_zero());
    let mut out = Vec::new();
    let one = GaussRat::one();
    let zero = GaussRat::zero();
    let g = &params[0];
    let q = upoly(&[g.clone(), zero.clone(), GaussRat::from_int(-1), one.clone()]);
    for (y, _) in q.rational_roots() {
        let pt = [one.clone(), y, zero.clone()];
        if vanishes(&pt) {
            out.push(normalize_exact(pt));
        }
    }
    for lambda in [GaussRat::zero(), GaussRat::ratio(2, 3)] {
        let on_line = f.substitute(Z, &one).compose(Y, &MPoly::var(X).scale(&lambda));
        let gx = UPoly::from_mpoly(&on_line, X).expect("univariate in X");
        if gx.is_zero() {
            continue;
        }
        let d = gx.derivative();
        let common = if d.is_zero() { gx.clone() } else { gx.gcd(&d) };
        for (x, _) in common.rational_roots() {
            let pt = [x.clone(), &lambda * &x, one.clone()];
            if vanishes(&pt) && !out.iter().any(|p| p == &normalize_exact(pt.clone())) {
                out.push(normalize_exact(pt));
            }
        }
    }
    out
}

fn classify_exact(curve: &CubicCurve, params: &[GaussRat; 4]) -> Result<CurveClass, CubicError> {
    if let Some(factor) = find_factor_exact(params)? {
        return Ok(CurveClass::Reducible { factor });
    }
    let pts = singular_points_exact(curve, params);
    match pts.len() {
        0 => Ok(CurveClass::SmoothGenus1),
        1 => Ok(CurveClass::SingularGenus0 { point: pts.into_iter().next().unwrap() }),
        n => Err(CubicError::MultipleSingularPoints(n)),
    }
}

fn gradient_residual(p: &[Complex64; 4], pt: [Complex64; 3]) -> f64 {
    let [g, c2, c1, c0] = *p;
    let n = pt.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let [x, y, z] = pt.map(|c| c / n);
    let vals = [
        y * y * y - x * y * y + g * (x * x * x + c2 * x * x * z + c1 * x * z * z + c0 * z * z * z),
        -y * y + g * (3.0 * x * x + 2.0 * c2 * x * z + c1 * z * z),
        3.0 * y * y - 2.0 * x * y,
        g * (c2 * x * x + 2.0 * c1 * x * z + 3.0 * c0 * z * z),
    ];
    vals.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale_of(p)
}

fn classify_float(curve: &CubicCurve) -> Result<CurveClass, CubicError> {
    let p = [&curve.gamma, &curve.c2, &curve.c1, &curve.c0].map(Scalar::to_complex);
    let [g, c2, c1, _] = p;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    for u in complex_roots(&[g, zero, -one, one]) {
        if let Some(factor) = numeric_factor_for(u, &p)? {
            return Ok(CurveClass::Reducible { factor });
        }
    }
    // ∂F/∂Y = Y(3Y − 2X) vanishes only on Y = 0 and Y = 2X/3
    let mut candidates: Vec<[Complex64; 3]> = vec![[one, zero, zero], [one, Complex64::new(2.0 / 3.0, 0.0), zero]];
    for lambda in [0.0, 2.0 / 3.0] {
        let lead = g + lambda * lambda * lambda - lambda * lambda;
        let dg = [g * c1, 2.0 * g * c2, 3.0 * lead];
        candidates.extend(complex_roots(&dg).into_iter().map(|x| [x, lambda * x, one]));
    }
    let mut found: Vec<[Complex64; 3]> = Vec::new();
    for pt in candidates {
        let r = gradient_residual(&p, pt);
        if r <= NUMERIC_TOL {
            let near = |q: &[Complex64; 3]| (0..3).all(|k| (q[k] - pt[k]).norm() <= 1e-6 * (1.0 + pt[k].norm()));
            if !found.iter().any(near) {
                found.push(pt);
            }
        } else if r <= AMBIGUITY_TOL {
            return Err(CubicError::NumericAmbiguity { what: "singular point", residual: r });
        }
    }
    match found.len() {
        0 => Ok(CurveClass::SmoothGenus1),
        1 => Ok(CurveClass::SingularGenus0 { point: found[0].map(Scalar::from) }),
        n => Err(CubicError::MultipleSingularPoints(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::poly::resultant;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d)
    }

    fn curve(g: Scalar, c2: i64, c1: i64, c0: i64) -> CubicCurve {
        CubicCurve::new(g, Scalar::int(c2), Scalar::int(c1), Scalar::int(c0))
    }

    #[test]
    fn derived_curve_is_singular_at_infinity() {
        let c = curve(q(4, 27), 0, 0, -1);
        assert_eq!(classify_cubic(&c).unwrap(), CurveClass::SingularGenus0 { point: [q(1, 1), q(2, 3), q(0, 1)] });
        assert_eq!(infinity_slice(&c).unwrap(), vec![(q(-1, 3), 1), (q(2, 3), 2)]);
        for delta in [-1, 2] {
            assert_eq!(classify_cubic(&curve(q(4, 27), 0, 0, -delta)).unwrap().label(), "singular_genus0");
        }
    }

    #[test]
    fn gradient_vanishes_at_reported_point() {
        let c = curve(q(4, 27), 0, 0, -1);
        let f = c.homogeneous().unwrap();
        let pt = [GaussRat::one(), GaussRat::ratio(2, 3), GaussRat::zero()];
        assert!(f.eval(&pt).is_zero());
        for v in [X, Y, Z] {
            assert!(f.partial(v).eval(&pt).is_zero());
        }
    }

    #[test]
    fn reducible_example() {
        // Y − 2X + 2Z divides the curve with γ = −4, c₂ = −4, c₁ = 5, c₀ = −2
        let c = curve(q(-4, 1), -4, 5, -2);
        let class = classify_cubic(&c).unwrap();
        assert_eq!(class, CurveClass::Reducible { factor: LinearFactor { u: q(2, 1), v: q(2, 1) } });
        let f = c.homogeneous().unwrap();
        let two = GaussRat::from_int(2);
        let on_line = f.compose(Y, &(&MPoly::var(X).scale(&two) - &MPoly::var(Z).scale(&two)));
        assert!(on_line.is_zero());
    }

    #[test]
    fn repeated_factor_of_p_does_not_force_reducibility() {
        // P(X) = X²(X − 1) with γ = 1: no linear factor exists
        let class = classify_cubic(&curve(q(1, 1), -1, 0, 0)).unwrap();
        assert_ne!(class.label(), "reducible");
    }

    /// Singular affine points from resultants of the partial derivatives,
    /// independent of the classifier's line decomposition.
    fn resultant_oracle(c: &CubicCurve) -> usize {
        let f = c.homogeneous().unwrap().substitute(Z, &GaussRat::one());
        let (fx, fy) = (f.partial(X), f.partial(Y));
        let r1 = UPoly::from_mpoly(&resultant(&fx, &fy, Y), X).unwrap();
        let r2 = UPoly::from_mpoly(&resultant(&f, &fy, Y), X).unwrap();
        let common = if r1.is_zero() {
            r2
        } else if r2.is_zero() {
            r1
        } else {
            r1.gcd(&r2)
        };
        let mut count = 0;
        for (x, _) in common.rational_roots() {
            let fy_x = UPoly::from_mpoly(&fy.substitute(X, &x), Y).unwrap();
            let fx_x = UPoly::from_mpoly(&fx.substitute(X, &x), Y).unwrap();
            let f_x = UPoly::from_mpoly(&f.substitute(X, &x), Y).unwrap();
            let g = fy_x.gcd(&fx_x).gcd(&f_x);
            count += g.rational_roots().len();
        }
        let inf = infinity_slice(c).unwrap();
        count
            + inf
                .iter()
                .filter(|(y, m)| {
                    *m >= 2 && {
                        let pt = [GaussRat::one(), y.as_exact().unwrap().clone(), GaussRat::zero()];
                        let h = c.homogeneous().unwrap();
                        [X, Y, Z].iter().all(|v| h.partial(*v).eval(&pt).is_zero())
                    }
                })
                .count()
    }

    #[test]
    fn classifier_agrees_with_resultant_oracle() {
        let cases = [
            curve(q(1, 1), 0, 0, -1),
            curve(q(4, 27), 0, 0, -1),
            curve(q(1, 1), -1, 0, 0),
            curve(q(2, 1), 0, -3, 2),
            curve(q(4, 27), -3, 3, -1),
            curve(q(1, 3), 1, 1, 1),
        ];
        for c in cases {
            let class = classify_cubic(&c).unwrap();
            let n = resultant_oracle(&c);
            match class {
                CurveClass::SmoothGenus1 => assert_eq!(n, 0, "{c}"),
                CurveClass::SingularGenus0 { .. } => assert_eq!(n, 1, "{c}"),
                CurveClass::Reducible { .. } => {}
            }
        }
    }

    #[test]
    fn affine_node() {
        // γ = 1, P(X) = (X − 1)²(X + 2) = X³ − 3X + 2: Y = 0 meets a double root
        let c = curve(q(1, 1), 0, -3, 2);
        let class = classify_cubic(&c).unwrap();
        assert_eq!(class, CurveClass::SingularGenus0 { point: [q(1, 1), q(0, 1), q(1, 1)] });
    }

    #[test]
    fn float_inputs() {
        let c = CubicCurve::new(Scalar::float(4.0 / 27.0, 0.0), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
        let CurveClass::SingularGenus0 { point } = classify_cubic(&c).unwrap() else { panic!() };
        assert!((point[1].to_complex() / point[0].to_complex() - 2.0 / 3.0).norm() < 1e-6);
        let near =
            CubicCurve::new(Scalar::float(4.0 / 27.0 + 1e-8, 0.0), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
        assert!(matches!(classify_cubic(&near), Err(CubicError::NumericAmbiguity { .. })));
        let smooth = CubicCurve::new(Scalar::float(1.0, 0.0), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
        assert_eq!(classify_cubic(&smooth).unwrap(), CurveClass::SmoothGenus1);
    }

    #[test]
    fn degenerate_gamma() {
        assert_eq!(classify_cubic(&curve(q(0, 1), 0, 0, 1)), Err(CubicError::DegenerateGamma));
    }
}
