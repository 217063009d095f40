//! Nevanlinna functionals of entire exponential sums at finite radii.
//!
//! Circle means `(1/2π)∫ φ(re^{iθ}) dθ` are computed panel by panel with
//! adaptive Simpson quadrature (Richardson-corrected), using overflow-free
//! logarithms of the scaled sums.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expsum::{ExpSum, NumericSum, ScaledSum};
use crate::roots::{locate, APoint, LocateOptions, Region, RootError};

/// Absolute tolerance of every circle mean.
pub const QUAD_TOL: f64 = 1e-8;
/// `|f − a|` relative to the size of its terms below which a quadrature node
/// is treated as lying on an a-point.
const ON_CIRCLE_REL: f64 = 1e-9;
const RADIUS_JITTER: f64 = 1e-7;
const JITTER_RETRIES: usize = 3;
const MAX_SIMPSON_DEPTH: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NevanlinnaError {
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("an a-point lies on the circle |z| = {r}")]
    APointOnCircle { r: f64 },
    #[error("f vanishes at the origin")]
    ZeroAtOrigin,
    #[error("f has a zero on the circle |z| = {r}")]
    ZeroOnCircle { r: f64 },
    #[error("log T(r) is constant or undefined over the radii; the order cannot be fitted")]
    DegenerateFit,
    #[error("need at least 4 radii spanning a decade")]
    InsufficientRadii,
    #[error("T(r) = {t} is too small (must exceed 10) for a defect estimate")]
    CharacteristicTooSmall { t: f64 },
    #[error(transparent)]
    Roots(#[from] RootError),
}

#[derive(Clone, Copy)]
enum Integrand {
    /// `log⁺|f|`
    LogPlus,
    /// `log⁺ 1/|f|`
    LogPlusInverse,
    /// `log|f|`
    Log,
}

/// `log|f(z)|` and whether `f(z)` is negligible against its own terms.
fn log_abs(s: &ScaledSum, z: Complex64) -> (f64, bool) {
    let j = s.jet(z, 0);
    (j.values[0].norm().ln() + j.log_scale, j.relative(0) < ON_CIRCLE_REL)
}

fn panel_count(f: &NumericSum, r: f64) -> usize {
    let lams: Vec<Complex64> = f.terms.iter().map(|t| t.1).collect();
    let spread = lams.iter().flat_map(|a| lams.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    ((8.0 * r * spread).ceil() as usize).clamp(128, 1 << 17)
}

/// Mean of `φ(log|num|, log|den|)` over `|z| = r`; `den` absent means 1.
fn circle_mean(num: &ScaledSum, den: Option<&ScaledSum>, kind: Integrand, r: f64, panels: usize) -> Result<f64, f64> {
    let phi = |theta: f64| -> Result<f64, f64> {
        let z = Complex64::from_polar(r, theta);
        let (ln, small) = log_abs(num, z);
        let mut v = ln;
        if small && !matches!(kind, Integrand::LogPlus) {
            return Err(theta);
        }
        if let Some(d) = den {
            let (ld, small) = log_abs(d, z);
            if small {
                return Err(theta);
            }
            v -= ld;
        }
        Ok(match kind {
            Integrand::LogPlus => v.max(0.0),
            Integrand::LogPlusInverse => (-v).max(0.0),
            Integrand::Log => v,
        })
    };
    let h = 2.0 * PI / panels as f64;
    let tol = 2.0 * PI * QUAD_TOL / panels as f64;
    let parts: Result<Vec<f64>, f64> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let a = k as f64 * h;
            let b = a + h;
            let (fa, fm, fb) = (phi(a)?, phi(0.5 * (a + b))?, phi(b)?);
            let whole = h / 6.0 * (fa + 4.0 * fm + fb);
            simpson(&phi, a, b, fa, fm, fb, whole, tol, 0)
        })
        .collect();
    Ok(parts?.iter().sum::<f64>() / (2.0 * PI))
}

#[allow(clippy::too_many_arguments)]
fn simpson<F>(phi: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, f64>
where
    F: Fn(f64) -> Result<f64, f64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (phi(lm)?, phi(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_SIMPSON_DEPTH || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson(phi, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
        + simpson(phi, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
}

fn check_radius(r: f64) -> Result<(), NevanlinnaError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(NevanlinnaError::InvalidRadius(r))
    }
}

/// Retries a circle mean on slightly larger radii when a node hits an a-point.
fn with_jitter(r: f64, mut mean: impl FnMut(f64) -> Result<f64, f64>) -> Result<(f64, f64), NevanlinnaError> {
    for k in 0..=JITTER_RETRIES {
        let rr = r * (1.0 + RADIUS_JITTER * k as f64);
        match mean(rr) {
            Ok(v) => return Ok((v, rr)),
            Err(theta) => log::info!("a-point on |z| = {rr} near θ = {theta}; jittering radius"),
        }
    }
    Err(NevanlinnaError::APointOnCircle { r })
}

/// `m(r, f)`, or `m(r, 1/(f − a))` when `a` is given.
pub fn proximity(f: &ExpSum, r: f64, a: Option<Complex64>) -> Result<f64, NevanlinnaError> {
    check_radius(r)?;
    let compiled = f.compile();
    let panels = panel_count(&compiled, r);
    match a {
        None => {
            let s = ScaledSum::new(&compiled);
            if s.is_empty() {
                return Ok(0.0);
            }
            Ok(circle_mean(&s, None, Integrand::LogPlus, r, panels).expect("log⁺|f| has no singular nodes"))
        }
        Some(a) => {
            let s = ScaledSum::new(&compiled.shifted(a));
            if s.is_empty() {
                return Err(NevanlinnaError::APointOnCircle { r });
            }
            with_jitter(r, |rr| circle_mean(&s, None, Integrand::LogPlusInverse, rr, panels)).map(|(v, _)| v)
        }
    }
}

/// `T(r, f) = m(r, f)` for entire `f`.
pub fn characteristic(f: &ExpSum, r: f64) -> Result<f64, NevanlinnaError> {
    proximity(f, r, None)
}

/// `m(r, f'/f)`.
pub fn log_derivative_proximity(f: &ExpSum, r: f64) -> Result<f64, NevanlinnaError> {
    check_radius(r)?;
    let compiled = f.compile();
    let s = ScaledSum::new(&compiled);
    if s.is_empty() {
        return Err(NevanlinnaError::ZeroOnCircle { r });
    }
    let d = ScaledSum::new(&compiled.derivative());
    if d.is_empty() {
        return Ok(0.0);
    }
    let panels = panel_count(&compiled, r);
    // zeros of f' are harmless under log⁺; only zeros of f are singular
    with_jitter(r, |rr| circle_mean(&d, Some(&s), Integrand::LogPlus, rr, panels)).map(|(v, _)| v)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counting {
    pub n: u32,
    pub big_n: f64,
    pub big_n_bar: f64,
}

/// Roots at distance below this from 0 are treated as lying at the origin.
const ORIGIN_EPS: f64 = 1e-12;

/// `n(r, a)`, `N(r, a)` and `N̄(r, a)` from an a-point list.
pub fn counting_from_points(points: &[APoint], r: f64) -> Counting {
    let mut out = Counting { n: 0, big_n: 0.0, big_n_bar: 0.0 };
    for p in points {
        let d = p.location.norm();
        if d > r {
            continue;
        }
        let w = if d < ORIGIN_EPS { r.ln() } else { (r / d).ln() };
        out.n += p.multiplicity;
        out.big_n += p.multiplicity as f64 * w;
        out.big_n_bar += w;
    }
    out
}

/// a-points in the closed disk `|z| ≤ r`.
pub fn disk_points(f: &ExpSum, a: Complex64, r: f64) -> Result<Vec<APoint>, NevanlinnaError> {
    check_radius(r)?;
    let located = locate(f, a, &Region::square(r), &LocateOptions::default())?;
    Ok(located.points.into_iter().filter(|p| p.location.norm() <= r).collect())
}

pub fn counting(f: &ExpSum, a: Complex64, r: f64) -> Result<Counting, NevanlinnaError> {
    Ok(counting_from_points(&disk_points(f, a, r)?, r))
}

/// Residual of Jensen's formula on `|z| = r`.
pub fn jensen_check(f: &ExpSum, r: f64) -> Result<f64, NevanlinnaError> {
    check_radius(r)?;
    let compiled = f.compile();
    let s = ScaledSum::new(&compiled);
    if s.is_empty() || log_abs(&s, Complex64::new(0.0, 0.0)).1 {
        return Err(NevanlinnaError::ZeroAtOrigin);
    }
    let mean = circle_mean(&s, None, Integrand::Log, r, panel_count(&compiled, r))
        .map_err(|_| NevanlinnaError::ZeroOnCircle { r })?;
    let zeros = disk_points(f, Complex64::new(0.0, 0.0), r)?;
    let sum: f64 = zeros.iter().map(|p| p.multiplicity as f64 * (r / p.location.norm()).ln()).sum();
    let at_origin = log_abs(&s, Complex64::new(0.0, 0.0)).0;
    Ok((mean - at_origin - sum).abs())
}

/// Least-squares slope of `log T(r)` against `log r`.
pub fn order_estimate(f: &ExpSum, radii: &[f64]) -> Result<f64, NevanlinnaError> {
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if radii.len() < 4 || hi.partial_cmp(&(10.0 * lo)).is_none_or(|o| o.is_lt()) {
        return Err(NevanlinnaError::InsufficientRadii);
    }
    let ts: Result<Vec<f64>, NevanlinnaError> = radii.par_iter().map(|&r| characteristic(f, r)).collect();
    let ts = ts?;
    if ts.iter().any(|&t| t <= 0.0) {
        return Err(NevanlinnaError::DegenerateFit);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let spread = ys.iter().map(|y| (y - my).abs()).fold(0.0, f64::max);
    if spread < 1e-9 {
        return Err(NevanlinnaError::DegenerateFit);
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectEstimate {
    pub a: Complex64,
    pub theta_hat: f64,
    pub r_used: f64,
}

/// `Θ̂(a) = clamp(1 − N̄(r, a)/T(r), 0, 1)` at the single radius `r`.
pub fn defect_estimate(f: &ExpSum, a: Complex64, r: f64) -> Result<DefectEstimate, NevanlinnaError> {
    let t = characteristic(f, r)?;
    if t <= 10.0 {
        return Err(NevanlinnaError::CharacteristicTooSmall { t });
    }
    let c = counting(f, a, r)?;
    Ok(DefectEstimate { a, theta_hat: (1.0 - c.big_n_bar / t).clamp(0.0, 1.0), r_used: r })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueCounts {
    pub a: Complex64,
    #[serde(flatten)]
    pub counting: Counting,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub m: f64,
    pub t: f64,
    pub values: Vec<ValueCounts>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NevanlinnaProfile {
    pub rows: Vec<ProfileRow>,
    /// a-points in the disk of the largest radius, per requested value.
    pub roots: Vec<(Complex64, Vec<APoint>)>,
}

impl NevanlinnaProfile {
    /// One CSV line per `(r, a)` pair.
    pub fn csv_rows(&self) -> Vec<[String; 8]> {
        let mut out = Vec::new();
        for row in &self.rows {
            for v in &row.values {
                out.push([
                    row.r.to_string(),
                    v.a.re.to_string(),
                    v.a.im.to_string(),
                    row.m.to_string(),
                    v.counting.n.to_string(),
                    v.counting.big_n.to_string(),
                    v.counting.big_n_bar.to_string(),
                    row.t.to_string(),
                ]);
            }
        }
        out
    }

    pub const CSV_HEADER: [&'static str; 8] = ["r", "a_re", "a_im", "m", "n", "N", "N_bar", "T"];
}

/// m, T and the counting functions for every radius and value, locating the
/// a-points once at the largest radius.
pub fn profile(f: &ExpSum, values: &[Complex64], radii: &[f64]) -> Result<NevanlinnaProfile, NevanlinnaError> {
    for &r in radii {
        check_radius(r)?;
    }
    let big = radii.iter().copied().fold(0.0, f64::max);
    let roots: Result<Vec<(Complex64, Vec<APoint>)>, NevanlinnaError> =
        if radii.is_empty() { Ok(vec![]) } else { values.iter().map(|&a| Ok((a, disk_points(f, a, big)?))).collect() };
    let roots = roots?;
    let rows: Result<Vec<ProfileRow>, NevanlinnaError> = radii
        .par_iter()
        .map(|&r| {
            let m = proximity(f, r, None)?;
            let values =
                roots.iter().map(|(a, pts)| ValueCounts { a: *a, counting: counting_from_points(pts, r) }).collect();
            Ok(ProfileRow { r, m, t: m, values })
        })
        .collect();
    Ok(NevanlinnaProfile { rows: rows?, roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sin2z_plus(k: i64) -> ExpSum {
        let h = Scalar::one() / (Scalar::i() * Scalar::int(2));
        ExpSum::monomial(h.clone(), Scalar::i() * Scalar::int(2)) - ExpSum::monomial(h, Scalar::i() * Scalar::int(-2))
            + ExpSum::constant(k)
    }

    #[test]
    fn exponential_proximity() {
        for r in [1.0, 5.0, 20.0] {
            let m = proximity(&ExpSum::exp(1), r, None).unwrap();
            assert!((m - r / PI).abs() <= 1e-6 * r / PI, "r={r}: {m}");
            let m0 = proximity(&ExpSum::exp(1), r, Some(c(0.0, 0.0))).unwrap();
            assert!((m0 - r / PI).abs() <= 1e-6 * r / PI);
        }
        assert!((proximity(&ExpSum::constant(2), 3.0, None).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(characteristic(&ExpSum::constant(Scalar::ratio(1, 2)), 3.0).unwrap(), 0.0);
    }

    #[test]
    fn counting_one_points_of_exponential() {
        let c7 = counting(&ExpSum::exp(1), c(1.0, 0.0), 7.0).unwrap();
        assert_eq!(c7.n, 3);
        let want = 7f64.ln() + 2.0 * (7.0 / (2.0 * PI)).ln();
        assert!((c7.big_n - want).abs() < 1e-9);
        assert_eq!(c7.big_n, c7.big_n_bar);
        assert_eq!(counting(&ExpSum::exp(1), c(0.0, 0.0), 7.0).unwrap(), Counting { n: 0, big_n: 0.0, big_n_bar: 0.0 });
    }

    #[test]
    fn double_zeros_halve_the_reduced_count() {
        let f = sin2z_plus(1).scale(&Scalar::ratio(1, 2));
        let k = counting(&f, c(0.0, 0.0), 4.0).unwrap();
        assert_eq!(k.n, 6);
        assert!((k.big_n - 2.0 * k.big_n_bar).abs() < 1e-12);
    }

    #[test]
    fn jensen() {
        assert!(jensen_check(&ExpSum::exp(1), 3.0).unwrap() < 1e-9);
        let f = ExpSum::exp(1) + ExpSum::constant(2);
        for r in [2.0, 5.0] {
            assert!(jensen_check(&f, r).unwrap() <= 1e-6);
        }
        assert!(jensen_check(&sin2z_plus(2), 3.0).unwrap() <= 1e-6);
        assert_eq!(jensen_check(&(ExpSum::exp(1) - ExpSum::constant(1)), 1.0), Err(NevanlinnaError::ZeroAtOrigin));
    }

    #[test]
    fn orders() {
        let radii = [10.0, 20.0, 50.0, 100.0];
        let o = order_estimate(&ExpSum::exp(1), &radii).unwrap();
        assert!((o - 1.0).abs() < 0.05);
        let o = order_estimate(&sin2z_plus(0), &radii).unwrap();
        assert!((o - 1.0).abs() < 0.05);
        assert_eq!(order_estimate(&ExpSum::constant(3), &radii), Err(NevanlinnaError::DegenerateFit));
        assert_eq!(order_estimate(&ExpSum::exp(1), &radii[..3]), Err(NevanlinnaError::InsufficientRadii));
    }

    #[test]
    fn log_derivative() {
        assert!(log_derivative_proximity(&ExpSum::exp(1), 10.0).unwrap().abs() < 1e-12);
        let m = log_derivative_proximity(&sin2z_plus(2), 50.0).unwrap();
        assert!(m.is_finite() && m <= 5.0);
    }

    #[test]
    fn omitted_value_has_full_defect() {
        let d = defect_estimate(&ExpSum::exp(1), c(0.0, 0.0), 50.0).unwrap();
        assert_eq!(d.theta_hat, 1.0);
        assert!(matches!(
            defect_estimate(&ExpSum::exp(1), c(0.0, 0.0), 5.0),
            Err(NevanlinnaError::CharacteristicTooSmall { .. })
        ));
    }

    #[test]
    fn profile_rows_are_monotone() {
        let p = profile(&ExpSum::exp(1), &[c(1.0, 0.0)], &[2.0, 5.0, 7.0]).unwrap();
        assert_eq!(p.rows.len(), 3);
        assert!(p.rows.windows(2).all(|w| w[1].t >= w[0].t - 1e-6));
        assert_eq!(p.rows[2].values[0].counting.n, 3);
        assert_eq!(p.csv_rows().len(), 3);
    }
}
