//! Laurent polynomials `Σ c_d t^d` in `t = e^(σz)`.
//!
//! Commensurable exponential sums become Laurent polynomials, and identities
//! between them become exact coefficient comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expsum::{ExpSum, Term};
use crate::scalar::{GaussRat, Mode, Scalar};

/// Relative tolerance of the float-mode zero test.
pub const FLOAT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaurentError {
    #[error("frequencies {first} and {second} are not rational multiples of one another")]
    IncommensurableFrequencies { first: String, second: String },
    #[error("frequency {freq} is not an integer multiple of base {base}")]
    NonIntegerRatio { freq: String, base: String },
    #[error("Laurent polynomials have different bases ({left} vs {right})")]
    BaseMismatch { left: String, right: String },
    #[error("division by the zero Laurent polynomial")]
    DivisionByZeroPolynomial,
    #[error("the base must be nonzero")]
    ZeroBase,
}

#[derive(Clone, Debug)]
pub struct LaurentPoly {
    base: Scalar,
    coeffs: BTreeMap<i64, Scalar>,
}

/// Result of a constancy test.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantValue {
    pub value: Scalar,
    /// Set when some coefficient was discarded by the float tolerance rule.
    pub tolerance_based: bool,
}

impl LaurentPoly {
    pub fn new(base: Scalar, coeffs: impl IntoIterator<Item = (i64, Scalar)>) -> Result<Self, LaurentError> {
        if base.is_zero() {
            return Err(LaurentError::ZeroBase);
        }
        let mut map: BTreeMap<i64, Scalar> = BTreeMap::new();
        for (d, c) in coeffs {
            let e = map.entry(d).or_insert_with(Scalar::zero);
            *e = &*e + &c;
        }
        map.retain(|_, c| !c.is_zero());
        Ok(LaurentPoly { base, coeffs: map })
    }

    fn raw(base: Scalar, mut coeffs: BTreeMap<i64, Scalar>) -> Self {
        coeffs.retain(|_, c| !c.is_zero());
        LaurentPoly { base, coeffs }
    }

    pub fn zero(base: Scalar) -> Self {
        Self::raw(base, BTreeMap::new())
    }

    pub fn constant(base: Scalar, c: Scalar) -> Self {
        Self::raw(base, BTreeMap::from([(0, c)]))
    }

    pub fn monomial(base: Scalar, degree: i64, c: Scalar) -> Self {
        Self::raw(base, BTreeMap::from([(degree, c)]))
    }

    pub fn base(&self) -> &Scalar {
        &self.base
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Scalar> {
        &self.coeffs
    }

    pub fn coeff(&self, d: i64) -> Scalar {
        self.coeffs.get(&d).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn min_degree(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_degree(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn mode(&self) -> Mode {
        self.coeffs.values().fold(self.base.mode(), |m, c| m.join(c.mode()))
    }

    /// Converts a commensurable sum. With `base = None` the coarsest base is
    /// inferred, normalized to have positive real part (or positive imaginary
    /// part when purely imaginary).
    pub fn from_expsum(f: &ExpSum, base: Option<&Scalar>) -> Result<Self, LaurentError> {
        let base = match base {
            Some(b) if b.is_zero() => return Err(LaurentError::ZeroBase),
            Some(b) => b.clone(),
            None => infer_base(f.frequencies())?,
        };
        let mut coeffs = BTreeMap::new();
        for t in f.terms() {
            let d = integer_ratio(&t.freq, &base)?;
            coeffs.insert(d, t.coeff.clone());
        }
        Ok(Self::raw(base, coeffs))
    }

    pub fn to_expsum(&self) -> ExpSum {
        ExpSum::normalize(
            self.coeffs.iter().map(|(d, c)| Term { coeff: c.clone(), freq: &self.base * &Scalar::int(*d) }),
        )
    }

    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        let sigma = self.base.to_complex();
        self.coeffs.iter().map(|(d, c)| c.to_complex() * (sigma * z * (*d as f64)).exp()).sum()
    }

    fn check_base(&self, other: &Self) -> Result<(), LaurentError> {
        let same = match (&self.base, &other.base) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            (a, b) => a.approx_eq(b, 1e-12 * a.abs().max(1.0)),
        };
        if same {
            Ok(())
        } else {
            Err(LaurentError::BaseMismatch { left: self.base.to_string(), right: other.base.to_string() })
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check_base(other)?;
        let mut out = self.coeffs.clone();
        for (d, c) in &other.coeffs {
            let e = out.entry(*d).or_insert_with(Scalar::zero);
            *e = &*e + c;
        }
        Ok(Self::raw(self.base.clone(), out))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LaurentError> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, LaurentError> {
        self.check_base(other)?;
        let mut out: BTreeMap<i64, Scalar> = BTreeMap::new();
        for (da, ca) in &self.coeffs {
            for (db, cb) in &other.coeffs {
                let e = out.entry(da + db).or_insert_with(Scalar::zero);
                *e = &*e + &(ca * cb);
            }
        }
        Ok(Self::raw(self.base.clone(), out))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        Self::raw(self.base.clone(), self.coeffs.iter().map(|(d, v)| (*d, v * c)).collect())
    }

    /// Multiplication by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self::raw(self.base.clone(), self.coeffs.iter().map(|(d, v)| (d + k, v.clone())).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.base.clone(), Scalar::one());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.try_mul(&base).expect("same base");
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base).expect("same base");
            }
        }
        acc
    }

    /// `d/dz = σ·t·d/dt`: the degree-`d` coefficient `c` becomes `d·σ·c`.
    pub fn derivative_z(&self) -> Self {
        Self::raw(
            self.base.clone(),
            self.coeffs.iter().map(|(d, c)| (*d, c * &(&self.base * &Scalar::int(*d)))).collect(),
        )
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.values().map(Scalar::abs).fold(0.0, f64::max)
    }

    /// Float-mode negligibility: `|c| ≤ tol·max(1, max |c|)`. Exact
    /// coefficients are never negligible.
    fn negligible(&self, c: &Scalar, tol: f64) -> bool {
        match c {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Float(_) => c.abs() <= tol * self.max_abs().max(1.0),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero_with(FLOAT_ZERO_TOL)
    }

    pub fn is_zero_with(&self, tol: f64) -> bool {
        self.coeffs.values().all(|c| self.negligible(c, tol))
    }

    /// Returns the constant when every non-constant coefficient vanishes
    /// (exactly, or under the float tolerance rule). The zero polynomial is
    /// the constant zero.
    pub fn constant_value(&self) -> Option<ConstantValue> {
        self.constant_value_with(FLOAT_ZERO_TOL)
    }

    pub fn constant_value_with(&self, tol: f64) -> Option<ConstantValue> {
        let mut tolerance_based = false;
        for (d, c) in &self.coeffs {
            if *d == 0 {
                continue;
            }
            if !self.negligible(c, tol) {
                return None;
            }
            tolerance_based = true;
        }
        let mut value = self.coeff(0);
        if !value.is_zero() && self.negligible(&value, tol) {
            value = Scalar::Float(Complex64::new(0.0, 0.0));
            tolerance_based = true;
        }
        Some(ConstantValue { value, tolerance_based })
    }

    /// Exact division. Returns `(q, true)` when `self = q·den`; otherwise the
    /// partial quotient of the polynomial long division and `false`.
    pub fn div_exact(&self, den: &Self) -> Result<(Self, bool), LaurentError> {
        self.check_base(den)?;
        if den.is_zero() {
            return Err(LaurentError::DivisionByZeroPolynomial);
        }
        let base = self.base.clone();
        if self.coeffs.is_empty() {
            return Ok((Self::zero(base), true));
        }
        let dmin = den.min_degree().unwrap();
        let nmin = self.min_degree().unwrap();
        // dense coefficient vectors with the lowest degree shifted to 0
        let d: Vec<Scalar> = dense(den, dmin);
        let mut r: Vec<Scalar> = dense(self, nmin);
        let dlead = d.last().unwrap().clone();
        let ddeg = d.len() - 1;
        let mut q: BTreeMap<i64, Scalar> = BTreeMap::new();
        let tol = FLOAT_ZERO_TOL * self.max_abs().max(1.0);
        while r.len() > ddeg {
            let k = r.len() - 1 - ddeg;
            let lead = r.last().unwrap().clone();
            if !lead.is_negligible(tol) {
                let factor = lead.checked_div(&dlead).expect("nonzero leading coefficient");
                for (j, dc) in d.iter().enumerate() {
                    r[k + j] = &r[k + j] - &(&factor * dc);
                }
                q.insert(k as i64 + nmin - dmin, factor);
            }
            r.pop();
        }
        let exact = r.iter().all(|c| c.is_negligible(tol));
        Ok((Self::raw(base, q), exact))
    }
}

fn dense(p: &LaurentPoly, min: i64) -> Vec<Scalar> {
    let max = p.max_degree().unwrap();
    (min..=max).map(|k| p.coeff(k)).collect()
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        self.check_base(other).is_ok()
            && self.coeffs.len() == other.coeffs.len()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|((da, ca), (db, cb))| da == db && ca.approx_eq(cb, FLOAT_ZERO_TOL * ca.abs().max(1.0)))
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0 [t = e^(({})z)]", self.base);
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(d, c)| match d {
                0 => format!("({c})"),
                1 => format!("({c})t"),
                _ => format!("({c})t^{d}"),
            })
            .collect();
        write!(f, "{} [t = e^(({})z)]", parts.join(" + "), self.base)
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly::raw(self.base.clone(), self.coeffs.iter().map(|(d, c)| (*d, -c)).collect())
    }
}

/// Panicking operator forms; use the `try_*` methods when bases may differ.
impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_add(rhs).expect("Laurent base mismatch")
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_sub(rhs).expect("Laurent base mismatch")
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        self.try_mul(rhs).expect("Laurent base mismatch")
    }
}

/// `freq / base` as an integer, or `NonIntegerRatio`.
fn integer_ratio(freq: &Scalar, base: &Scalar) -> Result<i64, LaurentError> {
    let err = || LaurentError::NonIntegerRatio { freq: freq.to_string(), base: base.to_string() };
    match (freq, base) {
        (Scalar::Exact(f), Scalar::Exact(b)) => {
            let r = f.checked_div(b).ok_or(LaurentError::ZeroBase)?;
            if !r.im.is_zero() || !r.re.is_integer() {
                return Err(err());
            }
            r.re.to_integer().to_i64().ok_or_else(err)
        }
        _ => {
            let r = freq.to_complex() / base.to_complex();
            let n = r.re.round();
            if (r - Complex64::new(n, 0.0)).norm() > 1e-9 * n.abs().max(1.0) {
                return Err(err());
            }
            Ok(n as i64)
        }
    }
}

/// Coarsest base σ with every frequency an integer multiple of σ.
pub fn infer_base<'a>(freqs: impl Iterator<Item = &'a Scalar>) -> Result<Scalar, LaurentError> {
    let nonzero: Vec<&Scalar> = freqs.filter(|f| !f.is_zero()).collect();
    let Some(&unit) = nonzero.first() else {
        return Ok(Scalar::one());
    };
    let exact = nonzero.iter().all(|f| f.is_exact());
    let sigma = if exact {
        let u = unit.as_exact().unwrap();
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for f in &nonzero {
            let r = f.as_exact().unwrap().checked_div(u).unwrap();
            if !r.im.is_zero() {
                return Err(LaurentError::IncommensurableFrequencies {
                    first: unit.to_string(),
                    second: f.to_string(),
                });
            }
            g = g.gcd(r.re.numer());
            l = l.lcm(r.re.denom());
        }
        Scalar::Exact(u * &GaussRat::real(BigRational::new(g, l)))
    } else {
        let u = unit.to_complex();
        let mut g: i64 = 0;
        let mut l: i64 = 1;
        for f in &nonzero {
            let r = f.to_complex() / u;
            let (p, q) = match rational_approx(r) {
                Some(pq) => pq,
                None => {
                    return Err(LaurentError::IncommensurableFrequencies {
                        first: unit.to_string(),
                        second: f.to_string(),
                    })
                }
            };
            g = g.gcd(&p);
            l = l.lcm(&q);
        }
        Scalar::Float(u * (g as f64 / l as f64))
    };
    Ok(normalize_sign(sigma))
}

fn normalize_sign(s: Scalar) -> Scalar {
    let flip = match &s {
        Scalar::Exact(g) => g.re.is_negative() || (g.re.is_zero() && g.im.is_negative()),
        Scalar::Float(c) => c.re < 0.0 || (c.re == 0.0 && c.im < 0.0),
    };
    if flip {
        -s
    } else {
        s
    }
}

/// Continued-fraction approximation of a (numerically) real ratio with
/// denominator at most 10⁴.
fn rational_approx(r: Complex64) -> Option<(i64, i64)> {
    if r.im.abs() > 1e-10 * r.re.abs().max(1.0) {
        return None;
    }
    let x = r.re;
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut y = x;
    for _ in 0..40 {
        let a = y.floor();
        if a.abs() > 1e9 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 10_000 {
            return None;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() <= 1e-10 * x.abs().max(1.0) {
            return Some((h1, k1));
        }
        let frac = y - a as f64;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(base: Scalar, cs: &[(i64, Scalar)]) -> LaurentPoly {
        LaurentPoly::new(base, cs.iter().cloned()).unwrap()
    }

    fn literal_sum() -> ExpSum {
        ExpSum::monomial(Scalar::ratio(4, 27), Scalar::ratio(3, 2)) + ExpSum::exp(Scalar::ratio(-1, 3))
    }

    #[test]
    fn infers_coarsest_positive_base() {
        let p = LaurentPoly::from_expsum(&literal_sum(), None).unwrap();
        assert_eq!(p.base(), &Scalar::ratio(1, 6));
        assert_eq!(p.coeff(9), Scalar::ratio(4, 27));
        assert_eq!(p.coeff(-2), Scalar::one());
        assert_eq!(p.coeffs().len(), 2);
    }

    #[test]
    fn supplied_base_must_divide() {
        let err = LaurentPoly::from_expsum(&literal_sum(), Some(&Scalar::ratio(1, 3))).unwrap_err();
        assert!(matches!(err, LaurentError::NonIntegerRatio { .. }));
    }

    #[test]
    fn sine_with_imaginary_base() {
        // a sin 2z, a = 3
        let a = Scalar::int(3);
        let two_i = Scalar::i() * Scalar::int(2);
        let c = &a / &two_i;
        let f = ExpSum::monomial(c.clone(), two_i.clone()) + ExpSum::monomial(-&c, -&two_i);
        let p = LaurentPoly::from_expsum(&f, Some(&two_i)).unwrap();
        assert_eq!(p.coeff(1), c);
        assert_eq!(p.coeff(-1), -&c);
        let inferred = LaurentPoly::from_expsum(&f, None).unwrap();
        assert_eq!(inferred.base(), &two_i);
    }

    #[test]
    fn incommensurable_is_rejected() {
        let f = ExpSum::exp(1) + ExpSum::exp(Scalar::i());
        assert!(matches!(LaurentPoly::from_expsum(&f, None), Err(LaurentError::IncommensurableFrequencies { .. })));
    }

    #[test]
    fn float_base_inference() {
        let f = ExpSum::exp(Scalar::float(1.5, 0.0)) + ExpSum::exp(Scalar::float(-0.5, 0.0));
        let p = LaurentPoly::from_expsum(&f, None).unwrap();
        assert!((p.base().to_complex().re - 0.5).abs() < 1e-15);
        assert_eq!(p.coeffs().keys().copied().collect::<Vec<_>>(), vec![-1, 3]);
        let g = ExpSum::exp(Scalar::float(1.0, 0.0)) + ExpSum::exp(Scalar::float(std::f64::consts::SQRT_2, 0.0));
        assert!(LaurentPoly::from_expsum(&g, None).is_err());
    }

    #[test]
    fn derivative_matches_hand_computation() {
        // d/dz of b2 t^2 + 1/t with t = e^{z/3}
        let b2 = Scalar::ratio(4, 27);
        let p = lp(Scalar::ratio(1, 3), &[(2, b2.clone()), (-1, Scalar::one())]);
        let d = p.derivative_z();
        assert_eq!(d.coeff(2), Scalar::ratio(2, 3) * b2);
        assert_eq!(d.coeff(-1), Scalar::ratio(-1, 3));
    }

    #[test]
    fn powers_and_difference_of_squares() {
        let one = lp(Scalar::one(), &[(0, Scalar::one())]);
        assert_eq!(one.pow(5), one);
        let a = lp(Scalar::one(), &[(1, Scalar::one()), (-1, Scalar::one())]);
        let b = lp(Scalar::one(), &[(1, Scalar::one()), (-1, Scalar::int(-1))]);
        assert_eq!(&a * &b, lp(Scalar::one(), &[(2, Scalar::one()), (-2, Scalar::int(-1))]));
        assert!(a.try_mul(&lp(Scalar::int(2), &[(0, Scalar::one())])).is_err());
    }

    #[test]
    fn constancy_tests() {
        let c = lp(Scalar::one(), &[(0, Scalar::ratio(4, 27))]);
        assert_eq!(c.constant_value().unwrap(), ConstantValue { value: Scalar::ratio(4, 27), tolerance_based: false });
        let z = LaurentPoly::zero(Scalar::one());
        assert!(z.is_zero());
        assert_eq!(z.constant_value().unwrap().value, Scalar::zero());
        let tiny = lp(Scalar::one(), &[(1, Scalar::float(1e-30, 0.0))]);
        let cv = tiny.constant_value().unwrap();
        assert!(cv.value.is_zero() && cv.tolerance_based);
        let exact_tiny = lp(Scalar::one(), &[(1, Scalar::ratio(1, 1_000_000_000_000_000))]);
        assert!(exact_tiny.constant_value().is_none());
    }

    #[test]
    fn exact_division() {
        let s = Scalar::one();
        let num = lp(s.clone(), &[(2, Scalar::one())]);
        let den = lp(s.clone(), &[(1, Scalar::one())]);
        assert_eq!(num.div_exact(&den).unwrap(), (lp(s.clone(), &[(1, Scalar::one())]), true));
        let f3m1 = lp(s.clone(), &[(3, Scalar::one()), (0, Scalar::int(-1))]);
        let scaled = f3m1.scale(&Scalar::ratio(4, 27));
        let (q, exact) = scaled.div_exact(&f3m1).unwrap();
        assert!(exact);
        assert_eq!(q.constant_value().unwrap().value, Scalar::ratio(4, 27));
        let (_, exact) = lp(s.clone(), &[(1, Scalar::one()), (0, Scalar::one())]).div_exact(&f3m1).unwrap();
        assert!(!exact);
        assert_eq!(num.div_exact(&LaurentPoly::zero(s)), Err(LaurentError::DivisionByZeroPolynomial));
    }

    fn arb_exact_sum() -> impl Strategy<Value = ExpSum> {
        proptest::collection::vec((-9i64..9, 1i64..5, -6i64..6), 0..5).prop_map(|ts| {
            ExpSum::normalize(ts.into_iter().map(|(p, q, d)| Term::new(Scalar::ratio(p, q), Scalar::ratio(d, 4))))
        })
    }

    fn arb_poly() -> impl Strategy<Value = LaurentPoly> {
        proptest::collection::vec((-4i64..5, -7i64..8, 1i64..4), 1..4).prop_map(|cs| {
            LaurentPoly::new(Scalar::ratio(1, 2), cs.into_iter().map(|(d, p, q)| (d, Scalar::ratio(p, q)))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn round_trip_through_expsum(f in arb_exact_sum()) {
            let p = LaurentPoly::from_expsum(&f, None).unwrap();
            let back = p.to_expsum();
            prop_assert_eq!(back.terms(), f.terms());
        }

        #[test]
        fn evaluation_agrees(f in arb_exact_sum(), x in -2.0f64..2.0, y in -2.0f64..2.0) {
            let p = LaurentPoly::from_expsum(&f, None).unwrap();
            let z = Complex64::new(x, y);
            let a = f.evaluate(z).unwrap();
            let b = p.evaluate(z);
            prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }

        #[test]
        fn derivative_commutes_with_conversion(f in arb_exact_sum()) {
            let base = Scalar::ratio(1, 4);
            let lhs = LaurentPoly::from_expsum(&f.differentiate(), Some(&base)).unwrap();
            let rhs = LaurentPoly::from_expsum(&f, Some(&base)).unwrap().derivative_z();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn division_inverts_multiplication(q in arb_poly(), d in arb_poly()) {
            prop_assume!(!d.is_zero());
            let (got, exact) = (&q * &d).div_exact(&d).unwrap();
            prop_assert!(exact);
            prop_assert_eq!(got, q);
        }
    }
}
