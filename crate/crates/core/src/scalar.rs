//! Scalars that are either exact Gaussian rationals or IEEE complex doubles.
//!
//! Exact arithmetic stays exact; any operation that mixes an exact and a
//! float operand produces a float result. Callers that need to know whether
//! a computation stayed exact inspect [`Scalar::mode`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arithmetic mode of a value or a computed result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    /// Exact only when both sides are exact.
    pub fn join(self, other: Mode) -> Mode {
        if self == Mode::Exact && other == Mode::Exact {
            Mode::Exact
        } else {
            Mode::Float
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => f.write_str("exact"),
            Mode::Float => f.write_str("float"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarParseError {
    #[error("empty numeric literal")]
    Empty,
    #[error("invalid numeric literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("non-finite literal `{0}`")]
    NonFinite(String),
}

/// A Gaussian rational `re + im·i` with arbitrary-precision parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num/den` as a real Gaussian rational. Panics when `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn i() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm_sqr();
        Some(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        rhs.inv().map(|r| self * &r)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = GaussRat::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }

    /// Lexicographic comparison by (real part, imaginary part).
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.re.cmp(&other.re).then_with(|| self.im.cmp(&other.im))
    }
}

pub(crate) fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Formats a rational as `p` or `p/q` in lowest terms.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p` or `p/q` (optional sign on `p`). Returns `None` when the text is
/// not of that shape.
pub fn parse_rational(s: &str) -> Result<Option<BigRational>, ScalarParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ScalarParseError::Empty);
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let int_like = |t: &str, allow_sign: bool| {
        let body = if allow_sign { t.strip_prefix('-').or_else(|| t.strip_prefix('+')).unwrap_or(t) } else { t };
        !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit())
    };
    if !int_like(num, true) || !den.is_none_or(|d| int_like(d, false)) {
        return Ok(None);
    }
    let n: BigInt = num.trim_start_matches('+').parse().map_err(|_| ScalarParseError::Invalid(s.to_string()))?;
    let d: BigInt = match den {
        Some(d) => d.parse().map_err(|_| ScalarParseError::Invalid(s.to_string()))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(ScalarParseError::ZeroDenominator(s.to_string()));
    }
    Ok(Some(BigRational::new(n, d)))
}

fn parse_float(s: &str) -> Result<f64, ScalarParseError> {
    let t = s.trim();
    let v: f64 = t.parse().map_err(|_| ScalarParseError::Invalid(t.to_string()))?;
    if !v.is_finite() {
        return Err(ScalarParseError::NonFinite(t.to_string()));
    }
    Ok(v)
}

/// Shortest round-tripping decimal that always reads back as a float literal.
pub fn format_float(v: f64) -> String {
    let s = format!("{v:?}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

/// A complex number in exact or float mode.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(GaussRat),
    Float(Complex64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(GaussRat::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(GaussRat::one())
    }

    pub fn i() -> Self {
        Scalar::Exact(GaussRat::i())
    }

    pub fn int(n: i64) -> Self {
        Scalar::Exact(GaussRat::from_int(n))
    }

    /// Exact real `num/den`. Panics when `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(GaussRat::ratio(num, den))
    }

    pub fn float(re: f64, im: f64) -> Self {
        Scalar::Float(Complex64::new(re, im))
    }

    pub fn mode(&self) -> Mode {
        match self {
            Scalar::Exact(_) => Mode::Exact,
            Scalar::Float(_) => Mode::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&GaussRat> {
        match self {
            Scalar::Exact(g) => Some(g),
            Scalar::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Float(c) => c.re == 0.0 && c.im == 0.0,
        }
    }

    /// Zero test with an absolute tolerance in float mode; exact values are
    /// compared exactly.
    pub fn is_negligible(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(g) => g.is_zero(),
            Scalar::Float(c) => c.norm() <= tol,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        match self {
            Scalar::Exact(g) => g.to_complex(),
            Scalar::Float(c) => *c,
        }
    }

    pub fn abs(&self) -> f64 {
        self.to_complex().norm()
    }

    pub fn to_float(&self) -> Scalar {
        Scalar::Float(self.to_complex())
    }

    pub fn inv(&self) -> Option<Scalar> {
        match self {
            Scalar::Exact(g) => g.inv().map(Scalar::Exact),
            Scalar::Float(c) => {
                if c.re == 0.0 && c.im == 0.0 {
                    None
                } else {
                    Some(Scalar::Float(c.inv()))
                }
            }
        }
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Option<Scalar> {
        rhs.inv().map(|r| self * &r)
    }

    pub fn pow(&self, k: u32) -> Scalar {
        match self {
            Scalar::Exact(g) => Scalar::Exact(g.pow(k)),
            Scalar::Float(c) => Scalar::Float(c.powu(k)),
        }
    }

    /// Lexicographic order by (real, imaginary); exact pairs are compared
    /// exactly, anything else through `f64::total_cmp`.
    pub fn lex_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.lex_cmp(b),
            _ => {
                let (a, b) = (self.to_complex(), other.to_complex());
                a.re.total_cmp(&b.re).then_with(|| a.im.total_cmp(&b.im))
            }
        }
    }

    /// Equality used for merging frequencies: exact when both are exact,
    /// otherwise absolute tolerance `tol` on both parts.
    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_complex(), other.to_complex());
                (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol
            }
        }
    }

    /// Parses a pair of DSL strings. Both must be exact rationals for the
    /// result to be exact; a decimal in either part makes it a float.
    pub fn parse_parts(re: &str, im: &str) -> Result<Scalar, ScalarParseError> {
        match (parse_rational(re)?, parse_rational(im)?) {
            (Some(r), Some(i)) => Ok(Scalar::Exact(GaussRat::new(r, i))),
            (r, i) => {
                let re_v = match r {
                    Some(r) => rat_to_f64(&r),
                    None => parse_float(re)?,
                };
                let im_v = match i {
                    Some(i) => rat_to_f64(&i),
                    None => parse_float(im)?,
                };
                Ok(Scalar::float(re_v, im_v))
            }
        }
    }

    /// DSL string pair `(re, im)`.
    pub fn format_parts(&self) -> (String, String) {
        match self {
            Scalar::Exact(g) => (format_rational(&g.re), format_rational(&g.im)),
            Scalar::Float(c) => (format_float(c.re), format_float(c.im)),
        }
    }
}

impl From<GaussRat> for Scalar {
    fn from(g: GaussRat) -> Self {
        Scalar::Exact(g)
    }
}

impl From<Complex64> for Scalar {
    fn from(c: Complex64) -> Self {
        Scalar::Float(c)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::int(n)
    }
}

/// Serialized as `{"re": "...", "im": "..."}`; a plain string in the
/// `FromStr` syntax is also accepted.
impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (re, im) = self.format_parts();
        let mut st = s.serialize_struct("Scalar", 2)?;
        st.serialize_field("re", &re)?;
        st.serialize_field("im", &im)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Parts { re: String, im: String },
            Text(String),
            Number(f64),
        }
        let parsed = match Wire::deserialize(d)? {
            Wire::Parts { re, im } => Scalar::parse_parts(&re, &im),
            Wire::Text(t) => t.parse(),
            Wire::Number(x) => Scalar::parse_parts(&x.to_string(), "0"),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Accepts `p`, `p/q`, a decimal, or `re,im` with either form per part.
impl FromStr for Scalar {
    type Err = ScalarParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(',') {
            Some((re, im)) => Scalar::parse_parts(re, im),
            None => Scalar::parse_parts(s, "0"),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(g) => {
                let re = format_rational(&g.re);
                if g.im.is_zero() {
                    return f.write_str(&re);
                }
                let im_abs = format_rational(&g.im.abs());
                let sign = if g.im.is_negative() { '-' } else { '+' };
                if g.re.is_zero() {
                    let lead = if g.im.is_negative() { "-" } else { "" };
                    write!(f, "{lead}{im_abs}i")
                } else {
                    write!(f, "{re}{sign}{im_abs}i")
                }
            }
            Scalar::Float(c) => {
                if c.im == 0.0 {
                    write!(f, "{}", format_float(c.re))
                } else {
                    write!(f, "{}{:+}i", format_float(c.re), c.im)
                }
            }
        }
    }
}

macro_rules! gauss_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&GaussRat> for &GaussRat {
            type Output = GaussRat;
            fn $method(self, rhs: &GaussRat) -> GaussRat {
                let f: fn(&GaussRat, &GaussRat) -> GaussRat = $body;
                f(self, rhs)
            }
        }
        impl $trait<GaussRat> for GaussRat {
            type Output = GaussRat;
            fn $method(self, rhs: GaussRat) -> GaussRat {
                (&self).$method(&rhs)
            }
        }
    };
}

gauss_binop!(Add, add, |a, b| GaussRat { re: &a.re + &b.re, im: &a.im + &b.im });
gauss_binop!(Sub, sub, |a, b| GaussRat { re: &a.re - &b.re, im: &a.im - &b.im });
gauss_binop!(Mul, mul, |a, b| GaussRat { re: &a.re * &b.re - &a.im * &b.im, im: &a.re * &b.im + &a.im * &b.re });
gauss_binop!(Div, div, |a, b| a.checked_div(b).expect("division of Gaussian rational by zero"));

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl Neg for GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re, im: -self.im }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $exact:expr, $float:expr) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let fe: fn(&GaussRat, &GaussRat) -> GaussRat = $exact;
                let ff: fn(Complex64, Complex64) -> Complex64 = $float;
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(fe(a, b)),
                    _ => Scalar::Float(ff(self.to_complex(), rhs.to_complex())),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

scalar_binop!(Add, add, |a, b| a + b, |a, b| a + b);
scalar_binop!(Sub, sub, |a, b| a - b, |a, b| a - b);
scalar_binop!(Mul, mul, |a, b| a * b, |a, b| a * b);
scalar_binop!(Div, div, |a, b| a / b, |a, b| a / b);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(g) => Scalar::Exact(-g),
            Scalar::Float(c) => Scalar::Float(-c),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}
