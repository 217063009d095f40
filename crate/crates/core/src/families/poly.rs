//! Sparse multivariate polynomials over the Gaussian rationals.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::{format_rational, GaussRat, Scalar};

/// Exponent vector, trailing zeros trimmed.
type Monomial = Vec<u32>;

fn trim(mut m: Monomial) -> Monomial {
    while m.last() == Some(&0) {
        m.pop();
    }
    m
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, GaussRat>,
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly::default()
    }

    pub fn constant(c: GaussRat) -> Self {
        let mut p = MPoly::zero();
        p.add_term(vec![], c);
        p
    }

    pub fn int(n: i64) -> Self {
        MPoly::constant(GaussRat::from_int(n))
    }

    pub fn var(i: usize) -> Self {
        let mut m = vec![0; i + 1];
        m[i] = 1;
        MPoly::constant(GaussRat::one()).times_monomial(&m)
    }

    fn add_term(&mut self, m: Monomial, c: GaussRat) {
        if c.is_zero() {
            return;
        }
        let m = trim(m);
        let e = self.terms.entry(m.clone()).or_insert_with(GaussRat::zero);
        *e = &*e + &c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    fn times_monomial(&self, m: &[u32]) -> MPoly {
        let mut out = MPoly::zero();
        for (k, c) in &self.terms {
            let n = k.len().max(m.len());
            let e: Monomial = (0..n).map(|i| k.get(i).unwrap_or(&0) + m.get(i).unwrap_or(&0)).collect();
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &GaussRat)> {
        self.terms.iter().map(|(m, c)| (m.as_slice(), c))
    }

    pub fn as_constant(&self) -> Option<GaussRat> {
        match self.terms.len() {
            0 => Some(GaussRat::zero()),
            1 => self.terms.get(&vec![]).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &GaussRat) -> MPoly {
        let mut out = MPoly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> MPoly {
        (0..k).fold(MPoly::int(1), |acc, _| &acc * self)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| *m.get(var).unwrap_or(&0)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    /// Indices of the variables that occur.
    pub fn vars(&self) -> Vec<usize> {
        let mut v: Vec<usize> =
            self.terms.keys().flat_map(|m| m.iter().enumerate().filter(|(_, e)| **e > 0).map(|(i, _)| i)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Coefficients of `self` viewed as a polynomial in `var`, lowest first.
    pub fn coefficients_in(&self, var: usize) -> Vec<MPoly> {
        let mut out = vec![MPoly::zero(); self.degree_in(var) as usize + 1];
        for (m, c) in &self.terms {
            let mut m = m.clone();
            let k = if var < m.len() { std::mem::take(&mut m[var]) } else { 0 };
            out[k as usize].add_term(m, c.clone());
        }
        out
    }

    pub fn substitute(&self, var: usize, value: &GaussRat) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut m = m.clone();
            let k = if var < m.len() { std::mem::take(&mut m[var]) } else { 0 };
            out.add_term(m, c * &value.pow(k));
        }
        out
    }

    /// Replaces `var` by a polynomial.
    pub fn compose(&self, var: usize, value: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut m = m.clone();
            let k = if var < m.len() { std::mem::take(&mut m[var]) } else { 0 };
            let rest = MPoly::constant(c.clone()).times_monomial(&m);
            out = &out + &(&rest * &value.pow(k));
        }
        out
    }

    /// Cancels common powers of `a` and `b`, treating `b` as the inverse of `a`.
    pub fn cancel_inverse(&self, a: usize, b: usize) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut m = m.clone();
            let ea = *m.get(a).unwrap_or(&0);
            let eb = *m.get(b).unwrap_or(&0);
            let k = ea.min(eb);
            if k > 0 {
                m[a] -= k;
                m[b] -= k;
            }
            out.add_term(m, c.clone());
        }
        out
    }

    pub fn partial(&self, var: usize) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let k = *m.get(var).unwrap_or(&0);
            if k == 0 {
                continue;
            }
            let mut m = m.clone();
            m[var] -= 1;
            out.add_term(m, c * &GaussRat::from_int(k as i64));
        }
        out
    }

    pub fn eval(&self, point: &[GaussRat]) -> GaussRat {
        let mut acc = GaussRat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, e) in m.iter().enumerate() {
                t = &t * &point[i].pow(*e);
            }
            acc = &acc + &t;
        }
        acc
    }

    /// Largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.keys();
        let Some(first) = it.next() else { return vec![] };
        let mut g = first.clone();
        for m in it {
            g.truncate(m.len());
            for (i, e) in g.iter_mut().enumerate() {
                *e = (*e).min(m[i]);
            }
        }
        trim(g)
    }

    /// Exact division by a monomial that divides every term.
    pub fn div_monomial(&self, d: &[u32]) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &self.terms {
            let mut m = m.clone();
            for (i, e) in d.iter().enumerate() {
                m[i] -= e;
            }
            out.add_term(m, c.clone());
        }
        out
    }

    pub fn display_with<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { p: self, names }
    }
}

pub struct Display<'a> {
    p: &'a MPoly,
    names: &'a [&'a str],
}

fn real_sign(g: &GaussRat) -> Option<(bool, BigRational)> {
    g.is_real().then(|| (g.re.is_negative(), g.re.abs()))
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_zero() {
            return f.write_str("0");
        }
        // highest degree first
        let mut terms: Vec<(&Monomial, &GaussRat)> = self.p.terms.iter().collect();
        terms.sort_by(|a, b| {
            let da: u32 = a.0.iter().sum();
            let db: u32 = b.0.iter().sum();
            db.cmp(&da).then_with(|| b.0.cmp(a.0))
        });
        for (idx, (m, c)) in terms.into_iter().enumerate() {
            let (neg, body) = match real_sign(c) {
                Some((neg, abs)) => (neg, (!abs.is_one() || m.is_empty()).then(|| format_rational(&abs))),
                None => (false, Some(format!("({})", Scalar::Exact(c.clone())))),
            };
            match (idx, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut parts: Vec<String> = body.into_iter().collect();
            for (i, e) in m.iter().enumerate() {
                match e {
                    0 => {}
                    1 => parts.push(self.names[i].to_string()),
                    _ => parts.push(format!("{}^{e}", self.names[i])),
                }
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

impl Add<&MPoly> for &MPoly {
    type Output = MPoly;
    fn add(self, rhs: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub<&MPoly> for &MPoly {
    type Output = MPoly;
    fn sub(self, rhs: &MPoly) -> MPoly {
        self + &(-rhs)
    }
}

impl Neg for &MPoly {
    type Output = MPoly;
    fn neg(self) -> MPoly {
        self.scale(&GaussRat::from_int(-1))
    }
}

impl Mul<&MPoly> for &MPoly {
    type Output = MPoly;
    fn mul(self, rhs: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (m, c) in &rhs.terms {
            for (k, v) in self.times_monomial(m).terms {
                out.add_term(k, &v * c);
            }
        }
        out
    }
}

/// Dense univariate polynomial over the Gaussian rationals, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly(Vec<GaussRat>);

impl UPoly {
    pub fn new(mut coeffs: Vec<GaussRat>) -> Self {
        while coeffs.last().is_some_and(GaussRat::is_zero) {
            coeffs.pop();
        }
        UPoly(coeffs)
    }

    pub fn from_mpoly(p: &MPoly, var: usize) -> Option<UPoly> {
        let cs = p.coefficients_in(var).iter().map(MPoly::as_constant).collect::<Option<Vec<_>>>()?;
        Some(UPoly::new(cs))
    }

    pub fn coeffs(&self) -> &[GaussRat] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, x: &GaussRat) -> GaussRat {
        self.0.iter().rev().fold(GaussRat::zero(), |acc, c| &(&acc * x) + c)
    }

    pub fn derivative(&self) -> UPoly {
        UPoly::new(self.0.iter().enumerate().skip(1).map(|(k, c)| c * &GaussRat::from_int(k as i64)).collect())
    }

    pub fn mul(&self, o: &UPoly) -> UPoly {
        if self.is_zero() || o.is_zero() {
            return UPoly(vec![]);
        }
        let mut out = vec![GaussRat::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        UPoly::new(out)
    }

    /// Quotient and remainder.
    pub fn div_rem(&self, d: &UPoly) -> (UPoly, UPoly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.0[dd].inv().expect("nonzero leading coefficient");
        let mut r = self.0.clone();
        let mut q = vec![GaussRat::zero(); self.0.len().saturating_sub(dd)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let c = &r[k] * &lead;
            if !c.is_zero() {
                for (j, dc) in d.0.iter().enumerate() {
                    r[k - dd + j] = &r[k - dd + j] - &(&c * dc);
                }
                q[k - dd] = c;
            }
            r.pop();
        }
        (UPoly::new(q), UPoly::new(r))
    }

    pub fn monic(&self) -> UPoly {
        match self.0.last() {
            Some(l) => {
                let inv = l.inv().expect("nonzero leading coefficient");
                UPoly(self.0.iter().map(|c| c * &inv).collect())
            }
            None => self.clone(),
        }
    }

    pub fn gcd(&self, o: &UPoly) -> UPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Rational roots with multiplicities. Non-real coefficients are only
    /// solved when linear after removing the root at zero.
    pub fn rational_roots(&self) -> Vec<(GaussRat, u32)> {
        let mut p = self.clone();
        let mut out = Vec::new();
        let Some(d) = p.degree() else { return out };
        if d == 0 {
            return out;
        }
        let mut zero_mult = 0;
        while p.0.first().is_some_and(GaussRat::is_zero) {
            p.0.remove(0);
            zero_mult += 1;
        }
        if zero_mult > 0 {
            out.push((GaussRat::zero(), zero_mult));
        }
        for cand in p.candidates() {
            let mut m = 0;
            let lin = UPoly::new(vec![-&cand, GaussRat::one()]);
            loop {
                let (q, r) = p.div_rem(&lin);
                if !r.is_zero() {
                    break;
                }
                p = q;
                m += 1;
            }
            if m > 0 {
                out.push((cand, m));
            }
            if p.degree().unwrap_or(0) == 0 {
                break;
            }
        }
        out.sort_by(|a, b| a.0.lex_cmp(&b.0));
        out
    }

    /// Candidate roots by the rational root theorem after clearing
    /// denominators; only real candidates unless the coefficients are complex.
    fn candidates(&self) -> Vec<GaussRat> {
        use num_bigint::BigInt;
        use num_integer::Integer;
        if !self.0.iter().all(GaussRat::is_real) {
            return self.complex_candidates();
        }
        let lcm = self.0.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.re.denom()));
        let ints: Vec<BigInt> =
            self.0.iter().map(|c| (&c.re * BigRational::from_integer(lcm.clone())).to_integer()).collect();
        let a0 = ints.first().cloned().unwrap_or_default().abs();
        let an = ints.last().cloned().unwrap_or_default().abs();
        let (ps, qs) = (divisors(&a0), divisors(&an));
        let mut out = Vec::new();
        for p in &ps {
            for q in &qs {
                let r = BigRational::new(p.clone(), q.clone());
                for s in [r.clone(), -r] {
                    let g = GaussRat::real(s);
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
            }
        }
        out
    }

    fn complex_candidates(&self) -> Vec<GaussRat> {
        // only the linear case is solved directly
        let mut out = Vec::new();
        if self.degree() == Some(1) {
            out.push(&-&self.0[0] / &self.0[1]);
        }
        out
    }
}

fn divisors(n: &num_bigint::BigInt) -> Vec<num_bigint::BigInt> {
    use num_bigint::BigInt;
    if n.is_zero() {
        return vec![BigInt::one()];
    }
    let mut out = Vec::new();
    let mut k = BigInt::one();
    while &k * &k <= *n {
        if (n % &k).is_zero() {
            out.push(k.clone());
            let other = n / &k;
            if other != k {
                out.push(other);
            }
        }
        k += 1;
    }
    out
}

/// All complex roots of a low-degree polynomial (lowest coefficient first)
/// by Durand–Kerner iteration.
pub fn complex_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let eval = |z: Complex64| monic.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, k| acc * z + k);
    let radius = 1.0 + monic[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..500 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            if den.norm() == 0.0 {
                z[i] += Complex64::new(1e-12, 1e-12);
                continue;
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= 1e-16 * radius {
            break;
        }
    }
    z
}

/// Sylvester resultant of two polynomials in `var`, as a polynomial in the
/// remaining variables.
pub fn resultant(p: &MPoly, q: &MPoly, var: usize) -> MPoly {
    let a = p.coefficients_in(var);
    let b = q.coefficients_in(var);
    let (m, n) = (a.len() - 1, b.len() - 1);
    if m == 0 && n == 0 {
        return MPoly::int(1);
    }
    let size = m + n;
    let mut rows: Vec<Vec<MPoly>> = Vec::with_capacity(size);
    for i in 0..n {
        let mut row = vec![MPoly::zero(); size];
        for (j, c) in a.iter().rev().enumerate() {
            row[i + j] = c.clone();
        }
        rows.push(row);
    }
    for i in 0..m {
        let mut row = vec![MPoly::zero(); size];
        for (j, c) in b.iter().rev().enumerate() {
            row[i + j] = c.clone();
        }
        rows.push(row);
    }
    determinant(&rows)
}

/// Determinant by cofactor expansion along the first row (small matrices).
fn determinant(m: &[Vec<MPoly>]) -> MPoly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = MPoly::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = &m[0][j] * &determinant(&minor);
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}
