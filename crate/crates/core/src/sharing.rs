//! Region-relative audits of value sharing between `f` and `f'`.
//!
//! Every verdict is evidence about the searched rectangle only.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expsum::ExpSum;
use crate::roots::{locate, APoint, LocateOptions, Region, RootError};

/// Conditions in decreasing strength.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingCondition {
    /// The simple a-points of `f` and `f'` coincide.
    ShareSimple,
    /// Every simple a-point of `f` is a simple a-point of `f'`.
    SimpleToSimple,
    /// At every simple a-point of `f`, `f' ∈ {a, 0}`.
    SimpleToAny,
}

impl SharingCondition {
    pub const ALL: [SharingCondition; 3] =
        [SharingCondition::ShareSimple, SharingCondition::SimpleToSimple, SharingCondition::SimpleToAny];

    pub fn label(self) -> &'static str {
        match self {
            SharingCondition::ShareSimple => "share_simple",
            SharingCondition::SimpleToSimple => "simple_to_simple",
            SharingCondition::SimpleToAny => "simple_to_any",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionVerdict {
    Holds,
    HoldsVacuously,
    Fails,
}

impl ConditionVerdict {
    pub fn is_ok(self) -> bool {
        self != ConditionVerdict::Fails
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharingOptions {
    pub match_tol: f64,
    pub value_tol: f64,
    pub margin: f64,
    pub locate: LocateOptions,
}

impl Default for SharingOptions {
    fn default() -> Self {
        SharingOptions { match_tol: 1e-8, value_tol: 1e-8, margin: 0.05, locate: LocateOptions::default() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SharingError {
    #[error(transparent)]
    Roots(#[from] RootError),
    #[error("the sharing hypothesis fails at {}: {reason}", .witness.location)]
    HypothesisFails { witness: APoint, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    F,
    FPrime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointMatch {
    pub point: APoint,
    /// The partner a-point of `f'` (absent for value-only conditions).
    pub partner: Option<APoint>,
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub side: Side,
    pub point: APoint,
    pub f_value: Complex64,
    pub fprime_value: Complex64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharingReport {
    pub value: Complex64,
    pub region: Region,
    pub condition: SharingCondition,
    pub verdict: ConditionVerdict,
    pub simple_points_f: Vec<APoint>,
    pub simple_points_fprime: Vec<APoint>,
    pub matches: Vec<PointMatch>,
    pub violations: Vec<Violation>,
    /// Simple points irrelevant to the condition (e.g. extra points of `f'`).
    pub unmatched: Vec<APoint>,
    /// Points within the margin of the boundary, left out of the comparison.
    pub boundary_excluded: Vec<APoint>,
}

fn simple_points_or_empty(
    f: &ExpSum,
    a: Complex64,
    r: &Region,
    opts: &LocateOptions,
) -> Result<Vec<APoint>, RootError> {
    match locate(f, a, r, opts) {
        Ok(l) => Ok(l.points.into_iter().filter(|p| p.multiplicity == 1).collect()),
        // f − a ≡ 0 has no simple a-points
        Err(RootError::IdenticallyZero) => Ok(vec![]),
        Err(e) => Err(e),
    }
}

/// Simple a-points of `f` in `r`.
pub fn simple_points(f: &ExpSum, a: Complex64, r: &Region) -> Result<Vec<APoint>, RootError> {
    simple_points_or_empty(f, a, r, &LocateOptions::default())
}

/// Located simple a-points of `f` and `f'` for one value, reusable across
/// conditions.
#[derive(Clone, Debug)]
pub struct SharingAudit {
    f: ExpSum,
    fp: ExpSum,
    value: Complex64,
    region: Region,
    opts: SharingOptions,
    simple_f: Vec<APoint>,
    simple_fp: Vec<APoint>,
}

impl SharingAudit {
    pub fn new(f: &ExpSum, a: Complex64, r: &Region, opts: &SharingOptions) -> Result<Self, RootError> {
        r.validate()?;
        let fp = f.differentiate();
        let (sf, sfp) = rayon::join(
            || simple_points_or_empty(f, a, r, &opts.locate),
            || simple_points_or_empty(&fp, a, r, &opts.locate),
        );
        Ok(SharingAudit { f: f.clone(), fp, value: a, region: *r, opts: opts.clone(), simple_f: sf?, simple_fp: sfp? })
    }

    fn interior(&self, p: &APoint) -> bool {
        self.region.inner_distance(p.location) >= self.opts.margin
    }

    fn values_at(&self, z: Complex64) -> (Complex64, Complex64) {
        let f = self.f.compile().eval(z);
        let fp = self.fp.compile().eval(z);
        (f, fp)
    }

    fn violation(&self, side: Side, point: &APoint, reason: &str) -> Violation {
        let (f_value, fprime_value) = self.values_at(point.location);
        Violation { side, point: point.clone(), f_value, fprime_value, reason: reason.to_string() }
    }

    fn partner<'a>(&self, p: &APoint, pool: &'a [APoint]) -> Option<(&'a APoint, f64)> {
        pool.iter()
            .map(|q| (q, (q.location - p.location).norm()))
            .filter(|(_, d)| *d <= self.opts.match_tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn report(&self, cond: SharingCondition) -> SharingReport {
        let (f_in, f_out): (Vec<APoint>, Vec<APoint>) = self.simple_f.iter().cloned().partition(|p| self.interior(p));
        let (fp_in, fp_out): (Vec<APoint>, Vec<APoint>) =
            self.simple_fp.iter().cloned().partition(|p| self.interior(p));
        let mut matches = Vec::new();
        let mut violations = Vec::new();
        let mut unmatched = Vec::new();
        let mut used = vec![false; fp_in.len()];
        match cond {
            SharingCondition::ShareSimple | SharingCondition::SimpleToSimple => {
                for p in &f_in {
                    match self.partner(p, &fp_in) {
                        Some((q, d)) => {
                            let idx = fp_in.iter().position(|x| std::ptr::eq(x, q)).unwrap();
                            used[idx] = true;
                            matches.push(PointMatch { point: p.clone(), partner: Some(q.clone()), distance: Some(d) });
                        }
                        None => violations.push(self.violation(
                            Side::F,
                            p,
                            "simple a-point of f is not a simple a-point of f'",
                        )),
                    }
                }
                for (q, u) in fp_in.iter().zip(&used) {
                    if *u {
                        continue;
                    }
                    if cond == SharingCondition::ShareSimple {
                        violations.push(self.violation(
                            Side::FPrime,
                            q,
                            "simple a-point of f' is not a simple a-point of f",
                        ));
                    } else {
                        unmatched.push(q.clone());
                    }
                }
            }
            SharingCondition::SimpleToAny => {
                for p in &f_in {
                    let fp = p.derivative_value;
                    let gap = (fp - self.value).norm().min(fp.norm());
                    if gap <= self.opts.value_tol {
                        matches.push(PointMatch { point: p.clone(), partner: None, distance: None });
                    } else {
                        violations.push(self.violation(Side::F, p, "f' is neither a nor 0 at a simple a-point of f"));
                    }
                }
                unmatched.extend(fp_in.iter().cloned());
            }
        }
        let relevant_empty = match cond {
            SharingCondition::ShareSimple => f_in.is_empty() && fp_in.is_empty(),
            _ => f_in.is_empty(),
        };
        let verdict = if !violations.is_empty() {
            ConditionVerdict::Fails
        } else if relevant_empty {
            ConditionVerdict::HoldsVacuously
        } else {
            ConditionVerdict::Holds
        };
        let mut boundary_excluded: Vec<APoint> = f_out.into_iter().chain(fp_out).collect();
        boundary_excluded.sort_by(|p, q| crate::roots::cmp_location(&p.location, &q.location));
        SharingReport {
            value: self.value,
            region: self.region,
            condition: cond,
            verdict,
            simple_points_f: self.simple_f.clone(),
            simple_points_fprime: self.simple_fp.clone(),
            matches,
            violations,
            unmatched,
            boundary_excluded,
        }
    }
}

impl SharingAudit {
    /// The strongest condition whose whole weaker chain holds.
    pub fn classify(&self) -> PairClass {
        let verdicts: BTreeMap<SharingCondition, ConditionVerdict> =
            SharingCondition::ALL.iter().map(|&c| (c, self.report(c).verdict)).collect();
        let mut strongest = None;
        for c in SharingCondition::ALL.iter().rev() {
            if !verdicts[c].is_ok() {
                break;
            }
            strongest = Some(*c);
        }
        let vacuous = strongest.is_some_and(|c| verdicts[&c] == ConditionVerdict::HoldsVacuously);
        PairClass { value: self.value, strongest, vacuous, verdicts }
    }
}

pub fn check_condition(
    f: &ExpSum,
    a: Complex64,
    r: &Region,
    cond: SharingCondition,
    opts: &SharingOptions,
) -> Result<SharingReport, RootError> {
    Ok(SharingAudit::new(f, a, r, opts)?.report(cond))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairClass {
    pub value: Complex64,
    /// Strongest condition that holds together with every weaker one.
    pub strongest: Option<SharingCondition>,
    pub vacuous: bool,
    pub verdicts: BTreeMap<SharingCondition, ConditionVerdict>,
}

/// For each value, the strongest condition whose whole weaker chain holds.
pub fn classify_pair(
    f: &ExpSum,
    values: &[Complex64],
    r: &Region,
    opts: &SharingOptions,
) -> Result<Vec<PairClass>, RootError> {
    values.par_iter().map(|&a| Ok(SharingAudit::new(f, a, r, opts)?.classify())).collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lemma1Options {
    /// Fail with the witness instead of reporting when the hypothesis fails.
    pub require_hypothesis: bool,
    pub sharing: SharingOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Audit {
    pub region: Region,
    /// Whether `f` and `f'` share their simple zeros in the region.
    pub hypothesis: ConditionVerdict,
    pub hypothesis_witness: Option<Violation>,
    /// Conclusions are informational only when the hypothesis fails.
    pub informational: bool,
    /// (a) simple zeros of `f'`.
    pub simple_zeros_of_derivative: Vec<APoint>,
    pub no_simple_derivative_zeros: ConditionVerdict,
    /// (b) multiple points of `f` of multiplicity exactly 2, over the value grid.
    pub double_points: Vec<APoint>,
    pub multiple_points_at_least_triple: ConditionVerdict,
    /// (c) zeros of `f` of multiplicity below 3.
    pub low_multiplicity_zeros: Vec<APoint>,
    pub zeros_at_least_triple: ConditionVerdict,
}

fn verdict_from(witnesses: &[APoint], population: usize) -> ConditionVerdict {
    if !witnesses.is_empty() {
        ConditionVerdict::Fails
    } else if population == 0 {
        ConditionVerdict::HoldsVacuously
    } else {
        ConditionVerdict::Holds
    }
}

fn all_points(f: &ExpSum, a: Complex64, r: &Region, opts: &LocateOptions) -> Result<Vec<APoint>, RootError> {
    match locate(f, a, r, opts) {
        Ok(l) => Ok(l.points),
        Err(RootError::IdenticallyZero) => Ok(vec![]),
        Err(e) => Err(e),
    }
}

/// Checks the three consequences of `f` and `f'` sharing simple zeros.
pub fn lemma1_audit(
    f: &ExpSum,
    r: &Region,
    value_grid: &[Complex64],
    opts: &Lemma1Options,
) -> Result<Lemma1Audit, SharingError> {
    let zero = Complex64::new(0.0, 0.0);
    let share = check_condition(f, zero, r, SharingCondition::ShareSimple, &opts.sharing)?;
    let witness = share.violations.first().cloned();
    if opts.require_hypothesis {
        if let Some(w) = &witness {
            return Err(SharingError::HypothesisFails { witness: w.point.clone(), reason: w.reason.clone() });
        }
    }
    let lo = &opts.sharing.locate;
    let fp = f.differentiate();
    let fp_zeros = all_points(&fp, zero, r, lo)?;
    let simple_fp: Vec<APoint> = fp_zeros.iter().filter(|p| p.multiplicity == 1).cloned().collect();
    let per_value: Result<Vec<Vec<APoint>>, RootError> =
        value_grid.par_iter().map(|&a| all_points(f, a, r, lo)).collect();
    let per_value = per_value?;
    let multiple: Vec<&APoint> = per_value.iter().flatten().filter(|p| p.multiplicity >= 2).collect();
    let doubles: Vec<APoint> = multiple.iter().filter(|p| p.multiplicity == 2).map(|p| (*p).clone()).collect();
    let zeros = all_points(f, zero, r, lo)?;
    let low: Vec<APoint> = zeros.iter().filter(|p| p.multiplicity < 3).cloned().collect();
    Ok(Lemma1Audit {
        region: *r,
        hypothesis: share.verdict,
        informational: share.verdict == ConditionVerdict::Fails,
        hypothesis_witness: witness,
        no_simple_derivative_zeros: verdict_from(&simple_fp, fp_zeros.len()),
        simple_zeros_of_derivative: simple_fp,
        multiple_points_at_least_triple: verdict_from(&doubles, multiple.len()),
        double_points: doubles,
        zeros_at_least_triple: verdict_from(&low, zeros.len()),
        low_multiplicity_zeros: low,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sine(a: i64) -> ExpSum {
        let k = Scalar::int(a) / (Scalar::i() * Scalar::int(2));
        ExpSum::monomial(k.clone(), Scalar::i()) - ExpSum::monomial(k, -Scalar::i())
    }

    fn example2() -> ExpSum {
        let half = Scalar::ratio(1, 2);
        let k = &half / &(Scalar::i() * Scalar::int(2));
        ExpSum::constant(half)
            + ExpSum::monomial(k.clone(), Scalar::i() * Scalar::int(2))
            + ExpSum::monomial(-k, Scalar::i() * Scalar::int(-2))
    }

    #[test]
    fn simple_point_filters() {
        let pts = simple_points(&ExpSum::exp(1), c(1.0, 0.0), &Region::square(8.0)).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(simple_points(&example2(), c(1.0, 0.0), &Region::square(3.0)).unwrap().is_empty());
        assert!(simple_points(&sine(1), c(1.0, 0.0), &Region::square(4.0)).unwrap().is_empty());
        let half = simple_points(&sine(1), c(0.5, 0.0), &Region::new(-1.0, 4.0, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(half.len(), 2);
        assert!((half[0].location.re - std::f64::consts::PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn sine_shares_vacuously() {
        let opts = SharingOptions::default();
        for a in [1.0, -1.0] {
            let r = check_condition(&sine(1), c(a, 0.0), &Region::square(7.0), SharingCondition::ShareSimple, &opts)
                .unwrap();
            assert_eq!(r.verdict, ConditionVerdict::HoldsVacuously);
        }
    }

    #[test]
    fn exponential_multiples_satisfy_everything() {
        let f = ExpSum::monomial(Scalar::ratio(-3, 2), 1);
        let grid: Vec<Complex64> = (-1..=1).flat_map(|x| (-1..=1).map(move |y| c(x as f64, y as f64 * 0.5))).collect();
        let classes = classify_pair(&f, &grid, &Region::square(5.0), &SharingOptions::default()).unwrap();
        for k in classes {
            assert_eq!(k.strongest, Some(SharingCondition::ShareSimple), "{}", k.value);
        }
    }

    #[test]
    fn example1_classification() {
        let f = ExpSum::exp(2) + ExpSum::constant(1);
        let k =
            classify_pair(&f, &[c(1.0, 0.0), c(2.0, 0.0)], &Region::square(4.0), &SharingOptions::default()).unwrap();
        assert_eq!(k[0].strongest, Some(SharingCondition::SimpleToSimple));
        assert!(k[0].vacuous);
        assert_eq!(k[0].verdicts[&SharingCondition::ShareSimple], ConditionVerdict::Fails);
        assert_eq!(k[1].strongest, Some(SharingCondition::ShareSimple));
        assert!(!k[1].vacuous);
    }

    #[test]
    fn example2_classification_is_vacuous() {
        let k =
            classify_pair(&example2(), &[c(0.0, 0.0), c(1.0, 0.0)], &Region::square(4.0), &SharingOptions::default())
                .unwrap();
        assert!(k.iter().all(|x| x.vacuous));
        assert_eq!(k[1].strongest, Some(SharingCondition::ShareSimple));
    }

    #[test]
    fn monotone_verdicts_and_symmetry() {
        let f = ExpSum::exp(2) + ExpSum::constant(1);
        let audit = SharingAudit::new(&f, c(2.0, 0.0), &Region::square(4.0), &SharingOptions::default()).unwrap();
        let rs: Vec<SharingReport> = SharingCondition::ALL.iter().map(|&c| audit.report(c)).collect();
        assert_eq!(rs[0].verdict, ConditionVerdict::Holds);
        assert!(rs.iter().all(|r| r.verdict.is_ok()));
        let mut swapped = audit.clone();
        std::mem::swap(&mut swapped.simple_f, &mut swapped.simple_fp);
        assert_eq!(swapped.report(SharingCondition::ShareSimple).verdict, rs[0].verdict);
    }

    #[test]
    fn every_point_is_classified_once() {
        let f = ExpSum::exp(2) + ExpSum::constant(1);
        let r = check_condition(
            &f,
            c(1.0, 0.0),
            &Region::square(4.0),
            SharingCondition::ShareSimple,
            &SharingOptions::default(),
        )
        .unwrap();
        let total = r.simple_points_f.len() + r.simple_points_fprime.len();
        let matched = r.matches.len() * 2;
        assert_eq!(total, matched + r.violations.len() + r.unmatched.len() + r.boundary_excluded.len());
    }

    #[test]
    fn lemma1_on_exponential_is_vacuous() {
        let a = lemma1_audit(&ExpSum::exp(1), &Region::square(5.0), &[c(1.0, 0.0)], &Lemma1Options::default()).unwrap();
        assert_eq!(a.hypothesis, ConditionVerdict::HoldsVacuously);
        assert_eq!(a.no_simple_derivative_zeros, ConditionVerdict::HoldsVacuously);
        assert_eq!(a.zeros_at_least_triple, ConditionVerdict::HoldsVacuously);
    }

    #[test]
    fn lemma1_hypothesis_fails_for_example2() {
        let f = example2();
        let r = Region::square(3.0);
        let a = lemma1_audit(&f, &r, &[c(1.0, 0.0)], &Lemma1Options::default()).unwrap();
        assert_eq!(a.hypothesis, ConditionVerdict::Fails);
        assert!(a.informational);
        let w = a.hypothesis_witness.unwrap();
        assert_eq!(w.side, Side::FPrime);
        assert_eq!(a.zeros_at_least_triple, ConditionVerdict::Fails);
        assert!(a.low_multiplicity_zeros.iter().all(|p| p.multiplicity == 2));
        let strict = Lemma1Options { require_hypothesis: true, ..Default::default() };
        assert!(matches!(lemma1_audit(&f, &r, &[], &strict), Err(SharingError::HypothesisFails { .. })));
    }
}
