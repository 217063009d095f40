//! The reproduction battery: thirteen exact and numerical checks on the
//! bundled families, each with a stated tolerance.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{check_identity, parse, Env, IdentityMode, IdentityOptions, Verdict};
use crate::expsum::ExpSum;
use crate::families::{self, classify_cubic, derive_family_constants, infinity_slice, CubicCurve, CurveClass};
use crate::nevanlinna::{defect_estimate, jensen_check, log_derivative_proximity, order_estimate, proximity};
use crate::roots::{locate, winding_count, LocateOptions, Region};
use crate::scalar::Scalar;
use crate::sharing::{check_condition, ConditionVerdict, SharingCondition, SharingOptions};

/// Functions the battery runs on; each can be replaced, e.g. by a fixture
/// read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct BatteryFixtures {
    pub thm2prime: ExpSum,
    pub exp: ExpSum,
    pub example1: ExpSum,
    pub example2: ExpSum,
    pub example3: ExpSum,
    pub thmc: ExpSum,
}

impl Default for BatteryFixtures {
    fn default() -> Self {
        let mut all = families::fixtures().into_iter().map(|(_, f)| f);
        let mut next = || all.next().expect("six fixtures");
        BatteryFixtures {
            thm2prime: next(),
            exp: next(),
            example1: next(),
            example2: next(),
            example3: next(),
            thmc: next(),
        }
    }
}

impl BatteryFixtures {
    /// Replaces the fixture with the given file stem; false if the stem is unknown.
    pub fn set(&mut self, stem: &str, f: ExpSum) -> bool {
        let slot = match stem {
            "thm2prime_d1_b1" => &mut self.thm2prime,
            "exp" => &mut self.exp,
            "example1_C1_a1_b2" => &mut self.example1,
            "example2_a1" => &mut self.example2,
            "example3_a1" => &mut self.example3,
            "thmC_b1_A2" => &mut self.thmc,
            _ => return false,
        };
        *slot = f;
        true
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatteryOptions {
    /// Loosens every numeric tolerance to at least this value and widens
    /// interval checks by it.
    pub tol: Option<f64>,
    pub fixtures: BatteryFixtures,
}

impl BatteryOptions {
    fn tol(&self, default: f64) -> f64 {
        self.tol.map_or(default, |t| t.max(default))
    }

    fn widen(&self) -> f64 {
        self.tol.unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub citation: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryReport {
    pub checks: Vec<CheckResult>,
}

impl BatteryReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<u32> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

type Outcome = Result<(bool, String), String>;

struct Check {
    id: u32,
    name: &'static str,
    citation: &'static str,
    run: fn(&BatteryOptions) -> Outcome,
}

const CHECKS: [Check; 13] = [
    Check {
        id: 1,
        name: "exact cubic ODE",
        citation: "do indeed satisfy the differential equation",
        run: exact_cubic_ode,
    },
    Check { id: 2, name: "exact constancy of h3", citation: "γ=4/27", run: exact_quotient },
    Check { id: 3, name: "exact linear ODE", citation: "f''≡(1/3)f'+(2/9)f", run: exact_linear_ode },
    Check {
        id: 4,
        name: "coefficient matching",
        citation: "α=1/3 and γ=4/27; b₂ = −4/27 c₀",
        run: coefficient_matching,
    },
    Check { id: 5, name: "derivative 1-point", citation: "f=(√6−1/2)c ≠ c", run: derivative_one_point },
    Check {
        id: 6,
        name: "double points of (sin 2z + 1)/2",
        citation: "All a-points … have multiplicity 2",
        run: double_points,
    },
    Check { id: 7, name: "vacuous sharing for sin z", citation: "for the trivial reason", run: vacuous_sine },
    Check {
        id: 8,
        name: "zeros and 1-points of the square family",
        citation: "f(z)=0⇒f'(z)=0 and f(z)=b⇒f'(z)=b",
        run: square_family,
    },
    Check { id: 9, name: "proximity, Jensen and order", citation: "has order at most 1", run: nevanlinna_numerics },
    Check { id: 10, name: "defect estimates", citation: "Θ(b,g) ≤ 1", run: defects },
    Check { id: 11, name: "logarithmic derivative", citation: "m(r, f'/f) = o(log r)", run: log_derivative },
    Check {
        id: 12,
        name: "curve classification",
        citation: "exactly one singular point and genus 0",
        run: curve_class,
    },
    Check {
        id: 13,
        name: "simple points at cube roots of unity",
        citation: "every simple a_j-point of f is a simple a_j-point of f'",
        run: cube_roots_sharing,
    },
];

pub fn check_count() -> usize {
    CHECKS.len()
}

/// Runs every check, concurrently, reporting in id order.
pub fn run_battery(opts: &BatteryOptions) -> BatteryReport {
    let checks = CHECKS
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let (passed, detail) = match (c.run)(opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                id: c.id,
                name: c.name,
                citation: c.citation,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    BatteryReport { checks }
}

/// Runs a single check by id.
pub fn run_check(id: u32, opts: &BatteryOptions) -> Option<CheckResult> {
    let c = CHECKS.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let (passed, detail) = (c.run)(opts).unwrap_or_else(|e| (false, format!("error: {e}")));
    Some(CheckResult {
        id: c.id,
        name: c.name,
        citation: c.citation,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn exact_verdict(src: &str, f: &ExpSum) -> Result<Verdict, String> {
    let e = parse(src).map_err(|e| e.to_string())?;
    let env = Env::from([("f".to_string(), f.clone())]);
    let opts = IdentityOptions { mode: IdentityMode::Exact, ..IdentityOptions::default() };
    let r = check_identity(&e, &env, &opts).map_err(|e| e.to_string())?;
    if !r.is_exact() {
        return Err("verdict is not exact".into());
    }
    Ok(r.verdict)
}

fn exact_cubic_ode(o: &BatteryOptions) -> Outcome {
    let v = exact_verdict("D(f)^3 - f*D(f)^2 + (4/27)*(f^3 - 1)", &o.fixtures.thm2prime)?;
    Ok((v == Verdict::IdenticallyZero, format!("verdict {v}")))
}

fn exact_quotient(o: &BatteryOptions) -> Outcome {
    let v = exact_verdict("D(f)^2*(f - D(f))/(f^3 - 1)", &o.fixtures.thm2prime)?;
    Ok((v == Verdict::Constant(Scalar::ratio(4, 27)), format!("verdict {v}")))
}

fn exact_linear_ode(o: &BatteryOptions) -> Outcome {
    let v = exact_verdict("D(D(f)) - (1/3)*D(f) - (2/9)*f", &o.fixtures.thm2prime)?;
    Ok((v == Verdict::IdenticallyZero, format!("verdict {v}")))
}

fn coefficient_matching(_: &BatteryOptions) -> Outcome {
    let d = derive_family_constants(&Scalar::one()).map_err(|e| e.to_string())?;
    let zero = Scalar::zero();
    let ok = d.alpha == Scalar::ratio(1, 3)
        && d.gamma == Scalar::ratio(4, 27)
        && d.b2 == Scalar::ratio(4, 27)
        && [&d.b1, &d.b0, &d.c2, &d.c1].iter().all(|v| **v == zero)
        && d.residuals.is_empty();
    Ok((ok, format!("alpha={} gamma={} b2={} b1={} b0={} c2={} c1={}", d.alpha, d.gamma, d.b2, d.b1, d.b0, d.c2, d.c1)))
}

fn derivative_one_point(o: &BatteryOptions) -> Outcome {
    let f = &o.fixtures.thm2prime;
    let fp = f.differentiate();
    let z0 = 3.0 * (3.0 * (2.0 + 6f64.sqrt()) / 4.0).ln();
    let region = Region::new(-5.0, 25.0, -15.0, 15.0).map_err(|e| e.to_string())?;
    let located = locate(&fp, c(1.0, 0.0), &region, &LocateOptions::default()).map_err(|e| e.to_string())?;
    let p = located
        .points
        .iter()
        .min_by(|a, b| (a.location - z0).norm().total_cmp(&(b.location - z0).norm()))
        .ok_or("no 1-point of f' located")?;
    let z = p.location;
    let tol = o.tol(1e-9);
    let d1 = (fp.compile().eval(z) - 1.0).norm();
    let d2 = fp.differentiate().compile().eval(z).norm();
    let dv = (f.compile().eval(z) - (6f64.sqrt() - 0.5)).norm();
    let ok = (z - z0).norm() < 1e-6 && p.multiplicity == 1 && d1 <= tol && d2 > 1e-3 && dv <= tol;
    Ok((ok, format!("z={z:.12} |f'-1|={d1:.2e} |f''|={d2:.4} |f-(√6-1/2)|={dv:.2e}")))
}

fn double_points(o: &BatteryOptions) -> Outcome {
    let f = &o.fixtures.example2;
    let fp = f.differentiate();
    let region = Region::square(6.0);
    let quarters = [
        Region::new(-6.0, 0.37, -6.0, 0.37),
        Region::new(0.37, 6.0, -6.0, 0.37),
        Region::new(-6.0, 0.37, 0.37, 6.0),
        Region::new(0.37, 6.0, 0.37, 6.0),
    ];
    let mut total = 0;
    for (g, a, label) in [(f, 1.0, "f=1"), (&fp, 1.0, "f'=1"), (f, 0.0, "f=0")] {
        let a = c(a, 0.0);
        let located = locate(g, a, &region, &LocateOptions::default()).map_err(|e| e.to_string())?;
        if let Some(p) = located.points.iter().find(|p| p.multiplicity != 2) {
            return Ok((false, format!("{label}: multiplicity {} at {}", p.multiplicity, p.location)));
        }
        for q in &quarters {
            let q = q.as_ref().map_err(|e| e.to_string())?;
            let wind = winding_count(g, a, q).map_err(|e| e.to_string())?;
            let inside: i64 =
                located.points.iter().filter(|p| q.contains(p.location)).map(|p| p.multiplicity as i64).sum();
            if wind != inside {
                return Ok((false, format!("{label}: winding {wind} vs located {inside} in {q}")));
            }
        }
        total += located.points.len();
    }
    Ok((total > 0, format!("{total} points, all double; quadrant winding counts agree")))
}

fn vacuous_sine(o: &BatteryOptions) -> Outcome {
    let mut verdicts = Vec::new();
    for a in [1.0, -1.0] {
        let r = check_condition(
            &o.fixtures.example3,
            c(a, 0.0),
            &Region::square(7.0),
            SharingCondition::ShareSimple,
            &SharingOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        verdicts.push(r.verdict);
    }
    Ok((verdicts.iter().all(|v| *v == ConditionVerdict::HoldsVacuously), format!("verdicts {verdicts:?}")))
}

fn square_family(o: &BatteryOptions) -> Outcome {
    let f = &o.fixtures.thmc;
    let fp = f.differentiate().compile();
    let region = Region::new(-10.0, 10.0, -45.0, 45.0).map_err(|e| e.to_string())?;
    let tol = o.tol(1e-8);
    let zeros = locate(f, c(0.0, 0.0), &region, &LocateOptions::default()).map_err(|e| e.to_string())?.points;
    let ones = locate(f, c(1.0, 0.0), &region, &LocateOptions::default()).map_err(|e| e.to_string())?.points;
    let worst0 = zeros.iter().map(|p| fp.eval(p.location).norm()).fold(0.0, f64::max);
    let worst1 = ones.iter().map(|p| (fp.eval(p.location) - 1.0).norm()).fold(0.0, f64::max);
    let ok = zeros.len() >= 3 && ones.len() >= 3 && worst0 <= tol && worst1 <= tol;
    Ok((
        ok,
        format!("{} zeros (max |f'| {worst0:.1e}), {} one-points (max |f'-1| {worst1:.1e})", zeros.len(), ones.len()),
    ))
}

fn nevanlinna_numerics(o: &BatteryOptions) -> Outcome {
    let rel_tol = o.tol(1e-6);
    let mut worst_m: f64 = 0.0;
    for r in [1.0, 5.0, 20.0] {
        let m = proximity(&o.fixtures.exp, r, None).map_err(|x| x.to_string())?;
        worst_m = worst_m.max((m - r / std::f64::consts::PI).abs() / (r / std::f64::consts::PI));
    }
    let shifted = &o.fixtures.exp + &ExpSum::constant(2);
    let mut worst_j: f64 = 0.0;
    for r in [2.0, 5.0] {
        worst_j = worst_j.max(jensen_check(&shifted, r).map_err(|x| x.to_string())?);
    }
    let radii = [25.0, 50.0, 100.0, 200.0, 400.0];
    let sine2 = sine_2z();
    let rho_exp = order_estimate(&o.fixtures.exp, &radii).map_err(|x| x.to_string())?;
    let rho_sin = order_estimate(&sine2, &radii).map_err(|x| x.to_string())?;
    let w = o.widen();
    let in_band = |x: f64| (0.95 - w..=1.05 + w).contains(&x);
    let ok = worst_m <= rel_tol && worst_j <= rel_tol && in_band(rho_exp) && in_band(rho_sin);
    Ok((ok, format!("m rel err {worst_m:.1e}, Jensen residual {worst_j:.1e}, orders {rho_exp:.4} and {rho_sin:.4}")))
}

fn sine_2z() -> ExpSum {
    let k = Scalar::one() / (Scalar::int(2) * Scalar::i());
    ExpSum::monomial(k.clone(), Scalar::i() * Scalar::int(2)) - ExpSum::monomial(k, Scalar::i() * Scalar::int(-2))
}

fn defects(o: &BatteryOptions) -> Outcome {
    let f = &o.fixtures.example2;
    let r = 200.0;
    let t0 = defect_estimate(f, c(0.0, 0.0), r).map_err(|e| e.to_string())?.theta_hat;
    let t1 = defect_estimate(f, c(1.0, 0.0), r).map_err(|e| e.to_string())?.theta_hat;
    let w = o.widen();
    let band = |x: f64| (0.4 - w..=0.6 + w).contains(&x);
    Ok((band(t0) && band(t1) && t0 + t1 <= 1.15 + w, format!("theta(0)={t0:.4} theta(1)={t1:.4} sum={:.4}", t0 + t1)))
}

fn log_derivative(o: &BatteryOptions) -> Outcome {
    let bound = 5.0 + o.widen();
    let other = &sine_2z() + &ExpSum::constant(2);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, f) in [("thm2prime", &o.fixtures.thm2prime), ("sin2z+2", &other)] {
        for r in [10.0, 100.0, 1000.0] {
            let m = log_derivative_proximity(f, r).map_err(|e| e.to_string())?;
            worst = worst.max(m);
            parts.push(format!("{name}@{r}={m:.3}"));
        }
    }
    Ok((worst <= bound, parts.join(" ")))
}

fn curve_class(_: &BatteryOptions) -> Outcome {
    let curve = CubicCurve::new(Scalar::ratio(4, 27), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
    let class = classify_cubic(&curve).map_err(|e| e.to_string())?;
    let want = CurveClass::SingularGenus0 { point: [Scalar::one(), Scalar::ratio(2, 3), Scalar::zero()] };
    let slice = infinity_slice(&curve).map_err(|e| e.to_string())?;
    let slice_ok = slice == vec![(Scalar::ratio(-1, 3), 1), (Scalar::ratio(2, 3), 2)];
    let roots: Vec<String> = slice.iter().map(|(y, m)| format!("{y} (x{m})")).collect();
    Ok((class == want && slice_ok, format!("{class}; Z=0 slice roots Y/X = {}", roots.join(", "))))
}

fn cube_roots_sharing(o: &BatteryOptions) -> Outcome {
    let region = Region::square(6.0);
    let mut parts = Vec::new();
    let mut ok = true;
    for j in 0..3 {
        let a = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / 3.0);
        let r = check_condition(
            &o.fixtures.thm2prime,
            a,
            &region,
            SharingCondition::SimpleToSimple,
            &SharingOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        ok &= r.verdict.is_ok();
        parts.push(format!("{:?} ({} simple points)", r.verdict, r.simple_points_f.len()));
    }
    Ok((ok, parts.join(", ")))
}
