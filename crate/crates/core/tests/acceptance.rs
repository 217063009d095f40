//! Acceptance suite: one PASS/FAIL line per criterion, then a cross-check
//! against the reproduction battery. Exits nonzero if anything fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use valshare_core::battery::{run_battery, BatteryOptions};
use valshare_core::expr::{check_identity, parse, Env, IdentityMode, IdentityOptions, Verdict};
use valshare_core::families::{
    classify_cubic, derive_family_constants, example2, example3, infinity_slice, thm2prime_family, thmc_family,
    CubicCurve, CurveClass,
};
use valshare_core::nevanlinna::{defect_estimate, jensen_check, log_derivative_proximity, order_estimate, proximity};
use valshare_core::roots::{locate, winding_count, LocateOptions, Region};
use valshare_core::sharing::{check_condition, ConditionVerdict, SharingCondition, SharingOptions};
use valshare_core::{ExpSum, Scalar};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn family() -> ExpSum {
    thm2prime_family(&Scalar::one(), &Scalar::one()).unwrap()
}

fn sin2z() -> ExpSum {
    let k = Scalar::one() / (Scalar::int(2) * Scalar::i());
    ExpSum::monomial(k.clone(), Scalar::i() * Scalar::int(2)) - ExpSum::monomial(k, Scalar::i() * Scalar::int(-2))
}

fn exact(src: &str, f: &ExpSum) -> (Verdict, bool) {
    let env = Env::from([("f".to_string(), f.clone())]);
    let opts = IdentityOptions { mode: IdentityMode::Exact, ..IdentityOptions::default() };
    let r = check_identity(&parse(src).unwrap(), &env, &opts).unwrap();
    (r.verdict.clone(), r.is_exact())
}

fn c1() -> (bool, String) {
    let (v, ex) = exact("D(f)^3 - f*D(f)^2 + (4/27)*(f^3 - 1)", &family());
    (v == Verdict::IdenticallyZero && ex, format!("verdict {v}, exact={ex}"))
}

fn c2() -> (bool, String) {
    let (v, ex) = exact("D(f)^2*(f - D(f))/(f^3 - 1)", &family());
    (v == Verdict::Constant(Scalar::ratio(4, 27)) && ex, format!("verdict {v}, exact={ex}"))
}

fn c3() -> (bool, String) {
    let (v, ex) = exact("D(D(f)) - (1/3)*D(f) - (2/9)*f", &family());
    (v == Verdict::IdenticallyZero && ex, format!("verdict {v}, exact={ex}"))
}

fn c4() -> (bool, String) {
    let d = derive_family_constants(&Scalar::one()).unwrap();
    let zero = Scalar::zero();
    let ok = d.alpha == Scalar::ratio(1, 3)
        && d.gamma == Scalar::ratio(4, 27)
        && d.b2 == Scalar::ratio(4, 27)
        && d.b1 == zero
        && d.b0 == zero
        && d.c2 == zero
        && d.c1 == zero
        && d.residuals.is_empty();
    (
        ok,
        format!(
            "alpha={} gamma={} b2={} b1={} b0={} c2={} c1={} residuals={}",
            d.alpha,
            d.gamma,
            d.b2,
            d.b1,
            d.b0,
            d.c2,
            d.c1,
            d.residuals.len()
        ),
    )
}

fn c5() -> (bool, String) {
    let f = family();
    let fp = f.differentiate();
    let z0 = 3.0 * (3.0 * (2.0 + 6f64.sqrt()) / 4.0).ln();
    let pts = locate(&fp, c(1.0, 0.0), &Region::new(-5.0, 25.0, -15.0, 15.0).unwrap(), &LocateOptions::default())
        .unwrap()
        .points;
    let Some(p) = pts.iter().find(|p| (p.location - z0).norm() < 1e-6) else {
        return (false, format!("no 1-point of f' near {z0}"));
    };
    let z = p.location;
    let e1 = (fp.compile().eval(z) - 1.0).norm();
    let e2 = fp.differentiate().compile().eval(z).norm();
    let e3 = (f.compile().eval(z) - (6f64.sqrt() - 0.5)).norm();
    (
        e1 <= 1e-9 && e2 > 1e-3 && e3 <= 1e-9,
        format!("z0={:.12}, |f'(z0)-1|={e1:.1e}, |f''(z0)|={e2:.3}, |f(z0)-(sqrt6-1/2)|={e3:.1e}", z.re),
    )
}

fn c6() -> (bool, String) {
    let (f, fp) = example2(&Scalar::one()).unwrap();
    let region = Region::square(6.0);
    let mut points = 0;
    for (g, a) in [(&f, 1.0), (&fp, 1.0), (&f, 0.0)] {
        let a = c(a, 0.0);
        let l = locate(g, a, &region, &LocateOptions::default()).unwrap();
        if l.points.iter().any(|p| p.multiplicity != 2) {
            return (false, format!("a non-double point for value {a}"));
        }
        for (x0, x1, y0, y1) in [(-6.0, -0.5, -6.0, 0.2), (-0.5, 6.0, -6.0, 0.2), (-6.0, 6.0, 0.2, 6.0)] {
            let sub = Region::new(x0, x1, y0, y1).unwrap();
            let wind = winding_count(g, a, &sub).unwrap();
            let sum: i64 = l.points.iter().filter(|p| sub.contains(p.location)).map(|p| p.multiplicity as i64).sum();
            if wind != sum {
                return (false, format!("winding {wind} != located {sum} in {sub}"));
            }
        }
        points += l.points.len();
    }
    (points > 0, format!("{points} located points, all of multiplicity 2; sub-region winding counts match"))
}

fn c7() -> (bool, String) {
    let (f, _) = example3(&Scalar::one()).unwrap();
    let v: Vec<ConditionVerdict> = [1.0, -1.0]
        .iter()
        .map(|a| {
            check_condition(
                &f,
                c(*a, 0.0),
                &Region::square(7.0),
                SharingCondition::ShareSimple,
                &SharingOptions::default(),
            )
            .unwrap()
            .verdict
        })
        .collect();
    (v.iter().all(|x| *x == ConditionVerdict::HoldsVacuously), format!("verdicts {v:?}"))
}

fn c8() -> (bool, String) {
    let f = thmc_family(&Scalar::one(), &Scalar::int(2)).unwrap();
    let fp = f.differentiate().compile();
    let region = Region::new(-10.0, 10.0, -45.0, 45.0).unwrap();
    let zeros = locate(&f, c(0.0, 0.0), &region, &LocateOptions::default()).unwrap().points;
    let ones = locate(&f, c(1.0, 0.0), &region, &LocateOptions::default()).unwrap().points;
    let w0 = zeros.iter().map(|p| fp.eval(p.location).norm()).fold(0.0, f64::max);
    let w1 = ones.iter().map(|p| (fp.eval(p.location) - 1.0).norm()).fold(0.0, f64::max);
    let ok = zeros.len() >= 3 && ones.len() >= 3 && w0 <= 1e-8 && w1 <= 1e-8;
    (ok, format!("{} zeros, max |f'| {w0:.1e}; {} one-points, max |f'-1| {w1:.1e}", zeros.len(), ones.len()))
}

fn c9() -> (bool, String) {
    let e = ExpSum::exp(1);
    let m_err = [1.0, 5.0, 20.0]
        .iter()
        .map(|&r| (proximity(&e, r, None).unwrap() - r / PI).abs() / (r / PI))
        .fold(0.0, f64::max);
    let shifted = &e + &ExpSum::constant(2);
    let j = [2.0, 5.0].iter().map(|&r| jensen_check(&shifted, r).unwrap()).fold(0.0, f64::max);
    let radii = [25.0, 50.0, 100.0, 200.0, 400.0];
    let o1 = order_estimate(&e, &radii).unwrap();
    let o2 = order_estimate(&sin2z(), &radii).unwrap();
    let band = |x: f64| (0.95..=1.05).contains(&x);
    (
        m_err <= 1e-6 && j <= 1e-6 && band(o1) && band(o2),
        format!("m rel err {m_err:.1e}, Jensen {j:.1e}, orders {o1:.4}, {o2:.4}"),
    )
}

fn c10() -> (bool, String) {
    let (f, _) = example2(&Scalar::one()).unwrap();
    let t0 = defect_estimate(&f, c(0.0, 0.0), 200.0).unwrap().theta_hat;
    let t1 = defect_estimate(&f, c(1.0, 0.0), 200.0).unwrap().theta_hat;
    let band = |x: f64| (0.4..=0.6).contains(&x);
    (band(t0) && band(t1) && t0 + t1 <= 1.15, format!("theta(0)={t0:.4}, theta(1)={t1:.4}, sum={:.4}", t0 + t1))
}

fn c11() -> (bool, String) {
    let g = &sin2z() + &ExpSum::constant(2);
    let mut worst: f64 = 0.0;
    for f in [&family(), &g] {
        for r in [10.0, 100.0, 1000.0] {
            worst = worst.max(log_derivative_proximity(f, r).unwrap());
        }
    }
    (worst <= 5.0, format!("max m(r, f'/f) = {worst:.4}"))
}

fn c12() -> (bool, String) {
    let curve = CubicCurve::new(Scalar::ratio(4, 27), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
    let class = classify_cubic(&curve).unwrap();
    let want = CurveClass::SingularGenus0 { point: [Scalar::one(), Scalar::ratio(2, 3), Scalar::zero()] };
    let slice = infinity_slice(&curve).unwrap();
    let ok = class == want && slice == vec![(Scalar::ratio(-1, 3), 1), (Scalar::ratio(2, 3), 2)];
    (ok, format!("{class}; Z=0 slice (Y+X/3)(Y-2X/3)^2: {}", ok))
}

fn c13() -> (bool, String) {
    let f = family();
    let mut parts = Vec::new();
    let mut ok = true;
    for j in 0..3 {
        let a = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 3.0);
        let r =
            check_condition(&f, a, &Region::square(6.0), SharingCondition::SimpleToSimple, &SharingOptions::default())
                .unwrap();
        ok &= r.verdict.is_ok() && r.violations.is_empty();
        parts.push(format!("{:?}/{}", r.verdict, r.matches.len()));
    }
    (ok, format!("verdict/matched simple points: {}", parts.join(", ")))
}

type Criterion = (&'static str, fn() -> (bool, String));

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("exact cubic ODE", c1),
        ("exact constancy of h3 = 4/27", c2),
        ("exact linear ODE", c3),
        ("coefficient matching at delta = 1", c4),
        ("1-point of f' at 3 ln(3(2+sqrt6)/4)", c5),
        ("double points of (sin 2z + 1)/2", c6),
        ("vacuous sharing for sin z at +-1", c7),
        ("zeros and 1-points of the square family", c8),
        ("proximity, Jensen and order", c9),
        ("defect estimates at r = 200", c10),
        ("logarithmic derivative proximity", c11),
        ("cubic curve classification", c12),
        ("simple points at cube roots of unity", c13),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = run();
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {:>2} {} {name} ({secs:.2}s): {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    let battery = run_battery(&BatteryOptions::default());
    let agree = battery.checks.len() == 13 && battery.all_passed();
    println!(
        "battery cross-check {}: {} checks, failed {:?}",
        if agree { "PASS" } else { "FAIL" },
        battery.checks.len(),
        battery.failed_ids()
    );
    if failed.is_empty() && agree {
        println!("acceptance: all 13 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
