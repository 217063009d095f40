//! Invariants checked over every bundled fixture and across modules.

use num_complex::Complex64;
use valshare_core::expr::{check_identity, parse, Env, IdentityMode, IdentityOptions, Verdict};
use valshare_core::families::{
    classify_cubic, derive_family_constants, fixtures, question_probe, thm2prime_family, verify_family_identities,
    CubicCurve, CurveClass, ProbeGrid, ProbeOptions,
};
use valshare_core::nevanlinna::{characteristic, counting, jensen_check, proximity};
use valshare_core::roots::{locate, multiplicity_at, LocateOptions, Region};
use valshare_core::sharing::{check_condition, ConditionVerdict, SharingCondition, SharingOptions};
use valshare_core::{ExpSum, Scalar};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[test]
fn multiplicities_sum_to_the_winding_count() {
    let r = Region::new(-4.1, 3.9, -5.3, 4.7).unwrap();
    for (stem, f) in fixtures() {
        for a in [c(0.0), c(1.0), Complex64::new(0.5, 0.5)] {
            let found = locate(&f, a, &r, &LocateOptions::default()).unwrap();
            let total: i64 = found.points.iter().map(|p| p.multiplicity as i64).sum();
            assert_eq!(total, found.count, "{stem} a={a}");
            for p in &found.points {
                assert_eq!(multiplicity_at(&f, a, p.location).unwrap(), p.multiplicity, "{stem} at {}", p.location);
            }
        }
    }
}

#[test]
fn located_points_are_deterministic() {
    let r = Region::square(5.0);
    for (stem, f) in fixtures() {
        let a = locate(&f, c(1.0), &r, &LocateOptions::default()).unwrap();
        let b = locate(&f, c(1.0), &r, &LocateOptions::default()).unwrap();
        assert_eq!(a, b, "{stem}");
    }
}

#[test]
fn jensen_holds_on_every_fixture_nonzero_at_origin() {
    for (stem, f) in fixtures() {
        if f.compile().eval(c(0.0)).norm() < 1e-12 {
            continue;
        }
        for r in [2.0, 5.0, 10.0] {
            let res = jensen_check(&f, r).unwrap();
            assert!(res <= 1e-6, "{stem} r={r}: {res:e}");
        }
    }
}

#[test]
fn characteristic_is_nondecreasing() {
    let radii = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0];
    for (stem, f) in fixtures() {
        let t: Vec<f64> = radii.iter().map(|&r| characteristic(&f, r).unwrap()).collect();
        for w in t.windows(2) {
            assert!(w[1] >= w[0] - 1e-6, "{stem}: {t:?}");
        }
    }
}

#[test]
fn first_fundamental_theorem_stays_bounded() {
    for (stem, f) in fixtures() {
        let g = f.compile();
        for a in [c(0.0), c(2.0)] {
            let cf = g.eval(c(0.0)) - a;
            if cf.norm() < 1e-9 {
                continue;
            }
            let bound = a.norm().ln().max(0.0) + cf.norm().ln().abs() + 2.0;
            for r in [5.0, 10.0, 20.0, 40.0] {
                let t = characteristic(&f, r).unwrap();
                let m = proximity(&f, r, Some(a)).unwrap();
                let n = counting(&f, a, r).unwrap().big_n;
                assert!((t - m - n).abs() <= bound, "{stem} a={a} r={r}: T={t} m={m} N={n}");
            }
        }
    }
}

#[test]
fn exact_and_sampled_verdicts_agree_on_fixtures() {
    let exprs = ["D(f) - f", "D(D(f)) + 4*f", "D(f)^2 - f*D(D(f))", "(D(f) - 2*f)/(f - 1)"];
    for (stem, f) in fixtures() {
        let env = Env::from([("f".to_string(), f.clone())]);
        for src in exprs {
            let e = parse(src).unwrap();
            let run = |mode| check_identity(&e, &env, &IdentityOptions { mode, ..Default::default() });
            let (exact, sampled) = (run(IdentityMode::Exact), run(IdentityMode::Sampled));
            let (exact, sampled) = match (exact, sampled) {
                (Ok(x), Ok(s)) => (x.verdict, s.verdict),
                (Err(_), Err(_)) => continue,
                (x, s) => panic!("{stem} {src}: {x:?} vs {s:?}"),
            };
            match (&exact, &sampled) {
                (Verdict::Constant(x), Verdict::Constant(s)) => {
                    assert!((x.to_complex() - s.to_complex()).norm() < 1e-8, "{stem} {src}")
                }
                _ => assert_eq!(exact.label(), sampled.label(), "{stem} {src}"),
            }
        }
    }
}

#[test]
fn violations_persist_in_larger_regions() {
    // f = e^{2z} + 1 takes the value 3 where f' = 4
    let f = fixtures().into_iter().find(|(s, _)| *s == "example1_C1_a1_b2").unwrap().1;
    let opts = SharingOptions::default();
    let small = Region::square(1.0);
    let large = Region::new(-3.0, 3.1, -3.2, 3.0).unwrap();
    for cond in SharingCondition::ALL {
        let a = check_condition(&f, c(3.0), &small, cond, &opts).unwrap();
        let b = check_condition(&f, c(3.0), &large, cond, &opts).unwrap();
        assert_eq!(a.verdict, ConditionVerdict::Fails);
        assert_eq!(b.verdict, ConditionVerdict::Fails);
        for v in &a.violations {
            assert!(b.violations.iter().any(|w| (w.point.location - v.point.location).norm() < 1e-8), "{cond:?}");
        }
    }
}

#[test]
fn derived_constants_feed_the_family() {
    for delta in ["1", "-1", "2", "1/3"] {
        let delta: Scalar = delta.parse().unwrap();
        let d = derive_family_constants(&delta).unwrap();
        let b2 = &(&delta * &Scalar::ratio(4, 27));
        assert_eq!(&d.b2, b2);
        let f = thm2prime_family(&delta, &Scalar::one()).unwrap();
        let coeff_at = |freq: Scalar| f.terms().iter().find(|t| t.freq == freq).map(|t| t.coeff.clone());
        assert_eq!(coeff_at(Scalar::ratio(2, 3)).as_ref(), Some(b2));
        assert!(verify_family_identities(&delta, &Scalar::one()).unwrap().all_hold(), "delta={delta}");
        let curve = CubicCurve::new(d.gamma.clone(), d.c2.clone(), d.c1.clone(), d.c0.clone());
        if delta != Scalar::ratio(1, 3) {
            assert!(matches!(classify_cubic(&curve).unwrap(), CurveClass::SingularGenus0 { .. }), "delta={delta}");
        }
    }
}

#[test]
fn default_probe_grid_has_no_non_vacuous_candidates() {
    let r = question_probe(c(1.0), c(2.0), &ProbeGrid::default_grid(), &Region::square(4.0), &ProbeOptions::default())
        .unwrap();
    assert_eq!(r.grid_size, 90);
    assert_eq!(r.non_vacuous().count(), 0);
}

#[test]
fn exponential_multiples_share_everything() {
    let r = Region::new(-3.0, 3.0, -3.1, 2.9).unwrap();
    for coeff in [Scalar::one(), Scalar::int(-2), "1/3,1".parse().unwrap()] {
        let f = ExpSum::monomial(coeff, Scalar::one());
        for a in [
            c(1.0),
            c(-1.0),
            c(2.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 1.0),
            c(0.5),
            c(-3.0),
            Complex64::new(-1.0, 2.0),
            c(7.0),
        ] {
            for cond in SharingCondition::ALL {
                let v = check_condition(&f, a, &r, cond, &SharingOptions::default()).unwrap().verdict;
                assert!(v.is_ok(), "a={a} {cond:?}");
            }
        }
    }
}
