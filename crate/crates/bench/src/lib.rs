//! Workloads shared by the criterion benches.

use valshare_core::expr::{parse, Env, Expr};
use valshare_core::families::{example2, thm2prime_family};
use valshare_core::roots::Region;
use valshare_core::{ExpSum, Scalar};

pub fn thm2prime() -> ExpSum {
    thm2prime_family(&Scalar::one(), &Scalar::one()).expect("nonzero parameters")
}

/// `(sin 2z + 1)/2`, whose a-points are all double.
pub fn double_sine() -> ExpSum {
    example2(&Scalar::one()).expect("nonzero parameter").0
}

pub fn cubic_ode() -> (Expr, Env) {
    let e = parse("D(f)^3 - f*D(f)^2 + (4/27)*(f^3-1)").expect("valid expression");
    (e, Env::from([("f".to_string(), thm2prime())]))
}

pub fn square(h: f64) -> Region {
    Region::square(h)
}
