//! Locating a-points of exponential sums in rectangles.
//!
//! Counts come from the argument principle: the phase change of `f − a` along
//! each edge is integrated with adaptive Gauss–Kronrod quadrature and snapped
//! onto the exactly known endpoint phase difference modulo 2π. Rectangles are
//! quadrisected until each box holds one refined point whose multiplicity
//! accounts for the whole box count.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expsum::{ExpSum, ScaledSum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, RootError> {
        let r = Region { re_min, re_max, im_min, im_max };
        r.validate()?;
        Ok(r)
    }

    /// The square `[−h, h]²`.
    pub fn square(h: f64) -> Self {
        Region { re_min: -h, re_max: h, im_min: -h, im_max: h }
    }

    pub fn validate(&self) -> Result<(), RootError> {
        let ok = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite())
            && self.re_min < self.re_max
            && self.im_min < self.im_max;
        if ok {
            Ok(())
        } else {
            Err(RootError::InvalidRegion(*self))
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn size(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Distance from an interior point to the boundary.
    pub fn inner_distance(&self, z: Complex64) -> f64 {
        (z.re - self.re_min).min(self.re_max - z.re).min(z.im - self.im_min).min(self.im_max - z.im)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn split(&self, fx: f64, fy: f64) -> [Region; 4] {
        let x = self.re_min + fx * self.width();
        let y = self.im_min + fy * self.height();
        [
            Region { re_max: x, im_max: y, ..*self },
            Region { re_min: x, im_max: y, ..*self },
            Region { re_max: x, im_min: y, ..*self },
            Region { re_min: x, im_min: y, ..*self },
        ]
    }

    fn expanded(&self, d: [f64; 4]) -> Region {
        Region {
            re_min: self.re_min - d[0],
            re_max: self.re_max + d[1],
            im_min: self.im_min - d[2],
            im_max: self.im_max + d[3],
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]x[{}, {}]", self.re_min, self.re_max, self.im_min, self.im_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APoint {
    pub location: Complex64,
    pub target: Complex64,
    pub multiplicity: u32,
    pub residual: f64,
    pub derivative_value: Complex64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocateOptions {
    /// Residual tolerance, relative to `max(1, Σ|terms|)` at the point.
    pub tol: f64,
    pub isolation_size: f64,
    pub mult_radius: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        LocateOptions { tol: 1e-12, isolation_size: 1e-3, mult_radius: 1e-4 }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("invalid region {0}")]
    InvalidRegion(Region),
    #[error("an a-point lies too close to the boundary (near z = {z})")]
    BoundaryTooClose { z: Complex64 },
    #[error("edge quadrature did not converge between {from} and {to}")]
    QuadratureNonConvergent { from: Complex64, to: Complex64 },
    #[error("Newton refinement failed to converge in {region}")]
    NewtonDivergence { region: Region },
    #[error("z = {z} is not an a-point (residual {residual:e})")]
    NotAnAPoint { z: Complex64, residual: f64 },
    #[error("multiplicity at {z} is ambiguous: circle test {circle:?}, derivative test {derivative}")]
    AmbiguousMultiplicity { z: Complex64, circle: Option<i64>, derivative: u32 },
    #[error("f − a vanishes identically")]
    IdenticallyZero,
}

/// Relative size of `|f − a|` below which a boundary node counts as a hit.
const BOUNDARY_REL: f64 = 1e-7;
const MAX_EDGE_DEPTH: u32 = 24;
const MAX_BOX_DEPTH: u32 = 96;
/// Split fractions tried in turn when a split line passes too close to a root.
const SPLITS: [(f64, f64); 6] =
    [(0.5, 0.5), (0.537, 0.463), (0.459, 0.548), (0.571, 0.429), (0.421, 0.587), (0.511, 0.493)];
const OUTER_JITTER: f64 = 1e-6;
const OUTER_RETRIES: usize = 3;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Gauss–Kronrod 15/7 rule on `[-1, 1]`: returns (Kronrod, Gauss).
pub(crate) fn gk15<T, F>(mut f: F) -> Result<(T, T), RootError>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
    F: FnMut(f64) -> Result<T, RootError>,
{
    let mut k = T::default();
    let mut g = T::default();
    for j in 0..7 {
        let a = f(-XGK[j])?;
        let b = f(XGK[j])?;
        k = k + (a + b) * WGK[j];
        if j % 2 == 1 {
            g = g + (a + b) * WG[j / 2];
        }
    }
    let c = f(0.0)?;
    k = k + c * WGK[7];
    g = g + c * WG[3];
    Ok((k, g))
}

/// `f − a` prepared for counting and refinement.
#[derive(Clone, Debug)]
pub struct Shifted {
    g: ScaledSum,
    target: Complex64,
}

impl Shifted {
    pub fn new(f: &ExpSum, a: Complex64) -> Result<Self, RootError> {
        let g = ScaledSum::new(&f.compile().shifted(a));
        if g.is_empty() {
            return Err(RootError::IdenticallyZero);
        }
        Ok(Shifted { g, target: a })
    }

    fn check_node(&self, z: Complex64) -> Result<Complex64, RootError> {
        let (ld, rel) = self.g.log_derivative(z);
        if rel < BOUNDARY_REL || !ld.re.is_finite() || !ld.im.is_finite() {
            return Err(RootError::BoundaryTooClose { z });
        }
        Ok(ld)
    }

    fn phase(&self, z: Complex64) -> f64 {
        self.g.jet(z, 0).values[0].arg()
    }

    /// Phase change of `f − a` from `p` to `q` along the segment.
    fn edge(&self, p: Complex64, q: Complex64, depth: u32) -> Result<f64, RootError> {
        let mid = 0.5 * (p + q);
        let half = 0.5 * (q - p);
        let mut steepest: f64 = 0.0;
        let (k, g) = gk15(|s| {
            let ld = self.check_node(mid + half * s)?;
            steepest = steepest.max(ld.norm());
            Ok(ld * half)
        })?;
        let delta = {
            let d = self.phase(q) - self.phase(p);
            d - 2.0 * PI * (d / (2.0 * PI)).round()
        };
        let turns = (k.im - delta) / (2.0 * PI);
        let snapped = turns.round();
        let resolved = (k - g).norm() < 0.2 && (turns - snapped).abs() < 0.25 && steepest * half.norm() < 4.0;
        if resolved {
            return Ok(delta + 2.0 * PI * snapped);
        }
        if depth >= MAX_EDGE_DEPTH {
            return Err(RootError::QuadratureNonConvergent { from: p, to: q });
        }
        Ok(self.edge(p, mid, depth + 1)? + self.edge(mid, q, depth + 1)?)
    }

    pub fn winding(&self, r: &Region) -> Result<i64, RootError> {
        let c = r.corners();
        let mut total = 0.0;
        for k in 0..4 {
            total += self.edge(c[k], c[(k + 1) % 4], 0)?;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    /// Winding count on the circle `|z − z0| = rho` by the trapezoid rule.
    fn circle_count(&self, z0: Complex64, rho: f64) -> Option<i64> {
        for n in [128usize, 512] {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                let w = Complex64::from_polar(rho, 2.0 * PI * (k as f64 + 0.5) / n as f64);
                let (ld, _) = self.g.log_derivative(z0 + w);
                acc += ld * w;
            }
            let m = acc / n as f64;
            if !m.re.is_finite() {
                return None;
            }
            if (m.re - m.re.round()).abs() < 0.1 && m.im.abs() < 0.1 {
                return Some(m.re.round() as i64);
            }
        }
        None
    }

    /// Order of the first derivative that is not negligible at `z`.
    fn derivative_order(&self, z: Complex64) -> u32 {
        let j = self.g.jet(z, 12);
        (1..=12).find(|&k| j.relative(k) > 1e-6).unwrap_or(13) as u32
    }

    fn residual_ok(&self, z: Complex64, tol: f64) -> (bool, f64) {
        let j = self.g.jet(z, 0);
        let scale = j.log_scale.exp();
        let res = j.values[0].norm() * scale;
        (res <= tol * (j.masses[0] * scale).max(1.0), res)
    }

    /// Schröder iteration `z ← z − g g'/(g'² − g g'')`, quadratically
    /// convergent at roots of any multiplicity. Stops when the iterate leaves
    /// `fence` (if given).
    fn refine(&self, z0: Complex64, tol: f64, fence: Option<&Region>) -> Option<Complex64> {
        let mut z = z0;
        let mut best: Option<(f64, Complex64)> = None;
        let mut last_step = f64::INFINITY;
        for _ in 0..80 {
            let j = self.g.jet(z, 2);
            let rel = j.relative(0);
            if best.is_none_or(|(b, _)| rel < b) {
                best = Some((rel, z));
            }
            let (g0, g1, g2) = (j.values[0], j.values[1], j.values[2]);
            if g0.norm() == 0.0 {
                break;
            }
            let den = g1 * g1 - g0 * g2;
            if den.norm() == 0.0 {
                break;
            }
            let step = g0 * g1 / den;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            z -= step;
            if let Some(r) = fence {
                let slack = r.size();
                if z.re < r.re_min - slack
                    || z.re > r.re_max + slack
                    || z.im < r.im_min - slack
                    || z.im > r.im_max + slack
                {
                    return None;
                }
            }
            let s = step.norm();
            if s <= 1e-15 * z.norm().max(1.0) || (s >= last_step && s < 1e-6 * z.norm().max(1.0)) {
                let rel = self.g.jet(z, 0).relative(0);
                if rel < best.unwrap().0 {
                    best = Some((rel, z));
                }
                break;
            }
            last_step = s;
        }
        let z = best?.1;
        self.residual_ok(z, tol).0.then_some(z)
    }

    fn point(&self, z: Complex64, multiplicity: u32) -> APoint {
        let j = self.g.jet(z, 1);
        APoint {
            location: z,
            target: self.target,
            multiplicity,
            residual: j.value(0).norm(),
            derivative_value: j.value(1),
        }
    }

    /// Multiplicity at a refined point: the circle count must agree with the
    /// derivative order, shrinking the circle when a neighbour intrudes.
    fn multiplicity(&self, z: Complex64, radius: f64) -> Result<u32, RootError> {
        let derivative = self.derivative_order(z);
        let mut rho = radius;
        let mut circle = None;
        for _ in 0..4 {
            circle = self.circle_count(z, rho);
            if circle == Some(derivative as i64) {
                return Ok(derivative);
            }
            rho /= 10.0;
        }
        Err(RootError::AmbiguousMultiplicity { z, circle, derivative })
    }

    fn locate_box(&self, r: Region, count: i64, opts: &LocateOptions, depth: u32) -> Result<Vec<APoint>, RootError> {
        if count <= 0 {
            return Ok(vec![]);
        }
        // a single refined point carrying the whole count settles the box
        let mut starts = vec![r.center()];
        if r.size() <= opts.isolation_size {
            starts.extend(r.split(0.5, 0.5).iter().map(Region::center));
            starts.push(self.grid_minimum(&r));
        }
        for s in starts {
            if let Some(z) = self.refine(s, opts.tol, Some(&r)) {
                if r.contains(z) {
                    let rho = opts.mult_radius.min(0.5 * r.size());
                    if let Ok(m) = self.multiplicity(z, rho) {
                        if m as i64 == count {
                            return Ok(vec![self.point(z, m)]);
                        }
                    }
                }
            }
        }
        if depth >= MAX_BOX_DEPTH || r.size() < 1e-13 * r.center().norm().max(1.0) {
            return Err(RootError::NewtonDivergence { region: r });
        }
        let children = self.split_counted(&r, count)?;
        let found: Result<Vec<Vec<APoint>>, RootError> =
            children.into_par_iter().map(|(child, c)| self.locate_box(child, c, opts, depth + 1)).collect();
        Ok(found?.into_iter().flatten().collect())
    }

    /// Quadrisects `r` so that no split line passes near an a-point and the
    /// child counts add up to the parent count.
    fn split_counted(&self, r: &Region, count: i64) -> Result<Vec<(Region, i64)>, RootError> {
        let mut last = None;
        for &(fx, fy) in &SPLITS {
            let children = r.split(fx, fy);
            let counts: Result<Vec<i64>, RootError> = children.par_iter().map(|c| self.winding(c)).collect();
            match counts {
                Ok(cs) if cs.iter().sum::<i64>() == count => {
                    return Ok(children.into_iter().zip(cs).collect());
                }
                Ok(cs) => {
                    log::debug!("count mismatch splitting {r}: {cs:?} vs {count}");
                    last = Some(RootError::QuadratureNonConvergent { from: r.corners()[0], to: r.corners()[2] });
                }
                Err(e) => {
                    log::debug!("re-splitting {r}: {e}");
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap())
    }

    fn grid_minimum(&self, r: &Region) -> Complex64 {
        let n = 9;
        let mut best = (f64::INFINITY, r.center());
        for i in 0..n {
            for k in 0..n {
                let z = Complex64::new(
                    r.re_min + r.width() * (i as f64 + 0.5) / n as f64,
                    r.im_min + r.height() * (k as f64 + 0.5) / n as f64,
                );
                let v = self.g.jet(z, 0).relative(0);
                if v < best.0 {
                    best = (v, z);
                }
            }
        }
        best.1
    }
}

/// Result of a search: the points, the outer winding count and the region
/// actually used (it differs from the request when the boundary was jittered).
#[derive(Clone, Debug, PartialEq)]
pub struct Located {
    pub points: Vec<APoint>,
    pub count: i64,
    pub region: Region,
}

/// Number of a-points of `f` inside `r`, counted with multiplicity.
pub fn winding_count(f: &ExpSum, a: Complex64, r: &Region) -> Result<i64, RootError> {
    r.validate()?;
    Shifted::new(f, a)?.winding(r)
}

pub fn locate_a_points(f: &ExpSum, a: Complex64, r: &Region, opts: &LocateOptions) -> Result<Vec<APoint>, RootError> {
    locate(f, a, r, opts).map(|l| l.points)
}

/// Locates all a-points in `r`, retrying with a slightly enlarged region when
/// a point sits on the boundary.
pub fn locate(f: &ExpSum, a: Complex64, r: &Region, opts: &LocateOptions) -> Result<Located, RootError> {
    r.validate()?;
    let g = Shifted::new(f, a)?;
    let mut region = *r;
    let mut attempt = 0;
    let count = loop {
        match g.winding(&region) {
            Ok(c) => break c,
            Err(RootError::BoundaryTooClose { z }) if attempt < OUTER_RETRIES => {
                attempt += 1;
                let j = OUTER_JITTER * attempt as f64;
                region = r.expanded([j, 1.3 * j, 0.7 * j, 1.1 * j]);
                log::info!("a-point near boundary at {z}; retrying with {region}");
            }
            Err(e) => return Err(e),
        }
    };
    let mut points = g.locate_box(region, count, opts, 0)?;
    points.sort_by(|p, q| cmp_location(&p.location, &q.location));
    debug_assert_eq!(points.iter().map(|p| p.multiplicity as i64).sum::<i64>(), count);
    Ok(Located { points, count, region })
}

/// Lexicographic `(Re, Im)` order with real parts compared on a 1e-9 grid,
/// so rounding noise in Re does not reorder points on a vertical line.
pub(crate) fn cmp_location(a: &Complex64, b: &Complex64) -> Ordering {
    let q = |x: f64| (x * 1e9).round();
    q(a.re).total_cmp(&q(b.re)).then(a.im.total_cmp(&b.im)).then(a.re.total_cmp(&b.re))
}

/// Multiplicity of the a-point at (or numerically next to) `z0`.
pub fn multiplicity_at(f: &ExpSum, a: Complex64, z0: Complex64) -> Result<u32, RootError> {
    let g = Shifted::new(f, a)?;
    let (ok, residual) = g.residual_ok(z0, 1e-9);
    if !ok {
        return Err(RootError::NotAnAPoint { z: z0, residual });
    }
    let radius = LocateOptions::default().mult_radius;
    let fence = Region::new(z0.re - radius, z0.re + radius, z0.im - radius, z0.im + radius)?;
    let z = g.refine(z0, 1e-12, Some(&fence)).filter(|z| (z - z0).norm() < radius).unwrap_or(z0);
    g.multiplicity(z, radius)
}
