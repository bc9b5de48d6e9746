//! Graph functions `f: R^n -> R` and the pointwise differential geometry of
//! their graphs in `R^(n+1)`.

mod curvature;
mod graphs;
mod orientation;
mod profiles;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dimension::{Dimension, MAX_DIM};
use crate::error::{Error, Result};
use crate::quad::SphereRule;

pub use curvature::{
    gauss_from_jet, graph_h_from_jet, graph_mean_curvature, levelset_h_from_jet,
    levelset_mean_curvature, reilly_from_jet, scalar_curvature_gauss, scalar_curvature_reilly,
    shape_from_jet, shape_operator, GRADIENT_FLOOR,
};
pub use graphs::{
    Bump, Bumped, EllipticParaboloid, Plane, Rescaled, RotationalGraph, SampledGraph,
};
pub use profiles::{LowerHemisphere, Paraboloid, PowerPerturbed, ScaledProfile};
pub use orientation::{
    check_asymptotic_flatness, check_minimal_boundary, classify_orientation, halton_points,
    AdmissibilityReport, Orientation, OrientationReport,
};

/// Point of `R^n` padded to the maximum supported dimension.
pub type Point = [f64; MAX_DIM];

pub fn point(coords: &[f64]) -> Point {
    let mut p = [0.0; MAX_DIM];
    p[..coords.len()].copy_from_slice(coords);
    p
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Value and derivatives of `f` up to third order at one point.
#[derive(Clone)]
pub struct Jet {
    pub n: usize,
    pub order: usize,
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
    pub third: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Jet {
    pub fn zero(n: usize, order: usize) -> Self {
        Self {
            n,
            order,
            value: 0.0,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
            third: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn grad_sq(&self) -> f64 {
        self.grad[..self.n].iter().map(|g| g * g).sum()
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.n).map(|i| self.hess[i][i]).sum()
    }

    /// Componentwise `self + other`, truncated to the lower order.
    pub fn add(&self, other: &Jet) -> Jet {
        let n = self.n;
        let mut out = Jet::zero(n, self.order.min(other.order));
        out.value = self.value + other.value;
        for i in 0..n {
            out.grad[i] = self.grad[i] + other.grad[i];
            for j in 0..n {
                out.hess[i][j] = self.hess[i][j] + other.hess[i][j];
                for k in 0..n {
                    out.third[i][j][k] = self.third[i][j][k] + other.third[i][j][k];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("n", &self.n)
            .field("order", &self.order)
            .field("value", &self.value)
            .field("grad", &&self.grad[..self.n])
            .finish_non_exhaustive()
    }
}

/// A ball removed from the domain, with the constant value `f` takes on its boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: f64,
}

impl BoundaryBall {
    /// Closed-ball test; the boundary sphere carries the constant value too.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) <= self.radius
    }

    fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.center.iter().chain(std::iter::repeat(&0.0)))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    Entire,
    /// `|Df| -> infinity` at every boundary sphere.
    MinimalBoundary { balls: Vec<BoundaryBall> },
    /// Excised balls whose boundary is not minimal; test families only.
    Exterior { balls: Vec<BoundaryBall> },
}

impl GraphKind {
    pub fn balls(&self) -> &[BoundaryBall] {
        match self {
            GraphKind::Entire => &[],
            GraphKind::MinimalBoundary { balls } | GraphKind::Exterior { balls } => balls,
        }
    }

    pub fn hole_at(&self, x: &[f64]) -> Option<&BoundaryBall> {
        self.balls().iter().find(|b| b.contains(x))
    }
}

/// Evaluation contract for asymptotically flat graph functions.
pub trait GraphFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> Dimension;

    fn kind(&self) -> &GraphKind;

    /// Highest derivative order provided analytically.
    fn max_order(&self) -> usize {
        3
    }

    /// Jet up to `order` at `x` (a slice of length `n`).
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet>;

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jet(x, 0)?.value)
    }

    /// The filled-in extension: constant on each excised ball.
    fn extended_value(&self, x: &[f64]) -> Result<f64> {
        match self.kind().hole_at(x) {
            Some(ball) => Ok(ball.value),
            None => self.value(x),
        }
    }

    /// Radial profile when the graph is rotationally symmetric about the origin.
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        None
    }

    /// `lim f` at infinity, `+inf` when unbounded.
    fn sup_height(&self) -> f64;

    /// Radius beyond which `f` is smooth and free of excised regions.
    fn core_radius(&self) -> f64 {
        self.kind()
            .balls()
            .iter()
            .map(|b| norm(&b.center) + b.radius)
            .fold(0.0, f64::max)
    }

    /// Radius of the origin-centred ball containing every level set below `h`, if known.
    fn level_radius_hint(&self, _h: f64) -> Option<f64> {
        None
    }

    /// Ray directions adapted to a symmetry of the graph, for level integrals of
    /// invariant integrands; `None` means the product rule with `q` nodes per angle.
    fn angular_rule(&self, _q: usize) -> Option<Arc<SphereRule>> {
        None
    }
}

/// Height profile `u(r)` of a rotationally symmetric graph `f(x) = u(|x|)`.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    /// Inner radius of the domain; zero for entire profiles.
    fn r_min(&self) -> f64;

    fn height(&self, r: f64) -> Result<f64>;

    /// `[u', u'', u''']` at `r > r_min`.
    fn derivatives(&self, r: f64) -> Result<[f64; 3]>;

    /// `lim u(r)` as `r -> infinity`.
    fn sup_height(&self) -> f64;

    /// True when `u' -> infinity` at `r_min`.
    fn minimal_boundary(&self) -> bool {
        false
    }

    fn source(&self) -> ProfileSource;

    /// Radius where `u` reaches `h`; `u` must be increasing.
    fn radius_at_height(&self, h: f64) -> Result<f64> {
        default_radius_at_height(self, h)
    }
}

pub fn default_radius_at_height<P: RadialProfile + ?Sized>(p: &P, h: f64) -> Result<f64> {
    let r0 = p.r_min();
    let u0 = p.height(r0)?;
    if h <= u0 {
        return Ok(r0);
    }
    if h >= p.sup_height() {
        return Err(Error::AboveSupremum { h, h_max: p.sup_height() });
    }
    let mut hi = (2.0 * r0).max(1.0);
    let mut guard = 0;
    while p.height(hi)? < h {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Range(format!("height {h} not reached by profile")));
        }
    }
    let lo = if guard == 0 { r0 } else { hi / 2.0 };
    let mut err = None;
    let r = crate::quad::brent(
        |r| match p.height(r) {
            Ok(v) => v - h,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        lo,
        hi,
        1e-14 * hi,
    )?;
    match err {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSource {
    Schwarzschild,
    MassProfile,
    Explicit,
}

/// Centered finite-difference jet for graphs without analytic derivatives.
/// Steps: `cbrt(eps) (1 + |x|)` for first and second order, `eps^(1/5) (1 + |x|)`
/// for the third (both stencil levels use the larger step).
pub fn finite_difference_jet(
    f: &(impl Fn(&[f64]) -> Result<f64> + ?Sized),
    x: &[f64],
    order: usize,
) -> Result<Jet> {
    let scale = 1.0 + norm(x);
    let h = f64::EPSILON.cbrt() * scale;
    let mut jet = fd_jet2(f, x, order.min(2), h)?;
    jet.order = order;
    if order >= 3 {
        let n = x.len();
        let h3 = f64::EPSILON.powf(0.2) * scale;
        for k in 0..n {
            let mut xp = point(x);
            let mut xm = point(x);
            xp[k] += h3;
            xm[k] -= h3;
            let plus = fd_jet2(f, &xp[..n], 2, h3)?.hess;
            let minus = fd_jet2(f, &xm[..n], 2, h3)?.hess;
            for i in 0..n {
                for j in 0..n {
                    jet.third[i][j][k] = (plus[i][j] - minus[i][j]) / (2.0 * h3);
                }
            }
        }
    }
    Ok(jet)
}

fn fd_jet2(
    f: &(impl Fn(&[f64]) -> Result<f64> + ?Sized),
    x: &[f64],
    order: usize,
    h: f64,
) -> Result<Jet> {
    let n = x.len();
    let mut jet = Jet::zero(n, order);
    jet.value = f(x)?;
    let mut y = point(x);
    if order >= 1 {
        for i in 0..n {
            y[i] = x[i] + h;
            let fp = f(&y[..n])?;
            y[i] = x[i] - h;
            let fm = f(&y[..n])?;
            y[i] = x[i];
            jet.grad[i] = (fp - fm) / (2.0 * h);
        }
    }
    if order >= 2 {
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    y[i] = x[i] + h;
                    let fp = f(&y[..n])?;
                    y[i] = x[i] - h;
                    let fm = f(&y[..n])?;
                    y[i] = x[i];
                    (fp - 2.0 * jet.value + fm) / (h * h)
                } else {
                    let mut s = 0.0;
                    for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        y[i] = x[i] + si * h;
                        y[j] = x[j] + sj * h;
                        s += sign * f(&y[..n])?;
                    }
                    y[i] = x[i];
                    y[j] = x[j];
                    s / (4.0 * h * h)
                };
                jet.hess[i][j] = v;
                jet.hess[j][i] = v;
            }
        }
    }
    Ok(jet)
}
