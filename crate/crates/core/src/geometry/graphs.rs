use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::profiles::ScaledProfile;

use crate::dimension::{Dimension, MAX_DIM};
use crate::error::{Error, Result};
use crate::quad::SphereRule;

use super::{
    finite_difference_jet, norm, BoundaryBall, GraphFunction, GraphKind, Jet, RadialProfile,
};

/// Horizontal hyperplane `f = height`.
#[derive(Debug, Clone)]
pub struct Plane {
    dim: Dimension,
    height: f64,
    kind: GraphKind,
}

impl Plane {
    pub fn new(dim: Dimension, height: f64) -> Self {
        Self { dim, height, kind: GraphKind::Entire }
    }
}

impl GraphFunction for Plane {
    fn dim(&self) -> Dimension {
        self.dim
    }
    fn kind(&self) -> &GraphKind {
        &self.kind
    }
    fn jet(&self, _x: &[f64], order: usize) -> Result<Jet> {
        let mut j = Jet::zero(self.dim.get(), order);
        j.value = self.height;
        Ok(j)
    }
    fn sup_height(&self) -> f64 {
        self.height
    }
}

/// `f(x) = u(|x|)` for a radial profile `u`.
#[derive(Debug, Clone)]
pub struct RotationalGraph {
    dim: Dimension,
    profile: Arc<dyn RadialProfile>,
    kind: GraphKind,
}

impl RotationalGraph {
    pub fn new(dim: Dimension, profile: Arc<dyn RadialProfile>) -> Result<Self> {
        let r_min = profile.r_min();
        let kind = if r_min > 0.0 {
            let ball = BoundaryBall {
                center: vec![0.0; dim.get()],
                radius: r_min,
                value: profile.height(r_min)?,
            };
            if profile.minimal_boundary() {
                GraphKind::MinimalBoundary { balls: vec![ball] }
            } else {
                GraphKind::Exterior { balls: vec![ball] }
            }
        } else {
            GraphKind::Entire
        };
        Ok(Self { dim, profile, kind })
    }

    pub fn profile(&self) -> &Arc<dyn RadialProfile> {
        &self.profile
    }
}

impl GraphFunction for RotationalGraph {
    fn dim(&self) -> Dimension {
        self.dim
    }

    fn kind(&self) -> &GraphKind {
        &self.kind
    }

    fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        let n = self.dim.get();
        let r = norm(&x[..n]);
        let r_min = self.profile.r_min();
        if r_min > 0.0 && r <= r_min {
            return Err(Error::DomainViolation { radius: r });
        }
        let mut jet = Jet::zero(n, order);
        jet.value = self.profile.height(r)?;
        if order == 0 {
            return Ok(jet);
        }
        let [u1, u2, u3] = self.profile.derivatives(r)?;
        if r < 1e-8 {
            // smooth even profile at the origin
            for i in 0..n {
                jet.hess[i][i] = u2;
            }
            return Ok(jet);
        }
        let mut nu = [0.0; MAX_DIM];
        for i in 0..n {
            nu[i] = x[i] / r;
            jet.grad[i] = u1 * nu[i];
        }
        let proj = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 } - nu[i] * nu[j];
        let tangential = u1 / r;
        for i in 0..n {
            for j in 0..n {
                jet.hess[i][j] = u2 * nu[i] * nu[j] + tangential * proj(i, j);
            }
        }
        if order >= 3 {
            let mixed = u2 / r - u1 / (r * r);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        jet.third[i][j][k] = u3 * nu[i] * nu[j] * nu[k]
                            + mixed * (proj(i, k) * nu[j] + proj(j, k) * nu[i] + proj(i, j) * nu[k]);
                    }
                }
            }
        }
        Ok(jet)
    }

    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        Some(self.profile.clone())
    }

    fn sup_height(&self) -> f64 {
        self.profile.sup_height()
    }

    fn core_radius(&self) -> f64 {
        self.profile.r_min()
    }

    fn level_radius_hint(&self, h: f64) -> Option<f64> {
        self.profile.radius_at_height(h).ok()
    }
}

/// `f(x) = sum_i a_i x_i^2 / 2`; level sets are ellipsoids.
#[derive(Debug, Clone)]
pub struct EllipticParaboloid {
    dim: Dimension,
    coeffs: Vec<f64>,
    kind: GraphKind,
}

impl EllipticParaboloid {
    pub fn new(dim: Dimension, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != dim.get() || coeffs.iter().any(|a| *a <= 0.0) {
            return Err(Error::InvalidParameter(
                "paraboloid needs n positive coefficients".into(),
            ));
        }
        Ok(Self { dim, coeffs, kind: GraphKind::Entire })
    }

    /// Semi-axes of the level set `f = h`.
    pub fn level_axes(&self, h: f64) -> Vec<f64> {
        self.coeffs.iter().map(|a| (2.0 * h / a).sqrt()).collect()
    }
}

impl GraphFunction for EllipticParaboloid {
    fn dim(&self) -> Dimension {
        self.dim
    }
    fn kind(&self) -> &GraphKind {
        &self.kind
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        let n = self.dim.get();
        let mut j = Jet::zero(n, order);
        for i in 0..n {
            j.value += 0.5 * self.coeffs[i] * x[i] * x[i];
            j.grad[i] = self.coeffs[i] * x[i];
            j.hess[i][i] = self.coeffs[i];
        }
        Ok(j)
    }
    fn sup_height(&self) -> f64 {
        f64::INFINITY
    }
    fn level_radius_hint(&self, h: f64) -> Option<f64> {
        self.level_axes(h.max(0.0)).into_iter().reduce(f64::max)
    }
}

/// Smooth compactly supported bump `amplitude * exp(-1/(1-s))`, `s = |x-c|^2/w^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    /// psi and its first three derivatives in `s`.
    fn profile(s: f64) -> [f64; 4] {
        if s >= 1.0 {
            return [0.0; 4];
        }
        let g = 1.0 / (1.0 - s);
        let psi = (-g).exp();
        let g2 = g * g;
        let g3 = g2 * g;
        let g4 = g2 * g2;
        [
            psi,
            -g2 * psi,
            (g4 - 2.0 * g3) * psi,
            (-g4 * g2 + 6.0 * g4 * g - 6.0 * g4) * psi,
        ]
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Jet {
        let n = x.len();
        let w2 = self.width * self.width;
        let mut d = [0.0; MAX_DIM];
        let mut s = 0.0;
        for i in 0..n {
            d[i] = x[i] - self.center.get(i).copied().unwrap_or(0.0);
            s += d[i] * d[i];
        }
        s /= w2;
        let [p0, p1, p2, p3] = Self::profile(s);
        let a = self.amplitude;
        let mut j = Jet::zero(n, order);
        j.value = a * p0;
        if order == 0 || s >= 1.0 {
            return j;
        }
        let mut si = [0.0; MAX_DIM];
        for i in 0..n {
            si[i] = 2.0 * d[i] / w2;
            j.grad[i] = a * p1 * si[i];
        }
        let sij = 2.0 / w2;
        for i in 0..n {
            for k in 0..n {
                let delta = if i == k { sij } else { 0.0 };
                j.hess[i][k] = a * (p2 * si[i] * si[k] + p1 * delta);
            }
        }
        if order >= 3 {
            for i in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let dik = if i == k { sij } else { 0.0 };
                        let dil = if i == l { sij } else { 0.0 };
                        let dkl = if k == l { sij } else { 0.0 };
                        j.third[i][k][l] = a
                            * (p3 * si[i] * si[k] * si[l]
                                + p2 * (dik * si[l] + dil * si[k] + dkl * si[i]));
                    }
                }
            }
        }
        j
    }
}

/// A base graph plus a compactly supported bump.
#[derive(Debug, Clone)]
pub struct Bumped {
    base: Arc<dyn GraphFunction>,
    bump: Bump,
}

impl Bumped {
    pub fn new(base: Arc<dyn GraphFunction>, bump: Bump) -> Result<Self> {
        let n = base.dim().get();
        if bump.center.len() != n || bump.width <= 0.0 {
            return Err(Error::InvalidParameter("bump center/width".into()));
        }
        let dist = norm(&bump.center);
        for ball in base.kind().balls() {
            let c: Vec<f64> = (0..n).map(|i| bump.center[i] - ball.center[i]).collect();
            if norm(&c) < ball.radius + bump.width {
                return Err(Error::InvalidParameter(format!(
                    "bump at distance {dist} overlaps an excised ball"
                )));
            }
        }
        Ok(Self { base, bump })
    }

    pub fn base(&self) -> &Arc<dyn GraphFunction> {
        &self.base
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }
}

impl GraphFunction for Bumped {
    fn dim(&self) -> Dimension {
        self.base.dim()
    }
    fn kind(&self) -> &GraphKind {
        self.base.kind()
    }
    fn max_order(&self) -> usize {
        self.base.max_order()
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        let b = self.base.jet(x, order)?;
        Ok(b.add(&self.bump.jet(x, order)))
    }
    fn sup_height(&self) -> f64 {
        self.base.sup_height()
    }
    fn core_radius(&self) -> f64 {
        self.base
            .core_radius()
            .max(norm(&self.bump.center) + self.bump.width)
    }
    fn level_radius_hint(&self, h: f64) -> Option<f64> {
        // bump only lowers or raises the graph locally; widen by the bump's reach
        let lo = self
            .base
            .level_radius_hint(h + self.bump.amplitude.abs())?;
        Some(lo.max(norm(&self.bump.center) + self.bump.width))
    }
    fn angular_rule(&self, q: usize) -> Option<Arc<SphereRule>> {
        // a radial base plus a radial bump is symmetric about the line through the bump centre
        self.base.radial()?;
        let d = norm(&self.bump.center);
        let mut axis = self.bump.center.clone();
        if d == 0.0 {
            axis[0] = 1.0;
        }
        // angular shadow of the bump support, with panel edges where it ends
        let cap = if d > self.bump.width { (self.bump.width / d).asin() } else { PI };
        let mut breaks: Vec<f64> = (0..=4).map(|i| cap * i as f64 / 4.0).collect();
        if cap < PI {
            breaks.extend([0.5 * (cap + PI), PI]);
        }
        Some(Arc::new(SphereRule::axisymmetric(&axis, &breaks, (q / 2).max(4))))
    }
}

/// `g(x) = (f(lambda x) - shift) / lambda`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    inner: Arc<dyn GraphFunction>,
    lambda: f64,
    shift: f64,
    kind: GraphKind,
}

impl Rescaled {
    pub fn new(inner: Arc<dyn GraphFunction>, lambda: f64, shift: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {lambda} must be positive")));
        }
        let map = |b: &BoundaryBall| BoundaryBall {
            center: b.center.iter().map(|c| c / lambda).collect(),
            radius: b.radius / lambda,
            value: (b.value - shift) / lambda,
        };
        let kind = match inner.kind() {
            GraphKind::Entire => GraphKind::Entire,
            GraphKind::MinimalBoundary { balls } => GraphKind::MinimalBoundary {
                balls: balls.iter().map(map).collect(),
            },
            GraphKind::Exterior { balls } => GraphKind::Exterior {
                balls: balls.iter().map(map).collect(),
            },
        };
        Ok(Self { inner, lambda, shift, kind })
    }
}

impl GraphFunction for Rescaled {
    fn dim(&self) -> Dimension {
        self.inner.dim()
    }
    fn kind(&self) -> &GraphKind {
        &self.kind
    }
    fn max_order(&self) -> usize {
        self.inner.max_order()
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        let n = x.len();
        let mut y = [0.0; MAX_DIM];
        for i in 0..n {
            y[i] = self.lambda * x[i];
        }
        let mut j = self.inner.jet(&y[..n], order)?;
        j.value = (j.value - self.shift) / self.lambda;
        let l2 = self.lambda * self.lambda;
        for i in 0..n {
            for k in 0..n {
                j.hess[i][k] *= self.lambda;
                for l in 0..n {
                    j.third[i][k][l] *= l2;
                }
            }
        }
        Ok(j)
    }
    fn radial(&self) -> Option<Arc<dyn RadialProfile>> {
        let inner = self.inner.radial()?;
        Some(Arc::new(ScaledProfile { inner, lambda: self.lambda, shift: self.shift }))
    }
    fn sup_height(&self) -> f64 {
        (self.inner.sup_height() - self.shift) / self.lambda
    }
    fn core_radius(&self) -> f64 {
        self.inner.core_radius() / self.lambda
    }
    fn level_radius_hint(&self, h: f64) -> Option<f64> {
        self.inner
            .level_radius_hint(self.lambda * h + self.shift)
            .map(|r| r / self.lambda)
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Graph known only through point values; derivatives by centered differences.
#[derive(Clone)]
pub struct SampledGraph {
    dim: Dimension,
    f: Arc<ScalarFn>,
    sup: f64,
    kind: GraphKind,
}

impl SampledGraph {
    pub fn new(dim: Dimension, sup: f64, f: Arc<ScalarFn>) -> Self {
        Self { dim, f, sup, kind: GraphKind::Entire }
    }
}

impl fmt::Debug for SampledGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledGraph").field("dim", &self.dim).finish()
    }
}

impl GraphFunction for SampledGraph {
    fn dim(&self) -> Dimension {
        self.dim
    }
    fn kind(&self) -> &GraphKind {
        &self.kind
    }
    fn max_order(&self) -> usize {
        3
    }
    fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        let f = |y: &[f64]| Ok((self.f)(y));
        finite_difference_jet(&f, x, order)
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.f)(x))
    }
    fn sup_height(&self) -> f64 {
        self.sup
    }
}
