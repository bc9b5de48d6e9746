//! Level-set area `V(h) = |Sigma_h|`, its first variation, `h_0`, and the
//! differential inequalities satisfied by `V`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::geometry::{levelset_h_from_jet, norm, GraphFunction, Jet, GRADIENT_FLOOR};
use crate::quad::{self, pairwise_sum, GaussLegendre, SphereRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convexity {
    Convex,
    StarShaped,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSetSlice {
    pub h: f64,
    pub volume: f64,
    pub total_mean_curvature: f64,
    /// First variation `int_{Sigma_h} H_Sigma / |Df|`.
    pub volume_derivative: f64,
    pub min_abs_gradient: f64,
    pub min_mean_curvature: f64,
    pub outer_radius: f64,
    pub convexity: Convexity,
    pub strict_mean_convex: bool,
    pub regular: bool,
}

impl LevelSetSlice {
    /// Sufficient condition for outward-minimizing: the level set is convex.
    pub fn outward_minimizing_verified(&self) -> bool {
        self.convexity == Convexity::Convex
    }

    fn empty(h: f64) -> Self {
        Self {
            h,
            volume: 0.0,
            total_mean_curvature: 0.0,
            volume_derivative: 0.0,
            min_abs_gradient: f64::NAN,
            min_mean_curvature: f64::NAN,
            outer_radius: 0.0,
            convexity: Convexity::Unknown,
            strict_mean_convex: false,
            regular: false,
        }
    }
}

/// Controls for the ray-based level-set integrals of non-rotational graphs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoareaOptions {
    /// Sphere-rule nodes per polar angle for the ray directions.
    pub rule_q: usize,
    /// Gauss nodes across the mollifier band on each ray.
    pub band_nodes: usize,
    /// Radial spacing as a fraction of the mean level radius; `eps = 2 * spacing * |Df|`.
    pub spacing: f64,
}

impl Default for CoareaOptions {
    fn default() -> Self {
        Self { rule_q: 24, band_nodes: 24, spacing: 0.01 }
    }
}

/// Triweight mollifier on `[-1, 1]`.
fn kernel(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        35.0 / 32.0 * t * t * t
    }
}

/// Ray directions: the graph's own symmetric rule when it has one.
fn directions(f: &dyn GraphFunction, q: usize) -> Arc<SphereRule> {
    f.angular_rule(q).unwrap_or_else(|| quad::sphere_rule(f.dim().get(), q))
}

/// Radius where the ray through `x = origin + r dir` leaves every excised ball.
fn ray_start(f: &dyn GraphFunction) -> Result<f64> {
    let mut r0: f64 = 0.0;
    for b in f.kind().balls() {
        let c = norm(&b.center);
        if c >= b.radius {
            return Err(Error::InvalidParameter(
                "ray sampling needs every excised ball to contain the origin".into(),
            ));
        }
        r0 = r0.max(c + b.radius);
    }
    Ok(r0)
}

struct Ray<'a> {
    f: &'a dyn GraphFunction,
    dir: &'a [f64],
    start: f64,
}

impl Ray<'_> {
    fn point(&self, r: f64) -> Vec<f64> {
        self.dir.iter().map(|d| d * r).collect()
    }

    fn value(&self, r: f64) -> Result<f64> {
        self.f.value(&self.point(r))
    }

    fn jet(&self, r: f64, order: usize) -> Result<Jet> {
        self.f.jet(&self.point(r), order)
    }

    /// First radius with `f = level`, or `None` if the ray starts above the level.
    fn crossing(&self, level: f64, hint: Option<f64>) -> Result<Option<f64>> {
        let lo = if self.start > 0.0 { self.start * (1.0 + 1e-12) } else { 0.0 };
        let v_lo = self.value(lo)?;
        if lo == 0.0 && v_lo == level {
            // a level through the origin; its regularity is decided by the gradient there
            return Ok(Some(0.0));
        }
        if v_lo >= level {
            return Ok(None);
        }
        let sup = self.f.sup_height();
        if level >= sup {
            return Err(Error::AboveSupremum { h: level, h_max: sup });
        }
        let mut a = lo;
        let mut b = hint.map_or(2.0 * lo.max(0.5), |r| r.max(1.1 * lo).max(1e-3));
        let mut guard = 0;
        while self.value(b)? < level {
            a = b;
            b *= 2.0;
            guard += 1;
            if guard > 80 {
                return Err(Error::Range(format!("level {level} not reached along ray")));
            }
        }
        let mut err = None;
        let r = quad::brent(
            |r| match self.value(r) {
                Ok(v) => v - level,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            a,
            b,
            1e-14 * b,
        )?;
        err.map_or(Ok(Some(r)), Err)
    }
}

/// Per-crossing data gathered while integrating over a level set.
#[derive(Debug, Clone, Copy)]
struct CrossingStats {
    radius: f64,
    gradient: f64,
    mean_curvature: f64,
    radial_slope: f64,
    convex: bool,
}

fn crossing_stats(j: &Jet, dir: &[f64], radius: f64) -> Result<CrossingStats> {
    let n = j.n;
    let g = j.grad_sq().sqrt();
    let radial_slope: f64 = (0..n).map(|i| j.grad[i] * dir[i]).sum();
    let mean_curvature = if g >= GRADIENT_FLOOR { levelset_h_from_jet(j)? } else { f64::NAN };
    let convex = if g >= GRADIENT_FLOOR {
        let nu = DMatrix::from_fn(n, 1, |i, _| j.grad[i] / g);
        let p = DMatrix::identity(n, n) - &nu * nu.transpose();
        let hs = DMatrix::from_fn(n, n, |a, b| j.hess[a][b]);
        let m = &p * hs * &p;
        let scale = m.norm().max(1e-300);
        m.symmetric_eigenvalues().iter().all(|&e| e >= -1e-10 * scale)
    } else {
        false
    };
    Ok(CrossingStats { radius, gradient: g, mean_curvature, radial_slope, convex })
}

/// Mollified coarea integrals `int phi_eps(f - h) g |Df| dx` for `K` integrands at once,
/// Richardson-extrapolated from `eps` and `2 eps`; returns the limits and the crossing data.
fn coarea_multi<const K: usize, G>(
    f: &dyn GraphFunction,
    h: f64,
    opts: &CoareaOptions,
    g: G,
) -> Result<([f64; K], Vec<CrossingStats>)>
where
    G: Fn(&Jet) -> Result<[f64; K]> + Sync,
{
    let n = f.dim().get();
    let start = ray_start(f)?;
    let rule = directions(f, opts.rule_q);
    let hint = f.level_radius_hint(h);
    let dirs: Vec<&[f64]> = rule.points.iter().map(|p| &p[..n]).collect();

    let crossings: Vec<Option<CrossingStats>> = dirs
        .par_iter()
        .map(|dir| {
            let ray = Ray { f, dir, start };
            match ray.crossing(h, hint)? {
                Some(r) => Ok(Some(crossing_stats(&ray.jet(r, 2)?, dir, r)?)),
                None => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    let hits: Vec<CrossingStats> = crossings.iter().flatten().copied().collect();
    if hits.is_empty() {
        return Ok(([0.0; K], hits));
    }
    let mean_r = hits.iter().map(|c| c.radius).sum::<f64>() / hits.len() as f64;
    let mean_g = hits.iter().map(|c| c.gradient).sum::<f64>() / hits.len() as f64;
    let min_g = hits.iter().map(|c| c.gradient).fold(f64::INFINITY, f64::min);
    if min_g < GRADIENT_FLOOR {
        return Err(Error::CriticalValue { h, min_gradient: min_g });
    }
    let mut eps = 2.0 * opts.spacing * mean_r * mean_g;
    let room = f.sup_height() - h;
    if room.is_finite() {
        eps = eps.min(room / 4.0);
    }
    let gl = GaussLegendre::get(opts.band_nodes);

    let band = |eps: f64| -> Result<[f64; K]> {
        let per_ray: Vec<[f64; K]> = dirs
            .par_iter()
            .zip(rule.weights.par_iter())
            .map(|(dir, w)| {
                let ray = Ray { f, dir, start };
                let hint_r = hint.map(|r| r * 1.2);
                let lo = match ray.crossing(h - eps, hint_r)? {
                    Some(r) => r,
                    None => start,
                };
                let Some(hi) = ray.crossing(h + eps, hint_r)? else {
                    return Ok([0.0; K]);
                };
                let mut acc = [0.0; K];
                for (x, gw) in gl.nodes.iter().zip(&gl.weights) {
                    let r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                    let j = ray.jet(r, 2)?;
                    let phi = kernel((j.value - h) / eps) / eps;
                    if phi == 0.0 {
                        continue;
                    }
                    let vals = g(&j)?;
                    let c = 0.5 * (hi - lo) * gw * phi * j.grad_sq().sqrt() * r.powi(n as i32 - 1);
                    for k in 0..K {
                        acc[k] += c * vals[k];
                    }
                }
                Ok(acc.map(|a| a * w))
            })
            .collect::<Result<_>>()?;
        let mut out = [0.0; K];
        for k in 0..K {
            let col: Vec<f64> = per_ray.iter().map(|v| v[k]).collect();
            out[k] = pairwise_sum(&col);
        }
        Ok(out)
    };
    let fine = band(eps)?;
    let coarse = band(2.0 * eps)?;
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = quad::richardson(fine[k], coarse[k], 2.0);
    }
    Ok((out, hits))
}

/// `int_{Sigma_h} g` through the mollified coarea formula.
pub fn coarea_integral<G>(f: &dyn GraphFunction, h: f64, opts: &CoareaOptions, g: G) -> Result<f64>
where
    G: Fn(&Jet) -> Result<f64> + Sync,
{
    Ok(coarea_multi::<1, _>(f, h, opts, |j| Ok([g(j)?]))?.0[0])
}

/// `int_{Sigma_h} g` with `Sigma_h` parameterized over the sphere by its ray crossings
/// (exact surface element `r^(n-1) |Df| / d_r f`); star-shaped levels only.
pub fn ray_surface_integral<G>(f: &dyn GraphFunction, h: f64, q: usize, g: G) -> Result<f64>
where
    G: Fn(&Jet) -> Result<f64> + Sync,
{
    let n = f.dim().get();
    let start = ray_start(f)?;
    let rule = directions(f, q);
    let hint = f.level_radius_hint(h);
    let vals: Vec<f64> = rule
        .points
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(p, w)| {
            let dir = &p[..n];
            let ray = Ray { f, dir, start };
            let Some(r) = ray.crossing(h, hint)? else { return Ok(0.0) };
            let j = ray.jet(r, 2)?;
            let slope: f64 = (0..n).map(|i| j.grad[i] * dir[i]).sum();
            if slope <= 0.0 {
                return Err(Error::Hypothesis(format!("level {h} is not star-shaped")));
            }
            Ok(w * g(&j)? * r.powi(n as i32 - 1) * j.grad_sq().sqrt() / slope)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals))
}

/// `int_{R^n \ Omega_h, |x| < r_t} g dx` integrating each ray from its level crossing.
pub fn exterior_integral<G>(f: &dyn GraphFunction, h: f64, r_t: f64, opts: &CoareaOptions, g: G) -> Result<f64>
where
    G: Fn(&Jet) -> f64 + Sync,
{
    let n = f.dim().get();
    let start = ray_start(f)?;
    let rule = directions(f, opts.rule_q);
    let hint = f.level_radius_hint(h);
    let vals: Vec<f64> = rule
        .points
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(p, w)| {
            let dir = &p[..n];
            let ray = Ray { f, dir, start };
            let r0 = ray.crossing(h, hint)?.unwrap_or(start.max(1e-12));
            if r0 >= r_t {
                return Ok(0.0);
            }
            let v = quad::adaptive(
                |s| {
                    let r = s.exp();
                    ray.jet(r, 3).map_or(f64::NAN, |j| g(&j)) * r.powi(n as i32)
                },
                r0.ln(),
                r_t.ln(),
                1e-14,
                1e-11,
            )?;
            Ok(w * v.value)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals))
}

/// Level-set slice at height `h`: area, total mean curvature, first variation and flags.
pub fn level_volume(f: &dyn GraphFunction, h: f64) -> Result<LevelSetSlice> {
    level_volume_with(f, h, &CoareaOptions::default())
}

pub fn level_volume_with(f: &dyn GraphFunction, h: f64, opts: &CoareaOptions) -> Result<LevelSetSlice> {
    let n = f.dim();
    let nf = n.as_f64();
    let c = n.constants();
    let sup = f.sup_height();
    if h >= sup {
        return Err(Error::AboveSupremum { h, h_max: sup });
    }
    if let Some(p) = f.radial() {
        if h <= p.height(p.r_min())? {
            return Ok(LevelSetSlice::empty(h));
        }
        let r = p.radius_at_height(h)?;
        let u1 = p.derivatives(r)?[0];
        let hm = (nf - 1.0) / r;
        let regular = u1 >= GRADIENT_FLOOR;
        return Ok(LevelSetSlice {
            h,
            volume: c.omega * r.powf(nf - 1.0),
            total_mean_curvature: (nf - 1.0) * c.omega * r.powf(nf - 2.0),
            volume_derivative: (nf - 1.0) * c.omega * r.powf(nf - 2.0) / u1,
            min_abs_gradient: u1,
            min_mean_curvature: hm,
            outer_radius: r,
            convexity: Convexity::Convex,
            strict_mean_convex: hm >= 1e-8 * (nf - 1.0) / r,
            regular,
        });
    }
    let ([vol, total_h, vprime], hits) = coarea_multi::<3, _>(f, h, opts, |j| {
        let hm = levelset_h_from_jet(j)?;
        Ok([1.0, hm, hm / j.grad_sq().sqrt()])
    })?;
    if hits.is_empty() {
        return Ok(LevelSetSlice::empty(h));
    }
    let min_g = hits.iter().map(|s| s.gradient).fold(f64::INFINITY, f64::min);
    let min_h = hits.iter().map(|s| s.mean_curvature).fold(f64::INFINITY, f64::min);
    let r_outer = hits.iter().map(|s| s.radius).fold(0.0, f64::max);
    let star = hits.iter().all(|s| s.radial_slope > 0.0);
    let convexity = if hits.iter().all(|s| s.convex) {
        Convexity::Convex
    } else if star {
        Convexity::StarShaped
    } else {
        Convexity::Unknown
    };
    Ok(LevelSetSlice {
        h,
        volume: vol,
        total_mean_curvature: total_h,
        volume_derivative: vprime,
        min_abs_gradient: min_g,
        min_mean_curvature: min_h,
        outer_radius: r_outer,
        convexity,
        strict_mean_convex: min_h >= 1e-8 * (nf - 1.0) / r_outer,
        regular: min_g >= GRADIENT_FLOOR,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeSample {
    pub h: f64,
    pub volume: f64,
    pub volume_derivative: f64,
    pub regular: bool,
    pub convex_verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeFunction {
    pub samples: Vec<VolumeSample>,
    pub h_max: f64,
    pub monotone: bool,
}

impl VolumeFunction {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["h", "V", "Vprime", "regular", "convex_verified"])?;
        for s in &self.samples {
            out.write_record([
                s.h.to_string(),
                s.volume.to_string(),
                s.volume_derivative.to_string(),
                s.regular.to_string(),
                s.convex_verified.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Linear interpolation of `V` (`h` inside the sampled range).
    pub fn volume_at(&self, h: f64) -> Option<f64> {
        let s = &self.samples;
        let i = s.partition_point(|p| p.h <= h);
        if i == 0 || i > s.len() {
            return None;
        }
        if i == s.len() {
            return (s[i - 1].h == h).then_some(s[i - 1].volume);
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let t = (h - a.h) / (b.h - a.h);
        Some(a.volume + t * (b.volume - a.volume))
    }
}

/// `V` on increasing heights, computed in parallel and merged in input order.
pub fn volume_function(f: &dyn GraphFunction, hs: &[f64]) -> Result<VolumeFunction> {
    if hs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("heights must be strictly increasing".into()));
    }
    let slices: Vec<LevelSetSlice> = hs.par_iter().map(|&h| level_volume(f, h)).collect::<Result<_>>()?;
    let samples: Vec<VolumeSample> = slices
        .iter()
        .map(|s| VolumeSample {
            h: s.h,
            volume: s.volume,
            volume_derivative: s.volume_derivative,
            regular: s.regular,
            convex_verified: s.outward_minimizing_verified(),
        })
        .collect();
    let regular: Vec<&VolumeSample> = samples.iter().filter(|s| s.regular).collect();
    let monotone = regular.windows(2).all(|w| w[1].volume >= w[0].volume - 1e-10 * w[1].volume.abs().max(1.0));
    Ok(VolumeFunction { samples, h_max: f.sup_height(), monotone })
}

/// `2 omega (2m)^((n-1)/(n-2))`.
pub fn h_zero_threshold(n: Dimension, m: f64) -> f64 {
    let nf = n.as_f64();
    2.0 * n.constants().omega * (2.0 * m).powf((nf - 1.0) / (nf - 2.0))
}

/// `sup { h : V(h) <= 2 omega (2m)^((n-1)/(n-2)) }`; `-inf` when `V` starts above it.
pub fn h_zero(f: &dyn GraphFunction, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {m} must be positive")));
    }
    let n = f.dim();
    let nf = n.as_f64();
    let c = n.constants();
    let target = h_zero_threshold(n, m);
    if let Some(p) = f.radial() {
        let r_star = (target / c.omega).powf(1.0 / (nf - 1.0));
        if r_star <= p.r_min() {
            return Ok(f64::NEG_INFINITY);
        }
        return p.height(r_star);
    }
    h_zero_bisection(f, target)
}

/// Root of `V(h) = target` by safeguarded bisection on the monotone `V`.
pub fn h_zero_bisection(f: &dyn GraphFunction, target: f64) -> Result<f64> {
    let sup = f.sup_height();
    ray_start(f)?;
    let base = f
        .kind()
        .balls()
        .iter()
        .map(|b| b.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let bottom = if base.is_finite() { base } else { f.value(&vec![0.0; f.dim().get()])? };
    // just above the bottom, where a level through a critical point is not sampled
    let mut lo = bottom + 1e-12 * bottom.abs().max(1.0);
    if level_volume(f, lo).map(|s| s.volume).unwrap_or(0.0) > target {
        return Ok(f64::NEG_INFINITY);
    }
    let mut step = 1.0;
    let mut hi = lo + step;
    loop {
        if hi >= sup {
            hi = if sup.is_finite() { lo + 0.5 * (sup - lo) } else { hi };
        }
        let v = level_volume(f, hi)?.volume;
        if v > target {
            break;
        }
        if sup.is_finite() && sup - hi < 1e-12 * sup.abs().max(1.0) {
            return Err(Error::Range(format!("V stays below {target} up to the supremum")));
        }
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        if step > 1e15 {
            return Err(Error::Range(format!("V never exceeds {target}")));
        }
    }
    let mut err = None;
    let h = quad::brent(
        |h| match level_volume(f, h) {
            Ok(s) => s.volume - target,
            Err(e) => {
                err = Some(e);
                0.0
            }
        },
        lo,
        hi,
        1e-12 * hi.abs().max(1.0),
    )?;
    err.map_or(Ok(h), Err)
}

/// `int H - (C_n/2)(V/omega)^((n-2)/(n-1))`, nonnegative for outward-minimizing mean-convex slices.
pub fn minkowski_gap(slice: &LevelSetSlice, n: Dimension) -> Result<f64> {
    if !slice.strict_mean_convex || !slice.outward_minimizing_verified() {
        return Err(Error::OutwardMinimizingUnverified { h: slice.h });
    }
    let nf = n.as_f64();
    let c = n.constants();
    Ok(slice.total_mean_curvature - 0.5 * c.c_n * (slice.volume / c.omega).powf((nf - 2.0) / (nf - 1.0)))
}

/// `V' - alpha^(-1) [int H - (1 + alpha^(-2)) C_n m]` from slice data.
pub fn eq3_residual(n: Dimension, volume_derivative: f64, total_mean_curvature: f64, alpha: f64, m: f64) -> f64 {
    let c = n.constants();
    volume_derivative - (total_mean_curvature - (1.0 + alpha.powi(-2)) * c.c_n * m) / alpha
}

pub fn volume_inequality_residual(f: &dyn GraphFunction, h: f64, gradient_threshold: f64, m: f64) -> Result<f64> {
    if !(gradient_threshold > 0.0) {
        return Err(Error::InvalidParameter("gradient threshold must be positive".into()));
    }
    let s = level_volume(f, h)?;
    if !s.regular {
        return Err(Error::CriticalValue { h, min_gradient: s.min_abs_gradient });
    }
    Ok(eq3_residual(f.dim(), s.volume_derivative, s.total_mean_curvature, gradient_threshold, m))
}

/// `(1/2m)(V/omega)^((n-2)/(n-1)) - 1`.
fn volume_bracket(n: Dimension, v: f64, m: f64) -> f64 {
    let nf = n.as_f64();
    (v / n.constants().omega).powf((nf - 2.0) / (nf - 1.0)) / (2.0 * m) - 1.0
}

/// Maximizer in `alpha` of the right side of the first volume inequality.
pub fn optimal_alpha(v: f64, m: f64, n: Dimension) -> Result<f64> {
    let b = volume_bracket(n, v, m);
    if !(b > 0.0) {
        return Err(Error::Range(format!("volume {v} not above the horizon area")));
    }
    Ok(3f64.sqrt() / b.sqrt())
}

/// `C_n (2m/(3 sqrt 3)) [(1/2m)(V/omega)^((n-2)/(n-1)) - 1]^(3/2)`.
pub fn eq4_rhs(n: Dimension, v: f64, m: f64) -> Result<f64> {
    let b = volume_bracket(n, v, m);
    if b < -1e-14 {
        return Err(Error::Range(format!("volume {v} below the horizon area")));
    }
    Ok(n.constants().c_n * 2.0 * m / (3.0 * 3f64.sqrt()) * b.max(0.0).powf(1.5))
}

pub fn volume2_residual(f: &dyn GraphFunction, h: f64, m: f64) -> Result<f64> {
    let s = level_volume(f, h)?;
    if !s.regular {
        return Err(Error::CriticalValue { h, min_gradient: s.min_abs_gradient });
    }
    if !s.strict_mean_convex || !s.outward_minimizing_verified() {
        return Err(Error::OutwardMinimizingUnverified { h });
    }
    Ok(s.volume_derivative - eq4_rhs(f.dim(), s.volume, m)?)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{EllipticParaboloid, Plane, RotationalGraph};
    use crate::schwarzschild::SchwarzschildProfile;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn round_slice_is_minkowski_equality() {
        for n in 3..=7 {
            let g = RotationalGraph::new(dim(n), Arc::new(SchwarzschildProfile::new(dim(n), 1.0).unwrap())).unwrap();
            let h = 1.3f64.min(0.5 * g.sup_height());
            let s = level_volume(&g, h).unwrap();
            assert!(minkowski_gap(&s, dim(n)).unwrap().abs() < 1e-10 * s.total_mean_curvature);
        }
    }

    #[test]
    fn schwarzschild_h_zero_closed_form() {
        let g = RotationalGraph::new(dim(3), Arc::new(SchwarzschildProfile::new(dim(3), 1.0).unwrap())).unwrap();
        let h0 = h_zero(&g, 1.0).unwrap();
        let expect = (8.0 * (2.0 * 2f64.sqrt() - 2.0)).sqrt();
        assert!((h0 - expect).abs() < 1e-12);
    }

    #[test]
    fn optimal_alpha_at_threshold() {
        let n = dim(3);
        let v = h_zero_threshold(n, 1.0);
        let a = optimal_alpha(v, 1.0, n).unwrap();
        assert!((a - 3f64.sqrt() / (2f64.sqrt() - 1.0).sqrt()).abs() < 1e-12);
        assert!(optimal_alpha(0.5 * v, 1.0, n).is_err());
    }

    #[test]
    fn paraboloid_coarea_matches_ellipsoid_area() {
        // a = (1,1,1): sphere of radius sqrt(2h)
        let g = EllipticParaboloid::new(dim(3), vec![1.0, 1.0, 1.0]).unwrap();
        let s = level_volume(&g, 2.0).unwrap();
        let exact = 4.0 * std::f64::consts::PI * 4.0;
        assert!((s.volume - exact).abs() < 1e-6 * exact, "{}", s.volume);
        assert_eq!(s.convexity, Convexity::Convex);
    }

    #[test]
    fn plane_has_no_regular_levels() {
        let p = Plane::new(dim(3), 0.0);
        assert!(level_volume(&p, 0.5).is_err());
        assert!(h_zero(&p, 1.0).is_err());
    }
}
