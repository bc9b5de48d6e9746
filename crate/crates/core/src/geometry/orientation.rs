use serde::Serialize;

use super::{graph_mean_curvature, levelset_mean_curvature, norm, GraphFunction, GRADIENT_FLOOR};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Upward,
    Downward,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrientationReport {
    pub orientation: Orientation,
    pub samples: usize,
    pub min_mean_curvature: f64,
    pub max_mean_curvature: f64,
    /// Smallest level-set mean curvature over samples with `|Df| > GRADIENT_FLOOR`.
    pub min_levelset_curvature: f64,
}

const PRIMES: [u32; 7] = [2, 3, 5, 7, 11, 13, 17];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut v = 0.0;
    while i > 0 {
        v += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    v
}

/// First `count` points of the Halton sequence in `[0,1)^n` (index 0 skipped).
pub fn halton_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    (1..=count as u64)
        .map(|i| (0..n).map(|d| radical_inverse(i, PRIMES[d])).collect())
        .collect()
}

/// Halton points in the shell `inner < |x| < outer`, avoiding excised balls.
pub(crate) fn shell_samples(f: &dyn GraphFunction, inner: f64, outer: f64, count: usize) -> Vec<Vec<f64>> {
    let n = f.dim().get();
    let mut out = Vec::with_capacity(count);
    let mut idx = 0usize;
    let mut batch = 2 * count + 16;
    while out.len() < count {
        for p in halton_points(n + 1, idx + batch).into_iter().skip(idx) {
            let dir: Vec<f64> = p[..n].iter().map(|t| 2.0 * t - 1.0).collect();
            let len = norm(&dir);
            if !(0.05..=1.0).contains(&len) {
                continue;
            }
            let r = inner + (outer - inner) * p[n];
            let x: Vec<f64> = dir.iter().map(|d| d / len * r).collect();
            let near_hole = f
                .kind()
                .balls()
                .iter()
                .any(|b| b.contains(&x) || b.distance(&x) < b.radius * (1.0 + 1e-3));
            if !near_hole {
                out.push(x);
                if out.len() == count {
                    break;
                }
            }
        }
        idx += batch;
        batch *= 2;
    }
    out
}

/// Classify the mean-curvature direction from samples in `|x| < outer`.
/// All `|H| < tol` is undetermined, as is a sign change beyond `tol`.
pub fn classify_orientation(f: &dyn GraphFunction, outer: f64, count: usize, tol: f64) -> Result<OrientationReport> {
    let pts = shell_samples(f, 0.0, outer, count);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut lo_level = f64::INFINITY;
    for x in &pts {
        let h = graph_mean_curvature(f, x)?;
        lo = lo.min(h);
        hi = hi.max(h);
        if f.jet(x, 1)?.grad_sq().sqrt() > GRADIENT_FLOOR {
            lo_level = lo_level.min(levelset_mean_curvature(f, x)?);
        }
    }
    let orientation = if lo.abs() < tol && hi.abs() < tol {
        Orientation::Undetermined
    } else if lo >= -tol {
        Orientation::Upward
    } else if hi <= tol {
        Orientation::Downward
    } else {
        Orientation::Undetermined
    };
    Ok(OrientationReport {
        orientation,
        samples: pts.len(),
        min_mean_curvature: lo,
        max_mean_curvature: hi,
        min_levelset_curvature: lo_level,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityReport {
    pub radii: Vec<f64>,
    /// `max |Df|` on each sampled sphere.
    pub max_gradient: Vec<f64>,
    /// Oscillation of `f` on each sampled sphere.
    pub oscillation: Vec<f64>,
    pub gradient_decays: bool,
}

/// Samples `|Df|` and the oscillation of `f` on spheres of radius `r_k = r_start 4^k`.
pub fn check_asymptotic_flatness(f: &dyn GraphFunction, r_start: f64, levels: usize) -> Result<AdmissibilityReport> {
    let n = f.dim().get();
    let dirs: Vec<Vec<f64>> = halton_points(n, 64)
        .into_iter()
        .map(|p| p.iter().map(|t| 2.0 * t - 1.0).collect::<Vec<_>>())
        .filter(|d| norm(d) > 0.05)
        .map(|d| {
            let l = norm(&d);
            d.iter().map(|v| v / l).collect()
        })
        .collect();
    let mut radii = Vec::with_capacity(levels);
    let mut max_gradient = Vec::with_capacity(levels);
    let mut oscillation = Vec::with_capacity(levels);
    let start = r_start.max(2.0 * f.core_radius()).max(1.0);
    for k in 0..levels {
        let r = start * 4f64.powi(k as i32);
        let mut gmax: f64 = 0.0;
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let j = f.jet(&x, 1)?;
            gmax = gmax.max(j.grad_sq().sqrt());
            vmin = vmin.min(j.value);
            vmax = vmax.max(j.value);
        }
        radii.push(r);
        max_gradient.push(gmax);
        oscillation.push(vmax - vmin);
    }
    let gradient_decays = max_gradient.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12))
        && max_gradient.last().is_some_and(|g| *g < 0.5 * max_gradient[0].max(1e-300) || *g < 1e-12);
    Ok(AdmissibilityReport { radii, max_gradient, oscillation, gradient_decays })
}

/// Smallest `|Df|` sampled at relative distance `offset` outside each excised sphere.
/// Returns `None` for entire graphs.
pub fn check_minimal_boundary(f: &dyn GraphFunction, offset: f64) -> Result<Option<f64>> {
    let n = f.dim().get();
    let balls = f.kind().balls();
    if balls.is_empty() {
        return Ok(None);
    }
    let dirs: Vec<Vec<f64>> = halton_points(n, 48)
        .into_iter()
        .map(|p| p.iter().map(|t| 2.0 * t - 1.0).collect::<Vec<_>>())
        .filter(|d| norm(d) > 0.05)
        .collect();
    let mut gmin = f64::INFINITY;
    for b in balls {
        for d in &dirs {
            let l = norm(d);
            let x: Vec<f64> = (0..n)
                .map(|i| b.center[i] + d[i] / l * b.radius * (1.0 + offset))
                .collect();
            gmin = gmin.min(f.jet(&x, 1)?.grad_sq().sqrt());
        }
    }
    Ok(Some(gmin))
}
