use serde::Serialize;

use super::SchwarzschildProfile;
use crate::error::{Error, Result};
use crate::geometry::{halton_points, norm, GraphFunction, RadialProfile};

/// Outcome of fitting `f ~ Lambda + S_m(|x|)` and testing the decay envelope.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticCheck {
    pub passed: bool,
    pub lambda: f64,
    /// `max |f - Lambda - S_m| / (gamma |x|^alpha)` over the samples.
    pub worst_ratio: f64,
    pub worst_radius: f64,
    pub samples: usize,
}

fn directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    halton_points(n, 4 * count)
        .into_iter()
        .map(|p| p.iter().map(|t| 2.0 * t - 1.0).collect::<Vec<f64>>())
        .filter(|d| norm(d) > 0.1)
        .take(count)
        .map(|d| {
            let l = norm(&d);
            d.into_iter().map(|v| v / l).collect()
        })
        .collect()
}

/// Checks `|f(x) - (Lambda + S_m(|x|))| <= gamma |x|^alpha` on `r0 < |x| <= r_check`,
/// with `Lambda` the median of `f - S_m` on the outer quarter of the range.
pub fn asymptotic_schwarzschild_check(
    f: &dyn GraphFunction,
    m: f64,
    r0: f64,
    gamma: f64,
    alpha: f64,
    r_check: f64,
) -> Result<AsymptoticCheck> {
    let n = f.dim();
    if !(alpha < 2.0 - 0.5 * n.as_f64()) {
        return Err(Error::InvalidParameter(format!(
            "decay exponent {alpha} must be below {}",
            2.0 - 0.5 * n.as_f64()
        )));
    }
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {m} must be positive")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma {gamma} must be positive")));
    }
    let s = SchwarzschildProfile::new(n, m)?;
    let r_lo = r0.max(s.horizon_radius).max(f.core_radius());
    if !(r_check > 4.0 * r_lo) {
        return Err(Error::InvalidParameter(format!("check radius {r_check} too small")));
    }
    let dirs = directions(n.get(), 16);
    let residual = |r: f64, d: &[f64]| -> Result<f64> {
        let x: Vec<f64> = d.iter().map(|v| v * r).collect();
        Ok(f.value(&x)? - s.height(r)?)
    };

    let mut fit = Vec::new();
    for i in 0..32 {
        let r = r_check * 0.25f64.powf(i as f64 / 31.0);
        for d in &dirs {
            fit.push(residual(r, d)?);
        }
    }
    fit.sort_by(f64::total_cmp);
    let lambda = 0.5 * (fit[fit.len() / 2 - 1] + fit[fit.len() / 2]);

    let mut worst_ratio: f64 = 0.0;
    let mut worst_radius = r_lo;
    let count = 200;
    for i in 1..=count {
        let r = r_lo * (r_check / r_lo).powf(i as f64 / count as f64);
        let env = gamma * r.powf(alpha);
        for d in &dirs {
            let ratio = (residual(r, d)? - lambda).abs() / env;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst_radius = r;
            }
        }
    }
    Ok(AsymptoticCheck {
        passed: worst_ratio <= 1.0,
        lambda,
        worst_ratio,
        worst_radius,
        samples: count * dirs.len(),
    })
}
