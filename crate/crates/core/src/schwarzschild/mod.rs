//! Schwarzschild graphs and rotationally symmetric graphs generated from
//! quasi-local mass profiles.

mod asymptotic;
mod mass_profile;
mod table;

use serde::Serialize;

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::geometry::{default_radius_at_height, ProfileSource, RadialProfile};
use crate::quad;

pub use asymptotic::{asymptotic_schwarzschild_check, AsymptoticCheck};
pub use mass_profile::{profile_from_mass, MassLaw, MassProfile, MassRadialProfile, Pchip, TanhTerm};
pub use table::HeightTable;

pub fn horizon_radius(n: Dimension, m: f64) -> f64 {
    (2.0 * m).powf(1.0 / n.k())
}

/// `r^(n-2)/(2m) - 1` evaluated from the offset `d = r - r_h` without cancellation.
fn excess(k: f64, r_h: f64, d: f64) -> f64 {
    (k * (d / r_h).ln_1p()).exp_m1()
}

fn check_mass(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mass {m} must be positive")))
    }
}

/// `S_m(r)`, normalized to vanish on the horizon.
pub fn schwarzschild_height(n: Dimension, m: f64, r: f64) -> Result<f64> {
    check_mass(m)?;
    let r_h = horizon_radius(n, m);
    if r < r_h {
        return Err(Error::BelowHorizon { r, horizon: r_h });
    }
    match n.get() {
        3 => Ok((8.0 * m * (r - 2.0 * m)).max(0.0).sqrt()),
        4 => {
            let s = (2.0 * m).sqrt();
            Ok(s * (r / s).max(1.0).acosh())
        }
        _ => {
            let near = near_horizon_integral(n, m, r.min(2.0 * r_h))?;
            if r <= 2.0 * r_h {
                return Ok(near);
            }
            let (t_in, _) = schwarzschild_tail(n, m, 2.0 * r_h)?;
            let (t_out, _) = schwarzschild_tail(n, m, r)?;
            Ok(near + (t_in - t_out))
        }
    }
}

/// `int_{r_h}^{r} S_m'` by direct quadrature (valid in every dimension).
pub fn height_by_quadrature(n: Dimension, m: f64, r: f64) -> Result<f64> {
    check_mass(m)?;
    let r_h = horizon_radius(n, m);
    if r < r_h {
        return Err(Error::BelowHorizon { r, horizon: r_h });
    }
    let near = near_horizon_integral(n, m, r.min(2.0 * r_h))?;
    if r <= 2.0 * r_h {
        return Ok(near);
    }
    let k = n.k();
    let far = quad::adaptive(
        |s| {
            let rho = s.exp();
            rho / (rho.powf(k) / (2.0 * m) - 1.0).sqrt()
        },
        (2.0 * r_h).ln(),
        r.ln(),
        1e-15 * r_h,
        1e-13,
    )?;
    Ok(near + far.value)
}

/// `int_{r_h}^{b} S_m'` for `b <= 2 r_h`, with `rho = r_h + t^2`.
fn near_horizon_integral(n: Dimension, m: f64, b: f64) -> Result<f64> {
    let r_h = horizon_radius(n, m);
    let k = n.k();
    let tmax = (b - r_h).max(0.0).sqrt();
    if tmax == 0.0 {
        return Ok(0.0);
    }
    let v = quad::adaptive(
        |t| {
            if t == 0.0 {
                2.0 * (r_h / k).sqrt()
            } else {
                2.0 * t / excess(k, r_h, t * t).sqrt()
            }
        },
        0.0,
        tmax,
        1e-15 * r_h,
        1e-14,
    )?;
    Ok(v.value)
}

/// `int_R^inf S_m'` for `n >= 5` by the binomial series of
/// `(1 - 2m rho^(2-n))^(-1/2)`; returns the value and a bound on the dropped terms.
pub fn schwarzschild_tail(n: Dimension, m: f64, big_r: f64) -> Result<(f64, f64)> {
    if n.get() < 5 {
        return Err(Error::Divergent(n.get()));
    }
    let k = n.k();
    let y = 2.0 * m * big_r.powf(-k);
    if !(y < 1.0) {
        return Err(Error::BelowHorizon { r: big_r, horizon: horizon_radius(n, m) });
    }
    let lead = (2.0 * m).sqrt() * big_r.powf(1.0 - 0.5 * k);
    let mut coeff = 1.0; // binom(2j, j) / 4^j
    let mut yj = 1.0;
    let mut sum = 0.0;
    let mut j = 0usize;
    loop {
        let jf = j as f64;
        let term = coeff * yj / (0.5 * k + jf * k - 1.0);
        sum += term;
        // dropped terms are bounded by a geometric series in y
        let next_coeff = coeff * (2.0 * jf + 1.0) / (2.0 * jf + 2.0);
        let bound = lead * next_coeff * yj * y / ((0.5 * k + (jf + 1.0) * k - 1.0) * (1.0 - y));
        if bound <= 1e-17 * sum || j > 400 {
            return Ok((lead * sum, bound));
        }
        coeff = next_coeff;
        yj *= y;
        j += 1;
    }
}

/// Value of `S_inf` with the truncation data used to certify it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SupCertificate {
    pub value: f64,
    /// Radius beyond which the tail is summed analytically.
    pub truncation_radius: f64,
    pub tail_value: f64,
    /// Bound on the neglected part of the tail series.
    pub tail_bound: f64,
    /// Error estimate of the near-horizon quadrature.
    pub quadrature_error: f64,
}

/// `S_inf = lim S_m(r)` for `n >= 5`.
pub fn schwarzschild_sup(n: Dimension, m: f64) -> Result<SupCertificate> {
    check_mass(m)?;
    if n.get() < 5 {
        return Err(Error::Divergent(n.get()));
    }
    let r_h = horizon_radius(n, m);
    let big_r = 2.0 * r_h;
    let near = near_horizon_integral(n, m, big_r)?;
    let (tail_value, tail_bound) = schwarzschild_tail(n, m, big_r)?;
    Ok(SupCertificate {
        value: near + tail_value,
        truncation_radius: big_r,
        tail_value,
        tail_bound,
        quadrature_error: 1e-14 * near,
    })
}

/// `[S', S'', S''']` at `r > r_h`.
pub fn schwarzschild_derivatives(n: Dimension, m: f64, r: f64) -> Result<[f64; 3]> {
    let r_h = horizon_radius(n, m);
    if r <= r_h {
        return Err(Error::BelowHorizon { r, horizon: r_h });
    }
    let k = n.k();
    let x1 = excess(k, r_h, r - r_h);
    let x = x1 + 1.0;
    let dx = k * x / r;
    let ddx = k * (k - 1.0) * x / (r * r);
    let s1 = x1.powf(-0.5);
    let s2 = -0.5 * x1.powf(-1.5) * dx;
    let s3 = 0.75 * x1.powf(-2.5) * dx * dx - 0.5 * x1.powf(-1.5) * ddx;
    Ok([s1, s2, s3])
}

/// Radial profile of the Schwarzschild graph with horizon at `r_min`.
#[derive(Debug, Clone)]
pub struct SchwarzschildProfile {
    pub n: Dimension,
    pub m: f64,
    pub horizon_radius: f64,
    /// `S_inf` for `n >= 5`, `+inf` otherwise.
    pub sup_height: f64,
    /// `S_m(2 r_h)` and the series tail there, cached for `n >= 5`.
    near: f64,
    tail_at_near: f64,
}

impl SchwarzschildProfile {
    pub fn new(n: Dimension, m: f64) -> Result<Self> {
        check_mass(m)?;
        let r_h = horizon_radius(n, m);
        let (sup, near, tail) = if n.get() >= 5 {
            let c = schwarzschild_sup(n, m)?;
            (c.value, c.value - c.tail_value, c.tail_value)
        } else {
            (f64::INFINITY, 0.0, 0.0)
        };
        Ok(Self { n, m, horizon_radius: r_h, sup_height: sup, near, tail_at_near: tail })
    }
}

impl RadialProfile for SchwarzschildProfile {
    fn r_min(&self) -> f64 {
        self.horizon_radius
    }

    fn height(&self, r: f64) -> Result<f64> {
        if self.n.get() >= 5 && r > 2.0 * self.horizon_radius {
            let (t, _) = schwarzschild_tail(self.n, self.m, r)?;
            return Ok(self.near + (self.tail_at_near - t));
        }
        schwarzschild_height(self.n, self.m, r)
    }

    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        schwarzschild_derivatives(self.n, self.m, r)
    }

    fn sup_height(&self) -> f64 {
        self.sup_height
    }

    fn minimal_boundary(&self) -> bool {
        true
    }

    fn source(&self) -> ProfileSource {
        ProfileSource::Schwarzschild
    }

    fn radius_at_height(&self, h: f64) -> Result<f64> {
        let m = self.m;
        if h <= 0.0 {
            return Ok(self.horizon_radius);
        }
        match self.n.get() {
            3 => Ok(2.0 * m + h * h / (8.0 * m)),
            4 => {
                let s = (2.0 * m).sqrt();
                Ok(s * (h / s).cosh())
            }
            _ => default_radius_at_height(self, h),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert!((schwarzschild_height(dim(3), 0.5, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(schwarzschild_height(dim(4), 0.5, 1.0).unwrap(), 0.0);
        assert!(schwarzschild_height(dim(3), 1.0, 1.0).is_err());
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for n in [3, 4] {
            for r in [1.01, 2.5, 7.0, 300.0] {
                let m = 0.5;
                let a = schwarzschild_height(dim(n), m, r).unwrap();
                let b = height_by_quadrature(dim(n), m, r).unwrap();
                assert!((a - b).abs() <= 1e-10 * (1.0 + a), "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn series_route_matches_quadrature() {
        for n in 5..=7 {
            for r in [1.5, 3.0, 40.0] {
                let a = schwarzschild_height(dim(n), 0.7, r).unwrap();
                let b = height_by_quadrature(dim(n), 0.7, r).unwrap();
                assert!((a - b).abs() <= 1e-11 * (1.0 + a), "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn sup_requires_high_dimension() {
        assert_eq!(schwarzschild_sup(dim(4), 1.0).unwrap_err(), Error::Divergent(4));
    }

    #[test]
    fn derivatives_match_differences() {
        for n in 3..=7 {
            let p = SchwarzschildProfile::new(dim(n), 0.8).unwrap();
            let r = 1.7 * p.horizon_radius;
            let h = 1e-5 * r;
            let d = p.derivatives(r).unwrap();
            let dp = p.derivatives(r + h).unwrap();
            let dm = p.derivatives(r - h).unwrap();
            let fd1 = (p.height(r + h).unwrap() - p.height(r - h).unwrap()) / (2.0 * h);
            assert!((fd1 - d[0]).abs() < 1e-7 * d[0].abs().max(1.0));
            assert!(((dp[0] - dm[0]) / (2.0 * h) - d[1]).abs() < 1e-6 * d[1].abs().max(1.0));
            assert!(((dp[1] - dm[1]) / (2.0 * h) - d[2]).abs() < 1e-6 * d[2].abs().max(1.0));
        }
    }

    #[test]
    fn inverse_height() {
        for n in 3..=6 {
            let p = SchwarzschildProfile::new(dim(n), 1.3).unwrap();
            let r = 2.9 * p.horizon_radius;
            let h = p.height(r).unwrap();
            assert!((p.radius_at_height(h).unwrap() - r).abs() < 1e-9 * r);
        }
    }
}
