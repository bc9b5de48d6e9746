//! ADM mass from the flux integral, quasi-local mass of level sets and the
//! identity relating them to the integrated scalar curvature.

use serde::Serialize;

use crate::dimension::{Constants, Dimension};
use crate::error::{Error, Result};
use crate::geometry::{
    levelset_h_from_jet, norm, reilly_from_jet, GraphFunction, Jet, RadialProfile, GRADIENT_FLOOR,
};
use crate::levelsets::{coarea_integral, CoareaOptions};
use crate::quad;

/// Absolute tolerance for the sphere quadrature of one flux value.
pub const FLUX_QUADRATURE_TOL: f64 = 1e-10;

fn flux_density(j: &Jet, nu: &[f64]) -> f64 {
    let n = j.n;
    let lap = j.laplacian();
    let mut s = 0.0;
    for a in 0..n {
        let mut hg = 0.0;
        for b in 0..n {
            hg += j.hess[a][b] * j.grad[b];
        }
        s += (lap * j.grad[a] - hg) * nu[a];
    }
    s / (1.0 + j.grad_sq())
}

fn sphere_clear_of_holes(f: &dyn GraphFunction, r: f64) -> Result<()> {
    for b in f.kind().balls() {
        let c = norm(&b.center);
        if (r - c).abs() <= b.radius {
            return Err(Error::DomainViolation { radius: r });
        }
    }
    Ok(())
}

/// Flux integral over `|x| = r`, normalized by `C_n` so that its limit is the mass.
pub fn mass_flux(f: &dyn GraphFunction, r: f64) -> Result<f64> {
    sphere_clear_of_holes(f, r)?;
    let n = f.dim();
    let c = n.constants();
    let scale = r.powi(n.get() as i32 - 1) / c.c_n;
    let (v, _) = quad::sphere_integral_converged(n.get(), FLUX_QUADRATURE_TOL / scale.max(1e-300), |nu| {
        let x: Vec<f64> = nu.iter().map(|v| v * r).collect();
        Ok(flux_density(&f.jet(&x, 2)?, nu))
    })?;
    Ok(v * scale)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LadderOptions {
    /// Radius of the region the ladder must clear, besides the excised balls.
    pub r0: f64,
    pub max_doublings: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { r0: 0.0, max_doublings: 40, abs_tol: 1e-8, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FluxSeries {
    pub radii: Vec<f64>,
    #[serde(rename = "flux")]
    pub flux_values: Vec<f64>,
    /// Aitken-extrapolated limit, absent when the ladder did not settle.
    #[serde(rename = "mass")]
    pub converged_mass: Option<f64>,
    pub monotone: bool,
    /// Successive differences of the flux values.
    pub residuals: Vec<f64>,
    pub convergence_certificate: String,
}

impl FluxSeries {
    pub fn mass(&self) -> Result<f64> {
        self.converged_mass.ok_or(Error::NotConverged { steps: self.radii.len() })
    }

    pub fn final_radius(&self) -> f64 {
        *self.radii.last().expect("nonempty ladder")
    }
}

/// Flux on the ladder `r_k = r_start 2^k`; converged once three successive values agree.
pub fn adm_mass(f: &dyn GraphFunction, opts: &LadderOptions) -> Result<FluxSeries> {
    let r_start = 2.0 * f.core_radius().max(opts.r0).max(1.0);
    let mut radii = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut converged = None;
    let mut certificate = String::new();
    for k in 0..=opts.max_doublings {
        let r = r_start * 2f64.powi(k as i32);
        let v = mass_flux(f, r)?;
        radii.push(r);
        vals.push(v);
        let len = vals.len();
        if len >= 3 {
            let tol = opts.abs_tol.max(opts.rel_tol * v.abs());
            let d1 = vals[len - 1] - vals[len - 2];
            let d0 = vals[len - 2] - vals[len - 3];
            if d1.abs() <= tol && d0.abs() <= tol {
                let denom = d1 - d0;
                let aitken = if denom.abs() > 1e-300 && (d1 / d0).abs() < 0.9 && d0 != 0.0 {
                    vals[len - 1] - d1 * d1 / denom
                } else {
                    vals[len - 1]
                };
                // extrapolation may not move farther than the last increment
                let m = if (aitken - vals[len - 1]).abs() <= d1.abs().max(tol) { aitken } else { vals[len - 1] };
                certificate = format!(
                    "three successive values within {tol:e} at r = {r:e}; Aitken step {:e}",
                    m - vals[len - 1]
                );
                converged = Some(m);
                break;
            }
        }
    }
    if converged.is_none() {
        certificate = format!("no agreement after {} doublings", opts.max_doublings);
    }
    let residuals: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = vals
        .windows(2)
        .all(|w| w[1] >= w[0] - 10.0 * FLUX_QUADRATURE_TOL * w[0].abs().max(1.0));
    Ok(FluxSeries {
        radii,
        flux_values: vals,
        converged_mass: converged,
        monotone,
        residuals,
        convergence_certificate: certificate,
    })
}

/// `(r^(n-2)/2) u'^2/(1+u'^2)` at radius `r` of a rotational profile.
pub fn radial_quasilocal_mass(n: Dimension, p: &dyn RadialProfile, r: f64) -> Result<f64> {
    let u1 = p.derivatives(r)?[0];
    let w = u1 * u1;
    Ok(0.5 * r.powf(n.k()) * w / (1.0 + w))
}

fn level_radius(p: &dyn RadialProfile, h: f64) -> Result<f64> {
    if h >= p.sup_height() {
        return Err(Error::AboveSupremum { h, h_max: p.sup_height() });
    }
    let r = p.radius_at_height(h)?;
    if r <= p.r_min() {
        return Err(Error::CriticalValue { h, min_gradient: 0.0 });
    }
    let g = p.derivatives(r)?[0];
    if g < GRADIENT_FLOOR {
        return Err(Error::CriticalValue { h, min_gradient: g });
    }
    Ok(r)
}

fn quasilocal_density(j: &Jet) -> Result<f64> {
    let g2 = j.grad_sq();
    Ok(g2 / (1.0 + g2) * levelset_h_from_jet(j)?)
}

/// `(1/C_n) int_{Sigma_h} |Df|^2/(1+|Df|^2) H_Sigma`.
pub fn quasilocal_mass(f: &dyn GraphFunction, h: f64) -> Result<f64> {
    let n = f.dim();
    if let Some(p) = f.radial() {
        let r = level_radius(p.as_ref(), h)?;
        return radial_quasilocal_mass(n, p.as_ref(), r);
    }
    let v = coarea_integral(f, h, &CoareaOptions::default(), |j| quasilocal_density(j))?;
    Ok(v / n.constants().c_n)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiLocalReport {
    pub h: f64,
    pub mass: f64,
    /// `int_{R^n \ Omega_h} R dx`, including the certified tail.
    pub interior_scalar_integral: f64,
    pub quasilocal_term: f64,
    pub identity_residual: f64,
    pub truncation_radius: f64,
    pub tail_bound: f64,
    /// `Some(q)` when the tail was certified from a fitted decay `|R| <= C r^(-q)`.
    pub fitted_decay: Option<f64>,
}

/// Scalar curvature with the magnitude of the terms it is assembled from.
fn curvature_and_scale(j: &Jet) -> (f64, f64) {
    let n = j.n;
    let mut h2 = 0.0;
    let mut t = 0.0;
    for a in 0..n {
        for b in 0..n {
            h2 += j.hess[a][b] * j.hess[a][b];
            for c in 0..n {
                t += j.third[a][b][c].abs();
            }
        }
    }
    (reilly_from_jet(j), h2 + t * j.grad_sq().sqrt())
}

/// Decay of the sphere-averaged `|R|` beyond `r_t`: `(bound, fitted exponent)`.
fn scalar_tail(f: &dyn GraphFunction, c: &Constants, r_t: f64) -> Result<(f64, Option<f64>)> {
    let n = f.dim().get();
    let rule = quad::sphere_rule(n, 4);
    let avg = |r: f64| -> Result<(f64, f64)> {
        let mut s = 0.0;
        let mut sc = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x: Vec<f64> = p[..n].iter().map(|v| v * r).collect();
            let (rr, scale) = curvature_and_scale(&f.jet(&x, 3)?);
            s += w * rr.abs();
            sc += w * scale;
        }
        Ok((s / c.omega, sc / c.omega))
    };
    let (a1, s1) = avg(0.5 * r_t)?;
    let (a2, s2) = avg(r_t)?;
    let roundoff = 1e3 * f64::EPSILON;
    if a2 <= roundoff * s2 && a1 <= roundoff * s1 {
        return Ok((0.0, None));
    }
    let p = (a2 / a1).ln() / 2f64.ln();
    let nf = n as f64;
    if !(p < -nf - 0.1) {
        return Err(Error::Uncertified(format!(
            "scalar curvature decays like r^{p:.3} near r = {r_t:e}, too slowly"
        )));
    }
    Ok((c.omega * a2 * r_t.powf(nf) / (-p - nf), Some(-p)))
}

/// Both sides of `C_n m = int_{R^n \ Omega_h} R + int_{Sigma_h} |Df|^2/(1+|Df|^2) H_Sigma`.
pub fn lam_identity_residual(f: &dyn GraphFunction, h: f64, series: &FluxSeries) -> Result<QuasiLocalReport> {
    lam_identity_residual_with(f, h, series, &CoareaOptions::default())
}

/// [`lam_identity_residual`] with explicit ray controls for non-rotational graphs.
pub fn lam_identity_residual_with(
    f: &dyn GraphFunction,
    h: f64,
    series: &FluxSeries,
    opts: &CoareaOptions,
) -> Result<QuasiLocalReport> {
    let m = series.mass()?;
    let n = f.dim();
    let nu = n.get();
    let c = n.constants();
    let r_t = series.final_radius().max(8.0 * f.core_radius().max(1.0));

    let (interior_inner, quasilocal_term) = if let Some(p) = f.radial() {
        let r = level_radius(p.as_ref(), h)?;
        // sphere quadrature of the level integrand, independent of the closed form;
        // the integrand is constant on the round level, so a coarse rule is exact
        let rule = quad::sphere_rule(nu, 3);
        let ql = rule.integrate(|e| {
            let x: Vec<f64> = e.iter().map(|v| v * r).collect();
            quasilocal_density(&f.jet(&x, 2)?)
        })? * r.powi(nu as i32 - 1);
        let radial = quad::adaptive(
            |s| {
                let rr = s.exp();
                let mut x = vec![0.0; nu];
                x[0] = rr;
                f.jet(&x, 3).map_or(f64::NAN, |j| reilly_from_jet(&j)) * rr.powi(nu as i32)
            },
            r.ln(),
            r_t.ln(),
            1e-13 * c.c_n * m.abs().max(1e-3),
            1e-11,
        )?;
        (c.omega * radial.value, ql)
    } else {
        let ql = coarea_integral(f, h, opts, |j| quasilocal_density(j))?;
        (crate::levelsets::exterior_integral(f, h, r_t, opts, |j| reilly_from_jet(j))?, ql)
    };
    let (tail_bound, fitted_decay) = scalar_tail(f, &c, r_t)?;
    let interior = interior_inner;
    Ok(QuasiLocalReport {
        h,
        mass: m,
        interior_scalar_integral: interior,
        quasilocal_term,
        identity_residual: (c.c_n * m - interior - quasilocal_term).abs(),
        truncation_radius: r_t,
        tail_bound,
        fitted_decay,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PenroseCheck {
    pub boundary_area: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|dOmega| <= omega (2m)^((n-1)/(n-2))` for minimal-boundary graphs.
pub fn penrose_check(f: &dyn GraphFunction, m: f64) -> PenroseCheck {
    let n = f.dim();
    let c = n.constants();
    let nf = n.as_f64();
    let area: f64 = f
        .kind()
        .balls()
        .iter()
        .map(|b| c.omega * b.radius.powf(nf - 1.0))
        .sum();
    let bound = c.omega * (2.0 * m).powf((nf - 1.0) / (nf - 2.0));
    PenroseCheck { boundary_area: area, bound, holds: area <= bound * (1.0 + 1e-6) }
}
