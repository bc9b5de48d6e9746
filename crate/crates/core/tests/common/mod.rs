//! Fixtures shared by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use graphmass::comparison::AsymptoticProfile;
use graphmass::geometry::{RotationalGraph, ScaledProfile};
use graphmass::schwarzschild::{profile_from_mass, MassLaw, MassProfile, MassRadialProfile, SchwarzschildProfile};
use graphmass::{Dimension, GraphFunction, RadialProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dim(n: usize) -> Dimension {
    Dimension::new(n).unwrap()
}

pub fn schwarzschild(n: usize, m: f64) -> Arc<RotationalGraph> {
    let p = SchwarzschildProfile::new(dim(n), m).unwrap();
    Arc::new(RotationalGraph::new(dim(n), Arc::new(p)).unwrap())
}

pub fn rotational(n: usize, p: Arc<dyn RadialProfile>) -> Arc<RotationalGraph> {
    Arc::new(RotationalGraph::new(dim(n), p).unwrap())
}

/// Unit-mass profile with a minimal boundary at `r = 1` that settles exponentially.
pub fn unit_mass_base(n: usize) -> Arc<MassRadialProfile> {
    let law = MassLaw::ExpApproach { m_start: 0.5, m_total: 1.0, width: 2.0 };
    Arc::new(profile_from_mass(MassProfile::new(law, 1.0), dim(n)).unwrap())
}

/// `m^(1/(n-2)) u(x / m^(1/(n-2)))`, a graph of mass `m`.
pub fn scaled_member(n: usize, base: &Arc<MassRadialProfile>, m: f64) -> Arc<RotationalGraph> {
    let lambda = m.powf(-1.0 / (n as f64 - 2.0));
    rotational(n, Arc::new(ScaledProfile { inner: base.clone(), lambda, shift: 0.0 }))
}

pub const FAMILY_DECAY: f64 = -0.5;
pub const FAMILY_R0: f64 = 4.0;

/// Uniform decay data for the scaled family: `gamma` is 1.5 times the worst
/// ratio measured on the unit-mass member, which dominates the smaller ones.
pub fn family_profile(n: usize, base: &Arc<MassRadialProfile>, m: f64) -> AsymptoticProfile {
    let unit = scaled_member(n, base, 1.0);
    let (_, probe) = AsymptoticProfile::fit(unit.as_ref(), 1.0, FAMILY_R0, 1.0, FAMILY_DECAY, 1e4).unwrap();
    let gamma = 1.5 * probe.worst_ratio.max(1e-12);
    let member = scaled_member(n, base, m);
    let (ap, check) = AsymptoticProfile::fit(member.as_ref(), m, FAMILY_R0, gamma, FAMILY_DECAY, 1e4).unwrap();
    assert!(check.passed, "decay envelope fails for m = {m}");
    ap
}

/// A random nondecreasing mass law with a minimal boundary, staying strictly sub-horizon.
pub fn random_mass_profile(n: usize, rng: &mut ChaCha8Rng) -> MassRadialProfile {
    let k = n as f64 - 2.0;
    loop {
        let r_min = rng.gen_range(0.5..1.5);
        let m_start = 0.5 * f64::powf(r_min, k);
        // the boundary slope of m must stay below that of r^k/2
        let slope_cap = 0.25 * k * f64::powf(r_min, k - 1.0);
        let law = if rng.gen_bool(0.5) {
            let m_total = m_start * rng.gen_range(1.2..3.0);
            let width = (m_total - m_start) / slope_cap * rng.gen_range(1.0..2.0);
            MassLaw::ExpApproach { m_start, m_total, width: width.max(0.2 * r_min) }
        } else {
            let terms: Vec<_> = (0..2)
                .map(|_| graphmass::schwarzschild::TanhTerm {
                    weight: m_start * rng.gen_range(0.1..1.0),
                    center: r_min * rng.gen_range(1.5..4.0),
                    width: r_min * rng.gen_range(0.3..1.0),
                })
                .collect();
            let lift: f64 = terms
                .iter()
                .map(|t| 0.5 * t.weight * (1.0 + ((r_min - t.center) / t.width).tanh()))
                .sum();
            MassLaw::TanhMix { m0: m_start - lift, terms }
        };
        if let Ok(p) = profile_from_mass(MassProfile::new(law, r_min), dim(n)) {
            let bounded = p.sup_height().is_finite() || n < 5;
            if p.nondecreasing() && bounded {
                return p;
            }
        }
    }
}

/// Point in the shell `r_lo <= |x| <= r_hi` with uniform direction and uniform radius.
pub fn shell_point(n: usize, r_lo: f64, r_hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let l = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if l > 0.05 && l <= 1.0 {
            let r = rng.gen_range(r_lo..r_hi);
            return v.into_iter().map(|a| a / l * r).collect();
        }
    }
}

/// Independent unit sphere area `2 pi^(n/2) / Gamma(n/2)`.
pub fn omega_oracle(n: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0)
}

pub fn graph(g: Arc<RotationalGraph>) -> Arc<dyn GraphFunction> {
    g
}
