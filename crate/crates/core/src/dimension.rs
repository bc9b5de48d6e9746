//! Domain dimension and the dimensional constants that appear throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported domain dimension. Product quadrature on the sphere
/// scales exponentially, so the cap keeps flux evaluation tractable.
pub const MAX_DIM: usize = 7;

/// Dimension `n` of the graph's domain `R^n`; the graph lives in `R^(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(n: usize) -> Result<Self> {
        if (3..=MAX_DIM).contains(&n) {
            Ok(Self(n))
        } else {
            Err(Error::Dimension(n))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// `n - 2`, the decay exponent of the Schwarzschild mass term.
    pub fn k(self) -> f64 {
        self.0 as f64 - 2.0
    }

    pub fn constants(self) -> Constants {
        Constants::for_dim(self)
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Dimension::new(n)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `Gamma(k/2)` for a positive integer `k`, exact up to rounding.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Area of the unit `(d-1)`-sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(d: usize) -> f64 {
    if d == 0 {
        return 1.0;
    }
    sphere_area(d) / d as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    /// Area of the unit `(n-1)`-sphere.
    pub omega: f64,
    /// `2 (n-1) omega`, the normalization of the mass flux.
    pub c_n: f64,
    /// Volume of the unit `n`-ball.
    pub beta: f64,
}

impl Constants {
    pub fn for_dim(n: Dimension) -> Self {
        let omega = sphere_area(n.get());
        Self {
            omega,
            c_n: 2.0 * (n.as_f64() - 1.0) * omega,
            beta: omega / n.as_f64(),
        }
    }
}

/// Largest `|E|` for a set with perimeter `perimeter` in `R^n` (sharp isoperimetric inequality).
pub fn isoperimetric_volume(n: Dimension, perimeter: f64) -> f64 {
    let nf = n.as_f64();
    let beta = ball_volume(n.get());
    (perimeter / (nf * beta.powf(1.0 / nf))).powf(nf / (nf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(Dimension::new(2).is_err());
        assert!(Dimension::new(8).is_err());
        assert!(Dimension::new(3).is_ok());
    }

    #[test]
    fn low_dimensional_spheres() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        let c = Dimension::new(3).unwrap().constants();
        assert!((c.c_n - 16.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn isoperimetric_is_sharp_on_balls() {
        for n in 3..=7 {
            let d = Dimension::new(n).unwrap();
            let r: f64 = 1.7;
            let per = sphere_area(n) * r.powi(n as i32 - 1);
            let vol = ball_volume(n) * r.powi(n as i32);
            assert!((isoperimetric_volume(d, per) - vol).abs() < 1e-10 * vol);
        }
    }
}
