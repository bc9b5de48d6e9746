//! Closed-form radial profiles and profile transformations.

use std::sync::Arc;

use super::{ProfileSource, RadialProfile};
use crate::error::{Error, Result};

/// `u(r) = a r^2 / 2`.
#[derive(Debug, Clone, Copy)]
pub struct Paraboloid {
    pub a: f64,
}

impl RadialProfile for Paraboloid {
    fn r_min(&self) -> f64 {
        0.0
    }
    fn height(&self, r: f64) -> Result<f64> {
        Ok(0.5 * self.a * r * r)
    }
    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        Ok([self.a * r, self.a, 0.0])
    }
    fn sup_height(&self) -> f64 {
        f64::INFINITY
    }
    fn source(&self) -> ProfileSource {
        ProfileSource::Explicit
    }
    fn radius_at_height(&self, h: f64) -> Result<f64> {
        Ok((2.0 * h.max(0.0) / self.a).sqrt())
    }
}

/// Lower hemisphere `u(r) = -sqrt(R^2 - r^2)` on `r < R`.
#[derive(Debug, Clone, Copy)]
pub struct LowerHemisphere {
    pub radius: f64,
}

impl LowerHemisphere {
    fn check(&self, r: f64) -> Result<f64> {
        let d = self.radius * self.radius - r * r;
        if d <= 0.0 {
            return Err(Error::DomainViolation { radius: r });
        }
        Ok(d)
    }
}

impl RadialProfile for LowerHemisphere {
    fn r_min(&self) -> f64 {
        0.0
    }
    fn height(&self, r: f64) -> Result<f64> {
        Ok(-self.check(r)?.sqrt())
    }
    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        let d = self.check(r)?;
        let s = d.sqrt();
        let r2 = self.radius * self.radius;
        Ok([r / s, r2 / (d * s), 3.0 * r2 * r / (d * d * s)])
    }
    fn sup_height(&self) -> f64 {
        0.0
    }
    fn source(&self) -> ProfileSource {
        ProfileSource::Explicit
    }
}

/// `(u(lambda r) - shift) / lambda`.
#[derive(Debug, Clone)]
pub struct ScaledProfile {
    pub inner: Arc<dyn RadialProfile>,
    pub lambda: f64,
    pub shift: f64,
}

impl RadialProfile for ScaledProfile {
    fn r_min(&self) -> f64 {
        self.inner.r_min() / self.lambda
    }
    fn height(&self, r: f64) -> Result<f64> {
        Ok((self.inner.height(self.lambda * r)? - self.shift) / self.lambda)
    }
    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        let [a, b, c] = self.inner.derivatives(self.lambda * r)?;
        Ok([a, self.lambda * b, self.lambda * self.lambda * c])
    }
    fn sup_height(&self) -> f64 {
        (self.inner.sup_height() - self.shift) / self.lambda
    }
    fn minimal_boundary(&self) -> bool {
        self.inner.minimal_boundary()
    }
    fn source(&self) -> ProfileSource {
        self.inner.source()
    }
    fn radius_at_height(&self, h: f64) -> Result<f64> {
        Ok(self.inner.radius_at_height(self.lambda * h + self.shift)? / self.lambda)
    }
}

/// `u(r) + amplitude * r^exponent`, for testing decay envelopes.
#[derive(Debug, Clone)]
pub struct PowerPerturbed {
    pub inner: Arc<dyn RadialProfile>,
    pub amplitude: f64,
    pub exponent: f64,
}

impl RadialProfile for PowerPerturbed {
    fn r_min(&self) -> f64 {
        self.inner.r_min()
    }
    fn height(&self, r: f64) -> Result<f64> {
        Ok(self.inner.height(r)? + self.amplitude * r.powf(self.exponent))
    }
    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        let [a, b, c] = self.inner.derivatives(r)?;
        let (p, k) = (self.exponent, self.amplitude);
        Ok([
            a + k * p * r.powf(p - 1.0),
            b + k * p * (p - 1.0) * r.powf(p - 2.0),
            c + k * p * (p - 1.0) * (p - 2.0) * r.powf(p - 3.0),
        ])
    }
    fn sup_height(&self) -> f64 {
        let s = self.inner.sup_height();
        if self.exponent > 0.0 {
            if self.amplitude > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY }
        } else if self.exponent == 0.0 {
            s + self.amplitude
        } else {
            s
        }
    }
    fn minimal_boundary(&self) -> bool {
        self.inner.minimal_boundary()
    }
    fn source(&self) -> ProfileSource {
        ProfileSource::Explicit
    }
}
