use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;

type Slope = dyn Fn(f64) -> f64 + Send + Sync;

/// Cumulative integral `u(r_min + d) = int_0^d u'` on a geometric grid of
/// offsets, so heights cost one short quadrature on a single panel.
#[derive(Clone)]
pub struct HeightTable {
    r_min: f64,
    offsets: Vec<f64>,
    cumulative: Vec<f64>,
    /// `u'` as a function of the offset `d = r - r_min`.
    slope: Arc<Slope>,
}

impl std::fmt::Debug for HeightTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeightTable")
            .field("r_min", &self.r_min)
            .field("panels", &self.offsets.len())
            .finish()
    }
}

const RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)

impl HeightTable {
    pub fn build(r_min: f64, r_end: f64, slope: Arc<Slope>) -> Result<Self> {
        let scale = r_min.max(1.0);
        let mut offsets = vec![0.0];
        let mut d = 1e-3 * scale;
        while r_min + d < r_end {
            offsets.push(d);
            d *= RATIO;
        }
        offsets.push(r_end - r_min);
        let panels: Vec<(f64, f64)> = offsets.windows(2).map(|w| (w[0], w[1])).collect();
        let mut cumulative = Vec::with_capacity(offsets.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (i, (a, b)) in panels.into_iter().enumerate() {
            acc += panel(slope.as_ref(), i == 0, a, b)?;
            cumulative.push(acc);
        }
        Ok(Self { r_min, offsets, cumulative, slope })
    }

    pub fn r_end(&self) -> f64 {
        self.r_min + *self.offsets.last().expect("nonempty")
    }

    pub fn height_at_end(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn height(&self, r: f64) -> Result<f64> {
        let d = r - self.r_min;
        if d < 0.0 {
            return Err(Error::DomainViolation { radius: r });
        }
        let last = self.offsets.len() - 1;
        if d >= self.offsets[last] {
            let extra = quad::adaptive(
                |s| {
                    let rho = s.exp();
                    rho * (self.slope)(rho - self.r_min)
                },
                self.r_end().ln(),
                r.ln(),
                1e-15,
                1e-13,
            )?;
            return Ok(self.cumulative[last] + extra.value);
        }
        let i = self.offsets.partition_point(|&o| o <= d) - 1;
        Ok(self.cumulative[i] + panel(self.slope.as_ref(), i == 0, self.offsets[i], d)?)
    }

    /// Inverse of `height` within the table range.
    pub fn radius_at(&self, h: f64) -> Result<f64> {
        if h <= 0.0 {
            return Ok(self.r_min);
        }
        let last = self.cumulative.len() - 1;
        if h > self.cumulative[last] {
            return Err(Error::Range(format!("height {h} beyond tabulated range")));
        }
        let i = self.cumulative.partition_point(|&c| c < h).max(1);
        let (lo, hi) = (self.r_min + self.offsets[i - 1], self.r_min + self.offsets[i]);
        let mut err = None;
        let r = quad::brent(
            |r| match self.height(r) {
                Ok(v) => v - h,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            lo,
            hi,
            1e-15 * hi,
        )?;
        err.map_or(Ok(r), Err)
    }
}

fn panel(slope: &Slope, singular: bool, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let tol = 1e-15 * (b - a).max(1e-300);
    if singular {
        // u' may blow up like d^(-1/2) at the inner boundary
        Ok(quad::sqrt_singular(slope, a, b, tol, 1e-14)?.value)
    } else {
        Ok(quad::adaptive(slope, a, b, tol, 1e-14)?.value)
    }
}
