use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::table::HeightTable;
use super::schwarzschild_tail;
use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::geometry::{ProfileSource, RadialProfile};
use crate::quad;

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant of mass samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Samples", into = "Samples")]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Samples {
    r: Vec<f64>,
    m: Vec<f64>,
}

impl TryFrom<Samples> for Pchip {
    type Error = Error;
    fn try_from(s: Samples) -> Result<Self> {
        Pchip::new(s.r, s.m)
    }
}

impl From<Pchip> for Samples {
    fn from(p: Pchip) -> Self {
        Samples { r: p.xs, m: p.ys }
    }
}

impl Pchip {
    /// Rejects non-increasing abscissae and decreasing samples.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidParameter("need at least two (r, m) samples".into()));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!("radii not strictly increasing at {}", w[1])));
            }
        }
        for (i, w) in ys.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::NonMonotone { r: xs[i + 1] });
            }
        }
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { xs, ys, ds })
    }

    /// Loads two-column `r, m` CSV; a non-numeric first row is taken as a header.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidParameter(format!("line {}: expected two columns", line + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(r), Ok(m)) => {
                    xs.push(r);
                    ys.push(m);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::InvalidParameter(format!("line {}: not a number", line + 1)))
                }
            }
        }
        Self::new(xs, ys)
    }

    pub fn first_radius(&self) -> f64 {
        self.xs[0]
    }

    pub fn last_value(&self) -> f64 {
        *self.ys.last().expect("nonempty")
    }

    /// `[m, m', m'']`; constant beyond the last sample.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let n = self.xs.len();
        if r >= self.xs[n - 1] {
            return [self.ys[n - 1], 0.0, 0.0];
        }
        let i = self.xs.partition_point(|&x| x <= r).clamp(1, n - 1) - 1;
        let h = self.xs[i + 1] - self.xs[i];
        let t = (r - self.xs[i]) / h;
        let (y0, y1, d0, d1) = (self.ys[i], self.ys[i + 1], self.ds[i] * h, self.ds[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * d1;
        let ddv = (12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * d0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * d1;
        [v, dv / h, ddv / (h * h)]
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TanhTerm {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

/// Closed-form mass laws `m(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum MassLaw {
    Constant { m: f64 },
    /// `m_total (1 - exp(-r / scale))`.
    Saturating { m_total: f64, scale: f64 },
    /// `m0 + sum w (1 + tanh((r - c)/s)) / 2`.
    TanhMix { m0: f64, terms: Vec<TanhTerm> },
    /// `m_total - (m_total - m_start) exp(-(r - r_min)/width)`; decreasing when `m_start > m_total`.
    ExpApproach { m_start: f64, m_total: f64, width: f64 },
    /// `m0 + rate log(r / r_min)`, unbounded.
    LogGrowth { m0: f64, rate: f64 },
    Tabulated { samples: Pchip },
}

/// A mass law on `[r_min, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassProfile {
    pub law: MassLaw,
    pub r_min: f64,
}

impl MassProfile {
    pub fn new(law: MassLaw, r_min: f64) -> Self {
        Self { law, r_min }
    }

    pub fn tabulated(samples: Pchip) -> Self {
        let r_min = samples.first_radius();
        Self { law: MassLaw::Tabulated { samples }, r_min }
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        Ok(Self::tabulated(Pchip::from_csv(path)?))
    }

    /// `[m, m', m'']` at `r`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        match &self.law {
            MassLaw::Constant { m } => [*m, 0.0, 0.0],
            MassLaw::Saturating { m_total, scale } => {
                let e = (-r / scale).exp();
                [m_total * (1.0 - e), m_total * e / scale, -m_total * e / (scale * scale)]
            }
            MassLaw::TanhMix { m0, terms } => {
                let mut out = [*m0, 0.0, 0.0];
                for t in terms {
                    let th = ((r - t.center) / t.width).tanh();
                    let sech2 = 1.0 - th * th;
                    out[0] += 0.5 * t.weight * (1.0 + th);
                    out[1] += 0.5 * t.weight * sech2 / t.width;
                    out[2] -= t.weight * sech2 * th / (t.width * t.width);
                }
                out
            }
            MassLaw::ExpApproach { m_start, m_total, width } => {
                let e = (-(r - self.r_min) / width).exp();
                let a = m_total - m_start;
                [m_total - a * e, a * e / width, -a * e / (width * width)]
            }
            MassLaw::LogGrowth { m0, rate } => [m0 + rate * (r / self.r_min).ln(), rate / r, -rate / (r * r)],
            MassLaw::Tabulated { samples } => samples.eval(r),
        }
    }

    /// `m(r_min + d) - m(r_min)` without cancellation for small `d`.
    fn increment(&self, d: f64) -> f64 {
        match &self.law {
            MassLaw::Constant { .. } => 0.0,
            MassLaw::Saturating { m_total, scale } => {
                m_total * (-self.r_min / scale).exp() * -(-d / scale).exp_m1()
            }
            MassLaw::ExpApproach { m_start, m_total, width } => {
                (m_total - m_start) * -(-d / width).exp_m1()
            }
            MassLaw::LogGrowth { rate, .. } => rate * (d / self.r_min).ln_1p(),
            _ => self.eval(self.r_min + d)[0] - self.eval(self.r_min)[0],
        }
    }

    /// `r^(n-2) - 2 m(r)` at `r = r_min + d`.
    pub fn gap(&self, n: Dimension, d: f64) -> f64 {
        let k = n.k();
        let base = self.r_min.powf(k);
        let mut offset = base - 2.0 * self.eval(self.r_min)[0];
        if offset.abs() <= 1e-12 * base {
            // boundary on the horizon up to rounding in r_min
            offset = 0.0;
        }
        base * (k * (d / self.r_min).ln_1p()).exp_m1() + offset - 2.0 * self.increment(d)
    }

    pub fn m_total(&self) -> f64 {
        match &self.law {
            MassLaw::Constant { m } => *m,
            MassLaw::Saturating { m_total, .. } | MassLaw::ExpApproach { m_total, .. } => *m_total,
            MassLaw::TanhMix { m0, terms } => m0 + terms.iter().map(|t| t.weight).sum::<f64>(),
            MassLaw::LogGrowth { .. } => f64::INFINITY,
            MassLaw::Tabulated { samples } => samples.last_value(),
        }
    }
}

/// Rotational profile whose quasi-local mass at radius `r` is `m(r)`.
#[derive(Debug, Clone)]
pub struct MassRadialProfile {
    n: Dimension,
    profile: MassProfile,
    table: HeightTable,
    sup: f64,
    minimal: bool,
    nondecreasing: bool,
}

/// Radii checked for admissibility: `r_min` and a log grid out to `1e6 max(r_min, 1)`.
fn validation_radii(r_min: f64) -> Vec<f64> {
    let top = 1e6 * r_min.max(1.0);
    let d0 = 1e-9 * r_min;
    let count = 600;
    let mut out = vec![r_min];
    out.extend((0..count).map(|i| r_min + d0 * (top / d0).powf(i as f64 / (count - 1) as f64)));
    out
}

/// Integrates `u' = sqrt(2m / (r^(n-2) - 2m))` with `u(r_min) = 0`.
pub fn profile_from_mass(mp: MassProfile, n: Dimension) -> Result<MassRadialProfile> {
    let r_min = mp.r_min;
    if !(r_min > 0.0) {
        return Err(Error::InvalidParameter(format!("r_min {r_min} must be positive")));
    }
    let k = n.k();
    let gap0 = mp.gap(n, 0.0);
    let limit0 = 0.5 * r_min.powf(k);
    if gap0 < -1e-12 * limit0 {
        return Err(Error::SubHorizon { r: r_min, m: mp.eval(r_min)[0], limit: limit0 });
    }
    let minimal = gap0 <= 1e-12 * limit0;
    let mut nondecreasing = true;
    let mut prev = f64::NEG_INFINITY;
    for r in validation_radii(r_min) {
        let [m, dm, _] = mp.eval(r);
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("mass {m} not positive at r = {r}")));
        }
        if r > r_min && mp.gap(n, r - r_min) <= 0.0 {
            return Err(Error::SubHorizon { r, m, limit: 0.5 * r.powf(k) });
        }
        if dm < -1e-14 * m.max(1.0) || m < prev - 1e-14 * m.max(1.0) {
            nondecreasing = false;
        }
        prev = m;
    }
    let slope_mp = mp.clone();
    let slope = Arc::new(move |d: f64| {
        let m = slope_mp.eval(r_min + d)[0];
        (2.0 * m / slope_mp.gap(n, d)).sqrt()
    });
    let r_end = 1e6 * r_min.max(1.0);
    let table = HeightTable::build(r_min, r_end, slope)?;
    let sup = if n.get() >= 5 && mp.m_total().is_finite() {
        let m_end = mp.eval(r_end)[0];
        table.height_at_end() + schwarzschild_tail(n, m_end, r_end)?.0
    } else {
        f64::INFINITY
    };
    Ok(MassRadialProfile { n, profile: mp, table, sup, minimal, nondecreasing })
}

impl MassRadialProfile {
    pub fn mass_profile(&self) -> &MassProfile {
        &self.profile
    }

    pub fn dimension(&self) -> Dimension {
        self.n
    }

    /// False when sampled `m` decreases somewhere, so `R < 0` there.
    pub fn nondecreasing(&self) -> bool {
        self.nondecreasing
    }

    /// `R = 2 (n-1) m'(r) r^(1-n)`.
    pub fn scalar_curvature(&self, r: f64) -> f64 {
        let nf = self.n.as_f64();
        2.0 * (nf - 1.0) * self.profile.eval(r)[1] * r.powf(1.0 - nf)
    }

    /// Most negative sampled scalar curvature and where it occurs.
    pub fn min_scalar_curvature(&self) -> (f64, f64) {
        validation_radii(self.profile.r_min)
            .into_iter()
            .skip(1)
            .map(|r| (self.scalar_curvature(r), r))
            .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
    }
}

impl RadialProfile for MassRadialProfile {
    fn r_min(&self) -> f64 {
        self.profile.r_min
    }

    fn height(&self, r: f64) -> Result<f64> {
        self.table.height(r)
    }

    fn derivatives(&self, r: f64) -> Result<[f64; 3]> {
        let d = r - self.profile.r_min;
        if d <= 0.0 {
            return Err(Error::DomainViolation { radius: r });
        }
        let k = self.n.k();
        let [m, m1, m2] = self.profile.eval(r);
        let gap = self.profile.gap(self.n, d);
        let g1 = k * r.powf(k - 1.0) - 2.0 * m1;
        let g2 = k * (k - 1.0) * r.powf(k - 2.0) - 2.0 * m2;
        let q = 2.0 * m / gap;
        let q1 = 2.0 * m1 / gap - 2.0 * m * g1 / (gap * gap);
        let q2 = 2.0 * m2 / gap - 4.0 * m1 * g1 / (gap * gap) - 2.0 * m * g2 / (gap * gap)
            + 4.0 * m * g1 * g1 / (gap * gap * gap);
        let sq = q.sqrt();
        Ok([sq, q1 / (2.0 * sq), q2 / (2.0 * sq) - q1 * q1 / (4.0 * q * sq)])
    }

    fn sup_height(&self) -> f64 {
        self.sup
    }

    fn minimal_boundary(&self) -> bool {
        self.minimal
    }

    fn source(&self) -> ProfileSource {
        ProfileSource::MassProfile
    }

    fn radius_at_height(&self, h: f64) -> Result<f64> {
        if h >= self.sup {
            return Err(Error::AboveSupremum { h, h_max: self.sup });
        }
        if h <= self.table.height_at_end() {
            return self.table.radius_at(h);
        }
        let mut lo = self.table.r_end();
        let mut hi = 2.0 * lo;
        let mut guard = 0;
        while self.table.height(hi)? < h {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Range(format!("height {h} not reached")));
            }
        }
        quad::brent(|r| self.table.height(r).map_or(f64::NAN, |v| v - h), lo, hi, 1e-15 * hi)
    }
}
