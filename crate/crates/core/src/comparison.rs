//! The comparison ODE `Y' = F(Y)` for the rescaled volume function, the
//! rough comparison principle, height bounds, and the low-dimensional
//! round-level-set machinery.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::geometry::{GraphFunction, Rescaled};
use crate::levelsets::VolumeFunction;
use crate::quad;
use crate::schwarzschild::{asymptotic_schwarzschild_check, horizon_radius, schwarzschild_height, AsymptoticCheck};

/// Integration stops once `Y` passes this multiple of `omega`; the rest is analytic.
pub const BLOW_UP_STOP: f64 = 1e12;

/// `Y(0) = 2 * 2^((n-1)/(n-2)) * omega`.
pub fn initial_value(n: Dimension) -> f64 {
    let nf = n.as_f64();
    2.0 * 2f64.powf((nf - 1.0) / (nf - 2.0)) * n.constants().omega
}

/// Constants of `F(Y) = K (a Y^q - 1)^(3/2)`.
#[derive(Debug, Clone, Copy)]
struct Rhs {
    k: f64,
    a: f64,
    q: f64,
}

impl Rhs {
    fn new(n: Dimension) -> Self {
        let nf = n.as_f64();
        let c = n.constants();
        let q = (nf - 2.0) / (nf - 1.0);
        Self {
            k: c.c_n * 2.0 / (3.0 * 3f64.sqrt()),
            a: 0.5 * c.omega.powf(-q),
            q,
        }
    }

    fn eval(&self, y: f64) -> Result<f64> {
        let bracket = self.a * y.powf(self.q) - 1.0;
        if bracket < 0.0 {
            return Err(Error::OdeDomain { bracket });
        }
        Ok(self.k * bracket.powf(1.5))
    }

    /// Growth exponent `p = 3q/2` of `F` at infinity.
    fn p(&self) -> f64 {
        1.5 * self.q
    }

    /// `int_y^inf dY / F(Y)` by the binomial series in `1/t`, `t = a y^q`;
    /// returns the value and a bound on the dropped terms.
    fn tail(&self, y: f64) -> Result<(f64, f64)> {
        let t = self.a * y.powf(self.q);
        if !(t > 3.0) || self.p() <= 1.0 {
            return Err(Error::Range(format!("series tail needs t > 3 and p > 1 (t = {t})")));
        }
        let e = 1.0 / self.q - 2.5;
        let pref = self.a.powf(-1.0 / self.q) / (self.k * self.q);
        let mut c = 1.0;
        let mut sum = 0.0;
        for j in 0..200 {
            let jf = j as f64;
            let term = c * t.powf(e - jf + 1.0) / (jf - e - 1.0);
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                let ratio = 1.5 / t;
                return Ok((pref * sum, pref * term.abs() * ratio / (1.0 - ratio)));
            }
            c *= (1.5 + jf) / (jf + 1.0);
        }
        Err(Error::Budget("series tail did not converge".into()))
    }
}

/// `C_n (2/(3 sqrt 3)) [(1/2)(Y/omega)^((n-2)/(n-1)) - 1]^(3/2)`.
pub fn ode_rhs(y: f64, n: Dimension) -> Result<f64> {
    Rhs::new(n).eval(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthLaw {
    /// `h <= c Y^(1/4)`
    Quartic,
    /// `h <= c log Y`
    Exponential,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthFit {
    pub law: GrowthLaw,
    /// Certified on `h_range` only.
    pub coefficient: f64,
    pub h_range: [f64; 2],
    /// Log-log slope of `Y` on the final decade (quartic) or slope of `log Y` (exponential).
    pub slope: f64,
    /// The same slope on the preceding window, for stabilization checks.
    pub slope_previous: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSolution {
    pub n: Dimension,
    pub grid: Vec<f64>,
    #[serde(rename = "Y")]
    pub y: Vec<f64>,
    pub blow_up_height: Option<f64>,
    pub blow_up_bracket: Option<[f64; 2]>,
    /// Blow-up height from direct quadrature of `dY/F(Y)`.
    pub blow_up_quadrature: Option<f64>,
    pub growth_fit: Option<GrowthFit>,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl ComparisonSolution {
    pub fn initial_value(&self) -> f64 {
        self.y[0]
    }

    /// `Y(h)`, by Hermite interpolation on the integrator steps and the analytic
    /// tail past the last step; `+inf` at or beyond blow-up.
    pub fn value_at(&self, h: f64) -> Result<f64> {
        if h < 0.0 {
            return Err(Error::Range(format!("height {h} below the initial height")));
        }
        let last = *self.grid.last().expect("nonempty");
        if h <= last {
            let i = self.grid.partition_point(|&g| g <= h).clamp(1, self.grid.len() - 1);
            let (h0, h1) = (self.grid[i - 1], self.grid[i]);
            let dt = h1 - h0;
            if dt == 0.0 {
                return Ok(self.y[i]);
            }
            let s = (h - h0) / dt;
            let (y0, y1) = (self.y[i - 1], self.y[i]);
            let (d0, d1) = (self.slopes[i - 1] * dt, self.slopes[i] * dt);
            let s2 = s * s;
            let s3 = s2 * s;
            return Ok((2.0 * s3 - 3.0 * s2 + 1.0) * y0
                + (s3 - 2.0 * s2 + s) * d0
                + (-2.0 * s3 + 3.0 * s2) * y1
                + (s3 - s2) * d1);
        }
        let Some(c) = self.blow_up_height else {
            return Err(Error::Range(format!("height {h} beyond the integrated range {last}")));
        };
        if h >= c {
            return Ok(f64::INFINITY);
        }
        let rhs = Rhs::new(self.n);
        let y_last = *self.y.last().expect("nonempty");
        let remaining = c - h;
        let mut err = None;
        let ly = quad::brent(
            |ly| match rhs.tail(ly.exp()) {
                Ok((t, _)) => t - remaining,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            },
            y_last.ln(),
            y_last.ln() + 700.0,
            1e-14,
        )?;
        err.map_or(Ok(ly.exp()), Err)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["h", "Y"])?;
        for (h, y) in self.grid.iter().zip(&self.y) {
            out.write_record([h.to_string(), y.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n.get(),
            "blow_up_height": self.blow_up_height,
            "growth_fit": self.growth_fit,
        })
    }
}

struct Trajectory {
    h: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

const MAX_STEPS: usize = 2_000_000;

/// Dormand-Prince 5(4) for the autonomous scalar ODE, stopping at `h_end` or once `y > y_stop`.
fn dopri5(rhs: &Rhs, y0: f64, h_end: f64, y_stop: f64, rtol: f64) -> Result<Trajectory> {
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let f0 = rhs.eval(y0)?;
    let mut tr = Trajectory { h: vec![0.0], y: vec![y0], dy: vec![f0] };
    let (mut t, mut y, mut k1) = (0.0, y0, f0);
    let mut dt = 1e-3 * (y0 / f0.max(1e-300)).min(1.0);
    let mut steps = 0;
    while t < h_end && y <= y_stop {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::NotConverged { steps });
        }
        dt = dt.min(h_end - t);
        let mut k = [k1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut ok = true;
        for s in 0..6 {
            let yi = y + dt * A[s].iter().zip(&k).map(|(a, kk)| a * kk).sum::<f64>();
            match rhs.eval(yi) {
                Ok(v) if v.is_finite() => k[s + 1] = v,
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            dt *= 0.25;
            continue;
        }
        let y_new = y + dt * A[5].iter().zip(&k).map(|(a, kk)| a * kk).sum::<f64>();
        let err = dt * E.iter().zip(&k).map(|(e, kk)| e * kk).sum::<f64>();
        let scale = 1e-300 + rtol * y.abs().max(y_new.abs());
        let ratio = err.abs() / scale;
        if ratio <= 1.0 {
            t += dt;
            y = y_new;
            k1 = k[6];
            tr.h.push(t);
            tr.y.push(y);
            tr.dy.push(k1);
        }
        let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
        dt *= factor;
    }
    Ok(tr)
}

/// Blow-up height from direct quadrature of `int_{Y0}^inf dY/F(Y)` with
/// `Y = Y0 u^(-1/(p-1))`, which maps the whole range onto a bounded integrand on `(0, 1]`.
fn blow_up_by_quadrature(n: Dimension) -> Result<f64> {
    let rhs = Rhs::new(n);
    let p = rhs.p();
    let y0 = initial_value(n);
    let w = 1.0 / (rhs.a * y0.powf(rhs.q));
    let s = rhs.q / (p - 1.0);
    let pref = y0.powf(1.0 - p) / ((p - 1.0) * rhs.k * rhs.a.powf(1.5));
    let v = quad::adaptive(|u| pref * (1.0 - w * u.powf(s)).powf(-1.5), 0.0, 1.0, 1e-15, 1e-13)?;
    Ok(v.value)
}

fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Default height budget for the non-blow-up dimensions.
pub fn default_budget(n: Dimension) -> f64 {
    if n.get() == 3 {
        1e4
    } else {
        1e3
    }
}

/// Solves the comparison ODE from `Y(0)`; blow-up height for `n >= 5`, certified
/// growth envelope for `n = 3, 4`.
pub fn integrate_comparison(n: Dimension, h_budget: f64) -> Result<ComparisonSolution> {
    if !(h_budget > 0.0) {
        return Err(Error::InvalidParameter(format!("height budget {h_budget} must be positive")));
    }
    let rhs = Rhs::new(n);
    let y0 = initial_value(n);
    let omega = n.constants().omega;
    if n.get() >= 5 {
        let y_stop = BLOW_UP_STOP * omega;
        let fine = dopri5(&rhs, y0, f64::INFINITY, y_stop, 1e-13)?;
        let coarse = dopri5(&rhs, y0, f64::INFINITY, y_stop, 1e-11)?;
        let end = |tr: &Trajectory| -> Result<(f64, f64)> {
            let (t, b) = rhs.tail(*tr.y.last().expect("nonempty"))?;
            Ok((tr.h.last().expect("nonempty") + t, b))
        };
        let (c, bound) = end(&fine)?;
        let (c_coarse, _) = end(&coarse)?;
        let half = 10.0 * (c - c_coarse).abs() + bound + 4.0 * f64::EPSILON * c;
        if half / c > 0.5e-6 {
            return Err(Error::Budget(format!("blow-up bracket half-width {half:e} too wide")));
        }
        if c > h_budget {
            return Err(Error::Budget(format!("blow-up height {c} exceeds budget {h_budget}")));
        }
        let quadrature = blow_up_by_quadrature(n)?;
        return Ok(ComparisonSolution {
            n,
            grid: fine.h,
            y: fine.y,
            blow_up_height: Some(c),
            blow_up_bracket: Some([c - half, c + half]),
            blow_up_quadrature: Some(quadrature),
            growth_fit: None,
            slopes: fine.dy,
        });
    }

    let tr = dopri5(&rhs, y0, h_budget, 1e250, 1e-12)?;
    let h_end = *tr.h.last().expect("nonempty");
    let law = if n.get() == 3 { GrowthLaw::Quartic } else { GrowthLaw::Exponential };
    let envelope = |h: f64, y: f64| match law {
        GrowthLaw::Quartic => h / y.powf(0.25),
        GrowthLaw::Exponential => h / y.ln(),
    };
    let coefficient = tr
        .h
        .iter()
        .zip(&tr.y)
        .map(|(&h, &y)| envelope(h, y))
        .fold(0.0, f64::max);
    // slopes on the last window and the one before it
    let window = |lo: f64, hi: f64| -> f64 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = tr
            .h
            .iter()
            .zip(&tr.y)
            .filter(|(&h, _)| h >= lo && h <= hi && h > 0.0)
            .map(|(&h, &y)| match law {
                GrowthLaw::Quartic => (h.ln(), y.ln()),
                GrowthLaw::Exponential => (h, y.ln()),
            })
            .unzip();
        regression_slope(&xs, &ys)
    };
    let (slope, slope_previous) = match law {
        GrowthLaw::Quartic => (window(h_end / 10.0, h_end), window(h_end / 100.0, h_end / 10.0)),
        GrowthLaw::Exponential => (window(0.75 * h_end, h_end), window(0.5 * h_end, 0.75 * h_end)),
    };
    let certified = match law {
        GrowthLaw::Quartic => (slope - 4.0).abs() <= 0.05,
        GrowthLaw::Exponential => (slope - slope_previous).abs() <= 1e-3 * slope.abs(),
    };
    if !certified || tr.h.len() < 20 {
        return Err(Error::Budget(format!(
            "growth not certified up to h = {h_end} (slopes {slope}, {slope_previous})"
        )));
    }
    Ok(ComparisonSolution {
        n,
        grid: tr.h,
        y: tr.y,
        blow_up_height: None,
        blow_up_bracket: None,
        blow_up_quadrature: None,
        growth_fit: Some(GrowthFit {
            law,
            coefficient,
            h_range: [0.0, h_end],
            slope,
            slope_previous,
        }),
        slopes: tr.dy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Holds,
    HypothesisFailure,
    ConclusionFailure,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonVerdict {
    pub status: VerdictStatus,
    /// `min (V - Y)` over the common samples.
    pub min_margin: f64,
    /// The same minimum over samples strictly after `a`.
    pub min_margin_after_start: f64,
    pub samples: usize,
    pub failures: Vec<String>,
}

const COMPARISON_TOL: f64 = 1e-9;

/// Checks the hypotheses and conclusion `Y <= V` of the rough comparison
/// principle at the samples of `v` inside `[a, b]`.
pub fn comparison_check(v: &VolumeFunction, sol: &ComparisonSolution, a: f64, b: f64) -> Result<ComparisonVerdict> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("interval [{a}, {b}] is empty")));
    }
    let samples: Vec<_> = v.samples.iter().filter(|s| s.h >= a && s.h <= b).collect();
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("fewer than two samples in the interval".into()));
    }
    let rhs = Rhs::new(sol.n);
    let mut failures = Vec::new();
    for w in samples.windows(2) {
        if w[1].volume < w[0].volume {
            failures.push(format!("V decreases between h = {} and h = {}", w[0].h, w[1].h));
        }
    }
    let va = if samples[0].h == a { samples[0].volume } else { v.volume_at(a).unwrap_or(samples[0].volume) };
    let ya = sol.value_at(a)?;
    if va < ya * (1.0 - COMPARISON_TOL) {
        failures.push(format!("V(a) = {va} < Y(a) = {ya}"));
    }
    for s in samples.iter().filter(|s| s.regular) {
        match rhs.eval(s.volume) {
            Ok(fv) if s.volume_derivative >= fv * (1.0 - COMPARISON_TOL) => {}
            Ok(fv) => failures.push(format!("V' = {} < F(V) = {fv} at h = {}", s.volume_derivative, s.h)),
            Err(_) => failures.push(format!("F undefined at V = {} (h = {})", s.volume, s.h)),
        }
    }
    let mut min_margin = f64::INFINITY;
    let mut min_after = f64::INFINITY;
    let mut conclusion = true;
    for s in &samples {
        let y = sol.value_at(s.h)?;
        let margin = s.volume - y;
        min_margin = min_margin.min(margin);
        if s.h > a {
            min_after = min_after.min(margin);
        }
        if margin < -COMPARISON_TOL * y.abs().max(1.0) {
            conclusion = false;
        }
    }
    let status = if !failures.is_empty() {
        VerdictStatus::HypothesisFailure
    } else if conclusion {
        VerdictStatus::Holds
    } else {
        VerdictStatus::ConclusionFailure
    };
    Ok(ComparisonVerdict {
        status,
        min_margin,
        min_margin_after_start: min_after,
        samples: samples.len(),
        failures,
    })
}

/// `m^(-1/(n-2)) (f(m^(1/(n-2)) x) - h0)`, normalized to unit mass.
pub fn rescale(f: Arc<dyn GraphFunction>, m: f64, h0: f64) -> Result<Rescaled> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {m} must be positive")));
    }
    let lambda = m.powf(1.0 / f.dim().k());
    Rescaled::new(f, lambda, h0)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeightBound {
    pub value: f64,
    /// Artifact constant: blow-up height or certified growth coefficient.
    pub constant: f64,
    pub law: &'static str,
}

/// Upper bound for `sup f - h0` (`n >= 5`) or `h - h0` given `V(h)` (`n = 3, 4`).
pub fn height_bound(n: Dimension, m: f64, volume: Option<f64>, sol: &ComparisonSolution) -> Result<HeightBound> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {m} must be positive")));
    }
    if sol.n != n {
        return Err(Error::InvalidParameter("solution dimension mismatch".into()));
    }
    if n.get() >= 5 {
        let c = sol.blow_up_height.ok_or_else(|| Error::InvalidParameter("missing blow-up height".into()))?;
        return Ok(HeightBound { value: c * m.powf(1.0 / n.k()), constant: c, law: "C m^(1/(n-2))" });
    }
    let v = volume.ok_or_else(|| Error::InvalidParameter(format!("n = {n} needs V(h)")))?;
    let fit = sol.growth_fit.as_ref().ok_or_else(|| Error::InvalidParameter("missing growth fit".into()))?;
    let nf = n.as_f64();
    let v_tilde = m.powf(-(nf - 1.0) / (nf - 2.0)) * v;
    let y_end = *sol.y.last().expect("nonempty");
    if v_tilde >= y_end {
        return Err(Error::Range(format!(
            "rescaled volume {v_tilde:e} beyond the certified range (Y <= {y_end:e})"
        )));
    }
    let c = fit.coefficient;
    Ok(match n.get() {
        3 => HeightBound { value: c * m.sqrt() * v.powf(0.25), constant: c, law: "C sqrt(m) V^(1/4)" },
        _ => HeightBound { value: c * m.sqrt() * (m.powf(-1.5) * v).ln(), constant: c, law: "C sqrt(m) log(m^(-3/2) V)" },
    })
}

/// Uniform asymptotic-Schwarzschild data `(r0, gamma, alpha)` with fitted `Lambda`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticProfile {
    pub r0: f64,
    pub gamma: f64,
    pub decay_exponent: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
}

impl AsymptoticProfile {
    pub fn validate(&self, n: Dimension) -> Result<()> {
        if !(self.gamma > 0.0) || !(self.r0 >= 0.0) {
            return Err(Error::InvalidParameter("gamma must be positive and r0 nonnegative".into()));
        }
        if !(self.decay_exponent < 2.0 - 0.5 * n.as_f64()) {
            return Err(Error::InvalidParameter(format!(
                "decay exponent {} must be below {}",
                self.decay_exponent,
                2.0 - 0.5 * n.as_f64()
            )));
        }
        Ok(())
    }

    /// Fits `Lambda` and checks the decay envelope on `r0 < |x| <= r_check`.
    pub fn fit(
        f: &dyn GraphFunction,
        m: f64,
        r0: f64,
        gamma: f64,
        decay_exponent: f64,
        r_check: f64,
    ) -> Result<(Self, AsymptoticCheck)> {
        let check = asymptotic_schwarzschild_check(f, m, r0, gamma, decay_exponent, r_check)?;
        let ap = Self { r0, gamma, decay_exponent, lambda: check.lambda };
        ap.validate(f.dim())?;
        Ok((ap, check))
    }
}

fn low_dim(n: Dimension) -> Result<()> {
    if matches!(n.get(), 3 | 4) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("only n = 3 or 4 supported, got {n}")))
    }
}

/// The constant `C(gamma, alpha, a, b, c)` in the radius threshold guaranteeing
/// `gamma (c r)^alpha < S_m(b r) - S_m(a r)`.
pub fn lemma_constant(n: Dimension, gamma: f64, alpha: f64, a: f64, b: f64, c: f64) -> Result<f64> {
    low_dim(n)?;
    if !(gamma > 0.0 && c > 0.0 && a >= 1.0 && b > a) {
        return Err(Error::InvalidParameter(format!(
            "need gamma > 0, c > 0, 1 <= a < b (got {gamma}, {c}, {a}, {b})"
        )));
    }
    if n.get() == 3 {
        if !(alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("n = 3 needs alpha < 1/2, got {alpha}")));
        }
        let base = gamma * c.powf(alpha) / (8f64.sqrt() * (b.sqrt() - a.sqrt()));
        Ok(base.powf(2.0 / (1.0 - 2.0 * alpha)))
    } else {
        if !(alpha < 0.0) {
            return Err(Error::InvalidParameter(format!("n = 4 needs alpha < 0, got {alpha}")));
        }
        let base = gamma * c.powf(alpha) / (2f64.sqrt() * (b / a).ln());
        Ok(base.powf(-1.0 / alpha))
    }
}

fn threshold_from_constant(n: Dimension, cst: f64, alpha: f64, m: f64) -> f64 {
    if n.get() == 3 {
        (cst * m.powf(-1.0 / (1.0 - 2.0 * alpha))).max(2.0 * m)
    } else {
        (cst * m.powf(1.0 / (2.0 * alpha))).max((2.0 * m).sqrt())
    }
}

pub fn r1_threshold(n: Dimension, gamma: f64, alpha: f64, a: f64, b: f64, c: f64, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass {m} must be positive")));
    }
    let cst = lemma_constant(n, gamma, alpha, a, b, c)?;
    Ok(threshold_from_constant(n, cst, alpha, m))
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundLevelData {
    pub r1: f64,
    pub h1: f64,
    pub epsilon: f64,
    pub c_gamma_alpha: f64,
    /// `max f` on the sampled sphere `|x| = r1`.
    pub inner_max: f64,
    /// `min f` on the sampled sphere `|x| = 3 r1`.
    pub outer_min: f64,
}

fn sphere_points(n: usize, r: f64) -> Vec<Vec<f64>> {
    let q = if n == 3 { 8 } else { 6 };
    let rule = quad::sphere_rule(n, q);
    rule.points.iter().map(|p| p[..n].iter().map(|v| v * r).collect()).collect()
}

fn extremes(f: &dyn GraphFunction, n: usize, r: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in sphere_points(n, r) {
        let v = f.extended_value(&x)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// `r1`, `h1 = Lambda + S_m(2 r1)` and `epsilon` for the round-level-set recipe.
pub fn round_levelset_data(n: Dimension, ap: &AsymptoticProfile, m: f64, f: &dyn GraphFunction) -> Result<RoundLevelData> {
    low_dim(n)?;
    ap.validate(n)?;
    let (g, al) = (ap.gamma, ap.decay_exponent);
    let cst = lemma_constant(n, g, al, 1.0, 2.0, 1.0)?.max(lemma_constant(n, g, al, 2.0, 3.0, 3.0)?);
    let r1 = threshold_from_constant(n, cst, al, m).max(ap.r0);
    round_levelset_data_at(n, ap, m, f, r1, cst)
}

/// The same construction at an explicitly chosen `r1`.
pub fn round_levelset_data_at(
    n: Dimension,
    ap: &AsymptoticProfile,
    m: f64,
    f: &dyn GraphFunction,
    r1: f64,
    c_gamma_alpha: f64,
) -> Result<RoundLevelData> {
    low_dim(n)?;
    let s = |r: f64| schwarzschild_height(n, m, r);
    let (g, al) = (ap.gamma, ap.decay_exponent);
    let h1 = ap.lambda + s(2.0 * r1)?;
    let epsilon = (s(2.0 * r1)? - s(r1)? - g * r1.powf(al)).min(s(3.0 * r1)? - s(2.0 * r1)? - g * (3.0 * r1).powf(al));
    if !(epsilon > 0.0) {
        return Err(Error::EpsilonNonPositive { epsilon });
    }
    let (_, inner_max) = extremes(f, n.get(), r1)?;
    let (outer_min, _) = extremes(f, n.get(), 3.0 * r1)?;
    let slack = 1e-12 * h1.abs().max(1.0);
    if inner_max > h1 - epsilon + slack {
        return Err(Error::Containment(format!("f = {inner_max} > h1 - eps = {} on |x| = r1", h1 - epsilon)));
    }
    if outer_min < h1 + epsilon - slack {
        return Err(Error::Containment(format!("f = {outer_min} < h1 + eps = {} on |x| = 3 r1", h1 + epsilon)));
    }
    Ok(RoundLevelData { r1, h1, epsilon, c_gamma_alpha, inner_max, outer_min })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeVerdict {
    pub holds: bool,
    /// `min [S_m(|x|) - S_m(r1) - (f(x) - h1)]` over the samples.
    pub min_slack: f64,
    pub worst_radius: f64,
    pub samples: usize,
}

pub const ENVELOPE_TOL: f64 = 1e-8;

/// Samples `f(x) - h1 <= S_m(|x|) - S_m(r1)` outside `B_{r1}` after checking `B_{r1} in Omega_{h1}`.
pub fn envelope_check(f: &dyn GraphFunction, m: f64, r1: f64, h1: f64) -> Result<EnvelopeVerdict> {
    let n = f.dim();
    low_dim(n)?;
    let r_h = horizon_radius(n, m);
    if !(r1 > r_h) {
        return Err(Error::InvalidParameter(format!("r1 = {r1} must exceed the horizon radius {r_h}")));
    }
    let dim = n.get();
    let slack = 1e-12 * h1.abs().max(1.0);
    for j in 0..=16 {
        let r = r1 * j as f64 / 16.0;
        let pts = if j == 0 { vec![vec![0.0; dim]] } else { sphere_points(dim, r) };
        for x in pts {
            let v = f.extended_value(&x)?;
            if v > h1 + slack {
                return Err(Error::Containment(format!("f = {v} > h1 = {h1} at |x| = {r}")));
            }
        }
    }
    let s1 = schwarzschild_height(n, m, r1)?;
    let dirs = sphere_points(dim, 1.0);
    let count = 400;
    let mut min_slack = f64::INFINITY;
    let mut worst_radius = r1;
    for i in 0..=count {
        let r = r1 * 1e4f64.powf(i as f64 / count as f64);
        let env = schwarzschild_height(n, m, r)? - s1;
        for d in &dirs {
            let x: Vec<f64> = d.iter().map(|v| v * r).collect();
            let sl = env - (f.extended_value(&x)? - h1);
            if sl < min_slack {
                min_slack = sl;
                worst_radius = r;
            }
        }
    }
    Ok(EnvelopeVerdict {
        holds: min_slack >= -ENVELOPE_TOL,
        min_slack,
        worst_radius,
        samples: (count + 1) * dirs.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LowDimBound {
    pub value: f64,
    pub r1: f64,
    /// Volume bound `|d B_{3 r1}|` for the level containing `B_{r1}`.
    pub volume_bound: f64,
    /// Bound on `h1 - h0` from the comparison growth envelope.
    pub h1_term: f64,
    /// `S_m(rho) - S_m(r1)` when `rho > r1`.
    pub schwarzschild_term: f64,
}

/// Explicit bound for `sup_{B_rho} (f - h0)` in dimensions three and four.
pub fn lowdim_height_bound(
    n: Dimension,
    ap: &AsymptoticProfile,
    m: f64,
    rho: f64,
    sol: &ComparisonSolution,
) -> Result<LowDimBound> {
    low_dim(n)?;
    ap.validate(n)?;
    if !(m > 0.0 && rho > 0.0) {
        return Err(Error::InvalidParameter("mass and radius must be positive".into()));
    }
    let (g, al) = (ap.gamma, ap.decay_exponent);
    let cst = lemma_constant(n, g, al, 1.0, 2.0, 1.0)?.max(lemma_constant(n, g, al, 2.0, 3.0, 3.0)?);
    let r1 = threshold_from_constant(n, cst, al, m).max(ap.r0);
    let nf = n.as_f64();
    let volume_bound = n.constants().omega * (3.0 * r1).powf(nf - 1.0);
    let h1_term = height_bound(n, m, Some(volume_bound), sol)?.value.max(0.0);
    let schwarzschild_term = if rho > r1 {
        schwarzschild_height(n, m, rho)? - schwarzschild_height(n, m, r1)?
    } else {
        0.0
    };
    Ok(LowDimBound {
        value: h1_term + schwarzschild_term,
        r1,
        volume_bound,
        h1_term,
        schwarzschild_term,
    })
}

/// `sup_{|x| <= rho} f(x) - h0` for the filled-in extension: exact on rotational
/// graphs (monotone profiles), sampled otherwise.
pub fn sup_over_ball(f: &dyn GraphFunction, h0: f64, rho: f64) -> Result<f64> {
    if let Some(p) = f.radial() {
        let r = rho.max(p.r_min());
        return Ok(p.height(r)? - h0);
    }
    let n = f.dim().get();
    let mut best = f.extended_value(&vec![0.0; n])?;
    for j in 1..=32 {
        let r = rho * j as f64 / 32.0;
        for x in sphere_points(n, r) {
            best = best.max(f.extended_value(&x)?);
        }
    }
    Ok(best - h0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn rhs_at_initial_value() {
        let n = dim(3);
        let y0 = initial_value(n);
        let expect = 16.0 * PI * 2.0 / (3.0 * 3f64.sqrt()) * (2f64.sqrt() - 1.0).powf(1.5);
        assert!((ode_rhs(y0, n).unwrap() - expect).abs() < 1e-13 * expect);
        let zero = n.constants().omega * 2f64.powf(2.0);
        assert!(ode_rhs(zero, n).unwrap().abs() < 1e-12);
        assert!(matches!(ode_rhs(0.5 * zero, n), Err(Error::OdeDomain { .. })));
    }

    #[test]
    fn blow_up_estimators_agree() {
        for n in 5..=7 {
            let sol = integrate_comparison(dim(n), 1e3).unwrap();
            let c = sol.blow_up_height.unwrap();
            let q = sol.blow_up_quadrature.unwrap();
            assert!((c - q).abs() < 1e-6 * c, "n={n}: {c} vs {q}");
        }
    }

    #[test]
    fn quartic_growth_in_three_dimensions() {
        let sol = integrate_comparison(dim(3), default_budget(dim(3))).unwrap();
        let fit = sol.growth_fit.unwrap();
        assert!((fit.slope - 4.0).abs() < 0.05);
    }

    #[test]
    fn lemma_constant_example() {
        let c = lemma_constant(dim(3), 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!((c - 1.0 / (8.0 * (2f64.sqrt() - 1.0).powi(2))).abs() < 1e-14);
        assert_eq!(r1_threshold(dim(3), 1.0, 0.0, 1.0, 2.0, 1.0, 1.0).unwrap(), 2.0);
        assert!(r1_threshold(dim(4), 1.0, 0.0, 1.0, 2.0, 1.0, 1.0).is_err());
    }
}
