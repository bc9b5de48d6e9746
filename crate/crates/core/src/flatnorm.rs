//! Explicit flat-distance decomposition `M - Pi = A + dB` inside a ball, the
//! matching upper bounds, and small-mass convergence studies.

use std::cell::Cell;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::{height_bound, lowdim_height_bound, AsymptoticProfile, ComparisonSolution};
use crate::dimension::{ball_volume, isoperimetric_volume, Dimension};
use crate::error::{Error, Result};
use crate::geometry::{norm, GraphFunction, RadialProfile};
use crate::levelsets::{h_zero, h_zero_threshold};
use crate::quad;

/// Ball `U` in `R^(n+1)`; the last coordinate is the height.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub rho: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius {rho} must be positive")));
        }
        Ok(Self { center, rho })
    }

    /// Ball of radius `rho` centred at `(0, h0)`.
    pub fn centered(n: Dimension, h0: f64, rho: f64) -> Result<Self> {
        let mut c = vec![0.0; n.get() + 1];
        c[n.get()] = h0;
        Self::new(c, rho)
    }

    fn height(&self) -> f64 {
        *self.center.last().expect("nonempty center")
    }

    fn horizontal(&self) -> &[f64] {
        &self.center[..self.center.len() - 1]
    }

    /// Radius of the horizontal slice at height `h` (zero outside).
    fn slice_radius(&self, h: f64) -> f64 {
        let d = h - self.height();
        (self.rho * self.rho - d * d).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatDecomposition {
    /// Fill-in discs of the boundary components.
    pub mass_a: f64,
    pub mass_b_plus: f64,
    pub mass_b_minus: f64,
    pub total: f64,
    /// Theorem-side bound with artifact constants, when computed.
    pub bound: Option<f64>,
    pub method: &'static str,
}

/// Volume of `{ |z| <= R, z_1 >= R - t }` in `R^n`.
fn cap_volume(n: usize, big_r: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 2.0 * big_r {
        return ball_volume(n) * big_r.powi(n as i32);
    }
    // z_1 = R cos(theta): slices are (n-1)-balls of radius R sin(theta)
    let theta0 = ((big_r - t) / big_r).clamp(-1.0, 1.0).acos();
    let b = ball_volume(n - 1) * big_r.powi(n as i32);
    let v = quad::adaptive(|th| th.sin().powi(n as i32), 0.0, theta0, 1e-16, 1e-13)
        .map(|i| i.value)
        .unwrap_or(f64::NAN);
    b * v
}

/// `|B_r(0) cap B_s(c)|` in `R^n` with `|c| = d`.
pub fn lens_volume(n: usize, r: f64, s: f64, d: f64) -> f64 {
    if r <= 0.0 || s <= 0.0 || d >= r + s {
        return 0.0;
    }
    if d <= (r - s).abs() {
        return ball_volume(n) * r.min(s).powi(n as i32);
    }
    let x0 = (d * d + r * r - s * s) / (2.0 * d);
    cap_volume(n, r, r - x0) + cap_volume(n, s, s - (d - x0))
}

fn rotational_parts(p: &dyn RadialProfile, n: usize, h0: f64, u: &Ball) -> Result<FlatDecomposition> {
    let d = norm(u.horizontal());
    let c_h = u.height();
    let r_min = p.r_min();
    let base = p.height(r_min)?;
    let sup = p.sup_height();
    let err: Cell<Option<Error>> = Cell::new(None);
    let record = |e: Error| {
        let prev = err.take();
        err.set(prev.or(Some(e)));
    };
    // |Omega_h cap U_h| for the filled-in graph
    let slice = |h: f64| -> f64 {
        let s = u.slice_radius(h);
        if s == 0.0 || h <= base {
            return 0.0;
        }
        if h >= sup {
            return ball_volume(n) * s.powi(n as i32);
        }
        match p.radius_at_height(h) {
            Ok(r) => lens_volume(n, r, s, d),
            Err(e) => {
                record(e);
                0.0
            }
        }
    };
    let (lo, hi) = (c_h - u.rho, c_h + u.rho);
    let scale = ball_volume(n) * u.rho.powi(n as i32 + 1);
    let mut breaks = vec![lo, hi, h0.clamp(lo, hi), base.clamp(lo, hi)];
    if sup.is_finite() {
        breaks.push(sup.clamp(lo, hi));
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let below: Vec<f64> = breaks.iter().copied().filter(|&b| b <= h0.clamp(lo, hi)).collect();
    let above: Vec<f64> = breaks.iter().copied().filter(|&b| b >= h0.clamp(lo, hi)).collect();
    let b_minus = quad::adaptive_with_breaks(slice, &below, 1e-13 * scale, 1e-11)?.value;
    let b_plus = quad::adaptive_with_breaks(
        |h| ball_volume(n) * u.slice_radius(h).powi(n as i32) - slice(h),
        &above,
        1e-13 * scale,
        1e-11,
    )?
    .value;
    if let Some(e) = err.take() {
        return Err(e);
    }
    let mass_a = if r_min > 0.0 { lens_volume(n, r_min, u.slice_radius(base), d) } else { 0.0 };
    Ok(FlatDecomposition {
        mass_a,
        mass_b_plus: b_plus.max(0.0),
        mass_b_minus: b_minus.max(0.0),
        total: mass_a + b_plus.max(0.0) + b_minus.max(0.0),
        bound: None,
        method: "rotational-slices",
    })
}

/// Length of `(lo, hi) cap (c - w, c + w)`.
fn overlap(lo: f64, hi: f64, c: f64, w: f64) -> f64 {
    (hi.min(c + w) - lo.max(c - w)).max(0.0)
}

/// `(B_+, B_-)` by slicing in columns over `x` rather than in height; rotational
/// graphs with `U` centred on the axis only.
pub fn column_masses(f: &dyn GraphFunction, h0: f64, u: &Ball) -> Result<(f64, f64)> {
    let p = f.radial().ok_or_else(|| Error::InvalidParameter("column slicing needs a rotational graph".into()))?;
    if norm(u.horizontal()) != 0.0 {
        return Err(Error::InvalidParameter("column slicing needs U centred on the axis".into()));
    }
    let n = f.dim().get();
    let nf = n as f64;
    let area = nf * ball_volume(n);
    let c = u.height();
    let r_min = p.r_min();
    let base = p.height(r_min)?;
    let err: Cell<Option<Error>> = Cell::new(None);
    let fbar = |r: f64| -> f64 {
        if r <= r_min {
            return base;
        }
        p.height(r).unwrap_or_else(|e| {
            err.set(Some(e));
            0.0
        })
    };
    let rho = u.rho;
    let w = |r: f64| (rho * rho - r * r).max(0.0).sqrt();
    let tol = 1e-13 * ball_volume(n) * rho.powi(n as i32 + 1);
    let mut breaks = vec![0.0, rho];
    if r_min > 0.0 && r_min < rho {
        breaks.push(r_min);
    }
    // crossing radius of f with h0 is a kink of both integrands
    if base < h0 && p.sup_height() > h0 {
        if let Ok(r) = p.radius_at_height(h0) {
            if r < rho {
                breaks.push(r);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let plus = quad::adaptive_with_breaks(
        |r| area * r.powf(nf - 1.0) * overlap(h0, fbar(r), c, w(r)),
        &breaks,
        tol,
        1e-11,
    )?
    .value;
    let minus = quad::adaptive_with_breaks(
        |r| area * r.powf(nf - 1.0) * overlap(fbar(r), h0, c, w(r)),
        &breaks,
        tol,
        1e-11,
    )?
    .value;
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok((plus, minus))
}

/// Column masses on a midpoint grid of `res^n` cells; general graphs.
fn grid_masses(f: &dyn GraphFunction, h0: f64, u: &Ball, res: usize) -> Result<(f64, f64)> {
    let n = f.dim().get();
    let cx = u.horizontal();
    let rho = u.rho;
    let c = u.height();
    let dx = 2.0 * rho / res as f64;
    let cells = res.pow(n as u32);
    let per: Vec<(f64, f64)> = (0..cells)
        .into_par_iter()
        .map(|idx| {
            let mut x = vec![0.0; n];
            let mut k = idx;
            for xi in x.iter_mut().zip(cx) {
                *xi.0 = xi.1 - rho + (k % res) as f64 * dx + 0.5 * dx;
                k /= res;
            }
            let r2: f64 = x.iter().zip(cx).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 >= rho * rho {
                return Ok((0.0, 0.0));
            }
            let w = (rho * rho - r2).sqrt();
            let v = f.extended_value(&x)?;
            Ok((overlap(h0, v, c, w), overlap(v, h0, c, w)))
        })
        .collect::<Result<_>>()?;
    let vol = dx.powi(n as i32);
    let plus: Vec<f64> = per.iter().map(|p| p.0).collect();
    let minus: Vec<f64> = per.iter().map(|p| p.1).collect();
    Ok((vol * quad::pairwise_sum(&plus), vol * quad::pairwise_sum(&minus)))
}

/// Default grid resolution for non-rotational graphs.
pub const GRID_RESOLUTION: usize = 48;

/// Masses of `A`, `B_+`, `B_-` in `U` for the decomposition of graph minus plane.
pub fn flat_distance_upper(f: &dyn GraphFunction, h0: f64, u: &Ball) -> Result<FlatDecomposition> {
    let n = f.dim().get();
    if u.center.len() != n + 1 {
        return Err(Error::InvalidParameter(format!("ball centre needs {} coordinates", n + 1)));
    }
    if let Some(p) = f.radial() {
        return rotational_parts(p.as_ref(), n, h0, u);
    }
    let fine = grid_masses(f, h0, u, GRID_RESOLUTION)?;
    let coarse = grid_masses(f, h0, u, GRID_RESOLUTION / 2)?;
    let b_plus = quad::richardson(fine.0, coarse.0, 2.0).max(0.0);
    let b_minus = quad::richardson(fine.1, coarse.1, 2.0).max(0.0);
    let mass_a: f64 = f
        .kind()
        .balls()
        .iter()
        .map(|b| {
            let d: f64 = b
                .center
                .iter()
                .zip(u.horizontal())
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
                .sqrt();
            lens_volume(n, b.radius, u.slice_radius(b.value), d)
        })
        .sum();
    Ok(FlatDecomposition {
        mass_a,
        mass_b_plus: b_plus,
        mass_b_minus: b_minus,
        total: mass_a + b_plus + b_minus,
        bound: None,
        method: "column-grid",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremBound {
    pub value: f64,
    /// Isoperimetric + Penrose bound on the fill-in mass.
    pub a_term: f64,
    pub b_minus_term: f64,
    pub b_plus_term: f64,
    /// Bound on `sup (f - h0)` over the ball used for `B_+`.
    pub height_term: f64,
}

/// Right side of the flat-distance estimate with artifact constants.
pub fn theorem_bound(
    n: Dimension,
    m: f64,
    rho: f64,
    ap: Option<&AsymptoticProfile>,
    sol: &ComparisonSolution,
) -> Result<TheoremBound> {
    if !(m > 0.0 && rho > 0.0) {
        return Err(Error::InvalidParameter("mass and radius must be positive".into()));
    }
    let nf = n.as_f64();
    let c = n.constants();
    let penrose_area = c.omega * (2.0 * m).powf((nf - 1.0) / (nf - 2.0));
    let a_term = isoperimetric_volume(n, penrose_area);
    let b_minus_term = 2.0 * rho * isoperimetric_volume(n, h_zero_threshold(n, m));
    let height_term = if n.get() >= 5 {
        height_bound(n, m, None, sol)?.value
    } else {
        let ap = ap.ok_or_else(|| Error::InvalidParameter(format!("n = {n} needs asymptotic data")))?;
        lowdim_height_bound(n, ap, m, rho, sol)?.value
    };
    let b_plus_term = c.beta * rho.powf(nf) * height_term;
    Ok(TheoremBound {
        value: a_term + b_minus_term + b_plus_term,
        a_term,
        b_minus_term,
        b_plus_term,
        height_term,
    })
}

/// Exponent of the dominant small-mass term of the bound.
pub fn dominant_exponent(n: Dimension, ap: Option<&AsymptoticProfile>) -> Result<f64> {
    match n.get() {
        3 => {
            let al = ap
                .ok_or_else(|| Error::InvalidParameter("n = 3 needs asymptotic data".into()))?
                .decay_exponent;
            // smallest of -alpha/(1-2 alpha), 1 and 1/2 (the sqrt(m rho) term)
            Ok((-al / (1.0 - 2.0 * al)).min(1.0).min(0.5))
        }
        4 => Ok(0.5),
        _ => Ok(1.0 / n.k()),
    }
}

#[derive(Debug, Clone)]
pub struct FamilyMember {
    pub mass: f64,
    pub graph: Arc<dyn GraphFunction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub m: f64,
    pub h0: f64,
    pub d_flat_upper: f64,
    pub bound: f64,
    pub mass_a: f64,
    pub mass_b_plus: f64,
    pub mass_b_minus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyTable {
    pub n: Dimension,
    pub rho: f64,
    pub rows: Vec<StudyRow>,
    pub monotone_decreasing: bool,
    pub within_bound: bool,
    pub final_over_initial: f64,
    /// Log-log slope of the flat upper bound against the mass.
    pub fitted_exponent: Option<f64>,
    pub theorem_exponent: f64,
}

impl StudyTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["m", "d_flat_upper", "bound", "mass_A", "mass_B_plus", "mass_B_minus"])?;
        for r in &self.rows {
            out.write_record([
                r.m.to_string(),
                r.d_flat_upper.to_string(),
                r.bound.to_string(),
                r.mass_a.to_string(),
                r.mass_b_plus.to_string(),
                r.mass_b_minus.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx)
}

/// Flat upper bounds and theorem bounds along a family with decreasing masses,
/// each member normalized so that its `h0` is the plane height.
pub fn convergence_study(
    family: &[FamilyMember],
    rho: f64,
    ap: Option<&AsymptoticProfile>,
    sol: &ComparisonSolution,
) -> Result<StudyTable> {
    let first = family.first().ok_or_else(|| Error::InvalidParameter("empty family".into()))?;
    let n = first.graph.dim();
    if family.windows(2).any(|w| !(w[1].mass < w[0].mass)) {
        return Err(Error::InvalidParameter("family masses must be strictly decreasing".into()));
    }
    if family.iter().any(|f| f.graph.dim() != n) {
        return Err(Error::InvalidParameter("family members differ in dimension".into()));
    }
    let rows: Vec<StudyRow> = family
        .par_iter()
        .map(|member| {
            let h0 = h_zero(member.graph.as_ref(), member.mass)?;
            if !h0.is_finite() {
                return Err(Error::Range(format!("h0 undefined for mass {}", member.mass)));
            }
            let dec = flat_distance_upper(member.graph.as_ref(), h0, &Ball::centered(n, h0, rho)?)?;
            let bound = theorem_bound(n, member.mass, rho, ap, sol)?;
            Ok(StudyRow {
                m: member.mass,
                h0,
                d_flat_upper: dec.total,
                bound: bound.value,
                mass_a: dec.mass_a,
                mass_b_plus: dec.mass_b_plus,
                mass_b_minus: dec.mass_b_minus,
            })
        })
        .collect::<Result<_>>()?;
    let d: Vec<f64> = rows.iter().map(|r| r.d_flat_upper).collect();
    let ms: Vec<f64> = rows.iter().map(|r| r.m).collect();
    Ok(StudyTable {
        n,
        rho,
        monotone_decreasing: d.windows(2).all(|w| w[1] < w[0]),
        within_bound: rows.iter().all(|r| r.d_flat_upper <= r.bound),
        final_over_initial: d[d.len() - 1] / d[0],
        fitted_exponent: log_log_slope(&ms, &d),
        theorem_exponent: dominant_exponent(n, ap)?,
        rows,
    })
}

/// Smooth bump `eta(s) = exp(1 - 1/(1 - (s/R)^2))` supported in `s < R`, with `max eta = 1`.
#[derive(Debug, Clone, Copy)]
pub struct TestForm {
    pub center_height: f64,
    pub radius: f64,
}

impl TestForm {
    pub fn eta(&self, s: f64) -> f64 {
        let t = s / self.radius;
        if t >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }

    /// `sup |eta'|` by golden-section search on the unimodal `|eta'|`.
    pub fn lipschitz(&self) -> f64 {
        let g = |t: f64| {
            let w = 1.0 - t * t;
            2.0 * t / (w * w) * (1.0 - 1.0 / w).exp()
        };
        let (mut a, mut b) = (0.0, 1.0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if g(c) > g(d) {
                b = d;
            } else {
                a = c;
            }
        }
        g(0.5 * (a + b)) / self.radius
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingCheck {
    pub center_height: f64,
    pub pairing: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `(M - Pi)(omega)` for `omega = eta(|X - X0|) dx^1 ^ ... ^ dx^n`, `X0 = (0, c)`,
/// against `sup|eta| M_U(A) + sup|eta'| M_U(B)` with `U` the support ball.
pub fn pairing_check(f: &dyn GraphFunction, h0: f64, form: TestForm) -> Result<PairingCheck> {
    let p = f.radial().ok_or_else(|| Error::InvalidParameter("pairing check needs a rotational graph".into()))?;
    let n = f.dim().get();
    let nf = n as f64;
    let area = nf * ball_volume(n);
    let c = form.center_height;
    let r_min = p.r_min();
    let err: Cell<Option<Error>> = Cell::new(None);
    let integrand = |r: f64| -> f64 {
        let plane = form.eta((r * r + (h0 - c) * (h0 - c)).sqrt());
        let graph = if r <= r_min {
            0.0
        } else {
            match p.height(r) {
                Ok(u) => form.eta((r * r + (u - c) * (u - c)).sqrt()),
                Err(e) => {
                    err.set(Some(e));
                    0.0
                }
            }
        };
        area * r.powf(nf - 1.0) * (graph - plane)
    };
    let mut breaks = vec![0.0, form.radius];
    if r_min > 0.0 && r_min < form.radius {
        breaks.insert(1, r_min);
    }
    let pairing = quad::adaptive_with_breaks(integrand, &breaks, 1e-14 * form.radius.powf(nf), 1e-11)?.value;
    if let Some(e) = err.take() {
        return Err(e);
    }
    let mut center = vec![0.0; n + 1];
    center[n] = c;
    let dec = flat_distance_upper(f, h0, &Ball::new(center, form.radius)?)?;
    let bound = dec.mass_a + form.lipschitz() * (dec.mass_b_plus + dec.mass_b_minus);
    Ok(PairingCheck {
        center_height: c,
        pairing,
        bound,
        holds: pairing.abs() <= bound * (1.0 + 1e-8) + 1e-14,
    })
}

/// The slab `{h0 < h < h0 + delta}` inside a ball of radius `rho` centred at `(0, c)`.
pub fn slab_volume(n: usize, rho: f64, c: f64, lo: f64, hi: f64) -> f64 {
    let (a, b) = ((lo - c).max(-rho), (hi - c).min(rho));
    if b <= a {
        return 0.0;
    }
    quad::adaptive(
        |z| ball_volume(n) * (rho * rho - z * z).max(0.0).powf(0.5 * n as f64),
        a,
        b,
        1e-15,
        1e-13,
    )
    .map(|v| v.value)
    .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{Plane, RotationalGraph};
    use crate::schwarzschild::SchwarzschildProfile;

    fn dim(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    #[test]
    fn lens_limits() {
        assert_eq!(lens_volume(3, 1.0, 1.0, 3.0), 0.0);
        assert!((lens_volume(3, 1.0, 2.0, 0.5) - 4.0 * PI / 3.0).abs() < 1e-14);
        // two unit balls at distance 1: 5 pi / 12
        assert!((lens_volume(3, 1.0, 1.0, 1.0) - 5.0 * PI / 12.0).abs() < 1e-12);
    }

    #[test]
    fn plane_at_h0_has_zero_distance() {
        let p = Plane::new(dim(4), 0.3);
        let d = flat_distance_upper(&p, 0.3, &Ball::centered(dim(4), 0.3, 2.0).unwrap()).unwrap();
        assert!(d.total.abs() < 1e-12);
    }

    #[test]
    fn slicing_orders_agree() {
        let n = dim(5);
        let g = RotationalGraph::new(n, Arc::new(SchwarzschildProfile::new(n, 1.0).unwrap())).unwrap();
        let h0 = h_zero(&g, 1.0).unwrap();
        let u = Ball::centered(n, h0, 3.0).unwrap();
        let d = flat_distance_upper(&g, h0, &u).unwrap();
        let (plus, minus) = column_masses(&g, h0, &u).unwrap();
        assert!((d.mass_b_plus - plus).abs() < 1e-4 * plus, "{} {}", d.mass_b_plus, plus);
        assert!((d.mass_b_minus - minus).abs() < 1e-4 * minus.max(1e-12), "{} {}", d.mass_b_minus, minus);
    }
}
