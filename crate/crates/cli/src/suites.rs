//! The six subcommands, each turning a built scenario into a [`Report`].

use graphmass::comparison::{default_budget, initial_value, integrate_comparison};
use graphmass::flatnorm::{convergence_study, flat_distance_upper, theorem_bound, Ball, FamilyMember};
use graphmass::geometry::{halton_points, norm, scalar_curvature_gauss, scalar_curvature_reilly, shape_operator};
use graphmass::levelsets::{
    eq3_residual, h_zero, h_zero_threshold, level_volume_with, minkowski_gap, optimal_alpha, volume2_residual,
};
use graphmass::mass::{adm_mass, lam_identity_residual_with, FluxSeries, LadderOptions};
use graphmass::{Error, GraphFunction};

use crate::report::{Cell, Invariant, Report, Table};
use crate::scenario::{Built, Scenario};

const CURVATURE_POINTS: usize = 200;

/// `count` deterministic points with `lo <= |x| <= hi`.
fn shell_points(n: usize, lo: f64, hi: f64, count: usize) -> Vec<Vec<f64>> {
    halton_points(n, 64 * count)
        .into_iter()
        .filter_map(|u| {
            let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
            let l = norm(&v);
            (l > 0.05 && l <= 1.0).then(|| {
                let r = lo + (hi - lo) * l;
                v.iter().map(|a| a / l * r).collect()
            })
        })
        .take(count)
        .collect()
}

/// Heights of the profile at `count` radii spaced geometrically across `level_radii`.
fn levels(b: &Built, count: usize) -> graphmass::Result<Vec<f64>> {
    let [lo, hi] = b.level_radii;
    let lo = lo.max(1e-3 * hi);
    (0..count)
        .map(|i| b.profile.height(lo * (hi / lo).powf(i as f64 / (count - 1) as f64)))
        .collect()
}

const CHECK_COLUMNS: [&str; 6] = ["check", "x", "value", "reference", "residual", "pass"];

fn row(check: &str, x: f64, value: f64, reference: f64, residual: f64, pass: bool) -> Vec<Cell> {
    vec![check.into(), x.into(), value.into(), reference.into(), residual.into(), pass.into()]
}

fn flux_series(b: &Built) -> graphmass::Result<FluxSeries> {
    let s = adm_mass(b.graph.as_ref(), &LadderOptions::default())?;
    s.mass()?;
    Ok(s)
}

pub fn verify(s: &Scenario, b: &Built) -> anyhow::Result<Report> {
    let tol = s.tolerances;
    let f = b.graph.as_ref();
    let n = f.dim();
    let mut rep = Report { table: Table::new(&CHECK_COLUMNS), ..Default::default() };

    let (mut worst_gap, mut min_r) = (0.0f64, f64::INFINITY);
    for x in shell_points(n.get(), b.shell[0], b.shell[1], CURVATURE_POINTS) {
        let a = scalar_curvature_reilly(f, &x)?;
        let g = scalar_curvature_gauss(f, &x)?;
        let sh = shape_operator(f, &x)?;
        // R is a difference of terms of size |A|^2
        let scale = a.abs().max((&sh * &sh).trace().abs()).max(f64::MIN_POSITIVE);
        let e = (a - g).abs() / scale;
        worst_gap = worst_gap.max(e);
        min_r = min_r.min(a / scale);
        rep.table.push(row("curvature", norm(&x), a, g, e, e <= tol.curvature));
    }
    rep.invariants.push(
        Invariant::new(
            "curvature-routes-agree",
            worst_gap <= tol.curvature,
            format!("worst relative gap {worst_gap:.3e} over {CURVATURE_POINTS} points"),
        )
        .with("worst", worst_gap),
    );

    if b.nonnegative_curvature {
        rep.invariants.push(
            Invariant::new(
                "scalar-curvature-nonnegative",
                min_r >= -tol.curvature,
                format!("min R / |A|^2 = {min_r:.3e}"),
            )
            .with("min_relative_R", min_r),
        );
    } else {
        rep.note("min_relative_R", min_r);
    }
    let Some(m) = b.mass else {
        return Ok(rep);
    };

    let series = flux_series(b)?;
    let got = series.mass()?;
    for (r, v) in series.radii.iter().zip(&series.flux_values) {
        rep.table.push(row("flux", *r, *v, m, v - m, true));
    }
    let err = (got - m).abs() / m;
    rep.invariants.push(
        Invariant::new("adm-mass", err <= tol.mass, format!("mass {got} vs {m}, relative error {err:.3e}"))
            .with("mass", got)
            .with("relative_error", err),
    );
    // monotonicity of the flux is a consequence of R >= 0, not of the identity
    if b.nonnegative_curvature {
        rep.invariants.push(Invariant::new(
            "flux-monotone",
            series.monotone,
            format!("{} ladder radii", series.radii.len()),
        ));
    } else {
        rep.note("flux_monotone", series.monotone);
    }

    let c_n = n.constants().c_n;
    let rotational = f.radial().is_some();
    let opts = s.coarea.options();
    let id_tol = tol.identity;
    let h0 = h_zero_level(f, m);
    let (mut id_worst, mut gap_min, mut vol_min) = (0.0f64, f64::INFINITY, f64::INFINITY);
    for h in levels(b, s.study.levels)? {
        let q = lam_identity_residual_with(f, h, &series, &opts)?;
        let r = q.identity_residual / (c_n * m);
        id_worst = id_worst.max(r);
        rep.table.push(row("identity", h, q.interior_scalar_integral + q.quasilocal_term, c_n * got, r, r <= id_tol));

        let slice = level_volume_with(f, h, &opts)?;
        let gap = minkowski_gap(&slice, n)? / slice.total_mean_curvature;
        gap_min = gap_min.min(gap);
        rep.table.push(row("minkowski", h, gap, slice.total_mean_curvature, gap, gap >= -tol.minkowski));

        // the volume inequalities need round, outward-minimizing levels above h0
        if rotational && h0.is_some_and(|h0| h >= h0) {
            let e4 = volume2_residual(f, h, m)?;
            let alpha = optimal_alpha(slice.volume, m, n)?;
            let e3 = eq3_residual(n, slice.volume_derivative, slice.total_mean_curvature, alpha, m);
            let rel = (e3 / slice.volume_derivative).min(e4 / slice.volume_derivative);
            vol_min = vol_min.min(rel);
            rep.table.push(row("volume-inequality", h, e3, e4, rel, rel >= 0.0));
        }
    }
    rep.invariants.push(
        Invariant::new(
            "quasi-local-identity",
            id_worst <= id_tol,
            format!("worst residual / (C_n m) = {id_worst:.3e}"),
        )
        .with("worst", id_worst),
    );
    rep.invariants.push(
        Invariant::new("minkowski-gap", gap_min >= -tol.minkowski, format!("min relative gap {gap_min:.3e}"))
            .with("min", gap_min),
    );
    if vol_min.is_finite() {
        rep.invariants.push(
            Invariant::new(
                "volume-inequalities",
                vol_min >= 0.0,
                format!("min relative residual {vol_min:.3e} above h0"),
            )
            .with("min", vol_min),
        );
    }
    Ok(rep)
}

fn h_zero_level(f: &dyn GraphFunction, m: f64) -> Option<f64> {
    h_zero(f, m).ok().filter(|h| h.is_finite())
}

pub fn mass(s: &Scenario, b: &Built) -> anyhow::Result<Report> {
    let series = flux_series(b)?;
    let got = series.mass()?;
    let mut rep = Report { table: Table::new(&["r", "flux", "increment"]), ..Default::default() };
    let mut prev = f64::NAN;
    for (r, v) in series.radii.iter().zip(&series.flux_values) {
        rep.table.push(vec![(*r).into(), (*v).into(), (v - prev).into()]);
        prev = *v;
    }
    rep.invariants.push(Invariant::new("flux-monotone", series.monotone, series.convergence_certificate.clone()));
    if let Some(m) = b.mass {
        let err = (got - m).abs() / m;
        rep.invariants.push(
            Invariant::new("adm-mass", err <= s.tolerances.mass, format!("mass {got} vs {m}, relative error {err:.3e}"))
                .with("relative_error", err),
        );
    }
    rep.note("mass", got);
    Ok(rep)
}

pub fn levelsets(s: &Scenario, b: &Built) -> anyhow::Result<Report> {
    let f = b.graph.as_ref();
    let n = f.dim();
    let mut rep = Report {
        table: Table::new(&[
            "h",
            "V",
            "Vprime",
            "total_mean_curvature",
            "minkowski_gap",
            "min_abs_gradient",
            "regular",
            "convex_verified",
        ]),
        ..Default::default()
    };
    let mut prev = 0.0;
    let (mut increasing, mut gap_min) = (true, f64::INFINITY);
    for h in levels(b, s.study.levels)? {
        let sl = level_volume_with(f, h, &s.coarea.options())?;
        let gap = minkowski_gap(&sl, n)?;
        increasing &= sl.volume > prev && sl.volume_derivative > 0.0;
        prev = sl.volume;
        gap_min = gap_min.min(gap / sl.total_mean_curvature);
        rep.table.push(vec![
            h.into(),
            sl.volume.into(),
            sl.volume_derivative.into(),
            sl.total_mean_curvature.into(),
            gap.into(),
            sl.min_abs_gradient.into(),
            sl.regular.into(),
            sl.outward_minimizing_verified().into(),
        ]);
    }
    rep.invariants.push(Invariant::new("volume-increasing", increasing, "V and V' across the sampled levels"));
    rep.invariants.push(
        Invariant::new(
            "minkowski-gap",
            gap_min >= -s.tolerances.minkowski,
            format!("min relative gap {gap_min:.3e}"),
        )
        .with("min", gap_min),
    );
    if let Some(m) = b.mass {
        rep.note("h0_threshold_volume", h_zero_threshold(n, m));
        rep.note("h0", h_zero_level(f, m));
    }
    Ok(rep)
}

pub fn ode(s: &Scenario) -> anyhow::Result<Report> {
    let n = s.dim();
    let sol = integrate_comparison(n, default_budget(n))?;
    let mut rep = Report { table: Table::new(&["h", "Y"]), ..Default::default() };
    for (h, y) in sol.grid.iter().zip(&sol.y) {
        rep.table.push(vec![(*h).into(), (*y).into()]);
    }
    rep.invariants.push(Invariant::new(
        "initial-value",
        sol.initial_value() == initial_value(n),
        format!("Y(0) = {}", sol.initial_value()),
    ));
    rep.invariants.push(Invariant::new(
        "increasing",
        sol.y.windows(2).all(|w| w[1] > w[0]),
        format!("{} steps", sol.grid.len()),
    ));
    match (sol.blow_up_height, sol.blow_up_quadrature) {
        (Some(a), Some(q)) => {
            let e = (a - q).abs() / q;
            rep.invariants.push(
                Invariant::new("blow-up-estimators-agree", e <= 1e-6, format!("integrator {a}, quadrature {q}"))
                    .with("relative_gap", e),
            );
            rep.note("blow_up_height", a);
        }
        _ => {
            let fit = sol
                .growth_fit
                .as_ref()
                .ok_or_else(|| Error::Uncertified("no growth law certified".into()))?;
            rep.invariants.push(Invariant::new("growth-certified", true, format!("{:?}, slope {}", fit.law, fit.slope)));
            rep.note("growth_fit", fit);
        }
    }
    Ok(rep)
}

pub fn flatnorm(s: &Scenario, b: &Built) -> anyhow::Result<Report> {
    let f = b.graph.as_ref();
    let n = f.dim();
    let m = b.require_mass()?;
    let h0 = h_zero_level(f, m).ok_or_else(|| Error::Range(format!("h0 undefined for mass {m}")))?;
    let mut centre = vec![0.0; n.get() + 1];
    centre[n.get()] = h0;
    if let Some(off) = &s.study.center_offset {
        centre.iter_mut().zip(off).for_each(|(c, o)| *c += o);
    }
    let rho = s.study.rho;
    let dec = flat_distance_upper(f, h0, &Ball::new(centre, rho)?)?;
    let ap = b.asymptotics(s.asymptotics)?;
    let sol = integrate_comparison(n, default_budget(n))?;
    let bound = theorem_bound(n, m, rho, ap.as_ref(), &sol)?;
    let mut rep = Report {
        table: Table::new(&["m", "h0", "rho", "mass_A", "mass_B_plus", "mass_B_minus", "total", "bound", "method"]),
        ..Default::default()
    };
    rep.table.push(vec![
        m.into(),
        h0.into(),
        rho.into(),
        dec.mass_a.into(),
        dec.mass_b_plus.into(),
        dec.mass_b_minus.into(),
        dec.total.into(),
        bound.value.into(),
        dec.method.into(),
    ]);
    rep.invariants.push(
        Invariant::new("within-bound", dec.total <= bound.value, format!("{:.6e} <= {:.6e}", dec.total, bound.value))
            .with("total", dec.total)
            .with("bound", bound.value),
    );
    rep.note("bound_terms", &bound);
    Ok(rep)
}

pub fn study(s: &Scenario, b: &Built) -> anyhow::Result<Report> {
    let n = b.graph.dim();
    let family = s
        .study
        .masses
        .iter()
        .map(|&m| Ok(FamilyMember { mass: m, graph: b.member(m)? }))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let ap = b.asymptotics(s.asymptotics)?;
    let sol = integrate_comparison(n, default_budget(n))?;
    let t = convergence_study(&family, s.study.rho, ap.as_ref(), &sol)?;
    let mut rep = Report {
        table: Table::new(&["m", "h0", "d_flat_upper", "bound", "mass_A", "mass_B_plus", "mass_B_minus"]),
        ..Default::default()
    };
    for r in &t.rows {
        rep.table.push(vec![
            r.m.into(),
            r.h0.into(),
            r.d_flat_upper.into(),
            r.bound.into(),
            r.mass_a.into(),
            r.mass_b_plus.into(),
            r.mass_b_minus.into(),
        ]);
    }
    rep.invariants.push(Invariant::new("monotone-decreasing", t.monotone_decreasing, "flat upper bound along the ladder"));
    rep.invariants.push(Invariant::new("within-bound", t.within_bound, "every member below its theorem bound"));
    rep.note("final_over_initial", t.final_over_initial);
    rep.note("fitted_exponent", t.fitted_exponent);
    rep.note("theorem_exponent", t.theorem_exponent);
    Ok(rep)
}
