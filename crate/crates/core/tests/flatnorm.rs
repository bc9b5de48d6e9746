mod common;

use std::f64::consts::PI;

use common::*;
use graphmass::comparison::{default_budget, integrate_comparison};
use graphmass::flatnorm::{
    column_masses, flat_distance_upper, lens_volume, pairing_check, slab_volume, theorem_bound, Ball, TestForm,
};
use graphmass::geometry::{Bump, Bumped};
use graphmass::levelsets::h_zero;
use graphmass::GraphFunction;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::gamma;

fn unit_ball(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma(d as f64 / 2.0 + 1.0)
}

/// Cap of height `t` cut from a `d`-ball of radius `r`, via the regularized beta function.
fn cap_oracle(d: usize, r: f64, t: f64) -> f64 {
    let full = unit_ball(d) * r.powi(d as i32);
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 2.0 * r {
        return full;
    }
    let small = t.min(2.0 * r - t);
    let x = (2.0 * r * small - small * small) / (r * r);
    let c = 0.5 * full * beta_reg((d as f64 + 1.0) / 2.0, 0.5, x);
    if t <= r {
        c
    } else {
        full - c
    }
}

#[test]
fn slab_is_a_cap_of_the_ball_above() {
    for n in 3..=7 {
        for t in [0.1, 0.7, 1.0, 1.6] {
            let (rho, c) = (1.0, 0.4);
            let got = slab_volume(n, rho, c, c + rho - t, f64::INFINITY);
            let want = cap_oracle(n + 1, rho, t);
            assert!((got - want).abs() <= 1e-11 * want, "n={n} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn rotational_slices_and_columns_agree() {
    for n in 3..=7 {
        let f = schwarzschild(n, 0.7);
        let h0 = h_zero(f.as_ref(), 0.7).unwrap();
        let u = Ball::centered(dim(n), h0, 2.5).unwrap();
        let dec = flat_distance_upper(f.as_ref(), h0, &u).unwrap();
        let (plus, minus) = column_masses(f.as_ref(), h0, &u).unwrap();
        let scale = unit_ball(n + 1) * 2.5f64.powi(n as i32 + 1);
        assert!((dec.mass_b_plus - plus).abs() <= 1e-9 * scale, "n={n}");
        assert!((dec.mass_b_minus - minus).abs() <= 1e-9 * scale, "n={n}");
    }
}

/// Seeded Monte Carlo estimate of `(B_+, B_-)` and its standard errors.
fn monte_carlo(f: &dyn GraphFunction, h0: f64, u: &Ball, samples: usize) -> [(f64, f64); 2] {
    let d = u.center.len();
    let vol = unit_ball(d) * u.rho.powi(d as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut plus, mut minus, mut taken) = (0usize, 0usize, 0usize);
    while taken < samples {
        let z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if z.iter().map(|a| a * a).sum::<f64>() > 1.0 {
            continue;
        }
        taken += 1;
        let p: Vec<f64> = z.iter().zip(&u.center).map(|(a, c)| c + u.rho * a).collect();
        let (x, h) = p.split_at(d - 1);
        let v = f.extended_value(x).unwrap();
        if h0 < h[0] && h[0] < v {
            plus += 1;
        } else if v < h[0] && h[0] < h0 {
            minus += 1;
        }
    }
    [plus, minus].map(|k| {
        let p = k as f64 / samples as f64;
        (vol * p, vol * (p * (1.0 - p) / samples as f64).sqrt())
    })
}

#[test]
fn column_grid_matches_monte_carlo() {
    let n = 3;
    let base = graph(schwarzschild(n, 0.5));
    let f = Bumped::new(base, Bump { center: vec![2.2, 0.0, 0.0], width: 0.8, amplitude: 0.3 }).unwrap();
    let h0 = h_zero(&f, 0.5).unwrap();
    let u = Ball::new(vec![0.3, -0.2, 0.0, h0], 3.0).unwrap();
    let dec = flat_distance_upper(&f, h0, &u).unwrap();
    assert_eq!(dec.method, "column-grid");
    let [(plus, sp), (minus, sm)] = monte_carlo(&f, h0, &u, 2_000_000);
    assert!((dec.mass_b_plus - plus).abs() <= 5.0 * sp, "{} vs {plus} +- {sp}", dec.mass_b_plus);
    assert!((dec.mass_b_minus - minus).abs() <= 5.0 * sm, "{} vs {minus} +- {sm}", dec.mass_b_minus);
    // the horizon disc of radius 2m sits at height 0, below h0
    let want_a = lens_volume(n, 1.0, (9.0 - h0 * h0).sqrt(), (0.3f64.powi(2) + 0.2f64.powi(2)).sqrt());
    assert!((dec.mass_a - want_a).abs() <= 1e-12 * want_a);
}

#[test]
fn pairing_is_controlled_by_the_decomposition() {
    for n in [3, 5] {
        let f = schwarzschild(n, 0.4);
        let h0 = h_zero(f.as_ref(), 0.4).unwrap();
        for c in [h0 - 1.0, h0, h0 + 0.5] {
            let chk = pairing_check(f.as_ref(), h0, TestForm { center_height: c, radius: 2.0 }).unwrap();
            assert!(chk.holds, "n={n} c={c}: {chk:?}");
            assert!(chk.pairing.abs() > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lens_matches_beta_oracle(d in 2usize..=8, r in 0.2f64..3.0, s in 0.2f64..3.0, t in 0.0f64..1.0) {
        let lo = (r - s).abs();
        let dist = lo + t * (r + s - lo);
        // chord plane at x0 from the centre of the first ball
        let x0 = (dist * dist + r * r - s * s) / (2.0 * dist);
        let want = cap_oracle(d, r, r - x0) + cap_oracle(d, s, s - (dist - x0));
        let got = lens_volume(d, r, s, dist);
        prop_assert!((got - want).abs() <= 1e-10 * unit_ball(d) * r.min(s).powi(d as i32), "{got} vs {want}");
    }

    #[test]
    fn theorem_bound_dominates_flat_distance(n in 5usize..=7, m in 0.01f64..2.0, rho in 0.5f64..10.0) {
        let f = schwarzschild(n, m);
        let h0 = h_zero(f.as_ref(), m).unwrap();
        let dec = flat_distance_upper(f.as_ref(), h0, &Ball::centered(dim(n), h0, rho).unwrap()).unwrap();
        let sol = integrate_comparison(dim(n), default_budget(dim(n))).unwrap();
        let b = theorem_bound(dim(n), m, rho, None, &sol).unwrap();
        prop_assert!(dec.total <= b.value, "{} > {}", dec.total, b.value);
        prop_assert!(dec.mass_a <= b.a_term * (1.0 + 1e-12));
    }
}
