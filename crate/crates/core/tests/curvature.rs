mod common;

use std::sync::Arc;

use common::*;
use graphmass::geometry::{
    graph_mean_curvature, scalar_curvature_gauss, scalar_curvature_reilly, EllipticParaboloid, LowerHemisphere,
    Paraboloid,
};
use graphmass::schwarzschild::{profile_from_mass, MassLaw, MassProfile};
use graphmass::GraphFunction;
use proptest::prelude::*;

#[test]
fn hemisphere_is_a_round_sphere() {
    // a sphere of radius R has R = n (n - 1) / R^2 everywhere
    for n in 3..=7 {
        let big_r = 1.7;
        let f = rotational(n, Arc::new(LowerHemisphere { radius: big_r }));
        let mut x = vec![0.0; n];
        for t in [0.0, 0.3, 0.9, 1.4] {
            x[0] = t;
            x[1] = 0.5 * t;
            let want = (n * (n - 1)) as f64 / (big_r * big_r);
            let got = scalar_curvature_reilly(f.as_ref(), &x).unwrap();
            assert!((got - want).abs() <= 1e-10 * want, "n={n} t={t}: {got} vs {want}");
            let h = graph_mean_curvature(f.as_ref(), &x).unwrap();
            assert!((h.abs() - n as f64 / big_r).abs() < 1e-10);
        }
    }
}

#[test]
fn paraboloid_vertex() {
    for n in 3..=7 {
        let a = 0.8;
        let f = rotational(n, Arc::new(Paraboloid { a }));
        let got = scalar_curvature_gauss(f.as_ref(), &vec![0.0; n]).unwrap();
        assert!((got - (n * (n - 1)) as f64 * a * a).abs() < 1e-12);
    }
}

#[test]
fn mass_profile_curvature_matches_mass_derivative() {
    // R = 2 (n-1) m'(r) r^(1-n), with m' differentiated by hand
    let (m_start, m_total, width) = (0.5, 1.0, 2.0);
    for n in 3..=7 {
        let law = MassLaw::ExpApproach { m_start, m_total, width };
        let p = Arc::new(profile_from_mass(MassProfile::new(law, 1.0), dim(n)).unwrap());
        let f = rotational(n, p);
        for r in [1.1, 1.7, 3.0, 8.0] {
            let mut x = vec![0.0; n];
            x[n - 1] = r;
            let dm = (m_total - m_start) / width * (-(r - 1.0) / width).exp();
            let want = 2.0 * (n as f64 - 1.0) * dm * r.powf(1.0 - n as f64);
            let got = scalar_curvature_reilly(f.as_ref(), &x).unwrap();
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1e-12), "n={n} r={r}: {got} vs {want}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reilly_and_gauss_agree(
        n in 3usize..=7,
        coeffs in prop::collection::vec(0.1f64..3.0, 7),
        xs in prop::collection::vec(-2.0f64..2.0, 7),
    ) {
        let f = EllipticParaboloid::new(dim(n), coeffs[..n].to_vec()).unwrap();
        let a = scalar_curvature_reilly(&f, &xs[..n]).unwrap();
        let b = scalar_curvature_gauss(&f, &xs[..n]).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-3));
        prop_assert!(a >= -1e-12, "convex graphs have R >= 0");
    }

    #[test]
    fn schwarzschild_is_scalar_flat(n in 3usize..=7, m in 0.05f64..5.0, t in 1.01f64..50.0, seed in 0u64..1000) {
        use rand::SeedableRng;
        let f = schwarzschild(n, m);
        let rh = f.core_radius();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = shell_point(n, t * rh, t * rh * 1.001, &mut rng);
        let r = scalar_curvature_reilly(f.as_ref(), &x).unwrap();
        // terms of R are of size |D^2 f|^2 ~ m^2 / r^(2n-2)
        let scale = (m / (t * rh).powi(n as i32 - 1)).powi(2).max(1e-300);
        prop_assert!(r.abs() <= 1e-9 * scale.sqrt().max(scale), "R = {r}");
    }
}
