mod common;

use common::{diag_sp, norm2, rng, space, Mat};
use proptest::prelude::*;
use std::sync::Arc;
use symcocycle::cocycle::{CocycleSystem, PeriodicOrbit, TransitionWord};
use symcocycle::domination::{domination_ratio, orbit_ratios};
use symcocycle::genfunc::{
    generating_from_map, map_from_generating, smooth_step, BuiltinMap, GenOptions, LocalMap, Point,
};
use symcocycle::perturbation::{realize_at, BlockPerturbation};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn random_elements_are_symplectic(n in 1usize..4, seed in any::<u64>(), scale in 0.05f64..0.8) {
        let s = space(n);
        let m = s.random_symplectic(&mut rng(seed), scale);
        let k = norm2(&m);
        prop_assert!(s.symplectic_residual(&m).unwrap() < 1e-13 * k * k);
        let inv = s.symplectic_inverse(&m);
        let d = 2 * n;
        prop_assert!(norm2(&(&inv * &m - Mat::identity(d, d))) < 1e-12 * k * k);
    }

    #[test]
    fn spectra_are_paired(n in 1usize..4, seed in any::<u64>()) {
        let s = space(n);
        let m = s.random_symplectic(&mut rng(seed), 0.5);
        prop_assert!(common::pairing_defect(&m) < 1e-6);
        prop_assert!(s.paired_spectrum(&m).unwrap().max_residual() < 1e-6);
    }

    #[test]
    fn realized_block_fixes_other_lines(
        n in 2usize..4,
        seed in any::<u64>(),
        pair in (0usize..6, 0usize..6),
        entries in prop::array::uniform3(-0.2f64..0.2),
    ) {
        let s = space(n);
        let d = 2 * n;
        let (j, k) = (pair.0 % d, pair.1 % d);
        prop_assume!(j != k);
        let basis = s.random_symplectic(&mut rng(seed), 0.3);
        let a = 1.0 + entries[0];
        let b = Mat::from_row_slice(2, 2, &[a, entries[1], entries[2], (1.0 + entries[1] * entries[2]) / a]);
        let p = BlockPerturbation::new(j, k, b).unwrap();
        let m = realize_at(&s, &basis, &p).unwrap();
        prop_assert!(s.symplectic_residual(&m).unwrap() < 1e-10);
        let touched = [j, k, s.star(j), s.star(k)];
        for i in (0..d).filter(|i| !touched.contains(i)) {
            let v = basis.column(i).into_owned();
            prop_assert!((&m * &v - &v).norm() < 1e-10 * v.norm());
        }
    }

    #[test]
    fn running_ratios_match_explicit_powers(
        seed in any::<u64>(),
        slow in 1.01f64..1.5,
        fast in 1.5f64..3.0,
        nmax in 1usize..30,
    ) {
        let s = space(2);
        let mut r = rng(seed);
        let q = s.random_symplectic(&mut r, 0.3);
        let a = &q * diag_sp(&[fast, slow]) * s.symplectic_inverse(&q);
        let orbit = PeriodicOrbit::new("o", vec![a]).unwrap();
        // Eigenvalues in basis order: fast, slow, 1/slow, 1/fast.
        let e = vec![q.columns(0, 1).into_owned()];
        let f = vec![q.columns(1, 3).into_owned()];
        let running = orbit_ratios(&orbit, &e, &f, nmax);
        for n in 1..=nmax {
            let direct = domination_ratio(&orbit, &e, &f, 0, n);
            prop_assert!((running[0][n - 1] - direct).abs() <= 1e-9 * direct.max(1e-300));
        }
    }

    #[test]
    fn smooth_step_is_monotone(s in -0.5f64..1.5, h in 1e-4f64..0.1) {
        let (v0, d0, _) = smooth_step(s);
        let (v1, _, _) = smooth_step(s + h);
        prop_assert!((0.0..=1.0).contains(&v0));
        prop_assert!(v1 >= v0);
        prop_assert!(d0 >= 0.0);
    }

    #[test]
    fn cocycle_json_round_trips(n in 1usize..4, seed in any::<u64>(), period in 1usize..4) {
        let s = space(n);
        let mut r = rng(seed);
        let letters: Vec<Mat> = (0..period).map(|_| s.random_symplectic(&mut r, 0.4)).collect();
        let t = TransitionWord::new("p", "p", vec![s.random_symplectic(&mut r, 0.1)]);
        let sys = CocycleSystem::new(s.clone(), vec![PeriodicOrbit::new("p", letters).unwrap()])
            .unwrap()
            .with_transitions(vec![t])
            .unwrap();
        let back = CocycleSystem::from_json(&sys.to_json()).unwrap();
        prop_assert_eq!(back.orbits, sys.orbits);
        prop_assert_eq!(back.transitions, sys.transitions);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn quadratic_maps_round_trip(a in 0.8f64..1.25, k in -0.5f64..0.5, x in -0.1f64..0.1, y in -0.1f64..0.1) {
        let f = BuiltinMap::Quadratic { a, k };
        let opts = GenOptions { radius: 0.3, grid: 24, tol: 1e-8 };
        let g = map_from_generating(Arc::new(generating_from_map(&f, &opts).unwrap()));
        let z = Point::new(x, y);
        prop_assert!((g.eval(z).unwrap() - f.eval(z).unwrap()).norm() < 1e-8);
    }
}

#[test]
fn smooth_step_derivative_matches_differences() {
    let h = 1e-6;
    for i in 1..100 {
        let s = i as f64 / 100.0;
        let (_, d, dd) = smooth_step(s);
        let fd = (smooth_step(s + h).0 - smooth_step(s - h).0) / (2.0 * h);
        let fdd = (smooth_step(s + h).1 - smooth_step(s - h).1) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6 * (1.0 + d.abs()), "s = {s}");
        assert!((dd - fdd).abs() < 1e-5 * (1.0 + dd.abs()), "s = {s}");
    }
}
