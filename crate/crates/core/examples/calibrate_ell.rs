//! Calibrates the dominance index used by the two-dimensional dichotomy:
//! for random orientation-preserving periodic families it reports the
//! largest minimal index among systems that no ε-rotation makes elliptic,
//! and the smallest among dominated systems that still become elliptic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symcocycle::cocycle::{CocycleSystem, PeriodicOrbit};
use symcocycle::domination::find_splitting;
use symcocycle::linalg::Mat;
use symcocycle::perturbation::{mane_2d, mane_ell, ManeOptions};
use symcocycle::symplectic::{rotation, SymplecticSpace};

fn random_orbit(rng: &mut ChaCha8Rng, k: f64) -> PeriodicOrbit {
    let p = rng.random_range(1..=4);
    let letters = (0..p)
        .map(|_| {
            let s = rng.random_range(1.0..k);
            let d = Mat::from_row_slice(2, 2, &[s, 0.0, 0.0, 1.0 / s]);
            rotation(rng.random_range(0.0..std::f64::consts::TAU))
                * d
                * rotation(rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    PeriodicOrbit::new("r", letters).unwrap()
}

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(10.0);
    let eps = args.get(1).copied().unwrap_or(0.05);
    let count = args.get(2).copied().unwrap_or(200.0) as usize;
    let cap = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let space = SymplecticSpace::standard_form(1).unwrap();
    let (mut rigid_max, mut soft_min) = (0usize, usize::MAX);
    let mut undominated_rigid = 0;
    for _ in 0..count {
        let o = random_orbit(&mut rng, k);
        let soft = mane_2d(&o, eps, ManeOptions { samples: 1000, ell_max: Some(1) }).unwrap().is_complexified();
        let sys = CocycleSystem::new(space.clone(), vec![o]).unwrap();
        let ell = find_splitting(&sys, 1, cap).unwrap().ell();
        match (soft, ell) {
            (false, Some(l)) => rigid_max = rigid_max.max(l),
            (false, None) => undominated_rigid += 1,
            (true, Some(l)) => soft_min = soft_min.min(l),
            (true, None) => {}
        }
    }
    println!(
        "K={k} eps={eps}: rigid max ell {rigid_max}, elliptic-reachable min ell {soft_min}, rigid without splitting {undominated_rigid}, formula {}",
        mane_ell(k, eps)
    );
}
