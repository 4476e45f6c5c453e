//! Writes the sample inputs under `data/`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use symcocycle::cocycle::{CocycleSystem, PeriodicOrbit, TransitionWord};
use symcocycle::symplectic::SymplecticSpace;

/// Period-`period` orbit with period map conjugate to `diag(lams, 1/lams)`
/// and a near-identity self-transition.
fn designated(n: usize, lams: &[f64], period: usize, seed: u64) -> CocycleSystem {
    let s = SymplecticSpace::standard_form(n).unwrap();
    let q = s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed), 0.2);
    let root: Vec<f64> = lams.iter().map(|l| l.powf(1.0 / period as f64)).collect();
    let a = &q * s.diagonal(&root) * s.symplectic_inverse(&q);
    let p = PeriodicOrbit::new("p", vec![a; period]).unwrap();
    let t = TransitionWord::new("p", "p", vec![s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(seed + 1), 0.01)]);
    CocycleSystem::new(s, vec![p]).unwrap().with_transitions(vec![t]).unwrap()
}

fn dominated() -> CocycleSystem {
    let s = SymplecticSpace::standard_form(2).unwrap();
    let q = s.random_symplectic(&mut ChaCha8Rng::seed_from_u64(11), 0.3);
    let a = &q * s.diagonal(&[4.0, 2.0]) * s.symplectic_inverse(&q);
    let b = s.diagonal(&[3.0, 1.5]);
    let orbits = vec![PeriodicOrbit::new("a", vec![a.clone(), a]).unwrap(), PeriodicOrbit::new("b", vec![b]).unwrap()];
    CocycleSystem::new(s, orbits).unwrap()
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir).unwrap();
    let files = [
        ("elliptic_dim2.json", designated(1, &[1.05], 8, 3)),
        ("elliptic_dim4.json", designated(2, &[1.08, 1.04], 8, 5)),
        ("dominated_dim4.json", dominated()),
    ];
    for (name, sys) in files {
        std::fs::write(dir.join(name), sys.to_json() + "\n").unwrap();
    }
}
