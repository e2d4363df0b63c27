//! Cross-module invariants: the closed forms against the truncated-Fock
//! Liouvillian oracle over randomized parameter sets (seeded, reproducible).

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qvdp::exactstate::{factorial_moments, moments_from_distribution, photon_distribution};
use qvdp::liouville::steady_state_oracle;
use qvdp::SystemParams;

fn random_params(rng: &mut ChaCha8Rng) -> SystemParams {
    let g = rng.gen_range(0.1..=3.0);
    let eta = rng.gen_range(0.05..=1.0);
    SystemParams::new(g, 1.0, eta).unwrap()
}

#[test]
fn closed_form_matches_oracle_entrywise() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x51ead5);
    for trial in 0..20 {
        let params = random_params(&mut rng);
        let closed = photon_distribution(&params, None).unwrap();
        let oracle = steady_state_oracle(&params, closed.truncation()).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in closed.probabilities().iter().zip(oracle.probabilities()) {
            worst = worst.max((a - b).abs());
        }
        assert!(
            worst <= 1e-9,
            "trial {trial} at g={}, eta={}: max |diff| = {worst:.3e}",
            params.g(),
            params.eta()
        );
    }
}

#[test]
fn moment_consistency_over_random_params() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfac70);
    for _ in 0..10 {
        let params = random_params(&mut rng);
        let state = photon_distribution(&params, None).unwrap();
        let summed = moments_from_distribution(&state, 4).unwrap();
        let closed = factorial_moments(&params, 4).unwrap();
        for m in 0..=4 {
            let (a, b) = (summed.factorial_moments[m], closed.factorial_moments[m]);
            assert!(
                (a - b).abs() <= 1e-8 * b.abs(),
                "m={m} at g={}, eta={}: {a} vs {b}",
                params.g(),
                params.eta()
            );
        }
    }
}

#[test]
fn g2_stays_in_physical_range() {
    // g2 in (1 - 1e-9, 2 + 1e-2) over the scanned regime, approaching 2 far
    // below threshold and 1 far above as eta -> 0.
    for g in [0.2, 0.5, 0.8, 1.0, 1.3, 2.0, 3.0] {
        for eta in [0.5, 0.1, 0.02, 0.005] {
            let rep = factorial_moments(&SystemParams::new(g, 1.0, eta).unwrap(), 2).unwrap();
            assert!(
                rep.g2 > 1.0 - 1e-9 && rep.g2 < 2.0 + 1e-2,
                "g2 = {} at g={g}, eta={eta}",
                rep.g2
            );
        }
    }
    let low = factorial_moments(&SystemParams::new(0.2, 1.0, 0.002).unwrap(), 2).unwrap();
    assert!((low.g2 - 2.0).abs() < 0.01);
    let high = factorial_moments(&SystemParams::new(3.0, 1.0, 0.002).unwrap(), 2).unwrap();
    assert!((high.g2 - 1.0).abs() < 0.01);
}

#[test]
fn oracle_moments_match_closed_form_statistics() {
    let params = SystemParams::new(0.5, 1.0, 0.1).unwrap();
    let oracle = steady_state_oracle(&params, 80).unwrap();
    let from_oracle = moments_from_distribution(&oracle, 2).unwrap();
    let closed = factorial_moments(&params, 2).unwrap();
    assert!((from_oracle.g2 - closed.g2).abs() <= 1e-8 * closed.g2);

    let params = SystemParams::new(2.0, 1.0, 0.1).unwrap();
    let oracle = steady_state_oracle(&params, 140).unwrap();
    let from_oracle = moments_from_distribution(&oracle, 2).unwrap();
    let closed = factorial_moments(&params, 2).unwrap();
    assert!(
        (from_oracle.photon_number - closed.photon_number).abs() <= 1e-8 * closed.photon_number
    );
}
