use proptest::prelude::*;
use qrng_mesh::circuit::{perturb, ErrorModel, RealizedCircuit};
use qrng_mesh::matrix::{ComplexMatrix, StateVector};
use qrng_mesh::mesh::{clements_decompose, ux_reference};
use qrng_mesh::simulator::{outcome_probs, sample_outcomes, sample_trials, CountsTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: u64 = 1_000_000;
const IDEAL: [f64; 3] = [0.25, 0.5, 0.25];

fn ux() -> RealizedCircuit {
    RealizedCircuit::ideal(ux_reference().chain_plan)
}

fn e(k: usize) -> StateVector {
    StateVector::basis(3, k).unwrap()
}

/// Pearson statistic written out directly.
fn pearson(counts: &[u64], expected: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(expected)
        .map(|(&c, &p)| {
            let e = n as f64 * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

#[test]
fn ideal_frequencies_within_three_sigma() {
    let counts = sample_trials(&ux(), &e(0), N, 11).unwrap();
    assert_eq!(counts.trials, N);
    assert_eq!(counts.loss_count, 0);
    for (c, p) in counts.per_mode.iter().zip(IDEAL) {
        let sigma = (p * (1.0 - p) / N as f64).sqrt();
        assert!(
            (*c as f64 / N as f64 - p).abs() <= 3.0 * sigma,
            "{counts:?}"
        );
    }
}

#[test]
fn chi_square_exceedances_are_rare() {
    // For two degrees of freedom the upper 0.001 quantile is -2 ln 0.001.
    let threshold = -2.0 * 0.001f64.ln();
    let exceed = (0..100u64)
        .filter(|&s| {
            pearson(&sample_trials(&ux(), &e(0), N, s).unwrap().per_mode, &IDEAL) > threshold
        })
        .count();
    assert!(exceed < 1, "{exceed} of 100 seeds exceeded");
}

#[test]
fn herald_rate_matches_efficiency() {
    let mut model = ErrorModel::ideal();
    model.herald_efficiency = 0.5;
    let rc = perturb(&ux_reference().chain_plan, &model, 0).unwrap();
    let counts = sample_trials(&rc, &e(0), N, 5).unwrap();
    let sigma = (0.25 / N as f64).sqrt();
    assert!((counts.herald_count as f64 / N as f64 - 0.5).abs() <= 3.0 * sigma);
    assert_eq!(counts.detected() + counts.loss_count, counts.herald_count);
}

#[test]
fn lossy_frequencies_track_probabilities() {
    let mut model = ErrorModel::ideal();
    model.transmission = 0.8;
    let rc = perturb(&ux_reference().chain_plan, &model, 0).unwrap();
    let probs = outcome_probs(&rc, &e(0)).unwrap();
    assert!((probs.loss - 0.2).abs() < 1e-12);
    let counts = sample_trials(&rc, &e(0), N, 9).unwrap();
    for (c, p) in counts.categories().iter().zip(probs.categories()) {
        let sigma = (p * (1.0 - p) / N as f64).sqrt();
        assert!((*c as f64 / N as f64 - p).abs() <= 4.0 * sigma);
    }
}

#[test]
fn samples_are_reproducible_and_consistent() {
    let a = sample_outcomes(&ux(), &e(0), 50_000, 3).unwrap();
    let b = sample_outcomes(&ux(), &e(0), 50_000, 3).unwrap();
    assert_eq!(a, b);
    let mut table = CountsTable::zeros(3);
    a.iter().for_each(|&o| table.record(o));
    assert_eq!(table, sample_trials(&ux(), &e(0), 50_000, 3).unwrap());
}

#[test]
fn zero_trials_give_an_empty_table() {
    assert_eq!(
        sample_trials(&ux(), &e(0), 0, 1).unwrap(),
        CountsTable::zeros(3)
    );
}

proptest! {
    #[test]
    fn probabilities_are_conserved(
        n in 2usize..=6,
        seed in any::<u64>(),
        transmission in 0.0f64..=1.0,
        efficiency in 0.0f64..=1.0,
        input in 0usize..6,
    ) {
        let u = ComplexMatrix::random_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut model = ErrorModel::with_jitter(0.05, 0.05);
        model.transmission = transmission;
        model.detector_efficiency = vec![efficiency];
        let rc = perturb(&clements_decompose(&u).unwrap(), &model, seed).unwrap();
        let probs = outcome_probs(&rc, &StateVector::basis(n, input % n).unwrap()).unwrap();
        let total: f64 = probs.categories().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(probs.categories().iter().all(|&p| p >= 0.0));
    }
}
