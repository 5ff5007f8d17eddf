use num_complex::Complex64;
use proptest::prelude::*;
use qrng_mesh::matrix::{identity_deviation, t_block, ComplexMatrix};
use qrng_mesh::mesh::{clements_decompose, invert_plan, reconstruct, CircuitPlan, GateSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn haar(n: usize, seed: u64) -> ComplexMatrix {
    ComplexMatrix::random_unitary(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Textbook 2x2 product, written out without the crate's matrix code.
fn coupler_entries(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let i = Complex64::new(0.0, 1.0);
    let e = Complex64::from_polar(1.0, phi);
    [
        [Complex64::new(theta.cos(), 0.0), i * e * theta.sin()],
        [i * theta.sin(), e * theta.cos()],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_round_trip(n in 2usize..=8, seed in any::<u64>()) {
        let u = haar(n, seed);
        let plan = clements_decompose(&u).unwrap();
        prop_assert!(plan.beam_splitter_count() <= n * (n - 1) / 2);
        prop_assert!(reconstruct(&plan).distance(&u) <= 1e-9);
        let composed = plan.then(&invert_plan(&plan)).unwrap();
        prop_assert!(reconstruct(&composed).distance(&ComplexMatrix::identity(n)) <= 1e-9);
    }

    #[test]
    fn inverse_plan_is_the_adjoint(
        gates in prop::collection::vec((1usize..4, -7.0f64..7.0, -7.0f64..7.0), 0..12),
        phases in prop::collection::vec(-7.0f64..7.0, 4),
    ) {
        let mut list: Vec<GateSpec> = gates.iter().map(|&(j, t, p)| GateSpec::beam_splitter(j, t, p)).collect();
        list.insert(list.len() / 2, GateSpec::phase_diagonal(phases));
        let plan = CircuitPlan::new(4, list).unwrap();
        let u = reconstruct(&plan);
        prop_assert!(reconstruct(&invert_plan(&plan)).distance(&u.dagger()) < 1e-12);
    }

    #[test]
    fn coupler_matches_textbook_form(theta in -7.0f64..7.0, phi in -7.0f64..7.0) {
        let t = t_block(theta, phi).unwrap();
        let want = coupler_entries(theta, phi);
        for r in 0..2 {
            for c in 0..2 {
                prop_assert!((t[(r, c)] - want[r][c]).norm() < 1e-15);
            }
        }
        // Product of the two inverse gates in application order.
        let inv = GateSpec::beam_splitter(1, theta, phi).inverse();
        let plan = CircuitPlan::new(2, inv).unwrap();
        prop_assert!(reconstruct(&plan).distance(&t.dagger()) < 1e-14);
    }
}

#[test]
fn identity_and_global_phase_decompose_to_trivial_plans() {
    assert!(clements_decompose(&ComplexMatrix::identity(5))
        .unwrap()
        .is_empty());
    let phase = ComplexMatrix::identity(3).scale(Complex64::from_polar(1.0, 0.4));
    let plan = clements_decompose(&phase).unwrap();
    assert_eq!(plan.beam_splitter_count(), 0);
    assert!(identity_deviation(&reconstruct(&plan)) < 1e-12);
}

#[test]
fn permutation_matrices_decompose() {
    let mut p = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 2), (1, 0), (2, 3), (3, 1)] {
        p[(r, c)] = Complex64::new(1.0, 0.0);
    }
    let plan = clements_decompose(&p).unwrap();
    assert!(reconstruct(&plan).distance(&p) < 1e-12);
}
