use num_complex::Complex64;
use proptest::prelude::*;
use qrng_mesh::circuit::{
    build_arrangement, perturb, ArrangementSpec, ArrangementStyle, ErrorModel, GateOffset,
    RealizedCircuit,
};
use qrng_mesh::matrix::{identity_deviation, unitarity_deviation, ComplexMatrix};
use qrng_mesh::mesh::{ux_reference, CircuitPlan, GateSpec};

fn ux_plan() -> CircuitPlan {
    ux_reference().chain_plan
}

fn shared_offset(gates: &[usize], dtheta: f64) -> ErrorModel {
    gates.iter().fold(ErrorModel::ideal(), |m, &g| {
        m.with_systematic(g, GateOffset::theta(dtheta))
    })
}

fn esa(copies: usize, model: &ErrorModel) -> f64 {
    let spec = ArrangementSpec::new(ArrangementStyle::EvenSelfAdjoint, copies);
    identity_deviation(
        &build_arrangement(&ux_plan(), model, &spec, 0)
            .unwrap()
            .unitary(),
    )
}

// --- first-order oracle, independent of the crate's gate code ----------

type M3 = [[Complex64; 3]; 3];

fn zero3() -> M3 {
    [[Complex64::new(0.0, 0.0); 3]; 3]
}

fn id3() -> M3 {
    let mut m = zero3();
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = Complex64::new(1.0, 0.0);
    }
    m
}

fn mul(a: &M3, b: &M3) -> M3 {
    let mut m = zero3();
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    m
}

fn add(a: &M3, b: &M3) -> M3 {
    let mut m = zero3();
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = a[r][c] + b[r][c];
        }
    }
    m
}

fn adjoint(a: &M3) -> M3 {
    let mut m = zero3();
    for r in 0..3 {
        for c in 0..3 {
            m[r][c] = a[c][r].conj();
        }
    }
    m
}

/// Embedded coupler on modes (j-1, j), or its theta-derivative.
fn coupler(j: usize, theta: f64, phi: f64, derivative: bool) -> M3 {
    let i = Complex64::new(0.0, 1.0);
    let e = Complex64::from_polar(1.0, phi);
    let (s, c) = theta.sin_cos();
    let block = if derivative {
        [[Complex64::new(-s, 0.0), i * e * c], [i * c, -e * s]]
    } else {
        [[Complex64::new(c, 0.0), i * e * s], [i * s, e * c]]
    };
    let mut m = if derivative { zero3() } else { id3() };
    for r in 0..2 {
        for k in 0..2 {
            m[j - 1 + r][j - 1 + k] = block[r][k];
        }
    }
    m
}

fn gate_matrix(g: &GateSpec, derivative: bool) -> M3 {
    match g {
        GateSpec::BeamSplitter { j, theta, phi } => coupler(*j, *theta, *phi, derivative),
        GateSpec::PhaseDiagonal { phases } => {
            let mut m = zero3();
            for k in 0..3 {
                m[k][k] = Complex64::from_polar(1.0, phases[k]);
            }
            m
        }
    }
}

/// `U` and `dU/d(eps)` when every gate in `perturbed` gets `theta + eps`.
fn value_and_derivative(plan: &CircuitPlan, perturbed: &[usize]) -> (M3, M3) {
    let mats: Vec<M3> = plan.gates().iter().map(|g| gate_matrix(g, false)).collect();
    let u = mats.iter().fold(id3(), |acc, m| mul(m, &acc));
    let mut v = zero3();
    for &p in perturbed {
        let term = plan.gates().iter().enumerate().fold(id3(), |acc, (k, g)| {
            let m = if k == p {
                gate_matrix(g, true)
            } else {
                mats[k]
            };
            mul(&m, &acc)
        });
        v = add(&v, &term);
    }
    (u, v)
}

/// `||A - (tr A / n) I||_F`: first-order identity deviation of `I + eps A`.
fn traceless_norm(a: &M3) -> f64 {
    let tr: Complex64 = (0..3).map(|k| a[k][k]).sum::<Complex64>() / 3.0;
    let mut s = 0.0;
    for r in 0..3 {
        for c in 0..3 {
            let x = if r == c { a[r][c] - tr } else { a[r][c] };
            s += x.norm_sqr();
        }
    }
    s.sqrt()
}

fn predicted_ratio(perturbed: &[usize]) -> f64 {
    let (u, v) = value_and_derivative(&ux_plan(), perturbed);
    let two_copies = add(&mul(&u, &v), &mul(&v, &u));
    let against_nominal_mirror = mul(&adjoint(&u), &v);
    traceless_norm(&two_copies) / traceless_norm(&against_nominal_mirror)
}

fn measured_ratio(perturbed: &[usize], dtheta: f64) -> f64 {
    let model = shared_offset(perturbed, dtheta);
    let rc = perturb(&ux_plan(), &model, 0).unwrap();
    let nominal_mirror = RealizedCircuit::ideal(qrng_mesh::mesh::invert_plan(&ux_plan()));
    let undo = rc.plan.then(&nominal_mirror.plan).unwrap();
    esa(2, &model) / identity_deviation(&qrng_mesh::mesh::reconstruct(&undo))
}

#[test]
fn two_copy_ratio_follows_first_order_expansion() {
    for gates in [&[0usize][..], &[2], &[0, 1, 2]] {
        let predicted = predicted_ratio(gates);
        for dtheta in [0.001, 0.005, 0.01] {
            let measured = measured_ratio(gates, dtheta);
            assert!(
                (measured - predicted).abs() <= 0.1 * predicted,
                "gates {gates:?}, dtheta {dtheta}: measured {measured}, predicted {predicted}"
            );
        }
    }
}

#[test]
fn two_copy_ratio_is_not_two() {
    // A single coupler offset doubles nothing: the two-copy deviation
    // matches the one-copy undo deviation to first order.
    assert!((predicted_ratio(&[0]) - 1.0).abs() < 0.05);
    assert!((predicted_ratio(&[0, 1, 2]) - 2.0).abs() > 0.2);
}

#[test]
fn b23_offset_keeps_the_device_self_adjoint() {
    let model = shared_offset(&[1], 0.05);
    assert!(esa(2, &model) < 1e-12);
    assert!(predicted_ratio(&[1]) < 1e-12);
}

#[test]
fn self_adjoint_deviation_grows_with_copies() {
    for dtheta in [0.005, 0.01, 0.02] {
        let model = shared_offset(&[0, 1, 2], dtheta);
        let devs: Vec<f64> = [2, 4, 6, 8].iter().map(|&c| esa(c, &model)).collect();
        assert!(
            devs.windows(2).all(|w| w[0] <= w[1]),
            "dtheta {dtheta}: {devs:?}"
        );
    }
}

#[test]
fn exact_and_literal_mirrors_agree() {
    let model = ErrorModel::with_jitter(0.1, 0.1);
    for style in [
        ArrangementStyle::MirrorsAtBack,
        ArrangementStyle::Alternating,
    ] {
        for copies in 1..=4 {
            let spec = ArrangementSpec::new(style.clone(), copies).independent();
            let rc = build_arrangement(&ux_plan(), &model, &spec, copies as u64).unwrap();
            assert!(rc.unitary().distance(&ComplexMatrix::identity(3)) < 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn arrangements_stay_unitary(
        seed in any::<u64>(),
        sigma in 0.0f64..0.5,
        copies in 1usize..5,
        style in 0usize..3,
    ) {
        let style = [ArrangementStyle::MirrorsAtBack, ArrangementStyle::Alternating, ArrangementStyle::EvenSelfAdjoint][style].clone();
        let copies = if style == ArrangementStyle::EvenSelfAdjoint { 2 * copies } else { copies };
        let spec = ArrangementSpec::new(style, copies).independent().with_mirror(qrng_mesh::circuit::MirrorMode::Independent);
        let rc = build_arrangement(&ux_plan(), &ErrorModel::with_jitter(sigma, sigma), &spec, seed).unwrap();
        prop_assert!(unitarity_deviation(&rc.unitary()) <= 1e-10);
    }

    #[test]
    fn shared_copies_are_identical(seed in any::<u64>()) {
        let model = ErrorModel::with_jitter(0.1, 0.1);
        let spec = ArrangementSpec::new(ArrangementStyle::EvenSelfAdjoint, 2);
        let rc = build_arrangement(&ux_plan(), &model, &spec, seed).unwrap();
        let single = perturb(&ux_plan(), &model, seed).unwrap();
        let half = rc.plan.gates().len() / 2;
        prop_assert_eq!(&rc.plan.gates()[..half], single.plan.gates());
        prop_assert_eq!(&rc.plan.gates()[half..], single.plan.gates());
    }
}
