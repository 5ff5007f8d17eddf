//! Sharpness, detector coverage and self-adjointness checks.

use qrng_mesh::circuit::{
    build_arrangement, perturb, ArrangementSpec, ArrangementStyle, ErrorModel, GateOffset,
    RealizedCircuit,
};
use qrng_mesh::matrix::StateVector;
use qrng_mesh::mesh::ux_reference;
use qrng_mesh::verify::{detector_coverage_test, self_adjoint_test, sharpness_test};

fn main() -> qrng_mesh::Result<()> {
    let ux = RealizedCircuit::ideal(ux_reference().chain_plan);
    let sharp = sharpness_test(&ux, 1e-6);
    println!(
        "sharpness: max off-diagonal {:.1e}, pass {}",
        sharp.gram_offdiag_max, sharp.pass
    );
    for mode in 0..3 {
        let c = detector_coverage_test(&ux, &StateVector::basis(3, mode)?, 10_000, 1, 10)?;
        println!(
            "coverage with input e{}: counts {:?}, pass {}",
            mode + 1,
            c.per_mode_counts,
            c.pass
        );
    }
    println!(
        "U_x self-adjoint: {:.1e}",
        self_adjoint_test(&ux, 1e-3).deviation
    );
    let offset = ErrorModel::ideal().with_systematic(0, GateOffset::theta(0.01));
    let bent = perturb(&ux.plan, &offset, 0)?;
    println!(
        "offset device self-adjoint deviation: {:.1e}",
        self_adjoint_test(&bent, 1e-3).deviation
    );
    let spec = ArrangementSpec::new(ArrangementStyle::EvenSelfAdjoint, 4);
    let chain = build_arrangement(&ux.plan, &offset, &spec, 0)?;
    println!(
        "four copies: {:.1e}",
        self_adjoint_test(&chain, 1e-3).deviation
    );
    Ok(())
}
