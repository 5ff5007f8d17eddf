//! Fits a coupler offset from forward and amplified count data, then
//! corrects the plan.

use qrng_mesh::calibration::{
    corrected_plan, fit_systematic, AngleKind, CalibrationProblem, Dataset, FreeParameter, Topology,
};
use qrng_mesh::circuit::{
    build_arrangement, perturb, ArrangementSpec, ArrangementStyle, ErrorModel, GateOffset,
};
use qrng_mesh::matrix::{identity_deviation, StateVector};
use qrng_mesh::mesh::{invert_plan, reconstruct, ux_reference, CircuitPlan};
use qrng_mesh::simulator::sample_trials;

fn undo_deviation(
    plan: &CircuitPlan,
    truth: &ErrorModel,
    nominal: &CircuitPlan,
) -> qrng_mesh::Result<f64> {
    let device = perturb(plan, truth, 0)?;
    let composed = device.plan.then(&invert_plan(nominal))?;
    Ok(identity_deviation(&reconstruct(&composed)))
}

fn main() -> qrng_mesh::Result<()> {
    let nominal = ux_reference().chain_plan;
    let truth = ErrorModel::ideal().with_systematic(1, GateOffset::theta(0.02));
    let e1 = StateVector::basis(3, 0)?;
    let esa = ArrangementSpec::new(ArrangementStyle::EvenSelfAdjoint, 4);
    let forward = perturb(&nominal, &truth, 0)?;
    let amplified = build_arrangement(&nominal, &truth, &esa, 0)?;
    let problem = CalibrationProblem {
        nominal: nominal.clone(),
        base_model: ErrorModel::ideal(),
        datasets: vec![
            Dataset {
                input: e1.clone(),
                topology: Topology::Single,
                counts: sample_trials(&forward, &e1, 1_000_000, 1)?,
            },
            Dataset {
                input: e1.clone(),
                topology: Topology::Arrangement(esa),
                counts: sample_trials(&amplified, &e1, 1_000_000, 2)?,
            },
        ],
        free_parameters: vec![FreeParameter::new(1, AngleKind::Theta, 0.1)],
    };
    let r = fit_systematic(&problem, 3)?;
    println!(
        "estimate {:.5} rad +/- {:.1e} (95%), converged {}, {} iterations",
        r.estimates[0],
        r.half_widths[0].unwrap_or(f64::INFINITY),
        r.converged,
        r.iterations
    );
    let fixed = corrected_plan(&nominal, &r)?;
    println!(
        "undo deviation before {:.2e}",
        undo_deviation(&nominal, &truth, &nominal)?
    );
    println!(
        "undo deviation after  {:.2e}",
        undo_deviation(&fixed, &truth, &nominal)?
    );
    Ok(())
}
