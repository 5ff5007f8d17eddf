//! Outcome probabilities and sampled counts with loss and heralding.

use qrng_mesh::circuit::{perturb, ErrorModel};
use qrng_mesh::matrix::StateVector;
use qrng_mesh::mesh::ux_reference;
use qrng_mesh::simulator::{outcome_probs, sample_trials};

fn main() -> qrng_mesh::Result<()> {
    let nominal = ux_reference().chain_plan;
    let mut model = ErrorModel::ideal();
    model.transmission = 0.9;
    model.detector_efficiency = vec![0.95];
    model.herald_efficiency = 0.8;
    let device = perturb(&nominal, &model, 0)?;
    for mode in 0..3 {
        let input = StateVector::basis(3, mode)?;
        let p = outcome_probs(&device, &input)?;
        println!(
            "input e{}: modes {:.4?}, loss {:.4}",
            mode + 1,
            p.modes,
            p.loss
        );
    }
    let counts = sample_trials(&device, &StateVector::basis(3, 0)?, 1_000_000, 7)?;
    println!(
        "1e6 trials: herald {}, per mode {:?}, lost {}",
        counts.herald_count, counts.per_mode, counts.loss_count
    );
    let mut csv = Vec::new();
    counts.write_csv(&mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}
