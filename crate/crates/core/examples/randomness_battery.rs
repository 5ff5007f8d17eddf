//! Digits from simulated trials through the chi-square, normality and
//! bit-extraction stages.

use qrng_mesh::circuit::RealizedCircuit;
use qrng_mesh::matrix::StateVector;
use qrng_mesh::mesh::ux_reference;
use qrng_mesh::randomness::{
    borel_normality, borel_normality_weighted, chi_square_frequency, digits_from_trials,
    identity_mapping, to_bits, von_neumann_extract, BitScheme,
};
use qrng_mesh::simulator::sample_outcomes;

fn main() -> qrng_mesh::Result<()> {
    let ideal = [0.25, 0.5, 0.25];
    let device = RealizedCircuit::ideal(ux_reference().chain_plan);
    let outcomes = sample_outcomes(&device, &StateVector::basis(3, 0)?, 1_000_000, 9)?;
    let digits = digits_from_trials(&outcomes, &identity_mapping(3), 3)?;
    println!("{} digits, counts {:?}", digits.len(), digits.counts());

    let chi = chi_square_frequency(&digits, &ideal, 1e-3)?;
    println!(
        "chi-square {:.3} (dof {}), p = {:.3}, pass {}",
        chi.statistic, chi.dof, chi.p_value, chi.pass
    );
    let weighted = borel_normality_weighted(&digits, 2, &ideal)?;
    println!(
        "weighted normality: bound {:.2e}, pass {}",
        weighted.bound, weighted.pass
    );
    println!(
        "uniform normality on a biased stream: pass {}",
        borel_normality(&digits, 2)?.pass
    );

    let bits = to_bits(&digits, BitScheme::Outer)?;
    let vn = von_neumann_extract(&bits)?;
    println!(
        "outer bits {} (ones {:?}), von Neumann {}",
        bits.len(),
        bits.counts(),
        vn.len()
    );
    let packed = digits.to_packed();
    println!("packed stream {} bytes", packed.len());
    Ok(())
}
