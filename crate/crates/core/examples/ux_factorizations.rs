//! The two coupler factorizations of the spin-1 eigenbasis transform.

use qrng_mesh::matrix::{spin1_observable, ComplexMatrix};
use qrng_mesh::mesh::{reconstruct, ux_chain_plan, ux_reference, B23_THETA, B23_THETA_TABULATED};

fn main() -> qrng_mesh::Result<()> {
    let r = ux_reference();
    println!("U_x =");
    for row in 0..3 {
        let entries: Vec<String> = r
            .matrix
            .row(row)
            .iter()
            .map(|z| format!("{:+.4}", z.re))
            .collect();
        println!("  [{}]", entries.join(", "));
    }
    println!(
        "conjugated plan: {} gates, error {:.1e}",
        r.conjugated_plan.len(),
        reconstruct(&r.conjugated_plan).distance(&r.matrix)
    );
    println!(
        "chain plan:      {} gates, error {:.1e}",
        r.chain_plan.len(),
        reconstruct(&r.chain_plan).distance(&r.matrix)
    );
    for (label, theta) in [("pi/3", B23_THETA), ("2pi/3", B23_THETA_TABULATED)] {
        let err = reconstruct(&ux_chain_plan(theta)).distance(&r.matrix);
        println!("B23 theta = {label:>5}: error {err:.3e}");
    }
    let u2 = r.matrix.pow(2);
    println!(
        "|U_x^2 - I| = {:.1e}",
        u2.distance(&ComplexMatrix::identity(3))
    );

    // U_x diagonalizes S_x: U_x^dagger S_x U_x is diagonal.
    let sx = spin1_observable(std::f64::consts::FRAC_PI_2, 0.0)?;
    let d = r.matrix.dagger().matmul(&sx)?.matmul(&r.matrix)?;
    let diag: Vec<String> = (0..3).map(|k| format!("{:+.3}", d[(k, k)].re)).collect();
    println!("U_x^dagger S_x U_x diagonal: [{}]", diag.join(", "));
    Ok(())
}
