//! Identity deviation of chained copies under a shared coupler offset.

use qrng_mesh::circuit::{ArrangementSpec, ArrangementStyle, ErrorModel, GateOffset};
use qrng_mesh::mesh::ux_reference;
use qrng_mesh::verify::amplification_scan;

fn main() -> qrng_mesh::Result<()> {
    let nominal = ux_reference().chain_plan;
    let model = (0..3).fold(ErrorModel::ideal(), |m, g| {
        m.with_systematic(g, GateOffset::theta(0.01))
    });
    let specs: Vec<ArrangementSpec> = [2, 4, 6, 8, 16]
        .iter()
        .map(|&c| ArrangementSpec::new(ArrangementStyle::EvenSelfAdjoint, c))
        .collect();
    println!("copies  deviation  per copy");
    for row in amplification_scan(&nominal, &model, &specs, 0)? {
        println!(
            "{:>6}  {:.3e}  {:.3e}",
            row.copies,
            row.identity_deviation,
            row.identity_deviation / row.copies as f64
        );
    }

    // An offset on the middle coupler alone keeps U_x self-adjoint.
    let middle = ErrorModel::ideal().with_systematic(1, GateOffset::theta(0.05));
    let rows = amplification_scan(&nominal, &middle, &specs[..1], 0)?;
    println!(
        "B23-only offset, 2 copies: {:.1e}",
        rows[0].identity_deviation
    );
    Ok(())
}
