//! Decomposes a Haar-random unitary into a coupler mesh and undoes it.

use qrng_mesh::matrix::ComplexMatrix;
use qrng_mesh::mesh::{clements_decompose, invert_plan, plan_to_json, reconstruct};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> qrng_mesh::Result<()> {
    let n = 5;
    let u = ComplexMatrix::random_unitary(n, &mut ChaCha8Rng::seed_from_u64(42));
    let plan = clements_decompose(&u)?;
    println!(
        "{n}x{n} unitary -> {} couplers, {} gates",
        plan.beam_splitter_count(),
        plan.len()
    );
    println!(
        "reconstruction error {:.2e}",
        reconstruct(&plan).distance(&u)
    );
    let undone = plan.then(&invert_plan(&plan))?;
    println!(
        "plan + inverse vs identity {:.2e}",
        reconstruct(&undone).distance(&ComplexMatrix::identity(n))
    );
    let json = plan_to_json(&plan);
    println!("plan.json is {} bytes", json.len());
    Ok(())
}
