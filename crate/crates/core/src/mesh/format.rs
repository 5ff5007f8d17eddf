//! JSON documents for plans and target unitaries.
//!
//! Plan:
//!
//! ```json
//! {
//!   "n": 3,
//!   "gates": [
//!     {"kind": "bs", "j": 1, "theta": 6.1547970867038737e-1, "phi": -1.5707963267948966e0},
//!     {"kind": "pd", "phases": [0.0000000000000000e0, 1.5707963267948966e0, 3.1415926535897931e0]}
//!   ]
//! }
//! ```
//!
//! Angles are written in radians with 17 significant digits, enough for an
//! exact `f64` round trip.
//!
//! Unitary: `{"rows": [[[re, im], ...], ...]}`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{CircuitPlan, GateSpec};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

fn angle(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn plan_to_json(plan: &CircuitPlan) -> String {
    let mut out = String::new();
    writeln!(out, "{{\n  \"n\": {},\n  \"gates\": [", plan.modes()).unwrap();
    let count = plan.len();
    for (k, g) in plan.gates().iter().enumerate() {
        match g {
            GateSpec::BeamSplitter { j, theta, phi } => write!(
                out,
                "    {{\"kind\": \"bs\", \"j\": {j}, \"theta\": {}, \"phi\": {}}}",
                angle(*theta),
                angle(*phi)
            ),
            GateSpec::PhaseDiagonal { phases } => {
                let list: Vec<String> = phases.iter().map(|p| angle(*p)).collect();
                write!(
                    out,
                    "    {{\"kind\": \"pd\", \"phases\": [{}]}}",
                    list.join(", ")
                )
            }
        }
        .unwrap();
        out.push_str(if k + 1 < count { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn plan_from_json(text: &str) -> Result<CircuitPlan> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        n: usize,
        gates: Vec<GateSpec>,
    }
    let doc: Doc = serde_json::from_str(text)?;
    CircuitPlan::new(doc.n, doc.gates)
}

pub fn write_plan(path: impl AsRef<Path>, plan: &CircuitPlan) -> Result<()> {
    std::fs::write(path, plan_to_json(plan))?;
    Ok(())
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<CircuitPlan> {
    plan_from_json(&std::fs::read_to_string(path)?)
}

pub fn read_unitary(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        rows: Vec<Vec<[f64; 2]>>,
    }
    let doc: Doc = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let rows = doc
        .rows
        .into_iter()
        .map(|r| {
            r.into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect()
        })
        .collect();
    let m = ComplexMatrix::from_rows(rows).map_err(|e| Error::Data(e.to_string()))?;
    if !m.is_square() {
        return Err(Error::Data(format!(
            "unitary must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

pub fn write_unitary(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let cells: Vec<String> = m
                .row(r)
                .iter()
                .map(|z| format!("[{}, {}]", angle(z.re), angle(z.im)))
                .collect();
            format!("    [{}]", cells.join(", "))
        })
        .collect();
    std::fs::write(
        path,
        format!("{{\n  \"rows\": [\n{}\n  ]\n}}\n", rows.join(",\n")),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ux_reference;
    use proptest::prelude::*;

    #[test]
    fn writes_seventeen_significant_digits() {
        let json = plan_to_json(&ux_reference().chain_plan);
        assert!(json.contains("\"theta\": 6.1547970867038737e-1"), "{json}");
        assert!(json.contains("\"kind\": \"pd\""));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_gates() {
        assert!(plan_from_json(r#"{"n": 2, "gates": [], "extra": 1}"#).is_err());
        assert!(plan_from_json(
            r#"{"n": 2, "gates": [{"kind": "bs", "j": 2, "theta": 0, "phi": 0}]}"#
        )
        .is_err());
        assert!(plan_from_json(r#"{"n": 2, "gates": [{"kind": "xx"}]}"#).is_err());
    }

    proptest! {
        #[test]
        fn plan_round_trip_is_bit_exact(
            angles in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 0..6),
            phases in prop::collection::vec(-7.0f64..7.0, 4),
        ) {
            let mut gates: Vec<GateSpec> = angles
                .iter()
                .enumerate()
                .map(|(k, &(t, p))| GateSpec::beam_splitter(k % 3 + 1, t, p))
                .collect();
            gates.push(GateSpec::phase_diagonal(phases));
            let plan = CircuitPlan::new(4, gates).unwrap();
            prop_assert_eq!(plan_from_json(&plan_to_json(&plan)).unwrap(), plan);
        }
    }
}
