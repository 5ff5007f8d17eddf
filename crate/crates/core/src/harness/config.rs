//! Run configuration files.
//!
//! One TOML file describes a run. Unknown keys are rejected everywhere.
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::FreeParameter;
use crate::circuit::{ArrangementSpec, ArrangementStyle, ErrorModel, GateOffset, MirrorMode};
use crate::error::{Error, Result};
use crate::matrix::StateVector;
use crate::mesh::{
    clements_decompose, read_plan, read_unitary, ux_chain_plan, ux_conjugated_plan, CircuitPlan,
    B23_THETA, B23_THETA_TABULATED,
};
use crate::randomness::BitScheme;
use crate::verify::Thresholds;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Required by every stochastic command; `--seed` overrides it.
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub errors: ErrorsConfig,
    pub certify: Option<CertifyConfig>,
    pub generate: Option<GenerateConfig>,
    pub calibrate: Option<CalibrateConfig>,
    pub amplify: Option<AmplifyConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `D' B' B B` netlist of `U_x`.
    #[default]
    Ux,
    /// `B^{-1} B D B` netlist of `U_x`.
    UxConjugated,
    /// The chain netlist with the tabulated `B_{2,3}` angle `2 pi / 3`.
    UxTabulated,
}

/// Where the nominal device comes from; at most one of the three sources.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub builtin: Option<Builtin>,
    pub plan: Option<PathBuf>,
    pub unitary: Option<PathBuf>,
    /// 0-based mode the photon enters.
    #[serde(default)]
    pub input_mode: usize,
}

impl CircuitConfig {
    pub fn nominal(&self) -> Result<CircuitPlan> {
        let given = [
            self.builtin.is_some(),
            self.plan.is_some(),
            self.unitary.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() > 1 {
            return Err(Error::Config(
                "circuit: give only one of builtin, plan, unitary".into(),
            ));
        }
        if let Some(path) = &self.plan {
            return read_plan(path)
                .map_err(|e| Error::Config(format!("circuit.plan {}: {e}", path.display())));
        }
        if let Some(path) = &self.unitary {
            let u = read_unitary(path)
                .map_err(|e| Error::Config(format!("circuit.unitary {}: {e}", path.display())))?;
            return clements_decompose(&u);
        }
        Ok(match self.builtin.unwrap_or_default() {
            Builtin::Ux => ux_chain_plan(B23_THETA),
            Builtin::UxConjugated => ux_conjugated_plan(),
            Builtin::UxTabulated => ux_chain_plan(B23_THETA_TABULATED),
        })
    }

    pub fn input(&self, modes: usize) -> Result<StateVector> {
        StateVector::basis(modes, self.input_mode)
            .map_err(|e| Error::Config(format!("circuit.input_mode: {e}")))
    }
}

/// [`ErrorModel`] as written in a config file: gate positions are table
/// keys and therefore strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorsConfig {
    pub systematic: BTreeMap<String, GateOffset>,
    pub jitter: JitterConfig,
    pub transmission: f64,
    pub component_transmission: BTreeMap<String, f64>,
    pub detector_efficiency: Vec<f64>,
    pub herald_efficiency: f64,
    pub coupler_phases: BTreeMap<String, [f64; 2]>,
}

impl Default for ErrorsConfig {
    fn default() -> Self {
        let m = ErrorModel::default();
        Self {
            systematic: BTreeMap::new(),
            jitter: JitterConfig::default(),
            transmission: m.transmission,
            component_transmission: BTreeMap::new(),
            detector_efficiency: m.detector_efficiency,
            herald_efficiency: m.herald_efficiency,
            coupler_phases: BTreeMap::new(),
        }
    }
}

/// Standard deviations of the per-gate Gaussian jitter, radians.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterConfig {
    pub sigma_theta: f64,
    pub sigma_phi: f64,
}

fn gate_keys<T: Clone>(section: &str, map: &BTreeMap<String, T>) -> Result<BTreeMap<usize, T>> {
    map.iter()
        .map(|(k, v)| {
            k.parse::<usize>().map(|g| (g, v.clone())).map_err(|_| {
                Error::Config(format!(
                    "errors.{section}: key {k:?} is not a gate position"
                ))
            })
        })
        .collect()
}

impl ErrorsConfig {
    pub fn model(&self) -> Result<ErrorModel> {
        Ok(ErrorModel {
            systematic: gate_keys("systematic", &self.systematic)?,
            jitter_sigma_theta: self.jitter.sigma_theta,
            jitter_sigma_phi: self.jitter.sigma_phi,
            transmission: self.transmission,
            component_transmission: gate_keys(
                "component_transmission",
                &self.component_transmission,
            )?,
            detector_efficiency: self.detector_efficiency.clone(),
            herald_efficiency: self.herald_efficiency,
            coupler_phases: gate_keys("coupler_phases", &self.coupler_phases)?,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelfAdjointCheck {
    /// Run only when the nominal device is its own adjoint.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub trials: u64,
    pub coverage_trials: u64,
    pub mirror: MirrorMode,
    pub self_adjoint: SelfAdjointCheck,
    pub thresholds: Thresholds,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            coverage_trials: 10_000,
            mirror: MirrorMode::Independent,
            self_adjoint: SelfAdjointCheck::Auto,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorelReference {
    /// Word frequencies against the ideal digit probabilities.
    #[default]
    Weighted,
    /// Word frequencies against `base^-m`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub trials: u64,
    pub significance: f64,
    pub max_block: usize,
    pub borel: BorelReference,
    /// Digit for a click in each mode; identity when empty.
    pub mapping: Vec<u8>,
    /// Also write a bit stream converted with this scheme.
    pub bits: Option<BitScheme>,
    pub von_neumann: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            trials: 1_000_000,
            significance: 1e-3,
            max_block: 2,
            borel: BorelReference::Weighted,
            mapping: Vec::new(),
            bits: None,
            von_neumann: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub input_mode: usize,
    /// Absent for a single device.
    pub arrangement: Option<ArrangementSpec>,
    /// Counts CSV; when absent the counts are simulated from `[errors]`.
    pub counts: Option<PathBuf>,
    pub trials: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub datasets: Vec<DatasetConfig>,
    pub parameters: Vec<FreeParameter>,
    #[serde(default)]
    pub write_corrected_plan: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifyConfig {
    pub style: ArrangementStyle,
    pub copies: Vec<usize>,
    #[serde(default)]
    pub independent_errors: bool,
    #[serde(default)]
    pub mirror: MirrorMode,
    #[serde(default = "one")]
    pub repetitions: u64,
}

fn one() -> u64 {
    1
}

impl AmplifyConfig {
    pub fn specs(&self) -> Vec<ArrangementSpec> {
        self.copies
            .iter()
            .map(|&copies| ArrangementSpec {
                copies,
                style: self.style.clone(),
                independent_errors: self.independent_errors,
                mirror: self.mirror,
            })
            .collect()
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and makes every relative path in it absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(dir);
        Ok(config)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.circuit.plan);
        fix(&mut self.circuit.unitary);
        if let Some(cal) = &mut self.calibrate {
            for d in &mut cal.datasets {
                fix(&mut d.counts);
            }
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config(
                "this command is stochastic; set `seed` in the config or pass --seed".into(),
            )
        })
    }
}
