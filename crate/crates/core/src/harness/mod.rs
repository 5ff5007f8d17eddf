//! Command-line front end.
//!
//! Every subcommand reads one TOML [`RunConfig`], writes its artifacts to
//! the output directory and returns a process exit code: [`EXIT_PASS`],
//! [`EXIT_FAIL`] when the device or data did not pass, [`EXIT_USAGE`] for
//! bad arguments or configuration. Reports carry the resolved config and
//! the crate version and nothing time-dependent, so identical inputs give
//! byte-identical reports.

mod config;

pub use config::{
    AmplifyConfig, BorelReference, Builtin, CalibrateConfig, CertifyConfig, CircuitConfig,
    DatasetConfig, ErrorsConfig, GenerateConfig, JitterConfig, RunConfig, SelfAdjointCheck,
};

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::calibration::{
    corrected_plan, fit_systematic, CalibrationProblem, CalibrationResult, Dataset, Topology,
};
use crate::circuit::{
    build_arrangement, derive_seed, independent_mirror, mirror_circuit, perturb, ArrangementStyle,
    ErrorModel, MirrorMode, RealizedCircuit,
};
use crate::error::{Error, Result};
use crate::matrix::StateVector;
use crate::mesh::{clements_decompose, read_unitary, reconstruct, write_plan, CircuitPlan};
use crate::randomness::{
    borel_normality, borel_normality_weighted, chi_square_frequency, digits_from_trials,
    identity_mapping, to_bits, von_neumann_extract, BorelReport, ChiSquareResult,
};
use crate::simulator::{outcome_probs, sample_outcomes, sample_trials, CountsTable};
use crate::verify::{
    amplification_scan_mean, detector_coverage_test, inversion_test, is_hermitian,
    self_adjoint_test, sharpness_test, AmplificationRow, CertificationReport,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Plans a self-adjointness check counts as Hermitian within.
const HERMITIAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "qrng-mesh",
    version,
    about = "Simulate and certify mesh-interferometer random number generators"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a unitary into a coupler mesh and write plan.json.
    Decompose(DecomposeArgs),
    /// Undo test, sharpness, coverage and self-adjointness checks.
    Certify(RunArgs),
    /// Sample digits and run the randomness battery.
    Generate(RunArgs),
    /// Fit systematic offsets to count data.
    Calibrate(RunArgs),
    /// Identity deviation of multi-copy arrangements.
    Amplify(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Unitary JSON file; otherwise `circuit.unitary` from the config.
    #[arg(long, value_name = "PATH")]
    pub unitary: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Accepted for uniformity; decomposition is deterministic.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Certify(a) => load(&a).and_then(|(c, out)| cmd_certify(&c, &out)),
        Command::Generate(a) => load(&a).and_then(|(c, out)| cmd_generate(&c, &out)),
        Command::Calibrate(a) => load(&a).and_then(|(c, out)| cmd_calibrate(&c, &out)),
        Command::Amplify(a) => load(&a).and_then(|(c, out)| cmd_amplify(&c, &out)),
    };
    match outcome {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(args: &RunArgs) -> Result<(RunConfig, PathBuf)> {
    let mut config = RunConfig::load(&args.config)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out))
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    pass: bool,
    config: &'a RunConfig,
    result: T,
}

fn write_report<T: Serialize>(
    path: &Path,
    command: &str,
    pass: bool,
    config: &RunConfig,
    result: T,
) -> Result<()> {
    let envelope = Envelope {
        command,
        version: VERSION,
        pass,
        config,
        result,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Exit code of a finished command and the lines it reports on stdout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, summary: Vec<String>) -> Self {
        Self {
            exit_code: if pass { EXIT_PASS } else { EXIT_FAIL },
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.exit_code == EXIT_PASS
    }
}

/// Decomposes the unitary and writes `plan.json`.
pub fn cmd_decompose(args: &DecomposeArgs) -> Result<Outcome> {
    let (source, config_out) = match (&args.unitary, &args.config) {
        (Some(path), _) => (path.clone(), None),
        (None, Some(cfg)) => {
            let config = RunConfig::load(cfg)?;
            let path = config.circuit.unitary.clone().ok_or_else(|| {
                Error::Config("decompose needs circuit.unitary in the config".into())
            })?;
            (path, config.out_dir)
        }
        (None, None) => {
            return Err(Error::Config(
                "decompose needs --unitary or --config".into(),
            ))
        }
    };
    let out = args
        .out
        .clone()
        .or(config_out)
        .unwrap_or_else(|| PathBuf::from("."));
    let u = read_unitary(&source)?;
    let plan = clements_decompose(&u)?;
    let error = reconstruct(&plan).distance(&u);
    prepare_out(&out)?;
    write_plan(out.join("plan.json"), &plan)?;
    Ok(Outcome::new(
        true,
        vec![
            format!(
                "gates: {} ({} couplers)",
                plan.len(),
                plan.beam_splitter_count()
            ),
            format!("round-trip error: {error:.3e}"),
        ],
    ))
}

struct Setup {
    seed: u64,
    nominal: CircuitPlan,
    model: ErrorModel,
    input: StateVector,
}

fn setup(config: &RunConfig) -> Result<Setup> {
    let seed = config.require_seed()?;
    let nominal = config.circuit.nominal()?;
    let model = config.errors.model()?;
    model
        .validate(&nominal)
        .map_err(|e| Error::Config(format!("errors: {e}")))?;
    let input = config.circuit.input(nominal.modes())?;
    Ok(Setup {
        seed,
        nominal,
        model,
        input,
    })
}

#[derive(Serialize)]
struct CertifyResult {
    seed: u64,
    report: CertificationReport,
    amplification: Option<Vec<AmplificationRow>>,
    calibration: Option<CalibrationResult>,
}

/// Full certification battery; exit 0 iff every verdict passes.
pub fn cmd_certify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let s = setup(config)?;
    let cc = config.certify.clone().unwrap_or_default();
    let fwd = perturb(&s.nominal, &s.model, derive_seed(s.seed, 1))?;
    let mirror = match cc.mirror {
        MirrorMode::Exact => mirror_circuit(&fwd),
        MirrorMode::Independent => {
            independent_mirror(&s.nominal, &s.model, derive_seed(s.seed, 2))?
        }
    };
    let mut report = inversion_test(
        &fwd,
        &mirror,
        &s.input,
        cc.trials,
        derive_seed(s.seed, 3),
        &cc.thresholds,
    )?;
    report.attach_sharpness(&sharpness_test(&fwd, cc.thresholds.max_sharpness_offdiag));
    if cc.coverage_trials == 0 {
        return Err(Error::Config(
            "certify.coverage_trials must be at least 1".into(),
        ));
    }
    report.attach_coverage(&detector_coverage_test(
        &fwd,
        &s.input,
        cc.coverage_trials,
        derive_seed(s.seed, 4),
        cc.thresholds.min_clicks_per_mode,
    )?);
    let run_self_adjoint = match cc.self_adjoint {
        SelfAdjointCheck::Always => true,
        SelfAdjointCheck::Never => false,
        SelfAdjointCheck::Auto => is_hermitian(&s.nominal, HERMITIAN_TOLERANCE),
    };
    if run_self_adjoint {
        report.attach_self_adjoint(&self_adjoint_test(
            &fwd,
            cc.thresholds.max_self_adjoint_deviation,
        ));
    }
    let amplification = match &config.amplify {
        Some(a) => Some(amplification_scan_mean(
            &s.nominal,
            &s.model,
            &a.specs(),
            derive_seed(s.seed, 5),
            a.repetitions,
        )?),
        None => None,
    };
    let calibration = match &config.calibrate {
        Some(c) => Some(fit(c, &s, None)?.0),
        None => None,
    };

    let mut summary: Vec<String> = report
        .verdicts
        .iter()
        .map(|v| {
            format!(
                "{:<24} {:>12.4e}  {} {:.4e}  {}",
                v.name,
                v.value,
                if v.comparison == crate::verify::Comparison::AtMost {
                    "<="
                } else {
                    ">="
                },
                v.threshold,
                if v.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect();
    let pass = report.pass();
    summary.push(format!("certify: {}", if pass { "PASS" } else { "FAIL" }));
    prepare_out(out)?;
    write_report(
        &out.join("certify_report.json"),
        "certify",
        pass,
        config,
        CertifyResult {
            seed: s.seed,
            report,
            amplification,
            calibration,
        },
    )?;
    Ok(Outcome::new(pass, summary))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TestStatus<T> {
    Pass { result: T },
    Fail { result: T },
    InsufficientData { reason: String },
}

impl<T> TestStatus<T> {
    fn judged(result: T, pass: bool) -> Self {
        if pass {
            TestStatus::Pass { result }
        } else {
            TestStatus::Fail { result }
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, TestStatus::Fail { .. })
    }

    fn label(&self) -> &'static str {
        match self {
            TestStatus::Pass { .. } => "PASS",
            TestStatus::Fail { .. } => "FAIL",
            TestStatus::InsufficientData { .. } => "insufficient data",
        }
    }
}

#[derive(Serialize)]
struct GenerateResult {
    seed: u64,
    trials: u64,
    digits: usize,
    base: u8,
    expected: Vec<f64>,
    counts: Vec<u64>,
    chi_square: TestStatus<ChiSquareResult>,
    borel: TestStatus<BorelReport>,
    bits: Option<usize>,
    von_neumann_bits: Option<usize>,
}

/// Samples the realized device, writes the digit stream and runs the
/// chi-square and normality tests against the ideal nominal device.
pub fn cmd_generate(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let s = setup(config)?;
    let gc = config.generate.clone().unwrap_or_default();
    let n = s.nominal.modes();
    let mapping = if gc.mapping.is_empty() {
        identity_mapping(n)
    } else {
        gc.mapping.clone()
    };
    if mapping.len() != n {
        return Err(Error::Config(format!(
            "generate.mapping needs {n} entries, got {}",
            mapping.len()
        )));
    }
    let base = mapping.iter().copied().max().unwrap_or(0).max(1) + 1;
    if base > 3 {
        return Err(Error::Config(format!(
            "generate.mapping uses {base} digits; at most 3 are supported"
        )));
    }

    let device = perturb(&s.nominal, &s.model, derive_seed(s.seed, 1))?;
    let outcomes = sample_outcomes(&device, &s.input, gc.trials, derive_seed(s.seed, 2))?;
    let digits = digits_from_trials(&outcomes, &mapping, base)?;

    let ideal = outcome_probs(&RealizedCircuit::ideal(s.nominal.clone()), &s.input)?
        .conditional_on_detection();
    let mut expected = vec![0.0; base as usize];
    for (mode, p) in ideal.iter().enumerate() {
        expected[mapping[mode] as usize] += p;
    }

    let chi_square = if digits.is_empty() {
        TestStatus::InsufficientData {
            reason: "no detected trials".into(),
        }
    } else {
        let r = chi_square_frequency(&digits, &expected, gc.significance)?;
        let pass = r.pass;
        TestStatus::judged(r, pass)
    };
    let borel_result = match gc.borel {
        BorelReference::Weighted => borel_normality_weighted(&digits, gc.max_block, &expected),
        BorelReference::Uniform => borel_normality(&digits, gc.max_block),
    };
    let borel = match borel_result {
        Ok(r) => {
            let pass = r.pass;
            TestStatus::judged(r, pass)
        }
        Err(Error::Precondition(reason)) => TestStatus::InsufficientData { reason },
        Err(e) => return Err(e),
    };

    prepare_out(out)?;
    digits.write_text(out.join("digits.txt"))?;
    digits.write_packed(out.join("digits.bin"))?;
    let mut bit_count = None;
    let mut vn_count = None;
    if let Some(scheme) = gc.bits.filter(|_| base == 3) {
        let bits = to_bits(&digits, scheme)?;
        bits.write_text(out.join("bits.txt"))?;
        bit_count = Some(bits.len());
        if gc.von_neumann {
            let vn = von_neumann_extract(&bits)?;
            vn.write_text(out.join("bits_von_neumann.txt"))?;
            vn_count = Some(vn.len());
        }
    } else if gc.von_neumann && base == 2 {
        let vn = von_neumann_extract(&digits)?;
        vn.write_text(out.join("bits_von_neumann.txt"))?;
        vn_count = Some(vn.len());
    }

    let summary = vec![
        format!("digits: {}", digits.len()),
        format!("chi-square: {}", chi_square.label()),
        format!("borel: {}", borel.label()),
    ];
    let pass = !chi_square.failed() && !borel.failed();
    write_report(
        &out.join("generate_report.json"),
        "generate",
        pass,
        config,
        GenerateResult {
            seed: s.seed,
            trials: gc.trials,
            digits: digits.len(),
            base,
            expected,
            counts: digits.counts(),
            chi_square,
            borel,
            bits: bit_count,
            von_neumann_bits: vn_count,
        },
    )?;
    Ok(Outcome::new(pass, summary))
}

/// Builds the calibration problem (simulating datasets without a counts
/// file) and fits it. Simulated counts are written to `out` when given.
fn fit(
    cal: &CalibrateConfig,
    s: &Setup,
    out: Option<&Path>,
) -> Result<(CalibrationResult, CalibrationProblem)> {
    let n = s.nominal.modes();
    let mut datasets = Vec::with_capacity(cal.datasets.len());
    for (k, d) in cal.datasets.iter().enumerate() {
        let input = StateVector::basis(n, d.input_mode)
            .map_err(|e| Error::Config(format!("calibrate.datasets[{k}].input_mode: {e}")))?;
        let topology = match &d.arrangement {
            Some(spec) => Topology::Arrangement(spec.clone()),
            None => Topology::Single,
        };
        let counts = match (&d.counts, d.trials) {
            (Some(path), _) => CountsTable::read_csv_file(path).map_err(|e| {
                Error::Config(format!(
                    "calibrate.datasets[{k}].counts {}: {e}",
                    path.display()
                ))
            })?,
            (None, Some(trials)) => {
                let device = match &topology {
                    Topology::Single => {
                        perturb(&s.nominal, &s.model, derive_seed(s.seed, 100 + k as u64))?
                    }
                    Topology::Arrangement(spec) => build_arrangement(
                        &s.nominal,
                        &s.model,
                        spec,
                        derive_seed(s.seed, 100 + k as u64),
                    )?,
                };
                let counts =
                    sample_trials(&device, &input, trials, derive_seed(s.seed, 200 + k as u64))?;
                if let Some(dir) = out {
                    counts.write_csv_file(dir.join(format!("counts_{k}.csv")))?;
                }
                counts
            }
            (None, None) => {
                return Err(Error::Config(format!(
                    "calibrate.datasets[{k}] needs either a counts file or a trial count"
                )))
            }
        };
        datasets.push(Dataset {
            input,
            topology,
            counts,
        });
    }
    let base_model = ErrorModel {
        systematic: Default::default(),
        ..s.model.systematic_only()
    };
    let problem = CalibrationProblem {
        nominal: s.nominal.clone(),
        base_model,
        datasets,
        free_parameters: cal.parameters.clone(),
    };
    problem.validate().map_err(|e| match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    })?;
    let result = fit_systematic(&problem, derive_seed(s.seed, 300))?;
    Ok((result, problem))
}

/// Fits the configured free parameters; exit 1 when the fit did not
/// converge.
pub fn cmd_calibrate(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let s = setup(config)?;
    let cal = config
        .calibrate
        .as_ref()
        .ok_or_else(|| Error::Config("calibrate needs a [calibrate] section".into()))?;
    prepare_out(out)?;
    let (result, _) = fit(cal, &s, Some(out))?;
    let mut summary: Vec<String> = result
        .parameters
        .iter()
        .zip(&result.estimates)
        .zip(&result.half_widths)
        .map(|((p, est), hw)| {
            let width = hw.map_or_else(|| "unbounded".to_string(), |w| format!("{w:.2e}"));
            format!("gate {} {:?}: {est:+.6} +/- {width}", p.gate, p.kind)
        })
        .collect();
    summary.push(format!("converged: {}", result.converged));
    if result.converged && cal.write_corrected_plan {
        write_plan(
            out.join("corrected_plan.json"),
            &corrected_plan(&s.nominal, &result)?,
        )?;
    }
    let pass = result.converged;
    write_report(
        &out.join("calibration_report.json"),
        "calibrate",
        pass,
        config,
        &result,
    )?;
    Ok(Outcome::new(pass, summary))
}

fn style_name(style: &ArrangementStyle) -> &'static str {
    match style {
        ArrangementStyle::MirrorsAtBack => "mirrors_at_back",
        ArrangementStyle::Alternating => "alternating",
        ArrangementStyle::EvenSelfAdjoint => "even_self_adjoint",
        ArrangementStyle::ExplicitPermutation(_) => "explicit_permutation",
    }
}

/// Identity deviation against copy count, as `amplify.csv` and a report.
pub fn cmd_amplify(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let s = setup(config)?;
    let a = config
        .amplify
        .as_ref()
        .ok_or_else(|| Error::Config("amplify needs an [amplify] section".into()))?;
    let specs = a.specs();
    for spec in &specs {
        spec.validate()
            .map_err(|e| Error::Config(format!("amplify: {e}")))?;
    }
    let rows = amplification_scan_mean(&s.nominal, &s.model, &specs, s.seed, a.repetitions)?;
    prepare_out(out)?;
    let mut w = csv::Writer::from_path(out.join("amplify.csv"))?;
    w.write_record(["style", "copies", "identity_deviation"])?;
    let mut summary = Vec::with_capacity(rows.len());
    for r in &rows {
        w.write_record([
            style_name(&r.style).to_string(),
            r.copies.to_string(),
            format!("{:e}", r.identity_deviation),
        ])?;
        summary.push(format!(
            "{:<20} {:>3}  {:.6e}",
            style_name(&r.style),
            r.copies,
            r.identity_deviation
        ));
    }
    w.flush()?;
    write_report(
        &out.join("amplify_report.json"),
        "amplify",
        true,
        config,
        &rows,
    )?;
    Ok(Outcome::new(true, summary))
}
