//! Command-line front end for `bellnet`.
//!
//! Every run command prints one report that embeds the tool version, the
//! inequality tag, the resolved configuration and a list of checks, each
//! `PASS`, `FAIL` or `INFO`. The exit code is 0 when no check fails, 1
//! otherwise, and 2 for usage errors.

pub mod config;

use std::io::Write as _;
use std::path::Path;

use bellnet::lhv::{self, Certification, Verdict};
use bellnet::quantum::{self, OptimizeOptions};
use bellnet::registry::{self, CatalogEntry, RegistryError, StateSpec};
use bellnet::sampler::{self, EstimateReport, SamplerError};
use bellnet::scenario::{AngleAssignment, InequalityExpr, LocalityModel};
use bellnet::states::StabilizerMixture;
use serde::Serialize;
use thiserror::Error;

pub use config::{Cli, Command, Format, OutputArgs, RunArgs, RunConfig};

pub const TOOL: &str = "bellnet";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rejections of |estimate − exact| beyond this many standard errors fail.
pub const SIGMA_LIMIT: f64 = 4.0;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Lhv(#[from] lhv::LhvError),
    #[error(transparent)]
    Quantum(#[from] quantum::QuantumError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub value: f64,
    pub expected: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, verdict: Verdict, value: f64, expected: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            verdict,
            value,
            expected,
            detail: detail.into(),
        }
    }

    fn within(name: &str, value: f64, expected: f64, tolerance: f64) -> Self {
        let verdict = if (value - expected).abs() <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self::new(name, verdict, value, expected, format!("tolerance {tolerance:e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub classical_bound: f64,
    pub claimed_quantum_max: f64,
    /// quantum / classical
    pub ratio: f64,
    pub angles: AngleAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumReport {
    pub value: f64,
    pub claimed_quantum_max: f64,
    pub classical_bound: f64,
    pub ratio: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    pub angles: AngleAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub exact: f64,
    pub z_score: f64,
    pub estimate: EstimateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub scenario: String,
    pub tag: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<Certification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimum: Option<OptimumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationReport>,
    pub checks: Vec<Check>,
    pub status: Verdict,
}

impl Report {
    fn new(command: &'static str, expr: &InequalityExpr, config: RunConfig, checks: Vec<Check>) -> Self {
        let status = if checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            scenario: expr.name.clone(),
            tag: expr.tag.clone(),
            config,
            certification: None,
            evaluation: None,
            optimum: None,
            simulation: None,
            checks,
            status,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Verdict::Fail => 1,
            _ => 0,
        }
    }
}

/// Rendered output and exit code of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (output, exit_code, target) = match &cli.command {
        Command::List(out) => (render_catalog(&registry::catalog(), out.format)?, 0, out),
        Command::Simulate(args) if args.output.format == Format::Csv => {
            let (csv, code) = simulate_csv(args)?;
            (csv, code, &args.output)
        }
        cmd @ (Command::Certify(args) | Command::Evaluate(args) | Command::Optimize(args) | Command::Simulate(args)) => {
            let report = report_for(cmd, args)?;
            let text = match args.output.format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Csv => render_checks(&report)?,
            };
            (text, report.exit_code(), &args.output)
        }
    };
    match &target.out {
        Some(path) => {
            write_atomic(path, output.as_bytes())?;
            Ok(Outcome {
                output: String::new(),
                exit_code,
            })
        }
        None => Ok(Outcome { output, exit_code }),
    }
}

/// Builds the report of a run command.
pub fn report_for(cmd: &Command, args: &RunArgs) -> Result<Report, CliError> {
    let config = RunConfig::resolve(args)?;
    let expr = registry::build(&config.scenario, &config.params())?;
    match cmd {
        Command::Certify(_) => certify(expr, config),
        Command::Evaluate(_) => evaluate(expr, config),
        Command::Optimize(_) => optimize(expr, config),
        Command::Simulate(_) => simulate(expr, config),
        Command::List(_) => Err(CliError::Usage("list takes no scenario".into())),
    }
}

fn state_of(config: &RunConfig, expr: &InequalityExpr) -> Result<StabilizerMixture, CliError> {
    Ok(registry::resolve_state(&config.state, &expr.topology)?)
}

fn angles_of(config: &RunConfig, expr: &InequalityExpr) -> Result<AngleAssignment, CliError> {
    let keys = expr.angle_keys();
    let values = match &config.angles {
        Some(v) => v.clone(),
        None => vec![std::f64::consts::FRAC_PI_4; keys.len()],
    };
    AngleAssignment::new(keys, values).map_err(|e| CliError::Usage(format!("--angles: {e}")))
}

fn ratio(value: f64, classical: f64) -> f64 {
    value / classical
}

fn certify(expr: InequalityExpr, config: RunConfig) -> Result<Report, CliError> {
    let cert = lhv::certify(&expr, config.budget, config.tolerance)?;
    let mut checks = vec![Check::new(
        "classical-bound",
        cert.verdict,
        cert.lhv_max,
        cert.classical_bound,
        format!("{:?}, tolerance {:e}", cert.method, config.tolerance).to_lowercase(),
    )];
    if let Some(numeric) = cert.numeric_max {
        checks.push(Check::within("numeric-bound", numeric, cert.lhv_max, config.tolerance));
    }
    let normalization_verdict = match (cert.normalization, expr.locality) {
        (true, _) => Verdict::Pass,
        (false, LocalityModel::Bilocal) => Verdict::Info,
        (false, LocalityModel::Genuine) => Verdict::Fail,
    };
    checks.push(Check::new(
        "normalization",
        normalization_verdict,
        if cert.normalization { 1.0 } else { 0.0 },
        1.0,
        "every deterministic strategy of one family scores at most 1",
    ));
    let mut report = Report::new("certify", &expr, config, checks);
    report.certification = Some(cert);
    Ok(report)
}

fn evaluate(expr: InequalityExpr, config: RunConfig) -> Result<Report, CliError> {
    let state = state_of(&config, &expr)?;
    let angles = angles_of(&config, &expr)?;
    let value = quantum::evaluate(&expr, &state, &angles)?;
    let bound = if config.state == StateSpec::Target {
        Verdict::Pass
    } else {
        Verdict::Info
    };
    let checks = vec![
        Check::new(
            "quantum-bound",
            if value <= expr.claimed_quantum_max + config.tolerance {
                bound
            } else if bound == Verdict::Pass {
                Verdict::Fail
            } else {
                Verdict::Info
            },
            value,
            expr.claimed_quantum_max,
            "value does not exceed the stated quantum maximum",
        ),
        Check::new(
            "violation",
            Verdict::Info,
            value,
            expr.classical_bound,
            if value > expr.classical_bound + config.tolerance {
                "classical bound violated"
            } else {
                "no violation"
            },
        ),
    ];
    let mut report = Report::new("evaluate", &expr, config, checks);
    report.evaluation = Some(Evaluation {
        value,
        classical_bound: expr.classical_bound,
        claimed_quantum_max: expr.claimed_quantum_max,
        ratio: ratio(value, expr.classical_bound),
        angles,
    });
    Ok(report)
}

fn optimize(expr: InequalityExpr, config: RunConfig) -> Result<Report, CliError> {
    let state = state_of(&config, &expr)?;
    let opts = OptimizeOptions {
        seed: config.seed,
        ..OptimizeOptions::default()
    };
    let best = quantum::optimize_angles_with(&expr, &state, opts)?;
    let check = if config.state == StateSpec::Target {
        Check::within("claimed-maximum", best.value, expr.claimed_quantum_max, config.tolerance)
    } else {
        Check::new(
            "claimed-maximum",
            Verdict::Info,
            best.value,
            expr.claimed_quantum_max,
            "stated maximum refers to the target state",
        )
    };
    let checks = vec![
        check,
        Check::new(
            "stationary",
            if best.converged { Verdict::Pass } else { Verdict::Info },
            best.gradient_norm,
            0.0,
            "gradient norm at the optimum",
        ),
    ];
    let mut report = Report::new("optimize", &expr, config, checks);
    report.optimum = Some(OptimumReport {
        value: best.value,
        claimed_quantum_max: expr.claimed_quantum_max,
        classical_bound: expr.classical_bound,
        ratio: ratio(best.value, expr.classical_bound),
        gradient_norm: best.gradient_norm,
        converged: best.converged,
        angles: best.angles,
    });
    Ok(report)
}

fn simulation_checks(estimate: &EstimateReport, exact: f64) -> (Vec<Check>, f64) {
    let z = (estimate.value - exact) / estimate.standard_error;
    let mut checks = vec![Check::new(
        "estimate",
        if z.abs() <= SIGMA_LIMIT {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        estimate.value,
        exact,
        format!("within {SIGMA_LIMIT} standard errors (z = {z:.3})"),
    )];
    if estimate.empty_cells > 0 {
        checks.push(Check::new(
            "coverage",
            Verdict::Fail,
            estimate.empty_cells as f64,
            0.0,
            "input cells without rounds",
        ));
    }
    (checks, z)
}

fn simulate(expr: InequalityExpr, config: RunConfig) -> Result<Report, CliError> {
    let state = state_of(&config, &expr)?;
    let angles = angles_of(&config, &expr)?;
    let exact = quantum::evaluate(&expr, &state, &angles)?;
    let estimate = sampler::simulate_estimate(&expr, &state, &angles, config.rounds, config.seed)?;
    let (checks, z_score) = simulation_checks(&estimate, exact);
    let mut report = Report::new("simulate", &expr, config, checks);
    report.simulation = Some(SimulationReport {
        exact,
        z_score,
        estimate,
    });
    Ok(report)
}

fn simulate_csv(args: &RunArgs) -> Result<(String, i32), CliError> {
    let config = RunConfig::resolve(args)?;
    let expr = registry::build(&config.scenario, &config.params())?;
    let state = state_of(&config, &expr)?;
    let angles = angles_of(&config, &expr)?;
    let exact = quantum::evaluate(&expr, &state, &angles)?;
    let records = sampler::simulate_rounds(&expr, &state, &angles, config.rounds, config.seed)?;
    let estimate = sampler::estimate(&records, &expr)?;
    let (checks, _) = simulation_checks(&estimate, exact);
    let code = if checks.iter().any(|c| c.verdict == Verdict::Fail) { 1 } else { 0 };
    Ok((sampler::to_csv(&records, &expr), code))
}

fn render_checks(report: &Report) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "verdict", "value", "expected", "detail"])?;
    for c in &report.checks {
        let verdict = serde_json::to_value(c.verdict)?;
        w.write_record([
            c.name.clone(),
            verdict.as_str().unwrap_or_default().to_string(),
            c.value.to_string(),
            c.expected.to_string(),
            c.detail.clone(),
        ])?;
    }
    csv_string(w)
}

fn render_catalog(entries: &[CatalogEntry], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(entries)? + "\n"),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["name", "description", "parameters", "tags"])?;
            for e in entries {
                let params: Vec<&str> = e.parameters.iter().map(|p| p.name).collect();
                w.write_record([
                    e.name,
                    e.description,
                    &params.join(" "),
                    &e.tags.join(" "),
                ])?;
            }
            csv_string(w)
        }
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("--out {} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}
