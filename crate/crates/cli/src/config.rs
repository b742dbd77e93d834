//! Command-line flags and the resolved run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use bellnet::lhv::DEFAULT_BUDGET;
use bellnet::network::InterBobLink;
use bellnet::registry::{ScenarioParams, StateSpec};
use bellnet::scenario::FamilySelection;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "bellnet", version, about = "Bell inequalities in quantum networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the scenario catalog.
    List(OutputArgs),
    /// Certify the classical bound of an inequality.
    Certify(RunArgs),
    /// Evaluate an inequality on a state at fixed angles.
    Evaluate(RunArgs),
    /// Maximize the quantum value over measurement angles.
    Optimize(RunArgs),
    /// Run a Monte-Carlo Bell test.
    Simulate(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::List(_) => "list",
            Command::Certify(_) => "certify",
            Command::Evaluate(_) => "evaluate",
            Command::Optimize(_) => "optimize",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Scenario name, see `list`.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub r_num: Option<u32>,
    #[arg(long)]
    pub r_den: Option<u32>,
    /// first, second or combined.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<FamilySelection>,
    /// Inter-Bob sources as `source:bob-bob`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_link)]
    pub wiring: Option<Vec<InterBobLink>>,
    /// Bob receiving each Alice's pair, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alice_bobs: Option<Vec<usize>>,
    /// Inter-Bob measurement bit as `source=bit` (0-based source index).
    #[arg(long = "inter-bit", value_parser = parse_inter_bit)]
    pub inter_bits: Vec<(usize, u8)>,
    /// target, phi+, phi-, psi+, psi-, smolin, mixed, rho1(q), rho2(q) or mix(q,A,B).
    #[arg(long)]
    pub state: Option<StateSpec>,
    /// Angles in `angle_keys` order; numbers or multiples of `pi`.
    #[arg(long, value_delimiter = ',', value_parser = parse_angle)]
    pub angles: Option<Vec<f64>>,
    #[arg(long)]
    pub rounds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Largest strategy count enumerated before the certificate is used.
    #[arg(long)]
    pub budget: Option<u128>,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Everything a run depends on, echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub r_num: Option<u32>,
    pub r_den: Option<u32>,
    pub family: Option<FamilySelection>,
    pub wiring: Vec<InterBobLink>,
    pub alice_bobs: Option<Vec<usize>>,
    pub inter_bits: BTreeMap<usize, u8>,
    pub state: StateSpec,
    pub angles: Option<Vec<f64>>,
    pub rounds: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub budget: u128,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: String::new(),
            k: None,
            n: None,
            m: None,
            r_num: None,
            r_den: None,
            family: None,
            wiring: Vec::new(),
            alice_bobs: None,
            inter_bits: BTreeMap::new(),
            state: StateSpec::Target,
            angles: None,
            rounds: 100_000,
            seed: 0,
            tolerance: 1e-6,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl RunConfig {
    /// Config file (if any) overlaid with explicit flags.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let mut c = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = &args.scenario {
            c.scenario = s.clone();
        }
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if args.$field.is_some() {
                    c.$field = args.$field.clone();
                })*
            };
        }
        overlay!(k, n, m, r_num, r_den, family, alice_bobs, angles);
        if let Some(w) = &args.wiring {
            c.wiring = w.clone();
        }
        c.inter_bits.extend(args.inter_bits.iter().copied());
        if let Some(s) = &args.state {
            c.state = s.clone();
        }
        if let Some(r) = args.rounds {
            c.rounds = r;
        }
        if let Some(s) = args.seed {
            c.seed = s;
        }
        if let Some(t) = args.tolerance {
            c.tolerance = t;
        }
        if let Some(b) = args.budget {
            c.budget = b;
        }
        if c.scenario.is_empty() {
            return Err(CliError::Usage("no scenario given; use --scenario or --config".into()));
        }
        if c.rounds == 0 {
            return Err(CliError::Usage("--rounds must be positive".into()));
        }
        if !(c.tolerance > 0.0 && c.tolerance.is_finite()) {
            return Err(CliError::Usage("--tolerance must be positive".into()));
        }
        Ok(c)
    }

    pub fn params(&self) -> ScenarioParams {
        ScenarioParams {
            k: self.k,
            n: self.n,
            m: self.m,
            r_num: self.r_num,
            r_den: self.r_den,
            family: self.family,
            wiring: self.wiring.clone(),
            alice_bobs: self.alice_bobs.clone(),
            inter_bits: self.inter_bits.clone(),
        }
    }
}

fn parse_family(s: &str) -> Result<FamilySelection, String> {
    match s {
        "first" => Ok(FamilySelection::First),
        "second" => Ok(FamilySelection::Second),
        "combined" => Ok(FamilySelection::Combined),
        _ => Err(format!("expected first, second or combined, got {s:?}")),
    }
}

fn parse_link(item: &str) -> Result<InterBobLink, String> {
    let bad = || format!("expected source:bob-bob, got {item:?}");
    let (src, bobs) = item.trim().split_once(':').ok_or_else(bad)?;
    let (a, b) = bobs.split_once('-').ok_or_else(bad)?;
    Ok(InterBobLink {
        source: src.parse().map_err(|_| bad())?,
        bobs: (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?),
    })
}

fn parse_inter_bit(s: &str) -> Result<(usize, u8), String> {
    let bad = || format!("expected source=bit, got {s:?}");
    let (src, bit) = s.split_once('=').ok_or_else(bad)?;
    let bit: u8 = bit.parse().map_err(|_| bad())?;
    if bit > 1 {
        return Err(bad());
    }
    Ok((src.parse().map_err(|_| bad())?, bit))
}

/// Parses `0.3`, `pi`, `pi/4`, `3pi/8` or `3*pi/8`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot read angle {s:?}");
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().map_err(|_| bad())?),
        None => (t, 1.0),
    };
    let coef = num.strip_suffix("pi").ok_or_else(bad)?.trim_end_matches('*');
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| bad())?
    };
    Ok(coef * std::f64::consts::PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_forms() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3pi/8").unwrap(), 3.0 * PI / 8.0);
        assert_eq!(parse_angle("3*pi/8").unwrap(), 3.0 * PI / 8.0);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn wiring_and_bits() {
        assert_eq!(parse_link("4:2-3").unwrap(), InterBobLink { source: 4, bobs: (2, 3) });
        assert!(parse_link("3:1").is_err());
        assert_eq!(parse_inter_bit("2=1").unwrap(), (2, 1));
        assert!(parse_inter_bit("2=3").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"scenario": "star", "k": 3, "seed": 9, "state": "rho1(0.5)"}"#).unwrap();
        let args = RunArgs {
            config: Some(path),
            k: Some(2),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args).unwrap();
        assert_eq!(c.scenario, "star");
        assert_eq!(c.k, Some(2));
        assert_eq!(c.seed, 9);
        assert_eq!(c.state, StateSpec::Rho1(0.5));
        assert_eq!(c.tolerance, 1e-6);
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"scenario": "star", "colour": 1}"#).unwrap();
        let args = RunArgs {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
        let args = RunArgs {
            scenario: Some("chsh".into()),
            rounds: Some(0),
            ..Default::default()
        };
        assert!(matches!(RunConfig::resolve(&args), Err(CliError::Usage(_))));
        assert!(matches!(RunConfig::resolve(&RunArgs::default()), Err(CliError::Usage(_))));
    }
}
