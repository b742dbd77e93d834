//! Named scenarios and state selectors.
//!
//! Scenarios are looked up by name with a flat parameter record; states are
//! written as short expressions such as `target`, `smolin`, `rho1(0.7)` or
//! `mix(0.5, phi+, psi-)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::network::{self, InterBobLink, NetworkTopology, NkmSpec, SourceKind};
use crate::scenario::{self, Exponent, FamilySelection, InequalityExpr, ScenarioError};
use crate::states::{self, BellState, LocalState, StabilizerGroup, StabilizerMixture, StateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("unknown scenario {0:?}; run `list` for the catalog")]
    UnknownScenario(String),
    #[error("scenario {scenario} needs parameter {parameter}")]
    MissingParameter { scenario: String, parameter: String },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("cannot parse state {input:?}: {reason}")]
    BadState { input: String, reason: String },
    #[error("state {state} does not fit this network: {reason}")]
    Incompatible { state: String, reason: String },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Parameters accepted by [`build`]; each scenario reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Number of single-qubit parties (sources for star networks).
    pub k: Option<usize>,
    /// Number of sources of an (N, K, m) network.
    pub n: Option<usize>,
    /// Number of Bobs of an (N, K, m) network.
    pub m: Option<usize>,
    /// Exponent `r = r_num / r_den`, both odd.
    pub r_num: Option<u32>,
    pub r_den: Option<u32>,
    pub family: Option<FamilySelection>,
    /// Inter-Bob sources of an (N, K, m) network.
    pub wiring: Vec<InterBobLink>,
    /// Bob receiving each Alice's pair (1-based), default `Bob i`.
    pub alice_bobs: Option<Vec<usize>>,
    /// Measurement bit of each inter-Bob source (0-based source index).
    pub inter_bits: BTreeMap<usize, u8>,
}

impl ScenarioParams {
    fn family(&self) -> FamilySelection {
        self.family.unwrap_or(FamilySelection::First)
    }

    fn exponent(&self) -> Result<Option<Exponent>, RegistryError> {
        match (self.r_num, self.r_den) {
            (None, None) => Ok(None),
            (Some(p), Some(q)) if p == q => Ok(None),
            (Some(p), Some(q)) => {
                if p % 2 == 0 || q % 2 == 0 {
                    return Err(RegistryError::BadParameter(format!(
                        "r = {p}/{q} needs odd numerator and denominator"
                    )));
                }
                Ok(Some(Exponent::odd((q - 1) / 2, (p - 1) / 2)))
            }
            _ => Err(RegistryError::BadParameter("give both r-num and r-den".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    pub description: &'static str,
    pub default: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub parameters: Vec<ParamSchema>,
    /// Tags of the inequalities this entry can build.
    pub tags: Vec<&'static str>,
}

const fn param(name: &'static str, description: &'static str, default: Option<&'static str>) -> ParamSchema {
    ParamSchema {
        name,
        description,
        default,
    }
}

const FAMILY: ParamSchema = param("family", "first | second | combined", Some("first"));

pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "chsh",
            description: "CHSH on one Bell pair",
            parameters: vec![],
            tags: vec!["chsh"],
        },
        CatalogEntry {
            name: "bilocal",
            description: "bilocal baseline |I|^r + |J|^r on the two-source network",
            parameters: vec![
                param("r-num", "exponent numerator", Some("1")),
                param("r-den", "exponent denominator", Some("2")),
            ],
            tags: vec!["bilocal.nonlinear", "bilocal.linear"],
        },
        CatalogEntry {
            name: "two-source",
            description: "linear inequalities on the Alice-Bob-Charlie network",
            parameters: vec![FAMILY],
            tags: vec!["two-source.first", "two-source.second", "two-source.combined"],
        },
        CatalogEntry {
            name: "star",
            description: "K-source star network, linear or with odd exponent r",
            parameters: vec![
                param("k", "number of sources, at least 2", None),
                param("r-num", "exponent numerator (odd)", Some("1")),
                param("r-den", "exponent denominator (odd)", Some("1")),
                FAMILY,
            ],
            tags: vec![
                "star.linear.first",
                "star.linear.second",
                "star.linear.combined",
                "star.nonlinear.first",
                "star.nonlinear.second",
                "star.nonlinear.combined",
            ],
        },
        CatalogEntry {
            name: "nkm",
            description: "(N, K, m) network of N sources, K Alices and m Bobs",
            parameters: vec![
                param("n", "number of sources", None),
                param("k", "number of Alices", None),
                param("m", "number of Bobs", None),
                param("wiring", "inter-Bob sources as [source, bob, bob] (config file)", Some("[]")),
                param("alice_bobs", "Bob of each Alice pair (config file)", Some("Bob i")),
                param("inter_bits", "measurement bit per inter-Bob source (config file)", Some("0")),
                FAMILY,
            ],
            tags: vec!["nkm.first", "nkm.second", "nkm.combined"],
        },
        CatalogEntry {
            name: "ghz-a",
            description: "Bell pair plus GHZ source, Bob holding two GHZ qubits",
            parameters: vec![FAMILY],
            tags: vec!["ghz-a.first", "ghz-a.second", "ghz-a.combined"],
        },
        CatalogEntry {
            name: "ghz-b",
            description: "Bell pair plus GHZ source shared by Bob, Charlie1 and Charlie2",
            parameters: vec![],
            tags: vec!["ghz-b"],
        },
    ]
}

fn need<T: Copy>(value: Option<T>, scenario: &str, parameter: &str) -> Result<T, RegistryError> {
    value.ok_or_else(|| RegistryError::MissingParameter {
        scenario: scenario.into(),
        parameter: parameter.into(),
    })
}

/// Builds the named scenario.
pub fn build(name: &str, p: &ScenarioParams) -> Result<InequalityExpr, RegistryError> {
    let family = p.family();
    let expr = match name {
        "chsh" => scenario::build_chsh()?,
        "bilocal" => {
            let r = match (p.r_num, p.r_den) {
                (None, None) => Exponent {
                    numerator: 1,
                    denominator: 2,
                    absolute: true,
                },
                (Some(a), Some(b)) if a > 0 && b > 0 => Exponent {
                    numerator: a,
                    denominator: b,
                    absolute: true,
                },
                _ => return Err(RegistryError::BadParameter("give positive r-num and r-den".into())),
            };
            scenario::bilocal_with(r)?
        }
        "two-source" => scenario::build_two_source(family)?,
        "star" => {
            let k = need(p.k, name, "k")?;
            match p.exponent()? {
                None => scenario::build_star(k, family)?,
                Some(e) => scenario::build_star_nonlinear(k, (e.denominator - 1) / 2, (e.numerator - 1) / 2, family)?,
            }
        }
        "nkm" => {
            let spec = NkmSpec {
                n_sources: need(p.n, name, "n")?,
                n_alices: need(p.k, name, "k")?,
                n_bobs: need(p.m, name, "m")?,
                links: p.wiring.clone(),
                alice_bobs: p.alice_bobs.clone(),
            };
            let topology = network::nkm(&spec).map_err(ScenarioError::from)?;
            scenario::build_nkm(topology, family, &p.inter_bits)?
        }
        "ghz-a" => scenario::build_ghz_a(family)?,
        "ghz-b" => scenario::build_ghz_b()?,
        other => return Err(RegistryError::UnknownScenario(other.into())),
    };
    Ok(expr)
}

/// A state selector.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    /// Each source emits its ideal state: `|Φ⁺⟩` or GHZ.
    Target,
    /// Every Bell-pair source emits the given Bell state.
    Bell(BellState),
    /// Smolin mixture over the two Bell-pair sources.
    Smolin,
    MaximallyMixed,
    /// `q [Φ⁺][Φ⁺] + (1-q) [Ψ⁻][Ψ⁻]`.
    Rho1(f64),
    /// `q [Φ⁺][Φ⁺] + (1-q) [Ψ⁺][Ψ⁺]`.
    Rho2(f64),
    Mix(f64, Box<StateSpec>, Box<StateSpec>),
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Target => f.write_str("target"),
            StateSpec::Bell(b) => f.write_str(bell_name(*b)),
            StateSpec::Smolin => f.write_str("smolin"),
            StateSpec::MaximallyMixed => f.write_str("mixed"),
            StateSpec::Rho1(q) => write!(f, "rho1({q})"),
            StateSpec::Rho2(q) => write!(f, "rho2({q})"),
            StateSpec::Mix(q, a, b) => write!(f, "mix({q}, {a}, {b})"),
        }
    }
}

fn bell_name(b: BellState) -> &'static str {
    match b {
        BellState::PhiPlus => "phi+",
        BellState::PhiMinus => "phi-",
        BellState::PsiPlus => "psi+",
        BellState::PsiMinus => "psi-",
    }
}

impl FromStr for StateSpec {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| RegistryError::BadState {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let simple = match lower.as_str() {
            "target" | "bell" | "ghz3" => Some(StateSpec::Target),
            "phi+" => Some(StateSpec::Bell(BellState::PhiPlus)),
            "phi-" => Some(StateSpec::Bell(BellState::PhiMinus)),
            "psi+" => Some(StateSpec::Bell(BellState::PsiPlus)),
            "psi-" => Some(StateSpec::Bell(BellState::PsiMinus)),
            "smolin" => Some(StateSpec::Smolin),
            "mixed" => Some(StateSpec::MaximallyMixed),
            _ => None,
        };
        if let Some(spec) = simple {
            return Ok(spec);
        }
        let open = t.find('(').ok_or_else(|| bad("unknown state name"))?;
        if !t.ends_with(')') {
            return Err(bad("missing closing parenthesis"));
        }
        let head = t[..open].trim().to_ascii_lowercase();
        let args = split_args(&t[open + 1..t.len() - 1]).ok_or_else(|| bad("unbalanced parentheses"))?;
        let weight = |a: &str| -> Result<f64, RegistryError> {
            let q: f64 = a.trim().parse().map_err(|_| bad("weight is not a number"))?;
            if (0.0..=1.0).contains(&q) {
                Ok(q)
            } else {
                Err(bad("weight must lie in [0, 1]"))
            }
        };
        match (head.as_str(), args.as_slice()) {
            ("rho1", [q]) => Ok(StateSpec::Rho1(weight(q)?)),
            ("rho2", [q]) => Ok(StateSpec::Rho2(weight(q)?)),
            ("mix", [q, a, b]) => Ok(StateSpec::Mix(weight(q)?, Box::new(a.parse()?), Box::new(b.parse()?))),
            _ => Err(bad("expected rho1(q), rho2(q) or mix(q, A, B)")),
        }
    }
}

fn split_args(s: &str) -> Option<Vec<&str>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return None;
    }
    out.push(s[start..].trim());
    Some(out)
}

impl Serialize for StateSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Product of the ideal source states, each Bell pair in state `bell`.
pub fn source_product(topology: &NetworkTopology, bell: BellState) -> Result<StabilizerGroup, StateError> {
    let parts: Vec<LocalState> = topology
        .sources
        .iter()
        .map(|s| match s.kind {
            SourceKind::BellPair => LocalState::Bell(bell, s.qubits[0], s.qubits[1]),
            SourceKind::Ghz3 => LocalState::Ghz3(s.qubits[0], s.qubits[1], s.qubits[2]),
        })
        .collect();
    states::product_state(&parts, topology.n_qubits)
}

/// The state each scenario is designed for: `|Φ⁺⟩` pairs and GHZ states.
pub fn target_state(topology: &NetworkTopology) -> Result<StabilizerGroup, StateError> {
    source_product(topology, BellState::PhiPlus)
}

/// Resolves a selector on a topology.
pub fn resolve_state(spec: &StateSpec, topology: &NetworkTopology) -> Result<StabilizerMixture, RegistryError> {
    let n = topology.n_qubits;
    let two_component = |q: f64, other: BellState| -> Result<StabilizerMixture, RegistryError> {
        Ok(StabilizerMixture::two_component(
            q,
            target_state(topology)?,
            source_product(topology, other)?,
        )?)
    };
    Ok(match spec {
        StateSpec::Target => StabilizerMixture::pure(target_state(topology)?),
        StateSpec::Bell(b) => StabilizerMixture::pure(source_product(topology, *b)?),
        StateSpec::Smolin => {
            let pairs: Vec<&[usize]> = topology
                .sources
                .iter()
                .filter(|s| s.kind == SourceKind::BellPair)
                .map(|s| s.qubits.as_slice())
                .collect();
            if pairs.len() != 2 || topology.sources.len() != 2 {
                return Err(RegistryError::Incompatible {
                    state: spec.to_string(),
                    reason: "needs exactly two Bell-pair sources".into(),
                });
            }
            states::smolin(pairs[0][0], pairs[0][1], pairs[1][0], pairs[1][1], n)?
        }
        StateSpec::MaximallyMixed => StabilizerMixture::maximally_mixed(n)?,
        StateSpec::Rho1(q) => two_component(*q, BellState::PsiMinus)?,
        StateSpec::Rho2(q) => two_component(*q, BellState::PsiPlus)?,
        StateSpec::Mix(q, a, b) => {
            let a = resolve_state(a, topology)?;
            let b = resolve_state(b, topology)?;
            let comps = a
                .components()
                .iter()
                .map(|(w, g)| (q * w, g.clone()))
                .chain(b.components().iter().map(|(w, g)| ((1.0 - q) * w, g.clone())))
                .filter(|(w, _)| *w > 0.0)
                .collect();
            StabilizerMixture::new(comps)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use crate::states::Expectation;

    #[test]
    fn catalog_lists_every_scenario() {
        let cat = catalog();
        let names: Vec<_> = cat.iter().map(|e| e.name).collect();
        assert_eq!(names, ["chsh", "bilocal", "two-source", "star", "nkm", "ghz-a", "ghz-b"]);
        let star = cat.iter().find(|e| e.name == "star").unwrap();
        assert!(star.parameters.iter().any(|p| p.name == "k"));
        assert!(cat.iter().all(|e| !e.tags.is_empty()));
    }

    #[test]
    fn every_entry_builds_a_listed_tag() {
        let p = ScenarioParams {
            k: Some(2),
            n: Some(3),
            m: Some(2),
            wiring: vec![InterBobLink { source: 3, bobs: (1, 2) }],
            ..Default::default()
        };
        for entry in catalog() {
            let e = build(entry.name, &p).unwrap();
            assert!(entry.tags.contains(&e.tag.as_str()), "{} -> {}", entry.name, e.tag);
        }
    }

    #[test]
    fn parameters_are_checked() {
        let p = ScenarioParams::default();
        assert!(matches!(build("star", &p), Err(RegistryError::MissingParameter { .. })));
        assert!(matches!(build("nope", &p), Err(RegistryError::UnknownScenario(_))));
        let p = ScenarioParams {
            k: Some(3),
            r_num: Some(2),
            r_den: Some(3),
            ..Default::default()
        };
        assert!(matches!(build("star", &p), Err(RegistryError::BadParameter(_))));
        let p = ScenarioParams {
            k: Some(3),
            r_num: Some(1),
            r_den: Some(3),
            family: Some(FamilySelection::Combined),
            ..Default::default()
        };
        let e = build("star", &p).unwrap();
        assert_eq!(e.classical_bound, 8.0);
    }

    #[test]
    fn state_selectors_parse_and_print() {
        for s in ["target", "smolin", "mixed", "psi-", "rho1(0.25)", "mix(0.5, phi+, mix(0.5, psi+, smolin))"] {
            let spec: StateSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("bell".parse::<StateSpec>().unwrap(), StateSpec::Target);
        assert!("rho1(2)".parse::<StateSpec>().is_err());
        assert!("mix(0.5, phi+)".parse::<StateSpec>().is_err());
        assert!("foo".parse::<StateSpec>().is_err());
    }

    #[test]
    fn states_resolve_on_networks() {
        let t = network::two_source();
        let z = PauliString::parse("+Z0 Z1 Z2 Z3", 4).unwrap();
        let zx = PauliString::parse("+Z0 Z1 X2 X3", 4).unwrap();
        let smolin = resolve_state(&StateSpec::Smolin, &t).unwrap();
        assert_eq!(smolin.expectation(&z).unwrap(), 1.0);
        assert_eq!(smolin.expectation(&zx).unwrap(), 0.0);
        let rho = resolve_state(&"rho1(0.25)".parse().unwrap(), &t).unwrap();
        assert_eq!(rho.expectation(&zx).unwrap(), 1.0);
        let xx = PauliString::parse("+X0 X1", 4).unwrap();
        assert_eq!(rho.expectation(&xx).unwrap(), 0.25 - 0.75);
        let g = network::ghz_case_a();
        let target = resolve_state(&StateSpec::Target, &g).unwrap();
        let xxx = PauliString::parse("-X2 X3 X4", 5).unwrap();
        assert_eq!(target.expectation(&xxx).unwrap(), 1.0);
        assert!(resolve_state(&StateSpec::Smolin, &g).is_err());
    }
}
