//! Inequality construction: observables, correlators and segmented operators.
//!
//! Every inequality is a signed sum of correlators
//!
//! ```text
//! I = 2^{-s} ∏_{single parties} (a_0 + (-1)^e a_1) · ∏_{joint parties} b_input
//! ```
//!
//! where `s` counts the single-qubit parties. A single-qubit party measures
//! `A_x = cos θ·Z + (-1)^x sin θ·P` (`P = X` or `Y`), so its factor
//! `(A_0 + (-1)^e A_1)/2` collapses to `cos θ·Z` (`e = 0`) or `sin θ·P`
//! (`e = 1`). A joint party measures a Pauli product chosen by its input
//! label. Each correlator therefore collapses to one scaled Pauli string,
//! its segmented operator.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{self, NetworkError, NetworkTopology, NkmSpec, PartyRole, SourceKind};
use crate::pauli::{Letter, PauliError, PauliString};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("party {party} has no {family} measurement setting")]
    MissingSetting { party: String, family: Family },
    #[error("correlator {label}: factor for party {party} does not match its observable")]
    FactorMismatch { label: String, party: String },
    #[error("correlator {label} lists {got} factors for {expected} parties")]
    FactorCount { label: String, expected: usize, got: usize },
    #[error("party {party} has no observable for input {input:?}")]
    UnknownInput { party: String, input: String },
    #[error("observable of party {party} does not cover its qubits")]
    Coverage { party: String },
    #[error("duplicate correlator label {0}")]
    DuplicateLabel(String),
    #[error("exponent {0}/{1} must have odd numerator and denominator")]
    EvenExponent(u32, u32),
    #[error("t = rK = {0} must be below 2")]
    ExponentTooLarge(f64),
    #[error("angle {0} is outside the open interval (0, π/2)")]
    AngleOutOfRange(f64),
    #[error("expected {expected} angles, got {got}")]
    AngleCount { expected: usize, got: usize },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// Which measurement-setting family a correlator uses. Combined inequalities
/// give the primed family its own inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Unprimed,
    Primed,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Unprimed => "unprimed",
            Family::Primed => "primed",
        })
    }
}

/// Which families of a two-family construction to include.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilySelection {
    First,
    Second,
    Combined,
}

impl FamilySelection {
    fn families(self) -> &'static [Family] {
        match self {
            FamilySelection::First => &[Family::Unprimed],
            FamilySelection::Second => &[Family::Primed],
            FamilySelection::Combined => &[Family::Unprimed, Family::Primed],
        }
    }

    fn multiplicity(self) -> f64 {
        self.families().len() as f64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FamilySelection::First => "first",
            FamilySelection::Second => "second",
            FamilySelection::Combined => "combined",
        }
    }
}

impl std::str::FromStr for FamilySelection {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(FamilySelection::First),
            "second" => Ok(FamilySelection::Second),
            "combined" => Ok(FamilySelection::Combined),
            other => Err(ScenarioError::BadParameter(format!("unknown family {other:?}"))),
        }
    }
}

/// Rotation plane of a single-qubit observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    ZX,
    ZY,
}

impl Plane {
    pub fn partner(self) -> Letter {
        match self {
            Plane::ZX => Letter::X,
            Plane::ZY => Letter::Y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observable {
    /// Input `x ↦ cos θ·Z + (-1)^x sin θ·P` on one qubit.
    Rotated { qubit: usize, plane: Plane },
    /// Input label `↦` one Pauli letter per qubit.
    Joint {
        qubits: Vec<usize>,
        map: BTreeMap<String, Vec<Letter>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub party: usize,
    pub family: Family,
    pub observable: Observable,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    /// `(a_0 + (-1)^exponent a_1) / 2`
    Single { exponent: u8 },
    /// Joint outcome for the given input label.
    Joint { input: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub label: String,
    /// One factor per party, in topology order.
    pub factors: Vec<Factor>,
}

impl CorrelatorSpec {
    /// Exponents of the single-qubit factors: the probability cell the
    /// correlator is supported on.
    pub fn cell(&self) -> Vec<u8> {
        self.factors
            .iter()
            .filter_map(|f| match f {
                Factor::Single { exponent } => Some(*exponent),
                Factor::Joint { .. } => None,
            })
            .collect()
    }

    pub fn single_count(&self) -> usize {
        self.cell().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: i8,
    pub correlator: CorrelatorSpec,
    pub family: Family,
}

/// Exponent `r = numerator / denominator` applied to every correlator.
/// Signed powers keep the sign of the base (`x^r = sign(x)|x|^r`, which
/// needs odd/odd `r`); absolute powers use `|x|^r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exponent {
    pub numerator: u32,
    pub denominator: u32,
    pub absolute: bool,
}

impl Exponent {
    pub const LINEAR: Exponent = Exponent {
        numerator: 1,
        denominator: 1,
        absolute: false,
    };

    /// `r = (2v+1)/(2u+1)`.
    pub fn odd(u: u32, v: u32) -> Self {
        Self {
            numerator: 2 * v + 1,
            denominator: 2 * u + 1,
            absolute: false,
        }
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }

    pub fn is_linear(&self) -> bool {
        self.numerator == self.denominator
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.is_linear() {
            return if self.absolute { x.abs() } else { x };
        }
        let m = x.abs().powf(self.value());
        if self.absolute {
            m
        } else {
            m.copysign(x)
        }
    }

    /// Derivative of [`Exponent::apply`]; zero at a vanishing base.
    pub fn derivative(&self, x: f64) -> f64 {
        let sgn = if self.absolute { x.signum() } else { 1.0 };
        if self.is_linear() {
            return sgn;
        }
        if x == 0.0 {
            return 0.0;
        }
        sgn * self.value() * x.abs().powf(self.value() - 1.0)
    }
}

/// Which classical model `classical_bound` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalityModel {
    /// Every observer sees all hidden variables plus shared randomness.
    Genuine,
    /// Independent sources, each hidden variable seen only by its recipients.
    Bilocal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityExpr {
    pub name: String,
    /// Short reference string carried into reports.
    pub tag: String,
    pub topology: NetworkTopology,
    pub settings: Vec<Setting>,
    pub terms: Vec<Term>,
    pub exponent: Exponent,
    /// Overall factor in front of the sum (2 for CHSH, 1 otherwise).
    pub scale: f64,
    pub classical_bound: f64,
    pub claimed_quantum_max: f64,
    pub locality: LocalityModel,
}

/// Identifies one angle parameter: a single-qubit party in one family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AngleKey {
    pub party: usize,
    pub family: Family,
}

/// One angle per single-qubit setting, ordered as [`InequalityExpr::angle_keys`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleAssignment {
    pub keys: Vec<AngleKey>,
    pub values: Vec<f64>,
}

impl AngleAssignment {
    pub fn new(keys: Vec<AngleKey>, values: Vec<f64>) -> Result<Self, ScenarioError> {
        if keys.len() != values.len() {
            return Err(ScenarioError::AngleCount {
                expected: keys.len(),
                got: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|&&t| !(t > 0.0 && t < FRAC_PI_2)) {
            return Err(ScenarioError::AngleOutOfRange(bad));
        }
        Ok(Self { keys, values })
    }

    pub fn uniform(expr: &InequalityExpr, theta: f64) -> Result<Self, ScenarioError> {
        let keys = expr.angle_keys();
        let values = vec![theta; keys.len()];
        Self::new(keys, values)
    }

    /// Every angle at π/4.
    pub fn balanced(expr: &InequalityExpr) -> Self {
        Self::uniform(expr, FRAC_PI_4).expect("π/4 is interior")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, key: AngleKey) -> Option<f64> {
        self.keys.iter().position(|k| *k == key).map(|i| self.values[i])
    }
}

/// A correlator collapsed to `sign · ∏ trig(θ) · pauli`, kept symbolic in the angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedTerm {
    pub sign: f64,
    pub pauli: PauliString,
    /// `(angle index, uses_sin)` per single-qubit party, in party order.
    pub trig: Vec<(usize, bool)>,
}

impl SegmentedTerm {
    pub fn coefficient(&self, angles: &[f64]) -> f64 {
        self.trig.iter().fold(1.0, |acc, &(i, sin)| {
            acc * if sin { angles[i].sin() } else { angles[i].cos() }
        })
    }

    /// `∂ coefficient / ∂ angles[k]`.
    pub fn coefficient_derivative(&self, angles: &[f64], k: usize) -> f64 {
        let mut acc = 1.0;
        let mut hit = false;
        for &(i, sin) in &self.trig {
            let t = angles[i];
            acc *= if i == k {
                hit = true;
                if sin {
                    t.cos()
                } else {
                    -t.sin()
                }
            } else if sin {
                t.sin()
            } else {
                t.cos()
            };
        }
        if hit {
            acc
        } else {
            0.0
        }
    }
}

impl InequalityExpr {
    pub fn setting(&self, party: usize, family: Family) -> Option<&Setting> {
        self.settings
            .iter()
            .find(|s| s.party == party && s.family == family)
    }

    pub fn angle_keys(&self) -> Vec<AngleKey> {
        let mut keys: Vec<AngleKey> = self
            .settings
            .iter()
            .filter(|s| matches!(s.observable, Observable::Rotated { .. }))
            .map(|s| AngleKey {
                party: s.party,
                family: s.family,
            })
            .collect();
        keys.sort_by_key(|k| (k.family, k.party));
        keys
    }

    pub fn families(&self) -> Vec<Family> {
        let set: BTreeSet<Family> = self.terms.iter().map(|t| t.family).collect();
        set.into_iter().collect()
    }

    /// Number of single-qubit parties (the `K` of star-like networks).
    pub fn single_party_count(&self) -> usize {
        self.topology
            .parties
            .iter()
            .filter(|p| p.role() == PartyRole::SingleQubit)
            .count()
    }

    /// Checks labels, factor shapes and qubit coverage of every setting.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.topology
            .validate()
            .map_err(|d| ScenarioError::Topology(d.to_string()))?;
        let mut labels = BTreeSet::new();
        for t in &self.terms {
            if !labels.insert(t.correlator.label.clone()) {
                return Err(ScenarioError::DuplicateLabel(t.correlator.label.clone()));
            }
        }
        for s in &self.settings {
            let party = &self.topology.parties[s.party];
            let covered = match &s.observable {
                Observable::Rotated { qubit, .. } => party.qubits == [*qubit],
                Observable::Joint { qubits, map } => {
                    qubits == &party.qubits && map.values().all(|l| l.len() == qubits.len())
                }
            };
            if !covered {
                return Err(ScenarioError::Coverage {
                    party: party.id.clone(),
                });
            }
        }
        if !self.exponent.absolute && !self.exponent.is_linear() {
            let Exponent {
                numerator: p,
                denominator: q,
                ..
            } = self.exponent;
            if p % 2 == 0 || q % 2 == 0 {
                return Err(ScenarioError::EvenExponent(p, q));
            }
        }
        self.compile().map(|_| ())
    }

    /// Segmented operator of term `index` at the given angles.
    pub fn segmented_operator(
        &self,
        index: usize,
        angles: &AngleAssignment,
    ) -> Result<(f64, PauliString), ScenarioError> {
        let keys = self.angle_keys();
        if angles.keys != keys {
            return Err(ScenarioError::AngleCount {
                expected: keys.len(),
                got: angles.len(),
            });
        }
        let seg = self.compile_term(&self.terms[index], &keys)?;
        Ok((seg.coefficient(&angles.values), seg.pauli))
    }

    /// Angle-symbolic segmented operators, one per term.
    pub fn compile(&self) -> Result<Vec<SegmentedTerm>, ScenarioError> {
        let keys = self.angle_keys();
        self.terms
            .iter()
            .map(|t| self.compile_term(t, &keys))
            .collect()
    }

    fn compile_term(&self, term: &Term, keys: &[AngleKey]) -> Result<SegmentedTerm, ScenarioError> {
        let parties = &self.topology.parties;
        let label = &term.correlator.label;
        if term.correlator.factors.len() != parties.len() {
            return Err(ScenarioError::FactorCount {
                label: label.clone(),
                expected: parties.len(),
                got: term.correlator.factors.len(),
            });
        }
        let mut letters: Vec<(usize, Letter)> = Vec::new();
        let mut trig = Vec::new();
        for (p, factor) in term.correlator.factors.iter().enumerate() {
            let setting = self
                .setting(p, term.family)
                .ok_or_else(|| ScenarioError::MissingSetting {
                    party: parties[p].id.clone(),
                    family: term.family,
                })?;
            match (factor, &setting.observable) {
                (Factor::Single { exponent }, Observable::Rotated { qubit, plane }) => {
                    let key = AngleKey {
                        party: p,
                        family: term.family,
                    };
                    let idx = keys.iter().position(|k| *k == key).expect("angle key");
                    let sin = *exponent == 1;
                    trig.push((idx, sin));
                    letters.push((*qubit, if sin { plane.partner() } else { Letter::Z }));
                }
                (Factor::Joint { input }, Observable::Joint { qubits, map }) => {
                    let word = map.get(input).ok_or_else(|| ScenarioError::UnknownInput {
                        party: parties[p].id.clone(),
                        input: input.clone(),
                    })?;
                    letters.extend(qubits.iter().copied().zip(word.iter().copied()));
                }
                _ => {
                    return Err(ScenarioError::FactorMismatch {
                        label: label.clone(),
                        party: parties[p].id.clone(),
                    })
                }
            }
        }
        let pauli = PauliString::on_qubits(self.topology.n_qubits, &letters)?;
        Ok(SegmentedTerm {
            sign: term.coefficient as f64,
            pauli,
            trig,
        })
    }
}

fn bits_of(y: usize, width: usize) -> Vec<u8> {
    // most significant first, so labels read y_1 y_2 … y_K
    (0..width).rev().map(|i| (y >> i & 1) as u8).collect()
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

fn label_for(base: String, family: Family) -> String {
    match family {
        Family::Unprimed => base,
        Family::Primed => format!("{base}'"),
    }
}

fn letter_for(bit: u8, family: Family) -> Letter {
    match (bit, family) {
        (0, _) => Letter::Z,
        (_, Family::Unprimed) => Letter::X,
        (_, Family::Primed) => Letter::Y,
    }
}

fn plane_for(family: Family) -> Plane {
    match family {
        Family::Unprimed => Plane::ZX,
        Family::Primed => Plane::ZY,
    }
}

/// Correlator families over a network of Bell pairs in which every
/// single-qubit party shares a pair with a joint party.
///
/// Bit `y_i` of the label selects `Z` (0) or `X`/`Y` (1) on both ends of
/// Alice`i`'s pair; pairs between two joint parties take the fixed bit
/// `inter_bits[source]` (0 when absent). The primed family uses the `ZY`
/// plane and carries the sign `(-1)^{W(y)}`.
pub struct BellNetworkFamilies<'a> {
    pub topology: &'a NetworkTopology,
    pub inter_bits: &'a BTreeMap<usize, u8>,
}

impl BellNetworkFamilies<'_> {
    /// Single-qubit parties in topology order, each with the qubit its
    /// pair partner holds.
    fn alices(&self) -> Result<Vec<(usize, usize, usize)>, ScenarioError> {
        let topo = self.topology;
        let mut out = Vec::new();
        for (p, party) in topo.parties.iter().enumerate() {
            if party.role() != PartyRole::SingleQubit {
                continue;
            }
            let q = party.qubits[0];
            let s = topo
                .source_of(q)
                .ok_or_else(|| ScenarioError::Topology(format!("qubit {q} has no source")))?;
            let src = &topo.sources[s];
            if src.kind != SourceKind::BellPair {
                return Err(ScenarioError::Topology(format!(
                    "{} does not hold half of a Bell pair",
                    party.id
                )));
            }
            let partner = *src.qubits.iter().find(|&&o| o != q).unwrap();
            let owner = topo.owner_of(partner).unwrap();
            if topo.parties[owner].role() != PartyRole::Joint {
                return Err(ScenarioError::Topology(format!(
                    "{} is not linked to a joint-measuring party",
                    party.id
                )));
            }
            out.push((p, q, partner));
        }
        if out.is_empty() {
            return Err(ScenarioError::Topology("no single-qubit parties".into()));
        }
        Ok(out)
    }

    pub fn build(&self, family: Family) -> Result<(Vec<Setting>, Vec<Term>), ScenarioError> {
        let topo = self.topology;
        let alices = self.alices()?;
        let k = alices.len();
        if topo.sources.iter().any(|s| s.kind != SourceKind::BellPair) {
            return Err(ScenarioError::Topology("only Bell-pair sources are supported".into()));
        }
        // bit source per qubit held by a joint party
        let bit_of_qubit = |q: usize, y: &[u8]| -> u8 {
            if let Some(i) = alices.iter().position(|&(_, _, partner)| partner == q) {
                y[i]
            } else {
                let s = topo.source_of(q).unwrap();
                self.inter_bits.get(&s).copied().unwrap_or(0)
            }
        };
        let mut settings = Vec::new();
        let mut joint_maps: BTreeMap<usize, BTreeMap<String, Vec<Letter>>> = BTreeMap::new();
        for &(p, q, _) in &alices {
            settings.push(Setting {
                party: p,
                family,
                observable: Observable::Rotated {
                    qubit: q,
                    plane: plane_for(family),
                },
            });
        }
        let mut terms = Vec::new();
        for yi in 0..1usize << k {
            let y = bits_of(yi, k);
            let mut factors = Vec::with_capacity(topo.parties.len());
            for (p, party) in topo.parties.iter().enumerate() {
                match party.role() {
                    PartyRole::SingleQubit => {
                        let i = alices.iter().position(|a| a.0 == p).unwrap();
                        factors.push(Factor::Single { exponent: y[i] });
                    }
                    PartyRole::Joint => {
                        let bits: Vec<u8> = party.qubits.iter().map(|&q| bit_of_qubit(q, &y)).collect();
                        let input = bit_string(&bits);
                        let word = bits.iter().map(|&b| letter_for(b, family)).collect();
                        joint_maps.entry(p).or_default().insert(input.clone(), word);
                        factors.push(Factor::Joint { input });
                    }
                }
            }
            let weight = y.iter().filter(|&&b| b == 1).count();
            let coefficient = match family {
                Family::Primed if weight % 2 == 1 => -1,
                _ => 1,
            };
            terms.push(Term {
                coefficient,
                correlator: CorrelatorSpec {
                    label: label_for(bit_string(&y), family),
                    factors,
                },
                family,
            });
        }
        for (p, map) in joint_maps {
            settings.push(Setting {
                party: p,
                family,
                observable: Observable::Joint {
                    qubits: topo.parties[p].qubits.clone(),
                    map,
                },
            });
        }
        Ok((settings, terms))
    }
}

fn bell_network_expr(
    name: &str,
    tag: &str,
    topology: NetworkTopology,
    selection: FamilySelection,
    inter_bits: &BTreeMap<usize, u8>,
    exponent: Exponent,
) -> Result<InequalityExpr, ScenarioError> {
    let builder = BellNetworkFamilies {
        topology: &topology,
        inter_bits,
    };
    let mut settings = Vec::new();
    let mut terms = Vec::new();
    for &family in selection.families() {
        let (s, t) = builder.build(family)?;
        settings.extend(s);
        terms.extend(t);
    }
    let k = builder.alices()?.len() as f64;
    let r = exponent.value();
    let t = r * k;
    let m = selection.multiplicity();
    let (classical_bound, claimed_quantum_max) = if exponent.is_linear() {
        (m, m * 2f64.powf(k / 2.0))
    } else {
        (m * 2f64.powf(k - t), m * 2f64.powf(k - t / 2.0))
    };
    let expr = InequalityExpr {
        name: name.to_string(),
        tag: tag.to_string(),
        topology,
        settings,
        terms,
        exponent,
        scale: 1.0,
        classical_bound,
        claimed_quantum_max,
        locality: LocalityModel::Genuine,
    };
    expr.validate()?;
    Ok(expr)
}

/// CHSH on one Bell pair: `2(I_0 + I_1)` with `I_e = (a_0 + (-1)^e a_1)/2 · b_e`.
pub fn build_chsh() -> Result<InequalityExpr, ScenarioError> {
    let topology = network::single_pair();
    let settings = vec![
        Setting {
            party: 0,
            family: Family::Unprimed,
            observable: Observable::Rotated {
                qubit: 0,
                plane: Plane::ZX,
            },
        },
        Setting {
            party: 1,
            family: Family::Unprimed,
            observable: Observable::Joint {
                qubits: vec![1],
                map: BTreeMap::from([("0".into(), vec![Letter::Z]), ("1".into(), vec![Letter::X])]),
            },
        },
    ];
    let terms = (0..2u8)
        .map(|e| Term {
            coefficient: 1,
            correlator: CorrelatorSpec {
                label: e.to_string(),
                factors: vec![
                    Factor::Single { exponent: e },
                    Factor::Joint {
                        input: e.to_string(),
                    },
                ],
            },
            family: Family::Unprimed,
        })
        .collect();
    let expr = InequalityExpr {
        name: "chsh".into(),
        tag: "chsh".into(),
        topology,
        settings,
        terms,
        exponent: Exponent::LINEAR,
        scale: 2.0,
        classical_bound: 2.0,
        claimed_quantum_max: 2.0 * std::f64::consts::SQRT_2,
        locality: LocalityModel::Genuine,
    };
    expr.validate()?;
    Ok(expr)
}

/// Bilocal baselines on the two-source network: `|⟨I⟩|^{1/2} + |⟨J⟩|^{1/2}`
/// and `|⟨I⟩| + |⟨J⟩|`, with `I`, `J` the `y = 00` and `y = 11` correlators.
/// Their bound of 1 holds for the bilocal model only.
pub fn build_bilocal_baseline() -> Result<(InequalityExpr, InequalityExpr), ScenarioError> {
    let root = Exponent {
        numerator: 1,
        denominator: 2,
        absolute: true,
    };
    let linear = Exponent {
        absolute: true,
        ..Exponent::LINEAR
    };
    Ok((bilocal_with(root)?, bilocal_with(linear)?))
}

/// Bilocal baseline with an arbitrary absolute exponent.
pub fn bilocal_with(exponent: Exponent) -> Result<InequalityExpr, ScenarioError> {
    let topology = network::two_source();
    let builder = BellNetworkFamilies {
        topology: &topology,
        inter_bits: &BTreeMap::new(),
    };
    let (mut settings, terms) = builder.build(Family::Unprimed)?;
    let mut terms: Vec<Term> = terms
        .into_iter()
        .filter(|t| t.correlator.label == "00" || t.correlator.label == "11")
        .collect();
    terms[0].correlator.label = "I".into();
    terms[1].correlator.label = "J".into();
    for s in &mut settings {
        if let Observable::Joint { map, .. } = &mut s.observable {
            map.retain(|k, _| k == "00" || k == "11");
        }
    }
    let absolute = Exponent {
        absolute: true,
        ..exponent
    };
    let r = absolute.value();
    let (name, tag) = if absolute.is_linear() {
        ("bilocal-linear", "bilocal.linear")
    } else {
        ("bilocal", "bilocal.nonlinear")
    };
    let expr = InequalityExpr {
        name: name.into(),
        tag: tag.into(),
        topology,
        settings,
        terms,
        exponent: absolute,
        scale: 1.0,
        classical_bound: 1.0,
        // max of |cos a cos c|^r + |sin a sin c|^r, reached at a = c = π/4 for r <= 1
        claimed_quantum_max: 2.0 * 0.5f64.powf(r),
        locality: LocalityModel::Bilocal,
    };
    expr.validate()?;
    Ok(expr)
}

/// Linear inequalities on the two-source network (first, second, combined).
pub fn build_two_source_linear() -> Result<(InequalityExpr, InequalityExpr, InequalityExpr), ScenarioError> {
    Ok((
        build_two_source(FamilySelection::First)?,
        build_two_source(FamilySelection::Second)?,
        build_two_source(FamilySelection::Combined)?,
    ))
}

pub fn build_two_source(selection: FamilySelection) -> Result<InequalityExpr, ScenarioError> {
    bell_network_expr(
        &format!("two-source-{}", selection.as_str()),
        &format!("two-source.{}", selection.as_str()),
        network::two_source(),
        selection,
        &BTreeMap::new(),
        Exponent::LINEAR,
    )
}

pub fn build_star(k: usize, selection: FamilySelection) -> Result<InequalityExpr, ScenarioError> {
    bell_network_expr(
        &format!("star-{}", selection.as_str()),
        &format!("star.linear.{}", selection.as_str()),
        network::star(k)?,
        selection,
        &BTreeMap::new(),
        Exponent::LINEAR,
    )
}

pub fn build_star_first(k: usize) -> Result<InequalityExpr, ScenarioError> {
    build_star(k, FamilySelection::First)
}

pub fn build_star_second(k: usize) -> Result<InequalityExpr, ScenarioError> {
    build_star(k, FamilySelection::Second)
}

pub fn build_star_combined(k: usize) -> Result<InequalityExpr, ScenarioError> {
    build_star(k, FamilySelection::Combined)
}

/// Star inequality with correlators raised to `r = (2v+1)/(2u+1)`; requires `rK < 2`.
pub fn build_star_nonlinear(
    k: usize,
    u: u32,
    v: u32,
    selection: FamilySelection,
) -> Result<InequalityExpr, ScenarioError> {
    let exponent = Exponent::odd(u, v);
    let t = exponent.value() * k as f64;
    if t >= 2.0 {
        return Err(ScenarioError::ExponentTooLarge(t));
    }
    bell_network_expr(
        &format!("star-nonlinear-{}", selection.as_str()),
        &format!("star.nonlinear.{}", selection.as_str()),
        network::star(k)?,
        selection,
        &BTreeMap::new(),
        exponent,
    )
}

/// (N, K, m) inequalities; `inter_bits` fixes the measurement bit of
/// sources linking two Bobs (keyed by 0-based source index, default 0).
pub fn build_nkm(
    topology: NetworkTopology,
    selection: FamilySelection,
    inter_bits: &BTreeMap<usize, u8>,
) -> Result<InequalityExpr, ScenarioError> {
    topology
        .validate()
        .map_err(|d| ScenarioError::Topology(d.to_string()))?;
    bell_network_expr(
        &format!("nkm-{}", selection.as_str()),
        &format!("nkm.{}", selection.as_str()),
        topology,
        selection,
        inter_bits,
        Exponent::LINEAR,
    )
}

pub fn build_nkm_spec(spec: &NkmSpec, selection: FamilySelection) -> Result<InequalityExpr, ScenarioError> {
    build_nkm(network::nkm(spec)?, selection, &BTreeMap::new())
}

const GHZ_A_FIRST: [&str; 4] = ["001", "000", "100", "110"];
const GHZ_A_SECOND: [&str; 4] = ["010", "000", "100", "101"];

fn rotated(party: usize, qubit: usize, family: Family) -> Setting {
    Setting {
        party,
        family,
        observable: Observable::Rotated {
            qubit,
            plane: Plane::ZX,
        },
    }
}

fn zx_word(label: &str) -> Vec<Letter> {
    label
        .chars()
        .map(|c| if c == '1' { Letter::X } else { Letter::Z })
        .collect()
}

/// GHZ case (a): Alice{0}, Bob{1,2,3}, Charlie{4}. Labels `y2y3y4` from the
/// index sets `{001,000,100,110}` (first) and `{010,000,100,101}` (second);
/// Alice's exponent is `y2`, Charlie's `y3 + y4 + 1 mod 2`.
pub fn build_ghz_a(selection: FamilySelection) -> Result<InequalityExpr, ScenarioError> {
    let topology = network::ghz_case_a();
    let mut settings = Vec::new();
    let mut terms = Vec::new();
    for &family in selection.families() {
        let labels = match family {
            Family::Unprimed => GHZ_A_FIRST,
            Family::Primed => GHZ_A_SECOND,
        };
        settings.push(rotated(0, 0, family));
        settings.push(rotated(2, 4, family));
        settings.push(Setting {
            party: 1,
            family,
            observable: Observable::Joint {
                qubits: vec![1, 2, 3],
                map: labels.iter().map(|l| (l.to_string(), zx_word(l))).collect(),
            },
        });
        for l in labels {
            let y: Vec<u8> = l.bytes().map(|b| b - b'0').collect();
            terms.push(Term {
                coefficient: 1,
                correlator: CorrelatorSpec {
                    label: label_for(l.to_string(), family),
                    factors: vec![
                        Factor::Single { exponent: y[0] },
                        Factor::Joint { input: l.to_string() },
                        Factor::Single {
                            exponent: (y[1] + y[2] + 1) % 2,
                        },
                    ],
                },
                family,
            });
        }
    }
    let m = selection.multiplicity();
    let expr = InequalityExpr {
        name: format!("ghz-a-{}", selection.as_str()),
        tag: format!("ghz-a.{}", selection.as_str()),
        topology,
        settings,
        terms,
        exponent: Exponent::LINEAR,
        scale: 1.0,
        classical_bound: m,
        claimed_quantum_max: 2.0 * m,
        locality: LocalityModel::Genuine,
    };
    expr.validate()?;
    Ok(expr)
}

/// GHZ case (b): Alice{0}, Bob{1,2}, Charlie1{3}, Charlie2{4}; eight
/// correlators sharing one set of observables, signs `(-1)^{y2·y3}` and
/// `(-1)^{(1-y2)·y3}`.
pub fn build_ghz_b() -> Result<InequalityExpr, ScenarioError> {
    let topology = network::ghz_case_b();
    let family = Family::Unprimed;
    let labels = ["00", "01", "10", "11"];
    let settings = vec![
        rotated(0, 0, family),
        Setting {
            party: 1,
            family,
            observable: Observable::Joint {
                qubits: vec![1, 2],
                map: labels.iter().map(|l| (l.to_string(), zx_word(l))).collect(),
            },
        },
        rotated(2, 3, family),
        rotated(3, 4, family),
    ];
    let mut terms = Vec::new();
    for primed in [false, true] {
        for l in labels {
            let y2 = l.as_bytes()[0] - b'0';
            let y3 = l.as_bytes()[1] - b'0';
            let parity = (y2 + y3) % 2;
            let (c1, c2, sign_bit) = if primed {
                (1 - y2, parity, (1 - y2) * y3)
            } else {
                (y2, 1 - parity, y2 * y3)
            };
            terms.push(Term {
                coefficient: if sign_bit == 1 { -1 } else { 1 },
                correlator: CorrelatorSpec {
                    label: if primed { format!("{l}'") } else { l.to_string() },
                    factors: vec![
                        Factor::Single { exponent: y2 },
                        Factor::Joint { input: l.to_string() },
                        Factor::Single { exponent: c1 },
                        Factor::Single { exponent: c2 },
                    ],
                },
                family,
            });
        }
    }
    let expr = InequalityExpr {
        name: "ghz-b".into(),
        tag: "ghz-b".into(),
        topology,
        settings,
        terms,
        exponent: Exponent::LINEAR,
        scale: 1.0,
        classical_bound: 1.0,
        claimed_quantum_max: 2.0 * std::f64::consts::SQRT_2,
        locality: LocalityModel::Genuine,
    };
    expr.validate()?;
    Ok(expr)
}
