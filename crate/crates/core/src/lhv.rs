//! Classical bounds under genuine Bell locality.
//!
//! A local hidden-variable model is a mixture of deterministic strategies:
//! every party fixes an output `±1` for each of its inputs. The image of a
//! strategy in correlator space is a vector with entries in `{-1, 0, 1}`,
//! and the classical region is the convex hull of these images.
//!
//! Enumeration is reduced: only the single-qubit parties are enumerated in
//! full, and joint outputs are enumerated only where they enter a nonzero
//! correlator.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Factor, Family, InequalityExpr, LocalityModel, Observable};

/// Default enumeration budget (strategy images evaluated).
pub const DEFAULT_BUDGET: u128 = 1 << 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LhvError {
    #[error("party {party} has no {family} setting")]
    MissingSetting { party: usize, family: Family },
    #[error("strategy has no output for party {party} ({family}) on input {input:?}")]
    MissingAssignment {
        party: usize,
        family: Family,
        input: String,
    },
    #[error("output {0} is not ±1")]
    BadOutput(i8),
    #[error("enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("inequality is linear; use linear_lhv_max")]
    LinearExponent,
    #[error("inequality is nonlinear; use nonlinear_lhv_max")]
    NonlinearExponent,
    #[error("correlator cells of the {0} family do not tile the cell space")]
    NotCrossPolytope(Family),
}

/// Outputs of one measurement setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingOutputs {
    pub party: usize,
    pub family: Family,
    pub outputs: BTreeMap<String, i8>,
}

/// One hidden-variable value: an output for every (party, input) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub settings: Vec<SettingOutputs>,
}

impl DeterministicStrategy {
    /// Every output equal to `value`.
    pub fn constant(expr: &InequalityExpr, value: i8) -> Self {
        let settings = expr
            .settings
            .iter()
            .map(|s| SettingOutputs {
                party: s.party,
                family: s.family,
                outputs: inputs_of(&s.observable)
                    .into_iter()
                    .map(|i| (i, value))
                    .collect(),
            })
            .collect();
        Self { settings }
    }

    pub fn set(&mut self, party: usize, family: Family, input: &str, value: i8) {
        if let Some(s) = self
            .settings
            .iter_mut()
            .find(|s| s.party == party && s.family == family)
        {
            s.outputs.insert(input.to_string(), value);
        }
    }

    fn output(&self, party: usize, family: Family, input: &str) -> Result<i8, LhvError> {
        let v = self
            .settings
            .iter()
            .find(|s| s.party == party && s.family == family)
            .and_then(|s| s.outputs.get(input))
            .copied()
            .ok_or_else(|| LhvError::MissingAssignment {
                party,
                family,
                input: input.to_string(),
            })?;
        if v == 1 || v == -1 {
            Ok(v)
        } else {
            Err(LhvError::BadOutput(v))
        }
    }
}

/// Correlator values of a deterministic strategy, in term order. Entries
/// are exact integers in `{-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorrelatorVector {
    pub values: Vec<i8>,
}

impl CorrelatorVector {
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

fn inputs_of(obs: &Observable) -> Vec<String> {
    match obs {
        Observable::Rotated { .. } => vec!["0".into(), "1".into()],
        Observable::Joint { map, .. } => map.keys().cloned().collect(),
    }
}

pub fn evaluate_strategy(
    s: &DeterministicStrategy,
    expr: &InequalityExpr,
) -> Result<CorrelatorVector, LhvError> {
    let mut values = Vec::with_capacity(expr.terms.len());
    for term in &expr.terms {
        let mut v: i8 = 1;
        for (party, factor) in term.correlator.factors.iter().enumerate() {
            match factor {
                Factor::Single { exponent } => {
                    let a0 = s.output(party, term.family, "0")?;
                    let a1 = s.output(party, term.family, "1")?;
                    let sum = if *exponent == 0 { a0 + a1 } else { a0 - a1 };
                    v *= sum / 2;
                }
                Factor::Joint { input } => v *= s.output(party, term.family, input)?,
            }
        }
        values.push(v);
    }
    Ok(CorrelatorVector { values })
}

/// Index-based view of an inequality used by the enumerators.
struct Layout {
    /// Input labels per setting.
    inputs: Vec<Vec<String>>,
    /// Indices of the single-qubit settings.
    rotated: Vec<usize>,
    terms: Vec<TermRefs>,
}

/// (family, single-party exponents) of a correlator cell
type CellKey = (Family, Vec<(usize, u8)>);

struct TermRefs {
    /// (position in `rotated`, exponent)
    singles: Vec<(usize, u8)>,
    /// (setting, input index)
    joints: Vec<(usize, usize)>,
}

impl Layout {
    fn new(expr: &InequalityExpr) -> Result<Self, LhvError> {
        let inputs: Vec<Vec<String>> = expr.settings.iter().map(|s| inputs_of(&s.observable)).collect();
        let rotated: Vec<usize> = expr
            .settings
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s.observable, Observable::Rotated { .. }))
            .map(|(i, _)| i)
            .collect();
        let mut terms = Vec::with_capacity(expr.terms.len());
        for term in &expr.terms {
            let mut refs = TermRefs {
                singles: Vec::new(),
                joints: Vec::new(),
            };
            for (party, factor) in term.correlator.factors.iter().enumerate() {
                let idx = expr
                    .settings
                    .iter()
                    .position(|s| s.party == party && s.family == term.family)
                    .ok_or(LhvError::MissingSetting {
                        party,
                        family: term.family,
                    })?;
                match factor {
                    Factor::Single { exponent } => {
                        let pos = rotated.iter().position(|&r| r == idx).ok_or(
                            LhvError::MissingSetting {
                                party,
                                family: term.family,
                            },
                        )?;
                        refs.singles.push((pos, *exponent));
                    }
                    Factor::Joint { input } => {
                        let i = inputs[idx].iter().position(|x| x == input).ok_or_else(|| {
                            LhvError::MissingAssignment {
                                party,
                                family: term.family,
                                input: input.clone(),
                            }
                        })?;
                        refs.joints.push((idx, i));
                    }
                }
            }
            terms.push(refs);
        }
        Ok(Self {
            inputs,
            rotated,
            terms,
        })
    }

    fn single_product(&self, term: &TermRefs, code: u128) -> i8 {
        let mut v = 1i8;
        for &(pos, e) in &term.singles {
            let a0 = code >> (2 * pos) & 1;
            let a1 = code >> (2 * pos + 1) & 1;
            // bit 1 encodes output -1
            let differ = (a0 != a1) as u8;
            if differ != e {
                return 0;
            }
            if a0 == 1 {
                v = -v;
            }
        }
        v
    }

    /// Upper bound on the number of images the reduced enumeration visits.
    fn reduced_cost(&self, expr: &InequalityExpr) -> u128 {
        let mut by_cell: BTreeMap<CellKey, BTreeSet<(usize, usize)>> = BTreeMap::new();
        for (term, refs) in expr.terms.iter().zip(&self.terms) {
            by_cell
                .entry((term.family, refs.singles.clone()))
                .or_default()
                .extend(refs.joints.iter().copied());
        }
        let mut per_family: BTreeMap<Family, usize> = BTreeMap::new();
        for ((family, _), vars) in &by_cell {
            let e = per_family.entry(*family).or_default();
            *e = (*e).max(vars.len());
        }
        let joint_bits: usize = per_family.values().sum();
        pow2(2 * self.rotated.len() + joint_bits)
    }

    fn raw_bits(&self) -> usize {
        self.inputs.iter().map(Vec::len).sum()
    }
}

fn pow2(bits: usize) -> u128 {
    if bits >= 127 {
        u128::MAX
    } else {
        1u128 << bits
    }
}

fn check_budget(needed: u128, budget: u128) -> Result<(), LhvError> {
    if needed > budget {
        Err(LhvError::BudgetExceeded { needed, budget })
    } else {
        Ok(())
    }
}

/// Number of images visited by [`enumerate_vertices`].
pub fn reduced_strategy_count(expr: &InequalityExpr) -> Result<u128, LhvError> {
    let layout = Layout::new(expr)?;
    Ok(layout.reduced_cost(expr))
}

/// Every deterministic correlator vector, by reduced enumeration.
pub fn enumerate_vertices(expr: &InequalityExpr) -> Result<BTreeSet<CorrelatorVector>, LhvError> {
    enumerate_vertices_with_budget(expr, DEFAULT_BUDGET)
}

pub fn enumerate_vertices_with_budget(
    expr: &InequalityExpr,
    budget: u128,
) -> Result<BTreeSet<CorrelatorVector>, LhvError> {
    let layout = Layout::new(expr)?;
    check_budget(layout.reduced_cost(expr), budget)?;
    let singles = pow2(2 * layout.rotated.len());
    let set = (0..singles as u64)
        .into_par_iter()
        .fold(BTreeSet::new, |mut acc, code| {
            images_for_singles(&layout, code as u128, &mut acc);
            acc
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(set)
}

fn images_for_singles(layout: &Layout, code: u128, out: &mut BTreeSet<CorrelatorVector>) {
    let base: Vec<i8> = layout
        .terms
        .iter()
        .map(|t| layout.single_product(t, code))
        .collect();
    let mut vars: Vec<(usize, usize)> = Vec::new();
    for (t, &b) in layout.terms.iter().zip(&base) {
        if b != 0 {
            for v in &t.joints {
                if !vars.contains(v) {
                    vars.push(*v);
                }
            }
        }
    }
    for joint in 0..1u64 << vars.len() {
        let values = layout
            .terms
            .iter()
            .zip(&base)
            .map(|(t, &b)| {
                if b == 0 {
                    return 0;
                }
                t.joints.iter().fold(b, |acc, v| {
                    let i = vars.iter().position(|w| w == v).unwrap();
                    if joint >> i & 1 == 1 {
                        -acc
                    } else {
                        acc
                    }
                })
            })
            .collect();
        out.insert(CorrelatorVector { values });
    }
}

/// Every deterministic correlator vector, enumerating all outputs of all
/// parties. Exponential in the total number of inputs; for cross-checks.
pub fn enumerate_raw(expr: &InequalityExpr, budget: u128) -> Result<BTreeSet<CorrelatorVector>, LhvError> {
    let layout = Layout::new(expr)?;
    let bits = layout.raw_bits();
    check_budget(pow2(bits), budget)?;
    let mut offsets = Vec::with_capacity(layout.inputs.len());
    let mut acc = 0;
    for inputs in &layout.inputs {
        offsets.push(acc);
        acc += inputs.len();
    }
    let strategies = raw_strategies(expr, &offsets, bits);
    strategies
        .into_par_iter()
        .map(|s| evaluate_strategy(&s, expr))
        .collect::<Result<BTreeSet<_>, _>>()
}

fn raw_strategies(expr: &InequalityExpr, offsets: &[usize], bits: usize) -> Vec<DeterministicStrategy> {
    (0..1u64 << bits)
        .map(|code| {
            let settings = expr
                .settings
                .iter()
                .zip(offsets)
                .map(|(s, &off)| SettingOutputs {
                    party: s.party,
                    family: s.family,
                    outputs: inputs_of(&s.observable)
                        .into_iter()
                        .enumerate()
                        .map(|(i, label)| (label, if code >> (off + i) & 1 == 1 { -1 } else { 1 }))
                        .collect(),
                })
                .collect();
            DeterministicStrategy { settings }
        })
        .collect()
}

/// Number of raw deterministic strategies (`2^{total inputs}`).
pub fn raw_strategy_count(expr: &InequalityExpr) -> Result<u128, LhvError> {
    Ok(pow2(Layout::new(expr)?.raw_bits()))
}

/// True when `vertices` is exactly the set of signed standard basis vectors.
pub fn is_cross_polytope(vertices: &BTreeSet<CorrelatorVector>, dim: usize) -> bool {
    vertices.len() == 2 * dim
        && vertices.iter().all(|v| {
            v.values.len() == dim && v.values.iter().filter(|&&x| x != 0).count() == 1
        })
}

/// The inequality restricted to one family's terms and settings.
pub fn family_part(expr: &InequalityExpr, family: Family) -> InequalityExpr {
    let mut part = expr.clone();
    part.terms.retain(|t| t.family == family);
    part.settings.retain(|s| s.family == family);
    part
}

/// Exact value of the inequality on one correlator vector.
fn objective_exact(expr: &InequalityExpr, v: &CorrelatorVector) -> i64 {
    expr.terms
        .iter()
        .zip(&v.values)
        .map(|(t, &x)| {
            let x = if expr.exponent.absolute { x.abs() } else { x };
            t.coefficient as i64 * x as i64
        })
        .sum()
}

/// Maximum of a linear inequality over the local polytope.
pub fn linear_lhv_max(expr: &InequalityExpr) -> Result<f64, LhvError> {
    if !expr.exponent.is_linear() {
        return Err(LhvError::NonlinearExponent);
    }
    let vertices = enumerate_vertices(expr)?;
    Ok(linear_max_over(expr, &vertices))
}

pub fn linear_max_over(expr: &InequalityExpr, vertices: &BTreeSet<CorrelatorVector>) -> f64 {
    let best = vertices
        .iter()
        .map(|v| objective_exact(expr, v))
        .max()
        .unwrap_or(0);
    expr.scale * best as f64
}

/// Proof by structure that each family's local polytope is the cross-polytope:
/// the single-qubit exponent patterns of its correlators are distinct and
/// cover every pattern, so any deterministic strategy selects exactly one
/// correlator, and flipping one party's outputs flips its sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossPolytopeCertificate {
    /// Correlator count per family (the dimension of each cross-polytope).
    pub dimensions: Vec<(Family, usize)>,
    /// Maximum of the (linear or nonlinear) inequality over the product of
    /// the per-family cross-polytopes.
    pub lhv_max: f64,
}

pub fn cross_polytope_certificate(expr: &InequalityExpr) -> Result<CrossPolytopeCertificate, LhvError> {
    let layout = Layout::new(expr)?;
    let mut dimensions = Vec::new();
    let mut lhv_max = 0.0;
    for family in expr.families() {
        let idx: Vec<usize> = (0..expr.terms.len())
            .filter(|&i| expr.terms[i].family == family)
            .collect();
        let positions: BTreeSet<usize> = idx
            .iter()
            .flat_map(|&i| layout.terms[i].singles.iter().map(|s| s.0))
            .collect();
        let cells: BTreeSet<Vec<(usize, u8)>> = idx
            .iter()
            .map(|&i| {
                let mut c = layout.terms[i].singles.clone();
                c.sort();
                c
            })
            .collect();
        let full = cells.len() == idx.len()
            && !positions.is_empty()
            && cells.iter().all(|c| {
                c.len() == positions.len() && c.iter().map(|s| s.0).eq(positions.iter().copied())
            })
            && pow2(positions.len()) == idx.len() as u128;
        if !full {
            return Err(LhvError::NotCrossPolytope(family));
        }
        let coefficients: Vec<f64> = idx.iter().map(|&i| expr.terms[i].coefficient as f64).collect();
        lhv_max += cross_polytope_max(&coefficients, expr.exponent.value());
        dimensions.push((family, idx.len()));
    }
    Ok(CrossPolytopeCertificate {
        dimensions,
        lhv_max: expr.scale * lhv_max,
    })
}

/// `max Σ c_y x_y^r` over the unit ℓ¹ ball, odd signed or absolute powers:
/// `(Σ |c|^{1/(1-r)})^{1-r}` for `r < 1`, `max |c|` for `r = 1`.
pub fn cross_polytope_max(coefficients: &[f64], r: f64) -> f64 {
    if r >= 1.0 {
        return coefficients.iter().fold(0.0, |m, c| m.max(c.abs()));
    }
    let q = 1.0 / (1.0 - r);
    coefficients
        .iter()
        .map(|c| c.abs().powf(q))
        .sum::<f64>()
        .powf(1.0 - r)
}

/// A deterministic strategy that violates the one-cell normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationFailure {
    pub family: Family,
    pub strategy: DeterministicStrategy,
    pub values: Vec<i8>,
}

/// Checks that every deterministic strategy gives `|value| = 1` on exactly
/// one correlator of each family and `0` on the rest. Returns the number of
/// strategies checked.
pub fn normalization_check(expr: &InequalityExpr) -> Result<usize, Box<NormalizationFailure>> {
    let layout = Layout::new(expr).expect("well-formed inequality");
    let singles = pow2(2 * layout.rotated.len()) as u64;
    for family in expr.families() {
        let idx: Vec<usize> = (0..expr.terms.len())
            .filter(|&i| expr.terms[i].family == family)
            .collect();
        for code in 0..singles {
            let values: Vec<i8> = idx
                .iter()
                .map(|&i| layout.single_product(&layout.terms[i], code as u128))
                .collect();
            if values.iter().filter(|&&v| v != 0).count() != 1 {
                let strategy = strategy_from_code(expr, &layout, code as u128);
                return Err(Box::new(NormalizationFailure {
                    family,
                    strategy,
                    values,
                }));
            }
        }
    }
    Ok(singles as usize)
}

fn strategy_from_code(expr: &InequalityExpr, layout: &Layout, code: u128) -> DeterministicStrategy {
    let mut s = DeterministicStrategy::constant(expr, 1);
    for (pos, &set) in layout.rotated.iter().enumerate() {
        let st = &expr.settings[set];
        for bit in 0..2 {
            let v = if code >> (2 * pos + bit) & 1 == 1 { -1 } else { 1 };
            s.set(st.party, st.family, &bit.to_string(), v);
        }
    }
    s
}

/// Result of [`nonlinear_lhv_max`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearBound {
    /// Closed-form optimum over the cross-polytope, when the hull is one.
    pub analytic: Option<f64>,
    /// Best value found by projected-gradient search over vertex mixtures.
    pub numeric: f64,
    pub warning: Option<String>,
}

impl NonlinearBound {
    pub fn value(&self) -> f64 {
        self.analytic.unwrap_or(self.numeric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 100,
            seed: 0,
            max_iterations: 4000,
        }
    }
}

/// Maximum of a nonlinear inequality over mixtures of deterministic strategies.
pub fn nonlinear_lhv_max(expr: &InequalityExpr) -> Result<NonlinearBound, LhvError> {
    nonlinear_lhv_max_with(expr, SearchOptions::default())
}

pub fn nonlinear_lhv_max_with(expr: &InequalityExpr, opts: SearchOptions) -> Result<NonlinearBound, LhvError> {
    if expr.exponent.is_linear() {
        return Err(LhvError::LinearExponent);
    }
    let r = expr.exponent.value();
    let mut analytic = Some(0.0);
    let mut numeric = 0.0;
    let mut warning = None;
    // families have disjoint settings, so the hull is the product of the
    // per-family hulls and the objective separates
    for family in expr.families() {
        let part = family_part(expr, family);
        let vertices = enumerate_vertices(&part)?;
        if is_cross_polytope(&vertices, part.terms.len()) {
            let c: Vec<f64> = part.terms.iter().map(|t| t.coefficient as f64).collect();
            analytic = analytic.map(|a| a + cross_polytope_max(&c, r));
        } else {
            analytic = None;
            warning = Some(format!(
                "local polytope of the {family} family is not a cross-polytope; bound is numeric only"
            ));
        }
        numeric += hull_search(&part, &vertices, opts);
    }
    Ok(NonlinearBound {
        analytic: analytic.map(|a| a * expr.scale),
        numeric: numeric * expr.scale,
        warning,
    })
}

/// Value of the inequality at a point of correlator space.
pub fn objective(expr: &InequalityExpr, x: &[f64]) -> f64 {
    expr.terms
        .iter()
        .zip(x)
        .map(|(t, &v)| t.coefficient as f64 * expr.exponent.apply(v))
        .sum()
}

fn objective_gradient(expr: &InequalityExpr, x: &[f64]) -> Vec<f64> {
    // the power's slope diverges at 0; evaluate just off the origin
    expr.terms
        .iter()
        .zip(x)
        .map(|(t, &v)| {
            let v = if v.abs() < 1e-12 { 1e-12 } else { v };
            t.coefficient as f64 * expr.exponent.derivative(v)
        })
        .collect()
}

/// Projected-gradient ascent over mixture weights of `vertices`, best of
/// several seeded random starts.
pub fn hull_search(expr: &InequalityExpr, vertices: &BTreeSet<CorrelatorVector>, opts: SearchOptions) -> f64 {
    let verts: Vec<Vec<f64>> = vertices.iter().map(CorrelatorVector::to_f64).collect();
    if verts.is_empty() {
        return 0.0;
    }
    let dim = expr.terms.len();
    let point = |w: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (wi, v) in w.iter().zip(&verts) {
            for (xj, vj) in x.iter_mut().zip(v) {
                *xj += wi * vj;
            }
        }
        x
    };
    let f = |w: &[f64]| objective(expr, &point(w));
    (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut w: Vec<f64> = (0..verts.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let mut value = f(&w);
            let mut step = 0.1;
            for _ in 0..opts.max_iterations {
                let g = objective_gradient(expr, &point(&w));
                let gw: Vec<f64> = verts
                    .iter()
                    .map(|v| v.iter().zip(&g).map(|(a, b)| a * b).sum())
                    .collect();
                let norm = gw.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    break;
                }
                let mut improved = false;
                while step > 1e-16 {
                    let trial: Vec<f64> = w.iter().zip(&gw).map(|(a, b)| a + step * b / norm).collect();
                    let trial = project_simplex(&trial);
                    let tv = f(&trial);
                    if tv > value {
                        w = trial;
                        value = tv;
                        improved = true;
                        step *= 1.5;
                        break;
                    }
                    step *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            value
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|&yi| (yi - tau).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Enumeration,
    CrossPolytope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    /// The stated bound belongs to a weaker classical model; the genuine
    /// maximum is reported for information only.
    Info,
}

/// Classical certification of one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub method: BoundMethod,
    /// Deterministic strategies before the reduction.
    pub raw_strategies: u128,
    /// Images visited by the reduced enumeration.
    pub strategies: Option<u128>,
    pub vertex_count: usize,
    pub cross_polytope: bool,
    pub normalization: bool,
    pub lhv_max: f64,
    pub numeric_max: Option<f64>,
    pub classical_bound: f64,
    pub verdict: Verdict,
    pub warning: Option<String>,
}

/// Certifies the classical bound. Enumerates when the reduced strategy
/// count fits `budget`, otherwise falls back to the cross-polytope
/// certificate.
pub fn certify(expr: &InequalityExpr, budget: u128, tolerance: f64) -> Result<Certification, LhvError> {
    let mut warning = None;
    let normalization = normalization_check(expr).is_ok();
    let cost = reduced_strategy_count(expr)?;
    let (method, strategies, vertex_count, cross_polytope, lhv_max, numeric_max) = if cost <= budget {
        let vertices = enumerate_vertices(expr)?;
        let cross = expr
            .families()
            .into_iter()
            .all(|f| {
                let part = family_part(expr, f);
                enumerate_vertices(&part).is_ok_and(|v| is_cross_polytope(&v, part.terms.len()))
            });
        if expr.exponent.is_linear() {
            let m = linear_max_over(expr, &vertices);
            (BoundMethod::Enumeration, Some(cost), vertices.len(), cross, m, None)
        } else {
            let nb = nonlinear_lhv_max(expr)?;
            warning = nb.warning.clone();
            (
                BoundMethod::Enumeration,
                Some(cost),
                vertices.len(),
                cross,
                nb.value(),
                Some(nb.numeric),
            )
        }
    } else {
        let cert = cross_polytope_certificate(expr)?;
        let count = cert.dimensions.iter().map(|(_, d)| 2 * d).product();
        warning = Some(format!(
            "enumeration needs {cost} evaluations; bound taken from the cross-polytope certificate"
        ));
        (BoundMethod::CrossPolytope, None, count, true, cert.lhv_max, None)
    };
    let verdict = match expr.locality {
        LocalityModel::Genuine if (lhv_max - expr.classical_bound).abs() <= tolerance => Verdict::Pass,
        LocalityModel::Genuine => Verdict::Fail,
        LocalityModel::Bilocal if lhv_max <= expr.classical_bound + tolerance => Verdict::Pass,
        LocalityModel::Bilocal => Verdict::Info,
    };
    Ok(Certification {
        method,
        raw_strategies: raw_strategy_count(expr)?,
        strategies,
        vertex_count,
        cross_polytope,
        normalization,
        lhv_max,
        numeric_max,
        classical_bound: expr.classical_bound,
        verdict,
        warning,
    })
}
