//! Monte-Carlo Bell tests with finite statistics.
//!
//! Each round draws every party's input uniformly, then samples each
//! source's qubits from their exact joint outcome distribution. A party
//! measures each of its qubits in a single-qubit basis (a rotated direction
//! for single-qubit parties, a Pauli letter per qubit for joint parties)
//! and reports the product of its outcomes.
//!
//! Combined inequalities are simulated one family at a time, `n_rounds`
//! rounds per family, and their estimates are summed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Letter, PauliString};
use crate::scenario::{AngleAssignment, AngleKey, Factor, Family, InequalityExpr, Observable, ScenarioError};
use crate::states::{Expectation, StabilizerGroup, StabilizerMixture, StateError};

/// Rounds per independently seeded block.
pub const BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("state has {state} qubits, inequality acts on {expr}")]
    DimensionMismatch { state: usize, expr: usize },
    #[error("mixture component {0} is entangled across sources")]
    NotProduct(usize),
    #[error("round count must be positive")]
    NoRounds,
    #[error("record {round}: party {party} has no input {input:?}")]
    UnknownInput { round: u64, party: String, input: String },
    #[error("record {0} does not match the inequality's parties")]
    Malformed(u64),
}

/// One round of a Bell test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub family: Family,
    /// Input label per party, in topology order.
    pub inputs: Vec<String>,
    /// Outcome of each owned qubit, per party.
    pub outcomes: Vec<Vec<i8>>,
}

impl RoundRecord {
    /// Each party's reported outcome: the product over its qubits.
    pub fn products(&self) -> Vec<i8> {
        self.outcomes.iter().map(|o| o.iter().product()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub label: String,
    pub estimate: f64,
    pub standard_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub correlators: Vec<CorrelatorEstimate>,
    pub value: f64,
    pub standard_error: f64,
    /// Total rounds over all families.
    pub rounds: u64,
    pub seed: Option<u64>,
    /// Input cells that received no rounds; their correlators carry an
    /// infinite error.
    pub empty_cells: usize,
    pub warnings: Vec<String>,
}

/// Distinct single-qubit measurement directions, as Bloch vectors (x, y, z).
type Direction = [f64; 3];

struct PartyPlan {
    qubits: Vec<usize>,
    inputs: Vec<String>,
    /// `[input][qubit position]` → basis index on that qubit
    bases: Vec<Vec<usize>>,
}

struct SourceTable {
    qubits: Vec<usize>,
    radix: Vec<usize>,
    /// `[component][basis combination]` → cumulative outcome distribution
    cumulative: Vec<Vec<Vec<f64>>>,
}

struct FamilyPlan {
    family: Family,
    parties: Vec<PartyPlan>,
    sources: Vec<SourceTable>,
    cells: usize,
}

struct Plan {
    n_qubits: usize,
    weights: Vec<f64>,
    families: Vec<FamilyPlan>,
}

fn letter_direction(l: Letter) -> Direction {
    match l {
        Letter::X => [1.0, 0.0, 0.0],
        Letter::Y => [0.0, 1.0, 0.0],
        Letter::Z => [0.0, 0.0, 1.0],
        Letter::I => [0.0, 0.0, 0.0],
    }
}

fn rotated_direction(partner: Letter, theta: f64, input: usize) -> Direction {
    let sign = if input == 1 { -1.0 } else { 1.0 };
    let p = letter_direction(partner);
    [sign * theta.sin() * p[0], sign * theta.sin() * p[1], theta.cos()]
}

/// Exact distribution of `s` single-qubit measurements: entry `o` (bit `i`
/// set ⇔ qubit `i` gave `-1`) is `2^{-s} Σ_S ∏_{i∈S} o_i ⟨∏_{i∈S} n_i·σ_i⟩`.
fn outcome_distribution(
    state: &dyn Expectation,
    n: usize,
    qubits: &[usize],
    dirs: &[Direction],
) -> Result<Vec<f64>, SamplerError> {
    let s = qubits.len();
    let mut moments = vec![0.0; 1 << s];
    for (subset, moment) in moments.iter_mut().enumerate() {
        let members: Vec<usize> = (0..s).filter(|i| subset >> i & 1 == 1).collect();
        let mut total = 0.0;
        for choice in 0..3usize.pow(members.len() as u32) {
            let mut c = choice;
            let mut weight = 1.0;
            let mut pairs = Vec::with_capacity(members.len());
            for &i in &members {
                let l = c % 3;
                c /= 3;
                weight *= dirs[i][l];
                pairs.push((qubits[i], [Letter::X, Letter::Y, Letter::Z][l]));
            }
            if weight != 0.0 {
                let p = PauliString::on_qubits(n, &pairs).map_err(StateError::from)?;
                total += weight * state.expectation(&p)?;
            }
        }
        *moment = total;
    }
    let mut probs: Vec<f64> = (0..1usize << s)
        .map(|o| {
            let sum: f64 = (0..1usize << s)
                .map(|subset| {
                    let parity = (o & subset).count_ones();
                    if parity % 2 == 1 {
                        -moments[subset]
                    } else {
                        moments[subset]
                    }
                })
                .sum();
            (sum / (1usize << s) as f64).max(0.0)
        })
        .collect();
    let norm: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= norm);
    Ok(probs)
}

impl Plan {
    fn new(expr: &InequalityExpr, state: &StabilizerMixture, angles: &AngleAssignment) -> Result<Self, SamplerError> {
        let n = expr.topology.n_qubits;
        if state.n_qubits() != n {
            return Err(SamplerError::DimensionMismatch {
                state: state.n_qubits(),
                expr: n,
            });
        }
        let keys = expr.angle_keys();
        if angles.keys != keys {
            return Err(ScenarioError::AngleCount {
                expected: keys.len(),
                got: angles.len(),
            }
            .into());
        }
        let blocks: Vec<Vec<usize>> = expr.topology.sources.iter().map(|s| s.qubits.clone()).collect();
        for (i, (_, g)) in state.components().iter().enumerate() {
            if !g.is_product_over(&blocks) {
                return Err(SamplerError::NotProduct(i));
            }
        }
        let families = expr
            .families()
            .into_iter()
            .map(|f| FamilyPlan::new(expr, state, angles, f))
            .collect::<Result<Vec<_>, _>>()?;
        let mut acc = 0.0;
        let weights = state
            .components()
            .iter()
            .map(|(w, _)| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            n_qubits: n,
            weights,
            families,
        })
    }
}

impl FamilyPlan {
    fn new(
        expr: &InequalityExpr,
        state: &StabilizerMixture,
        angles: &AngleAssignment,
        family: Family,
    ) -> Result<Self, SamplerError> {
        let topo = &expr.topology;
        let n = topo.n_qubits;
        // distinct directions per qubit
        let mut qubit_dirs: Vec<Vec<Direction>> = vec![Vec::new(); n];
        let mut intern = |q: usize, d: Direction| -> usize {
            if let Some(i) = qubit_dirs[q].iter().position(|e| *e == d) {
                i
            } else {
                qubit_dirs[q].push(d);
                qubit_dirs[q].len() - 1
            }
        };
        let mut parties = Vec::with_capacity(topo.parties.len());
        for (p, party) in topo.parties.iter().enumerate() {
            let setting = expr.setting(p, family).ok_or_else(|| ScenarioError::MissingSetting {
                party: party.id.clone(),
                family,
            })?;
            let (inputs, bases) = match &setting.observable {
                Observable::Rotated { qubit, plane } => {
                    let theta = angles.get(AngleKey { party: p, family }).expect("checked keys");
                    let bases = (0..2)
                        .map(|x| vec![intern(*qubit, rotated_direction(plane.partner(), theta, x))])
                        .collect();
                    (vec!["0".to_string(), "1".to_string()], bases)
                }
                Observable::Joint { qubits, map } => {
                    let inputs: Vec<String> = map.keys().cloned().collect();
                    let bases = map
                        .values()
                        .map(|word| {
                            qubits
                                .iter()
                                .zip(word)
                                .map(|(&q, &l)| intern(q, letter_direction(l)))
                                .collect()
                        })
                        .collect();
                    (inputs, bases)
                }
            };
            let qubits = match &setting.observable {
                Observable::Rotated { qubit, .. } => vec![*qubit],
                Observable::Joint { qubits, .. } => qubits.clone(),
            };
            parties.push(PartyPlan { qubits, inputs, bases });
        }
        let mut sources = Vec::with_capacity(topo.sources.len());
        for src in &topo.sources {
            let radix: Vec<usize> = src.qubits.iter().map(|&q| qubit_dirs[q].len().max(1)).collect();
            let combos: usize = radix.iter().product();
            let mut cumulative = Vec::with_capacity(state.components().len());
            for (_, g) in state.components() {
                let mut per_combo = Vec::with_capacity(combos);
                for c in 0..combos {
                    let mut rest = c;
                    let dirs: Vec<Direction> = src
                        .qubits
                        .iter()
                        .zip(&radix)
                        .map(|(&q, &r)| {
                            let i = rest % r;
                            rest /= r;
                            qubit_dirs[q].get(i).copied().unwrap_or([0.0, 0.0, 1.0])
                        })
                        .collect();
                    let probs = outcome_distribution(g, n, &src.qubits, &dirs)?;
                    let mut acc = 0.0;
                    per_combo.push(
                        probs
                            .iter()
                            .map(|p| {
                                acc += p;
                                acc
                            })
                            .collect(),
                    );
                }
                cumulative.push(per_combo);
            }
            sources.push(SourceTable {
                qubits: src.qubits.clone(),
                radix,
                cumulative,
            });
        }
        let cells = parties.iter().map(|p| p.inputs.len()).product();
        Ok(Self {
            family,
            parties,
            sources,
            cells,
        })
    }

    /// Mixed-radix index of an input tuple.
    fn cell_of(&self, inputs: &[usize]) -> usize {
        inputs
            .iter()
            .zip(&self.parties)
            .rev()
            .fold(0, |acc, (&i, p)| acc * p.inputs.len() + i)
    }
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Simulates one round into `inputs` (per party) and `bits` (per qubit, 1 ⇔ −1).
fn run_round(plan: &Plan, fp: &FamilyPlan, rng: &mut ChaCha8Rng, inputs: &mut [usize], bits: &mut [u8], qubit_basis: &mut [usize]) {
    let comp = if plan.weights.len() == 1 {
        0
    } else {
        pick(&plan.weights, rng.random::<f64>())
    };
    for (p, party) in fp.parties.iter().enumerate() {
        let x = rng.random_range(0..party.inputs.len());
        inputs[p] = x;
        for (&q, &b) in party.qubits.iter().zip(&party.bases[x]) {
            qubit_basis[q] = b;
        }
    }
    for src in &fp.sources {
        let combo = src
            .qubits
            .iter()
            .zip(&src.radix)
            .rev()
            .fold(0, |acc, (&q, &r)| acc * r + qubit_basis[q]);
        let o = pick(&src.cumulative[comp][combo], rng.random::<f64>());
        for (i, &q) in src.qubits.iter().enumerate() {
            bits[q] = (o >> i & 1) as u8;
        }
    }
}

fn block_rng(seed: u64, family: usize, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((family as u64) << 40 | block);
    rng
}

/// Runs `n_rounds` rounds of every family, calling `sink` per round.
fn drive<A: Send>(
    plan: &Plan,
    n_rounds: u64,
    seed: u64,
    init: impl Fn(usize) -> A + Sync + Send,
    sink: impl Fn(&mut A, usize, u64, &[usize], &[u8]) + Sync + Send,
) -> Vec<Vec<A>> {
    plan.families
        .iter()
        .enumerate()
        .map(|(f, fp)| {
            let blocks = n_rounds.div_ceil(BLOCK);
            (0..blocks)
                .into_par_iter()
                .map(|b| {
                    let mut acc = init(f);
                    let mut rng = block_rng(seed, f, b);
                    let mut inputs = vec![0; fp.parties.len()];
                    let mut bits = vec![0u8; plan.n_qubits];
                    let mut basis = vec![0usize; plan.n_qubits];
                    let start = b * BLOCK;
                    let end = (start + BLOCK).min(n_rounds);
                    for r in start..end {
                        run_round(plan, fp, &mut rng, &mut inputs, &mut bits, &mut basis);
                        sink(&mut acc, f, f as u64 * n_rounds + r, &inputs, &bits);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

fn check_rounds(n_rounds: u64) -> Result<(), SamplerError> {
    if n_rounds == 0 {
        Err(SamplerError::NoRounds)
    } else {
        Ok(())
    }
}

/// Simulates `n_rounds` rounds per family. Reproducible for a given seed.
pub fn simulate_rounds(
    expr: &InequalityExpr,
    state: &StabilizerMixture,
    angles: &AngleAssignment,
    n_rounds: u64,
    seed: u64,
) -> Result<Vec<RoundRecord>, SamplerError> {
    check_rounds(n_rounds)?;
    let plan = Plan::new(expr, state, angles)?;
    let blocks = drive(
        &plan,
        n_rounds,
        seed,
        |_| Vec::new(),
        |acc: &mut Vec<RoundRecord>, f, round, inputs, bits| {
            let fp = &plan.families[f];
            acc.push(RoundRecord {
                round,
                family: fp.family,
                inputs: fp
                    .parties
                    .iter()
                    .zip(inputs)
                    .map(|(p, &x)| p.inputs[x].clone())
                    .collect(),
                outcomes: fp
                    .parties
                    .iter()
                    .map(|p| p.qubits.iter().map(|&q| if bits[q] == 1 { -1 } else { 1 }).collect())
                    .collect(),
            });
        },
    );
    Ok(blocks.into_iter().flatten().flatten().collect())
}

/// Per-cell round counts and outcome-product sums, one table per family.
#[derive(Debug, Clone, PartialEq)]
struct Tally {
    counts: Vec<Vec<u64>>,
    sums: Vec<Vec<i64>>,
}

impl Tally {
    fn new(plan: &Plan) -> Self {
        Self {
            counts: plan.families.iter().map(|f| vec![0; f.cells]).collect(),
            sums: plan.families.iter().map(|f| vec![0; f.cells]).collect(),
        }
    }

    fn add(&mut self, f: usize, cell: usize, product: i64) {
        self.counts[f][cell] += 1;
        self.sums[f][cell] += product;
    }

    fn merge(&mut self, other: &Tally) {
        for f in 0..self.counts.len() {
            for c in 0..self.counts[f].len() {
                self.counts[f][c] += other.counts[f][c];
                self.sums[f][c] += other.sums[f][c];
            }
        }
    }
}

/// Simulates and estimates without storing rounds.
pub fn simulate_estimate(
    expr: &InequalityExpr,
    state: &StabilizerMixture,
    angles: &AngleAssignment,
    n_rounds: u64,
    seed: u64,
) -> Result<EstimateReport, SamplerError> {
    check_rounds(n_rounds)?;
    let plan = Plan::new(expr, state, angles)?;
    // one small table per block, merged in block order
    let blocks = drive(
        &plan,
        n_rounds,
        seed,
        |f| (f, vec![0u64; plan.families[f].cells], vec![0i64; plan.families[f].cells]),
        |acc: &mut (usize, Vec<u64>, Vec<i64>), f, _, inputs, bits| {
            let cell = plan.families[f].cell_of(inputs);
            let odd = bits.iter().filter(|&&b| b == 1).count() % 2;
            acc.1[cell] += 1;
            acc.2[cell] += if odd == 1 { -1 } else { 1 };
        },
    );
    let mut tally = Tally::new(&plan);
    for family_blocks in blocks {
        for (f, counts, sums) in family_blocks {
            let mut t = Tally::new(&plan);
            t.counts[f] = counts;
            t.sums[f] = sums;
            tally.merge(&t);
        }
    }
    let mut report = report_from(expr, &plan, &tally)?;
    report.seed = Some(seed);
    Ok(report)
}

/// Estimates every correlator and the inequality value from recorded rounds.
pub fn estimate(records: &[RoundRecord], expr: &InequalityExpr) -> Result<EstimateReport, SamplerError> {
    // the plan only supplies input labels and cell layout here
    let angles = AngleAssignment::balanced(expr);
    let state = layout_state(expr)?;
    let plan = Plan::new(expr, &state, &angles)?;
    let mut tally = Tally::new(&plan);
    for rec in records {
        let f = plan
            .families
            .iter()
            .position(|fp| fp.family == rec.family)
            .ok_or(SamplerError::Malformed(rec.round))?;
        let fp = &plan.families[f];
        if rec.inputs.len() != fp.parties.len() || rec.outcomes.len() != fp.parties.len() {
            return Err(SamplerError::Malformed(rec.round));
        }
        let mut idx = Vec::with_capacity(fp.parties.len());
        for (p, (party, input)) in fp.parties.iter().zip(&rec.inputs).enumerate() {
            let x = party
                .inputs
                .iter()
                .position(|i| i == input)
                .ok_or_else(|| SamplerError::UnknownInput {
                    round: rec.round,
                    party: expr.topology.parties[p].id.clone(),
                    input: input.clone(),
                })?;
            idx.push(x);
        }
        let product: i64 = rec.products().iter().map(|&o| o as i64).product();
        tally.add(f, fp.cell_of(&idx), product);
    }
    report_from(expr, &plan, &tally)
}

fn layout_state(expr: &InequalityExpr) -> Result<StabilizerMixture, SamplerError> {
    let n = expr.topology.n_qubits;
    let zs = (0..n)
        .map(|q| PauliString::single(n, q, Letter::Z))
        .collect::<Result<Vec<_>, _>>()
        .map_err(StateError::from)?;
    Ok(StabilizerMixture::pure(StabilizerGroup::new(n, zs)?))
}

fn report_from(expr: &InequalityExpr, plan: &Plan, tally: &Tally) -> Result<EstimateReport, SamplerError> {
    let mut correlators = Vec::with_capacity(expr.terms.len());
    let mut warnings = Vec::new();
    // d value / d cell mean, for the delta method
    let mut cell_grad: Vec<Vec<f64>> = plan.families.iter().map(|f| vec![0.0; f.cells]).collect();
    let mean = |f: usize, c: usize| -> Option<f64> {
        let n = tally.counts[f][c];
        (n > 0).then(|| tally.sums[f][c] as f64 / n as f64)
    };
    let variance_of_mean = |f: usize, c: usize| -> f64 {
        let n = tally.counts[f][c];
        match mean(f, c) {
            Some(m) => (1.0 - m * m).max(0.0) / n as f64,
            None => f64::INFINITY,
        }
    };
    let mut value = 0.0;
    for term in &expr.terms {
        let f = plan
            .families
            .iter()
            .position(|fp| fp.family == term.family)
            .expect("family planned");
        let fp = &plan.families[f];
        let mut base = Vec::with_capacity(fp.parties.len());
        let mut singles = Vec::new();
        for (p, factor) in term.correlator.factors.iter().enumerate() {
            match factor {
                Factor::Single { exponent } => {
                    singles.push((p, *exponent));
                    base.push(0);
                }
                Factor::Joint { input } => {
                    let x = fp.parties[p]
                        .inputs
                        .iter()
                        .position(|i| i == input)
                        .expect("compiled input");
                    base.push(x);
                }
            }
        }
        let s = singles.len();
        let norm = 1.0 / (1usize << s) as f64;
        let mut est = 0.0;
        let mut var = 0.0;
        let mut cells = Vec::with_capacity(1 << s);
        for x in 0..1usize << s {
            let mut idx = base.clone();
            let mut sign = 1.0;
            for (i, &(p, e)) in singles.iter().enumerate() {
                let bit = x >> i & 1;
                idx[p] = bit;
                if bit == 1 && e == 1 {
                    sign = -sign;
                }
            }
            let c = fp.cell_of(&idx);
            match mean(f, c) {
                Some(m) => est += norm * sign * m,
                None => warnings.push(format!(
                    "correlator {}: input cell {:?} received no rounds",
                    term.correlator.label,
                    fp.parties
                        .iter()
                        .zip(&idx)
                        .map(|(p, &i)| p.inputs[i].as_str())
                        .collect::<Vec<_>>()
                )),
            }
            var += norm * norm * variance_of_mean(f, c);
            cells.push((c, norm * sign));
        }
        let outer = expr.scale * term.coefficient as f64 * expr.exponent.derivative(est);
        for (c, w) in cells {
            cell_grad[f][c] += outer * w;
        }
        value += expr.scale * term.coefficient as f64 * expr.exponent.apply(est);
        correlators.push(CorrelatorEstimate {
            label: term.correlator.label.clone(),
            estimate: est,
            standard_error: var.sqrt(),
        });
    }
    let mut var = 0.0;
    let mut empty_cells = 0;
    for (f, grads) in cell_grad.iter().enumerate() {
        for (c, g) in grads.iter().enumerate() {
            if tally.counts[f][c] == 0 {
                empty_cells += 1;
            }
            if *g != 0.0 {
                var += g * g * variance_of_mean(f, c);
            }
        }
    }
    let rounds = tally.counts.iter().flatten().sum();
    warnings.sort();
    warnings.dedup();
    Ok(EstimateReport {
        correlators,
        value,
        standard_error: var.sqrt(),
        rounds,
        seed: None,
        empty_cells,
        warnings,
    })
}

/// Round log as CSV with columns `round,party,input,outcome`; primed-family
/// inputs carry a trailing apostrophe.
pub fn to_csv(records: &[RoundRecord], expr: &InequalityExpr) -> String {
    let mut out = String::from("round,party,input,outcome\n");
    for rec in records {
        let mark = if rec.family == Family::Primed { "'" } else { "" };
        for ((party, input), outcome) in expr.topology.parties.iter().zip(&rec.inputs).zip(rec.products()) {
            let _ = writeln!(out, "{},{},{}{},{}", rec.round, party.id, input, mark, outcome);
        }
    }
    out
}
