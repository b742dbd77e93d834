//! Quantum values of inequalities and their optimization over angles.
//!
//! Each correlator collapses to `c(θ)·P` with `c` a product of `cos θ_i`
//! and `sin θ_i`, so for a fixed state the inequality is
//!
//! ```text
//! scale · Σ_i sign_i · (c_i(θ) ⟨P_i⟩)^r
//! ```
//!
//! and the expectations `⟨P_i⟩` are computed once.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{Letter, PauliError, PauliString};
use crate::scenario::{AngleKey, Exponent, Factor, InequalityExpr, Observable, ScenarioError};
use crate::states::{Expectation, StateError};

pub use crate::scenario::AngleAssignment;

/// Optimized angles are kept this far inside `(0, π/2)`.
const EDGE: f64 = 1e-12;
const GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("state has {state} qubits, inequality acts on {expr}")]
    DimensionMismatch { state: usize, expr: usize },
    #[error("t = {0} is outside (0, 2)")]
    TOutOfRange(f64),
    #[error("inputs must be nonnegative")]
    NegativeInput,
    #[error("sequences must have equal nonzero length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// The inequality with expectations resolved: a function of the angles only.
#[derive(Debug, Clone)]
pub struct Objective {
    keys: Vec<AngleKey>,
    scale: f64,
    exponent: Exponent,
    terms: Vec<ObjectiveTerm>,
}

#[derive(Debug, Clone)]
struct ObjectiveTerm {
    sign: f64,
    expectation: f64,
    trig: Vec<(usize, bool)>,
}

impl ObjectiveTerm {
    fn coefficient(&self, x: &[f64]) -> f64 {
        self.trig.iter().fold(1.0, |acc, &(i, sin)| {
            acc * if sin { x[i].sin() } else { x[i].cos() }
        })
    }
}

impl Objective {
    pub fn new(expr: &InequalityExpr, state: &dyn Expectation) -> Result<Self, QuantumError> {
        check_width(expr, state)?;
        let terms = expr
            .compile()?
            .into_iter()
            .map(|seg| {
                Ok(ObjectiveTerm {
                    sign: seg.sign,
                    expectation: state.expectation(&seg.pauli)?,
                    trig: seg.trig,
                })
            })
            .collect::<Result<Vec<_>, QuantumError>>()?;
        Ok(Self {
            keys: expr.angle_keys(),
            scale: expr.scale,
            exponent: expr.exponent,
            terms,
        })
    }

    pub fn dimension(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[AngleKey] {
        &self.keys
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.scale
            * self
                .terms
                .iter()
                .map(|t| t.sign * self.exponent.apply(t.coefficient(x) * t.expectation))
                .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for t in &self.terms {
            if t.expectation == 0.0 {
                continue;
            }
            let c = t.coefficient(x);
            let outer = t.sign * self.exponent.derivative(c * t.expectation) * t.expectation;
            for &(k, _) in &t.trig {
                g[k] += self.scale * outer * partial(&t.trig, x, k);
            }
        }
        g
    }

    /// `∂ value / ∂ x[k]`.
    pub fn partial_derivative(&self, x: &[f64], k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.expectation != 0.0 && t.trig.iter().any(|&(i, _)| i == k))
            .map(|t| {
                let c = t.coefficient(x);
                self.scale
                    * t.sign
                    * self.exponent.derivative(c * t.expectation)
                    * t.expectation
                    * partial(&t.trig, x, k)
            })
            .sum()
    }
}

fn partial(trig: &[(usize, bool)], x: &[f64], k: usize) -> f64 {
    trig.iter().fold(1.0, |acc, &(i, sin)| {
        let t = x[i];
        acc * match (i == k, sin) {
            (true, true) => t.cos(),
            (true, false) => -t.sin(),
            (false, true) => t.sin(),
            (false, false) => t.cos(),
        }
    })
}

fn check_width(expr: &InequalityExpr, state: &dyn Expectation) -> Result<(), QuantumError> {
    if state.n_qubits() != expr.topology.n_qubits {
        return Err(QuantumError::DimensionMismatch {
            state: state.n_qubits(),
            expr: expr.topology.n_qubits,
        });
    }
    Ok(())
}

fn check_keys(expr: &InequalityExpr, angles: &AngleAssignment) -> Result<(), QuantumError> {
    let keys = expr.angle_keys();
    if angles.keys != keys {
        return Err(ScenarioError::AngleCount {
            expected: keys.len(),
            got: angles.len(),
        }
        .into());
    }
    Ok(())
}

/// Quantum value of `expr` on `state` at the given angles.
pub fn evaluate(expr: &InequalityExpr, state: &dyn Expectation, angles: &AngleAssignment) -> Result<f64, QuantumError> {
    check_keys(expr, angles)?;
    Ok(Objective::new(expr, state)?.value(&angles.values))
}

/// Gradient of [`evaluate`] with respect to the angles, in key order.
pub fn gradient(
    expr: &InequalityExpr,
    state: &dyn Expectation,
    angles: &AngleAssignment,
) -> Result<Vec<f64>, QuantumError> {
    check_keys(expr, angles)?;
    Ok(Objective::new(expr, state)?.gradient(&angles.values))
}

/// Evaluates every correlator through its multilinear expansion
/// `2^{-s} Σ_x (-1)^{x·e} ⟨A_{x_1} ⋯ A_{x_s} B⟩`, expanding each
/// `A_x = cos θ Z + (-1)^x sin θ P` into Pauli strings. Slow; used to
/// cross-check the collapsed form against another backend.
pub fn evaluate_expanded(
    expr: &InequalityExpr,
    state: &dyn Expectation,
    angles: &AngleAssignment,
) -> Result<f64, QuantumError> {
    check_width(expr, state)?;
    check_keys(expr, angles)?;
    let n = expr.topology.n_qubits;
    let mut total = 0.0;
    for term in &expr.terms {
        let mut joint = PauliString::identity(n)?;
        // (qubit, partner letter, θ, exponent)
        let mut singles = Vec::new();
        for (party, factor) in term.correlator.factors.iter().enumerate() {
            let setting = expr
                .setting(party, term.family)
                .ok_or_else(|| ScenarioError::MissingSetting {
                    party: expr.topology.parties[party].id.clone(),
                    family: term.family,
                })?;
            match (factor, &setting.observable) {
                (Factor::Single { exponent }, Observable::Rotated { qubit, plane }) => {
                    let theta = angles
                        .get(AngleKey {
                            party,
                            family: term.family,
                        })
                        .expect("checked keys");
                    singles.push((*qubit, plane.partner(), theta, *exponent));
                }
                (Factor::Joint { input }, Observable::Joint { qubits, map }) => {
                    let word = &map[input];
                    let pairs: Vec<(usize, Letter)> = qubits.iter().copied().zip(word.iter().copied()).collect();
                    joint = joint.multiply(&PauliString::on_qubits(n, &pairs)?)?;
                }
                _ => {
                    return Err(ScenarioError::FactorMismatch {
                        label: term.correlator.label.clone(),
                        party: expr.topology.parties[party].id.clone(),
                    }
                    .into())
                }
            }
        }
        let s = singles.len();
        let mut correlator = 0.0;
        for x in 0..1usize << s {
            let input_sign: f64 = (0..s)
                .map(|i| if x >> i & 1 == 1 && singles[i].3 == 1 { -1.0 } else { 1.0 })
                .product();
            // ⟨A_{x_1} ⋯ A_{x_s} B⟩ by expanding each A into Z and P parts
            let mut product = 0.0;
            for pick in 0..1usize << s {
                let mut weight = 1.0;
                let mut pairs = Vec::with_capacity(s);
                for (i, &(q, partner, theta, _)) in singles.iter().enumerate() {
                    if pick >> i & 1 == 1 {
                        let sgn = if x >> i & 1 == 1 { -1.0 } else { 1.0 };
                        weight *= sgn * theta.sin();
                        pairs.push((q, partner));
                    } else {
                        weight *= theta.cos();
                        pairs.push((q, Letter::Z));
                    }
                }
                let p = PauliString::on_qubits(n, &pairs)?.multiply(&joint)?;
                product += weight * state.expectation(&p)?;
            }
            correlator += input_sign * product;
        }
        correlator /= (1usize << s) as f64;
        total += term.coefficient as f64 * expr.exponent.apply(correlator);
    }
    Ok(expr.scale * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Per-angle grid scan followed by exact one-dimensional maximization.
    CoordinateDescent,
    /// Derivative-free simplex search, polished by coordinate descent.
    NelderMead,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    pub starts: usize,
    pub seed: u64,
    pub method: Method,
    pub max_sweeps: usize,
    pub gradient_tolerance: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            method: Method::CoordinateDescent,
            max_sweeps: 200,
            gradient_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub angles: AngleAssignment,
    pub value: f64,
    pub gradient_norm: f64,
    pub converged: bool,
}

pub fn optimize_angles(expr: &InequalityExpr, state: &dyn Expectation) -> Result<Optimum, QuantumError> {
    optimize_angles_with(expr, state, OptimizeOptions::default())
}

pub fn optimize_angles_with(
    expr: &InequalityExpr,
    state: &dyn Expectation,
    opts: OptimizeOptions,
) -> Result<Optimum, QuantumError> {
    let objective = Objective::new(expr, state)?;
    let d = objective.dimension();
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64));
            (0..d).map(|_| rng.random_range(EDGE..FRAC_PI_2 - EDGE)).collect()
        })
        .collect();
    let runs: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|x0| {
            let x = match opts.method {
                Method::CoordinateDescent => grid_sweep(&objective, x0),
                Method::NelderMead => nelder_mead(&objective, x0, 4000),
            };
            let x = coordinate_descent(&objective, x, opts);
            let v = objective.value(&x);
            (x, v)
        })
        .collect();
    // first start wins ties, so the result does not depend on scheduling
    let (x, value) = runs
        .into_iter()
        .reduce(|best, run| if run.1 > best.1 { run } else { best })
        .expect("at least one start");
    let gradient_norm = norm(&objective.gradient(&x));
    Ok(Optimum {
        angles: AngleAssignment::new(objective.keys.clone(), x)?,
        value,
        gradient_norm,
        converged: gradient_norm < opts.gradient_tolerance,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn grid_point(j: usize) -> f64 {
    (j as f64 + 0.5) * FRAC_PI_2 / GRID as f64
}

/// Sets each coordinate in turn to its best value on a 64-point grid.
fn grid_sweep(f: &Objective, mut x: Vec<f64>) -> Vec<f64> {
    for _ in 0..2 {
        for k in 0..x.len() {
            let mut best = (f.value(&x), x[k]);
            for j in 0..GRID {
                x[k] = grid_point(j);
                let v = f.value(&x);
                if v > best.0 {
                    best = (v, x[k]);
                }
            }
            x[k] = best.1;
        }
    }
    x
}

fn coordinate_descent(f: &Objective, mut x: Vec<f64>, opts: OptimizeOptions) -> Vec<f64> {
    let h = FRAC_PI_2 / GRID as f64;
    for _ in 0..opts.max_sweeps {
        for k in 0..x.len() {
            x[k] = line_maximize(f, &mut x.clone(), k, h);
        }
        if norm(&f.gradient(&x)) < opts.gradient_tolerance {
            break;
        }
    }
    x
}

/// Maximizes along coordinate `k` near `x[k]`, solving `∂f/∂x_k = 0` by
/// bisection when the bracket contains a sign change.
fn line_maximize(f: &Objective, x: &mut [f64], k: usize, h: f64) -> f64 {
    let start = x[k];
    let at = |x: &mut [f64], t: f64| {
        x[k] = t;
        f.value(x)
    };
    let slope = |x: &mut [f64], t: f64| {
        x[k] = t;
        f.partial_derivative(x, k)
    };
    let base = at(x, start);
    let mut lo = (start - h).max(EDGE);
    let mut hi = (start + h).min(FRAC_PI_2 - EDGE);
    let mut best = (base, start);
    if slope(x, lo) > 0.0 && slope(x, hi) < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(x, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for t in [lo, hi] {
            let v = at(x, t);
            if v >= best.0 {
                best = (v, t);
            }
        }
    } else {
        for t in [lo, hi] {
            let v = at(x, t);
            if v > best.0 {
                best = (v, t);
            }
        }
    }
    x[k] = best.1;
    best.1
}

/// Nelder–Mead simplex ascent inside the open box `(0, π/2)^d`.
fn nelder_mead(f: &Objective, x0: Vec<f64>, iterations: usize) -> Vec<f64> {
    let d = x0.len();
    if d == 0 {
        return x0;
    }
    let clamp = |mut x: Vec<f64>| {
        x.iter_mut().for_each(|t| *t = t.clamp(EDGE, FRAC_PI_2 - EDGE));
        x
    };
    // minimize the negated objective
    let cost = |x: &[f64]| -f.value(x);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.clone(), cost(&x0)));
    for i in 0..d {
        let mut x = x0.clone();
        x[i] += if x[i] < FRAC_PI_4 { 0.2 } else { -0.2 };
        let x = clamp(x);
        let c = cost(&x);
        simplex.push((x, c));
    }
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[d].1 - simplex[0].1).abs() < 1e-15 {
            break;
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|p| p.0[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[d].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let reflected = along(1.0);
        let fr = cost(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = cost(&expanded);
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            let contracted = along(-0.5);
            let fc = cost(&contracted);
            if fc < simplex[d].1 {
                simplex[d] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&p.0).map(|(b, y)| b + 0.5 * (y - b)).collect();
                    *p = (x.clone(), cost(&x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}

/// Outcome of comparing the optimized value with the stated maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimCheck {
    pub value: f64,
    pub claimed: f64,
    pub difference: f64,
    pub angles: AngleAssignment,
    pub pass: bool,
}

pub fn claimed_max_check(
    expr: &InequalityExpr,
    state: &dyn Expectation,
    tolerance: f64,
) -> Result<ClaimCheck, QuantumError> {
    let best = optimize_angles(expr, state)?;
    let difference = best.value - expr.claimed_quantum_max;
    Ok(ClaimCheck {
        value: best.value,
        claimed: expr.claimed_quantum_max,
        difference,
        angles: best.angles,
        pass: difference.abs() <= tolerance,
    })
}

/// `cos^t θ + sin^t θ`.
pub fn f_theta(t: f64, theta: f64) -> f64 {
    theta.cos().powf(t) + theta.sin().powf(t)
}

/// Maximum of `cos^t θ + sin^t θ` over `[0, π/2]`, `2^{1 - t/2}` for `0 < t < 2`.
pub fn f_theta_max(t: f64) -> Result<f64, QuantumError> {
    if !(t > 0.0 && t < 2.0) {
        return Err(QuantumError::TOutOfRange(t));
    }
    Ok(2f64.powf(1.0 - t / 2.0))
}

/// Numeric maximizer of `cos^t θ + sin^t θ`: grid scan, then golden section.
pub fn f_theta_numeric_max(t: f64) -> Result<(f64, f64), QuantumError> {
    if !(t > 0.0 && t < 2.0) {
        return Err(QuantumError::TOutOfRange(t));
    }
    let n = 4096;
    let h = FRAC_PI_2 / n as f64;
    let j = (0..=n)
        .max_by(|&a, &b| f_theta(t, a as f64 * h).total_cmp(&f_theta(t, b as f64 * h)))
        .unwrap();
    let (mut a, mut b) = (((j as f64) - 1.0).max(0.0) * h, ((j + 1) as f64 * h).min(FRAC_PI_2));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f_theta(t, c) > f_theta(t, d) {
            b = d;
        } else {
            a = c;
        }
    }
    let theta = 0.5 * (a + b);
    Ok((theta, f_theta(t, theta)))
}

/// Both sides of `∏α^{1/K} + ∏β^{1/K} ≤ ∏(α+β)^{1/K}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MahlerOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub equality: bool,
}

pub fn mahler_check(alpha: &[f64], beta: &[f64]) -> Result<MahlerOutcome, QuantumError> {
    if alpha.len() != beta.len() || alpha.is_empty() {
        return Err(QuantumError::LengthMismatch(alpha.len(), beta.len()));
    }
    if alpha.iter().chain(beta).any(|&x| x < 0.0 || x.is_nan()) {
        return Err(QuantumError::NegativeInput);
    }
    let k = alpha.len() as f64;
    let gm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x.powf(1.0 / k)).product::<f64>();
    let lhs = gm(&mut alpha.iter().copied()) + gm(&mut beta.iter().copied());
    let rhs = gm(&mut alpha.iter().zip(beta).map(|(a, b)| a + b));
    let tol = 1e-12 * rhs.max(1.0);
    Ok(MahlerOutcome {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
        equality: (lhs - rhs).abs() <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network;
    use crate::registry::{self, resolve_state, target_state, StateSpec};
    use crate::scenario::{self, FamilySelection};
    use crate::states::{self, StabilizerMixture};
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::SQRT_2;

    fn target(expr: &InequalityExpr) -> StabilizerMixture {
        StabilizerMixture::pure(target_state(&expr.topology).unwrap())
    }

    fn assert_at_quarter_pi(angles: &AngleAssignment) {
        for &t in &angles.values {
            assert!((t - FRAC_PI_4).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn chsh_reaches_tsirelson() {
        let e = scenario::build_chsh().unwrap();
        let phi = states::bell_pair(0, 1, 2).unwrap();
        let v = evaluate(&e, &phi, &AngleAssignment::balanced(&e)).unwrap();
        assert!((v - 2.0 * SQRT_2).abs() < 1e-12);
        let best = optimize_angles(&e, &phi).unwrap();
        assert!((best.value - 2.0 * SQRT_2).abs() < 1e-9);
        assert!(best.converged);
        assert_at_quarter_pi(&best.angles);
    }

    #[test]
    fn star_values() {
        let e = scenario::build_star_first(3).unwrap();
        let v = evaluate(&e, &target(&e), &AngleAssignment::balanced(&e)).unwrap();
        assert!((v - 8f64.sqrt()).abs() < 1e-12);
        let e = scenario::build_star_combined(2).unwrap();
        let best = optimize_angles(&e, &target(&e)).unwrap();
        assert!((best.value - 4.0).abs() < 1e-9);
        assert_at_quarter_pi(&best.angles);
    }

    #[test]
    fn bilocal_root_on_two_pairs() {
        let (bi, _) = scenario::build_bilocal_baseline().unwrap();
        let best = optimize_angles(&bi, &target(&bi)).unwrap();
        assert!((best.value - SQRT_2).abs() < 1e-9);
        assert_at_quarter_pi(&best.angles);
    }

    #[test]
    fn smolin_does_not_violate() {
        let l = scenario::build_two_source(FamilySelection::First).unwrap();
        let c = scenario::build_two_source(FamilySelection::Combined).unwrap();
        let smolin = resolve_state(&StateSpec::Smolin, &c.topology).unwrap();
        let dense = smolin.to_dense().unwrap();
        for (e, want) in [(&l, 1.0), (&c, 2.0)] {
            let a = AngleAssignment::balanced(e);
            assert!((evaluate(e, &smolin, &a).unwrap() - want).abs() < 1e-12);
            assert!((evaluate_expanded(e, &dense, &a).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_gives_zero() {
        for e in [
            scenario::build_chsh().unwrap(),
            scenario::build_star_combined(3).unwrap(),
            scenario::build_ghz_b().unwrap(),
        ] {
            let mixed = StabilizerMixture::maximally_mixed(e.topology.n_qubits).unwrap();
            let v = evaluate(&e, &mixed, &AngleAssignment::uniform(&e, 0.3).unwrap()).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn claimed_maxima() {
        let cases = [
            scenario::build_star_combined(4).unwrap(),
            scenario::build_star_nonlinear(3, 1, 0, FamilySelection::Combined).unwrap(),
            scenario::build_ghz_a(FamilySelection::Combined).unwrap(),
            scenario::build_ghz_b().unwrap(),
            scenario::build_nkm_spec(
                &network::NkmSpec::new(3, 2, 2, vec![network::InterBobLink { source: 3, bobs: (1, 2) }]),
                FamilySelection::First,
            )
            .unwrap(),
        ];
        let expected = [8.0, 2f64.powf(3.5), 4.0, 2.0 * SQRT_2, 2.0];
        for (e, want) in cases.iter().zip(expected) {
            assert_eq!(e.claimed_quantum_max, want);
            let check = claimed_max_check(e, &target(e), 1e-6).unwrap();
            assert!(check.pass, "{}: {}", e.name, check.value);
            assert!((check.value - want).abs() < 1e-9);
            assert_at_quarter_pi(&check.angles);
        }
    }

    #[test]
    fn closed_form_on_diagonal() {
        for k in 2..=4 {
            for sel in [FamilySelection::First, FamilySelection::Second] {
                let e = scenario::build_star(k, sel).unwrap();
                let state = target(&e);
                for j in 1..40 {
                    let theta = j as f64 * FRAC_PI_2 / 40.0;
                    let v = evaluate(&e, &state, &AngleAssignment::uniform(&e, theta).unwrap()).unwrap();
                    let closed = (theta.cos() + theta.sin()).powi(k as i32);
                    assert!((v - closed).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let cases = [
            scenario::build_star_first(3).unwrap(),
            scenario::build_star_combined(2).unwrap(),
            scenario::build_star_nonlinear(3, 1, 0, FamilySelection::Combined).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for e in &cases {
            let f = Objective::new(e, &target(e)).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..f.dimension()).map(|_| rng.random_range(0.05..FRAC_PI_2 - 0.05)).collect();
                let g = f.gradient(&x);
                for k in 0..x.len() {
                    let h = 1e-5;
                    let (mut up, mut dn) = (x.clone(), x.clone());
                    up[k] += h;
                    dn[k] -= h;
                    let fd = (f.value(&up) - f.value(&dn)) / (2.0 * h);
                    assert!((g[k] - fd).abs() < 1e-6, "{} {k}: {} vs {fd}", e.name, g[k]);
                    assert!((f.partial_derivative(&x, k) - g[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expanded_form_agrees_with_dense_backend() {
        let cases = [
            scenario::build_chsh().unwrap(),
            scenario::build_star_combined(2).unwrap(),
            scenario::build_star_nonlinear(3, 1, 0, FamilySelection::First).unwrap(),
            scenario::build_ghz_a(FamilySelection::Combined).unwrap(),
            scenario::build_ghz_b().unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for e in &cases {
            let state = target(e);
            let dense = state.to_dense().unwrap();
            let keys = e.angle_keys();
            let values = (0..keys.len()).map(|_| rng.random_range(0.1..1.4)).collect();
            let a = AngleAssignment::new(keys, values).unwrap();
            let collapsed = evaluate(e, &state, &a).unwrap();
            let expanded = evaluate_expanded(e, &dense, &a).unwrap();
            assert!((collapsed - expanded).abs() < 1e-12, "{}", e.name);
        }
    }

    #[test]
    fn mixtures_discriminate_families() {
        let first = scenario::build_two_source(FamilySelection::First).unwrap();
        let second = scenario::build_two_source(FamilySelection::Second).unwrap();
        let combined = scenario::build_two_source(FamilySelection::Combined).unwrap();
        let t = &combined.topology;
        let mut previous = f64::NEG_INFINITY;
        for j in 0..=10 {
            let q = j as f64 / 10.0;
            let rho1 = resolve_state(&StateSpec::Rho1(q), t).unwrap();
            let rho2 = resolve_state(&StateSpec::Rho2(q), t).unwrap();
            assert!((optimize_angles(&first, &rho1).unwrap().value - 2.0).abs() < 1e-9);
            assert!((optimize_angles(&second, &rho2).unwrap().value - 2.0).abs() < 1e-9);
            let v = optimize_angles(&combined, &rho1).unwrap().value;
            assert!(v > previous);
            assert!(q == 1.0 || v < 4.0 - 1e-6);
            previous = v;
        }
        assert!((previous - 4.0).abs() < 1e-9);
    }

    #[test]
    fn nelder_mead_agrees() {
        let e = scenario::build_star_nonlinear(3, 1, 0, FamilySelection::First).unwrap();
        let opts = OptimizeOptions {
            method: Method::NelderMead,
            ..Default::default()
        };
        let best = optimize_angles_with(&e, &target(&e), opts).unwrap();
        assert!((best.value - 2f64.powf(2.5)).abs() < 1e-9);
        assert_at_quarter_pi(&best.angles);
    }

    #[test]
    fn optimizer_is_deterministic() {
        let e = scenario::build_ghz_b().unwrap();
        let a = optimize_angles(&e, &target(&e)).unwrap();
        let b = optimize_angles(&e, &target(&e)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch() {
        let e = scenario::build_chsh().unwrap();
        let wide = states::bell_pair(0, 1, 3).unwrap();
        assert!(matches!(
            evaluate(&e, &wide, &AngleAssignment::balanced(&e)),
            Err(QuantumError::DimensionMismatch { .. })
        ));
        let other = scenario::build_star_first(2).unwrap();
        let phi = states::bell_pair(0, 1, 2).unwrap();
        assert!(evaluate(&e, &phi, &AngleAssignment::balanced(&other)).is_err());
    }

    #[test]
    fn f_theta() {
        assert!((f_theta_max(1.0).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((f_theta_max(1.5).unwrap() - 1.189_207_115_002_721).abs() < 1e-12);
        assert!(f_theta_max(2.0).is_err() && f_theta_max(0.0).is_err());
        for j in 1..40 {
            let t = j as f64 * 0.05;
            let (theta, value) = f_theta_numeric_max(t).unwrap();
            assert!((value - f_theta_max(t).unwrap()).abs() < 1e-9, "t = {t}");
            assert!((theta - FRAC_PI_4).abs() < 1e-6, "t = {t}: {theta}");
        }
    }

    #[test]
    fn mahler_examples() {
        let m = mahler_check(&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert!(m.equality && m.holds);
        assert!((m.lhs - 2.0).abs() < 1e-15 && (m.rhs - 2.0).abs() < 1e-15);
        let m = mahler_check(&[1.0, 4.0], &[4.0, 1.0]).unwrap();
        assert!((m.lhs - 4.0).abs() < 1e-15 && (m.rhs - 5.0).abs() < 1e-15);
        assert!(m.holds && !m.equality);
        assert_eq!(mahler_check(&[-1.0], &[1.0]), Err(QuantumError::NegativeInput));
        assert!(mahler_check(&[1.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn mahler_holds(pairs in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..=8)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert!(mahler_check(&a, &b).unwrap().holds);
        }

        #[test]
        fn value_bounded_by_claim(theta in proptest::collection::vec(0.01f64..1.56, 4)) {
            let e = scenario::build_star_first(4).unwrap();
            let state = target(&e);
            let a = AngleAssignment::new(e.angle_keys(), theta).unwrap();
            prop_assert!(evaluate(&e, &state, &a).unwrap() <= e.claimed_quantum_max + 1e-12);
        }
    }

    #[test]
    fn registry_states_are_consistent() {
        let e = registry::build("two-source", &Default::default()).unwrap();
        let s = resolve_state(&StateSpec::Target, &e.topology).unwrap();
        assert_eq!(evaluate(&e, &s, &AngleAssignment::balanced(&e)).unwrap(), 2.0);
    }
}
