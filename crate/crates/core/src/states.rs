//! Stabilizer states, stabilizer mixtures and a dense state-vector oracle.
//!
//! Pure states are described by `n` independent commuting Hermitian
//! generators. Expectation values of Pauli strings are exact: a string has
//! expectation `±1` when it (or its negative) lies in the group and `0`
//! otherwise. Membership is decided by reducing the string against the
//! generators in GF(2) row-echelon form while accumulating the phase.

use num_complex::Complex64;
use thiserror::Error;

use crate::pauli::{Letter, PauliError, PauliString, Phase};

/// Registers larger than this are refused by [`StabilizerGroup::to_dense`].
pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("expected {expected} generators for {expected} qubits, got {got}")]
    GeneratorCount { expected: usize, got: usize },
    #[error("generator {0} is not Hermitian")]
    NonHermitianGenerator(String),
    #[error("generators {0} and {1} anticommute")]
    Anticommuting(String, String),
    #[error("generators are not independent (rank {rank} < {n_qubits})")]
    Dependent { rank: usize, n_qubits: usize },
    #[error("observable {0} is not Hermitian")]
    NonHermitianObservable(String),
    #[error("state has {state} qubits, observable has {observable}")]
    DimensionMismatch { state: usize, observable: usize },
    #[error("qubit indices must be distinct and below {n_qubits}: {indices:?}")]
    IndexClash { indices: Vec<usize>, n_qubits: usize },
    #[error("mixture weights must be nonnegative and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("mixture components disagree on qubit count")]
    MixedWidths,
    #[error("empty mixture")]
    EmptyMixture,
    #[error("dense state needs {0} qubits, at most {MAX_DENSE_QUBITS} supported")]
    TooLargeForDense(usize),
    #[error("projection onto the stabilized subspace vanished")]
    EmptyProjection,
    #[error("amplitude vector is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("amplitude vector length {got} is not 2^{n_qubits}")]
    AmplitudeLength { got: usize, n_qubits: usize },
}

/// Anything that assigns expectation values to Hermitian Pauli strings.
pub trait Expectation {
    fn n_qubits(&self) -> usize;

    /// `⟨p⟩`, always in `[-1, 1]`.
    fn expectation(&self, p: &PauliString) -> Result<f64, StateError>;
}

fn check_observable(n_qubits: usize, p: &PauliString) -> Result<(), StateError> {
    if p.n_qubits() != n_qubits {
        return Err(StateError::DimensionMismatch {
            state: n_qubits,
            observable: p.n_qubits(),
        });
    }
    if !p.is_hermitian() {
        return Err(StateError::NonHermitianObservable(p.to_string()));
    }
    Ok(())
}

fn check_distinct(indices: &[usize], n_qubits: usize) -> Result<(), StateError> {
    let clash = indices.iter().any(|&i| i >= n_qubits)
        || (0..indices.len()).any(|a| (a + 1..indices.len()).any(|b| indices[a] == indices[b]));
    if clash {
        Err(StateError::IndexClash {
            indices: indices.to_vec(),
            n_qubits,
        })
    } else {
        Ok(())
    }
}

// Column c < n is the x bit of qubit c, column n + c the z bit.
fn has_column(p: &PauliString, n: usize, col: usize) -> bool {
    if col < n {
        p.x_mask() >> col & 1 == 1
    } else {
        p.z_mask() >> (col - n) & 1 == 1
    }
}

/// The four two-qubit Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    /// Eigenvalues of `(ZZ, XX)`.
    fn signs(self) -> (Phase, Phase) {
        use Phase::{MinusOne as M, PlusOne as P};
        match self {
            BellState::PhiPlus => (P, P),
            BellState::PhiMinus => (P, M),
            BellState::PsiPlus => (M, P),
            BellState::PsiMinus => (M, M),
        }
    }
}

/// Pure stabilizer state given by `n` independent commuting generators.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerGroup {
    n_qubits: usize,
    generators: Vec<PauliString>,
    // fully reduced echelon rows with their pivot columns
    echelon: Vec<(usize, PauliString)>,
}

impl StabilizerGroup {
    pub fn new(n_qubits: usize, generators: Vec<PauliString>) -> Result<Self, StateError> {
        if generators.len() != n_qubits {
            return Err(StateError::GeneratorCount {
                expected: n_qubits,
                got: generators.len(),
            });
        }
        for g in &generators {
            if g.n_qubits() != n_qubits {
                return Err(StateError::DimensionMismatch {
                    state: n_qubits,
                    observable: g.n_qubits(),
                });
            }
            if !g.is_hermitian() {
                return Err(StateError::NonHermitianGenerator(g.to_string()));
            }
        }
        for (a, g) in generators.iter().enumerate() {
            for h in &generators[a + 1..] {
                if !g.commutes_unchecked(h) {
                    return Err(StateError::Anticommuting(g.to_string(), h.to_string()));
                }
            }
        }
        let echelon = reduce(n_qubits, &generators);
        if echelon.len() < n_qubits {
            return Err(StateError::Dependent {
                rank: echelon.len(),
                n_qubits,
            });
        }
        // full rank also rules out -I in the group
        Ok(Self {
            n_qubits,
            generators,
            echelon,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// `Some(+1)` / `Some(-1)` if `±p` is in the group, `None` otherwise.
    pub fn membership(&self, p: &PauliString) -> Option<f64> {
        let n = self.n_qubits;
        let mut residual = *p;
        for (col, row) in &self.echelon {
            if has_column(&residual, n, *col) {
                residual = residual.mul_unchecked(row);
            }
        }
        if residual.is_identity() {
            // residual = p·g for some group element g = ±p
            residual.phase().sign()
        } else {
            None
        }
    }

    /// Number of independent group elements supported inside `qubits`.
    pub fn local_rank(&self, qubits: &[usize]) -> usize {
        let inside: u64 = qubits.iter().fold(0, |m, &q| m | 1 << q);
        let outside = !inside;
        let rows: Vec<u128> = self
            .generators
            .iter()
            .map(|g| (g.x_mask() & outside) as u128 | ((g.z_mask() & outside) as u128) << 64)
            .collect();
        self.n_qubits - gf2_rank(rows)
    }

    /// True when the state factorizes over the given disjoint qubit blocks.
    pub fn is_product_over(&self, blocks: &[Vec<usize>]) -> bool {
        blocks.iter().all(|b| self.local_rank(b) == b.len())
    }

    /// State vector stabilized by every generator, global phase fixed so the
    /// first largest amplitude is real and positive.
    pub fn to_dense(&self) -> Result<DenseState, StateError> {
        let n = self.n_qubits;
        if n > MAX_DENSE_QUBITS {
            return Err(StateError::TooLargeForDense(n));
        }
        let dim = 1usize << n;
        // generic reference vector: overlaps every stabilizer state
        let mut v: Vec<Complex64> = (0..dim)
            .map(|b| {
                let t = b as f64 + 1.0;
                Complex64::new((0.7 * t).sin() + 1.3, (1.1 * t).cos())
            })
            .collect();
        for g in &self.generators {
            let gv = apply_pauli(g, &v);
            for (a, b) in v.iter_mut().zip(gv) {
                *a = (*a + b) * 0.5;
            }
        }
        let norm2: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if norm2 < 1e-12 {
            return Err(StateError::EmptyProjection);
        }
        let scale = norm2.sqrt();
        let max = v.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let pivot = v.iter().find(|a| a.norm() >= max * (1.0 - 1e-9)).copied().unwrap();
        let rot = pivot.conj() / pivot.norm();
        for a in &mut v {
            *a = *a * rot / scale;
        }
        DenseState::new(n, v)
    }
}

fn reduce(n: usize, generators: &[PauliString]) -> Vec<(usize, PauliString)> {
    let mut rows: Vec<PauliString> = generators.to_vec();
    let mut echelon = Vec::new();
    for col in 0..2 * n {
        let Some(pos) = rows.iter().position(|r| has_column(r, n, col)) else {
            continue;
        };
        let pivot = rows.swap_remove(pos);
        for r in rows.iter_mut() {
            if has_column(r, n, col) {
                *r = r.mul_unchecked(&pivot);
            }
        }
        for (_, r) in echelon.iter_mut() {
            if has_column(r, n, col) {
                *r = r.mul_unchecked(&pivot);
            }
        }
        echelon.push((col, pivot));
    }
    echelon
}

fn gf2_rank(mut rows: Vec<u128>) -> usize {
    let mut rank = 0;
    for bit in 0..128 {
        let mask = 1u128 << bit;
        let Some(pos) = rows[rank..].iter().position(|r| r & mask != 0) else {
            continue;
        };
        rows.swap(rank, rank + pos);
        let pivot = rows[rank];
        for r in rows.iter_mut().skip(rank + 1) {
            if *r & mask != 0 {
                *r ^= pivot;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

impl Expectation for StabilizerGroup {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn expectation(&self, p: &PauliString) -> Result<f64, StateError> {
        check_observable(self.n_qubits, p)?;
        let sign = p.phase().sign().unwrap_or(1.0);
        Ok(self.membership(&p.unsigned()).map_or(0.0, |s| s * sign))
    }
}

/// Two- or three-qubit state emitted by one source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalState {
    Bell(BellState, usize, usize),
    Ghz3(usize, usize, usize),
}

impl LocalState {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            LocalState::Bell(_, a, b) => vec![a, b],
            LocalState::Ghz3(a, b, c) => vec![a, b, c],
        }
    }

    fn generators(&self, n: usize) -> Result<Vec<PauliString>, StateError> {
        use Letter::{X, Z};
        check_distinct(&self.qubits(), n)?;
        Ok(match *self {
            LocalState::Bell(kind, i, j) => {
                let (zz_sign, xx_sign) = kind.signs();
                vec![
                    PauliString::on_qubits(n, &[(i, Z), (j, Z)])?.with_phase(zz_sign),
                    PauliString::on_qubits(n, &[(i, X), (j, X)])?.with_phase(xx_sign),
                ]
            }
            LocalState::Ghz3(i, j, k) => vec![
                PauliString::on_qubits(n, &[(i, X), (j, Z), (k, Z)])?,
                PauliString::on_qubits(n, &[(i, Z), (j, X), (k, Z)])?,
                PauliString::on_qubits(n, &[(i, Z), (j, Z), (k, X)])?,
            ],
        })
    }
}

/// Tensor product of local states on disjoint qubits; untouched qubits are
/// left in `|0⟩`.
pub fn product_state(parts: &[LocalState], n: usize) -> Result<StabilizerGroup, StateError> {
    let mut used = Vec::new();
    let mut gens = Vec::new();
    for part in parts {
        gens.extend(part.generators(n)?);
        used.extend(part.qubits());
    }
    check_distinct(&used, n)?;
    for q in (0..n).filter(|q| !used.contains(q)) {
        gens.push(PauliString::single(n, q, Letter::Z)?);
    }
    StabilizerGroup::new(n, gens)
}

/// `|Φ⁺⟩` on qubits `(i, j)` of an `n`-qubit register.
pub fn bell_pair(i: usize, j: usize, n: usize) -> Result<StabilizerGroup, StateError> {
    bell_state(BellState::PhiPlus, i, j, n)
}

pub fn bell_state(kind: BellState, i: usize, j: usize, n: usize) -> Result<StabilizerGroup, StateError> {
    product_state(&[LocalState::Bell(kind, i, j)], n)
}

/// Three-qubit GHZ state on `(i, j, k)`, generated by `XZZ`, `ZXZ`, `ZZX`.
pub fn ghz3(i: usize, j: usize, k: usize, n: usize) -> Result<StabilizerGroup, StateError> {
    product_state(&[LocalState::Ghz3(i, j, k)], n)
}

/// Convex combination of pure stabilizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerMixture {
    n_qubits: usize,
    components: Vec<(f64, StabilizerGroup)>,
}

impl StabilizerMixture {
    pub fn new(components: Vec<(f64, StabilizerGroup)>) -> Result<Self, StateError> {
        let Some(first) = components.first() else {
            return Err(StateError::EmptyMixture);
        };
        let n_qubits = first.1.n_qubits();
        if components.iter().any(|(_, g)| g.n_qubits() != n_qubits) {
            return Err(StateError::MixedWidths);
        }
        let sum: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0 || !w.is_finite()) || (sum - 1.0).abs() > 1e-12 {
            return Err(StateError::BadWeights(sum));
        }
        Ok(Self {
            n_qubits,
            components,
        })
    }

    pub fn pure(g: StabilizerGroup) -> Self {
        Self {
            n_qubits: g.n_qubits(),
            components: vec![(1.0, g)],
        }
    }

    /// `q·a + (1-q)·b`.
    pub fn two_component(q: f64, a: StabilizerGroup, b: StabilizerGroup) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(StateError::BadWeights(q));
        }
        Self::new(vec![(q, a), (1.0 - q, b)])
    }

    /// Uniform mixture over all computational basis states.
    pub fn maximally_mixed(n: usize) -> Result<Self, StateError> {
        let dim = 1usize << n;
        let w = 1.0 / dim as f64;
        let comps = (0..dim)
            .map(|b| {
                let gens = (0..n)
                    .map(|q| {
                        let phase = if b >> q & 1 == 1 { Phase::MinusOne } else { Phase::PlusOne };
                        Ok(PauliString::single(n, q, Letter::Z)?.with_phase(phase))
                    })
                    .collect::<Result<Vec<_>, StateError>>()?;
                Ok((w, StabilizerGroup::new(n, gens)?))
            })
            .collect::<Result<Vec<_>, StateError>>()?;
        Self::new(comps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn components(&self) -> &[(f64, StabilizerGroup)] {
        &self.components
    }

    pub fn to_dense(&self) -> Result<DenseMixture, StateError> {
        let components = self
            .components
            .iter()
            .map(|(w, g)| Ok((*w, g.to_dense()?)))
            .collect::<Result<Vec<_>, StateError>>()?;
        Ok(DenseMixture {
            n_qubits: self.n_qubits,
            components,
        })
    }
}

impl Expectation for StabilizerMixture {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn expectation(&self, p: &PauliString) -> Result<f64, StateError> {
        check_observable(self.n_qubits, p)?;
        let mut acc = 0.0;
        for (w, g) in &self.components {
            acc += w * g.expectation(p)?;
        }
        Ok(acc)
    }
}

/// Four-qubit Smolin state built from the pairing `(i,j)(k,l)`:
/// `¼ Σ_b [b]_{ij} ⊗ [b]_{kl}` over the four Bell states `b`.
pub fn smolin(i: usize, j: usize, k: usize, l: usize, n: usize) -> Result<StabilizerMixture, StateError> {
    check_distinct(&[i, j, k, l], n)?;
    let comps = BellState::ALL
        .iter()
        .map(|&b| Ok((0.25, product_state(&[LocalState::Bell(b, i, j), LocalState::Bell(b, k, l)], n)?)))
        .collect::<Result<Vec<_>, StateError>>()?;
    StabilizerMixture::new(comps)
}

/// `2^n` complex amplitudes; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        if n_qubits > MAX_DENSE_QUBITS {
            return Err(StateError::TooLargeForDense(n_qubits));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(StateError::AmplitudeLength {
                got: amplitudes.len(),
                n_qubits,
            });
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(StateError::NotNormalized(norm2));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// `P|v⟩` for `P = i^k ⊗ σ(x,z)`, using `σ(x,z) = i^{x·z} X^x Z^z`.
pub fn apply_pauli(p: &PauliString, v: &[Complex64]) -> Vec<Complex64> {
    let x = p.x_mask() as usize;
    let z = p.z_mask() as usize;
    let k = p.phase().power() + (x & z).count_ones();
    let global = match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (b, amp) in v.iter().enumerate() {
        let sign = if (z & b).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        out[b ^ x] = global * amp * sign;
    }
    out
}

impl Expectation for DenseState {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn expectation(&self, p: &PauliString) -> Result<f64, StateError> {
        check_observable(self.n_qubits, p)?;
        let pv = apply_pauli(p, &self.amplitudes);
        Ok(self
            .amplitudes
            .iter()
            .zip(&pv)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }
}

/// Weighted list of dense states; the dense counterpart of [`StabilizerMixture`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMixture {
    n_qubits: usize,
    components: Vec<(f64, DenseState)>,
}

impl DenseMixture {
    pub fn new(components: Vec<(f64, DenseState)>) -> Result<Self, StateError> {
        let Some(first) = components.first() else {
            return Err(StateError::EmptyMixture);
        };
        let n_qubits = first.1.n_qubits;
        if components.iter().any(|(_, s)| s.n_qubits != n_qubits) {
            return Err(StateError::MixedWidths);
        }
        let sum: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(StateError::BadWeights(sum));
        }
        Ok(Self {
            n_qubits,
            components,
        })
    }
}

impl Expectation for DenseMixture {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn expectation(&self, p: &PauliString) -> Result<f64, StateError> {
        let mut acc = 0.0;
        for (w, s) in &self.components {
            acc += w * s.expectation(p)?;
        }
        Ok(acc)
    }
}
