//! Phased Pauli strings in binary symplectic form.
//!
//! A string on `n` qubits is stored as two bit masks plus a global phase
//! `i^k`. Qubit `q` carries `X` when only the x bit is set, `Z` when only the
//! z bit is set and `Y` when both are set, with the convention `Y = iXZ`
//! used everywhere in the crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest register a [`PauliString`] can address.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("qubit count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{0} qubits requested, at most {MAX_QUBITS} supported")]
    TooManyQubits(usize),
    #[error("qubit {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("qubit map has {got} entries, expected {expected}")]
    MapLength { expected: usize, got: usize },
    #[error("qubit map sends two qubits to target {0}")]
    NonInjectiveMap(usize),
    #[error("cannot parse Pauli string {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Global phase `i^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_power(k: u32) -> Self {
        match k % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    /// Exponent `k` with `phase = i^k`.
    pub fn power(self) -> u32 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn is_real(self) -> bool {
        self.power().is_multiple_of(2)
    }

    /// `+1.0` or `-1.0` for real phases, `None` otherwise.
    pub fn sign(self) -> Option<f64> {
        match self {
            Phase::PlusOne => Some(1.0),
            Phase::MinusOne => Some(-1.0),
            _ => None,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Phase::PlusOne => "+",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        }
    }
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Phased Pauli word `i^k · σ_0 ⊗ … ⊗ σ_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
    phase: Phase,
}

fn check_width(n_qubits: usize) -> Result<(), PauliError> {
    if n_qubits > MAX_QUBITS {
        Err(PauliError::TooManyQubits(n_qubits))
    } else {
        Ok(())
    }
}

fn width_mask(n_qubits: usize) -> u64 {
    if n_qubits >= 64 {
        u64::MAX
    } else {
        (1u64 << n_qubits) - 1
    }
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Result<Self, PauliError> {
        check_width(n_qubits)?;
        Ok(Self {
            n_qubits,
            x_mask: 0,
            z_mask: 0,
            phase: Phase::PlusOne,
        })
    }

    /// Builds a string from raw masks; bits above `n_qubits` are rejected.
    pub fn from_masks(
        n_qubits: usize,
        x_mask: u64,
        z_mask: u64,
        phase: Phase,
    ) -> Result<Self, PauliError> {
        check_width(n_qubits)?;
        let outside = (x_mask | z_mask) & !width_mask(n_qubits);
        if outside != 0 {
            return Err(PauliError::QubitOutOfRange {
                qubit: outside.trailing_zeros() as usize,
                n_qubits,
            });
        }
        Ok(Self {
            n_qubits,
            x_mask,
            z_mask,
            phase,
        })
    }

    /// `+σ_0 ⊗ σ_1 ⊗ …` with one letter per qubit.
    pub fn from_letters(letters: &[Letter]) -> Result<Self, PauliError> {
        let mut p = Self::identity(letters.len())?;
        for (q, &l) in letters.iter().enumerate() {
            p.set_letter(q, l);
        }
        Ok(p)
    }

    /// `letter` on qubit `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Result<Self, PauliError> {
        let mut p = Self::identity(n_qubits)?;
        if qubit >= n_qubits {
            return Err(PauliError::QubitOutOfRange { qubit, n_qubits });
        }
        p.set_letter(qubit, letter);
        Ok(p)
    }

    /// Hermitian product of letters on distinct qubits, e.g. `Z₁Z₃`.
    pub fn on_qubits(n_qubits: usize, factors: &[(usize, Letter)]) -> Result<Self, PauliError> {
        let mut p = Self::identity(n_qubits)?;
        let mut seen = 0u64;
        for &(q, l) in factors {
            if q >= n_qubits {
                return Err(PauliError::QubitOutOfRange { qubit: q, n_qubits });
            }
            if seen & (1 << q) != 0 {
                return Err(PauliError::NonInjectiveMap(q));
            }
            seen |= 1 << q;
            p.set_letter(q, l);
        }
        Ok(p)
    }

    fn set_letter(&mut self, q: usize, l: Letter) {
        let (x, z) = l.bits();
        let bit = 1u64 << q;
        self.x_mask = (self.x_mask & !bit) | if x { bit } else { 0 };
        self.z_mask = (self.z_mask & !bit) | if z { bit } else { 0 };
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letter(&self, qubit: usize) -> Letter {
        let bit = 1u64 << qubit;
        Letter::from_bits(self.x_mask & bit != 0, self.z_mask & bit != 0)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// True when both masks are empty (the phase may still be non-trivial).
    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x_mask | self.z_mask).count_ones()
    }

    /// Same masks, phase replaced.
    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn negated(self) -> Self {
        let k = self.phase.power() + 2;
        self.with_phase(Phase::from_power(k))
    }

    /// Same masks with phase `+1`.
    pub fn unsigned(self) -> Self {
        self.with_phase(Phase::PlusOne)
    }

    fn ensure_same_width(&self, other: &Self) -> Result<(), PauliError> {
        if self.n_qubits != other.n_qubits {
            Err(PauliError::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Operator product `self · other` with exact phase.
    pub fn multiply(&self, other: &Self) -> Result<Self, PauliError> {
        self.ensure_same_width(other)?;
        Ok(self.mul_unchecked(other))
    }

    // σ(x,z) = i^{x·z} X^x Z^z per qubit. Moving Z^{z1} past X^{x2} costs
    // (-1)^{z1·x2}; converting back to σ form removes i^{x3·z3}.
    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let x = self.x_mask ^ other.x_mask;
        let z = self.z_mask ^ other.z_mask;
        let k = self.phase.power()
            + other.phase.power()
            + (self.x_mask & self.z_mask).count_ones()
            + (other.x_mask & other.z_mask).count_ones()
            + 2 * (self.z_mask & other.x_mask).count_ones()
            + 3 * (x & z).count_ones();
        Self {
            n_qubits: self.n_qubits,
            x_mask: x,
            z_mask: z,
            phase: Phase::from_power(k),
        }
    }

    /// True when the symplectic inner product vanishes mod 2.
    pub fn commutes(&self, other: &Self) -> Result<bool, PauliError> {
        self.ensure_same_width(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        let s = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        s.is_multiple_of(2)
    }

    /// Places qubit `i` of `self` on qubit `qubit_map[i]` of a `total`-qubit register.
    pub fn embed(&self, qubit_map: &[usize], total: usize) -> Result<Self, PauliError> {
        check_width(total)?;
        if qubit_map.len() != self.n_qubits {
            return Err(PauliError::MapLength {
                expected: self.n_qubits,
                got: qubit_map.len(),
            });
        }
        let mut seen = 0u64;
        let mut out = Self::identity(total)?.with_phase(self.phase);
        for (src, &dst) in qubit_map.iter().enumerate() {
            if dst >= total {
                return Err(PauliError::QubitOutOfRange {
                    qubit: dst,
                    n_qubits: total,
                });
            }
            if seen & (1 << dst) != 0 {
                return Err(PauliError::NonInjectiveMap(dst));
            }
            seen |= 1 << dst;
            out.set_letter(dst, self.letter(src));
        }
        Ok(out)
    }

    /// Parses `"+X0 Z3 Y5"`-style text for an `n_qubits` register.
    pub fn parse(input: &str, n_qubits: usize) -> Result<Self, PauliError> {
        let err = |reason: &str| PauliError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let trimmed = input.trim();
        let (phase, rest) = if let Some(r) = trimmed.strip_prefix("+i") {
            (Phase::PlusI, r)
        } else if let Some(r) = trimmed.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = trimmed.strip_prefix('+') {
            (Phase::PlusOne, r)
        } else if let Some(r) = trimmed.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else {
            (Phase::PlusOne, trimmed)
        };
        let mut p = Self::identity(n_qubits)?.with_phase(phase);
        let mut seen = 0u64;
        for token in rest.split_whitespace() {
            let mut chars = token.chars();
            let letter = chars
                .next()
                .and_then(Letter::from_char)
                .ok_or_else(|| err("expected one of I, X, Y, Z"))?;
            let digits = chars.as_str();
            if digits.is_empty() {
                if letter == Letter::I {
                    continue;
                }
                return Err(err("missing qubit index"));
            }
            let q: usize = digits.parse().map_err(|_| err("bad qubit index"))?;
            if q >= n_qubits {
                return Err(PauliError::QubitOutOfRange { qubit: q, n_qubits });
            }
            if seen & (1 << q) != 0 {
                return Err(err("qubit listed twice"));
            }
            seen |= 1 << q;
            p.set_letter(q, letter);
        }
        Ok(p)
    }

    /// Renders with 1-based qubit labels (`Z1 Z2` for qubits 0 and 1).
    pub fn one_based(&self) -> OneBased<'_> {
        OneBased(self)
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, offset: usize) -> fmt::Result {
        f.write_str(self.phase.symbol())?;
        if self.is_identity() {
            return f.write_str("I");
        }
        let mut first = true;
        for q in 0..self.n_qubits {
            let l = self.letter(q);
            if l == Letter::I {
                continue;
            }
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}{}", l.as_char(), q + offset)?;
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 0)
    }
}

pub struct OneBased<'a>(&'a PauliString);

impl fmt::Display for OneBased<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.render(f, 1)
    }
}

/// Parses a compact letter word such as `"XZZ"` (qubit count = length).
impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (phase, body) = match s.strip_prefix('-') {
            Some(r) => (Phase::MinusOne, r),
            None => (Phase::PlusOne, s.strip_prefix('+').unwrap_or(s)),
        };
        let letters = body
            .chars()
            .map(|c| {
                Letter::from_char(c).ok_or_else(|| PauliError::Parse {
                    input: s.to_string(),
                    reason: format!("unexpected character {c:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_letters(&letters)?.with_phase(phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn z_times_x_is_i_y() {
        let zx = p("Z").multiply(&p("X")).unwrap();
        assert_eq!(zx, p("Y").with_phase(Phase::PlusI));
        let xz = p("X").multiply(&p("Z")).unwrap();
        assert_eq!(xz, p("Y").with_phase(Phase::MinusI));
    }

    #[test]
    fn ghz_generators_multiply_to_minus_xxx() {
        let prod = p("XZZ").multiply(&p("ZXZ")).unwrap().multiply(&p("ZZX")).unwrap();
        assert_eq!(prod, p("-XXX"));
    }

    #[test]
    fn identity_is_neutral() {
        let q = p("-XYZI");
        let id = PauliString::identity(4).unwrap();
        assert_eq!(q.multiply(&id).unwrap(), q);
        assert_eq!(id.multiply(&q).unwrap(), q);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert_eq!(
            p("XX").multiply(&p("X")),
            Err(PauliError::DimensionMismatch { left: 2, right: 1 })
        );
        assert!(p("XX").commutes(&p("XZZ")).is_err());
    }

    #[test]
    fn commutation_examples() {
        let zz = PauliString::parse("+Z2 Z3", 4).unwrap();
        let xx = PauliString::parse("+X2 X3", 4).unwrap();
        assert!(zz.commutes(&xx).unwrap());
        assert!(!p("Z").commutes(&p("X")).unwrap());
        assert!(p("XYZ").commutes(&p("XYZ")).unwrap());
    }

    #[test]
    fn embed_places_letters() {
        let zz = p("ZZ");
        let e = zz.embed(&[1, 3], 4).unwrap();
        assert_eq!(e.z_mask(), 0b1010);
        assert_eq!(e.x_mask(), 0);
        let xx = p("-XX").embed(&[0, 2], 5).unwrap();
        assert_eq!(xx.to_string(), "-X0 X2");
        assert_eq!(zz.embed(&[0, 1], 2).unwrap(), zz);
    }

    #[test]
    fn embed_rejects_bad_maps() {
        assert_eq!(p("ZZ").embed(&[1, 1], 3), Err(PauliError::NonInjectiveMap(1)));
        assert_eq!(
            p("ZZ").embed(&[0, 3], 3),
            Err(PauliError::QubitOutOfRange { qubit: 3, n_qubits: 3 })
        );
        assert!(matches!(p("ZZ").embed(&[0], 3), Err(PauliError::MapLength { .. })));
    }

    #[test]
    fn text_round_trip() {
        let q = PauliString::parse("+X0 Z3 Y5", 6).unwrap();
        assert_eq!(q.letters(), vec![Letter::X, Letter::I, Letter::I, Letter::Z, Letter::I, Letter::Y]);
        assert_eq!(q.to_string(), "+X0 Z3 Y5");
        assert_eq!(q.one_based().to_string(), "+X1 Z4 Y6");
        let r = PauliString::parse("-iY1", 2).unwrap();
        assert_eq!(r.phase(), Phase::MinusI);
        assert_eq!(PauliString::parse(&r.to_string(), 2).unwrap(), r);
        assert_eq!(PauliString::identity(3).unwrap().to_string(), "+I");
        assert_eq!(PauliString::parse("+I", 3).unwrap(), PauliString::identity(3).unwrap());
    }

    #[test]
    fn parse_errors() {
        assert!(PauliString::parse("+X0 X0", 2).is_err());
        assert!(PauliString::parse("+Q0", 2).is_err());
        assert!(PauliString::parse("+X7", 2).is_err());
        assert!(PauliString::parse("+X", 2).is_err());
    }

    #[test]
    fn width_limit() {
        assert!(PauliString::identity(64).is_ok());
        assert_eq!(PauliString::identity(65), Err(PauliError::TooManyQubits(65)));
        assert!(PauliString::from_masks(2, 0b100, 0, Phase::PlusOne).is_err());
    }
}
