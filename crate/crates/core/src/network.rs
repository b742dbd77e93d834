//! Network topologies: which source emits which qubits to which party.
//!
//! Qubits are numbered `0..n_qubits`. Reports print them 1-based.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    BellPair,
    Ghz3,
}

impl SourceKind {
    pub fn arity(self) -> usize {
        match self {
            SourceKind::BellPair => 2,
            SourceKind::Ghz3 => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub id: String,
    pub kind: SourceKind,
    pub qubits: Vec<usize>,
    /// Receiving party id, one per entry of `qubits`.
    pub recipients: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Party {
    pub id: String,
    pub qubits: Vec<usize>,
}

/// Alice-like parties hold one qubit; Bob-like parties measure jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartyRole {
    SingleQubit,
    Joint,
}

impl Party {
    pub fn role(&self) -> PartyRole {
        if self.qubits.len() == 1 {
            PartyRole::SingleQubit
        } else {
            PartyRole::Joint
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub n_qubits: usize,
    pub sources: Vec<SourceSpec>,
    pub parties: Vec<Party>,
}

/// First invariant violation found by [`NetworkTopology::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    QubitOutOfRange { qubit: usize },
    OrphanQubit { qubit: usize },
    UnownedQubit { qubit: usize },
    SharedBySources { qubit: usize },
    OwnedTwice { qubit: usize, parties: (String, String) },
    WrongArity { source: String, expected: usize, got: usize },
    RecipientCount { source: String },
    UnknownParty { party: String },
    DuplicateParty { party: String },
    RecipientMismatch { source: String, qubit: usize, recipient: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::QubitOutOfRange { qubit } => write!(f, "qubit {qubit} is out of range"),
            Diagnostic::OrphanQubit { qubit } => write!(f, "qubit {qubit} is emitted by no source"),
            Diagnostic::UnownedQubit { qubit } => write!(f, "qubit {qubit} is owned by no party"),
            Diagnostic::SharedBySources { qubit } => {
                write!(f, "qubit {qubit} is emitted by more than one source")
            }
            Diagnostic::OwnedTwice { qubit, parties } => {
                write!(f, "qubit {qubit} is owned by both {} and {}", parties.0, parties.1)
            }
            Diagnostic::WrongArity { source, expected, got } => {
                write!(f, "source {source} emits {got} qubits, expected {expected}")
            }
            Diagnostic::RecipientCount { source } => {
                write!(f, "source {source} lists a different number of recipients than qubits")
            }
            Diagnostic::UnknownParty { party } => write!(f, "unknown party {party}"),
            Diagnostic::DuplicateParty { party } => write!(f, "party {party} declared twice"),
            Diagnostic::RecipientMismatch { source, qubit, recipient } => write!(
                f,
                "source {source} sends qubit {qubit} to {recipient}, who does not own it"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("a star network needs K >= 2 sources, got {0}")]
    StarTooSmall(usize),
    #[error("invalid (N, K, m) parameters: {0}")]
    NkmParameters(String),
    #[error("Bob{bob} receives {got} qubit(s); every Bob needs at least 2")]
    LonelyBob { bob: usize, got: usize },
    #[error("source {link} links Bob{bob} to itself")]
    DuplicateRecipient { link: usize, bob: usize },
    #[error("inconsistent topology: {0}")]
    Invalid(String),
}

impl NetworkTopology {
    pub fn validate(&self) -> Result<(), Diagnostic> {
        let n = self.n_qubits;
        let mut source_of = vec![None::<usize>; n];
        for (s, src) in self.sources.iter().enumerate() {
            if src.qubits.len() != src.kind.arity() {
                return Err(Diagnostic::WrongArity {
                    source: src.id.clone(),
                    expected: src.kind.arity(),
                    got: src.qubits.len(),
                });
            }
            if src.recipients.len() != src.qubits.len() {
                return Err(Diagnostic::RecipientCount { source: src.id.clone() });
            }
            for &q in &src.qubits {
                if q >= n {
                    return Err(Diagnostic::QubitOutOfRange { qubit: q });
                }
                if source_of[q].replace(s).is_some() {
                    return Err(Diagnostic::SharedBySources { qubit: q });
                }
            }
        }
        let mut owner = vec![None::<usize>; n];
        for (p, party) in self.parties.iter().enumerate() {
            if self.parties[..p].iter().any(|o| o.id == party.id) {
                return Err(Diagnostic::DuplicateParty { party: party.id.clone() });
            }
            for &q in &party.qubits {
                if q >= n {
                    return Err(Diagnostic::QubitOutOfRange { qubit: q });
                }
                if let Some(prev) = owner[q].replace(p) {
                    return Err(Diagnostic::OwnedTwice {
                        qubit: q,
                        parties: (self.parties[prev].id.clone(), party.id.clone()),
                    });
                }
            }
        }
        for q in 0..n {
            if source_of[q].is_none() {
                return Err(Diagnostic::OrphanQubit { qubit: q });
            }
            if owner[q].is_none() {
                return Err(Diagnostic::UnownedQubit { qubit: q });
            }
        }
        for src in &self.sources {
            for (&q, r) in src.qubits.iter().zip(&src.recipients) {
                let Some(p) = self.party_index(r) else {
                    return Err(Diagnostic::UnknownParty { party: r.clone() });
                };
                if owner[q] != Some(p) {
                    return Err(Diagnostic::RecipientMismatch {
                        source: src.id.clone(),
                        qubit: q,
                        recipient: r.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn party_index(&self, id: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.id == id)
    }

    pub fn owner_of(&self, qubit: usize) -> Option<usize> {
        self.parties.iter().position(|p| p.qubits.contains(&qubit))
    }

    pub fn source_of(&self, qubit: usize) -> Option<usize> {
        self.sources.iter().position(|s| s.qubits.contains(&qubit))
    }

    /// Builds the party list from source recipients, in first-seen order
    /// unless `order` names the parties explicitly.
    fn from_sources(n_qubits: usize, sources: Vec<SourceSpec>, order: &[String]) -> Self {
        let mut parties: Vec<Party> = order
            .iter()
            .map(|id| Party {
                id: id.clone(),
                qubits: Vec::new(),
            })
            .collect();
        for src in &sources {
            for (&q, r) in src.qubits.iter().zip(&src.recipients) {
                match parties.iter_mut().find(|p| &p.id == r) {
                    Some(p) => p.qubits.push(q),
                    None => parties.push(Party {
                        id: r.clone(),
                        qubits: vec![q],
                    }),
                }
            }
        }
        for p in &mut parties {
            p.qubits.sort_unstable();
        }
        Self {
            n_qubits,
            sources,
            parties,
        }
    }
}

fn bell(id: impl Into<String>, qubits: [usize; 2], to: [&str; 2]) -> SourceSpec {
    SourceSpec {
        id: id.into(),
        kind: SourceKind::BellPair,
        qubits: qubits.to_vec(),
        recipients: to.iter().map(|s| s.to_string()).collect(),
    }
}

fn ghz(id: impl Into<String>, qubits: [usize; 3], to: [&str; 3]) -> SourceSpec {
    SourceSpec {
        id: id.into(),
        kind: SourceKind::Ghz3,
        qubits: qubits.to_vec(),
        recipients: to.iter().map(|s| s.to_string()).collect(),
    }
}

fn names(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

/// One Bell pair shared by Alice{0} and Bob{1}.
pub fn single_pair() -> NetworkTopology {
    NetworkTopology::from_sources(
        2,
        vec![bell("e1", [0, 1], ["Alice", "Bob"])],
        &names(&["Alice", "Bob"]),
    )
}

/// Alice{0} – Bob{1,2} – Charlie{3}, one Bell pair per link.
pub fn two_source() -> NetworkTopology {
    NetworkTopology::from_sources(
        4,
        vec![bell("e1", [0, 1], ["Alice", "Bob"]), bell("e2", [2, 3], ["Bob", "Charlie"])],
        &names(&["Alice", "Bob", "Charlie"]),
    )
}

/// `K`-source star: source `i` sends qubit `i` to Bob and qubit `K + i` to Alice`i+1`.
pub fn star(k: usize) -> Result<NetworkTopology, NetworkError> {
    if k < 2 {
        return Err(NetworkError::StarTooSmall(k));
    }
    let alices: Vec<String> = (1..=k).map(|i| format!("Alice{i}")).collect();
    let sources = (0..k)
        .map(|i| bell(format!("e{}", i + 1), [i, k + i], ["Bob", &alices[i]]))
        .collect();
    let mut order = alices;
    order.push("Bob".into());
    Ok(NetworkTopology::from_sources(2 * k, sources, &order))
}

/// Source linking two Bobs in an (N, K, m) network; numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterBobLink {
    pub source: usize,
    pub bobs: (usize, usize),
}

/// Parameters of an (N, K, m) network. Sources `1..=K` pair Alice`i` with a
/// Bob (`Bob i` unless `alice_bobs` says otherwise); sources `K+1..=N` are
/// listed in `links`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NkmSpec {
    pub n_sources: usize,
    pub n_alices: usize,
    pub n_bobs: usize,
    #[serde(default)]
    pub links: Vec<InterBobLink>,
    #[serde(default)]
    pub alice_bobs: Option<Vec<usize>>,
}

impl NkmSpec {
    pub fn new(n_sources: usize, n_alices: usize, n_bobs: usize, links: Vec<InterBobLink>) -> Self {
        Self {
            n_sources,
            n_alices,
            n_bobs,
            links,
            alice_bobs: None,
        }
    }

    /// Every Alice source routed to a single Bob: the star network in
    /// (N, K, m) qubit numbering.
    pub fn collapsed_star(k: usize) -> Self {
        Self {
            n_sources: k,
            n_alices: k,
            n_bobs: 1,
            links: Vec::new(),
            alice_bobs: Some(vec![1; k]),
        }
    }
}

/// (N, K, m) network. Source `i` emits qubits `2(i-1)` and `2(i-1)+1`.
pub fn nkm(spec: &NkmSpec) -> Result<NetworkTopology, NetworkError> {
    let NkmSpec {
        n_sources: n,
        n_alices: k,
        n_bobs: m,
        ..
    } = *spec;
    if k < 1 || m < 1 || n < k {
        return Err(NetworkError::NkmParameters(format!(
            "need N >= K >= 1 and m >= 1, got N={n}, K={k}, m={m}"
        )));
    }
    let alice_bobs = spec.alice_bobs.clone().unwrap_or_else(|| (1..=k).collect());
    if alice_bobs.len() != k {
        return Err(NetworkError::NkmParameters("alice_bobs needs K entries".into()));
    }
    if let Some(&b) = alice_bobs.iter().find(|&&b| b == 0 || b > m) {
        return Err(NetworkError::NkmParameters(format!("Bob{b} does not exist")));
    }
    let mut links = spec.links.clone();
    links.sort_by_key(|l| l.source);
    let expected: Vec<usize> = (k + 1..=n).collect();
    let got: Vec<usize> = links.iter().map(|l| l.source).collect();
    if expected != got {
        return Err(NetworkError::NkmParameters(format!(
            "wiring must list sources {expected:?} once each, got {got:?}"
        )));
    }
    let bob = |j: usize| format!("Bob{j}");
    let mut sources = Vec::with_capacity(n);
    for (i, &b) in alice_bobs.iter().enumerate() {
        let alice = format!("Alice{}", i + 1);
        sources.push(bell(format!("e{}", i + 1), [2 * i, 2 * i + 1], [&alice, &bob(b)]));
    }
    for link in &links {
        let (a, b) = link.bobs;
        if a == b {
            return Err(NetworkError::DuplicateRecipient { link: link.source, bob: a });
        }
        if a == 0 || b == 0 || a > m || b > m {
            return Err(NetworkError::NkmParameters(format!(
                "source {} names a Bob outside 1..={m}",
                link.source
            )));
        }
        let i = link.source - 1;
        sources.push(bell(format!("e{}", link.source), [2 * i, 2 * i + 1], [&bob(a), &bob(b)]));
    }
    let mut order: Vec<String> = (1..=k).map(|i| format!("Alice{i}")).collect();
    order.extend((1..=m).map(bob));
    let topo = NetworkTopology::from_sources(2 * n, sources, &order);
    for j in 1..=m {
        let got = topo.parties[k + j - 1].qubits.len();
        if got < 2 {
            return Err(NetworkError::LonelyBob { bob: j, got });
        }
    }
    topo.validate().map_err(|d| NetworkError::Invalid(d.to_string()))?;
    Ok(topo)
}

/// Bell pair Alice–Bob plus a GHZ source sending two qubits to Bob and one to Charlie.
pub fn ghz_case_a() -> NetworkTopology {
    NetworkTopology::from_sources(
        5,
        vec![
            bell("e1", [0, 1], ["Alice", "Bob"]),
            ghz("e2", [2, 3, 4], ["Bob", "Bob", "Charlie"]),
        ],
        &names(&["Alice", "Bob", "Charlie"]),
    )
}

/// Bell pair Alice–Bob plus a GHZ source shared by Bob, Charlie1 and Charlie2.
pub fn ghz_case_b() -> NetworkTopology {
    NetworkTopology::from_sources(
        5,
        vec![
            bell("e1", [0, 1], ["Alice", "Bob"]),
            ghz("e2", [2, 3, 4], ["Bob", "Charlie1", "Charlie2"]),
        ],
        &names(&["Alice", "Bob", "Charlie1", "Charlie2"]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubits_of<'a>(t: &'a NetworkTopology, id: &str) -> &'a [usize] {
        &t.parties[t.party_index(id).unwrap()].qubits
    }

    #[test]
    fn two_source_layout() {
        let t = two_source();
        assert_eq!(t.validate(), Ok(()));
        assert_eq!(t.n_qubits, 4);
        assert_eq!(qubits_of(&t, "Bob"), &[1, 2]);
        let bob = qubits_of(&t, "Bob");
        assert_ne!(t.source_of(bob[0]), t.source_of(bob[1]));
        assert_eq!(t.parties[1].role(), PartyRole::Joint);
        assert_eq!(t.parties[0].role(), PartyRole::SingleQubit);
    }

    #[test]
    fn star_layouts() {
        let t = star(3).unwrap();
        assert_eq!(t.validate(), Ok(()));
        assert_eq!(qubits_of(&t, "Bob"), &[0, 1, 2]);
        for i in 1..=3 {
            assert_eq!(qubits_of(&t, &format!("Alice{i}")), &[3 + i - 1]);
        }
        assert_eq!(star(5).unwrap().validate(), Ok(()));
        assert_eq!(star(5).unwrap().n_qubits, 10);
        assert_eq!(star(1), Err(NetworkError::StarTooSmall(1)));
    }

    #[test]
    fn star2_matches_two_source_shape() {
        let s = star(2).unwrap();
        let t = two_source();
        let mut a: Vec<usize> = s.parties.iter().map(|p| p.qubits.len()).collect();
        let mut b: Vec<usize> = t.parties.iter().map(|p| p.qubits.len()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(s.sources.len(), t.sources.len());
    }

    #[test]
    fn nkm_example() {
        let spec = NkmSpec::new(3, 2, 2, vec![InterBobLink { source: 3, bobs: (1, 2) }]);
        let t = nkm(&spec).unwrap();
        assert_eq!(t.n_qubits, 6);
        assert_eq!(t.validate(), Ok(()));
        assert_eq!(qubits_of(&t, "Bob1"), &[1, 4]);
        assert_eq!(qubits_of(&t, "Bob2"), &[3, 5]);
    }

    #[test]
    fn nkm_errors() {
        // Bob2 only receives the Alice2 qubit
        let spec = NkmSpec::new(3, 2, 3, vec![InterBobLink { source: 3, bobs: (1, 3) }]);
        assert!(matches!(nkm(&spec), Err(NetworkError::LonelyBob { bob: 2, got: 1 })));
        let spec = NkmSpec::new(3, 2, 2, vec![InterBobLink { source: 3, bobs: (2, 2) }]);
        assert!(matches!(nkm(&spec), Err(NetworkError::DuplicateRecipient { .. })));
        let spec = NkmSpec::new(3, 2, 2, vec![]);
        assert!(matches!(nkm(&spec), Err(NetworkError::NkmParameters(_))));
        let spec = NkmSpec::new(2, 2, 2, vec![]);
        assert!(matches!(nkm(&spec), Err(NetworkError::LonelyBob { .. })));
    }

    #[test]
    fn nkm_collapse_is_a_star() {
        for k in 2..=4 {
            let t = nkm(&NkmSpec::collapsed_star(k)).unwrap();
            assert_eq!(t.n_qubits, 2 * k);
            assert_eq!(t.parties.len(), k + 1);
            assert_eq!(t.parties[k].qubits.len(), k);
        }
    }

    #[test]
    fn ghz_cases() {
        let a = ghz_case_a();
        assert_eq!(a.validate(), Ok(()));
        assert_eq!(qubits_of(&a, "Bob"), &[1, 2, 3]);
        let b = ghz_case_b();
        assert_eq!(b.validate(), Ok(()));
        let owned: Vec<_> = b.parties.iter().map(|p| (p.id.as_str(), p.qubits.clone())).collect();
        assert_eq!(
            owned,
            vec![
                ("Alice", vec![0]),
                ("Bob", vec![1, 2]),
                ("Charlie1", vec![3]),
                ("Charlie2", vec![4])
            ]
        );
        assert_eq!(a.n_qubits, 5);
    }

    #[test]
    fn validate_diagnostics() {
        let mut t = star(3).unwrap();
        t.parties[0].qubits.clear();
        assert_eq!(t.validate(), Err(Diagnostic::UnownedQubit { qubit: 3 }));

        let mut t = star(3).unwrap();
        t.parties[1].qubits.push(3);
        assert!(matches!(t.validate(), Err(Diagnostic::OwnedTwice { qubit: 3, .. })));

        let mut t = two_source();
        t.n_qubits = 5;
        t.parties[0].qubits.push(4);
        assert_eq!(t.validate(), Err(Diagnostic::OrphanQubit { qubit: 4 }));

        let mut t = two_source();
        t.sources[1].kind = SourceKind::Ghz3;
        assert!(matches!(t.validate(), Err(Diagnostic::WrongArity { .. })));
    }
}
