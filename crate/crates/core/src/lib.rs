//! Stabilizer-based workbench for Bell inequalities in quantum networks.
//!
//! The crate builds network topologies, compiles correlator-based Bell
//! inequalities into scaled Pauli strings, bounds them classically by
//! enumerating deterministic strategies, evaluates them exactly on
//! stabilizer states and checks the numbers by sampling measurement rounds.
//!
//! ```
//! use bellnet::{quantum, scenario, states};
//!
//! let chsh = scenario::build_chsh().unwrap();
//! let phi = states::bell_pair(0, 1, 2).unwrap();
//! let angles = scenario::AngleAssignment::balanced(&chsh);
//! let value = quantum::evaluate(&chsh, &phi, &angles).unwrap();
//! assert!((value - 2.0 * 2f64.sqrt()).abs() < 1e-12);
//! ```

pub mod lhv;
pub mod network;
pub mod pauli;
pub mod quantum;
pub mod registry;
pub mod sampler;
pub mod scenario;
pub mod states;

pub use network::NetworkTopology;
pub use pauli::{Letter, PauliString, Phase};
pub use scenario::{AngleAssignment, InequalityExpr};
pub use states::{Expectation, StabilizerGroup, StabilizerMixture};
