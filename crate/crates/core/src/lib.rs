//! Exact learning of minimal DFAs, Moore machines and Mealy machines from
//! labeled strings or input/output traces.
//!
//! The identification problem "is there a machine with at most n states
//! consistent with this sample?" is encoded as a satisfiability question
//! over uninterpreted functions and linear integer arithmetic, shipped to
//! an external SMT-LIB2 solver, and iterated over n until the first sat
//! answer — at which point every smaller size has been proven impossible,
//! so the decoded machine is minimal.
//!
//! Modules, in pipeline order:
//!
//! * [`samples`] — labeled-string and trace samples, with text formats
//! * [`apt`] — the augmented prefix tree built from a sample
//! * [`encoding`] — sample/tree to ground formula, two encodings and two
//!   axiom styles
//! * [`solver`] — SMT-LIB2 emission, subprocess driving, model decoding
//! * [`search`] — the minimality loop
//! * [`automata`] — machine types, simulation, consistency, equivalence
//! * [`oracle`] — brute-force reference for tiny instances
//! * [`benchgen`] — benchmark machine/sample generators

pub mod automata;
pub mod apt;
pub mod benchgen;
pub mod encoding;
pub mod error;
pub mod oracle;
pub mod samples;
pub mod search;
pub mod solver;

pub use automata::MachineKind;
pub use error::{Error, Result};
