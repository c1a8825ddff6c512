//! A minimal SMT-LIB2 solver for ground quantifier-free formulas over
//! uninterpreted functions and bounded integers — the fragment machine
//! identification encodings emit. It exists so the test suite and
//! quick-start runs work without an external solver installed; any real
//! SMT-LIB2 solver (z3, cvc5, ...) is a drop-in replacement on the other
//! side of the pipe.
//!
//! Supported commands: `set-logic`, `set-option`, `set-info`,
//! `declare-fun`, `declare-const`, `assert`, `check-sat`, `get-value`,
//! `echo`, `exit`. Terms may use `=`, `<`, `<=`, `>`, `>=`, `or`, `and`,
//! `not`, integer and boolean literals, and applications of declared
//! functions.

pub mod engine;
pub mod sexpr;

pub use engine::{run_script, Engine};
