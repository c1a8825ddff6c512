use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller handed in something that violates an operation's
    /// preconditions (unknown symbol, kind mismatch, bad bound, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A sample or machine file did not conform to its text format.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two parts of a sample contradict each other (a string labeled both
    /// accept and reject, or traces assigning different outputs to one
    /// prefix).
    #[error("conflict: {0}")]
    Conflict(String),

    /// The external solver failed to start, died, or answered something
    /// we cannot interpret.
    #[error("solver error: {0}")]
    Solver(String),

    /// Random machine generation gave up.
    #[error("generation error: {0}")]
    Generation(String),

    /// The brute-force oracle ran out of its enumeration budget before it
    /// could give a definitive answer.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    /// The size search hit its `max_n` cap without finding a consistent
    /// machine.
    #[error("bound exceeded: no consistent machine with at most {max_n} states")]
    BoundExceeded { max_n: usize },

    /// The solver answered neither sat nor unsat at some size, so the
    /// minimality chain is broken.
    #[error("unknown verdict at n = {n}: {reason}")]
    UnknownVerdict { n: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
