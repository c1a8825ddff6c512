//! The minimality loop: ask the solver for a consistent machine with at
//! most `n` states for n = 1, 2, ... and stop at the first sat answer.
//! Every smaller size was then proven unsatisfiable, so the decoded
//! machine has minimal size.

use std::path::PathBuf;
use std::time::Instant;

use crate::apt::{build_apt_dfa, build_apt_traces, Apt};
use crate::automata::{is_consistent, Machine};
use crate::encoding::{encode_expressive, encode_natural, encode_transducer, AxiomStyle, Formula};
use crate::error::{Error, Result};
use crate::samples::Sample;
use crate::solver::{check, decode_machine, emit_smtlib, SolverConfig, Verdict};
use crate::MachineKind;

/// Which constraint shape to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingChoice {
    /// Nested transition terms, one assertion per string; DFA samples only.
    Natural,
    /// Prefix-tree constants; all machine kinds.
    Expressive,
}

impl std::fmt::Display for EncodingChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EncodingChoice::Natural => "natural",
            EncodingChoice::Expressive => "expressive",
        })
    }
}

/// Where to dump the SMT-LIB2 script tried at each size.
#[derive(Debug, Clone)]
pub struct EmitSmt {
    pub dir: PathBuf,
    pub basename: String,
}

#[derive(Debug, Clone)]
pub struct LearnOptions {
    pub kind: MachineKind,
    pub encoding: EncodingChoice,
    pub style: AxiomStyle,
    pub start_n: usize,
    pub max_n: Option<usize>,
    pub solver: SolverConfig,
    pub emit_smt: Option<EmitSmt>,
}

impl LearnOptions {
    pub fn new(kind: MachineKind, solver: SolverConfig) -> Self {
        LearnOptions {
            kind,
            encoding: EncodingChoice::Expressive,
            style: AxiomStyle::LinearInequality,
            start_n: 1,
            max_n: None,
            solver,
            emit_smt: None,
        }
    }
}

/// One row of the per-size log.
#[derive(Debug, Clone)]
pub struct SizeRecord {
    pub n: usize,
    pub verdict: String,
    pub time_ms: u128,
    pub assertions: usize,
}

/// Size search result: the machine, its (minimal) size, and the per-size
/// log. Every record below `minimal_n` is unsat; the record at
/// `minimal_n` is sat.
#[derive(Debug, Clone)]
pub struct LearnResult {
    pub machine: Machine,
    pub minimal_n: usize,
    pub stats: Vec<SizeRecord>,
}

/// A failed search still carries the per-size log it accumulated.
#[derive(Debug)]
pub struct LearnFailure {
    pub error: Error,
    pub stats: Vec<SizeRecord>,
}

impl std::fmt::Display for LearnFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

/// Outcome of a single fixed-size query.
#[derive(Debug)]
pub struct SizeOutcome {
    pub n: usize,
    pub verdict: SizeVerdict,
    pub machine: Option<Machine>,
    pub time_ms: u128,
    pub assertions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeVerdict {
    Sat,
    Unsat,
    Unknown(String),
}

impl SizeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeVerdict::Sat => "sat",
            SizeVerdict::Unsat => "unsat",
            SizeVerdict::Unknown(_) => "unknown",
        }
    }
}

fn validate(input: &Sample, opts: &LearnOptions) -> Result<()> {
    if input.kind() != opts.kind {
        return Err(Error::Input(format!(
            "options are for kind {}, sample is {}",
            opts.kind,
            input.kind()
        )));
    }
    if opts.encoding == EncodingChoice::Natural && opts.kind != MachineKind::Dfa {
        return Err(Error::Input(
            "the natural encoding only supports dfa learning".into(),
        ));
    }
    if opts.start_n < 1 {
        return Err(Error::Input("start_n must be at least 1".into()));
    }
    if let Some(max_n) = opts.max_n {
        if max_n < opts.start_n {
            return Err(Error::Input("max_n must be at least start_n".into()));
        }
    }
    Ok(())
}

fn build_tree(input: &Sample, opts: &LearnOptions) -> Result<Option<Apt>> {
    match (input, opts.encoding) {
        (Sample::Dfa(_), EncodingChoice::Natural) => Ok(None),
        (Sample::Dfa(s), EncodingChoice::Expressive) => Ok(Some(build_apt_dfa(s))),
        (Sample::Traces(t), _) => Ok(Some(build_apt_traces(t)?)),
    }
}

fn encode(input: &Sample, tree: Option<&Apt>, n: usize, opts: &LearnOptions) -> Result<Formula> {
    match (input, tree) {
        (Sample::Dfa(s), None) => encode_natural(s, n, opts.style),
        (Sample::Dfa(_), Some(apt)) => encode_expressive(apt, n, opts.style),
        (Sample::Traces(_), Some(apt)) => encode_transducer(apt, n, opts.style),
        (Sample::Traces(_), None) => unreachable!("trace learning always builds a tree"),
    }
}

fn run_size(input: &Sample, tree: Option<&Apt>, n: usize, opts: &LearnOptions) -> Result<SizeOutcome> {
    let formula = encode(input, tree, n, opts)?;
    if let Some(emit) = &opts.emit_smt {
        std::fs::create_dir_all(&emit.dir)?;
        let path = emit.dir.join(format!("{}-n{}.smt2", emit.basename, n));
        std::fs::write(path, emit_smtlib(&formula))?;
    }
    let assertions = formula.stats(n).assertion_count;
    let started = Instant::now();
    let verdict = check(&formula, &opts.solver)?;
    let time_ms = started.elapsed().as_millis();
    match verdict {
        Verdict::Unsat => Ok(SizeOutcome {
            n,
            verdict: SizeVerdict::Unsat,
            machine: None,
            time_ms,
            assertions,
        }),
        Verdict::Unknown(reason) => Ok(SizeOutcome {
            n,
            verdict: SizeVerdict::Unknown(reason.to_string()),
            machine: None,
            time_ms,
            assertions,
        }),
        Verdict::Sat(mut model) => {
            let machine = decode_machine(
                &mut model,
                opts.kind,
                n,
                input.input_alphabet(),
                match input {
                    Sample::Dfa(_) => None,
                    Sample::Traces(t) => Some(t.output_alphabet()),
                },
            )?;
            drop(model);
            // a model that does not reproduce the sample means the solver
            // (or this pipeline) is broken; never return it
            if !is_consistent(&machine, input)?.is_ok() {
                return Err(Error::Solver(format!(
                    "decoded machine at n = {n} is not consistent with the sample"
                )));
            }
            Ok(SizeOutcome {
                n,
                verdict: SizeVerdict::Sat,
                machine: Some(machine),
                time_ms,
                assertions,
            })
        }
    }
}

/// Asks once: is there a consistent machine with at most `n` states? Sat
/// answers come with the decoded machine.
pub fn learn_at_size(input: &Sample, n: usize, opts: &LearnOptions) -> Result<SizeOutcome> {
    validate(input, opts)?;
    if n < 1 {
        return Err(Error::Input("state bound n must be at least 1".into()));
    }
    let tree = build_tree(input, opts)?;
    run_size(input, tree.as_ref(), n, opts)
}

/// Runs the size search from `start_n` upward until the first sat answer.
/// An unknown verdict aborts the search: skipping a size would forfeit
/// the minimality proof.
pub fn learn_minimal(input: &Sample, opts: &LearnOptions) -> std::result::Result<LearnResult, LearnFailure> {
    let fail = |error: Error, stats: Vec<SizeRecord>| LearnFailure { error, stats };

    if let Err(e) = validate(input, opts) {
        return Err(fail(e, Vec::new()));
    }
    let tree = match build_tree(input, opts) {
        Ok(t) => t,
        Err(e) => return Err(fail(e, Vec::new())),
    };

    let mut stats = Vec::new();
    let mut n = opts.start_n;
    loop {
        if let Some(max_n) = opts.max_n {
            if n > max_n {
                return Err(fail(Error::BoundExceeded { max_n }, stats));
            }
        }
        let outcome = match run_size(input, tree.as_ref(), n, opts) {
            Ok(o) => o,
            Err(e) => return Err(fail(e, stats)),
        };
        stats.push(SizeRecord {
            n,
            verdict: outcome.verdict.as_str().to_string(),
            time_ms: outcome.time_ms,
            assertions: outcome.assertions,
        });
        match outcome.verdict {
            SizeVerdict::Sat => {
                return Ok(LearnResult {
                    machine: outcome.machine.expect("sat outcomes carry a machine"),
                    minimal_n: n,
                    stats,
                });
            }
            SizeVerdict::Unsat => {
                n += 1;
            }
            SizeVerdict::Unknown(reason) => {
                return Err(fail(Error::UnknownVerdict { n, reason }, stats));
            }
        }
    }
}

/// The per-size log as CSV.
pub fn stats_csv(stats: &[SizeRecord]) -> String {
    let mut out = String::from("n,verdict,time_ms,assertions\n");
    for r in stats {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n, r.verdict, r.time_ms, r.assertions
        ));
    }
    out
}
