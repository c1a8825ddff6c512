//! External solver integration: formulas are serialized to SMT-LIB2 text
//! and piped to a child process; models are read back with per-term
//! `get-value` queries over the finite decode grid, which keeps the
//! protocol independent of any solver's `get-model` syntax.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use crate::automata::{Alphabet, Dfa, Machine, MealyMachine, MooreMachine};
use crate::encoding::{Declaration, Formula, Sort, Term, DELTA, OUT};
use crate::error::{Error, Result};
use crate::MachineKind;

/// How to reach the solver: an executable plus arguments that speaks
/// SMT-LIB2 on standard input/output, and a per-`check` wall-clock
/// timeout.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
    pub logic_override: Option<String>,
}

impl SolverConfig {
    pub fn new(command: Vec<String>) -> Self {
        SolverConfig {
            command,
            timeout: Duration::from_secs(600),
            logic_override: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Splits a shell-ish command string on whitespace. No quoting; solver
    /// invocations like `z3 -in` do not need any.
    pub fn from_command_line(line: &str) -> Result<Self> {
        let parts: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(Error::Input("solver command is empty".into()));
        }
        Ok(SolverConfig::new(parts))
    }
}

/// Why a check came back undecided.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    Solver(String),
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnknownReason::Timeout => f.write_str("timeout"),
            UnknownReason::Solver(s) => f.write_str(s),
        }
    }
}

/// Outcome of a satisfiability check. `Sat` keeps the solver process
/// alive behind a [`Model`] so ground terms can be evaluated.
pub enum Verdict {
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

fn sort_name(sort: Sort) -> &'static str {
    match sort {
        Sort::Int => "Int",
        Sort::Bool => "Bool",
    }
}

fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Int(v) if *v < 0 => out.push_str(&format!("(- {})", -v)),
        Term::Int(v) => out.push_str(&v.to_string()),
        Term::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Term::App(name, args) if args.is_empty() => out.push_str(name),
        Term::App(name, args) => {
            out.push('(');
            out.push_str(name);
            for a in args {
                out.push(' ');
                write_term(out, a);
            }
            out.push(')');
        }
        Term::Eq(a, b) => write_binary(out, "=", a, b),
        Term::Lt(a, b) => write_binary(out, "<", a, b),
        Term::Ge(a, b) => write_binary(out, ">=", a, b),
        Term::Or(ts) => write_nary(out, "or", ts),
        Term::And(ts) => write_nary(out, "and", ts),
        Term::Not(t) => {
            out.push_str("(not ");
            write_term(out, t);
            out.push(')');
        }
    }
}

fn write_binary(out: &mut String, op: &str, a: &Term, b: &Term) {
    out.push('(');
    out.push_str(op);
    out.push(' ');
    write_term(out, a);
    out.push(' ');
    write_term(out, b);
    out.push(')');
}

fn write_nary(out: &mut String, op: &str, ts: &[Term]) {
    out.push('(');
    out.push_str(op);
    for t in ts {
        out.push(' ');
        write_term(out, t);
    }
    out.push(')');
}

fn term_text(term: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, term);
    s
}

fn emit_with_logic(formula: &Formula, logic: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("(set-logic {logic})\n"));
    for Declaration { name, args, ret } in &formula.declarations {
        let args = args
            .iter()
            .map(|s| sort_name(*s))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("(declare-fun {name} ({args}) {})\n", sort_name(*ret)));
    }
    for a in &formula.assertions {
        out.push_str(&format!("(assert {})\n", term_text(a)));
    }
    out.push_str("(check-sat)\n");
    out
}

/// Serializes a formula to a deterministic SMT-LIB2 script: set-logic,
/// declarations in order, assertions in order, check-sat. Identical
/// formulas produce bit-identical scripts.
pub fn emit_smtlib(formula: &Formula) -> String {
    emit_with_logic(formula, &formula.logic_hint)
}

/// A value read back from the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelValue {
    Int(i64),
    Bool(bool),
}

/// A live solver session in the sat state. Dropping it tells the solver to
/// exit and reaps the process.
pub struct Model {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl Model {
    /// Evaluates one ground term via `get-value`.
    pub fn eval(&mut self, term: &Term) -> Result<ModelValue> {
        let query = format!("(get-value ({}))\n", term_text(term));
        self.stdin
            .write_all(query.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Solver(format!("failed to send get-value: {e}")))?;
        let response = self.read_balanced()?;
        parse_get_value(&response)
    }

    pub fn eval_int(&mut self, term: &Term) -> Result<i64> {
        match self.eval(term)? {
            ModelValue::Int(v) => Ok(v),
            ModelValue::Bool(b) => Err(Error::Solver(format!(
                "expected an integer value, solver answered {b}"
            ))),
        }
    }

    pub fn eval_bool(&mut self, term: &Term) -> Result<bool> {
        match self.eval(term)? {
            ModelValue::Bool(b) => Ok(b),
            ModelValue::Int(v) => Err(Error::Solver(format!(
                "expected a boolean value, solver answered {v}"
            ))),
        }
    }

    /// Accumulates response lines until parentheses balance.
    fn read_balanced(&mut self) -> Result<String> {
        let deadline = Instant::now() + self.timeout;
        let mut text = String::new();
        loop {
            let remaining = deadline
                .checked_duration_since(Instant::now())
                .unwrap_or(Duration::ZERO);
            match self.lines.recv_timeout(remaining) {
                Ok(Ok(line)) => {
                    text.push_str(&line);
                    text.push('\n');
                    let depth: i64 = text
                        .chars()
                        .map(|c| match c {
                            '(' => 1,
                            ')' => -1,
                            _ => 0,
                        })
                        .sum();
                    if depth <= 0 && !text.trim().is_empty() {
                        return Ok(text);
                    }
                }
                Ok(Err(e)) => return Err(Error::Solver(format!("solver read failed: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    let _ = self.child.kill();
                    return Err(Error::Solver("timeout during model query".into()));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Solver(
                        "solver closed its output during a model query".into(),
                    ));
                }
            }
        }
    }
}

impl Drop for Model {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

enum Resp {
    Atom(String),
    List(Vec<Resp>),
}

fn parse_sexp(text: &str) -> Option<Resp> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }

    let mut stack: Vec<Vec<Resp>> = Vec::new();
    let mut top: Vec<Resp> = Vec::new();
    for tok in tokens {
        match tok.as_str() {
            "(" => {
                stack.push(std::mem::take(&mut top));
            }
            ")" => {
                let done = Resp::List(std::mem::take(&mut top));
                top = stack.pop()?;
                top.push(done);
            }
            _ => top.push(Resp::Atom(tok)),
        }
    }
    if !stack.is_empty() {
        return None;
    }
    top.into_iter().next()
}

fn value_of(node: &Resp) -> Option<ModelValue> {
    match node {
        Resp::Atom(a) if a == "true" => Some(ModelValue::Bool(true)),
        Resp::Atom(a) if a == "false" => Some(ModelValue::Bool(false)),
        Resp::Atom(a) => a.parse::<i64>().ok().map(ModelValue::Int),
        // (- 3): negative integer literal
        Resp::List(items) => match items.as_slice() {
            [Resp::Atom(minus), Resp::Atom(v)] if minus == "-" => {
                v.parse::<i64>().ok().map(|v| ModelValue::Int(-v))
            }
            _ => None,
        },
    }
}

/// Reads the value out of a `get-value` response of the shape
/// `((<term> <value>))`.
fn parse_get_value(text: &str) -> Result<ModelValue> {
    let bad = || Error::Solver(format!("unparseable get-value response: {}", text.trim()));
    let root = parse_sexp(text).ok_or_else(bad)?;
    let Resp::List(pairs) = root else {
        return Err(bad());
    };
    let Some(Resp::List(pair)) = pairs.first() else {
        return Err(bad());
    };
    let value = pair.last().ok_or_else(bad)?;
    value_of(value).ok_or_else(bad)
}

/// Ships the formula to the solver and reads the verdict. On `sat` the
/// returned [`Model`] holds the session open for `get-value` queries; on
/// timeout the process is killed and the verdict is
/// `Unknown(Timeout)`.
pub fn check(formula: &Formula, config: &SolverConfig) -> Result<Verdict> {
    if config.command.is_empty() {
        return Err(Error::Solver("no solver command configured".into()));
    }
    if config.timeout.is_zero() {
        return Err(Error::Input("solver timeout must be positive".into()));
    }
    let logic = config
        .logic_override
        .as_deref()
        .unwrap_or(&formula.logic_hint);
    let script = format!(
        "(set-option :produce-models true)\n{}",
        emit_with_logic(formula, logic)
    );

    let mut child = Command::new(&config.command[0])
        .args(&config.command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            Error::Solver(format!(
                "failed to launch solver {:?}: {e}",
                config.command[0]
            ))
        })?;

    let mut stdin = child.stdin.take().expect("stdin was piped");
    let stdout = child.stdout.take().expect("stdout was piped");
    let stderr = child.stderr.take().expect("stderr was piped");

    let (tx, lines) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let stderr_handle = std::thread::spawn(move || {
        let mut text = String::new();
        for line in BufReader::new(stderr).lines().map_while(|l| l.ok()) {
            text.push_str(&line);
            text.push('\n');
            if text.len() > 4096 {
                break;
            }
        }
        text
    });

    if let Err(e) = stdin.write_all(script.as_bytes()).and_then(|_| stdin.flush()) {
        let _ = child.kill();
        let _ = child.wait();
        let transcript = stderr_handle.join().unwrap_or_default();
        return Err(Error::Solver(format!(
            "failed to send the problem to the solver: {e}{}",
            excerpt(&transcript)
        )));
    }

    let deadline = Instant::now() + config.timeout;
    loop {
        let remaining = deadline
            .checked_duration_since(Instant::now())
            .unwrap_or(Duration::ZERO);
        match lines.recv_timeout(remaining) {
            Ok(Ok(line)) => {
                let answer = line.trim();
                if answer.is_empty() || answer == "success" {
                    continue;
                }
                return match answer {
                    "sat" => Ok(Verdict::Sat(Model {
                        child,
                        stdin,
                        lines,
                        timeout: config.timeout,
                    })),
                    "unsat" => {
                        let _ = stdin.write_all(b"(exit)\n");
                        let _ = stdin.flush();
                        let _ = child.kill();
                        let _ = child.wait();
                        Ok(Verdict::Unsat)
                    }
                    "unknown" => {
                        let _ = child.kill();
                        let _ = child.wait();
                        Ok(Verdict::Unknown(UnknownReason::Solver("unknown".into())))
                    }
                    other => {
                        let _ = child.kill();
                        let _ = child.wait();
                        let transcript = stderr_handle.join().unwrap_or_default();
                        Err(Error::Solver(format!(
                            "unexpected solver answer {other:?}{}",
                            excerpt(&transcript)
                        )))
                    }
                };
            }
            Ok(Err(e)) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::Solver(format!("solver read failed: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(Verdict::Unknown(UnknownReason::Timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                let _ = child.wait();
                let transcript = stderr_handle.join().unwrap_or_default();
                return Err(Error::Solver(format!(
                    "solver exited without answering{}",
                    excerpt(&transcript)
                )));
            }
        }
    }
}

fn excerpt(transcript: &str) -> String {
    let t = transcript.trim();
    if t.is_empty() {
        String::new()
    } else {
        let shortened: String = t.chars().take(500).collect();
        format!("; solver stderr: {shortened}")
    }
}

/// Reads a complete machine off a sat model by evaluating the transition
/// and output functions over the `[0, n) x alphabet` grid. Transition
/// targets outside `[0, n)` (possible where the encoding leaves
/// transitions unconstrained) are remapped to state 0, which never touches
/// a transition exercised by the sample.
pub fn decode_machine(
    model: &mut Model,
    kind: MachineKind,
    n: usize,
    input_alphabet: &Alphabet,
    output_alphabet: Option<&Alphabet>,
) -> Result<Machine> {
    let k = input_alphabet.len();
    let mut delta = Vec::with_capacity(n);
    for state in 0..n {
        let mut row = Vec::with_capacity(k);
        for sym in 0..k {
            let raw = model.eval_int(&Term::app(
                DELTA,
                vec![Term::Int(state as i64), Term::Int(sym as i64)],
            ))?;
            let dst = if raw >= 0 && (raw as usize) < n {
                raw as usize
            } else {
                0
            };
            row.push(dst);
        }
        delta.push(row);
    }
    match kind {
        MachineKind::Dfa => {
            let mut accepting = Vec::new();
            for state in 0..n {
                if model.eval_bool(&Term::app(OUT, vec![Term::Int(state as i64)]))? {
                    accepting.push(state);
                }
            }
            Ok(Machine::Dfa(Dfa::new(
                input_alphabet.clone(),
                delta,
                accepting,
            )?))
        }
        MachineKind::Moore => {
            let out_alpha = output_alphabet
                .ok_or_else(|| Error::Input("moore decoding needs an output alphabet".into()))?;
            let mut outputs = Vec::with_capacity(n);
            for state in 0..n {
                let raw = model.eval_int(&Term::app(OUT, vec![Term::Int(state as i64)]))?;
                if raw < 0 || raw as usize >= out_alpha.len() {
                    return Err(Error::Solver(format!(
                        "model output {raw} for state {state} is outside the output alphabet"
                    )));
                }
                outputs.push(raw as usize);
            }
            Ok(Machine::Moore(MooreMachine::new(
                input_alphabet.clone(),
                out_alpha.clone(),
                delta,
                outputs,
            )?))
        }
        MachineKind::Mealy => {
            let out_alpha = output_alphabet
                .ok_or_else(|| Error::Input("mealy decoding needs an output alphabet".into()))?;
            let mut outputs = Vec::with_capacity(n);
            for state in 0..n {
                let mut row = Vec::with_capacity(k);
                for sym in 0..k {
                    let raw = model.eval_int(&Term::app(
                        OUT,
                        vec![Term::Int(state as i64), Term::Int(sym as i64)],
                    ))?;
                    if raw < 0 || raw as usize >= out_alpha.len() {
                        return Err(Error::Solver(format!(
                            "model output {raw} for ({state}, {sym}) is outside the output alphabet"
                        )));
                    }
                    row.push(raw as usize);
                }
                outputs.push(row);
            }
            Ok(Machine::Mealy(MealyMachine::new(
                input_alphabet.clone(),
                out_alpha.clone(),
                delta,
                outputs,
            )?))
        }
    }
}
