//! Machine representations and the operations on them: simulation,
//! consistency against a sample, equivalence via product exploration, and
//! the plain-text machine format.
//!
//! All machines are complete and deterministic. States are dense integers
//! `0..n` with the initial state fixed at `0`; symbols are referred to by
//! their index in an [`Alphabet`]. Machines are immutable once
//! constructed, so they can be shared freely between threads.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::samples::{Sample, TraceSample};

/// An ordered set of distinct symbol names. The position of a name is its
/// index; samples, encodings and transition tables refer to symbols by
/// index only, names exist for parsing and display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Input("alphabet must not be empty".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.contains(char::is_whitespace) || s.starts_with('#') {
                return Err(Error::Input(format!(
                    "invalid symbol name {s:?}: must be non-empty, without whitespace or '#'"
                )));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Input(format!("duplicate symbol {s:?} in alphabet")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// The alphabet `0 1 .. n-1`, the anonymous shape used by sample files.
    pub fn indexed(n: usize) -> Self {
        Alphabet::new((0..n).map(|i| i.to_string())).expect("indexed alphabet is always valid")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Maps symbol names to indices, reporting the offending symbol and its
    /// 1-based position on failure.
    pub fn resolve<S: AsRef<str>>(&self, input: &[S]) -> Result<Vec<usize>> {
        input
            .iter()
            .enumerate()
            .map(|(pos, s)| {
                self.index(s.as_ref()).ok_or_else(|| {
                    Error::Input(format!(
                        "unknown symbol {:?} at position {}",
                        s.as_ref(),
                        pos + 1
                    ))
                })
            })
            .collect()
    }

    /// Renders a sequence of symbol indices as space-joined names.
    pub fn render(&self, word: &[usize]) -> String {
        word.iter()
            .map(|&i| self.symbol(i))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MachineKind {
    Dfa,
    Moore,
    Mealy,
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MachineKind::Dfa => "dfa",
            MachineKind::Moore => "moore",
            MachineKind::Mealy => "mealy",
        })
    }
}

fn check_delta(n: usize, k: usize, delta: &[Vec<usize>]) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::Input("machine must have at least one state".into()));
    }
    if delta.len() != n {
        return Err(Error::Input(format!(
            "transition table has {} rows, expected {n}",
            delta.len()
        )));
    }
    let mut flat = Vec::with_capacity(n * k);
    for (state, row) in delta.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Input(format!(
                "state {state} has {} transitions, expected {k}",
                row.len()
            )));
        }
        for (sym, &dst) in row.iter().enumerate() {
            if dst >= n {
                return Err(Error::Input(format!(
                    "transition ({state}, {sym}) targets state {dst}, out of range [0, {n})"
                )));
            }
            flat.push(dst);
        }
    }
    Ok(flat)
}

/// A complete deterministic finite automaton. The initial state is `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    alphabet: Alphabet,
    n: usize,
    delta: Vec<usize>, // row-major n x |alphabet|
    accepting: Vec<bool>,
}

impl Dfa {
    pub fn new(
        alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        accepting: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let n = delta.len();
        let flat = check_delta(n, alphabet.len(), &delta)?;
        let mut acc = vec![false; n];
        for s in accepting {
            if s >= n {
                return Err(Error::Input(format!(
                    "accepting state {s} out of range [0, {n})"
                )));
            }
            acc[s] = true;
        }
        Ok(Dfa {
            alphabet,
            n,
            delta: flat,
            accepting: acc,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn delta(&self, state: usize, symbol: usize) -> usize {
        self.delta[state * self.alphabet.len() + symbol]
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.n).filter(|&s| self.accepting[s]).collect()
    }

    /// Runs the machine on a word of symbol indices, returning the final
    /// state. Indices must be in range.
    pub fn run(&self, word: &[usize]) -> usize {
        let mut q = 0;
        for &a in word {
            q = self.delta(q, a);
        }
        q
    }

    pub fn accepts_indices(&self, word: &[usize]) -> bool {
        self.accepting[self.run(word)]
    }

    /// Accepts or rejects a sequence of symbol names.
    pub fn accepts<S: AsRef<str>>(&self, input: &[S]) -> Result<bool> {
        Ok(self.accepts_indices(&self.alphabet.resolve(input)?))
    }
}

/// A transducer that emits one output symbol per visited state, including
/// the initial one, so an input of length `l` yields `l + 1` outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MooreMachine {
    alphabet: Alphabet,
    output_alphabet: Alphabet,
    n: usize,
    delta: Vec<usize>,
    outputs: Vec<usize>, // one per state
}

impl MooreMachine {
    pub fn new(
        alphabet: Alphabet,
        output_alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        outputs: Vec<usize>,
    ) -> Result<Self> {
        let n = delta.len();
        let flat = check_delta(n, alphabet.len(), &delta)?;
        if outputs.len() != n {
            return Err(Error::Input(format!(
                "output table has {} entries, expected {n}",
                outputs.len()
            )));
        }
        for (state, &o) in outputs.iter().enumerate() {
            if o >= output_alphabet.len() {
                return Err(Error::Input(format!(
                    "output of state {state} is {o}, out of range [0, {})",
                    output_alphabet.len()
                )));
            }
        }
        Ok(MooreMachine {
            alphabet,
            output_alphabet,
            n,
            delta: flat,
            outputs,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn delta(&self, state: usize, symbol: usize) -> usize {
        self.delta[state * self.alphabet.len() + symbol]
    }

    pub fn output(&self, state: usize) -> usize {
        self.outputs[state]
    }

    pub fn transduce_indices(&self, word: &[usize]) -> Vec<usize> {
        let mut q = 0;
        let mut out = Vec::with_capacity(word.len() + 1);
        out.push(self.outputs[q]);
        for &a in word {
            q = self.delta(q, a);
            out.push(self.outputs[q]);
        }
        out
    }

    pub fn transduce<S: AsRef<str>>(&self, input: &[S]) -> Result<Vec<String>> {
        let word = self.alphabet.resolve(input)?;
        Ok(self
            .transduce_indices(&word)
            .into_iter()
            .map(|o| self.output_alphabet.symbol(o).to_string())
            .collect())
    }
}

/// A transducer that emits one output symbol per transition taken, so an
/// input of length `l` yields `l` outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    alphabet: Alphabet,
    output_alphabet: Alphabet,
    n: usize,
    delta: Vec<usize>,
    outputs: Vec<usize>, // row-major n x |alphabet|
}

impl MealyMachine {
    pub fn new(
        alphabet: Alphabet,
        output_alphabet: Alphabet,
        delta: Vec<Vec<usize>>,
        outputs: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = delta.len();
        let flat = check_delta(n, alphabet.len(), &delta)?;
        if outputs.len() != n {
            return Err(Error::Input(format!(
                "output table has {} rows, expected {n}",
                outputs.len()
            )));
        }
        let mut flat_out = Vec::with_capacity(n * alphabet.len());
        for (state, row) in outputs.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(Error::Input(format!(
                    "state {state} has {} outputs, expected {}",
                    row.len(),
                    alphabet.len()
                )));
            }
            for &o in row {
                if o >= output_alphabet.len() {
                    return Err(Error::Input(format!(
                        "output {o} of state {state} out of range [0, {})",
                        output_alphabet.len()
                    )));
                }
                flat_out.push(o);
            }
        }
        Ok(MealyMachine {
            alphabet,
            output_alphabet,
            n,
            delta: flat,
            outputs: flat_out,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn state_count(&self) -> usize {
        self.n
    }

    pub fn delta(&self, state: usize, symbol: usize) -> usize {
        self.delta[state * self.alphabet.len() + symbol]
    }

    pub fn output(&self, state: usize, symbol: usize) -> usize {
        self.outputs[state * self.alphabet.len() + symbol]
    }

    pub fn transduce_indices(&self, word: &[usize]) -> Vec<usize> {
        let mut q = 0;
        let mut out = Vec::with_capacity(word.len());
        for &a in word {
            out.push(self.output(q, a));
            q = self.delta(q, a);
        }
        out
    }

    pub fn transduce<S: AsRef<str>>(&self, input: &[S]) -> Result<Vec<String>> {
        let word = self.alphabet.resolve(input)?;
        Ok(self
            .transduce_indices(&word)
            .into_iter()
            .map(|o| self.output_alphabet.symbol(o).to_string())
            .collect())
    }
}

/// Any of the three machine kinds, as read from or written to a machine
/// file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Machine {
    Dfa(Dfa),
    Moore(MooreMachine),
    Mealy(MealyMachine),
}

impl Machine {
    pub fn kind(&self) -> MachineKind {
        match self {
            Machine::Dfa(_) => MachineKind::Dfa,
            Machine::Moore(_) => MachineKind::Moore,
            Machine::Mealy(_) => MachineKind::Mealy,
        }
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        match self {
            Machine::Dfa(m) => m.alphabet(),
            Machine::Moore(m) => m.alphabet(),
            Machine::Mealy(m) => m.alphabet(),
        }
    }

    pub fn output_alphabet(&self) -> Option<&Alphabet> {
        match self {
            Machine::Dfa(_) => None,
            Machine::Moore(m) => Some(m.output_alphabet()),
            Machine::Mealy(m) => Some(m.output_alphabet()),
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            Machine::Dfa(m) => m.state_count(),
            Machine::Moore(m) => m.state_count(),
            Machine::Mealy(m) => m.state_count(),
        }
    }

    pub fn as_dfa(&self) -> Option<&Dfa> {
        match self {
            Machine::Dfa(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_moore(&self) -> Option<&MooreMachine> {
        match self {
            Machine::Moore(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_mealy(&self) -> Option<&MealyMachine> {
        match self {
            Machine::Mealy(m) => Some(m),
            _ => None,
        }
    }
}

/// Outcome of checking a machine against a sample: `Ok`, or the first
/// string/trace (in sorted order) on which they disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConsistencyReport {
    Ok,
    DfaFailure {
        string: Vec<usize>,
        expected: bool,
        actual: bool,
    },
    TraceFailure {
        input: Vec<usize>,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
}

impl ConsistencyReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, ConsistencyReport::Ok)
    }
}

/// Checks that a machine reproduces a sample: accepts all of `S+` and
/// rejects all of `S-` for a DFA, or reproduces every trace's outputs
/// exactly for a transducer (the Moore comparison includes the initial
/// output).
pub fn is_consistent(machine: &Machine, sample: &Sample) -> Result<ConsistencyReport> {
    if machine.kind() != sample.kind() {
        return Err(Error::Input(format!(
            "machine kind {} does not match sample kind {}",
            machine.kind(),
            sample.kind()
        )));
    }
    if machine.input_alphabet().len() != sample.input_alphabet().len() {
        return Err(Error::Input(format!(
            "machine input alphabet has {} symbols, sample has {}",
            machine.input_alphabet().len(),
            sample.input_alphabet().len()
        )));
    }
    match (machine, sample) {
        (Machine::Dfa(dfa), Sample::Dfa(s)) => {
            for (string, expected) in s.strings() {
                let actual = dfa.accepts_indices(string);
                if actual != expected {
                    return Ok(ConsistencyReport::DfaFailure {
                        string: string.to_vec(),
                        expected,
                        actual,
                    });
                }
            }
            Ok(ConsistencyReport::Ok)
        }
        (machine, Sample::Traces(s)) => {
            check_output_alphabet(machine, s)?;
            for (input, expected) in s.traces() {
                let actual = match machine {
                    Machine::Moore(m) => m.transduce_indices(input),
                    Machine::Mealy(m) => m.transduce_indices(input),
                    Machine::Dfa(_) => unreachable!("kinds already matched"),
                };
                if actual != *expected {
                    return Ok(ConsistencyReport::TraceFailure {
                        input: input.clone(),
                        expected: expected.clone(),
                        actual,
                    });
                }
            }
            Ok(ConsistencyReport::Ok)
        }
        _ => unreachable!("kinds already matched"),
    }
}

fn check_output_alphabet(machine: &Machine, sample: &TraceSample) -> Result<()> {
    let out = machine
        .output_alphabet()
        .expect("transducer has an output alphabet");
    if out.len() != sample.output_alphabet().len() {
        return Err(Error::Input(format!(
            "machine output alphabet has {} symbols, sample has {}",
            out.len(),
            sample.output_alphabet().len()
        )));
    }
    Ok(())
}

/// Result of an equivalence check. A counterexample is a shortest input
/// sequence (as symbol names of the first machine) on which the two
/// machines disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivOutcome {
    Equivalent,
    Inequivalent { counterexample: Vec<String> },
}

impl EquivOutcome {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivOutcome::Equivalent)
    }
}

/// Decides whether two machines of the same kind agree on every input
/// sequence, by breadth-first search over the reachable product machine.
/// Alphabets are compared positionally: both machines must have input
/// alphabets (and, for transducers, output alphabets) of the same size,
/// and symbol `i` of one is matched with symbol `i` of the other.
pub fn equivalent(a: &Machine, b: &Machine) -> Result<EquivOutcome> {
    if a.kind() != b.kind() {
        return Err(Error::Input(format!(
            "cannot compare a {} machine with a {} machine",
            a.kind(),
            b.kind()
        )));
    }
    if a.input_alphabet().len() != b.input_alphabet().len() {
        return Err(Error::Input(format!(
            "input alphabets differ in size: {} vs {}",
            a.input_alphabet().len(),
            b.input_alphabet().len()
        )));
    }
    if let (Some(oa), Some(ob)) = (a.output_alphabet(), b.output_alphabet()) {
        if oa.len() != ob.len() {
            return Err(Error::Input(format!(
                "output alphabets differ in size: {} vs {}",
                oa.len(),
                ob.len()
            )));
        }
    }

    let k = a.input_alphabet().len();
    let (na, nb) = (a.state_count(), b.state_count());
    let pair = |u: usize, v: usize| u * nb + v;

    // parent[p] = (previous pair, symbol) along a shortest path to p
    let mut seen = vec![false; na * nb];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; na * nb];
    let mut queue = VecDeque::new();

    let rebuild = |parent: &[Option<(usize, usize)>], mut p: usize, extra: Option<usize>| {
        let mut word = Vec::new();
        if let Some(sym) = extra {
            word.push(sym);
        }
        while let Some((prev, sym)) = parent[p] {
            word.push(sym);
            p = prev;
        }
        word.reverse();
        word.iter()
            .map(|&s| a.input_alphabet().symbol(s).to_string())
            .collect::<Vec<_>>()
    };

    let state_mismatch = |u: usize, v: usize| -> bool {
        match (a, b) {
            (Machine::Dfa(ma), Machine::Dfa(mb)) => ma.is_accepting(u) != mb.is_accepting(v),
            (Machine::Moore(ma), Machine::Moore(mb)) => ma.output(u) != mb.output(v),
            _ => false,
        }
    };

    seen[pair(0, 0)] = true;
    if state_mismatch(0, 0) {
        return Ok(EquivOutcome::Inequivalent {
            counterexample: Vec::new(),
        });
    }
    queue.push_back((0usize, 0usize));

    while let Some((u, v)) = queue.pop_front() {
        for sym in 0..k {
            if let (Machine::Mealy(ma), Machine::Mealy(mb)) = (a, b) {
                if ma.output(u, sym) != mb.output(v, sym) {
                    return Ok(EquivOutcome::Inequivalent {
                        counterexample: rebuild(&parent, pair(u, v), Some(sym)),
                    });
                }
            }
            let (du, dv) = match (a, b) {
                (Machine::Dfa(ma), Machine::Dfa(mb)) => (ma.delta(u, sym), mb.delta(v, sym)),
                (Machine::Moore(ma), Machine::Moore(mb)) => (ma.delta(u, sym), mb.delta(v, sym)),
                (Machine::Mealy(ma), Machine::Mealy(mb)) => (ma.delta(u, sym), mb.delta(v, sym)),
                _ => unreachable!("kinds already matched"),
            };
            let p = pair(du, dv);
            if !seen[p] {
                seen[p] = true;
                parent[p] = Some((pair(u, v), sym));
                if state_mismatch(du, dv) {
                    return Ok(EquivOutcome::Inequivalent {
                        counterexample: rebuild(&parent, p, None),
                    });
                }
                queue.push_back((du, dv));
            }
        }
    }
    Ok(EquivOutcome::Equivalent)
}

// ---------------------------------------------------------------------------
// Machine text format
// ---------------------------------------------------------------------------
//
//   kind dfa|moore|mealy
//   inputs <sym> <sym> ...
//   outputs <sym> ...                    (transducers only)
//   states <n>
//   initial 0
//   accepting <i> <i> ...                (dfa only; may be a bare "accepting")
//   output <state> <sym>                 (moore: one line per state)
//   trans <src> <insym> <dst>            (dfa/moore)
//   trans <src> <insym> <dst> <outsym>   (mealy)
//
// '#' starts a comment; blank lines are ignored.

/// Parses the machine text format.
pub fn parse_machine(text: &str) -> Result<Machine> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            (i + 1, body.trim())
        })
        .filter(|(_, body)| !body.is_empty())
        .map(|(no, body)| (no, body.split_whitespace().collect::<Vec<_>>()));

    let parse_err = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };
    let mut expect = |what: &str| -> Result<(usize, Vec<&str>)> {
        lines
            .next()
            .ok_or_else(|| parse_err(0, &format!("unexpected end of file, expected {what}")))
    };

    let (no, kind_line) = expect("kind line")?;
    if kind_line.len() != 2 || kind_line[0] != "kind" {
        return Err(parse_err(no, "expected \"kind dfa|moore|mealy\""));
    }
    let kind = match kind_line[1] {
        "dfa" => MachineKind::Dfa,
        "moore" => MachineKind::Moore,
        "mealy" => MachineKind::Mealy,
        other => return Err(parse_err(no, &format!("unknown machine kind {other:?}"))),
    };

    let (no, inputs_line) = expect("inputs line")?;
    if inputs_line.len() < 2 || inputs_line[0] != "inputs" {
        return Err(parse_err(no, "expected \"inputs <sym> ...\""));
    }
    let alphabet = Alphabet::new(inputs_line[1..].iter().map(|s| s.to_string()))
        .map_err(|e| parse_err(no, &e.to_string()))?;

    let output_alphabet = if kind != MachineKind::Dfa {
        let (no, outputs_line) = expect("outputs line")?;
        if outputs_line.len() < 2 || outputs_line[0] != "outputs" {
            return Err(parse_err(no, "expected \"outputs <sym> ...\""));
        }
        Some(
            Alphabet::new(outputs_line[1..].iter().map(|s| s.to_string()))
                .map_err(|e| parse_err(no, &e.to_string()))?,
        )
    } else {
        None
    };

    let (no, states_line) = expect("states line")?;
    if states_line.len() != 2 || states_line[0] != "states" {
        return Err(parse_err(no, "expected \"states <n>\""));
    }
    let n: usize = states_line[1]
        .parse()
        .map_err(|_| parse_err(no, "state count is not a number"))?;
    if n == 0 {
        return Err(parse_err(no, "machine must have at least one state"));
    }

    let (no, initial_line) = expect("initial line")?;
    if initial_line.len() != 2 || initial_line[0] != "initial" {
        return Err(parse_err(no, "expected \"initial 0\""));
    }
    if initial_line[1] != "0" {
        return Err(parse_err(no, "initial state must be 0"));
    }

    let parse_state = |no: usize, tok: &str| -> Result<usize> {
        let s: usize = tok
            .parse()
            .map_err(|_| parse_err(no, &format!("{tok:?} is not a state index")))?;
        if s >= n {
            return Err(parse_err(no, &format!("state {s} out of range [0, {n})")));
        }
        Ok(s)
    };

    let mut accepting = Vec::new();
    let mut moore_outputs: Vec<Option<usize>> = vec![None; n];
    match kind {
        MachineKind::Dfa => {
            let (no, acc_line) = expect("accepting line")?;
            if acc_line.is_empty() || acc_line[0] != "accepting" {
                return Err(parse_err(no, "expected \"accepting <i> ...\""));
            }
            for tok in &acc_line[1..] {
                accepting.push(parse_state(no, tok)?);
            }
        }
        MachineKind::Moore => {
            let out = output_alphabet.as_ref().unwrap();
            for _ in 0..n {
                let (no, line) = expect("output line")?;
                if line.len() != 3 || line[0] != "output" {
                    return Err(parse_err(no, "expected \"output <state> <sym>\""));
                }
                let state = parse_state(no, line[1])?;
                let sym = out
                    .index(line[2])
                    .ok_or_else(|| parse_err(no, &format!("unknown output symbol {:?}", line[2])))?;
                if moore_outputs[state].replace(sym).is_some() {
                    return Err(parse_err(no, &format!("duplicate output for state {state}")));
                }
            }
        }
        MachineKind::Mealy => {}
    }

    let want = if kind == MachineKind::Mealy { 5 } else { 4 };
    let mut delta: Vec<Vec<Option<usize>>> = vec![vec![None; alphabet.len()]; n];
    let mut mealy_outputs: Vec<Vec<Option<usize>>> = vec![vec![None; alphabet.len()]; n];
    for _ in 0..n * alphabet.len() {
        let (no, line) = expect("trans line")?;
        if line.len() != want || line[0] != "trans" {
            return Err(parse_err(
                no,
                &format!("expected \"trans\" line with {} tokens", want),
            ));
        }
        let src = parse_state(no, line[1])?;
        let sym = alphabet
            .index(line[2])
            .ok_or_else(|| parse_err(no, &format!("unknown input symbol {:?}", line[2])))?;
        let dst = parse_state(no, line[3])?;
        if delta[src][sym].replace(dst).is_some() {
            return Err(parse_err(
                no,
                &format!("duplicate transition ({src}, {:?})", line[2]),
            ));
        }
        if kind == MachineKind::Mealy {
            let out = output_alphabet.as_ref().unwrap();
            let o = out
                .index(line[4])
                .ok_or_else(|| parse_err(no, &format!("unknown output symbol {:?}", line[4])))?;
            mealy_outputs[src][sym] = Some(o);
        }
    }
    if let Some((no, _)) = lines.next() {
        return Err(parse_err(no, "trailing content after machine definition"));
    }

    let delta: Vec<Vec<usize>> = delta
        .into_iter()
        .enumerate()
        .map(|(state, row)| {
            row.into_iter()
                .enumerate()
                .map(|(sym, d)| {
                    d.ok_or_else(|| {
                        Error::Input(format!(
                            "missing transition ({state}, {})",
                            alphabet.symbol(sym)
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    match kind {
        MachineKind::Dfa => Ok(Machine::Dfa(Dfa::new(alphabet, delta, accepting)?)),
        MachineKind::Moore => {
            let outputs = moore_outputs
                .into_iter()
                .enumerate()
                .map(|(s, o)| o.ok_or_else(|| Error::Input(format!("missing output for state {s}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(Machine::Moore(MooreMachine::new(
                alphabet,
                output_alphabet.unwrap(),
                delta,
                outputs,
            )?))
        }
        MachineKind::Mealy => {
            let outputs = mealy_outputs
                .into_iter()
                .map(|row| row.into_iter().map(|o| o.unwrap()).collect())
                .collect();
            Ok(Machine::Mealy(MealyMachine::new(
                alphabet,
                output_alphabet.unwrap(),
                delta,
                outputs,
            )?))
        }
    }
}

/// Writes the machine text format. `parse_machine` inverts this exactly.
pub fn serialize_machine(machine: &Machine) -> String {
    let mut out = String::new();
    let alphabet = machine.input_alphabet();
    out.push_str(&format!("kind {}\n", machine.kind()));
    out.push_str(&format!("inputs {}\n", alphabet.symbols().join(" ")));
    if let Some(oa) = machine.output_alphabet() {
        out.push_str(&format!("outputs {}\n", oa.symbols().join(" ")));
    }
    out.push_str(&format!("states {}\n", machine.state_count()));
    out.push_str("initial 0\n");
    match machine {
        Machine::Dfa(m) => {
            let acc = m
                .accepting_states()
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            if acc.is_empty() {
                out.push_str("accepting\n");
            } else {
                out.push_str(&format!("accepting {acc}\n"));
            }
            for s in 0..m.state_count() {
                for a in 0..alphabet.len() {
                    out.push_str(&format!(
                        "trans {s} {} {}\n",
                        alphabet.symbol(a),
                        m.delta(s, a)
                    ));
                }
            }
        }
        Machine::Moore(m) => {
            for s in 0..m.state_count() {
                out.push_str(&format!(
                    "output {s} {}\n",
                    m.output_alphabet().symbol(m.output(s))
                ));
            }
            for s in 0..m.state_count() {
                for a in 0..alphabet.len() {
                    out.push_str(&format!(
                        "trans {s} {} {}\n",
                        alphabet.symbol(a),
                        m.delta(s, a)
                    ));
                }
            }
        }
        Machine::Mealy(m) => {
            for s in 0..m.state_count() {
                for a in 0..alphabet.len() {
                    out.push_str(&format!(
                        "trans {s} {} {} {}\n",
                        alphabet.symbol(a),
                        m.delta(s, a),
                        m.output_alphabet().symbol(m.output(s, a))
                    ));
                }
            }
        }
    }
    out
}

/// Renders the machine as a Graphviz digraph for visualization.
pub fn machine_to_dot(machine: &Machine) -> String {
    let alphabet = machine.input_alphabet();
    let mut out = String::from("digraph machine {\n  rankdir=LR;\n  node [shape=circle];\n");
    out.push_str("  __start [shape=point];\n  __start -> s0;\n");
    for s in 0..machine.state_count() {
        match machine {
            Machine::Dfa(m) if m.is_accepting(s) => {
                out.push_str(&format!("  s{s} [shape=doublecircle];\n"));
            }
            Machine::Moore(m) => {
                out.push_str(&format!(
                    "  s{s} [label=\"{s} / {}\"];\n",
                    m.output_alphabet().symbol(m.output(s))
                ));
            }
            _ => {}
        }
    }
    for s in 0..machine.state_count() {
        for a in 0..alphabet.len() {
            match machine {
                Machine::Dfa(m) => out.push_str(&format!(
                    "  s{s} -> s{} [label=\"{}\"];\n",
                    m.delta(s, a),
                    alphabet.symbol(a)
                )),
                Machine::Moore(m) => out.push_str(&format!(
                    "  s{s} -> s{} [label=\"{}\"];\n",
                    m.delta(s, a),
                    alphabet.symbol(a)
                )),
                Machine::Mealy(m) => out.push_str(&format!(
                    "  s{s} -> s{} [label=\"{} / {}\"];\n",
                    m.delta(s, a),
                    alphabet.symbol(a),
                    m.output_alphabet().symbol(m.output(s, a))
                )),
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::gen_mod_dfa;
    use crate::samples::DfaSample;

    fn unary() -> Alphabet {
        Alphabet::new(["a"]).unwrap()
    }

    #[test]
    fn mod_dfa_acceptance() {
        let d2 = gen_mod_dfa(2).unwrap();
        assert!(d2.accepts::<&str>(&[]).unwrap());
        assert!(!d2.accepts(&["a"]).unwrap());
        assert!(d2.accepts(&["a", "a"]).unwrap());
    }

    #[test]
    fn unknown_symbol_is_reported_with_position() {
        let d2 = gen_mod_dfa(2).unwrap();
        let err = d2.accepts(&["a", "b"]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"b\""), "{msg}");
        assert!(msg.contains("position 2"), "{msg}");
    }

    #[test]
    fn mealy_transduce() {
        // one state, constant output
        let m = MealyMachine::new(
            unary(),
            Alphabet::new(["x"]).unwrap(),
            vec![vec![0]],
            vec![vec![0]],
        )
        .unwrap();
        assert_eq!(m.transduce(&["a", "a"]).unwrap(), vec!["x", "x"]);
    }

    #[test]
    fn moore_transduce_is_one_longer() {
        let m = MooreMachine::new(unary(), Alphabet::new(["x"]).unwrap(), vec![vec![0]], vec![0])
            .unwrap();
        assert_eq!(m.transduce(&["a"]).unwrap(), vec!["x", "x"]);
    }

    #[test]
    fn mealy_two_state_alternating() {
        let m = MealyMachine::new(
            unary(),
            Alphabet::new(["p", "q"]).unwrap(),
            vec![vec![1], vec![0]],
            vec![vec![0], vec![1]],
        )
        .unwrap();
        assert_eq!(m.transduce(&["a", "a", "a"]).unwrap(), vec!["p", "q", "p"]);
    }

    #[test]
    fn consistency_ok_and_failures() {
        let d2 = Machine::Dfa(gen_mod_dfa(2).unwrap());
        let s2 = crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec {
            k: 2,
            max_len: 4,
        })
        .unwrap();
        assert!(is_consistent(&d2, &Sample::Dfa(s2.clone()))
            .unwrap()
            .is_ok());

        // all-accepting one-state machine vs S+ = {"a"}, S- = {eps}
        let one = Machine::Dfa(Dfa::new(unary(), vec![vec![0]], [0]).unwrap());
        let sample = DfaSample::new(unary(), [vec![0]], [vec![]]).unwrap();
        match is_consistent(&one, &Sample::Dfa(sample)).unwrap() {
            ConsistencyReport::DfaFailure {
                string,
                expected,
                actual,
            } => {
                assert_eq!(string, Vec::<usize>::new());
                assert!(!expected);
                assert!(actual);
            }
            other => panic!("expected failure at eps, got {other:?}"),
        }

        // D_3^mod disagrees with S_2^mod first at "aa"
        let d3 = Machine::Dfa(gen_mod_dfa(3).unwrap());
        match is_consistent(&d3, &Sample::Dfa(s2)).unwrap() {
            ConsistencyReport::DfaFailure { string, .. } => assert_eq!(string, vec![0, 0]),
            other => panic!("expected failure at aa, got {other:?}"),
        }
    }

    #[test]
    fn equivalence_and_counterexample() {
        let d2 = Machine::Dfa(gen_mod_dfa(2).unwrap());
        let d3 = Machine::Dfa(gen_mod_dfa(3).unwrap());
        assert!(equivalent(&d2, &d2).unwrap().is_equivalent());
        match equivalent(&d2, &d3).unwrap() {
            EquivOutcome::Inequivalent { counterexample } => {
                assert_eq!(counterexample, vec!["a", "a"]);
            }
            EquivOutcome::Equivalent => panic!("D_2 and D_3 must differ"),
        }
    }

    #[test]
    fn unrolled_flip_flop_is_equivalent() {
        // 2-state parity machine vs its 4-state unrolling, both accepting
        // odd lengths
        let two = Machine::Dfa(Dfa::new(unary(), vec![vec![1], vec![0]], [1]).unwrap());
        let four = Machine::Dfa(
            Dfa::new(unary(), vec![vec![1], vec![2], vec![3], vec![0]], [1, 3]).unwrap(),
        );
        assert!(equivalent(&two, &four).unwrap().is_equivalent());
    }

    #[test]
    fn kind_mismatch_is_input_error() {
        let d2 = Machine::Dfa(gen_mod_dfa(2).unwrap());
        let mealy = Machine::Mealy(
            MealyMachine::new(
                unary(),
                Alphabet::new(["x"]).unwrap(),
                vec![vec![0]],
                vec![vec![0]],
            )
            .unwrap(),
        );
        assert!(matches!(equivalent(&d2, &mealy), Err(Error::Input(_))));
    }

    #[test]
    fn machine_format_roundtrip() {
        let d3 = Machine::Dfa(gen_mod_dfa(3).unwrap());
        let text = serialize_machine(&d3);
        let back = parse_machine(&text).unwrap();
        assert_eq!(back, d3);

        let mealy = Machine::Mealy(
            MealyMachine::new(
                Alphabet::new(["a", "b"]).unwrap(),
                Alphabet::new(["x", "y"]).unwrap(),
                vec![vec![1, 0], vec![0, 1]],
                vec![vec![0, 1], vec![1, 0]],
            )
            .unwrap(),
        );
        let text = serialize_machine(&mealy);
        assert_eq!(parse_machine(&text).unwrap(), mealy);

        let moore = Machine::Moore(
            MooreMachine::new(
                Alphabet::new(["a"]).unwrap(),
                Alphabet::new(["x", "y"]).unwrap(),
                vec![vec![1], vec![0]],
                vec![0, 1],
            )
            .unwrap(),
        );
        let text = serialize_machine(&moore);
        assert_eq!(parse_machine(&text).unwrap(), moore);
    }

    #[test]
    fn machine_format_comments_and_empty_accepting() {
        let none = Machine::Dfa(Dfa::new(unary(), vec![vec![0]], []).unwrap());
        let text = serialize_machine(&none);
        assert!(text.contains("\naccepting\n"));
        assert_eq!(parse_machine(&text).unwrap(), none);

        let commented = "# reject everything\nkind dfa\ninputs a  # unary\n\nstates 1\ninitial 0\naccepting\ntrans 0 a 0\n";
        assert_eq!(parse_machine(commented).unwrap(), none);
    }

    #[test]
    fn moore_equivalence_includes_initial_outputs() {
        let out = Alphabet::new(["x", "y"]).unwrap();
        let a = Machine::Moore(
            MooreMachine::new(unary(), out.clone(), vec![vec![1], vec![0]], vec![0, 1]).unwrap(),
        );
        let b = Machine::Moore(
            MooreMachine::new(unary(), out.clone(), vec![vec![1], vec![0]], vec![1, 0]).unwrap(),
        );
        match equivalent(&a, &b).unwrap() {
            EquivOutcome::Inequivalent { counterexample } => {
                assert!(counterexample.is_empty(), "initial outputs differ at eps");
            }
            EquivOutcome::Equivalent => panic!("initial outputs differ"),
        }
        // a four-state unrolling of `a` agrees everywhere, including at eps
        let unrolled = Machine::Moore(
            MooreMachine::new(
                unary(),
                out,
                vec![vec![1], vec![2], vec![3], vec![0]],
                vec![0, 1, 0, 1],
            )
            .unwrap(),
        );
        assert!(equivalent(&a, &unrolled).unwrap().is_equivalent());
    }

    #[test]
    fn machine_format_rejects_bad_input() {
        assert!(matches!(
            parse_machine("kind dfa\ninputs a\nstates 1\ninitial 1\naccepting\ntrans 0 a 0\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_machine("kind dfa\ninputs a\nstates 2\ninitial 0\naccepting\ntrans 0 a 0\n"),
            Err(Error::Parse { .. }) | Err(Error::Input(_))
        ));
    }

    #[test]
    fn dot_export_mentions_accepting_states() {
        let d2 = Machine::Dfa(gen_mod_dfa(2).unwrap());
        let dot = machine_to_dot(&d2);
        assert!(dot.contains("doublecircle"));
        assert!(dot.contains("s0 -> s1"));
    }
}
