//! Samples: the data a machine is learned from, and their text formats.
//!
//! A [`DfaSample`] is a pair of disjoint string sets `S+` (accept) and `S-`
//! (reject); a [`TraceSample`] is a list of input/output trace pairs for a
//! Moore or Mealy machine. Both have a line-based interchange format with
//! symbols written as decimal indices:
//!
//! DFA samples (Abbadingo style):
//!
//! ```text
//! <count> <alphabet_size>
//! <label> <len> <sym_1> ... <sym_len>      one line per string; label 1 = accept
//! ```
//!
//! Trace samples:
//!
//! ```text
//! <kind> <input_alphabet_size> <output_alphabet_size>     kind is "moore" or "mealy"
//! <len> <in_1> <out_1> ... <in_len> <out_len>             mealy
//! <out_0> <len> <in_1> <out_1> ... <in_len> <out_len>     moore
//! ```
//!
//! Serialization emits strings and traces in sorted (length, lexicographic)
//! order; samples are stored canonically, so parse and serialize are exact
//! inverses.

use std::collections::{BTreeMap, BTreeSet};

use crate::automata::{Alphabet, MachineKind};
use crate::error::{Error, Result};

fn word_key(w: &[usize]) -> (usize, &[usize]) {
    (w.len(), w)
}

/// Renders a word for error messages; the empty string prints as a visible
/// marker.
fn describe_word(w: &[usize]) -> String {
    if w.is_empty() {
        "\u{3b5}".to_string() // ε
    } else {
        w.iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A labeled-string sample: the strings a DFA must accept (`S+`) and
/// reject (`S-`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaSample {
    alphabet: Alphabet,
    positives: BTreeSet<Vec<usize>>,
    negatives: BTreeSet<Vec<usize>>,
}

impl DfaSample {
    pub fn new(
        alphabet: Alphabet,
        positives: impl IntoIterator<Item = Vec<usize>>,
        negatives: impl IntoIterator<Item = Vec<usize>>,
    ) -> Result<Self> {
        let positives: BTreeSet<Vec<usize>> = positives.into_iter().collect();
        let negatives: BTreeSet<Vec<usize>> = negatives.into_iter().collect();
        for w in positives.iter().chain(negatives.iter()) {
            for &s in w {
                if s >= alphabet.len() {
                    return Err(Error::Input(format!(
                        "symbol {s} in string \"{}\" out of range [0, {})",
                        describe_word(w),
                        alphabet.len()
                    )));
                }
            }
        }
        if let Some(w) = positives.intersection(&negatives).next() {
            return Err(Error::Conflict(format!(
                "string \"{}\" is labeled both accept and reject",
                describe_word(w)
            )));
        }
        Ok(DfaSample {
            alphabet,
            positives,
            negatives,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn positives(&self) -> &BTreeSet<Vec<usize>> {
        &self.positives
    }

    pub fn negatives(&self) -> &BTreeSet<Vec<usize>> {
        &self.negatives
    }

    /// All strings with their labels, sorted by (length, lexicographic).
    pub fn strings(&self) -> Vec<(&[usize], bool)> {
        let mut all: Vec<(&[usize], bool)> = self
            .positives
            .iter()
            .map(|w| (w.as_slice(), true))
            .chain(self.negatives.iter().map(|w| (w.as_slice(), false)))
            .collect();
        all.sort_by(|(a, _), (b, _)| word_key(a).cmp(&word_key(b)));
        all
    }

    pub fn count(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }
}

/// An input/output trace sample for a Moore or Mealy machine. Traces are
/// stored deduplicated and sorted by (input length, input).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSample {
    kind: MachineKind,
    input_alphabet: Alphabet,
    output_alphabet: Alphabet,
    traces: Vec<(Vec<usize>, Vec<usize>)>,
}

impl TraceSample {
    pub fn new(
        kind: MachineKind,
        input_alphabet: Alphabet,
        output_alphabet: Alphabet,
        traces: impl IntoIterator<Item = (Vec<usize>, Vec<usize>)>,
    ) -> Result<Self> {
        if kind == MachineKind::Dfa {
            return Err(Error::Input(
                "trace samples are for moore or mealy machines".into(),
            ));
        }
        let mut canonical: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        let mut shared_y0: Option<usize> = None;
        for (x, y) in traces {
            let expected_len = match kind {
                MachineKind::Mealy => x.len(),
                MachineKind::Moore => x.len() + 1,
                MachineKind::Dfa => unreachable!(),
            };
            if y.len() != expected_len {
                return Err(Error::Input(format!(
                    "{kind} trace on input \"{}\" has {} outputs, expected {expected_len}",
                    describe_word(&x),
                    y.len()
                )));
            }
            for &s in &x {
                if s >= input_alphabet.len() {
                    return Err(Error::Input(format!(
                        "input symbol {s} out of range [0, {})",
                        input_alphabet.len()
                    )));
                }
            }
            for &o in &y {
                if o >= output_alphabet.len() {
                    return Err(Error::Input(format!(
                        "output symbol {o} out of range [0, {})",
                        output_alphabet.len()
                    )));
                }
            }
            if kind == MachineKind::Moore {
                match shared_y0 {
                    None => shared_y0 = Some(y[0]),
                    Some(y0) if y0 != y[0] => {
                        return Err(Error::Conflict(format!(
                            "moore traces disagree on the initial output: {y0} vs {}",
                            y[0]
                        )));
                    }
                    Some(_) => {}
                }
            }
            if let Some(prev) = canonical.get(&x) {
                if *prev != y {
                    return Err(Error::Conflict(format!(
                        "two traces assign different outputs to input \"{}\"",
                        describe_word(&x)
                    )));
                }
            } else {
                canonical.insert(x, y);
            }
        }
        let mut traces: Vec<(Vec<usize>, Vec<usize>)> = canonical.into_iter().collect();
        traces.sort_by(|(a, _), (b, _)| word_key(a).cmp(&word_key(b)));
        Ok(TraceSample {
            kind,
            input_alphabet,
            output_alphabet,
            traces,
        })
    }

    pub fn kind(&self) -> MachineKind {
        self.kind
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output_alphabet
    }

    pub fn traces(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.traces
    }

    pub fn count(&self) -> usize {
        self.traces.len()
    }
}

/// Either kind of sample; the learner input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sample {
    Dfa(DfaSample),
    Traces(TraceSample),
}

impl Sample {
    pub fn kind(&self) -> MachineKind {
        match self {
            Sample::Dfa(_) => MachineKind::Dfa,
            Sample::Traces(t) => t.kind(),
        }
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        match self {
            Sample::Dfa(s) => s.alphabet(),
            Sample::Traces(t) => t.input_alphabet(),
        }
    }
}

/// Size measures of a sample: the number of strings or traces, and the
/// summed length of all inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleMetrics {
    pub count: usize,
    pub total_length: usize,
}

pub fn metrics(sample: &Sample) -> SampleMetrics {
    match sample {
        Sample::Dfa(s) => SampleMetrics {
            count: s.count(),
            total_length: s
                .positives()
                .iter()
                .chain(s.negatives().iter())
                .map(|w| w.len())
                .sum(),
        },
        Sample::Traces(t) => SampleMetrics {
            count: t.count(),
            total_length: t.traces().iter().map(|(x, _)| x.len()).sum(),
        },
    }
}

// ---------------------------------------------------------------------------
// Parsing and serialization
// ---------------------------------------------------------------------------

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        LineReader {
            lines: text.lines().enumerate(),
        }
    }

    /// Next line as (1-based number, whitespace-separated tokens).
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
    }
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{what} {tok:?} is not a non-negative integer"),
    })
}

fn parse_symbol(line: usize, tok: &str, bound: usize, what: &str) -> Result<usize> {
    let v = parse_usize(line, tok, what)?;
    if v >= bound {
        return Err(Error::Parse {
            line,
            message: format!("{what} {v} out of range [0, {bound})"),
        });
    }
    Ok(v)
}

/// Parses the DFA sample format described in the module docs.
pub fn parse_dfa_sample(text: &str) -> Result<DfaSample> {
    let mut reader = LineReader::new(text);
    let (no, header) = reader.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input, expected \"<count> <alphabet_size>\" header".into(),
    })?;
    if header.len() != 2 {
        return Err(Error::Parse {
            line: no,
            message: "header must be \"<count> <alphabet_size>\"".into(),
        });
    }
    let count = parse_usize(no, header[0], "string count")?;
    let alphabet_size = parse_usize(no, header[1], "alphabet size")?;
    if alphabet_size == 0 {
        return Err(Error::Parse {
            line: no,
            message: "alphabet size must be positive".into(),
        });
    }

    let mut labeled: BTreeMap<Vec<usize>, bool> = BTreeMap::new();
    for _ in 0..count {
        let (no, toks) = reader.next().ok_or(Error::Parse {
            line: 0,
            message: format!("expected {count} string lines, input ended early"),
        })?;
        if toks.len() < 2 {
            return Err(Error::Parse {
                line: no,
                message: "string line must be \"<label> <len> <sym> ...\"".into(),
            });
        }
        let label = match toks[0] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line: no,
                    message: format!("label {other:?} must be 0 or 1"),
                })
            }
        };
        let len = parse_usize(no, toks[1], "string length")?;
        if toks.len() != 2 + len {
            return Err(Error::Parse {
                line: no,
                message: format!("expected {len} symbols, found {}", toks.len() - 2),
            });
        }
        let word = toks[2..]
            .iter()
            .map(|t| parse_symbol(no, t, alphabet_size, "symbol"))
            .collect::<Result<Vec<usize>>>()?;
        if let Some(&prev) = labeled.get(&word) {
            if prev != label {
                return Err(Error::Conflict(format!(
                    "string \"{}\" is labeled both accept and reject",
                    describe_word(&word)
                )));
            }
        } else {
            labeled.insert(word, label);
        }
    }
    if let Some((no, toks)) = reader.next() {
        if !toks.is_empty() {
            return Err(Error::Parse {
                line: no,
                message: "trailing content after the declared number of strings".into(),
            });
        }
    }

    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (word, label) in labeled {
        if label {
            positives.push(word);
        } else {
            negatives.push(word);
        }
    }
    DfaSample::new(Alphabet::indexed(alphabet_size), positives, negatives)
}

/// Writes the DFA sample format; exact inverse of [`parse_dfa_sample`].
pub fn serialize_dfa_sample(sample: &DfaSample) -> String {
    let mut out = format!("{} {}\n", sample.count(), sample.alphabet().len());
    for (word, label) in sample.strings() {
        out.push_str(&format!("{} {}", if label { 1 } else { 0 }, word.len()));
        for s in word {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
    }
    out
}

/// Parses the trace sample format described in the module docs.
pub fn parse_trace_sample(text: &str) -> Result<TraceSample> {
    let mut reader = LineReader::new(text);
    let (no, header) = reader.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input, expected \"<kind> <input_size> <output_size>\" header".into(),
    })?;
    if header.len() != 3 {
        return Err(Error::Parse {
            line: no,
            message: "header must be \"<kind> <input_size> <output_size>\"".into(),
        });
    }
    let kind = match header[0] {
        "moore" => MachineKind::Moore,
        "mealy" => MachineKind::Mealy,
        other => {
            return Err(Error::Parse {
                line: no,
                message: format!("unknown trace kind {other:?}, expected moore or mealy"),
            })
        }
    };
    let input_size = parse_usize(no, header[1], "input alphabet size")?;
    let output_size = parse_usize(no, header[2], "output alphabet size")?;
    if input_size == 0 || output_size == 0 {
        return Err(Error::Parse {
            line: no,
            message: "alphabet sizes must be positive".into(),
        });
    }

    let mut traces = Vec::new();
    while let Some((no, toks)) = reader.next() {
        if toks.is_empty() {
            return Err(Error::Parse {
                line: no,
                message: "blank line in trace sample".into(),
            });
        }
        let (y0, rest) = match kind {
            MachineKind::Moore => {
                let y0 = parse_symbol(no, toks[0], output_size, "initial output")?;
                (Some(y0), &toks[1..])
            }
            _ => (None, &toks[..]),
        };
        if rest.is_empty() {
            return Err(Error::Parse {
                line: no,
                message: "trace line ended before the length field".into(),
            });
        }
        let len = parse_usize(no, rest[0], "trace length")?;
        if rest.len() != 1 + 2 * len {
            return Err(Error::Parse {
                line: no,
                message: format!(
                    "expected {} input/output tokens, found {}",
                    2 * len,
                    rest.len() - 1
                ),
            });
        }
        let mut x = Vec::with_capacity(len);
        let mut y = Vec::with_capacity(len + 1);
        if let Some(y0) = y0 {
            y.push(y0);
        }
        for i in 0..len {
            x.push(parse_symbol(no, rest[1 + 2 * i], input_size, "input symbol")?);
            y.push(parse_symbol(
                no,
                rest[2 + 2 * i],
                output_size,
                "output symbol",
            )?);
        }
        traces.push((x, y));
    }
    TraceSample::new(
        kind,
        Alphabet::indexed(input_size),
        Alphabet::indexed(output_size),
        traces,
    )
}

/// Writes the trace sample format; exact inverse of [`parse_trace_sample`].
pub fn serialize_trace_sample(sample: &TraceSample) -> String {
    let mut out = format!(
        "{} {} {}\n",
        sample.kind(),
        sample.input_alphabet().len(),
        sample.output_alphabet().len()
    );
    for (x, y) in sample.traces() {
        let mut fields: Vec<String> = Vec::new();
        let pairs_from = match sample.kind() {
            MachineKind::Moore => {
                fields.push(y[0].to_string());
                1
            }
            _ => 0,
        };
        fields.push(x.len().to_string());
        for i in 0..x.len() {
            fields.push(x[i].to_string());
            fields.push(y[pairs_from + i].to_string());
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_dfa_sample_basic() {
        // accept "0", reject eps, over a unary alphabet
        let s = parse_dfa_sample("2 1\n1 1 0\n0 0\n").unwrap();
        assert_eq!(s.positives().len(), 1);
        assert!(s.positives().contains(&vec![0]));
        assert!(s.negatives().contains(&vec![]));

        let s = parse_dfa_sample("1 2\n1 2 0 1\n").unwrap();
        assert!(s.positives().contains(&vec![0, 1]));
        assert!(s.negatives().is_empty());
    }

    #[test]
    fn parse_dfa_sample_conflict() {
        let err = parse_dfa_sample("2 1\n1 1 0\n0 1 0\n").unwrap_err();
        match err {
            Error::Conflict(msg) => assert!(msg.contains("\"0\""), "{msg}"),
            other => panic!("expected conflict, got {other}"),
        }
    }

    #[test]
    fn parse_dfa_sample_errors() {
        assert!(matches!(
            parse_dfa_sample("1 1\n1 2 0\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dfa_sample("1 1\n1 1 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_dfa_sample("2 1\n1 0\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn serialize_dfa_sample_sorted() {
        let alphabet = Alphabet::indexed(1);
        let s = DfaSample::new(alphabet.clone(), [vec![]], []).unwrap();
        assert_eq!(serialize_dfa_sample(&s), "1 1\n1 0\n");

        let s = DfaSample::new(alphabet, [vec![0]], [vec![]]).unwrap();
        assert_eq!(serialize_dfa_sample(&s), "2 1\n0 0\n1 1 0\n");
    }

    #[test]
    fn mod_sample_roundtrip() {
        let s = crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec {
            k: 2,
            max_len: 4,
        })
        .unwrap();
        let text = serialize_dfa_sample(&s);
        let back = parse_dfa_sample(&text).unwrap();
        // the file format stores only the alphabet size, so symbol names
        // collapse to indices; the label sets and the text are preserved
        assert_eq!(back.positives(), s.positives());
        assert_eq!(back.negatives(), s.negatives());
        assert_eq!(serialize_dfa_sample(&back), text);
    }

    #[test]
    fn parse_trace_sample_basic() {
        let s = parse_trace_sample("mealy 1 1\n1 0 0\n").unwrap();
        assert_eq!(s.kind(), MachineKind::Mealy);
        assert_eq!(s.traces(), &[(vec![0], vec![0])]);

        let s = parse_trace_sample("moore 1 1\n0 1 0 0\n").unwrap();
        assert_eq!(s.kind(), MachineKind::Moore);
        assert_eq!(s.traces(), &[(vec![0], vec![0, 0])]);
    }

    #[test]
    fn trace_prefix_conflict_parses_here() {
        // the two traces give prefix "0" different outputs; that conflict
        // surfaces when the prefix tree is built, not at parse time
        let s = parse_trace_sample("mealy 1 2\n2 0 0 0 1\n1 0 1\n").unwrap();
        assert_eq!(s.count(), 2);
        assert!(crate::apt::build_apt_traces(&s).is_err());
    }

    #[test]
    fn trace_sample_conflicts() {
        // identical input, different outputs
        assert!(matches!(
            parse_trace_sample("mealy 1 2\n1 0 0\n1 0 1\n"),
            Err(Error::Conflict(_))
        ));
        // moore traces with different initial outputs
        assert!(matches!(
            parse_trace_sample("moore 1 2\n0 1 0 0\n1 1 0 0\n"),
            Err(Error::Conflict(_))
        ));
        // mealy length relation violated (length field vs tokens)
        assert!(matches!(
            parse_trace_sample("mealy 1 1\n2 0 0\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn sample_metrics() {
        let alphabet = Alphabet::indexed(1);
        let s = DfaSample::new(alphabet, [vec![]], [vec![0]]).unwrap();
        let m = metrics(&Sample::Dfa(s));
        assert_eq!(m.count, 2);
        assert_eq!(m.total_length, 1);

        let s1 = crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec {
            k: 1,
            max_len: 100,
        })
        .unwrap();
        let m = metrics(&Sample::Dfa(s1));
        assert_eq!(m.count, 101);
        assert_eq!(m.total_length, 5050);
    }

    #[test]
    fn trace_sample_is_canonical() {
        let a1 = Alphabet::indexed(1);
        let a2 = Alphabet::indexed(2);
        let s = TraceSample::new(
            MachineKind::Mealy,
            a1.clone(),
            a2.clone(),
            [
                (vec![0, 0], vec![0, 1]),
                (vec![0], vec![0]),
                (vec![0], vec![0]), // duplicate collapses
            ],
        )
        .unwrap();
        assert_eq!(s.count(), 2);
        assert_eq!(s.traces()[0].0, vec![0]);
        let text = serialize_trace_sample(&s);
        assert_eq!(parse_trace_sample(&text).unwrap(), s);
    }
}
