//! Constraint generation: turns a sample or prefix tree plus a state
//! bound `n` into a solver-agnostic ground formula over uninterpreted
//! functions and linear integer arithmetic.
//!
//! Two encodings exist for DFA samples. The natural encoding constrains
//! nested applications of the transition function directly, one assertion
//! per sampled string. The expressive encoding introduces one integer
//! constant per prefix-tree node (the state the node is merged into) and
//! constrains tree edges and labels without nesting; it extends to Moore
//! and Mealy machines by typing the output function over output indices
//! instead of booleans.
//!
//! State bounds can be written either as a disjunction of equalities or as
//! a pair of linear inequalities; both are provided and are
//! equisatisfiable.

use crate::apt::{Apt, NodeLabel};
use crate::error::{Error, Result};
use crate::samples::DfaSample;
use crate::MachineKind;

/// SMT-LIB name of the transition function.
pub const DELTA: &str = "delta";
/// SMT-LIB name of the output/acceptance function.
pub const OUT: &str = "out";
/// Logic declared to the solver.
pub const LOGIC: &str = "QF_UFLIA";

/// How to bound an integer-valued term to a finite range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxiomStyle {
    /// `t = 0 \/ t = 1 \/ ... \/ t = n-1`
    BooleanDisjunction,
    /// `t >= 0 /\ t < n`
    LinearInequality,
}

impl std::fmt::Display for AxiomStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AxiomStyle::BooleanDisjunction => "bool",
            AxiomStyle::LinearInequality => "ineq",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Int,
    Bool,
}

/// An uninterpreted function or constant declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub args: Vec<Sort>,
    pub ret: Sort,
}

/// A ground term. Formulas quantify over nothing: finite-domain
/// quantifiers are expanded at encoding time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Int(i64),
    Bool(bool),
    /// Function application; an empty argument list is a constant.
    App(String, Vec<Term>),
    Eq(Box<Term>, Box<Term>),
    Lt(Box<Term>, Box<Term>),
    Ge(Box<Term>, Box<Term>),
    Or(Vec<Term>),
    And(Vec<Term>),
    Not(Box<Term>),
}

impl Term {
    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::App(name.into(), Vec::new())
    }

    pub fn eq(a: Term, b: Term) -> Term {
        Term::Eq(Box::new(a), Box::new(b))
    }

    pub fn lt(a: Term, b: Term) -> Term {
        Term::Lt(Box::new(a), Box::new(b))
    }

    pub fn ge(a: Term, b: Term) -> Term {
        Term::Ge(Box::new(a), Box::new(b))
    }
}

/// A declared signature plus ground assertions; what gets shipped to the
/// solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub logic_hint: String,
    pub declarations: Vec<Declaration>,
    pub assertions: Vec<Term>,
}

/// Size measures of a produced formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingStats {
    pub n: usize,
    pub assertion_count: usize,
    pub declaration_count: usize,
}

impl Formula {
    fn new() -> Formula {
        Formula {
            logic_hint: LOGIC.to_string(),
            declarations: Vec::new(),
            assertions: Vec::new(),
        }
    }

    fn declare(&mut self, name: impl Into<String>, args: Vec<Sort>, ret: Sort) {
        self.declarations.push(Declaration {
            name: name.into(),
            args,
            ret,
        });
    }

    pub fn stats(&self, n: usize) -> EncodingStats {
        EncodingStats {
            n,
            assertion_count: self.assertions.len(),
            declaration_count: self.declarations.len(),
        }
    }

    /// Checks that every function symbol used in an assertion is declared
    /// exactly once, with consistent arity.
    pub fn validate(&self) -> Result<()> {
        use std::collections::HashMap;
        let mut arity: HashMap<&str, usize> = HashMap::new();
        for d in &self.declarations {
            if arity.insert(&d.name, d.args.len()).is_some() {
                return Err(Error::Input(format!("duplicate declaration {:?}", d.name)));
            }
        }
        fn walk(t: &Term, arity: &std::collections::HashMap<&str, usize>) -> Result<()> {
            match t {
                Term::Int(_) | Term::Bool(_) => Ok(()),
                Term::App(name, args) => {
                    match arity.get(name.as_str()) {
                        None => {
                            return Err(Error::Input(format!("undeclared symbol {name:?}")));
                        }
                        Some(&k) if k != args.len() => {
                            return Err(Error::Input(format!(
                                "symbol {name:?} used with {} arguments, declared with {k}",
                                args.len()
                            )));
                        }
                        Some(_) => {}
                    }
                    args.iter().try_for_each(|a| walk(a, arity))
                }
                Term::Eq(a, b) | Term::Lt(a, b) | Term::Ge(a, b) => {
                    walk(a, arity)?;
                    walk(b, arity)
                }
                Term::Or(ts) | Term::And(ts) => ts.iter().try_for_each(|t| walk(t, arity)),
                Term::Not(t) => walk(t, arity),
            }
        }
        self.assertions
            .iter()
            .try_for_each(|a| walk(a, &arity))
    }
}

/// `0 <= term < bound` in the requested style. A one-element disjunction
/// collapses to the bare equality.
fn range_axiom(term: Term, bound: usize, style: AxiomStyle) -> Term {
    match style {
        AxiomStyle::BooleanDisjunction => {
            let disjuncts: Vec<Term> = (0..bound)
                .map(|v| Term::eq(term.clone(), Term::Int(v as i64)))
                .collect();
            if disjuncts.len() == 1 {
                disjuncts.into_iter().next().unwrap()
            } else {
                Term::Or(disjuncts)
            }
        }
        AxiomStyle::LinearInequality => Term::And(vec![
            Term::ge(term.clone(), Term::Int(0)),
            Term::lt(term, Term::Int(bound as i64)),
        ]),
    }
}

fn node_constant(node: usize) -> Term {
    Term::constant(format!("c{node}"))
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Input("state bound n must be at least 1".into()));
    }
    Ok(())
}

/// Encodes "a DFA with at most `n` states consistent with the sample
/// exists" directly over nested transition terms: range axioms for every
/// `delta(i, a)` on the state grid, then one assertion per sampled string
/// pinning the acceptance of its final state.
pub fn encode_natural(sample: &DfaSample, n: usize, style: AxiomStyle) -> Result<Formula> {
    check_n(n)?;
    let k = sample.alphabet().len();
    let mut f = Formula::new();
    f.declare(DELTA, vec![Sort::Int, Sort::Int], Sort::Int);
    f.declare(OUT, vec![Sort::Int], Sort::Bool);

    for state in 0..n {
        for sym in 0..k {
            let cell = Term::app(DELTA, vec![Term::Int(state as i64), Term::Int(sym as i64)]);
            f.assertions.push(range_axiom(cell, n, style));
        }
    }
    // positives first, then negatives, each in sorted order
    for polarity in [true, false] {
        for (word, label) in sample.strings() {
            if label != polarity {
                continue;
            }
            let mut t = Term::Int(0);
            for &a in word {
                t = Term::app(DELTA, vec![t, Term::Int(a as i64)]);
            }
            f.assertions
                .push(Term::eq(Term::app(OUT, vec![t]), Term::Bool(label)));
        }
    }
    Ok(f)
}

/// Encodes the same question over a prefix tree: one integer constant per
/// node holds the state the node is merged into; tree edges constrain the
/// transition function, labeled nodes constrain acceptance, every node
/// constant is range-bounded, and the root is pinned to state 0.
pub fn encode_expressive(apt: &Apt, n: usize, style: AxiomStyle) -> Result<Formula> {
    check_n(n)?;
    if apt.kind() != MachineKind::Dfa {
        return Err(Error::Input(format!(
            "expressive DFA encoding requires a dfa prefix tree, got {}",
            apt.kind()
        )));
    }
    let mut f = Formula::new();
    f.declare(DELTA, vec![Sort::Int, Sort::Int], Sort::Int);
    f.declare(OUT, vec![Sort::Int], Sort::Bool);
    for q in 0..apt.node_count() {
        f.declare(format!("c{q}"), Vec::new(), Sort::Int);
    }

    for (parent, sym, child) in apt.edges() {
        f.assertions.push(Term::eq(
            Term::app(DELTA, vec![node_constant(parent), Term::Int(sym as i64)]),
            node_constant(child),
        ));
    }
    for q in 0..apt.node_count() {
        if let Some(NodeLabel::Accept(b)) = apt.label(q) {
            f.assertions.push(Term::eq(
                Term::app(OUT, vec![node_constant(q)]),
                Term::Bool(b),
            ));
        }
    }
    for q in 0..apt.node_count() {
        f.assertions.push(range_axiom(node_constant(q), n, style));
    }
    f.assertions
        .push(Term::eq(node_constant(apt.root()), Term::Int(0)));
    Ok(f)
}

/// The expressive encoding for transducers: the output function is typed
/// over output indices, labeled per node (Moore) or per tree edge (Mealy),
/// and range-bounded on the full decode grid so models always decode to
/// valid output symbols.
pub fn encode_transducer(apt: &Apt, n: usize, style: AxiomStyle) -> Result<Formula> {
    check_n(n)?;
    let kind = apt.kind();
    if kind == MachineKind::Dfa {
        return Err(Error::Input(
            "transducer encoding requires a moore or mealy prefix tree".into(),
        ));
    }
    let out_size = apt
        .output_alphabet()
        .expect("transducer tree has an output alphabet")
        .len();
    let k = apt.input_alphabet().len();

    let mut f = Formula::new();
    f.declare(DELTA, vec![Sort::Int, Sort::Int], Sort::Int);
    match kind {
        MachineKind::Moore => f.declare(OUT, vec![Sort::Int], Sort::Int),
        MachineKind::Mealy => f.declare(OUT, vec![Sort::Int, Sort::Int], Sort::Int),
        MachineKind::Dfa => unreachable!(),
    }
    for q in 0..apt.node_count() {
        f.declare(format!("c{q}"), Vec::new(), Sort::Int);
    }

    for (parent, sym, child) in apt.edges() {
        f.assertions.push(Term::eq(
            Term::app(DELTA, vec![node_constant(parent), Term::Int(sym as i64)]),
            node_constant(child),
        ));
    }
    match kind {
        MachineKind::Moore => {
            if let Some(y0) = apt.moore_root_output() {
                f.assertions.push(Term::eq(
                    Term::app(OUT, vec![node_constant(apt.root())]),
                    Term::Int(y0 as i64),
                ));
            }
            for q in 0..apt.node_count() {
                if let Some(NodeLabel::Output(o)) = apt.label(q) {
                    f.assertions.push(Term::eq(
                        Term::app(OUT, vec![node_constant(q)]),
                        Term::Int(o as i64),
                    ));
                }
            }
        }
        MachineKind::Mealy => {
            for (parent, sym, child) in apt.edges() {
                let o = match apt.label(child) {
                    Some(NodeLabel::Output(o)) => o,
                    _ => unreachable!("every non-root trace node carries an output"),
                };
                f.assertions.push(Term::eq(
                    Term::app(OUT, vec![node_constant(parent), Term::Int(sym as i64)]),
                    Term::Int(o as i64),
                ));
            }
        }
        MachineKind::Dfa => unreachable!(),
    }
    for q in 0..apt.node_count() {
        f.assertions.push(range_axiom(node_constant(q), n, style));
    }
    f.assertions
        .push(Term::eq(node_constant(apt.root()), Term::Int(0)));
    match kind {
        MachineKind::Moore => {
            for state in 0..n {
                let cell = Term::app(OUT, vec![Term::Int(state as i64)]);
                f.assertions.push(range_axiom(cell, out_size, style));
            }
        }
        MachineKind::Mealy => {
            for state in 0..n {
                for sym in 0..k {
                    let cell =
                        Term::app(OUT, vec![Term::Int(state as i64), Term::Int(sym as i64)]);
                    f.assertions.push(range_axiom(cell, out_size, style));
                }
            }
        }
        MachineKind::Dfa => unreachable!(),
    }
    Ok(f)
}

/// Expected assertion count of [`encode_natural`]: one range axiom per
/// grid cell plus one assertion per string.
pub fn natural_assertion_count(sample: &DfaSample, n: usize) -> usize {
    n * sample.alphabet().len() + sample.count()
}

/// Expected assertion count of [`encode_expressive`]: edges + labeled
/// nodes + range axioms + the root pin.
pub fn expressive_assertion_count(apt: &Apt) -> usize {
    let m = apt.node_count();
    (m - 1) + apt.labeled_count() + m + 1
}

/// Expected assertion count of [`encode_transducer`].
pub fn transducer_assertion_count(apt: &Apt, n: usize) -> usize {
    let m = apt.node_count();
    let k = apt.input_alphabet().len();
    match apt.kind() {
        MachineKind::Mealy => (m - 1) + (m - 1) + m + 1 + n * k,
        MachineKind::Moore => {
            let root_out = if apt.moore_root_output().is_some() { 1 } else { 0 };
            (m - 1) + (apt.labeled_count() + root_out) + m + 1 + n
        }
        MachineKind::Dfa => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apt::{build_apt_dfa, build_apt_traces};
    use crate::automata::Alphabet;
    use crate::samples::TraceSample;

    fn flip_flop_sample() -> DfaSample {
        DfaSample::new(Alphabet::indexed(1), [vec![0]], [vec![], vec![0, 0]]).unwrap()
    }

    #[test]
    fn natural_counts_and_shape() {
        let s = DfaSample::new(Alphabet::indexed(1), [vec![]], []).unwrap();
        let f = encode_natural(&s, 1, AxiomStyle::LinearInequality).unwrap();
        f.validate().unwrap();
        assert_eq!(f.declarations.len(), 2);
        assert_eq!(f.assertions.len(), 2);
        assert_eq!(
            f.assertions[0],
            Term::And(vec![
                Term::ge(
                    Term::app(DELTA, vec![Term::Int(0), Term::Int(0)]),
                    Term::Int(0)
                ),
                Term::lt(
                    Term::app(DELTA, vec![Term::Int(0), Term::Int(0)]),
                    Term::Int(1)
                ),
            ])
        );
        assert_eq!(
            f.assertions[1],
            Term::eq(Term::app(OUT, vec![Term::Int(0)]), Term::Bool(true))
        );

        let f = encode_natural(&flip_flop_sample(), 2, AxiomStyle::BooleanDisjunction).unwrap();
        f.validate().unwrap();
        assert_eq!(f.assertions.len(), 5);
        assert_eq!(
            f.assertions.len(),
            natural_assertion_count(&flip_flop_sample(), 2)
        );
        let stats = f.stats(2);
        assert_eq!(stats.n, 2);
        assert_eq!(stats.assertion_count, 5);
        assert_eq!(stats.declaration_count, 2);
    }

    #[test]
    fn expressive_counts_and_shape() {
        let apt = build_apt_dfa(&flip_flop_sample());
        let f = encode_expressive(&apt, 2, AxiomStyle::BooleanDisjunction).unwrap();
        f.validate().unwrap();
        // 2 edges + 3 labels + 3 ranges + 1 root pin
        assert_eq!(f.assertions.len(), 9);
        assert_eq!(f.assertions.len(), expressive_assertion_count(&apt));
        assert_eq!(f.declarations.len(), 2 + 3);
        assert_eq!(
            f.assertions[0],
            Term::eq(
                Term::app(DELTA, vec![Term::constant("c0"), Term::Int(0)]),
                Term::constant("c1")
            )
        );
        assert_eq!(
            *f.assertions.last().unwrap(),
            Term::eq(Term::constant("c0"), Term::Int(0))
        );
    }

    #[test]
    fn transducer_counts() {
        let s = TraceSample::new(
            MachineKind::Mealy,
            Alphabet::indexed(1),
            Alphabet::indexed(2),
            [(vec![0], vec![0]), (vec![0, 0], vec![0, 1])],
        )
        .unwrap();
        let apt = build_apt_traces(&s).unwrap();
        let f = encode_transducer(&apt, 2, AxiomStyle::LinearInequality).unwrap();
        f.validate().unwrap();
        // 2 edges + 2 edge outputs + 3 node ranges + 1 pin + 2*1 output ranges
        assert_eq!(f.assertions.len(), transducer_assertion_count(&apt, 2));
        assert_eq!(f.assertions.len(), 10);

        let moore = TraceSample::new(
            MachineKind::Moore,
            Alphabet::indexed(1),
            Alphabet::indexed(2),
            [(vec![0], vec![1, 0])],
        )
        .unwrap();
        let apt = build_apt_traces(&moore).unwrap();
        let f = encode_transducer(&apt, 1, AxiomStyle::BooleanDisjunction).unwrap();
        f.validate().unwrap();
        // 1 edge + (1 label + 1 root output) + 2 ranges + 1 pin + 1 output range
        assert_eq!(f.assertions.len(), transducer_assertion_count(&apt, 1));
        assert_eq!(f.assertions.len(), 7);
    }

    #[test]
    fn kind_checks() {
        let apt = build_apt_dfa(&flip_flop_sample());
        assert!(matches!(
            encode_transducer(&apt, 1, AxiomStyle::LinearInequality),
            Err(Error::Input(_))
        ));
        let traces = TraceSample::new(
            MachineKind::Mealy,
            Alphabet::indexed(1),
            Alphabet::indexed(1),
            [(vec![0], vec![0])],
        )
        .unwrap();
        let apt = build_apt_traces(&traces).unwrap();
        assert!(matches!(
            encode_expressive(&apt, 1, AxiomStyle::LinearInequality),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            encode_natural(&flip_flop_sample(), 0, AxiomStyle::LinearInequality),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn single_state_disjunction_collapses() {
        let s = DfaSample::new(Alphabet::indexed(1), [vec![]], []).unwrap();
        let f = encode_natural(&s, 1, AxiomStyle::BooleanDisjunction).unwrap();
        assert_eq!(
            f.assertions[0],
            Term::eq(
                Term::app(DELTA, vec![Term::Int(0), Term::Int(0)]),
                Term::Int(0)
            )
        );
    }
}
