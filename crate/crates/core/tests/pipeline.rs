//! Solver-backed integration tests: encode, check, decode, and the size
//! search, cross-checked against hand computations and the brute-force
//! oracle on small instances.

mod common;

use automin::apt::{build_apt_dfa, build_apt_traces};
use automin::automata::{equivalent, is_consistent, Alphabet, Machine};
use automin::benchgen::{gen_mod_dfa, gen_mod_sample, ModBenchSpec};
use automin::encoding::{encode_expressive, encode_natural, encode_transducer, AxiomStyle};
use automin::samples::{parse_dfa_sample, DfaSample, Sample, TraceSample};
use automin::search::{learn_at_size, learn_minimal, EncodingChoice, LearnOptions, SizeVerdict};
use automin::solver::{check, Verdict};
use automin::{Error, MachineKind};

use common::solver_config;

fn flip_flop_sample() -> DfaSample {
    DfaSample::new(Alphabet::indexed(1), [vec![0]], [vec![], vec![0, 0]]).unwrap()
}

fn opts(kind: MachineKind, encoding: EncodingChoice, style: AxiomStyle) -> LearnOptions {
    let mut o = LearnOptions::new(kind, solver_config());
    o.encoding = encoding;
    o.style = style;
    o
}

fn all_dfa_configs() -> Vec<(EncodingChoice, AxiomStyle)> {
    vec![
        (EncodingChoice::Natural, AxiomStyle::BooleanDisjunction),
        (EncodingChoice::Natural, AxiomStyle::LinearInequality),
        (EncodingChoice::Expressive, AxiomStyle::BooleanDisjunction),
        (EncodingChoice::Expressive, AxiomStyle::LinearInequality),
    ]
}

#[test]
fn natural_trivial_sat() {
    let sample = DfaSample::new(Alphabet::indexed(1), [vec![]], []).unwrap();
    let f = encode_natural(&sample, 1, AxiomStyle::LinearInequality).unwrap();
    assert!(matches!(
        check(&f, &solver_config()).unwrap(),
        Verdict::Sat(_)
    ));
}

#[test]
fn natural_flip_flop_unsat_at_one_sat_at_two() {
    for style in [AxiomStyle::BooleanDisjunction, AxiomStyle::LinearInequality] {
        let f = encode_natural(&flip_flop_sample(), 1, style).unwrap();
        assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Unsat));
        let f = encode_natural(&flip_flop_sample(), 2, style).unwrap();
        assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Sat(_)));
    }
}

#[test]
fn expressive_flip_flop_unsat_at_one_sat_at_two() {
    let apt = build_apt_dfa(&flip_flop_sample());
    for style in [AxiomStyle::BooleanDisjunction, AxiomStyle::LinearInequality] {
        let f = encode_expressive(&apt, 1, style).unwrap();
        assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Unsat));
        let f = encode_expressive(&apt, 2, style).unwrap();
        assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Sat(_)));
    }
}

#[test]
fn mealy_conflicting_outputs_need_two_states() {
    // one trace says a -> x, the longer one needs a different output on
    // the second a
    let traces = TraceSample::new(
        MachineKind::Mealy,
        Alphabet::indexed(1),
        Alphabet::indexed(2),
        [(vec![0], vec![0]), (vec![0, 0], vec![0, 1])],
    )
    .unwrap();
    let apt = build_apt_traces(&traces).unwrap();
    let f = encode_transducer(&apt, 1, AxiomStyle::LinearInequality).unwrap();
    assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Unsat));
    let f = encode_transducer(&apt, 2, AxiomStyle::LinearInequality).unwrap();
    assert!(matches!(check(&f, &solver_config()).unwrap(), Verdict::Sat(_)));
}

#[test]
fn mealy_single_trace_one_state() {
    let traces = TraceSample::new(
        MachineKind::Mealy,
        Alphabet::indexed(1),
        Alphabet::indexed(1),
        [(vec![0], vec![0])],
    )
    .unwrap();
    let sample = Sample::Traces(traces);
    let o = opts(
        MachineKind::Mealy,
        EncodingChoice::Expressive,
        AxiomStyle::BooleanDisjunction,
    );
    let result = learn_minimal(&sample, &o).unwrap();
    assert_eq!(result.minimal_n, 1);
    let mealy = result.machine.as_mealy().unwrap();
    assert_eq!(mealy.output(0, 0), 0);
}

#[test]
fn learn_at_size_examples() {
    let sample = Sample::Dfa(flip_flop_sample());
    let o = opts(
        MachineKind::Dfa,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    let out = learn_at_size(&sample, 1, &o).unwrap();
    assert_eq!(out.verdict, SizeVerdict::Unsat);
    assert!(out.machine.is_none());

    let out = learn_at_size(&sample, 2, &o).unwrap();
    assert_eq!(out.verdict, SizeVerdict::Sat);
    let machine = out.machine.unwrap();
    assert_eq!(machine.state_count(), 2);
    assert!(is_consistent(&machine, &sample).unwrap().is_ok());
}

#[test]
fn learn_minimal_trivial() {
    let sample = Sample::Dfa(DfaSample::new(Alphabet::indexed(1), [vec![]], []).unwrap());
    for (encoding, style) in all_dfa_configs() {
        let result = learn_minimal(&sample, &opts(MachineKind::Dfa, encoding, style)).unwrap();
        assert_eq!(result.minimal_n, 1);
    }
}

#[test]
fn learn_minimal_mod4_equivalent_to_generator() {
    let sample = Sample::Dfa(gen_mod_sample(&ModBenchSpec { k: 4, max_len: 12 }).unwrap());
    let o = opts(
        MachineKind::Dfa,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    let result = learn_minimal(&sample, &o).unwrap();
    assert_eq!(result.minimal_n, 4);
    assert_eq!(
        result.stats.iter().map(|r| r.verdict.as_str()).collect::<Vec<_>>(),
        vec!["unsat", "unsat", "unsat", "sat"]
    );
    let d4 = Machine::Dfa(gen_mod_dfa(4).unwrap());
    assert!(equivalent(&result.machine, &d4).unwrap().is_equivalent());
}

#[test]
fn learn_mod3_at_exact_size() {
    let sample = Sample::Dfa(gen_mod_sample(&ModBenchSpec { k: 3, max_len: 9 }).unwrap());
    let o = opts(
        MachineKind::Dfa,
        EncodingChoice::Natural,
        AxiomStyle::BooleanDisjunction,
    );
    let out = learn_at_size(&sample, 3, &o).unwrap();
    assert_eq!(out.verdict, SizeVerdict::Sat);
    let d3 = Machine::Dfa(gen_mod_dfa(3).unwrap());
    assert!(equivalent(&out.machine.unwrap(), &d3).unwrap().is_equivalent());
}

#[test]
fn learn_minimal_alternating_mealy() {
    // characterizing sample of the 2-state alternating-output machine
    let m = automin::automata::MealyMachine::new(
        Alphabet::new(["a"]).unwrap(),
        Alphabet::new(["p", "q"]).unwrap(),
        vec![vec![1], vec![0]],
        vec![vec![0], vec![1]],
    )
    .unwrap();
    let sample = Sample::Traces(automin::benchgen::characterizing_sample(&m, 0).unwrap());
    let o = opts(
        MachineKind::Mealy,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    let result = learn_minimal(&sample, &o).unwrap();
    assert_eq!(result.minimal_n, 2);
    assert!(
        equivalent(&result.machine, &Machine::Mealy(m))
            .unwrap()
            .is_equivalent()
    );
}

#[test]
fn bound_exceeded_and_stats() {
    let sample = Sample::Dfa(flip_flop_sample());
    let mut o = opts(
        MachineKind::Dfa,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    o.max_n = Some(1);
    let failure = learn_minimal(&sample, &o).unwrap_err();
    assert!(matches!(failure.error, Error::BoundExceeded { max_n: 1 }));
    assert_eq!(failure.stats.len(), 1);
    assert_eq!(failure.stats[0].verdict, "unsat");
}

#[test]
fn timeout_reports_unknown() {
    // a 1ms budget cannot even launch the solver on this instance
    let sample = Sample::Dfa(gen_mod_sample(&ModBenchSpec { k: 6, max_len: 30 }).unwrap());
    let mut o = opts(
        MachineKind::Dfa,
        EncodingChoice::Natural,
        AxiomStyle::BooleanDisjunction,
    );
    o.solver.timeout = std::time::Duration::from_nanos(1);
    let failure = learn_minimal(&sample, &o).unwrap_err();
    match failure.error {
        Error::UnknownVerdict { n: 1, reason } => assert_eq!(reason, "timeout"),
        other => panic!("expected an unknown verdict, got {other}"),
    }
}

#[test]
fn mod_k_minimal_needs_k_states_learner() {
    // at sample length 2k-1 the minimal consistent machine already has k
    // states: k-1 is unsat, k is sat
    for k in 2..=8 {
        let sample = Sample::Dfa(
            gen_mod_sample(&ModBenchSpec {
                k,
                max_len: 2 * k - 1,
            })
            .unwrap(),
        );
        let o = opts(
            MachineKind::Dfa,
            EncodingChoice::Expressive,
            AxiomStyle::LinearInequality,
        );
        let below = learn_at_size(&sample, k - 1, &o).unwrap();
        assert_eq!(below.verdict, SizeVerdict::Unsat, "k={k}");
        let at = learn_at_size(&sample, k, &o).unwrap();
        assert_eq!(at.verdict, SizeVerdict::Sat, "k={k}");
    }
}

#[test]
fn moore_learning_from_converted_traces() {
    // mealy traces of the alternating machine, prepended with a shared
    // initial output, learned as a moore machine
    let m = automin::automata::MealyMachine::new(
        Alphabet::indexed(1),
        Alphabet::indexed(2),
        vec![vec![1], vec![0]],
        vec![vec![0], vec![1]],
    )
    .unwrap();
    let mealy_sample = automin::benchgen::characterizing_sample(&m, 0).unwrap();
    let y0 = 0;
    let moore_traces: Vec<(Vec<usize>, Vec<usize>)> = mealy_sample
        .traces()
        .iter()
        .map(|(x, y)| {
            let mut out = vec![y0];
            out.extend_from_slice(y);
            (x.clone(), out)
        })
        .collect();
    let moore_sample = TraceSample::new(
        MachineKind::Moore,
        Alphabet::indexed(1),
        Alphabet::indexed(2),
        moore_traces.clone(),
    )
    .unwrap();
    let o = opts(
        MachineKind::Moore,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    let result = learn_minimal(&Sample::Traces(moore_sample), &o).unwrap();
    let learned = result.machine.as_moore().unwrap();
    for (x, y) in &moore_traces {
        assert_eq!(&learned.transduce_indices(x), y);
    }
}

#[test]
fn style_and_encoding_agree_on_flip_flop() {
    let sample = Sample::Dfa(flip_flop_sample());
    for n in 1..=3 {
        let mut verdicts = Vec::new();
        for (encoding, style) in all_dfa_configs() {
            let out = learn_at_size(&sample, n, &opts(MachineKind::Dfa, encoding, style)).unwrap();
            verdicts.push(out.verdict.as_str().to_string());
        }
        assert!(
            verdicts.windows(2).all(|w| w[0] == w[1]),
            "n={n}: {verdicts:?}"
        );
    }
}

#[test]
fn solver_error_for_missing_binary() {
    let sample = Sample::Dfa(flip_flop_sample());
    let mut o = opts(
        MachineKind::Dfa,
        EncodingChoice::Expressive,
        AxiomStyle::LinearInequality,
    );
    o.solver = automin::solver::SolverConfig::new(vec!["/nonexistent/solver".into()]);
    let failure = learn_minimal(&sample, &o).unwrap_err();
    assert!(matches!(failure.error, Error::Solver(_)));
}

#[test]
fn emit_smt_writes_one_script_per_size() {
    let dir = std::env::temp_dir().join(format!("automin-emit-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let sample = Sample::Dfa(flip_flop_sample());
    let mut o = opts(
        MachineKind::Dfa,
        EncodingChoice::Expressive,
        AxiomStyle::BooleanDisjunction,
    );
    o.emit_smt = Some(automin::search::EmitSmt {
        dir: dir.clone(),
        basename: "flipflop".into(),
    });
    let result = learn_minimal(&sample, &o).unwrap();
    assert_eq!(result.minimal_n, 2);
    for n in 1..=2 {
        let path = dir.join(format!("flipflop-n{n}.smt2"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("(set-logic QF_UFLIA)\n"));
        assert!(text.ends_with("(check-sat)\n"));
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn parsed_sample_learns_like_the_spec_example() {
    // accept "0", reject eps: two states needed? no — one rejecting
    // initial state with an accepting successor: minimal is 2
    let sample = Sample::Dfa(parse_dfa_sample("2 1\n1 1 0\n0 0\n").unwrap());
    let o = opts(
        MachineKind::Dfa,
        EncodingChoice::Natural,
        AxiomStyle::LinearInequality,
    );
    let result = learn_minimal(&sample, &o).unwrap();
    assert_eq!(result.minimal_n, 2);
}
