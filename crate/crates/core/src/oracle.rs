//! Exhaustive search for the smallest consistent machine on tiny
//! instances. This is the ground truth the solver-backed learner is
//! cross-checked against; it shares no code with the encodings or the
//! solver pipeline.

use crate::automata::{Dfa, Machine, MealyMachine, MooreMachine};
use crate::error::{Error, Result};
use crate::samples::Sample;
use crate::MachineKind;

/// Caps on the enumeration. Exceeding `max_machines` aborts with an error
/// rather than returning a possibly-wrong answer.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_n: usize,
    pub max_machines: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_n: 4,
            max_machines: 20_000_000,
        }
    }
}

/// Odometer over `digits` positions in base `base`; iterates all total
/// functions from a finite grid.
struct Odometer {
    digits: Vec<usize>,
    base: usize,
    done: bool,
}

impl Odometer {
    fn new(len: usize, base: usize) -> Self {
        Odometer {
            digits: vec![0; len],
            base,
            done: base == 0 && len > 0,
        }
    }

    fn current(&self) -> &[usize] {
        &self.digits
    }

    fn advance(&mut self) {
        for d in self.digits.iter_mut() {
            *d += 1;
            if *d < self.base {
                return;
            }
            *d = 0;
        }
        self.done = true;
    }
}

fn rows(flat: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return Vec::new();
    }
    flat.chunks(k).map(|c| c.to_vec()).collect()
}

/// Enumerates all machines with 1, 2, ... states (every transition table,
/// every labeling) and returns the first one consistent with the sample,
/// together with its size. `Ok(None)` means no machine with at most
/// `budget.max_n` states exists; that answer is definitive.
pub fn brute_force_minimal(
    sample: &Sample,
    budget: &OracleBudget,
) -> Result<Option<(Machine, usize)>> {
    if budget.max_n == 0 || budget.max_machines == 0 {
        return Err(Error::Input("oracle budget must be positive".into()));
    }
    let k = sample.input_alphabet().len();
    let mut tried: u64 = 0;

    for n in 1..=budget.max_n {
        let mut delta = Odometer::new(n * k, n);
        while !delta.done {
            let label_slots = match sample.kind() {
                MachineKind::Dfa | MachineKind::Moore => n,
                MachineKind::Mealy => n * k,
            };
            let label_base = match sample {
                Sample::Dfa(_) => 2,
                Sample::Traces(t) => t.output_alphabet().len(),
            };
            let mut labels = Odometer::new(label_slots, label_base);
            while !labels.done {
                tried += 1;
                if tried > budget.max_machines {
                    return Err(Error::BudgetExceeded(format!(
                        "enumerated {} candidate machines without an answer",
                        budget.max_machines
                    )));
                }
                if let Some(machine) = consistent_candidate(sample, n, delta.current(), labels.current())
                {
                    return Ok(Some((machine, n)));
                }
                labels.advance();
            }
            delta.advance();
        }
    }
    Ok(None)
}

/// Checks one candidate table against the sample without building a
/// machine value unless it is consistent.
fn consistent_candidate(
    sample: &Sample,
    n: usize,
    delta: &[usize],
    labels: &[usize],
) -> Option<Machine> {
    let k = sample.input_alphabet().len();
    let step = |q: usize, a: usize| delta[q * k + a];
    match sample {
        Sample::Dfa(s) => {
            for (word, expected) in s.strings() {
                let mut q = 0;
                for &a in word {
                    q = step(q, a);
                }
                if (labels[q] == 1) != expected {
                    return None;
                }
            }
            let accepting = (0..n).filter(|&q| labels[q] == 1);
            Some(Machine::Dfa(
                Dfa::new(sample.input_alphabet().clone(), rows(delta, k), accepting)
                    .expect("enumerated tables are well-formed"),
            ))
        }
        Sample::Traces(t) => {
            for (x, y) in t.traces() {
                let mut q = 0;
                match t.kind() {
                    MachineKind::Mealy => {
                        for (i, &a) in x.iter().enumerate() {
                            if labels[q * k + a] != y[i] {
                                return None;
                            }
                            q = step(q, a);
                        }
                    }
                    MachineKind::Moore => {
                        if labels[q] != y[0] {
                            return None;
                        }
                        for (i, &a) in x.iter().enumerate() {
                            q = step(q, a);
                            if labels[q] != y[i + 1] {
                                return None;
                            }
                        }
                    }
                    MachineKind::Dfa => unreachable!(),
                }
            }
            let machine = match t.kind() {
                MachineKind::Mealy => Machine::Mealy(
                    MealyMachine::new(
                        t.input_alphabet().clone(),
                        t.output_alphabet().clone(),
                        rows(delta, k),
                        rows(labels, k),
                    )
                    .expect("enumerated tables are well-formed"),
                ),
                MachineKind::Moore => Machine::Moore(
                    MooreMachine::new(
                        t.input_alphabet().clone(),
                        t.output_alphabet().clone(),
                        rows(delta, k),
                        labels.to_vec(),
                    )
                    .expect("enumerated tables are well-formed"),
                ),
                MachineKind::Dfa => unreachable!(),
            };
            Some(machine)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{is_consistent, Alphabet};
    use crate::samples::{DfaSample, TraceSample};

    #[test]
    fn trivial_one_state() {
        let s = Sample::Dfa(DfaSample::new(Alphabet::indexed(1), [vec![]], []).unwrap());
        let (machine, n) = brute_force_minimal(&s, &OracleBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(n, 1);
        assert!(is_consistent(&machine, &s).unwrap().is_ok());
    }

    #[test]
    fn flip_flop_needs_two_states() {
        let s = Sample::Dfa(
            DfaSample::new(Alphabet::indexed(1), [vec![0]], [vec![], vec![0, 0]]).unwrap(),
        );
        let (machine, n) = brute_force_minimal(&s, &OracleBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(n, 2);
        assert!(is_consistent(&machine, &s).unwrap().is_ok());
    }

    #[test]
    fn mod_k_needs_k_states_up_to_four() {
        for k in [3, 4] {
            let s = Sample::Dfa(
                crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec {
                    k,
                    max_len: 2 * k - 1,
                })
                .unwrap(),
            );
            let (_, n) = brute_force_minimal(&s, &OracleBudget::default())
                .unwrap()
                .unwrap();
            assert_eq!(n, k);
        }
    }

    #[test]
    fn mealy_alternating_needs_two_states() {
        let s = Sample::Traces(
            TraceSample::new(
                MachineKind::Mealy,
                Alphabet::indexed(1),
                Alphabet::indexed(2),
                [(vec![0, 0], vec![0, 1])],
            )
            .unwrap(),
        );
        let (machine, n) = brute_force_minimal(&s, &OracleBudget::default())
            .unwrap()
            .unwrap();
        assert_eq!(n, 2);
        assert!(is_consistent(&machine, &s).unwrap().is_ok());
    }

    #[test]
    fn none_within_bound() {
        let s = Sample::Dfa(
            crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec { k: 4, max_len: 8 })
                .unwrap(),
        );
        let result = brute_force_minimal(
            &s,
            &OracleBudget {
                max_n: 3,
                max_machines: 20_000_000,
            },
        )
        .unwrap();
        assert!(result.is_none());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let s = Sample::Dfa(
            crate::benchgen::gen_mod_sample(&crate::benchgen::ModBenchSpec { k: 4, max_len: 8 })
                .unwrap(),
        );
        let err = brute_force_minimal(
            &s,
            &OracleBudget {
                max_n: 4,
                max_machines: 10,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded(_)));
    }
}
