//! Benchmark families: the cyclic length-counting DFA with its exhaustive
//! unary sample, and seeded random minimal Mealy machines with
//! characterizing samples generated by the classical W-method.

use std::collections::VecDeque;

use crate::automata::{Alphabet, Dfa, MealyMachine};
use crate::error::{Error, Result};
use crate::samples::{DfaSample, TraceSample};
use crate::MachineKind;

/// SplitMix64. The generator is pinned here (not taken from a library) so
/// that a given seed produces the same machines and samples everywhere.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw in `[0, bound)`; the modulo bias is irrelevant at
    /// our bounds and keeps the generator trivially reproducible.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound as u64) as usize
    }
}

/// The mod-k benchmark: sample all unary strings up to `max_len`, labeled
/// by whether their length is a multiple of `k`.
#[derive(Debug, Clone, Copy)]
pub struct ModBenchSpec {
    pub k: usize,
    pub max_len: usize,
}

/// The k-state cycle over the unary alphabet `{a}` accepting exactly the
/// strings whose length is a multiple of `k`.
pub fn gen_mod_dfa(k: usize) -> Result<Dfa> {
    if k < 1 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let alphabet = Alphabet::new(["a"])?;
    let delta = (0..k).map(|i| vec![(i + 1) % k]).collect();
    Dfa::new(alphabet, delta, [0])
}

/// All strings of `a^i` for `i <= max_len`, split into accept/reject by
/// `i mod k`.
pub fn gen_mod_sample(spec: &ModBenchSpec) -> Result<DfaSample> {
    if spec.k < 1 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let alphabet = Alphabet::new(["a"])?;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for len in 0..=spec.max_len {
        let word = vec![0; len];
        if len % spec.k == 0 {
            positives.push(word);
        } else {
            negatives.push(word);
        }
    }
    DfaSample::new(alphabet, positives, negatives)
}

/// Shape of a random Mealy machine: sizes plus the seed that pins it.
#[derive(Debug, Clone, Copy)]
pub struct RandomMachineSpec {
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub seed: u64,
}

/// Draws random Mealy machines until one is reachable from state 0 and
/// minimal, perturbing the seed between attempts. Deterministic in the
/// spec; fails if 1000 attempts produce nothing (some size combinations
/// admit no minimal reachable machine at all).
pub fn gen_random_mealy(spec: &RandomMachineSpec) -> Result<MealyMachine> {
    if spec.states == 0 || spec.inputs == 0 || spec.outputs == 0 {
        return Err(Error::Input(
            "states, inputs and outputs must be positive".into(),
        ));
    }
    let input_alphabet = Alphabet::indexed(spec.inputs);
    let output_alphabet = Alphabet::indexed(spec.outputs);

    for attempt in 0..1000u64 {
        let mut rng = SplitMix64::new(spec.seed.wrapping_add(attempt));
        let delta: Vec<Vec<usize>> = (0..spec.states)
            .map(|_| (0..spec.inputs).map(|_| rng.below(spec.states)).collect())
            .collect();
        let outputs: Vec<Vec<usize>> = (0..spec.states)
            .map(|_| (0..spec.inputs).map(|_| rng.below(spec.outputs)).collect())
            .collect();
        let machine = MealyMachine::new(
            input_alphabet.clone(),
            output_alphabet.clone(),
            delta,
            outputs,
        )?;
        if all_reachable(&machine) && mealy_block_count(&machine) == spec.states {
            return Ok(machine);
        }
    }
    Err(Error::Generation(format!(
        "no reachable minimal mealy machine with {} states, {} inputs, {} outputs found in 1000 attempts from seed {}",
        spec.states, spec.inputs, spec.outputs, spec.seed
    )))
}

fn all_reachable(machine: &MealyMachine) -> bool {
    let n = machine.state_count();
    let k = machine.alphabet().len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(q) = queue.pop_front() {
        for a in 0..k {
            let d = machine.delta(q, a);
            if !seen[d] {
                seen[d] = true;
                count += 1;
                queue.push_back(d);
            }
        }
    }
    count == n
}

/// Partition refinement on a Mealy machine: states start in blocks by
/// output row and split on successor blocks until stable. The machine is
/// minimal iff every state ends up in its own block.
fn mealy_blocks(machine: &MealyMachine) -> Vec<usize> {
    let n = machine.state_count();
    let k = machine.alphabet().len();
    let mut block: Vec<usize> = {
        let mut sig: Vec<(Vec<usize>, usize)> = (0..n)
            .map(|q| ((0..k).map(|a| machine.output(q, a)).collect(), q))
            .collect();
        sig.sort();
        let mut block = vec![0; n];
        let mut next = 0;
        for i in 0..n {
            if i > 0 && sig[i].0 != sig[i - 1].0 {
                next += 1;
            }
            block[sig[i].1] = next;
        }
        block
    };
    loop {
        let mut sig: Vec<(Vec<usize>, usize)> = (0..n)
            .map(|q| {
                let mut s = Vec::with_capacity(k + 1);
                s.push(block[q]);
                for a in 0..k {
                    s.push(block[machine.delta(q, a)]);
                }
                (s, q)
            })
            .collect();
        sig.sort();
        let mut new_block = vec![0; n];
        let mut next = 0;
        for i in 0..n {
            if i > 0 && sig[i].0 != sig[i - 1].0 {
                next += 1;
            }
            new_block[sig[i].1] = next;
        }
        if new_block == block {
            return block;
        }
        block = new_block;
    }
}

fn mealy_block_count(machine: &MealyMachine) -> usize {
    let block = mealy_blocks(machine);
    block.iter().copied().max().map_or(0, |m| m + 1)
}

/// Shortest access strings for every state, following symbols in index
/// order; entry 0 is the empty string.
fn state_cover(machine: &MealyMachine) -> Vec<Vec<usize>> {
    let n = machine.state_count();
    let k = machine.alphabet().len();
    let mut access: Vec<Option<Vec<usize>>> = vec![None; n];
    access[0] = Some(Vec::new());
    let mut queue = VecDeque::from([0usize]);
    while let Some(q) = queue.pop_front() {
        for a in 0..k {
            let d = machine.delta(q, a);
            if access[d].is_none() {
                let mut w = access[q].clone().unwrap();
                w.push(a);
                access[d] = Some(w);
                queue.push_back(d);
            }
        }
    }
    access
        .into_iter()
        .map(|w| w.expect("caller checked reachability"))
        .collect()
}

/// A shortest input sequence whose outputs differ from states `p` and `q`,
/// found by breadth-first search over state pairs.
fn distinguishing_sequence(machine: &MealyMachine, p: usize, q: usize) -> Option<Vec<usize>> {
    let n = machine.state_count();
    let k = machine.alphabet().len();
    let idx = |u: usize, v: usize| u * n + v;
    let mut seen = vec![false; n * n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n * n];
    let mut queue = VecDeque::from([(p, q)]);
    seen[idx(p, q)] = true;
    while let Some((u, v)) = queue.pop_front() {
        for a in 0..k {
            if machine.output(u, a) != machine.output(v, a) {
                let mut word = vec![a];
                let mut cur = idx(u, v);
                while let Some((prev, sym)) = parent[cur] {
                    word.push(sym);
                    cur = prev;
                }
                word.reverse();
                return Some(word);
            }
            let (nu, nv) = (machine.delta(u, a), machine.delta(v, a));
            if !seen[idx(nu, nv)] {
                seen[idx(nu, nv)] = true;
                parent[idx(nu, nv)] = Some((idx(u, v), a));
                queue.push_back((nu, nv));
            }
        }
    }
    None
}

fn sort_words(words: &mut Vec<Vec<usize>>) {
    words.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
    words.dedup();
}

/// Builds a W-method conformance suite for a reachable minimal Mealy
/// machine and transduces every suite input into a trace. Inputs are
/// `P · Σ^{<= extra_depth+1} · W`, with `P` the transition cover and `W` a
/// characterization set of pairwise distinguishing sequences. Any Mealy
/// machine with at most as many states that reproduces the sample is
/// equivalent to the source.
pub fn characterizing_sample(machine: &MealyMachine, extra_depth: usize) -> Result<TraceSample> {
    let n = machine.state_count();
    let k = machine.alphabet().len();
    if !all_reachable(machine) {
        return Err(Error::Input(
            "characterizing sample requires every state to be reachable".into(),
        ));
    }
    if mealy_block_count(machine) != n {
        return Err(Error::Input(
            "characterizing sample requires a minimal machine".into(),
        ));
    }

    let cover = state_cover(machine);
    let mut transition_cover: Vec<Vec<usize>> = Vec::new();
    for w in &cover {
        transition_cover.push(w.clone());
        for a in 0..k {
            let mut e = w.clone();
            e.push(a);
            transition_cover.push(e);
        }
    }
    sort_words(&mut transition_cover);

    let mut w_set: Vec<Vec<usize>> = Vec::new();
    if n == 1 {
        w_set.push(vec![0]);
    } else {
        for p in 0..n {
            for q in p + 1..n {
                let seq = distinguishing_sequence(machine, p, q)
                    .expect("minimal machines distinguish every pair");
                w_set.push(seq);
            }
        }
    }
    sort_words(&mut w_set);

    let mut middles: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..extra_depth + 1 {
        let mut next = Vec::new();
        for m in &middles {
            if m.len() < extra_depth + 1 {
                for a in 0..k {
                    let mut e = m.clone();
                    e.push(a);
                    next.push(e);
                }
            }
        }
        middles.extend(next);
        sort_words(&mut middles);
    }

    let mut inputs: Vec<Vec<usize>> = Vec::new();
    for p in &transition_cover {
        for m in &middles {
            for w in &w_set {
                let mut x = p.clone();
                x.extend_from_slice(m);
                x.extend_from_slice(w);
                inputs.push(x);
            }
        }
    }
    sort_words(&mut inputs);

    let traces: Vec<(Vec<usize>, Vec<usize>)> = inputs
        .into_iter()
        .map(|x| {
            let y = machine.transduce_indices(&x);
            (x, y)
        })
        .collect();
    TraceSample::new(
        MachineKind::Mealy,
        machine.alphabet().clone(),
        machine.output_alphabet().clone(),
        traces,
    )
}
