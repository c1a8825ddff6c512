//! The augmented prefix tree: a partial, tree-shaped machine that is
//! exactly consistent with a sample. One node per distinct sampled prefix;
//! node 0 is the root (the empty prefix). Nodes are numbered in
//! breadth-first order with children visited in symbol order, so identical
//! samples always produce identical trees.

use std::collections::BTreeMap;

use crate::automata::{Alphabet, MachineKind};
use crate::error::{Error, Result};
use crate::samples::{DfaSample, TraceSample};

/// What a node knows about the machine being learned: an acceptance bit
/// (DFA samples) or an output symbol (trace samples).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Accept(bool),
    Output(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Apt {
    kind: MachineKind,
    input_alphabet: Alphabet,
    output_alphabet: Option<Alphabet>,
    /// children[q] maps symbol -> child node; tree edges only.
    children: Vec<BTreeMap<usize, usize>>,
    parent: Vec<Option<(usize, usize)>>,
    labels: Vec<Option<NodeLabel>>,
    moore_root_output: Option<usize>,
}

impl Apt {
    pub fn kind(&self) -> MachineKind {
        self.kind
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input_alphabet
    }

    pub fn output_alphabet(&self) -> Option<&Alphabet> {
        self.output_alphabet.as_ref()
    }

    /// Number of nodes, including the root.
    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn child(&self, node: usize, symbol: usize) -> Option<usize> {
        self.children[node].get(&symbol).copied()
    }

    /// Tree edges `(parent, symbol, child)` in breadth-first order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(p, ch)| ch.iter().map(move |(&a, &c)| (p, a, c)))
    }

    pub fn label(&self, node: usize) -> Option<NodeLabel> {
        self.labels[node]
    }

    /// Number of labeled nodes (for DFA trees, `|Q_S|`).
    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn moore_root_output(&self) -> Option<usize> {
        self.moore_root_output
    }

    /// The string spelled by the root-to-node path.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut word = Vec::new();
        let mut q = node;
        while let Some((p, a)) = self.parent[q] {
            word.push(a);
            q = p;
        }
        word.reverse();
        word
    }

    /// Runs the partial transition function; `None` once it leaves defined
    /// territory.
    pub fn run(&self, word: &[usize]) -> Option<usize> {
        let mut q = 0;
        for &a in word {
            q = self.child(q, a)?;
        }
        Some(q)
    }

    /// Graphviz rendering for debugging; node labels are the prefixes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph apt {\n  rankdir=LR;\n  node [shape=circle];\n");
        for q in 0..self.node_count() {
            let prefix = self.input_alphabet.render(&self.path(q));
            let prefix = if prefix.is_empty() { "\u{3b5}".to_string() } else { prefix };
            let decoration = match self.labels[q] {
                Some(NodeLabel::Accept(true)) => ", color=green, shape=doublecircle",
                Some(NodeLabel::Accept(false)) => ", color=red",
                Some(NodeLabel::Output(_)) => ", color=blue",
                None => "",
            };
            let text = match (self.labels[q], self.moore_root_output) {
                (Some(NodeLabel::Output(o)), _) => format!(
                    "{prefix} / {}",
                    self.output_alphabet.as_ref().unwrap().symbol(o)
                ),
                (None, Some(o)) if q == 0 => format!(
                    "{prefix} / {}",
                    self.output_alphabet.as_ref().unwrap().symbol(o)
                ),
                _ => prefix,
            };
            out.push_str(&format!("  n{q} [label=\"{text}\"{decoration}];\n"));
        }
        for (p, a, c) in self.edges() {
            out.push_str(&format!(
                "  n{p} -> n{c} [label=\"{}\"];\n",
                self.input_alphabet.symbol(a)
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Trie under construction, before breadth-first renumbering.
struct TrieBuilder {
    children: Vec<BTreeMap<usize, usize>>,
    labels: Vec<Option<NodeLabel>>,
}

impl TrieBuilder {
    fn new() -> Self {
        TrieBuilder {
            children: vec![BTreeMap::new()],
            labels: vec![None],
        }
    }

    fn walk(&mut self, node: usize, symbol: usize) -> usize {
        if let Some(&c) = self.children[node].get(&symbol) {
            return c;
        }
        let c = self.children.len();
        self.children.push(BTreeMap::new());
        self.labels.push(None);
        self.children[node].insert(symbol, c);
        c
    }

    /// Renumbers nodes breadth-first (children in symbol order) and packs
    /// the result.
    fn finish(
        self,
        kind: MachineKind,
        input_alphabet: Alphabet,
        output_alphabet: Option<Alphabet>,
        moore_root_output: Option<usize>,
    ) -> Apt {
        let m = self.children.len();
        let mut order = vec![usize::MAX; m]; // old id -> new id
        let mut queue = std::collections::VecDeque::from([0usize]);
        let mut next = 0;
        while let Some(old) = queue.pop_front() {
            order[old] = next;
            next += 1;
            for &c in self.children[old].values() {
                queue.push_back(c);
            }
        }
        let mut children = vec![BTreeMap::new(); m];
        let mut parent = vec![None; m];
        let mut labels = vec![None; m];
        for (old, ch) in self.children.iter().enumerate() {
            let new_p = order[old];
            labels[new_p] = self.labels[old];
            for (&a, &c) in ch {
                let new_c = order[c];
                children[new_p].insert(a, new_c);
                parent[new_c] = Some((new_p, a));
            }
        }
        Apt {
            kind,
            input_alphabet,
            output_alphabet,
            children,
            parent,
            labels,
            moore_root_output,
        }
    }
}

/// Builds the prefix tree of a labeled-string sample. The tree has one
/// node per distinct prefix of a sampled string and carries acceptance
/// labels exactly on the sampled strings.
pub fn build_apt_dfa(sample: &DfaSample) -> Apt {
    let mut trie = TrieBuilder::new();
    for (word, label) in sample.strings() {
        let mut q = 0;
        for &a in word {
            q = trie.walk(q, a);
        }
        // sample invariants exclude conflicts
        trie.labels[q] = Some(NodeLabel::Accept(label));
    }
    trie.finish(MachineKind::Dfa, sample.alphabet().clone(), None, None)
}

/// Builds the prefix tree of a trace sample. Every non-root node carries
/// the output its incoming trace position prescribes; overlapping traces
/// must agree, otherwise the sample is unsatisfiable and rejected here.
pub fn build_apt_traces(sample: &TraceSample) -> Result<Apt> {
    let mut trie = TrieBuilder::new();
    let mut moore_root_output = None;
    for (x, y) in sample.traces() {
        let outputs = match sample.kind() {
            MachineKind::Moore => {
                moore_root_output = Some(y[0]);
                &y[1..]
            }
            _ => &y[..],
        };
        let mut q = 0;
        for (i, &a) in x.iter().enumerate() {
            q = trie.walk(q, a);
            let label = NodeLabel::Output(outputs[i]);
            match trie.labels[q] {
                None => trie.labels[q] = Some(label),
                Some(existing) if existing == label => {}
                Some(_) => {
                    return Err(Error::Conflict(format!(
                        "traces assign different outputs to prefix \"{}\"",
                        sample.input_alphabet().render(&x[..=i])
                    )));
                }
            }
        }
    }
    Ok(trie.finish(
        sample.kind(),
        sample.input_alphabet().clone(),
        Some(sample.output_alphabet().clone()),
        moore_root_output,
    ))
}
