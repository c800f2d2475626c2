//! Epsilon-free NFAs compiled from [`Regex`] via Thompson construction
//! followed by epsilon elimination and pruning of unreachable states.

use std::collections::BTreeSet;

use crate::regex::{Label, Regex};

pub type StateId = u32;

#[derive(Clone, Debug)]
pub struct Nfa {
    num_states: usize,
    initial: StateId,
    accepting: Vec<bool>,
    transitions: Vec<(StateId, Label, StateId)>,
    alphabet: BTreeSet<Label>,
}

impl Nfa {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, state: StateId) -> bool {
        self.accepting[state as usize]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.accepting.iter().enumerate().filter(|(_, &a)| a).map(|(s, _)| s as StateId)
    }

    pub fn transitions(&self) -> &[(StateId, Label, StateId)] {
        &self.transitions
    }

    pub fn alphabet(&self) -> &BTreeSet<Label> {
        &self.alphabet
    }

    /// Whether the NFA accepts the given word.
    pub fn accepts(&self, word: &[Label]) -> bool {
        let mut current = vec![false; self.num_states];
        current[self.initial as usize] = true;
        for label in word {
            let mut next = vec![false; self.num_states];
            for (from, l, to) in &self.transitions {
                if current[*from as usize] && l == label {
                    next[*to as usize] = true;
                }
            }
            current = next;
        }
        current.iter().zip(&self.accepting).any(|(&c, &a)| c && a)
    }
}

/// Thompson fragment builder; `None` labels are epsilon moves.
struct Thompson {
    edges: Vec<Vec<(Option<Label>, usize)>>,
}

impl Thompson {
    fn state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn edge(&mut self, from: usize, label: Option<Label>, to: usize) {
        self.edges[from].push((label, to));
    }

    /// Returns (start, end) of the fragment for `re`.
    fn build(&mut self, re: &Regex) -> (usize, usize) {
        match re {
            Regex::Epsilon => {
                let s = self.state();
                let e = self.state();
                self.edge(s, None, e);
                (s, e)
            }
            Regex::Symbol(label) => {
                let s = self.state();
                let e = self.state();
                self.edge(s, Some(label.clone()), e);
                (s, e)
            }
            Regex::Concat(l, r) => {
                let (ls, le) = self.build(l);
                let (rs, re_) = self.build(r);
                self.edge(le, None, rs);
                (ls, re_)
            }
            Regex::Alt(l, r) => {
                let s = self.state();
                let (ls, le) = self.build(l);
                let (rs, re_) = self.build(r);
                let e = self.state();
                self.edge(s, None, ls);
                self.edge(s, None, rs);
                self.edge(le, None, e);
                self.edge(re_, None, e);
                (s, e)
            }
            Regex::Star(inner) => {
                let s = self.state();
                let (is, ie) = self.build(inner);
                let e = self.state();
                self.edge(s, None, is);
                self.edge(s, None, e);
                self.edge(ie, None, is);
                self.edge(ie, None, e);
                (s, e)
            }
        }
    }

    fn closure(&self, from: usize) -> Vec<usize> {
        let mut seen = vec![false; self.edges.len()];
        let mut stack = vec![from];
        seen[from] = true;
        let mut out = Vec::new();
        while let Some(s) = stack.pop() {
            out.push(s);
            for (label, to) in &self.edges[s] {
                if label.is_none() && !seen[*to] {
                    seen[*to] = true;
                    stack.push(*to);
                }
            }
        }
        out
    }
}

pub fn compile_nfa(re: &Regex) -> Nfa {
    let mut t = Thompson { edges: Vec::new() };
    let (start, end) = t.build(re);

    // Epsilon elimination: p --σ--> r whenever some q in closure(p) has q --σ--> r.
    let n = t.edges.len();
    let mut accepting = vec![false; n];
    let mut moves: Vec<Vec<(Label, usize)>> = vec![Vec::new(); n];
    for p in 0..n {
        for q in t.closure(p) {
            if q == end {
                accepting[p] = true;
            }
            for (label, r) in &t.edges[q] {
                if let Some(label) = label {
                    moves[p].push((label.clone(), *r));
                }
            }
        }
        moves[p].sort();
        moves[p].dedup();
    }

    // Keep only states reachable from the start, renumbered in BFS order.
    let mut index = vec![u32::MAX; n];
    let mut order = vec![start];
    index[start] = 0;
    let mut head = 0;
    while head < order.len() {
        let p = order[head];
        head += 1;
        for (_, r) in &moves[p] {
            if index[*r] == u32::MAX {
                index[*r] = order.len() as u32;
                order.push(*r);
            }
        }
    }

    let mut transitions = Vec::new();
    for &p in &order {
        for (label, r) in &moves[p] {
            transitions.push((index[p], label.clone(), index[*r]));
        }
    }
    let alphabet = transitions.iter().map(|(_, l, _)| l.clone()).collect();
    Nfa {
        num_states: order.len(),
        initial: 0,
        accepting: order.iter().map(|&p| accepting[p]).collect(),
        transitions,
        alphabet,
    }
}
