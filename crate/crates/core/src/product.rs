//! Product of a labeled graph with an epsilon-free NFA.

use crate::graph::{EdgeSource, VertexId};
use crate::nfa::{Nfa, StateId};

/// Index of a product vertex `(v, q)`, laid out as `v * num_states + q`.
pub type ProductVertex = u32;

/// Unlabeled directed graph over (graph vertex, NFA state) pairs, stored as
/// CSR in both directions.
#[derive(Clone, Debug)]
pub struct ProductGraph {
    num_graph_vertices: usize,
    num_states: usize,
    initial: StateId,
    accepting: Vec<bool>,
    out_offsets: Vec<u32>,
    out_targets: Vec<ProductVertex>,
    in_offsets: Vec<u32>,
    in_sources: Vec<ProductVertex>,
}

impl ProductGraph {
    pub fn build<G: EdgeSource + ?Sized>(graph: &G, nfa: &Nfa) -> ProductGraph {
        let ns = nfa.num_states();
        let nv = graph.num_vertices();
        let mut pairs: Vec<(ProductVertex, ProductVertex)> = Vec::new();
        for (q1, label, q2) in nfa.transitions() {
            let (q1, q2) = (*q1 as usize, *q2 as usize);
            graph.for_each_edge(label, &mut |s, d| {
                pairs.push(((s as usize * ns + q1) as u32, (d as usize * ns + q2) as u32));
            });
        }
        pairs.sort_unstable();
        pairs.dedup();

        let total = nv * ns;
        let (out_offsets, out_targets) = csr(total, pairs.iter().map(|&(a, b)| (a, b)));
        let mut reversed: Vec<_> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        reversed.sort_unstable();
        let (in_offsets, in_sources) = csr(total, reversed.into_iter());
        ProductGraph {
            num_graph_vertices: nv,
            num_states: ns,
            initial: nfa.initial(),
            accepting: (0..ns as StateId).map(|q| nfa.is_accepting(q)).collect(),
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_graph_vertices * self.num_states
    }

    pub fn num_edges(&self) -> usize {
        self.out_targets.len()
    }

    pub fn num_graph_vertices(&self) -> usize {
        self.num_graph_vertices
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial_state(&self) -> StateId {
        self.initial
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        self.accepting[q as usize]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states as StateId).filter(|&q| self.accepting[q as usize])
    }

    #[inline]
    pub fn index(&self, v: VertexId, q: StateId) -> ProductVertex {
        (v as usize * self.num_states + q as usize) as ProductVertex
    }

    #[inline]
    pub fn split(&self, p: ProductVertex) -> (VertexId, StateId) {
        let p = p as usize;
        ((p / self.num_states) as VertexId, (p % self.num_states) as StateId)
    }

    #[inline]
    pub fn successors(&self, p: ProductVertex) -> &[ProductVertex] {
        let p = p as usize;
        &self.out_targets[self.out_offsets[p] as usize..self.out_offsets[p + 1] as usize]
    }

    #[inline]
    pub fn predecessors(&self, p: ProductVertex) -> &[ProductVertex] {
        let p = p as usize;
        &self.in_sources[self.in_offsets[p] as usize..self.in_offsets[p + 1] as usize]
    }

    /// Graph vertices `x` such that some path from `(x, q0)` reaches an
    /// accepting product vertex: a backward traversal from all accepting
    /// vertices whose graph component is in `targets` (all when `None`).
    pub fn sources_reaching(&self, targets: Option<&[VertexId]>) -> Vec<VertexId> {
        let mut seen = vec![false; self.num_vertices()];
        let mut stack = Vec::new();
        let seed = |v: VertexId, seen: &mut Vec<bool>, stack: &mut Vec<ProductVertex>| {
            for q in self.accepting_states() {
                let p = self.index(v, q);
                if !seen[p as usize] {
                    seen[p as usize] = true;
                    stack.push(p);
                }
            }
        };
        match targets {
            Some(ts) => ts.iter().for_each(|&v| seed(v, &mut seen, &mut stack)),
            None => (0..self.num_graph_vertices as VertexId).for_each(|v| seed(v, &mut seen, &mut stack)),
        }
        while let Some(p) = stack.pop() {
            for &prev in self.predecessors(p) {
                if !seen[prev as usize] {
                    seen[prev as usize] = true;
                    stack.push(prev);
                }
            }
        }
        (0..self.num_graph_vertices as VertexId)
            .filter(|&v| seen[self.index(v, self.initial) as usize])
            .collect()
    }
}

fn csr(n: usize, sorted: impl Iterator<Item = (u32, u32)>) -> (Vec<u32>, Vec<u32>) {
    let mut offsets = vec![0u32; n + 1];
    let mut targets = Vec::new();
    for (a, b) in sorted {
        offsets[a as usize + 1] += 1;
        targets.push(b);
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    (offsets, targets)
}
