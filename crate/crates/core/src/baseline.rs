//! Materialization engines: every atom is computed in full by product-graph
//! BFS. The baseline then joins with Yannakakis; the oracle uses an
//! independent backtracking join and serves as ground truth in tests.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::graph::{EdgeSource, VertexId};
use crate::join::{yannakakis, BindingRelation};
use crate::nfa::compile_nfa;
use crate::product::ProductGraph;
use crate::query::{check_acyclic, Crpq, Var};
use crate::regex::Regex;

/// Default cap on intermediate rows for the oracle.
pub const ORACLE_ROW_LIMIT: usize = 10_000_000;

/// All `(x, y)` pairs connected by a path whose label word matches `regex`,
/// sorted by `x` then `y`. Fails once more than `limit` pairs are produced.
pub fn materialize_pairs<G: EdgeSource + ?Sized>(graph: &G, regex: &Regex, limit: usize) -> Result<Vec<VertexId>> {
    let nfa = compile_nfa(regex);
    let product = ProductGraph::build(graph, &nfa);
    let nv = product.num_graph_vertices();
    let mut visited = vec![u32::MAX; product.num_vertices()];
    let mut hit = vec![u32::MAX; nv];
    let mut stack = Vec::new();
    let mut targets = Vec::new();
    let mut out = Vec::new();
    for x in 0..nv as VertexId {
        let start = product.index(x, product.initial_state());
        visited[start as usize] = x;
        stack.push(start);
        targets.clear();
        while let Some(p) = stack.pop() {
            let (v, q) = product.split(p);
            if product.is_accepting(q) && hit[v as usize] != x {
                hit[v as usize] = x;
                targets.push(v);
            }
            for &n in product.successors(p) {
                if visited[n as usize] != x {
                    visited[n as usize] = x;
                    stack.push(n);
                }
            }
        }
        if out.len() / 2 + targets.len() > limit {
            return Err(Error::ResourceGuard { rows: out.len() / 2 + targets.len(), limit });
        }
        targets.sort_unstable();
        for &y in &targets {
            out.push(x);
            out.push(y);
        }
    }
    Ok(out)
}

/// The full relation of the atom `regex(src, dst)`. For `src == dst` the
/// relation is unary and keeps only the pairs `(x, x)`.
pub fn materialize_rpq<G: EdgeSource + ?Sized>(graph: &G, regex: &Regex, src: Var, dst: Var) -> BindingRelation {
    let pairs = materialize_pairs(graph, regex, usize::MAX).expect("no limit");
    atom_relation(pairs, src, dst)
}

fn atom_relation(pairs: Vec<VertexId>, src: Var, dst: Var) -> BindingRelation {
    if src == dst {
        let loops = pairs.chunks_exact(2).filter(|p| p[0] == p[1]).map(|p| p[0]);
        return BindingRelation::unary(src, loops);
    }
    if pairs.is_empty() {
        return BindingRelation::empty(vec![src, dst]);
    }
    BindingRelation::from_distinct_flat(vec![src, dst], pairs)
}

/// Result of the materialize-then-join baseline.
#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    pub output: BindingRelation,
    /// Largest materialized atom relation.
    pub out_a: usize,
}

pub fn baseline_eval<G: EdgeSource + ?Sized>(q: &Crpq, graph: &G) -> Result<BaselineOutcome> {
    let verdict = check_acyclic(q);
    if !verdict.is_accepted() {
        return Err(Error::Cyclic(verdict.to_string()));
    }
    let mut out_a = 0;
    let mut rels = Vec::with_capacity(q.atoms().len());
    for a in q.atoms() {
        let rel = materialize_rpq(graph, &a.regex, a.src.clone(), a.dst.clone());
        out_a = out_a.max(rel.len());
        rels.push(rel);
    }
    let output = yannakakis(rels, q.free())?;
    Ok(BaselineOutcome { output, out_a })
}

/// Forward and backward adjacency of one materialized atom.
struct AtomIndex {
    src: Var,
    dst: Var,
    forward: HashMap<VertexId, Vec<VertexId>>,
    backward: HashMap<VertexId, Vec<VertexId>>,
    pairs: HashSet<(VertexId, VertexId)>,
}

/// Ground-truth evaluation for any query (cyclic ones included):
/// materialize all atoms, then extend a set of partial assignments one atom
/// at a time, dropping each variable as soon as no later atom and no output
/// column needs it. Aborts once materialized plus intermediate rows exceed
/// `limit`.
pub fn oracle_eval<G: EdgeSource + ?Sized>(q: &Crpq, graph: &G, limit: usize) -> Result<BindingRelation> {
    let mut budget = limit;
    let mut indexes = Vec::new();
    for a in q.atoms() {
        let pairs = materialize_pairs(graph, &a.regex, budget)?;
        budget -= pairs.len() / 2;
        let mut idx = AtomIndex {
            src: a.src.clone(),
            dst: a.dst.clone(),
            forward: HashMap::new(),
            backward: HashMap::new(),
            pairs: HashSet::new(),
        };
        for p in pairs.chunks_exact(2) {
            idx.forward.entry(p[0]).or_default().push(p[1]);
            idx.backward.entry(p[1]).or_default().push(p[0]);
            idx.pairs.insert((p[0], p[1]));
        }
        indexes.push(idx);
    }

    // Visit atoms so that each one after the first touches an already
    // assigned variable whenever possible.
    let mut order: Vec<usize> = Vec::new();
    let mut seen: HashSet<Var> = HashSet::new();
    while order.len() < indexes.len() {
        let next = (0..indexes.len())
            .filter(|i| !order.contains(i))
            .find(|&i| seen.contains(&indexes[i].src) || seen.contains(&indexes[i].dst))
            .or_else(|| (0..indexes.len()).find(|i| !order.contains(i)))
            .expect("an atom remains");
        seen.insert(indexes[next].src.clone());
        seen.insert(indexes[next].dst.clone());
        order.push(next);
    }

    let mut schema: Vec<Var> = Vec::new();
    let mut rows: HashSet<Vec<VertexId>> = HashSet::from([Vec::new()]);
    for (step, &i) in order.iter().enumerate() {
        let atom = &indexes[i];
        let s_pos = schema.iter().position(|v| *v == atom.src);
        let d_pos = schema.iter().position(|v| *v == atom.dst);
        let mut next_schema = schema.clone();
        if s_pos.is_none() {
            next_schema.push(atom.src.clone());
        }
        if d_pos.is_none() && atom.src != atom.dst {
            next_schema.push(atom.dst.clone());
        }
        let later = &order[step + 1..];
        let keep: Vec<usize> = (0..next_schema.len())
            .filter(|&c| {
                let v = &next_schema[c];
                q.is_free(v) || later.iter().any(|&j| indexes[j].src == *v || indexes[j].dst == *v)
            })
            .collect();

        let mut extended: HashSet<Vec<VertexId>> = HashSet::new();
        for row in &rows {
            let candidates: Vec<(VertexId, VertexId)> = match (s_pos.map(|p| row[p]), d_pos.map(|p| row[p])) {
                (Some(s), Some(d)) => atom.pairs.contains(&(s, d)).then_some((s, d)).into_iter().collect(),
                (Some(s), None) => atom.forward.get(&s).into_iter().flatten().map(|&d| (s, d)).collect(),
                (None, Some(d)) => atom.backward.get(&d).into_iter().flatten().map(|&s| (s, d)).collect(),
                (None, None) => atom.pairs.iter().copied().collect(),
            };
            for (sv, dv) in candidates {
                if atom.src == atom.dst && sv != dv {
                    continue;
                }
                let mut full = row.clone();
                if s_pos.is_none() {
                    full.push(sv);
                }
                if d_pos.is_none() && atom.src != atom.dst {
                    full.push(dv);
                }
                if extended.insert(keep.iter().map(|&c| full[c]).collect()) {
                    budget = budget.checked_sub(1).ok_or(Error::ResourceGuard { rows: limit + 1, limit })?;
                }
            }
        }
        schema = keep.iter().map(|&c| next_schema[c].clone()).collect();
        rows = extended;
    }
    let pos: Vec<usize> = q.free().iter().map(|v| schema.iter().position(|s| s == v).expect("free vars kept")).collect();
    Ok(BindingRelation::from_rows(q.free().to_vec(), rows.iter().map(|r| pos.iter().map(|&p| r[p]).collect::<Vec<_>>())))
}
