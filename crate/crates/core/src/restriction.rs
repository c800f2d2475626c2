//! (X, Δ)-restrictions: per-key lists of at most Δ tail tuples that contain
//! the whole tuple set of every key of degree at most Δ and exactly Δ tuples
//! of every other key.

use std::collections::{HashMap, HashSet, VecDeque};
use std::io::Write;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{EdgeSource, VertexId};
use crate::nfa::compile_nfa;
use crate::product::ProductGraph;
use crate::query::Var;
use crate::regex::Regex;

/// Caps used by one free-leaf round: light keys have degree at most
/// `delta`, heavy keys saturate `delta_prime = delta + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CapPair {
    pub delta: usize,
    pub delta_prime: usize,
}

impl CapPair {
    pub fn new(delta: usize) -> Self {
        assert!(delta >= 1, "delta must be positive");
        CapPair { delta, delta_prime: delta + 1 }
    }
}

/// Tuples are stored flat, `width` vertex ids each, grouped by key in
/// ascending key order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionTable {
    key: Var,
    tail: Vec<Var>,
    cap: usize,
    keys: Vec<VertexId>,
    /// Tuple index where each key's list starts; one extra sentinel.
    starts: Vec<usize>,
    data: Vec<VertexId>,
}

impl RestrictionTable {
    pub fn empty(key: Var, tail: Vec<Var>, cap: usize) -> Self {
        RestrictionTable { key, tail, cap, keys: Vec::new(), starts: vec![0], data: Vec::new() }
    }

    /// Builds a table from explicit lists. Lists are checked against the
    /// cap, tuple width and pairwise distinctness.
    pub fn from_lists<I>(key: Var, tail: Vec<Var>, cap: usize, lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, Vec<Vec<VertexId>>)>,
    {
        let mut lists: Vec<(VertexId, Vec<Vec<VertexId>>)> = lists.into_iter().collect();
        lists.sort_by_key(|(k, _)| *k);
        let mut b = TableBuilder::new(key, tail, cap);
        for (k, tuples) in lists {
            if tuples.len() > cap {
                return Err(Error::Shape(format!("list for key {k} exceeds cap {cap}")));
            }
            let distinct: HashSet<&Vec<VertexId>> = tuples.iter().collect();
            if distinct.len() != tuples.len() {
                return Err(Error::Shape(format!("list for key {k} repeats a tuple")));
            }
            for t in &tuples {
                if t.len() != b.table.tail.len() {
                    return Err(Error::Shape(format!("tuple width {} for {} tail variables", t.len(), b.table.tail.len())));
                }
                b.push(k, t);
            }
        }
        Ok(b.finish())
    }

    pub fn key(&self) -> &Var {
        &self.key
    }

    pub fn tail(&self) -> &[Var] {
        &self.tail
    }

    pub fn width(&self) -> usize {
        self.tail.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Keys with a non-empty list, ascending.
    pub fn keys(&self) -> &[VertexId] {
        &self.keys
    }

    /// Total number of stored tuples.
    pub fn len(&self) -> usize {
        *self.starts.last().expect("sentinel")
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn slot(&self, x: VertexId) -> Option<usize> {
        self.keys.binary_search(&x).ok()
    }

    fn slot_tuples(&self, slot: usize) -> impl Iterator<Item = &[VertexId]> + '_ {
        let w = self.width();
        (self.starts[slot]..self.starts[slot + 1]).map(move |i| &self.data[i * w..(i + 1) * w])
    }

    /// Number of tuples stored for `x`.
    pub fn degree(&self, x: VertexId) -> usize {
        self.slot(x).map_or(0, |s| self.starts[s + 1] - self.starts[s])
    }

    pub fn tuples(&self, x: VertexId) -> impl Iterator<Item = &[VertexId]> + '_ {
        let range = match self.slot(x) {
            Some(s) => s..s + 1,
            None => 0..0,
        };
        range.flat_map(move |s| self.slot_tuples(s))
    }

    /// `(key, list)` pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Vec<&[VertexId]>)> + '_ {
        self.keys.iter().enumerate().map(move |(s, &k)| (k, self.slot_tuples(s).collect()))
    }

    /// Writes `x<TAB>z1,...,zm` per stored tuple.
    pub fn dump_tsv<W: Write>(&self, mut out: W, name: impl Fn(VertexId) -> String) -> std::io::Result<()> {
        for (s, &k) in self.keys.iter().enumerate() {
            for t in self.slot_tuples(s) {
                let tail: Vec<String> = t.iter().map(|&v| name(v)).collect();
                writeln!(out, "{}\t{}", name(k), tail.join(","))?;
            }
        }
        Ok(())
    }
}

/// Appends tuples key by key; keys must arrive in ascending order.
struct TableBuilder {
    table: RestrictionTable,
}

impl TableBuilder {
    fn new(key: Var, tail: Vec<Var>, cap: usize) -> Self {
        TableBuilder { table: RestrictionTable::empty(key, tail, cap) }
    }

    fn push(&mut self, k: VertexId, tuple: &[VertexId]) {
        let t = &mut self.table;
        if t.keys.last() != Some(&k) {
            debug_assert!(t.keys.last().is_none_or(|&last| last < k));
            t.keys.push(k);
            t.starts.push(*t.starts.last().expect("sentinel"));
        }
        t.data.extend_from_slice(tuple);
        *t.starts.last_mut().expect("sentinel") += 1;
    }

    fn finish(self) -> RestrictionTable {
        self.table
    }
}

/// Above this cap, list membership is tracked in a hash set instead of
/// scanning the list.
const LINEAR_SCAN_CAP: usize = 16;

/// Propagates `s`, a (Y, Δ)-restriction of some `S(Y, Z)`, through the RPQ
/// `regex(X, Y)` over `graph`, giving an (X, Δ)-restriction of
/// `regex(X, Y) ∧ S(Y, Z)` keyed by `key`. Inverted atoms are handled by the
/// caller passing the inverse expression and a transposed view.
pub fn propagate<G: EdgeSource + ?Sized>(
    graph: &G,
    regex: &Regex,
    key: Var,
    s: &RestrictionTable,
    delta: usize,
) -> Result<RestrictionTable> {
    if s.cap() != delta {
        return Err(Error::CapMismatch { table: s.cap(), requested: delta });
    }
    let nfa = compile_nfa(regex);
    let product = ProductGraph::build(graph, &nfa);

    // Intern the tail tuples of s.
    let width = s.width();
    let mut ids: HashMap<&[VertexId], u32> = HashMap::new();
    let mut pool: Vec<VertexId> = Vec::new();
    let mut seeds: Vec<(VertexId, SmallVec<[u32; 4]>)> = Vec::with_capacity(s.keys().len());
    for (slot, &y) in s.keys().iter().enumerate() {
        if y as usize >= product.num_graph_vertices() {
            continue;
        }
        let mut list = SmallVec::new();
        for t in s.slot_tuples(slot) {
            let next = ids.len() as u32;
            let id = *ids.entry(t).or_insert_with(|| {
                pool.extend_from_slice(t);
                next
            });
            list.push(id);
        }
        seeds.push((y, list));
    }

    let mut lists: Vec<SmallVec<[u32; 4]>> = vec![SmallVec::new(); product.num_vertices()];
    let mut members: HashSet<u64> = HashSet::new();
    let hashed = delta > LINEAR_SCAN_CAP;
    let mut queue: VecDeque<(u32, u32)> = VecDeque::new();
    let mut offer = |p: u32, id: u32, lists: &mut Vec<SmallVec<[u32; 4]>>, queue: &mut VecDeque<(u32, u32)>| {
        let list = &mut lists[p as usize];
        if list.len() >= delta {
            return;
        }
        let fresh = if hashed { members.insert((p as u64) << 32 | id as u64) } else { !list.contains(&id) };
        if fresh {
            list.push(id);
            queue.push_back((p, id));
        }
    };

    for (y, list) in &seeds {
        for q in product.accepting_states() {
            let p = product.index(*y, q);
            for &id in list {
                offer(p, id, &mut lists, &mut queue);
            }
        }
    }
    while let Some((p, id)) = queue.pop_front() {
        for &prev in product.predecessors(p) {
            offer(prev, id, &mut lists, &mut queue);
        }
    }

    let mut b = TableBuilder::new(key, s.tail().to_vec(), delta);
    let q0 = product.initial_state();
    for x in 0..product.num_graph_vertices() as VertexId {
        for &id in &lists[product.index(x, q0) as usize] {
            let i = id as usize * width;
            b.push(x, &pool[i..i + width]);
        }
    }
    Ok(b.finish())
}

/// The identity relation `{(v, v)}` over all vertices, keyed by `key` with
/// tail `[tail]`.
pub fn identity_table(num_vertices: usize, key: Var, tail: Var, cap: usize) -> RestrictionTable {
    let mut b = TableBuilder::new(key, vec![tail], cap);
    for v in 0..num_vertices as VertexId {
        b.push(v, &[v]);
    }
    b.finish()
}

/// An (X, Δ)-restriction of the RPQ relation `regex(X, Y)`.
pub fn restrict_single_rpq<G: EdgeSource + ?Sized>(
    graph: &G,
    regex: &Regex,
    key: Var,
    tail: Var,
    delta: usize,
) -> Result<RestrictionTable> {
    let id = identity_table(graph.num_vertices(), tail.clone(), tail, delta);
    propagate(graph, regex, key, &id, delta)
}

/// Joins two restrictions on their shared key: per key, the row-major cross
/// product of the two lists truncated to Δ tuples.
pub fn compose(a: &RestrictionTable, b: &RestrictionTable, delta: usize) -> Result<RestrictionTable> {
    for t in [a, b] {
        if t.cap() != delta {
            return Err(Error::CapMismatch { table: t.cap(), requested: delta });
        }
    }
    if a.key() != b.key() {
        return Err(Error::Shape(format!("composing tables keyed by {} and {}", a.key(), b.key())));
    }
    if let Some(v) = a.tail().iter().find(|v| b.tail().contains(v)) {
        return Err(Error::OverlappingTails(v.to_string()));
    }
    let mut tail = a.tail().to_vec();
    tail.extend_from_slice(b.tail());
    let mut out = TableBuilder::new(a.key().clone(), tail, delta);
    let mut row: Vec<VertexId> = Vec::with_capacity(a.width() + b.width());
    let (mut i, mut j) = (0, 0);
    while i < a.keys.len() && j < b.keys.len() {
        let (ka, kb) = (a.keys[i], b.keys[j]);
        if ka < kb {
            i += 1;
        } else if kb < ka {
            j += 1;
        } else {
            let mut emitted = 0;
            'outer: for ta in a.slot_tuples(i) {
                for tb in b.slot_tuples(j) {
                    if emitted == delta {
                        break 'outer;
                    }
                    row.clear();
                    row.extend_from_slice(ta);
                    row.extend_from_slice(tb);
                    out.push(ka, &row);
                    emitted += 1;
                }
            }
            i += 1;
            j += 1;
        }
    }
    Ok(out.finish())
}
