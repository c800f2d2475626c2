//! Edge-labeled graphs, filter overlays and instance generators.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::regex::Label;

pub type VertexId = u32;
pub type LabelId = u32;

/// Anything that can enumerate the edges carrying a given label.
pub trait EdgeSource {
    fn num_vertices(&self) -> usize;

    fn for_each_edge(&self, label: &Label, f: &mut dyn FnMut(VertexId, VertexId));
}

/// An edge-labeled directed graph with dense vertex ids.
#[derive(Clone, Debug, Default)]
pub struct LabeledGraph {
    names: Vec<String>,
    name_index: HashMap<String, VertexId>,
    labels: Vec<Label>,
    label_index: HashMap<Label, LabelId>,
    /// Per label id: sorted, deduplicated (src, dst) pairs.
    by_label: Vec<Vec<(VertexId, VertexId)>>,
}

impl LabeledGraph {
    pub fn num_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.by_label.iter().map(Vec::len).sum()
    }

    /// N = |V| + |E|.
    pub fn size(&self) -> usize {
        self.num_vertices() + self.num_edges()
    }

    pub fn alphabet(&self) -> &[Label] {
        &self.labels
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.names[v as usize]
    }

    pub fn vertex_id(&self, name: &str) -> Option<VertexId> {
        self.name_index.get(name).copied()
    }

    pub fn label_id(&self, label: &Label) -> Option<LabelId> {
        self.label_index.get(label).copied()
    }

    pub fn edges_with_label(&self, label: &Label) -> &[(VertexId, VertexId)] {
        match self.label_index.get(label) {
            Some(&id) => &self.by_label[id as usize],
            None => &[],
        }
    }

    /// All edges as (src, label, dst), grouped by label.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, &Label, VertexId)> + '_ {
        self.labels
            .iter()
            .zip(&self.by_label)
            .flat_map(|(label, pairs)| pairs.iter().map(move |&(s, d)| (s, label, d)))
    }

    pub fn contains_edge(&self, src: VertexId, label: &Label, dst: VertexId) -> bool {
        self.edges_with_label(label).binary_search(&(src, dst)).is_ok()
    }

    /// The transpose: every (v, σ, u) becomes (u, σ⁻¹, v).
    pub fn transpose(&self) -> LabeledGraph {
        let mut b = GraphBuilder::with_vertices(self.names.iter().cloned());
        for (src, label, dst) in self.edges() {
            b.add_edge_ids(dst, label.inverted(), src);
        }
        b.build()
    }

    /// Adds a `fresh`-labeled self-loop at every vertex of `set`.
    pub fn add_filter_selfloops(&self, set: &VertexSet, fresh: Label) -> Result<LabeledGraph> {
        if self.label_index.contains_key(&fresh) {
            return Err(Error::SymbolCollision(fresh.to_string()));
        }
        let mut g = self.clone();
        let id = g.labels.len() as LabelId;
        g.labels.push(fresh.clone());
        g.label_index.insert(fresh, id);
        g.by_label.push(set.iter().map(|v| (v, v)).collect());
        Ok(g)
    }

    pub fn view(&self) -> GraphView<'_> {
        GraphView { base: self, transposed: false, loops: Vec::new() }
    }

    /// Writes the graph in the TSV format accepted by [`load_graph`]. Every
    /// vertex is declared first so ids survive a round trip.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for name in &self.names {
            writeln!(out, "#vertex\t{name}")?;
        }
        let mut edges: Vec<_> = self.edges().collect();
        edges.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
        for (src, label, dst) in edges {
            writeln!(out, "{}\t{}\t{}", self.names[src as usize], label, self.names[dst as usize])?;
        }
        Ok(())
    }
}

impl EdgeSource for LabeledGraph {
    fn num_vertices(&self) -> usize {
        self.names.len()
    }

    fn for_each_edge(&self, label: &Label, f: &mut dyn FnMut(VertexId, VertexId)) {
        for &(s, d) in self.edges_with_label(label) {
            f(s, d);
        }
    }
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    name_index: HashMap<String, VertexId>,
    labels: Vec<Label>,
    label_index: HashMap<Label, LabelId>,
    by_label: Vec<Vec<(VertexId, VertexId)>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vertices<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut b = Self::new();
        for name in names {
            b.vertex(&name);
        }
        b
    }

    pub fn vertex(&mut self, name: &str) -> VertexId {
        if let Some(&id) = self.name_index.get(name) {
            return id;
        }
        let id = self.names.len() as VertexId;
        self.names.push(name.to_string());
        self.name_index.insert(name.to_string(), id);
        id
    }

    pub fn add_edge(&mut self, src: &str, label: &str, dst: &str) {
        let s = self.vertex(src);
        let d = self.vertex(dst);
        self.add_edge_ids(s, Label::named(label), d);
    }

    pub fn add_edge_ids(&mut self, src: VertexId, label: Label, dst: VertexId) {
        let id = match self.label_index.get(&label) {
            Some(&id) => id,
            None => {
                let id = self.labels.len() as LabelId;
                self.labels.push(label.clone());
                self.label_index.insert(label, id);
                self.by_label.push(Vec::new());
                id
            }
        };
        self.by_label[id as usize].push((src, dst));
    }

    pub fn build(mut self) -> LabeledGraph {
        for pairs in &mut self.by_label {
            pairs.sort_unstable();
            pairs.dedup();
        }
        LabeledGraph {
            names: self.names,
            name_index: self.name_index,
            labels: self.labels,
            label_index: self.label_index,
            by_label: self.by_label,
        }
    }
}

/// Parses the TSV graph format: `src<TAB>label<TAB>dst` per edge,
/// `#vertex<TAB>name` for vertex declarations, other `#` lines are comments.
pub fn load_graph<R: BufRead>(reader: R) -> Result<LabeledGraph> {
    let mut b = GraphBuilder::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#vertex\t") {
            if rest.is_empty() || rest.contains('\t') {
                return Err(Error::GraphFormat { line: line_no, message: "malformed vertex declaration".into() });
            }
            b.vertex(rest);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::GraphFormat {
                line: line_no,
                message: format!("expected 3 tab-separated columns, found {}", fields.len()),
            });
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::GraphFormat { line: line_no, message: "empty column".into() });
        }
        b.add_edge(fields[0], fields[1], fields[2]);
    }
    Ok(b.build())
}

/// A set of vertex ids; iteration is in ascending order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<VertexId>,
}

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(num_vertices: usize) -> Self {
        VertexSet { members: (0..num_vertices as VertexId).collect() }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.members.iter().copied()
    }

    pub fn as_slice(&self) -> &[VertexId] {
        &self.members
    }

    pub fn intersect(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&v| other.contains(v)).collect()
    }
}

impl FromIterator<VertexId> for VertexSet {
    fn from_iter<I: IntoIterator<Item = VertexId>>(iter: I) -> Self {
        let mut members: Vec<VertexId> = iter.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        VertexSet { members }
    }
}

/// A read-only view of a base graph, optionally transposed, with filter
/// self-loops layered on top. Views share the base and are cheap to clone.
#[derive(Clone, Debug)]
pub struct GraphView<'g> {
    base: &'g LabeledGraph,
    transposed: bool,
    loops: Vec<(Label, Arc<VertexSet>)>,
}

impl<'g> GraphView<'g> {
    pub fn base(&self) -> &'g LabeledGraph {
        self.base
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// Number of filter layers on this view.
    pub fn num_filters(&self) -> usize {
        self.loops.len()
    }

    /// Adds a layer of `label`-self-loops on every vertex in `set`.
    pub fn with_filter(&self, label: Label, set: Arc<VertexSet>) -> Result<GraphView<'g>> {
        let probe = if self.transposed { label.inverted() } else { label.clone() };
        if self.base.label_id(&probe).is_some() || self.loops.iter().any(|(l, _)| *l == label) {
            return Err(Error::SymbolCollision(label.to_string()));
        }
        let mut view = self.clone();
        view.loops.push((label, set));
        Ok(view)
    }

    pub fn transposed(&self) -> GraphView<'g> {
        GraphView {
            base: self.base,
            transposed: !self.transposed,
            loops: self.loops.iter().map(|(l, s)| (l.inverted(), Arc::clone(s))).collect(),
        }
    }

    /// Materializes the view as a standalone graph.
    pub fn materialize(&self) -> LabeledGraph {
        let base = if self.transposed { self.base.transpose() } else { self.base.clone() };
        let mut g = base;
        for (label, set) in &self.loops {
            g = g.add_filter_selfloops(set, label.clone()).expect("view labels are fresh");
        }
        g
    }
}

impl EdgeSource for GraphView<'_> {
    fn num_vertices(&self) -> usize {
        self.base.num_vertices()
    }

    fn for_each_edge(&self, label: &Label, f: &mut dyn FnMut(VertexId, VertexId)) {
        if let Some((_, set)) = self.loops.iter().find(|(l, _)| l == label) {
            for v in set.iter() {
                f(v, v);
            }
            return;
        }
        if self.transposed {
            for &(s, d) in self.base.edges_with_label(&label.inverted()) {
                f(d, s);
            }
        } else {
            for &(s, d) in self.base.edges_with_label(label) {
                f(s, d);
            }
        }
    }
}

/// The star instance: `w_i -a-> v -a-> u_i` for i in 1..=n, plus
/// `u_0 -a-> v_0 -a-> w_1`, `z_1 -b-> w_1` and `z_2 -c-> w_1`.
pub fn gen_star_instance(n: usize) -> LabeledGraph {
    assert!(n >= 1, "star instance needs n >= 1");
    let mut b = GraphBuilder::new();
    for i in 0..=n {
        b.vertex(&format!("u_{i}"));
    }
    b.vertex("v_0");
    b.vertex("v");
    for i in 1..=n {
        b.vertex(&format!("w_{i}"));
    }
    b.vertex("z_1");
    b.vertex("z_2");
    for i in 1..=n {
        b.add_edge(&format!("w_{i}"), "a", "v");
        b.add_edge("v", "a", &format!("u_{i}"));
    }
    b.add_edge("u_0", "a", "v_0");
    b.add_edge("v_0", "a", "w_1");
    b.add_edge("z_1", "b", "w_1");
    b.add_edge("z_2", "c", "w_1");
    b.build()
}

/// The 3-star query paired with [`gen_star_instance`].
pub const STAR_QUERY: &str = "free: X1 X2 X3\natom: X1 a* a a X\natom: X2 b X\natom: X3 c X\n";

/// Uniformly samples up to `num_edges` distinct edges over `num_vertices`
/// vertices (`v0`, `v1`, ...) and labels `l0`, `l1`, ...
pub fn gen_random(num_vertices: usize, num_edges: usize, alphabet_size: usize, seed: u64) -> LabeledGraph {
    assert!(alphabet_size >= 1, "alphabet_size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for i in 0..num_vertices {
        b.vertex(&format!("v{i}"));
    }
    let labels: Vec<Label> = (0..alphabet_size).map(|i| Label::named(&format!("l{i}"))).collect();
    if num_vertices > 0 {
        for _ in 0..num_edges {
            let s = rng.gen_range(0..num_vertices) as VertexId;
            let l = rng.gen_range(0..alphabet_size);
            let d = rng.gen_range(0..num_vertices) as VertexId;
            b.add_edge_ids(s, labels[l].clone(), d);
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<LabeledGraph> {
        load_graph(text.as_bytes())
    }

    #[test]
    fn loads_single_edge() {
        let g = load("u\ta\tv\n").unwrap();
        assert_eq!(g.num_vertices(), 2);
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.alphabet(), &[Label::named("a")]);
    }

    #[test]
    fn empty_stream_is_empty_graph() {
        let g = load("").unwrap();
        assert_eq!(g.size(), 0);
    }

    #[test]
    fn duplicate_edges_collapse_and_isolated_vertices_survive() {
        let g = load("# comment\n#vertex\tlonely\nu\ta\tv\nu\ta\tv\n\nu\tb\tv\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.vertex_id("lonely"), Some(0));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match load("u\ta\tv\nu\ta\n") {
            Err(Error::GraphFormat { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(load("u\ta\tv\tw\n"), Err(Error::GraphFormat { line: 1, .. })));
    }

    #[test]
    fn star_instance_sizes() {
        for n in [1usize, 2, 1000] {
            let g = gen_star_instance(n);
            assert_eq!(g.num_vertices(), 2 * n + 5);
            assert_eq!(g.num_edges(), 2 * n + 4);
            assert_eq!(g.edges_with_label(&Label::named("b")).len(), 1);
            assert_eq!(g.edges_with_label(&Label::named("c")).len(), 1);
        }
    }

    #[test]
    fn transpose_inverts_labels_and_directions() {
        let g = load("u\ta\tv\n").unwrap();
        let t = g.transpose();
        let u = t.vertex_id("u").unwrap();
        let v = t.vertex_id("v").unwrap();
        assert!(t.contains_edge(v, &Label::named("a").inverted(), u));
        assert_eq!(t.num_edges(), 1);
        assert_eq!(t.num_vertices(), 2);
        let tt = t.transpose();
        assert!(tt.contains_edge(u, &Label::named("a"), v));
        assert_eq!(LabeledGraph::default().transpose().size(), 0);
    }

    #[test]
    fn filter_selfloops() {
        let g = load("u\ta\tv\n").unwrap();
        let v = g.vertex_id("v").unwrap();
        let f1 = Label::fresh(1);
        let h = g.add_filter_selfloops(&[v].into_iter().collect(), f1.clone()).unwrap();
        assert_eq!(h.num_edges(), 2);
        assert!(h.contains_edge(v, &f1, v));
        let empty = g.add_filter_selfloops(&VertexSet::new(), f1.clone()).unwrap();
        assert_eq!(empty.num_edges(), 1);
        assert_eq!(empty.alphabet().len(), 2);
        let all = g.add_filter_selfloops(&VertexSet::all(2), f1.clone()).unwrap();
        assert_eq!(all.num_edges(), 3);
        assert!(matches!(h.add_filter_selfloops(&VertexSet::new(), f1), Err(Error::SymbolCollision(_))));
    }

    #[test]
    fn view_matches_materialized_graph() {
        let g = gen_random(12, 40, 2, 7);
        let set: Arc<VertexSet> = Arc::new([1, 3, 5].into_iter().collect());
        let view = g.view().with_filter(Label::fresh(0), set).unwrap().transposed();
        let mat = view.materialize();
        for label in mat.alphabet() {
            let mut got = Vec::new();
            view.for_each_edge(label, &mut |s, d| got.push((s, d)));
            got.sort();
            assert_eq!(got, mat.edges_with_label(label), "{label}");
        }
    }

    #[test]
    fn random_generator_is_deterministic() {
        let g = gen_random(5, 0, 2, 1);
        assert_eq!(g.num_vertices(), 5);
        assert_eq!(g.num_edges(), 0);
        let a = gen_random(50, 200, 3, 42);
        let b = gen_random(50, 200, 3, 42);
        let ea: Vec<_> = a.edges().map(|(s, l, d)| (s, l.clone(), d)).collect();
        let eb: Vec<_> = b.edges().map(|(s, l, d)| (s, l.clone(), d)).collect();
        assert_eq!(ea, eb);
        assert!(ea.len() <= 200 && ea.len() > 150);
    }

    #[test]
    fn tsv_round_trip_preserves_ids() {
        let g = gen_star_instance(3);
        let mut buf = Vec::new();
        g.write_tsv(&mut buf).unwrap();
        let h = load_graph(buf.as_slice()).unwrap();
        assert_eq!(h.num_vertices(), g.num_vertices());
        for (s, l, d) in g.edges() {
            assert!(h.contains_edge(s, l, d));
        }
    }
}
