//! Relations over query variables and acyclic (Yannakakis) joins with
//! projection.

use std::collections::{HashMap, HashSet};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::hypergraph::gyo_join_forest;
use crate::query::Var;

/// Join key: the values of the shared variables.
type Key = SmallVec<[VertexId; 4]>;

/// A set of rows over an ordered schema, stored flat.
#[derive(Clone, Debug)]
pub struct BindingRelation {
    schema: Vec<Var>,
    rows: usize,
    data: Vec<VertexId>,
}

impl PartialEq for BindingRelation {
    /// Set equality of rows over the same schema.
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.sorted_rows() == other.sorted_rows()
    }
}

impl Eq for BindingRelation {}

impl BindingRelation {
    pub fn empty(schema: Vec<Var>) -> Self {
        BindingRelation { schema, rows: 0, data: Vec::new() }
    }

    /// The 0-ary relation holding the empty tuple.
    pub fn unit() -> Self {
        BindingRelation { schema: Vec::new(), rows: 1, data: Vec::new() }
    }

    /// Builds a relation, dropping duplicate rows.
    pub fn from_rows<I, R>(schema: Vec<Var>, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[VertexId]>,
    {
        let mut rel = BindingRelation::empty(schema);
        for r in rows {
            rel.push(r.as_ref());
        }
        rel.dedup();
        rel
    }

    /// Builds a relation from flat data whose rows are already distinct.
    pub fn from_distinct_flat(schema: Vec<Var>, data: Vec<VertexId>) -> Self {
        let w = schema.len();
        assert!(w > 0, "flat construction needs a non-empty schema");
        assert_eq!(data.len() % w, 0);
        BindingRelation { rows: data.len() / w, schema, data }
    }

    /// Unary relation from a vertex set.
    pub fn unary(var: Var, values: impl IntoIterator<Item = VertexId>) -> Self {
        BindingRelation::from_rows(vec![var], values.into_iter().map(|v| [v]))
    }

    pub fn schema(&self) -> &[Var] {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[VertexId] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[VertexId]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn sorted_rows(&self) -> Vec<Vec<VertexId>> {
        let mut rows: Vec<Vec<VertexId>> = self.rows().map(<[VertexId]>::to_vec).collect();
        rows.sort_unstable();
        rows
    }

    /// Appends a row without checking for duplicates.
    pub fn push(&mut self, row: &[VertexId]) {
        debug_assert_eq!(row.len(), self.width());
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    /// Sorts rows and removes duplicates.
    pub fn dedup(&mut self) {
        let w = self.width();
        if w == 0 {
            self.rows = self.rows.min(1);
            return;
        }
        let data = &self.data;
        let row = |i: u32| &data[i as usize * w..(i as usize + 1) * w];
        let mut order: Vec<u32> = (0..self.rows as u32).collect();
        order.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
        order.dedup_by(|a, b| row(*a) == row(*b));
        let mut out = Vec::with_capacity(order.len() * w);
        for &i in &order {
            out.extend_from_slice(row(i));
        }
        self.rows = order.len();
        self.data = out;
    }

    fn positions(&self, vars: &[Var]) -> Result<Vec<usize>> {
        vars.iter()
            .map(|v| self.schema.iter().position(|s| s == v).ok_or_else(|| Error::UnknownVariable(v.to_string())))
            .collect()
    }

    /// Projection onto `vars` (in that order), deduplicated.
    pub fn project(&self, vars: &[Var]) -> Result<BindingRelation> {
        let pos = self.positions(vars)?;
        if pos.len() == self.width() && pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let mut out = BindingRelation::empty(vars.to_vec());
        let mut buf = Vec::with_capacity(pos.len());
        for r in self.rows() {
            buf.clear();
            buf.extend(pos.iter().map(|&p| r[p]));
            out.push(&buf);
        }
        // A permutation of a duplicate-free relation stays duplicate-free.
        if pos.len() != self.width() {
            out.dedup();
        }
        Ok(out)
    }

    fn shared_with(&self, other: &BindingRelation) -> Vec<Var> {
        self.schema.iter().filter(|v| other.schema.contains(v)).cloned().collect()
    }

    /// Keeps the rows that agree with some row of `other` on the shared
    /// variables.
    pub fn semijoin(&mut self, other: &BindingRelation) {
        let shared = self.shared_with(other);
        if shared.is_empty() {
            if other.is_empty() {
                self.rows = 0;
                self.data.clear();
            }
            return;
        }
        let mine = self.positions(&shared).expect("shared vars");
        let theirs = other.positions(&shared).expect("shared vars");
        let keys: HashSet<Key> = other.rows().map(|r| theirs.iter().map(|&p| r[p]).collect()).collect();
        let w = self.width();
        let mut kept = 0;
        let mut key = Key::new();
        for i in 0..self.rows {
            let r = &self.data[i * w..(i + 1) * w];
            key.clear();
            key.extend(mine.iter().map(|&p| r[p]));
            if keys.contains(&key) {
                self.data.copy_within(i * w..(i + 1) * w, kept * w);
                kept += 1;
            }
        }
        self.rows = kept;
        self.data.truncate(kept * w);
    }

    /// Natural join, schema = self's variables then other's new ones.
    pub fn join(&self, other: &BindingRelation) -> BindingRelation {
        let shared = self.shared_with(other);
        let mine = self.positions(&shared).expect("shared vars");
        let theirs = other.positions(&shared).expect("shared vars");
        let extra: Vec<usize> = (0..other.width()).filter(|p| !theirs.contains(p)).collect();
        let mut schema = self.schema.clone();
        schema.extend(extra.iter().map(|&p| other.schema[p].clone()));
        let mut index: HashMap<Key, Vec<usize>> = HashMap::new();
        for (i, r) in other.rows().enumerate() {
            index.entry(theirs.iter().map(|&p| r[p]).collect()).or_default().push(i);
        }
        let mut out = BindingRelation::empty(schema);
        let mut key = Key::new();
        let mut buf = Vec::with_capacity(out.width());
        for r in self.rows() {
            key.clear();
            key.extend(mine.iter().map(|&p| r[p]));
            if let Some(matches) = index.get(&key) {
                for &j in matches {
                    let o = other.row(j);
                    buf.clear();
                    buf.extend_from_slice(r);
                    buf.extend(extra.iter().map(|&p| o[p]));
                    out.push(&buf);
                }
            }
        }
        out
    }
}

/// `rels[target] ⋉= rels[source]` without cloning either relation.
fn semijoin_in_place(rels: &mut [BindingRelation], target: usize, source: usize) {
    if target < source {
        let (lo, hi) = rels.split_at_mut(source);
        lo[target].semijoin(&hi[0]);
    } else {
        let (lo, hi) = rels.split_at_mut(target);
        hi[0].semijoin(&lo[source]);
    }
}

/// Joins an alpha-acyclic family of relations and projects onto `output`,
/// via a GYO join forest: a bottom-up and a top-down semijoin sweep, then a
/// bottom-up join that keeps only output variables and those shared with
/// the parent. Disconnected trees are combined by cross product.
pub fn yannakakis(relations: Vec<BindingRelation>, output: &[Var]) -> Result<BindingRelation> {
    let mut var_ids: HashMap<Var, usize> = HashMap::new();
    let edges: Vec<Vec<usize>> = relations
        .iter()
        .map(|r| {
            r.schema()
                .iter()
                .map(|v| {
                    let n = var_ids.len();
                    *var_ids.entry(v.clone()).or_insert(n)
                })
                .collect()
        })
        .collect();
    if let Some(v) = output.iter().find(|v| !var_ids.contains_key(v)) {
        return Err(Error::UnknownVariable(v.to_string()));
    }
    let parent = gyo_join_forest(&edges).ok_or(Error::NotAlphaAcyclic)?;
    let m = relations.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut roots = Vec::new();
    for (e, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(e),
            None => roots.push(e),
        }
    }
    // Children-before-parent order.
    let mut order = Vec::with_capacity(m);
    let mut stack: Vec<(usize, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
    while let Some((e, expanded)) = stack.pop() {
        if expanded {
            order.push(e);
        } else {
            stack.push((e, true));
            stack.extend(children[e].iter().rev().map(|&c| (c, false)));
        }
    }

    let mut rels = relations;
    for &e in &order {
        if let Some(p) = parent[e] {
            semijoin_in_place(&mut rels, p, e);
        }
    }
    for &e in order.iter().rev() {
        if let Some(p) = parent[e] {
            semijoin_in_place(&mut rels, e, p);
        }
    }
    if rels.iter().any(BindingRelation::is_empty) {
        return Ok(BindingRelation::empty(output.to_vec()));
    }

    let mut partial: Vec<Option<BindingRelation>> = vec![None; m];
    for &e in &order {
        let mut acc = std::mem::replace(&mut rels[e], BindingRelation::empty(Vec::new()));
        for &c in &children[e] {
            acc = acc.join(partial[c].as_ref().expect("child joined first"));
        }
        let keep: Vec<Var> = acc
            .schema()
            .iter()
            .filter(|v| output.contains(v) || parent[e].is_some_and(|p| edges[p].contains(&var_ids[*v])))
            .cloned()
            .collect();
        partial[e] = Some(acc.project(&keep)?);
    }
    let mut result = BindingRelation::unit();
    for &r in &roots {
        result = result.join(partial[r].as_ref().expect("root joined"));
    }
    result.project(output)
}
