//! CRPQs, their query multigraphs and the structural analyses the planner
//! relies on: acyclicity, (bound-)connected components, triviality,
//! k-expansions and rooted orientations.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::regex::{parse_regex, Regex};

/// A query variable. User variables are identifiers; fresh variables live in
/// a `$`-prefixed namespace that user input cannot reach.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn fresh(n: usize) -> Self {
        Var(Arc::from(format!("${n}").as_str()))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// `regex(src, dst)`. `origin` is the atom's position in the query it was
/// first declared in and survives subquery extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub origin: usize,
    pub src: Var,
    pub regex: Regex,
    pub dst: Var,
}

impl Atom {
    pub fn new(origin: usize, src: Var, regex: Regex, dst: Var) -> Self {
        Atom { origin, src, regex, dst }
    }

    pub fn touches(&self, v: &Var) -> bool {
        self.src == *v || self.dst == *v
    }

    /// The endpoint opposite to `v`.
    pub fn other(&self, v: &Var) -> &Var {
        if self.src == *v {
            &self.dst
        } else {
            &self.src
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Crpq {
    atoms: Vec<Atom>,
    free: Vec<Var>,
}

impl Crpq {
    pub fn new(atoms: Vec<Atom>, free: Vec<Var>) -> Result<Crpq> {
        let q = Crpq { atoms, free };
        let vars: BTreeSet<Var> = q.vars().into_iter().collect();
        let mut seen = BTreeSet::new();
        for v in &q.free {
            if !vars.contains(v) {
                return Err(Error::UnknownVariable(v.to_string()));
            }
            if !seen.insert(v.clone()) {
                return Err(Error::Shape(format!("free variable {v} listed twice")));
            }
        }
        Ok(q)
    }

    /// Builds a query from `(src, regex, dst)` triples, numbering atoms by
    /// position.
    pub fn from_atoms<'a, I>(atoms: I, free: &[&str]) -> Result<Crpq>
    where
        I: IntoIterator<Item = (&'a str, Regex, &'a str)>,
    {
        let atoms = atoms
            .into_iter()
            .enumerate()
            .map(|(i, (s, r, d))| Atom::new(i, Var::new(s), r, Var::new(d)))
            .collect();
        Crpq::new(atoms, free.iter().map(|v| Var::new(v)).collect())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn free(&self) -> &[Var] {
        &self.free
    }

    pub fn is_free(&self, v: &Var) -> bool {
        self.free.contains(v)
    }

    /// Variables in order of first appearance.
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for a in &self.atoms {
            for v in [&a.src, &a.dst] {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn bound(&self) -> Vec<Var> {
        self.vars().into_iter().filter(|v| !self.is_free(v)).collect()
    }

    /// Number of atoms incident to `v` (a self-loop counts once).
    pub fn degree(&self, v: &Var) -> usize {
        self.atoms.iter().filter(|a| a.touches(v)).count()
    }

    /// The subquery on the given atom positions, with free variables
    /// restricted to those it mentions (declaration order preserved).
    pub fn subquery(&self, positions: &[usize]) -> Crpq {
        let atoms: Vec<Atom> = positions.iter().map(|&i| self.atoms[i].clone()).collect();
        let free = self
            .free
            .iter()
            .filter(|v| atoms.iter().any(|a| a.touches(v)))
            .cloned()
            .collect();
        Crpq { atoms, free }
    }

    /// Same body, different free set.
    pub fn with_free(&self, free: Vec<Var>) -> Result<Crpq> {
        Crpq::new(self.atoms.clone(), free)
    }

    pub fn with_atoms(&self, atoms: Vec<Atom>) -> Result<Crpq> {
        Crpq::new(atoms, self.free.clone())
    }

    pub fn multigraph(&self) -> QueryMultigraph {
        QueryMultigraph {
            vertices: self.vars(),
            edges: self.atoms.iter().enumerate().map(|(i, a)| (a.src.clone(), a.dst.clone(), i)).collect(),
        }
    }

    pub fn is_connected(&self) -> bool {
        self.atoms.is_empty() || connected_components(self).len() == 1
    }

    /// Whether this is a free-leaf query: acyclic, connected, and its free
    /// variables are exactly the leaves of its query graph.
    pub fn is_free_leaf(&self) -> bool {
        if !check_acyclic(self).is_accepted() || !self.is_connected() || self.atoms.is_empty() {
            return false;
        }
        let leaves: BTreeSet<Var> = self.vars().into_iter().filter(|v| self.degree(v) <= 1).collect();
        let free: BTreeSet<Var> = self.free.iter().cloned().collect();
        leaves == free
    }
}

impl fmt::Display for Crpq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "free:")?;
        for v in &self.free {
            write!(f, " {v}")?;
        }
        writeln!(f)?;
        for a in &self.atoms {
            let re = a.regex.to_string();
            if re.contains(' ') {
                writeln!(f, "atom: {} \"{}\" {}", a.src, re, a.dst)?;
            } else {
                writeln!(f, "atom: {} {} {}", a.src, re, a.dst)?;
            }
        }
        Ok(())
    }
}

fn valid_var(name: &str) -> bool {
    !name.is_empty() && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Parses the query file format: one `free:` line listing the free
/// variables, then `atom: <src> <regex> <dst>` lines. `#` starts a comment.
pub fn parse_query(text: &str) -> Result<Crpq> {
    let mut free: Option<(usize, Vec<Var>)> = None;
    let mut atoms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::QuerySyntax { line: line_no, message };
        if let Some(rest) = line.strip_prefix("free:") {
            if free.is_some() {
                return Err(err("duplicate free: line".into()));
            }
            let mut vars = Vec::new();
            for name in rest.split_whitespace() {
                if !valid_var(name) {
                    return Err(err(format!("invalid variable name {name:?}")));
                }
                vars.push(Var::new(name));
            }
            free = Some((line_no, vars));
        } else if let Some(rest) = line.strip_prefix("atom:") {
            let rest = rest.trim();
            let (src, tail) = rest.split_once(char::is_whitespace).ok_or_else(|| err("expected <src> <regex> <dst>".into()))?;
            let (middle, dst) = tail.trim().rsplit_once(char::is_whitespace).ok_or_else(|| err("expected <src> <regex> <dst>".into()))?;
            for name in [src, dst] {
                if !valid_var(name) {
                    return Err(err(format!("invalid variable name {name:?}")));
                }
            }
            let mut middle = middle.trim();
            if middle.len() >= 2 && middle.starts_with('"') && middle.ends_with('"') {
                middle = &middle[1..middle.len() - 1];
            }
            let regex = parse_regex(middle).map_err(|e| err(e.to_string()))?;
            atoms.push(Atom::new(atoms.len(), Var::new(src), regex, Var::new(dst)));
        } else {
            return Err(err(format!("unrecognized line {line:?}")));
        }
    }
    let (free_line, free) = free.ok_or(Error::QuerySyntax { line: 0, message: "missing free: line".into() })?;
    Crpq::new(atoms, free).map_err(|e| match e {
        Error::UnknownVariable(v) => Error::QuerySyntax { line: free_line, message: format!("free variable {v} does not occur in any atom") },
        Error::Shape(m) => Error::QuerySyntax { line: free_line, message: m },
        other => other,
    })
}

/// Undirected multigraph: one vertex per variable, one edge per atom
/// (tagged with the atom's index in the query).
#[derive(Clone, Debug)]
pub struct QueryMultigraph {
    pub vertices: Vec<Var>,
    pub edges: Vec<(Var, Var, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Acyclicity {
    Accepted,
    SelfLoop { atom: usize, var: Var },
    ParallelEdges { first: usize, second: usize },
    Cycle { vars: Vec<Var> },
}

impl Acyclicity {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Acyclicity::Accepted)
    }
}

impl fmt::Display for Acyclicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Acyclicity::Accepted => write!(f, "acyclic"),
            Acyclicity::SelfLoop { atom, var } => {
                write!(f, "atom {atom} is a self-loop on {var}; an acyclic CRPQ cannot have a self-loop")
            }
            Acyclicity::ParallelEdges { first, second } => {
                write!(f, "atoms {first} and {second} connect the same variables; an acyclic CRPQ cannot have parallel edges")
            }
            Acyclicity::Cycle { vars } => {
                let names: Vec<&str> = vars.iter().map(Var::name).collect();
                write!(f, "cycle through {}", names.join(" - "))
            }
        }
    }
}

pub fn check_acyclic(q: &Crpq) -> Acyclicity {
    let atoms = q.atoms();
    for (i, a) in atoms.iter().enumerate() {
        if a.src == a.dst {
            return Acyclicity::SelfLoop { atom: i, var: a.src.clone() };
        }
    }
    let mut pairs: HashMap<(Var, Var), usize> = HashMap::new();
    for (i, a) in atoms.iter().enumerate() {
        let key = if a.src < a.dst { (a.src.clone(), a.dst.clone()) } else { (a.dst.clone(), a.src.clone()) };
        if let Some(&first) = pairs.get(&key) {
            return Acyclicity::ParallelEdges { first, second: i };
        }
        pairs.insert(key, i);
    }
    // Forest check; on the first closing edge report the tree path plus it.
    let mut adj: HashMap<Var, Vec<Var>> = HashMap::new();
    let mut uf = UnionFind::new(q.vars());
    for a in atoms {
        if !uf.union(&a.src, &a.dst) {
            let mut path = tree_path(&adj, &a.src, &a.dst);
            path.push(a.src.clone());
            return Acyclicity::Cycle { vars: path };
        }
        adj.entry(a.src.clone()).or_default().push(a.dst.clone());
        adj.entry(a.dst.clone()).or_default().push(a.src.clone());
    }
    Acyclicity::Accepted
}

fn tree_path(adj: &HashMap<Var, Vec<Var>>, from: &Var, to: &Var) -> Vec<Var> {
    let mut prev: HashMap<Var, Var> = HashMap::new();
    let mut queue = VecDeque::from([from.clone()]);
    prev.insert(from.clone(), from.clone());
    while let Some(v) = queue.pop_front() {
        if v == *to {
            break;
        }
        for w in adj.get(&v).into_iter().flatten() {
            if !prev.contains_key(w) {
                prev.insert(w.clone(), v.clone());
                queue.push_back(w.clone());
            }
        }
    }
    let mut path = vec![to.clone()];
    let mut cur = to.clone();
    while cur != *from {
        cur = prev[&cur].clone();
        path.push(cur.clone());
    }
    path.reverse();
    path
}

struct UnionFind {
    index: HashMap<Var, usize>,
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(vars: Vec<Var>) -> Self {
        let index: HashMap<Var, usize> = vars.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        let parent = (0..index.len()).collect();
        UnionFind { index, parent }
    }

    fn find_idx(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn find(&mut self, v: &Var) -> usize {
        let i = self.index[v];
        self.find_idx(i)
    }

    /// Returns false if already in the same set.
    fn union(&mut self, a: &Var, b: &Var) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Groups atom positions by a union-find over variables, in order of each
/// group's first atom.
fn group_atoms(q: &Crpq, joins: impl Fn(&Var) -> bool) -> Vec<Vec<usize>> {
    let n = q.atoms().len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut first_atom: HashMap<&Var, usize> = HashMap::new();
    for (i, a) in q.atoms().iter().enumerate() {
        for v in [&a.src, &a.dst] {
            if !joins(v) {
                continue;
            }
            match first_atom.get(v) {
                Some(&j) => {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
                None => {
                    first_atom.insert(v, i);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Connected components of the query graph, as subqueries.
pub fn connected_components(q: &Crpq) -> Vec<Crpq> {
    group_atoms(q, |_| true).iter().map(|g| q.subquery(g)).collect()
}

/// Bound-connected components: atoms are grouped when they share a bound
/// variable, so the query tree is cut at every free variable. Groups that
/// end up with a single free variable and hang off the same free variable
/// are then merged, since such dangling branches form one unary subquery.
pub fn bound_connected_components(q: &Crpq) -> Vec<Crpq> {
    let groups = group_atoms(q, |v| !q.is_free(v));
    let mut merged: Vec<Vec<usize>> = Vec::new();
    let mut dangling: HashMap<Var, usize> = HashMap::new();
    for g in groups {
        let sub = q.subquery(&g);
        if sub.free().len() == 1 {
            let f = sub.free()[0].clone();
            if let Some(&slot) = dangling.get(&f) {
                merged[slot].extend(g);
                continue;
            }
            dangling.insert(f, merged.len());
        }
        merged.push(g);
    }
    merged
        .into_iter()
        .map(|mut g| {
            g.sort_unstable();
            q.subquery(&g)
        })
        .collect()
}

/// True iff every connected component has at most one free variable.
pub fn is_trivial(q: &Crpq) -> bool {
    connected_components(q).iter().all(|c| c.free().len() <= 1)
}

/// Replaces every atom by a k-path of single-symbol atoms `S` through fresh
/// bound variables.
pub fn k_expansion(q: &Crpq, k: usize) -> Crpq {
    assert!(k >= 1, "k-expansion needs k >= 1");
    let mut atoms = Vec::new();
    let mut fresh = 0;
    for a in q.atoms() {
        let mut prev = a.src.clone();
        for step in 0..k {
            let next = if step + 1 == k {
                a.dst.clone()
            } else {
                fresh += 1;
                Var::fresh(fresh)
            };
            atoms.push(Atom::new(atoms.len(), prev, Regex::symbol("S"), next.clone()));
            prev = next;
        }
    }
    Crpq { atoms, free: q.free().to_vec() }
}

/// How a tree edge relates to its atom: `inverted` is set when the atom is
/// declared child → parent, so traversing it parent → child needs the
/// inverse expression over the transpose graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub atom: usize,
    pub parent: Var,
    pub child: Var,
    pub inverted: bool,
}

/// A connected acyclic query rooted at one variable.
#[derive(Clone, Debug)]
pub struct OrientedTree {
    root: Var,
    up: HashMap<Var, TreeEdge>,
    children: HashMap<Var, Vec<Var>>,
    postorder: Vec<Var>,
}

impl OrientedTree {
    pub fn root(&self) -> &Var {
        &self.root
    }

    /// The edge linking `v` to its parent (`None` at the root).
    pub fn parent_edge(&self, v: &Var) -> Option<&TreeEdge> {
        self.up.get(v)
    }

    pub fn children(&self, v: &Var) -> &[Var] {
        self.children.get(v).map_or(&[], Vec::as_slice)
    }

    pub fn is_leaf(&self, v: &Var) -> bool {
        self.children(v).is_empty()
    }

    /// Variables with every child before its parent; the root is last.
    pub fn postorder(&self) -> &[Var] {
        &self.postorder
    }

    pub fn edges(&self) -> impl Iterator<Item = &TreeEdge> {
        self.postorder.iter().filter_map(|v| self.up.get(v))
    }

    /// Free variables in the subtree under `v`, excluding the root.
    pub fn subtree_free(&self, q: &Crpq, v: &Var) -> Vec<Var> {
        let mut out = Vec::new();
        let mut stack = vec![v.clone()];
        while let Some(x) = stack.pop() {
            if q.is_free(&x) && x != self.root {
                out.push(x.clone());
            }
            stack.extend(self.children(&x).iter().cloned());
        }
        out.sort_by_key(|x| q.free().iter().position(|f| f == x));
        out
    }
}

pub fn reroot(q: &Crpq, root: &Var) -> Result<OrientedTree> {
    if !q.vars().contains(root) {
        return Err(Error::UnknownVariable(root.to_string()));
    }
    if !check_acyclic(q).is_accepted() || !q.is_connected() {
        return Err(Error::Shape("reroot needs a connected acyclic query".into()));
    }
    let mut up: HashMap<Var, TreeEdge> = HashMap::new();
    let mut children: HashMap<Var, Vec<Var>> = HashMap::new();
    let mut order = vec![root.clone()];
    let mut head = 0;
    while head < order.len() {
        let v = order[head].clone();
        head += 1;
        for (i, a) in q.atoms().iter().enumerate() {
            if !a.touches(&v) {
                continue;
            }
            let w = a.other(&v).clone();
            if up.get(&v).is_some_and(|e| e.atom == i) {
                continue;
            }
            let inverted = a.src != v;
            up.insert(w.clone(), TreeEdge { atom: i, parent: v.clone(), child: w.clone(), inverted });
            children.entry(v.clone()).or_default().push(w.clone());
            order.push(w);
        }
    }
    order.reverse();
    Ok(OrientedTree { root: root.clone(), up, children, postorder: order })
}
