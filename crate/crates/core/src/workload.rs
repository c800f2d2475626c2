//! Seeded generators for random expressions, queries and graphs used by
//! property tests, the acceptance suite and the random benchmark family.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::query::{Atom, Crpq, Var};
use crate::regex::Regex;

/// Label name `l{i}`, matching [`crate::graph::gen_random`].
pub fn label(i: usize) -> String {
    format!("l{i}")
}

/// Draws an expression from a small template pool over `alphabet_size`
/// labels. `depth` bounds the nesting of operators.
pub fn random_regex<R: Rng>(rng: &mut R, alphabet_size: usize, depth: usize) -> Regex {
    let sym = |rng: &mut R| Regex::symbol(&label(rng.gen_range(0..alphabet_size)));
    if depth == 0 {
        return if rng.gen_bool(0.1) { Regex::Epsilon } else { sym(rng) };
    }
    match rng.gen_range(0..10) {
        0..=3 => sym(rng),
        4 => Regex::Epsilon,
        5 | 6 => Regex::concat(random_regex(rng, alphabet_size, depth - 1), random_regex(rng, alphabet_size, depth - 1)),
        7 => Regex::alt(random_regex(rng, alphabet_size, depth - 1), random_regex(rng, alphabet_size, depth - 1)),
        _ => Regex::star(random_regex(rng, alphabet_size, depth - 1)),
    }
}

/// Shape parameters for [`random_acyclic_query`].
#[derive(Clone, Copy, Debug)]
pub struct QueryShape {
    pub max_atoms: usize,
    pub max_free: usize,
    pub alphabet_size: usize,
    pub regex_depth: usize,
    /// Probability that a new atom starts a new connected component.
    pub split_prob: f64,
}

impl Default for QueryShape {
    fn default() -> Self {
        QueryShape { max_atoms: 6, max_free: 3, alphabet_size: 3, regex_depth: 2, split_prob: 0.15 }
    }
}

/// A random forest-shaped query: each atom either hangs a new variable off
/// an existing one (random direction) or starts a new component. Free
/// variables are a random subset in random order.
pub fn random_acyclic_query<R: Rng>(rng: &mut R, shape: &QueryShape) -> Crpq {
    let n_atoms = rng.gen_range(1..=shape.max_atoms);
    let mut vars: Vec<Var> = vec![Var::new("V0")];
    let mut atoms = Vec::new();
    for i in 0..n_atoms {
        let anchor = if i > 0 && rng.gen_bool(shape.split_prob) {
            vars.push(Var::new(&format!("V{}", vars.len())));
            vars.len() - 1
        } else {
            rng.gen_range(0..vars.len())
        };
        let new = Var::new(&format!("V{}", vars.len()));
        vars.push(new.clone());
        let re = random_regex(rng, shape.alphabet_size, shape.regex_depth);
        let (src, dst) = if rng.gen_bool(0.5) { (vars[anchor].clone(), new) } else { (new, vars[anchor].clone()) };
        atoms.push(Atom::new(i, src, re, dst));
    }
    let used: Vec<Var> = vars.into_iter().filter(|v| atoms.iter().any(|a: &Atom| a.touches(v))).collect();
    let mut free = used;
    free.shuffle(rng);
    free.truncate(rng.gen_range(0..=shape.max_free.min(free.len())));
    Crpq::new(atoms, free).expect("generated query is well-formed")
}

/// A random connected tree whose leaves are exactly its `leaves` free
/// variables.
pub fn random_free_leaf_query<R: Rng>(rng: &mut R, leaves: usize, alphabet_size: usize, max_atoms: usize) -> Crpq {
    assert!(leaves >= 2);
    loop {
        let shape = QueryShape { max_atoms, max_free: 0, alphabet_size, regex_depth: 2, split_prob: 0.0 };
        let q = random_acyclic_query(rng, &shape);
        let mut leaf_vars: Vec<Var> = q.vars().into_iter().filter(|v| q.degree(v) == 1).collect();
        if leaf_vars.len() != leaves {
            continue;
        }
        leaf_vars.shuffle(rng);
        return q.with_free(leaf_vars).expect("leaves are query variables");
    }
}

/// A random query that may contain self-loops, parallel atoms and cycles.
pub fn random_any_query<R: Rng>(rng: &mut R, max_atoms: usize, max_vars: usize) -> Crpq {
    let n_atoms = rng.gen_range(1..=max_atoms);
    let n_vars = rng.gen_range(1..=max_vars);
    let var = |i: usize| Var::new(&format!("V{i}"));
    let atoms: Vec<Atom> = (0..n_atoms)
        .map(|i| Atom::new(i, var(rng.gen_range(0..n_vars)), Regex::symbol("l0"), var(rng.gen_range(0..n_vars))))
        .collect();
    Crpq::new(atoms, Vec::new()).expect("no free variables to check")
}
