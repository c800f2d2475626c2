//! Output-sensitive evaluation of free-leaf CRPQs: one rooted pass per free
//! variable, splitting root keys into light and heavy, filtering heavy
//! values into the next passes, and doubling the output-size guess until
//! the last pass finds no heavy key.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{GraphView, VertexId, VertexSet};
use crate::join::BindingRelation;
use crate::query::{reroot, Crpq, OrientedTree, Var};
use crate::regex::{FreshSymbols, Regex, Side};
use crate::restriction::{compose, propagate, restrict_single_rpq, CapPair, RestrictionTable};

/// Environment variable that turns on the in-algorithm consistency checks.
pub const DEBUG_ASSERT_ENV: &str = "CRPQ_DEBUG_ASSERT";

fn debug_asserts_enabled() -> bool {
    std::env::var(DEBUG_ASSERT_ENV).is_ok_and(|v| v == "1")
}

/// A free-leaf query with one rooted tree per free variable.
#[derive(Clone, Debug)]
pub struct FreeLeafPlan {
    query: Crpq,
    trees: Vec<OrientedTree>,
}

impl FreeLeafPlan {
    pub fn new(query: Crpq) -> Result<Self> {
        if !query.is_free_leaf() {
            return Err(Error::Shape("query is not free-leaf".into()));
        }
        if query.free().len() < 2 {
            return Err(Error::Shape("free-leaf evaluation needs at least two free variables".into()));
        }
        let trees = query.free().iter().map(|w| reroot(&query, w)).collect::<Result<Vec<_>>>()?;
        Ok(FreeLeafPlan { query, trees })
    }

    pub fn query(&self) -> &Crpq {
        &self.query
    }

    /// Free variables in processing order.
    pub fn order(&self) -> &[Var] {
        self.query.free()
    }

    pub fn tree(&self, pass: usize) -> &OrientedTree {
        &self.trees[pass]
    }
}

/// How many restriction operations a pass performed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepCounts {
    pub base: usize,
    pub compose: usize,
    pub propagate: usize,
}

impl std::ops::AddAssign for StepCounts {
    fn add_assign(&mut self, o: Self) {
        self.base += o.base;
        self.compose += o.compose;
        self.propagate += o.propagate;
    }
}

#[derive(Clone, Debug)]
pub struct PassOutcome {
    /// Full output tuples (declared free order) whose root value is light.
    pub light: Vec<Vec<VertexId>>,
    pub heavy: VertexSet,
    pub steps: StepCounts,
}

/// Computes a (W, Δ')-restriction of the whole query rooted at the
/// `pass`-th free variable and splits its keys by degree. `regexes` holds
/// the current expression of every atom (filters may have been merged).
pub fn run_pass(
    plan: &FreeLeafPlan,
    regexes: &[Regex],
    view: &GraphView<'_>,
    pass: usize,
    delta_prime: usize,
) -> Result<PassOutcome> {
    assert!(delta_prime >= 2, "delta' must be at least 2");
    let q = plan.query();
    let tree = plan.tree(pass);
    let transposed = view.transposed();
    let mut steps = StepCounts::default();
    let mut tables: std::collections::HashMap<Var, RestrictionTable> = std::collections::HashMap::new();

    for y in tree.postorder() {
        let Some(edge) = tree.parent_edge(y) else { continue };
        let (g, re) = if edge.inverted { (&transposed, regexes[edge.atom].invert()) } else { (view, regexes[edge.atom].clone()) };
        let t = if tree.is_leaf(y) {
            steps.base += 1;
            restrict_single_rpq(g, &re, edge.parent.clone(), y.clone(), delta_prime)?
        } else {
            let mut kids = tree.children(y).iter();
            let first = kids.next().expect("non-leaf has a child");
            let mut s = tables.remove(first).expect("child table built");
            for k in kids {
                s = compose(&s, &tables.remove(k).expect("child table built"), delta_prime)?;
                steps.compose += 1;
            }
            steps.propagate += 1;
            propagate(g, &re, edge.parent.clone(), &s, delta_prime)?
        };
        tables.insert(y.clone(), t);
    }

    let root = tree.root();
    let child = &tree.children(root)[0];
    let table = tables.remove(child).expect("root child table built");
    // Position in the declared free order of each column (key first).
    let mut cols = vec![q.free().iter().position(|f| f == root).expect("root is free")];
    cols.extend(table.tail().iter().map(|v| q.free().iter().position(|f| f == v).expect("tail vars are free")));
    debug_assert_eq!(cols.len(), q.free().len());

    let mut light = Vec::new();
    let mut heavy = Vec::new();
    for (w, list) in table.iter() {
        if list.len() == delta_prime {
            heavy.push(w);
            continue;
        }
        for t in list {
            let mut row = vec![0; cols.len()];
            row[cols[0]] = w;
            for (i, &v) in t.iter().enumerate() {
                row[cols[i + 1]] = v;
            }
            light.push(row);
        }
    }
    Ok(PassOutcome { light, heavy: heavy.into_iter().collect(), steps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundReport {
    pub guess: u64,
    pub delta: usize,
    pub heavy_sizes: Vec<usize>,
    pub emitted: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct FreeLeafReport {
    pub output: BindingRelation,
    pub rounds: Vec<RoundReport>,
    pub steps: StepCounts,
}

/// `max(1, ceil(guess^((l-1)/l)))` for `guess = 2^k`, exact whenever the
/// exponent is an integer.
pub fn delta_for(k: u32, l: usize) -> usize {
    let l = l as u64;
    let num = k as u64 * (l - 1);
    if num.is_multiple_of(l) {
        1usize << (num / l)
    } else {
        ((num as f64 / l as f64).exp2().ceil() as usize).max(1)
    }
}

/// Evaluates a free-leaf query over `view`. Fresh filter symbols come from
/// `fresh`, which must not collide with labels already on the view.
pub fn eval_freeleaf(q: &Crpq, view: &GraphView<'_>, fresh: &mut FreshSymbols) -> Result<FreeLeafReport> {
    let plan = FreeLeafPlan::new(q.clone())?;
    let l = plan.order().len();
    let check = debug_asserts_enabled();
    let mut rounds = Vec::new();
    let mut steps = StepCounts::default();
    let mut k: u32 = 0;
    loop {
        let guess = 1u64 << k;
        let delta = delta_for(k, l);
        let caps = CapPair::new(delta);
        let mut regexes: Vec<Regex> = q.atoms().iter().map(|a| a.regex.clone()).collect();
        let mut overlay = view.clone();
        let mut seen: HashSet<Vec<VertexId>> = HashSet::new();
        let mut round = RoundReport { guess, delta, heavy_sizes: Vec::new(), emitted: Vec::new() };
        let mut heavy_product: u128 = 1;
        let mut finished = false;
        for (pass, w) in plan.order().iter().enumerate() {
            let outcome = run_pass(&plan, &regexes, &overlay, pass, caps.delta_prime)?;
            steps += outcome.steps;
            let before = seen.len();
            seen.extend(outcome.light);
            round.emitted.push(seen.len() - before);
            round.heavy_sizes.push(outcome.heavy.len());
            let last = pass + 1 == l;
            if check && last && heavy_product <= delta as u128 {
                assert!(outcome.heavy.is_empty(), "last pass found heavy keys although earlier filters bound its degree");
            }
            if outcome.heavy.is_empty() {
                // No remaining output has a heavy value of w.
                finished = true;
                break;
            }
            if last {
                break;
            }
            heavy_product = heavy_product.saturating_mul(outcome.heavy.len() as u128);
            let (idx, atom) = q.atoms().iter().enumerate().find(|(_, a)| a.touches(w)).expect("free leaf has an atom");
            let label = fresh.next_label();
            let side = if atom.dst == *w { Side::Suffix } else { Side::Prefix };
            regexes[idx] = regexes[idx].concat_symbol(side, label.clone())?;
            overlay = overlay.with_filter(label, Arc::new(outcome.heavy))?;
        }
        log::debug!("guess {guess} delta {delta}: heavy {:?}, emitted {:?}", round.heavy_sizes, round.emitted);
        rounds.push(round);
        if finished {
            let output = BindingRelation::from_rows(q.free().to_vec(), seen);
            return Ok(FreeLeafReport { output, rounds, steps });
        }
        k += 1;
    }
}
