//! End-to-end evaluation of acyclic CRPQs: Boolean guards, per-variable
//! filters, bound-connected components made free-leaf, free-leaf
//! evaluation, and a final Yannakakis join.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::baseline::{baseline_eval, oracle_eval, ORACLE_ROW_LIMIT};
use crate::error::{Error, Result};
use crate::freeleaf::{eval_freeleaf, RoundReport, StepCounts};
use crate::graph::{GraphView, LabeledGraph, VertexSet};
use crate::join::{yannakakis, BindingRelation};
use crate::nfa::compile_nfa;
use crate::product::ProductGraph;
use crate::query::{bound_connected_components, check_acyclic, connected_components, Atom, Crpq, Var};
use crate::regex::{FreshSymbols, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Optimal,
    Baseline,
    Oracle,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Optimal, Engine::Baseline, Engine::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Optimal => "optimal",
            Engine::Baseline => "baseline",
            Engine::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Engine::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| format!("unknown engine {s:?}"))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    /// Evaluate components on the rayon pool.
    pub parallel: bool,
    /// Intermediate-row cap for the oracle.
    pub oracle_limit: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { parallel: false, oracle_limit: ORACLE_ROW_LIMIT }
    }
}

#[derive(Clone, Debug)]
pub struct EvalReport {
    pub engine: Engine,
    /// Distinct answers over the declared free variables.
    pub output: BindingRelation,
    /// Doubling rounds of each free-leaf component (optimal engine only).
    pub component_rounds: Vec<Vec<RoundReport>>,
    /// Row counts of the per-component results before the final join.
    pub component_sizes: Vec<usize>,
    pub steps: StepCounts,
    /// Largest materialized atom (baseline engine only).
    pub out_a: Option<usize>,
}

impl EvalReport {
    fn plain(engine: Engine, output: BindingRelation) -> Self {
        EvalReport {
            engine,
            output,
            component_rounds: Vec::new(),
            component_sizes: Vec::new(),
            steps: StepCounts::default(),
            out_a: None,
        }
    }

    pub fn rounds(&self) -> usize {
        self.component_rounds.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Values `p` with some path `p -> y` matching the atom's expression, where
/// `p` is the endpoint opposite to `leaf`.
fn leaf_support(atom: &Atom, leaf: &Var, view: &GraphView<'_>) -> VertexSet {
    let (g, re) = if atom.dst == *leaf { (view.clone(), atom.regex.clone()) } else { (view.transposed(), atom.regex.invert()) };
    let product = ProductGraph::build(&g, &compile_nfa(&re));
    product.sources_reaching(None).into_iter().collect()
}

/// Attaches `set` as a filter on `var`'s end of `atom`.
fn merge_filter<'g>(
    atom: &mut Atom,
    var: &Var,
    set: VertexSet,
    view: &GraphView<'g>,
    fresh: &mut FreshSymbols,
) -> Result<GraphView<'g>> {
    let label = fresh.next_label();
    let side = if atom.dst == *var { Side::Suffix } else { Side::Prefix };
    atom.regex = atom.regex.concat_symbol(side, label.clone())?;
    view.with_filter(label, Arc::new(set))
}

/// Leaf elimination state for one connected acyclic query.
struct Eliminated<'g> {
    atoms: Vec<Atom>,
    view: GraphView<'g>,
    /// Candidate set of the last variable when every atom was eliminated.
    last: Option<(Var, VertexSet)>,
}

/// Repeatedly removes leaves that are not in `keep`, folding each removed
/// atom into a filter on its remaining endpoint.
fn eliminate_leaves<'g>(
    mut atoms: Vec<Atom>,
    keep: &[Var],
    mut view: GraphView<'g>,
    fresh: &mut FreshSymbols,
) -> Result<Eliminated<'g>> {
    loop {
        let mut leaf = None;
        'search: for a in &atoms {
            for v in [&a.src, &a.dst] {
                if !keep.contains(v) && atoms.iter().filter(|b| b.touches(v)).count() == 1 {
                    leaf = Some(v.clone());
                    break 'search;
                }
            }
        }
        let Some(y) = leaf else {
            return Ok(Eliminated { atoms, view, last: None });
        };
        let i = atoms.iter().position(|a| a.touches(&y)).expect("leaf has an atom");
        let atom = atoms.remove(i);
        let p = atom.other(&y).clone();
        let support = leaf_support(&atom, &y, &view);
        match atoms.iter().position(|a| a.touches(&p)) {
            Some(j) => view = merge_filter(&mut atoms[j], &p, support, &view, fresh)?,
            None => return Ok(Eliminated { atoms, view, last: Some((p, support)) }),
        }
    }
}

/// Evaluates a connected acyclic query with at most one free variable in
/// linear time by leaf elimination.
pub fn eval_single_free(q: &Crpq, view: &GraphView<'_>) -> Result<BindingRelation> {
    if q.free().len() > 1 {
        return Err(Error::Shape("eval_single_free needs at most one free variable".into()));
    }
    if !check_acyclic(q).is_accepted() || !q.is_connected() {
        return Err(Error::Shape("eval_single_free needs a connected acyclic query".into()));
    }
    if q.atoms().is_empty() {
        return Ok(BindingRelation::unit());
    }
    let mut fresh = FreshSymbols::new();
    let done = eliminate_leaves(q.atoms().to_vec(), q.free(), view.clone(), &mut fresh)?;
    let (var, set) = done.last.expect("a single-free tree eliminates down to one variable");
    Ok(match q.free().first() {
        Some(f) => {
            debug_assert_eq!(*f, var);
            BindingRelation::unary(var, set.iter())
        }
        None if set.is_empty() => BindingRelation::empty(Vec::new()),
        None => BindingRelation::unit(),
    })
}

/// Per free variable X, the X-values that extend to a full match of the
/// query body. All sets are empty as soon as any connected component is
/// unsatisfiable.
pub fn compute_variable_filters(q: &Crpq, view: &GraphView<'_>) -> Result<HashMap<Var, VertexSet>> {
    let mut filters = HashMap::new();
    let mut satisfiable = true;
    for c in connected_components(q) {
        if c.free().is_empty() {
            satisfiable &= !eval_single_free(&c, view)?.is_empty();
            continue;
        }
        for x in c.free() {
            let qx = c.with_free(vec![x.clone()])?;
            let set: VertexSet = eval_single_free(&qx, view)?.rows().map(|r| r[0]).collect();
            satisfiable &= !set.is_empty();
            filters.insert(x.clone(), set);
        }
    }
    if !satisfiable {
        for set in filters.values_mut() {
            *set = VertexSet::new();
        }
    }
    Ok(filters)
}

/// A component after filter merging and leaf elimination.
#[derive(Clone, Debug)]
pub enum Transformed<'g> {
    /// Free-leaf query over an overlay of the base graph.
    FreeLeaf { query: Crpq, view: GraphView<'g>, fresh: FreshSymbols },
    /// At most one free variable: the result is already known.
    Degenerate(BindingRelation),
}

/// Merges the filters of the component's free variables into incident
/// atoms, then eliminates every bound leaf.
pub fn to_free_leaf<'g>(
    component: &Crpq,
    filters: &HashMap<Var, VertexSet>,
    view: &GraphView<'g>,
) -> Result<Transformed<'g>> {
    let mut fresh = FreshSymbols::new();
    let mut atoms = component.atoms().to_vec();
    let mut view = view.clone();
    for x in component.free() {
        if let Some(set) = filters.get(x) {
            let j = atoms.iter().position(|a| a.touches(x)).expect("free variable has an atom");
            view = merge_filter(&mut atoms[j], x, set.clone(), &view, &mut fresh)?;
        }
    }
    let done = eliminate_leaves(atoms, component.free(), view, &mut fresh)?;
    if let Some((var, set)) = done.last {
        return Ok(Transformed::Degenerate(match component.free() {
            [] if set.is_empty() => BindingRelation::empty(Vec::new()),
            [] => BindingRelation::unit(),
            _ => BindingRelation::unary(var, set.iter()),
        }));
    }
    let query = Crpq::new(done.atoms, component.free().to_vec())?;
    Ok(Transformed::FreeLeaf { query, view: done.view, fresh })
}

struct ComponentResult {
    output: BindingRelation,
    rounds: Vec<RoundReport>,
    steps: StepCounts,
}

fn eval_component(component: &Crpq, filters: &HashMap<Var, VertexSet>, view: &GraphView<'_>) -> Result<ComponentResult> {
    match to_free_leaf(component, filters, view)? {
        Transformed::Degenerate(output) => Ok(ComponentResult { output, rounds: Vec::new(), steps: StepCounts::default() }),
        Transformed::FreeLeaf { query, view, mut fresh } => {
            let report = eval_freeleaf(&query, &view, &mut fresh)?;
            Ok(ComponentResult { output: report.output, rounds: report.rounds, steps: report.steps })
        }
    }
}

/// The output-sensitive pipeline.
pub fn evaluate_optimal(q: &Crpq, g: &LabeledGraph, opts: &EvalOptions) -> Result<EvalReport> {
    let verdict = check_acyclic(q);
    if !verdict.is_accepted() {
        return Err(Error::Cyclic(verdict.to_string()));
    }
    let view = g.view();
    if q.free().is_empty() {
        for c in connected_components(q) {
            if eval_single_free(&c, &view)?.is_empty() {
                return Ok(EvalReport::plain(Engine::Optimal, BindingRelation::empty(Vec::new())));
            }
        }
        return Ok(EvalReport::plain(Engine::Optimal, BindingRelation::unit()));
    }
    // Filters are all empty when some component, guards included, fails.
    let filters = compute_variable_filters(q, &view)?;
    if filters.values().any(VertexSet::is_empty) {
        return Ok(EvalReport::plain(Engine::Optimal, BindingRelation::empty(q.free().to_vec())));
    }

    let components: Vec<Crpq> = bound_connected_components(q).into_iter().filter(|c| !c.free().is_empty()).collect();
    log::debug!("{} components with free variables", components.len());
    let results: Vec<ComponentResult> = if opts.parallel {
        components.par_iter().map(|c| eval_component(c, &filters, &view)).collect::<Result<_>>()?
    } else {
        components.iter().map(|c| eval_component(c, &filters, &view)).collect::<Result<_>>()?
    };

    let mut report = EvalReport::plain(Engine::Optimal, BindingRelation::empty(Vec::new()));
    let mut relations = Vec::with_capacity(results.len());
    for r in results {
        report.component_sizes.push(r.output.len());
        report.component_rounds.push(r.rounds);
        report.steps += r.steps;
        relations.push(r.output);
    }
    report.output = yannakakis(relations, q.free())?;
    Ok(report)
}

pub fn evaluate(q: &Crpq, g: &LabeledGraph, engine: Engine, opts: &EvalOptions) -> Result<EvalReport> {
    match engine {
        Engine::Optimal => evaluate_optimal(q, g, opts),
        Engine::Baseline => {
            let outcome = baseline_eval(q, g)?;
            let mut report = EvalReport::plain(Engine::Baseline, outcome.output);
            report.out_a = Some(outcome.out_a);
            Ok(report)
        }
        Engine::Oracle => Ok(EvalReport::plain(Engine::Oracle, oracle_eval(q, g, opts.oracle_limit)?)),
    }
}
