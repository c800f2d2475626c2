//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the timing criterion has the machine to itself.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crpq::baseline::{materialize_pairs, oracle_eval, ORACLE_ROW_LIMIT};
use crpq::bench::{run_bench, slope_summary, Family};
use crpq::freeleaf::eval_freeleaf;
use crpq::graph::{gen_random, gen_star_instance, EdgeSource, LabeledGraph, STAR_QUERY};
use crpq::query::{bound_connected_components, is_trivial, k_expansion};
use crpq::regex::FreshSymbols;
use crpq::restriction::{compose, propagate, restrict_single_rpq, RestrictionTable};
use crpq::width::brute_force_edge_cover;
use crpq::workload::{random_acyclic_query, random_free_leaf_query, random_regex, QueryShape};
use crpq::{evaluate, fn_fhtw, parse_query, Crpq, Engine, Error, EvalOptions, Regex, Var, VertexId};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The shared random corpus of (query, graph) pairs.
fn random_case(seed: u64) -> (Crpq, LabeledGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = rng.gen_range(1..=4);
    let shape = QueryShape { max_atoms: 6, max_free: 3, alphabet_size: alphabet, regex_depth: 2, split_prob: 0.15 };
    let q = random_acyclic_query(&mut rng, &shape);
    let nv = rng.gen_range(2..=60);
    let ne = rng.gen_range(nv..=(4 * nv).min(240));
    (q, gen_random(nv, ne, alphabet, seed ^ 0x5eed))
}

fn oracle(q: &Crpq, g: &LabeledGraph) -> Result<crpq::BindingRelation, String> {
    oracle_eval(q, g, ORACLE_ROW_LIMIT).map_err(|e| format!("oracle: {e}"))
}

fn criterion_oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut nonempty = 0;
    for seed in 0..500 {
        let (q, g) = random_case(seed);
        let expected = oracle(&q, &g)?;
        let got = evaluate(&q, &g, Engine::Optimal, &EvalOptions::default()).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(got.output == expected, || format!("seed {seed}: optimal {} rows, oracle {} rows\n{q}", got.output.len(), expected.len()))?;
        nonempty += usize::from(!expected.is_empty());
    }
    Ok(format!("500/500 seeds agree ({nonempty} with non-empty answers) in {:.1}s", start.elapsed().as_secs_f64()))
}

fn criterion_star_fixture() -> Verdict {
    let q = parse_query(STAR_QUERY).map_err(|e| e.to_string())?;
    let mut skipped = Vec::new();
    for n in [1, 10, 100, 1000, 10000] {
        let g = gen_star_instance(n);
        ensure(g.num_vertices() == 2 * n + 5 && g.num_edges() == 2 * n + 4, || format!("n={n}: wrong instance size"))?;
        for engine in Engine::ALL {
            match evaluate(&q, &g, engine, &EvalOptions::default()) {
                Ok(report) => {
                    let rows: Vec<Vec<&str>> =
                        report.output.rows().map(|r| r.iter().map(|&v| g.vertex_name(v)).collect()).collect();
                    ensure(rows == vec![vec!["u_0", "z_1", "z_2"]], || format!("n={n} {engine}: {rows:?}"))?;
                }
                Err(Error::ResourceGuard { .. }) if engine == Engine::Oracle => skipped.push(n),
                Err(e) => return Err(format!("n={n} {engine}: {e}")),
            }
        }
    }
    Ok(format!("single tuple (u_0, z_1, z_2) for every n and engine; oracle skipped by guard at n={skipped:?}"))
}

fn criterion_scaling() -> Verdict {
    let opts = EvalOptions::default();
    let reps = 5;
    let opt_ns: Vec<usize> = (13..=16).map(|k| 1 << k).collect();
    let base_ns: Vec<usize> = (10..=13).map(|k| 1 << k).collect();
    let optimal = run_bench(Family::Star, &opt_ns, &[Engine::Optimal], reps, 0, &opts).map_err(|e| e.to_string())?;
    let baseline = run_bench(Family::Star, &base_ns, &[Engine::Baseline], reps, 0, &opts).map_err(|e| e.to_string())?;
    let s_opt = slope_summary(&optimal)[0].1.ok_or("missing optimal slope")?;
    let s_base = slope_summary(&baseline)[0].1.ok_or("missing baseline slope")?;
    let detail = format!("optimal slope {s_opt:.3} over n=2^13..2^16, baseline slope {s_base:.3} over n=2^10..2^13 ({reps} reps, medians)");
    ensure((0.75..=1.40).contains(&s_opt) && s_base >= 1.60, || detail.clone())?;
    Ok(detail)
}

/// Bound-connected groups computed straight from the definition: atoms are
/// linked when they share a bound variable.
fn strict_components(q: &Crpq) -> Vec<Crpq> {
    let n = q.atoms().len();
    let mut group: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                let a = &q.atoms()[i];
                let b = &q.atoms()[j];
                let shares = [&a.src, &a.dst].iter().any(|v| !q.is_free(v) && b.touches(v));
                if shares && group[i] != group[j] {
                    let m = group[i].min(group[j]);
                    group[i] = m;
                    group[j] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let ids: BTreeSet<usize> = group.iter().copied().collect();
    ids.into_iter()
        .map(|g| q.subquery(&(0..n).filter(|&i| group[i] == g).collect::<Vec<_>>()))
        .collect()
}

fn criterion_widths() -> Verdict {
    let star = "atom: X r1 Y1\natom: X r2 Y2\natom: X r3 Y3\n";
    let q1 = parse_query(&format!("free: X Y1 Y2 Y3\n{star}")).unwrap();
    let q2 = parse_query(&format!("free: Y1 Y2 Y3\n{star}")).unwrap();
    let running = running_example(&[]);
    for (name, q, want) in [("Q1", &q1, 1), ("Q2", &q2, 3), ("running example", &running, 3)] {
        let got = fn_fhtw(q).map_err(|e| e.to_string())?.fn_fhtw;
        ensure(got == want, || format!("{name}: fn-fhtw {got}, expected {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let shape = QueryShape { max_atoms: 10, max_free: 6, alphabet_size: 2, regex_depth: 1, split_prob: 0.1 };
    let mut nontrivial = 0;
    for i in 0..200 {
        let q = random_acyclic_query(&mut rng, &shape);
        let report = fn_fhtw(&q).map_err(|e| e.to_string())?;
        let mut cover = 1;
        for c in strict_components(&q) {
            cover = cover.max(brute_force_edge_cover(&c.multigraph(), c.free()).map_err(|e| e.to_string())?);
        }
        ensure(report.fn_fhtw == cover, || format!("query {i}: fn-fhtw {} vs edge cover {cover}\n{q}", report.fn_fhtw))?;
        for c in &report.components {
            ensure(c.free.len() <= c.rho_star.max(2), || format!("query {i}: |free| > max(rho*, 2)"))?;
        }
        let trivial = is_trivial(&q);
        nontrivial += usize::from(!trivial);
        for k in [2, 3] {
            let expanded = fn_fhtw(&k_expansion(&q, k)).map_err(|e| e.to_string())?.fn_fhtw;
            let want = if trivial { 1 } else { report.fn_fhtw.max(2) };
            ensure(expanded == want, || format!("query {i}, k={k}: expansion width {expanded}, expected {want}\n{q}"))?;
        }
    }
    Ok(format!("Q1=1, Q2=3, running example=3; 200 random queries ({nontrivial} non-trivial) match the edge-cover oracle and the expansion law"))
}

/// Brute-force relation of `regex(X, Y)` as key -> set of targets.
fn true_rpq(g: &dyn EdgeSource, regex: &Regex) -> BTreeMap<VertexId, BTreeSet<VertexId>> {
    let pairs = materialize_pairs(g, regex, usize::MAX).unwrap();
    let mut m: BTreeMap<VertexId, BTreeSet<VertexId>> = BTreeMap::new();
    for p in pairs.chunks_exact(2) {
        m.entry(p[0]).or_default().insert(p[1]);
    }
    m
}

type Relation = BTreeMap<VertexId, BTreeSet<Vec<VertexId>>>;

/// Subset, light completeness and heavy exactness of `t` against `truth`.
fn check_restriction(t: &RestrictionTable, truth: &Relation, delta: usize) -> Result<(), String> {
    for &k in t.keys() {
        ensure(truth.contains_key(&k), || format!("key {k} has no true tuples"))?;
    }
    for (k, tuples) in truth {
        let stored: Vec<Vec<VertexId>> = t.tuples(*k).map(<[VertexId]>::to_vec).collect();
        let distinct: HashSet<&Vec<VertexId>> = stored.iter().collect();
        ensure(distinct.len() == stored.len(), || format!("key {k}: repeated tuple"))?;
        ensure(stored.iter().all(|s| tuples.contains(s)), || format!("key {k}: stored tuple outside the relation"))?;
        if tuples.len() <= delta {
            ensure(stored.len() == tuples.len(), || format!("key {k}: light key incomplete ({} of {})", stored.len(), tuples.len()))?;
        } else {
            ensure(stored.len() == delta, || format!("key {k}: heavy key has {} tuples, cap {delta}", stored.len()))?;
        }
    }
    Ok(())
}

/// A random relation keyed by vertex with `width`-tuples, and a table that
/// restricts it at `delta` (first tuples in order).
fn random_relation(rng: &mut ChaCha8Rng, nv: usize, width: usize, key: &str, tail: &[&str], delta: usize) -> (Relation, RestrictionTable) {
    let mut truth: Relation = BTreeMap::new();
    for _ in 0..rng.gen_range(0..3 * nv) {
        let k = rng.gen_range(0..nv) as VertexId;
        let t: Vec<VertexId> = (0..width).map(|_| rng.gen_range(0..nv) as VertexId).collect();
        truth.entry(k).or_default().insert(t);
    }
    let lists = truth.iter().map(|(k, ts)| (*k, ts.iter().take(delta).cloned().collect::<Vec<_>>()));
    let table = RestrictionTable::from_lists(Var::new(key), tail.iter().map(|t| Var::new(t)).collect(), delta, lists).unwrap();
    (truth, table)
}

fn criterion_restrictions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 3];
    for trial in 0..1000 {
        let delta = [1, 2, 4][trial % 3];
        let nv = rng.gen_range(2..=30);
        let alphabet = rng.gen_range(1..=3);
        let g = gen_random(nv, rng.gen_range(nv..=3 * nv), alphabet, trial as u64);
        let re = random_regex(&mut rng, alphabet, 2);
        let inverted = rng.gen_bool(0.5);
        let view = if inverted { g.view().transposed() } else { g.view() };
        let re = if inverted { re.invert() } else { re };
        let ctx = |e: String| format!("trial {trial} (delta {delta}, {re}): {e}");
        let rpq = true_rpq(&view, &re);
        match trial % 3 {
            0 => {
                let t = restrict_single_rpq(&view, &re, Var::new("X"), Var::new("Y"), delta).map_err(|e| ctx(e.to_string()))?;
                let truth: Relation = rpq.iter().map(|(k, ys)| (*k, ys.iter().map(|&y| vec![y]).collect())).collect();
                check_restriction(&t, &truth, delta).map_err(ctx)?;
                let again = restrict_single_rpq(&view, &re, Var::new("X"), Var::new("Y"), delta).unwrap();
                ensure(t == again, || ctx("not deterministic".into()))?;
                counts[0] += 1;
            }
            1 => {
                let width = rng.gen_range(1..=2);
                let (s_truth, s) = random_relation(&mut rng, nv, width, "Y", &["Z1", "Z2"][..width], delta);
                let t = propagate(&view, &re, Var::new("X"), &s, delta).map_err(|e| ctx(e.to_string()))?;
                let mut truth: Relation = BTreeMap::new();
                for (x, ys) in &rpq {
                    for y in ys {
                        for z in s_truth.get(y).into_iter().flatten() {
                            truth.entry(*x).or_default().insert(z.clone());
                        }
                    }
                }
                check_restriction(&t, &truth, delta).map_err(ctx)?;
                ensure(t == propagate(&view, &re, Var::new("X"), &s, delta).unwrap(), || ctx("not deterministic".into()))?;
                counts[1] += 1;
            }
            _ => {
                let (ta, a) = random_relation(&mut rng, nv, 1, "X", &["P"], delta);
                let (tb, b) = random_relation(&mut rng, nv, 2, "X", &["Q1", "Q2"], delta);
                let t = compose(&a, &b, delta).map_err(|e| ctx(e.to_string()))?;
                let mut truth: Relation = BTreeMap::new();
                for (x, l) in &ta {
                    for r in tb.get(x).into_iter().flatten() {
                        for p in l {
                            truth.entry(*x).or_default().insert([p.clone(), r.clone()].concat());
                        }
                    }
                }
                check_restriction(&t, &truth, delta).map_err(ctx)?;
                ensure(t == compose(&a, &b, delta).unwrap(), || ctx("not deterministic".into()))?;
                counts[2] += 1;
            }
        }
    }
    Ok(format!(
        "1000 trials hold (base {}, propagate {}, compose {}) for delta in {{1,2,4}}",
        counts[0], counts[1], counts[2]
    ))
}

fn check_accounting(rounds: &[crpq::freeleaf::RoundReport], out: usize, what: &str) -> Result<(), String> {
    let bound = (out.max(1) as f64).log2().ceil() as usize + 1;
    ensure(rounds.len() <= bound, || format!("{what}: {} rounds for OUT={out}", rounds.len()))?;
    for r in rounds {
        for &h in &r.heavy_sizes {
            ensure(h * r.delta <= out, || format!("{what}: |H|={h}, delta={} exceeds OUT={out}", r.delta))?;
        }
    }
    Ok(())
}

fn criterion_doubling() -> Verdict {
    let mut passes = 0;
    let mut max_rounds = 0;
    for seed in 0..500 {
        let (q, g) = random_case(seed);
        let out = oracle(&q, &g)?.len();
        let report = evaluate(&q, &g, Engine::Optimal, &EvalOptions::default()).map_err(|e| e.to_string())?;
        for rounds in &report.component_rounds {
            check_accounting(rounds, out, &format!("seed {seed}"))?;
            passes += rounds.iter().map(|r| r.heavy_sizes.len()).sum::<usize>();
            max_rounds = max_rounds.max(rounds.len());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..50 {
        let l = 2 + i % 3;
        let q = random_free_leaf_query(&mut rng, l, 2, 7);
        let g = gen_random(rng.gen_range(5..=50), rng.gen_range(20..=150), 2, 1000 + i as u64);
        let expected = oracle(&q, &g)?;
        let report = eval_freeleaf(&q, &g.view(), &mut FreshSymbols::new()).map_err(|e| e.to_string())?;
        ensure(report.output == expected, || format!("free-leaf case {i}: output differs from oracle\n{q}"))?;
        check_accounting(&report.rounds, expected.len(), &format!("free-leaf case {i}"))?;
        passes += report.rounds.iter().map(|r| r.heavy_sizes.len()).sum::<usize>();
        max_rounds = max_rounds.max(report.rounds.len());
    }
    Ok(format!("{passes} passes checked, at most {max_rounds} rounds; bounds hold on 500 corpus + 50 free-leaf instances"))
}

/// The eleven-atom decomposition example; `regexes` overrides the default
/// single-symbol expressions.
fn running_example(regexes: &[Regex]) -> Crpq {
    let body = [
        ("A", "B"),
        ("A", "C"),
        ("A", "D"),
        ("C", "E"),
        ("C", "F"),
        ("D", "G"),
        ("E", "H"),
        ("F", "I"),
        ("F", "J"),
        ("H", "K"),
        ("H", "L"),
    ];
    let atoms = body.iter().enumerate().map(|(i, (s, d))| {
        let re = regexes.get(i).cloned().unwrap_or_else(|| Regex::symbol(&format!("r{}", i + 1)));
        (*s, re, *d)
    });
    Crpq::from_atoms(atoms, &["D", "E", "F", "G", "K", "L"]).unwrap()
}

fn criterion_decomposition() -> Verdict {
    let expected: [(&[usize], &[&str]); 4] = [
        (&[0, 1, 2, 3, 4], &["D", "E", "F"]),
        (&[5], &["D", "G"]),
        (&[6, 9, 10], &["E", "K", "L"]),
        (&[7, 8], &["F"]),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut nonempty = 0;
    let trials = 60;
    for trial in 0..trials {
        let regexes: Vec<Regex> = (0..11).map(|_| random_regex(&mut rng, 2, 1)).collect();
        let q = running_example(&regexes);
        let comps = bound_connected_components(&q);
        ensure(comps.len() == 4, || format!("trial {trial}: {} components", comps.len()))?;
        for (c, (atoms, free)) in comps.iter().zip(expected) {
            let got: Vec<usize> = c.atoms().iter().map(|a| a.origin).collect();
            let got_free: Vec<&str> = c.free().iter().map(Var::name).collect();
            ensure(got == atoms && got_free == free, || format!("trial {trial}: component {got:?} {got_free:?}"))?;
        }
        let g = gen_random(rng.gen_range(6..=14), rng.gen_range(20..=45), 2, 2000 + trial);
        let truth = oracle(&q, &g)?;
        let report = evaluate(&q, &g, Engine::Optimal, &EvalOptions::default()).map_err(|e| e.to_string())?;
        ensure(report.output == truth, || format!("trial {trial}: optimal differs from oracle"))?;
        for &size in &report.component_sizes {
            ensure(size <= truth.len(), || format!("trial {trial}: component output {size} > OUT {}", truth.len()))?;
        }
        nonempty += usize::from(!truth.is_empty());
    }
    Ok(format!("4 components match on {trials} instances ({nonempty} with non-empty answers); outputs equal the oracle"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 oracle equivalence", criterion_oracle_equivalence),
        ("2 star instance fixture", criterion_star_fixture),
        ("3 scaling contrast", criterion_scaling),
        ("4 width values", criterion_widths),
        ("5 restriction invariants", criterion_restrictions),
        ("6 doubling and heavy accounting", criterion_doubling),
        ("7 decomposition conformance", criterion_decomposition),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
