//! Free-connex width of acyclic CRPQs, computed from bound-connected
//! components, plus an exhaustive integral edge-cover oracle.

use std::fmt;

use crate::error::{Error, Result};
use crate::query::{bound_connected_components, check_acyclic, is_trivial, Crpq, QueryMultigraph, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentWidth {
    pub id: usize,
    /// Origins of the component's atoms.
    pub atoms: Vec<usize>,
    pub free: Vec<Var>,
    pub rho_star: usize,
    pub single_edge: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidthReport {
    pub fn_fhtw: usize,
    pub components: Vec<ComponentWidth>,
    pub trivial: bool,
}

impl WidthReport {
    /// Exponent `e` in the `N * OUT^e` term of the optimal running time.
    pub fn predicted_exponent(&self) -> f64 {
        1.0 - 1.0 / self.fn_fhtw.max(2) as f64
    }

    /// One-line `key=value` rendering.
    pub fn record(&self) -> String {
        let rho: Vec<String> = self.components.iter().map(|c| c.rho_star.to_string()).collect();
        format!(
            "fn_fhtw={} trivial={} exponent={:.4} components={} rho_star={}",
            self.fn_fhtw,
            self.trivial,
            self.predicted_exponent(),
            self.components.len(),
            rho.join(",")
        )
    }
}

impl fmt::Display for WidthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fn-fhtw             {}", self.fn_fhtw)?;
        writeln!(f, "trivial             {}", self.trivial)?;
        writeln!(f, "predicted exponent  {:.4}", self.predicted_exponent())?;
        writeln!(f, "components          {}", self.components.len())?;
        writeln!(f, "  {:<4} {:<6} {:<8} {:<11} {:<16} atoms", "id", "|free|", "rho_star", "single_edge", "free")?;
        for c in &self.components {
            let free: Vec<&str> = c.free.iter().map(Var::name).collect();
            let atoms: Vec<String> = c.atoms.iter().map(|a| a.to_string()).collect();
            writeln!(
                f,
                "  {:<4} {:<6} {:<8} {:<11} {:<16} {}",
                c.id,
                c.free.len(),
                c.rho_star,
                c.single_edge,
                free.join(","),
                atoms.join(",")
            )?;
        }
        Ok(())
    }
}

/// A single atom whose two (distinct) endpoints are both free.
pub fn is_single_edge(component: &Crpq) -> bool {
    match component.atoms() {
        [a] => a.src != a.dst && component.is_free(&a.src) && component.is_free(&a.dst),
        _ => false,
    }
}

/// Whether `component` has the shape produced by
/// [`bound_connected_components`]: connected, acyclic, and either at most
/// one free variable or every free variable a leaf.
pub fn is_component_shape(component: &Crpq) -> bool {
    if component.atoms().is_empty() || !component.is_connected() || !check_acyclic(component).is_accepted() {
        return false;
    }
    component.free().len() <= 1 || component.free().iter().all(|v| component.degree(v) == 1)
}

/// Minimum number of edges covering the free variables of a bound-connected
/// component.
pub fn rho_star_free(component: &Crpq) -> Result<usize> {
    if !is_component_shape(component) {
        return Err(Error::Shape("rho_star_free needs a bound-connected component".into()));
    }
    Ok(if is_single_edge(component) { 1 } else { component.free().len() })
}

pub fn fn_fhtw(q: &Crpq) -> Result<WidthReport> {
    let verdict = check_acyclic(q);
    if !verdict.is_accepted() {
        return Err(Error::Cyclic(verdict.to_string()));
    }
    let mut components = Vec::new();
    for (id, c) in bound_connected_components(q).into_iter().enumerate() {
        components.push(ComponentWidth {
            id,
            atoms: c.atoms().iter().map(|a| a.origin).collect(),
            free: c.free().to_vec(),
            rho_star: rho_star_free(&c)?,
            single_edge: is_single_edge(&c),
        });
    }
    let fn_fhtw = components.iter().map(|c| c.rho_star).max().unwrap_or(0).max(1);
    Ok(WidthReport { fn_fhtw, components, trivial: is_trivial(q) })
}

pub const EDGE_COVER_LIMIT: usize = 20;

/// Smallest number of edges of `g` whose endpoints cover `target`, by
/// exhaustive search over edge subsets.
pub fn brute_force_edge_cover(g: &QueryMultigraph, target: &[Var]) -> Result<usize> {
    let m = g.edges.len();
    if m > EDGE_COVER_LIMIT {
        return Err(Error::CoverTooLarge { edges: m, limit: EDGE_COVER_LIMIT });
    }
    if target.is_empty() {
        return Ok(0);
    }
    let bit = |v: &Var| target.iter().position(|t| t == v).map_or(0u64, |i| 1 << i);
    let covers: Vec<u64> = g.edges.iter().map(|(s, d, _)| bit(s) | bit(d)).collect();
    let all = covers.iter().fold(0, |acc, c| acc | c);
    let want = (1u64 << target.len()) - 1;
    if all != want {
        let missing = target.iter().find(|v| all & bit(v) == 0).expect("some target uncovered");
        return Err(Error::Uncoverable(missing.to_string()));
    }
    let mut best = m;
    for mask in 1u32..(1u32 << m) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covered = (0..m).filter(|i| mask >> i & 1 == 1).fold(0, |acc, i| acc | covers[i]);
        if covered == want {
            best = size;
        }
    }
    Ok(best)
}
