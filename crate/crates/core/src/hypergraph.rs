//! GYO reduction over hypergraphs whose edges are small vertex sets.

/// Builds a join forest by GYO ear removal. Returns the parent of every
/// edge (`None` for roots), or `None` if the hypergraph is not
/// alpha-acyclic. Edges are removed in increasing index order whenever
/// several are ears, so the result is deterministic.
pub fn gyo_join_forest(edges: &[Vec<usize>]) -> Option<Vec<Option<usize>>> {
    let m = edges.len();
    let mut alive = vec![true; m];
    let mut parent = vec![None; m];
    let mut remaining = m;
    while remaining > 1 {
        let mut removed = false;
        for e in 0..m {
            if !alive[e] {
                continue;
            }
            // Vertices of e that some other live edge also has.
            let shared: Vec<usize> = edges[e]
                .iter()
                .copied()
                .filter(|v| (0..m).any(|f| f != e && alive[f] && edges[f].contains(v)))
                .collect();
            let witness = if shared.is_empty() {
                None
            } else {
                match (0..m).find(|&f| f != e && alive[f] && shared.iter().all(|v| edges[f].contains(v))) {
                    Some(f) => Some(f),
                    None => continue,
                }
            };
            alive[e] = false;
            parent[e] = witness;
            remaining -= 1;
            removed = true;
            break;
        }
        if !removed {
            return None;
        }
    }
    Some(parent)
}

pub fn is_alpha_acyclic(edges: &[Vec<usize>]) -> bool {
    gyo_join_forest(edges).is_some()
}
