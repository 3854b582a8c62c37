use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::scalar::Scalar;

/// Largest `n` accepted by [`brute_force_dks`].
pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Exact densest `k`-subgraph by enumerating all `k`-subsets in
/// lexicographic order; ties keep the lexicographically smallest set.
pub fn brute_force_dks<T: Scalar>(graph: &WeightedGraph<T>, k: usize) -> Result<(VertexSubset, T)> {
    let n = graph.vertex_count();
    if n > BRUTE_FORCE_MAX_N {
        return Err(DksError::Size(format!("brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")));
    }
    if k > n {
        return Err(DksError::param(format!("k = {k} exceeds n = {n}")));
    }
    let mut w = vec![T::zero(); n * n];
    for (u, v, x) in graph.edges() {
        w[u * n + v] = x;
        w[v * n + u] = x;
    }
    let mut best: Option<(Vec<usize>, T)> = None;
    let mut chosen = Vec::with_capacity(k);
    search(&w, n, k, 0, T::zero(), &mut chosen, &mut best);
    let (set, value) = best.expect("at least one subset exists");
    Ok((VertexSubset::new(set), value))
}

fn search<T: Scalar>(
    w: &[T],
    n: usize,
    k: usize,
    next: usize,
    value: T,
    chosen: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, T)>,
) {
    if chosen.len() == k {
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            *best = Some((chosen.clone(), value));
        }
        return;
    }
    let need = k - chosen.len();
    for v in next..=n - need {
        let gain = chosen.iter().fold(T::zero(), |acc, &u| acc + w[u * n + v]);
        chosen.push(v);
        search(w, n, k, v + 1, value + gain, chosen, best);
        chosen.pop();
    }
}
