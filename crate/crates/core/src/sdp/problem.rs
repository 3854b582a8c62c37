use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::graph::WeightedGraph;
use crate::scalar::Scalar;

/// Number of scalar constraints in each family of the relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTally {
    /// `sum_i G_ii = k`
    pub trace: usize,
    /// `sum_j G_ij <= k G_ii`
    pub row_sum: usize,
    /// `G_ij >= 0`, unordered pairs
    pub nonneg: usize,
    /// `G_ij <= G_ii`, ordered pairs
    pub dominance: usize,
    /// `G_ii <= 1`
    pub cap: usize,
    /// `G_iI = G_ii`
    pub tie: usize,
    /// `G_II = 1`
    pub unit: usize,
}

impl ConstraintTally {
    pub fn total(&self) -> usize {
        self.trace + self.row_sum + self.nonneg + self.dominance + self.cap + self.tie + self.unit
    }
}

/// Relaxation over the Gram matrix of `X_1, .., X_n, I` (index `n` is `I`).
///
/// Maximise `(1/2) sum_ij A_ij G_ij` subject to the constraint families in
/// [`ConstraintTally`] and `G` positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub n: usize,
    pub k: usize,
    /// Dense adjacency, row-major `n x n`.
    pub adjacency: Vec<f64>,
    /// Edge list `(u, v, w)` with `u < v`.
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn build_problem<T: Scalar>(graph: &WeightedGraph<T>, k: usize) -> Result<SdpProblem> {
    let n = graph.vertex_count();
    if k == 0 || k > n {
        return Err(DksError::param(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(SdpProblem {
        n,
        k,
        adjacency: graph.dense_adjacency(),
        edges: graph.edges().map(|(u, v, w)| (u, v, w.as_f64())).collect(),
    })
}

impl SdpProblem {
    pub fn dimension(&self) -> usize {
        self.n + 1
    }

    pub fn tally(&self) -> ConstraintTally {
        let n = self.n;
        ConstraintTally {
            trace: 1,
            row_sum: n,
            nonneg: n * n.saturating_sub(1) / 2,
            dominance: n * n.saturating_sub(1),
            cap: n,
            tie: n,
            unit: 1,
        }
    }

    /// Objective coefficient `C_ij` on the `(n+1) x (n+1)` Gram matrix.
    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n {
            0.5 * self.adjacency[i * self.n + j]
        } else {
            0.0
        }
    }

    /// `(1/2) sum_ij A_ij G_ij` for a row-major Gram matrix of side `n + 1`.
    pub fn objective(&self, gram: &[f64]) -> f64 {
        let dim = self.dimension();
        self.edges.iter().map(|&(u, v, w)| w * 0.5 * (gram[u * dim + v] + gram[v * dim + u])).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexSubset;
    use crate::sdp::{feasibility_report, indicator_gram};

    #[test]
    fn tally_for_three_vertices() {
        let g = WeightedGraph::<f64>::from_edges(3, [(0, 1, 1.0)]).unwrap();
        let p = build_problem(&g, 2).unwrap();
        assert_eq!(p.dimension(), 4);
        let t = p.tally();
        assert_eq!(
            (t.trace, t.row_sum, t.nonneg, t.dominance, t.cap, t.tie, t.unit),
            (1, 3, 3, 6, 3, 3, 1)
        );
        assert_eq!(t.total(), 20);
    }

    #[test]
    fn zero_graph_has_zero_objective() {
        let p = build_problem(&WeightedGraph::<f64>::empty(5), 2).unwrap();
        assert!((0..6).all(|i| (0..6).all(|j| p.coefficient(i, j) == 0.0)));
        assert!(build_problem(&WeightedGraph::<f64>::empty(5), 0).is_err());
        assert!(build_problem(&WeightedGraph::<f64>::empty(5), 6).is_err());
    }

    #[test]
    fn indicator_solution_scores_rho() {
        let g = WeightedGraph::from_edges(
            6,
            [(0, 1, 2.0), (1, 2, 1.5), (0, 2, 0.5), (2, 3, 1.0), (4, 5, 3.0)],
        )
        .unwrap();
        let s = VertexSubset::new([0, 1, 2]);
        let p = build_problem(&g, 3).unwrap();
        let gram = indicator_gram(6, &s);
        assert_eq!(p.objective(&gram), g.rho(&s).unwrap());
        let report = feasibility_report(6, 3, &gram).unwrap();
        assert_eq!(report.max_violation(), 0.0);
    }
}
