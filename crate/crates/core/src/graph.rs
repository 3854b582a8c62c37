//! Weighted undirected graphs and vertex subsets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::scalar::Scalar;

/// Sorted, duplicate-free set of vertex indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexSubset {
    members: Vec<usize>,
}

impl VertexSubset {
    /// Builds a subset, sorting and dropping repeated indices.
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        VertexSubset { members }
    }

    pub fn empty() -> Self {
        VertexSubset::default()
    }

    /// `{0, 1, .., n-1}`
    pub fn range(n: usize) -> Self {
        VertexSubset {
            members: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn intersection(&self, other: &VertexSubset) -> VertexSubset {
        VertexSubset {
            members: self.iter().filter(|&v| other.contains(v)).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &VertexSubset) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    /// Errors if any member is `>= n`.
    pub fn check(&self, n: usize) -> Result<()> {
        match self.members.last() {
            Some(&v) if v >= n => Err(DksError::Index { index: v, n }),
            _ => Ok(()),
        }
    }

    pub fn mask(&self, n: usize) -> Result<Vec<bool>> {
        self.check(n)?;
        let mut mask = vec![false; n];
        for &v in &self.members {
            mask[v] = true;
        }
        Ok(mask)
    }
}

impl FromIterator<usize> for VertexSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VertexSubset::new(iter)
    }
}

/// Undirected graph with strictly positive weights on unordered pairs.
///
/// Immutable once built; the adjacency lists are derived from the pair map.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T: Scalar> {
    n: usize,
    weights: BTreeMap<(usize, usize), T>,
    adj: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn empty(n: usize) -> Self {
        WeightedGraph {
            n,
            weights: BTreeMap::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from `(u, v, w)` triples in any orientation.
    ///
    /// Zero weights are skipped. Self-loops, repeated pairs and negative or
    /// non-finite weights are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (u, v, w) in edges {
            if u >= n || v >= n {
                return Err(DksError::Index { index: u.max(v), n });
            }
            if u == v {
                return Err(DksError::param(format!("self-loop at vertex {u}")));
            }
            if !w.is_finite() || w < T::zero() {
                return Err(DksError::param(format!("edge ({u}, {v}) has invalid weight {w}")));
            }
            if w == T::zero() {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if weights.insert(key, w).is_some() {
                return Err(DksError::param(format!("edge ({}, {}) listed twice", key.0, key.1)));
            }
        }
        Ok(Self::from_map(n, weights))
    }

    fn from_map(n: usize, weights: BTreeMap<(usize, usize), T>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (&(u, v), &w) in &weights {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(j, _)| j);
        }
        WeightedGraph { n, weights, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    /// Edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.weights.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn weight(&self, u: usize, v: usize) -> T {
        self.weights
            .get(&(u.min(v), u.max(v)))
            .copied()
            .unwrap_or_else(T::zero)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.weights.contains_key(&(u.min(v), u.max(v)))
    }

    /// Neighbours of `i` with weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.adj[i]
    }

    pub fn max_weight(&self) -> T {
        self.weights.values().fold(T::zero(), |m, &w| m.max(w))
    }

    pub fn total_weight(&self) -> T {
        self.weights.values().copied().sum()
    }

    pub fn weighted_degree(&self, i: usize) -> Result<T> {
        if i >= self.n {
            return Err(DksError::Index { index: i, n: self.n });
        }
        Ok(self.adj[i].iter().map(|&(_, w)| w).sum())
    }

    pub fn degrees(&self) -> Vec<T> {
        self.adj
            .iter()
            .map(|list| list.iter().map(|&(_, w)| w).sum())
            .collect()
    }

    /// Total weight of edges with both endpoints in `subset`.
    pub fn rho(&self, subset: &VertexSubset) -> Result<T> {
        let mask = subset.mask(self.n)?;
        let mut total = T::zero();
        for i in subset.iter() {
            for &(j, w) in &self.adj[i] {
                if j > i && mask[j] {
                    total = total + w;
                }
            }
        }
        Ok(total)
    }

    /// `2 rho(subset) / |subset|`.
    pub fn average_degree(&self, subset: &VertexSubset) -> Result<T> {
        if subset.is_empty() {
            return Err(DksError::Domain("average degree of an empty subset".into()));
        }
        Ok(T::of(2.0) * self.rho(subset)? / T::of_usize(subset.len()))
    }

    /// Subgraph induced on `subset`, reindexed to `0..|subset|`.
    ///
    /// The second value maps new indices back to the original vertices.
    pub fn induced_subgraph(&self, subset: &VertexSubset) -> Result<(WeightedGraph<T>, Vec<usize>)> {
        subset.check(self.n)?;
        let mapping: Vec<usize> = subset.members().to_vec();
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in mapping.iter().enumerate() {
            index[old] = new;
        }
        let mut weights = BTreeMap::new();
        for (&(u, v), &w) in &self.weights {
            if index[u] != usize::MAX && index[v] != usize::MAX {
                weights.insert((index[u], index[v]), w);
            }
        }
        Ok((Self::from_map(mapping.len(), weights), mapping))
    }

    /// Copy of the graph with the listed pairs removed (absent pairs are ignored).
    pub fn without_edges(&self, pairs: &[(usize, usize)]) -> Self {
        let mut weights = self.weights.clone();
        for &(u, v) in pairs {
            weights.remove(&(u.min(v), u.max(v)));
        }
        Self::from_map(self.n, weights)
    }

    /// Copy with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        let weights = self.weights.iter().map(|(&e, &w)| (e, w * c)).collect();
        Self::from_map(self.n, weights)
    }

    /// Disjoint union; `other`'s vertices are shifted by `self.vertex_count()`.
    pub fn disjoint_union(&self, other: &WeightedGraph<T>) -> Self {
        let shift = self.n;
        let mut weights = self.weights.clone();
        for (&(u, v), &w) in &other.weights {
            weights.insert((u + shift, v + shift), w);
        }
        Self::from_map(self.n + other.n, weights)
    }

    /// Adds edges to a copy of the graph; pairs already present are rejected.
    pub fn with_added_edges(&self, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        let extra = Self::from_edges(self.n, edges)?;
        let mut weights = self.weights.clone();
        for (e, w) in extra.weights {
            if weights.insert(e, w).is_some() {
                return Err(DksError::param(format!("edge ({}, {}) already present", e.0, e.1)));
            }
        }
        Ok(Self::from_map(self.n, weights))
    }

    /// Converts every weight to another scalar type.
    pub fn cast<U: Scalar>(&self) -> WeightedGraph<U> {
        let weights = self
            .weights
            .iter()
            .map(|(&e, &w)| (e, U::of(w.as_f64())))
            .collect();
        WeightedGraph::from_map(self.n, weights)
    }

    /// Dense symmetric adjacency matrix in row-major order.
    pub fn dense_adjacency(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for (&(u, v), &w) in &self.weights {
            a[u * n + v] = w.as_f64();
            a[v * n + u] = w.as_f64();
        }
        a
    }
}
