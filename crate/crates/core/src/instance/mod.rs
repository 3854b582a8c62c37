//! Semi-random planted instances: parameters, generators and the instance file.

mod gen;
mod io;
mod params;

pub use gen::{
    apply_adversary, build_dense_core, build_expander, build_gamma_part, generate, plant_cross_edges, random_regular,
    AdversarySpec, AdversaryStrategy, DEFAULT_EXPANDER_RETRIES,
};
pub use io::{load_instance, read_instance, save_instance, write_instance, FORMAT_VERSION};
pub use params::{CoreStyle, ModelKind, ModelParams};

use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::scalar::Scalar;

/// Generated graph together with its hidden planted set and edge provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance<T: Scalar> {
    pub params: ModelParams<T>,
    pub seed: u64,
    pub graph: WeightedGraph<T>,
    pub planted: VertexSubset,
    /// Pairs removed by the monotone adversary, in deletion order.
    pub adversary_log: Vec<(usize, usize)>,
    /// Random `S x (V \ S)` edges as first generated.
    pub cross_edge_log: Vec<(usize, usize)>,
    /// Outer-part edges as first generated (global indices).
    pub outer_edge_log: Vec<(usize, usize)>,
}

impl<T: Scalar> PlantedInstance<T> {
    pub fn n(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn k(&self) -> usize {
        self.planted.len()
    }

    /// Vertices outside the planted set.
    pub fn outside(&self) -> VertexSubset {
        (0..self.n()).filter(|&v| !self.planted.contains(v)).collect()
    }

    /// Checks the structural invariants that do not need eigen or flow certificates.
    pub fn check(&self) -> Result<()> {
        let n = self.n();
        if self.params.n != n {
            return Err(DksError::param(format!("params.n = {} but graph has {n} vertices", self.params.n)));
        }
        self.planted.check(n)?;
        if self.planted.len() != self.params.k {
            return Err(DksError::param(format!(
                "planted set has {} vertices, expected k = {}",
                self.planted.len(),
                self.params.k
            )));
        }
        let s = &self.planted;
        let avg = self.graph.average_degree(s)?;
        let scale = T::one() + self.params.d.abs();
        if (avg - self.params.d).abs() > T::DENSITY_TOL * scale {
            return Err(DksError::param(format!("planted average degree {avg} differs from d = {}", self.params.d)));
        }
        let norm = |&(u, v): &(usize, usize)| (u.min(v), u.max(v));
        let cross: std::collections::BTreeSet<_> = self.cross_edge_log.iter().map(norm).collect();
        let outer: std::collections::BTreeSet<_> = self.outer_edge_log.iter().map(norm).collect();
        for e in &cross {
            if s.contains(e.0) == s.contains(e.1) {
                return Err(DksError::param(format!("cross edge {e:?} does not join S to its complement")));
            }
        }
        for e in &outer {
            if s.contains(e.0) || s.contains(e.1) {
                return Err(DksError::param(format!("outer edge {e:?} touches S")));
            }
        }
        for e in self.adversary_log.iter().map(norm) {
            if !cross.contains(&e) && !outer.contains(&e) {
                return Err(DksError::param(format!("deleted pair {e:?} was never a random or outer edge")));
            }
            if self.graph.has_edge(e.0, e.1) {
                return Err(DksError::param(format!("deleted pair {e:?} is still present")));
            }
        }
        Ok(())
    }
}
