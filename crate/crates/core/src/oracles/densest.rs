//! Exact maximum-density subgraph (max over W of rho(W) / |W|).

use serde::{Deserialize, Serialize};

use super::flow::FlowNetwork;
use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LpDensestResult<T: Scalar> {
    pub value: T,
    pub witness: VertexSubset,
}

/// Source side (minus the source) of Goldberg's min cut at threshold `g`,
/// or `None` when no subset has density above `g`.
fn denser_than(degrees: &[f64], edges: &[(usize, usize, f64)], total: f64, g: f64) -> Option<Vec<usize>> {
    let n = degrees.len();
    let (s, t) = (n, n + 1);
    let scale = 1.0 + total;
    let mut net = FlowNetwork::new(n + 2, 1e-13 * scale);
    let big = total;
    for (v, &dv) in degrees.iter().enumerate() {
        net.add_arc(s, v, big);
        net.add_arc(v, t, (big + 2.0 * g - dv).max(0.0));
    }
    for &(u, v, w) in edges {
        net.add_edge(u, v, w);
    }
    let cut = net.max_flow(s, t);
    // cut = n * big + 2 * min_S (g |S| - rho(S))
    if cut < big * n as f64 - 1e-11 * scale * n as f64 {
        let side = net.source_side(s);
        let members: Vec<usize> = (0..n).filter(|&v| side[v]).collect();
        (!members.is_empty()).then_some(members)
    } else {
        None
    }
}

/// Exact densest subgraph by binary search on the density threshold with a
/// max-flow test, finished by Dinkelbach steps on the witness density.
pub fn densest_subgraph<T: Scalar>(graph: &WeightedGraph<T>) -> Result<LpDensestResult<T>> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(DksError::Domain("densest subgraph of an empty graph".into()));
    }
    if graph.edge_count() == 0 {
        return Ok(LpDensestResult {
            value: T::zero(),
            witness: VertexSubset::new([0]),
        });
    }
    let edges: Vec<(usize, usize, f64)> = graph.edges().map(|(u, v, w)| (u, v, w.as_f64())).collect();
    let degrees: Vec<f64> = graph.degrees().iter().map(|d| d.as_f64()).collect();
    let total: f64 = edges.iter().map(|e| e.2).sum();

    let density = |members: &[usize]| -> T {
        let s = VertexSubset::new(members.iter().copied());
        graph.rho(&s).expect("members are in range") / T::of_usize(s.len())
    };

    // the heaviest single edge is a feasible start
    let heaviest = edges.iter().fold((0, 0, 0.0), |best, &e| if e.2 > best.2 { e } else { best });
    let mut witness = vec![heaviest.0, heaviest.1];
    let mut lo = density(&witness).as_f64();
    let mut hi = total;
    let resolution = 1e-9 * (1.0 + total);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        match denser_than(&degrees, &edges, total, mid) {
            Some(members) => {
                let d = density(&members).as_f64();
                if d > lo {
                    lo = d;
                    witness = members;
                } else {
                    lo = mid;
                }
            }
            None => hi = mid,
        }
    }
    // Dinkelbach: each step strictly increases the witness density
    for _ in 0..64 {
        let current = density(&witness).as_f64();
        match denser_than(&degrees, &edges, total, current) {
            Some(members) if density(&members).as_f64() > current => witness = members,
            _ => break,
        }
    }
    let witness = VertexSubset::new(witness);
    let value = density(witness.members());
    Ok(LpDensestResult { value, witness })
}
