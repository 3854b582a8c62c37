use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::params::{CoreStyle, ModelParams};
use super::PlantedInstance;
use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::oracles::{certify_expander, densest_subgraph, ExpanderCertificate};
use crate::rng::{self, Rng};
use crate::scalar::Scalar;

pub const DEFAULT_EXPANDER_RETRIES: usize = 50;
const PAIRING_RESTARTS: usize = 200;
const GAMMA_RETRIES: usize = 200;

/// One attempt of the sequential pairing model: repeatedly join two random
/// free points whose vertices are distinct and not yet adjacent. `None` when
/// the remaining points admit no legal pair.
fn try_pairing(m: usize, d: usize, r: &mut Rng) -> Option<Vec<(usize, usize)>> {
    let mut points: Vec<usize> = (0..m).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    let mut adjacent = vec![false; m * m];
    let mut edges = Vec::with_capacity(m * d / 2);
    let mut failures = 0usize;
    while !points.is_empty() {
        let len = points.len();
        let (a, b) = (r.random_range(0..len), r.random_range(0..len));
        let (u, v) = (points[a], points[b]);
        if a != b && u != v && !adjacent[u * m + v] {
            adjacent[u * m + v] = true;
            adjacent[v * m + u] = true;
            edges.push((u.min(v), u.max(v)));
            points.swap_remove(a.max(b));
            points.swap_remove(a.min(b));
            failures = 0;
            continue;
        }
        failures += 1;
        if failures < 64 + 4 * len {
            continue;
        }
        if len > 4096 {
            failures = 0;
            continue;
        }
        // stuck: choose among the legal pairs explicitly, or give up
        let legal: Vec<(usize, usize)> = (0..len)
            .flat_map(|a| (a + 1..len).map(move |b| (a, b)))
            .filter(|&(a, b)| points[a] != points[b] && !adjacent[points[a] * m + points[b]])
            .collect();
        if legal.is_empty() {
            return None;
        }
        let (a, b) = legal[r.random_range(0..legal.len())];
        let (u, v) = (points[a], points[b]);
        adjacent[u * m + v] = true;
        adjacent[v * m + u] = true;
        edges.push((u.min(v), u.max(v)));
        points.swap_remove(b);
        points.swap_remove(a);
        failures = 0;
    }
    edges.sort_unstable();
    Some(edges)
}

/// Simple `d`-regular graph on `m` vertices from the pairing model with
/// restarts. Dense requests are generated as the complement of a sparse one.
pub fn random_regular(m: usize, d: usize, r: &mut Rng) -> Result<Vec<(usize, usize)>> {
    if d >= m || (m * d) % 2 == 1 {
        return Err(DksError::param(format!("no simple {d}-regular graph on {m} vertices")));
    }
    let complement = d > (m - 1) / 2;
    let target = if complement { m - 1 - d } else { d };
    for _ in 0..PAIRING_RESTARTS {
        if let Some(edges) = try_pairing(m, target, r) {
            if !complement {
                return Ok(edges);
            }
            let mut present = vec![false; m * m];
            for &(u, v) in &edges {
                present[u * m + v] = true;
            }
            return Ok((0..m)
                .flat_map(|u| (u + 1..m).map(move |v| (u, v)))
                .filter(|&(u, v)| !present[u * m + v])
                .collect());
        }
    }
    Err(DksError::RetryExhausted {
        attempts: PAIRING_RESTARTS,
        detail: format!("pairing model for a {d}-regular graph on {m} vertices"),
        best: None,
    })
}

fn unit_graph<T: Scalar>(m: usize, edges: &[(usize, usize)]) -> Result<WeightedGraph<T>> {
    WeightedGraph::from_edges(m, edges.iter().map(|&(u, v)| (u, v, T::one())))
}

/// Planted core on `k` vertices with average weighted degree `d`.
pub fn build_dense_core<T: Scalar>(k: usize, d: T, style: CoreStyle, seed: u64) -> Result<WeightedGraph<T>> {
    let mut r = rng::stream(seed, rng::CORE);
    match style {
        CoreStyle::Regular => {
            let df = d.as_f64();
            if df.fract() != 0.0 || df < 1.0 {
                return Err(DksError::param(format!("regular core needs an integer degree, got {d}")));
            }
            let d = df as usize;
            if d >= k || (k * d) % 2 == 1 {
                return Err(DksError::param(format!("no simple {d}-regular graph on {k} vertices")));
            }
            unit_graph(k, &random_regular(k, d, &mut r)?)
        }
        CoreStyle::WeightedRandom => {
            if k < 2 || !(d > T::zero()) {
                return Err(DksError::param(format!("weighted core needs k >= 2 and d > 0, got k = {k}, d = {d}")));
            }
            let mut edges = Vec::new();
            while edges.is_empty() {
                for u in 0..k {
                    for v in u + 1..k {
                        if r.random_bool(0.5) {
                            // uniform on (0, 1]
                            edges.push((u, v, 1.0 - r.random::<f64>()));
                        }
                    }
                }
            }
            let total: f64 = edges.iter().map(|e| e.2).sum();
            let scale = d.as_f64() * k as f64 / (2.0 * total);
            WeightedGraph::from_edges(k, edges.into_iter().map(|(u, v, w)| (u, v, T::of(w * scale))))
        }
    }
}

/// Random `d_prime`-regular graph on `m` vertices whose non-top adjacency
/// eigenvalues are certified to lie in `[-lambda, lambda]`.
pub fn build_expander<T: Scalar>(
    m: usize,
    d_prime: usize,
    lambda: f64,
    seed: u64,
    max_retries: usize,
) -> Result<(WeightedGraph<T>, ExpanderCertificate)> {
    if d_prime == 0 || d_prime >= m || (m * d_prime) % 2 == 1 {
        return Err(DksError::param(format!("no simple {d_prime}-regular graph on {m} vertices")));
    }
    if !(lambda > 0.0) {
        return Err(DksError::param(format!("lambda must be positive, got {lambda}")));
    }
    let mut r = rng::stream(seed, rng::OUTER);
    let mut best = f64::INFINITY;
    for _ in 0..max_retries.max(1) {
        let graph = unit_graph::<T>(m, &random_regular(m, d_prime, &mut r)?)?;
        let cert = certify_expander(&graph, d_prime as f64, lambda)?;
        if cert.certified {
            return Ok((graph, cert));
        }
        best = best.min(cert.lambda_rest);
    }
    Err(DksError::RetryExhausted {
        attempts: max_retries.max(1),
        detail: format!("({d_prime}, {lambda})-expander on {m} vertices; smallest lambda seen {best:.6}"),
        best: Some(best),
    })
}

/// Outer graph on `m` vertices whose maximum subgraph density is at most `gamma d`.
///
/// Below density one a random graph essentially always contains a path of
/// length two, so the construction is a random maximum matching when
/// `1/2 <= gamma d < 1` and the empty graph below `1/2`. From `gamma d >= 1`
/// on it is a random graph of average degree `min(1.8 gamma d, m - 1)`,
/// re-sampled until the densest-subgraph certificate passes; the target
/// degree shrinks by 10% after every ten rejections.
pub fn build_gamma_part<T: Scalar>(m: usize, gamma: T, d: T, seed: u64) -> Result<WeightedGraph<T>> {
    let bound = (gamma * d).as_f64();
    if !(bound > 0.0) {
        return Err(DksError::param(format!("gamma d must be positive, got {bound}")));
    }
    let mut r = rng::stream(seed, rng::OUTER);
    let certified = |g: &WeightedGraph<T>| -> Result<bool> {
        Ok(m == 0 || densest_subgraph(g)?.value.as_f64() <= bound + 1e-9)
    };
    if bound < 1.0 {
        let graph = if bound < 0.5 || m < 2 {
            WeightedGraph::empty(m)
        } else {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut r);
            let edges: Vec<(usize, usize)> = order
                .chunks_exact(2)
                .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
                .collect();
            unit_graph(m, &edges)?
        };
        debug_assert!(certified(&graph)?);
        return Ok(graph);
    }
    let mut target = (1.8 * bound).min((m - 1) as f64);
    let mut best = f64::INFINITY;
    for attempt in 0..GAMMA_RETRIES {
        if attempt > 0 && attempt % 10 == 0 {
            target *= 0.9;
        }
        let q = (target / (m - 1) as f64).min(1.0);
        let mut edges = Vec::new();
        for u in 0..m {
            for v in u + 1..m {
                if r.random_bool(q) {
                    edges.push((u, v));
                }
            }
        }
        let graph = unit_graph(m, &edges)?;
        if certified(&graph)? {
            return Ok(graph);
        }
        best = best.min(densest_subgraph(&graph)?.value.as_f64());
    }
    Err(DksError::RetryExhausted {
        attempts: GAMMA_RETRIES,
        detail: format!("outer graph on {m} vertices with density at most {bound}"),
        best: Some(best),
    })
}

/// Disjoint union of `core` (vertices `0..k`) and `outer` (`k..n`) plus each
/// cross pair independently with probability `p` at weight one.
pub fn plant_cross_edges<T: Scalar>(
    core: &WeightedGraph<T>,
    outer: &WeightedGraph<T>,
    p: T,
    seed: u64,
) -> Result<(WeightedGraph<T>, Vec<(usize, usize)>)> {
    let p = p.as_f64();
    if !(0.0..=1.0).contains(&p) {
        return Err(DksError::param(format!("edge probability must lie in [0, 1], got {p}")));
    }
    let mut r = rng::stream(seed, rng::CROSS);
    let k = core.vertex_count();
    let n = k + outer.vertex_count();
    let mut log = Vec::new();
    for i in 0..k {
        for j in k..n {
            if r.random_bool(p) {
                log.push((i, j));
            }
        }
    }
    let graph = core
        .disjoint_union(outer)
        .with_added_edges(log.iter().map(|&(u, v)| (u, v, T::one())))?;
    Ok((graph, log))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryStrategy {
    #[default]
    None,
    /// Delete each surviving random cross edge with probability `q_cross`
    /// and each outer edge with probability `q_outer`.
    RandomFraction { q_cross: f64, q_outer: f64 },
    /// Delete every random or outer edge touching the `count` outside
    /// vertices of largest weighted degree (ties to the smaller index).
    TargetHighDegree { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AdversarySpec {
    #[serde(default)]
    pub strategy: AdversaryStrategy,
    #[serde(default)]
    pub seed: u64,
}

impl AdversarySpec {
    pub fn none() -> Self {
        AdversarySpec::default()
    }

    /// Removes every random cross edge and nothing else.
    pub fn delete_all_cross() -> Self {
        AdversarySpec {
            strategy: AdversaryStrategy::RandomFraction {
                q_cross: 1.0,
                q_outer: 0.0,
            },
            seed: 0,
        }
    }
}

/// Monotone adversary: deletes a selection of the logged random and outer edges.
pub fn apply_adversary<T: Scalar>(instance: &PlantedInstance<T>, spec: &AdversarySpec) -> Result<PlantedInstance<T>> {
    let present = |&(u, v): &(usize, usize)| instance.graph.has_edge(u, v);
    let cross: Vec<(usize, usize)> = instance.cross_edge_log.iter().copied().filter(present).collect();
    let outer: Vec<(usize, usize)> = instance.outer_edge_log.iter().copied().filter(present).collect();
    let deleted: Vec<(usize, usize)> = match &spec.strategy {
        AdversaryStrategy::None => Vec::new(),
        AdversaryStrategy::RandomFraction { q_cross, q_outer } => {
            for q in [q_cross, q_outer] {
                if !(0.0..=1.0).contains(q) {
                    return Err(DksError::param(format!("deletion fraction must lie in [0, 1], got {q}")));
                }
            }
            let mut r = rng::stream(spec.seed, rng::ADVERSARY);
            let mut out = Vec::new();
            for &e in &cross {
                if r.random_bool(*q_cross) {
                    out.push(e);
                }
            }
            for &e in &outer {
                if r.random_bool(*q_outer) {
                    out.push(e);
                }
            }
            out
        }
        AdversaryStrategy::TargetHighDegree { count } => {
            let degrees = instance.graph.degrees();
            let mut outside: Vec<usize> = instance.outside().members().to_vec();
            outside.sort_by(|&a, &b| degrees[b].partial_cmp(&degrees[a]).unwrap().then(a.cmp(&b)));
            let targets = VertexSubset::new(outside.into_iter().take(*count));
            cross
                .iter()
                .chain(&outer)
                .copied()
                .filter(|&(u, v)| targets.contains(u) || targets.contains(v))
                .collect()
        }
    };
    let mut next = instance.clone();
    next.graph = instance.graph.without_edges(&deleted);
    next.adversary_log.extend(deleted);
    Ok(next)
}

/// Builds a planted instance: core on `0..k`, outer part on `k..n`, random
/// cross edges, then the adversary.
pub fn generate<T: Scalar>(params: &ModelParams<T>, adversary: &AdversarySpec, seed: u64) -> Result<PlantedInstance<T>> {
    params.validate()?;
    let (k, m) = (params.k, params.m());
    let core = build_dense_core(k, params.d, params.core_style, seed)?;
    let outer = if params.kind.is_expander() {
        build_expander(m, params.d_prime, params.lambda.as_f64(), seed, DEFAULT_EXPANDER_RETRIES)?.0
    } else {
        build_gamma_part(m, params.gamma, params.d, seed)?
    };
    let outer_edge_log = outer.edges().map(|(u, v, _)| (u + k, v + k)).collect();
    let (graph, cross_edge_log) = plant_cross_edges(&core, &outer, params.p(), seed)?;
    let clean = PlantedInstance {
        params: params.clone(),
        seed,
        graph,
        planted: VertexSubset::range(k),
        adversary_log: Vec::new(),
        cross_edge_log,
        outer_edge_log,
    };
    apply_adversary(&clean, adversary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ModelKind;

    #[test]
    fn regular_cores() {
        let g = build_dense_core(6, 3.0f64, CoreStyle::Regular, 1).unwrap();
        assert_eq!(g.rho(&VertexSubset::range(6)).unwrap(), 9.0);
        assert!(g.degrees().iter().all(|&d| d == 3.0));
        assert!(matches!(build_dense_core(5, 3.0f64, CoreStyle::Regular, 1), Err(DksError::Param(_))));
        // dense request goes through the complement
        let g = build_dense_core(125, 100.0f64, CoreStyle::Regular, 7).unwrap();
        assert!(g.degrees().iter().all(|&d| d == 100.0));
    }

    #[test]
    fn weighted_core_has_exact_average_degree() {
        let g = build_dense_core(40, 20.0f64, CoreStyle::WeightedRandom, 3).unwrap();
        let degs = g.degrees();
        let avg = degs.iter().sum::<f64>() / 40.0;
        assert!((avg - 20.0).abs() < 1e-9);
        let g32 = build_dense_core(40, 20.0f32, CoreStyle::WeightedRandom, 3).unwrap();
        let avg32 = g32.average_degree(&VertexSubset::range(40)).unwrap();
        assert!((avg32 - 20.0).abs() < 1e-3);
    }

    #[test]
    fn regular_graphs_are_simple_and_regular() {
        let mut r = rng::stream(5, 0);
        for (m, d) in [(10, 3), (50, 9), (30, 28), (12, 6)] {
            let edges = random_regular(m, d, &mut r).unwrap();
            let g = unit_graph::<f64>(m, &edges).unwrap();
            assert_eq!(g.edge_count(), m * d / 2);
            assert!(g.degrees().iter().all(|&x| x == d as f64), "m={m} d={d}");
        }
    }

    #[test]
    fn expanders() {
        let (k4, cert) = build_expander::<f64>(4, 3, 1.0, 1, 5).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert!((cert.lambda_rest - 1.0).abs() < 1e-12);
        let (_, cert) = build_expander::<f64>(100, 9, 7.0, 2, DEFAULT_EXPANDER_RETRIES).unwrap();
        assert!(cert.certified && cert.lambda_rest <= 7.0);
        match build_expander::<f64>(100, 3, 0.1, 3, 3) {
            Err(DksError::RetryExhausted { best: Some(b), .. }) => assert!(b > 0.1),
            other => panic!("expected retry exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn gamma_parts() {
        let matching = build_gamma_part(10, 0.5f64, 1.0, 1).unwrap();
        assert_eq!(matching.edge_count(), 5);
        assert!((densest_subgraph(&matching).unwrap().value - 0.5).abs() < 1e-12);
        let odd = build_gamma_part(875, 0.005f64, 100.0, 1).unwrap();
        assert_eq!(odd.edge_count(), 437);
        let empty = build_gamma_part(10, 0.01f64, 1.0, 1).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let random = build_gamma_part(50, 0.1f64, 20.0, 4).unwrap();
        assert!(densest_subgraph(&random).unwrap().value <= 2.0 + 1e-9);
        assert!(random.edge_count() > 0);
    }

    #[test]
    fn cross_edges() {
        let core = build_dense_core(40, 20.0f64, CoreStyle::WeightedRandom, 1).unwrap();
        let outer = WeightedGraph::<f64>::empty(160);
        let (g, log) = plant_cross_edges(&core, &outer, 0.0, 1).unwrap();
        assert!(log.is_empty());
        assert_eq!(g.edge_count(), core.edge_count());
        let (g, log) = plant_cross_edges(&core, &outer, 1.0, 1).unwrap();
        assert_eq!(log.len(), 40 * 160);
        assert_eq!(g.edge_count(), core.edge_count() + 6400);

        // binomial(6400, 0.05): mean 320, sd ~17.4
        let sd = (6400.0f64 * 0.05 * 0.95).sqrt();
        for seed in 0..20 {
            let (_, log) = plant_cross_edges(&core, &outer, 0.05, seed).unwrap();
            assert!((log.len() as f64 - 320.0).abs() <= 4.0 * sd);
        }
        assert!(plant_cross_edges(&core, &outer, 1.5, 1).is_err());
    }

    #[test]
    fn generated_instances_satisfy_invariants() {
        let params = ModelParams::exp(200, 40, 20.0f64, 0.1, 9, 7.0);
        let inst = generate(&params, &AdversarySpec::none(), 11).unwrap();
        inst.check().unwrap();
        let outer = inst.graph.induced_subgraph(&inst.outside()).unwrap().0;
        assert!(certify_expander(&outer, 9.0, 7.0).unwrap().certified);
        assert_eq!(inst.params.kind, ModelKind::Exp);

        let again = generate(&params, &AdversarySpec::none(), 11).unwrap();
        assert_eq!(inst, again);

        let bad = ModelParams::gamma(200, 40, 100.0f64, 1.0, 0.1);
        assert!(matches!(generate(&bad, &AdversarySpec::none(), 1), Err(DksError::Param(_))));
    }

    #[test]
    fn adversaries_are_monotone() {
        let params = ModelParams::gamma(120, 30, 10.0f64, 0.5, 0.2);
        let inst = generate(&params, &AdversarySpec::none(), 2).unwrap();
        assert!(!inst.cross_edge_log.is_empty() && !inst.outer_edge_log.is_empty());

        let same = apply_adversary(&inst, &AdversarySpec::none()).unwrap();
        assert_eq!(same, inst);

        let no_cross = apply_adversary(&inst, &AdversarySpec::delete_all_cross()).unwrap();
        no_cross.check().unwrap();
        assert!(inst.cross_edge_log.iter().all(|&(u, v)| !no_cross.graph.has_edge(u, v)));
        assert!(inst.outer_edge_log.iter().all(|&(u, v)| no_cross.graph.has_edge(u, v)));

        let spec = AdversarySpec {
            strategy: AdversaryStrategy::RandomFraction {
                q_cross: 0.5,
                q_outer: 0.5,
            },
            seed: 9,
        };
        let half = apply_adversary(&inst, &spec).unwrap();
        half.check().unwrap();
        assert!(!half.adversary_log.is_empty());
        let s = &inst.planted;
        for (u, v, w) in inst.graph.edges() {
            let after = half.graph.weight(u, v);
            assert!(after <= w);
            if s.contains(u) && s.contains(v) {
                assert_eq!(after, w);
            }
        }

        let targeted = AdversarySpec {
            strategy: AdversaryStrategy::TargetHighDegree { count: 3 },
            seed: 0,
        };
        let t = apply_adversary(&inst, &targeted).unwrap();
        t.check().unwrap();
        assert!(!t.adversary_log.is_empty());
    }
}
