//! Numerical audits of the inequalities behind the recovery guarantees.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::densest::densest_subgraph;
use super::spectral::{certify_expander, ExpanderCertificate};
use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::instance::{ModelParams, PlantedInstance};
use crate::rounding::{compute_eta, compute_eta_prime, guarantee_bounds};
use crate::scalar::Scalar;
use crate::sdp::SdpSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// `sum_{i, j in S} A_ij <X_i, X_j>` (ordered pairs).
    pub mass_ss: f64,
    /// `sum_{i in S, j outside} A_ij <X_i, X_j>` (one orientation).
    pub mass_cross: f64,
    /// `sum_{i, j outside S} A_ij <X_i, X_j>` (ordered pairs).
    pub mass_outer: f64,
    pub objective: f64,
    /// `|mass_ss + 2 mass_cross + mass_outer - 2 objective|`.
    pub identity_residual: f64,
    /// `E_{i in S} ||X_i||^2`.
    pub mean_vertex_norm: f64,
    /// Weight-averaged `<X_i, X_j>` over planted edges.
    pub mean_edge_inner: f64,
    pub bound_cross: f64,
    pub bound_outer: f64,
    /// Regular kinds: `kd E_{i in S} ||X_i||^2`.
    pub bound_ss: Option<f64>,
    /// `eta` (Exp/Gamma) or `eta'` (regular kinds).
    pub eta: f64,
    /// Slack granted to mass comparisons.
    pub slack: f64,
    pub pass_identity: bool,
    pub pass_cross: bool,
    pub pass_outer: bool,
    pub pass_ss: Option<bool>,
    /// Exp/Gamma: `mean_edge_inner >= 1 - eta`.
    pub pass_edge_inner: Option<bool>,
    /// Regular kinds: `mean_vertex_norm >= 1 - eta'`.
    pub pass_vertex_norm: Option<bool>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.pass_identity
            && self.pass_cross
            && self.pass_outer
            && [self.pass_ss, self.pass_edge_inner, self.pass_vertex_norm].iter().flatten().all(|&b| b)
    }
}

fn inner(solution: &SdpSolution, i: usize, j: usize) -> f64 {
    0.5 * (solution.g(i, j) + solution.g(j, i))
}

/// Splits the objective over planted/outer pairs and checks every bound that
/// applies to the instance's model kind.
pub fn audit_mass_split<T: Scalar>(instance: &PlantedInstance<T>, solution: &SdpSolution) -> Result<AuditReport> {
    let params = &instance.params;
    let (n, k) = (instance.n(), instance.k());
    if solution.n != n || solution.k != k {
        return Err(DksError::param("solution does not match the instance dimensions"));
    }
    let in_s = instance.planted.mask(n)?;
    let (mut mass_ss, mut mass_cross, mut mass_outer) = (0.0, 0.0, 0.0);
    let (mut planted_w, mut planted_inner) = (0.0, 0.0);
    let mut objective = 0.0;
    for (u, v, w) in instance.graph.edges() {
        let w = w.as_f64();
        let g = inner(solution, u, v);
        objective += w * g;
        match (in_s[u], in_s[v]) {
            (true, true) => {
                mass_ss += 2.0 * w * g;
                planted_w += w;
                planted_inner += w * g;
            }
            (false, false) => mass_outer += 2.0 * w * g,
            _ => mass_cross += w * g,
        }
    }
    let kf = k as f64;
    let e = instance.planted.iter().map(|i| solution.norm_sq(i)).sum::<f64>() / kf;
    let mean_edge_inner = if planted_w > 0.0 { planted_inner / planted_w } else { 0.0 };

    let p = params.p().as_f64();
    let xi = params.xi.as_f64();
    let d = params.d.as_f64();
    let nf = n as f64;
    let bound_cross = 3.0 * p * kf * kf * (1.0 - e) + xi * kf * (nf * p).sqrt() * (e * (1.0 - e)).max(0.0).sqrt();
    let bound_outer = if params.kind.is_expander() {
        let dp = params.d_prime as f64;
        (params.lambda.as_f64() * kf + dp * kf * kf / (nf - kf)) * (1.0 - e)
    } else {
        2.0 * params.gamma.as_f64() * d * kf * (1.0 - e)
    };
    let slack = 10.0 * solution.tol * kf * d / 2.0;
    let regular = params.kind.is_regular();
    let bound_ss = regular.then(|| kf * d * e);
    let eta = if regular {
        compute_eta_prime(params)?.as_f64()
    } else {
        compute_eta(params)?.as_f64()
    };
    let dimless = 10.0 * solution.tol;
    let identity_residual = (mass_ss + 2.0 * mass_cross + mass_outer - 2.0 * objective).abs();
    Ok(AuditReport {
        mass_ss,
        mass_cross,
        mass_outer,
        objective,
        identity_residual,
        mean_vertex_norm: e,
        mean_edge_inner,
        bound_cross,
        bound_outer,
        bound_ss,
        eta,
        slack,
        pass_identity: identity_residual <= 1e-6 * (1.0 + objective.abs()),
        pass_cross: mass_cross <= bound_cross + slack,
        pass_outer: mass_outer <= bound_outer + slack,
        pass_ss: bound_ss.map(|b| mass_ss <= b + slack),
        pass_edge_inner: (!regular).then(|| mean_edge_inner + dimless >= 1.0 - eta),
        pass_vertex_norm: regular.then(|| e + dimless >= 1.0 - eta),
    })
}

/// Outcome of mapping the outer-part SDP vectors to the densest-subgraph LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpMapReport {
    /// `sum_{i outside S} ||X_i||^2`; the map is defined-empty when it vanishes.
    pub outer_mass: f64,
    pub empty: bool,
    /// Largest constraint violation of the mapped `(x, y)`, in LP units.
    pub max_violation: f64,
    /// The same violation multiplied back by `outer_mass` (Gram units).
    pub max_violation_gram: f64,
    /// `sum_y - 1`.
    pub normalization_error: f64,
    pub lp_objective: f64,
    pub densest_value: f64,
    /// `lp_objective <= densest_value + 1e-6`.
    pub objective_within_densest: bool,
}

/// Maps `x_ij = <X_i, X_j> / M`, `y_i = ||X_i||^2 / M` over the graph induced
/// outside the planted set (`M` the outer mass) and rechecks the LP constraints.
pub fn check_lp_feasibility_map<T: Scalar>(instance: &PlantedInstance<T>, solution: &SdpSolution) -> Result<LpMapReport> {
    let outside = instance.outside();
    let (outer, mapping) = instance.graph.induced_subgraph(&outside)?;
    let densest_value = if outer.vertex_count() == 0 {
        0.0
    } else {
        densest_subgraph(&outer)?.value.as_f64()
    };
    let outer_mass: f64 = mapping.iter().map(|&i| solution.norm_sq(i)).sum();
    if outer_mass <= 1e-12 {
        return Ok(LpMapReport {
            outer_mass,
            empty: true,
            max_violation: 0.0,
            max_violation_gram: 0.0,
            normalization_error: 0.0,
            lp_objective: 0.0,
            densest_value,
            objective_within_densest: true,
        });
    }
    let y: Vec<f64> = mapping.iter().map(|&i| solution.norm_sq(i) / outer_mass).collect();
    let mut worst: f64 = 0.0;
    let mut lp_objective = 0.0;
    for yi in &y {
        worst = worst.max(-yi);
    }
    for (a, b, w) in outer.edges() {
        let x = inner(solution, mapping[a], mapping[b]) / outer_mass;
        lp_objective += w.as_f64() * x;
        worst = worst.max(x - y[a]).max(x - y[b]).max(-x);
    }
    let sum_y: f64 = y.iter().sum();
    worst = worst.max(sum_y - 1.0);
    Ok(LpMapReport {
        outer_mass,
        empty: false,
        max_violation: worst,
        max_violation_gram: worst * outer_mass,
        normalization_error: sum_y - 1.0,
        lp_objective,
        densest_value,
        objective_within_densest: lp_objective <= densest_value + 1e-6,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `U^T A U <= ((d' - lambda) / m) (sum U)^2 + lambda ||U||^2` on a
/// certified expander. Certification happens once, in [`QuadraticFormBound::new`].
pub struct QuadraticFormBound {
    adjacency: Vec<f64>,
    m: usize,
    d_prime: f64,
    lambda: f64,
    pub certificate: ExpanderCertificate,
}

impl QuadraticFormBound {
    pub fn new<T: Scalar>(graph: &WeightedGraph<T>, d_prime: f64, lambda: f64) -> Result<Self> {
        let certificate = certify_expander(graph, d_prime, lambda)?;
        if !certificate.certified {
            return Err(DksError::param(format!(
                "graph is not a ({d_prime}, {lambda})-expander: lambda_1 = {}, rest = {}",
                certificate.lambda_1, certificate.lambda_rest
            )));
        }
        Ok(QuadraticFormBound {
            adjacency: graph.dense_adjacency(),
            m: graph.vertex_count(),
            d_prime,
            lambda,
            certificate,
        })
    }

    pub fn check(&self, u: &[f64]) -> Result<QuadraticFormCheck> {
        let m = self.m;
        if u.len() != m {
            return Err(DksError::param(format!("vector has length {}, graph has {m} vertices", u.len())));
        }
        let lhs: f64 = (0..m)
            .map(|i| u[i] * (0..m).map(|j| self.adjacency[i * m + j] * u[j]).sum::<f64>())
            .sum();
        let sum: f64 = u.iter().sum();
        let norm_sq: f64 = u.iter().map(|x| x * x).sum();
        let rhs = (self.d_prime - self.lambda) / m as f64 * sum * sum + self.lambda * norm_sq;
        Ok(QuadraticFormCheck {
            lhs,
            rhs,
            pass: lhs <= rhs + 1e-9 * (1.0 + rhs.abs()),
        })
    }
}

pub fn quadratic_form_bound_check<T: Scalar>(
    graph: &WeightedGraph<T>,
    d_prime: f64,
    lambda: f64,
    u: &[f64],
) -> Result<QuadraticFormCheck> {
    QuadraticFormBound::new(graph, d_prime, lambda)?.check(u)
}

/// Random test vector with entries uniform in `[-1, 1]`.
pub fn random_vector(m: usize, r: &mut crate::rng::Rng) -> Vec<f64> {
    (0..m).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauComparison {
    /// Grid points of `{x, y > 0, x + y < 1}` visited.
    pub points: usize,
    /// Points where `sqrt(x + y) > y / (1 - x)` failed.
    pub point_failures: usize,
    /// Smallest `sqrt(x + y) - y / (1 - x)` seen.
    pub min_margin: f64,
    /// Valid Gamma / GammaReg parameter pairs compared.
    pub param_points: usize,
    /// Pairs where `tau < tau'`.
    pub param_failures: usize,
    pub pass: bool,
}

/// `(tau, tau')` for the Gamma and GammaReg models sharing every parameter.
/// `None` when either bound is invalid.
pub fn tau_pair<T: Scalar>(gamma: &ModelParams<T>) -> Result<Option<(f64, f64)>> {
    let mut g = gamma.clone();
    g.kind = crate::instance::ModelKind::Gamma;
    let mut r = gamma.clone();
    r.kind = crate::instance::ModelKind::GammaReg;
    let (a, b) = (guarantee_bounds(&g)?, guarantee_bounds(&r)?);
    Ok((a.valid && b.valid).then(|| (a.bound.as_f64(), b.bound.as_f64())))
}

/// Sweeps the open triangle at cell centres of a `resolution x resolution`
/// grid, then compares `tau` and `tau'` on a 10 x 10 grid of
/// `(delta, gamma)` at `n = 1000, k = 125, d = 100, xi = 2`.
pub fn tau_comparison_check(resolution: usize) -> Result<TauComparison> {
    if resolution < 2 {
        return Err(DksError::param("grid resolution must be at least 2"));
    }
    let r = resolution as f64;
    let (mut points, mut point_failures, mut min_margin) = (0, 0, f64::INFINITY);
    for i in 0..resolution {
        for j in 0..resolution {
            let (x, y) = ((i as f64 + 0.5) / r, (j as f64 + 0.5) / r);
            if x + y >= 1.0 {
                continue;
            }
            points += 1;
            let margin = (x + y).sqrt() - y / (1.0 - x);
            min_margin = min_margin.min(margin);
            if !(margin > 0.0) {
                point_failures += 1;
            }
        }
    }
    let (mut param_points, mut param_failures) = (0, 0);
    for a in 0..10 {
        for b in 0..10 {
            let delta = 0.001 + 0.004 * a as f64 / 9.0;
            let gamma = 0.001 + 0.005 * b as f64 / 9.0;
            let params = ModelParams::<f64>::gamma(1000, 125, 100.0, delta, gamma);
            if let Some((tau, tau_prime)) = tau_pair(&params)? {
                param_points += 1;
                if tau < tau_prime {
                    param_failures += 1;
                }
            }
        }
    }
    Ok(TauComparison {
        points,
        point_failures,
        min_margin,
        param_points,
        param_failures,
        pass: point_failures == 0 && param_failures == 0 && param_points > 0,
    })
}

/// `E_{i in T} G_ii` and `E_{i, j in T} G_ij` for a subset `T`.
pub fn subset_means(solution: &SdpSolution, t: &VertexSubset) -> (f64, f64) {
    let size = t.len() as f64;
    if t.is_empty() {
        return (0.0, 0.0);
    }
    let diag = t.iter().map(|i| solution.norm_sq(i)).sum::<f64>() / size;
    let all = t.iter().map(|i| t.iter().map(|j| inner(solution, i, j)).sum::<f64>()).sum::<f64>() / (size * size);
    (diag, all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, AdversarySpec};
    use crate::rng;
    use crate::sdp::indicator_gram;

    fn cycle(m: usize) -> WeightedGraph<f64> {
        WeightedGraph::from_edges(m, (0..m).map(|i| (i, (i + 1) % m, 1.0))).unwrap()
    }

    #[test]
    fn quadratic_form_on_cycle() {
        let c6 = cycle(6);
        let q = QuadraticFormBound::new(&c6, 2.0, 2.0).unwrap();
        let ones = q.check(&[1.0; 6]).unwrap();
        assert!((ones.lhs - 12.0).abs() < 1e-12 && (ones.rhs - 12.0).abs() < 1e-12 && ones.pass);
        // alternating vector is the eigenvector for -2
        let alt = q.check(&[1.0, -1.0, 1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!((alt.lhs + 12.0).abs() < 1e-12 && alt.pass);
        let mut r = rng::stream(1, 9);
        for _ in 0..50 {
            assert!(q.check(&random_vector(6, &mut r)).unwrap().pass);
        }
        assert!(QuadraticFormBound::new(&c6, 2.0, 1.9).is_err());
        assert!(q.check(&[1.0; 5]).is_err());
    }

    #[test]
    fn tau_grid_examples() {
        let margin = |x: f64, y: f64| (x + y).sqrt() - y / (1.0 - x);
        assert!(margin(0.5, 0.25) > 0.0 && (margin(0.5, 0.25) - (0.75f64.sqrt() - 0.5)).abs() < 1e-15);
        assert!(margin(0.4, 0.5) > 0.0);
        let c = tau_comparison_check(100).unwrap();
        assert_eq!(c.points, 4950);
        assert!(c.pass, "{c:?}");
        assert_eq!(c.param_points, 100);
        assert!(tau_comparison_check(1).is_err());
    }

    #[test]
    fn integral_solution_audit() {
        let params = ModelParams::<f64>::gamma_reg(60, 12, 4.0, 0.05, 0.1);
        let mut inst = generate(&params, &AdversarySpec::none(), 4).unwrap();
        // remove the cross edges so p plays no role in the masses
        inst.graph = inst.graph.without_edges(&inst.cross_edge_log);
        let gram = indicator_gram(60, &inst.planted);
        let obj = inst.graph.rho(&inst.planted).unwrap();
        let sol = SdpSolution::from_gram(60, 12, gram, obj).unwrap();
        let a = audit_mass_split(&inst, &sol).unwrap();
        assert_eq!(a.mass_cross, 0.0);
        assert_eq!(a.mass_outer, 0.0);
        assert_eq!(a.identity_residual, 0.0);
        assert_eq!(a.mass_ss, 2.0 * obj);
        assert_eq!(a.mean_vertex_norm, 1.0);
        assert_eq!(a.mean_edge_inner, 1.0);
        assert_eq!(a.bound_ss, Some(12.0 * 4.0));
        assert!(a.passed());

        let lp = check_lp_feasibility_map(&inst, &sol).unwrap();
        assert!(lp.empty && lp.max_violation == 0.0);
    }

    #[test]
    fn lp_map_on_hand_built_gram() {
        // planted set {0, 1}; outer vertices 2..6 form a path
        let g = WeightedGraph::<f64>::from_edges(6, [(0, 1, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0)]).unwrap();
        let params = ModelParams::<f64>::gamma(6, 2, 1.0, 0.5, 0.5).with_core_style(crate::instance::CoreStyle::WeightedRandom);
        let inst = PlantedInstance {
            params,
            seed: 0,
            graph: g,
            planted: VertexSubset::new([0, 1]),
            adversary_log: vec![],
            cross_edge_log: vec![],
            outer_edge_log: vec![],
        };
        let dim = 7;
        let mut gram = vec![0.0; dim * dim];
        let norms = [0.6, 0.6, 0.2, 0.2, 0.2, 0.2];
        for i in 0..6 {
            gram[i * dim + i] = norms[i];
            gram[i * dim + 6] = norms[i];
            gram[6 * dim + i] = norms[i];
        }
        for (i, j, v) in [(2, 3, 0.1), (3, 4, 0.2), (4, 5, 0.05)] {
            gram[i * dim + j] = v;
            gram[j * dim + i] = v;
        }
        gram[48] = 1.0;
        let sol = SdpSolution::from_gram(6, 2, gram, 0.0).unwrap();
        let lp = check_lp_feasibility_map(&inst, &sol).unwrap();
        assert!(!lp.empty);
        assert!((lp.outer_mass - 0.8).abs() < 1e-15);
        assert!(lp.normalization_error.abs() < 1e-15);
        assert!(lp.max_violation <= 1e-15);
        assert!((lp.lp_objective - 0.35 / 0.8).abs() < 1e-12);
        assert!((lp.densest_value - 0.75).abs() < 1e-9);
        assert!(lp.objective_within_densest);
    }

    #[test]
    fn subset_means_on_indicator() {
        let s = VertexSubset::new([0, 2, 3]);
        let sol = SdpSolution::from_gram(5, 3, indicator_gram(5, &s), 0.0).unwrap();
        assert_eq!(subset_means(&sol, &s), (1.0, 1.0));
        assert_eq!(subset_means(&sol, &VertexSubset::new([0, 1])), (0.5, 0.25));
    }
}
