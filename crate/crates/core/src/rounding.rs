//! Model-specific recovery parameters and the threshold-and-prune rounding.

use serde::{Deserialize, Serialize};

use crate::error::{DksError, Result};
use crate::graph::{VertexSubset, WeightedGraph};
use crate::instance::{ModelKind, ModelParams, PlantedInstance};
use crate::scalar::Scalar;
use crate::sdp::SdpSolution;

/// `eta` for the Exp and Gamma kinds.
pub fn compute_eta<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    let c = |x: f64| T::of(x);
    let (n, k) = (T::of_usize(params.n), T::of_usize(params.k));
    let common = c(6.0) * params.delta + params.xi * (params.delta * n / (params.d * k)).sqrt();
    match params.kind {
        ModelKind::Exp => {
            let dp = T::of_usize(params.d_prime);
            Ok(common + params.lambda / params.d + dp * k / ((n - k) * params.d))
        }
        ModelKind::Gamma => Ok(common + c(2.0) * params.gamma),
        other => Err(DksError::param(format!("eta is defined for Exp and Gamma, not {other:?}"))),
    }
}

/// The squared bracket term inside `eta'`; the guarantee needs it positive.
pub fn eta_prime_bracket<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    let six = T::of(6.0);
    match params.kind {
        ModelKind::ExpReg => {
            let (n, k) = (T::of_usize(params.n), T::of_usize(params.k));
            let dp = T::of_usize(params.d_prime);
            Ok(T::one() - params.lambda / params.d - dp * k / ((n - k) * params.d) - six * params.delta)
        }
        ModelKind::GammaReg => Ok(T::one() - T::of(2.0) * params.gamma - six * params.delta),
        other => Err(DksError::param(format!("eta' is defined for ExpReg and GammaReg, not {other:?}"))),
    }
}

fn eta_prime_with<T: Scalar>(params: &ModelParams<T>, scale_n: T) -> Result<T> {
    let b = eta_prime_bracket(params)?;
    let (d, k) = (params.d, T::of_usize(params.k));
    let factor = d * k / (T::of(4.0) * params.xi * params.xi * params.delta * scale_n);
    Ok(T::one() / (T::one() + factor * b * b))
}

/// `eta'` for the regular kinds, with the `n` in the denominator factor.
pub fn compute_eta_prime<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    eta_prime_with(params, T::of_usize(params.n))
}

/// `eta'` with the factor `dk / (4 xi^2 delta)` (no `n`), reported alongside.
pub fn compute_eta_prime_without_n<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    eta_prime_with(params, T::one())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GuaranteeParams<T: Scalar> {
    pub eta: T,
    pub alpha: T,
    /// nu / tau for the Exp / Gamma kinds, nu' / tau' for the regular kinds.
    pub bound: T,
    /// `bound` lies in (0, 1) (and, for the regular kinds, the bracket is positive).
    pub valid: bool,
    /// Regular kinds: `eta'` and its bound without the `n` factor.
    pub eta_without_n: Option<T>,
    pub bound_without_n: Option<T>,
}

fn alpha_and_bound<T: Scalar>(kind: ModelKind, eta: T) -> (T, T) {
    if kind.is_regular() {
        (T::of(2.0) / eta.sqrt(), T::of(5.0) * eta.sqrt())
    } else {
        let root = (T::of(3.0) * eta).sqrt();
        (T::one() / root, T::of(2.0) * root)
    }
}

fn in_unit<T: Scalar>(x: T) -> bool {
    x > T::zero() && x < T::one()
}

pub fn guarantee_bounds<T: Scalar>(params: &ModelParams<T>) -> Result<GuaranteeParams<T>> {
    if params.kind.is_regular() {
        let eta = compute_eta_prime(params)?;
        let bracket_ok = eta_prime_bracket(params)? > T::zero();
        let (alpha, bound) = alpha_and_bound(params.kind, eta);
        let loose = compute_eta_prime_without_n(params)?;
        Ok(GuaranteeParams {
            eta,
            alpha,
            bound,
            valid: bracket_ok && in_unit(bound),
            eta_without_n: Some(loose),
            bound_without_n: Some(T::of(5.0) * loose.sqrt()),
        })
    } else {
        Ok(guarantee_from_eta(params.kind, compute_eta(params)?))
    }
}

/// Guarantee parameters for a manually chosen `eta`, using the kind's case split.
pub fn guarantee_from_eta<T: Scalar>(kind: ModelKind, eta: T) -> GuaranteeParams<T> {
    let (alpha, bound) = alpha_and_bound(kind, eta);
    GuaranteeParams {
        eta,
        alpha,
        bound,
        valid: in_unit(eta) && in_unit(bound),
        eta_without_n: None,
        bound_without_n: None,
    }
}

/// `T = {i : clamped G_ii >= 1 - alpha eta}`.
pub fn threshold_set(solution: &SdpSolution, alpha: f64, eta: f64) -> Result<VertexSubset> {
    let level = alpha * eta;
    if !(level < 1.0) || !(level >= 0.0) {
        return Err(DksError::param(format!("threshold needs 0 <= alpha eta < 1, got {level}")));
    }
    Ok((0..solution.n).filter(|&i| solution.norm_sq(i) >= 1.0 - level).collect())
}

/// Shrinks or pads `t` to exactly `k` vertices.
///
/// Above `k`, repeatedly drops the vertex of least weighted degree inside the
/// current set (ties to the smaller index). Below `k`, pads with the largest
/// `G_ii` outside `t` when a solution is given, otherwise by index.
pub fn greedy_prune<T: Scalar>(
    graph: &WeightedGraph<T>,
    t: &VertexSubset,
    k: usize,
    solution: Option<&SdpSolution>,
) -> Result<VertexSubset> {
    let n = graph.vertex_count();
    if k > n {
        return Err(DksError::param(format!("k = {k} exceeds n = {n}")));
    }
    t.check(n)?;
    if t.len() < k {
        let mut rest: Vec<usize> = (0..n).filter(|&v| !t.contains(v)).collect();
        if let Some(sol) = solution {
            rest.sort_by(|&a, &b| sol.norm_sq(b).total_cmp(&sol.norm_sq(a)).then(a.cmp(&b)));
        }
        let pad = k - t.len();
        return Ok(t.iter().chain(rest.into_iter().take(pad)).collect());
    }
    let mut alive = t.mask(n)?;
    let mut degree = vec![T::zero(); n];
    for v in t.iter() {
        degree[v] = graph
            .neighbors(v)
            .iter()
            .filter(|(u, _)| alive[*u])
            .fold(T::zero(), |acc, &(_, w)| acc + w);
    }
    for _ in k..t.len() {
        let mut worst: Option<usize> = None;
        for v in t.iter().filter(|&v| alive[v]) {
            if worst.is_none_or(|w| degree[v] < degree[w]) {
                worst = Some(v);
            }
        }
        let v = worst.expect("set is larger than k");
        alive[v] = false;
        for &(u, w) in graph.neighbors(v) {
            if alive[u] {
                degree[u] = degree[u] - w;
            }
        }
    }
    Ok(t.iter().filter(|&v| alive[v]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RecoveryResult<T: Scalar> {
    pub t: VertexSubset,
    pub q: VertexSubset,
    pub rho_q: T,
    pub rho_t_cap_s: T,
    pub size_t: usize,
    pub size_q_cap_s: usize,
    pub guarantee: GuaranteeParams<T>,
    /// The planted density `kd/2` every clause is measured against.
    pub target: T,
    /// Numerical slack `10 tol kd/2` granted to density comparisons.
    pub slack: T,
    /// `rho(Q) >= (1 - bound) kd/2`.
    pub pass_rho_q: Option<bool>,
    /// Exp/Gamma: `|T| <= k (1 + bound / 5)`.
    pub pass_size_t: Option<bool>,
    /// Exp/Gamma: `rho(T cap S) >= (1 - bound / 2) kd/2`.
    pub pass_rho_t_cap_s: Option<bool>,
    /// Regular kinds: `|Q cap S| >= (1 - bound / 6) k`.
    pub pass_q_cap_s: Option<bool>,
    /// `|T| <= k (1 + tol) / (1 - alpha eta)`, which holds for any near-feasible solution.
    pub size_t_within_limit: bool,
}

impl<T: Scalar> RecoveryResult<T> {
    /// Conjunction of the applicable clauses, `None` when the bound is invalid.
    pub fn passed(&self) -> Option<bool> {
        let flags = [self.pass_rho_q, self.pass_size_t, self.pass_rho_t_cap_s, self.pass_q_cap_s];
        if flags.iter().all(Option::is_none) {
            return None;
        }
        Some(flags.iter().flatten().all(|&b| b))
    }
}

/// Rounds `solution` with the parameters implied by the instance's model.
pub fn recover<T: Scalar>(instance: &PlantedInstance<T>, solution: &SdpSolution) -> Result<RecoveryResult<T>> {
    recover_with(instance, solution, None)
}

/// As [`recover`], optionally overriding `eta`.
pub fn recover_with<T: Scalar>(
    instance: &PlantedInstance<T>,
    solution: &SdpSolution,
    eta_override: Option<T>,
) -> Result<RecoveryResult<T>> {
    let params = &instance.params;
    let (n, k) = (instance.n(), instance.k());
    if solution.n != n || solution.k != k {
        return Err(DksError::param(format!(
            "solution is for (n, k) = ({}, {}), instance has ({n}, {k})",
            solution.n, solution.k
        )));
    }
    let guarantee = match eta_override {
        Some(eta) => guarantee_from_eta(params.kind, eta),
        None => guarantee_bounds(params)?,
    };
    let (alpha, eta) = (guarantee.alpha.as_f64(), guarantee.eta.as_f64());
    let level = alpha * eta;
    // an invalid bound can push the level past 1; every vertex then clears it
    let in_range = (0.0..1.0).contains(&level);
    let t = if in_range {
        threshold_set(solution, alpha, eta)?
    } else {
        VertexSubset::range(n)
    };
    let q = greedy_prune(&instance.graph, &t, k, Some(solution))?;

    let s = &instance.planted;
    let rho_q = instance.graph.rho(&q)?;
    let rho_t_cap_s = instance.graph.rho(&t.intersection(s))?;
    let size_q_cap_s = q.intersection(s).len();
    let target = params.planted_density();
    let slack = T::of(10.0 * solution.tol) * target;
    let kf = T::of_usize(k);
    let bound = guarantee.bound;
    let one = T::one();
    let when = |b: bool| guarantee.valid.then_some(b);
    let regular = params.kind.is_regular();
    let limit = if in_range {
        k as f64 * (1.0 + solution.tol) / (1.0 - level)
    } else {
        f64::INFINITY
    };
    Ok(RecoveryResult {
        size_t: t.len(),
        pass_rho_q: when(rho_q + slack >= (one - bound) * target),
        pass_size_t: if regular {
            None
        } else {
            when(T::of_usize(t.len()) <= kf * (one + bound / T::of(5.0)))
        },
        pass_rho_t_cap_s: if regular {
            None
        } else {
            when(rho_t_cap_s + slack >= (one - bound / T::of(2.0)) * target)
        },
        pass_q_cap_s: if regular {
            when(T::of_usize(size_q_cap_s) >= (one - bound / T::of(6.0)) * kf)
        } else {
            None
        },
        size_t_within_limit: t.len() as f64 <= limit,
        t,
        q,
        rho_q,
        rho_t_cap_s,
        size_q_cap_s,
        guarantee,
        target,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate, AdversarySpec};
    use crate::sdp::indicator_gram;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eta_examples() {
        let exp = ModelParams::<f64>::exp(2000, 400, 300.0, 0.005, 9, 6.0);
        let eta = compute_eta(&exp).unwrap();
        let want = 0.03 + 2.0 * (0.005f64 * 2000.0 / (300.0 * 400.0)).sqrt() + 6.0 / 300.0 + 9.0 * 400.0 / (1600.0 * 300.0);
        assert!(close(eta, want, 1e-15));
        assert!(close(eta, 0.0758, 5e-5));
        let g = guarantee_bounds(&exp).unwrap();
        assert!(close(g.bound, 2.0 * (3.0 * eta).sqrt(), 1e-15) && g.bound < 1.0 && g.valid);
        assert!(close(g.alpha, 1.0 / (3.0 * eta).sqrt(), 1e-15));

        let gamma = ModelParams::<f64>::gamma(1000, 125, 100.0, 0.005, 0.005);
        assert!(close(compute_eta(&gamma).unwrap(), 0.08, 1e-15));
        let g = guarantee_bounds(&gamma).unwrap();
        assert!(close(g.bound, 0.9798, 1e-4) && g.valid);

        let reg = ModelParams::<f64>::gamma_reg(1000, 125, 100.0, 0.005, 0.005);
        let ep = compute_eta_prime(&reg).unwrap();
        assert!(close(ep, 1.0 / 145.0, 1e-12));
        let g = guarantee_bounds(&reg).unwrap();
        assert!(close(g.bound, 0.4152, 1e-4) && g.valid);
        assert!(close(g.alpha, 2.0 / ep.sqrt(), 1e-12));
        assert!(g.alpha > 2.0 && g.alpha < 1.0 / ep);

        assert!(compute_eta(&reg).is_err());
        assert!(compute_eta_prime(&gamma).is_err());
    }

    #[test]
    fn degenerate_cases() {
        let mut exp = ModelParams::<f64>::exp(2000, 400, 300.0, 1e-300, 0, 0.0);
        exp.delta = 0.0;
        assert_eq!(compute_eta(&exp).unwrap(), 0.0);

        // bracket exactly zero: 1 - 2 gamma - 6 delta = 0
        let reg = ModelParams::<f64>::gamma_reg(1000, 125, 100.0, 0.0625, 0.3125);
        assert_eq!(eta_prime_bracket(&reg).unwrap(), 0.0);
        assert_eq!(compute_eta_prime(&reg).unwrap(), 1.0);
        assert!(!guarantee_bounds(&reg).unwrap().valid);

        let exp_reg = ModelParams::<f64>::exp_reg(1000, 100, 10.0, 0.01, 12, 10.0);
        assert!(eta_prime_bracket(&exp_reg).unwrap() < 0.0);
        assert!(!guarantee_bounds(&exp_reg).unwrap().valid);

        let edge = guarantee_from_eta(ModelKind::Exp, 1.0 / 12.0);
        assert!(close(edge.bound, 1.0, 1e-15));
        let edge = guarantee_from_eta(ModelKind::Exp, 1.0f64 / 12.0 + 1e-12);
        assert!(!edge.valid);
    }

    #[test]
    fn without_n_variant_is_reported() {
        let p = ModelParams::<f64>::exp_reg(1000, 125, 100.0, 0.005, 9, 6.0);
        let g = guarantee_bounds(&p).unwrap();
        let loose = g.eta_without_n.unwrap();
        assert!(loose < g.eta);
        assert!(close(g.bound_without_n.unwrap(), 5.0 * loose.sqrt(), 1e-15));
    }

    #[test]
    fn threshold_on_indicator_and_uniform() {
        let s = VertexSubset::new([1, 3, 4]);
        let sol = SdpSolution::from_gram(6, 3, indicator_gram(6, &s), 0.0).unwrap();
        for level in [0.01, 0.5, 0.99] {
            assert_eq!(threshold_set(&sol, 1.0, level).unwrap(), s);
        }
        assert!(threshold_set(&sol, 2.0, 0.5).is_err());

        let mut gram = vec![0.0; 49];
        for i in 0..6 {
            gram[i * 7 + i] = 0.5;
            gram[i * 7 + 6] = 0.5;
            gram[6 * 7 + i] = 0.5;
        }
        gram[48] = 1.0;
        let sol = SdpSolution::from_gram(6, 3, gram, 0.0).unwrap();
        assert!(threshold_set(&sol, 1.0, 0.1).unwrap().is_empty());
    }

    #[test]
    fn prune_star_and_padding() {
        let star = WeightedGraph::<f64>::from_edges(5, (1..5).map(|j| (0, j, 1.0))).unwrap();
        let q = greedy_prune(&star, &VertexSubset::range(5), 3, None).unwrap();
        assert_eq!(q, VertexSubset::new([0, 3, 4]));
        assert_eq!(star.rho(&q).unwrap(), 2.0);
        let t = VertexSubset::new([2, 4]);
        assert_eq!(greedy_prune(&star, &t, 2, None).unwrap(), t);
        assert_eq!(greedy_prune(&star, &t, 4, None).unwrap(), VertexSubset::new([0, 1, 2, 4]));
        assert!(greedy_prune(&star, &t, 6, None).is_err());

        let s = VertexSubset::new([3]);
        let sol = SdpSolution::from_gram(5, 1, indicator_gram(5, &s), 0.0).unwrap();
        assert_eq!(greedy_prune(&star, &VertexSubset::new([1]), 2, Some(&sol)).unwrap(), VertexSubset::new([1, 3]));
    }

    fn random_graph(n: usize, edges: &[(usize, usize, u8)]) -> WeightedGraph<f64> {
        let mut seen = std::collections::BTreeMap::new();
        for &(u, v, w) in edges {
            let (u, v) = (u % n, v % n);
            if u != v {
                seen.insert((u.min(v), u.max(v)), 1.0 + w as f64 / 16.0);
            }
        }
        WeightedGraph::from_edges(n, seen.into_iter().map(|((u, v), w)| (u, v, w))).unwrap()
    }

    proptest! {
        #[test]
        fn pruning_ratio_holds(n in 4usize..30, k in 2usize..10, edges in prop::collection::vec((0usize..64, 0usize..64, 0u8..64), 0..150)) {
            let k = k.min(n);
            let g = random_graph(n, &edges);
            let t = VertexSubset::range(n);
            let q = greedy_prune(&g, &t, k, None).unwrap();
            prop_assert_eq!(q.len(), k);
            prop_assert!(q.is_subset_of(&t));
            let ratio = (k * (k - 1)) as f64 / (n * (n - 1)) as f64;
            prop_assert!(g.rho(&q).unwrap() >= ratio * g.rho(&t).unwrap() - 1e-9);
        }
    }

    #[test]
    fn integral_solution_recovers_planted_set() {
        for params in [
            ModelParams::<f64>::gamma_reg(60, 12, 4.0, 0.05, 0.1),
            ModelParams::<f64>::gamma(60, 12, 4.0, 0.05, 0.1),
        ] {
            let inst = generate(&params, &AdversarySpec::none(), 3).unwrap();
            let gram = indicator_gram(60, &inst.planted);
            let obj = inst.graph.rho(&inst.planted).unwrap();
            let sol = SdpSolution::from_gram(60, 12, gram, obj).unwrap();
            let r = recover_with(&inst, &sol, Some(0.01)).unwrap();
            assert_eq!(r.q, inst.planted);
            assert_eq!(r.t, inst.planted);
            assert!(r.guarantee.valid);
            if params.core_style == crate::instance::CoreStyle::Regular {
                assert_eq!(r.rho_q, params.planted_density());
            }
            assert_eq!(r.size_q_cap_s, 12);
            assert!(r.size_t_within_limit);
        }
    }

    #[test]
    fn invalid_bound_marks_flags_not_applicable() {
        let params = ModelParams::<f64>::gamma(60, 12, 4.0, 0.05, 0.1);
        let inst = generate(&params, &AdversarySpec::none(), 3).unwrap();
        let sol = SdpSolution::from_gram(60, 12, indicator_gram(60, &inst.planted), 0.0).unwrap();
        assert!(!guarantee_bounds(&params).unwrap().valid);
        let r = recover(&inst, &sol).unwrap();
        assert_eq!(r.passed(), None);
        assert_eq!(r.pass_rho_q, None);
        assert_eq!(r.q.len(), 12);
        // level alpha eta > 1: everything passes the threshold
        let r = recover_with(&inst, &sol, Some(5.0)).unwrap();
        assert_eq!(r.size_t, 60);
        assert!(r.size_t_within_limit);
        let r = recover_with(&inst, &sol, Some(0.2)).unwrap();
        assert_eq!(r.passed(), None);
        assert_eq!(r.pass_rho_q, None);
        assert_eq!(r.q.len(), 12);
    }
}
