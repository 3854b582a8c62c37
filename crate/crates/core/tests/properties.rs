use dks_core::graph::WeightedGraph;
use dks_core::instance::{generate, save_instance, load_instance, AdversarySpec};
use dks_core::oracles::{audit_mass_split, brute_force_dks, densest_subgraph, subset_means};
use dks_core::rounding::{guarantee_bounds, recover, threshold_set};
use dks_core::sdp::{build_problem, solve, SdpSolution};
use dks_core::{Graph, Instance, Params, VertexSubset};
use proptest::prelude::*;

const TOL: f64 = 1e-6;

fn solved(params: &Params, seed: u64) -> (Instance, SdpSolution) {
    let inst: Instance = generate(params, &AdversarySpec::none(), seed).unwrap();
    let sol = solve(&build_problem(&inst.graph, params.k).unwrap(), TOL, 50_000).unwrap();
    (inst, sol)
}

fn small_models() -> Vec<Params> {
    vec![
        Params::gamma(80, 16, 6.0, 0.2, 0.1),
        Params::gamma_reg(60, 12, 4.0, 0.2, 0.1),
        Params::exp(120, 24, 8.0, 0.2, 5, 4.5),
    ]
}

#[test]
fn solved_instances_satisfy_rounding_lemmas() {
    for params in small_models() {
        for seed in 1..=2 {
            let (inst, sol) = solved(&params, seed);
            let sol = sol.clamped();

            // mass split adds up to the objective
            let audit = audit_mass_split(&inst, &sol).unwrap();
            assert!(audit.pass_identity, "{:?} seed {seed}: {audit:?}", params.kind);
            assert!(audit.identity_residual <= 1e-6 * (1.0 + sol.objective));

            // large diagonal mass on S forces large pairwise mass on S
            let (diag, pair) = subset_means(&sol, &inst.planted);
            let eps = 1.0 - diag;
            assert!(pair >= 1.0 - 4.0 * eps - 10.0 * TOL, "{:?} seed {seed}: {pair} vs eps {eps}", params.kind);

            let g = guarantee_bounds(&params).unwrap();
            let level = if (0.0..1.0).contains(&(g.alpha * g.eta)) {
                g.alpha * g.eta
            } else {
                0.25
            };
            let t = threshold_set(&sol, level, 1.0).unwrap();

            // |T| never exceeds k (1 + tol) / (1 - alpha eta)
            let trace: f64 = (0..sol.n).map(|i| sol.norm_sq(i)).sum();
            assert!(trace <= params.k as f64 * (1.0 + TOL));
            assert!(t.len() as f64 <= params.k as f64 * (1.0 + TOL) / (1.0 - level));

            // an edge with G_ij >= 1 - alpha eta has both ends in T, up to
            // the dominance residual
            let slack = sol.residuals.families.dominance + 1e-12;
            for (u, v, _) in inst.graph.edges() {
                if sol.g(u, v) >= 1.0 - level + slack {
                    assert!(t.contains(u) && t.contains(v), "edge ({u}, {v}) escapes T");
                }
            }

            let rec = recover(&inst, &sol).unwrap();
            assert!(rec.size_t_within_limit);
            assert_eq!(rec.q.len(), params.k);
        }
    }
}

#[test]
fn adversary_never_raises_the_relaxation_value() {
    let params = Params::gamma(80, 16, 6.0, 0.2, 0.1);
    for seed in 1..=3 {
        let clean: Instance = generate(&params, &AdversarySpec::none(), seed).unwrap();
        let cut: Instance = generate(&params, &AdversarySpec::delete_all_cross(), seed).unwrap();
        assert!(cut.graph.edge_count() < clean.graph.edge_count());
        let before = solve(&build_problem(&clean.graph, 16).unwrap(), TOL, 50_000).unwrap();
        let after = solve(&build_problem(&cut.graph, 16).unwrap(), TOL, 50_000).unwrap();
        assert!(after.objective <= before.objective + 2.0 * before.objective_tolerance());
    }
}

#[test]
fn instance_files_reproduce_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    for params in small_models() {
        let a: Instance = generate(&params, &AdversarySpec::delete_all_cross(), 11).unwrap();
        let b: Instance = generate(&params, &AdversarySpec::delete_all_cross(), 11).unwrap();
        assert_eq!(a, b);
        let path = dir.path().join("inst.json");
        save_instance(&a, &path).unwrap();
        let back: Instance = load_instance(&path).unwrap();
        assert_eq!(back, a);
    }
}

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (3..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(proptest::option::weighted(0.4, 0.1f64..3.0), n * (n - 1) / 2).prop_map(move |ws| {
            let pairs = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
            let edges = pairs.zip(ws).filter_map(|((u, v), w)| w.map(|w| (u, v, w)));
            WeightedGraph::from_edges(n, edges).unwrap()
        })
    })
}

fn enumerated_max_density(g: &Graph) -> f64 {
    let n = g.vertex_count();
    (1u32..1 << n)
        .map(|mask| {
            let s = VertexSubset::new((0..n).filter(|&i| mask >> i & 1 == 1));
            g.rho(&s).unwrap() / s.len() as f64
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn densest_matches_enumeration(g in graph_strategy(12)) {
        let found = densest_subgraph(&g).unwrap();
        let exact = enumerated_max_density(&g);
        prop_assert!((found.value - exact).abs() <= 1e-9, "{} vs {exact}", found.value);
        if !found.witness.is_empty() {
            let w = g.rho(&found.witness).unwrap() / found.witness.len() as f64;
            prop_assert!((w - found.value).abs() <= 1e-9);
        }
    }

    #[test]
    fn relaxation_dominates_brute_force(g in graph_strategy(14), k in 2usize..6) {
        let k = k.min(g.vertex_count());
        let (set, value) = brute_force_dks(&g, k).unwrap();
        prop_assert_eq!(set.len(), k);
        let sol = solve(&build_problem(&g, k).unwrap(), TOL, 50_000).unwrap();
        prop_assert!(value <= sol.objective + sol.objective_tolerance(), "{} > {}", value, sol.objective);
    }
}
