use proptest::prelude::*;
use wardrop_signal::equilibrium::{
    all_or_nothing, beckmann_value, parallel_links_wardrop, solve_wardrop, verify_wardrop, SolveOptions,
};
use wardrop_signal::gen;
use wardrop_signal::io::json::{instance_from_json, instance_to_json};
use wardrop_signal::model::{expected_cost_params, make_belief, Belief, Commodity, Edge, Instance, StateSpace};
use wardrop_signal::signaling::{
    evaluate_scheme, full_revelation_scheme, no_signal_scheme, optimal_scheme_lp, optimal_scheme_two_state,
};
use wardrop_signal::support::{cost_profile, enumerate_supports_two_state, is_concave, CostProfile, EnumOptions};

/// Random DAG on `n` vertices containing the chain `0 -> 1 -> .. -> n-1`.
fn random_dag(n: usize, extra: &[(usize, usize)], costs: &[(f64, f64, f64)]) -> Instance<f64> {
    let mut ends: Vec<(usize, usize)> = (0..n - 1).map(|v| (v, v + 1)).collect();
    for &(a, b) in extra {
        let (u, w) = (a % n, b % n);
        if u != w {
            ends.push((u.min(w), u.max(w)));
        }
    }
    let edges = ends
        .iter()
        .enumerate()
        .map(|(k, &(u, w))| {
            let (a, b1, b2) = costs[k % costs.len()];
            Edge { id: format!("e{}", k + 1), tail: u, head: w, slope: vec![a, a], offset: vec![b1, b2] }
        })
        .collect();
    Instance::new(
        (0..n).map(|v| format!("v{v}")).collect(),
        edges,
        vec![Commodity { source: 0, target: n - 1, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["a".into(), "b".into()], prior: vec![0.5, 0.5] },
    )
    .unwrap()
}

fn dag_strategy() -> impl Strategy<Value = Instance<f64>> {
    (
        3usize..7,
        prop::collection::vec((0usize..7, 0usize..7), 0..8),
        prop::collection::vec((prop_oneof![Just(0.0), 0.2f64..2.0], 0.0f64..2.0, 0.0f64..2.0), 1..12),
    )
        .prop_map(|(n, extra, costs)| random_dag(n, &extra, &costs))
}

/// Best two-point split of `p` over a grid refined with the profile's knots,
/// by exhaustive search over pairs.
fn brute_force_envelope(profile: &CostProfile<f64>, p: f64, n: usize) -> f64 {
    let mut xs: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).chain(profile.knots.iter().copied()).collect();
    xs.push(p);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vals: Vec<f64> = xs.iter().map(|&x| profile.eval(x)).collect();
    let mut best = profile.eval(p);
    for (i, &l) in xs.iter().enumerate().filter(|(_, &l)| l < p) {
        for (j, &r) in xs.iter().enumerate().filter(|(_, &r)| r > p) {
            let w = (r - p) / (r - l);
            best = best.min(w * vals[i] + (1.0 - w) * vals[j]);
        }
    }
    best
}

fn belief_strategy() -> impl Strategy<Value = Belief<f64>> {
    (0.0f64..=1.0).prop_map(|a| Belief::two_state(a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn expected_params_are_linear_in_the_belief(
        slope in prop::collection::vec(0.0f64..3.0, 3),
        offset in prop::collection::vec(0.0f64..3.0, 3),
        w1 in prop::collection::vec(0.01f64..1.0, 3),
        w2 in prop::collection::vec(0.01f64..1.0, 3),
        lambda in 0.0f64..=1.0,
    ) {
        let edge = Edge { id: "e".into(), tail: 0, head: 1, slope, offset };
        let norm = |w: Vec<f64>| { let s: f64 = w.iter().sum(); make_belief(&w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap() };
        let (b1, b2) = (norm(w1), norm(w2));
        let mixed = b1.mix(&b2, lambda);
        let (a, b) = expected_cost_params(&edge, &mixed);
        let (a1, o1) = expected_cost_params(&edge, &b1);
        let (a2, o2) = expected_cost_params(&edge, &b2);
        prop_assert!((a - (lambda * a1 + (1.0 - lambda) * a2)).abs() <= 1e-12);
        prop_assert!((b - (lambda * o1 + (1.0 - lambda) * o2)).abs() <= 1e-12);
    }

    #[test]
    fn water_filling_agrees_with_frank_wolfe(seed in any::<u64>(), m in 1usize..=10, b in belief_strategy()) {
        let inst = gen::random_parallel_links::<f64>(seed, m, 2).unwrap();
        let opts = SolveOptions::default();
        let wf = parallel_links_wardrop(&inst, &b, &opts).unwrap();
        let fw = solve_wardrop(&inst, &b, &opts).unwrap();
        for (x, y) in wf.loads().iter().zip(fw.loads()) {
            prop_assert!((x - y).abs() <= 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn equilibria_pass_verification_and_identities(inst in dag_strategy(), b in belief_strategy()) {
        let opts = SolveOptions::default();
        let eq = solve_wardrop(&inst, &b, &opts).unwrap();
        let rep = verify_wardrop(&inst, &b, &eq.flow, 1e-6);
        prop_assert!(rep.pass, "{rep:?}");
        // total cost equals demand times the source-target potential
        prop_assert!((eq.cost - eq.potential_cost(&inst)).abs() <= 1e-6 * (1.0 + eq.cost.abs()));
    }

    #[test]
    fn equilibrium_solves_the_variational_inequality_and_minimizes_beckmann(
        inst in dag_strategy(),
        b in belief_strategy(),
        weights in prop::collection::vec(0.0f64..3.0, 20),
    ) {
        let opts = SolveOptions::default();
        let eq = solve_wardrop(&inst, &b, &opts).unwrap();
        let (slope, offset) = inst.expected_params(&b);
        let x = eq.loads();
        // any feasible flow: shortest path under arbitrary costs
        let probe: Vec<f64> = (0..inst.n_edges()).map(|e| weights[e % weights.len()]).collect();
        let y = all_or_nothing(&inst, &probe).unwrap();
        let yl = y.loads();
        let vi: f64 = (0..x.len()).map(|e| (slope[e] * x[e] + offset[e]) * (yl[e] - x[e])).sum();
        prop_assert!(vi >= -1e-6, "{vi}");
        let fx = beckmann_value(&inst, &b, &eq.flow).unwrap();
        let fy = beckmann_value(&inst, &b, &y).unwrap();
        prop_assert!(fx <= fy + 1e-7, "{fx} > {fy}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 30, ..ProptestConfig::default() })]

    #[test]
    fn region_costs_are_affine(inst in dag_strategy()) {
        let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
        let opts = SolveOptions::default();
        for r in &atlas.regions {
            if r.length() < 1e-6 {
                continue;
            }
            for t in [0.25, 0.75] {
                let a = r.alpha_lo + t * r.length();
                let eq = solve_wardrop(&inst, &Belief::two_state(a).unwrap(), &opts).unwrap();
                prop_assert!((eq.cost - r.cost(a)).abs() <= 1e-6 * (1.0 + eq.cost.abs()));
            }
        }
    }

    #[test]
    fn signaling_lp_dominates_baselines_and_recovers_equilibria(inst in dag_strategy(), p in 0.05f64..0.95) {
        let inst = inst.with_prior(&[p, 1.0 - p]).unwrap();
        let prior = inst.prior_belief().unwrap();
        let opts = SolveOptions::default();
        let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
        let lp = optimal_scheme_lp(&inst, &atlas.supports()).unwrap();
        // scheme validity
        for (k, row) in lp.scheme.phi().iter().enumerate() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - inst.states.prior[k]).abs() <= 1e-9);
        }
        for s in &lp.signals {
            prop_assert!(s.kkt.max_residual <= 1e-5, "{:?}", s.kkt);
        }
        let full = evaluate_scheme(&inst, &full_revelation_scheme(&prior), &opts).unwrap().total;
        let none = evaluate_scheme(&inst, &no_signal_scheme(&prior), &opts).unwrap().total;
        prop_assert!(lp.cost <= full.min(none) + 1e-8, "{} vs {full}, {none}", lp.cost);
    }

    #[test]
    fn lp_optimum_is_the_envelope_of_the_profile(inst in dag_strategy(), p in 0.05f64..0.95) {
        let inst = inst.with_prior(&[p, 1.0 - p]).unwrap();
        let prior = inst.prior_belief().unwrap();
        let best = optimal_scheme_two_state(&inst, &prior, &EnumOptions::default()).unwrap();
        let profile = cost_profile(&best.atlas).unwrap();
        let oracle = brute_force_envelope(&profile, p, 2000);
        prop_assert!((best.cost - oracle).abs() <= 1e-5, "{} vs {oracle}", best.cost);
        prop_assert!((best.envelope_cost - oracle).abs() <= 1e-5);
    }

    #[test]
    fn json_round_trip(inst in dag_strategy()) {
        let text = instance_to_json(&inst);
        let back = instance_from_json::<f64>(&text).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn concave_profiles_make_full_revelation_optimal(seed in any::<u64>(), n in 1usize..12, p in 0.05f64..0.95) {
        let inst = gen::random_series_parallel::<f64>(seed, n).unwrap().with_prior(&[p, 1.0 - p]).unwrap();
        let prior = inst.prior_belief().unwrap();
        let eo = EnumOptions::default();
        let best = optimal_scheme_two_state(&inst, &prior, &eo).unwrap();
        let profile = cost_profile(&best.atlas).unwrap();
        prop_assert!(is_concave(&profile, 1e-9));
        let full = evaluate_scheme(&inst, &full_revelation_scheme(&prior), &eo.solve).unwrap().total;
        prop_assert!((best.cost - full).abs() <= 1e-6, "{} vs {full}", best.cost);
        prop_assert!((best.envelope_cost - best.cost).abs() <= 1e-6);
        prop_assert!(best.scheme.scheme.n_signals() <= 2);
    }
}
