use approx::assert_abs_diff_eq;
use wardrop_signal::equilibrium::{solve_wardrop, SolveOptions};
use wardrop_signal::error::Error;
use wardrop_signal::gen;
use wardrop_signal::model::{Belief, Commodity, Edge, Instance, StateSpace, SupportVector};
use wardrop_signal::support::{
    cost_profile, enumerate_supports_parallel, enumerate_supports_two_state, is_concave, offset_orderings_two_state,
    support_polytope, support_region, EnumOptions,
};

fn sv(e: &[usize]) -> SupportVector {
    SupportVector::new(vec![e.to_vec()])
}

#[test]
fn braess_regions() {
    let inst = gen::braess::<f64>();
    let o = SolveOptions::default();
    // alpha = mu(theta_1); the four outer edges hold for mu(theta_2) >= 1/2
    let a1 = support_region(&inst, &sv(&[0, 1, 2, 3]), &o).unwrap().unwrap();
    assert_abs_diff_eq!(a1.alpha_lo, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(a1.alpha_hi, 0.5, epsilon = 1e-6);
    assert_abs_diff_eq!(a1.cost(0.2), 1.5, epsilon = 1e-6);

    let a2 = support_region(&inst, &sv(&[0, 1, 2, 3, 4]), &o).unwrap().unwrap();
    assert_abs_diff_eq!(a2.alpha_lo, 0.5, epsilon = 1e-6);
    assert_abs_diff_eq!(a2.alpha_hi, 1.0, epsilon = 1e-9);
    // 2 - mu(theta_2)
    assert_abs_diff_eq!(a2.cost(0.8), 1.8, epsilon = 1e-6);

    assert!(support_region(&inst, &sv(&[1, 2]), &o).unwrap().is_none());
}

#[test]
fn example1_two_lower_links_region() {
    let inst = gen::example1::<f64>();
    let r = support_region(&inst, &sv(&[1, 2]), &SolveOptions::default()).unwrap().unwrap();
    // mu(theta_2) in [1/4, 2/5]
    assert_abs_diff_eq!(1.0 - r.alpha_hi, 0.25, epsilon = 1e-6);
    assert_abs_diff_eq!(1.0 - r.alpha_lo, 0.4, epsilon = 1e-6);
    let ext = support_polytope(&inst, &sv(&[1, 2]), &SolveOptions::default()).unwrap().unwrap();
    assert_abs_diff_eq!(ext[0].0, r.alpha_lo, epsilon = 1e-9);
    assert_abs_diff_eq!(ext[1].1, 1.0 - r.alpha_lo, epsilon = 1e-9);
}

#[test]
fn region_requires_two_offsets_only_states() {
    let inst = gen::example3::<f64>();
    assert_eq!(
        support_region(&inst, &sv(&[0]), &SolveOptions::default()),
        Err(Error::RequiresOffsetsOnly)
    );
    let inst = gen::nested_braess::<f64>(1, 1e-6, 1.0).unwrap();
    let three = Instance::new(
        inst.vertices.clone(),
        inst.edges
            .iter()
            .map(|e| Edge { slope: vec![e.slope[0]; 3], offset: vec![e.offset[0]; 3], ..e.clone() })
            .collect(),
        inst.commodities.clone(),
        StateSpace { states: vec!["a".into(), "b".into(), "c".into()], prior: vec![0.2, 0.3, 0.5] },
    )
    .unwrap();
    assert_eq!(
        support_region(&three, &sv(&[0, 1, 2]), &SolveOptions::default()),
        Err(Error::RequiresTwoStates)
    );
}

#[test]
fn example1_atlas() {
    let inst = gen::example1::<f64>();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
    assert_eq!(atlas.regions.len(), 5);
    let mut bps: Vec<f64> = atlas.breakpoints().iter().map(|a| 1.0 - a).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in bps.iter().zip([0.25, 0.4, 0.75, 0.8]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
    }
    assert!(atlas.lp_solves <= 3 * atlas.regions.len() + 2);
    let profile = cost_profile(&atlas).unwrap();
    assert_abs_diff_eq!(profile.eval(0.0), 2.0, epsilon = 1e-6);
    assert_abs_diff_eq!(profile.eval(1.0), 2.0, epsilon = 1e-6);
    for a in [0.2, 0.3, 0.5, 0.7, 0.75] {
        assert_abs_diff_eq!(profile.eval(a), 3.0, epsilon = 1e-6);
    }
    assert!(is_concave(&profile, 1e-9));
    let total: f64 = atlas.regions.iter().map(|r| r.length()).sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
}

#[test]
fn braess_atlas_is_not_concave() {
    let inst = gen::braess::<f64>();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
    assert_eq!(atlas.regions.len(), 2);
    assert_abs_diff_eq!(atlas.breakpoints()[0], 0.5, epsilon = 1e-6);
    let profile = cost_profile(&atlas).unwrap();
    assert!(!is_concave(&profile, 1e-9));
}

#[test]
fn regions_agree_with_solver_at_random_points() {
    use rand::{Rng, SeedableRng};
    let inst = gen::example1::<f64>();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for r in &atlas.regions {
        for _ in 0..20 {
            let a = r.alpha_lo + (r.alpha_hi - r.alpha_lo) * rng.gen_range(0.01..0.99);
            let eq = solve_wardrop(&inst, &Belief::two_state(a).unwrap(), &SolveOptions::default()).unwrap();
            assert_eq!(eq.support, r.support, "alpha = {a}");
            assert_abs_diff_eq!(eq.cost, r.cost(a), epsilon = 1e-6);
        }
        let mid = r.midpoint();
        let c = (r.cost(r.alpha_lo) + r.cost(r.alpha_hi)) / 2.0;
        assert_abs_diff_eq!(r.cost(mid), c, epsilon = 1e-6);
    }
}

#[test]
fn single_edge_profile_is_one_piece() {
    let inst = Instance::new(
        vec!["s".into(), "t".into()],
        vec![Edge { id: "e".into(), tail: 0, head: 1, slope: vec![1.0, 1.0], offset: vec![0.0, 2.0] }],
        vec![Commodity { source: 0, target: 1, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["a".into(), "b".into()], prior: vec![0.5, 0.5] },
    )
    .unwrap();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
    let p = cost_profile(&atlas).unwrap();
    assert!(p.interior_breakpoints().is_empty());
    assert_abs_diff_eq!(p.eval(0.0), 3.0, epsilon = 1e-6);
    assert_abs_diff_eq!(p.eval(1.0), 1.0, epsilon = 1e-6);
    assert_eq!(enumerate_supports_parallel(&inst).unwrap().len(), 1);
}

#[test]
fn exponential_supports() {
    // at j = 3 one region is narrower than the default boundary tolerance
    let opts = EnumOptions { boundary_tol: 1e-12, ..EnumOptions::default() };
    for j in 1..=3usize {
        let inst = gen::exp_supports::<f64>(j, 1e-6).unwrap();
        let atlas = enumerate_supports_two_state(&inst, &opts).unwrap();
        let distinct: std::collections::BTreeSet<_> = atlas.supports().into_iter().collect();
        assert!(distinct.len() >= 1 << (j + 1), "j = {j}: {} supports", distinct.len());
        assert!(atlas.lp_solves <= 3 * atlas.regions.len() + 2);
        if j == 3 {
            let narrowest = atlas.regions.iter().map(|r| r.length()).fold(f64::INFINITY, f64::min);
            assert!(narrowest < 1e-10);
        }
    }
}

#[test]
fn example1_orderings() {
    let inst = gen::example1::<f64>();
    let ords = offset_orderings_two_state(&inst).unwrap();
    assert_eq!(ords.len(), 4);
    let mut cuts: Vec<f64> = ords.iter().skip(1).map(|o| 1.0 - o.alpha_lo).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (got, want) in cuts.iter().zip([0.4, 5.0 / 9.0, 0.75]) {
        assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
    }
    assert_eq!(offset_orderings_two_state(&gen::braess::<f64>()), Err(Error::NotParallelLinks));
}

#[test]
fn identical_links_glue_into_one_ordering() {
    let e = |id: &str| Edge { id: id.into(), tail: 0, head: 1, slope: vec![1.0, 1.0], offset: vec![1.0, 2.0] };
    let inst = Instance::new(
        vec!["s".into(), "t".into()],
        vec![e("a"), e("b")],
        vec![Commodity { source: 0, target: 1, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["x".into(), "y".into()], prior: vec![0.5, 0.5] },
    )
    .unwrap();
    let ords = offset_orderings_two_state(&inst).unwrap();
    assert_eq!(ords.len(), 1);
    assert_eq!(ords[0].order, vec![0, 1]);
}

#[test]
fn parallel_superset_contains_realized_supports() {
    let inst = gen::example2::<f64>();
    let sup = enumerate_supports_parallel(&inst).unwrap();
    assert!(sup.contains(&SupportVector::new(vec![vec![0], vec![0]])));
    assert!(sup.contains(&SupportVector::new(vec![vec![0], vec![1]])));

    let inst = gen::example1::<f64>();
    let sup = enumerate_supports_parallel(&inst).unwrap();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).unwrap();
    for s in atlas.supports() {
        assert!(sup.contains(&s), "{s} missing");
    }
}

fn three_state_links(offsets: &[[f64; 3]], r_allowed: Option<Vec<Option<Vec<usize>>>>) -> Instance<f64> {
    let edges = offsets
        .iter()
        .enumerate()
        .map(|(k, b)| Edge {
            id: format!("e{}", k + 1),
            tail: 0,
            head: 1,
            slope: vec![1.0 + k as f64 * 0.5; 3],
            offset: b.to_vec(),
        })
        .collect();
    let commodities = match r_allowed {
        None => vec![Commodity { source: 0, target: 1, demand: 1.0, allowed_edges: None }],
        Some(list) => list
            .into_iter()
            .map(|allowed_edges| Commodity { source: 0, target: 1, demand: 0.5, allowed_edges })
            .collect(),
    };
    Instance::new(
        vec!["s".into(), "t".into()],
        edges,
        commodities,
        StateSpace { states: vec!["a".into(), "b".into(), "c".into()], prior: vec![0.3, 0.3, 0.4] },
    )
    .unwrap()
}

#[test]
fn three_states_cover_sampled_supports() {
    use rand::{Rng, SeedableRng};
    // every pair of links ties somewhere in the simplex, but each triple
    // tie lies outside it
    let inst = three_state_links(
        &[[1.8, 1.8, 2.6], [0.6, 2.0, 0.4], [2.1, 1.7, 2.6], [2.6, 0.0, 0.7]],
        Some(vec![None, Some(vec![0, 1, 2])]),
    );
    let sup = enumerate_supports_parallel(&inst).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let w: Vec<f64> = (0..3).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
        let s: f64 = w.iter().sum();
        let b = wardrop_signal::model::make_belief(&w.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap();
        let eq = solve_wardrop(&inst, &b, &SolveOptions::default()).unwrap();
        assert!(sup.contains(&eq.support), "{} missing", eq.support);
    }
}

#[test]
fn three_lines_through_one_belief_are_degenerate() {
    // all three offsets equal 1 at the uniform belief
    let inst = three_state_links(&[[0.0, 1.0, 2.0], [1.0, 2.0, 0.0], [2.0, 0.0, 1.0]], None);
    assert!(matches!(enumerate_supports_parallel(&inst), Err(Error::DegenerateInstance(_))));
}
