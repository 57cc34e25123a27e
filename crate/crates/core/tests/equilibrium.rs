use approx::assert_abs_diff_eq;
use wardrop_signal::equilibrium::{
    all_or_nothing, beckmann_value, parallel_links_wardrop, solve_on_support, solve_wardrop, verify_wardrop, Flow,
    SolveOptions,
};
use wardrop_signal::error::Error;
use wardrop_signal::gen;
use wardrop_signal::model::{make_belief, Belief, Commodity, Edge, Instance, StateSpace, SupportVector};

fn belief(w: &[f64]) -> Belief<f64> {
    make_belief(w).unwrap()
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

fn flow1(x: &[f64]) -> Flow<f64> {
    Flow {
        per_commodity: vec![x.to_vec()],
    }
}

#[test]
fn example1_uniform_belief() {
    let inst = gen::example1::<f64>();
    let r = solve_wardrop(&inst, &belief(&[0.5, 0.5]), &opts()).unwrap();
    let loads = r.loads();
    assert_abs_diff_eq!(loads[0], 0.25, epsilon = 1e-7);
    assert_abs_diff_eq!(loads[1], 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(loads[2], 0.25, epsilon = 1e-7);
    assert_abs_diff_eq!(r.cost, 3.0, epsilon = 1e-7);
    assert!(r.kkt_residual <= 1e-6);
}

#[test]
fn example1_point_mass_and_two_lower_links() {
    let inst = gen::example1::<f64>();
    let r = parallel_links_wardrop(&inst, &belief(&[1.0, 0.0]), &opts()).unwrap();
    assert_abs_diff_eq!(r.loads()[1], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.cost, 2.0, epsilon = 1e-9);
    // mu(theta_2) = 0.3
    let r = parallel_links_wardrop(&inst, &belief(&[0.7, 0.3]), &opts()).unwrap();
    assert_eq!(r.support, SupportVector::new(vec![vec![1, 2]]));
}

#[test]
fn example2_point_mass_theta1() {
    let inst = gen::example2::<f64>();
    let r = solve_wardrop(&inst, &belief(&[1.0, 0.0]), &opts()).unwrap();
    assert_abs_diff_eq!(r.loads()[0], 1.0, epsilon = 1e-7);
    assert_abs_diff_eq!(r.cost, 1.0, epsilon = 1e-7);
}

#[test]
fn braess_uniform_belief() {
    let inst = gen::braess::<f64>();
    let r = solve_wardrop(&inst, &belief(&[0.5, 0.5]), &opts()).unwrap();
    assert_abs_diff_eq!(r.cost, 1.5, epsilon = 1e-7);
    assert_abs_diff_eq!(r.potential_cost(&inst), 1.5, epsilon = 1e-7);
}

#[test]
fn beckmann_closed_form() {
    let inst = gen::example1::<f64>();
    let v = beckmann_value(&inst, &belief(&[0.5, 0.5]), &flow1(&[0.25, 0.5, 0.25])).unwrap();
    assert_abs_diff_eq!(v, 2.6875, epsilon = 1e-12);
    let bad = beckmann_value(&inst, &belief(&[0.5, 0.5]), &flow1(&[0.25, 0.5, 0.0]));
    assert!(matches!(bad, Err(Error::InfeasibleFlow { .. })));
}

#[test]
fn all_or_nothing_ties_and_braess_path() {
    let inst = gen::braess::<f64>();
    let b = belief(&[1.0, 0.0]);
    let (_, offsets) = inst.expected_params(&b);
    let f = all_or_nothing(&inst, &offsets).unwrap();
    assert_eq!(f.per_commodity[0], vec![1.0, 0.0, 0.0, 1.0, 1.0]);

    let two = Instance::new(
        vec!["s".into(), "t".into()],
        vec![
            Edge { id: "a".into(), tail: 0, head: 1, slope: vec![0.0], offset: vec![1.0] },
            Edge { id: "b".into(), tail: 0, head: 1, slope: vec![0.0], offset: vec![1.0] },
        ],
        vec![Commodity { source: 0, target: 1, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["only".into()], prior: vec![1.0] },
    )
    .unwrap();
    let f = all_or_nothing(&two, &[1.0, 1.0]).unwrap();
    assert_eq!(f.per_commodity[0], vec![1.0, 0.0]);
    let f = all_or_nothing(&two, &[2.0, 1.0]).unwrap();
    assert_eq!(f.per_commodity[0], vec![0.0, 1.0]);
}

#[test]
fn braess_support_systems() {
    let inst = gen::braess::<f64>();
    let a2 = SupportVector::new(vec![vec![0, 1, 2, 3, 4]]);
    let a1 = SupportVector::new(vec![vec![0, 1, 2, 3]]);

    let s = solve_on_support(&inst, &belief(&[1.0, 0.0]), &a2, &opts()).unwrap();
    let x = &s.flow.per_commodity[0];
    assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(x[3], 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(x[1], 0.0, epsilon = 1e-8);
    assert_abs_diff_eq!(x[2], 0.0, epsilon = 1e-8);
    assert_abs_diff_eq!(x[4], 1.0, epsilon = 1e-8);
    assert_abs_diff_eq!(s.cost, 2.0, epsilon = 1e-8);
    assert!(s.report.feasible());

    let s = solve_on_support(&inst, &belief(&[0.2, 0.8]), &a2, &opts()).unwrap();
    assert_abs_diff_eq!(s.flow.per_commodity[0][4], -0.6, epsilon = 1e-8);
    assert!(!s.report.negative_flows.is_empty());

    let s = solve_on_support(&inst, &belief(&[0.75, 0.25]), &a1, &opts()).unwrap();
    assert_abs_diff_eq!(s.flow.per_commodity[0][0], 0.5, epsilon = 1e-8);
    assert_eq!(s.report.cost_violations.iter().map(|v| v.1).collect::<Vec<_>>(), vec![4]);

    let detached = SupportVector::new(vec![vec![1, 2]]);
    assert!(matches!(
        solve_on_support(&inst, &belief(&[0.5, 0.5]), &detached, &opts()),
        Err(Error::SingularSystem(_))
    ));
}

#[test]
fn verification_detects_deviation() {
    let inst = gen::example1::<f64>();
    let rep = verify_wardrop(&inst, &belief(&[1.0, 0.0]), &flow1(&[1.0, 0.0, 0.0]), 1e-6);
    assert!(!rep.pass && rep.max_residual > 0.0);

    let mut zero = gen::example1::<f64>();
    zero.commodities[0].demand = 0.0;
    let rep = verify_wardrop(&zero, &belief(&[1.0, 0.0]), &flow1(&[0.0, 0.0, 0.0]), 1e-6);
    assert_eq!(rep.max_residual, 0.0);
}

#[test]
fn unreachable_target_is_reported() {
    let inst = Instance::new(
        vec!["s".into(), "m".into(), "t".into()],
        vec![Edge { id: "a".into(), tail: 0, head: 1, slope: vec![1.0], offset: vec![0.0] }],
        vec![Commodity { source: 0, target: 2, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["only".into()], prior: vec![1.0] },
    )
    .unwrap();
    let r = solve_wardrop(&inst, &belief(&[1.0]), &opts());
    assert!(matches!(r, Err(Error::NoPath { commodity: 0 })));
}

#[test]
fn support_of_equilibrium_reproduces_loads() {
    let inst = gen::nested_braess::<f64>(2, 1e-6, 1.3).unwrap();
    let b = belief(&[0.5, 0.5]);
    let r = solve_wardrop(&inst, &b, &opts()).unwrap();
    let s = solve_on_support(&inst, &b, &r.support, &opts()).unwrap();
    assert!(s.report.feasible());
    for (x, y) in s.flow.loads().iter().zip(r.loads()) {
        assert_abs_diff_eq!(*x, y, epsilon = 1e-8);
    }
}

#[test]
fn nested_braess_matches_closed_form() {
    let eps = 1e-6;
    for k in 1..=20 {
        let d = 0.15 * k as f64;
        let inst = gen::nested_braess::<f64>(1, eps, d).unwrap();
        let r = solve_wardrop(&inst, &belief(&[0.5, 0.5]), &opts()).unwrap();
        let want = gen::nested_braess_cost(1, eps, d).unwrap();
        let got = r.cost / d;
        assert!((got - want).abs() <= 1e-6 * want, "d = {d}: {got} vs {want}");
    }
}
