//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};
use wardrop_signal::equilibrium::{parallel_links_wardrop, solve_wardrop, SolveOptions};
use wardrop_signal::gen;
use wardrop_signal::io::tntp::{parse_tntp, TntpParams};
use wardrop_signal::model::{Belief, Commodity, Edge, Instance, StateSpace, SupportVector};
use wardrop_signal::signaling::{
    evaluate_scheme, full_revelation_scheme, grid_envelope, lower_envelope, no_signal_scheme, optimal_scheme_lp,
    optimal_scheme_two_state,
};
use wardrop_signal::sp::braess_witness;
use wardrop_signal::support::{cost_profile, enumerate_supports_two_state, is_concave, EnumOptions};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{what}: got {got}, want {want} (tol {tol:e})"))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn baselines(inst: &Instance<f64>) -> Result<(f64, f64), String> {
    let prior = inst.prior_belief().map_err(err)?;
    let opts = SolveOptions::default();
    let full = evaluate_scheme(inst, &full_revelation_scheme(&prior), &opts).map_err(err)?.total;
    let none = evaluate_scheme(inst, &no_signal_scheme(&prior), &opts).map_err(err)?.total;
    Ok((full, none))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let inst = gen::example1::<f64>();
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).map_err(err)?;
    let profile = cost_profile(&atlas).map_err(err)?;
    let concave = is_concave(&profile, 1e-9);
    let elapsed = start.elapsed();

    let mut bps: Vec<f64> = atlas.breakpoints().iter().map(|a| 1.0 - a).collect();
    bps.sort_by(f64::total_cmp);
    ensure(bps.len() == 4, || format!("breakpoints {bps:?}"))?;
    for (got, want) in bps.iter().zip([0.25, 0.4, 0.75, 0.8]) {
        close(*got, want, 1e-6, "breakpoint mu(theta2)")?;
    }
    close(profile.eval(0.0), 2.0, 1e-6, "C at mu(theta2) = 1")?;
    close(profile.eval(1.0), 2.0, 1e-6, "C at mu(theta2) = 0")?;
    // plateau on mu(theta2) in [1/4, 4/5], i.e. alpha in [1/5, 3/4]
    for k in 0..=20 {
        let a = 0.2 + 0.55 * k as f64 / 20.0;
        close(profile.eval(a), 3.0, 1e-6, "plateau")?;
    }
    ensure(concave, || "profile not concave".into())?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("breakpoints {bps:?}, concave, {elapsed:?}"))
}

fn criterion_2() -> Outcome {
    let (full, none) = baselines(&gen::example2::<f64>())?;
    close(full, 1.0, 1e-9, "full revelation")?;
    close(none, 7.0 / 8.0, 1e-9, "no signal")?;
    ensure(none < full, || "no signal is not better".into())?;
    Ok(format!("full {full}, none {none}"))
}

fn criterion_3() -> Outcome {
    let inst = gen::braess::<f64>();
    let a1 = SupportVector::new(vec![vec![0, 1, 2, 3]]);
    let a2 = SupportVector::new(vec![vec![0, 1, 2, 3, 4]]);
    let atlas = enumerate_supports_two_state(&inst, &EnumOptions::default()).map_err(err)?;
    ensure(atlas.regions.len() == 2, || format!("{} regions", atlas.regions.len()))?;
    close(atlas.breakpoints()[0], 0.5, 1e-6, "breakpoint")?;
    for r in &atlas.regions {
        let samples = (0..=10).map(|k| r.alpha_lo + r.length() * k as f64 / 10.0);
        if r.support == a1 {
            for a in samples {
                close(r.cost(a), 1.5, 1e-6, "C on A1")?;
            }
        } else if r.support == a2 {
            for a in samples {
                close(r.cost(a), 2.0 - (1.0 - a), 1e-6, "C on A2")?;
            }
        } else {
            return Err(format!("unexpected support {}", r.support.label(&inst)));
        }
    }
    let (full, _) = baselines(&inst)?;
    close(full, 1.75, 1e-6, "full revelation")?;
    let lp = optimal_scheme_lp(&inst, &atlas.supports()).map_err(err)?;
    close(lp.cost, 1.5, 1e-6, "LP optimum")?;
    ensure(lp.verified(), || "recovered equilibria fail verification".into())?;
    Ok(format!("breakpoint {}, full {full}, LP {}", atlas.breakpoints()[0], lp.cost))
}

fn criterion_4() -> Outcome {
    let eps = 1e-6;
    let opts = SolveOptions::default();
    let half = Belief::two_state(0.5).map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 1..=20 {
        let d = 0.15 * k as f64;
        let inst = gen::nested_braess::<f64>(1, eps, d).map_err(err)?;
        let got = solve_wardrop(&inst, &half, &opts).map_err(err)?.cost / d;
        let want = gen::nested_braess_cost(1, eps, d).map_err(err)?;
        let rel = (got - want).abs() / want;
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("d = {d}: {got} vs {want}"))?;
    }
    for j in 1..=3usize {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=30 {
            let d = 0.1 * k as f64;
            let inst = gen::nested_braess::<f64>(j, eps, d).map_err(err)?;
            let c = solve_wardrop(&inst, &half, &opts).map_err(err)?.cost;
            ensure(c >= prev + 1e-9, || format!("j = {j}: cost {c} at d = {d} after {prev}"))?;
            prev = c;
        }
    }
    Ok(format!("worst relative error {worst:e}; increasing for j = 1, 2, 3"))
}

fn criterion_5() -> Outcome {
    // one region at j = 3 is about 3e-11 wide
    let opts = EnumOptions { boundary_tol: 1e-12, ..EnumOptions::default() };
    let mut counts = Vec::new();
    for j in 1..=3usize {
        let start = Instant::now();
        let inst = gen::exp_supports::<f64>(j, 1e-6).map_err(err)?;
        let atlas = enumerate_supports_two_state(&inst, &opts).map_err(err)?;
        let elapsed = start.elapsed();
        let distinct: BTreeSet<_> = atlas.supports().into_iter().collect();
        ensure(distinct.len() >= 1 << (j + 1), || format!("j = {j}: {} supports", distinct.len()))?;
        if j == 3 {
            ensure(elapsed < Duration::from_secs(60), || format!("j = 3 took {elapsed:?}"))?;
        }
        counts.push((distinct.len(), elapsed));
    }
    Ok(format!("(supports, time) for j = 1..3: {counts:?}"))
}

fn criterion_6() -> Outcome {
    let eo = EnumOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for seed in 0..25u64 {
        let n = rng.gen_range(2..=14);
        let p = rng.gen_range(0.05..0.95);
        let inst = gen::random_series_parallel::<f64>(seed, n)
            .and_then(|i| i.with_prior(&[p, 1.0 - p]))
            .map_err(err)?;
        let prior = inst.prior_belief().map_err(err)?;
        let best = optimal_scheme_two_state(&inst, &prior, &eo).map_err(err)?;
        let (full, _) = baselines(&inst)?;
        worst = worst.max((best.cost - full).abs());
        close(best.cost, full, 1e-6, &format!("seed {seed}: LP vs full revelation"))?;
    }
    let w = braess_witness(&gen::braess::<f64>(), 0, 3).map_err(err)?;
    let prior = Belief::two_state(0.5).map_err(err)?;
    let (full, _) = baselines(&w.instance)?;
    let best = optimal_scheme_two_state(&w.instance, &prior, &eo).map_err(err)?;
    let gap = full - best.cost;
    ensure(gap >= 0.25 - 1e-6, || format!("witness gap {gap}"))?;
    Ok(format!("max |LP - full| {worst:e} on 25 SP instances; witness gap {gap}"))
}

fn sioux_path() -> String {
    std::env::var("WARDROP_SIOUX_TNTP").unwrap_or_else(|_| "/root/data/SiouxFalls_net.tntp".into())
}

fn criterion_7() -> Outcome {
    let path = sioux_path();
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let mut max_count = 0;
    let mut max_residual: f64 = 0.0;
    let mut runs = 0;
    for tau in [0.05, 0.2, 0.5, 1.0] {
        for seed in 0..10u64 {
            let params = TntpParams { tau, seed, demand: 1e5, source: 1, target: 19, ..TntpParams::default() };
            let inst = parse_tntp(&text, &params).map_err(err)?.instance;
            let opts = EnumOptions { verify_tol: 1e-5, ..EnumOptions::default() };
            let atlas = enumerate_supports_two_state(&inst, &opts)
                .map_err(|e| format!("tau {tau}, seed {seed}: {e}"))?;
            let r = atlas.midpoint_residuals.iter().copied().fold(0.0, f64::max);
            ensure(r <= 1e-5, || format!("tau {tau}, seed {seed}: residual {r}"))?;
            let count = atlas.supports().into_iter().collect::<BTreeSet<_>>().len();
            ensure(count <= 60, || format!("tau {tau}, seed {seed}: {count} supports"))?;
            max_count = max_count.max(count);
            max_residual = max_residual.max(r);
            runs += 1;
        }
    }
    Ok(format!("{runs} runs, at most {max_count} supports, max midpoint residual {max_residual:e}"))
}

/// Random DAG on 4 to 7 vertices: a spine `0 -> .. -> n-1` plus forward
/// chords, two-state offsets and some zero slopes.
fn random_dag(rng: &mut ChaCha8Rng) -> Instance<f64> {
    let n = rng.gen_range(4..=7);
    let mut ends: Vec<(usize, usize)> = (0..n - 1).map(|v| (v, v + 1)).collect();
    for _ in 0..rng.gen_range(1..=6) {
        let u = rng.gen_range(0..n - 1);
        let w = rng.gen_range(u + 1..n);
        ends.push((u, w));
    }
    let edges = ends
        .iter()
        .enumerate()
        .map(|(k, &(u, w))| {
            let a = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.2..2.0) };
            Edge {
                id: format!("e{}", k + 1),
                tail: u,
                head: w,
                slope: vec![a, a],
                offset: vec![rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)],
            }
        })
        .collect();
    let p = rng.gen_range(0.05..0.95);
    Instance::new(
        (0..n).map(|v| format!("v{v}")).collect(),
        edges,
        vec![Commodity { source: 0, target: n - 1, demand: 1.0, allowed_edges: None }],
        StateSpace { states: vec!["a".into(), "b".into()], prior: vec![p, 1.0 - p] },
    )
    .expect("valid random instance")
}

fn criterion_8() -> Outcome {
    let opts = SolveOptions::default();
    let mut worst_load: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..100u64 {
        let m = rng.gen_range(1..=10);
        let inst = gen::random_parallel_links::<f64>(seed, m, 2).map_err(err)?;
        let b = Belief::two_state(rng.gen_range(0.0..=1.0)).map_err(err)?;
        let wf = parallel_links_wardrop(&inst, &b, &opts).map_err(err)?.loads();
        let fw = solve_wardrop(&inst, &b, &opts).map_err(err)?.loads();
        for (x, y) in wf.iter().zip(&fw) {
            worst_load = worst_load.max((x - y).abs());
        }
        ensure(worst_load <= 1e-7, || format!("seed {seed}: load gap {worst_load}"))?;
    }

    // Grid oracle: Frank-Wolfe costs at 10^4 + 1 grid points, refined with
    // the atlas breakpoints so the grid spacing does not bias the hull.
    let eo = EnumOptions::default();
    let mut worst_env: f64 = 0.0;
    for k in 0..20 {
        let inst = if k % 2 == 0 {
            random_dag(&mut rng)
        } else {
            let p = rng.gen_range(0.05..0.95);
            gen::random_series_parallel::<f64>(100 + k, rng.gen_range(3..=12))
                .and_then(|i| i.with_prior(&[p, 1.0 - p]))
                .map_err(err)?
        };
        let prior = inst.prior_belief().map_err(err)?;
        let best = optimal_scheme_two_state(&inst, &prior, &eo).map_err(err)?;
        let n = 10_000;
        let mut alphas: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        alphas.extend(best.atlas.breakpoints());
        let mut pts = Vec::with_capacity(alphas.len());
        for a in alphas {
            let c = solve_wardrop(&inst, &Belief::two_state(a).map_err(err)?, &opts).map_err(err)?.cost;
            pts.push((a, c));
        }
        let oracle = lower_envelope(&pts, prior.alpha()).ok_or("prior outside the grid")?.cost;
        worst_env = worst_env.max((best.cost - oracle).abs());
        close(best.cost, oracle, 1e-5, &format!("instance {k}: envelope"))?;
    }
    Ok(format!("max load gap {worst_load:e} on 100 instances; max envelope gap {worst_env:e} on 20"))
}

fn criterion_9() -> Outcome {
    let inst = gen::example3::<f64>();
    let (full, none) = baselines(&inst)?;
    let grid = grid_envelope(&inst, 10_000, &SolveOptions::default()).map_err(err)?;
    let summary = format!(
        "grid optimum {:.6} (posteriors {:.4}, {:.4}), full {full}, none {none}",
        grid.cost, grid.left, grid.right
    );
    close(full, 1.0, 1e-9, "full revelation")?;
    close(none, 1.0, 1e-9, "no signal")?;
    ensure(grid.cost < 1.0 - 1e-3, || summary.clone())?;
    Ok(summary)
}

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    // written straight to the stderr handle so the lines survive output capture
    let mut log = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (k, run) in criteria {
        let line = match run() {
            Ok(detail) => format!("criterion {k}: PASS ({detail})"),
            Err(why) => {
                failed.push(k);
                format!("criterion {k}: FAIL ({why})")
            }
        };
        writeln!(log, "{line}").unwrap();
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
