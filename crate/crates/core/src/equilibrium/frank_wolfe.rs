use super::support_system::SupportSystem;
use super::{aon_per_commodity, check_reachability, finalize, CostModel, EquilibriumResult, Flow, SolveOptions};
use crate::error::{Error, Result};
use crate::graph;
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use std::collections::BTreeSet;

/// Minimizes the Beckmann potential by Frank-Wolfe with exact line search.
/// The support of the iterate is periodically handed to an active-set loop
/// on the exact support system; the first refined flow satisfying the
/// equilibrium conditions is returned.
pub fn solve_wardrop<T: Scalar>(
    instance: &Instance<T>,
    belief: &Belief<T>,
    opts: &SolveOptions,
) -> Result<EquilibriumResult<T>> {
    check_reachability(instance)?;
    let model = CostModel::new(instance, belief, opts.eps_slope);
    let terminals: Vec<(usize, usize)> = model
        .sources
        .iter()
        .copied()
        .zip(model.targets.iter().copied())
        .collect();
    let aon = |costs: &[Vec<T>]| {
        aon_per_commodity(
            model.n_vertices,
            &model.ends,
            &model.allowed,
            &terminals,
            &model.demands,
            costs,
        )
    };

    let free_costs = vec![model.offset.clone(); model.n_commodities()];
    let mut x = aon(&free_costs)?;
    let tol = T::lit(opts.fw_gap_tol);
    let mut next_refine = 2usize;
    let mut rel_gap = T::one();
    for k in 0..opts.max_iters {
        let costs = model.commodity_costs(&x);
        let y = aon(&costs)?;
        let mut gap = T::zero();
        let mut total = T::zero();
        for i in 0..model.n_commodities() {
            for e in 0..model.n_edges() {
                let c = costs[i][e];
                gap += c * (x.per_commodity[i][e] - y.per_commodity[i][e]);
                total += c * x.per_commodity[i][e];
            }
        }
        rel_gap = if total > T::zero() { gap / total } else { gap.abs() };
        let converged = rel_gap <= tol;
        if converged || k + 1 >= next_refine {
            next_refine = (next_refine * 2).min(k + 1 + 64);
            if let Some(refined) = refine(&model, &x, opts) {
                return Ok(finalize(instance, belief, &model, refined, opts, T::zero(), k + 1, true));
            }
            if converged {
                return Ok(finalize(instance, belief, &model, x, opts, rel_gap, k + 1, false));
            }
        }
        // exact line search on the quadratic objective along y - x
        let mut curvature = T::zero();
        let dir: Vec<Vec<T>> = y
            .per_commodity
            .iter()
            .zip(&x.per_commodity)
            .map(|(yi, xi)| yi.iter().zip(xi).map(|(&a, &b)| a - b).collect())
            .collect();
        for e in 0..model.n_edges() {
            let mut de = T::zero();
            for di in &dir {
                de += di[e];
                curvature += model.tie * di[e] * di[e];
            }
            curvature += model.slope[e] * de * de;
        }
        let step = if curvature > T::zero() {
            (gap / curvature).max_of(T::zero()).min_of(T::one())
        } else {
            T::one()
        };
        if step == T::zero() {
            continue;
        }
        for (xi, di) in x.per_commodity.iter_mut().zip(&dir) {
            for (v, &d) in xi.iter_mut().zip(di) {
                *v += step * d;
            }
        }
    }
    if let Some(refined) = refine(&model, &x, opts) {
        return Ok(finalize(instance, belief, &model, refined, opts, T::zero(), opts.max_iters, true));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iters,
        gap: rel_gap.to_f64_lossy(),
        best_loads: x.loads().iter().map(|v| v.to_f64_lossy()).collect(),
    })
}

/// Active-set iteration on the exact support system, started from the
/// support of an approximate flow. Returns an equilibrium flow or `None`.
pub(crate) fn refine<T: Scalar>(model: &CostModel<T>, approx: &Flow<T>, opts: &SolveOptions) -> Option<Flow<T>> {
    let costs = model.commodity_costs(approx);
    let potentials = model.potentials(&costs);
    let r = model.n_commodities();
    let mut sets: Vec<BTreeSet<usize>> = (0..r)
        .map(|i| {
            let floor = model.demands[i] * T::lit(1e-6);
            let eps = T::lit(opts.support_eps);
            (0..model.n_edges())
                .filter(|&e| {
                    if !model.allowed[i][e] {
                        return false;
                    }
                    if approx.per_commodity[i][e] > floor {
                        return true;
                    }
                    let (u, w) = model.ends[e];
                    match (potentials[i][u], potentials[i][w]) {
                        (Some(pu), Some(pw)) => pw - pu - costs[i][e] >= -eps * (T::one() + pw.abs()),
                        _ => false,
                    }
                })
                .collect()
        })
        .collect();
    active_set(model, &mut sets, 8 * model.n_edges() * r + 20)
}

/// Primal active-set loop. `sets` is updated in place.
pub(crate) fn active_set<T: Scalar>(
    model: &CostModel<T>,
    sets: &mut [BTreeSet<usize>],
    max_rounds: usize,
) -> Option<Flow<T>> {
    let r = model.n_commodities();
    let exact = T::is_exact();
    let neg_tol = if exact { T::zero() } else { T::lit(1e-10) };
    let viol_tol = if exact { T::zero() } else { T::lit(1e-10) };
    for _ in 0..max_rounds {
        for i in 0..r {
            repair_connectivity(model, i, &mut sets[i]);
        }
        let support = SupportVector::new(sets.iter().map(|s| s.iter().copied().collect()).collect());
        let system = SupportSystem::build(model, &support).ok()?;
        let (mut flow, pi) = system.solve(&model.offset);

        let mut worst: Option<(usize, usize, T)> = None;
        for i in 0..r {
            let scale = model.demands[i].max_of(T::one());
            for &e in &sets[i] {
                let v = flow.per_commodity[i][e];
                if v < -neg_tol * scale && worst.is_none_or(|(_, _, w)| v / scale < w) {
                    worst = Some((i, e, v / scale));
                }
            }
        }
        if let Some((i, e, _)) = worst {
            sets[i].remove(&e);
            continue;
        }
        for xi in flow.per_commodity.iter_mut() {
            for v in xi.iter_mut() {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        }

        let costs = model.commodity_costs(&flow);
        let mut added = false;
        for i in 0..r {
            let dist = graph::dijkstra(model.n_vertices, &model.ends, &costs[i], &model.allowed[i], model.sources[i]);
            let mut best: Option<(usize, T)> = None;
            for e in 0..model.n_edges() {
                if !model.allowed[i][e] || sets[i].contains(&e) {
                    continue;
                }
                let (u, w) = model.ends[e];
                let (Some(du), Some(pw)) = (dist[u], pi[i][w]) else {
                    continue;
                };
                let viol = pw - du - costs[i][e];
                if viol > viol_tol * (T::one() + pw.abs()) && best.is_none_or(|(_, b)| viol > b) {
                    best = Some((e, viol));
                }
            }
            if let Some((e, _)) = best {
                sets[i].insert(e);
                let u = model.ends[e].0;
                if pi[i][u].is_none() {
                    for f in tree_path(model, &costs[i], &dist, i, u) {
                        sets[i].insert(f);
                    }
                }
                added = true;
            }
        }
        if !added {
            return Some(flow);
        }
    }
    None
}

/// Keeps the component of the source and, if the target fell out of it,
/// reattaches a shortest path at offset costs.
fn repair_connectivity<T: Scalar>(model: &CostModel<T>, i: usize, set: &mut BTreeSet<usize>) {
    let s = model.sources[i];
    let t = model.targets[i];
    let comp = component(model, s, set);
    set.retain(|&e| comp[model.ends[e].0]);
    if !comp[t] {
        let dist = graph::dijkstra(model.n_vertices, &model.ends, &model.offset, &model.allowed[i], s);
        for f in tree_path(model, &model.offset, &dist, i, t) {
            set.insert(f);
        }
    }
}

fn component<T: Scalar>(model: &CostModel<T>, s: usize, set: &BTreeSet<usize>) -> Vec<bool> {
    let mut comp = vec![false; model.n_vertices];
    comp[s] = true;
    let mut changed = true;
    while changed {
        changed = false;
        for &e in set {
            let (u, w) = model.ends[e];
            if comp[u] != comp[w] {
                comp[u] = true;
                comp[w] = true;
                changed = true;
            }
        }
    }
    comp
}

/// Edges of a shortest path from the source to `v` under `costs`.
fn tree_path<T: Scalar>(model: &CostModel<T>, costs: &[T], dist: &[Option<T>], i: usize, v: usize) -> Vec<usize> {
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-12) };
    let s = model.sources[i];
    let mut path = Vec::new();
    let mut cur = v;
    let mut guard = 0;
    while cur != s && guard <= model.n_vertices {
        guard += 1;
        let Some(dc) = dist[cur] else { break };
        let pred = (0..model.n_edges()).find(|&e| {
            let (u, w) = model.ends[e];
            w == cur
                && u != w
                && model.allowed[i][e]
                && dist[u].is_some_and(|du| graph::is_tight(du, dc, costs[e], tol) && du <= dc)
        });
        let Some(e) = pred else { break };
        path.push(e);
        cur = model.ends[e].0;
    }
    path
}
