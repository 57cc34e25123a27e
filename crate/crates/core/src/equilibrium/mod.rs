//! Wardrop equilibria for a fixed belief.
//!
//! Three solvers share the types in this module: Frank-Wolfe on the Beckmann
//! potential with active-set refinement ([`solve_wardrop`]), the exact
//! equality system for a prescribed support ([`solve_on_support`]) and closed
//! form water-filling on parallel links ([`parallel_links_wardrop`]).
//!
//! Exact solvers replace zero slopes by a small `eps_slope`. When several
//! commodities share an edge their individual flows are not unique, so a
//! per-commodity term `eps_slope * x_{e,i}` is added to every commodity's
//! cost; single-commodity instances are left untouched.

mod frank_wolfe;
mod parallel;
mod support_system;

pub use frank_wolfe::solve_wardrop;
pub use parallel::parallel_links_wardrop;
pub use support_system::{solve_on_support, FeasibilityReport, SupportSolution, SupportSystem};

use crate::error::{Error, Result};
use crate::graph;
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Target relative duality gap.
    pub fw_gap_tol: f64,
    pub max_iters: usize,
    /// Relative tolerance for reading active edges off potentials.
    pub support_eps: f64,
    /// Replacement for zero slopes in exact solvers.
    pub eps_slope: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            fw_gap_tol: 1e-9,
            max_iters: 20_000,
            support_eps: 1e-7,
            eps_slope: 1e-9,
        }
    }
}

/// Edge flows per commodity: `per_commodity[i][e]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Flow<T> {
    pub per_commodity: Vec<Vec<T>>,
}

impl<T: Scalar> Flow<T> {
    pub fn zeros(commodities: usize, edges: usize) -> Self {
        Flow {
            per_commodity: vec![vec![T::zero(); edges]; commodities],
        }
    }

    pub fn loads(&self) -> Vec<T> {
        let m = self.per_commodity.first().map_or(0, Vec::len);
        let mut loads = vec![T::zero(); m];
        for f in &self.per_commodity {
            for (l, &x) in loads.iter_mut().zip(f) {
                *l += x;
            }
        }
        loads
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumResult<T> {
    pub flow: Flow<T>,
    /// `potentials[i][v]`: shortest-path distance from `s_i`, `None` if unreachable.
    pub potentials: Vec<Vec<Option<T>>>,
    pub support: SupportVector,
    pub cost: T,
    pub kkt_residual: T,
    /// Relative duality gap of the returned flow.
    pub gap: T,
    pub iterations: usize,
    /// True when the flow came from the exact support system.
    pub refined: bool,
}

impl<T: Scalar> EquilibriumResult<T> {
    pub fn loads(&self) -> Vec<T> {
        self.flow.loads()
    }

    /// `sum_i d_i * pi_{t_i, i}`.
    pub fn potential_cost(&self, instance: &Instance<T>) -> T {
        instance
            .commodities
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, c)| {
                acc + c.demand * self.potentials[i][c.target].unwrap_or(T::zero())
            })
    }
}

/// Serializable view of an equilibrium.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumReport {
    pub belief: Vec<f64>,
    pub loads: Vec<(String, f64)>,
    pub flows: Vec<Vec<f64>>,
    pub potentials: Vec<Vec<Option<f64>>>,
    pub support: Vec<Vec<String>>,
    pub cost: f64,
    pub kkt_residual: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl EquilibriumReport {
    pub fn new<T: Scalar>(instance: &Instance<T>, belief: &Belief<T>, r: &EquilibriumResult<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        EquilibriumReport {
            belief: belief.weights().iter().map(|&w| f(w)).collect(),
            loads: instance
                .edges
                .iter()
                .zip(r.loads())
                .map(|(e, l)| (e.id.clone(), f(l)))
                .collect(),
            flows: r
                .flow
                .per_commodity
                .iter()
                .map(|row| row.iter().map(|&x| f(x)).collect())
                .collect(),
            potentials: r
                .potentials
                .iter()
                .map(|row| row.iter().map(|p| p.map(f)).collect())
                .collect(),
            support: r
                .support
                .0
                .iter()
                .map(|s| s.iter().map(|&e| instance.edges[e].id.clone()).collect())
                .collect(),
            cost: f(r.cost),
            kkt_residual: f(r.kkt_residual),
            gap: f(r.gap),
            iterations: r.iterations,
        }
    }
}

/// Expected costs at a belief, prepared for the solvers.
#[derive(Clone, Debug)]
pub(crate) struct CostModel<T> {
    pub n_vertices: usize,
    pub ends: Vec<(usize, usize)>,
    pub slope: Vec<T>,
    pub offset: Vec<T>,
    /// Per-commodity tie-breaking slope; zero for a single commodity.
    pub tie: T,
    pub allowed: Vec<Vec<bool>>,
    pub sources: Vec<usize>,
    pub targets: Vec<usize>,
    pub demands: Vec<T>,
}

impl<T: Scalar> CostModel<T> {
    pub fn new(instance: &Instance<T>, belief: &Belief<T>, eps_slope: f64) -> Self {
        let eps = T::lit(eps_slope);
        let (_, offset) = instance.expected_params(belief);
        let tie = if instance.n_commodities() > 1 {
            eps
        } else {
            T::zero()
        };
        CostModel {
            n_vertices: instance.n_vertices(),
            ends: instance.edges.iter().map(|e| (e.tail, e.head)).collect(),
            slope: instance.regularized_slopes(belief, eps),
            offset,
            tie,
            allowed: instance.allowed_mask(),
            sources: instance.commodities.iter().map(|c| c.source).collect(),
            targets: instance.commodities.iter().map(|c| c.target).collect(),
            demands: instance.commodities.iter().map(|c| c.demand).collect(),
        }
    }

    pub fn n_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn n_commodities(&self) -> usize {
        self.demands.len()
    }

    pub fn edge_costs(&self, loads: &[T]) -> Vec<T> {
        loads
            .iter()
            .enumerate()
            .map(|(e, &x)| self.slope[e] * x + self.offset[e])
            .collect()
    }

    /// Cost of edge `e` as seen by each commodity.
    pub fn commodity_costs(&self, flow: &Flow<T>) -> Vec<Vec<T>> {
        let base = self.edge_costs(&flow.loads());
        flow.per_commodity
            .iter()
            .map(|xi| {
                base.iter()
                    .zip(xi)
                    .map(|(&c, &x)| c + self.tie * x)
                    .collect()
            })
            .collect()
    }

    pub fn potentials(&self, costs: &[Vec<T>]) -> Vec<Vec<Option<T>>> {
        (0..self.n_commodities())
            .map(|i| {
                graph::dijkstra(
                    self.n_vertices,
                    &self.ends,
                    &costs[i],
                    &self.allowed[i],
                    self.sources[i],
                )
            })
            .collect()
    }

    /// Sum of `x_e * c_e(x_e)` with the model slopes.
    pub fn total_cost(&self, flow: &Flow<T>) -> T {
        let loads = flow.loads();
        self.edge_costs(&loads)
            .iter()
            .zip(&loads)
            .fold(T::zero(), |acc, (&c, &x)| acc + c * x)
    }
}

/// Edges whose reduced cost vanishes, plus edges carrying flow.
pub(crate) fn extract_support<T: Scalar>(
    model: &CostModel<T>,
    flow: &Flow<T>,
    costs: &[Vec<T>],
    potentials: &[Vec<Option<T>>],
    support_eps: f64,
) -> SupportVector {
    let eps = if T::is_exact() {
        T::zero()
    } else {
        T::lit(support_eps)
    };
    let sets = (0..model.n_commodities())
        .map(|i| {
            (0..model.n_edges())
                .filter(|&e| {
                    if !model.allowed[i][e] {
                        return false;
                    }
                    let (u, w) = model.ends[e];
                    if flow.per_commodity[i][e] > T::zero() {
                        return true;
                    }
                    match (potentials[i][u], potentials[i][w]) {
                        (Some(pu), Some(pw)) => {
                            (pw - pu - costs[i][e]).abs() <= eps * (T::one() + pw.abs())
                        }
                        _ => false,
                    }
                })
                .collect()
        })
        .collect();
    SupportVector::new(sets)
}

/// Assembles a result from a final flow: potentials, support, cost, residuals.
pub(crate) fn finalize<T: Scalar>(
    instance: &Instance<T>,
    belief: &Belief<T>,
    model: &CostModel<T>,
    flow: Flow<T>,
    opts: &SolveOptions,
    gap: T,
    iterations: usize,
    refined: bool,
) -> EquilibriumResult<T> {
    let costs = model.commodity_costs(&flow);
    let potentials = model.potentials(&costs);
    let support = extract_support(model, &flow, &costs, &potentials, opts.support_eps);
    let cost = model.total_cost(&flow);
    let kkt = verify_wardrop(instance, belief, &flow, 1e-6);
    EquilibriumResult {
        flow,
        potentials,
        support,
        cost,
        kkt_residual: kkt.max_residual,
        gap,
        iterations,
        refined,
    }
}

/// Beckmann potential `sum_e (a_e x_e^2 / 2 + b_e x_e)` under the belief.
pub fn beckmann_value<T: Scalar>(instance: &Instance<T>, belief: &Belief<T>, flow: &Flow<T>) -> Result<T> {
    let residual = conservation_residual(instance, flow);
    if residual > T::lit(1e-9) {
        return Err(Error::InfeasibleFlow {
            residual: residual.to_f64_lossy(),
        });
    }
    let (a, b) = instance.expected_params(belief);
    let two = T::one() + T::one();
    Ok(flow
        .loads()
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (e, &x)| acc + a[e] * x * x / two + b[e] * x))
}

/// Largest conservation violation, relative to each commodity's demand.
pub fn conservation_residual<T: Scalar>(instance: &Instance<T>, flow: &Flow<T>) -> T {
    let mut worst = T::zero();
    for (i, c) in instance.commodities.iter().enumerate() {
        let mut net = vec![T::zero(); instance.n_vertices()];
        for (e, edge) in instance.edges.iter().enumerate() {
            let x = flow.per_commodity[i][e];
            net[edge.tail] += x;
            net[edge.head] -= x;
        }
        net[c.source] -= c.demand;
        net[c.target] += c.demand;
        let scale = if c.demand > T::zero() { c.demand } else { T::one() };
        for v in net {
            worst = worst.max_of(v.abs() / scale);
        }
        for (e, &x) in flow.per_commodity[i].iter().enumerate() {
            if x != T::zero() && !instance.is_allowed(i, e) {
                worst = worst.max_of(x.abs() / scale);
            }
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KktReport<T> {
    pub conservation: T,
    pub negativity: T,
    /// Largest reduced cost on a flow-carrying edge, relative to `1 + pi_t`.
    pub optimality: T,
    /// `sum_e x_e (c_e - (pi_w - pi_u))` relative to `d_i (1 + pi_t)`.
    pub complementarity: T,
    pub max_residual: T,
    pub pass: bool,
}

/// Checks the optimality conditions of the Beckmann program with the
/// instance's own (unregularized) expected costs.
pub fn verify_wardrop<T: Scalar>(instance: &Instance<T>, belief: &Belief<T>, flow: &Flow<T>, tol: f64) -> KktReport<T> {
    let conservation = conservation_residual(instance, flow);
    let (a, b) = instance.expected_params(belief);
    let loads = flow.loads();
    let costs: Vec<T> = loads
        .iter()
        .enumerate()
        .map(|(e, &x)| a[e] * x + b[e])
        .collect();
    let ends: Vec<(usize, usize)> = instance.edges.iter().map(|e| (e.tail, e.head)).collect();
    let mask = instance.allowed_mask();
    let floor = if T::is_exact() { T::zero() } else { T::lit(1e-9) };
    let mut negativity = T::zero();
    let mut optimality = T::zero();
    let mut complementarity = T::zero();
    for (i, c) in instance.commodities.iter().enumerate() {
        let scale = if c.demand > T::zero() { c.demand } else { T::one() };
        let dist = graph::dijkstra(instance.n_vertices(), &ends, &costs, &mask[i], c.source);
        let Some(pt) = dist[c.target] else {
            optimality = optimality.max_of(T::one());
            continue;
        };
        let denom = T::one() + pt.abs();
        let mut comp = T::zero();
        for (e, &(u, w)) in ends.iter().enumerate() {
            let x = flow.per_commodity[i][e];
            if x < T::zero() {
                negativity = negativity.max_of(-x / scale);
            }
            if x <= T::zero() || !mask[i][e] {
                continue;
            }
            let (Some(du), Some(dw)) = (dist[u], dist[w]) else {
                optimality = optimality.max_of(T::one());
                continue;
            };
            let reduced = (costs[e] - (dw - du)).max_of(T::zero());
            comp += x * reduced;
            if x > floor * scale {
                optimality = optimality.max_of(reduced / denom);
            }
        }
        complementarity = complementarity.max_of(comp / (scale * denom));
    }
    let max_residual = conservation
        .max_of(negativity)
        .max_of(optimality)
        .max_of(complementarity);
    KktReport {
        conservation,
        negativity,
        optimality,
        complementarity,
        max_residual,
        pass: max_residual <= T::lit(tol),
    }
}

/// Routes each commodity's demand on its lexicographically smallest
/// shortest path under the given edge costs.
pub fn all_or_nothing<T: Scalar>(instance: &Instance<T>, edge_costs: &[T]) -> Result<Flow<T>> {
    let costs = vec![edge_costs.to_vec(); instance.n_commodities()];
    let ends: Vec<(usize, usize)> = instance.edges.iter().map(|e| (e.tail, e.head)).collect();
    let demands: Vec<T> = instance.commodities.iter().map(|c| c.demand).collect();
    let st: Vec<(usize, usize)> = instance
        .commodities
        .iter()
        .map(|c| (c.source, c.target))
        .collect();
    aon_per_commodity(instance.n_vertices(), &ends, &instance.allowed_mask(), &st, &demands, &costs)
}

pub(crate) fn aon_per_commodity<T: Scalar>(
    n: usize,
    ends: &[(usize, usize)],
    allowed: &[Vec<bool>],
    terminals: &[(usize, usize)],
    demands: &[T],
    costs: &[Vec<T>],
) -> Result<Flow<T>> {
    let mut flow = Flow::zeros(terminals.len(), ends.len());
    for (i, &(s, t)) in terminals.iter().enumerate() {
        let path = graph::lexicographic_shortest_path(n, ends, &costs[i], &allowed[i], s, t)
            .ok_or(Error::NoPath { commodity: i })?;
        for e in path {
            flow.per_commodity[i][e] += demands[i];
        }
    }
    Ok(flow)
}

/// Fails with `NoPath` for the first commodity whose target is unreachable.
pub(crate) fn check_reachability<T: Scalar>(instance: &Instance<T>) -> Result<()> {
    for (i, c) in instance.commodities.iter().enumerate() {
        if !instance.reachable_from_source(i)[c.target] {
            return Err(Error::NoPath { commodity: i });
        }
    }
    Ok(())
}
