use crate::equilibrium::{CostModel, Flow, SolveOptions, SupportSystem};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome, SparseRow};
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use serde::Serialize;
use std::collections::BTreeMap;

/// Interval of beliefs `alpha = mu(theta_1)` on which the equilibrium has a
/// given support, together with the affine flow and cost on it.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportRegion<T> {
    pub support: SupportVector,
    pub alpha_lo: T,
    pub alpha_hi: T,
    /// Per-commodity flows of the affine extension at `alpha = 0` and `alpha = 1`.
    pub flow_ends: [Flow<T>; 2],
    /// `sum_i d_i pi_{t_i}` at `alpha = 0` and `alpha = 1`.
    pub cost_ends: [T; 2],
}

impl<T: Scalar> SupportRegion<T> {
    pub fn cost(&self, alpha: T) -> T {
        self.cost_ends[0] + alpha * (self.cost_ends[1] - self.cost_ends[0])
    }

    pub fn flow(&self, alpha: T) -> Flow<T> {
        let [f0, f1] = &self.flow_ends;
        Flow {
            per_commodity: f0
                .per_commodity
                .iter()
                .zip(&f1.per_commodity)
                .map(|(a, b)| a.iter().zip(b).map(|(&x0, &x1)| x0 + alpha * (x1 - x0)).collect())
                .collect(),
        }
    }

    pub fn loads(&self, alpha: T) -> Vec<T> {
        self.flow(alpha).loads()
    }

    pub fn cost_lo(&self) -> T {
        self.cost(self.alpha_lo)
    }

    pub fn cost_hi(&self) -> T {
        self.cost(self.alpha_hi)
    }

    pub fn midpoint(&self) -> T {
        (self.alpha_lo + self.alpha_hi) / T::lit(2.0)
    }

    pub fn length(&self) -> T {
        self.alpha_hi - self.alpha_lo
    }

    pub fn contains(&self, alpha: T, tol: T) -> bool {
        alpha >= self.alpha_lo - tol && alpha <= self.alpha_hi + tol
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionView {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub cost_lo: f64,
    pub cost_hi: f64,
    pub support: Vec<Vec<String>>,
}

impl RegionView {
    pub fn new<T: Scalar>(instance: &Instance<T>, r: &SupportRegion<T>) -> Self {
        RegionView {
            alpha_lo: r.alpha_lo.to_f64_lossy(),
            alpha_hi: r.alpha_hi.to_f64_lossy(),
            cost_lo: r.cost_lo().to_f64_lossy(),
            cost_hi: r.cost_hi().to_f64_lossy(),
            support: r
                .support
                .0
                .iter()
                .map(|s| s.iter().map(|&e| instance.edges[e].id.clone()).collect())
                .collect(),
        }
    }
}

/// Flows and potentials of a support's equality system at each point-mass
/// belief. For offsets-only games they are affine in the belief, so these
/// values determine the system at every belief.
struct PointMassPieces<T> {
    flows: Vec<Flow<T>>,
    potentials: Vec<Vec<Vec<Option<T>>>>,
    costs: Vec<Vec<Vec<T>>>,
}

fn point_mass_pieces<T: Scalar>(
    instance: &Instance<T>,
    support: &SupportVector,
    opts: &SolveOptions,
) -> Result<Option<PointMassPieces<T>>> {
    let d = instance.n_states();
    let models: Vec<CostModel<T>> = (0..d)
        .map(|k| CostModel::new(instance, &Belief::point_mass(d, k), opts.eps_slope))
        .collect();
    let system = match SupportSystem::build(&models[0], support) {
        Ok(s) => s,
        Err(Error::SingularSystem(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut pieces = PointMassPieces {
        flows: Vec::with_capacity(d),
        potentials: Vec::with_capacity(d),
        costs: Vec::with_capacity(d),
    };
    for m in &models {
        let (flow, pi) = system.solve(&m.offset);
        pieces.costs.push(m.commodity_costs(&flow));
        pieces.flows.push(flow);
        pieces.potentials.push(pi);
    }
    Ok(Some(pieces))
}

fn check_offsets_only<T: Scalar>(instance: &Instance<T>) -> Result<()> {
    if instance.offsets_only() {
        Ok(())
    } else {
        Err(Error::RequiresOffsetsOnly)
    }
}

#[derive(Clone, Copy)]
enum Sense {
    Le,
    Ge,
}

/// Adds `sum_k p_k mu_k + sum free <= 0` (or `>= 0`) after eliminating the
/// last belief weight. Per-state coefficients of similar size often differ
/// only slightly, so the differences are formed first, cancellation noise is
/// dropped and the row is scaled to unit magnitude.
fn push_row<T: Scalar>(
    lp: &mut LinearProgram<T>,
    p: &[T],
    free: &BTreeMap<usize, T>,
    sense: Sense,
    infeasible: &mut bool,
) {
    let d = p.len();
    let last = p[d - 1];
    let mag = p.iter().fold(T::one(), |m, v| m.max_of(v.abs()));
    let noise = if T::is_exact() { T::zero() } else { T::lit(1e-12) * mag };
    let mut row: SparseRow<T> = (0..d - 1)
        .map(|k| (k, p[k] - last))
        .filter(|(_, q)| q.abs() > noise)
        .collect();
    row.extend(free.iter().filter(|(_, c)| !c.is_zero()).map(|(&j, &c)| (j, c)));
    let rhs = -last;
    if row.is_empty() {
        let slack = if T::is_exact() { T::zero() } else { T::lit(1e-9) * mag };
        let ok = match sense {
            Sense::Le => rhs >= -slack,
            Sense::Ge => rhs <= slack,
        };
        *infeasible |= !ok;
        return;
    }
    let scale = row.iter().fold(T::zero(), |m, (_, c)| m.max_of(c.abs()));
    let row: SparseRow<T> = row.into_iter().map(|(j, c)| (j, c / scale)).collect();
    match sense {
        Sense::Le => lp.add_le(row, rhs / scale),
        Sense::Ge => lp.add_ge(row, rhs / scale),
    }
}

/// Feasibility system of a support over the belief simplex. Variables are
/// the first `d - 1` belief weights (the last is one minus their sum)
/// followed by free potentials for reachable vertices the support does not
/// touch. Returns `None` when a constant row is already violated.
fn polytope_lp<T: Scalar>(
    instance: &Instance<T>,
    support: &SupportVector,
    p: &PointMassPieces<T>,
) -> Option<LinearProgram<T>> {
    let d = instance.n_states();
    let base = d - 1;
    let mut free: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut reach = Vec::with_capacity(instance.n_commodities());
    for i in 0..instance.n_commodities() {
        let rc = instance.reachable_from_source(i);
        for v in 0..instance.n_vertices() {
            if rc[v] && p.potentials[0][i][v].is_none() {
                let next = base + free.len();
                free.insert((i, v), next);
            }
        }
        reach.push(rc);
    }
    let mut lp = LinearProgram::new(base + free.len());
    for &j in free.values() {
        lp.set_free(j);
    }
    if base > 0 {
        lp.add_le((0..base).map(|k| (k, T::one())).collect(), T::one());
    }
    let mut infeasible = false;
    let allowed = instance.allowed_mask();
    for i in 0..instance.n_commodities() {
        for &e in support.commodity(i) {
            let row: Vec<T> = (0..d).map(|k| p.flows[k].per_commodity[i][e]).collect();
            push_row(&mut lp, &row, &BTreeMap::new(), Sense::Ge, &mut infeasible);
        }
        for (e, edge) in instance.edges.iter().enumerate() {
            let (u, w) = (edge.tail, edge.head);
            if !allowed[i][e] || support.contains(i, e) || !reach[i][u] || !reach[i][w] || u == w {
                continue;
            }
            let mut mu: Vec<T> = (0..d).map(|k| -p.costs[k][i][e]).collect();
            let mut fr = BTreeMap::new();
            for (v, sign) in [(w, T::one()), (u, -T::one())] {
                if let Some(&j) = free.get(&(i, v)) {
                    *fr.entry(j).or_insert(T::zero()) += sign;
                } else {
                    for (k, m) in mu.iter_mut().enumerate() {
                        *m += sign * p.potentials[k][i][v].unwrap_or(T::zero());
                    }
                }
            }
            push_row(&mut lp, &mu, &fr, Sense::Le, &mut infeasible);
        }
    }
    (!infeasible).then_some(lp)
}

fn optimize<T: Scalar>(lp: &mut LinearProgram<T>, objective: &[(usize, T)]) -> Option<T> {
    lp.clear_objective();
    for &(j, c) in objective {
        lp.set_objective(j, c);
    }
    match lp.solve() {
        LpOutcome::Optimal { objective, .. } => Some(objective),
        _ => None,
    }
}

/// `(min mu_k, max mu_k, lps used)` over the polytope.
fn coordinate_range<T: Scalar>(lp: &mut LinearProgram<T>, d: usize, k: usize) -> (Option<(T, T)>, usize) {
    let base = d - 1;
    if base == 0 {
        return (Some((T::one(), T::one())), 0);
    }
    if k < base {
        let Some(lo) = optimize(lp, &[(k, T::one())]) else {
            return (None, 1);
        };
        let Some(neg_hi) = optimize(lp, &[(k, -T::one())]) else {
            return (None, 2);
        };
        (Some((lo, -neg_hi)), 2)
    } else {
        // mu_{d-1} = 1 - sum of the others
        let all: Vec<(usize, T)> = (0..base).map(|j| (j, T::one())).collect();
        let neg: Vec<(usize, T)> = (0..base).map(|j| (j, -T::one())).collect();
        let Some(neg_max_sum) = optimize(lp, &neg) else {
            return (None, 1);
        };
        let Some(min_sum) = optimize(lp, &all) else {
            return (None, 2);
        };
        (Some((T::one() + neg_max_sum, T::one() - min_sum)), 2)
    }
}

fn clamp01<T: Scalar>(v: T) -> T {
    v.max_of(T::zero()).min_of(T::one())
}

/// Region and the number of LPs solved to find it.
pub(crate) fn support_region_counted<T: Scalar>(
    instance: &Instance<T>,
    support: &SupportVector,
    opts: &SolveOptions,
) -> Result<(Option<SupportRegion<T>>, usize)> {
    if instance.n_states() != 2 {
        return Err(Error::RequiresTwoStates);
    }
    check_offsets_only(instance)?;
    let Some(pieces) = point_mass_pieces(instance, support, opts)? else {
        return Ok((None, 0));
    };
    let Some(mut lp) = polytope_lp(instance, support, &pieces) else {
        return Ok((None, 0));
    };
    let (range, lps) = coordinate_range(&mut lp, 2, 0);
    let Some((lo, hi)) = range else {
        return Ok((None, lps));
    };
    let (lo, hi) = (clamp01(lo), clamp01(hi));
    if lo > hi {
        return Ok((None, lps));
    }
    let cost_of = |k: usize| {
        instance
            .commodities
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, c)| {
                acc + c.demand * pieces.potentials[k][i][c.target].unwrap_or(T::zero())
            })
    };
    // state 0 is theta_1, i.e. alpha = 1
    let region = SupportRegion {
        support: support.clone(),
        alpha_lo: lo,
        alpha_hi: hi,
        flow_ends: [pieces.flows[1].clone(), pieces.flows[0].clone()],
        cost_ends: [cost_of(1), cost_of(0)],
    };
    Ok((Some(region), lps))
}

/// Closed interval of `alpha = mu(theta_1)` whose equilibrium has exactly
/// the given support (up to boundary ties), or `None` when no belief does.
pub fn support_region<T: Scalar>(
    instance: &Instance<T>,
    support: &SupportVector,
    opts: &SolveOptions,
) -> Result<Option<SupportRegion<T>>> {
    support_region_counted(instance, support, opts).map(|(r, _)| r)
}

/// Coordinate-wise extremes `(min mu_k, max mu_k)` of the support's belief
/// polytope for any number of states, or `None` when it is empty.
pub fn support_polytope<T: Scalar>(
    instance: &Instance<T>,
    support: &SupportVector,
    opts: &SolveOptions,
) -> Result<Option<Vec<(T, T)>>> {
    check_offsets_only(instance)?;
    let Some(pieces) = point_mass_pieces(instance, support, opts)? else {
        return Ok(None);
    };
    let Some(mut lp) = polytope_lp(instance, support, &pieces) else {
        return Ok(None);
    };
    let d = instance.n_states();
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let (Some((lo, hi)), _) = coordinate_range(&mut lp, d, k) else {
            return Ok(None);
        };
        out.push((clamp01(lo), clamp01(hi)));
    }
    Ok(Some(out))
}
