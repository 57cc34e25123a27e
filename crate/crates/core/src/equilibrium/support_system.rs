use super::{CostModel, Flow, SolveOptions};
use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use std::collections::BTreeSet;

/// Equality system of a support: tightness on support edges, conservation,
/// and `pi_{s_i} = 0`. The matrix depends only on slopes, so one factorization
/// serves every offset vector.
#[derive(Clone, Debug)]
pub struct SupportSystem<T> {
    support: SupportVector,
    lu: Lu<T>,
    ends: Vec<(usize, usize)>,
    n_vertices: usize,
    demands: Vec<T>,
    sources: Vec<usize>,
    targets: Vec<usize>,
    /// Unknown index of `x_{e,i}` for each commodity and support edge.
    x_index: Vec<Vec<(usize, usize)>>,
    /// Unknown index of `pi_{v,i}`; `None` for the source and untouched vertices.
    pi_index: Vec<Vec<Option<usize>>>,
    /// Vertices touched by each commodity's support.
    touched: Vec<Vec<bool>>,
    size: usize,
}

impl<T: Scalar> SupportSystem<T> {
    pub(crate) fn build(model: &CostModel<T>, support: &SupportVector) -> Result<Self> {
        let r = model.n_commodities();
        if support.len() != r {
            return Err(Error::SingularSystem(format!(
                "support has {} sets for {r} commodities",
                support.len()
            )));
        }
        let n = model.n_vertices;
        let mut x_index = Vec::with_capacity(r);
        let mut pi_index = Vec::with_capacity(r);
        let mut touched_all = Vec::with_capacity(r);
        let mut size = 0;
        for i in 0..r {
            let set = support.commodity(i);
            for &e in set {
                if e >= model.n_edges() || !model.allowed[i][e] {
                    return Err(Error::SingularSystem(format!(
                        "edge {e} not usable by commodity {i}"
                    )));
                }
            }
            check_connected(model, i, set)?;
            let mut touched = vec![false; n];
            for &e in set {
                let (u, w) = model.ends[e];
                touched[u] = true;
                touched[w] = true;
            }
            let xs: Vec<(usize, usize)> = set
                .iter()
                .map(|&e| {
                    size += 1;
                    (e, size - 1)
                })
                .collect();
            let mut pis = vec![None; n];
            for v in 0..n {
                if touched[v] && v != model.sources[i] {
                    pis[v] = Some(size);
                    size += 1;
                }
            }
            x_index.push(xs);
            pi_index.push(pis);
            touched_all.push(touched);
        }

        let mut a = Matrix::zeros(size, size);
        let mut row = 0;
        for i in 0..r {
            for &(e, _) in &x_index[i] {
                let (u, w) = model.ends[e];
                for j in 0..r {
                    if let Some(&(_, col)) = x_index[j].iter().find(|(f, _)| *f == e) {
                        a.add(row, col, model.slope[e]);
                        if j == i {
                            a.add(row, col, model.tie);
                        }
                    }
                }
                if let Some(c) = pi_index[i][w] {
                    a.add(row, c, -T::one());
                }
                if let Some(c) = pi_index[i][u] {
                    a.add(row, c, T::one());
                }
                row += 1;
            }
            for v in 0..n {
                if !touched_all[i][v] || v == model.targets[i] {
                    continue;
                }
                for &(e, col) in &x_index[i] {
                    let (u, w) = model.ends[e];
                    if u == v {
                        a.add(row, col, T::one());
                    }
                    if w == v {
                        a.add(row, col, -T::one());
                    }
                }
                row += 1;
            }
        }
        debug_assert_eq!(row, size);
        let lu = Lu::factor(&a)?;
        Ok(SupportSystem {
            support: support.clone(),
            lu,
            ends: model.ends.clone(),
            n_vertices: n,
            demands: model.demands.clone(),
            sources: model.sources.clone(),
            targets: model.targets.clone(),
            x_index,
            pi_index,
            touched: touched_all,
            size,
        })
    }

    pub fn support(&self) -> &SupportVector {
        &self.support
    }

    /// Vertices whose potential the system determines, per commodity.
    pub fn touched(&self) -> &[Vec<bool>] {
        &self.touched
    }

    /// Solves for flows and potentials given expected edge offsets.
    pub fn solve(&self, offsets: &[T]) -> (Flow<T>, Vec<Vec<Option<T>>>) {
        let r = self.demands.len();
        let mut rhs = vec![T::zero(); self.size];
        let mut row = 0;
        for i in 0..r {
            for &(e, _) in &self.x_index[i] {
                rhs[row] = -offsets[e];
                row += 1;
            }
            for v in 0..self.n_vertices {
                if !self.touched[i][v] || v == self.targets[i] {
                    continue;
                }
                if v == self.sources[i] {
                    rhs[row] = self.demands[i];
                }
                row += 1;
            }
        }
        let z = self.lu.solve(&rhs);
        let mut flow = Flow::zeros(r, self.ends.len());
        let mut potentials = vec![vec![None; self.n_vertices]; r];
        for i in 0..r {
            for &(e, col) in &self.x_index[i] {
                flow.per_commodity[i][e] = z[col];
            }
            for v in 0..self.n_vertices {
                if v == self.sources[i] {
                    potentials[i][v] = Some(T::zero());
                } else if let Some(col) = self.pi_index[i][v] {
                    potentials[i][v] = Some(z[col]);
                }
            }
        }
        (flow, potentials)
    }
}

fn check_connected<T: Scalar>(model: &CostModel<T>, i: usize, set: &[usize]) -> Result<()> {
    let s = model.sources[i];
    let t = model.targets[i];
    let mut comp = BTreeSet::new();
    comp.insert(s);
    let mut changed = true;
    while changed {
        changed = false;
        for &e in set {
            let (u, w) = model.ends[e];
            if comp.contains(&u) != comp.contains(&w) {
                comp.insert(u);
                comp.insert(w);
                changed = true;
            }
        }
    }
    if !comp.contains(&t) {
        return Err(Error::SingularSystem(format!(
            "support of commodity {i} does not connect source and target"
        )));
    }
    if let Some(&e) = set.iter().find(|&&e| !comp.contains(&model.ends[e].0)) {
        return Err(Error::SingularSystem(format!(
            "support of commodity {i} has edge {e} detached from the source"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport<T> {
    /// `(commodity, edge, flow)` for negative support flows.
    pub negative_flows: Vec<(usize, usize, T)>,
    /// `(commodity, edge, amount)` for edges off the support that are cheaper
    /// than the potential difference they bridge.
    pub cost_violations: Vec<(usize, usize, T)>,
}

impl<T> FeasibilityReport<T> {
    pub fn feasible(&self) -> bool {
        self.negative_flows.is_empty() && self.cost_violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportSolution<T> {
    /// May contain negative entries; they are reported, not clamped.
    pub flow: Flow<T>,
    pub potentials: Vec<Vec<Option<T>>>,
    pub cost: T,
    pub report: FeasibilityReport<T>,
}

/// Solves the equality system of a prescribed support and reports which
/// equilibrium inequalities the solution violates.
pub fn solve_on_support<T: Scalar>(
    instance: &Instance<T>,
    belief: &Belief<T>,
    support: &SupportVector,
    opts: &SolveOptions,
) -> Result<SupportSolution<T>> {
    let model = CostModel::new(instance, belief, opts.eps_slope);
    let system = SupportSystem::build(&model, support)?;
    let (flow, potentials) = system.solve(&model.offset);
    let report = feasibility(&model, support, &flow, &potentials);
    let cost = instance
        .commodities
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, c)| {
            acc + c.demand * potentials[i][c.target].unwrap_or(T::zero())
        });
    Ok(SupportSolution {
        flow,
        potentials,
        cost,
        report,
    })
}

pub(crate) fn feasibility<T: Scalar>(
    model: &CostModel<T>,
    support: &SupportVector,
    flow: &Flow<T>,
    potentials: &[Vec<Option<T>>],
) -> FeasibilityReport<T> {
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-9) };
    let costs = model.commodity_costs(flow);
    let mut negative_flows = Vec::new();
    let mut cost_violations = Vec::new();
    for i in 0..model.n_commodities() {
        let scale = model.demands[i].max_of(T::one());
        for &e in support.commodity(i) {
            let x = flow.per_commodity[i][e];
            if x < -tol * scale {
                negative_flows.push((i, e, x));
            }
        }
        for e in 0..model.n_edges() {
            if !model.allowed[i][e] || support.contains(i, e) {
                continue;
            }
            let (u, w) = model.ends[e];
            if let (Some(pu), Some(pw)) = (potentials[i][u], potentials[i][w]) {
                let gap = pw - pu - costs[i][e];
                if gap > tol * (T::one() + pw.abs()) {
                    cost_violations.push((i, e, gap));
                }
            }
        }
    }
    FeasibilityReport {
        negative_flows,
        cost_violations,
    }
}
