use super::scheme::{SignalingScheme, MASS_EPS};
use crate::equilibrium::{verify_wardrop, Flow, KktReport};
use crate::error::{Error, Result};
use crate::graph;
use crate::lp::{LinearProgram, LpOutcome, SparseRow};
use crate::model::{make_belief, Belief, Instance, SupportVector};
use crate::scalar::Scalar;

/// Residual bound for the per-signal equilibria recovered from the LP.
pub const RECOVERY_TOL: f64 = 1e-5;

/// A signal the optimal scheme actually sends.
#[derive(Clone, Debug)]
pub struct LpSignal<T> {
    /// Index into the candidate list (and column of the scheme).
    pub candidate: usize,
    pub support: SupportVector,
    pub mass: T,
    pub posterior: Belief<T>,
    /// Flows multiplied by the signal mass, as they appear in the LP.
    pub scaled_flow: Flow<T>,
    pub flow: Flow<T>,
    /// Equilibrium cost at the posterior.
    pub cost: T,
    pub kkt: KktReport<T>,
}

#[derive(Clone, Debug)]
pub struct LpScheme<T> {
    /// One column per candidate; unused candidates have zero columns.
    pub scheme: SignalingScheme<T>,
    pub cost: T,
    pub signals: Vec<LpSignal<T>>,
    pub n_vars: usize,
    pub n_rows: usize,
}

impl<T: Scalar> LpScheme<T> {
    /// True when every recovered equilibrium passed verification.
    pub fn verified(&self) -> bool {
        self.signals.iter().all(|s| s.kkt.pass)
    }
}

/// Variable indices of one candidate's block.
struct Block {
    phi: Vec<usize>,
    /// `y[i][e]` for edges in the commodity's candidate support.
    y: Vec<Vec<Option<usize>>>,
    /// `pi[i][v]` for reachable vertices other than the source.
    pi: Vec<Vec<Option<usize>>>,
}

struct Layout {
    blocks: Vec<Block>,
    n_vars: usize,
}

fn layout<T: Scalar>(instance: &Instance<T>, candidates: &[SupportVector], reach: &[Vec<bool>]) -> Layout {
    let d = instance.n_states();
    let m = instance.n_edges();
    let mut next = 0;
    let mut take = || {
        next += 1;
        next - 1
    };
    let mut blocks = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let phi = (0..d).map(|_| take()).collect();
        let y = (0..instance.n_commodities())
            .map(|i| {
                let mut row = vec![None; m];
                for &e in cand.commodity(i) {
                    row[e] = Some(take());
                }
                row
            })
            .collect();
        let pi = instance
            .commodities
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (0..instance.n_vertices())
                    .map(|v| (reach[i][v] && v != c.source).then(&mut take))
                    .collect()
            })
            .collect();
        blocks.push(Block { phi, y, pi });
    }
    Layout { blocks, n_vars: next }
}

fn check_candidates<T: Scalar>(instance: &Instance<T>, candidates: &[SupportVector]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::LpInfeasible("no candidate supports".into()));
    }
    let mask = instance.allowed_mask();
    let ends: Vec<(usize, usize)> = instance.edges.iter().map(|e| (e.tail, e.head)).collect();
    for (k, cand) in candidates.iter().enumerate() {
        if cand.len() != instance.n_commodities() {
            return Err(Error::Malformed(format!(
                "candidate {k} has {} commodity sets for {} commodities",
                cand.len(),
                instance.n_commodities()
            )));
        }
        for (i, c) in instance.commodities.iter().enumerate() {
            let mut inside = vec![false; instance.n_edges()];
            for &e in cand.commodity(i) {
                if e >= instance.n_edges() || !mask[i][e] {
                    return Err(Error::Malformed(format!(
                        "candidate {k} uses edge {e} not permitted to commodity {i}"
                    )));
                }
                inside[e] = true;
            }
            let seen = graph::reach_forward(instance.n_vertices(), &ends, &inside, c.source);
            if !seen[c.target] {
                return Err(Error::LpInfeasible(format!(
                    "candidate {k} ({}) does not connect commodity {i}",
                    cand.label(instance)
                )));
            }
        }
    }
    Ok(())
}

/// Adds the scaled equilibrium system of one candidate block.
fn add_block<T: Scalar>(
    lp: &mut LinearProgram<T>,
    instance: &Instance<T>,
    cand: &SupportVector,
    block: &Block,
    slopes: &[T],
    reach: &[Vec<bool>],
) {
    let mask = instance.allowed_mask();
    for (i, c) in instance.commodities.iter().enumerate() {
        // cost rows: pi_w - pi_u - a_e * sum_i' y_{e,i'} - sum_k b_e^k phi_k  (= or <=) 0
        for (e, edge) in instance.edges.iter().enumerate() {
            if !mask[i][e] || !reach[i][edge.tail] {
                continue;
            }
            let mut row: SparseRow<T> = Vec::new();
            if let Some(j) = block.pi[i][edge.head] {
                row.push((j, T::one()));
            }
            if let Some(j) = block.pi[i][edge.tail] {
                row.push((j, -T::one()));
            }
            for yi in &block.y {
                if let Some(j) = yi[e] {
                    row.push((j, -slopes[e]));
                }
            }
            for (k, &j) in block.phi.iter().enumerate() {
                row.push((j, -edge.offset[k]));
            }
            if cand.contains(i, e) {
                lp.add_eq(row, T::zero());
            } else {
                lp.add_le(row, T::zero());
            }
        }
        // conservation: net outflow equals d_i * (signal mass) at the source
        let mut rows: Vec<SparseRow<T>> = vec![Vec::new(); instance.n_vertices()];
        let mut touched = vec![false; instance.n_vertices()];
        touched[c.source] = true;
        for &e in cand.commodity(i) {
            let edge = &instance.edges[e];
            let j = block.y[i][e].expect("support edge has a flow variable");
            rows[edge.tail].push((j, T::one()));
            rows[edge.head].push((j, -T::one()));
            touched[edge.tail] = true;
            touched[edge.head] = true;
        }
        for &j in &block.phi {
            rows[c.source].push((j, -c.demand));
        }
        for (v, row) in rows.into_iter().enumerate() {
            if touched[v] && v != c.target {
                lp.add_eq(row, T::zero());
            }
        }
    }
}

fn reachability<T: Scalar>(instance: &Instance<T>) -> Result<Vec<Vec<bool>>> {
    let reach: Vec<Vec<bool>> = (0..instance.n_commodities())
        .map(|i| instance.reachable_from_source(i))
        .collect();
    for (i, c) in instance.commodities.iter().enumerate() {
        if !reach[i][c.target] {
            return Err(Error::NoPath { commodity: i });
        }
    }
    Ok(reach)
}

/// Optimal public signaling scheme among schemes whose every signal induces
/// an equilibrium supported on one of `candidates`.
///
/// Each candidate gets one signal with its own copy of the equilibrium
/// system, scaled by the signal's probability. A candidate that is never
/// useful receives an all-zero block, so the single program covers every
/// subset of candidates.
pub fn optimal_scheme_lp<T: Scalar>(
    instance: &Instance<T>,
    candidates: &[SupportVector],
) -> Result<LpScheme<T>> {
    if !instance.offsets_only() {
        return Err(Error::RequiresOffsetsOnly);
    }
    let reach = reachability(instance)?;
    check_candidates(instance, candidates)?;
    let d = instance.n_states();
    let prior = &instance.states.prior;
    let slopes = instance.expected_params(&Belief::point_mass(d, 0)).0;
    let lay = layout(instance, candidates, &reach);

    let mut lp = LinearProgram::new(lay.n_vars);
    for (cand, block) in candidates.iter().zip(&lay.blocks) {
        for p in block.pi.iter().flatten().flatten() {
            lp.set_free(*p);
        }
        add_block(&mut lp, instance, cand, block, &slopes, &reach);
        for (i, c) in instance.commodities.iter().enumerate() {
            if let Some(j) = block.pi[i][c.target] {
                lp.set_objective(j, c.demand);
            }
        }
    }
    for (k, &p) in prior.iter().enumerate() {
        let row = lay.blocks.iter().map(|b| (b.phi[k], T::one())).collect();
        lp.add_eq(row, p);
    }

    let x = match lp.solve() {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Err(Error::LpInfeasible(diagnose(instance, candidates, &reach, &slopes))),
        LpOutcome::Unbounded => {
            return Err(Error::LpUnbounded("signaling program has unbounded potentials".into()))
        }
    };
    recover(instance, candidates, &lay, &x, lp.n_rows())
}

fn recover<T: Scalar>(
    instance: &Instance<T>,
    candidates: &[SupportVector],
    lay: &Layout,
    x: &[T],
    n_rows: usize,
) -> Result<LpScheme<T>> {
    let m = instance.n_edges();
    let columns: Vec<Vec<T>> = lay
        .blocks
        .iter()
        .map(|b| b.phi.iter().map(|&j| x[j].max_of(T::zero())).collect())
        .collect();
    let scheme = SignalingScheme::from_columns(&columns);
    let mut signals = Vec::new();
    let mut total = T::zero();
    for (k, (cand, block)) in candidates.iter().zip(&lay.blocks).enumerate() {
        let mass = columns[k].iter().fold(T::zero(), |a, &b| a + b);
        let mut scaled = Flow::zeros(instance.n_commodities(), m);
        let mut scaled_cost = T::zero();
        for (i, c) in instance.commodities.iter().enumerate() {
            for e in 0..m {
                if let Some(j) = block.y[i][e] {
                    scaled.per_commodity[i][e] = x[j].max_of(T::zero());
                }
            }
            if let Some(j) = block.pi[i][c.target] {
                scaled_cost += c.demand * x[j];
            }
        }
        total += scaled_cost;
        if mass <= T::lit(MASS_EPS) {
            continue;
        }
        let w: Vec<T> = columns[k].iter().map(|&v| v / mass).collect();
        let posterior = make_belief(&w)?;
        let flow = Flow {
            per_commodity: scaled
                .per_commodity
                .iter()
                .map(|r| r.iter().map(|&v| v / mass).collect())
                .collect(),
        };
        let kkt = verify_wardrop(instance, &posterior, &flow, RECOVERY_TOL);
        signals.push(LpSignal {
            candidate: k,
            support: cand.clone(),
            mass,
            posterior,
            scaled_flow: scaled,
            flow,
            cost: scaled_cost / mass,
            kkt,
        });
    }
    Ok(LpScheme {
        scheme,
        cost: total,
        signals,
        n_vars: x.len(),
        n_rows,
    })
}

/// Names the candidates whose equilibrium system has no solution at any belief.
fn diagnose<T: Scalar>(
    instance: &Instance<T>,
    candidates: &[SupportVector],
    reach: &[Vec<bool>],
    slopes: &[T],
) -> String {
    let mut dead = Vec::new();
    for (k, cand) in candidates.iter().enumerate() {
        let lay = layout(instance, std::slice::from_ref(cand), reach);
        let mut lp = LinearProgram::new(lay.n_vars);
        let block = &lay.blocks[0];
        for p in block.pi.iter().flatten().flatten() {
            lp.set_free(*p);
        }
        add_block(&mut lp, instance, cand, block, slopes, reach);
        lp.add_eq(block.phi.iter().map(|&j| (j, T::one())).collect(), T::one());
        if !lp.solve().is_optimal() {
            dead.push(format!("{k} ({})", cand.label(instance)));
        }
    }
    if dead.is_empty() {
        "candidate supports do not cover the prior".into()
    } else {
        format!("candidates realized at no belief: {}", dead.join(", "))
    }
}
