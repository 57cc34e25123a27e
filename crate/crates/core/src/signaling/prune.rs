use super::scheme::{SignalingScheme, MASS_EPS};
use crate::equilibrium::{solve_wardrop, SolveOptions};
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::model::{Instance, SupportVector};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PrunedScheme<T> {
    pub scheme: SignalingScheme<T>,
    /// Support attached to each remaining signal.
    pub supports: Vec<SupportVector>,
    /// Equilibrium cost at each remaining signal's posterior.
    pub costs: Vec<T>,
    pub total: T,
}

/// Drops unsent signals, merges signals whose supports are nested for every
/// commodity, and finally keeps at most one signal per state.
///
/// A nested merge is kept only if the merged posterior's equilibrium cost
/// reproduces the two signals' combined cost within 1e-9 (relative); the
/// final reduction picks a basic optimal mixture of the remaining
/// posteriors, which never increases the cost.
pub fn prune_scheme<T: Scalar>(
    instance: &Instance<T>,
    scheme: &SignalingScheme<T>,
    supports: &[SupportVector],
    opts: &SolveOptions,
) -> Result<PrunedScheme<T>> {
    if supports.len() != scheme.n_signals() {
        return Err(Error::Malformed(format!(
            "{} supports for {} signals",
            supports.len(),
            scheme.n_signals()
        )));
    }
    let issued = scheme.issued();
    let mut columns: Vec<Vec<T>> = issued.iter().map(|&s| scheme.column(s)).collect();
    let mut sup: Vec<SupportVector> = issued.iter().map(|&s| supports[s].clone()).collect();
    let mut costs = columns
        .iter()
        .map(|c| column_cost(instance, c, opts))
        .collect::<Result<Vec<T>>>()?;

    'outer: loop {
        for a in 0..columns.len() {
            for b in 0..columns.len() {
                if a == b || !sup[a].is_nested_in(&sup[b]) {
                    continue;
                }
                let merged: Vec<T> = columns[a].iter().zip(&columns[b]).map(|(&x, &y)| x + y).collect();
                let before = mass(&columns[a]) * costs[a] + mass(&columns[b]) * costs[b];
                let cost = column_cost(instance, &merged, opts)?;
                let after = mass(&merged) * cost;
                if (after - before).abs() <= T::lit(1e-9) * (T::one() + before.abs()) {
                    columns[b] = merged;
                    costs[b] = cost;
                    columns.remove(a);
                    costs.remove(a);
                    sup.remove(a);
                    continue 'outer;
                }
            }
        }
        break;
    }

    let d = instance.n_states();
    if columns.len() > d {
        let keep = basic_mixture(&columns, &costs, &instance.states.prior)?;
        columns = keep.iter().map(|(k, w)| columns[*k].iter().map(|&v| v / mass(&columns[*k]) * *w).collect()).collect();
        sup = keep.iter().map(|(k, _)| sup[*k].clone()).collect();
        costs = keep.iter().map(|(k, _)| costs[*k]).collect();
    }

    let total = columns
        .iter()
        .zip(&costs)
        .fold(T::zero(), |acc, (c, &v)| acc + mass(c) * v);
    Ok(PrunedScheme {
        scheme: SignalingScheme::from_columns(&columns),
        supports: sup,
        costs,
        total,
    })
}

fn mass<T: Scalar>(column: &[T]) -> T {
    column.iter().fold(T::zero(), |a, &b| a + b)
}

fn column_cost<T: Scalar>(instance: &Instance<T>, column: &[T], opts: &SolveOptions) -> Result<T> {
    let m = mass(column);
    let w: Vec<T> = column.iter().map(|&v| v / m).collect();
    let posterior = crate::model::make_belief(&w)?;
    Ok(solve_wardrop(instance, &posterior, opts)?.cost)
}

/// Weights on posteriors reproducing the prior at least cost, with at most
/// one positive weight per state (a vertex of the feasible set).
fn basic_mixture<T: Scalar>(columns: &[Vec<T>], costs: &[T], prior: &[T]) -> Result<Vec<(usize, T)>> {
    let mut lp = LinearProgram::new(columns.len());
    for (k, &c) in costs.iter().enumerate() {
        lp.set_objective(k, c);
    }
    for (theta, &p) in prior.iter().enumerate() {
        let row = columns
            .iter()
            .enumerate()
            .map(|(k, col)| (k, col[theta] / mass(col)))
            .collect();
        lp.add_eq(row, p);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Ok(x
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > T::lit(MASS_EPS))
            .collect()),
        _ => Err(Error::LpInfeasible("posteriors do not reproduce the prior".into())),
    }
}
