use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::model::{Instance, SupportVector};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Ranking of the links by expected offset, valid for `alpha` in
/// `[alpha_lo, alpha_hi]`. Links with identical offset lines are adjacent,
/// lower index first.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetOrdering<T> {
    pub alpha_lo: T,
    pub alpha_hi: T,
    pub order: Vec<usize>,
}

fn parallel_terminals<T: Scalar>(instance: &Instance<T>) -> Result<(usize, usize)> {
    let pair = instance.parallel_pair().ok_or(Error::NotParallelLinks)?;
    if instance
        .commodities
        .iter()
        .any(|c| (c.source, c.target) != pair)
    {
        return Err(Error::NotParallelLinks);
    }
    Ok(pair)
}

fn offset_at<T: Scalar>(instance: &Instance<T>, e: usize, mu: &[T]) -> T {
    instance.edges[e]
        .offset
        .iter()
        .zip(mu)
        .fold(T::zero(), |acc, (&b, &m)| acc + b * m)
}

fn order_at<T: Scalar>(instance: &Instance<T>, mu: &[T]) -> Vec<usize> {
    let b: Vec<T> = (0..instance.n_edges()).map(|e| offset_at(instance, e, mu)).collect();
    let mut order: Vec<usize> = (0..instance.n_edges()).collect();
    order.sort_by(|&e, &f| {
        b[e].partial_cmp(&b[f])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(e.cmp(&f))
    });
    order
}

fn same_offsets<T: Scalar>(instance: &Instance<T>, e: usize, f: usize) -> bool {
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-12) };
    instance.edges[e]
        .offset
        .iter()
        .zip(&instance.edges[f].offset)
        .all(|(&x, &y)| (x - y).abs() <= tol * (T::one() + x.abs()))
}

/// Splits `[0, 1]` at the pairwise intersections of the offset lines and
/// reads one ordering per piece.
pub fn offset_orderings_two_state<T: Scalar>(instance: &Instance<T>) -> Result<Vec<OffsetOrdering<T>>> {
    parallel_terminals(instance)?;
    if instance.n_states() != 2 {
        return Err(Error::RequiresTwoStates);
    }
    let m = instance.n_edges();
    let eps = if T::is_exact() { T::zero() } else { T::lit(1e-12) };
    let mut cuts = vec![T::zero(), T::one()];
    for e in 0..m {
        for f in e + 1..m {
            let (be, bf) = (&instance.edges[e].offset, &instance.edges[f].offset);
            // b_e(alpha) = b_e^2 + alpha (b_e^1 - b_e^2)
            let denom = (be[0] - be[1]) - (bf[0] - bf[1]);
            if denom.abs() <= eps {
                continue;
            }
            let alpha = (bf[1] - be[1]) / denom;
            if alpha > eps && alpha < T::one() - eps {
                cuts.push(alpha);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= eps);
    Ok(cuts
        .windows(2)
        .map(|w| {
            let mid = (w[0] + w[1]) / T::lit(2.0);
            OffsetOrdering {
                alpha_lo: w[0],
                alpha_hi: w[1],
                order: order_at(instance, &[mid, T::one() - mid]),
            }
        })
        .collect())
}

/// Superset of the equilibrium supports over all beliefs for single-pair
/// parallel links with any number of populations and states.
///
/// Within one offset ordering, the links a population may use split into
/// classes by the set of populations allowed on them. Used links of a class
/// form a cheapest-offset prefix, and each population's support is the union
/// of the prefixes of the classes whose cost level it attains.
pub fn enumerate_supports_parallel<T: Scalar>(instance: &Instance<T>) -> Result<Vec<SupportVector>> {
    parallel_terminals(instance)?;
    let orderings = match instance.n_states() {
        1 => vec![order_at(instance, &[T::one()])],
        2 => offset_orderings_two_state(instance)?
            .into_iter()
            .map(|o| o.order)
            .collect(),
        _ => cell_orderings(instance)?,
    };
    let allowed = instance.allowed_mask();
    let r = instance.n_commodities();
    let mut out = BTreeSet::new();
    for order in &orderings {
        candidates_for_ordering(order, &allowed, r, &mut out);
    }
    Ok(out.into_iter().collect())
}

fn candidates_for_ordering(order: &[usize], allowed: &[Vec<bool>], r: usize, out: &mut BTreeSet<SupportVector>) {
    let mut classes: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &e in order {
        let mask = (0..r).fold(0u64, |m, i| if allowed[i][e] { m | (1 << i) } else { m });
        if mask != 0 {
            classes.entry(mask).or_default().push(e);
        }
    }
    let classes: Vec<(u64, Vec<usize>)> = classes.into_iter().collect();
    let mut lengths = vec![0usize; classes.len()];
    loop {
        emit_choices(&classes, &lengths, r, out);
        // odometer over prefix lengths
        let mut k = 0;
        loop {
            if k == classes.len() {
                return;
            }
            if lengths[k] < classes[k].1.len() {
                lengths[k] += 1;
                break;
            }
            lengths[k] = 0;
            k += 1;
        }
    }
}

fn emit_choices(classes: &[(u64, Vec<usize>)], lengths: &[usize], r: usize, out: &mut BTreeSet<SupportVector>) {
    let live: Vec<usize> = (0..classes.len()).filter(|&k| lengths[k] > 0).collect();
    let per_pop: Vec<Vec<usize>> = (0..r)
        .map(|i| {
            live.iter()
                .copied()
                .filter(|&k| classes[k].0 & (1 << i) != 0)
                .collect()
        })
        .collect();
    if per_pop.iter().any(Vec::is_empty) {
        return;
    }
    let live_mask: u64 = live.iter().fold(0, |m, &k| m | (1 << k));
    let mut pick = vec![1u64; r];
    loop {
        let mut covered = 0u64;
        let mut sets = Vec::with_capacity(r);
        for i in 0..r {
            let mut set = Vec::new();
            for (bit, &k) in per_pop[i].iter().enumerate() {
                if pick[i] & (1 << bit) != 0 {
                    covered |= 1 << k;
                    set.extend_from_slice(&classes[k].1[..lengths[k]]);
                }
            }
            sets.push(set);
        }
        if covered == live_mask {
            out.insert(SupportVector::new(sets));
        }
        let mut i = 0;
        loop {
            if i == r {
                return;
            }
            if pick[i] + 1 < (1u64 << per_pop[i].len()) {
                pick[i] += 1;
                break;
            }
            pick[i] = 1;
            i += 1;
        }
    }
}

/// Offset orderings of all full-dimensional cells of the arrangement of
/// pairwise-tie hyperplanes in the simplex, found by depth-first search over
/// flips of neighbouring links.
fn cell_orderings<T: Scalar>(instance: &Instance<T>) -> Result<Vec<Vec<usize>>> {
    let groups = glue_identical(instance);
    check_non_degenerate(instance, &groups)?;
    let d = instance.n_states();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start = None;
    for _ in 0..64 {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mu: Vec<T> = raw.iter().map(|v| T::lit(v / sum)).collect();
        let order = group_order_at(instance, &groups, &mu);
        if max_slack(instance, &groups, &order).is_some_and(|s| s > T::lit(1e-9)) {
            start = Some(order);
            break;
        }
    }
    let start = start.ok_or_else(|| Error::Enumeration("no full-dimensional cell found".into()))?;
    let mut seen = BTreeSet::new();
    let mut stack = vec![start.clone()];
    seen.insert(start);
    let mut cells = Vec::new();
    while let Some(order) = stack.pop() {
        for k in 0..order.len().saturating_sub(1) {
            let mut next = order.clone();
            next.swap(k, k + 1);
            if seen.contains(&next) {
                continue;
            }
            if max_slack(instance, &groups, &next).is_some_and(|s| s > T::lit(1e-9)) {
                seen.insert(next.clone());
                stack.push(next);
            }
        }
        cells.push(order);
    }
    Ok(cells
        .into_iter()
        .map(|order| order.iter().flat_map(|&g| groups[g].iter().copied()).collect())
        .collect())
}

/// Links grouped by identical offset vectors, each group sorted by index.
fn glue_identical<T: Scalar>(instance: &Instance<T>) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for e in 0..instance.n_edges() {
        match groups.iter_mut().find(|g| same_offsets(instance, g[0], e)) {
            Some(g) => g.push(e),
            None => groups.push(vec![e]),
        }
    }
    groups
}

fn group_order_at<T: Scalar>(instance: &Instance<T>, groups: &[Vec<usize>], mu: &[T]) -> Vec<usize> {
    let b: Vec<T> = groups.iter().map(|g| offset_at(instance, g[0], mu)).collect();
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by(|&x, &y| b[x].partial_cmp(&b[y]).unwrap_or(std::cmp::Ordering::Equal).then(x.cmp(&y)));
    order
}

fn diff<T: Scalar>(instance: &Instance<T>, e: usize, f: usize) -> Vec<T> {
    instance.edges[e]
        .offset
        .iter()
        .zip(&instance.edges[f].offset)
        .map(|(&x, &y)| x - y)
        .collect()
}

/// Largest `s <= 1` with consecutive group offsets increasing by at least `s`
/// at some belief; `None` if the LP fails.
fn max_slack<T: Scalar>(instance: &Instance<T>, groups: &[Vec<usize>], order: &[usize]) -> Option<T> {
    let d = instance.n_states();
    let mut lp = LinearProgram::new(d + 1);
    lp.set_bounds(d, None, Some(T::one()));
    lp.add_eq((0..d).map(|k| (k, T::one())).collect(), T::one());
    for w in order.windows(2) {
        let g = diff(instance, groups[w[1]][0], groups[w[0]][0]);
        let mut row: Vec<(usize, T)> = g.into_iter().enumerate().collect();
        row.push((d, -T::one()));
        lp.add_ge(row, T::zero());
    }
    lp.set_objective(d, -T::one());
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(x[d]),
        _ => None,
    }
}

/// Some belief satisfies all the rows `g · mu = 0`.
fn ties_feasible<T: Scalar>(d: usize, rows: &[Vec<T>]) -> bool {
    let mut lp = LinearProgram::new(d);
    lp.add_eq((0..d).map(|k| (k, T::one())).collect(), T::one());
    for g in rows {
        lp.add_eq(g.iter().copied().enumerate().collect(), T::zero());
    }
    matches!(lp.solve(), LpOutcome::Optimal { .. })
}

fn parallel_vectors<T: Scalar>(a: &[T], b: &[T]) -> bool {
    let scale = a.iter().chain(b).fold(T::one(), |m, v| m.max_of(v.abs()));
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-12) * scale * scale };
    (0..a.len()).all(|i| (i + 1..a.len()).all(|j| (a[i] * b[j] - a[j] * b[i]).abs() <= tol))
}

/// Rejects arrangements in which a single flip of neighbouring links does
/// not describe every crossing between adjacent cells: three distinct offset
/// functions tying at one belief, or two pairs tying on the same hyperplane.
fn check_non_degenerate<T: Scalar>(instance: &Instance<T>, groups: &[Vec<usize>]) -> Result<()> {
    let d = instance.n_states();
    let reps: Vec<usize> = groups.iter().map(|g| g[0]).collect();
    let name = |e: usize| instance.edges[e].id.clone();
    for (x, &e) in reps.iter().enumerate() {
        for (y, &f) in reps.iter().enumerate().skip(x + 1) {
            for &g in reps.iter().skip(y + 1) {
                if ties_feasible(d, &[diff(instance, e, f), diff(instance, e, g)]) {
                    return Err(Error::DegenerateInstance(format!(
                        "offsets of {}, {} and {} coincide at some belief",
                        name(e),
                        name(f),
                        name(g)
                    )));
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..reps.len())
        .flat_map(|x| (x + 1..reps.len()).map(move |y| (x, y)))
        .collect();
    for (p, &(a, b)) in pairs.iter().enumerate() {
        let g1 = diff(instance, reps[a], reps[b]);
        for &(c, dd) in pairs.iter().skip(p + 1) {
            if a == c || a == dd || b == c || b == dd {
                continue;
            }
            let g2 = diff(instance, reps[c], reps[dd]);
            if parallel_vectors(&g1, &g2) && ties_feasible(d, std::slice::from_ref(&g1)) {
                return Err(Error::DegenerateInstance(format!(
                    "pairs ({}, {}) and ({}, {}) tie on the same hyperplane",
                    name(reps[a]),
                    name(reps[b]),
                    name(reps[c]),
                    name(reps[dd])
                )));
            }
        }
    }
    Ok(())
}
