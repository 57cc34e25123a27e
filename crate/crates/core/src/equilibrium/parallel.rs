use super::{finalize, CostModel, EquilibriumResult, Flow, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{Belief, Instance};
use crate::scalar::Scalar;

/// Closed-form equilibrium of a single commodity on parallel links.
///
/// Links enter in increasing order of expected offset while the common cost
/// level `L = (d + sum b/a) / (sum 1/a)` exceeds the next offset.
pub fn parallel_links_wardrop<T: Scalar>(
    instance: &Instance<T>,
    belief: &Belief<T>,
    opts: &SolveOptions,
) -> Result<EquilibriumResult<T>> {
    let (s, t) = instance.parallel_pair().ok_or(Error::NotParallelLinks)?;
    if instance.n_commodities() != 1 {
        return Err(Error::BadParameter(
            "water-filling needs exactly one commodity".into(),
        ));
    }
    let c = &instance.commodities[0];
    if (c.source, c.target) != (s, t) {
        return Err(Error::NotParallelLinks);
    }
    let model = CostModel::new(instance, belief, opts.eps_slope);
    let mut links: Vec<usize> = (0..instance.n_edges())
        .filter(|&e| model.allowed[0][e])
        .collect();
    if links.is_empty() {
        return Err(Error::NoPath { commodity: 0 });
    }
    links.sort_by(|&e, &f| {
        model.offset[e]
            .partial_cmp(&model.offset[f])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(e.cmp(&f))
    });

    let d = c.demand;
    let mut inv_sum = T::zero();
    let mut weighted = T::zero();
    let mut level = T::zero();
    let mut used = 0;
    for (k, &e) in links.iter().enumerate() {
        if k > 0 && model.offset[e] >= level {
            break;
        }
        inv_sum += T::one() / model.slope[e];
        weighted += model.offset[e] / model.slope[e];
        level = (d + weighted) / inv_sum;
        used = k + 1;
    }

    let mut flow = Flow::zeros(1, instance.n_edges());
    // the flattest link absorbs the rounding remainder
    let flattest = links[..used]
        .iter()
        .copied()
        .min_by(|&e, &f| {
            model.slope[e]
                .partial_cmp(&model.slope[f])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(e.cmp(&f))
        })
        .expect("at least one link is used");
    let mut assigned = T::zero();
    for &e in &links[..used] {
        if e == flattest {
            continue;
        }
        let x = ((level - model.offset[e]) / model.slope[e]).max_of(T::zero());
        flow.per_commodity[0][e] = x;
        assigned += x;
    }
    flow.per_commodity[0][flattest] = (d - assigned).max_of(T::zero());
    Ok(finalize(instance, belief, &model, flow, opts, T::zero(), 0, true))
}
