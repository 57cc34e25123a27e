//! Public signaling schemes: evaluation, the support-indexed linear program
//! and the two-state pipeline built on the support atlas.

mod envelope;
mod lp;
mod prune;
mod scheme;

pub use envelope::{grid_envelope, lower_envelope, profile_envelope, TwoPointSplit};
pub use lp::{optimal_scheme_lp, LpScheme, LpSignal, RECOVERY_TOL};
pub use prune::{prune_scheme, PrunedScheme};
pub use scheme::{
    evaluate_scheme, full_revelation_scheme, no_signal_scheme, SchemeEvaluation, SchemeView, SignalOutcome,
    SignalView, SignalingScheme, MASS_EPS,
};

use crate::error::Result;
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use crate::support::{cost_profile, enumerate_supports_two_state, EnumOptions, SupportAtlas};

#[derive(Clone, Debug)]
pub struct TwoStateOptimum<T> {
    pub scheme: PrunedScheme<T>,
    pub cost: T,
    pub lp: LpScheme<T>,
    pub atlas: SupportAtlas<T>,
    /// Lower convex envelope of the atlas profile at the prior.
    pub envelope_cost: T,
}

/// Atlas, then the signaling LP over its supports, then pruning.
pub fn optimal_scheme_two_state<T: Scalar>(
    instance: &Instance<T>,
    prior: &Belief<T>,
    opts: &EnumOptions,
) -> Result<TwoStateOptimum<T>> {
    let inst = instance.with_prior(prior.weights())?;
    let atlas = enumerate_supports_two_state(&inst, opts)?;
    let mut candidates: Vec<SupportVector> = Vec::new();
    for s in atlas.supports() {
        if !candidates.contains(&s) {
            candidates.push(s);
        }
    }
    let lp = optimal_scheme_lp(&inst, &candidates)?;
    let scheme = prune_scheme(&inst, &lp.scheme, &candidates, &opts.solve)?;
    let profile = cost_profile(&atlas)?;
    let envelope_cost = profile_envelope(&profile, prior.alpha())
        .map(|s| s.cost)
        .unwrap_or(lp.cost);
    Ok(TwoStateOptimum {
        cost: lp.cost,
        scheme,
        lp,
        atlas,
        envelope_cost,
    })
}
