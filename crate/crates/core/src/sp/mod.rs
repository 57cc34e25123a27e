//! Series-parallel recognition and the full-revelation guarantee it gives.

mod recognize;
mod witness;

pub use recognize::{is_series_parallel, KernelEdge, SpCheck, SpDecomposition, SpTree};
pub use witness::{braess_witness, BraessWitness, BLOCKED_OFFSET};

use crate::model::Instance;
use crate::scalar::Scalar;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Guarantee {
    pub guaranteed: bool,
    pub reasons: Vec<String>,
}

/// Full revelation is optimal for every prior when the game has one
/// commodity, state-independent slopes and a series-parallel network.
pub fn full_revelation_guarantee<T: Scalar>(instance: &Instance<T>) -> Guarantee {
    let mut reasons = Vec::new();
    if instance.n_commodities() != 1 {
        reasons.push("multiple commodities".to_string());
    }
    if !instance.offsets_only() {
        reasons.push("not offsets-only".to_string());
    }
    for c in &instance.commodities {
        match is_series_parallel(instance, c.source, c.target) {
            Ok(check) if check.is_sp() => {}
            Ok(_) => {
                reasons.push("not series-parallel".to_string());
                break;
            }
            Err(e) => {
                reasons.push(e.to_string());
                break;
            }
        }
    }
    Guarantee {
        guaranteed: reasons.is_empty(),
        reasons,
    }
}
