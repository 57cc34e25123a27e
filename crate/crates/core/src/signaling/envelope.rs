use super::scheme::SignalingScheme;
use crate::equilibrium::{solve_wardrop, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{Belief, Instance};
use crate::scalar::Scalar;
use crate::support::CostProfile;

/// Best split of a two-state prior into two posteriors.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPointSplit<T> {
    /// Posteriors `alpha = mu(theta_1)` with `left <= prior <= right`.
    pub left: T,
    pub right: T,
    pub left_cost: T,
    pub right_cost: T,
    /// Probability of the left posterior.
    pub weight: T,
    pub cost: T,
}

impl<T: Scalar> TwoPointSplit<T> {
    pub fn scheme(&self) -> SignalingScheme<T> {
        let one = T::one();
        let w = self.weight;
        let mut cols = vec![vec![w * self.left, w * (one - self.left)]];
        if self.right != self.left {
            cols.push(vec![(one - w) * self.right, (one - w) * (one - self.right)]);
        }
        SignalingScheme::from_columns(&cols)
    }
}

/// Lower convex envelope of the points `(x_k, y_k)` (sorted by `x`),
/// evaluated at `at`, with the two hull points used.
pub fn lower_envelope<T: Scalar>(points: &[(T, T)], at: T) -> Option<TwoPointSplit<T>> {
    let mut hull: Vec<(T, T)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above segment a-p
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let k = hull.iter().position(|p| p.0 >= at)?;
    let (r, l) = if hull[k].0 == at || k == 0 {
        (hull[k], hull[k])
    } else {
        (hull[k], hull[k - 1])
    };
    if l.0 > at {
        return None;
    }
    let weight = if r.0 == l.0 { T::one() } else { (r.0 - at) / (r.0 - l.0) };
    Some(TwoPointSplit {
        left: l.0,
        right: r.0,
        left_cost: l.1,
        right_cost: r.1,
        weight,
        cost: weight * l.1 + (T::one() - weight) * r.1,
    })
}

/// Optimal two-state signaling read off a piecewise-linear cost profile.
pub fn profile_envelope<T: Scalar>(profile: &CostProfile<T>, alpha: T) -> Option<TwoPointSplit<T>> {
    let pts: Vec<(T, T)> = profile.knots.iter().copied().zip(profile.values.iter().copied()).collect();
    lower_envelope(&pts, alpha)
}

/// Optimal two-state signaling by brute force: the equilibrium cost is
/// sampled at `n + 1` evenly spaced posteriors (plus the prior) and the best
/// split of the prior over the samples is returned. Works for any cost class,
/// including state-dependent slopes.
pub fn grid_envelope<T: Scalar>(instance: &Instance<T>, n: usize, opts: &SolveOptions) -> Result<TwoPointSplit<T>> {
    if instance.n_states() != 2 {
        return Err(Error::RequiresTwoStates);
    }
    if n == 0 {
        return Err(Error::BadParameter("grid needs at least one interval".into()));
    }
    let prior = instance.states.prior[0];
    let mut alphas: Vec<T> = (0..=n)
        .map(|k| T::from_usize_lossy(k) / T::from_usize_lossy(n))
        .collect();
    if let Err(k) = alphas.binary_search_by(|a| a.partial_cmp(&prior).expect("finite belief")) {
        alphas.insert(k, prior);
    }
    let mut pts = Vec::with_capacity(alphas.len());
    for a in alphas {
        let c = solve_wardrop(instance, &Belief::two_state(a)?, opts)?.cost;
        pts.push((a, c));
    }
    lower_envelope(&pts, prior).ok_or_else(|| Error::BadParameter("prior outside [0, 1]".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_concave_points_uses_endpoints() {
        let pts: [(f64, f64); 3] = [(0.0, 2.0), (0.5, 3.0), (1.0, 2.0)];
        let s = lower_envelope(&pts, 0.5).unwrap();
        assert_eq!((s.left, s.right), (0.0, 1.0));
        assert!((s.cost - 2.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_at_hull_vertex_is_one_point() {
        let pts: [(f64, f64); 3] = [(0.0, 2.0), (0.5, 1.0), (1.0, 2.0)];
        let s = lower_envelope(&pts, 0.5).unwrap();
        assert_eq!((s.left, s.right, s.weight), (0.5, 0.5, 1.0));
        assert_eq!(s.scheme().n_signals(), 1);
    }
}
