use super::region::{support_region_counted, RegionView, SupportRegion};
use crate::equilibrium::{solve_wardrop, verify_wardrop, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{Belief, Instance, SupportVector};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnumOptions {
    pub solve: SolveOptions,
    /// Subintervals no longer than this are not probed.
    pub boundary_tol: f64,
    /// Residual bound for the equilibrium at each region's midpoint.
    pub verify_tol: f64,
    /// Seed of the probe jitter.
    pub seed: u64,
    /// Leftover subintervals up to this width that no candidate support
    /// covers are given to the nearest candidate region. Such slivers come
    /// from the slope regularization when zero-slope edges tie exactly.
    pub snap_tol: f64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            solve: SolveOptions::default(),
            boundary_tol: 1e-10,
            verify_tol: 1e-6,
            seed: 42,
            snap_tol: 1e-6,
        }
    }
}

/// Regions sorted by `alpha_lo`, covering `[0, 1]`.
///
/// A breakpoint belongs to the region on its right; the last region is closed.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportAtlas<T> {
    pub regions: Vec<SupportRegion<T>>,
    pub lp_solves: usize,
    pub probes: usize,
    /// KKT residual at the midpoint of each region.
    pub midpoint_residuals: Vec<T>,
}

impl<T: Scalar> SupportAtlas<T> {
    /// Interior breakpoints in increasing `alpha`.
    pub fn breakpoints(&self) -> Vec<T> {
        self.regions
            .iter()
            .take(self.regions.len().saturating_sub(1))
            .map(|r| r.alpha_hi)
            .collect()
    }

    pub fn supports(&self) -> Vec<SupportVector> {
        self.regions.iter().map(|r| r.support.clone()).collect()
    }

    pub fn region_at(&self, alpha: T) -> Option<&SupportRegion<T>> {
        let last = self.regions.len().checked_sub(1)?;
        self.regions
            .iter()
            .enumerate()
            .find(|(k, r)| alpha >= r.alpha_lo && (alpha < r.alpha_hi || (*k == last && alpha <= r.alpha_hi)))
            .map(|(_, r)| r)
    }

    pub fn cost(&self, alpha: T) -> Option<T> {
        self.region_at(alpha).map(|r| r.cost(alpha))
    }

    pub fn to_csv(&self, instance: &Instance<T>) -> String {
        let mut out = String::from("alpha_lo,alpha_hi,cost_lo,cost_hi,support\n");
        for r in &self.regions {
            out.push_str(&format!(
                "{},{},{},{},\"{}\"\n",
                r.alpha_lo.to_f64_lossy(),
                r.alpha_hi.to_f64_lossy(),
                r.cost_lo().to_f64_lossy(),
                r.cost_hi().to_f64_lossy(),
                r.support.label(instance)
            ));
        }
        out
    }

    pub fn view(&self, instance: &Instance<T>) -> AtlasView {
        AtlasView {
            regions: self.regions.iter().map(|r| RegionView::new(instance, r)).collect(),
            breakpoints: self.breakpoints().iter().map(|b| b.to_f64_lossy()).collect(),
            lp_solves: self.lp_solves,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AtlasView {
    pub regions: Vec<RegionView>,
    pub breakpoints: Vec<f64>,
    pub lp_solves: usize,
}

/// Covers `[0, 1]` with support regions: solve at an interior probe, find the
/// probe's region, then recurse on what remains to its left and right.
pub fn enumerate_supports_two_state<T: Scalar>(
    instance: &Instance<T>,
    opts: &EnumOptions,
) -> Result<SupportAtlas<T>> {
    if instance.n_states() != 2 {
        return Err(Error::RequiresTwoStates);
    }
    if !instance.offsets_only() {
        return Err(Error::RequiresOffsetsOnly);
    }
    let tol = T::lit(opts.boundary_tol);
    let snap = T::lit(opts.snap_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut regions: Vec<SupportRegion<T>> = Vec::new();
    let mut lp_solves = 0;
    let mut probes = 0;
    // subinterval with the supports of the regions bounding it
    let mut pending: Vec<(T, T, Option<SupportVector>, Option<SupportVector>)> = vec![(T::zero(), T::one(), None, None)];
    while let Some((a, b, left, right)) = pending.pop() {
        if b - a <= tol {
            continue;
        }
        probes += 1;
        let jitter: f64 = rng.gen_range(-1e-6..=1e-6);
        let probe = (a + b) / T::lit(2.0) + T::lit(jitter) * (b - a);
        let belief = Belief::two_state(probe)?;
        let eq = solve_wardrop(instance, &belief, &opts.solve)?;

        let mut found = None;
        let mut near = None;
        for support in probe_supports(instance, &eq.flow, eq.support, left.as_ref(), right.as_ref()) {
            let (region, lps) = support_region_counted(instance, &support, &opts.solve)?;
            lp_solves += lps;
            match region {
                Some(r) if r.contains(probe, tol) => {
                    found = Some(r);
                    break;
                }
                Some(r) if near.is_none() && b - a <= snap && r.contains(probe, snap) => near = Some(r),
                _ => {}
            }
        }
        let mut region = match (found, near) {
            (Some(r), _) => r,
            (None, Some(mut r)) => {
                r.alpha_lo = a;
                r.alpha_hi = b;
                r
            }
            (None, None) => {
                return Err(Error::Enumeration(format!(
                    "probe alpha = {probe} lies outside the region of its own support"
                )))
            }
        };
        region.alpha_lo = region.alpha_lo.max_of(a);
        region.alpha_hi = region.alpha_hi.min_of(b);
        if region.alpha_lo - a > tol {
            pending.push((a, region.alpha_lo, left.clone(), Some(region.support.clone())));
        }
        if b - region.alpha_hi > tol {
            pending.push((region.alpha_hi, b, Some(region.support.clone()), right.clone()));
        }
        regions.push(region);
    }
    regions.sort_by(|x, y| x.alpha_lo.partial_cmp(&y.alpha_lo).unwrap_or(std::cmp::Ordering::Equal));
    stitch(&mut regions, tol)?;
    regions.dedup_by(|next, prev| {
        let same = next.support == prev.support;
        if same {
            prev.alpha_hi = next.alpha_hi;
        }
        same
    });

    let mut midpoint_residuals = Vec::with_capacity(regions.len());
    for r in &regions {
        let mid = r.midpoint();
        let report = verify_wardrop(instance, &Belief::two_state(mid)?, &r.flow(mid), opts.verify_tol);
        if !report.pass {
            return Err(Error::Enumeration(format!(
                "region [{}, {}] of {} fails verification at its midpoint (residual {})",
                r.alpha_lo, r.alpha_hi, r.support, report.max_residual
            )));
        }
        midpoint_residuals.push(report.max_residual);
    }
    Ok(SupportAtlas {
        regions,
        lp_solves,
        probes,
        midpoint_residuals,
    })
}

/// Candidate supports for a probe, tried in order: the extracted support,
/// the edges that carry flow, and the union of the neighbouring supports.
/// The latter two matter when near-ties below the support tolerance or very
/// narrow regions confuse the extraction.
fn probe_supports<T: Scalar>(
    instance: &Instance<T>,
    flow: &crate::equilibrium::Flow<T>,
    extracted: SupportVector,
    left: Option<&SupportVector>,
    right: Option<&SupportVector>,
) -> Vec<SupportVector> {
    let carrying = SupportVector::new(
        flow.per_commodity
            .iter()
            .zip(&instance.commodities)
            .map(|(xi, c)| {
                let floor = c.demand * T::lit(1e-9);
                (0..xi.len()).filter(|&e| xi[e] > floor).collect()
            })
            .collect(),
    );
    let mut out = vec![extracted];
    if !out.contains(&carrying) {
        out.push(carrying);
    }
    if let (Some(l), Some(r)) = (left, right) {
        let union = SupportVector::new(
            l.0.iter()
                .zip(&r.0)
                .map(|(x, y)| x.iter().chain(y).copied().collect())
                .collect(),
        );
        if !out.contains(&union) {
            out.push(union);
        }
    }
    out
}

/// Closes gaps up to `tol` between neighbours and checks coverage.
fn stitch<T: Scalar>(regions: &mut [SupportRegion<T>], tol: T) -> Result<()> {
    let Some(first) = regions.first_mut() else {
        return Err(Error::Enumeration("no regions found".into()));
    };
    if first.alpha_lo > tol {
        return Err(Error::Enumeration(format!("[0, {}] is not covered", first.alpha_lo)));
    }
    first.alpha_lo = T::zero();
    for k in 1..regions.len() {
        let prev_hi = regions[k - 1].alpha_hi;
        let gap = regions[k].alpha_lo - prev_hi;
        if gap.abs() > tol.max_of(T::lit(1e-9)) {
            return Err(Error::Enumeration(format!(
                "regions {} and {} leave a gap or overlap of {gap} at alpha = {prev_hi}",
                regions[k - 1].support, regions[k].support
            )));
        }
        regions[k].alpha_lo = prev_hi;
    }
    let last = regions.last_mut().expect("non-empty");
    if T::one() - last.alpha_hi > tol {
        return Err(Error::Enumeration(format!("[{}, 1] is not covered", last.alpha_hi)));
    }
    last.alpha_hi = T::one();
    Ok(())
}
