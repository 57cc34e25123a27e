use super::two_state::SupportAtlas;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::Serialize;

/// Continuous piecewise-linear `C(alpha)` given by its knots, `0` and `1`
/// included.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostProfile<T> {
    pub knots: Vec<T>,
    pub values: Vec<T>,
}

impl<T: Scalar> CostProfile<T> {
    pub fn interior_breakpoints(&self) -> &[T] {
        let n = self.knots.len();
        if n <= 2 {
            &[]
        } else {
            &self.knots[1..n - 1]
        }
    }

    /// Linear interpolation; `alpha` is clamped to `[0, 1]`.
    pub fn eval(&self, alpha: T) -> T {
        let a = alpha.max_of(T::zero()).min_of(T::one());
        for k in 0..self.knots.len() - 1 {
            let (x0, x1) = (self.knots[k], self.knots[k + 1]);
            if a <= x1 || k + 2 == self.knots.len() {
                if x1 == x0 {
                    return self.values[k];
                }
                let t = (a - x0) / (x1 - x0);
                return self.values[k] + t * (self.values[k + 1] - self.values[k]);
            }
        }
        self.values[0]
    }

    /// Slopes of the pieces with positive length.
    pub fn slopes(&self) -> Vec<T> {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(x, _)| x[1] > x[0])
            .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0]))
            .collect()
    }

    /// Knots as `(alpha, cost)` pairs in `f64`.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.knots
            .iter()
            .zip(&self.values)
            .map(|(a, c)| (a.to_f64_lossy(), c.to_f64_lossy()))
            .collect()
    }
}

/// Joins the affine pieces of an atlas, checking continuity at each breakpoint.
pub fn cost_profile<T: Scalar>(atlas: &SupportAtlas<T>) -> Result<CostProfile<T>> {
    let regions = &atlas.regions;
    let first = regions
        .first()
        .ok_or_else(|| Error::Enumeration("empty atlas".into()))?;
    let mut knots = vec![first.alpha_lo];
    let mut values = vec![first.cost_lo()];
    for k in 0..regions.len() {
        let r = &regions[k];
        let v = r.cost_hi();
        if let Some(next) = regions.get(k + 1) {
            let right = next.cost_lo();
            if (v - right).abs() > T::lit(1e-6) * (T::one() + v.abs()) {
                return Err(Error::DiscontinuityDetected {
                    alpha: r.alpha_hi.to_f64_lossy(),
                    left: v.to_f64_lossy(),
                    right: right.to_f64_lossy(),
                });
            }
        }
        knots.push(r.alpha_hi);
        values.push(v);
    }
    Ok(CostProfile { knots, values })
}

/// True iff no knot lies more than `tol * (1 + |value|)` below the chord
/// through its two neighbours.
///
/// Comparing values rather than slopes keeps very narrow regions, whose
/// slopes are dominated by rounding, from deciding the answer.
pub fn is_concave<T: Scalar>(profile: &CostProfile<T>, tol: f64) -> bool {
    let (x, v) = (&profile.knots, &profile.values);
    (1..x.len().saturating_sub(1)).all(|k| {
        let span = x[k + 1] - x[k - 1];
        if span <= T::zero() {
            return true;
        }
        let chord = v[k - 1] + (v[k + 1] - v[k - 1]) * (x[k] - x[k - 1]) / span;
        v[k] >= chord - T::lit(tol) * (T::one() + v[k].abs())
    })
}

/// Minimal SVG line chart of a profile with markers at interior breakpoints.
pub fn profile_svg<T: Scalar>(profile: &CostProfile<T>) -> String {
    let pts = profile.points();
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let sx = |a: f64| pad + a * (w - 2.0 * pad);
    let sy = |c: f64| h - pad - (c - lo) / span * (h - 2.0 * pad);
    let poly: Vec<String> = pts.iter().map(|&(a, c)| format!("{:.3},{:.3}", sx(a), sy(c))).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <text x=\"{xm}\" y=\"{yt}\" text-anchor=\"middle\" font-size=\"12\">alpha</text>\n\
         <text x=\"4\" y=\"{pad}\" font-size=\"12\">{hi:.4}</text>\n\
         <text x=\"4\" y=\"{y0}\" font-size=\"12\">{lo:.4}</text>\n\
         <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n",
        poly.join(" "),
        y0 = h - pad,
        x1 = w - pad,
        xm = w / 2.0,
        yt = h - 8.0,
    );
    for &(a, c) in &pts[1..pts.len().saturating_sub(1)] {
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"crimson\"/>\n",
            sx(a),
            sy(c)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
