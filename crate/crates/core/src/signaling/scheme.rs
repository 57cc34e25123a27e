use crate::equilibrium::{solve_wardrop, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{make_belief, Belief, Instance};
use crate::scalar::Scalar;
use serde::Serialize;

/// Column masses at or below this value are treated as signals never sent.
pub const MASS_EPS: f64 = 1e-12;

const ROW_SUM_TOL: f64 = 1e-9;

/// Public signaling scheme `phi[state][signal]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalingScheme<T> {
    phi: Vec<Vec<T>>,
}

impl<T: Scalar> SignalingScheme<T> {
    /// Checks non-negativity and that row `k` sums to `prior[k]` within 1e-9.
    pub fn new(phi: Vec<Vec<T>>, prior: &[T]) -> Result<Self> {
        if phi.len() != prior.len() {
            return Err(Error::NotADistribution(format!(
                "scheme has {} rows for {} states",
                phi.len(),
                prior.len()
            )));
        }
        let width = phi.first().map_or(0, Vec::len);
        if width == 0 || phi.iter().any(|r| r.len() != width) {
            return Err(Error::NotADistribution("scheme rows must be non-empty and equally long".into()));
        }
        for (k, row) in phi.iter().enumerate() {
            if let Some(v) = row.iter().find(|&&v| v < T::zero() || !v.is_finite_value()) {
                return Err(Error::NotADistribution(format!("negative entry {v} in row {k}")));
            }
            let sum = row.iter().fold(T::zero(), |a, &b| a + b);
            if (sum - prior[k]).abs() > T::lit(ROW_SUM_TOL) {
                return Err(Error::NotADistribution(format!(
                    "row {k} sums to {sum}, prior is {}",
                    prior[k]
                )));
            }
        }
        Ok(SignalingScheme { phi })
    }

    pub fn phi(&self) -> &[Vec<T>] {
        &self.phi
    }

    pub fn n_states(&self) -> usize {
        self.phi.len()
    }

    pub fn n_signals(&self) -> usize {
        self.phi[0].len()
    }

    pub fn column(&self, sigma: usize) -> Vec<T> {
        self.phi.iter().map(|r| r[sigma]).collect()
    }

    /// Probability that `sigma` is sent.
    pub fn mass(&self, sigma: usize) -> T {
        self.phi.iter().fold(T::zero(), |a, r| a + r[sigma])
    }

    pub fn prior(&self) -> Vec<T> {
        self.phi
            .iter()
            .map(|r| r.iter().fold(T::zero(), |a, &b| a + b))
            .collect()
    }

    /// Signals with mass above [`MASS_EPS`].
    pub fn issued(&self) -> Vec<usize> {
        (0..self.n_signals())
            .filter(|&s| self.mass(s) > T::lit(MASS_EPS))
            .collect()
    }

    /// Conditional state distribution given `sigma`, if it is ever sent.
    pub fn posterior(&self, sigma: usize) -> Option<Belief<T>> {
        let mass = self.mass(sigma);
        if mass <= T::lit(MASS_EPS) {
            return None;
        }
        let w: Vec<T> = self.phi.iter().map(|r| r[sigma] / mass).collect();
        make_belief(&w).ok()
    }

    pub(crate) fn from_columns(columns: &[Vec<T>]) -> Self {
        let d = columns[0].len();
        SignalingScheme {
            phi: (0..d).map(|k| columns.iter().map(|c| c[k]).collect()).collect(),
        }
    }
}

/// One signal per state, sent exactly when that state occurs.
pub fn full_revelation_scheme<T: Scalar>(prior: &Belief<T>) -> SignalingScheme<T> {
    let w = prior.weights();
    let phi = (0..w.len())
        .map(|k| (0..w.len()).map(|s| if s == k { w[k] } else { T::zero() }).collect())
        .collect();
    SignalingScheme { phi }
}

/// A single signal sent in every state.
pub fn no_signal_scheme<T: Scalar>(prior: &Belief<T>) -> SignalingScheme<T> {
    SignalingScheme {
        phi: prior.weights().iter().map(|&w| vec![w]).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalOutcome<T> {
    pub signal: usize,
    pub mass: T,
    pub posterior: Belief<T>,
    /// Equilibrium cost at the posterior.
    pub cost: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeEvaluation<T> {
    pub signals: Vec<SignalOutcome<T>>,
    pub total: T,
}

/// Expected equilibrium cost of a scheme, one equilibrium per issued signal.
pub fn evaluate_scheme<T: Scalar>(
    instance: &Instance<T>,
    scheme: &SignalingScheme<T>,
    opts: &SolveOptions,
) -> Result<SchemeEvaluation<T>> {
    SignalingScheme::new(scheme.phi.clone(), &instance.states.prior)?;
    let mut signals = Vec::new();
    let mut total = T::zero();
    for s in scheme.issued() {
        let posterior = scheme.posterior(s).expect("issued signals have a posterior");
        let eq = solve_wardrop(instance, &posterior, opts)?;
        let mass = scheme.mass(s);
        total += mass * eq.cost;
        signals.push(SignalOutcome {
            signal: s,
            mass,
            posterior,
            cost: eq.cost,
        });
    }
    Ok(SchemeEvaluation { signals, total })
}

#[derive(Clone, Debug, Serialize)]
pub struct SignalView {
    pub phi: Vec<f64>,
    pub posterior: Vec<f64>,
    pub cost: f64,
}

/// JSON shape `{"signals": [{"phi", "posterior", "cost"}], "total_cost"}`.
#[derive(Clone, Debug, Serialize)]
pub struct SchemeView {
    pub signals: Vec<SignalView>,
    pub total_cost: f64,
}

impl SchemeView {
    pub fn new<T: Scalar>(scheme: &SignalingScheme<T>, eval: &SchemeEvaluation<T>) -> Self {
        SchemeView {
            signals: eval
                .signals
                .iter()
                .map(|o| SignalView {
                    phi: scheme.column(o.signal).iter().map(|v| v.to_f64_lossy()).collect(),
                    posterior: o.posterior.weights().iter().map(|v| v.to_f64_lossy()).collect(),
                    cost: o.cost.to_f64_lossy(),
                })
                .collect(),
            total_cost: eval.total.to_f64_lossy(),
        }
    }
}
