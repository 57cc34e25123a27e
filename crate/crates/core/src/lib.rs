//! Wardrop equilibria, equilibrium supports over beliefs and public
//! signaling in Bayesian congestion games with affine costs.

pub mod equilibrium;
pub mod error;
pub mod gen;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod scalar;
pub mod signaling;
pub mod sp;
pub mod support;

pub type Instance64 = model::Instance<f64>;
pub type Belief64 = model::Belief<f64>;
pub type Flow64 = equilibrium::Flow<f64>;
pub type Scheme64 = signaling::SignalingScheme<f64>;
pub type Atlas64 = support::SupportAtlas<f64>;
pub type Instance32 = model::Instance<f32>;
pub type Rational = num_rational::Ratio<i128>;
pub type InstanceQ = model::Instance<Rational>;
pub type BeliefQ = model::Belief<Rational>;
