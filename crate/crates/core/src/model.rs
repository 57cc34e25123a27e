//! Game description: states with a prior, a directed multigraph with
//! per-state affine edge costs, and populations routing fixed demands.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct StateSpace<T> {
    pub states: Vec<String>,
    pub prior: Vec<T>,
}

impl<T: Scalar> StateSpace<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    /// Slope per state, in the order of the state space.
    pub slope: Vec<T>,
    /// Constant term per state.
    pub offset: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Commodity<T> {
    pub source: usize,
    pub target: usize,
    pub demand: T,
    /// Edge indices this population may use; `None` means every edge.
    pub allowed_edges: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance<T> {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge<T>>,
    pub commodities: Vec<Commodity<T>>,
    pub states: StateSpace<T>,
}

/// A belief over states. Construct through [`make_belief`].
#[derive(Clone, Debug, PartialEq)]
pub struct Belief<T> {
    weights: Vec<T>,
}

impl<T: Scalar> Belief<T> {
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Point mass on state `k` of `d`.
    pub fn point_mass(d: usize, k: usize) -> Self {
        let mut weights = vec![T::zero(); d];
        weights[k] = T::one();
        Belief { weights }
    }

    /// Two-state belief with weight `alpha` on the first state.
    pub fn two_state(alpha: T) -> Result<Self> {
        make_belief(&[alpha, T::one() - alpha])
    }

    /// The weight on the first state.
    pub fn alpha(&self) -> T {
        self.weights[0]
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Belief<T>, lambda: T) -> Belief<T> {
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(&a, &b)| lambda * a + (T::one() - lambda) * b)
            .collect();
        Belief { weights }
    }
}

/// Validates a weight vector as a distribution; never renormalizes.
pub fn make_belief<T: Scalar>(weights: &[T]) -> Result<Belief<T>> {
    if weights.is_empty() {
        return Err(Error::NotADistribution("empty weight vector".into()));
    }
    let mut sum = T::zero();
    for (k, &w) in weights.iter().enumerate() {
        if !w.is_finite_value() || w < T::zero() {
            return Err(Error::NotADistribution(format!("entry {k} is {w}")));
        }
        sum += w;
    }
    if (sum - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::NotADistribution(format!("weights sum to {sum}")));
    }
    Ok(Belief {
        weights: weights.to_vec(),
    })
}

/// Like [`make_belief`] but also checks the length against the instance.
pub fn make_belief_for<T: Scalar>(instance: &Instance<T>, weights: &[T]) -> Result<Belief<T>> {
    if weights.len() != instance.states.len() {
        return Err(Error::NotADistribution(format!(
            "expected {} weights, got {}",
            instance.states.len(),
            weights.len()
        )));
    }
    make_belief(weights)
}

/// Expected slope and offset of an edge under a belief.
pub fn expected_cost_params<T: Scalar>(edge: &Edge<T>, belief: &Belief<T>) -> (T, T) {
    let mut a = T::zero();
    let mut b = T::zero();
    for (k, &mu) in belief.weights.iter().enumerate() {
        a += mu * edge.slope[k];
        b += mu * edge.offset[k];
    }
    (a, b)
}

/// Per-commodity active edge sets, each sorted ascending by edge index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportVector(pub Vec<Vec<usize>>);

impl SupportVector {
    pub fn new(mut sets: Vec<Vec<usize>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        SupportVector(sets)
    }

    pub fn commodity(&self, i: usize) -> &[usize] {
        &self.0[i]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize, e: usize) -> bool {
        self.0[i].binary_search(&e).is_ok()
    }

    /// True when every commodity's set is contained in the other's.
    pub fn is_nested_in(&self, other: &SupportVector) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.iter().all(|e| b.binary_search(e).is_ok()))
    }

    /// Renders the support with edge ids, e.g. `{e1,e2}|{e2}`.
    pub fn label<T>(&self, instance: &Instance<T>) -> String {
        self.0
            .iter()
            .map(|s| {
                let ids: Vec<&str> = s.iter().map(|&e| instance.edges[e].id.as_str()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}

impl fmt::Display for SupportVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| {
                let ids: Vec<String> = s.iter().map(|e| e.to_string()).collect();
                format!("{{{}}}", ids.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("|"))
    }
}

impl<T: Scalar> Instance<T> {
    /// Builds an instance after checking that indices and per-state vectors
    /// have consistent shapes. Semantic problems are left to
    /// [`validate_instance`].
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<Edge<T>>,
        commodities: Vec<Commodity<T>>,
        states: StateSpace<T>,
    ) -> Result<Self> {
        let d = states.states.len();
        if d == 0 {
            return Err(Error::Malformed("no states".into()));
        }
        if states.prior.len() != d {
            return Err(Error::Malformed(format!(
                "prior has {} entries for {d} states",
                states.prior.len()
            )));
        }
        let n = vertices.len();
        for e in &edges {
            if e.tail >= n || e.head >= n {
                return Err(Error::Malformed(format!("edge {} has unknown endpoint", e.id)));
            }
            if e.slope.len() != d || e.offset.len() != d {
                return Err(Error::Malformed(format!(
                    "edge {} needs {d} slopes and offsets",
                    e.id
                )));
            }
        }
        for (i, c) in commodities.iter().enumerate() {
            if c.source >= n || c.target >= n {
                return Err(Error::Malformed(format!("commodity {i} has unknown terminal")));
            }
            if let Some(allowed) = &c.allowed_edges {
                if allowed.iter().any(|&e| e >= edges.len()) {
                    return Err(Error::Malformed(format!(
                        "commodity {i} allows an unknown edge"
                    )));
                }
            }
        }
        Ok(Instance {
            vertices,
            edges,
            commodities,
            states,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_commodities(&self) -> usize {
        self.commodities.len()
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn prior_belief(&self) -> Result<Belief<T>> {
        make_belief(&self.states.prior)
    }

    /// `mask[i][e]` is true when commodity `i` may use edge `e`.
    pub fn allowed_mask(&self) -> Vec<Vec<bool>> {
        self.commodities
            .iter()
            .map(|c| match &c.allowed_edges {
                None => vec![true; self.edges.len()],
                Some(list) => {
                    let mut m = vec![false; self.edges.len()];
                    for &e in list {
                        m[e] = true;
                    }
                    m
                }
            })
            .collect()
    }

    pub fn is_allowed(&self, i: usize, e: usize) -> bool {
        match &self.commodities[i].allowed_edges {
            None => true,
            Some(list) => list.contains(&e),
        }
    }

    /// Vertices reachable from the commodity's source over permitted edges.
    pub fn reachable_from_source(&self, i: usize) -> Vec<bool> {
        let mask = self.allowed_mask();
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![self.commodities[i].source];
        seen[self.commodities[i].source] = true;
        while let Some(v) = stack.pop() {
            for (e, edge) in self.edges.iter().enumerate() {
                if mask[i][e] && edge.tail == v && edge.tail != edge.head && !seen[edge.head] {
                    seen[edge.head] = true;
                    stack.push(edge.head);
                }
            }
        }
        seen
    }

    /// True iff every edge has identical slopes across states (within 1e-12).
    pub fn offsets_only(&self) -> bool {
        let tol = T::lit(1e-12);
        self.edges
            .iter()
            .all(|e| e.slope.iter().all(|&a| (a - e.slope[0]).abs() <= tol))
    }

    /// The common (tail, head) pair if every edge joins the same two vertices
    /// in the same direction.
    pub fn parallel_pair(&self) -> Option<(usize, usize)> {
        let first = self.edges.first()?;
        let pair = (first.tail, first.head);
        if self.edges.iter().all(|e| (e.tail, e.head) == pair) {
            Some(pair)
        } else {
            None
        }
    }

    pub fn parallel_links(&self) -> bool {
        self.parallel_pair().is_some()
    }

    /// Expected slopes and offsets of all edges.
    pub fn expected_params(&self, belief: &Belief<T>) -> (Vec<T>, Vec<T>) {
        self.edges
            .iter()
            .map(|e| expected_cost_params(e, belief))
            .unzip()
    }

    /// Expected slopes with zero entries replaced by `eps`.
    pub fn regularized_slopes(&self, belief: &Belief<T>, eps: T) -> Vec<T> {
        self.expected_params(belief)
            .0
            .into_iter()
            .map(|a| if a <= T::zero() { eps } else { a })
            .collect()
    }

    /// Total demand over all commodities.
    pub fn total_demand(&self) -> T {
        self.commodities
            .iter()
            .fold(T::zero(), |acc, c| acc + c.demand)
    }

    /// Same structure with numbers converted to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Instance<U> {
        let conv = |v: &[T]| v.iter().map(|&x| crate::scalar::cast::<T, U>(x)).collect();
        Instance {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    id: e.id.clone(),
                    tail: e.tail,
                    head: e.head,
                    slope: conv(&e.slope),
                    offset: conv(&e.offset),
                })
                .collect(),
            commodities: self
                .commodities
                .iter()
                .map(|c| Commodity {
                    source: c.source,
                    target: c.target,
                    demand: crate::scalar::cast(c.demand),
                    allowed_edges: c.allowed_edges.clone(),
                })
                .collect(),
            states: StateSpace {
                states: self.states.states.clone(),
                prior: conv(&self.states.prior),
            },
        }
    }

    /// Copy with a different prior.
    pub fn with_prior(&self, prior: &[T]) -> Result<Self> {
        make_belief_for(self, prior)?;
        let mut out = self.clone();
        out.states.prior = prior.to_vec();
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub offsets_only: bool,
    pub parallel_links: bool,
    pub zero_slope_edges: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_instance<T: Scalar>(instance: &Instance<T>) -> ValidationReport {
    let mut violations = Vec::new();
    let ids: HashSet<&str> = instance.states.states.iter().map(String::as_str).collect();
    if ids.len() != instance.states.states.len() {
        violations.push("duplicate state identifiers".to_string());
    }
    if let Err(e) = make_belief(&instance.states.prior) {
        violations.push(format!("prior: {e}"));
    }
    let edge_ids: BTreeSet<&str> = instance.edges.iter().map(|e| e.id.as_str()).collect();
    if edge_ids.len() != instance.edges.len() {
        violations.push("duplicate edge identifiers".to_string());
    }
    let mut zero_slope_edges = Vec::new();
    for e in &instance.edges {
        if e.tail == e.head {
            violations.push(format!("self-loop on edge {}", e.id));
        }
        for (k, (&a, &b)) in e.slope.iter().zip(&e.offset).enumerate() {
            if !a.is_finite_value() || a < T::zero() {
                violations.push(format!("negative slope on edge {} in state {k}", e.id));
            }
            if !b.is_finite_value() || b < T::zero() {
                violations.push(format!("negative offset on edge {} in state {k}", e.id));
            }
        }
        if e.slope.iter().any(|&a| a == T::zero()) {
            zero_slope_edges.push(e.id.clone());
        }
    }
    for (i, c) in instance.commodities.iter().enumerate() {
        if !c.demand.is_finite_value() || c.demand < T::zero() {
            violations.push(format!("negative demand for commodity {i}"));
        } else if c.demand == T::zero() {
            violations.push(format!("zero demand for commodity {i}"));
        }
        if c.source == c.target {
            violations.push(format!("commodity {i} has identical source and target"));
        } else if !instance.reachable_from_source(i)[c.target] {
            violations.push(format!("unreachable target for commodity {i}"));
        }
    }
    ValidationReport {
        violations,
        offsets_only: instance.offsets_only(),
        parallel_links: instance.parallel_links(),
        zero_slope_edges,
    }
}

/// Returns an error listing the violations if the instance is invalid.
pub fn ensure_valid<T: Scalar>(instance: &Instance<T>) -> Result<()> {
    let report = validate_instance(instance);
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::Malformed(report.violations.join("; ")))
    }
}
