//! Deterministic builders for the instance families used throughout the
//! crate, addressable by strings such as `nested_braess:j=2,eps=1e-6`.

use crate::error::{Error, Result};
use crate::io::{parse_tntp, OffsetMode, TntpParams};
use crate::model::{Commodity, Edge, Instance, StateSpace};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Example1,
    Example2,
    Example3,
    Braess,
    NestedBraess { j: usize, eps: f64, demand: f64 },
    ExpSupports { j: usize, eps: f64 },
    Sioux { path: PathBuf, params: TntpParams },
}

const DEFAULT_EPS: f64 = 1e-6;

fn two_states<T: Scalar>() -> StateSpace<T> {
    StateSpace {
        states: vec!["theta1".into(), "theta2".into()],
        prior: vec![T::lit(0.5), T::lit(0.5)],
    }
}

fn edge<T: Scalar>(id: &str, tail: usize, head: usize, slope: [f64; 2], offset: [f64; 2]) -> Edge<T> {
    Edge {
        id: id.into(),
        tail,
        head,
        slope: slope.iter().map(|&v| T::lit(v)).collect(),
        offset: offset.iter().map(|&v| T::lit(v)).collect(),
    }
}

fn single<T: Scalar>(source: usize, target: usize, demand: T) -> Vec<Commodity<T>> {
    vec![Commodity {
        source,
        target,
        demand,
        allowed_edges: None,
    }]
}

/// Three parallel links `2x+5 | 2x`, `2x | 2x+4` and the constant 3.
pub fn example1<T: Scalar>() -> Instance<T> {
    Instance::new(
        vec!["s".into(), "t".into()],
        vec![
            edge("e1", 0, 1, [2.0, 2.0], [5.0, 0.0]),
            edge("e2", 0, 1, [2.0, 2.0], [0.0, 4.0]),
            edge("e3", 0, 1, [0.0, 0.0], [3.0, 3.0]),
        ],
        single(0, 1, T::one()),
        two_states(),
    )
    .expect("static instance")
}

/// Two links and two populations of demand 1/2; the first may use only `e1`.
pub fn example2<T: Scalar>() -> Instance<T> {
    Instance::new(
        vec!["s".into(), "t".into()],
        vec![
            edge("e1", 0, 1, [1.0, 1.0], [0.0, 1.0]),
            edge("e2", 0, 1, [0.0, 0.0], [1.0, 0.5]),
        ],
        vec![
            Commodity {
                source: 0,
                target: 1,
                demand: T::lit(0.5),
                allowed_edges: Some(vec![0]),
            },
            Commodity {
                source: 0,
                target: 1,
                demand: T::lit(0.5),
                allowed_edges: None,
            },
        ],
        two_states(),
    )
    .expect("static instance")
}

/// Two links whose slopes depend on the state: `1 | x` and `x | 2`.
pub fn example3<T: Scalar>() -> Instance<T> {
    Instance::new(
        vec!["s".into(), "t".into()],
        vec![
            edge("e1", 0, 1, [0.0, 1.0], [1.0, 0.0]),
            edge("e2", 0, 1, [1.0, 0.0], [0.0, 2.0]),
        ],
        single(0, 1, T::one()),
        two_states(),
    )
    .expect("static instance")
}

/// The Wheatstone network with an uncertain bridge of cost 0 or 1.
pub fn braess<T: Scalar>() -> Instance<T> {
    Instance::new(
        vec!["s".into(), "v1".into(), "v2".into(), "t".into()],
        vec![
            edge("e1", 0, 1, [1.0, 1.0], [0.0, 0.0]),
            edge("e2", 1, 3, [0.0, 0.0], [1.0, 1.0]),
            edge("e3", 0, 2, [0.0, 0.0], [1.0, 1.0]),
            edge("e4", 2, 3, [1.0, 1.0], [0.0, 0.0]),
            edge("e5", 1, 2, [0.0, 0.0], [0.0, 1.0]),
        ],
        single(0, 3, T::one()),
        two_states(),
    )
    .expect("static instance")
}

/// Nested Braess graph with `2j+2` vertices and `4j+1` edges. Costs are
/// state-independent; the two states are copies of each other.
pub fn nested_braess<T: Scalar>(j: usize, eps: f64, demand: f64) -> Result<Instance<T>> {
    nested_braess_scaled(j, eps, demand, 1.0)
}

fn nested_braess_scaled<T: Scalar>(j: usize, eps: f64, demand: f64, scale: f64) -> Result<Instance<T>> {
    if j == 0 {
        return Err(Error::BadParameter("j must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::BadParameter(format!("eps = {eps} outside (0, 1e-3]")));
    }
    if !(demand > 0.0 && demand.is_finite()) {
        return Err(Error::BadParameter(format!("demand = {demand}")));
    }
    let last = 2 * j + 1;
    let vertices: Vec<String> = (0..=last)
        .map(|i| match i {
            0 => "s".to_string(),
            i if i == last => "t".to_string(),
            i => format!("v{i}"),
        })
        .collect();
    let mut edges = Vec::with_capacity(4 * j + 1);
    let mut next_id = 1;
    let mut push = |tail: usize, head: usize, slope: f64, offset: f64, edges: &mut Vec<Edge<T>>| {
        edges.push(edge(&format!("e{next_id}"), tail, head, [slope, slope], [offset, offset]));
        next_id += 1;
    };
    for i in 0..=2 * j {
        let slope = if i == j { eps * scale } else { 1.0 };
        push(i, i + 1, slope, 0.0, &mut edges);
    }
    for i in 0..j {
        let b = 10f64.powi((j - 1 - i) as i32) * scale;
        push(i, 2 * j - i, 0.0, b, &mut edges);
    }
    for i in 0..j {
        let b = 10f64.powi((j - 1 - i) as i32) * scale;
        push(i + 1, 2 * j + 1 - i, 0.0, b, &mut edges);
    }
    Instance::new(vertices, edges, single(0, last, T::lit(demand)), two_states())
}

/// Rescaled nested Braess graph plus a direct link `(s, t)` whose offset
/// is 0 in the first state and 1 in the second. Unit demand.
pub fn exp_supports<T: Scalar>(j: usize, eps: f64) -> Result<Instance<T>> {
    let scale = 10f64.powi(1 - j as i32) / 3.0;
    let mut inst = nested_braess_scaled::<T>(j, eps, 1.0, scale)?;
    let id = format!("e{}", inst.edges.len() + 1);
    inst.edges.push(edge(&id, 0, 2 * j + 1, [0.0, 0.0], [0.0, 1.0]));
    Ok(inst)
}

/// Closed-form per-unit equilibrium cost of `nested_braess(1, eps, d)`.
pub fn nested_braess_cost(j: usize, eps: f64, d: f64) -> Result<f64> {
    if j != 1 {
        return Err(Error::UnsupportedJ(j));
    }
    if d < 0.0 {
        return Err(Error::BadParameter(format!("demand = {d}")));
    }
    Ok(if d == 0.0 {
        0.0
    } else if d <= 1.0 / (1.0 + eps) {
        d * (2.0 + eps)
    } else if d < 2.0 {
        (2.0 + eps * (d + 2.0)) / (1.0 + 2.0 * eps)
    } else {
        1.0 + d / 2.0
    })
}

/// `m` parallel links with random positive slopes and random offsets in
/// each of `d` states; uniform prior, unit demand.
pub fn random_parallel_links<T: Scalar>(seed: u64, m: usize, d: usize) -> Result<Instance<T>> {
    if m == 0 || d == 0 {
        return Err(Error::BadParameter("need at least one link and one state".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = (0..m)
        .map(|k| {
            let a: f64 = rng.gen_range(0.2..2.0);
            Edge {
                id: format!("e{}", k + 1),
                tail: 0,
                head: 1,
                slope: vec![T::lit(a); d],
                offset: (0..d).map(|_| T::lit(rng.gen_range(0.0..3.0))).collect(),
            }
        })
        .collect();
    let states = StateSpace {
        states: (1..=d).map(|k| format!("theta{k}")).collect(),
        prior: vec![T::one() / T::from_usize_lossy(d); d],
    };
    Instance::new(vec!["s".into(), "t".into()], edges, single(0, 1, T::one()), states)
}

/// Random two-terminal series-parallel network with `n_edges` edges, grown
/// from a single `s -> t` edge by random subdivisions and duplications.
/// Offsets-only costs with two states; uniform prior, unit demand.
pub fn random_series_parallel<T: Scalar>(seed: u64, n_edges: usize) -> Result<Instance<T>> {
    if n_edges == 0 {
        return Err(Error::BadParameter("need at least one edge".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ends = vec![(0usize, 1usize)];
    let mut n_vertices = 2;
    while ends.len() < n_edges {
        let k = rng.gen_range(0..ends.len());
        let (u, w) = ends[k];
        if rng.gen_bool(0.5) {
            ends[k] = (u, n_vertices);
            ends.push((n_vertices, w));
            n_vertices += 1;
        } else {
            ends.push((u, w));
        }
    }
    let edges = ends
        .iter()
        .enumerate()
        .map(|(k, &(u, w))| {
            let a: f64 = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.2..2.0) };
            let b = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
            edge(&format!("e{}", k + 1), u, w, [a, a], b)
        })
        .collect();
    let vertices = std::iter::once("s".to_string())
        .chain(std::iter::once("t".to_string()))
        .chain((2..n_vertices).map(|v| format!("v{v}")))
        .collect();
    Instance::new(vertices, edges, single(0, 1, T::one()), two_states())
}

impl GeneratorSpec {
    pub fn build<T: Scalar>(&self) -> Result<Instance<T>> {
        match self {
            GeneratorSpec::Example1 => Ok(example1()),
            GeneratorSpec::Example2 => Ok(example2()),
            GeneratorSpec::Example3 => Ok(example3()),
            GeneratorSpec::Braess => Ok(braess()),
            GeneratorSpec::NestedBraess { j, eps, demand } => nested_braess(*j, *eps, *demand),
            GeneratorSpec::ExpSupports { j, eps } => exp_supports(*j, *eps),
            GeneratorSpec::Sioux { path, params } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Ok(parse_tntp(&text, params)?.instance.cast())
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::BadParameter(format!("`{part}` is not key=value")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |kv: &BTreeMap<String, String>, key: &str, default: f64| -> Result<f64> {
            kv.get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::BadParameter(format!("{key} = `{v}`")))
            })
        };
        let int = |kv: &BTreeMap<String, String>, key: &str, default: usize| -> Result<usize> {
            kv.get(key).map_or(Ok(default), |v| {
                v.parse()
                    .map_err(|_| Error::BadParameter(format!("{key} = `{v}`")))
            })
        };
        let check_keys = |allowed: &[&str]| -> Result<()> {
            match kv.keys().find(|k| !allowed.contains(&k.as_str())) {
                Some(k) => Err(Error::BadParameter(format!("unknown key `{k}` for {family}"))),
                None => Ok(()),
            }
        };
        let spec = match family {
            "example1" => GeneratorSpec::Example1,
            "example2" => GeneratorSpec::Example2,
            "example3" => GeneratorSpec::Example3,
            "braess" => GeneratorSpec::Braess,
            "nested_braess" => {
                check_keys(&["j", "eps", "demand"])?;
                GeneratorSpec::NestedBraess {
                    j: int(&kv, "j", 1)?,
                    eps: num(&kv, "eps", DEFAULT_EPS)?,
                    demand: num(&kv, "demand", 1.0)?,
                }
            }
            "exp_supports" => {
                check_keys(&["j", "eps"])?;
                GeneratorSpec::ExpSupports {
                    j: int(&kv, "j", 1)?,
                    eps: num(&kv, "eps", DEFAULT_EPS)?,
                }
            }
            "sioux" | "sioux_mixed" => {
                check_keys(&["path", "tau", "seed", "gamma", "low", "high", "source", "target", "demand"])?;
                let mixed = family == "sioux_mixed";
                let path = kv
                    .get("path")
                    .ok_or_else(|| Error::BadParameter("sioux needs path=<file.tntp>".into()))?;
                let defaults = TntpParams::default();
                let params = TntpParams {
                    gamma: num(&kv, "gamma", defaults.gamma)?,
                    tau: num(&kv, "tau", if mixed { 1.0 } else { 0.0 })?,
                    seed: int(&kv, "seed", defaults.seed as usize)? as u64,
                    low: num(&kv, "low", if mixed { 0.0 } else { defaults.low })?,
                    high: num(&kv, "high", defaults.high)?,
                    mode: if mixed {
                        OffsetMode::Mixed
                    } else {
                        OffsetMode::SecondState
                    },
                    source: int(&kv, "source", defaults.source)?,
                    target: int(&kv, "target", defaults.target)?,
                    demand: num(&kv, "demand", defaults.demand)?,
                };
                GeneratorSpec::Sioux {
                    path: PathBuf::from(path),
                    params,
                }
            }
            other => return Err(Error::BadParameter(format!("unknown family `{other}`"))),
        };
        if matches!(
            spec,
            GeneratorSpec::Example1 | GeneratorSpec::Example2 | GeneratorSpec::Example3 | GeneratorSpec::Braess
        ) && !kv.is_empty()
        {
            return Err(Error::BadParameter(format!("{family} takes no parameters")));
        }
        Ok(spec)
    }
}
