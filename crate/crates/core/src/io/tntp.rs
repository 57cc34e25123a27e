use crate::error::{Error, Result};
use crate::model::{Commodity, Edge, Instance, StateSpace};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// How the second-state offsets of randomized links are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OffsetMode {
    /// `b1 = t_e`, `b2 ~ U(low, high)`.
    SecondState,
    /// With probability 1/2 the roles of the two states are swapped.
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TntpParams {
    pub gamma: f64,
    pub tau: f64,
    pub seed: u64,
    pub low: f64,
    pub high: f64,
    pub mode: OffsetMode,
    /// Node labels as they appear in the file.
    pub source: usize,
    pub target: usize,
    pub demand: f64,
}

impl Default for TntpParams {
    fn default() -> Self {
        TntpParams {
            gamma: 0.15,
            tau: 0.0,
            seed: 42,
            low: 1.0,
            high: 15.0,
            mode: OffsetMode::SecondState,
            source: 1,
            target: 19,
            demand: 1e5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TntpInstance {
    pub instance: Instance<f64>,
    /// Indices of links whose offsets were drawn at random, ascending.
    pub randomized: Vec<usize>,
}

struct Link {
    from: usize,
    to: usize,
    capacity: f64,
    free_flow_time: f64,
}

/// Builds a two-state game from a TNTP network file. Slopes are
/// `gamma * t_e / C_e`; first-state offsets are the free-flow times.
pub fn parse_tntp(text: &str, params: &TntpParams) -> Result<TntpInstance> {
    if !(0.0..=1.0).contains(&params.tau) {
        return Err(Error::BadParameter(format!("tau = {} outside [0, 1]", params.tau)));
    }
    if params.gamma < 0.0 || !params.gamma.is_finite() {
        return Err(Error::BadParameter(format!("gamma = {}", params.gamma)));
    }
    if params.low.is_nan() || params.high.is_nan() || params.low > params.high || params.low < 0.0 {
        return Err(Error::BadParameter(format!(
            "offset range [{}, {}]",
            params.low, params.high
        )));
    }
    let links = read_links(text)?;
    let n_nodes = links.iter().map(|l| l.from.max(l.to)).max().unwrap_or(0);
    if params.source == 0 || params.source > n_nodes || params.target == 0 || params.target > n_nodes {
        return Err(Error::BadParameter(format!(
            "terminals {}→{} outside 1..={n_nodes}",
            params.source, params.target
        )));
    }

    let m = links.len();
    let k = (params.tau * m as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let mut randomized: Vec<usize> = order[..k].to_vec();
    randomized.sort_unstable();
    let mut is_random = vec![false; m];
    for &e in &randomized {
        is_random[e] = true;
    }

    let mut edges = Vec::with_capacity(m);
    for (e, link) in links.iter().enumerate() {
        let a = params.gamma * link.free_flow_time / link.capacity;
        let t = link.free_flow_time;
        let (b1, b2) = if is_random[e] {
            match params.mode {
                OffsetMode::SecondState => (t, draw(&mut rng, params)),
                OffsetMode::Mixed => {
                    let swap = rng.gen_bool(0.5);
                    let u = draw(&mut rng, params);
                    if swap {
                        (u, t)
                    } else {
                        (t, u)
                    }
                }
            }
        } else {
            (t, t)
        };
        edges.push(Edge {
            id: format!("e{}", e + 1),
            tail: link.from - 1,
            head: link.to - 1,
            slope: vec![a, a],
            offset: vec![b1, b2],
        });
    }
    let instance = Instance::new(
        (1..=n_nodes).map(|v| v.to_string()).collect(),
        edges,
        vec![Commodity {
            source: params.source - 1,
            target: params.target - 1,
            demand: params.demand,
            allowed_edges: None,
        }],
        StateSpace {
            states: vec!["theta1".into(), "theta2".into()],
            prior: vec![0.5, 0.5],
        },
    )?;
    Ok(TntpInstance {
        instance,
        randomized,
    })
}

fn draw(rng: &mut ChaCha8Rng, params: &TntpParams) -> f64 {
    if params.high > params.low {
        rng.gen_range(params.low..params.high)
    } else {
        params.low
    }
}

fn read_links(text: &str) -> Result<Vec<Link>> {
    // standard column order: init_node term_node capacity length free_flow_time ...
    let mut cols = (0usize, 1usize, Some(2usize), Some(4usize));
    let mut links = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('<') {
            continue;
        }
        if let Some(header) = line.strip_prefix('~') {
            let names: Vec<String> = header
                .split_whitespace()
                .filter(|t| *t != ";")
                .map(|t| t.to_ascii_lowercase())
                .collect();
            let find = |key: &str| names.iter().position(|n| n == key);
            if let (Some(i), Some(j)) = (find("init_node"), find("term_node")) {
                cols = (i, j, find("capacity"), find("free_flow_time"));
            }
            continue;
        }
        let fields: Vec<&str> = line
            .trim_end_matches(';')
            .split_whitespace()
            .filter(|t| *t != ";")
            .collect();
        let get = |idx: Option<usize>, name: &str| -> Result<f64> {
            let idx = idx.ok_or_else(|| Error::MissingField(name.to_string()))?;
            let tok = fields
                .get(idx)
                .ok_or_else(|| Error::MissingField(format!("{name} (line {line_no})")))?;
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("`{tok}` is not a number ({name})"),
            })
        };
        let node = |idx: usize, name: &str| -> Result<usize> {
            let v = get(Some(idx), name)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("invalid node label {v}"),
                });
            }
            Ok(v as usize)
        };
        let from = node(cols.0, "init_node")?;
        let to = node(cols.1, "term_node")?;
        let capacity = get(cols.2, "capacity")?;
        let free_flow_time = get(cols.3, "free_flow_time")?;
        if capacity <= 0.0 || free_flow_time < 0.0 {
            return Err(Error::Parse {
                line: line_no,
                msg: "capacity must be positive and free-flow time non-negative".into(),
            });
        }
        links.push(Link {
            from,
            to,
            capacity,
            free_flow_time,
        });
    }
    if links.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no links found".into(),
        });
    }
    Ok(links)
}
