use crate::error::{Error, Result};
use crate::graph;
use crate::model::Instance;
use crate::scalar::Scalar;
use serde::Serialize;

/// Decomposition tree; leaves are edges, inner nodes carry the terminals of
/// the subnetwork they compose.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpTree {
    Edge { id: String, ends: (String, String) },
    Series { ends: (String, String), children: Vec<SpTree> },
    Parallel { ends: (String, String), children: Vec<SpTree> },
}

impl SpTree {
    pub fn ends(&self) -> &(String, String) {
        match self {
            SpTree::Edge { ends, .. } | SpTree::Series { ends, .. } | SpTree::Parallel { ends, .. } => ends,
        }
    }

    /// Edge ids in left-to-right order.
    pub fn leaves(&self) -> Vec<String> {
        match self {
            SpTree::Edge { id, .. } => vec![id.clone()],
            SpTree::Series { children, .. } | SpTree::Parallel { children, .. } => {
                children.iter().flat_map(SpTree::leaves).collect()
            }
        }
    }

    fn reversed(self) -> SpTree {
        match self {
            SpTree::Edge { id, ends } => SpTree::Edge { id, ends: (ends.1, ends.0) },
            SpTree::Series { ends, children } => SpTree::Series {
                ends: (ends.1, ends.0),
                children: children.into_iter().rev().map(SpTree::reversed).collect(),
            },
            SpTree::Parallel { ends, children } => SpTree::Parallel {
                ends: (ends.1, ends.0),
                children: children.into_iter().map(SpTree::reversed).collect(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpDecomposition {
    pub root: SpTree,
    /// Edges on no `s`-`t` walk, self-loops and dangling parts removed before
    /// the reduction.
    pub pruned: Vec<String>,
}

/// A composite edge left over when no reduction applies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelEdge {
    pub ends: (String, String),
    pub edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum SpCheck {
    SeriesParallel(SpDecomposition),
    NotSp { kernel: Vec<KernelEdge>, pruned: Vec<String> },
}

impl SpCheck {
    pub fn is_sp(&self) -> bool {
        matches!(self, SpCheck::SeriesParallel(_))
    }
}

struct Live {
    u: usize,
    w: usize,
    tree: SpTree,
}

/// Series-parallel test for the two-terminal network `(s, t)`, ignoring edge
/// directions after dropping edges that no directed `s`-`t` walk uses.
pub fn is_series_parallel<T: Scalar>(instance: &Instance<T>, s: usize, t: usize) -> Result<SpCheck> {
    let n = instance.n_vertices();
    if s >= n || t >= n || s == t {
        return Err(Error::BadTerminals(format!("s = {s}, t = {t} with {n} vertices")));
    }
    let ends: Vec<(usize, usize)> = instance.edges.iter().map(|e| (e.tail, e.head)).collect();
    let all = vec![true; ends.len()];
    let from_s = graph::reach_forward(n, &ends, &all, s);
    if !from_s[t] {
        return Err(Error::BadTerminals(format!(
            "{} unreachable from {}",
            instance.vertices[t], instance.vertices[s]
        )));
    }
    let to_t = graph::reach_backward(n, &ends, &all, t);
    let name = |v: usize| instance.vertices[v].clone();

    let mut pruned = Vec::new();
    let mut live: Vec<Option<Live>> = Vec::new();
    for (e, edge) in instance.edges.iter().enumerate() {
        let (u, w) = ends[e];
        if u == w || !from_s[u] || !to_t[w] {
            pruned.push(edge.id.clone());
        } else {
            live.push(Some(Live {
                u,
                w,
                tree: SpTree::Edge { id: edge.id.clone(), ends: (name(u), name(w)) },
            }));
        }
    }

    loop {
        if merge_parallel(&mut live, &name) {
            continue;
        }
        let mut degree = vec![0usize; n];
        for l in live.iter().flatten() {
            degree[l.u] += 1;
            degree[l.w] += 1;
        }
        if let Some(v) = (0..n).find(|&v| v != s && v != t && degree[v] == 1) {
            // a dead end hanging off the network carries no s-t flow
            let k = live.iter().position(|l| l.as_ref().is_some_and(|l| l.u == v || l.w == v)).unwrap();
            pruned.extend(live[k].take().unwrap().tree.leaves());
            continue;
        }
        if let Some(v) = (0..n).find(|&v| v != s && v != t && degree[v] == 2) {
            merge_series(&mut live, v, &name);
            continue;
        }
        break;
    }

    let rest: Vec<Live> = live.into_iter().flatten().collect();
    pruned.sort();
    if rest.len() == 1 && ((rest[0].u, rest[0].w) == (s, t) || (rest[0].u, rest[0].w) == (t, s)) {
        let l = rest.into_iter().next().unwrap();
        let root = if l.u == s { l.tree } else { l.tree.reversed() };
        return Ok(SpCheck::SeriesParallel(SpDecomposition { root, pruned }));
    }
    let kernel = rest
        .into_iter()
        .map(|l| KernelEdge {
            ends: (name(l.u), name(l.w)),
            edges: l.tree.leaves(),
        })
        .collect();
    Ok(SpCheck::NotSp { kernel, pruned })
}

fn merge_parallel(live: &mut [Option<Live>], name: &impl Fn(usize) -> String) -> bool {
    for a in 0..live.len() {
        let Some((ua, wa)) = live[a].as_ref().map(|l| (l.u, l.w)) else { continue };
        for b in a + 1..live.len() {
            let Some((ub, wb)) = live[b].as_ref().map(|l| (l.u, l.w)) else { continue };
            let same = (ua, wa) == (ub, wb);
            if !same && (ua, wa) != (wb, ub) {
                continue;
            }
            let first = live[a].take().unwrap().tree;
            let mut second = live[b].take().unwrap().tree;
            if !same {
                second = second.reversed();
            }
            let mut children = Vec::new();
            for t in [first, second] {
                match t {
                    SpTree::Parallel { children: c, .. } => children.extend(c),
                    other => children.push(other),
                }
            }
            live[a] = Some(Live {
                u: ua,
                w: wa,
                tree: SpTree::Parallel { ends: (name(ua), name(wa)), children },
            });
            return true;
        }
    }
    false
}

fn merge_series(live: &mut [Option<Live>], v: usize, name: &impl Fn(usize) -> String) {
    let idx: Vec<usize> = (0..live.len())
        .filter(|&k| live[k].as_ref().is_some_and(|l| l.u == v || l.w == v))
        .collect();
    let (a, b) = (idx[0], idx[1]);
    // orient as x - v and v - y
    let la = live[a].take().unwrap();
    let lb = live[b].take().unwrap();
    let (x, first) = if la.w == v { (la.u, la.tree) } else { (la.w, la.tree.reversed()) };
    let (y, second) = if lb.u == v { (lb.w, lb.tree) } else { (lb.u, lb.tree.reversed()) };
    let mut children = Vec::new();
    for t in [first, second] {
        match t {
            SpTree::Series { children: c, .. } => children.extend(c),
            other => children.push(other),
        }
    }
    live[a] = Some(Live {
        u: x,
        w: y,
        tree: SpTree::Series { ends: (name(x), name(y)), children },
    });
}
