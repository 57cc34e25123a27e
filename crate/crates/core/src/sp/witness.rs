use super::recognize::is_series_parallel;
use crate::equilibrium::{solve_wardrop, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{Belief, Commodity, Edge, Instance, StateSpace};
use crate::scalar::Scalar;

/// Offset standing in for an edge that must never be used.
pub const BLOCKED_OFFSET: f64 = 1e6;

const PATH_LIMIT: usize = 200_000;

/// A Braess network embedded in a non-series-parallel graph.
#[derive(Clone, Debug)]
pub struct BraessWitness<T> {
    pub instance: Instance<T>,
    /// The edge whose cost depends on the state.
    pub bridge: String,
    /// Edges with cost `x`.
    pub linear: [String; 2],
    /// Edges with cost 1.
    pub constant: [String; 2],
}

/// Embedding found in the graph: the main path `s .. h .. i .. b .. k .. l .. t`
/// (as edge indices) plus bypasses `h .. k` and `i .. l`.
struct Embedding {
    main: Vec<usize>,
    bridge_pos: usize,
    h_pos: usize,
    k_pos: usize,
    hk: Vec<usize>,
    il: Vec<usize>,
}

/// Two-state costs on the graph of `instance` for which full revelation is
/// not optimal at the uniform prior. Only the bridge's cost depends on the
/// state; edges outside the embedding are blocked by a large offset.
pub fn braess_witness<T: Scalar>(instance: &Instance<T>, s: usize, t: usize) -> Result<BraessWitness<T>> {
    if is_series_parallel(instance, s, t)?.is_sp() {
        return Err(Error::GraphIsSeriesParallel);
    }
    let emb = find_embedding(instance, s, t)?;
    let m = instance.n_edges();
    let mut slope = vec![0.0; m];
    let mut offset = vec![[BLOCKED_OFFSET; 2]; m];
    for &e in emb.main.iter().chain(&emb.hk).chain(&emb.il) {
        offset[e] = [0.0, 0.0];
    }
    let e_hi = emb.main[emb.h_pos];
    let e_kl = emb.main[emb.k_pos];
    let b = emb.main[emb.bridge_pos];
    slope[e_hi] = 1.0;
    slope[e_kl] = 1.0;
    offset[emb.hk[0]] = [1.0, 1.0];
    offset[emb.il[0]] = [1.0, 1.0];
    offset[b] = [0.0, 1.0];

    let edges = instance
        .edges
        .iter()
        .enumerate()
        .map(|(e, edge)| Edge {
            id: edge.id.clone(),
            tail: edge.tail,
            head: edge.head,
            slope: vec![T::lit(slope[e]); 2],
            offset: offset[e].iter().map(|&v| T::lit(v)).collect(),
        })
        .collect();
    let witness = Instance::new(
        instance.vertices.clone(),
        edges,
        vec![Commodity { source: s, target: t, demand: T::one(), allowed_edges: None }],
        StateSpace {
            states: vec!["theta1".into(), "theta2".into()],
            prior: vec![T::lit(0.5), T::lit(0.5)],
        },
    )?;
    check_blocked_unused(&witness, &offset)?;
    let id = |e: usize| instance.edges[e].id.clone();
    Ok(BraessWitness {
        bridge: id(b),
        linear: [id(e_hi), id(e_kl)],
        constant: [id(emb.hk[0]), id(emb.il[0])],
        instance: witness,
    })
}

fn check_blocked_unused<T: Scalar>(witness: &Instance<T>, offset: &[[f64; 2]]) -> Result<()> {
    let opts = SolveOptions::default();
    for alpha in [0.0, 0.5, 1.0] {
        let eq = solve_wardrop(witness, &Belief::two_state(T::lit(alpha))?, &opts)?;
        for (e, x) in eq.loads().into_iter().enumerate() {
            if offset[e][0] == BLOCKED_OFFSET && x > T::lit(1e-9) {
                return Err(Error::WitnessNotFound(format!(
                    "blocked edge {} carries {x} at alpha = {alpha}",
                    witness.edges[e].id
                )));
            }
        }
    }
    Ok(())
}

fn find_embedding<T: Scalar>(instance: &Instance<T>, s: usize, t: usize) -> Result<Embedding> {
    let n = instance.n_vertices();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, edge) in instance.edges.iter().enumerate() {
        if edge.tail != edge.head {
            out[edge.tail].push(e);
        }
    }
    let head = |e: usize| instance.edges[e].head;
    let tail = |e: usize| instance.edges[e].tail;

    let mut found = None;
    let mut count = 0;
    let mut visited = vec![false; n];
    visited[s] = true;
    let mut path = Vec::new();
    simple_paths(&out, &head, s, t, &mut visited, &mut path, &mut |main| {
        count += 1;
        if count > PATH_LIMIT {
            return true;
        }
        found = embed_on_path(&out, &head, &tail, main);
        found.is_some()
    });
    match found {
        Some(e) => Ok(e),
        None if count > PATH_LIMIT => Err(Error::WitnessNotFound(format!(
            "search stopped after {PATH_LIMIT} s-t paths"
        ))),
        None => Err(Error::WitnessNotFound(
            "no directed Wheatstone embedding; the graph is not series-parallel only as an undirected graph".into(),
        )),
    }
}

/// Depth-first enumeration of simple paths; `visit` returns true to stop.
fn simple_paths(
    out: &[Vec<usize>],
    head: &impl Fn(usize) -> usize,
    v: usize,
    t: usize,
    visited: &mut Vec<bool>,
    path: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]) -> bool,
) -> bool {
    if v == t {
        return visit(path);
    }
    for &e in &out[v] {
        let w = head(e);
        if visited[w] {
            continue;
        }
        visited[w] = true;
        path.push(e);
        let stop = simple_paths(out, head, w, t, visited, path, visit);
        path.pop();
        visited[w] = false;
        if stop {
            return true;
        }
    }
    false
}

/// Tries every bridge edge and every choice of `h < i <= bridge < k < l` on
/// the main path, looking for two disjoint bypasses off the path.
fn embed_on_path(
    out: &[Vec<usize>],
    head: &impl Fn(usize) -> usize,
    tail: &impl Fn(usize) -> usize,
    main: &[usize],
) -> Option<Embedding> {
    let n = out.len();
    // vertex at position p is the tail of main[p]; the last one is t
    let verts: Vec<usize> = main
        .iter()
        .map(|&e| tail(e))
        .chain(std::iter::once(head(*main.last()?)))
        .collect();
    let len = main.len();
    let mut on_main = vec![false; n];
    for &v in &verts {
        on_main[v] = true;
    }
    for bridge in 1..len.saturating_sub(1) {
        for h in 0..bridge {
            for i in h + 1..=bridge {
                for k in bridge + 1..len {
                    for l in k + 1..=len {
                        let mut found: Option<(Vec<usize>, Vec<usize>)> = None;
                        let mut blocked = on_main.clone();
                        blocked[verts[k]] = false;
                        let mut path = Vec::new();
                        simple_paths(out, head, verts[h], verts[k], &mut blocked, &mut path, &mut |hk| {
                            let mut blocked2 = on_main.clone();
                            for &e in hk {
                                blocked2[head(e)] = true;
                            }
                            blocked2[verts[l]] = false;
                            let mut p2 = Vec::new();
                            simple_paths(out, head, verts[i], verts[l], &mut blocked2, &mut p2, &mut |il| {
                                found = Some((hk.to_vec(), il.to_vec()));
                                true
                            })
                        });
                        if let Some((hk, il)) = found {
                            return Some(Embedding {
                                main: main.to_vec(),
                                bridge_pos: bridge,
                                h_pos: h,
                                k_pos: k,
                                hk,
                                il,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}
