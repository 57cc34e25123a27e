//! Shortest paths and reachability on the instance multigraph.

use crate::scalar::Scalar;

/// Out-adjacency lists restricted to a mask of usable edges.
pub fn out_adjacency(n: usize, ends: &[(usize, usize)], usable: &[bool]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (e, &(u, w)) in ends.iter().enumerate() {
        if usable[e] && u != w {
            adj[u].push(e);
        }
    }
    adj
}

pub fn reach_forward(n: usize, ends: &[(usize, usize)], usable: &[bool], from: usize) -> Vec<bool> {
    let adj = out_adjacency(n, ends, usable);
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for &e in &adj[v] {
            let w = ends[e].1;
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

pub fn reach_backward(n: usize, ends: &[(usize, usize)], usable: &[bool], to: usize) -> Vec<bool> {
    let reversed: Vec<(usize, usize)> = ends.iter().map(|&(u, w)| (w, u)).collect();
    reach_forward(n, &reversed, usable, to)
}

/// Single-source shortest-path distances for non-negative costs.
/// Unreachable vertices get `None`.
pub fn dijkstra<T: Scalar>(
    n: usize,
    ends: &[(usize, usize)],
    costs: &[T],
    usable: &[bool],
    source: usize,
) -> Vec<Option<T>> {
    let adj = out_adjacency(n, ends, usable);
    let mut dist: Vec<Option<T>> = vec![None; n];
    let mut done = vec![false; n];
    dist[source] = Some(T::zero());
    for _ in 0..n {
        let mut best: Option<(usize, T)> = None;
        for v in 0..n {
            if done[v] {
                continue;
            }
            if let Some(dv) = dist[v] {
                if best.is_none_or(|(_, b)| dv < b) {
                    best = Some((v, dv));
                }
            }
        }
        let Some((v, dv)) = best else { break };
        done[v] = true;
        for &e in &adj[v] {
            let w = ends[e].1;
            let cand = dv + costs[e];
            if dist[w].is_none_or(|dw| cand < dw) {
                dist[w] = Some(cand);
            }
        }
    }
    dist
}

/// Edge `e = (u, w)` lies on a shortest path when `dist[u] + c_e = dist[w]`
/// up to a relative tolerance.
pub fn is_tight<T: Scalar>(du: T, dw: T, cost: T, tol: T) -> bool {
    (du + cost - dw).abs() <= tol * (T::one() + dw.abs())
}

/// Among all shortest `s`-`t` paths, the one whose sequence of edge indices
/// is lexicographically smallest. Returns `None` if `t` is unreachable.
pub fn lexicographic_shortest_path<T: Scalar>(
    n: usize,
    ends: &[(usize, usize)],
    costs: &[T],
    usable: &[bool],
    s: usize,
    t: usize,
) -> Option<Vec<usize>> {
    let dist = dijkstra(n, ends, costs, usable, s);
    dist[t]?;
    let tol = if T::is_exact() { T::zero() } else { T::lit(1e-12) };
    let tight: Vec<bool> = ends
        .iter()
        .enumerate()
        .map(|(e, &(u, w))| {
            usable[e]
                && u != w
                && match (dist[u], dist[w]) {
                    (Some(du), Some(dw)) => is_tight(du, dw, costs[e], tol),
                    _ => false,
                }
        })
        .collect();
    let adj = out_adjacency(n, ends, &tight);
    let mut visited = vec![false; n];
    visited[s] = true;
    let mut path = Vec::new();
    let mut v = s;
    while v != t {
        let mut next = None;
        let mut candidates = adj[v].clone();
        candidates.sort_unstable();
        for e in candidates {
            let w = ends[e].1;
            if visited[w] {
                continue;
            }
            if reaches_avoiding(&adj, ends, w, t, &visited) {
                next = Some(e);
                break;
            }
        }
        let e = next?;
        path.push(e);
        v = ends[e].1;
        visited[v] = true;
    }
    Some(path)
}

fn reaches_avoiding(
    adj: &[Vec<usize>],
    ends: &[(usize, usize)],
    from: usize,
    to: usize,
    blocked: &[bool],
) -> bool {
    if from == to {
        return true;
    }
    let mut seen = blocked.to_vec();
    seen[from] = true;
    let mut stack = vec![from];
    while let Some(v) = stack.pop() {
        for &e in &adj[v] {
            let w = ends[e].1;
            if w == to {
                return true;
            }
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dijkstra_on_diamond() {
        let ends = [(0, 1), (1, 3), (0, 2), (2, 3), (1, 2)];
        let costs = [1.0, 5.0, 2.0, 1.0, 0.5];
        let d = dijkstra(4, &ends, &costs, &[true; 5], 0);
        assert_eq!(d, vec![Some(0.0), Some(1.0), Some(1.5), Some(2.5)]);
    }

    #[test]
    fn lexicographic_tie_break() {
        // two parallel links of equal cost: the lower index wins
        let ends = [(0, 1), (0, 1)];
        let p = lexicographic_shortest_path(2, &ends, &[1.0, 1.0], &[true; 2], 0, 1).unwrap();
        assert_eq!(p, vec![0]);
        let p = lexicographic_shortest_path(2, &ends, &[2.0, 1.0], &[true; 2], 0, 1).unwrap();
        assert_eq!(p, vec![1]);
    }

    #[test]
    fn zero_cost_cycle_does_not_trap_path_search() {
        let ends = [(0, 1), (1, 0), (1, 2)];
        let p = lexicographic_shortest_path(3, &ends, &[0.0, 0.0, 1.0], &[true; 3], 0, 2).unwrap();
        assert_eq!(p, vec![0, 2]);
    }

    #[test]
    fn unreachable_target() {
        let ends = [(1, 0)];
        assert!(lexicographic_shortest_path(2, &ends, &[1.0], &[true], 0, 1).is_none());
        assert_eq!(reach_backward(2, &ends, &[true], 0), vec![true, true]);
    }
}
