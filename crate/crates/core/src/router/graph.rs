//! Stage one: shortest paths over aggregated cost grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::objectives::{ScalarGrid3D, Waypoints};

/// `n_s` distinct weight vectors on the unit simplex over `e` objectives:
/// the corners, then the centroid, then simplex lattices of growing
/// resolution in lexicographic order.
pub fn generate_weight_vectors(n_s: usize, e: usize) -> Result<Vec<Vec<f64>>> {
    if e == 0 {
        return Err(Error::input("need at least one grid objective"));
    }
    if n_s < e {
        return Err(Error::input(format!(
            "{n_s} weightings cannot cover {e} grid objectives"
        )));
    }
    let mut out: Vec<Vec<f64>> = (0..e)
        .map(|i| (0..e).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    if e == 1 {
        // the 0-simplex has a single point
        return Ok(out);
    }
    let push = |out: &mut Vec<Vec<f64>>, v: Vec<f64>| {
        let fresh = !out
            .iter()
            .any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-12));
        if fresh && out.len() < n_s {
            out.push(v);
        }
    };
    push(&mut out, vec![1.0 / e as f64; e]);
    let mut h = 2;
    while out.len() < n_s {
        let mut parts = vec![0usize; e];
        lattice(&mut parts, 0, h, &mut |c: &[usize]| {
            let mut v: Vec<f64> = c.iter().map(|&k| k as f64 / h as f64).collect();
            // make the sum exactly one despite rounding
            let rest: f64 = v[1..].iter().sum();
            v[0] = 1.0 - rest;
            push(&mut out, v);
        });
        h += 1;
    }
    Ok(out)
}

fn lattice(parts: &mut Vec<usize>, i: usize, left: usize, f: &mut impl FnMut(&[usize])) {
    if i + 1 == parts.len() {
        parts[i] = left;
        f(parts);
        return;
    }
    for k in (0..=left).rev() {
        parts[i] = k;
        lattice(parts, i + 1, left - k, f);
    }
}

/// Weighted sum of grids, each first rescaled to `[0, 1]` by its own range
/// so that objectives with different units and signs are comparable.
pub fn aggregate_grids(grids: &[&ScalarGrid3D], weights: &[f64]) -> Result<ScalarGrid3D> {
    let first = grids
        .first()
        .ok_or_else(|| Error::input("no grids to aggregate"))?;
    if grids.len() != weights.len() {
        return Err(Error::input("one weight per grid is required"));
    }
    let spec = *first.spec();
    if grids.iter().any(|g| *g.spec() != spec) {
        return Err(Error::input("grids to aggregate must share one layout"));
    }
    let ranges: Vec<(f64, f64)> = grids.iter().map(|g| g.min_max()).collect();
    let values = (0..spec.len())
        .map(|idx| {
            grids
                .iter()
                .zip(weights)
                .zip(&ranges)
                .map(|((g, w), (lo, hi))| {
                    let span = hi - lo;
                    let v = if span > 0.0 {
                        (g.values()[idx] - lo) / span
                    } else {
                        0.0
                    };
                    w * v
                })
                .sum()
        })
        .collect();
    ScalarGrid3D::new(spec, values)
}

/// A node path through the grid graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyPath {
    pub nodes: Vec<usize>,
    pub points: Vec<[f64; 3]>,
    pub cost: f64,
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then on node index
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra over the 26-neighbourhood with trapezoidal edge costs
/// `|u - v| (c(u) + c(v)) / 2`. Among equal-cost routes the one through
/// lower node indices wins.
pub fn dijkstra_grid(cost: &ScalarGrid3D, start: [usize; 3], goal: [usize; 3]) -> Result<PolyPath> {
    dijkstra_grid_masked(cost, start, goal, &[])
}

/// [`dijkstra_grid`] that never enters nodes whose `blocked` entry is true.
/// An empty mask blocks nothing.
pub fn dijkstra_grid_masked(
    cost: &ScalarGrid3D,
    start: [usize; 3],
    goal: [usize; 3],
    blocked: &[bool],
) -> Result<PolyPath> {
    let spec = cost.spec();
    let [nx, ny, nz] = spec.counts;
    for (name, n) in [("start", start), ("goal", goal)] {
        if n[0] >= nx || n[1] >= ny || n[2] >= nz {
            return Err(Error::input(format!(
                "{name} node {n:?} outside the {nx}x{ny}x{nz} grid"
            )));
        }
    }
    if start == goal {
        return Err(Error::input("start and goal coincide"));
    }
    if let Some(v) = cost.values().iter().find(|v| **v < 0.0) {
        return Err(Error::input(format!("negative cost {v} in routing grid")));
    }
    if !blocked.is_empty() && blocked.len() != spec.len() {
        return Err(Error::input("mask size does not match the grid"));
    }
    let is_blocked = |n: usize| blocked.get(n).copied().unwrap_or(false);
    let s = spec.index(start[0], start[1], start[2]);
    let g = spec.index(goal[0], goal[1], goal[2]);
    if is_blocked(s) || is_blocked(g) {
        return Err(Error::Unreachable);
    }
    let values = cost.values();
    let mut offsets = Vec::with_capacity(26);
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if (dx, dy, dz) != (0, 0, 0) {
                    let len = ((dx as f64 * spec.resolution[0]).powi(2)
                        + (dy as f64 * spec.resolution[1]).powi(2)
                        + (dz as f64 * spec.resolution[2]).powi(2))
                    .sqrt();
                    offsets.push(([dx, dy, dz], len));
                }
            }
        }
    }
    let mut dist = vec![f64::INFINITY; spec.len()];
    let mut prev = vec![usize::MAX; spec.len()];
    let mut done = vec![false; spec.len()];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Entry { cost: 0.0, node: s });
    while let Some(Entry { cost: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == g {
            break;
        }
        let [i, j, k] = spec.ijk(u);
        for &(o, len) in &offsets {
            let (a, b, c) = (i as i64 + o[0], j as i64 + o[1], k as i64 + o[2]);
            if a < 0 || b < 0 || c < 0 || a >= nx as i64 || b >= ny as i64 || c >= nz as i64 {
                continue;
            }
            let v = spec.index(a as usize, b as usize, c as usize);
            if done[v] || is_blocked(v) {
                continue;
            }
            let nd = d + len * 0.5 * (values[u] + values[v]);
            if nd < dist[v] || (nd == dist[v] && u < prev[v]) {
                dist[v] = nd;
                prev[v] = u;
                heap.push(Entry { cost: nd, node: v });
            }
        }
    }
    if !dist[g].is_finite() {
        return Err(Error::Unreachable);
    }
    let mut nodes = vec![g];
    while *nodes.last().expect("non-empty") != s {
        nodes.push(prev[*nodes.last().expect("non-empty")]);
    }
    nodes.reverse();
    let points = nodes.iter().map(|&n| spec.position(n)).collect();
    Ok(PolyPath {
        nodes,
        points,
        cost: dist[g],
    })
}

/// One pass of the `[1, 2, 1] / 4` filter over interior points; the
/// endpoints stay put.
pub fn smooth_polypath(points: &[[f64; 3]]) -> Result<Waypoints> {
    if points.len() < 2 {
        return Err(Error::input("a path needs at least 2 points"));
    }
    let mut out = points.to_vec();
    for i in 1..points.len() - 1 {
        for a in 0..3 {
            out[i][a] = 0.25 * (points[i - 1][a] + 2.0 * points[i][a] + points[i + 1][a]);
        }
    }
    out.dedup();
    Waypoints::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::GridSpec3D;

    #[test]
    fn weight_vector_examples() {
        assert_eq!(
            generate_weight_vectors(3, 3).unwrap(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let w = generate_weight_vectors(4, 3).unwrap();
        assert_eq!(w[3], vec![1.0 / 3.0; 3]);
        assert!(generate_weight_vectors(2, 3).is_err());
    }

    #[test]
    fn weight_vectors_distinct_and_normalized() {
        for e in 2..6 {
            let w = generate_weight_vectors(70, e).unwrap();
            assert_eq!(w.len(), 70);
            for (i, v) in w.iter().enumerate() {
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(v.iter().all(|&x| x >= 0.0));
                for u in &w[..i] {
                    assert!(u.iter().zip(v).any(|(a, b)| (a - b).abs() > 1e-12));
                }
            }
        }
    }

    #[test]
    fn uniform_corner_to_corner() {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [3, 3, 2]).unwrap();
        let g = ScalarGrid3D::constant(spec, 1.0);
        let p = dijkstra_grid(&g, [0, 0, 0], [2, 2, 0]).unwrap();
        assert!((p.cost - 20.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.nodes.len(), 3);
    }

    #[test]
    fn adjacent_terminals_use_one_edge() {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [3, 3, 2]).unwrap();
        let p = dijkstra_grid(&ScalarGrid3D::constant(spec, 2.0), [0, 0, 0], [1, 1, 1]).unwrap();
        assert_eq!(p.nodes.len(), 2);
        assert!((p.cost - 2.0 * 300f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_terminals() {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [3, 3, 2]).unwrap();
        let g = ScalarGrid3D::constant(spec, 1.0);
        assert!(dijkstra_grid(&g, [0, 0, 0], [0, 0, 0]).is_err());
        assert!(dijkstra_grid(&g, [0, 0, 0], [3, 0, 0]).is_err());
    }

    #[test]
    fn impassable_wall_is_unreachable() {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [3, 3, 2]).unwrap();
        let g = ScalarGrid3D::constant(spec, 1.0);
        let wall: Vec<bool> = (0..spec.len()).map(|i| spec.ijk(i)[0] == 1).collect();
        assert!(matches!(
            dijkstra_grid_masked(&g, [0, 0, 0], [2, 0, 0], &wall),
            Err(Error::Unreachable)
        ));
    }

    #[test]
    fn smoothing_examples() {
        let s = smooth_polypath(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [10.0, 10.0, 0.0]]).unwrap();
        assert_eq!(s[1], [7.5, 2.5, 0.0]);
        let line: Vec<[f64; 3]> = (0..6).map(|i| [i as f64 * 10.0, 0.0, 5.0]).collect();
        assert_eq!(smooth_polypath(&line).unwrap().points(), line.as_slice());
    }

    /// Exhaustive simple-path search over the grid graph.
    fn brute_force(cost: &ScalarGrid3D, s: usize, g: usize) -> f64 {
        let spec = cost.spec();
        let n = spec.len();
        let mut adj = vec![Vec::new(); n];
        for (u, edges) in adj.iter_mut().enumerate() {
            for v in 0..n {
                let (a, b) = (spec.ijk(u), spec.ijk(v));
                let near = (0..3).all(|k| a[k].abs_diff(b[k]) <= 1);
                if u != v && near {
                    let (p, q) = (spec.position(u), spec.position(v));
                    let len =
                        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                            .sqrt();
                    edges.push((v, len * 0.5 * (cost.values()[u] + cost.values()[v])));
                }
            }
        }
        fn dfs(
            u: usize,
            g: usize,
            acc: f64,
            seen: &mut Vec<bool>,
            adj: &[Vec<(usize, f64)>],
            best: &mut f64,
        ) {
            if acc >= *best {
                return;
            }
            if u == g {
                *best = acc;
                return;
            }
            for &(v, w) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    dfs(v, g, acc + w, seen, adj, best);
                    seen[v] = false;
                }
            }
        }
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut best = f64::INFINITY;
        dfs(s, g, 0.0, &mut seen, &adj, &mut best);
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let counts = [rng.random_range(2..=4), rng.random_range(2..=4), 2];
            let spec = GridSpec3D::new([0.0; 3], [10.0, 10.0, 5.0], counts).unwrap();
            let values = (0..spec.len())
                .map(|_| rng.random_range(0.0..5.0))
                .collect();
            let g = ScalarGrid3D::new(spec, values).unwrap();
            let goal = [counts[0] - 1, counts[1] - 1, 1];
            let p = dijkstra_grid(&g, [0, 0, 0], goal).unwrap();
            assert_eq!(p.cost, brute_force(&g, 0, spec.len() - 1));
        }
    }

    #[test]
    fn routes_through_wall_gap() {
        let spec = GridSpec3D::new([0.0; 3], [10.0; 3], [4, 4, 2]).unwrap();
        let g = ScalarGrid3D::from_fn(spec, |p| {
            if p[0] == 20.0 && !(p[1] == 30.0 && p[2] == 0.0) {
                100.0
            } else {
                1.0
            }
        })
        .unwrap();
        let path = dijkstra_grid(&g, [0, 0, 0], [3, 0, 0]).unwrap();
        assert!(path
            .points
            .iter()
            .filter(|p| p[0] == 20.0)
            .all(|p| p[1] == 30.0 && p[2] == 0.0));
    }
}
