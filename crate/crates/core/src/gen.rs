//! Instance generators. Every planar family is built from straight-line
//! drawings, so the rotation system is read off the coordinates.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Ticks, WeightedGraph};
use crate::planar::RotationSystem;

/// A graph with a planar rotation system and the drawing it came from.
#[derive(Debug, Clone)]
pub struct PlanarInstance {
    pub graph: WeightedGraph,
    pub rotation: RotationSystem,
    pub coords: Vec<(f64, f64)>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds an instance from a straight-line drawing.
pub fn from_drawing(coords: Vec<(f64, f64)>, edges: &[(usize, usize, Ticks)]) -> PlanarInstance {
    let n = coords.len();
    let graph = WeightedGraph::new(n, 0, edges.iter().copied()).expect("valid drawing");
    let mut order = vec![Vec::new(); n];
    for v in 0..n {
        let mut inc: Vec<(f64, usize)> = graph
            .neighbors(v)
            .iter()
            .map(|&(y, e)| {
                let (dx, dy) = (coords[y].0 - coords[v].0, coords[y].1 - coords[v].1);
                (dy.atan2(dx), e)
            })
            .collect();
        inc.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        order[v] = inc.into_iter().map(|(_, e)| e).collect();
    }
    PlanarInstance { graph, rotation: RotationSystem { order }, coords }
}

/// Unit-weight `rows x cols` grid; vertex `(r, c)` is `r * cols + c`.
pub fn grid(rows: usize, cols: usize) -> PlanarInstance {
    let mut coords = Vec::new();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            coords.push((c as f64, r as f64));
            if c + 1 < cols {
                edges.push((r * cols + c, r * cols + c + 1, 1));
            }
            if r + 1 < rows {
                edges.push((r * cols + c, (r + 1) * cols + c, 1));
            }
        }
    }
    from_drawing(coords, &edges)
}

pub fn cycle(n: usize) -> PlanarInstance {
    let coords = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1)).collect();
    from_drawing(coords, &edges)
}

pub fn path(n: usize) -> PlanarInstance {
    let coords = (0..n).map(|i| (i as f64, 0.0)).collect();
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1)).collect();
    from_drawing(coords, &edges)
}

/// Star with center 0 and `leaves` unit spokes.
pub fn star(leaves: usize) -> PlanarInstance {
    let mut coords = vec![(0.0, 0.0)];
    for i in 0..leaves {
        let t = std::f64::consts::TAU * i as f64 / leaves.max(1) as f64;
        coords.push((t.cos(), t.sin()));
    }
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i, 1)).collect();
    from_drawing(coords, &edges)
}

pub fn k4() -> PlanarInstance {
    let coords = vec![(0.0, 0.0), (4.0, 0.0), (2.0, 4.0), (2.0, 1.5)];
    let edges = [(0, 1, 1), (1, 2, 1), (2, 0, 1), (0, 3, 1), (1, 3, 1), (2, 3, 1)];
    from_drawing(coords, &edges)
}

/// Random connected planar graph on `n` vertices: a jittered grid with random
/// cell diagonals, thinned while a BFS spanning tree is kept. Weights in `1..=max_w`.
pub fn random_planar_weighted(n: usize, seed: u64, max_w: Ticks) -> PlanarInstance {
    let mut rng = rng(seed);
    let rows = ((n as f64).sqrt().floor() as usize).max(1);
    let cols = n.div_ceil(rows);
    let id = |r: usize, c: usize| r * cols + c;
    let coords: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            (c as f64 + rng.gen_range(-0.15..0.15), r as f64 + rng.gen_range(-0.15..0.15))
        })
        .collect();
    let mut cand = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let a = id(r, c);
            if a >= n {
                continue;
            }
            if c + 1 < cols && id(r, c + 1) < n {
                cand.push((a, id(r, c + 1)));
            }
            if id(r + 1, c) < n {
                cand.push((a, id(r + 1, c)));
            }
            if c + 1 < cols && id(r + 1, c + 1) < n {
                if rng.gen_bool(0.5) {
                    cand.push((a, id(r + 1, c + 1)));
                } else {
                    cand.push((id(r, c + 1), id(r + 1, c)));
                }
            }
        }
    }
    // BFS tree over the candidate edges keeps the graph connected.
    let mut adj = vec![Vec::new(); n];
    for (i, &(a, b)) in cand.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut keep = vec![false; cand.len()];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &(y, i) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                keep[i] = true;
                queue.push_back(y);
            }
        }
    }
    let mut edges = Vec::new();
    for (i, &(a, b)) in cand.iter().enumerate() {
        if keep[i] || rng.gen_bool(0.7) {
            edges.push((a, b, rng.gen_range(1..=max_w)));
        }
    }
    from_drawing(coords, &edges)
}

pub fn random_planar(n: usize, seed: u64) -> PlanarInstance {
    random_planar_weighted(n, seed, 5)
}

/// Random stacked triangulation: repeatedly drop a vertex inside a random
/// triangular face. Weights are rounded Euclidean lengths (at least 1).
pub fn random_triangulation(n: usize, seed: u64) -> PlanarInstance {
    assert!(n >= 3);
    let mut rng = rng(seed);
    let mut coords = vec![(0.0, 0.0), (100.0, 0.0), (50.0, 90.0)];
    let mut edges = vec![(0, 1), (1, 2), (2, 0)];
    let mut tris = vec![[0usize, 1, 2]];
    while coords.len() < n {
        let t = rng.gen_range(0..tris.len());
        let [a, b, c] = tris.swap_remove(t);
        let (mut x, mut y) = (rng.gen_range(0.1..1.0f64), rng.gen_range(0.1..1.0f64));
        if x + y > 1.0 {
            (x, y) = (1.0 - x, 1.0 - y);
        }
        let z = 1.0 - x - y;
        let (x, y, z) = ((x + 0.05) / 1.15, (y + 0.05) / 1.15, (z + 0.05) / 1.15);
        let p = (
            x * coords[a].0 + y * coords[b].0 + z * coords[c].0,
            x * coords[a].1 + y * coords[b].1 + z * coords[c].1,
        );
        let v = coords.len();
        coords.push(p);
        edges.extend([(a, v), (b, v), (c, v)]);
        tris.extend([[a, b, v], [b, c, v], [c, a, v]]);
    }
    let weighted: Vec<_> = edges
        .iter()
        .map(|&(a, b)| {
            let (dx, dy) = (coords[a].0 - coords[b].0, coords[a].1 - coords[b].1);
            (a, b, ((dx * dx + dy * dy).sqrt().round() as Ticks).max(1))
        })
        .collect();
    from_drawing(coords, &weighted)
}

/// Random tree on `n` vertices drawn as a layered tree (planar by construction).
pub fn random_tree(n: usize, seed: u64, max_w: Ticks) -> PlanarInstance {
    let mut rng = rng(seed);
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    for v in 1..n {
        parent[v] = rng.gen_range(0..v);
        depth[v] = depth[parent[v]] + 1;
    }
    // Lay out leaves left to right in DFS order so edges never cross.
    let mut children = vec![Vec::new(); n];
    for v in 1..n {
        children[parent[v]].push(v);
    }
    let mut x = vec![0.0; n];
    let mut next = 0.0;
    fn place(v: usize, ch: &[Vec<usize>], x: &mut [f64], next: &mut f64) {
        if ch[v].is_empty() {
            x[v] = *next;
            *next += 1.0;
            return;
        }
        for &c in &ch[v] {
            place(c, ch, x, next);
        }
        x[v] = (x[ch[v][0]] + x[*ch[v].last().unwrap()]) / 2.0;
    }
    if n > 0 {
        place(0, &children, &mut x, &mut next);
    }
    let coords = (0..n).map(|v| (x[v], -(depth[v] as f64))).collect();
    let edges: Vec<_> = (1..n).map(|v| (parent[v], v, rng.gen_range(1..=max_w))).collect();
    from_drawing(coords, &edges)
}

/// Cycle with random weights in `1..=max_w`.
pub fn random_cycle(n: usize, seed: u64, max_w: Ticks) -> PlanarInstance {
    let mut rng = rng(seed);
    let base = cycle(n);
    let edges: Vec<_> =
        base.graph.edges().iter().map(|e| (e.u, e.v, rng.gen_range(1..=max_w))).collect();
    from_drawing(base.coords, &edges)
}

/// `total` unit demands dropped uniformly on the vertices other than `depot`
/// (on the depot itself when it is the only vertex).
pub fn random_demand(n: usize, depot: usize, total: u32, seed: u64) -> Vec<u32> {
    let mut rng = rng(seed ^ 0x5eed_d3a4);
    let pool: Vec<usize> = (0..n).filter(|&v| v != depot || n == 1).collect();
    let mut d = vec![0; n];
    for _ in 0..total {
        d[pool[rng.gen_range(0..pool.len())]] += 1;
    }
    d
}

/// Picks `count` distinct vertices from `pool` uniformly.
pub fn sample_vertices(pool: &[usize], count: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut p = pool.to_vec();
    p.shuffle(rng);
    p.truncate(count);
    p
}
