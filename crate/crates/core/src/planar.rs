//! Combinatorial planar embeddings (rotation systems), metric triangulation,
//! fundamental-cycle separators and the grid-plus-apex lower-bound family.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs, ShortestPathTree, WeightedGraph};

/// For each vertex, the counter-clockwise cyclic order of its incident edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSystem {
    pub order: Vec<Vec<usize>>,
}

/// Darts: `2e` runs `edge.u -> edge.v`, `2e + 1` runs back.
#[inline]
fn dart_tail(g: &WeightedGraph, d: usize) -> usize {
    let e = g.edge(d / 2);
    if d % 2 == 0 {
        e.u
    } else {
        e.v
    }
}

#[inline]
fn dart_head(g: &WeightedGraph, d: usize) -> usize {
    dart_tail(g, d ^ 1)
}

#[inline]
fn dart_from(g: &WeightedGraph, x: usize, e: usize) -> usize {
    if g.edge(e).u == x {
        2 * e
    } else {
        2 * e + 1
    }
}

/// A face as the closed walk of darts bounding it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub darts: Vec<usize>,
}

impl Face {
    pub fn len(&self) -> usize {
        self.darts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.darts.is_empty()
    }

    pub fn vertices(&self, g: &WeightedGraph) -> Vec<usize> {
        self.darts.iter().map(|&d| dart_tail(g, d)).collect()
    }
}

impl RotationSystem {
    /// Restricts the rotation to the edges kept by `edge_map` (old index ->
    /// new index) and the vertices kept by `vertex_map`.
    pub fn restrict(
        &self,
        vertex_map: &[Option<usize>],
        edge_map: &[Option<usize>],
        n_new: usize,
    ) -> RotationSystem {
        let mut order = vec![Vec::new(); n_new];
        for (v, rot) in self.order.iter().enumerate() {
            if let Some(nv) = vertex_map[v] {
                order[nv] = rot.iter().filter_map(|&e| edge_map[e]).collect();
            }
        }
        RotationSystem { order }
    }

    fn positions(&self, g: &WeightedGraph) -> Result<Vec<usize>> {
        if self.order.len() != g.n() {
            return Err(Error::InvalidRotation(format!(
                "rotation has {} vertices, graph has {}",
                self.order.len(),
                g.n()
            )));
        }
        let mut pos = vec![usize::MAX; 2 * g.m()];
        for (x, rot) in self.order.iter().enumerate() {
            for (i, &e) in rot.iter().enumerate() {
                if e >= g.m() || !g.edge(e).has(x) {
                    return Err(Error::InvalidRotation(format!("edge {e} listed at vertex {x}")));
                }
                let d = dart_from(g, x, e);
                if pos[d] != usize::MAX {
                    return Err(Error::InvalidRotation(format!("edge {e} repeated at vertex {x}")));
                }
                pos[d] = i;
            }
        }
        if let Some(d) = pos.iter().position(|&p| p == usize::MAX) {
            return Err(Error::InvalidRotation(format!(
                "edge {} missing at vertex {}",
                d / 2,
                dart_tail(g, d)
            )));
        }
        Ok(pos)
    }
}

/// Face successor: leave the head of `d` along the edge following `d`'s edge in
/// the head's rotation.
fn next_dart(g: &WeightedGraph, rot: &RotationSystem, pos: &[usize], d: usize) -> usize {
    let x = dart_head(g, d);
    let r = &rot.order[x];
    let i = pos[d ^ 1];
    dart_from(g, x, r[(i + 1) % r.len()])
}

fn trace_unchecked(g: &WeightedGraph, rot: &RotationSystem, pos: &[usize]) -> Vec<Face> {
    let mut seen = vec![false; 2 * g.m()];
    let mut faces = Vec::new();
    for start in 0..2 * g.m() {
        if seen[start] {
            continue;
        }
        let mut darts = Vec::new();
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            darts.push(d);
            d = next_dart(g, rot, pos, d);
        }
        faces.push(Face { darts });
    }
    faces
}

/// Traces the faces of a connected graph and checks Euler's formula for the sphere.
pub fn trace_faces(g: &WeightedGraph, rot: &RotationSystem) -> Result<Vec<Face>> {
    let pos = rot.positions(g)?;
    if !g.is_connected() {
        return Err(Error::InvalidGraph("embedding requires a connected graph".into()));
    }
    let faces = trace_unchecked(g, rot, &pos);
    let f = if g.m() == 0 { 1 } else { faces.len() as i64 };
    let euler = g.n() as i64 - g.m() as i64 + f;
    if euler != 2 {
        return Err(Error::NotPlanar { euler });
    }
    Ok(faces)
}

/// Adds edges until every face is a triangle. Each new edge `(u, v)` gets weight
/// `d_g(u, v)`, so shortest-path distances are unchanged. Original edges keep
/// their indices; new edges are appended.
pub fn metric_triangulate(
    g: &WeightedGraph,
    rot: &RotationSystem,
) -> Result<(WeightedGraph, RotationSystem)> {
    let faces = trace_faces(g, rot)?;
    let mut out = g.clone();
    let mut rot = rot.clone();
    if g.n() < 3 {
        return Ok((out, rot));
    }
    let oracle = all_pairs(g)?;
    let mut stack: Vec<Vec<usize>> = faces.into_iter().rev().map(|f| f.darts).collect();
    while let Some(face) = stack.pop() {
        let k = face.len();
        if k <= 3 {
            continue;
        }
        let verts: Vec<usize> = face.iter().map(|&d| dart_tail(&out, d)).collect();
        let ok = |i: usize, j: usize, out: &WeightedGraph| {
            verts[i] != verts[j] && out.edge_between(verts[i], verts[j]).is_none()
        };
        let chord = (0..k)
            .map(|i| (i, (i + 2) % k))
            .find(|&(i, j)| ok(i, j, &out))
            .or_else(|| {
                (0..k)
                    .flat_map(|i| (i + 2..k).map(move |j| (i, j)))
                    .filter(|&(i, j)| !(i == 0 && j == k - 1))
                    .find(|&(i, j)| ok(i, j, &out))
            });
        let Some((i, j)) = chord else {
            return Err(Error::Consistency(format!("no chord available in face of length {k}")));
        };
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let (a, b) = (verts[i], verts[j]);
        let e = out.add_edge(a, b, oracle.dist(a, b))?;
        let e_in_a = face[(i + k - 1) % k] / 2;
        let e_in_b = face[(j + k - 1) % k] / 2;
        for (x, after) in [(a, e_in_a), (b, e_in_b)] {
            let r = &mut rot.order[x];
            let p = r.iter().position(|&y| y == after).expect("edge in rotation");
            r.insert(p + 1, e);
        }
        let ab = dart_from(&out, a, e);
        let mut first: Vec<usize> = face[..i].to_vec();
        first.push(ab);
        first.extend_from_slice(&face[j..]);
        let mut second: Vec<usize> = face[i..j].to_vec();
        second.push(ab ^ 1);
        stack.push(second);
        stack.push(first);
    }
    Ok((out, rot))
}

/// A fundamental cycle of a spanning tree and the partition it induces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalCycle {
    pub non_tree_edge: usize,
    pub u: usize,
    pub v: usize,
    /// Tree path from the root to `u` (inclusive).
    pub path_u: Vec<usize>,
    pub path_v: Vec<usize>,
    /// Cycle vertices in cyclic order, common prefix trimmed.
    pub cycle: Vec<usize>,
    pub interior: Vec<usize>,
    pub exterior: Vec<usize>,
    pub interior_weight: u64,
    pub exterior_weight: u64,
}

impl FundamentalCycle {
    /// Sides of the cycle: `Some(true)` interior, `Some(false)` exterior, `None` on the cycle.
    fn split(
        g: &WeightedGraph,
        rot: &RotationSystem,
        cycle: &[usize],
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let n = g.n();
        let mut on_cycle = vec![false; n];
        for &c in cycle {
            on_cycle[c] = true;
        }
        let mut comp = vec![usize::MAX; n];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for s in 0..n {
            if on_cycle[s] || comp[s] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut members = vec![s];
            comp[s] = id;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for &(y, _) in g.neighbors(x) {
                    if !on_cycle[y] && comp[y] == usize::MAX {
                        comp[y] = id;
                        members.push(y);
                        queue.push_back(y);
                    }
                }
            }
            comps.push(members);
        }
        let mut side: Vec<Option<bool>> = vec![None; comps.len()];
        let l = cycle.len();
        for i in 0..l {
            let c = cycle[i];
            let prev = g.edge_between(c, cycle[(i + l - 1) % l]).expect("cycle edge");
            let next = g.edge_between(c, cycle[(i + 1) % l]).expect("cycle edge");
            let r = &rot.order[c];
            let start = r.iter().position(|&e| e == next).expect("rotation");
            let mut inside = true;
            for t in 1..r.len() {
                let e = r[(start + t) % r.len()];
                if e == prev {
                    inside = false;
                    continue;
                }
                let y = g.edge(e).other(c);
                if on_cycle[y] {
                    continue;
                }
                match side[comp[y]] {
                    None => side[comp[y]] = Some(inside),
                    Some(s) if s != inside => {
                        return Err(Error::Consistency(
                            "component attaches to both sides of a cycle".into(),
                        ))
                    }
                    _ => {}
                }
            }
        }
        let (mut interior, mut exterior) = (Vec::new(), Vec::new());
        for (id, members) in comps.into_iter().enumerate() {
            match side[id] {
                Some(true) => interior.extend(members),
                _ => exterior.extend(members),
            }
        }
        interior.sort_unstable();
        exterior.sort_unstable();
        Ok((interior, exterior))
    }
}

/// Builds the fundamental cycle of a non-tree edge.
pub fn fundamental_cycle(
    g: &WeightedGraph,
    rot: &RotationSystem,
    tree: &ShortestPathTree,
    edge: usize,
    weight: &[u64],
) -> Result<FundamentalCycle> {
    let e = g.edge(edge);
    let path_u = tree.path_to(e.u);
    let path_v = tree.path_to(e.v);
    let common = path_u.iter().zip(&path_v).take_while(|(a, b)| a == b).count();
    if common == 0 {
        return Err(Error::InvalidParameter("tree does not span the graph".into()));
    }
    let mut cycle: Vec<usize> = path_u[common - 1..].to_vec();
    cycle.extend(path_v[common..].iter().rev());
    let (interior, exterior) = FundamentalCycle::split(g, rot, &cycle)?;
    let interior_weight = interior.iter().map(|&x| weight[x]).sum();
    let exterior_weight = exterior.iter().map(|&x| weight[x]).sum();
    Ok(FundamentalCycle {
        non_tree_edge: edge,
        u: e.u,
        v: e.v,
        path_u,
        path_v,
        cycle,
        interior,
        exterior,
        interior_weight,
        exterior_weight,
    })
}

/// First fundamental cycle, in edge order, whose interior and exterior each
/// carry at most two thirds of the total vertex weight.
pub fn fundamental_cycle_separator(
    g: &WeightedGraph,
    rot: &RotationSystem,
    tree: &ShortestPathTree,
    weight: &[u64],
) -> Result<FundamentalCycle> {
    let faces = trace_faces(g, rot)?;
    if g.n() >= 3 {
        if let Some((i, f)) = faces.iter().enumerate().find(|(_, f)| f.len() != 3) {
            return Err(Error::NotTriangulated(i, f.len()));
        }
    }
    let total: u64 = weight.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("total vertex weight is zero".into()));
    }
    let mut in_tree = vec![false; g.m()];
    for e in tree.tree_edges() {
        in_tree[e] = true;
    }
    for e in (0..g.m()).filter(|&e| !in_tree[e]) {
        let fc = fundamental_cycle(g, rot, tree, e, weight)?;
        if 3 * fc.interior_weight <= 2 * total && 3 * fc.exterior_weight <= 2 * total {
            return Ok(fc);
        }
    }
    Err(Error::Consistency("no balanced fundamental cycle found".into()))
}

/// Vertex of minimum eccentricity (smallest id on ties).
pub fn center_vertex(oracle: &crate::graph::DistanceOracle) -> usize {
    (0..oracle.n()).min_by_key(|&v| (oracle.eccentricity(v), v)).unwrap_or(0)
}

/// The `k`-subdivided `n x n` grid with an apex adjacent to every grid vertex.
#[derive(Debug, Clone)]
pub struct GridApex {
    pub graph: WeightedGraph,
    /// Grid vertex `(r, c)` is `grid[r * n + c]`.
    pub grid: Vec<usize>,
    pub apex: usize,
    /// Each edge of the unsubdivided graph as `(a, b, internal path vertices a -> b)`.
    pub subdivisions: Vec<(usize, usize, Vec<usize>)>,
}

pub fn grid_apex_generator(n: usize, k: usize) -> Result<GridApex> {
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be at least 1".into()));
    }
    let grid: Vec<usize> = (0..n * n).collect();
    let apex = n * n;
    let mut base = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                base.push((r * n + c, r * n + c + 1));
            }
            if r + 1 < n {
                base.push((r * n + c, (r + 1) * n + c));
            }
        }
    }
    base.extend((0..n * n).map(|v| (v, apex)));
    let total = n * n + 1 + base.len() * (k - 1);
    let mut graph = WeightedGraph::new(total, 0, std::iter::empty())?;
    let mut next = n * n + 1;
    let mut subdivisions = Vec::with_capacity(base.len());
    for (a, b) in base {
        let inner: Vec<usize> = (next..next + k - 1).collect();
        next += k - 1;
        let mut prev = a;
        for &x in inner.iter().chain(std::iter::once(&b)) {
            graph.add_edge(prev, x, 1)?;
            prev = x;
        }
        subdivisions.push((a, b, inner));
    }
    Ok(GridApex { graph, grid, apex, subdivisions })
}
