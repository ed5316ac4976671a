//! Weighted undirected graphs with fixed-point edge lengths, shortest paths,
//! nets and the cutting operation.
//!
//! Lengths are integer tick counts. A graph declares a decimal `scale`, so a
//! length of `t` ticks means `t / 10^scale` units. All comparisons happen on
//! ticks and are therefore exact.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point length in ticks.
pub type Ticks = i64;

/// Sentinel for unreachable vertices.
pub const INFINITY: Ticks = i64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: Ticks,
}

impl Edge {
    pub fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }

    pub fn has(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }
}

/// Undirected simple graph with nonnegative fixed-point edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    scale: u32,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    index: HashMap<(usize, usize), usize>,
}

fn key(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl WeightedGraph {
    /// Builds a graph. Parallel edges collapse onto the first occurrence,
    /// keeping the minimum weight.
    pub fn new<I>(n: usize, scale: u32, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Ticks)>,
    {
        let mut g = WeightedGraph {
            n,
            scale,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
            index: HashMap::new(),
        };
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Adds an edge (or lowers the weight of an existing one) and returns its index.
    pub fn add_edge(&mut self, u: usize, v: usize, w: Ticks) -> Result<usize> {
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!(
                "edge ({u},{v}) out of range for {} vertices",
                self.n
            )));
        }
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at {u}")));
        }
        if w < 0 {
            return Err(Error::InvalidGraph(format!("negative weight {w} on ({u},{v})")));
        }
        if let Some(&i) = self.index.get(&key(u, v)) {
            if w < self.edges[i].w {
                self.edges[i].w = w;
            }
            return Ok(i);
        }
        let i = self.edges.len();
        self.edges.push(Edge { u, v, w });
        self.adj[u].push((v, i));
        self.adj[v].push((u, i));
        self.index.insert(key(u, v), i);
        Ok(i)
    }

    /// Adds a fresh isolated vertex and returns its id.
    pub fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.n += 1;
        self.n - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> Edge {
        self.edges[i]
    }

    /// `(neighbor, edge index)` pairs in insertion order.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.index.get(&key(u, v)).copied()
    }

    /// Converts ticks to units using the declared scale.
    pub fn to_units(&self, t: Ticks) -> f64 {
        t as f64 / 10f64.powi(self.scale as i32)
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.component_of(0).iter().all(|&b| b)
    }

    fn component_of(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// Subgraph induced by `vertices` (in the given order). Returns the subgraph
    /// and, for each original edge index kept, its new index.
    pub fn induced(&self, vertices: &[usize]) -> (WeightedGraph, Vec<Option<usize>>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut sub = WeightedGraph::new(vertices.len(), self.scale, std::iter::empty())
            .expect("empty graph");
        let mut map = vec![None; self.m()];
        for (i, e) in self.edges.iter().enumerate() {
            if local[e.u] != usize::MAX && local[e.v] != usize::MAX {
                map[i] = Some(sub.add_edge(local[e.u], local[e.v], e.w).expect("valid edge"));
            }
        }
        (sub, map)
    }
}

/// Single-source shortest-path distances and tree.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<Ticks>,
    /// `(parent vertex, edge index)`; `None` for the source and unreachable vertices.
    pub parent: Vec<Option<(usize, usize)>>,
}

impl ShortestPathTree {
    /// Vertices from the source to `v`, inclusive.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut x = v;
        while let Some((p, _)) = self.parent[x] {
            path.push(p);
            x = p;
        }
        path.reverse();
        path
    }

    pub fn tree_edges(&self) -> Vec<usize> {
        self.parent.iter().flatten().map(|&(_, e)| e).collect()
    }
}

/// Dijkstra from `source`. Unreachable vertices get [`INFINITY`].
/// Ties resolve towards the smaller vertex id, so the tree is deterministic.
pub fn dijkstra(g: &WeightedGraph, source: usize) -> ShortestPathTree {
    let n = g.n();
    let mut dist = vec![INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, x))) = heap.pop() {
        if done[x] {
            continue;
        }
        done[x] = true;
        for &(y, e) in g.neighbors(x) {
            let nd = d + g.edge(e).w;
            if nd < dist[y] {
                dist[y] = nd;
                parent[y] = Some((x, e));
                heap.push(Reverse((nd, y)));
            }
        }
    }
    ShortestPathTree { source, dist, parent }
}

/// All-pairs shortest paths with one fixed min-cost path per ordered pair.
#[derive(Debug, Clone)]
pub struct DistanceOracle {
    n: usize,
    dist: Vec<Ticks>,
    pred: Vec<usize>,
}

impl DistanceOracle {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> Ticks {
        self.dist[u * self.n + v]
    }

    /// The fixed min-cost path from `u` to `v`, both inclusive.
    pub fn path(&self, u: usize, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut x = v;
        while x != u {
            x = self.pred[u * self.n + x];
            path.push(x);
        }
        path.reverse();
        path
    }

    pub fn eccentricity(&self, v: usize) -> Ticks {
        (0..self.n).map(|u| self.dist(v, u)).max().unwrap_or(0)
    }

    pub fn diameter(&self) -> Ticks {
        self.dist.iter().copied().max().unwrap_or(0)
    }
}

/// All-pairs shortest paths by repeated Dijkstra.
pub fn all_pairs(g: &WeightedGraph) -> Result<DistanceOracle> {
    let n = g.n();
    let mut dist = vec![0; n * n];
    let mut pred = vec![0; n * n];
    for s in 0..n {
        let t = dijkstra(g, s);
        for v in 0..n {
            if t.dist[v] == INFINITY {
                return Err(Error::Disconnected(s, v));
            }
            dist[s * n + v] = t.dist[v];
            pred[s * n + v] = t.parent[v].map_or(s, |(p, _)| p);
        }
    }
    Ok(DistanceOracle { n, dist, pred })
}

/// Subgraph without the edges `uv` of positive weight for which some third
/// vertex `x` has `0 < d(u, x)`, `0 < d(x, v)` and `d(u, x) + d(x, v) <= w(uv)`.
/// Every such edge is replaced by strictly shorter pairs, so all distances
/// are preserved. Edge order is kept.
pub fn drop_implied_edges(g: &WeightedGraph) -> Result<WeightedGraph> {
    let d = all_pairs(g)?;
    let kept = g.edges().iter().filter(|e| {
        e.w == 0
            || !(0..g.n()).any(|x| {
                let (a, b) = (d.dist(e.u, x), d.dist(x, e.v));
                a > 0 && b > 0 && a + b <= e.w
            })
    });
    WeightedGraph::new(g.n(), g.scale(), kept.map(|e| (e.u, e.v, e.w)))
}

pub fn diameter(g: &WeightedGraph) -> Result<Ticks> {
    Ok(all_pairs(g)?.diameter())
}

/// Greedy `r`-net of `carrier`: scans the carrier in order and keeps a vertex
/// when it is at distance at least `r` from every vertex kept so far.
pub fn r_net_by<F>(carrier: &[usize], r: Ticks, mut dist: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, usize) -> Ticks,
{
    if r < 0 {
        return Err(Error::InvalidParameter(format!("net radius {r} < 0")));
    }
    let mut net: Vec<usize> = Vec::new();
    for &c in carrier {
        if net.contains(&c) {
            continue;
        }
        if net.iter().all(|&x| dist(x, c) >= r) {
            net.push(c);
        }
    }
    Ok(net)
}

/// Greedy `r`-net of `carrier` with distances measured in `g`.
pub fn r_net(g: &WeightedGraph, carrier: &[usize], r: Ticks) -> Result<Vec<usize>> {
    let mut trees: HashMap<usize, Vec<Ticks>> = HashMap::new();
    r_net_by(carrier, r, |x, c| {
        trees.entry(x).or_insert_with(|| dijkstra(g, x).dist)[c]
    })
}

/// Subgraph `H` to cut along, plus the left/right split of its incident edges.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CutSpec {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CutResult {
    pub graph: WeightedGraph,
    /// False when `H` is separating.
    pub connected: bool,
    /// New vertex id -> original vertex id.
    pub origin: Vec<usize>,
    /// Original `H` vertex -> its left copy (indexed like `spec.vertices`).
    pub left_copy: Vec<usize>,
    pub right_copy: Vec<usize>,
}

/// Cuts `g` along the connected subgraph described by `spec`: `H` is removed,
/// two copies are inserted, and each incident edge is reattached to the left or
/// right copy according to the partition.
pub fn cut_along(g: &WeightedGraph, spec: &CutSpec) -> Result<CutResult> {
    let n = g.n();
    let mut in_h = vec![false; n];
    for &v in &spec.vertices {
        if v >= n || in_h[v] {
            return Err(Error::InvalidCut(format!("bad or repeated vertex {v}")));
        }
        in_h[v] = true;
    }
    if spec.vertices.is_empty() {
        return Err(Error::InvalidCut("empty subgraph".into()));
    }
    let mut in_eh = vec![false; g.m()];
    for &e in &spec.edges {
        let ed = *g.edges().get(e).ok_or_else(|| Error::InvalidCut(format!("edge {e}")))?;
        if !in_h[ed.u] || !in_h[ed.v] {
            return Err(Error::InvalidCut(format!("edge {e} leaves the subgraph")));
        }
        in_eh[e] = true;
    }
    // H must be connected through its own edges.
    let mut seen = vec![false; n];
    let mut stack = vec![spec.vertices[0]];
    seen[spec.vertices[0]] = true;
    while let Some(x) = stack.pop() {
        for &(y, e) in g.neighbors(x) {
            if in_eh[e] && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    if spec.vertices.iter().any(|&v| !seen[v]) {
        return Err(Error::InvalidCut("subgraph is disconnected".into()));
    }

    let mut side = vec![0u8; g.m()];
    for (&e, s) in spec.left.iter().map(|e| (e, 1u8)).chain(spec.right.iter().map(|e| (e, 2u8))) {
        let ed = *g.edges().get(e).ok_or_else(|| Error::InvalidCut(format!("edge {e}")))?;
        if in_h[ed.u] == in_h[ed.v] {
            return Err(Error::InvalidCut(format!(
                "edge {e} must have exactly one endpoint in the subgraph"
            )));
        }
        if side[e] != 0 {
            return Err(Error::InvalidCut(format!("edge {e} is on both sides")));
        }
        side[e] = s;
    }
    let mut incident = 0;
    for (e, ed) in g.edges().iter().enumerate() {
        match (in_h[ed.u], in_h[ed.v]) {
            (true, true) if !in_eh[e] => {
                return Err(Error::InvalidCut(format!("chord {e} is not part of the subgraph")))
            }
            (true, false) | (false, true) => {
                if side[e] == 0 {
                    return Err(Error::InvalidCut(format!("incident edge {e} is unassigned")));
                }
                incident += 1;
            }
            _ => {}
        }
    }
    if incident == 0 {
        return Err(Error::InvalidCut("no incident edges; subgraph is isolated".into()));
    }

    let mut new_id = vec![usize::MAX; n];
    let mut origin = Vec::new();
    for v in (0..n).filter(|&v| !in_h[v]) {
        new_id[v] = origin.len();
        origin.push(v);
    }
    let mut pos = vec![usize::MAX; n];
    for (i, &v) in spec.vertices.iter().enumerate() {
        pos[v] = i;
    }
    let left_copy: Vec<usize> = (0..spec.vertices.len()).map(|i| origin.len() + i).collect();
    origin.extend(spec.vertices.iter().copied());
    let right_copy: Vec<usize> = (0..spec.vertices.len()).map(|i| origin.len() + i).collect();
    origin.extend(spec.vertices.iter().copied());

    let mut out = WeightedGraph::new(origin.len(), g.scale(), std::iter::empty())?;
    for (e, ed) in g.edges().iter().enumerate() {
        match (in_h[ed.u], in_h[ed.v]) {
            (false, false) => {
                out.add_edge(new_id[ed.u], new_id[ed.v], ed.w)?;
            }
            (true, true) => {
                out.add_edge(left_copy[pos[ed.u]], left_copy[pos[ed.v]], ed.w)?;
                out.add_edge(right_copy[pos[ed.u]], right_copy[pos[ed.v]], ed.w)?;
            }
            _ => {
                let (outside, inside) = if in_h[ed.u] { (ed.v, ed.u) } else { (ed.u, ed.v) };
                let copy = if side[e] == 1 { &left_copy } else { &right_copy };
                out.add_edge(new_id[outside], copy[pos[inside]], ed.w)?;
            }
        }
    }
    let connected = out.is_connected();
    Ok(CutResult { graph: out, connected, origin, left_copy, right_copy })
}
