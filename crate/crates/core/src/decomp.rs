//! Tree and branch decompositions.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Bags over graph vertices joined by tree edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TreeDecomposition {
    pub bags: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
}

/// First violated condition of a tree decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TdViolation {
    NotATree(String),
    VertexUncovered(usize),
    EdgeUncovered(usize, usize),
    VertexDisconnected(usize),
}

impl std::fmt::Display for TdViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TdViolation::NotATree(s) => write!(f, "bag graph is not a tree: {s}"),
            TdViolation::VertexUncovered(v) => write!(f, "vertex {v} is in no bag"),
            TdViolation::EdgeUncovered(u, v) => write!(f, "edge ({u},{v}) is in no bag"),
            TdViolation::VertexDisconnected(v) => {
                write!(f, "bags containing vertex {v} do not form a subtree")
            }
        }
    }
}

impl TreeDecomposition {
    /// Max bag size minus one; `-1` for no bags.
    pub fn width(&self) -> i64 {
        self.bags.iter().map(|b| b.len() as i64).max().unwrap_or(0) - 1
    }

    pub fn validate(&self, g: &WeightedGraph) -> std::result::Result<(), TdViolation> {
        validate_tree_decomposition(g, self)
    }
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        self.0[a.max(b)] = a.min(b);
        true
    }
}

/// Checks tree shape, vertex coverage, edge coverage and subtree connectivity,
/// in that order, and reports the first violation.
pub fn validate_tree_decomposition(
    g: &WeightedGraph,
    td: &TreeDecomposition,
) -> std::result::Result<(), TdViolation> {
    let k = td.bags.len();
    if k == 0 {
        return if g.n() == 0 { Ok(()) } else { Err(TdViolation::VertexUncovered(0)) };
    }
    if td.edges.len() + 1 != k {
        return Err(TdViolation::NotATree(format!("{} bags but {} edges", k, td.edges.len())));
    }
    let mut dsu = Dsu::new(k);
    for &(a, b) in &td.edges {
        if a >= k || b >= k {
            return Err(TdViolation::NotATree(format!("edge ({a},{b}) out of range")));
        }
        if !dsu.union(a, b) {
            return Err(TdViolation::NotATree(format!("edge ({a},{b}) closes a cycle")));
        }
    }
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (i, bag) in td.bags.iter().enumerate() {
        for &v in bag {
            if v < g.n() && holders[v].last() != Some(&i) {
                holders[v].push(i);
            }
        }
    }
    if let Some(v) = (0..g.n()).find(|&v| holders[v].is_empty()) {
        return Err(TdViolation::VertexUncovered(v));
    }
    let sets: Vec<BTreeSet<usize>> = td.bags.iter().map(|b| b.iter().copied().collect()).collect();
    for e in g.edges() {
        if !holders[e.u].iter().any(|&i| sets[i].contains(&e.v)) {
            return Err(TdViolation::EdgeUncovered(e.u, e.v));
        }
    }
    // Bags holding v form a subtree iff the tree edges among them number |holders| - 1.
    let mut inner = vec![0usize; g.n()];
    for &(a, b) in &td.edges {
        for &v in &sets[a] {
            if v < g.n() && sets[b].contains(&v) {
                inner[v] += 1;
            }
        }
    }
    for v in 0..g.n() {
        if inner[v] + 1 != holders[v].len() {
            return Err(TdViolation::VertexDisconnected(v));
        }
    }
    Ok(())
}

/// Tree decomposition from a min-degree elimination order (ties to the smaller id).
pub fn min_degree_decomposition(g: &WeightedGraph) -> (TreeDecomposition, Vec<usize>) {
    let n = g.n();
    let mut nb: Vec<BTreeSet<usize>> =
        (0..n).map(|v| g.neighbors(v).iter().map(|&(y, _)| y).collect()).collect();
    let mut heap: BTreeSet<(usize, usize)> = (0..n).map(|v| (nb[v].len(), v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut pos = vec![usize::MAX; n];
    let mut bags = Vec::with_capacity(n);
    while let Some((_, v)) = heap.pop_first() {
        pos[v] = order.len();
        order.push(v);
        let ns: Vec<usize> = nb[v].iter().copied().collect();
        for &a in &ns {
            heap.remove(&(nb[a].len(), a));
            nb[a].remove(&v);
        }
        for (i, &a) in ns.iter().enumerate() {
            for &b in &ns[i + 1..] {
                nb[a].insert(b);
                nb[b].insert(a);
            }
        }
        for &a in &ns {
            heap.insert((nb[a].len(), a));
        }
        let mut bag = ns;
        bag.push(v);
        bags.push(bag);
    }
    // Parent of bag i: the bag of its earliest-eliminated later neighbour.
    let mut edges = Vec::new();
    let mut roots = Vec::new();
    for (i, bag) in bags.iter().enumerate() {
        let v = order[i];
        match bag.iter().filter(|&&a| a != v).map(|&a| pos[a]).min() {
            Some(p) => edges.push((i, p)),
            None => roots.push(i),
        }
    }
    // A disconnected graph yields a forest; chain the roots.
    for w in roots.windows(2) {
        edges.push((w[0], w[1]));
    }
    for bag in &mut bags {
        bag.sort_unstable();
    }
    (TreeDecomposition { bags, edges }, order)
}

/// Node of a rooted binary branch decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchNode {
    Leaf(usize),
    Inner(usize, usize),
}

/// Rooted binary tree whose leaves are the graph edges.
#[derive(Debug, Clone)]
pub struct BranchDecomposition {
    nodes: Vec<BranchNode>,
    root: usize,
    parent: Vec<Option<usize>>,
    portals: Vec<Vec<usize>>,
    /// Vertices incident to the cluster, sorted.
    touched: Vec<Vec<usize>>,
    leaf_of_edge: Vec<usize>,
}

impl BranchDecomposition {
    /// Validates the shape against `g` and computes portal sets.
    pub fn new(g: &WeightedGraph, nodes: Vec<BranchNode>, root: usize) -> Result<Self> {
        let k = nodes.len();
        let bad = |s: String| Error::InvalidDecomposition(s);
        if root >= k {
            return Err(bad(format!("root {root} out of range")));
        }
        let mut parent = vec![None; k];
        let mut leaf_of_edge = vec![usize::MAX; g.m()];
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                BranchNode::Leaf(e) => {
                    if e >= g.m() {
                        return Err(bad(format!("leaf {i} holds unknown edge {e}")));
                    }
                    if leaf_of_edge[e] != usize::MAX {
                        return Err(bad(format!("edge {e} appears in two leaves")));
                    }
                    leaf_of_edge[e] = i;
                }
                BranchNode::Inner(a, b) => {
                    for c in [a, b] {
                        if c >= k || c == i || parent[c].is_some() || c == root {
                            return Err(bad(format!("node {i} has invalid child {c}")));
                        }
                        parent[c] = Some(i);
                    }
                    if a == b {
                        return Err(bad(format!("node {i} repeats child {a}")));
                    }
                }
            }
        }
        if let Some(e) = leaf_of_edge.iter().position(|&l| l == usize::MAX) {
            return Err(bad(format!("edge {e} is in no leaf")));
        }
        // Bottom-up order; also detects nodes unreachable from the root.
        let mut order = Vec::with_capacity(k);
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            order.push(x);
            if let BranchNode::Inner(a, b) = nodes[x] {
                stack.push(a);
                stack.push(b);
            }
        }
        if order.len() != k {
            return Err(bad(format!("{} of {} nodes unreachable from the root", k - order.len(), k)));
        }
        let deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
        let mut portals = vec![Vec::new(); k];
        let mut touched = vec![Vec::new(); k];
        let mut acc: Vec<Option<HashMap<usize, usize>>> = vec![None; k];
        for &x in order.iter().rev() {
            let map = match nodes[x] {
                BranchNode::Leaf(e) => {
                    let ed = g.edge(e);
                    HashMap::from([(ed.u, 1), (ed.v, 1)])
                }
                BranchNode::Inner(a, b) => {
                    let (mut big, mut small) = (acc[a].take().unwrap(), acc[b].take().unwrap());
                    if big.len() < small.len() {
                        std::mem::swap(&mut big, &mut small);
                    }
                    for (v, c) in small {
                        *big.entry(v).or_insert(0) += c;
                    }
                    big
                }
            };
            let mut p: Vec<usize> = map.iter().filter(|&(&v, &c)| c < deg[v]).map(|(&v, _)| v).collect();
            p.sort_unstable();
            let mut t: Vec<usize> = map.keys().copied().collect();
            t.sort_unstable();
            portals[x] = p;
            touched[x] = t;
            acc[x] = Some(map);
        }
        Ok(BranchDecomposition { nodes, root, parent, portals, touched, leaf_of_edge })
    }

    pub fn nodes(&self) -> &[BranchNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> BranchNode {
        self.nodes[i]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    /// Boundary vertices of cluster `i`.
    pub fn portals(&self, i: usize) -> &[usize] {
        &self.portals[i]
    }

    /// Vertices incident to some edge of cluster `i`.
    pub fn touched(&self, i: usize) -> &[usize] {
        &self.touched[i]
    }

    pub fn leaf_of_edge(&self, e: usize) -> usize {
        self.leaf_of_edge[e]
    }

    pub fn width(&self) -> usize {
        self.portals.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0)];
        while let Some((x, d)) = stack.pop() {
            best = best.max(d);
            if let BranchNode::Inner(a, b) = self.nodes[x] {
                stack.push((a, d + 1));
                stack.push((b, d + 1));
            }
        }
        best
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, false)];
        while let Some((x, seen)) = stack.pop() {
            match self.nodes[x] {
                BranchNode::Inner(a, b) if !seen => {
                    stack.push((x, true));
                    stack.push((b, false));
                    stack.push((a, false));
                }
                _ => out.push(x),
            }
        }
        out
    }

    /// Leaf edges from left to right.
    pub fn leaf_order(&self) -> Vec<usize> {
        self.postorder()
            .into_iter()
            .filter_map(|x| match self.nodes[x] {
                BranchNode::Leaf(e) => Some(e),
                _ => None,
            })
            .collect()
    }

    /// Edge set of cluster `i`.
    pub fn cluster_edges(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![i];
        while let Some(x) = stack.pop() {
            match self.nodes[x] {
                BranchNode::Leaf(e) => out.push(e),
                BranchNode::Inner(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn to_json(&self) -> ClusterJson {
        fn go(b: &BranchDecomposition, x: usize) -> ClusterJson {
            match b.nodes[x] {
                BranchNode::Leaf(e) => ClusterJson::Leaf { edge: e },
                BranchNode::Inner(l, r) => ClusterJson::Inner { children: Box::new([go(b, l), go(b, r)]) },
            }
        }
        go(self, self.root)
    }

    pub fn from_json(g: &WeightedGraph, tree: &ClusterJson) -> Result<Self> {
        fn go(t: &ClusterJson, nodes: &mut Vec<BranchNode>) -> usize {
            let node = match t {
                ClusterJson::Leaf { edge } => BranchNode::Leaf(*edge),
                ClusterJson::Inner { children } => {
                    let a = go(&children[0], nodes);
                    let b = go(&children[1], nodes);
                    BranchNode::Inner(a, b)
                }
            };
            nodes.push(node);
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let root = go(tree, &mut nodes);
        Self::new(g, nodes, root)
    }
}

/// Nested cluster tree for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClusterJson {
    Leaf { edge: usize },
    Inner { children: Box<[ClusterJson; 2]> },
}

/// Merges `items` into a balanced binary tree and returns its root.
fn merge_balanced(items: &[usize], nodes: &mut Vec<BranchNode>) -> usize {
    match items.len() {
        0 => panic!("merge of nothing"),
        1 => items[0],
        len => {
            let a = merge_balanced(&items[..len / 2], nodes);
            let b = merge_balanced(&items[len / 2..], nodes);
            nodes.push(BranchNode::Inner(a, b));
            nodes.len() - 1
        }
    }
}

/// Branch decomposition from a tree decomposition: every edge goes to the
/// first bag holding both endpoints, and the items of each bag are merged
/// in a balanced way. Width is at most the largest bag size.
pub fn branch_from_tree_decomposition(
    g: &WeightedGraph,
    td: &TreeDecomposition,
) -> Result<BranchDecomposition> {
    if g.m() == 0 {
        return Err(Error::InvalidDecomposition("graph has no edges".into()));
    }
    let k = td.bags.len();
    let sets: Vec<BTreeSet<usize>> = td.bags.iter().map(|b| b.iter().copied().collect()).collect();
    let mut own: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, e) in g.edges().iter().enumerate() {
        let b = (0..k)
            .find(|&b| sets[b].contains(&e.u) && sets[b].contains(&e.v))
            .ok_or_else(|| Error::InvalidDecomposition(format!("edge {i} is in no bag")))?;
        own[b].push(i);
    }
    let mut adj = vec![Vec::new(); k];
    for &(a, b) in &td.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let root_bag = (0..k).find(|&b| !own[b].is_empty()).unwrap();
    let mut nodes: Vec<BranchNode> = Vec::new();
    // Iterative post-order over the bag tree.
    let mut result: Vec<Option<usize>> = vec![None; k];
    let mut visited = vec![false; k];
    let mut stack = vec![(root_bag, usize::MAX, false)];
    while let Some((b, par, done)) = stack.pop() {
        if !done {
            visited[b] = true;
            stack.push((b, par, true));
            for &c in adj[b].iter().rev() {
                if c != par && !visited[c] {
                    stack.push((c, b, false));
                }
            }
            continue;
        }
        let mut items: Vec<usize> = own[b]
            .iter()
            .map(|&e| {
                nodes.push(BranchNode::Leaf(e));
                nodes.len() - 1
            })
            .collect();
        for &c in &adj[b] {
            if c != par {
                if let Some(r) = result[c] {
                    items.push(r);
                }
            }
        }
        if !items.is_empty() {
            result[b] = Some(merge_balanced(&items, &mut nodes));
        }
    }
    let root = result[root_bag].unwrap();
    BranchDecomposition::new(g, nodes, root)
}

/// Edge order of a depth-first traversal from vertex 0; each edge is listed
/// when first scanned.
fn dfs_edge_order(g: &WeightedGraph) -> Vec<usize> {
    let mut seen_v = vec![false; g.n()];
    let mut seen_e = vec![false; g.m()];
    let mut out = Vec::with_capacity(g.m());
    for s in 0..g.n() {
        if seen_v[s] {
            continue;
        }
        seen_v[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            if *i == g.neighbors(x).len() {
                stack.pop();
                continue;
            }
            let (y, e) = g.neighbors(x)[*i];
            *i += 1;
            if seen_e[e] {
                continue;
            }
            seen_e[e] = true;
            out.push(e);
            if !seen_v[y] {
                seen_v[y] = true;
                stack.push((y, 0));
            }
        }
    }
    out
}

/// Balanced tree over a fixed leaf edge order.
pub fn interval_branch_decomposition(g: &WeightedGraph, order: &[usize]) -> Result<BranchDecomposition> {
    if order.is_empty() {
        return Err(Error::InvalidDecomposition("graph has no edges".into()));
    }
    let mut nodes: Vec<BranchNode> = order.iter().map(|&e| BranchNode::Leaf(e)).collect();
    let items: Vec<usize> = (0..order.len()).collect();
    let root = merge_balanced(&items, &mut nodes);
    BranchDecomposition::new(g, nodes, root)
}

/// Best of two cheap constructions: min-degree elimination converted to a
/// branch decomposition, and a balanced tree over a depth-first edge order.
/// Smaller width wins, then smaller depth.
pub fn heuristic_branch_decomposition(g: &WeightedGraph) -> Result<BranchDecomposition> {
    if g.m() == 0 {
        return Err(Error::InvalidDecomposition("graph has no edges".into()));
    }
    let (td, _) = min_degree_decomposition(g);
    let a = branch_from_tree_decomposition(g, &td)?;
    let b = interval_branch_decomposition(g, &dfs_edge_order(g))?;
    if (b.width(), b.depth()) < (a.width(), a.depth()) {
        Ok(b)
    } else {
        Ok(a)
    }
}

/// Depth target `c_depth * ceil(log2 m) + 2`.
pub fn depth_target(m: usize, c_depth: usize) -> usize {
    c_depth * ceil_log2(m) + 2
}

pub fn ceil_log2(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// Rebuilds `b` over its left-to-right leaf order, splitting every interval in
/// its middle third at the point with the fewest portals. Inputs already within
/// the depth target are returned as they are; so is the input when the rebuilt
/// tree would more than double the width.
pub fn balance_depth(g: &WeightedGraph, b: &BranchDecomposition, c_depth: usize) -> BranchDecomposition {
    let m = g.m();
    if b.depth() <= depth_target(m, c_depth) {
        return b.clone();
    }
    let order = b.leaf_order();
    let deg: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut nodes: Vec<BranchNode> = Vec::new();
    let root = split_interval(g, &deg, &order, &mut nodes);
    match BranchDecomposition::new(g, nodes, root) {
        Ok(out) if out.width() <= 2 * b.width() => out,
        _ => b.clone(),
    }
}

/// Incremental portal counter over a growing edge set.
struct Boundary<'a> {
    g: &'a WeightedGraph,
    deg: &'a [usize],
    count: HashMap<usize, usize>,
    portals: usize,
}

impl<'a> Boundary<'a> {
    fn new(g: &'a WeightedGraph, deg: &'a [usize]) -> Self {
        Boundary { g, deg, count: HashMap::new(), portals: 0 }
    }

    fn add(&mut self, e: usize) {
        let ed = self.g.edge(e);
        for v in [ed.u, ed.v] {
            let c = self.count.entry(v).or_insert(0);
            let was = *c > 0 && *c < self.deg[v];
            *c += 1;
            let is = *c < self.deg[v];
            match (was, is) {
                (false, true) => self.portals += 1,
                (true, false) => self.portals -= 1,
                _ => {}
            }
        }
    }
}

fn split_interval(g: &WeightedGraph, deg: &[usize], order: &[usize], nodes: &mut Vec<BranchNode>) -> usize {
    let len = order.len();
    if len == 1 {
        nodes.push(BranchNode::Leaf(order[0]));
        return nodes.len() - 1;
    }
    let mut left = vec![0usize; len + 1];
    let mut bd = Boundary::new(g, deg);
    for (i, &e) in order.iter().enumerate() {
        bd.add(e);
        left[i + 1] = bd.portals;
    }
    let mut right = vec![0usize; len + 1];
    let mut bd = Boundary::new(g, deg);
    for i in (0..len).rev() {
        bd.add(order[i]);
        right[i] = bd.portals;
    }
    let lo = (len / 3).max(1);
    let hi = (len - len / 3).min(len - 1).max(lo);
    let mid = len / 2;
    let k = (lo..=hi)
        .min_by_key(|&k| (left[k].max(right[k]), left[k] + right[k], k.abs_diff(mid), k))
        .unwrap();
    let a = split_interval(g, deg, &order[..k], nodes);
    let b = split_interval(g, deg, &order[k..], nodes);
    nodes.push(BranchNode::Inner(a, b));
    nodes.len() - 1
}

/// Graph with a zero-cost pendant vertex attached to the depot, so the depot
/// seen by the decomposition is a degree-one vertex and never a portal.
#[derive(Debug, Clone)]
pub struct DepotPendant {
    pub graph: WeightedGraph,
    /// The new pendant vertex, which acts as the depot.
    pub depot: usize,
    /// The depot in the original graph.
    pub original_depot: usize,
}

impl DepotPendant {
    pub fn new(g: &WeightedGraph, depot: usize) -> Result<Self> {
        if depot >= g.n() {
            return Err(Error::InvalidParameter(format!("depot {depot} out of range")));
        }
        let mut graph = g.clone();
        let p = graph.add_vertex();
        graph.add_edge(p, depot, 0)?;
        Ok(DepotPendant { graph, depot: p, original_depot: depot })
    }

    /// Maps a vertex of the transformed graph back to the original graph.
    pub fn to_original(&self, v: usize) -> usize {
        if v == self.depot {
            self.original_depot
        } else {
            v
        }
    }
}
