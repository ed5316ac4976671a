//! Portalized separator hierarchy and the additive-distortion embedding built on it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{portalize, OneToManyEmbedding};
use crate::decomp::TreeDecomposition;
use crate::error::{Error, Result};
use crate::graph::{all_pairs, dijkstra, DistanceOracle, ShortestPathTree, Ticks, WeightedGraph};
use crate::planar::{
    center_vertex, fundamental_cycle_separator, metric_triangulate, trace_faces, RotationSystem,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedOptions {
    /// Nodes with at most this many vertices become leaves.
    pub leaf_cap: usize,
    /// Add a bag for every maximal clique of the input.
    pub clique_bags: bool,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions { leaf_cap: 4, clique_bags: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatorNode {
    pub set: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub depth: usize,
    /// The two tree paths from the root vertex; empty for leaves.
    pub paths: Vec<Vec<usize>>,
    /// Vertices of `set` on the separating cycle.
    pub separator: Vec<usize>,
}

impl SeparatorNode {
    pub fn is_leaf(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Hierarchy of vertex sets split by fundamental cycles of one global
/// shortest-path tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatorTree {
    pub root_vertex: usize,
    pub nodes: Vec<SeparatorNode>,
    pub leaf_cap: usize,
}

impl SeparatorTree {
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }
}

/// Splits vertex sets until they have at most `leaf_cap` vertices. A node's
/// separator is computed in the metric triangulation of the subgraph induced
/// by its set together with all tree ancestors of its set.
pub fn build_separator_tree(
    g: &WeightedGraph,
    rot: &RotationSystem,
    leaf_cap: usize,
) -> Result<SeparatorTree> {
    if leaf_cap < 2 {
        return Err(Error::InvalidParameter(format!("leaf_cap {leaf_cap} must be at least 2")));
    }
    trace_faces(g, rot)?;
    let oracle = all_pairs(g)?;
    let c = center_vertex(&oracle);
    let tree = dijkstra(g, c);
    build_with_tree(g, rot, &tree, leaf_cap)
}

fn build_with_tree(
    g: &WeightedGraph,
    rot: &RotationSystem,
    tree: &ShortestPathTree,
    leaf_cap: usize,
) -> Result<SeparatorTree> {
    let n = g.n();
    let mut nodes = vec![SeparatorNode {
        set: (0..n).collect(),
        parent: None,
        children: Vec::new(),
        depth: 0,
        paths: Vec::new(),
        separator: Vec::new(),
    }];
    let mut next = 0;
    let mut mark = vec![false; n];
    let mut local = vec![usize::MAX; n];
    while next < nodes.len() {
        let id = next;
        next += 1;
        if nodes[id].set.len() <= leaf_cap {
            continue;
        }
        // Closure of the set under tree ancestors.
        let mut verts = Vec::new();
        for &v in &nodes[id].set {
            let mut x = v;
            while !mark[x] {
                mark[x] = true;
                verts.push(x);
                match tree.parent[x] {
                    Some((p, _)) => x = p,
                    None => break,
                }
            }
        }
        verts.sort_unstable();
        for (i, &v) in verts.iter().enumerate() {
            local[v] = i;
        }
        let (sub, emap) = g.induced(&verts);
        let vmap: Vec<Option<usize>> =
            (0..n).map(|v| if mark[v] { Some(local[v]) } else { None }).collect();
        let subrot = rot.restrict(&vmap, &emap, verts.len());
        let (tri, trot) = metric_triangulate(&sub, &subrot)?;
        let ltree = ShortestPathTree {
            source: local[tree.source],
            dist: verts.iter().map(|&v| tree.dist[v]).collect(),
            parent: verts
                .iter()
                .map(|&v| tree.parent[v].map(|(p, e)| (local[p], emap[e].expect("tree edge kept"))))
                .collect(),
        };
        let mut in_set = vec![0u64; verts.len()];
        for &v in &nodes[id].set {
            in_set[local[v]] = 1;
        }
        let fc = fundamental_cycle_separator(&tri, &trot, &ltree, &in_set)?;
        let glob = |xs: &[usize]| -> Vec<usize> { xs.iter().map(|&x| verts[x]).collect() };
        let pick = |xs: &[usize]| -> Vec<usize> {
            let mut out: Vec<usize> = xs.iter().filter(|&&x| in_set[x] == 1).map(|&x| verts[x]).collect();
            out.sort_unstable();
            out
        };
        let separator = pick(&fc.cycle);
        let sides = [pick(&fc.interior), pick(&fc.exterior)];
        nodes[id].paths = vec![glob(&fc.path_u), glob(&fc.path_v)];
        nodes[id].separator = separator;
        let depth = nodes[id].depth + 1;
        for side in sides {
            if side.is_empty() {
                continue;
            }
            let child = nodes.len();
            nodes.push(SeparatorNode {
                set: side,
                parent: Some(id),
                children: Vec::new(),
                depth,
                paths: Vec::new(),
                separator: Vec::new(),
            });
            nodes[id].children.push(child);
        }
        for &v in &verts {
            mark[v] = false;
            local[v] = usize::MAX;
        }
    }
    Ok(SeparatorTree { root_vertex: tree.source, nodes, leaf_cap })
}

/// Closed-form width bound `depth * 2 * (floor(2/eps) + 1) + leaf_cap`.
pub fn width_bound(depth: usize, eps: f64, leaf_cap: usize) -> i64 {
    (depth * 2 * ((2.0 / eps).floor() as usize + 1) + leaf_cap) as i64
}

/// Embedding together with the hierarchy it was built from.
#[derive(Debug, Clone)]
pub struct PlanarEmbedding {
    pub embedding: OneToManyEmbedding,
    pub tree: SeparatorTree,
    pub diameter: Ticks,
    /// Portal spacing in ticks.
    pub delta: f64,
    pub width_bound: i64,
}

/// Maximal cliques by Bron-Kerbosch with pivoting; each clique sorted.
pub fn maximal_cliques(g: &WeightedGraph) -> Vec<Vec<usize>> {
    let nb: Vec<BTreeSet<usize>> =
        (0..g.n()).map(|v| g.neighbors(v).iter().map(|&(y, _)| y).collect()).collect();
    let mut out = Vec::new();
    fn bk(
        r: &mut Vec<usize>,
        mut p: BTreeSet<usize>,
        mut x: BTreeSet<usize>,
        nb: &[BTreeSet<usize>],
        out: &mut Vec<Vec<usize>>,
    ) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let pivot = *p.iter().chain(x.iter()).max_by_key(|&&u| (nb[u].intersection(&p).count(), u)).unwrap();
        let cand: Vec<usize> = p.difference(&nb[pivot]).copied().collect();
        for v in cand {
            r.push(v);
            let np = p.intersection(&nb[v]).copied().collect();
            let nx = x.intersection(&nb[v]).copied().collect();
            bk(r, np, nx, nb, out);
            r.pop();
            p.remove(&v);
            x.insert(v);
        }
    }
    bk(&mut Vec::new(), (0..g.n()).collect(), BTreeSet::new(), &nb, &mut out);
    out.sort();
    out
}

/// Planar embedding with additive distortion at most `eps * D`.
///
/// Every node of the separator hierarchy gets a bag holding the portals of the
/// separator paths of the node and all its ancestors, with spacing `eps * D / 2`.
/// Leaf bags also hold the leaf's vertices; each separator vertex that is not a
/// portal gets a bag of its own hung below its node's bag. Copies of a vertex
/// are the connected pieces of the bags holding it, and every bag is a clique
/// in the host with source distances as weights.
pub fn embed_planar_low_tw(
    g: &WeightedGraph,
    rot: &RotationSystem,
    eps: f64,
    opts: EmbedOptions,
) -> Result<PlanarEmbedding> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} must lie in (0, 1)")));
    }
    if opts.leaf_cap < 2 {
        return Err(Error::InvalidParameter(format!("leaf_cap {} must be at least 2", opts.leaf_cap)));
    }
    trace_faces(g, rot)?;
    let oracle = all_pairs(g)?;
    let diameter = oracle.diameter();
    if diameter == 0 {
        if g.n() > 1 {
            return Err(Error::InvalidParameter("graph has diameter 0".into()));
        }
        let tree = SeparatorTree {
            root_vertex: 0,
            nodes: vec![SeparatorNode {
                set: vec![0],
                parent: None,
                children: vec![],
                depth: 0,
                paths: vec![],
                separator: vec![],
            }],
            leaf_cap: opts.leaf_cap,
        };
        return Ok(PlanarEmbedding {
            embedding: OneToManyEmbedding::identity(g),
            tree,
            diameter,
            delta: 0.0,
            width_bound: opts.leaf_cap as i64,
        });
    }
    let c = center_vertex(&oracle);
    let t = dijkstra(g, c);
    let tree = build_with_tree(g, rot, &t, opts.leaf_cap)?;
    let delta = eps * diameter as f64 / 2.0;
    let embedding = assemble(g, &oracle, &tree, delta, opts.clique_bags)?;
    let width_bound = width_bound(tree.depth(), eps, opts.leaf_cap);
    Ok(PlanarEmbedding { embedding, tree, diameter, delta, width_bound })
}

fn assemble(
    g: &WeightedGraph,
    oracle: &DistanceOracle,
    tree: &SeparatorTree,
    delta: f64,
    clique_bags: bool,
) -> Result<OneToManyEmbedding> {
    let dist = |a: usize, b: usize| oracle.dist(a, b);
    // Bags over source vertices; `parent` gives the bag tree.
    let mut bags: Vec<Vec<usize>> = Vec::new();
    let mut parent: Vec<Option<usize>> = Vec::new();
    let mut node_bag = vec![usize::MAX; tree.nodes.len()];
    let mut acc: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
    for (id, node) in tree.nodes.iter().enumerate() {
        let mut portals: BTreeSet<usize> = match node.parent {
            Some(p) => acc[p].iter().copied().collect(),
            None => BTreeSet::new(),
        };
        for path in &node.paths {
            portals.extend(portalize(path, delta, dist)?);
        }
        acc[id] = portals.iter().copied().collect();
        let mut bag = portals.clone();
        if node.is_leaf() {
            bag.extend(node.set.iter().copied());
        }
        node_bag[id] = bags.len();
        bags.push(bag.into_iter().collect());
        parent.push(node.parent.map(|p| node_bag[p]));
        for &z in &node.separator {
            if portals.contains(&z) {
                continue;
            }
            let mut home = acc[id].clone();
            home.push(z);
            home.sort_unstable();
            bags.push(home);
            parent.push(Some(node_bag[id]));
        }
    }
    if clique_bags {
        for z in maximal_cliques(g) {
            let leaf = clique_leaf(tree, &z);
            let b = node_bag[leaf];
            if z.iter().all(|v| bags[b].binary_search(v).is_ok()) {
                continue;
            }
            let mut bag: BTreeSet<usize> = acc[leaf].iter().copied().collect();
            bag.extend(z.iter().copied());
            bags.push(bag.into_iter().collect());
            parent.push(Some(b));
        }
    }
    // Copies: a vertex keeps its parent bag's copy when the parent holds it.
    let mut host_of: Vec<Vec<usize>> = Vec::with_capacity(bags.len());
    let mut origin: Vec<usize> = Vec::new();
    for (b, bag) in bags.iter().enumerate() {
        let ids = bag
            .iter()
            .map(|&v| {
                if let Some(p) = parent[b] {
                    if let Ok(i) = bags[p].binary_search(&v) {
                        return host_of[p][i];
                    }
                }
                origin.push(v);
                origin.len() - 1
            })
            .collect();
        host_of.push(ids);
    }
    let mut host = WeightedGraph::new(origin.len(), g.scale(), std::iter::empty())?;
    for ids in &host_of {
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                host.add_edge(a, b, oracle.dist(origin[a], origin[b]))?;
            }
        }
    }
    let mut images = vec![Vec::new(); g.n()];
    for (x, &v) in origin.iter().enumerate() {
        images[v].push(x);
    }
    let decomposition = TreeDecomposition {
        bags: host_of,
        edges: parent.iter().enumerate().filter_map(|(b, p)| p.map(|p| (p, b))).collect(),
    };
    let preimage = origin.iter().map(|&v| Some(v)).collect();
    let emb = OneToManyEmbedding { host, decomposition, images, origin, preimage };
    emb.check_images()?;
    Ok(emb)
}

/// Leaf reached by peeling path vertices off a clique while descending.
fn clique_leaf(tree: &SeparatorTree, z: &[usize]) -> usize {
    let mut rest: Vec<usize> = z.to_vec();
    let mut id = 0;
    loop {
        let node = &tree.nodes[id];
        if node.is_leaf() {
            return id;
        }
        rest.retain(|v| !node.paths.iter().any(|p| p.contains(v)));
        let next = match rest.first() {
            Some(v) => node.children.iter().copied().find(|&c| tree.nodes[c].set.binary_search(v).is_ok()),
            None => node.children.first().copied(),
        };
        match next {
            Some(c) => id = c,
            None => return id,
        }
    }
}
