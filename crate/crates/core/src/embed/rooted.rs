//! Random radial bands around a root, each embedded separately and tied
//! together through a hub copy of the root.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::lowtw::{embed_planar_low_tw, EmbedOptions};
use super::OneToManyEmbedding;
use crate::decomp::TreeDecomposition;
use crate::error::{Error, Result};
use crate::gen::rng;
use crate::graph::{all_pairs, DistanceOracle, Ticks, WeightedGraph};
use crate::planar::RotationSystem;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandPartition {
    pub root: usize,
    /// Random offset in `[0, 1)`.
    pub x: f64,
    /// Radius growth factor `(1/eps)^(1/eps)` between consecutive bands.
    pub base: f64,
    /// Smallest nonzero distance from the root; radii are in multiples of it.
    pub unit: Ticks,
    pub band: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    /// Normalized inner radius of each band (1 for band 0).
    pub lower: Vec<f64>,
    /// Normalized outer radius of each band.
    pub upper: Vec<f64>,
}

impl BandPartition {
    pub fn ratio(&self, i: usize) -> f64 {
        self.upper[i] / self.lower[i]
    }
}

/// Offset uniform in `[0, 1)` with 53 bits of precision.
pub(crate) fn offset(seed: u64) -> f64 {
    (rng(seed).next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Band `0` holds vertices with normalized root distance at most `b^x`; band
/// `i >= 1` holds those in `(b^(i-1+x), b^(i+x)]`, where `b = (1/eps)^(1/eps)`.
/// A vertex on a boundary belongs to the lower band.
pub fn band_partition(g: &WeightedGraph, s: usize, eps: f64, seed: u64) -> Result<BandPartition> {
    let oracle = all_pairs(g)?;
    band_partition_with(&oracle, s, eps, seed)
}

pub(crate) fn band_partition_with(
    oracle: &DistanceOracle,
    s: usize,
    eps: f64,
    seed: u64,
) -> Result<BandPartition> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} must lie in (0, 1)")));
    }
    let n = oracle.n();
    if s >= n {
        return Err(Error::InvalidParameter(format!("root {s} out of range")));
    }
    let x = offset(seed);
    let base = (1.0 / eps).powf(1.0 / eps);
    let unit = (0..n).map(|v| oracle.dist(s, v)).filter(|&d| d > 0).min().unwrap_or(1);
    let mut band = vec![0; n];
    for (v, b) in band.iter_mut().enumerate() {
        let rho = oracle.dist(s, v) as f64 / unit as f64;
        let mut i = 0;
        while rho > base.powf(i as f64 + x) {
            i += 1;
        }
        *b = i;
    }
    let k = band.iter().max().unwrap() + 1;
    let mut members = vec![Vec::new(); k];
    for (v, &b) in band.iter().enumerate() {
        members[b].push(v);
    }
    let lower = (0..k).map(|i| if i == 0 { 1.0 } else { base.powf(i as f64 - 1.0 + x) }).collect();
    let upper = (0..k).map(|i| base.powf(i as f64 + x)).collect();
    Ok(BandPartition { root: s, x, base, unit, band, members, lower, upper })
}

#[derive(Debug, Clone)]
pub struct RootedEmbedding {
    pub embedding: OneToManyEmbedding,
    pub bands: BandPartition,
    /// Host vertex standing for the root.
    pub hub: usize,
    /// Accuracy used for each band's embedding (`None` for bands embedded trivially).
    pub band_eps: Vec<Option<f64>>,
}

/// Union of the fixed shortest paths among `{s} + members`, as a subgraph
/// with the vertex list (ascending) and the source edge of each local edge.
fn band_graph(
    g: &WeightedGraph,
    oracle: &DistanceOracle,
    s: usize,
    members: &[usize],
) -> (Vec<usize>, WeightedGraph, Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut terms = vec![s];
    terms.extend(members.iter().copied().filter(|&v| v != s));
    let mut used_v = vec![false; g.n()];
    let mut used_e = vec![false; g.m()];
    for (i, &a) in terms.iter().enumerate() {
        used_v[a] = true;
        for &b in &terms[i + 1..] {
            let p = oracle.path(a, b);
            for w in p.windows(2) {
                used_v[w[1]] = true;
                let e = g.edge_between(w[0], w[1]).expect("path edge");
                used_e[e] = true;
            }
        }
    }
    let verts: Vec<usize> = (0..g.n()).filter(|&v| used_v[v]).collect();
    let mut vmap = vec![None; g.n()];
    for (i, &v) in verts.iter().enumerate() {
        vmap[v] = Some(i);
    }
    let mut sub = WeightedGraph::new(verts.len(), g.scale(), std::iter::empty()).unwrap();
    let mut emap = vec![None; g.m()];
    for e in (0..g.m()).filter(|&e| used_e[e]) {
        let ed = g.edge(e);
        emap[e] = Some(sub.add_edge(vmap[ed.u].unwrap(), vmap[ed.v].unwrap(), ed.w).unwrap());
    }
    (verts, sub, vmap, emap)
}

/// Embeds each band's path-union graph with accuracy `eps * L_i / D(G_i)`
/// (capped below one), then adds a hub for the root joined to every image
/// vertex by its root distance. Copies of the root inside bands attach to the
/// hub at zero cost; copies of vertices from other bands stay Steiner vertices.
pub fn embed_rooted(
    g: &WeightedGraph,
    rot: &RotationSystem,
    s: usize,
    eps: f64,
    seed: u64,
    opts: EmbedOptions,
) -> Result<RootedEmbedding> {
    let oracle = all_pairs(g)?;
    let bands = band_partition_with(&oracle, s, eps, seed)?;
    let mut origin: Vec<usize> = Vec::new();
    let mut preimage: Vec<Option<usize>> = Vec::new();
    let mut edges: Vec<(usize, usize, Ticks)> = Vec::new();
    let mut bags: Vec<Vec<usize>> = Vec::new();
    let mut tree_edges: Vec<(usize, usize)> = Vec::new();
    let mut band_eps = Vec::new();
    for (i, members) in bands.members.iter().enumerate() {
        let real: Vec<usize> = members.iter().copied().filter(|&v| v != s).collect();
        if real.is_empty() {
            band_eps.push(None);
            continue;
        }
        let (verts, sub, vmap, emap) = band_graph(g, &oracle, s, &real);
        let subrot = rot.restrict(&vmap, &emap, verts.len());
        let sub_d = all_pairs(&sub)?.diameter();
        let (emb, used) = if sub_d == 0 {
            (OneToManyEmbedding::identity(&sub), None)
        } else {
            let target = eps * bands.lower[i] * bands.unit as f64 / sub_d as f64;
            let e = target.min(0.99);
            (embed_planar_low_tw(&sub, &subrot, e, opts)?.embedding, Some(e))
        };
        band_eps.push(used);
        let off = origin.len();
        for x in 0..emb.host.n() {
            let v = verts[emb.origin[x]];
            origin.push(v);
            preimage.push(if v != s && bands.band[v] == i { Some(v) } else { None });
        }
        for e in emb.host.edges() {
            edges.push((e.u + off, e.v + off, e.w));
        }
        let bag_off = bags.len();
        for bag in &emb.decomposition.bags {
            bags.push(bag.iter().map(|&x| x + off).collect());
        }
        for &(a, b) in &emb.decomposition.edges {
            tree_edges.push((a + bag_off, b + bag_off));
        }
        if bag_off > 0 {
            tree_edges.push((0, bag_off));
        }
    }
    let hub = origin.len();
    origin.push(s);
    preimage.push(Some(s));
    for x in 0..hub {
        if origin[x] == s {
            edges.push((x, hub, 0));
        } else if preimage[x].is_some() {
            edges.push((x, hub, oracle.dist(s, origin[x])));
        }
    }
    if bags.is_empty() {
        bags.push(Vec::new());
    }
    for bag in &mut bags {
        bag.push(hub);
    }
    let host = WeightedGraph::new(hub + 1, g.scale(), edges)?;
    let mut images = vec![Vec::new(); g.n()];
    for (x, p) in preimage.iter().enumerate() {
        if let Some(v) = p {
            images[*v].push(x);
        }
    }
    let embedding = OneToManyEmbedding {
        host,
        decomposition: TreeDecomposition { bags, edges: tree_edges },
        images,
        origin,
        preimage,
    };
    embedding.check_images()?;
    Ok(RootedEmbedding { embedding, bands, hub, band_eps })
}
