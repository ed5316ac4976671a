//! One-to-many embeddings of planar graphs into low-treewidth hosts.

mod lowtw;
mod rooted;

pub use lowtw::{
    build_separator_tree, embed_planar_low_tw, maximal_cliques, width_bound, EmbedOptions,
    PlanarEmbedding, SeparatorNode, SeparatorTree,
};
pub use rooted::{band_partition, embed_rooted, BandPartition, RootedEmbedding};

use serde::{Deserialize, Serialize};

use crate::decomp::{min_degree_decomposition, TreeDecomposition};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, dijkstra, r_net_by, DistanceOracle, Ticks, WeightedGraph, INFINITY};

/// Source vertices mapped to disjoint nonempty sets of host vertices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneToManyEmbedding {
    #[serde(with = "crate::io::graph_serde")]
    pub host: WeightedGraph,
    pub decomposition: TreeDecomposition,
    /// Host copies of each source vertex, ascending.
    pub images: Vec<Vec<usize>>,
    /// Source vertex each host vertex was copied from (images and Steiner copies alike).
    pub origin: Vec<usize>,
    /// Source vertex whose image holds the host vertex, if any.
    pub preimage: Vec<Option<usize>>,
}

impl OneToManyEmbedding {
    /// The graph embedded into itself, with a min-degree tree decomposition.
    pub fn identity(g: &WeightedGraph) -> Self {
        let (decomposition, _) = min_degree_decomposition(g);
        OneToManyEmbedding {
            host: g.clone(),
            decomposition,
            images: (0..g.n()).map(|v| vec![v]).collect(),
            origin: (0..g.n()).collect(),
            preimage: (0..g.n()).map(Some).collect(),
        }
    }

    /// Checks that images are nonempty, disjoint and agree with `preimage`.
    pub fn check_images(&self) -> Result<()> {
        let h = self.host.n();
        if self.origin.len() != h || self.preimage.len() != h {
            return Err(Error::Consistency("host maps have the wrong length".into()));
        }
        let mut owner = vec![None; h];
        for (v, img) in self.images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::Consistency(format!("vertex {v} has an empty image")));
            }
            for &x in img {
                if x >= h || owner[x].is_some() {
                    return Err(Error::Consistency(format!("host vertex {x} in two images")));
                }
                owner[x] = Some(v);
            }
        }
        if owner != self.preimage {
            return Err(Error::Consistency("preimage map disagrees with images".into()));
        }
        Ok(())
    }

    /// Width of the host tree decomposition.
    pub fn width(&self) -> i64 {
        self.decomposition.width()
    }
}

/// Greedy `delta`-net of a path, scanned from its first vertex. Net points are
/// pairwise at least `delta` apart and every path vertex is within `delta` of one.
pub fn portalize<F>(path: &[usize], delta: f64, dist: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, usize) -> Ticks,
{
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("portal spacing {delta} must be positive")));
    }
    r_net_by(path, delta.ceil() as Ticks, dist)
}

/// Additive error statistics of an embedding over every pair of image vertices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pairs: u64,
    pub max_additive: Ticks,
    pub min_additive: Ticks,
    pub mean_additive: f64,
    /// Host vertex pairs closer in the host than their preimages in the source.
    pub domination_violations: Vec<(usize, usize)>,
    pub host_width: i64,
    pub host_vertices: usize,
    pub host_edges: usize,
}

/// Exhaustive comparison of host and source distances over all pairs of image
/// vertices, including distinct copies of the same vertex.
pub fn measure_distortion(src: &WeightedGraph, emb: &OneToManyEmbedding) -> Result<DistortionReport> {
    let d = all_pairs(src)?;
    measure_with(&d, emb)
}

pub(crate) fn measure_with(d: &DistanceOracle, emb: &OneToManyEmbedding) -> Result<DistortionReport> {
    let imaged: Vec<usize> = (0..emb.host.n()).filter(|&x| emb.preimage[x].is_some()).collect();
    let mut rep = DistortionReport {
        min_additive: if imaged.len() > 1 { Ticks::MAX } else { 0 },
        host_width: emb.width(),
        host_vertices: emb.host.n(),
        host_edges: emb.host.m(),
        ..Default::default()
    };
    let mut sum = 0f64;
    for (i, &a) in imaged.iter().enumerate() {
        let t = dijkstra(&emb.host, a);
        let pa = emb.preimage[a].unwrap();
        for &b in &imaged[i + 1..] {
            let pb = emb.preimage[b].unwrap();
            if t.dist[b] == INFINITY {
                return Err(Error::Disconnected(a, b));
            }
            let err = t.dist[b] - d.dist(pa, pb);
            if err < 0 {
                rep.domination_violations.push((a, b));
            }
            rep.max_additive = rep.max_additive.max(err);
            rep.min_additive = rep.min_additive.min(err);
            sum += err as f64;
            rep.pairs += 1;
        }
    }
    if rep.pairs > 0 {
        rep.mean_additive = sum / rep.pairs as f64;
    }
    Ok(rep)
}
