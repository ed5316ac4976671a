//! JSON file formats.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Ticks, WeightedGraph};
use crate::planar::RotationSystem;

/// `{"n": .., "scale": .., "edges": [[u, v, ticks], ..], "rotation": [[edge, ..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    #[serde(default)]
    pub scale: u32,
    pub edges: Vec<(usize, usize, Ticks)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Vec<Vec<usize>>>,
}

impl GraphFile {
    pub fn from_graph(g: &WeightedGraph, rot: Option<&RotationSystem>) -> Self {
        GraphFile {
            n: g.n(),
            scale: g.scale(),
            edges: g.edges().iter().map(|e| (e.u, e.v, e.w)).collect(),
            rotation: rot.map(|r| r.order.clone()),
        }
    }

    pub fn graph(&self) -> Result<WeightedGraph> {
        WeightedGraph::new(self.n, self.scale, self.edges.iter().copied())
    }

    pub fn rotation(&self) -> Result<RotationSystem> {
        self.rotation
            .clone()
            .map(|order| RotationSystem { order })
            .ok_or_else(|| Error::InvalidRotation("graph file has no rotation system".into()))
    }
}

/// Serde adapter storing a [`WeightedGraph`] as a [`GraphFile`].
pub mod graph_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &WeightedGraph, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphFile::from_graph(g, None).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<WeightedGraph, D::Error> {
        GraphFile::deserialize(d)?.graph().map_err(serde::de::Error::custom)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}
