//! Approximation schemes for capacitated vehicle routing on planar graphs,
//! built on low-treewidth embeddings of bounded-diameter planar graphs.

pub mod error;
pub mod decomp;
pub mod embed;
pub mod gen;
pub mod graph;
pub mod io;
pub mod planar;
pub mod vrp;

pub use error::{Error, Result};
pub use graph::{Ticks, WeightedGraph, INFINITY};
pub use planar::RotationSystem;
