//! Solving through a rooted low-treewidth embedding and mapping tours back.

use serde::{Deserialize, Serialize};

use super::dp::{solve_vrp_dp, DpOptions, DpStats, NormalizedInstance};
use super::{verify_solution, Route, VrpInstance};
use crate::decomp::{balance_depth, branch_from_tree_decomposition, heuristic_branch_decomposition};
use crate::embed::{embed_rooted, EmbedOptions, OneToManyEmbedding};
use crate::error::{Error, Result};
use crate::graph::{drop_implied_edges, Ticks};
use crate::planar::RotationSystem;

/// Replaces host vertices by their preimages. Steiner stops without
/// deliveries are dropped; a delivery at a Steiner vertex is an error.
pub fn lift_solution(tours: &[Route], emb: &OneToManyEmbedding) -> Result<Vec<Route>> {
    tours
        .iter()
        .map(|t| {
            let mut stops = Vec::with_capacity(t.stops.len());
            for &(x, k) in &t.stops {
                match emb.preimage.get(x).copied().flatten() {
                    Some(v) => stops.push((v, k)),
                    None if k == 0 => {}
                    None => return Err(Error::Lift(format!("delivery of {k} at Steiner host vertex {x}"))),
                }
            }
            if stops.is_empty() {
                return Err(Error::Lift(format!("tour {t} has no image vertices")));
            }
            Ok(Route::new(t.pre, stops).compact())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub eps: f64,
    pub seed: u64,
    pub dp: DpOptions,
    pub embed: EmbedOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { eps: 0.5, seed: 0, dp: DpOptions::default(), embed: EmbedOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineResult {
    pub host_vertices: usize,
    pub host_width: i64,
    pub branch_width: usize,
    pub host_cost: Ticks,
    pub host_tours: Vec<Route>,
    pub tours: Vec<Route>,
    pub cost: Ticks,
    pub stats: DpStats,
}

/// Embeds the graph around the depot, solves on the host with each demand
/// placed on the first image copy, and lifts the tours back. Host edges
/// implied by shorter host paths are dropped before decomposing.
pub fn run_pipeline(inst: &VrpInstance, rot: &RotationSystem, opts: &PipelineOptions) -> Result<PipelineResult> {
    inst.validate()?;
    let r = embed_rooted(&inst.graph, rot, inst.depot, opts.eps, opts.seed, opts.embed)?;
    let emb = &r.embedding;
    let mut demand = vec![0; emb.host.n()];
    for (v, &k) in inst.demand.iter().enumerate() {
        if k > 0 {
            demand[emb.images[v][0]] += k;
        }
    }
    let graph = drop_implied_edges(&emb.host)?;
    let host = VrpInstance { graph, capacity: inst.capacity, demand, depot: r.hub };
    let norm = NormalizedInstance::new(&host)?;
    let g = &norm.inst.graph;
    let mut td = emb.decomposition.clone();
    let hub_bag = td.bags.iter().position(|b| b.contains(&r.hub)).unwrap_or(0);
    td.bags.push(vec![r.hub, norm.pendant.depot]);
    td.edges.push((hub_bag, td.bags.len() - 1));
    let mut bd = heuristic_branch_decomposition(g)?;
    if let Ok(from_td) = branch_from_tree_decomposition(g, &td) {
        if from_td.width() < bd.width() {
            bd = from_td;
        }
    }
    let bd = balance_depth(g, &bd, opts.dp.c_depth.max(1));
    let sol = solve_vrp_dp(&norm.inst, &bd, &opts.dp)?;
    let host_tours = norm.to_original(&sol.tours);
    let tours = lift_solution(&host_tours, emb)?;
    let cost = verify_solution(inst, &tours)
        .map_err(|v| Error::Consistency(format!("lifted tours are infeasible: {v:?}")))?;
    Ok(PipelineResult {
        host_vertices: emb.host.n(),
        host_width: emb.width(),
        branch_width: bd.width(),
        host_cost: sol.cost,
        host_tours,
        tours,
        cost,
        stats: sol.stats,
    })
}
