//! Capacitated vehicle routing: routes, configurations, the table dynamic
//! program over branch decompositions, exact oracles, verification and lifting.

mod dp;
mod flow;
mod lift;
mod oracle;

pub use dp::{
    dp_tables, leaf_table, solve, solve_vrp_dp, DpOptions, DpSolution, DpStats, DpTables, Mode,
    NormalizedInstance, Table,
};
pub use flow::{build_flow_instance, min_cost_flow, FlowArc, FlowEnd, FlowInstance, FlowSolution, Subnet};
pub use lift::{lift_solution, run_pipeline, PipelineOptions, PipelineResult};
pub use oracle::{exact_vrp_oracle, split_heuristic, verify_solution, Violation, ORACLE_DEMAND_CAP};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DistanceOracle, Ticks, WeightedGraph};

/// Graph, capacity, per-vertex delivery requirement and depot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrpInstance {
    #[serde(with = "crate::io::graph_serde")]
    pub graph: WeightedGraph,
    pub capacity: u32,
    pub demand: Vec<u32>,
    pub depot: usize,
}

impl VrpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidParameter("capacity must be at least 1".into()));
        }
        if self.demand.len() != self.graph.n() {
            return Err(Error::InvalidParameter(format!(
                "demand has {} entries for {} vertices",
                self.demand.len(),
                self.graph.n()
            )));
        }
        if self.depot >= self.graph.n() {
            return Err(Error::InvalidParameter(format!("depot {} out of range", self.depot)));
        }
        if !self.graph.is_connected() {
            return Err(Error::InvalidGraph("instance graph is disconnected".into()));
        }
        Ok(())
    }

    pub fn total_demand(&self) -> u32 {
        self.demand.iter().sum()
    }
}

/// `pre v1 d1 v2 d2 ... vk dk`: deliveries `pre` before the first vertex and
/// `di` at each visited vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Route {
    pub pre: u32,
    pub stops: Vec<(usize, u32)>,
}

impl Route {
    pub fn new(pre: u32, stops: Vec<(usize, u32)>) -> Self {
        assert!(!stops.is_empty(), "a route visits at least one vertex");
        Route { pre, stops }
    }

    /// Degenerate route `q a 0 b 0`.
    pub fn connector(q: u32, a: usize, b: usize) -> Self {
        Route { pre: q, stops: vec![(a, 0), (b, 0)] }
    }

    pub fn start(&self) -> usize {
        self.stops[0].0
    }

    pub fn end(&self) -> usize {
        self.stops.last().unwrap().0
    }

    pub fn internal(&self) -> u32 {
        self.stops.iter().map(|s| s.1).sum()
    }

    pub fn total(&self) -> u32 {
        self.pre + self.internal()
    }

    pub fn cost(&self, d: &DistanceOracle) -> Ticks {
        self.stops.windows(2).map(|w| d.dist(w[0].0, w[1].0)).sum()
    }

    pub fn is_feasible(&self, capacity: u32, depot: usize) -> bool {
        self.total() <= capacity
            && (self.internal() > 0 || self.start() == depot || self.end() == depot)
    }

    pub fn is_tour(&self, depot: usize) -> bool {
        self.start() == depot && self.end() == depot
    }

    /// Merges consecutive visits of the same vertex.
    pub fn compact(mut self) -> Self {
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(self.stops.len());
        for (v, d) in self.stops {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += d,
                _ => out.push((v, d)),
            }
        }
        self.stops = out;
        self
    }

    /// Parses the alternating integer/vertex text form, e.g. `0 3 1 4 2`.
    pub fn parse(text: &str) -> Result<Self> {
        let nums: Vec<u64> = text
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::InvalidParameter(format!("bad route token {t:?}"))))
            .collect::<Result<_>>()?;
        if nums.len() < 3 || nums.len() % 2 == 0 {
            return Err(Error::InvalidParameter(format!("route {text:?} is not int (vertex int)+")));
        }
        let stops = nums[1..].chunks(2).map(|c| (c[0] as usize, c[1] as u32)).collect();
        Ok(Route { pre: nums[0] as u32, stops })
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pre)?;
        for (v, d) in &self.stops {
            write!(f, " {v} {d}")?;
        }
        Ok(())
    }
}

/// `R1 o R2`: defined when `R2` starts where `R1` ends and its pre-delivery
/// equals the total delivery of `R1`.
pub fn route_concat(r1: &Route, r2: &Route) -> Result<Route> {
    if r1.end() != r2.start() {
        return Err(Error::Concat(format!(
            "first route ends at {} but second starts at {}",
            r1.end(),
            r2.start()
        )));
    }
    if r2.pre != r1.total() {
        return Err(Error::Concat(format!(
            "pre-delivery {} of second route differs from total delivery {} of first",
            r2.pre,
            r1.total()
        )));
    }
    let mut stops = r1.stops.clone();
    stops.last_mut().unwrap().1 += r2.stops[0].1;
    stops.extend_from_slice(&r2.stops[1..]);
    Ok(Route { pre: r1.pre, stops })
}

/// Rounding base `eps / (c * Q * ceil(log2 n))`.
pub fn eps_tilde(eps: f64, c_depth: usize, capacity: u32, n: usize) -> f64 {
    let log = crate::decomp::ceil_log2(n).max(1);
    eps / (c_depth as f64 * capacity as f64 * log as f64)
}

/// Smallest value `>= f` that is zero or `ceil((1 + eps_t)^j)` for some `j >= 0`.
pub fn round_up_power(f: u64, eps_t: f64) -> u64 {
    if f == 0 {
        return 0;
    }
    let mut j = 0i32;
    loop {
        let v = (1.0 + eps_t).powi(j).ceil() as u64;
        if v >= f {
            return v;
        }
        j += 1;
    }
}

pub fn is_constrained_value(f: u64, eps_t: f64) -> bool {
    round_up_power(f, eps_t) == f
}

/// Direction of a configuration slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    /// Routes starting at the portal with the given pre-delivery.
    In,
    /// Routes ending at the portal with the given total delivery.
    Out,
}

/// Sparse per-(portal, q, direction) route counts; absent slots are zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration(pub BTreeMap<(usize, u32, Dir), u32>);

impl Configuration {
    pub fn get(&self, p: usize, q: u32, dir: Dir) -> u32 {
        self.0.get(&(p, q, dir)).copied().unwrap_or(0)
    }

    pub fn add(&mut self, p: usize, q: u32, dir: Dir, k: u32) {
        if k > 0 {
            *self.0.entry((p, q, dir)).or_insert(0) += k;
        }
    }

    /// `f_in - f_out` at `(p, q)`.
    pub fn net_in(&self, p: usize, q: u32) -> i64 {
        self.get(p, q, Dir::In) as i64 - self.get(p, q, Dir::Out) as i64
    }

    pub fn values(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.values().copied()
    }

    /// Configuration induced by a multiset of routes on the given portals.
    pub fn induced(routes: &[Route], portals: &[usize]) -> Self {
        let mut c = Configuration::default();
        for r in routes {
            if portals.binary_search(&r.start()).is_ok() {
                c.add(r.start(), r.pre, Dir::In, 1);
            }
            if portals.binary_search(&r.end()).is_ok() {
                c.add(r.end(), r.total(), Dir::Out, 1);
            }
        }
        c
    }
}

/// Every constrained configuration over `portals` with values in
/// `{0} + {ceil((1+eps_t)^j) <= flow_cap}`, in lexicographic slot order.
pub fn enumerate_constrained_configs(
    portals: &[usize],
    capacity: u32,
    eps_t: f64,
    flow_cap: u64,
) -> impl Iterator<Item = Configuration> {
    let mut values = vec![0u64];
    let mut j = 0;
    loop {
        let v = (1.0 + eps_t).powi(j).ceil() as u64;
        if v > flow_cap {
            break;
        }
        if values.last() != Some(&v) {
            values.push(v);
        }
        j += 1;
    }
    let slots: Vec<(usize, u32, Dir)> = portals
        .iter()
        .flat_map(|&p| (0..=capacity).flat_map(move |q| [(p, q, Dir::In), (p, q, Dir::Out)]))
        .collect();
    let k = slots.len();
    let base = values.len();
    let total = (base as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    (0..total).map(move |mut code| {
        let mut c = Configuration::default();
        for &slot in &slots {
            let v = values[(code % base as u128) as usize];
            code /= base as u128;
            if v > 0 {
                c.0.insert(slot, v as u32);
            }
        }
        c
    })
}
