//! Per-delivery-level transportation networks joining route ends inside a
//! cluster, solved by successive shortest paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::Configuration;
use crate::graph::{DistanceOracle, Ticks, INFINITY};

/// One subnetwork per delivery level `q`, all over the same node vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowInstance {
    pub depot: usize,
    /// Vertex of each node, ascending.
    pub vertices: Vec<usize>,
    /// Pairwise costs over `vertices` followed by the depot.
    pub cost: Vec<Vec<Ticks>>,
    /// Nodes that may not be joined to each other directly.
    pub detached: Vec<bool>,
    pub subnets: Vec<Subnet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subnet {
    pub q: u32,
    /// Positive entries emit that many arcs, negative ones absorb them.
    pub supply: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FlowEnd {
    /// `s_q` as a tail, `t_q` as a head.
    Depot,
    Node(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowArc {
    pub q: u32,
    pub tail: FlowEnd,
    pub head: FlowEnd,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSolution {
    /// Arc multiset, sorted.
    pub arcs: Vec<FlowArc>,
    pub cost: Ticks,
}

impl FlowInstance {
    pub fn new(depot: usize, vertices: Vec<usize>, d: &DistanceOracle) -> Self {
        let mut all = vertices.clone();
        all.push(depot);
        let cost = all.iter().map(|&a| all.iter().map(|&b| d.dist(a, b)).collect()).collect();
        let detached = vec![false; vertices.len()];
        FlowInstance { depot, vertices, cost, detached, subnets: Vec::new() }
    }

    pub fn node_of(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    fn end_index(&self, e: FlowEnd) -> usize {
        match e {
            FlowEnd::Depot => self.vertices.len(),
            FlowEnd::Node(i) => i,
        }
    }

    pub fn arc_cost(&self, a: &FlowArc) -> Ticks {
        self.cost[self.end_index(a.tail)][self.end_index(a.head)]
    }

    pub fn arc_allowed(&self, tail: FlowEnd, head: FlowEnd) -> bool {
        match (tail, head) {
            (FlowEnd::Depot, FlowEnd::Depot) => false,
            (FlowEnd::Node(a), FlowEnd::Node(b)) => a != b && !(self.detached[a] && self.detached[b]),
            _ => true,
        }
    }
}

/// Network joining the children's open route ends: node `v_{p,q}` for each
/// portal of either child has supply (arcs leaving minus arcs entering)
/// `g(0,p,q) - g(1,p,q) - g(2,p,q)` with `g(i,p,q) = f_in - f_out` of `kappa_i`.
pub fn build_flow_instance(
    kappa: &Configuration,
    kappa1: &Configuration,
    kappa2: &Configuration,
    portals1: &[usize],
    portals2: &[usize],
    capacity: u32,
    d: &DistanceOracle,
    depot: usize,
) -> FlowInstance {
    let mut vertices: Vec<usize> = portals1.iter().chain(portals2).copied().collect();
    vertices.sort_unstable();
    vertices.dedup();
    let mut fi = FlowInstance::new(depot, vertices, d);
    for q in 0..=capacity {
        let supply: Vec<i64> = fi
            .vertices
            .iter()
            .map(|&p| kappa.net_in(p, q) - kappa1.net_in(p, q) - kappa2.net_in(p, q))
            .collect();
        if supply.iter().any(|&s| s != 0) {
            fi.subnets.push(Subnet { q, supply });
        }
    }
    fi
}

/// Single-commodity min-cost flow with integer capacities.
struct Network {
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<Ticks>,
    adj: Vec<Vec<usize>>,
}

impl Network {
    fn new(n: usize) -> Self {
        Network { head: Vec::new(), cap: Vec::new(), cost: Vec::new(), adj: vec![Vec::new(); n] }
    }

    fn add(&mut self, a: usize, b: usize, cap: i64, cost: Ticks) -> usize {
        let id = self.head.len();
        self.head.extend([b, a]);
        self.cap.extend([cap, 0]);
        self.cost.extend([cost, -cost]);
        self.adj[a].push(id);
        self.adj[b].push(id + 1);
        id
    }

    /// Pushes `want` units from `s` to `t` along successive shortest paths,
    /// using Dijkstra with potentials (all initial costs are nonnegative).
    fn run(&mut self, s: usize, t: usize, want: i64) -> Option<Ticks> {
        let n = self.adj.len();
        let mut pot = vec![0 as Ticks; n];
        let mut sent = 0;
        let mut total = 0;
        while sent < want {
            let mut dist = vec![INFINITY; n];
            let mut via = vec![usize::MAX; n];
            let mut heap = BinaryHeap::new();
            dist[s] = 0;
            heap.push(Reverse((0, s)));
            while let Some(Reverse((du, u))) = heap.pop() {
                if du > dist[u] {
                    continue;
                }
                for &id in &self.adj[u] {
                    if self.cap[id] <= 0 {
                        continue;
                    }
                    let v = self.head[id];
                    let nd = du + self.cost[id] + pot[u] - pot[v];
                    if nd < dist[v] {
                        dist[v] = nd;
                        via[v] = id;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
            if dist[t] == INFINITY {
                return None;
            }
            for v in 0..n {
                if dist[v] < INFINITY {
                    pot[v] += dist[v];
                }
            }
            let mut push = want - sent;
            let mut v = t;
            while v != s {
                let id = via[v];
                push = push.min(self.cap[id]);
                v = self.head[id ^ 1];
            }
            let mut v = t;
            while v != s {
                let id = via[v];
                self.cap[id] -= push;
                self.cap[id ^ 1] += push;
                total += push * self.cost[id];
                v = self.head[id ^ 1];
            }
            sent += push;
        }
        Some(total)
    }
}

/// Exact minimum-cost arc multiset meeting every supply. Unused depot
/// capacity is absorbed by a free `s_q -> t_q` edge, which is not reported.
pub fn min_cost_flow(fi: &FlowInstance) -> FlowSolution {
    let mut out = FlowSolution::default();
    for sub in &fi.subnets {
        let (arcs, cost) = solve_subnet(fi, sub);
        out.arcs.extend(arcs);
        out.cost += cost;
    }
    out.arcs.sort_unstable();
    out
}

pub(crate) fn subnet_cost(fi: &FlowInstance, sub: &Subnet) -> Ticks {
    solve_subnet(fi, sub).1
}

fn solve_subnet(fi: &FlowInstance, sub: &Subnet) -> (Vec<FlowArc>, Ticks) {
    let tails: Vec<usize> = (0..sub.supply.len()).filter(|&i| sub.supply[i] > 0).collect();
    let heads: Vec<usize> = (0..sub.supply.len()).filter(|&i| sub.supply[i] < 0).collect();
    if tails.is_empty() && heads.is_empty() {
        return (Vec::new(), 0);
    }
    let pos: i64 = tails.iter().map(|&i| sub.supply[i]).sum();
    let neg: i64 = heads.iter().map(|&i| -sub.supply[i]).sum();
    let big = pos + neg;
    // 0 = source, 1 = sink, 2 = s_q, 3 = t_q, then tails, then heads.
    let mut net = Network::new(4 + tails.len() + heads.len());
    let tail_end: Vec<FlowEnd> =
        std::iter::once(FlowEnd::Depot).chain(tails.iter().map(|&i| FlowEnd::Node(i))).collect();
    let head_end: Vec<FlowEnd> =
        std::iter::once(FlowEnd::Depot).chain(heads.iter().map(|&i| FlowEnd::Node(i))).collect();
    let tail_id = |k: usize| if k == 0 { 2 } else { 3 + k };
    let head_id = |k: usize| if k == 0 { 3 } else { 3 + tails.len() + k };
    net.add(0, 2, neg, 0);
    for (k, &i) in tails.iter().enumerate() {
        net.add(0, tail_id(k + 1), sub.supply[i], 0);
    }
    net.add(3, 1, pos, 0);
    for (k, &i) in heads.iter().enumerate() {
        net.add(head_id(k + 1), 1, -sub.supply[i], 0);
    }
    net.add(2, 3, big, 0);
    let mut arc_ids = Vec::new();
    for (a, &te) in tail_end.iter().enumerate() {
        for (b, &he) in head_end.iter().enumerate() {
            if !fi.arc_allowed(te, he) {
                continue;
            }
            let arc = FlowArc { q: sub.q, tail: te, head: he };
            let id = net.add(tail_id(a), head_id(b), big, fi.arc_cost(&arc));
            arc_ids.push((id, arc));
        }
    }
    let cost = net.run(0, 1, big).expect("depot arcs make every supply routable");
    let mut arcs = Vec::new();
    for (id, arc) in arc_ids {
        let used = net.cap[id ^ 1];
        arcs.extend(std::iter::repeat(arc).take(used as usize));
    }
    (arcs, cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::graph::all_pairs;
    use crate::vrp::Dir;

    fn path_oracle() -> DistanceOracle {
        all_pairs(&gen::path(5).graph).unwrap()
    }

    #[test]
    fn zero_supply_is_free() {
        let d = path_oracle();
        let k = Configuration::default();
        let fi = build_flow_instance(&k, &k, &k, &[1, 2], &[2, 3], 2, &d, 0);
        assert!(fi.subnets.is_empty());
        assert_eq!(min_cost_flow(&fi), FlowSolution::default());
    }

    #[test]
    fn single_supply_goes_to_depot() {
        let d = path_oracle();
        let mut fi = FlowInstance::new(0, vec![3, 4], &d);
        fi.subnets.push(Subnet { q: 1, supply: vec![1, 0] });
        let s = min_cost_flow(&fi);
        assert_eq!(s.cost, 3);
        assert_eq!(s.arcs, vec![FlowArc { q: 1, tail: FlowEnd::Node(0), head: FlowEnd::Depot }]);
    }

    #[test]
    fn pair_uses_cheaper_option() {
        let d = path_oracle();
        let mut fi = FlowInstance::new(0, vec![1, 4], &d);
        fi.subnets.push(Subnet { q: 0, supply: vec![1, -1] });
        assert_eq!(min_cost_flow(&fi).cost, 3);
        let mut fi = FlowInstance::new(2, vec![1, 3], &d);
        fi.subnets.push(Subnet { q: 0, supply: vec![1, -1] });
        assert_eq!(min_cost_flow(&fi).cost, 2);
        fi.detached = vec![true, true];
        assert_eq!(min_cost_flow(&fi).cost, 2);
        let mut fi = FlowInstance::new(0, vec![3, 4], &d);
        fi.subnets.push(Subnet { q: 0, supply: vec![1, -1] });
        assert_eq!(min_cost_flow(&fi).cost, 1);
        fi.detached = vec![true, true];
        assert_eq!(min_cost_flow(&fi).cost, 7);
    }

    #[test]
    fn supply_sign_follows_open_ends() {
        let d = path_oracle();
        let mut k1 = Configuration::default();
        k1.add(2, 1, Dir::Out, 1);
        let mut k2 = Configuration::default();
        k2.add(2, 1, Dir::In, 1);
        let fi = build_flow_instance(&Configuration::default(), &k1, &Configuration::default(), &[2], &[], 1, &d, 0);
        assert_eq!(fi.subnets, vec![Subnet { q: 1, supply: vec![1] }]);
        let fi = build_flow_instance(&Configuration::default(), &k1, &k2, &[2], &[2], 1, &d, 0);
        assert!(fi.subnets.is_empty());
    }
}
