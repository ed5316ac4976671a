//! Exhaustive optimum for tiny instances and independent solution checking.

use serde::{Deserialize, Serialize};

use super::{Route, VrpInstance};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, dijkstra, DistanceOracle, Ticks, INFINITY};

/// Largest total demand the oracle accepts.
pub const ORACLE_DEMAND_CAP: u32 = 12;

/// Cheapest closed walk from the depot through every vertex of `set`
/// (Held-Karp), with the visiting order.
fn tsp(d: &DistanceOracle, depot: usize, set: &[usize]) -> (Ticks, Vec<usize>) {
    let k = set.len();
    if k == 0 {
        return (0, Vec::new());
    }
    let full = (1usize << k) - 1;
    let mut best = vec![vec![INFINITY; k]; 1 << k];
    let mut prev = vec![vec![usize::MAX; k]; 1 << k];
    for i in 0..k {
        best[1 << i][i] = d.dist(depot, set[i]);
    }
    for mask in 1..=full {
        for i in 0..k {
            let cur = best[mask][i];
            if cur == INFINITY || mask & (1 << i) == 0 {
                continue;
            }
            for j in 0..k {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let next = mask | (1 << j);
                let c = cur + d.dist(set[i], set[j]);
                if c < best[next][j] {
                    best[next][j] = c;
                    prev[next][j] = i;
                }
            }
        }
    }
    let (mut last, cost) = (0..k)
        .map(|i| (i, best[full][i] + d.dist(set[i], depot)))
        .min_by_key(|&(i, c)| (c, i))
        .unwrap();
    let mut order = Vec::with_capacity(k);
    let mut mask = full;
    while last != usize::MAX {
        order.push(set[last]);
        let p = prev[mask][last];
        mask &= !(1 << last);
        last = p;
    }
    order.reverse();
    (cost, order)
}

/// Optimal cost and tours by dynamic programming over subsets of demand
/// units, pricing each tour's vertex set by Held-Karp.
pub fn exact_vrp_oracle(inst: &VrpInstance) -> Result<(Ticks, Vec<Route>)> {
    inst.validate()?;
    let total = inst.total_demand();
    if total > ORACLE_DEMAND_CAP {
        return Err(Error::ResourceLimit(format!(
            "oracle handles total demand up to {ORACLE_DEMAND_CAP}, got {total}"
        )));
    }
    let d = all_pairs(&inst.graph)?;
    let units: Vec<usize> = (0..inst.graph.n())
        .flat_map(|v| std::iter::repeat(v).take(inst.demand[v] as usize))
        .collect();
    let u = units.len();
    let full = (1usize << u) - 1;
    let q = inst.capacity as usize;
    let vertex_set = |mask: usize| {
        let mut s: Vec<usize> = (0..u).filter(|&i| mask & (1 << i) != 0).map(|i| units[i]).collect();
        s.dedup();
        s
    };
    let mut group = vec![INFINITY; 1 << u];
    for (mask, g) in group.iter_mut().enumerate().skip(1) {
        if (mask.count_ones() as usize) <= q {
            *g = tsp(&d, inst.depot, &vertex_set(mask)).0;
        }
    }
    let mut best = vec![INFINITY; 1 << u];
    let mut choice = vec![0usize; 1 << u];
    best[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let g = sub | low;
            if group[g] < INFINITY && best[mask ^ g] < INFINITY {
                let c = group[g] + best[mask ^ g];
                if c < best[mask] {
                    best[mask] = c;
                    choice[mask] = g;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut tours = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let g = choice[mask];
        let set = vertex_set(g);
        let (_, order) = tsp(&d, inst.depot, &set);
        let mut stops = vec![(inst.depot, 0)];
        for v in order {
            let k = (0..u).filter(|&i| g & (1 << i) != 0 && units[i] == v).count() as u32;
            stops.push((v, k));
        }
        stops.push((inst.depot, 0));
        tours.push(Route::new(0, stops).compact());
        mask ^= g;
    }
    Ok((best[full], tours))
}

/// Feasible solution from a nearest-neighbour giant tour over the demand
/// vertices, split optimally into capacity-sized consecutive pieces.
pub fn split_heuristic(inst: &VrpInstance) -> Result<(Ticks, Vec<Route>)> {
    inst.validate()?;
    let d = all_pairs(&inst.graph)?;
    let mut left: Vec<usize> = (0..inst.graph.n()).filter(|&v| inst.demand[v] > 0).collect();
    let mut order = Vec::with_capacity(left.len());
    let mut at = inst.depot;
    while !left.is_empty() {
        let i = (0..left.len()).min_by_key(|&i| (d.dist(at, left[i]), left[i])).unwrap();
        at = left.remove(i);
        order.push(at);
    }
    let units: Vec<usize> =
        order.iter().flat_map(|&v| std::iter::repeat(v).take(inst.demand[v] as usize)).collect();
    let u = units.len();
    let q = inst.capacity as usize;
    let mut best = vec![INFINITY; u + 1];
    let mut from = vec![0; u + 1];
    best[0] = 0;
    for j in 1..=u {
        let mut inner = 0;
        for i in (j.saturating_sub(q)..j).rev() {
            if i + 1 < j {
                inner += d.dist(units[i], units[i + 1]);
            }
            let c = best[i] + d.dist(inst.depot, units[i]) + inner + d.dist(units[j - 1], inst.depot);
            if c < best[j] {
                best[j] = c;
                from[j] = i;
            }
        }
    }
    let mut tours = Vec::new();
    let mut j = u;
    while j > 0 {
        let i = from[j];
        let mut stops = vec![(inst.depot, 0)];
        stops.extend(units[i..j].iter().map(|&v| (v, 1)));
        stops.push((inst.depot, 0));
        tours.push(Route::new(0, stops).compact());
        j = i;
    }
    tours.reverse();
    Ok((best[u], tours))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    NotATour(usize),
    PreDelivery(usize),
    OverCapacity { tour: usize, total: u32 },
    UnknownVertex { tour: usize, vertex: usize },
    Delivery { vertex: usize, delivered: u64, required: u32 },
}

/// Checks tours against the instance and returns their cost, computed with
/// fresh single-source searches.
pub fn verify_solution(inst: &VrpInstance, tours: &[Route]) -> std::result::Result<Ticks, Vec<Violation>> {
    let n = inst.graph.n();
    let mut bad = Vec::new();
    let mut got = vec![0u64; n];
    for (i, t) in tours.iter().enumerate() {
        if !t.is_tour(inst.depot) {
            bad.push(Violation::NotATour(i));
        }
        if t.pre != 0 {
            bad.push(Violation::PreDelivery(i));
        }
        if t.total() > inst.capacity {
            bad.push(Violation::OverCapacity { tour: i, total: t.total() });
        }
        for &(v, k) in &t.stops {
            if v >= n {
                bad.push(Violation::UnknownVertex { tour: i, vertex: v });
            } else {
                got[v] += k as u64;
            }
        }
    }
    for v in 0..n {
        if got[v] != inst.demand[v] as u64 {
            bad.push(Violation::Delivery { vertex: v, delivered: got[v], required: inst.demand[v] });
        }
    }
    if !bad.is_empty() {
        return Err(bad);
    }
    let mut trees = std::collections::HashMap::new();
    let mut cost = 0;
    for t in tours {
        for w in t.stops.windows(2) {
            let tree = trees.entry(w[0].0).or_insert_with(|| dijkstra(&inst.graph, w[0].0));
            cost += tree.dist[w[1].0];
        }
    }
    Ok(cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn inst(g: crate::graph::WeightedGraph, capacity: u32, demand: Vec<u32>, depot: usize) -> VrpInstance {
        VrpInstance { graph: g, capacity, demand, depot }
    }

    #[test]
    fn path_examples() {
        let p = gen::path(3).graph;
        let (c, tours) = exact_vrp_oracle(&inst(p.clone(), 2, vec![0, 1, 1], 0)).unwrap();
        assert_eq!(c, 4);
        assert_eq!(verify_solution(&inst(p.clone(), 2, vec![0, 1, 1], 0), &tours), Ok(4));
        let (c, tours) = exact_vrp_oracle(&inst(p.clone(), 1, vec![0, 1, 1], 0)).unwrap();
        assert_eq!(c, 6);
        assert_eq!(tours.len(), 2);
    }

    #[test]
    fn star_example() {
        let s = gen::star(4).graph;
        let i = inst(s, 2, vec![0, 1, 1, 1, 1], 0);
        let (c, tours) = exact_vrp_oracle(&i).unwrap();
        assert_eq!(c, 8);
        assert_eq!(verify_solution(&i, &tours), Ok(8));
    }

    #[test]
    fn verify_flags_problems() {
        let p = gen::path(3).graph;
        let i = inst(p, 1, vec![0, 1, 1], 0);
        let t = vec![Route::parse("0 0 0 1 1 2 1 0 0").unwrap()];
        let err = verify_solution(&i, &t).unwrap_err();
        assert_eq!(err, vec![Violation::OverCapacity { tour: 0, total: 2 }]);
        let t = vec![Route::parse("0 0 0 1 1").unwrap()];
        let err = verify_solution(&i, &t).unwrap_err();
        assert!(err.contains(&Violation::NotATour(0)));
        assert!(err.contains(&Violation::Delivery { vertex: 2, delivered: 0, required: 1 }));
    }

    #[test]
    fn split_heuristic_is_feasible() {
        for seed in 0..20 {
            let p = gen::random_planar(9, seed);
            let n = p.graph.n();
            let demand = (0..n).map(|v| if v == 0 { 0 } else { (v as u32 * 7 + seed as u32) % 3 }).collect();
            let i = inst(p.graph, 2, demand, 0);
            let (c, tours) = split_heuristic(&i).unwrap();
            assert_eq!(verify_solution(&i, &tours), Ok(c));
        }
    }

    #[test]
    fn oracle_rejects_large_demand() {
        let p = gen::path(2).graph;
        assert!(matches!(
            exact_vrp_oracle(&inst(p, 3, vec![0, 13], 0)),
            Err(Error::ResourceLimit(_))
        ));
    }
}
