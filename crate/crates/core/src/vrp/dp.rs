//! Bottom-up table computation over a branch decomposition.
//!
//! Each table maps a configuration of a cluster to the cheapest partial
//! solution inducing it. Route ends meeting at a portal with matching
//! delivery counts are always concatenated, so a configuration stores one
//! signed count per (portal, q): positive for routes ending there, negative
//! for routes starting there. Two child tables are joined by choosing, per
//! delivery level, how many unmatched ends at vertices that stop being
//! portals are handed to the parent's portals, then closing everything else
//! with a min-cost flow. A join depends on its children only through the sum
//! of their signed counts.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::flow::{subnet_cost, FlowInstance, Subnet};
use super::oracle::split_heuristic;
use super::{eps_tilde, min_cost_flow, round_up_power, Configuration, Dir, FlowEnd, Route, VrpInstance};
use crate::decomp::{balance_depth, heuristic_branch_decomposition, BranchDecomposition, BranchNode, DepotPendant};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, DistanceOracle, Ticks, INFINITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// All flow values up to the cap; returns an optimum.
    Exact,
    /// Flow values rounded up to ceilings of powers of `1 + eps_tilde`.
    Constrained,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpOptions {
    pub mode: Mode,
    pub eps: f64,
    pub c_depth: usize,
    /// Largest flow value kept in a table; defaults to the total demand
    /// (rounded up to a constrained value in constrained mode).
    pub flow_cap: Option<u32>,
    /// Drop entries costlier than a heuristic solution.
    pub prune: bool,
    pub max_entries: usize,
    pub max_work: u64,
}

impl Default for DpOptions {
    fn default() -> Self {
        DpOptions {
            mode: Mode::Constrained,
            eps: 0.5,
            c_depth: 2,
            flow_cap: None,
            prune: true,
            max_entries: 1_000_000,
            max_work: 500_000_000,
        }
    }
}

/// Signed count per `portal_index * (Q + 1) + q`.
type Key = Box<[i16]>;

#[derive(Debug, Clone)]
enum How {
    Leaf(Vec<Route>),
    Join { k1: Key, k2: Key, pushes: Vec<(u32, Vec<i64>)> },
}

#[derive(Debug, Clone)]
struct Entry {
    cost: Ticks,
    how: How,
}

/// Configurations of one cluster with the cost of their best partial solution.
#[derive(Debug, Clone, Default)]
pub struct Table {
    portals: Vec<usize>,
    levels: usize,
    entries: BTreeMap<Key, Entry>,
}

impl Table {
    fn new(portals: Vec<usize>, capacity: u32) -> Self {
        Table { portals, levels: capacity as usize + 1, entries: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn portals(&self) -> &[usize] {
        &self.portals
    }

    fn configuration(&self, key: &[i16]) -> Configuration {
        let mut c = Configuration::default();
        for (s, &v) in key.iter().enumerate() {
            let (p, q) = (self.portals[s / self.levels], (s % self.levels) as u32);
            if v > 0 {
                c.add(p, q, Dir::Out, v as u32);
            } else if v < 0 {
                c.add(p, q, Dir::In, (-v) as u32);
            }
        }
        c
    }

    fn key(&self, c: &Configuration) -> Option<Key> {
        let mut key = vec![0i16; self.portals.len() * self.levels];
        for (&(p, q, dir), &v) in &c.0 {
            let i = self.portals.binary_search(&p).ok()?;
            if q as usize >= self.levels || key[i * self.levels + q as usize] != 0 {
                return None;
            }
            key[i * self.levels + q as usize] = match dir {
                Dir::Out => v as i16,
                Dir::In => -(v as i16),
            };
        }
        Some(key.into())
    }

    pub fn iter(&self) -> impl Iterator<Item = (Configuration, Ticks)> + '_ {
        self.entries.iter().map(|(k, e)| (self.configuration(k), e.cost))
    }

    pub fn cost(&self, c: &Configuration) -> Option<Ticks> {
        self.key(c).and_then(|k| self.entries.get(&k)).map(|e| e.cost)
    }

    fn insert(&mut self, key: Key, cost: Ticks, how: impl FnOnce() -> How) {
        match self.entries.get(&key) {
            Some(e) if e.cost <= cost => {}
            _ => {
                self.entries.insert(key, Entry { cost, how: how() });
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DpStats {
    pub eps_tilde: Option<f64>,
    pub flow_cap: u32,
    pub width: usize,
    pub depth: usize,
    pub table_sizes: Vec<usize>,
    pub work: u64,
    /// Heuristic cost used to prune entries, if any.
    pub bound: Option<Ticks>,
    /// Table cost at the root, including padding tours later dropped.
    pub table_cost: Ticks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DpSolution {
    pub tours: Vec<Route>,
    pub cost: Ticks,
    pub stats: DpStats,
}

/// Instance with a zero-cost pendant depot, as required by the tables.
#[derive(Debug, Clone)]
pub struct NormalizedInstance {
    pub inst: VrpInstance,
    pub pendant: DepotPendant,
}

impl NormalizedInstance {
    pub fn new(inst: &VrpInstance) -> Result<Self> {
        inst.validate()?;
        let pendant = DepotPendant::new(&inst.graph, inst.depot)?;
        let mut demand = inst.demand.clone();
        demand.push(0);
        let norm = VrpInstance {
            graph: pendant.graph.clone(),
            capacity: inst.capacity,
            demand,
            depot: pendant.depot,
        };
        Ok(NormalizedInstance { inst: norm, pendant })
    }

    /// Tours of the normalized graph as tours of the original one.
    pub fn to_original(&self, tours: &[Route]) -> Vec<Route> {
        tours
            .iter()
            .map(|t| {
                let stops = t.stops.iter().map(|&(v, k)| (self.pendant.to_original(v), k)).collect();
                Route::new(t.pre, stops).compact()
            })
            .collect()
    }
}

struct Ctx<'a> {
    inst: &'a VrpInstance,
    bd: &'a BranchDecomposition,
    d: DistanceOracle,
    eps_t: Option<f64>,
    cap: u32,
    bound: Ticks,
    /// Leaf responsible for delivering to each vertex.
    inside: Vec<usize>,
    max_entries: usize,
    max_work: u64,
    work: u64,
}

impl Ctx<'_> {
    fn levels(&self) -> usize {
        self.inst.capacity as usize + 1
    }

    /// Rounded magnitude of a signed count, or `None` above the cap.
    fn pad(&self, v: i16) -> Option<i16> {
        let m = v.unsigned_abs() as u64;
        let w = match self.eps_t {
            Some(e) => round_up_power(m, e),
            None => m,
        };
        (w <= self.cap as u64).then(|| if v < 0 { -(w as i16) } else { w as i16 })
    }

    fn portals(&self, node: usize) -> Vec<usize> {
        let mut p = self.bd.portals(node).to_vec();
        p.sort_unstable();
        p
    }

    fn charge(&mut self, units: u64) -> Result<()> {
        self.work += units;
        if self.work > self.max_work {
            return Err(Error::ResourceLimit(format!("table work exceeded {}", self.max_work)));
        }
        Ok(())
    }

    fn check_size(&self, len: usize) -> Result<()> {
        if len > self.max_entries {
            return Err(Error::ResourceLimit(format!("table size exceeded {} entries", self.max_entries)));
        }
        Ok(())
    }

    fn padding_route(&self, p: usize, q: u32, v: i16) -> Route {
        if v > 0 {
            Route::connector(q, self.inst.depot, p)
        } else {
            Route::connector(q, p, self.inst.depot)
        }
    }
}

/// Routes through one leaf edge: portal or depot start, one or two distinct
/// inside vertices with positive deliveries, portal or depot end.
fn route_shapes(ctx: &Ctx, portals: &[usize], inside: &[usize]) -> Vec<(Route, Vec<u32>)> {
    let q = ctx.inst.capacity;
    let depot = ctx.inst.depot;
    let mut starts: Vec<(usize, u32)> = vec![(depot, 0)];
    for &p in portals {
        starts.extend((0..=q).map(|pre| (p, pre)));
    }
    let mut ends = vec![depot];
    ends.extend_from_slice(portals);
    let mut middles: Vec<Vec<(usize, u32)>> = Vec::new();
    for (i, &a) in inside.iter().enumerate() {
        for k in 1..=q {
            middles.push(vec![(a, k)]);
        }
        for (j, &b) in inside.iter().enumerate() {
            if i == j {
                continue;
            }
            for ka in 1..q {
                for kb in 1..=q - ka {
                    middles.push(vec![(a, ka), (b, kb)]);
                }
            }
        }
    }
    let mut out = Vec::new();
    for &(s, pre) in &starts {
        for mid in &middles {
            let load: u32 = mid.iter().map(|m| m.1).sum();
            if pre + load > q {
                continue;
            }
            for &e in &ends {
                let mut stops = vec![(s, 0)];
                stops.extend_from_slice(mid);
                stops.push((e, 0));
                let r = Route::new(pre, stops).compact();
                let used = inside.iter().map(|&v| mid.iter().filter(|m| m.0 == v).map(|m| m.1).sum()).collect();
                out.push((r, used));
            }
        }
    }
    out
}

fn leaf(ctx: &mut Ctx, node: usize, edge: usize) -> Result<Table> {
    let e = ctx.inst.graph.edge(edge);
    let portals = ctx.portals(node);
    let levels = ctx.levels();
    let mut inside: Vec<usize> = vec![e.u, e.v];
    inside.dedup();
    inside.retain(|&v| ctx.inside[v] == node && ctx.inst.demand[v] > 0);
    let need: Vec<u32> = inside.iter().map(|&v| ctx.inst.demand[v]).collect();
    let shapes = route_shapes(ctx, &portals, &inside);
    let slot = |p: usize, q: u32| portals.binary_search(&p).ok().map(|i| i * levels + q as usize);
    let mut states: BTreeMap<(Vec<u32>, Key), (Ticks, Vec<Route>)> = BTreeMap::new();
    states.insert((need, vec![0i16; portals.len() * levels].into()), (0, Vec::new()));
    for (r, used) in &shapes {
        let rc = r.cost(&ctx.d);
        let (s_in, s_out) = (slot(r.start(), r.pre), slot(r.end(), r.total()));
        let mut frontier: Vec<(Vec<u32>, Key)> = states.keys().cloned().collect();
        while !frontier.is_empty() {
            ctx.charge(frontier.len() as u64)?;
            let mut next = Vec::new();
            for key in frontier {
                if key.0.iter().zip(used).any(|(have, u)| u > have) {
                    continue;
                }
                let (c, routes) = &states[&key];
                let cost = c + rc;
                if cost > ctx.bound {
                    continue;
                }
                let rem: Vec<u32> = key.0.iter().zip(used).map(|(h, u)| h - u).collect();
                let mut k = key.1.clone();
                if let Some(s) = s_in {
                    k[s] -= 1;
                }
                if let Some(s) = s_out {
                    k[s] += 1;
                }
                if k.iter().any(|v| v.unsigned_abs() as u32 > ctx.cap) {
                    continue;
                }
                let nk = (rem, k);
                if states.get(&nk).map_or(true, |s| s.0 > cost) {
                    let mut routes = routes.clone();
                    routes.push(r.clone());
                    states.insert(nk.clone(), (cost, routes));
                    next.push(nk);
                }
            }
            frontier = next;
        }
        ctx.check_size(states.len())?;
    }
    let mut table = Table::new(portals.clone(), ctx.inst.capacity);
    for ((rem, k), (cost, routes)) in states {
        if rem.iter().any(|&x| x > 0) {
            continue;
        }
        let mut padded = k.clone();
        let mut extra = Vec::new();
        let mut pad_cost = 0;
        let mut ok = true;
        for (s, v) in padded.iter_mut().enumerate() {
            if *v == 0 {
                continue;
            }
            let Some(w) = ctx.pad(*v) else {
                ok = false;
                break;
            };
            let (p, q) = (portals[s / levels], (s % levels) as u32);
            let n = (w - *v).unsigned_abs() as usize;
            pad_cost += n as Ticks * ctx.d.dist(ctx.inst.depot, p);
            extra.extend(std::iter::repeat(ctx.padding_route(p, q, w)).take(n));
            *v = w;
        }
        if !ok || cost + pad_cost > ctx.bound {
            continue;
        }
        table.insert(padded, cost + pad_cost, || {
            let mut routes = glue(routes, ctx.inst.depot);
            routes.extend(extra);
            How::Leaf(routes)
        });
    }
    Ok(table)
}

/// Vertices seen by a join: portals of either child, split into those that
/// stay portals of the parent and those that close.
struct JoinFrame {
    fi: FlowInstance,
    kept: Vec<usize>,
    closed: Vec<usize>,
}

fn frame(ctx: &Ctx, node: usize, c1: usize, c2: usize) -> JoinFrame {
    let p0 = ctx.portals(node);
    let mut verts = ctx.portals(c1);
    verts.extend(ctx.portals(c2));
    verts.sort_unstable();
    verts.dedup();
    let mut fi = FlowInstance::new(ctx.inst.depot, verts, &ctx.d);
    let mut kept = Vec::new();
    let mut closed = Vec::new();
    for (i, v) in fi.vertices.iter().enumerate() {
        if p0.binary_search(v).is_ok() {
            kept.push(i);
        } else {
            closed.push(i);
        }
    }
    for &i in &kept {
        fi.detached[i] = true;
    }
    JoinFrame { fi, kept, closed }
}

/// Supplies for one level: closed vertices carry their open ends, kept
/// vertices absorb (`x > 0`) or emit (`x < 0`) handed-over ends.
fn supplies(f: &JoinFrame, open: &[i64], x: &[i64]) -> Vec<i64> {
    let mut s = vec![0; open.len()];
    for &i in &f.closed {
        s[i] = open[i];
    }
    for (j, &i) in f.kept.iter().enumerate() {
        s[i] = -x[j];
    }
    s
}

/// Every handover vector: at most `ends` open ends and `starts` open starts
/// spread over `k` kept vertices, one direction per vertex.
fn handovers(k: usize, ends: i64, starts: i64) -> Vec<Vec<i64>> {
    fn rec(k: usize, ends: i64, starts: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in -starts..=ends {
            cur.push(x);
            rec(k, ends - x.max(0), starts - (-x).max(0), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, ends, starts, &mut Vec::with_capacity(k), &mut out);
    out
}

/// One way to close a level: parent slots `(kept index, signed count)`,
/// cost including padding, and the handover vector.
struct LevelOption {
    cost: Ticks,
    parts: Vec<(usize, i16)>,
    x: Vec<i64>,
}

fn level_options(ctx: &mut Ctx, f: &JoinFrame, q: u32, open: &[i64]) -> Result<Vec<LevelOption>> {
    let ends: i64 = f.closed.iter().map(|&i| open[i].max(0)).sum();
    let starts: i64 = f.closed.iter().map(|&i| (-open[i]).max(0)).sum();
    let hs = handovers(f.kept.len(), ends, starts);
    ctx.charge(hs.len() as u64)?;
    let mut best: BTreeMap<Vec<(usize, i16)>, (Ticks, Vec<i64>)> = BTreeMap::new();
    'outer: for x in hs {
        let mut parts = Vec::new();
        let mut cost = 0;
        for (j, &i) in f.kept.iter().enumerate() {
            let net = open[i] + x[j];
            if net == 0 {
                continue;
            }
            let Some(w) = ctx.pad(net as i16) else { continue 'outer };
            cost += (w as i64 - net).abs() * ctx.d.dist(ctx.inst.depot, f.fi.vertices[i]);
            parts.push((j, w));
        }
        let supply = supplies(f, open, &x);
        if supply.iter().any(|&s| s != 0) {
            cost += subnet_cost(&f.fi, &Subnet { q, supply });
        }
        match best.get(&parts) {
            Some((c, _)) if *c <= cost => {}
            _ => {
                best.insert(parts, (cost, x));
            }
        }
    }
    let mut out: Vec<LevelOption> =
        best.into_iter().map(|(parts, (cost, x))| LevelOption { cost, parts, x }).collect();
    out.sort_by(|a, b| (a.cost, &a.parts).cmp(&(b.cost, &b.parts)));
    Ok(out)
}

type Memo = HashMap<(usize, Vec<i16>), Rc<Vec<LevelOption>>>;

fn options(ctx: &mut Ctx, f: &JoinFrame, memo: &mut Memo, q: usize, open: &[i16]) -> Result<Rc<Vec<LevelOption>>> {
    if let Some(o) = memo.get(&(q, open.to_vec())) {
        return Ok(o.clone());
    }
    let open64: Vec<i64> = open.iter().map(|&v| v as i64).collect();
    let o = Rc::new(level_options(ctx, f, q as u32, &open64)?);
    memo.insert((q, open.to_vec()), o.clone());
    Ok(o)
}

/// Join state after fixing the parent slots of some levels: cost so far,
/// the child entries it came from and the option picked per level.
struct Partial {
    cost: Ticks,
    pair: (usize, usize),
    picks: Vec<(u32, Rc<Vec<LevelOption>>, usize)>,
}

/// Signed counts of a child key spread over the frame's vertices, level-major.
fn spread(key: &[i16], child_portals: &[usize], f: &JoinFrame, levels: usize) -> Vec<i16> {
    let nv = f.fi.vertices.len();
    let mut out = vec![0i16; nv * levels];
    for (i, p) in child_portals.iter().enumerate() {
        let vi = f.fi.node_of(*p).expect("child portal in frame");
        for q in 0..levels {
            out[q * nv + vi] = key[i * levels + q];
        }
    }
    out
}

fn join(ctx: &mut Ctx, node: usize, t1: &Table, t2: &Table) -> Result<Table> {
    let BranchNode::Inner(c1, c2) = ctx.bd.node(node) else { unreachable!() };
    let f = frame(ctx, node, c1, c2);
    let levels = ctx.levels();
    let nv = f.fi.vertices.len();
    fn side<'t>(t: &'t Table, f: &JoinFrame, levels: usize) -> Vec<(Vec<i16>, Ticks, &'t Key)> {
        t.entries.iter().map(|(k, e)| (spread(k, &t.portals, f, levels), e.cost, k)).collect()
    }
    let (s1, s2) = (side(t1, &f, levels), side(t2, &f, levels));
    if f.kept.is_empty() {
        return close_join(ctx, node, &f, &s1, &s2);
    }
    ctx.charge((s1.len() * s2.len()) as u64)?;
    let mut sums: HashMap<Vec<i16>, (Ticks, usize, usize)> = HashMap::new();
    for (a, (pa, ca, _)) in s1.iter().enumerate() {
        for (b, (pb, cb, _)) in s2.iter().enumerate() {
            let c = ca + cb;
            if c > ctx.bound {
                continue;
            }
            let s: Vec<i16> = pa.iter().zip(pb).map(|(x, y)| x + y).collect();
            match sums.get(&s) {
                Some(&(best, _, _)) if best <= c => {}
                _ => {
                    sums.insert(s, (c, a, b));
                }
            }
        }
    }
    let mut sums: Vec<(Vec<i16>, (Ticks, usize, usize))> = sums.into_iter().collect();
    sums.sort_unstable();
    let width0 = ctx.portals(node).len() * levels;
    let mut memo: Memo = HashMap::new();
    let mut states: HashMap<Vec<i16>, Partial> = HashMap::with_capacity(sums.len());
    for (s, (cost, a, b)) in sums {
        let mut k = vec![0i16; width0];
        k.extend(s);
        states.insert(k, Partial { cost, pair: (a, b), picks: Vec::new() });
    }
    for q in 0..levels {
        let mut next: HashMap<Vec<i16>, Partial> = HashMap::new();
        'states: for (k, st) in states {
            let (prefix, open, rest) = (&k[..width0], &k[width0..width0 + nv], &k[width0 + nv..]);
            let mut lb = 0;
            for (r, o) in rest.chunks(nv).enumerate() {
                if o.iter().any(|&v| v != 0) {
                    let opts = options(ctx, &f, &mut memo, q + 1 + r, o)?;
                    match opts.first() {
                        Some(best) => lb += best.cost,
                        None => continue 'states,
                    }
                }
            }
            if st.cost + lb > ctx.bound {
                continue;
            }
            let mut push = |key: Vec<i16>, p: Partial| match next.get(&key) {
                Some(old) if old.cost <= p.cost => {}
                _ => {
                    next.insert(key, p);
                }
            };
            if open.iter().all(|&v| v == 0) {
                let mut key = prefix.to_vec();
                key.extend_from_slice(rest);
                push(key, st);
                continue;
            }
            let opts = options(ctx, &f, &mut memo, q, open)?;
            for (i, o) in opts.iter().enumerate() {
                let cost = st.cost + o.cost;
                if cost + lb > ctx.bound {
                    break;
                }
                let mut key = prefix.to_vec();
                for &(j, w) in &o.parts {
                    key[j * levels + q] = w;
                }
                key.extend_from_slice(rest);
                let mut picks = st.picks.clone();
                picks.push((q as u32, opts.clone(), i));
                push(key, Partial { cost, pair: st.pair, picks });
            }
        }
        ctx.charge(next.len() as u64)?;
        states = next;
    }
    let mut table = Table::new(ctx.portals(node), ctx.inst.capacity);
    for (k, st) in states {
        let (a, b) = st.pair;
        table.insert(k.into(), st.cost, || How::Join {
            k1: s1[a].2.clone(),
            k2: s2[b].2.clone(),
            pushes: st.picks.iter().map(|(q, o, i)| (*q, o[*i].x.clone())).collect(),
        });
    }
    ctx.check_size(table.len())?;
    Ok(table)
}

type Side<'t> = [(Vec<i16>, Ticks, &'t Key)];

/// Join into a cluster without portals: its only entry is the cheapest
/// pair closed completely. Pairs are scanned by cost and the bound drops to
/// the best closed pair found so far.
fn close_join(ctx: &mut Ctx, node: usize, f: &JoinFrame, s1: &Side, s2: &Side) -> Result<Table> {
    let levels = ctx.levels();
    let nv = f.fi.vertices.len();
    let by_cost = |s: &Side| {
        let mut o: Vec<usize> = (0..s.len()).collect();
        o.sort_by_key(|&i| (s[i].1, i));
        o
    };
    let (o1, o2) = (by_cost(s1), by_cost(s2));
    let mut memo: Memo = HashMap::new();
    let mut limit = ctx.bound;
    let mut best: Option<(Ticks, usize, usize, Vec<(u32, Vec<i64>)>)> = None;
    let mut sum = vec![0i16; nv * levels];
    for &a in &o1 {
        let Some(&b0) = o2.first() else { break };
        if s1[a].1 + s2[b0].1 > limit {
            break;
        }
        'pairs: for &b in &o2 {
            let mut cost = s1[a].1 + s2[b].1;
            if cost > limit || (best.is_some() && cost >= limit) {
                break;
            }
            ctx.charge(1)?;
            for (x, (y, z)) in sum.iter_mut().zip(s1[a].0.iter().zip(&s2[b].0)) {
                *x = y + z;
            }
            let mut pushes = Vec::new();
            for (q, open) in sum.chunks(nv).enumerate() {
                if open.iter().all(|&v| v == 0) {
                    continue;
                }
                let opts = options(ctx, f, &mut memo, q, open)?;
                let Some(o) = opts.first() else { continue 'pairs };
                cost += o.cost;
                if cost > limit || (best.is_some() && cost >= limit) {
                    continue 'pairs;
                }
                pushes.push((q as u32, o.x.clone()));
            }
            limit = cost;
            best = Some((cost, a, b, pushes));
        }
    }
    let mut table = Table::new(ctx.portals(node), ctx.inst.capacity);
    if let Some((cost, a, b, pushes)) = best {
        table.insert(Vec::new().into(), cost, || How::Join { k1: s1[a].2.clone(), k2: s2[b].2.clone(), pushes });
    }
    Ok(table)
}

/// Concatenates routes greedily at non-depot junctions until none compose.
fn glue(routes: Vec<Route>, depot: usize) -> Vec<Route> {
    let mut slots: Vec<Option<Route>> = routes.into_iter().map(Some).collect();
    loop {
        let mut starts: BTreeMap<(usize, u32), Vec<usize>> = BTreeMap::new();
        for (j, r) in slots.iter().enumerate() {
            if let Some(r) = r {
                if r.start() != depot {
                    starts.entry((r.start(), r.pre)).or_default().push(j);
                }
            }
        }
        let mut changed = false;
        for i in 0..slots.len() {
            let Some(r1) = &slots[i] else { continue };
            let (end, total) = (r1.end(), r1.total());
            if end == depot {
                continue;
            }
            let Some(list) = starts.get_mut(&(end, total)) else { continue };
            let Some(pos) = list.iter().position(|&j| j != i && slots[j].is_some()) else { continue };
            let j = list.remove(pos);
            let r2 = slots[j].take().unwrap();
            let joined = super::route_concat(slots[i].as_ref().unwrap(), &r2).expect("matched junction");
            slots[i] = Some(joined);
            changed = true;
        }
        if !changed {
            break;
        }
    }
    slots.into_iter().flatten().collect()
}

/// All tables of a run, able to rebuild the partial solution of any entry.
pub struct DpTables<'a> {
    ctx: Ctx<'a>,
    pub tables: Vec<Table>,
}

impl DpTables<'_> {
    pub fn eps_tilde(&self) -> Option<f64> {
        self.ctx.eps_t
    }

    pub fn flow_cap(&self) -> u32 {
        self.ctx.cap
    }

    /// The partial solution stored for configuration `c` of cluster `node`,
    /// checked to induce `c`, to cost the stored amount and to consist of
    /// feasible routes between portals and the depot.
    pub fn solution(&self, node: usize, c: &Configuration) -> Result<Vec<Route>> {
        let missing = || Error::Consistency(format!("cluster {node} has no entry for {c:?}"));
        let key = self.tables[node].key(c).ok_or_else(missing)?;
        self.rebuild(node, &key)
    }

    fn rebuild(&self, node: usize, key: &Key) -> Result<Vec<Route>> {
        let table = &self.tables[node];
        let e = table
            .entries
            .get(key)
            .ok_or_else(|| Error::Consistency(format!("cluster {node} lost an entry")))?;
        let depot = self.ctx.inst.depot;
        let levels = self.ctx.levels();
        let routes = match &e.how {
            How::Leaf(r) => r.clone(),
            How::Join { k1, k2, pushes } => {
                let BranchNode::Inner(c1, c2) = self.ctx.bd.node(node) else {
                    return Err(Error::Consistency(format!("cluster {node} is not a join")));
                };
                let mut routes = self.rebuild(c1, k1)?;
                routes.extend(self.rebuild(c2, k2)?);
                let f = frame(&self.ctx, node, c1, c2);
                let nv = f.fi.vertices.len();
                let p1 = spread(k1, &self.tables[c1].portals, &f, levels);
                let p2 = spread(k2, &self.tables[c2].portals, &f, levels);
                let mut fi = f.fi.clone();
                for (q, x) in pushes {
                    let open: Vec<i64> =
                        (0..nv).map(|i| (p1[*q as usize * nv + i] + p2[*q as usize * nv + i]) as i64).collect();
                    fi.subnets.push(Subnet { q: *q, supply: supplies(&f, &open, x) });
                }
                let vert = |e: FlowEnd| match e {
                    FlowEnd::Depot => depot,
                    FlowEnd::Node(i) => fi.vertices[i],
                };
                for a in min_cost_flow(&fi).arcs {
                    routes.push(Route::connector(a.q, vert(a.tail), vert(a.head)));
                }
                let mut routes = glue(routes, depot);
                let raw = Configuration::induced(&routes, &table.portals);
                let raw = table
                    .key(&raw)
                    .ok_or_else(|| Error::Consistency(format!("cluster {node} left opposite ends unglued")))?;
                for (s, (&want, &have)) in key.iter().zip(raw.iter()).enumerate() {
                    if want.signum() * have.signum() < 0 || have.abs() > want.abs() {
                        return Err(Error::Consistency(format!("cluster {node} slot {s} overfull")));
                    }
                    let (p, q) = (table.portals[s / levels], (s % levels) as u32);
                    let r = self.ctx.padding_route(p, q, want);
                    routes.extend(std::iter::repeat(r).take((want - have).unsigned_abs() as usize));
                }
                routes
            }
        };
        if table.key(&Configuration::induced(&routes, &table.portals)).as_ref() != Some(key) {
            return Err(Error::Consistency(format!("cluster {node} routes do not induce their key")));
        }
        let cost: Ticks = routes.iter().map(|r| r.cost(&self.ctx.d)).sum();
        if cost != e.cost {
            return Err(Error::Consistency(format!("cluster {node} routes cost {cost}, table says {}", e.cost)));
        }
        for r in &routes {
            let endpoint_ok = |v: usize| v == depot || table.portals.binary_search(&v).is_ok();
            if !endpoint_ok(r.start()) || !endpoint_ok(r.end()) || !r.is_feasible(self.ctx.inst.capacity, depot) {
                return Err(Error::Consistency(format!("cluster {node} holds a bad route {r}")));
            }
        }
        Ok(routes)
    }
}

fn check_normalized(inst: &VrpInstance) -> Result<()> {
    inst.validate()?;
    if inst.graph.degree(inst.depot) != 1 || inst.demand[inst.depot] != 0 {
        return Err(Error::InvalidParameter(
            "depot must be a demand-free vertex of degree one; normalize the instance first".into(),
        ));
    }
    Ok(())
}

fn context<'a>(inst: &'a VrpInstance, bd: &'a BranchDecomposition, opts: &DpOptions) -> Result<Ctx<'a>> {
    check_normalized(inst)?;
    if opts.mode == Mode::Constrained && !(opts.eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps {} must be positive", opts.eps)));
    }
    let g = &inst.graph;
    let d = all_pairs(g)?;
    let eps_t = match opts.mode {
        Mode::Exact => None,
        Mode::Constrained => Some(eps_tilde(opts.eps, opts.c_depth.max(1), inst.capacity, g.n())),
    };
    let total = inst.total_demand().max(1);
    let cap = opts.flow_cap.unwrap_or(match eps_t {
        Some(e) => round_up_power(total as u64, e) as u32,
        None => total,
    });
    if cap > i16::MAX as u32 {
        return Err(Error::ResourceLimit(format!("flow cap {cap} exceeds {}", i16::MAX)));
    }
    let bound = if opts.prune { split_heuristic(inst)?.0 } else { INFINITY };
    let mut inside = vec![usize::MAX; g.n()];
    for (v, slot) in inside.iter_mut().enumerate() {
        if let Some(&(_, e)) = g.neighbors(v).iter().min_by_key(|x| x.1) {
            *slot = bd.leaf_of_edge(e);
        }
    }
    Ok(Ctx {
        inst,
        bd,
        d,
        eps_t,
        cap,
        bound,
        inside,
        max_entries: opts.max_entries,
        max_work: opts.max_work,
        work: 0,
    })
}

/// Computes every table bottom-up.
pub fn dp_tables<'a>(inst: &'a VrpInstance, bd: &'a BranchDecomposition, opts: &DpOptions) -> Result<DpTables<'a>> {
    let mut ctx = context(inst, bd, opts)?;
    let mut tables: Vec<Table> = vec![Table::default(); bd.nodes().len()];
    for node in bd.postorder() {
        let t = match bd.node(node) {
            BranchNode::Leaf(e) => leaf(&mut ctx, node, e)?,
            BranchNode::Inner(a, b) => join(&mut ctx, node, &tables[a], &tables[b])?,
        };
        tables[node] = t;
    }
    Ok(DpTables { ctx, tables })
}

/// Runs the tables on a normalized instance and returns the root's tours.
/// Tours are reported with zero pre-delivery, and padding tours that deliver
/// nothing are dropped. If pruning against the heuristic bound leaves no
/// solution, the tables are recomputed without it.
pub fn solve_vrp_dp(inst: &VrpInstance, bd: &BranchDecomposition, opts: &DpOptions) -> Result<DpSolution> {
    let tables = dp_tables(inst, bd, opts)?;
    let root = bd.root();
    let empty = Configuration::default();
    let Some(table_cost) = tables.tables[root].cost(&empty) else {
        if opts.prune {
            return solve_vrp_dp(inst, bd, &DpOptions { prune: false, ..opts.clone() });
        }
        return Err(Error::ResourceLimit(format!("no solution within flow cap {}", tables.flow_cap())));
    };
    let routes = tables.solution(root, &empty)?;
    let mut tours = Vec::new();
    for r in routes {
        if !r.is_tour(inst.depot) {
            return Err(Error::Consistency(format!("root route {r} is not a tour")));
        }
        if r.internal() > 0 {
            tours.push(Route { pre: 0, ..r });
        }
    }
    let cost = tours.iter().map(|t| t.cost(&tables.ctx.d)).sum();
    let stats = DpStats {
        eps_tilde: tables.eps_tilde(),
        flow_cap: tables.flow_cap(),
        width: bd.width(),
        depth: bd.depth(),
        table_sizes: tables.tables.iter().map(|t| t.len()).collect(),
        work: tables.ctx.work,
        bound: (tables.ctx.bound < INFINITY).then_some(tables.ctx.bound),
        table_cost,
    };
    Ok(DpSolution { tours, cost, stats })
}

/// Normalizes the depot, builds a depth-balanced branch decomposition and
/// solves; tours refer to the original graph.
pub fn solve(inst: &VrpInstance, opts: &DpOptions) -> Result<DpSolution> {
    let norm = NormalizedInstance::new(inst)?;
    let g = &norm.inst.graph;
    let bd = heuristic_branch_decomposition(g)?;
    let bd = balance_depth(g, &bd, opts.c_depth.max(1));
    let mut sol = solve_vrp_dp(&norm.inst, &bd, opts)?;
    sol.tours = norm.to_original(&sol.tours);
    Ok(sol)
}

/// Leaf table of a single-edge cluster of a normalized instance.
pub fn leaf_table(inst: &VrpInstance, bd: &BranchDecomposition, node: usize, opts: &DpOptions) -> Result<Table> {
    let BranchNode::Leaf(e) = bd.node(node) else {
        return Err(Error::InvalidParameter(format!("cluster {node} is not a leaf")));
    };
    leaf(&mut context(inst, bd, opts)?, node, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::vrp::{exact_vrp_oracle, verify_solution};

    fn exact() -> DpOptions {
        DpOptions { mode: Mode::Exact, ..Default::default() }
    }

    fn path_inst(q: u32) -> VrpInstance {
        VrpInstance { graph: gen::path(3).graph, capacity: q, demand: vec![0, 1, 1], depot: 0 }
    }

    #[test]
    fn path_examples() {
        for (q, want) in [(2, 4), (1, 6)] {
            let inst = path_inst(q);
            for opts in [exact(), DpOptions::default(), DpOptions { prune: false, ..exact() }] {
                let sol = solve(&inst, &opts).unwrap();
                assert_eq!(sol.cost, want);
                assert_eq!(verify_solution(&inst, &sol.tours), Ok(want));
            }
        }
    }

    #[test]
    fn star_matches_oracle() {
        let inst = VrpInstance { graph: gen::star(4).graph, capacity: 2, demand: vec![0, 1, 1, 1, 1], depot: 0 };
        let sol = solve(&inst, &DpOptions { prune: false, ..exact() }).unwrap();
        assert_eq!(sol.cost, 8);
        assert_eq!(verify_solution(&inst, &sol.tours), Ok(8));
    }

    #[test]
    fn handover_vectors() {
        assert_eq!(handovers(0, 3, 3), vec![Vec::<i64>::new()]);
        assert_eq!(handovers(2, 1, 0), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
        assert_eq!(handovers(1, 1, 2).len(), 4);
    }

    #[test]
    fn glue_skips_depot_junctions() {
        let a = Route::parse("0 9 0 1 1").unwrap();
        let b = Route::parse("1 1 0 9 0").unwrap();
        let c = Route::parse("0 9 0 2 1 9 0").unwrap();
        let out = glue(vec![a, b, c.clone()], 9);
        assert_eq!(out.len(), 2);
        assert!(out.contains(&Route::parse("0 9 0 1 1 9 0").unwrap()));
        assert!(out.contains(&c));
    }

    #[test]
    fn leaf_examples() {
        let inst = VrpInstance { graph: gen::path(2).graph, capacity: 1, demand: vec![0, 1], depot: 0 };
        let norm = NormalizedInstance::new(&inst).unwrap();
        let bd = heuristic_branch_decomposition(&norm.inst.graph).unwrap();
        let t = leaf_table(&norm.inst, &bd, bd.leaf_of_edge(0), &exact()).unwrap();
        assert_eq!(t.cost(&Configuration::default()), Some(2));
        let t = leaf_table(&norm.inst, &bd, bd.leaf_of_edge(1), &exact()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.cost(&Configuration::default()), Some(0));
    }

    #[test]
    fn every_entry_rebuilds() {
        let p = gen::grid(2, 3);
        let inst = VrpInstance { graph: p.graph, capacity: 2, demand: vec![0, 1, 0, 2, 0, 1], depot: 0 };
        let norm = NormalizedInstance::new(&inst).unwrap();
        let bd = heuristic_branch_decomposition(&norm.inst.graph).unwrap();
        for opts in [exact(), DpOptions { eps: 1.0, flow_cap: Some(8), ..Default::default() }] {
            let opts = DpOptions { prune: false, ..opts };
            let tables = dp_tables(&norm.inst, &bd, &opts).unwrap();
            for (node, t) in tables.tables.iter().enumerate() {
                for (c, cost) in t.iter() {
                    let routes = tables.solution(node, &c).unwrap();
                    assert_eq!(routes.iter().map(|r| r.cost(&tables.ctx.d)).sum::<Ticks>(), cost);
                }
            }
        }
    }

    #[test]
    fn random_small_instances_match_oracle() {
        for seed in 0..15u64 {
            let p = gen::random_planar(6 + (seed % 3) as usize, seed);
            let n = p.graph.n();
            let mut demand = vec![0; n];
            let mut r = gen::rng(seed);
            for v in gen::sample_vertices(&(1..n).collect::<Vec<_>>(), 3, &mut r) {
                demand[v] += 1;
            }
            let inst = VrpInstance { graph: p.graph, capacity: 1 + (seed % 3) as u32, demand, depot: 0 };
            let (opt, _) = exact_vrp_oracle(&inst).unwrap();
            for prune in [true, false] {
                let sol = solve(&inst, &DpOptions { prune, ..exact() }).unwrap();
                assert_eq!(verify_solution(&inst, &sol.tours), Ok(sol.cost));
                assert_eq!(sol.cost, opt, "seed {seed}");
            }
        }
    }
}
