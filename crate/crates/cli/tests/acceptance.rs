//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Numeric arguments select criteria.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use twroute::decomp::{balance_depth, heuristic_branch_decomposition};
use twroute::embed::{band_partition, embed_planar_low_tw, embed_rooted, EmbedOptions, OneToManyEmbedding};
use twroute::gen;
use twroute::graph::{all_pairs, cut_along, dijkstra, CutSpec, DistanceOracle};
use twroute::planar::{fundamental_cycle_separator, grid_apex_generator, metric_triangulate};
use twroute::vrp::{
    dp_tables, exact_vrp_oracle, min_cost_flow, solve, verify_solution, DpOptions, FlowInstance, Mode,
    NormalizedInstance, PipelineOptions, Subnet, VrpInstance, ORACLE_DEMAND_CAP,
};
use twroute::{Ticks, WeightedGraph, INFINITY};
use twroute_cli::cmd_pipeline;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.1} s of {} s allowed", t.as_secs_f64(), limit.as_secs()))
}

/// Trees, cycles and random planar graphs with n <= 10, total demand <= 6
/// and Q in {1, 2, 3}.
fn suite() -> Vec<VrpInstance> {
    (0..210u64)
        .map(|i| {
            let n = 3 + (i as usize * 7) % 8;
            let p = match i % 3 {
                0 => gen::random_tree(n, i, 5),
                1 => gen::random_cycle(n, i, 5),
                _ => gen::random_planar_weighted(n, i, 5),
            };
            let n = p.graph.n();
            let depot = (i as usize * 5) % n;
            let total = ((i / 9) % 7) as u32;
            VrpInstance {
                graph: p.graph,
                capacity: 1 + ((i / 3) % 3) as u32,
                demand: gen::random_demand(n, depot, total, i),
                depot,
            }
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let suite = suite();
    let mut bad = Vec::new();
    for (i, inst) in suite.iter().enumerate() {
        let (opt, _) = exact_vrp_oracle(inst).expect("oracle");
        let sol = solve(inst, &DpOptions { mode: Mode::Exact, ..Default::default() }).expect("dp");
        if sol.cost != opt || verify_solution(inst, &sol.tours) != Ok(opt) {
            bad.push((i, sol.cost, opt));
        }
    }
    let (fast, time) = within(start, Duration::from_secs(300));
    outcome(
        bad.is_empty() && fast,
        format!("{} instances, {} mismatches {:?}; {time}", suite.len(), bad.len(), &bad[..bad.len().min(5)]),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let suite = suite();
    let mut bad = Vec::new();
    let mut worst: f64 = 1.0;
    for (i, inst) in suite.iter().enumerate() {
        let (opt, _) = exact_vrp_oracle(inst).expect("oracle");
        let mut costs = Vec::new();
        for eps in [0.25, 0.5, 1.0] {
            let sol = solve(inst, &DpOptions { mode: Mode::Constrained, eps, ..Default::default() }).expect("dp");
            let feasible = verify_solution(inst, &sol.tours) == Ok(sol.cost);
            let envelope = sol.cost as f64 <= (1.0 + 5.0 * eps) * opt as f64;
            if !feasible || sol.cost < opt || !envelope {
                bad.push(format!("#{i} eps {eps}: cost {} opt {opt} feasible {feasible}", sol.cost));
            }
            if opt > 0 {
                worst = worst.max(sol.cost as f64 / opt as f64);
            }
            costs.push(sol.cost);
        }
        if costs[0] > costs[2] {
            bad.push(format!("#{i}: cost {} at eps 0.25 above {} at eps 1", costs[0], costs[2]));
        }
    }
    let (fast, time) = within(start, Duration::from_secs(1200));
    outcome(
        bad.is_empty() && fast,
        format!("{} instances x 3 eps, worst ratio {worst:.4}, {} failures {:?}; {time}", suite.len(), bad.len(), &bad[..bad.len().min(3)]),
    )
}

/// Whether `v` is zero or `ceil((1 + e)^j)` for some `j >= 0`.
fn constrained(v: u64, e: f64) -> bool {
    if v == 0 {
        return true;
    }
    (0..)
        .map(|j| (1.0 + e).powi(j).ceil() as u64)
        .find(|&c| c >= v)
        .is_some_and(|c| c == v)
}

fn criterion_3() -> Outcome {
    let (mut checked, mut bad, mut eps_bad) = (0u64, 0u64, 0usize);
    for inst in suite().iter().filter(|i| i.total_demand() > 0).take(120) {
        let norm = NormalizedInstance::new(inst).expect("normalize");
        let g = &norm.inst.graph;
        let bd = balance_depth(g, &heuristic_branch_decomposition(g).expect("bd"), 2);
        for eps in [0.25, 0.5, 1.0] {
            let opts = DpOptions { mode: Mode::Constrained, eps, ..Default::default() };
            let t = dp_tables(&norm.inst, &bd, &opts).expect("tables");
            let e = t.eps_tilde().expect("constrained mode rounds");
            let log = (g.n() as f64).log2().ceil().max(1.0);
            if (e - eps / (2.0 * inst.capacity as f64 * log)).abs() > 1e-12 {
                eps_bad += 1;
            }
            for table in &t.tables {
                for (c, _) in table.iter() {
                    for v in c.values() {
                        checked += 1;
                        if !constrained(v as u64, e) {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    outcome(
        bad == 0 && eps_bad == 0 && checked > 0,
        format!("{checked} table values checked, {bad} outside the rounded set, {eps_bad} wrong rounding bases"),
    )
}

/// Single-source distances in `g` by a textbook binary-heap Dijkstra.
fn sssp(g: &WeightedGraph, s: usize) -> Vec<Ticks> {
    let mut d = vec![INFINITY; g.n()];
    let mut h = BinaryHeap::new();
    d[s] = 0;
    h.push(Reverse((0, s)));
    while let Some(Reverse((dx, x))) = h.pop() {
        if dx > d[x] {
            continue;
        }
        for &(y, e) in g.neighbors(x) {
            let nd = dx + g.edge(e).w;
            if nd < d[y] {
                d[y] = nd;
                h.push(Reverse((nd, y)));
            }
        }
    }
    d
}

/// Maximum of `d_H(x, y) - d_G(f^-1 x, f^-1 y)` over all pairs of image
/// vertices (copies of one vertex included), and the number of pairs where
/// the host is shorter.
fn exhaustive_error(g: &DistanceOracle, emb: &OneToManyEmbedding) -> (Ticks, usize) {
    let imaged: Vec<usize> = (0..emb.host.n()).filter(|&x| emb.preimage[x].is_some()).collect();
    let (mut worst, mut below) = (0, 0);
    for (i, &a) in imaged.iter().enumerate() {
        let dh = sssp(&emb.host, a);
        for &b in &imaged[i + 1..] {
            let err = dh[b] - g.dist(emb.preimage[a].unwrap(), emb.preimage[b].unwrap());
            worst = worst.max(err);
            if err < 0 {
                below += 1;
            }
        }
    }
    (worst, below)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut graphs: Vec<(String, gen::PlanarInstance)> =
        (2..=15).map(|k| (format!("grid {k}x{k}"), gen::grid(k, k))).collect();
    for i in 0..50u64 {
        let n = 20 + (i as usize * 37) % 181;
        graphs.push((format!("random n={n} seed {i}"), gen::random_planar_weighted(n, 1000 + i, 3)));
    }
    let mut bad = Vec::new();
    let mut runs = 0;
    let mut peak: f64 = 0.0;
    for (name, p) in &graphs {
        let d = all_pairs(&p.graph).expect("apsp");
        let diam = d.diameter();
        for (eps, tenths) in [(0.2, 2), (0.5, 5)] {
            runs += 1;
            let pe = embed_planar_low_tw(&p.graph, &p.rotation, eps, EmbedOptions::default()).expect("embed");
            let emb = &pe.embedding;
            let (worst, below) = exhaustive_error(&d, emb);
            let width = emb.decomposition.bags.iter().map(|b| b.len() as i64).max().unwrap_or(0) - 1;
            let depth = pe.tree.depth();
            let bound = (depth * 2 * ((2.0 / eps).floor() as usize + 1) + pe.tree.leaf_cap) as i64;
            if diam > 0 {
                peak = peak.max(worst as f64 / (eps * diam as f64));
            }
            let valid = emb.decomposition.validate(&emb.host).is_ok() && emb.check_images().is_ok();
            if below > 0 || 10 * worst > tenths * diam || width > bound || width != emb.width() || !valid {
                bad.push(format!(
                    "{name} eps {eps}: error {worst} vs D {diam}, {below} domination violations, width {width} bound {bound}"
                ));
            }
        }
    }
    let (fast, time) = within(start, Duration::from_secs(600));
    outcome(bad.is_empty() && fast, format!("{runs} embeddings, largest error {peak:.3} of eps*D, {} failures {:?}; {time}", bad.len(), bad.first()))
}

fn criterion_5() -> Outcome {
    let mut fails = Vec::new();
    for i in 0..500u64 {
        let mut rng = gen::rng(50_000 + i);
        let n = rng.gen_range(4..80);
        let (g, rot) = if i % 2 == 0 {
            let p = gen::random_triangulation(n, i);
            (p.graph, p.rotation)
        } else {
            let p = gen::random_planar_weighted(n, i, 6);
            metric_triangulate(&p.graph, &p.rotation).expect("triangulate")
        };
        let n = g.n();
        let mut w: Vec<u64> = (0..n).map(|_| rng.gen_range(0..10)).collect();
        if w.iter().all(|&x| x == 0) {
            w[0] = 1;
        }
        let total: u64 = w.iter().sum();
        let tree = dijkstra(&g, rng.gen_range(0..n));
        let Ok(fc) = fundamental_cycle_separator(&g, &rot, &tree, &w) else {
            fails.push(format!("sample {i}: no separator"));
            continue;
        };
        let mut side = vec![0u8; n];
        fc.interior.iter().for_each(|&x| side[x] |= 1);
        fc.exterior.iter().for_each(|&x| side[x] |= 2);
        fc.cycle.iter().for_each(|&x| side[x] |= 4);
        let partition = side.iter().all(|&s| s == 1 || s == 2 || s == 4);
        let crossing = g.edges().iter().any(|e| side[e.u] | side[e.v] == 3);
        let wi: u64 = (0..n).filter(|&x| side[x] == 1).map(|x| w[x]).sum();
        let we: u64 = (0..n).filter(|&x| side[x] == 2).map(|x| w[x]).sum();
        if !partition || crossing || 3 * wi > 2 * total || 3 * we > 2 * total {
            fails.push(format!("sample {i}: sides {wi}/{we} of {total}, partition {partition}, crossing {crossing}"));
        }
    }
    outcome(fails.is_empty(), format!("500 samples, {} failures {:?}", fails.len(), fails.first()))
}

fn connected_without(g: &WeightedGraph, removed: &[bool]) -> bool {
    let Some(s) = (0..g.n()).find(|&v| !removed[v]) else { return true };
    let mut seen = removed.to_vec();
    seen[s] = true;
    let mut stack = vec![s];
    while let Some(x) = stack.pop() {
        for &(y, _) in g.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen.iter().all(|&b| b)
}

fn criterion_6() -> Outcome {
    let (mut samples, mut attempts) = (0, 0u64);
    let mut fails = Vec::new();
    while samples < 500 && attempts < 50_000 {
        attempts += 1;
        let mut rng = gen::rng(60_000 + attempts);
        let p = gen::random_planar_weighted(rng.gen_range(5..40), attempts, 3);
        let g = &p.graph;
        let n = g.n();
        let size = rng.gen_range(1..=(n / 3).clamp(1, 6));
        let mut in_h = vec![false; n];
        let mut verts = vec![rng.gen_range(0..n)];
        in_h[verts[0]] = true;
        while verts.len() < size {
            let x = verts[rng.gen_range(0..verts.len())];
            let nb = g.neighbors(x);
            let (y, _) = nb[rng.gen_range(0..nb.len())];
            if !in_h[y] {
                in_h[y] = true;
                verts.push(y);
            }
        }
        if !connected_without(g, &in_h) {
            continue;
        }
        let mut spec = CutSpec { vertices: verts.clone(), ..Default::default() };
        for (e, ed) in g.edges().iter().enumerate() {
            match (in_h[ed.u], in_h[ed.v]) {
                (true, true) => spec.edges.push(e),
                (true, false) | (false, true) => {
                    if rng.gen_bool(0.5) {
                        spec.left.push(e)
                    } else {
                        spec.right.push(e)
                    }
                }
                _ => {}
            }
        }
        let out = cut_along(g, &spec).expect("valid cut");
        if !out.connected {
            continue;
        }
        samples += 1;
        let dg = all_pairs(g).expect("apsp").diameter();
        let (h, _) = g.induced(&verts);
        let dh = all_pairs(&h).expect("H is connected").diameter();
        let dout = (0..out.graph.n()).map(|v| *sssp(&out.graph, v).iter().max().unwrap()).max().unwrap();
        if dout > 4 * dg + 2 * dh {
            fails.push(format!("attempt {attempts}: {dout} > 4*{dg} + 2*{dh}"));
        }
    }
    outcome(
        samples == 500 && fails.is_empty(),
        format!("{samples} connected samples from {attempts} draws, {} failures {:?}", fails.len(), fails.first()),
    )
}

fn unit_grids() -> Vec<(usize, usize)> {
    vec![(3, 3), (4, 4), (5, 5), (6, 6), (7, 7), (3, 7), (4, 6)]
}

fn criterion_7() -> Outcome {
    let mut worst = (f64::NEG_INFINITY, String::new());
    let mut pairs_total = 0;
    let mut pass = true;
    for (r, c) in unit_grids() {
        let g = gen::grid(r, c).graph;
        let d = all_pairs(&g).expect("apsp");
        for s in [0, (r / 2) * c + c / 2] {
            for eps in [0.25, 0.5] {
                let pairs: Vec<(usize, usize)> = (0..g.n())
                    .flat_map(|u| (0..g.n()).map(move |v| (u, v)))
                    .filter(|&(u, v)| {
                        let (du, dv) = (d.dist(s, u) as f64, d.dist(s, v) as f64);
                        u != v && du > 0.0 && eps * dv <= du && du <= dv
                    })
                    .collect();
                let mut split = vec![0u32; pairs.len()];
                for seed in 0..1000 {
                    let b = band_partition(&g, s, eps, seed).expect("bands");
                    for (k, &(u, v)) in pairs.iter().enumerate() {
                        if b.band[u] != b.band[v] {
                            split[k] += 1;
                        }
                    }
                }
                let tol = eps + 3.0 * (eps * (1.0 - eps) / 1000.0).sqrt();
                for (k, &(u, v)) in pairs.iter().enumerate() {
                    let f = split[k] as f64 / 1000.0;
                    if f - tol > worst.0 {
                        worst = (f - tol, format!("{r}x{c} s={s} eps {eps} pair ({u},{v}) freq {f}"));
                    }
                    pass &= f <= tol;
                }
                pairs_total += pairs.len();
            }
        }
    }
    outcome(pass, format!("{pairs_total} qualifying pairs over 1000 seeds; closest to the limit: {} (margin {:.4})", worst.1, -worst.0))
}

fn criterion_8() -> Outcome {
    let eps = 0.5;
    let seeds = 500u64;
    let mut pass = true;
    let mut pairs_total = 0;
    let mut tight = (f64::NEG_INFINITY, String::new());
    for (r, c) in unit_grids() {
        let p = gen::grid(r, c);
        let n = p.graph.n();
        let d = all_pairs(&p.graph).expect("apsp");
        let s = (r / 2) * c + c / 2;
        let mut sum = vec![0f64; n * n];
        let mut sq = vec![0f64; n * n];
        for seed in 0..seeds {
            let emb = embed_rooted(&p.graph, &p.rotation, s, eps, seed, EmbedOptions::default()).expect("embed").embedding;
            for u in 0..n {
                let from: Vec<Vec<Ticks>> = emb.images[u].iter().map(|&x| sssp(&emb.host, x)).collect();
                for v in u..n {
                    let dh = from.iter().flat_map(|t| emb.images[v].iter().map(move |&y| t[y])).max().unwrap() as f64;
                    sum[u * n + v] += dh;
                    sq[u * n + v] += dh * dh;
                }
            }
        }
        for u in 0..n {
            for v in u..n {
                let k = seeds as f64;
                let mean = sum[u * n + v] / k;
                let var = (sq[u * n + v] / k - mean * mean).max(0.0);
                let sd = (var * k / (k - 1.0)).sqrt();
                let bound = d.dist(u, v) as f64 + 2.0 * eps * (d.dist(s, u) + d.dist(s, v)) as f64;
                let slack = mean - bound - 3.0 * sd / k.sqrt();
                if bound > 0.0 && slack > tight.0 {
                    tight = (slack, format!("{r}x{c} pair ({u},{v}) mean {mean:.3} bound {bound}"));
                }
                pass &= slack <= 0.0;
                pairs_total += 1;
            }
        }
    }
    outcome(pass, format!("{pairs_total} pairs over {seeds} seeds; tightest: {} (margin {:.3})", tight.1, -tight.0))
}

fn criterion_9() -> Outcome {
    let k = 90;
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [2usize, 3, 4] {
        let ga = grid_apex_generator(n, k).expect("generator");
        let base_edges = 2 * n * (n - 1) + n * n;
        let expect = n * n + 1 + base_edges * (k - 1);
        let g = &ga.graph;
        let diam = (0..g.n()).map(|v| *sssp(g, v).iter().max().unwrap()).max().unwrap();
        // Witness: every grid adjacency and every apex spoke is a path of
        // k edges whose inner vertices are private to it.
        let mut owner = vec![usize::MAX; g.n()];
        for &v in ga.grid.iter().chain(std::iter::once(&ga.apex)) {
            owner[v] = usize::MAX - 1;
        }
        let mut witness = ga.subdivisions.len() == base_edges;
        let mut seen = std::collections::BTreeSet::new();
        for (i, (a, b, inner)) in ga.subdivisions.iter().enumerate() {
            let path: Vec<usize> = std::iter::once(*a).chain(inner.iter().copied()).chain(std::iter::once(*b)).collect();
            witness &= path.len() == k + 1;
            witness &= path.windows(2).all(|w| g.edge_between(w[0], w[1]).is_some());
            for &x in inner {
                witness &= owner[x] == usize::MAX;
                owner[x] = i;
            }
            seen.insert((*a.min(b), *a.max(b)));
        }
        for r in 0..n {
            for c in 0..n {
                let v = ga.grid[r * n + c];
                witness &= seen.contains(&(v.min(ga.apex), v.max(ga.apex)));
                if c + 1 < n {
                    let w = ga.grid[r * n + c + 1];
                    witness &= seen.contains(&(v.min(w), v.max(w)));
                }
                if r + 1 < n {
                    let w = ga.grid[(r + 1) * n + c];
                    witness &= seen.contains(&(v.min(w), v.max(w)));
                }
            }
        }
        let ok = g.n() == expect && diam <= 3 * k as Ticks && witness;
        pass &= ok;
        notes.push(format!("n={n}: {} vertices (expected {expect}), diameter {diam}, witness {witness}", g.n()));
    }
    outcome(pass, notes.join("; "))
}

/// Cheapest way to route every positive unit to a negative unit or the
/// depot, with the depot covering the rest, by exhaustive assignment.
fn brute_flow(cost: &[Vec<Ticks>], detached: &[bool], supply: &[i64]) -> Ticks {
    let depot = supply.len();
    let tails: Vec<usize> = (0..supply.len()).flat_map(|i| std::iter::repeat(i).take(supply[i].max(0) as usize)).collect();
    let mut need: Vec<i64> = supply.iter().map(|&s| (-s).max(0)).collect();
    fn rec(k: usize, tails: &[usize], need: &mut [i64], cost: &[Vec<Ticks>], detached: &[bool], depot: usize) -> Ticks {
        if k == tails.len() {
            return need.iter().enumerate().map(|(h, &c)| c * cost[depot][h]).sum();
        }
        let t = tails[k];
        let mut best = cost[t][depot] + rec(k + 1, tails, need, cost, detached, depot);
        for h in 0..need.len() {
            if need[h] > 0 && h != t && !(detached[t] && detached[h]) {
                need[h] -= 1;
                best = best.min(cost[t][h] + rec(k + 1, tails, need, cost, detached, depot));
                need[h] += 1;
            }
        }
        best
    }
    rec(0, &tails, &mut need, cost, detached, depot)
}

fn criterion_10() -> Outcome {
    let (mut cases, mut bad) = (0u64, Vec::new());
    let mut check = |fi: &FlowInstance, label: &dyn Fn() -> String| {
        let got = min_cost_flow(fi);
        let want: Ticks = fi.subnets.iter().map(|s| brute_flow(&fi.cost, &fi.detached, &s.supply)).sum();
        let arcs_cost: Ticks = got.arcs.iter().map(|a| fi.arc_cost(a)).sum();
        if got.cost != want || arcs_cost != got.cost {
            bad.push(format!("{}: flow {} brute {want}", label(), got.cost));
        }
    };
    let base = gen::random_planar_weighted(9, 77, 9);
    let d = all_pairs(&base.graph).expect("apsp");
    for k in 1..=5usize {
        let verts: Vec<usize> = (1..=k).collect();
        let mut supply = vec![-4i64; k];
        loop {
            let pos: i64 = supply.iter().filter(|&&s| s > 0).sum();
            let neg: i64 = -supply.iter().filter(|&&s| s < 0).sum::<i64>();
            if pos <= 4 && neg <= 4 {
                for pattern in 0..3 {
                    let mut fi = FlowInstance::new(0, verts.clone(), &d);
                    fi.detached = (0..k).map(|i| pattern == 2 || (pattern == 1 && i % 2 == 0)).collect();
                    fi.subnets.push(Subnet { q: 0, supply: supply.clone() });
                    check(&fi, &|| format!("template k={k} supply {supply:?} pattern {pattern}"));
                    cases += 1;
                }
            }
            let mut i = 0;
            while i < k && supply[i] == 4 {
                supply[i] = -4;
                i += 1;
            }
            if i == k {
                break;
            }
            supply[i] += 1;
        }
    }
    let templates = cases;
    for seed in 0..200u64 {
        let mut rng = gen::rng(10_000 + seed);
        let p = gen::random_planar_weighted(rng.gen_range(6..14), seed, 12);
        let n = p.graph.n();
        let d = all_pairs(&p.graph).expect("apsp");
        let depot = rng.gen_range(0..n);
        let pool: Vec<usize> = (0..n).filter(|&v| v != depot).collect();
        let mut verts = gen::sample_vertices(&pool, rng.gen_range(1..=5.min(pool.len())), &mut rng);
        verts.sort_unstable();
        let k = verts.len();
        let mut fi = FlowInstance::new(depot, verts, &d);
        fi.detached = (0..k).map(|_| rng.gen_bool(0.4)).collect();
        for q in 0..rng.gen_range(1..=3u32) {
            let mut supply = vec![0i64; k];
            for _ in 0..rng.gen_range(0..=4) {
                supply[rng.gen_range(0..k)] += 1;
            }
            for _ in 0..rng.gen_range(0..=4) {
                let i = rng.gen_range(0..k);
                if supply[i] <= 0 {
                    supply[i] -= 1;
                }
            }
            fi.subnets.push(Subnet { q, supply });
        }
        check(&fi, &|| format!("random seed {seed}"));
        cases += 1;
    }
    outcome(
        bad.is_empty(),
        format!("{templates} template and {} random instances, {} mismatches {:?}", cases - templates, bad.len(), bad.first()),
    )
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut compared = 0;
    for i in 0..20u64 {
        let n = 10 + i as usize;
        let p = gen::random_planar(n, 500 + i);
        let n = p.graph.n();
        let depot = (i as usize * 3) % n;
        let inst = VrpInstance {
            graph: p.graph.clone(),
            capacity: 2,
            demand: gen::random_demand(n, depot, 3 + (i % 4) as u32, 500 + i),
            depot,
        };
        let dp = DpOptions { mode: Mode::Constrained, eps: 0.5, ..Default::default() };
        let opts = PipelineOptions { eps: 0.5, seed: i, dp, ..Default::default() };
        let t = Instant::now();
        let out = match cmd_pipeline(&inst, &p.rotation, &opts) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let cost = out.solution.cost;
        let feasible = out.solution.status == "ok" && verify_solution(&inst, &out.solution.routes()) == Ok(cost);
        let mut ok = feasible && cost <= out.host_cost;
        let mut opt = -1;
        if inst.total_demand() <= ORACLE_DEMAND_CAP {
            opt = exact_vrp_oracle(&inst).expect("oracle").0;
            compared += 1;
            ok &= cost as f64 <= 3.5 * opt as f64;
        }
        if !ok {
            bad.push(format!("#{i}: lifted {cost} host {} opt {opt} feasible {feasible}", out.host_cost));
        }
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    let (fast, time) = within(start, Duration::from_secs(900));
    outcome(
        bad.is_empty() && fast,
        format!(
            "20 instances, {compared} compared with the oracle, slowest {slowest:.1} s, {} failures {:?}; {time}",
            bad.len(),
            bad.first()
        ),
    )
}

fn main() {
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact mode equals the oracle", criterion_1),
        ("constrained mode stays in the envelope", criterion_2),
        ("table values are rounded values", criterion_3),
        ("planar embedding distortion", criterion_4),
        ("separator balance", criterion_5),
        ("cutting diameter bound", criterion_6),
        ("band separation frequency", criterion_7),
        ("rooted embedding expected distortion", criterion_8),
        ("grid-plus-apex generator", criterion_9),
        ("min-cost flow exactness", criterion_10),
        ("end-to-end pipeline", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !picked.is_empty() && !picked.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !res.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id} ({name}): {} [{:.1} s]",
            if res.pass { "PASS" } else { "FAIL" },
            res.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
