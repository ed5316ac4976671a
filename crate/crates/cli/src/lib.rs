//! Commands behind the `twroute` binary: file formats, generators, solving,
//! embedding reports and benchmark tables.

use std::fmt;
use std::time::Instant;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use twroute::embed::{
    embed_planar_low_tw, embed_rooted, measure_distortion, DistortionReport, EmbedOptions, OneToManyEmbedding,
};
use twroute::gen::{self, PlanarInstance};
use twroute::graph::{all_pairs, diameter};
use twroute::io::GraphFile;
use twroute::planar::grid_apex_generator;
use twroute::vrp::{
    exact_vrp_oracle, run_pipeline, solve, verify_solution, DpOptions, DpStats, Mode, PipelineOptions, Route,
    Violation, VrpInstance, ORACLE_DEMAND_CAP,
};
use twroute::{Error, RotationSystem, Ticks};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Resource(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Resource(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::ResourceLimit(_) => CliError::Resource(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Instance file: a graph (with an optional rotation system), capacity,
/// per-vertex demand and depot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub graph: GraphFile,
    pub capacity: u32,
    pub demand: Vec<u32>,
    pub depot: usize,
}

impl InstanceFile {
    pub fn new(inst: &VrpInstance, rot: Option<&RotationSystem>) -> Self {
        InstanceFile {
            graph: GraphFile::from_graph(&inst.graph, rot),
            capacity: inst.capacity,
            demand: inst.demand.clone(),
            depot: inst.depot,
        }
    }

    pub fn instance(&self) -> CliResult<VrpInstance> {
        let inst = VrpInstance {
            graph: self.graph.graph()?,
            capacity: self.capacity,
            demand: self.demand.clone(),
            depot: self.depot,
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourRecord {
    pub pre: u32,
    pub stops: Vec<(usize, u32)>,
    pub cost: Ticks,
}

/// Tours with their costs and the outcome of an independent check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    /// Decimal scale of every tick count in the file.
    pub scale: u32,
    pub cost: Ticks,
    pub tours: Vec<TourRecord>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

impl SolutionFile {
    pub fn routes(&self) -> Vec<Route> {
        self.tours.iter().map(|t| Route { pre: t.pre, stops: t.stops.clone() }).collect()
    }
}

/// Builds a solution file, failing if the tours do not verify.
pub fn solution_file(inst: &VrpInstance, tours: &[Route]) -> CliResult<SolutionFile> {
    let cost = verify_solution(inst, tours)
        .map_err(|v| CliError::Validation(format!("solution does not verify: {v:?}")))?;
    let d = all_pairs(&inst.graph)?;
    let tours = tours
        .iter()
        .map(|t| TourRecord { pre: t.pre, stops: t.stops.clone(), cost: t.cost(&d) })
        .collect();
    Ok(SolutionFile { scale: inst.graph.scale(), cost, tours, status: "ok".into(), violations: Vec::new() })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutput {
    #[serde(flatten)]
    pub solution: SolutionFile,
    pub mode: Mode,
    pub eps: f64,
    pub stats: DpStats,
}

pub fn cmd_solve(inst: &VrpInstance, opts: &DpOptions) -> CliResult<SolveOutput> {
    let sol = solve(inst, opts)?;
    Ok(SolveOutput { solution: solution_file(inst, &sol.tours)?, mode: opts.mode, eps: opts.eps, stats: sol.stats })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutput {
    #[serde(flatten)]
    pub solution: SolutionFile,
    pub eps: f64,
    pub seed: u64,
    pub host_vertices: usize,
    pub host_width: i64,
    pub branch_width: usize,
    pub host_cost: Ticks,
    pub host_tours: Vec<Route>,
    pub stats: DpStats,
}

pub fn cmd_pipeline(inst: &VrpInstance, rot: &RotationSystem, opts: &PipelineOptions) -> CliResult<PipelineOutput> {
    let r = run_pipeline(inst, rot, opts)?;
    let solution = solution_file(inst, &r.tours)?;
    if solution.cost > r.host_cost {
        return Err(CliError::Validation(format!(
            "lifted cost {} exceeds host cost {}",
            solution.cost, r.host_cost
        )));
    }
    Ok(PipelineOutput {
        solution,
        eps: opts.eps,
        seed: opts.seed,
        host_vertices: r.host_vertices,
        host_width: r.host_width,
        branch_width: r.branch_width,
        host_cost: r.host_cost,
        host_tours: r.host_tours,
        stats: r.stats,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedOutput {
    pub scale: u32,
    pub eps: f64,
    pub seed: u64,
    /// Root of the rooted embedding; absent for the plain planar embedding.
    pub root: Option<usize>,
    pub diameter: Ticks,
    /// Closed-form width bound of the plain planar embedding.
    pub width_bound: Option<i64>,
    pub embedding: OneToManyEmbedding,
    pub report: DistortionReport,
}

pub fn cmd_embed(
    g: &twroute::WeightedGraph,
    rot: &RotationSystem,
    eps: f64,
    seed: u64,
    root: Option<usize>,
    opts: EmbedOptions,
) -> CliResult<EmbedOutput> {
    let (embedding, width_bound) = match root {
        Some(s) => {
            if s >= g.n() {
                return Err(CliError::Validation(format!("root {s} out of range")));
            }
            (embed_rooted(g, rot, s, eps, seed, opts)?.embedding, None)
        }
        None => {
            let e = embed_planar_low_tw(g, rot, eps, opts)?;
            (e.embedding, Some(e.width_bound))
        }
    };
    let report = measure_distortion(g, &embedding)?;
    if !report.domination_violations.is_empty() {
        return Err(CliError::Validation(format!(
            "embedding is not dominating on {} pairs",
            report.domination_violations.len()
        )));
    }
    Ok(EmbedOutput { scale: g.scale(), eps, seed, root, diameter: diameter(g)?, width_bound, embedding, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Grid,
    RandomPlanar,
    Star,
    Path,
    Cycle,
    Tree,
    GridApexLb,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    /// Grid side, vertex count, or leaf count for stars.
    pub size: usize,
    /// Subdivision length of the grid-plus-apex family.
    pub k: usize,
    pub seed: u64,
    /// When set, an instance with `demand` units and this capacity is emitted.
    pub capacity: Option<u32>,
    pub demand: u32,
    pub depot: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GenOutput {
    Instance(InstanceFile),
    Graph(GraphFile),
}

pub fn planar_family(family: Family, size: usize, seed: u64) -> CliResult<PlanarInstance> {
    if size == 0 {
        return Err(CliError::Usage("size must be at least 1".into()));
    }
    Ok(match family {
        Family::Grid => gen::grid(size, size),
        Family::RandomPlanar => gen::random_planar(size, seed),
        Family::Star => gen::star(size),
        Family::Path => gen::path(size),
        Family::Cycle if size >= 3 => gen::cycle(size),
        Family::Cycle => return Err(CliError::Usage("a cycle needs at least 3 vertices".into())),
        Family::Tree => gen::random_tree(size, seed, 1),
        Family::GridApexLb => return Err(CliError::Usage("grid-apex-lb is not a planar family".into())),
    })
}

pub fn cmd_gen(spec: &GenSpec) -> CliResult<GenOutput> {
    if spec.family == Family::GridApexLb {
        if spec.capacity.is_some() {
            return Err(CliError::Usage("grid-apex-lb produces graphs only".into()));
        }
        let ga = grid_apex_generator(spec.size, spec.k)?;
        return Ok(GenOutput::Graph(GraphFile::from_graph(&ga.graph, None)));
    }
    let p = planar_family(spec.family, spec.size, spec.seed)?;
    match spec.capacity {
        None => Ok(GenOutput::Graph(GraphFile::from_graph(&p.graph, Some(&p.rotation)))),
        Some(capacity) => {
            let n = p.graph.n();
            if spec.depot >= n {
                return Err(CliError::Usage(format!("depot {} out of range for {n} vertices", spec.depot)));
            }
            let demand = gen::random_demand(n, spec.depot, spec.demand, spec.seed);
            let inst = VrpInstance { graph: p.graph, capacity, demand, depot: spec.depot };
            inst.validate()?;
            Ok(GenOutput::Instance(InstanceFile::new(&inst, Some(&p.rotation))))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub status: String,
    pub declared_cost: Ticks,
    pub cost: Option<Ticks>,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn cmd_verify(inst: &VrpInstance, sol: &SolutionFile) -> VerifyReport {
    match verify_solution(inst, &sol.routes()) {
        Ok(cost) => VerifyReport {
            status: if cost == sol.cost { "ok" } else { "cost-mismatch" }.into(),
            declared_cost: sol.cost,
            cost: Some(cost),
            violations: Vec::new(),
        },
        Err(violations) => {
            VerifyReport { status: "invalid".into(), declared_cost: sol.cost, cost: None, violations }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMode {
    Exact,
    Constrained,
    Pipeline,
    EmbedOnly,
}

/// Benchmark suite; all randomness is derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub eps: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: u32,
    pub family: Family,
    pub sizes: Vec<usize>,
    #[serde(default = "default_demand")]
    pub demand: u32,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    pub modes: Vec<BenchMode>,
    /// Compare against the exact oracle when the demand permits.
    #[serde(default = "default_true")]
    pub oracle: bool,
    /// Fill the runtime column; without it every row is reproducible byte for byte.
    #[serde(default = "default_true")]
    pub timing: bool,
}

fn default_demand() -> u32 {
    4
}

fn default_repeats() -> usize {
    1
}

fn default_true() -> bool {
    true
}

pub const BENCH_HEADER: [&str; 9] = ["instance", "n", "mode", "eps", "cost", "opt", "ratio", "width", "runtime_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub mode: BenchMode,
    pub eps: Option<f64>,
    pub cost: Ticks,
    pub opt: Option<Ticks>,
    pub width: i64,
    pub runtime_ms: Option<f64>,
}

impl BenchRow {
    pub fn ratio(&self) -> Option<f64> {
        match self.opt {
            Some(0) => Some(if self.cost == 0 { 1.0 } else { f64::INFINITY }),
            Some(o) => Some(self.cost as f64 / o as f64),
            None => None,
        }
    }

    fn record(&self) -> Vec<String> {
        let mode = serde_json::to_value(self.mode).expect("mode serializes");
        vec![
            self.instance.clone(),
            self.n.to_string(),
            mode.as_str().unwrap_or_default().to_string(),
            self.eps.map(|e| e.to_string()).unwrap_or_default(),
            self.cost.to_string(),
            self.opt.map(|o| o.to_string()).unwrap_or_default(),
            self.ratio().map(|r| format!("{r:.6}")).unwrap_or_default(),
            self.width.to_string(),
            self.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }
}

pub fn bench_rows(cfg: &ExperimentConfig) -> CliResult<Vec<BenchRow>> {
    if cfg.q == 0 {
        return Err(CliError::Usage("Q must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &size in &cfg.sizes {
        for rep in 0..cfg.repeats {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((size as u64) << 20).wrapping_add(rep as u64);
            let p = planar_family(cfg.family, size, seed)?;
            let n = p.graph.n();
            let inst = VrpInstance {
                graph: p.graph.clone(),
                capacity: cfg.q,
                demand: gen::random_demand(n, 0, cfg.demand, seed),
                depot: 0,
            };
            let name = format!("{}-{size}-{rep}", cfg.family);
            let opt = if cfg.oracle && inst.total_demand() <= ORACLE_DEMAND_CAP {
                Some(exact_vrp_oracle(&inst)?.0)
            } else {
                None
            };
            let timed = |f: &mut dyn FnMut() -> CliResult<(Ticks, i64)>| -> CliResult<(Ticks, i64, Option<f64>)> {
                let t = Instant::now();
                let (c, w) = f()?;
                let ms = t.elapsed().as_secs_f64() * 1e3;
                Ok((c, w, cfg.timing.then_some(ms)))
            };
            for &mode in &cfg.modes {
                let eps_list: Vec<Option<f64>> =
                    if mode == BenchMode::Exact { vec![None] } else { cfg.eps.iter().map(|&e| Some(e)).collect() };
                for eps in eps_list {
                    let e = eps.unwrap_or(0.5);
                    let (cost, width, runtime_ms) = match mode {
                        BenchMode::Exact | BenchMode::Constrained => timed(&mut || {
                            let m = if mode == BenchMode::Exact { Mode::Exact } else { Mode::Constrained };
                            let s = solve(&inst, &DpOptions { mode: m, eps: e, ..Default::default() })?;
                            Ok((s.cost, s.stats.width as i64))
                        })?,
                        BenchMode::Pipeline => timed(&mut || {
                            let opts = PipelineOptions {
                                eps: e,
                                seed,
                                dp: DpOptions { eps: e, ..Default::default() },
                                ..Default::default()
                            };
                            let r = run_pipeline(&inst, &p.rotation, &opts)?;
                            Ok((r.cost, r.host_width))
                        })?,
                        BenchMode::EmbedOnly => timed(&mut || {
                            let em = embed_planar_low_tw(&p.graph, &p.rotation, e, EmbedOptions::default())?;
                            let rep = measure_distortion(&p.graph, &em.embedding)?;
                            Ok((rep.max_additive, rep.host_width))
                        })?,
                    };
                    let opt = if mode == BenchMode::EmbedOnly { None } else { opt };
                    rows.push(BenchRow { instance: name.clone(), n, mode, eps, cost, opt, width, runtime_ms });
                }
            }
        }
    }
    Ok(rows)
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> CliResult<String> {
    let rows = bench_rows(cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Validation(e.to_string());
    w.write_record(BENCH_HEADER).map_err(io)?;
    for r in &rows {
        w.write_record(r.record()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
