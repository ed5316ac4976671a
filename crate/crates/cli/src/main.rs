use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;
use twroute::embed::EmbedOptions;
use twroute::io::{read_json, GraphFile};
use twroute::vrp::{DpOptions, Mode, PipelineOptions};
use twroute_cli::{
    cmd_bench, cmd_embed, cmd_gen, cmd_pipeline, cmd_solve, cmd_verify, CliError, CliResult, ExperimentConfig,
    Family, GenSpec, InstanceFile, SolutionFile,
};

#[derive(Parser)]
#[command(name = "twroute", version, about = "Capacitated vehicle routing through low-treewidth embeddings")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Embed a planar graph into a low-treewidth host and report distortion.
    Embed {
        graph: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Build the rooted (band) embedding around this vertex.
        #[arg(long)]
        root: Option<usize>,
        #[arg(long, default_value_t = 4)]
        leaf_cap: usize,
        #[arg(long)]
        clique_bags: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance with the table dynamic program.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        dp: DpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed around the depot, solve on the host and lift the tours back.
    Pipeline {
        instance: PathBuf,
        #[command(flatten)]
        dp: DpArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        leaf_cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a graph, or an instance when --q is given.
    Gen {
        #[arg(value_enum)]
        family: Family,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 90)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        q: Option<u32>,
        #[arg(long, default_value_t = 4)]
        demand: u32,
        #[arg(long, default_value_t = 0)]
        depot: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment configuration and emit CSV.
    Bench {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a solution file against an instance.
    Verify {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct DpArgs {
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, value_parser = parse_mode, default_value = "constrained")]
    mode: Mode,
    /// Override the instance capacity.
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, default_value_t = 2)]
    c_depth: usize,
    #[arg(long)]
    flow_cap: Option<u32>,
}

impl DpArgs {
    fn options(&self) -> DpOptions {
        DpOptions { mode: self.mode, eps: self.eps, c_depth: self.c_depth, flow_cap: self.flow_cap, ..Default::default() }
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "exact" => Ok(Mode::Exact),
        "constrained" => Ok(Mode::Constrained),
        _ => Err(format!("unknown mode {s:?} (expected exact or constrained)")),
    }
}

fn load_instance(path: &Path, q: Option<u32>) -> CliResult<(InstanceFile, twroute::vrp::VrpInstance)> {
    let mut file: InstanceFile = read_json(path)?;
    if let Some(q) = q {
        file.capacity = q;
    }
    let inst = file.instance()?;
    Ok((file, inst))
}

fn emit(text: &str, out: &Option<PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    emit(&text, out)
}

fn run(cmd: Cmd) -> CliResult<()> {
    match cmd {
        Cmd::Embed { graph, eps, seed, root, leaf_cap, clique_bags, out } => {
            let file: GraphFile = read_json(&graph)?;
            let g = file.graph()?;
            let rot = file.rotation()?;
            let r = cmd_embed(&g, &rot, eps, seed, root, EmbedOptions { leaf_cap, clique_bags })?;
            emit_json(&r, &out)
        }
        Cmd::Solve { instance, dp, out } => {
            let (_, inst) = load_instance(&instance, dp.q)?;
            emit_json(&cmd_solve(&inst, &dp.options())?, &out)
        }
        Cmd::Pipeline { instance, dp, seed, leaf_cap, out } => {
            let (file, inst) = load_instance(&instance, dp.q)?;
            let rot = file.graph.rotation()?;
            let opts = PipelineOptions {
                eps: dp.eps,
                seed,
                dp: dp.options(),
                embed: EmbedOptions { leaf_cap, ..Default::default() },
            };
            emit_json(&cmd_pipeline(&inst, &rot, &opts)?, &out)
        }
        Cmd::Gen { family, size, k, seed, q, demand, depot, out } => {
            let spec = GenSpec { family, size, k, seed, capacity: q, demand, depot };
            emit_json(&cmd_gen(&spec)?, &out)
        }
        Cmd::Bench { config, out } => {
            let cfg: ExperimentConfig = read_json(&config)?;
            emit(&cmd_bench(&cfg)?, &out)
        }
        Cmd::Verify { instance, solution, out } => {
            let (_, inst) = load_instance(&instance, None)?;
            let sol: SolutionFile = read_json(&solution)?;
            let report = cmd_verify(&inst, &sol);
            emit_json(&report, &out)?;
            if report.ok() {
                Ok(())
            } else {
                Err(CliError::Validation(format!("solution is {}", report.status)))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
