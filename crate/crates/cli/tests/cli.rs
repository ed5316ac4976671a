use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use twroute::gen;
use twroute::io::GraphFile;
use twroute::planar::trace_faces;
use twroute::vrp::{exact_vrp_oracle, VrpInstance};
use twroute_cli::{bench_rows, BenchMode, ExperimentConfig, Family, InstanceFile, BENCH_HEADER};

fn twroute(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twroute")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn write(dir: &TempDir, name: &str, value: &impl serde::Serialize) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(value).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn embed_grid_report() {
    let dir = TempDir::new().unwrap();
    let g = gen::grid(5, 5);
    let p = write(&dir, "g.json", &GraphFile::from_graph(&g.graph, Some(&g.rotation)));
    let v = json(&twroute(&["embed", s(&p), "--eps", "0.5"]));
    assert_eq!(v["diameter"], 8);
    assert!(v["report"]["max_additive"].as_i64().unwrap() <= 4);
    assert_eq!(v["report"]["domination_violations"].as_array().unwrap().len(), 0);
    assert!(v["report"]["host_width"].as_i64().unwrap() <= v["width_bound"].as_i64().unwrap());
}

#[test]
fn embed_rejects_bad_rotation() {
    let dir = TempDir::new().unwrap();
    let g = gen::grid(3, 3);
    let mut f = GraphFile::from_graph(&g.graph, Some(&g.rotation));
    f.rotation.as_mut().unwrap()[4].swap(0, 1);
    let p = write(&dir, "bad.json", &f);
    let out = twroute(&["embed", s(&p)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("V - E + F"));
}

#[test]
fn embed_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let g = gen::random_planar(30, 3);
    let p = write(&dir, "g.json", &GraphFile::from_graph(&g.graph, Some(&g.rotation)));
    let a = twroute(&["embed", s(&p), "--root", "0", "--seed", "7"]);
    let b = twroute(&["embed", s(&p), "--root", "0", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_path_and_verify() {
    let dir = TempDir::new().unwrap();
    let inst = VrpInstance { graph: gen::path(3).graph, capacity: 2, demand: vec![0, 1, 1], depot: 0 };
    let p = write(&dir, "i.json", &InstanceFile::new(&inst, None));
    let exact = json(&twroute(&["solve", s(&p), "--mode", "exact"]));
    assert_eq!(exact["cost"], 4);
    assert_eq!(exact["status"], "ok");
    let one = json(&twroute(&["solve", s(&p), "--mode", "exact", "--q", "1"]));
    assert_eq!(one["cost"], 6);
    let sol = dir.path().join("s.json");
    let out = twroute(&["solve", s(&p), "--out", s(&sol)]);
    assert!(out.status.success());
    let constrained: Value = serde_json::from_str(&std::fs::read_to_string(&sol).unwrap()).unwrap();
    assert!(constrained["cost"].as_i64() >= exact["cost"].as_i64());
    assert_eq!(json(&twroute(&["verify", s(&p), s(&sol)]))["status"], "ok");

    let mut bad = constrained.clone();
    bad["tours"][0]["stops"][2][1] = Value::from(3);
    let badp = write(&dir, "bad.json", &bad);
    let out = twroute(&["verify", s(&p), s(&badp)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_agrees_with_oracle_on_random_instances() {
    let dir = TempDir::new().unwrap();
    for seed in 0..5 {
        let g = gen::random_planar(8, seed);
        let n = g.graph.n();
        let inst = VrpInstance { graph: g.graph, capacity: 2, demand: gen::random_demand(n, 0, 4, seed), depot: 0 };
        let p = write(&dir, "i.json", &InstanceFile::new(&inst, None));
        let v = json(&twroute(&["solve", s(&p), "--mode", "exact"]));
        assert_eq!(v["cost"].as_i64().unwrap(), exact_vrp_oracle(&inst).unwrap().0);
    }
}

#[test]
fn pipeline_on_star_is_exact() {
    let dir = TempDir::new().unwrap();
    let st = gen::star(5);
    let inst = VrpInstance { graph: st.graph, capacity: 2, demand: vec![0, 1, 2, 0, 1, 1], depot: 0 };
    let p = write(&dir, "i.json", &InstanceFile::new(&inst, Some(&st.rotation)));
    let (opt, _) = exact_vrp_oracle(&inst).unwrap();
    let v = json(&twroute(&["pipeline", s(&p), "--mode", "exact", "--seed", "3"]));
    assert_eq!(v["cost"].as_i64().unwrap(), opt);
    assert!(v["cost"].as_i64() <= v["host_cost"].as_i64());
    assert_eq!(v["status"], "ok");
    let c = json(&twroute(&["pipeline", s(&p)]));
    assert!(c["cost"].as_i64().unwrap() >= opt);
    assert!(c["cost"].as_i64() <= c["host_cost"].as_i64());
}

#[test]
fn pipeline_needs_rotation() {
    let dir = TempDir::new().unwrap();
    let inst = VrpInstance { graph: gen::path(3).graph, capacity: 2, demand: vec![0, 1, 1], depot: 0 };
    let p = write(&dir, "i.json", &InstanceFile::new(&inst, None));
    assert_eq!(twroute(&["pipeline", s(&p)]).status.code(), Some(2));
}

#[test]
fn gen_families() {
    let v = json(&twroute(&["gen", "grid-apex-lb", "--size", "2", "--k", "90"]));
    assert_eq!(v["n"], 717);
    let v = json(&twroute(&["gen", "grid", "--size", "5"]));
    assert_eq!(v["n"], 25);
    let f: GraphFile = serde_json::from_value(v).unwrap();
    assert!(trace_faces(&f.graph().unwrap(), &f.rotation().unwrap()).is_ok());
    let a = twroute(&["gen", "random-planar", "--size", "40", "--seed", "9"]);
    let b = twroute(&["gen", "random-planar", "--size", "40", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&twroute(&["gen", "cycle", "--size", "6", "--q", "3", "--demand", "5", "--depot", "2"]));
    let inst: InstanceFile = serde_json::from_value(v).unwrap();
    let inst = inst.instance().unwrap();
    assert_eq!((inst.capacity, inst.total_demand(), inst.depot, inst.demand[2]), (3, 5, 2, 0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(twroute(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(twroute(&["gen", "grid"]).status.code(), Some(1));
    assert_eq!(twroute(&["solve", "x.json", "--mode", "fast"]).status.code(), Some(1));
    assert_eq!(twroute(&["gen", "cycle", "--size", "2"]).status.code(), Some(1));
    assert!(twroute(&["--help"]).status.success());
}

#[test]
fn resource_limit_exits_three() {
    let dir = TempDir::new().unwrap();
    let g = gen::random_planar(10, 1);
    let inst = VrpInstance { graph: g.graph, capacity: 3, demand: gen::random_demand(10, 0, 6, 1), depot: 0 };
    let p = write(&dir, "i.json", &InstanceFile::new(&inst, None));
    // A flow cap this large cannot be indexed by the signed table keys.
    let out = twroute(&["solve", s(&p), "--mode", "exact", "--flow-cap", "40000"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        seed: 5,
        eps: vec![0.25, 0.5],
        q: 2,
        family: Family::RandomPlanar,
        sizes: vec![6, 8],
        demand: 4,
        repeats: 2,
        modes: vec![BenchMode::Exact, BenchMode::Constrained, BenchMode::Pipeline],
        oracle: true,
        timing: false,
    }
}

#[test]
fn bench_ratios() {
    let rows = bench_rows(&small_config()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * (1 + 2 + 2));
    for r in &rows {
        let ratio = r.ratio().unwrap();
        assert!(ratio >= 1.0, "{r:?}");
        if r.mode == BenchMode::Exact {
            assert_eq!(ratio, 1.0);
        }
    }
}

#[test]
fn bench_csv_is_stable() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "cfg.json", &small_config());
    let a = twroute(&["bench", s(&p)]);
    let b = twroute(&["bench", s(&p)]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), BENCH_HEADER.join(","));
    let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(cfg, small_config());
}
