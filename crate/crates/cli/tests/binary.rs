use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_plastiflow");

fn run(args: &[&str], out_dir: &Path) -> Output {
    Command::new(BIN).args(args).env("PLASTIFLOW_OUT_DIR", out_dir).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL: &str = "# small uniform network\nrule = aimd, oja\nrouters = 20\ndegree = 4\ncapacity = 20\nrepeats = 3\nseed = 11\n";

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&["simulate", &cfg], &a).status.success());
    assert!(run(&["simulate", &cfg], &b).status.success());
    for name in ["summary.csv", "summary_mean.csv", "series_aimd.csv", "weights_oja.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let summary = std::fs::read_to_string(a.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "rule,ki,kd,seed,bandwidth,drop_pct,queue_pct");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(std::fs::read_to_string(a.join("series_aimd.csv")).unwrap().starts_with("t_bin,bandwidth,drop_pct,queue_pct\n0,"));
    assert!(std::fs::read_to_string(a.join("weights_aimd.csv")).unwrap().starts_with("t_bin,mean_w,stderr_w\n0,"));
}

#[test]
fn sweep_writes_one_mean_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rule = mimd\nrouters = 10\ndegree = 3\ncapacity = 10\nrepeats = 2\nki_grid = 1.1, 1.5\nkd_grid = 0.2, 0.5, 0.8\n");
    let out = tmp.path().join("out");
    assert!(run(&["sweep", &cfg], &out).status.success());
    let means = std::fs::read_to_string(out.join("summary_mean.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 6);
    assert!(means.lines().nth(1).unwrap().starts_with("mimd,1.1,0.2,mean,"));
}

#[test]
fn bad_config_fails_with_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rule = aimd\nkd = 1.5\n");
    let out = run(&["simulate", &cfg], tmp.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("kd"), "{err}");
}

#[test]
fn overshoot_table_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["overshoot", "--capacity", "1000"], tmp.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("overshoot.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(out.stdout).unwrap());
    let rules: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    for r in ["aimd", "aisd", "mimd", "misd", "oja", "opt"] {
        assert_eq!(rules.iter().filter(|&&x| x == r).count(), 3, "{r}");
    }
    assert!(csv.contains("\nopt,balanced,,,inf,0,0\n"));
}

#[test]
fn topo_reports_graph_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "rule = maxsend\nrouters = 100\n");
    assert!(run(&["topo", &cfg], tmp.path()).status.success());
    let csv = std::fs::read_to_string(tmp.path().join("topo.csv")).unwrap();
    assert!(csv.contains("routers,100\n") && csv.contains("min_degree,6\n") && csv.contains("max_degree,6\n"));
    assert!(csv.contains("directed_edges,800\n"));
}

#[test]
fn caida_topology_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let as_rel = tmp.path().join("as-rel.txt");
    std::fs::write(&as_rel, "# source: synthetic\n1|2|-1\n2|3|0\n3|1|-1\n3|4|-1\n4|1|0\n").unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("rule = aimd\ntopology = caida\ncaida_path = {}\nsources = 6\ntargets = 6\nflows = 4\n", as_rel.display()),
    );
    assert!(run(&["topo", &cfg], tmp.path()).status.success());
    let csv = std::fs::read_to_string(tmp.path().join("topo.csv")).unwrap();
    assert!(csv.contains("routers,4\n") && csv.contains("router_links,5\n") && csv.contains("directed_edges,22\n"), "{csv}");
}
