//! Scenario orchestration: repeated runs, sweeps, rush hour, graph stats and
//! the overshoot table.
//!
//! Repeat `r` of any scenario uses the sub-seed `derive_seed(seed, REPEAT, r)`
//! for its graph, flows and engine, so every parameter point of a sweep sees
//! the same networks. Runs execute on the rayon pool and are folded in a fixed
//! order, which keeps every CSV byte-identical for a given config.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use plastiflow::analysis::{overshoot_table, AnalysisError};
use plastiflow::metrics::{self, BinnedRates, Quantity, SweepPoint};
use plastiflow::routing::build_routing_table;
use plastiflow::seed::{derive_seed, rng_from_seed, stream};
use plastiflow::topology::{attach_endpoints, build_scale_free_topology, build_uniform_topology, parse_caida};
use plastiflow::{
    CongestionModel, Engine, EngineError, FlowId, FlowSpec, MetricError, NetworkGraph, NodeRole, RoutingError,
    RunReport, TopologyError, TrafficWindow, UpdateRule,
};

use crate::config::{ConfigError, RunConfig, TopologySpec};
use crate::output::{fmt_num, Table, OVERSHOOT_HEADER, SERIES_HEADER, SUMMARY_HEADER, WEIGHTS_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("sweep has no points")]
    EmptySweep,
    #[error("config has no `{0}` settings")]
    Missing(&'static str),
}

pub type Result<T, E = ScenarioError> = std::result::Result<T, E>;

/// The router core shared by all repeats, when it does not depend on the seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    cfg: RunConfig,
    caida_core: Option<NetworkGraph>,
}

impl Prepared {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        let caida_core = match &cfg.topology {
            TopologySpec::Caida { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| TopologyError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                Some(parse_caida(&text)?)
            }
            _ => None,
        };
        Ok(Self { cfg, caida_core })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn repeat_seed(&self, repeat: u32) -> u64 {
        derive_seed(self.cfg.seed, stream::REPEAT, repeat as u64)
    }

    /// The network for one repeat, with the configured capacity.
    pub fn graph(&self, seed: u64) -> Result<NetworkGraph> {
        let cfg = &self.cfg;
        let g = match (&cfg.topology, &self.caida_core) {
            (TopologySpec::Uniform { routers, degree }, _) => {
                build_uniform_topology(*routers, *degree, cfg.sources, cfg.targets, seed)?
            }
            (TopologySpec::ScaleFree { routers, attach_m }, _) => {
                build_scale_free_topology(*routers, *attach_m, cfg.sources, cfg.targets, seed)?
            }
            (TopologySpec::Caida { .. }, Some(core)) => attach_endpoints(core.clone(), cfg.sources, cfg.targets, seed)?,
            (TopologySpec::Caida { .. }, None) => unreachable!("core loaded in Prepared::new"),
        };
        Ok(g.with_capacity(cfg.capacity)?)
    }
}

/// `count` flows from distinct random sources, each to a random target.
pub fn pick_flows(graph: &NetworkGraph, count: usize, load: u64, seed: u64) -> Vec<FlowSpec> {
    let mut rng = rng_from_seed(derive_seed(seed, stream::FLOWS, 0));
    let mut sources: Vec<_> = graph.nodes_with_role(NodeRole::Source).collect();
    let targets: Vec<_> = graph.nodes_with_role(NodeRole::Target).collect();
    assert!(count <= sources.len(), "{count} flows need as many sources");
    sources.shuffle(&mut rng);
    sources
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, source)| FlowSpec {
            id: FlowId(i as u32),
            source,
            target: targets[rng.gen_range(0..targets.len())],
            load,
        })
        .collect()
}

/// Scores of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    /// Flows left open at the step limit count delivered units over steps run.
    pub bandwidth: f64,
    pub drop_pct: f64,
    pub queue_pct: f64,
}

impl Scores {
    pub fn of(report: &RunReport) -> Self {
        Self {
            bandwidth: metrics::partial_bandwidth(report, report.steps.len() as u64).unwrap_or(f64::NAN),
            drop_pct: metrics::drop_penalty(report),
            queue_pct: metrics::queue_penalty(report),
        }
    }

    /// The penalty matching the congestion model.
    pub fn penalty(&self, model: CongestionModel) -> f64 {
        match model {
            CongestionModel::Drop => self.drop_pct,
            CongestionModel::Queue => self.queue_pct,
        }
    }

    fn mean(all: &[Scores]) -> Scores {
        let n = all.len() as f64;
        Scores {
            bandwidth: all.iter().map(|s| s.bandwidth).sum::<f64>() / n,
            drop_pct: all.iter().map(|s| s.drop_pct).sum::<f64>() / n,
            queue_pct: all.iter().map(|s| s.queue_pct).sum::<f64>() / n,
        }
    }
}

/// One summary row; `seed` is `None` for the mean over repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub rule: UpdateRule,
    pub seed: Option<u64>,
    pub scores: Scores,
}

impl SummaryRow {
    fn cells(&self) -> Vec<String> {
        let param = |v: f64| if self.rule.kind().parameterised() { fmt_num(v) } else { String::new() };
        vec![
            self.rule.kind().name().to_string(),
            param(self.rule.ki()),
            param(self.rule.kd()),
            self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
            fmt_num(self.scores.bandwidth),
            fmt_num(self.scores.drop_pct),
            fmt_num(self.scores.queue_pct),
        ]
    }
}

pub fn summary_table(rows: &[SummaryRow]) -> Table {
    let mut t = Table::new(SUMMARY_HEADER);
    for r in rows {
        t.push(r.cells());
    }
    t
}

/// Per-repeat rows followed by their means, one group per rule/point.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub means: Vec<SummaryRow>,
}

impl Summary {
    fn from_groups(groups: Vec<(UpdateRule, Vec<(u64, Scores)>)>) -> Self {
        let mut rows = Vec::new();
        let mut means = Vec::new();
        for (rule, runs) in groups {
            let scores: Vec<Scores> = runs.iter().map(|r| r.1).collect();
            rows.extend(runs.iter().map(|&(seed, scores)| SummaryRow { rule, seed: Some(seed), scores }));
            means.push(SummaryRow { rule, seed: None, scores: Scores::mean(&scores) });
        }
        Self { rows, means }
    }

    /// Mean rows of one rule kind as sweep points scored by `model`'s penalty.
    pub fn sweep_points(&self, kind: plastiflow::RuleKind, model: CongestionModel) -> Vec<SweepPoint> {
        self.means
            .iter()
            .filter(|r| r.rule.kind() == kind)
            .map(|r| SweepPoint {
                ki: r.rule.ki(),
                kd: r.rule.kd(),
                bandwidth: r.scores.bandwidth,
                penalty: r.scores.penalty(model),
            })
            .collect()
    }
}

/// Time series of one run, binned.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub rates: BinnedRates,
    /// Mean feeder-edge weight of the injecting flows, per weight bin.
    pub weights: Vec<f64>,
}

/// Everything kept from one repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatRun {
    pub seed: u64,
    pub scores: Scores,
    pub series: Option<RunSeries>,
}

fn series_of(report: &RunReport, series_bin: usize, weight_bin: usize) -> Result<RunSeries> {
    Ok(RunSeries {
        rates: metrics::binned_rates(report, series_bin)?,
        weights: metrics::binned_series(report, weight_bin, Quantity::SourceWeight)?,
    })
}

/// Plain run of the configured flows.
pub fn run_repeat(p: &Prepared, rule: UpdateRule, repeat: u32, keep_series: bool) -> Result<RepeatRun> {
    let cfg = p.config();
    let seed = p.repeat_seed(repeat);
    let graph = p.graph(seed)?;
    let flows = pick_flows(&graph, cfg.flows, cfg.load(), seed);
    let report = Engine::new(&graph, &flows, rule, cfg.model, seed)?.run(cfg.max_steps);
    let series = if keep_series { Some(series_of(&report, cfg.series_bin, cfg.weight_bin)?) } else { None };
    Ok(RepeatRun { seed, scores: Scores::of(&report), series })
}

/// Rush-hour run: `flows` persistent base flows plus the window's extra
/// flows. Loads exceed what `max_steps` can deliver, so no flow completes.
pub fn run_rush_repeat(p: &Prepared, rule: UpdateRule, repeat: u32) -> Result<RepeatRun> {
    let cfg = p.config();
    let rush = cfg.rush.ok_or(ScenarioError::Missing("rush_*"))?;
    let seed = p.repeat_seed(repeat);
    let graph = p.graph(seed)?;
    let load = cfg.capacity as u64 * cfg.max_steps + 1;
    let mut flows = pick_flows(&graph, cfg.flows + rush.flows, load, seed);
    let extra = flows.split_off(cfg.flows);
    let mut engine = Engine::new(&graph, &flows, rule, cfg.model, seed)?;
    engine.apply_traffic_schedule(&[TrafficWindow { start: rush.start, end: rush.end, flows: extra }])?;
    let report = engine.run(cfg.max_steps);
    let steps = report.steps.len() as f64;
    let total = |f: fn(&plastiflow::StepReport) -> u64| report.steps.iter().map(f).sum::<u64>() as f64;
    let injected = total(|s| s.injected).max(1.0);
    let scores = Scores {
        bandwidth: if steps > 0.0 { total(|s| s.delivered) / total(|s| s.active_flows as u64).max(1.0) } else { 0.0 },
        drop_pct: 100.0 * total(|s| s.dropped) / injected,
        queue_pct: 100.0 * total(|s| s.queued) / injected,
    };
    Ok(RepeatRun { seed, scores, series: Some(series_of(&report, cfg.series_bin, cfg.weight_bin)?) })
}

fn run_all<F>(p: &Prepared, rules: &[UpdateRule], job: F) -> Result<Vec<(UpdateRule, Vec<RepeatRun>)>>
where
    F: Fn(&Prepared, UpdateRule, u32) -> Result<RepeatRun> + Sync,
{
    let repeats = p.config().repeats;
    let jobs: Vec<(usize, u32)> = (0..rules.len()).flat_map(|i| (0..repeats).map(move |r| (i, r))).collect();
    let results: Vec<Result<RepeatRun>> = jobs.par_iter().map(|&(i, r)| job(p, rules[i], r)).collect();
    let mut out: Vec<(UpdateRule, Vec<RepeatRun>)> = rules.iter().map(|&r| (r, Vec::new())).collect();
    for (&(i, _), res) in jobs.iter().zip(results) {
        out[i].1.push(res?);
    }
    Ok(out)
}

fn summarize(groups: &[(UpdateRule, Vec<RepeatRun>)]) -> Summary {
    Summary::from_groups(
        groups.iter().map(|(rule, runs)| (*rule, runs.iter().map(|r| (r.seed, r.scores)).collect())).collect(),
    )
}

/// Repeats of each configured rule, with binned series.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub summary: Summary,
    pub runs: Vec<(UpdateRule, Vec<RepeatRun>)>,
}

pub fn simulate(p: &Prepared) -> Result<SimulationOutput> {
    let runs = run_all(p, &p.config().rules, |p, rule, r| run_repeat(p, rule, r, true))?;
    Ok(SimulationOutput { summary: summarize(&runs), runs })
}

pub fn rush_hour(p: &Prepared) -> Result<SimulationOutput> {
    let runs = run_all(p, &p.config().rules, run_rush_repeat)?;
    Ok(SimulationOutput { summary: summarize(&runs), runs })
}

/// Every configured rule over its parameter grid; one mean row per point.
pub fn sweep(p: &Prepared) -> Result<Summary> {
    let cfg = p.config();
    let grid = cfg.grid.as_ref().ok_or(ScenarioError::Missing("grid"))?;
    let mut rules = Vec::new();
    for rule in &cfg.rules {
        let kind = rule.kind();
        if kind.parameterised() {
            for (ki, kd) in grid.points(kind) {
                rules.push(UpdateRule::new(kind, ki, kd).map_err(AnalysisError::from)?);
            }
        } else {
            rules.push(*rule);
        }
    }
    let runs = run_all(p, &rules, |p, rule, r| run_repeat(p, rule, r, false))?;
    Ok(summarize(&runs))
}

/// Highest-bandwidth point among those whose penalty is within
/// `(1 + slack)` of the minimum. Ties go to the smallest `(ki, kd)`; NaN
/// bandwidth (incomplete runs) ranks last.
pub fn select_best_params(points: &[SweepPoint], slack: f64) -> Result<(f64, f64)> {
    let min = points.iter().map(|p| p.penalty).fold(f64::INFINITY, f64::min);
    let limit = (1.0 + slack) * min;
    let bw = |p: &SweepPoint| if p.bandwidth.is_nan() { f64::NEG_INFINITY } else { p.bandwidth };
    points
        .iter()
        .filter(|p| p.penalty <= limit)
        .min_by(|a, b| {
            bw(b).total_cmp(&bw(a)).then(a.ki.total_cmp(&b.ki)).then(a.kd.total_cmp(&b.kd))
        })
        .map(|p| (p.ki, p.kd))
        .ok_or(ScenarioError::EmptySweep)
}

/// Per-bin mean over repeats of binned rates, skipping repeats that ended
/// before a bin.
pub fn mean_rates(runs: &[RepeatRun]) -> BinnedRates {
    let series: Vec<&BinnedRates> = runs.iter().filter_map(|r| r.series.as_ref()).map(|s| &s.rates).collect();
    let longest = series.iter().max_by_key(|s| s.t.len()).map_or(Vec::new(), |s| s.t.clone());
    let mut out = BinnedRates { t: longest.clone(), bandwidth: Vec::new(), drop_pct: Vec::new(), queue_pct: Vec::new() };
    for i in 0..longest.len() {
        let present: Vec<&&BinnedRates> = series.iter().filter(|s| s.t.len() > i).collect();
        let n = present.len() as f64;
        out.bandwidth.push(present.iter().map(|s| s.bandwidth[i]).sum::<f64>() / n);
        out.drop_pct.push(present.iter().map(|s| s.drop_pct[i]).sum::<f64>() / n);
        out.queue_pct.push(present.iter().map(|s| s.queue_pct[i]).sum::<f64>() / n);
    }
    out
}

/// Per weight bin: mean over repeats and its standard error.
pub fn mean_weights(runs: &[RepeatRun]) -> Vec<(f64, f64)> {
    let series: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.series.as_ref()).map(|s| &s.weights).collect();
    let bins = series.iter().map(|s| s.len()).max().unwrap_or(0);
    (0..bins)
        .map(|i| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s.get(i)).copied().filter(|v| !v.is_nan()).collect();
            if vals.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let d = metrics::Dispersion::of(&vals);
            (d.mean, d.std / (vals.len() as f64).sqrt())
        })
        .collect()
}

/// Mean of `values` over the bins whose first step lies in `start..end`.
pub fn window_mean(t: &[u64], values: &[f64], start: u64, end: u64) -> f64 {
    let picked: Vec<f64> = t.iter().zip(values).filter(|(&t, _)| (start..end).contains(&t)).map(|(_, &v)| v).collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

pub fn series_table(rates: &BinnedRates) -> Table {
    let mut t = Table::new(SERIES_HEADER);
    for i in 0..rates.t.len() {
        t.push(vec![
            rates.t[i].to_string(),
            fmt_num(rates.bandwidth[i]),
            fmt_num(rates.drop_pct[i]),
            fmt_num(rates.queue_pct[i]),
        ]);
    }
    t
}

pub fn weights_table(weights: &[(f64, f64)], bin: usize) -> Table {
    let mut t = Table::new(WEIGHTS_HEADER);
    for (i, &(mean, se)) in weights.iter().enumerate() {
        t.push(vec![(i * bin).to_string(), fmt_num(mean), fmt_num(se)]);
    }
    t
}

/// Size, degree and path-length statistics of the first repeat's network.
pub fn topology_stats(p: &Prepared) -> Result<Table> {
    let cfg = p.config();
    let seed = p.repeat_seed(0);
    let g = p.graph(seed)?;
    let degrees = g.router_degrees();
    let links = degrees.iter().sum::<usize>() / 2;
    let flows = pick_flows(&g, cfg.flows, cfg.load(), seed);
    let pairs: Vec<_> = flows.iter().map(|f| (f.source, f.target)).collect();
    let table = build_routing_table(&g, &pairs, derive_seed(seed, stream::ROUTING, 0))?;
    let mut t = Table::new(&["stat", "value"]);
    let mut add = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    add("routers", g.count_role(NodeRole::Router).to_string());
    add("sources", g.count_role(NodeRole::Source).to_string());
    add("targets", g.count_role(NodeRole::Target).to_string());
    add("router_links", links.to_string());
    add("directed_edges", g.edges().len().to_string());
    add("mean_degree", fmt_num(2.0 * links as f64 / degrees.len() as f64));
    add("min_degree", degrees.iter().min().copied().unwrap_or(0).to_string());
    add("max_degree", degrees.iter().max().copied().unwrap_or(0).to_string());
    add("connected", g.routers_connected().to_string());
    add("flows", flows.len().to_string());
    add("mean_hop_count", fmt_num(table.mean_hop_count()));
    Ok(t)
}

/// Closed form and two-flow oracle for each rule and parameter set.
pub fn overshoot_csv(capacity: u32, max_steps: u32) -> Result<Table> {
    let mut t = Table::new(OVERSHOOT_HEADER);
    for row in overshoot_table(capacity, max_steps)? {
        let opt = |v: Option<f64>| v.map_or(String::new(), fmt_num);
        t.push(vec![
            row.rule.to_string(),
            row.set.name().to_string(),
            opt(row.ki),
            opt(row.kd),
            row.simulated.horizon.to_string(),
            opt(row.analytic),
            fmt_num(row.simulated.overshoot),
        ]);
    }
    Ok(t)
}

fn write(table: &Table, path: PathBuf, written: &mut Vec<PathBuf>) -> Result<()> {
    table.write(&path).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

fn write_summary(summary: &Summary, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    write(&summary_table(&summary.rows), dir.join("summary.csv"), written)?;
    write(&summary_table(&summary.means), dir.join("summary_mean.csv"), written)
}

fn write_series(out: &SimulationOutput, cfg: &RunConfig, written: &mut Vec<PathBuf>) -> Result<()> {
    for (rule, runs) in &out.runs {
        let name = rule.kind().name();
        write(&series_table(&mean_rates(runs)), cfg.out_dir.join(format!("series_{name}.csv")), written)?;
        let weights = mean_weights(runs);
        write(&weights_table(&weights, cfg.weight_bin), cfg.out_dir.join(format!("weights_{name}.csv")), written)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Simulate,
    Sweep,
    RushHour,
    Topo,
}

/// Runs a scenario and writes its CSVs into the config's output directory.
/// Returns the files written.
pub fn run_scenario(kind: ScenarioKind, cfg: RunConfig) -> Result<Vec<PathBuf>> {
    let p = Prepared::new(cfg)?;
    let cfg = p.config();
    let mut written = Vec::new();
    match kind {
        ScenarioKind::Simulate => {
            let out = simulate(&p)?;
            write_summary(&out.summary, &cfg.out_dir, &mut written)?;
            write_series(&out, cfg, &mut written)?;
        }
        ScenarioKind::Sweep => {
            let summary = sweep(&p)?;
            write_summary(&summary, &cfg.out_dir, &mut written)?;
        }
        ScenarioKind::RushHour => {
            let out = rush_hour(&p)?;
            write_summary(&out.summary, &cfg.out_dir, &mut written)?;
            write_series(&out, cfg, &mut written)?;
        }
        ScenarioKind::Topo => write(&topology_stats(&p)?, cfg.out_dir.join("topo.csv"), &mut written)?,
    }
    Ok(written)
}
