//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment. Only `rule` is required.
//! `ki.<rule>` / `kd.<rule>` override the shared `ki` / `kd` for one rule.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use plastiflow::analysis::ParamSet;
use plastiflow::{CongestionModel, RuleKind, UpdateRule};

/// Environment variable that replaces the configured output directory.
pub const OUT_DIR_ENV: &str = "PLASTIFLOW_OUT_DIR";

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { key: String, line: usize, first: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: invalid `{key}`: {reason}")]
    Invalid { key: String, line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Uniform { routers: usize, degree: usize },
    ScaleFree { routers: usize, attach_m: usize },
    Caida { path: PathBuf },
}

/// Extra flows injecting during steps `start..=end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RushSpec {
    pub start: u64,
    pub end: u64,
    pub flows: usize,
}

/// Parameter grid for a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Additive and subtractive steps 1..9, multiplicative factors 1.1..1.9
    /// and 0.1..0.9.
    Paper,
    Explicit { ki: Vec<f64>, kd: Vec<f64> },
}

impl GridSpec {
    /// `(ki, kd)` points for a rule, `ki`-major.
    pub fn points(&self, kind: RuleKind) -> Vec<(f64, f64)> {
        match self {
            GridSpec::Paper => {
                let ki: Vec<f64> = (1..=9)
                    .map(|i| if kind.multiplicative_increase() { (10 + i) as f64 / 10.0 } else { i as f64 })
                    .collect();
                let kd: Vec<f64> = (1..=9)
                    .map(|i| if kind.multiplicative_decrease() { i as f64 / 10.0 } else { i as f64 })
                    .collect();
                cartesian(&ki, &kd)
            }
            GridSpec::Explicit { ki, kd } => cartesian(ki, kd),
        }
    }
}

fn cartesian(ki: &[f64], kd: &[f64]) -> Vec<(f64, f64)> {
    ki.iter().flat_map(|&i| kd.iter().map(move |&d| (i, d))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub topology: TopologySpec,
    pub sources: usize,
    pub targets: usize,
    pub capacity: u32,
    pub load_multiplier: u64,
    pub model: CongestionModel,
    /// One rule per entry of the `rule` list, with its parameters resolved.
    pub rules: Vec<UpdateRule>,
    pub flows: usize,
    pub seed: u64,
    pub repeats: u32,
    pub max_steps: u64,
    pub grid: Option<GridSpec>,
    pub rush: Option<RushSpec>,
    pub series_bin: usize,
    pub weight_bin: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Per-flow load `L = load_multiplier * C`.
    pub fn load(&self) -> u64 {
        self.load_multiplier * self.capacity as u64
    }

    pub fn rule_kinds(&self) -> Vec<RuleKind> {
        self.rules.iter().map(|r| r.kind()).collect()
    }

    /// Applies [`OUT_DIR_ENV`] when it is set and non-empty.
    pub fn with_env_overrides(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.out_dir = PathBuf::from(dir);
        }
        self
    }
}

impl fmt::Display for TopologySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologySpec::Uniform { routers, degree } => write!(f, "uniform({routers} routers, degree {degree})"),
            TopologySpec::ScaleFree { routers, attach_m } => write!(f, "scale_free({routers} routers, m = {attach_m})"),
            TopologySpec::Caida { path } => write!(f, "caida({})", path.display()),
        }
    }
}

const KEYS: &[&str] = &[
    "topology",
    "routers",
    "degree",
    "attach_m",
    "caida_path",
    "sources",
    "targets",
    "capacity",
    "load_multiplier",
    "model",
    "rule",
    "ki",
    "kd",
    "flows",
    "seed",
    "repeats",
    "max_steps",
    "grid",
    "ki_grid",
    "kd_grid",
    "rush_start",
    "rush_end",
    "rush_flows",
    "series_bin",
    "weight_bin",
    "out_dir",
];

struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<(usize, T)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(|x| Some((line, x))).map_err(|e| ConfigError::Invalid {
                key: key.into(),
                line,
                reason: format!("`{v}`: {e}"),
            }),
        }
    }

    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.map_or(default, |(_, v)| v))
    }

    /// Positive integer with a default.
    fn positive(&self, key: &str, default: u64) -> Result<u64, ConfigError> {
        match self.parse::<u64>(key)? {
            None => Ok(default),
            Some((line, 0)) => Err(invalid(key, line, "must be at least 1")),
            Some((_, v)) => Ok(v),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }

    fn float_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some((line, v)) = self.raw(key) else { return Ok(None) };
        v.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| invalid(key, line, &format!("`{}`: {e}", x.trim()))))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

fn invalid(key: &str, line: usize, reason: &str) -> ConfigError {
    ConfigError::Invalid { key: key.into(), line, reason: reason.into() }
}

fn is_known(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    match key.split_once('.') {
        Some(("ki" | "kd", rule)) => rule.parse::<RuleKind>().is_ok(),
        _ => false,
    }
}

pub fn parse_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut map: HashMap<String, (usize, String)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.into() });
        };
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line, text: content.into() });
        }
        if !is_known(&key) {
            return Err(ConfigError::UnknownKey { key, line });
        }
        if let Some(&(first, _)) = map.get(&key) {
            return Err(ConfigError::DuplicateKey { key, line, first });
        }
        map.insert(key, (line, value.to_string()));
    }
    build(&Entries { map })
}

fn build(e: &Entries) -> Result<RunConfig, ConfigError> {
    let routers = e.positive("routers", 100)? as usize;
    let topology = match e.get("topology", "uniform".to_string())?.to_ascii_lowercase().as_str() {
        "uniform" => TopologySpec::Uniform { routers, degree: e.positive("degree", 6)? as usize },
        "scale_free" | "scalefree" | "ba" => {
            TopologySpec::ScaleFree { routers, attach_m: e.positive("attach_m", 3)? as usize }
        }
        "caida" => match e.raw("caida_path") {
            Some((_, p)) => TopologySpec::Caida { path: PathBuf::from(p) },
            None => return Err(ConfigError::MissingKey { key: "caida_path".into() }),
        },
        other => {
            return Err(invalid("topology", e.line("topology"), &format!("`{other}` is not uniform, scale_free or caida")))
        }
    };
    let endpoints = match topology {
        TopologySpec::Caida { .. } => 1000,
        _ => routers as u64,
    };
    let sources = e.positive("sources", endpoints)? as usize;
    let targets = e.positive("targets", endpoints)? as usize;
    let capacity = e.positive("capacity", 1000)?;
    let capacity = u32::try_from(capacity).map_err(|_| invalid("capacity", e.line("capacity"), "too large"))?;
    let load_multiplier = e.positive("load_multiplier", 100)?;

    let model = match e.get("model", "drop".to_string())?.to_ascii_lowercase().as_str() {
        "drop" => CongestionModel::Drop,
        "queue" => CongestionModel::Queue,
        other => return Err(invalid("model", e.line("model"), &format!("`{other}` is not drop or queue"))),
    };

    let Some((rule_line, rule_text)) = e.raw("rule") else {
        return Err(ConfigError::MissingKey { key: "rule".into() });
    };
    let mut kinds = Vec::new();
    for name in rule_text.split(',') {
        let kind: RuleKind = name.trim().parse().map_err(|err| invalid("rule", rule_line, &format!("{err}")))?;
        if kinds.contains(&kind) {
            return Err(invalid("rule", rule_line, &format!("{kind} listed twice")));
        }
        kinds.push(kind);
    }
    let shared_ki = e.parse::<f64>("ki")?;
    let shared_kd = e.parse::<f64>("kd")?;
    let mut rules = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let own_ki = e.parse::<f64>(&format!("ki.{}", kind.name()))?;
        let own_kd = e.parse::<f64>(&format!("kd.{}", kind.name()))?;
        let rule = match ParamSet::Balanced.params(kind) {
            None => UpdateRule::unparameterised(kind),
            Some((dki, dkd)) => {
                let (ki_line, ki) = own_ki.or(shared_ki).unwrap_or((rule_line, dki));
                let (kd_line, kd) = own_kd.or(shared_kd).unwrap_or((rule_line, dkd));
                // Report the offending key's own line.
                UpdateRule::new(kind, ki, dkd).map_err(|err| invalid("ki", ki_line, &format!("{err}")))?;
                UpdateRule::new(kind, dki, kd).map_err(|err| invalid("kd", kd_line, &format!("{err}")))?;
                UpdateRule::new(kind, ki, kd).expect("both parameters checked")
            }
        };
        rules.push(rule);
    }

    let flows = e.positive("flows", sources as u64)? as usize;
    let seed = e.get("seed", 1u64)?;
    let repeats = e.positive("repeats", 25)?;
    let repeats = u32::try_from(repeats).map_err(|_| invalid("repeats", e.line("repeats"), "too large"))?;
    let max_steps = e.positive("max_steps", 10 * load_multiplier)?;

    let grid = match (e.raw("grid"), e.float_list("ki_grid")?, e.float_list("kd_grid")?) {
        (Some((line, g)), ki, kd) => {
            if !g.eq_ignore_ascii_case("paper") {
                return Err(invalid("grid", line, &format!("`{g}` is not `paper`")));
            }
            if ki.is_some() || kd.is_some() {
                return Err(invalid("grid", line, "cannot be combined with ki_grid / kd_grid"));
            }
            Some(GridSpec::Paper)
        }
        (None, Some(ki), Some(kd)) => {
            for &kind in &kinds {
                for &v in &ki {
                    UpdateRule::new(kind, v, kd[0]).map_err(|err| invalid("ki_grid", e.line("ki_grid"), &format!("{err}")))?;
                }
                for &v in &kd {
                    UpdateRule::new(kind, ki[0], v).map_err(|err| invalid("kd_grid", e.line("kd_grid"), &format!("{err}")))?;
                }
            }
            Some(GridSpec::Explicit { ki, kd })
        }
        (None, None, None) => None,
        (None, None, Some(_)) => return Err(ConfigError::MissingKey { key: "ki_grid".into() }),
        (None, Some(_), None) => return Err(ConfigError::MissingKey { key: "kd_grid".into() }),
    };

    let rush = match (e.parse::<u64>("rush_start")?, e.parse::<u64>("rush_end")?, e.parse::<usize>("rush_flows")?) {
        (None, None, None) => None,
        (Some((_, start)), Some((line, end)), Some((fline, flows))) => {
            if end < start {
                return Err(invalid("rush_end", line, "must not precede rush_start"));
            }
            if end >= max_steps {
                return Err(invalid("rush_end", line, "window must end before max_steps"));
            }
            if flows == 0 {
                return Err(invalid("rush_flows", fline, "must be at least 1"));
            }
            Some(RushSpec { start, end, flows })
        }
        (start, end, _) => {
            let key = if start.is_none() { "rush_start" } else if end.is_none() { "rush_end" } else { "rush_flows" };
            return Err(ConfigError::MissingKey { key: key.into() });
        }
    };
    let needed = flows + rush.map_or(0, |r| r.flows);
    if needed > sources {
        return Err(invalid(
            "flows",
            e.line("flows").max(e.line("rush_flows")),
            &format!("{needed} flows need {needed} distinct sources, only {sources} configured"),
        ));
    }

    Ok(RunConfig {
        topology,
        sources,
        targets,
        capacity,
        load_multiplier,
        model,
        rules,
        flows,
        seed,
        repeats,
        max_steps,
        grid,
        rush,
        series_bin: e.positive("series_bin", 100)? as usize,
        weight_bin: e.positive("weight_bin", 10)? as usize,
        out_dir: PathBuf::from(e.get("out_dir", "out".to_string())?),
    })
}
