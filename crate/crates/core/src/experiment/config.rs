//! Experiment configuration files.
//!
//! Configs are TOML (or JSON, e.g. a `meta.json` written by a previous run).
//! Every key except `experiment` and the signal kind is optional:
//!
//! ```toml
//! experiment = "mse-curves"   # scatter | gain-vs-stepsize | mse-curves | gain-vs-network-size | custom
//! output = "results/mse"      # output directory
//! iterations = 2000           # default: all available samples
//!
//! [signal]
//! kind = "ar4"                # ar4 | proper-ma | improper-arma | wl-arma-truth | wind-file
//! lambda = 0.95               # default 0.95 for improper-arma, 0 otherwise
//! length = 2001
//! burn_in = 500
//! sigma2 = 0.0                # measurement noise, wl-arma-truth
//! path = "wind.csv"           # wind-file
//! header = true               # wind-file: skip a non-numeric first row
//! remove_mean = true          # wind-file
//!
//! [signal.truth]              # wl-arma-truth weights as [re, im] pairs
//! a = [[0.5, 0.0]]
//! g = [[0.0, 0.0]]
//! b = [[1.0, 0.0], [0.2, 0.1]]
//! h = [[0.1, 0.0], [0.0, 0.0]]
//!
//! [filter]
//! m = 4                       # feedback order
//! n = 4                       # feedforward order
//! sensitivity = "reduced"     # reduced | exact
//! divergence_threshold = 1e6
//!
//! [network]
//! nodes = 10
//! mu = 1e-3
//! mu_list = [1e-6, 1e-5]      # gain-vs-stepsize
//! nodes_list = [2, 4, 10]     # gain-vs-network-size
//! shared_signal = false
//!
//! [seeds]
//! count = 20
//! master = 0
//!
//! [metrics]
//! steady_fraction = 0.5
//! smoothing_window = 200
//! ```
//!
//! `signal = "ar4"` at top level is shorthand for `[signal] kind = "ar4"`.
//! Validation reports every problem at once; unknown keys are errors
//! unless lax mode is requested, in which case they are warnings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::filter::{FilterConfig, SensitivityMode};
use crate::metrics::{DEFAULT_SMOOTHING_WINDOW, DEFAULT_STEADY_FRACTION};
use crate::montecarlo::BatchSpec;
use crate::signal::{SignalKind, SignalSpec, DEFAULT_BURN_IN};
use crate::wl::{WeightVector, C64};

pub const DEFAULT_NODES: usize = 10;
pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_SEEDS: usize = 20;
pub const DEFAULT_LENGTH: usize = 2001;
pub const DEFAULT_MU: f64 = 1e-3;
pub const DEFAULT_MU_LIST: [f64; 8] = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];
pub const DEFAULT_NODES_LIST: [usize; 7] = [2, 4, 6, 8, 10, 15, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Scatter,
    GainVsStepsize,
    MseCurves,
    GainVsNetworkSize,
    Custom,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Scatter,
        ExperimentKind::GainVsStepsize,
        ExperimentKind::MseCurves,
        ExperimentKind::GainVsNetworkSize,
        ExperimentKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Scatter => "scatter",
            ExperimentKind::GainVsStepsize => "gain-vs-stepsize",
            ExperimentKind::MseCurves => "mse-curves",
            ExperimentKind::GainVsNetworkSize => "gain-vs-network-size",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSection {
    pub a: Vec<[f64; 2]>,
    pub g: Vec<[f64; 2]>,
    pub b: Vec<[f64; 2]>,
    pub h: Vec<[f64; 2]>,
}

impl TruthSection {
    pub fn weights(&self) -> Result<WeightVector> {
        let conv = |v: &[[f64; 2]]| v.iter().map(|[re, im]| C64::new(*re, *im)).collect::<Vec<_>>();
        WeightVector::from_blocks(&conv(&self.a), &conv(&self.g), &conv(&self.b), &conv(&self.h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSection {
    pub kind: SignalKind,
    pub lambda: f64,
    pub length: usize,
    pub burn_in: usize,
    pub sigma2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub header: bool,
    pub remove_mean: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSection {
    pub m: usize,
    pub n: usize,
    pub sensitivity: SensitivityMode,
    pub divergence_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSection {
    pub nodes: usize,
    pub mu: f64,
    pub mu_list: Vec<f64>,
    pub nodes_list: Vec<usize>,
    pub shared_signal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSection {
    pub count: usize,
    pub master: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSection {
    pub steady_fraction: f64,
    pub smoothing_window: usize,
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub signal: SignalSection,
    pub filter: FilterSection,
    pub network: NetworkSection,
    pub seeds: SeedSection,
    pub metrics: MetricsSection,
}

impl ExperimentConfig {
    /// Defaults for everything but the experiment and signal kind.
    pub fn new(experiment: ExperimentKind, kind: SignalKind) -> Self {
        Self {
            experiment,
            output: PathBuf::from("results").join(experiment.name()),
            iterations: None,
            signal: SignalSection {
                kind,
                lambda: kind.default_lambda(),
                length: DEFAULT_LENGTH,
                burn_in: DEFAULT_BURN_IN,
                sigma2: 0.0,
                path: None,
                header: true,
                remove_mean: true,
                truth: None,
            },
            filter: FilterSection {
                m: DEFAULT_ORDER,
                n: DEFAULT_ORDER,
                sensitivity: SensitivityMode::Reduced,
                divergence_threshold: FilterConfig::default().divergence_threshold,
            },
            network: NetworkSection {
                nodes: DEFAULT_NODES,
                mu: DEFAULT_MU,
                mu_list: DEFAULT_MU_LIST.to_vec(),
                nodes_list: DEFAULT_NODES_LIST.to_vec(),
                shared_signal: false,
            },
            seeds: SeedSection {
                count: DEFAULT_SEEDS,
                master: 0,
            },
            metrics: MetricsSection {
                steady_fraction: DEFAULT_STEADY_FRACTION,
                smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            },
        }
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            feedback_order: self.filter.m,
            feedforward_order: self.filter.n,
            sensitivity_mode: self.filter.sensitivity,
            divergence_threshold: self.filter.divergence_threshold,
        }
    }

    pub fn signal_spec(&self) -> Result<SignalSpec> {
        let s = &self.signal;
        Ok(SignalSpec {
            kind: s.kind,
            lambda: Some(s.lambda),
            length: s.length,
            seed: self.seeds.master,
            burn_in: s.burn_in,
            truth_weights: s.truth.as_ref().map(TruthSection::weights).transpose()?,
            sigma2: s.sigma2,
            path: s.path.clone(),
            header: s.header,
            remove_mean: s.remove_mean,
        })
    }

    pub fn batch_spec(&self) -> Result<BatchSpec> {
        Ok(BatchSpec {
            signal: self.signal_spec()?,
            filter: self.filter_config(),
            nodes: self.network.nodes,
            mu: self.network.mu,
            iterations: self.iterations,
            seeds: self.seeds.count,
            master_seed: self.seeds.master,
            shared_signal: self.network.shared_signal,
            steady_fraction: self.metrics.steady_fraction,
            keep_curves: false,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config is always TOML-representable")
    }
}

/// A resolved config plus any non-fatal remarks.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub warnings: Vec<String>,
}

const TOP_KEYS: &[&str] = &[
    "experiment",
    "output",
    "iterations",
    "signal",
    "filter",
    "network",
    "seeds",
    "metrics",
];
const SIGNAL_KEYS: &[&str] = &[
    "kind",
    "lambda",
    "length",
    "burn_in",
    "sigma2",
    "path",
    "header",
    "remove_mean",
    "truth",
];
const TRUTH_KEYS: &[&str] = &["a", "g", "b", "h"];
const FILTER_KEYS: &[&str] = &["m", "n", "sensitivity", "divergence_threshold"];
const NETWORK_KEYS: &[&str] = &["nodes", "mu", "mu_list", "nodes_list", "shared_signal"];
const SEED_KEYS: &[&str] = &["count", "master"];
const METRIC_KEYS: &[&str] = &["steady_fraction", "smoothing_window"];
/// Top-level keys of a `meta.json` that are not part of the config itself.
const META_KEYS: &[&str] = &["build", "failures"];

const ALIASES: &[(&str, &str)] = &[
    ("stepsize", "network.mu"),
    ("step_size", "network.mu"),
    ("step", "network.mu"),
    ("mu", "network.mu"),
    ("mus", "network.mu_list"),
    ("step_sizes", "network.mu_list"),
    ("l", "network.nodes"),
    ("num_nodes", "network.nodes"),
    ("network_size", "network.nodes"),
    ("nodes", "network.nodes"),
    ("seed", "seeds.master"),
    ("master_seed", "seeds.master"),
    ("runs", "seeds.count"),
    ("order", "filter.m / filter.n"),
    ("feedback_order", "filter.m"),
    ("feedforward_order", "filter.n"),
    ("noncircularity", "signal.lambda"),
];

fn suggestion(section: &str, key: &str, valid: &[&str]) -> Option<String> {
    let lower = key.to_ascii_lowercase();
    if let Some((_, target)) = ALIASES.iter().find(|(alias, _)| *alias == lower) {
        let local = target.strip_prefix(&format!("{section}.")).unwrap_or(target);
        return Some(local.to_string());
    }
    if valid.contains(&lower.as_str()) {
        return Some(lower);
    }
    valid
        .iter()
        .map(|v| (strsim::levenshtein(&lower, v), *v))
        .filter(|(d, v)| *d <= 2.max(v.len() / 3))
        .min()
        .map(|(_, v)| v.to_string())
}

struct Walker {
    errors: Vec<String>,
    warnings: Vec<String>,
    strict: bool,
}

impl Walker {
    fn path(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        }
    }

    fn table<'a>(&mut self, parent: &'a Map<String, Value>, section: &str, key: &str) -> Option<&'a Map<String, Value>> {
        match parent.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.errors.push(format!("{}: expected a table", Walker::path(section, key)));
                None
            }
        }
    }

    fn unknown_keys(&mut self, table: &Map<String, Value>, section: &str, valid: &[&str], ignored: &[&str]) {
        for key in table.keys() {
            if valid.contains(&key.as_str()) || ignored.contains(&key.as_str()) {
                continue;
            }
            let mut msg = format!("{}: unknown key", Walker::path(section, key));
            if let Some(s) = suggestion(section, key, valid) {
                msg.push_str(&format!(" (did you mean `{s}`?)"));
            } else if section.is_empty() {
                if let Some((_, target)) = ALIASES.iter().find(|(a, _)| *a == key.to_ascii_lowercase()) {
                    msg.push_str(&format!(" (did you mean `{target}`?)"));
                }
            }
            if self.strict {
                self.errors.push(msg);
            } else {
                self.warnings.push(msg);
            }
        }
    }

    fn value<'a>(table: Option<&'a Map<String, Value>>, key: &str) -> Option<&'a Value> {
        table.and_then(|t| t.get(key)).filter(|v| !v.is_null())
    }

    fn f64(&mut self, table: Option<&Map<String, Value>>, section: &str, key: &str, default: f64) -> f64 {
        match Walker::value(table, key) {
            None => default,
            Some(v) => v.as_f64().unwrap_or_else(|| {
                self.errors.push(format!("{}: expected a number, got {v}", Walker::path(section, key)));
                default
            }),
        }
    }

    fn usize(&mut self, table: Option<&Map<String, Value>>, section: &str, key: &str, default: usize) -> usize {
        match Walker::value(table, key) {
            None => default,
            Some(v) => match v.as_u64() {
                Some(u) => u as usize,
                None => {
                    self.errors.push(format!(
                        "{}: expected a non-negative integer, got {v}",
                        Walker::path(section, key)
                    ));
                    default
                }
            },
        }
    }

    fn u64(&mut self, table: Option<&Map<String, Value>>, section: &str, key: &str, default: u64) -> u64 {
        match Walker::value(table, key) {
            None => default,
            Some(v) => v.as_u64().unwrap_or_else(|| {
                self.errors.push(format!(
                    "{}: expected a non-negative integer, got {v}",
                    Walker::path(section, key)
                ));
                default
            }),
        }
    }

    fn bool(&mut self, table: Option<&Map<String, Value>>, section: &str, key: &str, default: bool) -> bool {
        match Walker::value(table, key) {
            None => default,
            Some(v) => v.as_bool().unwrap_or_else(|| {
                self.errors.push(format!("{}: expected true or false, got {v}", Walker::path(section, key)));
                default
            }),
        }
    }

    fn string<'a>(&mut self, table: Option<&'a Map<String, Value>>, section: &str, key: &str) -> Option<&'a str> {
        let v = Walker::value(table, key)?;
        let s = v.as_str();
        if s.is_none() {
            self.errors.push(format!("{}: expected a string, got {v}", Walker::path(section, key)));
        }
        s
    }

    fn f64_list(&mut self, table: Option<&Map<String, Value>>, section: &str, key: &str, default: &[f64]) -> Vec<f64> {
        match Walker::value(table, key) {
            None => default.to_vec(),
            Some(Value::Array(items)) => {
                let parsed: Option<Vec<f64>> = items.iter().map(Value::as_f64).collect();
                parsed.unwrap_or_else(|| {
                    self.errors.push(format!("{}: expected a list of numbers", Walker::path(section, key)));
                    default.to_vec()
                })
            }
            Some(v) => {
                self.errors.push(format!("{}: expected a list, got {v}", Walker::path(section, key)));
                default.to_vec()
            }
        }
    }

    fn pairs(&mut self, table: Option<&Map<String, Value>>, key: &str) -> Vec<[f64; 2]> {
        let path = Walker::path("signal.truth", key);
        let Some(v) = Walker::value(table, key) else {
            self.errors.push(format!("{path}: missing"));
            return Vec::new();
        };
        let parsed = v.as_array().and_then(|items| {
            items
                .iter()
                .map(|p| match p.as_array().map(Vec::as_slice) {
                    Some([re, im]) => Some([re.as_f64()?, im.as_f64()?]),
                    _ => None,
                })
                .collect::<Option<Vec<_>>>()
        });
        parsed.unwrap_or_else(|| {
            self.errors.push(format!("{path}: expected a list of [re, im] pairs"));
            Vec::new()
        })
    }

    fn check(&mut self, ok: bool, path: &str, msg: impl std::fmt::Display) {
        if !ok {
            self.errors.push(format!("{path}: {msg}"));
        }
    }
}

/// Validates a parsed config document; every problem is reported at once.
pub fn validate_value(doc: &Value, strict: bool) -> Result<Validated> {
    let mut w = Walker {
        errors: Vec::new(),
        warnings: Vec::new(),
        strict,
    };
    let Some(root) = doc.as_object() else {
        return Err(Error::Config(vec!["config must be a table of keys".into()]));
    };
    // meta.json nests the config under `config`
    let root = match root.get("config") {
        Some(Value::Object(inner)) if root.contains_key("build") => inner,
        _ => root,
    };
    w.unknown_keys(root, "", TOP_KEYS, META_KEYS);

    let experiment = match w.string(Some(root), "", "experiment") {
        None if !root.contains_key("experiment") => {
            w.errors.push("experiment: missing (one of scatter, gain-vs-stepsize, mse-curves, gain-vs-network-size, custom)".into());
            None
        }
        None => None,
        Some(s) => {
            let k = ExperimentKind::parse(s);
            if k.is_none() {
                w.errors.push(format!(
                    "experiment: unknown experiment {s:?} (expected scatter, gain-vs-stepsize, mse-curves, gain-vs-network-size or custom)"
                ));
            }
            k
        }
    };

    // `signal` is either a table or a bare kind name
    let shorthand = root.get("signal").and_then(Value::as_str);
    let signal = if shorthand.is_some() {
        None
    } else {
        w.table(root, "", "signal")
    };
    if let Some(t) = signal {
        w.unknown_keys(t, "signal", SIGNAL_KEYS, &[]);
    }
    let kind_name = shorthand.or_else(|| w.string(signal, "signal", "kind"));
    let kind = match kind_name {
        None => {
            w.errors.push("signal.kind: missing (one of ar4, proper-ma, improper-arma, wl-arma-truth, wind-file)".into());
            None
        }
        Some(s) => {
            let k = SignalKind::parse(s);
            if k.is_none() {
                w.errors.push(format!(
                    "signal.kind: unknown signal {s:?} (expected ar4, proper-ma, improper-arma, wl-arma-truth or wind-file)"
                ));
            }
            k
        }
    };

    let mut cfg = ExperimentConfig::new(
        experiment.unwrap_or(ExperimentKind::Custom),
        kind.unwrap_or(SignalKind::Ar4),
    );
    if let Some(out) = w.string(Some(root), "", "output") {
        cfg.output = PathBuf::from(out);
    }
    if Walker::value(Some(root), "iterations").is_some() {
        let it = w.usize(Some(root), "", "iterations", 0);
        w.check(it >= 1, "iterations", "must be at least 1");
        cfg.iterations = Some(it);
    }

    let s = &mut cfg.signal;
    s.lambda = w.f64(signal, "signal", "lambda", s.lambda);
    w.check((0.0..=1.0).contains(&s.lambda), "signal.lambda", format!("must lie in [0, 1], got {}", s.lambda));
    s.length = w.usize(signal, "signal", "length", s.length);
    w.check(s.length >= 2, "signal.length", "must be at least 2");
    s.burn_in = w.usize(signal, "signal", "burn_in", s.burn_in);
    s.sigma2 = w.f64(signal, "signal", "sigma2", s.sigma2);
    w.check(s.sigma2 >= 0.0 && s.sigma2.is_finite(), "signal.sigma2", format!("must be non-negative, got {}", s.sigma2));
    s.header = w.bool(signal, "signal", "header", s.header);
    s.remove_mean = w.bool(signal, "signal", "remove_mean", s.remove_mean);
    s.path = w.string(signal, "signal", "path").map(PathBuf::from);
    if let Some(truth) = signal.and_then(|t| w.table(t, "signal", "truth")) {
        w.unknown_keys(truth, "signal.truth", TRUTH_KEYS, &[]);
        let section = TruthSection {
            a: w.pairs(Some(truth), "a"),
            g: w.pairs(Some(truth), "g"),
            b: w.pairs(Some(truth), "b"),
            h: w.pairs(Some(truth), "h"),
        };
        match section.weights() {
            Ok(_) => cfg.signal.truth = Some(section),
            Err(e) => w.errors.push(format!("signal.truth: {e}")),
        }
    }
    match kind {
        Some(SignalKind::WindFile) => match &cfg.signal.path {
            None => w.errors.push("signal.path: required for wind-file signals".into()),
            Some(p) if !p.exists() => w.errors.push(format!("signal.path: file {} does not exist", p.display())),
            Some(_) => {}
        },
        Some(SignalKind::WlArmaTruth) if cfg.signal.truth.is_none() => {
            w.errors.push("signal.truth: required for wl-arma-truth signals".into())
        }
        _ => {}
    }

    let filter = w.table(root, "", "filter");
    if let Some(t) = filter {
        w.unknown_keys(t, "filter", FILTER_KEYS, &[]);
    }
    let f = &mut cfg.filter;
    f.m = w.usize(filter, "filter", "m", f.m);
    w.check(f.m >= 1, "filter.m", "feedback order must be at least 1");
    f.n = w.usize(filter, "filter", "n", f.n);
    match w.string(filter, "filter", "sensitivity") {
        Some("reduced") => f.sensitivity = SensitivityMode::Reduced,
        Some("exact") => f.sensitivity = SensitivityMode::Exact,
        Some(other) => w
            .errors
            .push(format!("filter.sensitivity: unknown mode {other:?} (expected reduced or exact)")),
        None => {}
    }
    f.divergence_threshold = w.f64(filter, "filter", "divergence_threshold", f.divergence_threshold);
    w.check(f.divergence_threshold > 0.0, "filter.divergence_threshold", "must be positive");

    let network = w.table(root, "", "network");
    if let Some(t) = network {
        w.unknown_keys(t, "network", NETWORK_KEYS, &[]);
    }
    let n = &mut cfg.network;
    n.nodes = w.usize(network, "network", "nodes", n.nodes);
    w.check(n.nodes >= 1, "network.nodes", "must be at least 1");
    n.mu = w.f64(network, "network", "mu", n.mu);
    w.check(n.mu >= 0.0 && n.mu.is_finite(), "network.mu", format!("must be finite and non-negative, got {}", n.mu));
    n.mu_list = w.f64_list(network, "network", "mu_list", &n.mu_list);
    w.check(!n.mu_list.is_empty(), "network.mu_list", "must not be empty");
    for mu in &n.mu_list {
        w.check(*mu >= 0.0 && mu.is_finite(), "network.mu_list", format!("step size {mu} must be finite and non-negative"));
    }
    let default_nodes: Vec<f64> = n.nodes_list.iter().map(|v| *v as f64).collect();
    let nodes_list = w.f64_list(network, "network", "nodes_list", &default_nodes);
    w.check(!nodes_list.is_empty(), "network.nodes_list", "must not be empty");
    n.nodes_list = nodes_list
        .iter()
        .filter_map(|v| {
            let ok = *v >= 1.0 && v.fract() == 0.0;
            w.check(ok, "network.nodes_list", format!("node count {v} must be a positive integer"));
            ok.then_some(*v as usize)
        })
        .collect();
    n.shared_signal = w.bool(network, "network", "shared_signal", n.shared_signal);

    let seeds = w.table(root, "", "seeds");
    if let Some(t) = seeds {
        w.unknown_keys(t, "seeds", SEED_KEYS, &[]);
    }
    cfg.seeds.count = w.usize(seeds, "seeds", "count", cfg.seeds.count);
    w.check(cfg.seeds.count >= 1, "seeds.count", "must be at least 1");
    cfg.seeds.master = w.u64(seeds, "seeds", "master", cfg.seeds.master);

    let metrics = w.table(root, "", "metrics");
    if let Some(t) = metrics {
        w.unknown_keys(t, "metrics", METRIC_KEYS, &[]);
    }
    let m = &mut cfg.metrics;
    m.steady_fraction = w.f64(metrics, "metrics", "steady_fraction", m.steady_fraction);
    w.check(
        m.steady_fraction > 0.0 && m.steady_fraction <= 1.0,
        "metrics.steady_fraction",
        format!("must lie in (0, 1], got {}", m.steady_fraction),
    );
    m.smoothing_window = w.usize(metrics, "metrics", "smoothing_window", m.smoothing_window);
    w.check(m.smoothing_window >= 1, "metrics.smoothing_window", "must be at least 1");

    if let Some(it) = cfg.iterations {
        let available = match cfg.signal.kind {
            SignalKind::WlArmaTruth => cfg.signal.length,
            _ => cfg.signal.length.saturating_sub(1),
        };
        w.check(
            it <= available,
            "iterations",
            format!("{it} exceeds the {available} samples available from signal.length"),
        );
    }

    if w.errors.is_empty() {
        Ok(Validated {
            config: cfg,
            warnings: w.warnings,
        })
    } else {
        Err(Error::Config(w.errors))
    }
}

/// Parses TOML or JSON text. JSON is recognized by a leading `{`.
pub fn parse_document(text: &str) -> Result<Value> {
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(text)?);
    }
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("TOML syntax: {}", e.message())]))?;
    serde_json::to_value(table).map_err(Error::from)
}

/// Reads and validates a config file.
pub fn validate_config(path: &Path, strict: bool) -> Result<Validated> {
    let text = std::fs::read_to_string(path)?;
    validate_value(&parse_document(&text)?, strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn validate(text: &str) -> Result<Validated> {
        validate_value(&parse_document(text).unwrap(), true)
    }

    fn errors(text: &str) -> Vec<String> {
        match validate(text) {
            Err(Error::Config(e)) => e,
            other => panic!("expected config errors, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let v = validate("experiment = \"mse-curves\"\nsignal = \"ar4\"\n").unwrap();
        let c = v.config;
        assert_eq!(c.experiment, ExperimentKind::MseCurves);
        assert_eq!(c.signal.kind, SignalKind::Ar4);
        assert_eq!(c.network.nodes, 10);
        assert_eq!((c.filter.m, c.filter.n), (4, 4));
        assert_eq!(c.seeds.count, 20);
        assert_eq!(c.metrics.smoothing_window, 200);

        let table = validate("experiment = \"custom\"\n[signal]\nkind = \"improper-arma\"\n").unwrap();
        assert_eq!(table.config.signal.lambda, 0.95);
    }

    #[test]
    fn negative_mu_is_named() {
        let errs = errors("experiment = \"custom\"\nsignal = \"ar4\"\n[network]\nmu = -1e-3\n");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].starts_with("network.mu:"), "{errs:?}");
    }

    #[test]
    fn unknown_key_suggests_mu() {
        let errs = errors("experiment = \"custom\"\nsignal = \"ar4\"\n[network]\nstepsize = 1e-3\n");
        assert!(errs[0].contains("`mu`"), "{errs:?}");
        let top = errors("experiment = \"custom\"\nsignal = \"ar4\"\nstepsize = 1e-3\n");
        assert!(top[0].contains("network.mu"), "{top:?}");
        let typo = errors("experiment = \"custom\"\nsignal = \"ar4\"\n[metrics]\nsmoothing_windw = 3\n");
        assert!(typo[0].contains("`smoothing_window`"), "{typo:?}");
    }

    #[test]
    fn lax_mode_warns() {
        let doc = parse_document("experiment = \"custom\"\nsignal = \"ar4\"\n[network]\nstepsize = 1e-3\n").unwrap();
        let v = validate_value(&doc, false).unwrap();
        assert_eq!(v.warnings.len(), 1);
    }

    #[test]
    fn all_errors_reported_together() {
        let errs = errors(
            "experiment = \"nope\"\n[signal]\nkind = \"ar4\"\nlambda = 2.0\n[filter]\nm = 0\n[network]\nmu = -1\nnodes = 0\n[seeds]\ncount = 0\n",
        );
        assert_eq!(errs.len(), 6, "{errs:?}");
    }

    #[test]
    fn missing_required_fields() {
        let errs = errors("");
        assert!(errs.iter().any(|e| e.starts_with("experiment")));
        assert!(errs.iter().any(|e| e.starts_with("signal.kind")));
        let wind = errors("experiment = \"scatter\"\nsignal = \"wind-file\"\n");
        assert!(wind[0].starts_with("signal.path"));
        let truth = errors("experiment = \"custom\"\nsignal = \"wl-arma-truth\"\n");
        assert!(truth[0].starts_with("signal.truth"));
    }

    #[test]
    fn truth_weights_parse() {
        let v = validate(
            "experiment = \"custom\"\n[signal]\nkind = \"wl-arma-truth\"\n[signal.truth]\na = [[0.5, 0.0]]\ng = [[0.0, 0.1]]\nb = [[1.0, 0.0]]\nh = [[0.2, 0.0]]\n[filter]\nm = 1\nn = 0\n",
        )
        .unwrap();
        let w = v.config.signal.truth.unwrap().weights().unwrap();
        assert_eq!(w.g()[0], C64::new(0.0, 0.1));
    }

    #[test]
    fn toml_and_json_round_trip() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::GainVsStepsize, SignalKind::ImproperArma);
        cfg.network.mu_list = vec![1e-8, 1e-7];
        cfg.iterations = Some(100);
        let back = validate(&cfg.to_toml()).unwrap().config;
        assert_eq!(back, cfg);
        let meta = serde_json::json!({ "config": cfg, "build": { "version": "x" } });
        let back = validate_value(&meta, true).unwrap().config;
        assert_eq!(back, cfg);
    }

    #[test]
    fn iterations_bounded_by_length() {
        let errs = errors("experiment = \"custom\"\nsignal = \"ar4\"\niterations = 5000\n");
        assert!(errs[0].starts_with("iterations"));
    }
}
