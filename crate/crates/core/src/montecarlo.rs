//! Seeded Monte Carlo batches of network runs.
//!
//! Seeds form a splittable counter tree rooted at the master seed:
//! `derive_seed(master, &[run, node])` gives the data seed of node `node` in
//! repetition `run`. A component is folded in as
//! `s <- splitmix64(s ^ splitmix64(component + 1))`. Data seeds depend only
//! on `(master, run, node)`, so every sweep point and both algorithms see
//! the same realizations, and adding points or nodes never perturbs
//! existing ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::metrics::{record_gain, GainReport};
use crate::network::{iaca_iir_run, make_prediction_task, noncoop_run, NodeStream, RingNetwork, RunRecord};
use crate::signal::{SignalKind, SignalSource, SignalSpec};

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |s, c| splitmix64(s ^ splitmix64(c.wrapping_add(1))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Incremental cooperation around the ring.
    #[serde(rename = "iaca-iir")]
    IacaIir,
    /// Independent per-node filters.
    #[serde(rename = "acaiir")]
    Acaiir,
}

impl Algorithm {
    pub const BOTH: [Algorithm; 2] = [Algorithm::IacaIir, Algorithm::Acaiir];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::IacaIir => "iaca-iir",
            Algorithm::Acaiir => "acaiir",
        }
    }

    pub fn run(self, net: &mut RingNetwork, iterations: usize) -> Result<RunRecord> {
        match self {
            Algorithm::IacaIir => iaca_iir_run(net, iterations),
            Algorithm::Acaiir => noncoop_run(net, iterations),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSpec {
    /// The spec's own seed is ignored; realizations use derived seeds.
    pub signal: SignalSpec,
    pub filter: FilterConfig,
    pub nodes: usize,
    pub mu: f64,
    /// Defaults to the full stream length.
    pub iterations: Option<usize>,
    pub seeds: usize,
    pub master_seed: u64,
    /// All nodes observe the same realization instead of independent ones.
    pub shared_signal: bool,
    pub steady_fraction: f64,
    /// Keep each run's node-averaged squared-error curve.
    pub keep_curves: bool,
}

impl BatchSpec {
    pub fn new(signal: SignalSpec, nodes: usize, mu: f64, seeds: usize) -> Self {
        Self {
            signal,
            filter: FilterConfig::default(),
            nodes,
            mu,
            iterations: None,
            seeds,
            master_seed: 0,
            shared_signal: false,
            steady_fraction: 0.5,
            keep_curves: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.filter.validate()?;
        if self.nodes == 0 {
            return Err(Error::invalid("node count must be at least 1"));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("seed count must be at least 1"));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::invalid(format!("mu must be finite and non-negative, got {}", self.mu)));
        }
        if !(self.steady_fraction > 0.0 && self.steady_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "steady_fraction must lie in (0, 1], got {}",
                self.steady_fraction
            )));
        }
        Ok(())
    }
}

/// Input/desired streams for every node of repetition `run`.
pub fn node_streams(source: &SignalSource, nodes: usize, master: u64, run: u64, shared: bool) -> Result<Vec<NodeStream>> {
    (0..nodes as u64)
        .map(|k| {
            let seed = derive_seed(master, &[run, if shared { 0 } else { k }]);
            match source.spec().kind {
                SignalKind::WlArmaTruth => {
                    let (x, u, _) = source.truth_pair(seed)?;
                    NodeStream::new(x, u)
                }
                _ => make_prediction_task(&source.signal(seed)?),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub gain: GainReport,
    pub divergence_events: u64,
    /// Node-averaged `|e(n)|^2`, when requested.
    pub curve: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub algorithm: Algorithm,
    pub runs: Vec<RunSummary>,
}

impl BatchResult {
    pub fn gains_db(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.gain.gain_db).collect()
    }

    pub fn mean_gain_db(&self) -> f64 {
        mean(&self.gains_db())
    }

    /// Sample standard deviation of the per-run gains; zero for one run.
    pub fn std_gain_db(&self) -> f64 {
        std_dev(&self.gains_db())
    }

    pub fn divergence_events(&self) -> u64 {
        self.runs.iter().map(|r| r.divergence_events).sum()
    }

    pub fn curves(&self) -> Vec<&[f64]> {
        self.runs.iter().filter_map(|r| r.curve.as_deref()).collect()
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn node_mean_curve(record: &RunRecord) -> Vec<f64> {
    (0..record.iterations)
        .map(|n| {
            // running mean keeps identical node errors exact
            let mut m = 0.0;
            for (i, e) in record.iteration_sq_errors(n).iter().enumerate() {
                m += (e - m) / (i + 1) as f64;
            }
            m
        })
        .collect()
}

/// Runs `algorithms` over `spec.seeds` repetitions, sharing each
/// repetition's data between algorithms. Repetitions run in parallel; the
/// result order is deterministic.
pub fn run_batch(spec: &BatchSpec, algorithms: &[Algorithm]) -> Result<Vec<BatchResult>> {
    spec.validate()?;
    let source = SignalSource::prepare(&spec.signal)?;
    let per_run: Vec<Vec<RunSummary>> = (0..spec.seeds as u64)
        .into_par_iter()
        .map(|run| {
            let streams = node_streams(&source, spec.nodes, spec.master_seed, run, spec.shared_signal)?;
            let iterations = spec.iterations.unwrap_or_else(|| streams[0].len());
            algorithms
                .iter()
                .map(|algo| {
                    let mut net = RingNetwork::new(spec.filter, streams.clone(), spec.mu)?;
                    let record = algo.run(&mut net, iterations)?;
                    Ok(RunSummary {
                        gain: record_gain(&record, net.streams(), spec.steady_fraction)?,
                        divergence_events: record.divergence_events,
                        curve: spec.keep_curves.then(|| node_mean_curve(&record)),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(algorithms
        .iter()
        .enumerate()
        .map(|(i, &algorithm)| BatchResult {
            algorithm,
            runs: per_run.iter().map(|r| r[i].clone()).collect(),
        })
        .collect())
}
