//! Built-in experiment bundles reproducing the standard figures.

use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::signal::SignalKind;

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    /// One config per member; outputs are `<name>/<member>` relative paths.
    pub members: Vec<ExperimentConfig>,
}

impl Preset {
    /// Member configs with outputs placed under `root`.
    pub fn rooted(&self, root: &Path) -> Vec<ExperimentConfig> {
        self.members
            .iter()
            .map(|c| ExperimentConfig {
                output: root.join(&c.output),
                ..c.clone()
            })
            .collect()
    }
}

pub const PRESET_NAMES: [&str; 4] = ["fig2-scatter", "fig3-gain-vs-stepsize", "fig4-mse", "fig5-gain-vs-network-size"];

fn decades(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 10f64.powi(e)).collect()
}

fn member(preset: &str, experiment: ExperimentKind, kind: SignalKind, wind: Option<&Path>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(experiment, kind);
    c.output = PathBuf::from(preset).join(kind.name());
    if kind == SignalKind::WindFile {
        c.signal.path = wind.map(Path::to_path_buf);
    }
    c
}

fn signals(wind: Option<&Path>) -> Vec<SignalKind> {
    let mut kinds = vec![SignalKind::Ar4, SignalKind::ProperMa, SignalKind::ImproperArma];
    if wind.is_some() {
        kinds.push(SignalKind::WindFile);
    }
    kinds
}

/// All presets. Wind members are included only when a wind file is given.
pub fn presets(wind: Option<&Path>) -> Vec<Preset> {
    let scatter = signals(wind)
        .into_iter()
        .map(|k| {
            let mut c = member("fig2-scatter", ExperimentKind::Scatter, k, wind);
            c.signal.length = 2000;
            c
        })
        .collect();

    let stepsize = signals(wind)
        .into_iter()
        .map(|k| {
            let mut c = member("fig3-gain-vs-stepsize", ExperimentKind::GainVsStepsize, k, wind);
            c.network.mu_list = match k {
                SignalKind::ImproperArma => decades(-10, -3),
                SignalKind::WindFile => decades(-10, -2),
                _ => decades(-7, 0),
            };
            c
        })
        .collect();

    let mse = [(SignalKind::Ar4, 1e-3), (SignalKind::ImproperArma, 1e-7)]
        .into_iter()
        .map(|(k, mu)| {
            let mut c = member("fig4-mse", ExperimentKind::MseCurves, k, wind);
            c.network.mu = mu;
            c.signal.length = 5001;
            c.seeds.count = 50;
            c
        })
        .collect();

    let (kind, mu) = match wind {
        Some(_) => (SignalKind::WindFile, 1e-6),
        None => (SignalKind::ImproperArma, 1e-7),
    };
    let mut size = member("fig5-gain-vs-network-size", ExperimentKind::GainVsNetworkSize, kind, wind);
    size.network.mu = mu;

    vec![
        Preset {
            name: PRESET_NAMES[0],
            description: "scatter diagrams of each test signal",
            members: scatter,
        },
        Preset {
            name: PRESET_NAMES[1],
            description: "prediction gain against step size, L = 10",
            members: stepsize,
        },
        Preset {
            name: PRESET_NAMES[2],
            description: "ensemble MSE learning curves, L = 10, 50 runs",
            members: mse,
        },
        Preset {
            name: PRESET_NAMES[3],
            description: "prediction gain against network size",
            members: vec![size],
        },
    ]
}

pub fn preset(name: &str, wind: Option<&Path>) -> Option<Preset> {
    presets(wind).into_iter().find(|p| p.name == name)
}
