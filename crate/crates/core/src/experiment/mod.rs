//! Config-driven experiments writing CSV results.
//!
//! Each experiment writes into its output directory:
//!
//! | experiment             | file              | columns                                                  |
//! |------------------------|-------------------|----------------------------------------------------------|
//! | `scatter`              | `scatter.csv`     | `re,im`                                                  |
//! | `gain-vs-stepsize`     | `gain_vs_mu.csv`  | `mu,algo,mean_gain_db,std_db,n_seeds,divergence_events` |
//! | `mse-curves`           | `mse.csv`         | `iter,algo,mse_db`                                       |
//! | `gain-vs-network-size` | `gain_vs_L.csv`   | `L,algo,mean_gain_db,std_db`                             |
//! | `custom`               | `gain.csv`, `mse.csv` | as above                                             |
//!
//! plus `meta.json` holding the resolved config, which is itself accepted
//! as a config. Output is byte-identical for identical configs.

pub mod config;
pub mod presets;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::Result;
use crate::metrics::{ensemble_mse_curves, sweep, SweepAxis, SweepRow};
use crate::montecarlo::{derive_seed, run_batch, Algorithm, BatchResult};
use crate::signal::SignalSource;

pub use config::{validate_config, validate_value, ExperimentConfig, ExperimentKind, Validated};
pub use presets::{preset, presets, Preset, PRESET_NAMES};

/// Files written by a run and the sweep points that failed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

fn write_file(dir: &Path, name: &str, body: &str, outcome: &mut RunOutcome) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    outcome.files.push(path);
    Ok(())
}

fn gain_rows_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("mu,algo,mean_gain_db,std_db,n_seeds,divergence_events\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:e},{},{},{},{},{}",
            r.value,
            r.algorithm.name(),
            r.mean_gain_db,
            r.std_db,
            r.n_seeds,
            r.divergence_events
        );
    }
    s
}

fn size_rows_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("L,algo,mean_gain_db,std_db\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.value as usize, r.algorithm.name(), r.mean_gain_db, r.std_db);
    }
    s
}

fn mse_csv(batches: &[BatchResult], window: usize) -> Result<String> {
    let mut s = String::from("iter,algo,mse_db\n");
    for b in batches {
        let curve = ensemble_mse_curves(&b.curves(), window)?;
        for (n, v) in curve.iter().enumerate() {
            let _ = writeln!(s, "{n},{},{v}", b.algorithm.name());
        }
    }
    Ok(s)
}

fn batch_rows(mu: f64, batches: &[BatchResult]) -> Vec<SweepRow> {
    batches
        .iter()
        .map(|b| SweepRow {
            value: mu,
            algorithm: b.algorithm,
            mean_gain_db: b.mean_gain_db(),
            std_db: b.std_gain_db(),
            n_seeds: b.runs.len(),
            divergence_events: b.divergence_events(),
            failure: None,
        })
        .collect()
}

fn failures(rows: &[SweepRow], label: &str) -> Vec<String> {
    rows.iter()
        .filter(|r| r.algorithm == Algorithm::IacaIir)
        .filter_map(|r| r.failure.as_ref().map(|f| format!("{label} = {}: {f}", r.value)))
        .collect()
}

/// Runs one experiment and writes its CSV files and `meta.json`.
///
/// Sweep points that fail are written as NaN rows and listed in
/// [`RunOutcome::failures`]; any other error aborts the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let dir = &cfg.output;
    fs::create_dir_all(dir)?;
    let mut outcome = RunOutcome::default();

    match cfg.experiment {
        ExperimentKind::Scatter => {
            let source = SignalSource::prepare(&cfg.signal_spec()?)?;
            let signal = source.signal(derive_seed(cfg.seeds.master, &[0, 0]))?;
            let mut s = String::from("re,im\n");
            for z in &signal {
                let _ = writeln!(s, "{},{}", z.re, z.im);
            }
            write_file(dir, "scatter.csv", &s, &mut outcome)?;
        }
        ExperimentKind::GainVsStepsize => {
            let rows = sweep(SweepAxis::StepSize, &cfg.network.mu_list, &cfg.batch_spec()?)?;
            outcome.failures = failures(&rows, "mu");
            write_file(dir, "gain_vs_mu.csv", &gain_rows_csv(&rows), &mut outcome)?;
        }
        ExperimentKind::GainVsNetworkSize => {
            let values: Vec<f64> = cfg.network.nodes_list.iter().map(|&l| l as f64).collect();
            let rows = sweep(SweepAxis::NetworkSize, &values, &cfg.batch_spec()?)?;
            outcome.failures = failures(&rows, "L");
            write_file(dir, "gain_vs_L.csv", &size_rows_csv(&rows), &mut outcome)?;
        }
        ExperimentKind::MseCurves | ExperimentKind::Custom => {
            let mut spec = cfg.batch_spec()?;
            spec.keep_curves = true;
            let batches = run_batch(&spec, &Algorithm::BOTH)?;
            if cfg.experiment == ExperimentKind::Custom {
                let rows = batch_rows(spec.mu, &batches);
                write_file(dir, "gain.csv", &gain_rows_csv(&rows), &mut outcome)?;
            }
            write_file(dir, "mse.csv", &mse_csv(&batches, cfg.metrics.smoothing_window)?, &mut outcome)?;
        }
    }

    let meta = json!({
        "config": cfg,
        "build": { "package": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        "failures": outcome.failures,
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    write_file(dir, "meta.json", &text, &mut outcome)?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SignalKind;

    fn small(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind, SignalKind::Ar4);
        c.output = dir.to_path_buf();
        c.signal.length = 101;
        c.signal.burn_in = 50;
        c.seeds.count = 3;
        c.network.nodes = 3;
        c.network.mu_list = vec![1e-4, 1e-3];
        c.network.nodes_list = vec![1, 2];
        c.metrics.smoothing_window = 5;
        c
    }

    fn read(dir: &Path, name: &str) -> String {
        fs::read_to_string(dir.join(name)).unwrap()
    }

    #[test]
    fn each_experiment_writes_its_schema() {
        let tmp = tempfile::tempdir().unwrap();
        let cases = [
            (ExperimentKind::Scatter, "scatter.csv", "re,im", 101),
            (ExperimentKind::GainVsStepsize, "gain_vs_mu.csv", "mu,algo,mean_gain_db,std_db,n_seeds,divergence_events", 4),
            (ExperimentKind::MseCurves, "mse.csv", "iter,algo,mse_db", 200),
            (ExperimentKind::GainVsNetworkSize, "gain_vs_L.csv", "L,algo,mean_gain_db,std_db", 4),
            (ExperimentKind::Custom, "gain.csv", "mu,algo,mean_gain_db,std_db,n_seeds,divergence_events", 2),
        ];
        for (kind, file, header, rows) in cases {
            let dir = tmp.path().join(kind.name());
            let out = run_experiment(&small(kind, &dir)).unwrap();
            assert!(out.failures.is_empty());
            let text = read(&dir, file);
            let mut lines = text.lines();
            assert_eq!(lines.next(), Some(header));
            assert_eq!(lines.count(), rows, "{file}");
            assert!(dir.join("meta.json").exists());
        }
        let mu = read(&tmp.path().join("gain-vs-stepsize"), "gain_vs_mu.csv");
        assert!(mu.lines().nth(1).unwrap().starts_with("1e-4,iaca-iir,"));
    }

    #[test]
    fn meta_json_reloads_as_the_same_config() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small(ExperimentKind::MseCurves, tmp.path());
        run_experiment(&cfg).unwrap();
        let back = validate_config(&tmp.path().join("meta.json"), true).unwrap();
        assert_eq!(back.config, cfg);
    }

    #[test]
    fn failing_sweep_point_is_recorded() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::GainVsStepsize, tmp.path());
        cfg.signal.kind = SignalKind::WindFile;
        cfg.signal.path = Some(tmp.path().join("missing.csv"));
        // a missing wind file fails every point but the sweep completes
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.failures.len(), 2);
        assert!(read(tmp.path(), "gain_vs_mu.csv").contains("NaN"));
        assert!(read(tmp.path(), "meta.json").contains("missing.csv"));
    }
}
