//! Prediction gain, ensemble MSE curves and parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{run_batch, Algorithm, BatchSpec};
use crate::network::{NodeStream, RunRecord};
use crate::wl::C64;

/// `R_p = 10 log10(σ_x² / σ_e²)` over a steady-state window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub sigma_x2: f64,
    pub sigma_e2: f64,
    pub gain_db: f64,
    /// Set when the error variance is exactly zero; `gain_db` is then `+inf`.
    pub perfect: bool,
}

impl GainReport {
    pub fn from_powers(sigma_x2: f64, sigma_e2: f64) -> Self {
        let perfect = sigma_e2 == 0.0;
        let gain_db = if perfect {
            f64::INFINITY
        } else {
            10.0 * (sigma_x2 / sigma_e2).log10()
        };
        Self {
            sigma_x2,
            sigma_e2,
            gain_db,
            perfect,
        }
    }
}

pub const DEFAULT_STEADY_FRACTION: f64 = 0.5;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 200;

/// Start index of the trailing `fraction` of a sequence of length `len`.
pub fn steady_start(len: usize, fraction: f64) -> usize {
    let width = ((len as f64) * fraction).ceil() as usize;
    len - width.clamp(1, len.max(1))
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!("steady_fraction must lie in (0, 1], got {fraction}")));
    }
    Ok(())
}

fn mean_power(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64
}

pub fn prediction_gain(input: &[C64], errors: &[C64], steady_fraction: f64) -> Result<GainReport> {
    check_fraction(steady_fraction)?;
    if input.is_empty() || errors.is_empty() {
        return Err(Error::invalid("prediction gain needs non-empty input and error sequences"));
    }
    let x = &input[steady_start(input.len(), steady_fraction)..];
    let e = &errors[steady_start(errors.len(), steady_fraction)..];
    Ok(GainReport::from_powers(mean_power(x), mean_power(e)))
}

/// Network prediction gain: input and error powers pooled over all nodes
/// within the trailing window of the run.
pub fn record_gain(record: &RunRecord, streams: &[NodeStream], steady_fraction: f64) -> Result<GainReport> {
    check_fraction(steady_fraction)?;
    if record.iterations == 0 || streams.len() != record.nodes {
        return Err(Error::invalid("record and streams do not describe the same non-empty run"));
    }
    let start = steady_start(record.iterations, steady_fraction);
    let count = ((record.iterations - start) * record.nodes) as f64;
    let sigma_e2 = record.sq_errors[start * record.nodes..].iter().sum::<f64>() / count;
    let sigma_x2 = streams
        .iter()
        .map(|s| s.input[start..record.iterations].iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        / count;
    Ok(GainReport::from_powers(sigma_x2, sigma_e2))
}

/// Causal moving average; the first `window - 1` points average what is available.
pub fn moving_average(curve: &[f64], window: usize) -> Vec<f64> {
    (0..curve.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &curve[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// Ensemble MSE in dB from per-run squared-error curves of equal length.
pub fn ensemble_mse_curves(curves: &[&[f64]], smoothing_window: usize) -> Result<Vec<f64>> {
    if smoothing_window == 0 {
        return Err(Error::invalid("smoothing window must be at least 1"));
    }
    let first = curves.first().ok_or_else(|| Error::invalid("ensemble needs at least one curve"))?;
    if curves.iter().any(|c| c.len() != first.len()) {
        return Err(Error::invalid("ensemble curves differ in length"));
    }
    let mut avg = vec![0.0; first.len()];
    for (r, curve) in curves.iter().enumerate() {
        // running mean keeps an ensemble of identical runs exact
        for (a, v) in avg.iter_mut().zip(curve.iter()) {
            *a += (v - *a) / (r + 1) as f64;
        }
    }
    let smoothed = if smoothing_window == 1 {
        avg
    } else {
        moving_average(&avg, smoothing_window)
    };
    Ok(smoothed.into_iter().map(to_db).collect())
}

/// Per-iteration ensemble MSE in dB, averaged over records and nodes.
pub fn ensemble_mse(records: &[RunRecord], smoothing_window: usize) -> Result<Vec<f64>> {
    let curves: Vec<Vec<f64>> = records
        .iter()
        .map(|rec| {
            (0..rec.iterations)
                .map(|n| {
                    let mut m = 0.0;
                    for (i, e) in rec.iteration_sq_errors(n).iter().enumerate() {
                        m += (e - m) / (i + 1) as f64;
                    }
                    m
                })
                .collect()
        })
        .collect();
    let refs: Vec<&[f64]> = curves.iter().map(Vec::as_slice).collect();
    ensemble_mse_curves(&refs, smoothing_window)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    StepSize,
    NetworkSize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub algorithm: Algorithm,
    pub mean_gain_db: f64,
    pub std_db: f64,
    pub n_seeds: usize,
    pub divergence_events: u64,
    /// Error message when the point could not be evaluated.
    pub failure: Option<String>,
}

/// One Monte Carlo batch per value of `axis`, both algorithms per batch.
/// A failing point yields rows with `failure` set and NaN statistics; the
/// remaining points still run.
pub fn sweep(axis: SweepAxis, values: &[f64], base: &BatchSpec) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    for &v in values {
        let ok = match axis {
            SweepAxis::StepSize => v >= 0.0 && v.is_finite(),
            SweepAxis::NetworkSize => v >= 1.0 && v.fract() == 0.0,
        };
        if !ok {
            return Err(Error::invalid(format!("{v} is not a valid {axis:?} value")));
        }
    }
    let mut rows = Vec::with_capacity(values.len() * 2);
    for &value in values {
        let mut spec = base.clone();
        match axis {
            SweepAxis::StepSize => spec.mu = value,
            SweepAxis::NetworkSize => spec.nodes = value as usize,
        }
        match run_batch(&spec, &Algorithm::BOTH) {
            Ok(batches) => rows.extend(batches.into_iter().map(|b| SweepRow {
                value,
                algorithm: b.algorithm,
                mean_gain_db: b.mean_gain_db(),
                std_db: b.std_gain_db(),
                n_seeds: b.runs.len(),
                divergence_events: b.divergence_events(),
                failure: None,
            })),
            Err(e) => rows.extend(Algorithm::BOTH.into_iter().map(|algorithm| SweepRow {
                value,
                algorithm,
                mean_gain_db: f64::NAN,
                std_db: f64::NAN,
                n_seeds: 0,
                divergence_events: 0,
                failure: Some(e.to_string()),
            })),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{FilterConfig, SensitivityMode};
    use crate::network::{iaca_iir_run, make_prediction_task, RingNetwork};
    use crate::signal::{draw_noise, NoiseSource, SignalKind, SignalSpec};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn gain_reference_points() {
        let x = vec![c(1., 1.); 10];
        assert_eq!(prediction_gain(&x, &x, 0.5).unwrap().gain_db, 0.0);
        let e: Vec<C64> = x.iter().map(|v| v / 10f64.sqrt()).collect();
        assert!((prediction_gain(&x, &e, 1.0).unwrap().gain_db - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_error_is_flagged() {
        let r = prediction_gain(&[c(1., 0.); 4], &[c(0., 0.); 4], 0.5).unwrap();
        assert!(r.perfect);
        assert_eq!(r.gain_db, f64::INFINITY);
    }

    #[test]
    fn gain_uses_trailing_window() {
        let x = vec![c(1., 0.); 10];
        let mut e = vec![c(10., 0.); 5];
        e.extend(vec![c(1., 0.); 5]);
        assert_eq!(prediction_gain(&x, &e, 0.5).unwrap().gain_db, 0.0);
        assert!(prediction_gain(&x, &e, 0.0).is_err());
        assert!(prediction_gain(&x, &e, 1.5).is_err());
        assert!(prediction_gain(&[], &e, 0.5).is_err());
        assert_eq!(steady_start(10, 0.5), 5);
        assert_eq!(steady_start(3, 0.01), 2);
    }

    fn small_record(seed: u64) -> (RunRecord, Vec<NodeStream>) {
        let streams: Vec<NodeStream> = (0..2)
            .map(|k| {
                let s = draw_noise(NoiseSource { lambda: 0.0, seed: seed + k }, 101);
                make_prediction_task(&s).unwrap()
            })
            .collect();
        let cfg = FilterConfig::new(1, 1, SensitivityMode::Reduced).unwrap();
        let mut net = RingNetwork::new(cfg, streams, 0.01).unwrap();
        (iaca_iir_run(&mut net, 100).unwrap(), net.streams().to_vec())
    }

    #[test]
    fn record_gain_pools_nodes() {
        let (rec, streams) = small_record(3);
        let g = record_gain(&rec, &streams, 0.5).unwrap();
        let e2: f64 = (50..100).flat_map(|n| rec.iteration_sq_errors(n).to_vec()).sum::<f64>() / 100.0;
        let x2: f64 = streams.iter().flat_map(|s| s.input[50..100].iter().map(|z| z.norm_sqr())).sum::<f64>() / 100.0;
        assert!((g.sigma_e2 - e2).abs() < 1e-12);
        assert!((g.sigma_x2 - x2).abs() < 1e-12);
    }

    #[test]
    fn ensemble_of_copies_is_exact() {
        let (rec, _) = small_record(9);
        for window in [1, 7] {
            let one = ensemble_mse(std::slice::from_ref(&rec), window).unwrap();
            let many = ensemble_mse(&vec![rec.clone(); 5], window).unwrap();
            assert_eq!(one, many);
            assert_eq!(one.len(), 100);
        }
        let raw = ensemble_mse(std::slice::from_ref(&rec), 1).unwrap();
        let node_mean = (rec.sq_error(3, 0) + rec.sq_error(3, 1)) / 2.0;
        assert!((raw[3] - 10.0 * node_mean.log10()).abs() < 1e-12);
    }

    #[test]
    fn ensemble_rejects_mismatch() {
        let (a, _) = small_record(1);
        let mut b = a.clone();
        b.iterations = 50;
        b.sq_errors.truncate(100);
        assert!(ensemble_mse(&[a.clone(), b], 1).is_err());
        assert!(ensemble_mse(&[a], 0).is_err());
        assert!(ensemble_mse(&[], 1).is_err());
    }

    #[test]
    fn moving_average_warmup() {
        assert_eq!(moving_average(&[2.0, 4.0, 6.0, 8.0], 2), vec![2.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn sweep_single_value_matches_batch() {
        let mut base = BatchSpec::new(SignalSpec::new(SignalKind::Ar4, 200, 0), 2, 1e-3, 3);
        base.filter = FilterConfig::new(2, 2, SensitivityMode::Reduced).unwrap();
        let rows = sweep(SweepAxis::StepSize, &[1e-3], &base).unwrap();
        let direct = run_batch(&base, &Algorithm::BOTH).unwrap();
        assert_eq!(rows.len(), 2);
        for (row, batch) in rows.iter().zip(&direct) {
            assert_eq!(row.algorithm, batch.algorithm);
            assert_eq!(row.mean_gain_db, batch.mean_gain_db());
            assert_eq!(row.std_db, batch.std_gain_db());
            assert_eq!(row.n_seeds, 3);
        }
        assert!(sweep(SweepAxis::NetworkSize, &[2.5], &base).is_err());
        assert!(sweep(SweepAxis::StepSize, &[], &base).is_err());
    }

    #[test]
    fn sweep_marks_failed_points() {
        let mut base = BatchSpec::new(SignalSpec::new(SignalKind::Ar4, 200, 0), 2, 1e-3, 2);
        base.iterations = Some(500);
        let rows = sweep(SweepAxis::StepSize, &[1e-3], &base).unwrap();
        assert!(rows.iter().all(|r| r.failure.is_some() && r.mean_gain_db.is_nan()));
    }

    fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), len).prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
    }

    proptest! {
        #[test]
        fn gain_phase_and_scale_invariant(x in complex_vec(32), e in complex_vec(32), theta in 0.0f64..6.3, scale in 0.01f64..100.0) {
            let base = prediction_gain(&x, &e, 0.5).unwrap();
            prop_assume!(!base.perfect && base.sigma_x2 > 0.0);
            let rot = C64::from_polar(1.0, theta);
            let xr: Vec<C64> = x.iter().map(|v| v * rot).collect();
            let er: Vec<C64> = e.iter().map(|v| v * rot).collect();
            let rotated = prediction_gain(&xr, &er, 0.5).unwrap();
            prop_assert!((rotated.gain_db - base.gain_db).abs() < 1e-9);
            let xs: Vec<C64> = x.iter().map(|v| v * scale).collect();
            let es: Vec<C64> = e.iter().map(|v| v * scale).collect();
            let scaled = prediction_gain(&xs, &es, 0.5).unwrap();
            prop_assert!((scaled.gain_db - base.gain_db).abs() < 1e-12 * base.gain_db.abs().max(1.0));
        }
    }
}
