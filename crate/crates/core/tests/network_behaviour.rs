use iaca_core::filter::{FilterConfig, SensitivityMode};
use iaca_core::metrics::{ensemble_mse_curves, record_gain, sweep, SweepAxis, DEFAULT_SMOOTHING_WINDOW};
use iaca_core::montecarlo::{node_streams, run_batch, Algorithm, BatchSpec};
use iaca_core::network::{iaca_iir_run, make_prediction_task, RingNetwork};
use iaca_core::signal::{draw_noise, gen_arma, NoiseSource, SignalKind, SignalSource, SignalSpec};
use iaca_core::wl::{WeightVector, C64};

fn spec(kind: SignalKind, nodes: usize, mu: f64, seeds: usize) -> BatchSpec {
    let mut s = BatchSpec::new(SignalSpec::new(kind, 2001, 0), nodes, mu, seeds);
    s.master_seed = 3;
    s
}

#[test]
fn white_noise_is_not_predictable() {
    let gains: Vec<f64> = (0..20)
        .map(|seed| {
            let streams = (0..10)
                .map(|k| make_prediction_task(&draw_noise(NoiseSource { lambda: 0.0, seed: seed * 10 + k }, 4001)).unwrap())
                .collect();
            let mut net = RingNetwork::new(FilterConfig::default(), streams, 1e-3).unwrap();
            let rec = iaca_iir_run(&mut net, 4000).unwrap();
            record_gain(&rec, net.streams(), 0.5).unwrap().gain_db
        })
        .collect();
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    assert!(mean < 0.05, "white noise mean gain {mean} dB");
}

#[test]
fn ring_order_changes_gain_by_less_than_one_db() {
    let base = spec(SignalKind::Ar4, 10, 1e-4, 20);
    let source = SignalSource::prepare(&base.signal).unwrap();
    let orders = [(0..10).collect::<Vec<_>>(), vec![3, 7, 0, 9, 1, 5, 8, 2, 6, 4], (0..10).rev().collect()];
    let means: Vec<f64> = orders
        .iter()
        .map(|order| {
            let total: f64 = (0..20)
                .map(|run| {
                    let streams = node_streams(&source, 10, base.master_seed, run, false).unwrap();
                    let mut net = RingNetwork::new(base.filter, streams, base.mu)
                        .unwrap()
                        .with_ring_order(order.clone())
                        .unwrap();
                    let rec = iaca_iir_run(&mut net, 2000).unwrap();
                    record_gain(&rec, net.streams(), 0.5).unwrap().gain_db
                })
                .sum();
            total / 20.0
        })
        .collect();
    for m in &means[1..] {
        assert!((m - means[0]).abs() < 1.0, "ring order means {means:?}");
    }
}

#[test]
fn ensemble_mse_trends_down() {
    let mut s = spec(SignalKind::Ar4, 10, 1e-3, 50);
    s.keep_curves = true;
    for batch in run_batch(&s, &Algorithm::BOTH).unwrap() {
        let curve = ensemble_mse_curves(&batch.curves(), DEFAULT_SMOOTHING_WINDOW).unwrap();
        let decile = curve.len() / 10;
        let head = curve[..decile].iter().sum::<f64>() / decile as f64;
        let tail = curve[curve.len() - decile..].iter().sum::<f64>() / decile as f64;
        assert!(head > tail, "{:?}: first decile {head} dB, last decile {tail} dB", batch.algorithm);
    }
}

#[test]
fn noncooperative_mse_sits_above_on_improper_arma() {
    let mut s = spec(SignalKind::ImproperArma, 10, 1e-7, 20);
    s.keep_curves = true;
    let r = run_batch(&s, &Algorithm::BOTH).unwrap();
    let coop = ensemble_mse_curves(&r[0].curves(), DEFAULT_SMOOTHING_WINDOW).unwrap();
    let solo = ensemble_mse_curves(&r[1].curves(), DEFAULT_SMOOTHING_WINDOW).unwrap();
    let late = coop.len() / 2;
    assert!((late..coop.len()).all(|i| coop[i] < solo[i]));
}

fn assert_non_decreasing(gains: &[f64], slack: f64) {
    for pair in gains.windows(2) {
        assert!(pair[1] >= pair[0] - slack, "gain trend {gains:?}");
    }
}

#[test]
fn gain_grows_with_network_size() {
    let sizes = [2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0];
    let rows = sweep(SweepAxis::NetworkSize, &sizes, &spec(SignalKind::ImproperArma, 10, 1e-7, 20)).unwrap();
    let gains: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::IacaIir)
        .map(|r| r.mean_gain_db)
        .collect();
    assert_non_decreasing(&gains, 0.5);
}

#[test]
fn gain_grows_with_network_size_on_file_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wind.csv");
    let z = gen_arma(&SignalSpec::new(SignalKind::ImproperArma, 8000, 11)).unwrap();
    let mut text = String::from("v_east,v_north\n");
    for v in z {
        text.push_str(&format!("{},{}\n", v.re + 4.0, v.im + 2.5));
    }
    std::fs::write(&path, text).unwrap();

    let mut signal = SignalSpec::new(SignalKind::WindFile, 2001, 0);
    signal.path = Some(path);
    let mut base = BatchSpec::new(signal, 10, 1e-6, 20);
    base.master_seed = 3;
    let rows = sweep(SweepAxis::NetworkSize, &[2.0, 4.0, 6.0, 8.0, 10.0, 15.0, 20.0], &base).unwrap();
    let gains: Vec<f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::IacaIir)
        .map(|r| r.mean_gain_db)
        .collect();
    assert!(rows.iter().all(|r| r.failure.is_none()));
    assert_non_decreasing(&gains, 0.5);
}

#[test]
fn single_value_sweep_matches_direct_batch() {
    let s = spec(SignalKind::ProperMa, 4, 1e-4, 5);
    let rows = sweep(SweepAxis::StepSize, &[1e-4], &s).unwrap();
    let direct = run_batch(&s, &Algorithm::BOTH).unwrap();
    assert_eq!(rows.len(), 2);
    for (row, batch) in rows.iter().zip(&direct) {
        assert_eq!(row.algorithm, batch.algorithm);
        assert_eq!(row.mean_gain_db, batch.mean_gain_db());
        assert_eq!(row.std_db, batch.std_gain_db());
    }
}

#[test]
fn shared_signal_mode_runs_and_differs() {
    let mut s = spec(SignalKind::Ar4, 5, 1e-3, 4);
    let indep = run_batch(&s, &[Algorithm::IacaIir]).unwrap();
    s.shared_signal = true;
    let shared = run_batch(&s, &[Algorithm::IacaIir]).unwrap();
    assert_ne!(indep[0].gains_db(), shared[0].gains_db());
}

#[test]
fn network_identifies_widely_linear_model() {
    let c = C64::new;
    let truth =
        WeightVector::from_blocks(&[c(0.5, 0.2)], &[c(0.1, -0.1)], &[c(1.0, 0.0), c(0.3, 0.2)], &[c(0.2, 0.1), c(-0.1, 0.0)])
            .unwrap();
    let mut signal = SignalSpec::new(SignalKind::WlArmaTruth, 6000, 0);
    signal.truth_weights = Some(truth.clone());
    signal.lambda = Some(0.5);
    signal.sigma2 = 1e-4;
    let source = SignalSource::prepare(&signal).unwrap();
    let streams = node_streams(&source, 5, 9, 0, false).unwrap();
    let cfg = FilterConfig::new(1, 1, SensitivityMode::Exact).unwrap();
    let mut net = RingNetwork::new(cfg, streams, 2e-3).unwrap();
    iaca_iir_run(&mut net, 6000).unwrap();
    let err: f64 = net
        .estimate()
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(err < 0.02, "weight error {err}");
}
