use std::collections::HashSet;

use lmbo::lm::{
    evaluate, lm_step, split_dataset, train, train_with_split, zscore_apply, zscore_fit, DampedSystem, NormStats,
    Samples, StopReason, TrainConfig, TrainedModel,
};
use lmbo::metrics::MetricBundle;
use lmbo::mlp::{count_params, forward_batch, init_params, Activation, MlpArchitecture, MlpParams};
use lmbo::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_sine(n: usize, noise: f64, seed: u64) -> Samples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.random_range(-2.0..2.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        x.extend([a, b]);
        y.push(10.0 + a.sin() + 0.5 * b * b + noise * rng.random_range(-1.0..1.0));
    }
    Samples::new(x, y, 2, 1).unwrap()
}

#[test]
fn split_follows_floor_rule() {
    let s = split_dataset(100, [0.8, 0.1, 0.1], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
    let s = split_dataset(1503, [0.8, 0.1, 0.1], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (1202, 150, 151));
    let s = split_dataset(42039, [0.8, 0.1, 0.1], 3).unwrap();
    assert_eq!((s.train.len(), s.val.len(), s.test.len()), (33631, 4203, 4205));
    assert!(matches!(split_dataset(9, [0.8, 0.1, 0.1], 0), Err(Error::Data(_))));
}

#[test]
fn zscore_uses_training_statistics_only() {
    let data = noisy_sine(200, 0.1, 1);
    let split = split_dataset(data.len(), [0.8, 0.1, 0.1], 2).unwrap();
    let train = data.subset(&split.train);
    let val = data.subset(&split.val);
    let stats = zscore_fit(&train).unwrap();
    let t = zscore_apply(&stats, &train).unwrap();
    for c in 0..2 {
        let col: Vec<f64> = t.x.chunks(2).map(|r| r[c]).collect();
        let m = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        assert!(m.abs() <= 1e-9 && (sd - 1.0).abs() <= 1e-9);
    }
    let v = zscore_apply(&stats, &val).unwrap();
    for (i, row) in v.x.chunks(2).enumerate() {
        for (c, &got) in row.iter().enumerate() {
            let raw = val.input_row(i)[c];
            assert_eq!(got, (raw - stats.x_mean[c]) / stats.x_std[c]);
        }
    }
    assert_ne!(zscore_fit(&val).unwrap(), stats);
}

#[test]
fn scalar_step_is_exact() {
    let j = DMatrix::from_element(1, 1, 1.0);
    assert_eq!(lm_step(&[0.0], &j, &[2.0], 1.0).unwrap(), vec![-1.0]);
    assert_eq!(lm_step(&[5.0], &j, &[2.0], 1.0).unwrap(), vec![4.0]);
}

#[test]
fn large_damping_approaches_gradient_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (rows, cols) in [(12, 5), (4, 9)] {
        let j = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let r: Vec<f64> = (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = vec![0.0; cols];
        let next = lm_step(&p, &j, &r, 1e8).unwrap();
        let step = DVector::from_vec(next);
        let g = j.transpose() * DVector::from_vec(r);
        let cos = -step.dot(&g) / (step.norm() * g.norm());
        let angle = cos.min(1.0).acos();
        assert!(angle < 1e-6, "{angle}");
        assert!((step.norm() * 1e8 / g.norm() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn undamped_step_solves_linear_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (n, p) = (30, 4);
    let a = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let y = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let beta0 = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
    let r = &a * &beta0 - &y;
    let next = DVector::from_vec(lm_step(beta0.as_slice(), &a, r.as_slice(), 0.0).unwrap());
    // oracle: QR least squares
    let qr = a.clone().qr();
    let qty = qr.q().transpose() * &y;
    let exact = qr.r().solve_upper_triangular(&qty).unwrap();
    assert!((next - exact).amax() <= 1e-10);
}

#[test]
fn damped_system_is_always_factorizable() {
    // rank-deficient: duplicated and zero columns
    let mut j = DMatrix::zeros(6, 4);
    for i in 0..6 {
        j[(i, 0)] = i as f64;
        j[(i, 1)] = i as f64;
    }
    let r = vec![1.0; 6];
    let sys = DampedSystem::from_jacobian(j.clone(), &r).unwrap();
    assert!(sys.solve(1e-12).unwrap().iter().all(|v| v.is_finite()));
    let wide = DampedSystem::from_jacobian(j.transpose(), &[1.0; 4]).unwrap();
    assert!(wide.is_dual());
    assert!(wide.solve(1e-12).unwrap().iter().all(|v| v.is_finite()));
}

#[test]
fn fits_a_line() {
    let n = 200;
    let x: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
    let data = Samples::new(x, y, 1, 1).unwrap();
    let arch = MlpArchitecture::new(1, vec![4], Activation::Tanh, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 100, patience: 100, seed: 1, ..TrainConfig::default() };
    let m = train(&arch, &data, &cfg).unwrap();
    assert!(m.history.len() <= 100);
    assert!(m.metrics.train.rmse <= 1e-3, "{}", m.metrics.train.rmse);
}

#[test]
fn accepted_steps_strictly_decrease_training_error() {
    let data = noisy_sine(300, 0.05, 2);
    let arch = MlpArchitecture::new(2, vec![8, 8], Activation::Tanh, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 60, patience: 60, seed: 4, ..TrainConfig::default() };
    let m = train(&arch, &data, &cfg).unwrap();
    assert!(m.history.len() >= 2);
    for w in m.history.windows(2) {
        assert!(w[1].train_mse < w[0].train_mse, "{:?}", w);
        assert_eq!(w[1].epoch, w[0].epoch + 1);
    }
    assert!(m.history.iter().all(|h| h.mu >= lmbo::lm::MU_MIN));
}

#[test]
fn early_stopping_restores_best_validation_epoch() {
    // few noisy rows and a wide net: validation error turns up quickly
    let data = noisy_sine(60, 0.5, 3);
    let arch = MlpArchitecture::new(2, vec![25, 25], Activation::Tanh, 1).unwrap();
    for seed in 0..4 {
        let cfg = TrainConfig { max_epochs: 300, patience: 6, seed, ..TrainConfig::default() };
        let m = train(&arch, &data, &cfg).unwrap();
        assert_eq!(m.stop_reason, StopReason::Patience);
        let split = split_dataset(data.len(), cfg.split, seed).unwrap();
        let val = data.subset(&split.val);
        if m.best_epoch > 0 {
            let best = &m.history[m.best_epoch - 1];
            assert!(m.history.iter().all(|h| h.val_mse >= best.val_mse));
            assert!(m.history[m.best_epoch..].iter().all(|h| h.val_mse > best.val_mse || h.epoch == best.epoch));
            assert!((m.metrics.val.mse - best.val_mse).abs() <= 1e-9 * (1.0 + best.val_mse));
        } else {
            assert_eq!(m.params, init_params(&arch, seed));
        }
        assert_eq!(m.history.len(), m.best_epoch + cfg.patience);
        let recomputed = evaluate(&m, &val).unwrap();
        assert!((recomputed.mse - m.metrics.val.mse).abs() <= 1e-12);
    }
}

#[test]
fn training_is_bit_reproducible() {
    let data = noisy_sine(150, 0.1, 5);
    let arch = MlpArchitecture::new(2, vec![6, 5], Activation::Sigmoid, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 40, seed: 9, ..TrainConfig::default() };
    let a = train(&arch, &data, &cfg).unwrap();
    let b = train(&arch, &data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.history_csv(), b.history_csv());
}

fn manual_model(arch: MlpArchitecture, beta: Vec<f64>, norm: NormStats) -> TrainedModel {
    let params = MlpParams::from_vec(&arch, beta).unwrap();
    let zero = MetricBundle { mse: 0.0, rmse: 0.0, mape: 0.0, n: 1 };
    TrainedModel {
        arch,
        params,
        norm,
        history: Vec::new(),
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
        metrics: lmbo::lm::SplitMetrics { train: zero, val: zero, test: None },
    }
}

#[test]
fn evaluate_perfect_and_constant_models() {
    let x: Vec<f64> = (1..=20).map(|v| v as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let rows = Samples::new(x, y.clone(), 1, 1).unwrap();
    let arch = MlpArchitecture::new(1, vec![1], Activation::Linear, 1).unwrap();
    let unit = NormStats { x_mean: vec![0.0], x_std: vec![1.0], y_mean: vec![0.0], y_std: vec![1.0] };
    let perfect = manual_model(arch.clone(), vec![2.0, 0.0, 1.0, 1.0], unit);
    let m = evaluate(&perfect, &rows).unwrap();
    assert_eq!((m.mse, m.mape, m.n), (0.0, 0.0, 20));

    let norm = NormStats { x_mean: vec![10.0], x_std: vec![3.0], y_mean: vec![17.0], y_std: vec![5.0] };
    let constant = manual_model(arch, vec![0.0; 4], norm);
    let m = evaluate(&constant, &rows).unwrap();
    let mse = y.iter().map(|v| (v - 17.0).powi(2)).sum::<f64>() / 20.0;
    let mape = 100.0 * y.iter().map(|v| ((v - 17.0) / v).abs()).sum::<f64>() / 20.0;
    assert!((m.mse - mse).abs() <= 1e-12 * mse);
    assert!((m.rmse - mse.sqrt()).abs() <= 1e-12);
    assert!((m.mape - mape).abs() <= 1e-12 * mape);
}

#[test]
fn evaluation_matches_manual_denormalization() {
    let data = noisy_sine(120, 0.1, 8);
    let arch = MlpArchitecture::new(2, vec![5], Activation::Tanh, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 20, seed: 2, ..TrainConfig::default() };
    let m = train(&arch, &data, &cfg).unwrap();
    let xn: Vec<f64> = data.x.chunks(2).flat_map(|r| m.norm.normalize_x(r)).collect();
    let zn = forward_batch(&m.arch, &m.params, &xn).unwrap();
    let yhat: Vec<f64> = zn.iter().map(|z| z * m.norm.y_std[0] + m.norm.y_mean[0]).collect();
    let direct = MetricBundle::compute(&data.y, &yhat).unwrap();
    let via = evaluate(&m, &data).unwrap();
    assert!((direct.mse - via.mse).abs() <= 1e-10);
    assert!((direct.mape - via.mape).abs() <= 1e-10);
    assert_eq!(m.predict(&data.x).unwrap().len(), data.len());
}

#[test]
fn explicit_split_matches_seeded_split() {
    let data = noisy_sine(100, 0.1, 12);
    let arch = MlpArchitecture::new(2, vec![4], Activation::Relu, 1).unwrap();
    let split = split_dataset(100, [0.7, 0.2, 0.1], 5).unwrap();
    let cfg = TrainConfig { max_epochs: 10, seed: 3, split: [0.7, 0.2, 0.1], ..TrainConfig::default() };
    let a = train_with_split(&arch, &data, &split, &cfg).unwrap();
    let b = train(&arch, &data, &TrainConfig { seed: 5, ..cfg.clone() }).unwrap();
    // same split seed, different init seed: normalization comes from the same rows
    assert_eq!(a.norm, b.norm);
    assert_eq!(a.params.len(), count_params(&arch));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        TrainConfig { mu_dec: 1.0, ..TrainConfig::default() },
        TrainConfig { mu_inc: 1.0, ..TrainConfig::default() },
        TrainConfig { patience: 0, ..TrainConfig::default() },
        TrainConfig { split: [0.8, 0.1, 0.2], ..TrainConfig::default() },
        TrainConfig { mu0: 0.0, ..TrainConfig::default() },
    ];
    for c in bad {
        assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_a_seeded_partition(n in 10usize..500, seed in any::<u64>(), f in 0.5..0.9f64) {
        let v = (1.0 - f) / 2.0;
        let s = split_dataset(n, [f, v, 1.0 - f - v], seed).unwrap();
        prop_assert_eq!(&s, &split_dataset(n, [f, v, 1.0 - f - v], seed).unwrap());
        let all: HashSet<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(s.train.len() + s.val.len() + s.test.len(), n);
        prop_assert_eq!(s.train.len(), (n as f64 * f).floor() as usize);
    }

    #[test]
    fn normalization_round_trips(vals in proptest::collection::vec(-1e3..1e3f64, 3..40)) {
        let n = vals.len();
        let mut ys: Vec<f64> = vals.iter().map(|v| v * 0.5 + 3.0).collect();
        ys[0] += 1.0;
        let mut xs = vals.clone();
        xs[1] += 2.0;
        let s = Samples::new(xs, ys.clone(), 1, 1).unwrap();
        if let Ok(stats) = zscore_fit(&s) {
            let t = zscore_apply(&stats, &s).unwrap();
            let back = stats.denormalize_y(&t.y);
            for (a, b) in back.iter().zip(&ys) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
            prop_assert_eq!(t.len(), n);
        }
    }
}
