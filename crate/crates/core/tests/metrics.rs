use lmbo::metrics::{mape, mse, parameter_efficiency, rmse, MetricBundle, DEFAULT_ZETA};
use lmbo::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let n = rng.random_range(1..200);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..100.0)).collect();
        let yhat: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut se = 0.0;
        let mut ape = 0.0;
        for i in 0..n {
            se += (y[i] - yhat[i]).powi(2);
            ape += ((y[i] - yhat[i]) / y[i]).abs();
        }
        let (m, p) = (se / n as f64, 100.0 * ape / n as f64);
        assert!((mse(&y, &yhat).unwrap() - m).abs() <= 1e-12 * m.max(1.0));
        assert!((mape(&y, &yhat).unwrap() - p).abs() <= 1e-12 * p.max(1.0));
    }
}

#[test]
fn simple_examples() {
    assert_eq!(mse(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
    assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
    assert!((mape(&[100.0], &[99.0]).unwrap() - 1.0).abs() <= 1e-12);
    assert_eq!(mape(&[2.0, 5.0], &[2.0, 5.0]).unwrap(), 0.0);
    assert!(matches!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(Error::Data(_))));
    assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
    assert!(mse(&[], &[]).is_err());
}

#[test]
fn efficiency_reproduces_published_rows() {
    let pe = |mape: f64, n: usize| parameter_efficiency(mape, n, DEFAULT_ZETA).unwrap() * 1e3;
    assert!((pe(0.141, 865) - 0.993).abs() < 5e-4);
    assert!((pe(0.124, 5313) - 0.165).abs() < 5e-4);
    assert_eq!(pe(1.053, 35329), 0.0);
    assert!(parameter_efficiency(0.1, 0, 100.0).is_err());
    assert!(parameter_efficiency(0.1, 10, 0.0).is_err());
}

#[test]
fn efficiency_clamps_at_tolerance() {
    assert_eq!(parameter_efficiency(1.0, 10, 100.0).unwrap(), 0.0);
    assert!(parameter_efficiency(0.999, 10, 100.0).unwrap() > 0.0);
    assert_eq!(parameter_efficiency(0.0, 4, 100.0).unwrap(), 0.25);
}

proptest! {
    #[test]
    fn rmse_squared_is_mse(pairs in proptest::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 1..100)) {
        let (y, yhat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let b = MetricBundle::compute(&y.iter().map(|v| v + 2e3).collect::<Vec<_>>(), &yhat).unwrap();
        prop_assert!((b.rmse * b.rmse - b.mse).abs() <= 1e-12 * b.mse.max(1.0));
        prop_assert!(b.mse >= 0.0 && b.mape >= 0.0);
        prop_assert_eq!(b.n, y.len());
    }

    #[test]
    fn mape_is_scale_invariant(
        pairs in proptest::collection::vec((0.1..100.0f64, -100.0..100.0f64), 1..50),
        c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64],
    ) {
        let (y, yhat): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ys: Vec<f64> = y.iter().map(|v| v * c).collect();
        let yhs: Vec<f64> = yhat.iter().map(|v| v * c).collect();
        let a = mape(&y, &yhat).unwrap();
        let b = mape(&ys, &yhs).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn efficiency_is_monotone(m in 0.0..2.0f64, dm in 0.0..1.0f64, n in 1usize..10_000, dn in 0usize..1000) {
        let base = parameter_efficiency(m, n, 100.0).unwrap();
        prop_assert!(parameter_efficiency(m + dm, n, 100.0).unwrap() <= base);
        prop_assert!(parameter_efficiency(m, n + dn, 100.0).unwrap() <= base);
        prop_assert_eq!(base == 0.0, m >= 1.0);
    }
}
