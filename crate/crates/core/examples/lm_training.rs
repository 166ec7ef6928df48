//! Trains a 2-[12,12]-1 tanh network with Levenberg-Marquardt on a noisy
//! surface and compares it with plain gradient descent at equal epochs.
//!
//! cargo run --release --example lm_training

use lmbo::lm::{gradient_descent, split_dataset, train_with_split, Samples, TrainConfig};
use lmbo::mlp::{count_params, Activation, MlpArchitecture};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lmbo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 600;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        x.extend([a, b]);
        y.push(20.0 + a.sin() * b.cos() + 0.3 * a * b + 0.02 * rng.random_range(-1.0..1.0));
    }
    let data = Samples::new(x, y, 2, 1)?;
    let arch = MlpArchitecture::new(2, vec![12, 12], Activation::Tanh, 1)?;
    let config = TrainConfig { max_epochs: 150, seed: 1, ..TrainConfig::default() };
    let split = split_dataset(data.len(), config.split, config.seed)?;
    println!(
        "{arch}: {} parameters, split {}/{}/{}",
        count_params(&arch),
        split.train.len(),
        split.val.len(),
        split.test.len()
    );

    let model = train_with_split(&arch, &data, &split, &config)?;
    println!("\n{:>5} {:>12} {:>12} {:>10}", "epoch", "train MSE", "val MSE", "mu");
    for h in model.history.iter().filter(|h| h.epoch <= 5 || h.epoch % 10 == 0) {
        println!("{:>5} {:>12.4e} {:>12.4e} {:>10.1e}", h.epoch, h.train_mse, h.val_mse, h.mu);
    }
    println!("stopped: {:?}, best epoch {}", model.stop_reason, model.best_epoch);
    let m = &model.metrics;
    println!("train MAPE {:.4}%  val MAPE {:.4}%", m.train.mape, m.val.mape);
    if let Some(t) = &m.test {
        println!("test  MAPE {:.4}%  RMSE {:.4e}", t.mape, t.rmse);
    }

    println!("\nfixed-step gradient descent, same epoch count as LM:");
    let epochs = model.history.len();
    for step in [0.01, 0.1, 0.5] {
        let (mse, _) = gradient_descent(&arch, &data, &split, step, epochs, config.seed)?;
        println!("  step {step:<5} train MSE {mse:.4e}");
    }
    Ok(())
}
