//! Parameter efficiency for a set of candidate models: accuracy per
//! parameter, clamped to zero once MAPE reaches 1/zeta as a fraction.
//!
//! cargo run --example parameter_efficiency

use lmbo::metrics::{parameter_efficiency, MetricBundle, DEFAULT_ZETA};
use lmbo::mlp::{count_params, Activation, MlpArchitecture};

fn main() -> lmbo::Result<()> {
    println!("zeta = {DEFAULT_ZETA}");
    println!("{:<22} {:>8} {:>9} {:>12}", "architecture", "params", "MAPE %", "PE x 1e3");
    for (hidden, mape) in
        [(vec![48], 0.141), (vec![50, 50, 60], 0.016), (vec![80, 80, 80], 0.25), (vec![200, 150], 1.05)]
    {
        let arch = MlpArchitecture::new(16, hidden, Activation::Relu, 1)?;
        let n = count_params(&arch);
        let pe = parameter_efficiency(mape, n, DEFAULT_ZETA)?;
        println!("{:<22} {n:>8} {mape:>9.3} {:>12.4}", arch.to_string(), pe * 1e3);
    }

    let y = [101.0, 98.5, 103.2, 99.9];
    let yhat = [100.7, 98.9, 103.0, 100.2];
    let m = MetricBundle::compute(&y, &yhat)?;
    println!("\nMSE {:.4}  RMSE {:.4}  MAPE {:.4}%  (n = {})", m.mse, m.rmse, m.mape, m.n);
    Ok(())
}
