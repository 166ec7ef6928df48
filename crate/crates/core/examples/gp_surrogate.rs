//! Fits the Kriging surrogate on a mixed continuous / categorical function
//! and compares its predictions with the truth.
//!
//! cargo run --example gp_surrogate

use lmbo::gp::GpModel;
use lmbo::kernel::{CategoricalKernel, KernelConfig, ThetaLayout};
use lmbo::space::{DesignPoint, DesignSpace, Value, VarKind, VariableSpec};

fn truth(p: &DesignPoint) -> f64 {
    let x = p.value(0).as_f64();
    let shift = [0.0, 0.8, -0.5][p.value(1).as_f64() as usize];
    (4.0 * x).sin() + shift
}

fn main() -> lmbo::Result<()> {
    let space = DesignSpace::new(vec![
        VariableSpec::neutral("x", VarKind::Continuous { lo: 0.0, hi: 2.0 }),
        VariableSpec::neutral("c", VarKind::categorical(["a", "b", "c"])),
    ])?;
    let doe = space.sample_doe(18, 7);
    let w: Vec<Vec<f64>> = doe.iter().map(|p| space.encode(p)).collect();
    let y: Vec<f64> = doe.iter().map(truth).collect();

    for cat in [CategoricalKernel::ContinuousRelaxation, CategoricalKernel::GowerDistance] {
        let config = KernelConfig { categorical: cat, ..KernelConfig::default() };
        let model = GpModel::fit(w.clone(), y.clone(), ThetaLayout::new(&space, cat), config, 0)?;
        println!("{cat:?}");
        let theta: Vec<String> = model.theta().iter().map(|t| format!("{t:.3e}")).collect();
        println!("  theta = [{}]", theta.join(", "));
        println!(
            "  mu = {:.4}, sigma2 = {:.4e}, log-likelihood = {:.3}",
            model.mu_hat(),
            model.sigma2_hat(),
            model.log_likelihood()
        );
        println!("  {:>5} {:>2} {:>9} {:>9} {:>9}", "x", "c", "truth", "mean", "std");
        for c in 0..3 {
            for x in [0.25, 1.0, 1.75] {
                let p = space.point(vec![Value::Num(x), Value::Cat(c)])?;
                let (m, v) = model.predict(&space.encode(&p));
                println!("  {x:>5.2} {c:>2} {:>9.4} {m:>9.4} {:>9.2e}", truth(&p), v.sqrt());
            }
        }
    }
    Ok(())
}
