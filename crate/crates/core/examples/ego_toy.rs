//! EGO on a cheap separable objective over a 675-point (N1, N2, F) grid.
//! The optimum (N1 = 45, N2 = 60, any F) is known, so convergence is easy
//! to read off the best-so-far column.
//!
//! cargo run --example ego_toy [seed]

use lmbo::bo::{run_ego_with, EgoConfig};
use lmbo::space::presets::ACTIVATIONS;
use lmbo::space::{DesignPoint, DesignSpace, VarKind, VariableSpec};

fn main() -> lmbo::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let space = DesignSpace::new(vec![
        VariableSpec::neutral("N1", VarKind::ordinal_range(10.0, 80.0, 5.0)),
        VariableSpec::neutral("N2", VarKind::ordinal_range(10.0, 80.0, 5.0)),
        VariableSpec::neutral("F", VarKind::categorical(ACTIVATIONS)),
    ])?;
    let objective = |p: &DesignPoint, _seed: u64| -> Result<f64, String> {
        Ok((p.value(0).as_f64() - 45.0).abs() + (p.value(1).as_f64() - 60.0).abs())
    };

    let config = EgoConfig::new(10, 15, seed);
    let mut best = f64::INFINITY;
    println!("{:>3} {:>4} {:>28} {:>8} {:>8} {:>10}", "it", "phase", "point", "f", "best", "EI");
    let result = run_ego_with(&objective, &space, &config, &mut |t| {
        best = best.min(t.objective);
        let ei = t.expected_improvement.map(|v| format!("{v:.3e}")).unwrap_or_default();
        println!(
            "{:>3} {:>5} {:>28} {:>8} {:>8} {:>10}",
            t.iteration,
            format!("{:?}", t.phase),
            space.point_to_json(&t.point).to_string(),
            t.objective,
            best,
            ei
        );
        Ok(())
    })?;
    let b = result.best();
    println!("\nbest after {} evaluations: {} -> {}", result.trials.len(), space.point_to_json(&b.point), b.objective);
    Ok(())
}
