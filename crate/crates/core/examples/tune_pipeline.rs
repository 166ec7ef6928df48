//! End-to-end pipeline on a generated CSV table: architecture search, then
//! evaluation and prediction with the stored model. Everything is written
//! under the output directory, including the config, so the same run can be
//! repeated with the `lmbo` binary.
//!
//! cargo run --release --example tune_pipeline [out_dir]

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use lmbo::harness::{cmd_eval, cmd_predict, cmd_tune, EvalSplit, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn main() -> lmbo::Result<()> {
    let out: PathBuf =
        std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("lmbo-demo"));
    fs::create_dir_all(&out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut csv = String::from("freq,angle,chord,velocity,thickness,level\n");
    let mut probe = String::from("freq,angle,chord,velocity,thickness\n");
    for i in 0..400 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = 125.0 - 6.0 * x[0] * x[0] + 3.0 * (2.0 * x[1]).sin() - 4.0 * x[2] * x[4] + 2.0 * x[3];
        let row: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
        let _ = writeln!(csv, "{},{y:.6}", row.join(","));
        if i < 5 {
            let _ = writeln!(probe, "{}", row.join(","));
        }
    }
    fs::write(out.join("data.csv"), csv)?;
    fs::write(out.join("probe.csv"), probe)?;

    let config = json!({
        "data": {"path": "data.csv", "target": "level"},
        "space": {"variables": [
            {"name": "N", "type": "ordinal", "levels": [2, 3], "role": "meta"},
            {"name": "N1", "type": "integer", "lo": 5, "hi": 20},
            {"name": "N2", "type": "integer", "lo": 5, "hi": 20},
            {"name": "N3", "type": "integer", "lo": 5, "hi": 20,
             "role": {"decreed": {"parent": "N", "active_when": [3]}}},
            {"name": "F", "type": "categorical", "levels": ["relu", "tanh", "sigmoid"]}
        ]},
        "bo": {"n_doe": 6, "n_iter": 6, "workers": 2},
        "train": {"max_epochs": 80},
        "eval_split": "test",
        "predict_input": "probe.csv",
        "out_dir": ".",
        "seed": 1
    });
    let config_path = out.join("config.json");
    fs::write(&config_path, serde_json::to_string_pretty(&config)? + "\n")?;
    let mut cfg = RunConfig::load(&config_path)?;

    let tuned = cmd_tune(&cfg)?;
    println!("trials:");
    for t in &tuned.result.trials {
        println!(
            "  {:>2} {:?} {} -> val MAPE {:.4}%",
            t.iteration,
            t.phase,
            tuned.result.space.point_to_json(&t.point),
            t.objective
        );
    }
    println!("best architecture: {}", tuned.best_arch);

    cfg.eval_split = EvalSplit::Test;
    let eval = cmd_eval(&cfg)?;
    print!("test split: {}", eval.to_text());

    let preds = cmd_predict(&cfg, None)?;
    println!("predictions for probe.csv: {preds:.3?}");

    println!("\nartifacts in {}", out.display());
    println!("repeat with: lmbo tune --config {}", config_path.display());
    Ok(())
}
