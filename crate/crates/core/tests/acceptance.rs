//! Acceptance checks. Prints one `PASS` / `FAIL` line per criterion.
//!
//! Criteria 3 and 10 need the airfoil self-noise table (1503 rows, five
//! features, sound pressure level last). Point `LMBO_SELF_NOISE` at it or
//! place it at `crates/core/data/airfoil_self_noise.dat`; without it those
//! two lines report `FAIL (dataset unavailable)`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use lmbo::bo::{expected_improvement, run_ego};
use lmbo::gp::{FitOptions, GpModel};
use lmbo::harness::{cmd_tune, ingest_table, ColumnRef, Delimiter, RunConfig};
use lmbo::kernel::{corr_matrix, k_mixed, CategoricalKernel, KernelConfig, ThetaLayout};
use lmbo::lm::{gradient_descent, lm_step, split_dataset, train, train_with_split, Samples, TrainConfig};
use lmbo::metrics::{parameter_efficiency, DEFAULT_ZETA};
use lmbo::mlp::{count_params, embed, forward, forward_batch, jacobian, Activation, MlpArchitecture, MlpParams};
use lmbo::space::presets::ACTIVATIONS;
use lmbo::space::{DesignPoint, DesignSpace, Value, VarKind, VariableSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

enum Outcome {
    Pass(String),
    Fail(String),
    Unavailable(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn arch(input: usize, hidden: &[usize], act: Activation, output: usize) -> MlpArchitecture {
    MlpArchitecture::new(input, hidden.to_vec(), act, output).unwrap()
}

fn random_params(a: &MlpArchitecture, rng: &mut ChaCha8Rng) -> MlpParams {
    let beta = (0..count_params(a)).map(|_| rng.random_range(-1.0..1.0)).collect();
    MlpParams::from_vec(a, beta).unwrap()
}

fn self_noise_path() -> Option<PathBuf> {
    let candidates = [
        std::env::var_os("LMBO_SELF_NOISE").map(PathBuf::from),
        Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/airfoil_self_noise.dat")),
    ];
    candidates.into_iter().flatten().find(|p| p.is_file())
}

// 1

fn parameter_counts() -> Outcome {
    let a = count_params(&arch(16, &[48], Activation::Relu, 1));
    let b = count_params(&arch(16, &[50, 50, 60], Activation::Relu, 1));
    verdict(a == 865 && b == 6521, format!("16-[48]-1 -> {a}, 16-[50,50,60]-1 -> {b}"))
}

// 2

fn efficiency_rows() -> Outcome {
    // (name, params, published MAPE %, published PE ×10³)
    let rows = [
        ("xxsmall", 865, 0.141, 0.993),
        ("xsmall", 3217, 0.088, 0.284),
        ("small", 5313, 0.124, 0.165),
        ("large", 35329, 1.053, 0.000),
    ];
    let pe = |m: f64, n: usize| parameter_efficiency(m, n, DEFAULT_ZETA).unwrap() * 1e3;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, n, m, target) in rows {
        // MAPE is printed to 3 decimals, so accept any value it could round from.
        let lo = pe(m + 0.0005, n);
        let hi = pe(m - 0.0005, n);
        let hit = hi >= target - 0.0005 && lo <= target + 0.0005;
        ok &= hit;
        parts.push(format!("{name}={:.3}", pe(m, n)));
    }
    // Rows whose published PE disagrees with the formula at any rounding.
    for (name, n, m, published) in [("BO", 6521, 0.016, 0.090), ("medium", 9473, 0.410, 0.000)] {
        let v = pe(m, n);
        let deviates = (pe(m - 0.0005, n) - published).abs() > 0.0005 && (pe(m + 0.0005, n) - published).abs() > 0.0005;
        ok &= deviates;
        parts.push(format!("{name}={v:.3} (published {published:.3}, documented deviation)"));
    }
    verdict(ok, parts.join(", "))
}

// 3

fn self_noise_tune() -> Outcome {
    let Some(path) = self_noise_path() else {
        return Outcome::Unavailable("self-noise table not found".into());
    };
    let dir = tempfile::TempDir::new().unwrap();
    let mut passes = 0;
    let mut parts = Vec::new();
    for seed in 0..3u64 {
        let config = json!({
            "data": {"path": path, "target": -1},
            "space": {"preset": "mlp_integer"},
            "bo": {"n_doe": 10, "n_iter": 30, "workers": 4},
            "out_dir": dir.path().join(format!("seed{seed}")),
            "seed": seed
        });
        let cfg = match RunConfig::from_json(&config.to_string()) {
            Ok(c) => c,
            Err(e) => return Outcome::Fail(format!("config rejected: {e}")),
        };
        let out = match cmd_tune(&cfg) {
            Ok(o) => o,
            Err(e) => return Outcome::Fail(format!("seed {seed}: {e}")),
        };
        let test = out.report["metrics"]["test"]["mape"].as_f64().unwrap_or(f64::INFINITY);
        if test <= 2.4 {
            passes += 1;
        }
        parts.push(format!("seed {seed}: {} test MAPE {test:.3}%", out.best_arch));
    }
    verdict(passes >= 2, format!("{passes}/3 seeds <= 2.4% [{}]", parts.join("; ")))
}

// 4

fn separable_toy() -> Outcome {
    let space = DesignSpace::new(vec![
        VariableSpec::neutral("N1", VarKind::ordinal_range(10.0, 80.0, 5.0)),
        VariableSpec::neutral("N2", VarKind::ordinal_range(10.0, 80.0, 5.0)),
        VariableSpec::neutral("F", VarKind::categorical(ACTIVATIONS)),
    ])
    .unwrap();
    let obj = |p: &DesignPoint, _: u64| -> Result<f64, String> {
        Ok((p.value(0).as_f64() - 45.0).abs() + (p.value(1).as_f64() - 60.0).abs())
    };
    let size = space.enumerate().unwrap().len();
    let mut hits = 0;
    for seed in 0..100 {
        let r = run_ego(&obj, &space, 10, 15, seed).unwrap();
        if r.best().objective == 0.0 && r.trials.len() <= 25 {
            hits += 1;
        }
    }
    verdict(hits >= 95 && size == 675, format!("{hits}/100 seeds hit the optimum within 25 of {size} points"))
}

// 5

fn gp_space() -> DesignSpace {
    DesignSpace::new(vec![
        VariableSpec::meta("depth", VarKind::Integer { lo: 1, hi: 2 }),
        VariableSpec::neutral("x", VarKind::Continuous { lo: -1.0, hi: 2.0 }),
        VariableSpec::neutral("k", VarKind::Integer { lo: 0, hi: 9 }),
        VariableSpec::decreed("w", VarKind::ordinal_range(10.0, 80.0, 5.0), "depth", vec![Value::Num(2.0)]),
        VariableSpec::neutral("c", VarKind::categorical(["a", "b", "c"])),
    ])
    .unwrap()
}

fn gp_objective(p: &DesignPoint) -> f64 {
    let w = if p.is_active(3) { p.value(3).as_f64() / 40.0 } else { 0.0 };
    (3.0 * p.value(1).as_f64()).sin() + 0.1 * p.value(2).as_f64() + w * w - 0.5 * p.value(4).as_f64()
}

/// Compensated dot product.
fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(*y, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + pe;
        s = t;
    }
    s + c
}

/// `R⁻¹ b` through the explicit inverse, refined with compensated residuals.
fn inv_apply(r: &DMatrix<f64>, r_inv: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x: Vec<f64> = (r_inv * DVector::from_column_slice(b)).iter().copied().collect();
    for _ in 0..4 {
        let res: Vec<f64> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = r.row(i).iter().copied().collect();
                row.push(-1.0);
                let mut xs = x.clone();
                xs.push(b[i]);
                -dot2(&row, &xs)
            })
            .collect();
        let dx = r_inv * DVector::from_vec(res);
        x.iter_mut().zip(dx.iter()).for_each(|(xi, d)| *xi += d);
    }
    x
}

fn dense_oracle(model: &GpModel, w: &[f64]) -> (f64, f64) {
    let x = model.inputs();
    let n = x.len();
    let r_mat = corr_matrix(x, model.layout(), model.theta(), model.nugget()).unwrap();
    let r_inv = r_mat.clone().try_inverse().unwrap();
    let y = model.outputs();
    let one = vec![1.0; n];
    let a_one = inv_apply(&r_mat, &r_inv, &one);
    let one_ri = dot2(&one, &a_one);
    let mu = dot2(&one, &inv_apply(&r_mat, &r_inv, y)) / one_ri;
    let resid: Vec<f64> = y.iter().map(|v| v - mu).collect();
    let a_res = inv_apply(&r_mat, &r_inv, &resid);
    let r: Vec<f64> = x.iter().map(|xi| k_mixed(w, xi, model.layout(), model.theta()).unwrap()).collect();
    let a_r = inv_apply(&r_mat, &r_inv, &r);
    let u = 1.0 - dot2(&one, &a_r);
    (mu + dot2(&r, &a_res), model.sigma2_hat() * (1.0 - dot2(&r, &a_r) + u * u / one_ri))
}

fn gp_oracle() -> Outcome {
    let space = gp_space();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let opts = FitOptions { n_starts: 3, max_iter: 60 };
    let (mut worst_mean, mut worst_var, mut worst_interp) = (0.0f64, 0.0f64, 0.0f64);
    let mut at_base_nugget = 0;
    for s in 0..50u64 {
        let n = rng.random_range(4..=30);
        let cat = if s % 2 == 0 { CategoricalKernel::ContinuousRelaxation } else { CategoricalKernel::GowerDistance };
        let mut pts: Vec<DesignPoint> = Vec::new();
        for p in space.sample_doe(n, 1000 + s) {
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        let w: Vec<Vec<f64>> = pts.iter().map(|p| space.encode(p)).collect();
        let y: Vec<f64> = pts.iter().map(gp_objective).collect();
        let cfg = KernelConfig { categorical: cat, ..KernelConfig::default() };
        let model = GpModel::fit_with(w.clone(), y.clone(), ThetaLayout::new(&space, cat), cfg, s, opts).unwrap();
        let probes: Vec<Vec<f64>> = space.sample_doe(10, 5000 + s).iter().map(|p| space.encode(p)).collect();
        for p in probes.iter().chain(&w) {
            let (m, v) = dense_oracle(&model, p);
            worst_mean = worst_mean.max((model.predict_mean(p) - m).abs());
            worst_var = worst_var.max((model.predict_var_unclamped(p) - v).abs());
        }
        if model.nugget() <= 1e-10 {
            at_base_nugget += 1;
            for (wi, yi) in w.iter().zip(&y) {
                worst_interp = worst_interp.max((model.predict_mean(wi) - yi).abs());
            }
        }
    }
    verdict(
        worst_mean <= 1e-8 && worst_var <= 1e-8 && worst_interp <= 1e-6 && at_base_nugget > 0,
        format!(
            "max |Δmean| {worst_mean:.1e}, max |Δvar| {worst_var:.1e}, interpolation {worst_interp:.1e} on {at_base_nugget} DoEs at nugget 1e-10"
        ),
    )
}

// 6

fn ei_monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ok = expected_improvement(0.0, 0.0, 1.0) == 0.0 && expected_improvement(2.0, 0.0, 1.0) == 0.0;
    let mut parts = Vec::new();
    for (mu, sigma, f_min) in [(0.0, 1.0, 0.0), (1.0, 2.0, 0.0), (-1.0, 0.5, 0.0)] {
        let draws = 1_000_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += (f_min - (mu + sigma * z)).max(0.0);
        }
        let mc = acc / draws as f64;
        let ei = expected_improvement(mu, sigma, f_min);
        ok &= (ei - mc).abs() <= 1e-3;
        parts.push(format!("EI({mu},{sigma},{f_min})={ei:.5} mc={mc:.5}"));
    }
    verdict(ok, parts.join(", ") + ", EI(σ=0)=0")
}

// 7

fn jacobian_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Linear] {
        for k in 0..20 {
            let d = rng.random_range(1..4);
            let hidden: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..6)).collect();
            let a = arch(d, &hidden, act, 1 + k % 2);
            let p = random_params(&a, &mut rng);
            let x: Vec<f64> = (0..4 * d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let j = jacobian(&a, &p, &x).unwrap();
            for c in 0..p.len() {
                let beta = p.as_slice()[c];
                let h = 1e-6 * (1.0 + beta.abs());
                let (mut plus, mut minus) = (p.clone(), p.clone());
                plus.as_mut_slice()[c] = beta + h;
                minus.as_mut_slice()[c] = beta - h;
                let fp = forward_batch(&a, &plus, &x).unwrap();
                let fm = forward_batch(&a, &minus, &x).unwrap();
                for r in 0..fp.len() {
                    let fd = (fp[r] - fm[r]) / (2.0 * h);
                    worst = worst.max((j[(r, c)] - fd).abs() / fd.abs().max(j[(r, c)].abs()).max(1.0));
                }
            }
        }
    }
    verdict(worst <= 1e-5, format!("max relative error {worst:.2e} over 80 nets"))
}

// 8

fn lm_behaviour() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 300;
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
        x.extend([a, b]);
        y.push(10.0 + a.sin() + 0.5 * b * b + 0.05 * rng.random_range(-1.0..1.0));
    }
    let data = Samples::new(x, y, 2, 1).unwrap();
    let cfg = TrainConfig { max_epochs: 60, patience: 60, seed: 4, ..TrainConfig::default() };
    let m = train(&arch(2, &[8, 8], Activation::Tanh, 1), &data, &cfg).unwrap();
    let decreasing = m.history.len() >= 2 && m.history.windows(2).all(|w| w[1].train_mse < w[0].train_mse);

    let j = DMatrix::from_element(1, 1, 1.0);
    let scalar = lm_step(&[0.0], &j, &[2.0], 1.0).unwrap() == vec![-1.0];

    let (rows, cols) = (30, 4);
    let a = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
    let t = DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0));
    let beta0 = DVector::from_fn(cols, |_, _| rng.random_range(-1.0..1.0));
    let r = &a * &beta0 - &t;
    let next = DVector::from_vec(lm_step(beta0.as_slice(), &a, r.as_slice(), 0.0).unwrap());
    let qr = a.clone().qr();
    let exact = qr.r().solve_upper_triangular(&(qr.q().transpose() * &t)).unwrap();
    let ls_err = (next - exact).amax();

    verdict(
        decreasing && scalar && ls_err <= 1e-10,
        format!(
            "{} accepted epochs strictly decreasing: {decreasing}, scalar step exact: {scalar}, μ=0 vs least squares {ls_err:.1e}",
            m.history.len()
        ),
    )
}

// 9

fn embedding_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
        for _ in 0..20 {
            let d = rng.random_range(1..5);
            let widths: Vec<usize> = (0..rng.random_range(1..4)).map(|_| rng.random_range(1..8)).collect();
            let grown: Vec<usize> = widths.iter().map(|w| w + rng.random_range(0..5)).collect();
            let small = arch(d, &widths, act, 1);
            let large = arch(d, &grown, act, 1);
            let p = random_params(&small, &mut rng);
            let q = embed(&small, &p, &large).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                worst = worst.max((forward(&small, &p, &x).unwrap()[0] - forward(&large, &q, &x).unwrap()[0]).abs());
            }
        }
    }
    let mut worst_depth = 0.0f64;
    for _ in 0..20 {
        let d = rng.random_range(1..5);
        let widths: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(1..6)).collect();
        let mut grown: Vec<usize> = widths.iter().map(|w| w + rng.random_range(0..3)).collect();
        let extra = rng.random_range(1..3);
        let last = *grown.last().unwrap();
        grown.extend(std::iter::repeat_n(last, extra));
        let small = arch(d, &widths, Activation::Linear, 1);
        let large = arch(d, &grown, Activation::Linear, 1);
        let p = random_params(&small, &mut rng);
        let q = match embed(&small, &p, &large) {
            Ok(q) => q,
            Err(e) => return Outcome::Fail(format!("depth embed {small} -> {large}: {e}")),
        };
        for _ in 0..100 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
            worst_depth =
                worst_depth.max((forward(&small, &p, &x).unwrap()[0] - forward(&large, &q, &x).unwrap()[0]).abs());
        }
    }
    verdict(
        worst <= 1e-12 && worst_depth <= 1e-12,
        format!(
            "width padding max |Δ| {worst:.1e} (60 pairs), linear depth increase max |Δ| {worst_depth:.1e} (20 pairs)"
        ),
    )
}

// 10

fn lm_versus_gradient_descent() -> Outcome {
    let Some(path) = self_noise_path() else {
        return Outcome::Unavailable("self-noise table not found".into());
    };
    let data = match ingest_table(&path, Delimiter::Auto, &ColumnRef::Index(-1)).and_then(|d| d.samples()) {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(format!("cannot read {}: {e}", path.display())),
    };
    let a = arch(data.n_inputs, &[20, 20], Activation::Tanh, 1);
    let steps = [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0];
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..5u64 {
        let split = split_dataset(data.len(), [0.8, 0.1, 0.1], seed).unwrap();
        let cfg = TrainConfig { max_epochs: 200, patience: 200, seed, ..TrainConfig::default() };
        let lm = train_with_split(&a, &data, &split, &cfg).unwrap();
        let lm_mse = lm.history.last().map(|h| h.train_mse).unwrap_or(f64::INFINITY);
        let (gd_mse, step) = steps
            .iter()
            .map(|s| (gradient_descent(&a, &data, &split, *s, 200, seed).unwrap().0, *s))
            .fold((f64::INFINITY, 0.0), |b, c| if c.0 < b.0 { c } else { b });
        if lm_mse < gd_mse {
            wins += 1;
        }
        parts.push(format!("seed {seed}: LM {lm_mse:.3} vs GD {gd_mse:.3} (step {step})"));
    }
    verdict(wins >= 4, format!("LM lower on {wins}/5 [{}]", parts.join("; ")))
}

// 11

fn tune_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut csv = String::from("a,b,c,target\n");
    for _ in 0..120 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = 50.0 + 3.0 * x[0] - 2.0 * x[1] * x[2] + x[2].sin();
        csv.push_str(&format!("{},{},{},{}\n", x[0], x[1], x[2], y));
    }
    let data = dir.path().join("data.csv");
    fs::write(&data, csv).unwrap();
    let run = |name: &str| -> Vec<u8> {
        let config = json!({
            "data": {"path": data, "target": "target"},
            "space": {"variables": [
                {"name": "N1", "type": "ordinal", "levels": [3, 5, 8, 12]},
                {"name": "F", "type": "categorical", "levels": ["tanh", "sigmoid"]}
            ]},
            "bo": {"n_doe": 3, "n_iter": 3, "workers": 2},
            "train": {"max_epochs": 20},
            "out_dir": dir.path().join(name),
            "seed": 17
        });
        cmd_tune(&RunConfig::from_json(&config.to_string()).unwrap()).unwrap();
        fs::read(dir.path().join(name).join("trials.jsonl")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    verdict(a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1 parameter counts", parameter_counts),
        ("2 parameter efficiency rows", efficiency_rows),
        ("3 self-noise tuning", self_noise_tune),
        ("4 separable toy optimum", separable_toy),
        ("5 GP explicit-inverse oracle", gp_oracle),
        ("6 EI vs Monte Carlo", ei_monte_carlo),
        ("7 Jacobian vs finite differences", jacobian_check),
        ("8 LM step behaviour", lm_behaviour),
        ("9 embedding preserves outputs", embedding_property),
        ("10 LM vs gradient descent", lm_versus_gradient_descent),
        ("11 tune determinism", tune_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("PASS {name}: {d} [{secs:.1}s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.1}s]");
            }
            Outcome::Unavailable(d) => println!("FAIL {name}: dataset unavailable ({d})"),
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
