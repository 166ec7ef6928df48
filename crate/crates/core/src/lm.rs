//! Levenberg–Marquardt training for [`crate::mlp`] networks.
//!
//! Training is full batch. Each epoch builds the residuals `r = ŷ - y` and
//! either `JᵀJ` (accumulated over sample blocks) or, when the network has
//! more parameters than residuals, `JJᵀ`. Damped steps are then retried
//! with growing `μ` until the training loss decreases.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_in_place, cholesky_solve, gram_cols_add, gram_rows, mul_transpose_vec, mul_vec};
use crate::metrics::MetricBundle;
use crate::mlp::{self, MlpArchitecture, MlpParams};

/// Lower bound on `μ` after successful steps.
pub const MU_MIN: f64 = 1e-12;
const BLOCK_ROWS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mu0: f64,
    pub mu_dec: f64,
    pub mu_inc: f64,
    pub mu_max: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mu0: 1e-2,
            mu_dec: 0.1,
            mu_inc: 10.0,
            mu_max: 1e10,
            max_epochs: 1000,
            patience: 6,
            split: [0.8, 0.1, 0.1],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.mu_dec > 0.0 && self.mu_dec < 1.0) {
            return bad(format!("mu_dec must lie in (0, 1), got {}", self.mu_dec));
        }
        if !(self.mu_inc > 1.0 && self.mu_inc.is_finite()) {
            return bad(format!("mu_inc must exceed 1, got {}", self.mu_inc));
        }
        if !(self.mu_max >= self.mu0) {
            return bad(format!("mu_max ({}) must be >= mu0 ({})", self.mu_max, self.mu0));
        }
        if self.patience == 0 {
            return bad("patience must be >= 1".into());
        }
        if self.split.iter().any(|f| !(*f >= 0.0)) || self.split[0] <= 0.0 || self.split[1] <= 0.0 {
            return bad(format!("train and validation fractions must be positive: {:?}", self.split));
        }
        if (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("split fractions must sum to 1: {:?}", self.split));
        }
        Ok(())
    }
}

/// Row-major inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub n_inputs: usize,
    pub n_outputs: usize,
}

impl Samples {
    pub fn new(x: Vec<f64>, y: Vec<f64>, n_inputs: usize, n_outputs: usize) -> Result<Self> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(Error::Data("samples need at least one input and one output column".into()));
        }
        if !x.len().is_multiple_of(n_inputs)
            || !y.len().is_multiple_of(n_outputs)
            || x.len() / n_inputs != y.len() / n_outputs
        {
            return Err(Error::Dimension {
                what: "sample rows (inputs vs targets)",
                expected: x.len() / n_inputs,
                got: y.len() / n_outputs,
            });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in samples".into()));
        }
        Ok(Self { x, y, n_inputs, n_outputs })
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.n_inputs
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_inputs..(i + 1) * self.n_inputs]
    }

    pub fn target_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.n_outputs..(i + 1) * self.n_outputs]
    }

    pub fn subset(&self, rows: &[usize]) -> Samples {
        let mut x = Vec::with_capacity(rows.len() * self.n_inputs);
        let mut y = Vec::with_capacity(rows.len() * self.n_outputs);
        for &r in rows {
            x.extend_from_slice(self.input_row(r));
            y.extend_from_slice(self.target_row(r));
        }
        Samples { x, y, n_inputs: self.n_inputs, n_outputs: self.n_outputs }
    }
}

/// Disjoint row-index partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle, then `floor(n·f_train)` training rows, `floor(n·f_val)`
/// validation rows and the remainder for testing.
pub fn split_dataset(n_rows: usize, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if n_rows < 10 {
        return Err(Error::Data(format!("need at least 10 rows to split, got {n_rows}")));
    }
    if ratios.iter().any(|f| !(*f >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("invalid split fractions {ratios:?}")));
    }
    let mut idx: Vec<usize> = (0..n_rows).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n_rows as f64 * ratios[0]).floor() as usize;
    let n_val = ((n_rows as f64 * ratios[1]).floor() as usize).min(n_rows - n_train);
    let test = idx.split_off(n_train + n_val);
    let val = idx.split_off(n_train);
    Ok(Split { train: idx, val, test })
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
}

fn column_stats(data: &[f64], cols: usize, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = data.len() / cols;
    if n == 0 {
        return Err(Error::Data(format!("cannot normalise empty {what}")));
    }
    let mut mean = vec![0.0; cols];
    for row in data.chunks_exact(cols) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = vec![0.0; cols];
    for row in data.chunks_exact(cols) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut std = Vec::with_capacity(cols);
    for (c, s) in var.iter().enumerate() {
        let sd = (s / n as f64).sqrt();
        if !(sd > 0.0) || sd <= 1e-12 * mean[c].abs() {
            return Err(Error::Data(format!("{what} column {c} is constant; cannot z-score it")));
        }
        std.push(sd);
    }
    Ok((mean, std))
}

fn scale(data: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    let cols = mean.len();
    data.chunks_exact(cols).flat_map(|row| row.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s)).collect()
}

impl NormStats {
    pub fn normalize_x(&self, x: &[f64]) -> Vec<f64> {
        scale(x, &self.x_mean, &self.x_std)
    }

    pub fn normalize_y(&self, y: &[f64]) -> Vec<f64> {
        scale(y, &self.y_mean, &self.y_std)
    }

    pub fn denormalize_y(&self, y: &[f64]) -> Vec<f64> {
        let cols = self.y_mean.len();
        y.chunks_exact(cols)
            .flat_map(|row| row.iter().zip(&self.y_mean).zip(&self.y_std).map(|((v, m), s)| v * s + m))
            .collect()
    }
}

/// Fits z-score statistics on `train` only.
pub fn zscore_fit(train: &Samples) -> Result<NormStats> {
    let (x_mean, x_std) = column_stats(&train.x, train.n_inputs, "feature")?;
    let (y_mean, y_std) = column_stats(&train.y, train.n_outputs, "target")?;
    Ok(NormStats { x_mean, x_std, y_mean, y_std })
}

pub fn zscore_apply(stats: &NormStats, rows: &Samples) -> Result<Samples> {
    if rows.n_inputs != stats.x_mean.len() || rows.n_outputs != stats.y_mean.len() {
        return Err(Error::Dimension {
            what: "normalisation columns",
            expected: stats.x_mean.len(),
            got: rows.n_inputs,
        });
    }
    Ok(Samples {
        x: stats.normalize_x(&rows.x),
        y: stats.normalize_y(&rows.y),
        n_inputs: rows.n_inputs,
        n_outputs: rows.n_outputs,
    })
}

/// The damped normal equations for one linearisation point. Solving for a
/// given `μ` returns `Δ = (JᵀJ + μI)⁻¹ Jᵀr`; the new parameters are `β - Δ`.
pub struct DampedSystem {
    form: Form,
}

enum Form {
    /// `JᵀJ` and `Jᵀr`.
    Primal { gram: DMatrix<f64>, jtr: Vec<f64> },
    /// `JJᵀ`, `J` and `r`; uses `(JᵀJ + μI)⁻¹Jᵀ = Jᵀ(JJᵀ + μI)⁻¹`.
    Dual { gram: DMatrix<f64>, j: DMatrix<f64>, r: Vec<f64> },
}

impl DampedSystem {
    /// Builds the system from an explicit Jacobian. The dual form is chosen
    /// when there are more columns than rows.
    pub fn from_jacobian(j: DMatrix<f64>, r: &[f64]) -> Result<Self> {
        if j.nrows() != r.len() {
            return Err(Error::Dimension { what: "Jacobian rows vs residuals", expected: j.nrows(), got: r.len() });
        }
        let form = if j.ncols() > j.nrows() {
            Form::Dual { gram: gram_rows(&j), j, r: r.to_vec() }
        } else {
            let mut gram = DMatrix::zeros(j.ncols(), j.ncols());
            gram_cols_add(&j, &mut gram);
            Form::Primal { jtr: mul_transpose_vec(&j, r), gram }
        };
        Ok(Self { form })
    }

    /// Linearises the network at `beta` over `data`, returning the system
    /// and the residuals.
    pub fn linearize(arch: &MlpArchitecture, beta: &MlpParams, data: &Samples) -> Result<(Self, Vec<f64>)> {
        let yhat = mlp::forward_batch(arch, beta, &data.x)?;
        let r: Vec<f64> = yhat.iter().zip(&data.y).map(|(a, b)| a - b).collect();
        let rows = r.len();
        let p = beta.len();
        if p > rows {
            let j = mlp::jacobian(arch, beta, &data.x)?;
            return Ok((Self::from_jacobian(j, &r)?, r));
        }
        // accumulate JᵀJ over sample blocks to bound memory
        let mut gram = DMatrix::zeros(p, p);
        let mut jtr = vec![0.0; p];
        let per = BLOCK_ROWS.div_ceil(arch.output_dim).max(1);
        let mut block = DMatrix::zeros(0, 0);
        for (b, xs) in data.x.chunks(per * arch.input_dim).enumerate() {
            let n = xs.len() / arch.input_dim;
            let m = n * arch.output_dim;
            if block.nrows() != m {
                block = DMatrix::zeros(m, p);
            }
            mlp::jacobian_into(arch, beta.as_slice(), xs, &mut block);
            gram_cols_add(&block, &mut gram);
            let rb = &r[b * per * arch.output_dim..b * per * arch.output_dim + m];
            for (g, v) in jtr.iter_mut().zip(mul_transpose_vec(&block, rb)) {
                *g += v;
            }
        }
        Ok((Self { form: Form::Primal { gram, jtr } }, r))
    }

    pub fn n_params(&self) -> usize {
        match &self.form {
            Form::Primal { gram, .. } => gram.nrows(),
            Form::Dual { j, .. } => j.ncols(),
        }
    }

    pub fn is_dual(&self) -> bool {
        matches!(self.form, Form::Dual { .. })
    }

    /// `Δ` for damping `mu`. Fails if the damped matrix is not numerically
    /// positive definite.
    pub fn solve(&self, mu: f64) -> Result<Vec<f64>> {
        match &self.form {
            Form::Primal { gram, jtr } => solve_refined(gram, mu, jtr),
            Form::Dual { gram, j, r } => {
                let z = solve_refined(gram, mu, r)?;
                Ok(mul_transpose_vec(j, &z))
            }
        }
    }
}

/// Solves `(G + μI) x = b` by Cholesky with one step of iterative refinement.
fn solve_refined(gram: &DMatrix<f64>, mu: f64, b: &[f64]) -> Result<Vec<f64>> {
    let mut l = gram.clone();
    for i in 0..l.nrows() {
        l[(i, i)] += mu;
    }
    cholesky_in_place(&mut l)?;
    let mut x = b.to_vec();
    cholesky_solve(&l, &mut x);
    let ax = mul_vec(gram, &x);
    let mut res: Vec<f64> = b.iter().zip(&ax).zip(&x).map(|((bi, ai), xi)| bi - (ai + mu * xi)).collect();
    cholesky_solve(&l, &mut res);
    for (xi, d) in x.iter_mut().zip(&res) {
        *xi += d;
    }
    Ok(x)
}

/// One damped step `β - (JᵀJ + μI)⁻¹ Jᵀr`. If the damped matrix cannot be
/// factored, `μ` is raised tenfold (from at least [`MU_MIN`]) up to `1e10`.
pub fn lm_step(params: &[f64], j: &DMatrix<f64>, r: &[f64], mu: f64) -> Result<Vec<f64>> {
    if j.ncols() != params.len() {
        return Err(Error::Dimension {
            what: "Jacobian columns vs parameters",
            expected: params.len(),
            got: j.ncols(),
        });
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidArgument(format!("damping must be non-negative, got {mu}")));
    }
    let sys = if mu == 0.0 {
        // the dual form needs μ > 0
        let mut gram = DMatrix::zeros(j.ncols(), j.ncols());
        gram_cols_add(j, &mut gram);
        DampedSystem { form: Form::Primal { jtr: mul_transpose_vec(j, r), gram } }
    } else {
        DampedSystem::from_jacobian(j.clone(), r)?
    };
    let mut m = mu;
    loop {
        match sys.solve(m) {
            Ok(delta) => return Ok(params.iter().zip(&delta).map(|(b, d)| b - d).collect()),
            Err(e) => {
                if m >= 1e10 {
                    return Err(e);
                }
                m = (m * 10.0).max(MU_MIN);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Original target units.
    pub train_mse: f64,
    pub val_mse: f64,
    /// Damping after the epoch's accepted step.
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    Patience,
    /// `μ` exceeded `mu_max` without an accepted step.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub train: MetricBundle,
    pub val: MetricBundle,
    pub test: Option<MetricBundle>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub arch: MlpArchitecture,
    pub params: MlpParams,
    pub norm: NormStats,
    pub history: Vec<EpochRecord>,
    /// 0 means the initial parameters were never improved on.
    pub best_epoch: usize,
    pub stop_reason: StopReason,
    pub metrics: SplitMetrics,
}

impl TrainedModel {
    pub fn stalled(&self) -> bool {
        self.stop_reason == StopReason::Stalled
    }

    /// Predictions in original units for row-major inputs.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        predict_raw(&self.arch, &self.params, &self.norm, x)
    }

    pub fn history_csv(&self) -> String {
        history_csv(&self.history)
    }
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_mse,val_mse,mu\n");
    for h in history {
        let _ = writeln!(s, "{},{:e},{:e},{:e}", h.epoch, h.train_mse, h.val_mse, h.mu);
    }
    s
}

pub(crate) fn predict_raw(arch: &MlpArchitecture, params: &MlpParams, norm: &NormStats, x: &[f64]) -> Result<Vec<f64>> {
    if !x.len().is_multiple_of(arch.input_dim) {
        return Err(Error::Dimension {
            what: "input row width",
            expected: arch.input_dim,
            got: x.len() % arch.input_dim,
        });
    }
    let xn = norm.normalize_x(x);
    Ok(norm.denormalize_y(&mlp::forward_batch(arch, params, &xn)?))
}

/// Metrics of the model's original-unit predictions on `rows`.
pub fn evaluate(model: &TrainedModel, rows: &Samples) -> Result<MetricBundle> {
    if rows.n_inputs != model.arch.input_dim || rows.n_outputs != model.arch.output_dim {
        return Err(Error::Dimension {
            what: "evaluation columns",
            expected: model.arch.input_dim,
            got: rows.n_inputs,
        });
    }
    MetricBundle::compute(&rows.y, &model.predict(&rows.x)?)
}

/// MSE in original units from normalised residuals.
fn denorm_mse(r: &[f64], y_std: &[f64]) -> f64 {
    let k = y_std.len();
    r.iter().enumerate().map(|(i, v)| (v * y_std[i % k]).powi(2)).sum::<f64>() / r.len() as f64
}

fn residuals(arch: &MlpArchitecture, beta: &MlpParams, data: &Samples) -> Result<Vec<f64>> {
    let yhat = mlp::forward_batch(arch, beta, &data.x)?;
    Ok(yhat.iter().zip(&data.y).map(|(a, b)| a - b).collect())
}

fn sse(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn check_shapes(arch: &MlpArchitecture, data: &Samples) -> Result<()> {
    arch.validate()?;
    if data.n_inputs != arch.input_dim || data.n_outputs != arch.output_dim {
        return Err(Error::Dimension {
            what: "dataset columns vs architecture",
            expected: arch.input_dim,
            got: data.n_inputs,
        });
    }
    Ok(())
}

/// Splits with `config.seed` and trains.
pub fn train(arch: &MlpArchitecture, data: &Samples, config: &TrainConfig) -> Result<TrainedModel> {
    config.validate()?;
    let split = split_dataset(data.len(), config.split, config.seed)?;
    train_with_split(arch, data, &split, config)
}

/// Trains on a fixed split; `config.seed` drives only the initialisation.
pub fn train_with_split(
    arch: &MlpArchitecture,
    data: &Samples,
    split: &Split,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    check_shapes(arch, data)?;
    if split.train.is_empty() || split.val.is_empty() {
        return Err(Error::Data("training and validation splits must be non-empty".into()));
    }
    let train_raw = data.subset(&split.train);
    let norm = zscore_fit(&train_raw)?;
    let tr = zscore_apply(&norm, &train_raw)?;
    let va = zscore_apply(&norm, &data.subset(&split.val))?;

    let mut beta = mlp::init_params(arch, config.seed);
    let mut r = residuals(arch, &beta, &tr)?;
    let mut loss = sse(&r);
    let mut best_val = denorm_mse(&residuals(arch, &beta, &va)?, &norm.y_std);
    let mut best = beta.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut mu = config.mu0;
    let mut history = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    'epochs: for epoch in 1..=config.max_epochs {
        let (sys, _) = DampedSystem::linearize(arch, &beta, &tr)?;
        loop {
            if let Ok(delta) = sys.solve(mu) {
                let cand: Vec<f64> = beta.as_slice().iter().zip(&delta).map(|(b, d)| b - d).collect();
                let cand = MlpParams::from_vec(arch, cand)?;
                let rc = residuals(arch, &cand, &tr)?;
                let lc = sse(&rc);
                if lc.is_finite() && lc < loss {
                    beta = cand;
                    r = rc;
                    loss = lc;
                    mu = (mu * config.mu_dec).max(MU_MIN);
                    break;
                }
            }
            mu *= config.mu_inc;
            if mu > config.mu_max {
                stop_reason = StopReason::Stalled;
                break 'epochs;
            }
        }
        let val = denorm_mse(&residuals(arch, &beta, &va)?, &norm.y_std);
        history.push(EpochRecord { epoch, train_mse: denorm_mse(&r, &norm.y_std), val_mse: val, mu });
        if val < best_val {
            best_val = val;
            best = beta.clone();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                stop_reason = StopReason::Patience;
                break;
            }
        }
    }

    let metric = |rows: &[usize]| -> Result<MetricBundle> {
        let s = data.subset(rows);
        MetricBundle::compute(&s.y, &predict_raw(arch, &best, &norm, &s.x)?)
    };
    let metrics = SplitMetrics {
        train: metric(&split.train)?,
        val: metric(&split.val)?,
        test: if split.test.is_empty() { None } else { Some(metric(&split.test)?) },
    };
    Ok(TrainedModel { arch: arch.clone(), params: best, norm, history, best_epoch, stop_reason, metrics })
}

/// Full-batch fixed-step gradient descent on the same normalised MSE
/// objective. A comparison baseline for the LM trainer, not a product
/// feature. Returns the final training MSE in original units (`∞` if the
/// iteration diverged) and the parameters.
pub fn gradient_descent(
    arch: &MlpArchitecture,
    data: &Samples,
    split: &Split,
    step: f64,
    epochs: usize,
    seed: u64,
) -> Result<(f64, MlpParams)> {
    check_shapes(arch, data)?;
    let train_raw = data.subset(&split.train);
    let norm = zscore_fit(&train_raw)?;
    let tr = zscore_apply(&norm, &train_raw)?;
    let mut beta = mlp::init_params(arch, seed);
    let rows = (tr.len() * tr.n_outputs) as f64;
    for _ in 0..epochs {
        let (_, g) = mlp::sse_and_gradient(arch, &beta, &tr.x, &tr.y)?;
        for (b, gi) in beta.as_mut_slice().iter_mut().zip(&g) {
            *b -= step * 2.0 * gi / rows;
        }
        if beta.as_slice().iter().any(|v| !v.is_finite()) {
            return Ok((f64::INFINITY, beta));
        }
    }
    let mse = denorm_mse(&residuals(arch, &beta, &tr)?, &norm.y_std);
    Ok((if mse.is_finite() { mse } else { f64::INFINITY }, beta))
}
