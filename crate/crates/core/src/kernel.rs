//! Mixed-variable correlation kernels.
//!
//! The correlation between two encoded points is the product of a continuous
//! factor, an integer/ordinal factor and a categorical factor. Continuous and
//! integer factors are squared-exponential in the scaled coordinates; the
//! integer factor is the same kernel applied to scaled level indices.
//! Categorical factors use either continuous relaxation (the squared
//! exponential applied to the one-hot block, one length-scale per level) or
//! the Gower distance (`exp(-θ·[c1 ≠ c2])`).

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{DesignSpace, VarKind};

pub const DEFAULT_NUGGET: f64 = 1e-10;
/// Largest nugget tried by [`factor_corr`] before giving up.
pub const MAX_NUGGET: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalKernel {
    #[default]
    #[serde(alias = "cr")]
    ContinuousRelaxation,
    #[serde(alias = "gd")]
    GowerDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    #[serde(default)]
    pub categorical: CategoricalKernel,
    #[serde(default = "default_nugget")]
    pub nugget: f64,
}

fn default_nugget() -> f64 {
    DEFAULT_NUGGET
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { categorical: CategoricalKernel::default(), nugget: DEFAULT_NUGGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Continuous,
    Integer,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// One scaled coordinate.
    Scaled,
    /// One-hot block, one θ per level.
    Relaxed,
    /// One-hot block, a single θ on the mismatch indicator.
    Gower,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub factor: Factor,
    pub kind: BlockKind,
    /// Columns of the encoded vector.
    pub cols: Range<usize>,
    /// Slice of the flat hyperparameter vector.
    pub theta: Range<usize>,
}

/// Map from variables to slices of the encoded input and of Θ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaLayout {
    blocks: Vec<Block>,
    input_dim: usize,
    theta_len: usize,
}

impl ThetaLayout {
    pub fn new(space: &DesignSpace, categorical: CategoricalKernel) -> Self {
        let mut blocks = Vec::with_capacity(space.len());
        let mut t = 0;
        for (i, var) in space.variables().iter().enumerate() {
            let o = space.encoded_offset(i);
            let w = var.kind.encoded_width();
            let (factor, kind, nt) = match (&var.kind, categorical) {
                (VarKind::Continuous { .. }, _) => (Factor::Continuous, BlockKind::Scaled, 1),
                (VarKind::Integer { .. } | VarKind::Ordinal { .. }, _) => (Factor::Integer, BlockKind::Scaled, 1),
                (VarKind::Categorical { .. }, CategoricalKernel::ContinuousRelaxation) => {
                    (Factor::Categorical, BlockKind::Relaxed, w)
                }
                (VarKind::Categorical { .. }, CategoricalKernel::GowerDistance) => {
                    (Factor::Categorical, BlockKind::Gower, 1)
                }
            };
            blocks.push(Block { factor, kind, cols: o..o + w, theta: t..t + nt });
            t += nt;
        }
        Self { blocks, input_dim: space.encoded_dim(), theta_len: t }
    }

    /// Layout for purely continuous inputs of dimension `dim`.
    pub fn continuous(dim: usize) -> Self {
        Self {
            blocks: (0..dim)
                .map(|d| Block { factor: Factor::Continuous, kind: BlockKind::Scaled, cols: d..d + 1, theta: d..d + 1 })
                .collect(),
            input_dim: dim,
            theta_len: dim,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn theta_len(&self) -> usize {
        self.theta_len
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta_len {
            return Err(Error::Dimension { what: "theta", expected: self.theta_len, got: theta.len() });
        }
        check_positive(theta)
    }

    pub fn check_input(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.input_dim {
            return Err(Error::Dimension { what: "encoded point", expected: self.input_dim, got: w.len() });
        }
        Ok(())
    }
}

fn check_positive(theta: &[f64]) -> Result<()> {
    if let Some(t) = theta.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::Kernel(format!("length-scale weights must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Squared-exponential kernel `exp(-Σ θ_d (x1_d - x2_d)²)`.
pub fn k_cont(x1: &[f64], x2: &[f64], theta: &[f64]) -> Result<f64> {
    if x1.len() != x2.len() || x1.len() != theta.len() {
        return Err(Error::Dimension {
            what: "continuous kernel inputs",
            expected: theta.len(),
            got: x1.len().max(x2.len()),
        });
    }
    check_positive(theta)?;
    Ok(se(x1, x2, theta))
}

#[inline]
fn se(x1: &[f64], x2: &[f64], theta: &[f64]) -> f64 {
    let s: f64 = x1
        .iter()
        .zip(x2)
        .zip(theta)
        .map(|((a, b), t)| {
            let d = a - b;
            t * d * d
        })
        .sum();
    (-s).exp()
}

/// Continuous-relaxation kernel between two levels of a categorical variable
/// with `theta_block.len()` levels.
pub fn k_cat_cr(c1: usize, c2: usize, theta_block: &[f64]) -> Result<f64> {
    let n = theta_block.len();
    if c1 >= n || c2 >= n {
        return Err(Error::OutOfRange {
            name: "categorical level".into(),
            detail: format!("levels {c1}, {c2} with {n} levels"),
        });
    }
    check_positive(theta_block)?;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    a[c1] = 1.0;
    b[c2] = 1.0;
    Ok(se(&a, &b, theta_block))
}

/// Gower-distance kernel `exp(-θ·[c1 ≠ c2])` for a variable with `n_levels` levels.
pub fn k_cat_gd(c1: usize, c2: usize, n_levels: usize, theta: f64) -> Result<f64> {
    if c1 >= n_levels || c2 >= n_levels {
        return Err(Error::OutOfRange {
            name: "categorical level".into(),
            detail: format!("levels {c1}, {c2} with {n_levels} levels"),
        });
    }
    check_positive(&[theta])?;
    Ok(if c1 == c2 { 1.0 } else { (-theta).exp() })
}

fn argmax(block: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in block.iter().enumerate() {
        if *v > block[best] {
            best = i;
        }
    }
    best
}

/// Product kernel over the variable partition described by `layout`.
pub fn k_mixed(w1: &[f64], w2: &[f64], layout: &ThetaLayout, theta: &[f64]) -> Result<f64> {
    layout.check_input(w1)?;
    layout.check_input(w2)?;
    layout.check_theta(theta)?;
    Ok(k_mixed_unchecked(w1, w2, layout, theta))
}

pub(crate) fn k_mixed_unchecked(w1: &[f64], w2: &[f64], layout: &ThetaLayout, theta: &[f64]) -> f64 {
    // exponents of the three factors
    let mut s = [0.0f64; 3];
    for b in &layout.blocks {
        let slot = match b.factor {
            Factor::Continuous => 0,
            Factor::Integer => 1,
            Factor::Categorical => 2,
        };
        match b.kind {
            BlockKind::Scaled | BlockKind::Relaxed => {
                for (k, c) in b.cols.clone().enumerate() {
                    let d = w1[c] - w2[c];
                    s[slot] += theta[b.theta.start + k] * d * d;
                }
            }
            BlockKind::Gower => {
                if argmax(&w1[b.cols.clone()]) != argmax(&w2[b.cols.clone()]) {
                    s[slot] += theta[b.theta.start];
                }
            }
        }
    }
    (-s[0]).exp() * (-s[1]).exp() * (-s[2]).exp()
}

/// Correlation matrix `R[r][s] = k(w_r, w_s)` with `nugget` added to the diagonal.
pub fn corr_matrix(w: &[Vec<f64>], layout: &ThetaLayout, theta: &[f64], nugget: f64) -> Result<DMatrix<f64>> {
    if w.is_empty() {
        return Err(Error::InvalidArgument("correlation matrix needs at least one point".into()));
    }
    if !(nugget >= 0.0) {
        return Err(Error::Kernel(format!("nugget must be nonnegative, got {nugget}")));
    }
    layout.check_theta(theta)?;
    for p in w {
        layout.check_input(p)?;
    }
    Ok(corr_matrix_unchecked(w, layout, theta, nugget))
}

pub(crate) fn corr_matrix_unchecked(w: &[Vec<f64>], layout: &ThetaLayout, theta: &[f64], nugget: f64) -> DMatrix<f64> {
    let n = w.len();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = 1.0 + nugget;
        for j in 0..i {
            let k = k_mixed_unchecked(&w[i], &w[j], layout, theta);
            r[(i, j)] = k;
            r[(j, i)] = k;
        }
    }
    r
}

/// Cross-correlation vector `r(w) = [k(w, w_1), ..., k(w, w_n)]`.
pub fn corr_vector(w: &[f64], doe: &[Vec<f64>], layout: &ThetaLayout, theta: &[f64]) -> Vec<f64> {
    doe.iter().map(|p| k_mixed_unchecked(w, p, layout, theta)).collect()
}

/// Builds and Cholesky-factors `R(Θ)`, multiplying the nugget by 10 on each
/// failure up to [`MAX_NUGGET`]. Returns the factor and the nugget that worked.
pub fn factor_corr(
    w: &[Vec<f64>],
    layout: &ThetaLayout,
    theta: &[f64],
    nugget: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let base = corr_matrix(w, layout, theta, 0.0)?;
    let mut nug = nugget;
    loop {
        let mut r = base.clone();
        for i in 0..r.nrows() {
            r[(i, i)] = 1.0 + nug;
        }
        if let Some(ch) = r.cholesky() {
            return Ok((ch, nug));
        }
        if nug >= MAX_NUGGET {
            return Err(Error::Factorization(format!(
                "correlation matrix is singular even with nugget {nug:e} (duplicate design points?)"
            )));
        }
        nug = if nug <= 0.0 { DEFAULT_NUGGET } else { (nug * 10.0).min(MAX_NUGGET) };
    }
}
