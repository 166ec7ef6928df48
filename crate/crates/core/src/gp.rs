//! Ordinary Kriging surrogate.
//!
//! The trend `μ̂` and process variance `σ̂²` are profiled out of the Gaussian
//! likelihood in closed form (generalised least squares), leaving only the
//! kernel weights Θ to optimise. Θ is searched in `log10` space by a
//! multi-start Nelder–Mead, bounded to `[1e-6, 1e2]`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernel::{corr_vector, factor_corr, KernelConfig, ThetaLayout};

pub const LOG10_THETA_MIN: f64 = -6.0;
pub const LOG10_THETA_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub n_starts: usize,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { n_starts: 10, max_iter: 100 }
    }
}

/// Fitted surrogate. Immutable; predictions are pure.
#[derive(Debug, Clone)]
pub struct GpModel {
    layout: ThetaLayout,
    config: KernelConfig,
    w: Vec<Vec<f64>>,
    y: Vec<f64>,
    theta: Vec<f64>,
    /// Nugget actually used (may exceed `config.nugget` after escalation).
    nugget: f64,
    l: DMatrix<f64>,
    mu_hat: f64,
    sigma2_hat: f64,
    /// `R⁻¹ (y - 1 μ̂)`
    alpha: DVector<f64>,
    /// `L⁻¹ 1`
    l_inv_one: DVector<f64>,
    /// `1ᵀ R⁻¹ 1`
    one_r_one: f64,
    log_likelihood: f64,
}

struct Profile {
    l: DMatrix<f64>,
    nugget: f64,
    mu_hat: f64,
    sigma2_hat: f64,
    alpha: DVector<f64>,
    l_inv_one: DVector<f64>,
    one_r_one: f64,
    log_likelihood: f64,
}

fn variance_floor(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    1e-12 * (1.0 + var)
}

fn check_data(w: &[Vec<f64>], y: &[f64], layout: &ThetaLayout, min_points: usize) -> Result<()> {
    if w.len() != y.len() {
        return Err(Error::Dimension { what: "DoE inputs vs outputs", expected: w.len(), got: y.len() });
    }
    if w.len() < min_points {
        return Err(Error::InvalidArgument(format!("need at least {min_points} design points, got {}", w.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite objective value".into()));
    }
    for p in w {
        layout.check_input(p)?;
    }
    Ok(())
}

fn profile(w: &[Vec<f64>], y: &[f64], layout: &ThetaLayout, theta: &[f64], nugget: f64) -> Result<Profile> {
    layout.check_theta(theta)?;
    let n = y.len();
    let (chol, nug) = factor_corr(w, layout, theta, nugget)?;
    let l = chol.l();
    let ones = DVector::from_element(n, 1.0);
    let yv = DVector::from_column_slice(y);

    let l_inv_one =
        l.solve_lower_triangular(&ones).ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let l_inv_y =
        l.solve_lower_triangular(&yv).ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
    let one_r_one = l_inv_one.dot(&l_inv_one);
    let mu_hat = l_inv_one.dot(&l_inv_y) / one_r_one;
    let resid = &l_inv_y - &l_inv_one * mu_hat;
    let sigma2_raw = resid.dot(&resid) / n as f64;
    let sigma2_hat = sigma2_raw.max(variance_floor(y));
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let nf = n as f64;
    let log_likelihood =
        -0.5 * nf * (2.0 * std::f64::consts::PI * sigma2_hat).ln() - 0.5 * log_det - 0.5 * nf * sigma2_raw / sigma2_hat;
    let alpha = chol.solve(&(yv - &ones * mu_hat));
    Ok(Profile { l, nugget: nug, mu_hat, sigma2_hat, alpha, l_inv_one, one_r_one, log_likelihood })
}

/// Concentrated log-likelihood of Θ:
/// `-n/2·ln(2π σ̂²) - ½ ln|R| - n/2`, with `μ̂`, `σ̂²` the GLS estimates.
pub fn log_likelihood(
    w: &[Vec<f64>],
    y: &[f64],
    layout: &ThetaLayout,
    theta: &[f64],
    config: &KernelConfig,
) -> Result<f64> {
    check_data(w, y, layout, 2)?;
    Ok(profile(w, y, layout, theta, config.nugget)?.log_likelihood)
}

/// Standardises `y` so that the search sees the same objective for shifted
/// or rescaled data. Returns the standardised values and `ln(scale)`.
fn standardise(y: &[f64]) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sd = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    (y.iter().map(|v| (v - mean) / scale).collect(), scale.ln())
}

struct Objective<'a> {
    w: &'a [Vec<f64>],
    ys: &'a [f64],
    layout: &'a ThetaLayout,
    nugget: f64,
}

impl Objective<'_> {
    /// Negative log-likelihood at `log10 θ` (clamped to the box), `+∞` on failure.
    fn cost(&self, log_theta: &[f64]) -> f64 {
        let theta: Vec<f64> = log_theta.iter().map(|l| 10f64.powf(l.clamp(LOG10_THETA_MIN, LOG10_THETA_MAX))).collect();
        match profile(self.w, self.ys, self.layout, &theta, self.nugget) {
            Ok(p) if p.log_likelihood.is_finite() => -p.log_likelihood,
            _ => f64::INFINITY,
        }
    }
}

fn clamp_box(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(LOG10_THETA_MIN, LOG10_THETA_MAX);
    }
}

/// Box-projected Nelder–Mead. Returns the best vertex and its cost.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut v = x0.to_vec();
        // step towards the interior of the box
        v[i] += if v[i] + step <= LOG10_THETA_MAX { step } else { -step };
        clamp_box(&mut v);
        simplex.push(v);
    }
    let mut costs: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=d).collect();
        idx.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        costs = idx.iter().map(|&i| costs[i]).collect();

        if costs[0].is_finite() && (costs[d] - costs[0]).abs() <= 1e-10 * (1.0 + costs[0].abs()) {
            break;
        }

        let mut centroid = vec![0.0; d];
        for v in &simplex[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / d as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&simplex[d]).map(|(c, w)| c + t * (w - c)).collect();
            clamp_box(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < costs[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[d] = xe;
                costs[d] = fe;
            } else {
                simplex[d] = xr;
                costs[d] = fr;
            }
            continue;
        }
        if fr < costs[d - 1] {
            simplex[d] = xr;
            costs[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < costs[d] {
            let xc = along(-0.5);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < costs[d].min(fr) {
            simplex[d] = xc;
            costs[d] = fc;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=d {
            let mut v: Vec<f64> = simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            clamp_box(&mut v);
            costs[i] = f(&v);
            simplex[i] = v;
        }
    }
    let mut best = 0;
    for i in 1..costs.len() {
        if costs[i] < costs[best] {
            best = i;
        }
    }
    (simplex[best].clone(), costs[best])
}

impl GpModel {
    /// Fits Θ by maximum likelihood and conditions on the data.
    pub fn fit(w: Vec<Vec<f64>>, y: Vec<f64>, layout: ThetaLayout, config: KernelConfig, seed: u64) -> Result<Self> {
        Self::fit_with(w, y, layout, config, seed, FitOptions::default())
    }

    pub fn fit_with(
        w: Vec<Vec<f64>>,
        y: Vec<f64>,
        layout: ThetaLayout,
        config: KernelConfig,
        seed: u64,
        options: FitOptions,
    ) -> Result<Self> {
        check_data(&w, &y, &layout, 2)?;
        let (ys, _) = standardise(&y);
        let obj = Objective { w: &w, ys: &ys, layout: &layout, nugget: config.nugget };
        let d = layout.theta_len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for start in 0..options.n_starts.max(1) {
            let x0: Vec<f64> = if start == 0 {
                vec![0.0; d]
            } else {
                (0..d).map(|_| rng.random_range(LOG10_THETA_MIN..=LOG10_THETA_MAX)).collect()
            };
            let (x, c) = nelder_mead(&|x| obj.cost(x), &x0, 1.0, options.max_iter);
            // strict improvement only: ties go to the lowest start index
            if c.is_finite() && best.as_ref().is_none_or(|(_, bc)| c < *bc) {
                best = Some((x, c));
            }
        }
        let (log_theta, _) = best.ok_or_else(|| {
            Error::Factorization("correlation matrix could not be factored for any multi-start point".into())
        })?;
        let theta: Vec<f64> = log_theta.iter().map(|l| 10f64.powf(l.clamp(LOG10_THETA_MIN, LOG10_THETA_MAX))).collect();
        Self::with_theta(w, y, layout, config, theta)
    }

    /// Conditions on the data with fixed Θ (no likelihood search). Works for a
    /// single design point.
    pub fn with_theta(
        w: Vec<Vec<f64>>,
        y: Vec<f64>,
        layout: ThetaLayout,
        config: KernelConfig,
        theta: Vec<f64>,
    ) -> Result<Self> {
        check_data(&w, &y, &layout, 1)?;
        let p = profile(&w, &y, &layout, &theta, config.nugget)?;
        Ok(Self {
            layout,
            config,
            w,
            y,
            theta,
            nugget: p.nugget,
            l: p.l,
            mu_hat: p.mu_hat,
            sigma2_hat: p.sigma2_hat,
            alpha: p.alpha,
            l_inv_one: p.l_inv_one,
            one_r_one: p.one_r_one,
            log_likelihood: p.log_likelihood,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn layout(&self) -> &ThetaLayout {
        &self.layout
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.w
    }

    pub fn outputs(&self) -> &[f64] {
        &self.y
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    /// Lower Cholesky factor of `R(Θ*)` (nugget included).
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    fn r_of(&self, w: &[f64]) -> DVector<f64> {
        DVector::from_vec(corr_vector(w, &self.w, &self.layout, &self.theta))
    }

    /// `μ̂ + r(w)ᵀ R⁻¹ (y - 1μ̂)`.
    pub fn predict_mean(&self, w: &[f64]) -> f64 {
        let r = self.r_of(w);
        self.mu_hat + r.dot(&self.alpha)
    }

    /// `σ̂² [1 - rᵀR⁻¹r + (1 - 1ᵀR⁻¹r)² / (1ᵀR⁻¹1)]` before clamping at zero.
    pub fn predict_var_unclamped(&self, w: &[f64]) -> f64 {
        let r = self.r_of(w);
        self.var_from_r(&r)
    }

    fn var_from_r(&self, r: &DVector<f64>) -> f64 {
        let v = self.l.solve_lower_triangular(r).expect("Cholesky factor has a positive diagonal");
        let r_r = v.dot(&v);
        let one_r = self.l_inv_one.dot(&v);
        let u = 1.0 - one_r;
        self.sigma2_hat * (1.0 - r_r + u * u / self.one_r_one)
    }

    pub fn predict_var(&self, w: &[f64]) -> f64 {
        self.predict_var_unclamped(w).max(0.0)
    }

    /// Mean and clamped variance from a single correlation vector.
    pub fn predict(&self, w: &[f64]) -> (f64, f64) {
        let r = self.r_of(w);
        (self.mu_hat + r.dot(&self.alpha), self.var_from_r(&r).max(0.0))
    }
}
