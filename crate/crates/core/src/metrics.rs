//! Regression error metrics and parameter efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance factor for [`parameter_efficiency`].
pub const DEFAULT_ZETA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub mse: f64,
    pub rmse: f64,
    /// Percent.
    pub mape: f64,
    pub n: usize,
}

fn check(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::Dimension { what: "metric inputs", expected: y.len(), got: yhat.len() });
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one sample".into()));
    }
    Ok(())
}

pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    mse(y, yhat).map(f64::sqrt)
}

/// Mean absolute percentage error, in percent. Errors on a zero true value.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat)?;
    let mut s = 0.0;
    for (i, (a, b)) in y.iter().zip(yhat).enumerate() {
        if *a == 0.0 {
            return Err(Error::Data(format!("MAPE undefined: true value at index {i} is zero")));
        }
        s += ((a - b) / a).abs();
    }
    Ok(100.0 * s / y.len() as f64)
}

/// `max(1 - ζ·mape/100, 0) / n_params`, with `mape_percent` in percent.
pub fn parameter_efficiency(mape_percent: f64, n_params: usize, zeta: f64) -> Result<f64> {
    if n_params == 0 {
        return Err(Error::InvalidArgument("n_params must be >= 1".into()));
    }
    if !(zeta > 0.0) {
        return Err(Error::InvalidArgument(format!("zeta must be positive, got {zeta}")));
    }
    Ok((1.0 - zeta * mape_percent / 100.0).max(0.0) / n_params as f64)
}

impl MetricBundle {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        let mse = mse(y, yhat)?;
        Ok(Self { mse, rmse: mse.sqrt(), mape: mape(y, yhat)?, n: y.len() })
    }
}
