//! Rectangular (E\[F\], ρ) sweeps: the unit of CLI output.

use crate::error::{Error, Result};
use serde::Serialize;

/// One grid cell. A NaN value marks a per-cell failure; the surrounding
/// sweep is still returned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub ef: f64,
    pub rho: f64,
    pub value: f64,
}

/// A sweep over (E\[F\], ρ), ordered by (ef, rho).
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
}

impl GridResult {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.value.is_nan()).count()
    }
}

/// `steps` values spaced evenly on [min, max]; `steps == 1` requires
/// min == max.
pub fn lin_spaced(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !min.is_finite() || !max.is_finite() || min > max {
        return Err(Error::InvalidParam(format!("invalid range [{min}, {max}]")));
    }
    match steps {
        0 => Err(Error::InvalidParam("steps must be >= 1".to_string())),
        1 => {
            if min == max {
                Ok(vec![min])
            } else {
                Err(Error::InvalidParam(
                    "steps = 1 requires min == max".to_string(),
                ))
            }
        }
        _ => {
            let h = (max - min) / (steps - 1) as f64;
            let mut v: Vec<f64> = (0..steps).map(|i| min + i as f64 * h).collect();
            v[0] = min;
            v[steps - 1] = max;
            Ok(v)
        }
    }
}

/// `steps` values spaced evenly in log10 on [min, max]; requires min > 0.
pub fn log_spaced(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) {
        return Err(Error::InvalidParam(format!(
            "log spacing requires min > 0, got {min}"
        )));
    }
    let logs = lin_spaced(min.log10(), max.log10(), steps)?;
    let mut v: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
    v[0] = min;
    let n = v.len();
    v[n - 1] = max;
    Ok(v)
}
