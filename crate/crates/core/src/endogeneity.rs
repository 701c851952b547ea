//! Calibration of the endogeneity parameter ρ from published study
//! outputs, and the bounding arguments that cap it: effect-size
//! restrictions on the causal parameter and measurement-error
//! reliability.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Published regression outputs for one study specification. The first
/// five fields are required for ρ̂ recovery; the rest enable the
/// approximations and bounds when present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub beta_iv: f64,
    pub se_iv: f64,
    pub pi_hat: f64,
    pub sd_pi: f64,
    pub sd_delta: f64,
    #[serde(default)]
    pub beta_ols: Option<f64>,
    #[serde(default)]
    pub sd_d: Option<f64>,
    #[serde(default)]
    pub sd_y: Option<f64>,
    #[serde(default)]
    pub n: Option<f64>,
    #[serde(default)]
    pub r2p: Option<f64>,
    #[serde(default)]
    pub reliability: Option<f64>,
}

impl StudySummary {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("se_iv", self.se_iv),
            ("sd_pi", self.sd_pi),
            ("sd_delta", self.sd_delta),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(r) = self.reliability {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "reliability must lie in (0, 1], got {r}"
                )));
            }
        }
        for (name, v) in [("sd_d", self.sd_d), ("sd_y", self.sd_y)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::InvalidParam(format!(
                        "{name} must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Recovers the reduced-form covariance σ_δπ from the IV standard error:
/// (σ_π² β̂² - π̂² σ̂_IV² + σ_δ²)/(2 β̂).
pub fn recover_cov_rf(s: &StudySummary) -> Result<f64> {
    s.validate()?;
    if s.beta_iv == 0.0 {
        return Err(Error::Degenerate(
            "beta_iv = 0: covariance recovery divides by the IV estimate; \
             use the OVB approximation rho_ovb_approx instead"
                .to_string(),
        ));
    }
    let num = s.sd_pi * s.sd_pi * s.beta_iv * s.beta_iv - s.pi_hat * s.pi_hat * s.se_iv * s.se_iv
        + s.sd_delta * s.sd_delta;
    Ok(num / (2.0 * s.beta_iv))
}

/// Sampling noise can push the plug-in ρ̂ slightly out of [-1, 1]; this
/// much overshoot is clamped, more is an inconsistency error.
const RHO_CLAMP_SLACK: f64 = 0.05;

/// Plug-in endogeneity estimate
/// ρ̂ = σ_π/(|π̂| σ̂_IV) · (σ_δπ/σ_π² - β̂_IV), with σ_δπ recovered from
/// the published standard errors. Values beyond 1 + 0.05 in magnitude
/// are rejected as inconsistent inputs; smaller overshoot is clamped.
pub fn estimate_rho(s: &StudySummary) -> Result<f64> {
    let cov = recover_cov_rf(s)?;
    if s.pi_hat == 0.0 {
        return Err(Error::Degenerate(
            "pi_hat = 0: endogeneity estimate divides by the first stage".to_string(),
        ));
    }
    let rho = s.sd_pi / (s.pi_hat.abs() * s.se_iv) * (cov / (s.sd_pi * s.sd_pi) - s.beta_iv);
    if rho.abs() > 1.0 + RHO_CLAMP_SLACK {
        return Err(Error::InconsistentInput(format!(
            "recovered rho = {rho:.4} lies outside [-1.05, 1.05]; \
             the supplied estimates are mutually inconsistent"
        )));
    }
    Ok(rho.clamp(-1.0, 1.0))
}

/// OVB approximation ρ ≈ (σ_D/σ_Y)(β_OLS - β).
pub fn rho_ovb_approx(sd_d: f64, sd_y: f64, beta_ols: f64, beta: f64) -> Result<f64> {
    if !(sd_y > 0.0) {
        return Err(Error::InvalidParam(format!(
            "sd_y must be positive, got {sd_y}"
        )));
    }
    if !(sd_d > 0.0) {
        return Err(Error::InvalidParam(format!(
            "sd_d must be positive, got {sd_d}"
        )));
    }
    Ok(sd_d / sd_y * (beta_ols - beta))
}

/// Largest |ρ| over β ∈ [beta_low, beta_high] of the OVB approximation:
/// sd_ratio · max(|β_OLS - β_low|, |β_OLS - β_high|).
pub fn rho_bound_over_beta_range(
    sd_ratio: f64,
    beta_ols: f64,
    beta_low: f64,
    beta_high: f64,
) -> Result<f64> {
    if !(sd_ratio > 0.0) {
        return Err(Error::InvalidParam(format!(
            "sd ratio must be positive, got {sd_ratio}"
        )));
    }
    if beta_low > beta_high {
        return Err(Error::InvalidParam(format!(
            "beta range [{beta_low}, {beta_high}] is empty"
        )));
    }
    Ok(sd_ratio
        * (beta_ols - beta_low)
            .abs()
            .max((beta_ols - beta_high).abs()))
}

/// Measurement-error bound |ρ| ≤ sqrt((1 - r)/(1 - R²_p)) from the
/// reliability r of the mismeasured regressor.
pub fn rho_bound_measurement_error(reliability: f64, r2p: f64) -> Result<f64> {
    if !(reliability > 0.0 && reliability <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "reliability must lie in (0, 1], got {reliability}"
        )));
    }
    if !(0.0..1.0).contains(&r2p) {
        return Err(Error::Domain(format!(
            "partial R^2 must lie in [0, 1), got {r2p}"
        )));
    }
    Ok(((1.0 - reliability) / (1.0 - r2p)).sqrt())
}

/// The two R-squared-like terms whose difference is the OVB
/// approximation: ((σ_D/σ_Y)β_OLS, (σ_D/σ_Y)β).
pub fn rho_r2_decomposition(sd_d: f64, sd_y: f64, beta_ols: f64, beta: f64) -> Result<(f64, f64)> {
    if !(sd_y > 0.0) || !(sd_d > 0.0) {
        return Err(Error::InvalidParam(
            "standard deviations must be positive".to_string(),
        ));
    }
    Ok((sd_d / sd_y * beta_ols, sd_d / sd_y * beta))
}

/// One calibration-report row. Quantities whose inputs are missing are
/// NaN, with an explanatory note.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationRow {
    pub study: usize,
    pub rho_hat: f64,
    pub rho_ovb: f64,
    pub ef_hat: f64,
    pub rho_bound_reliability: f64,
    #[serde(skip)]
    pub notes: Vec<String>,
}

/// Builds the per-study calibration report: ρ̂, the OVB approximation
/// (with β̂_IV standing in for β), E\[F\]-hat = π̂²/σ_π² + 1, and the
/// measurement-error bound where reliability data exists.
pub fn calibration_report(studies: &[StudySummary]) -> Vec<CalibrationRow> {
    studies
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut notes = Vec::new();
            let rho_hat = match estimate_rho(s) {
                Ok(r) => {
                    if r.abs() == 1.0 {
                        notes.push("rho_hat clamped to +/-1 (inputs overshoot slightly)".into());
                    }
                    r
                }
                Err(e) => {
                    notes.push(format!("rho_hat unavailable: {e}"));
                    f64::NAN
                }
            };
            let rho_ovb = match (s.sd_d, s.sd_y, s.beta_ols) {
                (Some(sd_d), Some(sd_y), Some(beta_ols)) => {
                    match rho_ovb_approx(sd_d, sd_y, beta_ols, s.beta_iv) {
                        Ok(v) => v,
                        Err(e) => {
                            notes.push(format!("rho_ovb unavailable: {e}"));
                            f64::NAN
                        }
                    }
                }
                _ => {
                    notes.push("rho_ovb disabled: needs sd_d, sd_y, beta_ols".into());
                    f64::NAN
                }
            };
            let ef_hat = s.pi_hat * s.pi_hat / (s.sd_pi * s.sd_pi) + 1.0;
            let bound_rel = match (s.reliability, s.r2p) {
                (Some(r), Some(r2p)) => match rho_bound_measurement_error(r, r2p) {
                    Ok(v) => v,
                    Err(e) => {
                        notes.push(format!("reliability bound unavailable: {e}"));
                        f64::NAN
                    }
                },
                _ => {
                    notes.push("reliability bound disabled: needs reliability, r2p".into());
                    f64::NAN
                }
            };
            CalibrationRow {
                study: i,
                rho_hat,
                rho_ovb,
                ef_hat,
                rho_bound_reliability: bound_rel,
                notes,
            }
        })
        .collect()
}

/// Per-record read: malformed or invalid records become row-level error
/// strings instead of failing the whole file, so a calibration run can
/// report what it can and flag the rest.
pub fn read_study_records(path: &Path) -> Result<Vec<std::result::Result<StudySummary, String>>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let validated = |s: StudySummary| -> std::result::Result<StudySummary, String> {
        match s.validate() {
            Ok(()) => Ok(s),
            Err(e) => Err(e.to_string()),
        }
    };
    match ext.as_str() {
        "json" => {
            let text = std::fs::read_to_string(path)?;
            let values: Vec<serde_json::Value> = serde_json::from_str(&text)?;
            Ok(values
                .into_iter()
                .map(|v| {
                    serde_json::from_value::<StudySummary>(v)
                        .map_err(|e| e.to_string())
                        .and_then(validated)
                })
                .collect())
        }
        "csv" => {
            let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
            Ok(reader
                .deserialize::<StudySummary>()
                .map(|rec| rec.map_err(|e| e.to_string()).and_then(validated))
                .collect())
        }
        other => Err(Error::Parse(format!(
            "unsupported study file extension '{other}' (expected .csv or .json)"
        ))),
    }
}

/// Reads study summaries from a CSV file (header row with the exact
/// field names; empty cells for missing optionals) or a JSON array of
/// objects, dispatched on the file extension.
pub fn read_study_summaries(path: &Path) -> Result<Vec<StudySummary>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let rows: Vec<StudySummary> = match ext.as_str() {
        "json" => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        "csv" => {
            let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
            let mut out = Vec::new();
            for rec in reader.deserialize() {
                let row: StudySummary = rec?;
                out.push(row);
            }
            out
        }
        other => {
            return Err(Error::Parse(format!(
                "unsupported study file extension '{other}' (expected .csv or .json)"
            )))
        }
    };
    for (i, r) in rows.iter().enumerate() {
        r.validate()
            .map_err(|e| Error::Parse(format!("study record {i}: {e}")))?;
    }
    Ok(rows)
}
