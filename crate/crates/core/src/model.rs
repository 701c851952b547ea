//! The normal reduced-form model, the (E\[F\], ρ) design space, and the
//! maps between them.
//!
//! The joint law of the reduced-form and first-stage estimates is
//! N((πβ, π), Σ) with Σ known. Distributions of every test statistic and
//! scaled bias depend on the five raw parameters only through the pair
//! (E\[F\], ρ), so a [`DesignPoint`] indexes all theoretical quantities and
//! [`canonical_model`] picks one representative [`ModelParams`] per point
//! for the Monte Carlo oracle.

use crate::error::{Error, Result};
use serde::Serialize;

/// Full parameterization of the normal model: structural coefficient β,
/// first stage π, and the known covariance matrix of (δ̂, π̂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Structural coefficient β (outcome units per treatment unit).
    pub beta: f64,
    /// First-stage coefficient π (treatment units per instrument unit).
    pub pi: f64,
    /// Standard deviation σ_δ of the reduced-form estimate.
    pub sd_delta: f64,
    /// Standard deviation σ_π of the first-stage estimate.
    pub sd_pi: f64,
    /// Covariance σ_δπ between the two estimates.
    pub cov_rf: f64,
}

impl ModelParams {
    pub fn new(beta: f64, pi: f64, sd_delta: f64, sd_pi: f64, cov_rf: f64) -> Result<Self> {
        let m = ModelParams {
            beta,
            pi,
            sd_delta,
            sd_pi,
            cov_rf,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta", self.beta),
            ("pi", self.pi),
            ("sd_delta", self.sd_delta),
            ("sd_pi", self.sd_pi),
            ("cov_rf", self.cov_rf),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if self.sd_delta <= 0.0 || self.sd_pi <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "standard deviations must be positive, got sd_delta={}, sd_pi={}",
                self.sd_delta, self.sd_pi
            )));
        }
        if self.cov_rf.abs() >= self.sd_delta * self.sd_pi {
            return Err(Error::InvalidParam(format!(
                "covariance {} violates positive definiteness (|cov| < {})",
                self.cov_rf,
                self.sd_delta * self.sd_pi
            )));
        }
        Ok(())
    }

    /// Wraps a realized (δ̂, π̂) together with this model's covariance.
    pub fn observe(&self, delta_hat: f64, pi_hat: f64) -> ReducedFormDraw {
        ReducedFormDraw {
            delta_hat,
            pi_hat,
            sd_delta: self.sd_delta,
            sd_pi: self.sd_pi,
            cov_rf: self.cov_rf,
        }
    }
}

/// The two free parameters (E\[F\], ρ), stored through λ = sqrt(E\[F\] - 1)
/// so that the canonical-model round trip is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint {
    lambda: f64,
    rho: f64,
}

impl DesignPoint {
    /// From the population first-stage F (≥ 1) and endogeneity (|ρ| < 1).
    pub fn new(ef: f64, rho: f64) -> Result<Self> {
        if !ef.is_finite() || ef < 1.0 {
            return Err(Error::InvalidParam(format!("E[F] must be >= 1, got {ef}")));
        }
        Self::from_lambda((ef - 1.0).sqrt(), rho)
    }

    /// From the first-stage mean t-ratio λ = π/σ_π ≥ 0.
    pub fn from_lambda(lambda: f64, rho: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidParam(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        if !rho.is_finite() || rho.abs() >= 1.0 {
            return Err(Error::InvalidParam(format!(
                "endogeneity must satisfy |rho| < 1, got {rho}"
            )));
        }
        Ok(DesignPoint { lambda, rho })
    }

    /// Population first-stage F-statistic, λ² + 1.
    pub fn ef(&self) -> f64 {
        self.lambda * self.lambda + 1.0
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Transformed endogeneity s = ρ/sqrt(1 - ρ²).
    pub fn s(&self) -> f64 {
        self.rho / (1.0 - self.rho * self.rho).sqrt()
    }
}

/// A realized pair (δ̂, π̂) with its known covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedFormDraw {
    pub delta_hat: f64,
    pub pi_hat: f64,
    pub sd_delta: f64,
    pub sd_pi: f64,
    pub cov_rf: f64,
}

impl ReducedFormDraw {
    pub fn new(
        delta_hat: f64,
        pi_hat: f64,
        sd_delta: f64,
        sd_pi: f64,
        cov_rf: f64,
    ) -> Result<Self> {
        if sd_delta <= 0.0 || sd_pi <= 0.0 || cov_rf.abs() >= sd_delta * sd_pi {
            return Err(Error::InvalidParam(
                "draw covariance matrix must be positive definite".to_string(),
            ));
        }
        Ok(ReducedFormDraw {
            delta_hat,
            pi_hat,
            sd_delta,
            sd_pi,
            cov_rf,
        })
    }

    /// First-stage t-statistic t₁ = π̂/σ_π.
    pub fn t1(&self) -> f64 {
        self.pi_hat / self.sd_pi
    }
}

/// Maps a full model to its (E\[F\], ρ) design point.
///
/// E\[F\] = π²/σ_π² + 1 and ρ is the correlation between δ̂ - π̂β and π̂.
pub fn design_from_model(m: &ModelParams) -> Result<DesignPoint> {
    m.validate()?;
    // Var(δ̂ - β π̂); positive whenever Σ is positive definite.
    let var_ar =
        m.sd_delta * m.sd_delta - 2.0 * m.beta * m.cov_rf + m.sd_pi * m.sd_pi * m.beta * m.beta;
    if var_ar <= 0.0 {
        return Err(Error::InvalidParam(
            "degenerate residual variance: covariance matrix not positive definite".to_string(),
        ));
    }
    let rho = m.sd_pi / var_ar.sqrt() * (m.cov_rf / (m.sd_pi * m.sd_pi) - m.beta);
    let lambda = (m.pi / m.sd_pi).abs();
    DesignPoint::from_lambda(lambda, rho)
}

/// The representative model with β = 0, σ_δ = σ_π = 1, so that π = λ and
/// σ_δπ = ρ. [`design_from_model`] inverts it exactly.
pub fn canonical_model(d: &DesignPoint) -> ModelParams {
    ModelParams {
        beta: 0.0,
        pi: d.lambda(),
        sd_delta: 1.0,
        sd_pi: 1.0,
        cov_rf: d.rho(),
    }
}

/// E\[F\] implied by a first-stage fit: n·R²_p/(1 - R²_p) + 1.
pub fn ef_from_first_stage_fit(n: f64, r2p: f64) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::Domain(format!("sample size must be >= 1, got {n}")));
    }
    if !(0.0..1.0).contains(&r2p) {
        return Err(Error::Domain(format!(
            "partial R^2 must lie in [0, 1), got {r2p}"
        )));
    }
    Ok(n * r2p / (1.0 - r2p) + 1.0)
}
