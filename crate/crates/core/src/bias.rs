//! Mean- and median-bias results for the conventional IV estimator and
//! the sign-restriction-unbiased estimator β̂_U, in units of the
//! weak-instrument OVB of OLS: everything here is about the scaled
//! quantity β̃ = (β̂ - β)/|β_WOLS - β|.
//!
//! Closed forms cover the conditional mean bias of β̂_U and the |ρ| → 0
//! limits of the IV median bias (which are also the suprema over ρ,
//! conditionally so only once λ ≥ 0.84). The exact median at any
//! (λ, ρ ≠ 0) comes from root-finding on a one-dimensional normal
//! integral of the conditional cdf.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::DesignPoint;
use crate::stats::{
    find_root_fallible, integrate_normal_weighted, mills_ratio, norm_cdf, norm_pdf, norm_sf,
    QuadratureSpec, SQRT_HALF_PI,
};

/// Which estimator a bias query concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Conventional β̂_IV = δ̂/π̂.
    ConventionalIv,
    /// Sign-restriction-unbiased β̂_U.
    Unbiased,
}

/// Conditioning applied to the first-stage draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    Unconditional,
    /// Keep draws with t₁ > 0 (the expected first-stage sign).
    SignScreened,
    /// Keep draws with t₁ < 0.
    WrongSigned,
}

/// Side of the first-stage sign split for conditional mean-bias queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T1Side {
    Positive,
    Negative,
}

/// A bias query: design point, estimator, conditioning.
#[derive(Debug, Clone, Copy)]
pub struct BiasQuery {
    pub design: DesignPoint,
    pub estimator: EstimatorKind,
    pub conditioning: Conditioning,
}

/// Relative mean bias of β̂_U conditional on the sign of t₁:
/// sqrt(π/2)·φ(λ)/Φ(λ) on the positive side,
/// -sqrt(π/2)·φ(λ)/(1-Φ(λ)) on the negative side. The two average to
/// zero, which is how β̂_U is unbiased.
pub fn beta_u_mean_bias(lambda: f64, side: T1Side) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(match side {
        T1Side::Positive => SQRT_HALF_PI * norm_pdf(lambda) / norm_cdf(lambda),
        T1Side::Negative => -SQRT_HALF_PI * norm_pdf(lambda) / norm_sf(lambda),
    })
}

/// Below this λ the screened closed form is only the |ρ| → 0 limit, not
/// a supremum over ρ.
pub const SCREENED_SUP_MIN_LAMBDA: f64 = 0.84;

/// A closed-form median-bias bound together with its domain status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MedianBiasBound {
    pub value: f64,
    /// True when the value is only the |ρ| → 0 limit (screened bound
    /// with λ < 0.84), not a verified supremum over ρ.
    pub limit_only: bool,
}

/// Worst-case (over ρ) relative median bias of β̂_IV:
/// unscreened φ(λ)/(λ[Φ(λ)-1/2]+φ(λ)),
/// screened φ(λ)/(λΦ(λ)+φ(λ)). Both equal the |ρ| → 0 limits of the
/// exact median bias; the screened form is a supremum only for λ ≥ 0.84.
pub fn iv_median_bias_bound(lambda: f64, screened: bool) -> Result<MedianBiasBound> {
    check_lambda(lambda)?;
    let phi = norm_pdf(lambda);
    let cap = norm_cdf(lambda);
    if screened {
        Ok(MedianBiasBound {
            value: phi / (lambda * cap + phi),
            limit_only: lambda < SCREENED_SUP_MIN_LAMBDA,
        })
    } else {
        Ok(MedianBiasBound {
            value: phi / (lambda * (cap - 0.5) + phi),
            limit_only: false,
        })
    }
}

/// Ratio of the conditional to the unconditional median-bias bound,
/// 1 - 0.5λ/(λΦ(λ)+φ(λ)); within a percentage point of one half once
/// λ ≥ 1.5.
pub fn bias_ratio_conditional_to_unconditional(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(1.0 - 0.5 * lambda / (lambda * norm_cdf(lambda) + norm_pdf(lambda)))
}

/// Ratio of the conditional median bias of β̂_IV to the conditional mean
/// bias of β̂_U: sqrt(2/π)·Φ(λ)/(λΦ(λ)+φ(λ)) ≤ 1, decreasing in λ.
pub fn median_to_mean_bias_ratio(lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let cap = norm_cdf(lambda);
    Ok((1.0 / SQRT_HALF_PI) * cap / (lambda * cap + norm_pdf(lambda)))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidParam(format!(
            "lambda must be >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// cdf of β̃_IV conditional on t₁ = λ + z, as a function of z. The kink
/// sits at z = -λ.
fn f_iv(z: f64, x: f64, lambda: f64, s: f64) -> f64 {
    let t1 = z + lambda;
    norm_cdf(s * (t1.signum() * lambda - (1.0 - s.signum() * x) * t1.abs()))
}

/// cdf of β̃_U conditional on t₁ = λ + z; smooth in z.
fn f_u(z: f64, x: f64, lambda: f64, s: f64) -> f64 {
    let t1 = z + lambda;
    norm_cdf(s * (lambda - (1.0 - s.signum() * x) / mills_ratio(t1)))
}

fn cdf_quad_spec(breakpoints: Vec<f64>) -> Result<QuadratureSpec> {
    QuadratureSpec::new(1e-13, 1e-11, 8.0, breakpoints)
}

fn scaled_cdf(
    x: f64,
    design: &DesignPoint,
    estimator: EstimatorKind,
    z_lo: f64,
    z_hi: f64,
    mass: f64,
) -> Result<f64> {
    let rho = design.rho();
    if rho == 0.0 {
        return Err(Error::Domain(
            "rho = 0: the OVB scaling of the relative bias is degenerate".to_string(),
        ));
    }
    if mass < 1e-12 {
        return Err(Error::Domain(format!(
            "conditioning event has negligible mass {mass}"
        )));
    }
    let lambda = design.lambda();
    let s = design.s();
    let spec = match estimator {
        EstimatorKind::ConventionalIv => cdf_quad_spec(vec![-lambda])?,
        EstimatorKind::Unbiased => cdf_quad_spec(vec![])?,
    };
    let integral = integrate_normal_weighted(
        |z| match estimator {
            EstimatorKind::ConventionalIv => f_iv(z, x, lambda, s),
            EstimatorKind::Unbiased => f_u(z, x, lambda, s),
        },
        z_lo,
        z_hi,
        0.0,
        &spec,
    )?;
    Ok((integral / mass).clamp(0.0, 1.0))
}

/// P(β̃_IV ≤ x | t₁ ≥ c) where β̃_IV = (β̂_IV - β)/|β_WOLS - β|.
///
/// c = −∞ gives the unconditional cdf, c = 0 the sign-screened one.
/// Requires ρ ≠ 0.
pub fn scaled_iv_cdf(x: f64, design: &DesignPoint, c: f64) -> Result<f64> {
    let lambda = design.lambda();
    scaled_cdf(
        x,
        design,
        EstimatorKind::ConventionalIv,
        c - lambda,
        f64::INFINITY,
        norm_cdf(lambda - c),
    )
}

/// P(β̃_U ≤ x | t₁ ≥ c); same integral as [`scaled_iv_cdf`] with the
/// β̂_U conditional cdf in place of the IV one.
pub fn scaled_u_cdf(x: f64, design: &DesignPoint, c: f64) -> Result<f64> {
    let lambda = design.lambda();
    scaled_cdf(
        x,
        design,
        EstimatorKind::Unbiased,
        c - lambda,
        f64::INFINITY,
        norm_cdf(lambda - c),
    )
}

fn query_cdf(q: &BiasQuery, x: f64) -> Result<f64> {
    let lambda = q.design.lambda();
    match q.conditioning {
        Conditioning::Unconditional => scaled_cdf(
            x,
            &q.design,
            q.estimator,
            f64::NEG_INFINITY,
            f64::INFINITY,
            1.0,
        ),
        Conditioning::SignScreened => scaled_cdf(
            x,
            &q.design,
            q.estimator,
            -lambda,
            f64::INFINITY,
            norm_cdf(lambda),
        ),
        Conditioning::WrongSigned => scaled_cdf(
            x,
            &q.design,
            q.estimator,
            f64::NEG_INFINITY,
            -lambda,
            norm_sf(lambda),
        ),
    }
}

/// Geometric bracket-growth cap for the median root; relative medians
/// are bounded by 1 in theory, the wide cap guards quadrature noise.
const BRACKET_CAP: f64 = 64.0;

/// Exact relative median bias: the root of cdf(x) - 1/2.
///
/// Requires ρ ≠ 0 (relative bias is discontinuous in ρ at zero; the
/// worst case over ρ is the closed-form bound, not a ρ = 0 evaluation).
pub fn median_bias_exact(q: &BiasQuery) -> Result<f64> {
    let g = |x: f64| query_cdf(q, x).map(|p| p - 0.5);
    let mut lo = -2.0f64;
    let mut hi = 2.0f64;
    let mut g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    while g_lo > 0.0 && lo > -BRACKET_CAP {
        lo *= 2.0;
        g_lo = g(lo)?;
    }
    while g_hi < 0.0 && hi < BRACKET_CAP {
        hi *= 2.0;
        g_hi = g(hi)?;
    }
    if g_lo > 0.0 || g_hi < 0.0 {
        return Err(Error::BracketSearch(format!(
            "median bracket failed on [{lo}, {hi}]: cdf-1/2 = [{g_lo:e}, {g_hi:e}] \
             at ef = {}, rho = {}",
            q.design.ef(),
            q.design.rho()
        )));
    }
    find_root_fallible(g, lo, hi, 1e-10)
}

/// Range of |median bias| over a ρ grid at fixed λ.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasBand {
    pub min_abs: f64,
    pub max_abs: f64,
    /// (rho, error message) for grid points that failed; empty normally.
    pub failures: Vec<(f64, String)>,
}

/// Default ρ grid for the bias bands: 49 magnitudes, |ρ| from 0.02 to
/// 0.98 in steps of 0.02 (|median bias| is even in ρ).
pub fn default_rho_grid() -> Vec<f64> {
    (1..=49).map(|k| k as f64 * 0.02).collect()
}

/// Min and max of |median_bias_exact| for the conventional IV estimator
/// over the given ρ grid.
pub fn bias_band(lambda: f64, screened: bool, rho_grid: &[f64]) -> Result<BiasBand> {
    check_lambda(lambda)?;
    if rho_grid.is_empty() {
        return Err(Error::InvalidParam("empty rho grid".to_string()));
    }
    let conditioning = if screened {
        Conditioning::SignScreened
    } else {
        Conditioning::Unconditional
    };
    let results: Vec<(f64, Result<f64>)> = rho_grid
        .par_iter()
        .map(|&rho| {
            let r = DesignPoint::from_lambda(lambda, rho).and_then(|design| {
                median_bias_exact(&BiasQuery {
                    design,
                    estimator: EstimatorKind::ConventionalIv,
                    conditioning,
                })
            });
            (rho, r)
        })
        .collect();

    let mut min_abs = f64::INFINITY;
    let mut max_abs = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (rho, r) in results {
        match r {
            Ok(m) => {
                min_abs = min_abs.min(m.abs());
                max_abs = max_abs.max(m.abs());
            }
            Err(e) => failures.push((rho, e.to_string())),
        }
    }
    if !max_abs.is_finite() {
        return Err(Error::BracketSearch(format!(
            "every rho grid point failed at lambda = {lambda}"
        )));
    }
    Ok(BiasBand {
        min_abs,
        max_abs,
        failures,
    })
}

/// One row of the bias-curve table the CLI emits: bounds and
/// ρ-variation bands at a given E\[F\].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BiasCurveRow {
    pub ef: f64,
    pub lambda: f64,
    pub bound_uncond: f64,
    pub bound_cond: f64,
    pub band_uncond_min: f64,
    pub band_uncond_max: f64,
    pub band_cond_min: f64,
    pub band_cond_max: f64,
    /// 1 when the conditional bound is only the |ρ| → 0 limit (λ < 0.84).
    pub bound_cond_limit_only: u8,
}

/// Bias-curve rows over an E\[F\] grid; per-point failures appear as NaN
/// band columns.
pub fn bias_curve(ef_values: &[f64], rho_grid: &[f64]) -> Result<Vec<BiasCurveRow>> {
    let mut efs = ef_values.to_vec();
    efs.sort_by(f64::total_cmp);
    efs.iter()
        .map(|&ef| {
            let d = DesignPoint::new(ef, 0.0)?;
            let lambda = d.lambda();
            let uncond = iv_median_bias_bound(lambda, false)?;
            let cond = iv_median_bias_bound(lambda, true)?;
            let band_u = bias_band(lambda, false, rho_grid);
            let band_c = bias_band(lambda, true, rho_grid);
            let (bu_min, bu_max) = band_u
                .map(|b| (b.min_abs, b.max_abs))
                .unwrap_or((f64::NAN, f64::NAN));
            let (bc_min, bc_max) = band_c
                .map(|b| (b.min_abs, b.max_abs))
                .unwrap_or((f64::NAN, f64::NAN));
            Ok(BiasCurveRow {
                ef,
                lambda,
                bound_uncond: uncond.value,
                bound_cond: cond.value,
                band_uncond_min: bu_min,
                band_uncond_max: bu_max,
                band_cond_min: bc_min,
                band_cond_max: bc_max,
                bound_cond_limit_only: cond.limit_only as u8,
            })
        })
        .collect()
}
