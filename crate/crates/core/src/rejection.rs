//! Exact null rejection probabilities of the nominal-level Wald t-test
//! as a function of (E\[F\], ρ), unconditional (R_W) and conditional on
//! first-stage sign-screening (R^c_W), plus worst-case searches over
//! instrument strength and endogeneity-cutoff inversion.
//!
//! Conditional on the first-stage t-statistic t₁, the event
//! {|t_W| ≥ z} is a quadratic inequality in the AR statistic, so the
//! rejection region is empty, an interval, or the complement of an
//! interval depending on where t₁² falls relative to (1-ρ²)z² and z².
//! Integrating the conditional probability against the N(λ, 1) law of
//! t₁ over [c, ∞) gives the rejection rate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridCell, GridResult};
use crate::model::DesignPoint;
use crate::stats::{
    integrate_normal_weighted, norm_cdf, norm_sf, norm_upper_quantile, QuadratureSpec,
};

/// Rejection region for t_AR conditional on t₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RejectionRegion {
    /// The test never rejects (t₁² ≤ (1-ρ²)z²).
    Empty,
    /// Reject iff t_AR ∈ [lo, hi] ((1-ρ²)z² ≤ t₁² ≤ z²).
    Inside { lo: f64, hi: f64 },
    /// Reject iff t_AR ≤ lo or t_AR ≥ hi (t₁² ≥ z²); an arm may be at
    /// infinity in the degenerate boundary case t₁² = z².
    Outside { lo: f64, hi: f64 },
}

/// A rejection-rate query: design point, nominal level, and the
/// screening threshold c (−∞ for the unconditional rate R_W, 0 for the
/// sign-screened rate R^c_W).
#[derive(Debug, Clone, Copy)]
pub struct RejectionQuery {
    pub design: DesignPoint,
    pub alpha: f64,
    pub screen_threshold: f64,
}

impl RejectionQuery {
    pub fn new(design: DesignPoint, alpha: f64, screen_threshold: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParam(format!(
                "nominal level must lie in (0, 1), got {alpha}"
            )));
        }
        if screen_threshold.is_nan() || screen_threshold == f64::INFINITY {
            return Err(Error::InvalidParam(
                "screen threshold must be finite or -inf".to_string(),
            ));
        }
        Ok(RejectionQuery {
            design,
            alpha,
            screen_threshold,
        })
    }

    /// Unconditional query (c = −∞).
    pub fn unconditional(design: DesignPoint, alpha: f64) -> Result<Self> {
        Self::new(design, alpha, f64::NEG_INFINITY)
    }

    /// Sign-screened query (c = 0, conditioning on π̂ > 0).
    pub fn sign_screened(design: DesignPoint, alpha: f64) -> Result<Self> {
        Self::new(design, alpha, 0.0)
    }
}

fn region_given_z(t1: f64, rho: f64, z: f64) -> RejectionRegion {
    let t1sq = t1 * t1;
    let zsq = z * z;
    // Discriminant of the quadratic in t_AR (over 4 z² t1²).
    let disc = t1sq - (1.0 - rho * rho) * zsq;
    if t1sq < zsq {
        if disc <= 0.0 {
            return RejectionRegion::Empty;
        }
        let root = disc.sqrt();
        let denom = zsq - t1sq; // > 0
        let a1 = (rho * zsq * t1 - t1.abs() * z * root) / denom;
        let a2 = (rho * zsq * t1 + t1.abs() * z * root) / denom;
        RejectionRegion::Inside { lo: a1, hi: a2 }
    } else if t1sq > zsq {
        let root = disc.max(0.0).sqrt();
        let denom = zsq - t1sq; // < 0, so a2 <= a1
        let a1 = (rho * zsq * t1 - t1.abs() * z * root) / denom;
        let a2 = (rho * zsq * t1 + t1.abs() * z * root) / denom;
        RejectionRegion::Outside { lo: a2, hi: a1 }
    } else {
        // t₁² = z² exactly: the quadratic degenerates to the linear
        // inequality 2ρ t₁ t_AR ≥ t₁². Measure zero under the t₁
        // integral (the quadrature places breakpoints here), but the
        // limiting region keeps the pointwise function well-defined.
        if rho == 0.0 {
            RejectionRegion::Empty
        } else {
            let thr = t1 / (2.0 * rho);
            if rho * t1 > 0.0 {
                RejectionRegion::Outside {
                    lo: f64::NEG_INFINITY,
                    hi: thr,
                }
            } else {
                RejectionRegion::Outside {
                    lo: thr,
                    hi: f64::INFINITY,
                }
            }
        }
    }
}

/// The t_AR-region {|t_W| ≥ z_{1-α/2}} conditional on t₁.
pub fn rejection_region_bounds(t1: f64, rho: f64, alpha: f64) -> Result<RejectionRegion> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParam(format!(
            "endogeneity must satisfy |rho| < 1, got {rho}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam(format!(
            "nominal level must lie in (0, 1), got {alpha}"
        )));
    }
    let z = norm_upper_quantile(alpha / 2.0)?;
    Ok(region_given_z(t1, rho, z))
}

/// P(|t_W| ≥ z | t₁) with the quantile precomputed. t_AR | t₁ is
/// N(ρ(t₁ - λ), 1 - ρ²).
fn conditional_rejection_given_z(t1: f64, lambda: f64, rho: f64, z: f64) -> f64 {
    let sig = (1.0 - rho * rho).sqrt();
    let mean = rho * (t1 - lambda);
    let p = match region_given_z(t1, rho, z) {
        RejectionRegion::Empty => 0.0,
        RejectionRegion::Inside { lo, hi } => {
            (norm_cdf((hi - mean) / sig) - norm_cdf((lo - mean) / sig)).max(0.0)
        }
        RejectionRegion::Outside { lo, hi } => {
            norm_cdf((lo - mean) / sig) + norm_sf((hi - mean) / sig)
        }
    };
    debug_assert!((-1e-9..=1.0 + 1e-9).contains(&p), "p = {p}");
    p.clamp(0.0, 1.0)
}

/// Rejection probability of the two-sided level-α Wald test conditional
/// on the first-stage t-statistic.
pub fn conditional_rejection_prob(t1: f64, design: &DesignPoint, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam(format!(
            "nominal level must lie in (0, 1), got {alpha}"
        )));
    }
    let z = norm_upper_quantile(alpha / 2.0)?;
    let p = conditional_rejection_given_z(t1, design.lambda(), design.rho(), z);
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::InvalidParam(format!(
            "conditional rejection probability {p} outside [0, 1] beyond tolerance"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Null rejection rate R_W (c = −∞) or R^c_W (c = 0) of the two-sided
/// level-α Wald test: the integral of the conditional rejection
/// probability against φ(t₁ - λ) over [c, ∞), normalized by Φ(λ - c).
///
/// The rate is even in ρ (the joint law of (|t_W|, t₁) is invariant to
/// the sign of ρ), so it is evaluated at |ρ| and the symmetry holds
/// exactly.
pub fn rejection_rate(q: &RejectionQuery) -> Result<f64> {
    let lambda = q.design.lambda();
    let rho = q.design.rho().abs();
    let z = norm_upper_quantile(q.alpha / 2.0)?;
    let c = q.screen_threshold;

    let mass = norm_cdf(lambda - c);
    if mass < 1e-300 {
        return Err(Error::Domain(format!(
            "screen threshold {c} leaves no first-stage mass at lambda = {lambda}"
        )));
    }

    // Kinks/jumps of the conditional probability sit where t₁² crosses
    // (1-ρ²)z² and z².
    let zs = z * (1.0 - rho * rho).sqrt();
    let spec = QuadratureSpec::default().with_breakpoints(vec![-z, -zs, zs, z])?;
    let numer = integrate_normal_weighted(
        |t1| conditional_rejection_given_z(t1, lambda, rho, z),
        c,
        f64::INFINITY,
        lambda,
        &spec,
    )?;
    Ok((numer / mass).clamp(0.0, 1.0))
}

/// Default upper end of the worst-case search over E\[F\]; beyond this
/// the rate is within 1e-4 of α.
pub const EF_MAX_DEFAULT: f64 = 1e4;
/// Contour sweeps and cutoff searches cap |ρ| here; the worst case over
/// endogeneity occurs in the |ρ| → 1 limit, so a capped supremum is
/// what gets reported.
pub const RHO_CAP: f64 = 0.999;

/// Maximizes the rejection rate over E\[F\] ∈ [1, ef_max] at fixed ρ.
/// Returns (max rate, argmax E\[F\]).
///
/// Coarse log-spaced scan followed by golden-section refinement around
/// the best bracket.
pub fn worst_case_rejection_with_max(
    rho: f64,
    alpha: f64,
    screen_threshold: f64,
    ef_max: f64,
) -> Result<(f64, f64)> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidParam(format!(
            "endogeneity must satisfy |rho| < 1, got {rho}"
        )));
    }
    if !(ef_max > 1.0) || !ef_max.is_finite() {
        return Err(Error::InvalidParam(format!(
            "ef_max must be finite and > 1, got {ef_max}"
        )));
    }
    let rate_at = |ef: f64| -> Result<f64> {
        let d = DesignPoint::new(ef, rho)?;
        rejection_rate(&RejectionQuery::new(d, alpha, screen_threshold)?)
    };

    const SCAN: usize = 48;
    let lmax = ef_max.ln();
    let mut best_i = 0usize;
    let mut best_rate = f64::NEG_INFINITY;
    for i in 0..SCAN {
        let ef = (lmax * i as f64 / (SCAN - 1) as f64).exp();
        let r = rate_at(ef)?;
        if r > best_rate {
            best_rate = r;
            best_i = i;
        }
    }
    let node = |i: usize| lmax * i as f64 / (SCAN - 1) as f64;
    let mut a = node(best_i.saturating_sub(1));
    let mut b = node((best_i + 1).min(SCAN - 1));

    // Golden-section maximization of rate(exp(u)) on [a, b].
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = rate_at(x1.exp())?;
    let mut f2 = rate_at(x2.exp())?;
    for _ in 0..70 {
        if b - a < 1e-10 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = rate_at(x2.exp())?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = rate_at(x1.exp())?;
        }
    }
    let u = 0.5 * (a + b);
    let ef_star = u.exp();
    let r_star = rate_at(ef_star)?;
    let (rate, ef) = if r_star >= best_rate {
        (r_star, ef_star)
    } else {
        (best_rate, node(best_i).exp())
    };
    Ok((rate, ef))
}

/// [`worst_case_rejection_with_max`] with the default E\[F\] cap of 1e4.
pub fn worst_case_rejection(rho: f64, alpha: f64, screen_threshold: f64) -> Result<(f64, f64)> {
    worst_case_rejection_with_max(rho, alpha, screen_threshold, EF_MAX_DEFAULT)
}

/// Search tolerance in ρ for [`endogeneity_cutoff`]; the paper reports
/// thresholds to 2-3 decimals.
pub const CUTOFF_RHO_TOL: f64 = 1e-3;

/// The largest |ρ*| such that the worst-case (over E\[F\]) rejection rate
/// stays at or below `target_rate` for all |ρ| ≤ ρ*.
///
/// Bisection on ρ ∈ [0, 0.999]; if even the capped endpoint satisfies
/// the target, the cap is returned.
pub fn endogeneity_cutoff(target_rate: f64, alpha: f64, screen_threshold: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParam(format!(
            "nominal level must lie in (0, 1), got {alpha}"
        )));
    }
    if !(target_rate >= alpha) {
        return Err(Error::Domain(format!(
            "target rate {target_rate} below the nominal level {alpha} is unattainable"
        )));
    }
    let excess = |rho: f64| -> Result<f64> {
        Ok(worst_case_rejection(rho, alpha, screen_threshold)?.0 - target_rate)
    };
    let mut lo = 0.0f64;
    let mut hi = RHO_CAP;
    let f_lo = excess(lo)?;
    if f_lo > 0.0 {
        return Err(Error::Domain(format!(
            "target rate {target_rate} below the attainable minimum {}",
            f_lo + target_rate
        )));
    }
    let f_hi = excess(hi)?;
    if f_hi <= 0.0 {
        return Ok(RHO_CAP);
    }
    while hi - lo > CUTOFF_RHO_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One rejection rate per (ef, rho) cell; cells are independent and
/// evaluated in parallel, failures are recorded as NaN.
pub fn rejection_grid(
    ef_values: &[f64],
    rho_values: &[f64],
    alpha: f64,
    screen_threshold: f64,
) -> GridResult {
    let mut efs = ef_values.to_vec();
    efs.sort_by(f64::total_cmp);
    let mut rhos = rho_values.to_vec();
    rhos.sort_by(f64::total_cmp);

    let pairs: Vec<(f64, f64)> = efs
        .iter()
        .flat_map(|&ef| rhos.iter().map(move |&rho| (ef, rho)))
        .collect();
    let cells: Vec<GridCell> = pairs
        .par_iter()
        .map(|&(ef, rho)| {
            let value = DesignPoint::new(ef, rho)
                .and_then(|d| RejectionQuery::new(d, alpha, screen_threshold))
                .and_then(|q| rejection_rate(&q))
                .unwrap_or(f64::NAN);
            GridCell { ef, rho, value }
        })
        .collect();
    GridResult { cells }
}
