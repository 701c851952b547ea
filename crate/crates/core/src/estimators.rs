//! Point estimators and test statistics computed from a single
//! [`ReducedFormDraw`]: the conventional IV estimate and its standard
//! error, the Wald and AR t-statistics, the weak-instrument OLS limit
//! β_WOLS, and the sign-restriction-unbiased estimator β̂_U.

use crate::error::{Error, Result};
use crate::model::ReducedFormDraw;
use crate::stats::mills_ratio;

/// Everything the draw determines, bundled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub beta_iv: f64,
    pub se_iv: f64,
    /// β_WOLS = σ_δπ/σ_π², the weak-instrument limit of OLS.
    pub beta_wols: f64,
    pub beta_u: f64,
    /// First-stage t-statistic t₁ = π̂/σ_π.
    pub t1: f64,
    /// Shrinkage weight t₁μ(t₁) placed on β̂_IV by β̂_U.
    pub weight: f64,
}

impl EstimatorOutput {
    /// Fails when π̂ = 0, where β̂_IV is undefined (β̂_U is not; use
    /// [`unbiased_estimate`] directly in that case).
    pub fn from_draw(d: &ReducedFormDraw) -> Result<Self> {
        let beta_iv = iv_estimate(d)?;
        let se_iv = iv_se(d)?;
        let t1 = d.t1();
        Ok(EstimatorOutput {
            beta_iv,
            se_iv,
            beta_wols: beta_wols(d),
            beta_u: unbiased_estimate(d),
            t1,
            weight: shrinkage_weight(t1),
        })
    }
}

/// Conventional just-identified IV estimate β̂_IV = δ̂/π̂.
pub fn iv_estimate(d: &ReducedFormDraw) -> Result<f64> {
    if d.pi_hat == 0.0 {
        return Err(Error::Degenerate(
            "pi_hat = 0: the IV estimate delta_hat/pi_hat is undefined".to_string(),
        ));
    }
    Ok(d.delta_hat / d.pi_hat)
}

/// Weak-instrument limit of the OLS estimand, σ_δπ/σ_π².
pub fn beta_wols(d: &ReducedFormDraw) -> f64 {
    d.cov_rf / (d.sd_pi * d.sd_pi)
}

/// Estimated IV standard error
/// σ̂_IV = sqrt((σ_δ² - 2σ_δπ β̂ + σ_π² β̂²)/π̂²).
pub fn iv_se(d: &ReducedFormDraw) -> Result<f64> {
    let b = iv_estimate(d)?;
    let radicand = d.sd_delta * d.sd_delta - 2.0 * d.cov_rf * b + d.sd_pi * d.sd_pi * b * b;
    if radicand < 0.0 {
        // Impossible under a positive-definite covariance matrix.
        return Err(Error::InvalidParam(format!(
            "negative variance {radicand} in iv_se: covariance matrix not positive definite"
        )));
    }
    Ok(radicand.sqrt() / d.pi_hat.abs())
}

/// Wald t-statistic (β̂_IV - beta0)/σ̂_IV.
pub fn wald_t(d: &ReducedFormDraw, beta0: f64) -> Result<f64> {
    Ok((iv_estimate(d)? - beta0) / iv_se(d)?)
}

/// Anderson-Rubin statistic
/// (δ̂ - π̂ beta0)/sqrt(σ_δ² - 2σ_δπ beta0 + σ_π² beta0²);
/// standard normal under the null regardless of instrument strength.
pub fn ar_t(d: &ReducedFormDraw, beta0: f64) -> f64 {
    let var = d.sd_delta * d.sd_delta - 2.0 * d.cov_rf * beta0 + d.sd_pi * d.sd_pi * beta0 * beta0;
    (d.delta_hat - d.pi_hat * beta0) / var.sqrt()
}

/// The weight t₁μ(t₁) that β̂_U places on β̂_IV.
pub fn shrinkage_weight(t1: f64) -> f64 {
    t1 * mills_ratio(t1)
}

/// Sign-restriction-unbiased estimator β̂_U.
///
/// Evaluated through τ̂ = μ(t₁)/σ_π as
/// τ̂(δ̂ - β_WOLS π̂) + β_WOLS, which is well-defined at π̂ = 0 and avoids
/// the catastrophic cancellation the weight form suffers for large t₁.
pub fn unbiased_estimate(d: &ReducedFormDraw) -> f64 {
    let bw = beta_wols(d);
    let tau = mills_ratio(d.t1()) / d.sd_pi;
    tau * (d.delta_hat - bw * d.pi_hat) + bw
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::stats::SQRT_HALF_PI;

    fn draw(
        delta_hat: f64,
        pi_hat: f64,
        sd_delta: f64,
        sd_pi: f64,
        cov_rf: f64,
    ) -> ReducedFormDraw {
        ReducedFormDraw::new(delta_hat, pi_hat, sd_delta, sd_pi, cov_rf).unwrap()
    }

    #[test]
    fn iv_estimate_examples() {
        assert_eq!(iv_estimate(&draw(1.0, 2.0, 1.0, 1.0, 0.0)).unwrap(), 0.5);
        assert_eq!(iv_estimate(&draw(0.0, 1.0, 1.0, 1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(iv_estimate(&draw(-3.0, -1.5, 1.0, 1.0, 0.0)).unwrap(), 2.0);
        assert!(matches!(
            iv_estimate(&draw(1.0, 0.0, 1.0, 1.0, 0.0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn iv_estimate_is_scale_invariant() {
        let d = draw(1.3, 0.4, 1.0, 1.0, 0.2);
        let b = iv_estimate(&d).unwrap();
        for c in [2.0, -0.5, 1e6] {
            let scaled = draw(1.3 * c, 0.4 * c, 1.0, 1.0, 0.2);
            assert_eq!(iv_estimate(&scaled).unwrap(), b);
        }
    }

    #[test]
    fn iv_se_examples() {
        assert_eq!(iv_se(&draw(0.0, 1.0, 1.0, 1.0, 0.0)).unwrap(), 1.0);
        let v = iv_se(&draw(1.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn iv_se_matches_delta_method_oracle() {
        // Independent route: numerical gradient of (δ, π) -> δ/π at the
        // draw, then g' Σ g.
        let d = draw(0.8, 1.7, 1.3, 0.6, 0.5);
        let b = |dd: f64, pp: f64| dd / pp;
        let h = 1e-6;
        let g_d = (b(d.delta_hat + h, d.pi_hat) - b(d.delta_hat - h, d.pi_hat)) / (2.0 * h);
        let g_p = (b(d.delta_hat, d.pi_hat + h) - b(d.delta_hat, d.pi_hat - h)) / (2.0 * h);
        let var = g_d * g_d * d.sd_delta * d.sd_delta
            + 2.0 * g_d * g_p * d.cov_rf
            + g_p * g_p * d.sd_pi * d.sd_pi;
        let want = var.sqrt();
        let got = iv_se(&d).unwrap();
        assert!((got - want).abs() < 1e-6 * want, "got {got}, want {want}");
    }

    #[test]
    fn wald_t_examples() {
        let d = draw(1.0, 1.0, 1.0, 1.0, 0.0);
        let b = iv_estimate(&d).unwrap();
        assert_eq!(wald_t(&d, b).unwrap(), 0.0);
        let t = wald_t(&d, 0.0).unwrap();
        assert!((t - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-15);
        // Sign flip of the draw flips the statistic when cov = 0.
        let flipped = draw(-1.0, 1.0, 1.0, 1.0, 0.0);
        assert_eq!(wald_t(&flipped, 0.0).unwrap(), -t);
    }

    #[test]
    fn wald_t_equals_rewrite_in_terms_of_ar_and_t1() {
        // t_W = sign(t1) t_AR / sqrt(1 + t_AR²/t1² - 2 ρ t_AR/t1) on the
        // canonical model, for random draws.
        use rand::Rng;
        let mut rng = crate::oracle::test_rng(7);
        for _ in 0..500 {
            let rho: f64 = rng.random_range(-0.99..0.99);
            let lambda: f64 = rng.random_range(0.0..4.0);
            let beta = 0.0;
            let m = ModelParams::new(beta, lambda, 1.0, 1.0, rho).unwrap();
            let delta: f64 = rng.random_range(-3.0..3.0);
            let pi: f64 =
                rng.random_range(0.05..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let d = m.observe(delta, pi);
            let t1 = d.t1();
            let tar = ar_t(&d, beta);
            let direct = wald_t(&d, beta).unwrap();
            let rewrite =
                t1.signum() * tar / (1.0 + tar * tar / (t1 * t1) - 2.0 * rho * tar / t1).sqrt();
            assert!(
                (direct - rewrite).abs() <= 1e-10 * direct.abs().max(1.0),
                "rho={rho} lambda={lambda}: direct {direct}, rewrite {rewrite}"
            );
        }
    }

    #[test]
    fn ar_t_examples() {
        let d = draw(1.4, 0.9, 2.0, 1.0, 0.3);
        assert_eq!(ar_t(&d, 0.0), 1.4 / 2.0);
        assert_eq!(ar_t(&d, 1.4 / 0.9), 0.0);
        // Exactly linear in (δ̂, π̂).
        let d2 = draw(2.8, 1.8, 2.0, 1.0, 0.3);
        assert!((ar_t(&d2, 0.25) - 2.0 * ar_t(&d, 0.25)).abs() < 1e-15);
    }

    #[test]
    fn unbiased_estimate_limits_and_mills_bound() {
        // Strong first stage: weight -> 1, β̂_U -> β̂_IV.
        let d = draw(2.0, 40.0, 1.0, 1.0, 0.3);
        let bu = unbiased_estimate(&d);
        let biv = iv_estimate(&d).unwrap();
        let bw = beta_wols(&d);
        assert!((bu - biv).abs() <= (biv - bw).abs() / (40.0 * 40.0) + 1e-15);

        // F = t1² = 10: at most 10% of the way towards β_WOLS.
        let d = draw(1.2, 10.0f64.sqrt(), 1.0, 1.0, 0.4);
        let bu = unbiased_estimate(&d);
        let biv = iv_estimate(&d).unwrap();
        let bw = beta_wols(&d);
        assert!((bu - biv).abs() <= 0.1 * (biv - bw).abs() + 1e-15);
    }

    #[test]
    fn unbiased_estimate_at_zero_first_stage() {
        let d = draw(1.5, 0.0, 1.0, 2.0, 0.5);
        let bw = beta_wols(&d);
        let want = SQRT_HALF_PI * 1.5 / 2.0 + bw;
        assert!((unbiased_estimate(&d) - want).abs() < 1e-14);
    }

    #[test]
    fn weight_respects_mills_inequality() {
        for t1 in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0] {
            let w = shrinkage_weight(t1);
            assert!(w <= 1.0 + 1e-15, "t1={t1}: w={w}");
            assert!(1.0 - w <= 1.0 / (t1 * t1) + 1e-15, "t1={t1}: w={w}");
            assert!(w >= 0.0);
        }
    }

    #[test]
    fn estimator_output_bundles_consistently() {
        let d = draw(0.7, 1.9, 1.0, 0.5, 0.2);
        let out = EstimatorOutput::from_draw(&d).unwrap();
        assert_eq!(out.beta_iv, iv_estimate(&d).unwrap());
        assert_eq!(out.beta_u, unbiased_estimate(&d));
        assert_eq!(out.t1, d.t1());
        assert!((out.weight - out.t1 * mills_ratio(out.t1)).abs() < 1e-15);
        assert!(EstimatorOutput::from_draw(&draw(1.0, 0.0, 1.0, 1.0, 0.0)).is_err());
    }
}
