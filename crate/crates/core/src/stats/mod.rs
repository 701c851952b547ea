//! Standard-normal special functions, normal-weighted quadrature, and
//! bracketed root finding. Everything here is a pure function of its
//! inputs; all downstream modules build on this surface.

mod erf;
mod quad;
mod root;

pub use erf::{erf, erfc, erfcx};
pub use quad::{integrate_normal_weighted, QuadratureSpec};
pub use root::{find_root, find_root_fallible};

use crate::error::{Error, Result};

/// 1/sqrt(2*pi)
pub(crate) const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// sqrt(pi/2), the Mills' ratio at zero
pub(crate) const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Standard normal density φ(x).
pub fn norm_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal cdf Φ(x), absolute error below 1e-15 on [-8, 8].
pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erf::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 - Φ(x), computed without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 0.0;
    }
    if x == f64::NEG_INFINITY {
        return 1.0;
    }
    0.5 * erf::erfc(x * FRAC_1_SQRT_2)
}

/// Mills' ratio μ(x) = (1 - Φ(x))/φ(x) of a standard normal.
///
/// Evaluated as sqrt(pi/2) * erfcx(x/sqrt(2)); the scaled complementary
/// error function keeps full precision where the direct ratio would
/// round (1 - Φ) to zero (x beyond about 8) or overflow φ in the
/// denominator.
pub fn mills_ratio(x: f64) -> f64 {
    SQRT_HALF_PI * erf::erfcx(x * FRAC_1_SQRT_2)
}

/// Upper quantile: the z with 1 - Φ(z) = tail.
///
/// Solved by bracketed root finding on the stable survival function, so
/// it stays accurate for tails as small as 1e-300.
pub fn norm_upper_quantile(tail: f64) -> Result<f64> {
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::Domain(format!(
            "tail probability must lie in (0, 1), got {tail}"
        )));
    }
    // norm_sf is monotone decreasing; sf(-40) = 1, sf(40) = 0 in f64.
    find_root(|z| norm_sf(z) - tail, -40.0, 40.0, 1e-13)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent high-precision Φ for |x| up to ~10: the positive-term
    /// series Φ(x) = 1/2 + φ(x) Σ x^(2k+1)/(2k+1)!! (no cancellation),
    /// reflected for negative x through the tail continued fraction
    /// below.
    fn cdf_series_oracle(x: f64) -> f64 {
        if x < 0.0 {
            return 1.0 - cdf_series_oracle(-x);
        }
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0f64;
        while term.abs() > 1e-20 * sum.abs() {
            term *= x * x / (2.0 * k + 1.0);
            sum += term;
            k += 1.0;
            if k > 500.0 {
                break;
            }
        }
        0.5 + norm_pdf(x) * sum
    }

    /// Independent tail oracle: Lentz evaluation of the continued
    /// fraction 1-Φ(x) = φ(x)/(x + 1/(x + 2/(x + 3/(x + ...)))), valid
    /// for x ≳ 1.
    fn sf_cf_oracle(x: f64) -> f64 {
        assert!(x >= 1.0);
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0f64;
        for n in 1..500 {
            // CF denominator: x + 1/(x + 2/(x + 3/(x + ...)))
            let a = n as f64;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-18 {
                break;
            }
        }
        norm_pdf(x) / f
    }

    /// Composite Simpson on [a, b] with n (even) panels; test-only oracle.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        assert!(n.is_multiple_of(2));
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn pdf_known_values_and_symmetry() {
        assert!((norm_pdf(0.0) - 0.3989422804014327).abs() < 1e-16);
        assert!((norm_pdf(1.0) - 0.24197072451914337).abs() < 1e-16);
        for x in [0.3, 1.7, 4.2, 9.0] {
            assert_eq!(norm_pdf(-x), norm_pdf(x));
        }
    }

    #[test]
    fn cdf_basics() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn cdf_matches_series_oracle_on_grid() {
        // Contract: absolute error < 1e-14 over [-8, 8]. The oracle
        // itself is good to ~5e-16 absolute here.
        let mut x = -8.0;
        while x <= 8.0 {
            let got = norm_cdf(x);
            let want = cdf_series_oracle(x);
            assert!(
                (got - want).abs() < 1e-14,
                "x={x}: got {got:.17}, want {want:.17}"
            );
            x += 0.0625;
        }
    }

    #[test]
    fn cdf_inverse_of_0975() {
        // z was obtained by bisecting the series oracle to 1e-15.
        let z = 1.959963984540054;
        assert!((norm_cdf(z) - 0.975).abs() < 1e-15);
        // and keep the oracle honest:
        let z_oracle = find_root(|x| cdf_series_oracle(x) - 0.975, 0.0, 4.0, 1e-13).unwrap();
        assert!((z_oracle - z).abs() < 1e-12);
    }

    #[test]
    fn sf_complements_cdf() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((norm_cdf(x) + norm_sf(x) - 1.0).abs() < 1e-14, "x={x}");
            assert!((norm_cdf(x) + norm_cdf(-x) - 1.0).abs() < 1e-14, "x={x}");
            x += 0.173;
        }
    }

    #[test]
    fn sf_deep_tail_matches_continued_fraction() {
        for x in [3.0, 5.0, 8.0, 12.0, 20.0] {
            let got = norm_sf(x);
            let want = sf_cf_oracle(x);
            assert!(
                ((got - want) / want).abs() < 1e-13,
                "x={x}: got {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn mills_at_zero_is_sqrt_half_pi() {
        assert!((mills_ratio(0.0) - 1.2533141373155003).abs() < 1e-15);
    }

    #[test]
    fn mills_at_ten_within_classic_bounds() {
        let m = mills_ratio(10.0);
        assert!(m > 10.0 / 101.0 && m < 0.1, "got {m}");
    }

    #[test]
    fn mills_at_three_matches_tail_quadrature() {
        // Independent oracle: Simpson quadrature of ∫_3^45 φ(t) dt.
        let tail = simpson(norm_pdf, 3.0, 45.0, 200_000);
        let want = tail / norm_pdf(3.0);
        let got = mills_ratio(3.0);
        assert!((got - want).abs() < 1e-12, "got {got:.15}, want {want:.15}");
        // Frozen from the oracle (also mpmath to 20 digits).
        assert!((got - 0.304_590_298_710_103_3).abs() < 1e-15);
    }

    #[test]
    fn mills_classic_inequality_dense_grid() {
        // 0 <= 1 - x μ(x) <= 1/x^2 for x > 0.
        let mut x = 0.01f64;
        while x <= 50.0 {
            let gap = 1.0 - x * mills_ratio(x);
            assert!(gap >= -1e-15, "x={x}: gap {gap}");
            assert!(gap <= 1.0 / (x * x) + 1e-15, "x={x}: gap {gap}");
            x *= 1.03;
        }
    }

    #[test]
    fn mills_stable_for_large_and_negative_arguments() {
        // Direct ratio dies near x = 38 where φ underflows; erfcx keeps going.
        let m = mills_ratio(1e3);
        assert!((m * 1e3 - 1.0).abs() < 1e-5, "μ(1000) ≈ 1/1000, got {m}");
        // Negative side grows like sqrt(2π) exp(x²/2).
        let m = mills_ratio(-3.0);
        let want = (1.0 - norm_cdf(-3.0)) / norm_pdf(-3.0);
        assert!(((m - want) / want).abs() < 1e-13);
    }

    #[test]
    fn upper_quantile_round_trips() {
        for tail in [0.025, 0.05, 0.2, 0.5, 0.9, 1e-6, 1e-12] {
            let z = norm_upper_quantile(tail).unwrap();
            assert!(
                ((norm_sf(z) - tail) / tail).abs() < 1e-10,
                "tail={tail}: z={z}"
            );
        }
        let z = norm_upper_quantile(0.025).unwrap();
        assert!((z - 1.959963984540054).abs() < 1e-11);
        assert!(norm_upper_quantile(0.0).is_err());
        assert!(norm_upper_quantile(1.0).is_err());
    }
}
