//! Adaptive Gauss-Kronrod quadrature for normal-weighted integrands.
//!
//! The target integrals all have the form `∫ f(t) φ(t - center) dt` with
//! integrands that are smooth except at a handful of known points (the
//! indicator thresholds of the rejection region, the kink of |z + λ|).
//! The domain is split at those declared breakpoints up front, infinite
//! ends are truncated where the normal weight is negligible, and panels
//! are bisected adaptively until the G7/K15 error estimate meets the
//! requested tolerance.

// The tabulated constants keep the full published digits.
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;

use super::norm_pdf;
use crate::error::{Error, Result};

// 15-point Kronrod abscissae (positive half) and weights, with the
// embedded 7-point Gauss weights, as tabulated in QUADPACK's dqk15.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_33,
    0.949_107_912_342_758_524_526_189_684_047_85,
    0.864_864_423_359_769_072_789_712_788_640_93,
    0.741_531_185_599_394_439_863_864_773_280_79,
    0.586_087_235_467_691_130_294_144_838_258_73,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_52,
    0.140_653_259_715_525_918_745_189_590_510_24,
    0.169_004_726_639_267_902_826_583_426_598_55,
    0.190_350_578_064_785_409_913_256_402_421_01,
    0.204_432_940_075_298_892_414_161_999_234_65,
    0.209_482_141_084_727_828_012_999_174_891_71,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_08,
    0.279_705_391_489_276_667_901_467_771_423_78,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_33,
];

/// Controls for [`integrate_normal_weighted`].
///
/// Defaults: absolute tolerance 1e-10, relative tolerance 1e-8,
/// truncation of infinite ends at ±8 standard deviations around the
/// weight center (tail mass below 1e-15), no breakpoints.
#[derive(Debug, Clone)]
pub struct QuadratureSpec {
    abs_tol: f64,
    rel_tol: f64,
    half_width: f64,
    breakpoints: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            half_width: 8.0,
            breakpoints: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, half_width: f64, breakpoints: Vec<f64>) -> Result<Self> {
        if !(abs_tol > 0.0) || !abs_tol.is_finite() {
            return Err(Error::InvalidParam(format!(
                "absolute tolerance must be positive, got {abs_tol}"
            )));
        }
        if !(rel_tol > 0.0) || !rel_tol.is_finite() {
            return Err(Error::InvalidParam(format!(
                "relative tolerance must be positive, got {rel_tol}"
            )));
        }
        if !(half_width >= 6.0) || !half_width.is_finite() {
            return Err(Error::InvalidParam(format!(
                "truncation half-width must be at least 6 standard deviations, got {half_width}"
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParam(
                "breakpoints must be finite".to_string(),
            ));
        }
        Ok(QuadratureSpec {
            abs_tol,
            rel_tol,
            half_width,
            breakpoints,
        })
    }

    /// Same tolerances and truncation, different breakpoints.
    pub fn with_breakpoints(&self, breakpoints: Vec<f64>) -> Result<Self> {
        QuadratureSpec::new(self.abs_tol, self.rel_tol, self.half_width, breakpoints)
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

struct PanelResult {
    estimate: f64,
    error: f64,
}

/// One G7/K15 evaluation on [a, b], QUADPACK error heuristic included.
fn gk15<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64) -> PanelResult {
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);

    let fc = g(centr);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut fv = [0.0f64; 15]; // 0..7 below center reversed pairs, for resasc
    fv[7] = fc;

    let mut pairs = [(0.0f64, 0.0f64); 7];
    for j in 0..7 {
        let absc = hlgth * XGK[j];
        let f1 = g(centr - absc);
        let f2 = g(centr + absc);
        pairs[j] = (f1, f2);
        let fsum = f1 + f2;
        resk += WGK[j] * fsum;
        if j % 2 == 1 {
            // XGK[1], XGK[3], XGK[5] are the Gauss nodes
            resg += WG[j / 2] * fsum;
        }
        fv[j] = f1;
        fv[14 - j] = f2;
    }

    let reskh = resk * 0.5;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((pairs[j].0 - reskh).abs() + (pairs[j].1 - reskh).abs());
    }
    resasc *= hlgth.abs();

    let estimate = resk * hlgth;
    let mut error = ((resk - resg) * hlgth).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (1.0f64).min((200.0 * error / resasc).powf(1.5));
    }
    PanelResult { estimate, error }
}

struct Panel {
    a: f64,
    b: f64,
    estimate: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error && self.a == other.a
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then(self.a.total_cmp(&other.a))
    }
}

const MAX_PANELS: usize = 4096;

/// Integrates `f(t) * φ(t - center)` over `[lower, upper]`.
///
/// Either end may be infinite; infinite ends are truncated at
/// `center ± half_width`. The domain is pre-split at every declared
/// breakpoint so that panel interiors only ever see smooth integrands.
/// Fails with [`Error::IntegrationFailure`] if the panel budget is
/// exhausted before the error bound meets
/// `max(abs_tol, rel_tol * |estimate|)`.
pub fn integrate_normal_weighted<F: Fn(f64) -> f64>(
    f: F,
    lower: f64,
    upper: f64,
    center: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if lower.is_nan() || upper.is_nan() || !center.is_finite() {
        return Err(Error::InvalidParam(
            "integration bounds must not be NaN and center must be finite".to_string(),
        ));
    }
    let lo = lower.max(center - spec.half_width);
    let hi = upper.min(center + spec.half_width);
    if !(lo < hi) {
        return Ok(0.0);
    }

    let g = |t: f64| f(t) * norm_pdf(t - center);

    let mut bounds: Vec<f64> = Vec::with_capacity(spec.breakpoints.len() + 2);
    bounds.push(lo);
    for &b in &spec.breakpoints {
        if b > lo && b < hi {
            bounds.push(b);
        }
    }
    bounds.push(hi);
    bounds.sort_by(f64::total_cmp);
    bounds.dedup();

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    // Panels too narrow to bisect further; their error is irreducible.
    let mut floor_est = 0.0f64;
    let mut floor_err = 0.0f64;
    let mut total_est = 0.0f64;
    let mut total_err = 0.0f64;
    let mut n_panels = 0usize;

    for w in bounds.windows(2) {
        let r = gk15(&g, w[0], w[1]);
        total_est += r.estimate;
        total_err += r.error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            estimate: r.estimate,
            error: r.error,
        });
        n_panels += 1;
    }

    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * total_est.abs());
        if total_err + floor_err <= tol {
            break;
        }
        if floor_err > tol || n_panels >= MAX_PANELS {
            return Err(Error::IntegrationFailure {
                estimate: total_est + floor_est,
                error_bound: total_err + floor_err,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => {
                return Err(Error::IntegrationFailure {
                    estimate: floor_est,
                    error_bound: floor_err,
                })
            }
        };
        total_est -= worst.estimate;
        total_err -= worst.error;

        let min_width = 1e-14 * (1.0 + worst.a.abs().max(worst.b.abs()));
        if worst.b - worst.a <= min_width {
            floor_est += worst.estimate;
            floor_err += worst.error;
            continue;
        }

        let mid = 0.5 * (worst.a + worst.b);
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let r = gk15(&g, a, b);
            total_est += r.estimate;
            total_err += r.error;
            heap.push(Panel {
                a,
                b,
                estimate: r.estimate,
                error: r.error,
            });
        }
        n_panels += 1;
    }

    // Re-sum in interval order so the result does not depend on the
    // history of heap operations.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut sum = floor_est;
    for p in &panels {
        sum += p.estimate;
    }
    Ok(sum)
}
