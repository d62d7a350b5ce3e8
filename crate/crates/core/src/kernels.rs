// SPDX-License-Identifier: MIT OR Apache-2.0

//! Smoothing kernels, their moment constants, and bandwidth selection.
//!
//! Two kernels are supported: the parabolic (Epanechnikov) kernel
//! `K(u) = 0.75 (1 - u^2)` on `[-1, 1]`, and its jackknife companion
//! `K*(u) = 2 K(u) - K(u / sqrt 2) / sqrt 2` on `[-sqrt 2, sqrt 2]`, whose second
//! moment vanishes and so cancels the leading `O(b^2)` smoothing bias.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Window;

/// Admissible rule-of-thumb exponents for short-range dependent covariates.
pub const MIN_EXPONENT: f64 = 1.0 / 9.0;
pub const MAX_EXPONENT: f64 = 1.0 / 3.0;
pub const DEFAULT_EXPONENT: f64 = 0.2;

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Epanechnikov,
    Jackknife,
}

impl Kernel {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => kernel_eval(u),
            Kernel::Jackknife => jackknife_eval(u),
        }
    }

    pub fn support_halfwidth(self) -> f64 {
        match self {
            Kernel::Epanechnikov => 1.0,
            Kernel::Jackknife => SQRT_2,
        }
    }

    /// Cached [`KernelSpec`] for this kernel.
    pub fn spec(self) -> &'static KernelSpec {
        static EPA: OnceLock<KernelSpec> = OnceLock::new();
        static JACK: OnceLock<KernelSpec> = OnceLock::new();
        match self {
            Kernel::Epanechnikov => EPA.get_or_init(|| KernelSpec::new(self)),
            Kernel::Jackknife => JACK.get_or_init(|| KernelSpec::new(self)),
        }
    }
}

/// Parabolic kernel `0.75 (1 - u^2)` on `|u| <= 1`.
#[inline]
pub fn kernel_eval(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Jackknife-corrected kernel `2 K(u) - K(u / sqrt 2) / sqrt 2`.
#[inline]
pub fn jackknife_eval(u: f64) -> f64 {
    2.0 * kernel_eval(u) - kernel_eval(u / SQRT_2) / SQRT_2
}

/// A kernel together with its support and moment constants
/// `phi = int K^2` and `psi = int (u^2 / 2) K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: Kernel,
    pub support_halfwidth: f64,
    pub phi: f64,
    pub psi: f64,
}

impl KernelSpec {
    pub fn new(kernel: Kernel) -> Self {
        let (phi, psi) = kernel_moments(kernel);
        Self {
            kernel,
            support_halfwidth: kernel.support_halfwidth(),
            phi,
            psi,
        }
    }
}

/// `(phi, psi)` by adaptive quadrature over the kernel's smooth pieces.
pub fn kernel_moments(kernel: Kernel) -> (f64, f64) {
    let phi = integrate_kernel(kernel, |u| kernel.eval(u).powi(2));
    let psi = integrate_kernel(kernel, |u| 0.5 * u * u * kernel.eval(u));
    (phi, psi)
}

/// Integrates `f` over the support of `kernel`, splitting at every kink.
pub(crate) fn integrate_kernel(kernel: Kernel, f: impl Fn(f64) -> f64) -> f64 {
    let breaks: &[f64] = match kernel {
        Kernel::Epanechnikov => &[-1.0, 1.0],
        Kernel::Jackknife => &[-SQRT_2, -1.0, 1.0, SQRT_2],
    };
    breaks
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], QUAD_TOL))
        .sum()
}

/// Adaptive Simpson quadrature with Richardson correction.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// How the smoothing bandwidth `b_n` is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BandwidthConfig {
    /// `b_n = n^(-exponent)` with `n` the length of the analysed series.
    RuleOfThumb { exponent: f64 },
    Fixed { value: f64 },
    /// Leave-one-out cross-validation over `candidates`; when absent, a grid of
    /// 20 values spanning `[0.05, 1.0]` times the covariate standard deviation.
    CrossValidation { candidates: Option<Vec<f64>> },
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        BandwidthConfig::RuleOfThumb {
            exponent: DEFAULT_EXPONENT,
        }
    }
}

impl BandwidthConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            BandwidthConfig::RuleOfThumb { exponent } => check_exponent(*exponent),
            BandwidthConfig::Fixed { value } => {
                if value.is_finite() && *value > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig(format!(
                        "fixed bandwidth must be positive, got {value}"
                    )))
                }
            }
            BandwidthConfig::CrossValidation { candidates } => match candidates {
                Some(c) if c.is_empty() => Err(Error::InvalidConfig(
                    "cross-validation needs at least one candidate".into(),
                )),
                Some(c) if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) => Err(
                    Error::InvalidConfig("candidate bandwidths must be positive".into()),
                ),
                _ => Ok(()),
            },
        }
    }

    /// Concrete bandwidth for the observations in `window`.
    pub fn resolve(&self, window: Window<'_>) -> Result<f64> {
        self.validate()?;
        match self {
            BandwidthConfig::RuleOfThumb { exponent } => {
                rule_of_thumb_bandwidth(window.len().max(1), *exponent)
            }
            BandwidthConfig::Fixed { value } => Ok(*value),
            BandwidthConfig::CrossValidation { candidates } => {
                let grid = match candidates {
                    Some(c) => c.clone(),
                    None => default_cv_grid(window.x),
                };
                cv_bandwidth(window, &grid)
            }
        }
    }
}

fn check_exponent(exponent: f64) -> Result<()> {
    if exponent > MIN_EXPONENT && exponent < MAX_EXPONENT {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "bandwidth exponent {exponent} outside the admissible range (1/9, 1/3)"
        )))
    }
}

/// `n^(-exponent)`.
pub fn rule_of_thumb_bandwidth(n: usize, exponent: f64) -> Result<f64> {
    check_exponent(exponent)?;
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be positive".into()));
    }
    Ok((n as f64).powf(-exponent))
}

fn default_cv_grid(x: &[f64]) -> Vec<f64> {
    let n = x.len().max(1) as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    (1..=20).map(|k| scale * 0.05 * k as f64).collect()
}

/// Minimum number of observations for cross-validation.
pub const CV_MIN_OBS: usize = 20;

/// Leave-one-out cross-validated bandwidth for the parabolic-kernel NW mean.
///
/// Each candidate is scored by `sum_t (Y_t - m_{-t}(X_t))^2`. A candidate that
/// leaves any observation without an in-window neighbour scores `+inf`. Ties
/// go to the smallest bandwidth.
pub fn cv_bandwidth(window: Window<'_>, candidates: &[f64]) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate bandwidths".into()));
    }
    if window.len() < CV_MIN_OBS {
        return Err(Error::SegmentTooSmall {
            len: window.len(),
            min: CV_MIN_OBS,
        });
    }
    let mut order: Vec<usize> = (0..window.len()).collect();
    order.sort_by(|&a, &b| window.x[a].total_cmp(&window.x[b]));
    let xs: Vec<f64> = order.iter().map(|&i| window.x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| window.y[i]).collect();

    let mut sorted: Vec<f64> = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);

    let mut best: Option<(f64, f64)> = None;
    for &b in &sorted {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidConfig(format!("candidate bandwidth {b}")));
        }
        let score = loo_score(&xs, &ys, b);
        if score.is_finite() && best.is_none_or(|(_, s)| score < s) {
            best = Some((b, score));
        }
    }
    best.map(|(b, _)| b).ok_or(Error::DegenerateSample)
}

fn loo_score(xs: &[f64], ys: &[f64], b: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..xs.len() {
        let lo = xs.partition_point(|&v| v < xs[i] - b);
        let hi = xs.partition_point(|&v| v <= xs[i] + b);
        let (mut num, mut den) = (0.0, 0.0);
        for j in lo..hi {
            if j == i {
                continue;
            }
            let w = kernel_eval((xs[i] - xs[j]) / b);
            num += w * ys[j];
            den += w;
        }
        if den <= 0.0 {
            return f64::INFINITY;
        }
        total += (ys[i] - num / den).powi(2);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parabolic_values() {
        assert_eq!(kernel_eval(0.0), 0.75);
        assert_eq!(kernel_eval(1.0), 0.0);
        assert_eq!(kernel_eval(-1.0), 0.0);
        assert_eq!(kernel_eval(1.5), 0.0);
        assert!((kernel_eval(0.5) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn jackknife_values() {
        let expected = 2.0 * 0.75 - 0.75 / SQRT_2;
        assert!((jackknife_eval(0.0) - expected).abs() < 1e-15);
        assert!((jackknife_eval(0.0) - 0.96967).abs() < 1e-5);
        assert_eq!(jackknife_eval(SQRT_2), 0.0);
        assert_eq!(jackknife_eval(-SQRT_2), 0.0);
        assert_eq!(jackknife_eval(1.6), 0.0);
    }

    #[test]
    fn jackknife_is_negative_between_one_and_root_two() {
        assert!(jackknife_eval(1.2) < 0.0);
    }

    #[test]
    fn moment_constants() {
        let (phi, psi) = kernel_moments(Kernel::Epanechnikov);
        assert!((phi - 0.6).abs() < 1e-12, "phi = {phi}");
        assert!((psi - 0.1).abs() < 1e-12, "psi = {psi}");
        let (phi_j, psi_j) = kernel_moments(Kernel::Jackknife);
        assert!(psi_j.abs() < 1e-10, "psi(K*) = {psi_j}");
        assert!(phi_j > 0.0);
    }

    #[test]
    fn kernels_integrate_to_one() {
        for k in [Kernel::Epanechnikov, Kernel::Jackknife] {
            let mass = integrate_kernel(k, |u| k.eval(u));
            assert!((mass - 1.0).abs() < 1e-8, "{k:?}: {mass}");
        }
    }

    #[test]
    fn cached_spec_matches_fresh() {
        assert_eq!(*Kernel::Jackknife.spec(), KernelSpec::new(Kernel::Jackknife));
        assert_eq!(Kernel::Jackknife.spec().support_halfwidth, SQRT_2);
    }

    #[test]
    fn rule_of_thumb_examples() {
        assert!((rule_of_thumb_bandwidth(1704, 0.2).unwrap() - 0.2258).abs() < 1e-4);
        assert_eq!(rule_of_thumb_bandwidth(1, 0.2).unwrap(), 1.0);
        assert!((rule_of_thumb_bandwidth(1000, 0.2).unwrap() - 0.251189).abs() < 1e-5);
    }

    #[test]
    fn rule_of_thumb_rejects_bad_exponent() {
        assert!(rule_of_thumb_bandwidth(100, 0.1).is_err());
        assert!(rule_of_thumb_bandwidth(100, 0.34).is_err());
        assert!(rule_of_thumb_bandwidth(100, 1.0 / 3.0).is_err());
    }

    #[test]
    fn cv_constant_series_picks_smallest() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y = vec![3.0; 50];
        let b = cv_bandwidth(Window::new(&x, &y), &[0.5, 0.3, 1.0]).unwrap();
        assert_eq!(b, 0.3);
    }

    #[test]
    fn cv_singleton() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        assert_eq!(cv_bandwidth(Window::new(&x, &y), &[0.3]).unwrap(), 0.3);
    }

    /// Brute-force leave-one-out score straight from the definition.
    fn loo_oracle(x: &[f64], y: &[f64], b: f64) -> f64 {
        let mut total = 0.0;
        for t in 0..x.len() {
            let (mut num, mut den) = (0.0, 0.0);
            for s in (0..x.len()).filter(|&s| s != t) {
                let w = 0.75 * (1.0 - ((x[s] - x[t]) / b).powi(2)).max(0.0);
                num += w * y[s];
                den += w;
            }
            if den == 0.0 {
                return f64::INFINITY;
            }
            total += (y[t] - num / den).powi(2);
        }
        total
    }

    #[test]
    fn cv_sine_regression() {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let x: Vec<f64> = (0..500).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v.sin() + 0.5 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let candidates: Vec<f64> = (1..=20).map(|k| 0.05 * k as f64).collect();
        let picked = cv_bandwidth(Window::new(&x, &y), &candidates).unwrap();
        let oracle = candidates
            .iter()
            .copied()
            .map(|b| (b, loo_oracle(&x, &y, b)))
            .fold((f64::NAN, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best })
            .0;
        assert_eq!(picked, oracle);
        let rot = 500f64.powf(-0.2);
        assert!(picked > rot / 3.0 && picked < rot * 3.0, "picked {picked}");
    }

    #[test]
    fn cv_degenerate_when_all_candidates_isolate_points() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y = vec![1.0; 30];
        let err = cv_bandwidth(Window::new(&x, &y), &[0.1, 0.5]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSample));
        // one usable candidate is enough
        assert_eq!(cv_bandwidth(Window::new(&x, &y), &[0.1, 1.5]).unwrap(), 1.5);
    }

    #[test]
    fn cv_rejects_tiny_sample() {
        let x = vec![0.0; 5];
        assert!(cv_bandwidth(Window::new(&x, &x), &[0.3]).is_err());
    }

    proptest! {
        #[test]
        fn kernels_are_even(u in -3.0f64..3.0) {
            prop_assert_eq!(kernel_eval(u), kernel_eval(-u));
            prop_assert_eq!(jackknife_eval(u), jackknife_eval(-u));
        }

        #[test]
        fn kernels_vanish_outside_support(u in 1.0f64..10.0) {
            prop_assert_eq!(kernel_eval(u), 0.0);
            if u >= SQRT_2 {
                prop_assert_eq!(jackknife_eval(u), 0.0);
            }
        }

        #[test]
        fn rule_of_thumb_decreasing(n in 1usize..100_000, e in 0.12f64..0.33) {
            let a = rule_of_thumb_bandwidth(n, e).unwrap();
            let b = rule_of_thumb_bandwidth(n + 1, e).unwrap();
            prop_assert!(b < a);
        }

        #[test]
        fn cv_returns_a_candidate(
            seed in 0u64..1000,
            cands in proptest::collection::vec(0.05f64..2.0, 1..6),
        ) {
            let x: Vec<f64> = (0..40).map(|i| ((i as u64 * 7919 + seed) % 97) as f64 / 20.0).collect();
            let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
            if let Ok(b) = cv_bandwidth(Window::new(&x, &y), &cands) {
                prop_assert!(cands.contains(&b));
            }
        }
    }
}
