// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sup-type tests for a structural break between the two halves of a window,
//! with extreme-value critical values and simultaneous confidence bands.
//!
//! Both halves are estimated on a common covariate grid built from the pooled
//! covariate range of the window. The supremum runs over grid points that are
//! valid in both halves. Scaling uses the pooled covariate density.
//!
//! The per-half sample size `n` enters through `sigma1^2 / n1 + sigma2^2 / n2`,
//! which reduces to `S(x) / n` for equal halves and stays correct for the
//! unequal splits used when confirming candidate breaks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    build_grid, estimate_nu_epsilon, estimate_segment, EstimatorConfig, EvaluationGrid,
    NuEpsilonEstimate, SegmentEstimate,
};
use crate::kernels::{BandwidthConfig, Kernel};
use crate::sample::Window;

/// Which functional characteristic is compared across the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Mean,
    Variance,
    Joint,
}

/// Standardization of the mean difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceAssumption {
    /// One conditional variance for the whole window, estimated from the
    /// pooled window.
    Common,
    /// Each half has its own conditional variance; scaled by their sum.
    Separate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub variance_assumption: VarianceAssumption,
    pub bandwidth: BandwidthConfig,
    pub target: Target,
    pub estimator: EstimatorConfig,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            variance_assumption: VarianceAssumption::Common,
            bandwidth: BandwidthConfig::default(),
            target: Target::Mean,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        self.bandwidth.validate()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

/// Quantile `z` with `exp(-2 exp(-z)) = 1 - alpha`, the limit law of the
/// maximum absolute deviation over the grid.
pub fn gumbel_quantile(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-(-(1.0 - alpha).ln() / 2.0).ln())
}

/// Gumbel-limit CDF `exp(-2 exp(-z))`.
pub fn gumbel_cdf(z: f64) -> f64 {
    (-2.0 * (-z).exp()).exp()
}

/// Normalizing sequence
/// `B_m(z) = sqrt(2 log m) - [log log m + log(2 sqrt pi)] / sqrt(2 log m) + z / sqrt(2 log m)`.
pub fn critical_value(m: usize, z: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain {
            what: "grid size",
            value: m as f64,
            domain: "m >= 2",
        });
    }
    let a = (2.0 * (m as f64).ln()).sqrt();
    let shift = (m as f64).ln().ln() + (2.0 * std::f64::consts::PI.sqrt()).ln();
    Ok(a - shift / a + z / a)
}

/// Approximate tail probability of `statistic` under the limit law, found by
/// inverting `B_m`. Only a rough guide; decisions use the critical value.
pub fn approximate_p_value(statistic: f64, m: usize) -> Result<f64> {
    let base = critical_value(m, 0.0)?;
    let a = (2.0 * (m as f64).ln()).sqrt();
    let z = (statistic - base) * a;
    Ok(1.0 - gumbel_cdf(z))
}

/// Result of one sup-type test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub m: usize,
    pub critical_value: f64,
    pub reject: bool,
    pub argmax_x: f64,
    pub nu_epsilon: Option<NuEpsilonEstimate>,
    pub bandwidth: f64,
    pub valid_points: usize,
}

/// Holm step-down combination of the mean and variance tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOutcome {
    pub mean: TestOutcome,
    pub variance: TestOutcome,
    pub t_max: f64,
    pub t_min: f64,
    /// `B_m(z_{alpha/2})`.
    pub critical_value_half: f64,
    /// `T_max >= B_m(z_{alpha/2})`.
    pub reject_any: bool,
    pub reject_mean: bool,
    pub reject_variance: bool,
    /// `T_min >= B_m(z_{alpha/2})` and `T_max >= B_m(z_alpha)`.
    pub reject_both_printed: bool,
}

/// Simultaneous band for a difference function, restricted to valid grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBand {
    pub level: f64,
    pub x: Vec<f64>,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl ConfidenceBand {
    pub fn lower(&self) -> impl Iterator<Item = f64> + '_ {
        self.center.iter().zip(&self.half_width).map(|(c, h)| c - h)
    }

    pub fn upper(&self) -> impl Iterator<Item = f64> + '_ {
        self.center.iter().zip(&self.half_width).map(|(c, h)| c + h)
    }

    pub fn excludes_zero(&self) -> bool {
        self.center
            .iter()
            .zip(&self.half_width)
            .any(|(c, h)| c.abs() > *h)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Both halves of a window estimated on a shared grid.
pub(crate) struct SplitFit {
    pub grid: EvaluationGrid,
    pub first: SegmentEstimate,
    pub second: SegmentEstimate,
    /// Pooled parabolic-kernel density of the whole window at each grid point.
    pub pooled_density: Vec<f64>,
    /// Pooled parabolic-kernel variance, only for the common assumption.
    pub pooled_var: Option<Vec<f64>>,
    pub valid: Vec<usize>,
}

impl SplitFit {
    pub fn new(
        window: Window<'_>,
        split: usize,
        b: f64,
        estimator: &EstimatorConfig,
        pooled_variance: bool,
    ) -> Result<Self> {
        if split == 0 || split >= window.len() {
            return Err(Error::InvalidInput(format!(
                "split {split} must lie strictly inside a window of length {}",
                window.len()
            )));
        }
        let (left, right) = window.split(split);
        for part in [left, right] {
            if part.len() < estimator.min_segment_n {
                return Err(Error::SegmentTooSmall {
                    len: part.len(),
                    min: estimator.min_segment_n,
                });
            }
        }
        let (lo, hi) = window.x_range();
        let grid = build_grid(lo, hi, b)?;
        let first = estimate_segment(left, &grid, estimator)?;
        let second = estimate_segment(right, &grid, estimator)?;
        let pooled = if pooled_variance {
            Some(estimate_segment(window, &grid, estimator)?)
        } else {
            None
        };
        let pooled_density = match &pooled {
            Some(p) => p.density.clone(),
            None => {
                let (n1, n2) = (first.n_eff as f64, second.n_eff as f64);
                (0..grid.m)
                    .map(|j| (n1 * first.density[j] + n2 * second.density[j]) / (n1 + n2))
                    .collect()
            }
        };
        let valid: Vec<usize> = (0..grid.m)
            .filter(|&j| first.valid_mask[j] && second.valid_mask[j])
            .collect();
        if valid.is_empty() {
            return Err(Error::AllPointsInvalid);
        }
        Ok(Self {
            grid,
            first,
            second,
            pooled_density,
            pooled_var: pooled.map(|p| p.var_nw),
            valid,
        })
    }

    fn n1(&self) -> f64 {
        self.first.n_eff as f64
    }

    fn n2(&self) -> f64 {
        self.second.n_eff as f64
    }

    /// Standard error of `mu1*(x_j) - mu2*(x_j)`.
    pub fn mean_se(&self, j: usize, assumption: VarianceAssumption) -> f64 {
        let phi = Kernel::Jackknife.spec().phi;
        let b = self.grid.bandwidth;
        let spread = match assumption {
            VarianceAssumption::Separate => {
                self.spread(j)
            }
            VarianceAssumption::Common => {
                let pooled = self.pooled_var.as_ref().expect("pooled variance fitted")[j];
                pooled * (1.0 / self.n1() + 1.0 / self.n2())
            }
        };
        (phi * spread / (b * self.pooled_density[j])).sqrt()
    }

    /// `sigma1^2 / n1 + sigma2^2 / n2`, the generalization of `S(x) / n`.
    pub fn spread(&self, j: usize) -> f64 {
        self.first.var_nw[j] / self.n1() + self.second.var_nw[j] / self.n2()
    }

    /// `S(x) = sigma1^2 + sigma2^2`.
    pub fn s_hat(&self, j: usize) -> f64 {
        self.first.var_nw[j] + self.second.var_nw[j]
    }

    /// Scale dividing `|sigma1*^2 - sigma2*^2|` in the variance statistic,
    /// before the `nu_epsilon` factor.
    pub fn variance_scale(&self, j: usize) -> f64 {
        let phi = Kernel::Jackknife.spec().phi;
        let b = self.grid.bandwidth;
        (phi * self.spread(j) / (b * self.pooled_density[j])).sqrt()
    }

    pub fn mean_diff(&self, j: usize) -> f64 {
        self.first.mean_bc[j] - self.second.mean_bc[j]
    }

    pub fn var_diff(&self, j: usize) -> f64 {
        self.first.var_bc[j] - self.second.var_bc[j]
    }

    pub fn nu_epsilon(&self) -> Result<NuEpsilonEstimate> {
        let nu = estimate_nu_epsilon(&self.first, &self.second)?;
        if nu.value > 0.0 {
            Ok(nu)
        } else {
            Err(Error::DegenerateNoise(nu.value))
        }
    }

    /// Largest of `value(j)` over valid points; ties go to the lowest `x`.
    fn sup(&self, value: impl Fn(usize) -> f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, self.valid[0]);
        for &j in &self.valid {
            let v = value(j);
            if v > best.0 {
                best = (v, j);
            }
        }
        best
    }

    pub fn mean_statistic(&self, assumption: VarianceAssumption) -> (f64, usize) {
        self.sup(|j| self.mean_diff(j).abs() / self.mean_se(j, assumption))
    }

    pub fn variance_statistic(&self, nu: f64) -> (f64, usize) {
        self.sup(|j| self.var_diff(j).abs() / (nu * self.variance_scale(j)))
    }

    /// `max_j |mu1* - mu2*|` and `max_j |sigma1*^2 - sigma2*^2|`.
    pub fn disparity(&self) -> (f64, f64) {
        let mu = self.sup(|j| self.mean_diff(j).abs()).0;
        let sigma = self.sup(|j| self.var_diff(j).abs()).0;
        (mu, sigma)
    }

    fn outcome(&self, statistic: f64, j: usize, critical: f64, nu: Option<NuEpsilonEstimate>) -> TestOutcome {
        TestOutcome {
            statistic,
            m: self.grid.m,
            critical_value: critical,
            reject: statistic > critical,
            argmax_x: self.grid.points[j],
            nu_epsilon: nu,
            bandwidth: self.grid.bandwidth,
            valid_points: self.valid.len(),
        }
    }
}

fn prepare(window: Window<'_>, split: usize, cfg: &TestConfig, pooled: bool) -> Result<(SplitFit, f64)> {
    cfg.validate()?;
    let b = cfg.bandwidth.resolve(window)?;
    let fit = SplitFit::new(window, split, b, &cfg.estimator, pooled)?;
    let z = gumbel_quantile(cfg.alpha)?;
    let critical = critical_value(fit.grid.m, z)?;
    Ok((fit, critical))
}

fn needs_pooled(cfg: &TestConfig) -> bool {
    cfg.variance_assumption == VarianceAssumption::Common
}

/// Test for a break in the conditional mean between `[0, split)` and
/// `[split, len)` of `window`.
pub fn test_mean(window: Window<'_>, split: usize, cfg: &TestConfig) -> Result<TestOutcome> {
    let (fit, critical) = prepare(window, split, cfg, needs_pooled(cfg))?;
    let (stat, j) = fit.mean_statistic(cfg.variance_assumption);
    Ok(fit.outcome(stat, j, critical, None))
}

/// Test for a break in the conditional variance.
pub fn test_variance(window: Window<'_>, split: usize, cfg: &TestConfig) -> Result<TestOutcome> {
    let (fit, critical) = prepare(window, split, cfg, false)?;
    let nu = fit.nu_epsilon()?;
    let (stat, j) = fit.variance_statistic(nu.value);
    Ok(fit.outcome(stat, j, critical, Some(nu)))
}

/// Mean and variance tests combined with Holm's step-down correction.
pub fn test_joint(window: Window<'_>, split: usize, cfg: &TestConfig) -> Result<JointOutcome> {
    let (fit, critical) = prepare(window, split, cfg, needs_pooled(cfg))?;
    joint_from_fit(&fit, cfg, critical)
}

pub(crate) fn joint_from_fit(fit: &SplitFit, cfg: &TestConfig, critical: f64) -> Result<JointOutcome> {
    let (tm, jm) = fit.mean_statistic(cfg.variance_assumption);
    let nu = fit.nu_epsilon()?;
    let (tv, jv) = fit.variance_statistic(nu.value);
    let mean = fit.outcome(tm, jm, critical, None);
    let variance = fit.outcome(tv, jv, critical, Some(nu));
    let critical_half = critical_value(fit.grid.m, gumbel_quantile(cfg.alpha / 2.0)?)?;
    let (t_max, t_min) = (tm.abs().max(tv.abs()), tm.abs().min(tv.abs()));
    let reject_any = t_max >= critical_half;
    let other = reject_any && t_min >= critical;
    let mean_is_max = tm.abs() >= tv.abs();
    Ok(JointOutcome {
        t_max,
        t_min,
        critical_value_half: critical_half,
        reject_any,
        reject_mean: if mean_is_max { reject_any } else { other },
        reject_variance: if mean_is_max { other } else { reject_any },
        reject_both_printed: t_min >= critical_half && t_max >= critical,
        mean,
        variance,
    })
}

/// Simultaneous `1 - alpha` band for `mu1(x) - mu2(x)`.
pub fn confidence_band_mean_diff(window: Window<'_>, split: usize, cfg: &TestConfig) -> Result<ConfidenceBand> {
    let (fit, critical) = prepare(window, split, cfg, needs_pooled(cfg))?;
    Ok(mean_band_from_fit(&fit, cfg, critical))
}

pub(crate) fn mean_band_from_fit(fit: &SplitFit, cfg: &TestConfig, critical: f64) -> ConfidenceBand {
    let mut band = ConfidenceBand {
        level: 1.0 - cfg.alpha,
        x: Vec::with_capacity(fit.valid.len()),
        center: Vec::with_capacity(fit.valid.len()),
        half_width: Vec::with_capacity(fit.valid.len()),
    };
    for &j in &fit.valid {
        band.x.push(fit.grid.points[j]);
        band.center.push(fit.mean_diff(j));
        band.half_width.push(fit.mean_se(j, cfg.variance_assumption) * critical);
    }
    band
}

/// Simultaneous `1 - alpha` band for `sigma1^2(x) - sigma2^2(x)`, with
/// half-width `nu sqrt(phi(K*) f(x)) / sqrt(n b S(x)) B_m(z)`. For unequal
/// halves `n` is taken as `S(x) / (sigma1^2 / n1 + sigma2^2 / n2)`.
pub fn confidence_band_variance_diff(
    window: Window<'_>,
    split: usize,
    cfg: &TestConfig,
) -> Result<ConfidenceBand> {
    let (fit, critical) = prepare(window, split, cfg, false)?;
    let nu = fit.nu_epsilon()?;
    Ok(variance_band_from_fit(&fit, cfg, critical, nu.value))
}

pub(crate) fn variance_band_from_fit(fit: &SplitFit, cfg: &TestConfig, critical: f64, nu: f64) -> ConfidenceBand {
    let phi = Kernel::Jackknife.spec().phi;
    let b = fit.grid.bandwidth;
    let mut band = ConfidenceBand {
        level: 1.0 - cfg.alpha,
        x: Vec::with_capacity(fit.valid.len()),
        center: Vec::with_capacity(fit.valid.len()),
        half_width: Vec::with_capacity(fit.valid.len()),
    };
    for &j in &fit.valid {
        let hw = nu * (phi * fit.pooled_density[j]).sqrt() * fit.spread(j).sqrt()
            / (b.sqrt() * fit.s_hat(j))
            * critical;
        band.x.push(fit.grid.points[j]);
        band.center.push(fit.var_diff(j));
        band.half_width.push(hw);
    }
    band
}
