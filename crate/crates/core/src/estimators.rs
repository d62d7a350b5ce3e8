// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nadaraya-Watson estimation of the covariate density, conditional mean and
//! conditional variance of one time segment, evaluated on a covariate grid.
//!
//! Means and variances are self-normalized kernel ratios computed over the
//! segment itself. The bias-corrected versions use the jackknife kernel `K*`;
//! the density uses the parabolic kernel and decides which grid points carry
//! enough data to be trusted.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::sample::Window;

pub const VARIANCE_FLOOR: f64 = 1e-8;
pub const MIN_SEGMENT_N: usize = 30;
const OBS_MASS_RATIO: f64 = 0.5;

/// Numerical guards shared by all segment estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub min_segment_n: usize,
    pub variance_floor: f64,
    /// Lower bound on the density floor.
    pub density_floor_min: f64,
    /// The density floor is at least `density_floor_count / (n b)`, i.e. a
    /// grid point needs roughly this many observations in its window.
    pub density_floor_count: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            min_segment_n: MIN_SEGMENT_N,
            variance_floor: VARIANCE_FLOOR,
            density_floor_min: 0.01,
            density_floor_count: 5.0,
        }
    }
}

impl EstimatorConfig {
    pub fn density_floor(&self, n: usize, b: f64) -> f64 {
        self.density_floor_min
            .max(self.density_floor_count / (n as f64 * b))
    }
}

/// Covariate grid `x_j = lambda1 + 2 j b`, `j = 0..m`, with
/// `m = ceil((lambda2 - lambda1) / (2 b))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    pub points: Vec<f64>,
    pub m: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub bandwidth: f64,
}

impl EvaluationGrid {
    /// Index of the grid point whose cell `[x_j - b, x_j + b)` holds `x`,
    /// clamped to the grid ends.
    pub fn cell_of(&self, x: f64) -> usize {
        let j = ((x - self.lambda1) / (2.0 * self.bandwidth)).round();
        (j.max(0.0) as usize).min(self.m - 1)
    }
}

pub fn build_grid(lambda1: f64, lambda2: f64, b: f64) -> Result<EvaluationGrid> {
    if !(lambda1.is_finite() && lambda2.is_finite()) || lambda1 >= lambda2 {
        return Err(Error::InvalidRange {
            lo: lambda1,
            hi: lambda2,
        });
    }
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidConfig(format!("bandwidth must be positive, got {b}")));
    }
    let m = ((lambda2 - lambda1) / (2.0 * b)).ceil() as usize;
    let m = m.max(1);
    let points = (0..m).map(|j| lambda1 + 2.0 * j as f64 * b).collect();
    Ok(EvaluationGrid {
        points,
        m,
        lambda1,
        lambda2,
        bandwidth: b,
    })
}

/// `(n b)^-1 sum_t K((x - X_t) / b)`.
pub fn density_estimate(x: f64, xs: &[f64], b: f64, kernel: Kernel) -> f64 {
    let n = xs.len() as f64;
    xs.iter().map(|&xt| kernel.eval((x - xt) / b)).sum::<f64>() / (n * b)
}

/// Self-normalized NW mean `sum Y K / sum K` at `x`.
pub fn nw_mean(x: f64, segment: Window<'_>, b: f64, kernel: Kernel) -> Result<f64> {
    let reach = b * kernel.support_halfwidth();
    let (mut num, mut den, mut hits) = (0.0, 0.0, 0usize);
    for (&xt, &yt) in segment.x.iter().zip(segment.y) {
        if (x - xt).abs() <= reach {
            let w = kernel.eval((x - xt) / b);
            num += w * yt;
            den += w;
            hits += 1;
        }
    }
    if hits == 0 || den <= 0.0 {
        return Err(Error::EmptyWindow { x });
    }
    Ok(num / den)
}

/// Kernel average of squared residuals `(Y_t - mean_fn(X_t))^2` at `x`,
/// clipped below at [`VARIANCE_FLOOR`].
pub fn nw_variance(
    x: f64,
    segment: Window<'_>,
    mean_fn: impl Fn(f64) -> f64,
    b: f64,
    kernel: Kernel,
) -> Result<f64> {
    let reach = b * kernel.support_halfwidth();
    let (mut num, mut den, mut hits) = (0.0, 0.0, 0usize);
    for (&xt, &yt) in segment.x.iter().zip(segment.y) {
        if (x - xt).abs() <= reach {
            let w = kernel.eval((x - xt) / b);
            num += w * (yt - mean_fn(xt)).powi(2);
            den += w;
            hits += 1;
        }
    }
    if hits == 0 || den <= 0.0 {
        return Err(Error::EmptyWindow { x });
    }
    Ok((num / den).max(VARIANCE_FLOOR))
}

/// Segment observations sorted by covariate, with bias-corrected mean and
/// variance evaluated directly at every observation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ObservationFit {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl ObservationFit {
    fn range(&self, center: f64, reach: f64) -> Range<usize> {
        let lo = self.x.partition_point(|&v| v < center - reach);
        let hi = self.x.partition_point(|&v| v <= center + reach);
        lo..hi
    }

    /// `(sum w v_t, sum w)` over the window of `kernel` around `center`.
    fn weighted(&self, center: f64, b: f64, kernel: Kernel, v: impl Fn(usize) -> f64) -> (f64, f64) {
        let (mut num, mut den) = (0.0, 0.0);
        for t in self.range(center, b * kernel.support_halfwidth()) {
            let w = kernel.eval((center - self.x[t]) / b);
            num += w * v(t);
            den += w;
        }
        (num, den)
    }

    /// Jackknife and parabolic ratios at an observation. The parabolic
    /// kernel always has positive mass there.
    fn ratios_at_observation(&self, center: f64, b: f64, v: impl Fn(usize) -> f64 + Copy) -> (f64, f64, bool) {
        let (jn, jd) = self.weighted(center, b, Kernel::Jackknife, v);
        let (bn, bd) = self.weighted(center, b, Kernel::Epanechnikov, v);
        (jn / jd, bn / bd, jd >= OBS_MASS_RATIO * bd)
    }

    /// Mean and variance at every observation. The jackknife fit is used
    /// unless its weights carry less than half the parabolic mass; the
    /// variance is bounded below by half the parabolic variance so that
    /// standardized residuals stay finite in sparse regions.
    fn new(segment: Window<'_>, b: f64, variance_floor: f64) -> Self {
        let mut order: Vec<usize> = (0..segment.len()).collect();
        order.sort_by(|&a, &c| segment.x[a].total_cmp(&segment.x[c]));
        let x: Vec<f64> = order.iter().map(|&i| segment.x[i]).collect();
        let y: Vec<f64> = order.iter().map(|&i| segment.y[i]).collect();
        let mut fit = Self {
            x,
            y,
            mean: Vec::new(),
            var: Vec::new(),
        };
        let ys = fit.y.clone();
        fit.mean = fit
            .x
            .iter()
            .map(|&xt| match fit.ratios_at_observation(xt, b, |t| ys[t]) {
                (jack, _, true) => jack,
                (_, base, false) => base,
            })
            .collect();
        let sq: Vec<f64> = ys.iter().zip(&fit.mean).map(|(y, m)| (y - m).powi(2)).collect();
        fit.var = fit
            .x
            .iter()
            .map(|&xt| {
                let (jack, base, ok) = fit.ratios_at_observation(xt, b, |t| sq[t]);
                let v = if ok { jack.max(OBS_MASS_RATIO * base) } else { base };
                v.max(variance_floor)
            })
            .collect();
        fit
    }

    fn squared_residuals(&self) -> Vec<f64> {
        self.y
            .iter()
            .zip(&self.mean)
            .map(|(y, m)| (y - m).powi(2))
            .collect()
    }
}

/// Grid-evaluated estimates for one segment.
///
/// Entries of `mean_bc` and `var_bc` at points outside `valid_mask` are
/// `NaN` when the jackknife weights carry no positive mass there; callers
/// must consult the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentEstimate {
    pub grid: EvaluationGrid,
    pub density: Vec<f64>,
    pub mean_bc: Vec<f64>,
    pub var_bc: Vec<f64>,
    /// Parabolic-kernel variance of the residuals against the bias-corrected
    /// mean; used for standardization.
    pub var_nw: Vec<f64>,
    pub n_eff: usize,
    pub valid_mask: Vec<bool>,
    pub(crate) obs: ObservationFit,
}

impl SegmentEstimate {
    pub fn valid_count(&self) -> usize {
        self.valid_mask.iter().filter(|&&v| v).count()
    }

    pub fn bandwidth(&self) -> f64 {
        self.grid.bandwidth
    }
}

/// Density (parabolic kernel), bias-corrected mean and bias-corrected
/// variance (jackknife kernel, residuals against the bias-corrected mean) at
/// every grid point.
pub fn estimate_segment(
    segment: Window<'_>,
    grid: &EvaluationGrid,
    cfg: &EstimatorConfig,
) -> Result<SegmentEstimate> {
    let n = segment.len();
    if n < cfg.min_segment_n {
        return Err(Error::SegmentTooSmall {
            len: n,
            min: cfg.min_segment_n,
        });
    }
    let b = grid.bandwidth;
    let obs = ObservationFit::new(segment, b, cfg.variance_floor);
    let sq = obs.squared_residuals();
    let floor = cfg.density_floor(n, b);
    let nb = n as f64 * b;

    let m = grid.m;
    let mut density = Vec::with_capacity(m);
    let mut mean_bc = Vec::with_capacity(m);
    let mut var_bc = Vec::with_capacity(m);
    let mut var_nw = Vec::with_capacity(m);
    let mut valid_mask = Vec::with_capacity(m);
    for &xj in &grid.points {
        let (base_vnum, base_mass) = obs.weighted(xj, b, Kernel::Epanechnikov, |t| sq[t]);
        let f = base_mass / nb;
        let (mnum, jack_mass) = obs.weighted(xj, b, Kernel::Jackknife, |t| obs.y[t]);
        let (vnum, _) = obs.weighted(xj, b, Kernel::Jackknife, |t| sq[t]);
        let positive = jack_mass > 0.0;
        density.push(f);
        var_nw.push(if base_mass > 0.0 {
            (base_vnum / base_mass).max(cfg.variance_floor)
        } else {
            f64::NAN
        });
        if positive {
            mean_bc.push(mnum / jack_mass);
            var_bc.push((vnum / jack_mass).max(cfg.variance_floor));
        } else {
            mean_bc.push(f64::NAN);
            var_bc.push(f64::NAN);
        }
        valid_mask.push(f >= floor && jack_mass / nb >= 0.5 * floor);
    }
    if !valid_mask.iter().any(|&v| v) {
        return Err(Error::AllPointsInvalid);
    }
    Ok(SegmentEstimate {
        grid: grid.clone(),
        density,
        mean_bc,
        var_bc,
        var_nw,
        n_eff: n,
        valid_mask,
        obs,
    })
}

/// Excess fourth moment `E(eps^4) - 1` estimated from standardized residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuEpsilonEstimate {
    pub value: f64,
    pub count: usize,
}

/// Pools the fourth powers of standardized residuals
/// `(Y_t - mu*(X_t)) / sqrt(sigma*^2(X_t))` from both segments, keeping only
/// observations whose covariate falls in a valid grid cell of their own
/// segment.
pub fn estimate_nu_epsilon(
    first: &SegmentEstimate,
    second: &SegmentEstimate,
) -> Result<NuEpsilonEstimate> {
    let (mut sum, mut count) = (0.0, 0usize);
    for est in [first, second] {
        let fit = &est.obs;
        for t in 0..fit.x.len() {
            if !est.valid_mask[est.grid.cell_of(fit.x[t])] {
                continue;
            }
            let r = (fit.y[t] - fit.mean[t]) / fit.var[t].sqrt();
            sum += r.powi(4);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NoValidResiduals);
    }
    Ok(NuEpsilonEstimate {
        value: sum / count as f64 - 1.0,
        count,
    })
}
