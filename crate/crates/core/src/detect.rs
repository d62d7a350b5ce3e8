// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multiple-break detection by recursive midpoint testing followed by a
//! confirmatory re-test of every candidate against its neighbours, plus the
//! single-break argmax estimator over a coarse time partition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorConfig;
use crate::hypothesis::{
    critical_value, gumbel_quantile, joint_from_fit, SplitFit, Target, TestConfig,
    VarianceAssumption,
};
use crate::kernels::BandwidthConfig;
use crate::sample::{TimeSeriesSample, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Segments shorter than this are not split further.
    pub l_min: usize,
    pub alpha: f64,
    pub target: Target,
    /// Minimum spacing between reported breaks; `None` means `l_min`.
    pub min_gap: Option<usize>,
    pub bandwidth: BandwidthConfig,
    pub variance_assumption: VarianceAssumption,
    pub estimator: EstimatorConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            l_min: 100,
            alpha: 0.05,
            target: Target::Joint,
            min_gap: None,
            bandwidth: BandwidthConfig::default(),
            variance_assumption: VarianceAssumption::Common,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.l_min < 2 * self.estimator.min_segment_n {
            return Err(Error::InvalidConfig(format!(
                "l_min = {} must be at least twice the minimum segment size {}",
                self.l_min, self.estimator.min_segment_n
            )));
        }
        self.test_config(self.bandwidth.clone()).validate()
    }

    pub fn min_gap(&self) -> usize {
        self.min_gap.unwrap_or(self.l_min)
    }

    fn test_config(&self, bandwidth: BandwidthConfig) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            variance_assumption: self.variance_assumption,
            bandwidth,
            target: self.target,
            estimator: self.estimator,
        }
    }
}

/// One detected break, as an absolute index into the series: the first
/// observation of the new regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedBreak {
    pub index: usize,
    pub confirmed: bool,
    /// `sup_x |mu-(x) - mu+(x)|` over the confirming window.
    pub mu_cp: f64,
    /// `sup_x |sigma-^2(x) - sigma+^2(x)|` over the confirming window.
    pub sigma_cp: f64,
    /// Test statistic of the confirming test (`T_max` for the joint target).
    pub statistic: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BreakSet {
    pub breaks: Vec<DetectedBreak>,
    /// Stage-1 candidates in ascending order.
    pub candidates: Vec<usize>,
    pub bandwidth: f64,
}

impl BreakSet {
    pub fn indices(&self) -> Vec<usize> {
        self.breaks.iter().map(|b| b.index).collect()
    }

    pub fn len(&self) -> usize {
        self.breaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }
}

struct Verdict {
    reject: bool,
    statistic: f64,
    mu_cp: f64,
    sigma_cp: f64,
}

/// Runs the configured test on `window` split at `split`. Estimation failures
/// count as "no break": they mean there is too little data to tell.
fn verdict(window: Window<'_>, split: usize, b: f64, cfg: &DetectConfig) -> Verdict {
    let none = Verdict {
        reject: false,
        statistic: 0.0,
        mu_cp: 0.0,
        sigma_cp: 0.0,
    };
    let pooled = cfg.variance_assumption == VarianceAssumption::Common && cfg.target != Target::Variance;
    let Ok(fit) = SplitFit::new(window, split, b, &cfg.estimator, pooled) else {
        return none;
    };
    let Ok(critical) = gumbel_quantile(cfg.alpha).and_then(|z| critical_value(fit.grid.m, z)) else {
        return none;
    };
    let (mu_cp, sigma_cp) = fit.disparity();
    let (reject, statistic) = match cfg.target {
        Target::Mean => {
            let (t, _) = fit.mean_statistic(cfg.variance_assumption);
            (t > critical, t)
        }
        Target::Variance => match fit.nu_epsilon() {
            Ok(nu) => {
                let (t, _) = fit.variance_statistic(nu.value);
                (t > critical, t)
            }
            Err(_) => return none,
        },
        Target::Joint => match joint_from_fit(&fit, &cfg.test_config(BandwidthConfig::Fixed { value: b }), critical) {
            Ok(j) => (j.reject_any, j.t_max),
            Err(_) => return none,
        },
    };
    Verdict {
        reject,
        statistic,
        mu_cp,
        sigma_cp,
    }
}

/// Disparities `(mu_cp, sigma_cp)` between `[0, t)` and `[t, n)`.
pub fn cp_disparity(series: &TimeSeriesSample, t: usize, cfg: &DetectConfig) -> Result<(f64, f64)> {
    let b = cfg.bandwidth.resolve(series.as_window())?;
    let fit = SplitFit::new(series.as_window(), t, b, &cfg.estimator, false)?;
    Ok(fit.disparity())
}

/// Two-stage detection.
///
/// Stage 1 tests each segment at its midpoint `floor(L / 2)` and recurses on
/// both halves after a rejection, stopping below `l_min` observations.
/// Stage 2 re-tests every candidate on the span between its neighbours and
/// drops the ones that no longer reject, sweeping until nothing changes.
/// Breaks closer than `min_gap` are then thinned, keeping the larger statistic.
///
/// The bandwidth is resolved once against the whole series.
pub fn cpfind(series: &TimeSeriesSample, cfg: &DetectConfig) -> Result<BreakSet> {
    cfg.validate()?;
    let n = series.len();
    if n < cfg.l_min {
        return Ok(BreakSet::default());
    }
    let b = cfg.bandwidth.resolve(series.as_window())?;
    let whole = series.as_window();

    let mut candidates = Vec::new();
    stage_one(whole, 0, n, b, cfg, &mut candidates);
    candidates.sort_unstable();

    let mut kept: Vec<DetectedBreak> = candidates
        .iter()
        .map(|&index| DetectedBreak {
            index,
            confirmed: false,
            mu_cp: 0.0,
            sigma_cp: 0.0,
            statistic: 0.0,
        })
        .collect();
    loop {
        let before = kept.len();
        let mut j = 0;
        while j < kept.len() {
            let lo = if j == 0 { 0 } else { kept[j - 1].index };
            let hi = kept.get(j + 1).map_or(n, |b| b.index);
            let at = kept[j].index;
            let v = verdict(whole.sub(lo..hi), at - lo, b, cfg);
            if v.reject {
                let k = &mut kept[j];
                k.confirmed = true;
                k.mu_cp = v.mu_cp;
                k.sigma_cp = v.sigma_cp;
                k.statistic = v.statistic;
                j += 1;
            } else {
                kept.remove(j);
            }
        }
        if kept.len() == before {
            break;
        }
    }
    enforce_min_gap(&mut kept, cfg.min_gap());
    Ok(BreakSet {
        breaks: kept,
        candidates,
        bandwidth: b,
    })
}

fn stage_one(whole: Window<'_>, start: usize, end: usize, b: f64, cfg: &DetectConfig, out: &mut Vec<usize>) {
    let len = end - start;
    if len < cfg.l_min {
        return;
    }
    let mid = len / 2;
    if !verdict(whole.sub(start..end), mid, b, cfg).reject {
        return;
    }
    let at = start + mid;
    out.push(at);
    let (mut left, mut right) = (Vec::new(), Vec::new());
    rayon::join(
        || stage_one(whole, start, at, b, cfg, &mut left),
        || stage_one(whole, at, end, b, cfg, &mut right),
    );
    out.extend(left);
    out.extend(right);
}

fn enforce_min_gap(breaks: &mut Vec<DetectedBreak>, min_gap: usize) {
    while let Some(j) = (1..breaks.len()).find(|&j| breaks[j].index - breaks[j - 1].index < min_gap) {
        let drop = if breaks[j].statistic > breaks[j - 1].statistic { j - 1 } else { j };
        breaks.remove(drop);
    }
}

/// Single-break estimate: the candidate of the time partition
/// `t_j = 2 j b n`, `j < ceil(1 / (2 b))`, maximizing the mean (or variance)
/// disparity. Ties go to the earliest candidate.
pub fn argmax_single_break(series: &TimeSeriesSample, cfg: &DetectConfig) -> Result<(usize, f64)> {
    if cfg.target == Target::Joint {
        return Err(Error::InvalidConfig(
            "single-break estimation needs target mean or variance".into(),
        ));
    }
    let n = series.len();
    let b = cfg.bandwidth.resolve(series.as_window())?;
    let k = (1.0 / (2.0 * b)).ceil() as usize;
    let min_seg = cfg.estimator.min_segment_n;
    let mut best: Option<(usize, f64)> = None;
    for j in 0..k {
        let t = (2.0 * j as f64 * b * n as f64).round() as usize;
        if t < min_seg || n.saturating_sub(t) < min_seg {
            continue;
        }
        let Ok(fit) = SplitFit::new(series.as_window(), t, b, &cfg.estimator, false) else {
            continue;
        };
        let (mu, sigma) = fit.disparity();
        let score = if cfg.target == Target::Mean { mu } else { sigma };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((t, score));
        }
    }
    best.ok_or(Error::NoAdmissibleCandidate(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DetectConfig {
        DetectConfig {
            l_min: 60,
            ..DetectConfig::default()
        }
    }

    #[test]
    fn short_series_is_empty() {
        let s = TimeSeriesSample::from_xy(vec![0.0; 50], (0..50).map(f64::from).collect()).unwrap();
        let set = cpfind(&s, &cfg()).unwrap();
        assert!(set.is_empty());
        assert!(set.candidates.is_empty());
    }

    #[test]
    fn rejects_l_min_below_two_segments() {
        let s = TimeSeriesSample::from_xy(vec![0.0; 100], vec![0.0; 100]).unwrap();
        let bad = DetectConfig {
            l_min: 59,
            ..DetectConfig::default()
        };
        assert!(matches!(cpfind(&s, &bad), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn min_gap_keeps_higher_statistic() {
        let mk = |index, statistic| DetectedBreak {
            index,
            confirmed: true,
            mu_cp: 0.0,
            sigma_cp: 0.0,
            statistic,
        };
        let mut v = vec![mk(100, 3.0), mk(150, 5.0), mk(400, 1.0), mk(420, 0.5)];
        enforce_min_gap(&mut v, 100);
        let idx: Vec<usize> = v.iter().map(|b| b.index).collect();
        assert_eq!(idx, vec![150, 400]);
    }

    #[test]
    fn argmax_needs_admissible_candidate() {
        let s = TimeSeriesSample::from_xy(vec![0.0; 40], (0..40).map(f64::from).collect()).unwrap();
        let c = DetectConfig {
            target: Target::Mean,
            ..cfg()
        };
        assert!(matches!(argmax_single_break(&s, &c), Err(Error::NoAdmissibleCandidate(40))));
    }

    #[test]
    fn identical_halves_have_zero_disparity() {
        let half_x: Vec<f64> = (0..80).map(|i| ((i * 37) % 80) as f64 / 20.0).collect();
        let half_y: Vec<f64> = half_x.iter().map(|v| v.sin() + 0.1 * (v * 13.0).cos()).collect();
        let x = [half_x.clone(), half_x].concat();
        let y = [half_y.clone(), half_y].concat();
        let s = TimeSeriesSample::from_xy(y, x).unwrap();
        let (mu, sigma) = cp_disparity(&s, 80, &cfg()).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(sigma, 0.0);
    }

    fn null_series(n: usize, seed: u64) -> TimeSeriesSample {
        use crate::simulate::{synthesize, DgpSpec, NoiseSpec, SimulationScenario};
        let scenario = SimulationScenario {
            n,
            dgp: DgpSpec::white_noise(),
            noise: NoiseSpec::Normal,
            breaks: vec![],
            segment_ids: vec![5],
            seed,
        };
        synthesize(&scenario).unwrap().0
    }

    #[test]
    fn level_shift_shows_in_mean_disparity() {
        let base = null_series(1000, 17);
        let c = 1.0;
        let x = [base.x(), base.x()].concat();
        let y: Vec<f64> = base.y().iter().copied().chain(base.y().iter().map(|v| v + c)).collect();
        let s = TimeSeriesSample::from_xy(y, x).unwrap();
        let (mu, sigma) = cp_disparity(&s, 1000, &DetectConfig::default()).unwrap();
        assert!(mu >= c / 2.0, "mu_cp = {mu}");
        assert!((mu - c).abs() < 1e-9);
        assert!(sigma < 1e-9);
    }

    #[test]
    fn disparity_symmetric_under_swap() {
        let a = null_series(300, 1);
        let b = null_series(200, 2);
        let join = |p: &TimeSeriesSample, q: &TimeSeriesSample| {
            TimeSeriesSample::from_xy([p.y(), q.y()].concat(), [p.x(), q.x()].concat()).unwrap()
        };
        let cfg = DetectConfig::default();
        let ab = cp_disparity(&join(&a, &b), 300, &cfg).unwrap();
        let ba = cp_disparity(&join(&b, &a), 200, &cfg).unwrap();
        assert!((ab.0 - ba.0).abs() < 1e-12 && (ab.1 - ba.1).abs() < 1e-12);
    }

    #[test]
    fn few_detections_on_null_series() {
        use crate::simulate::derive_seed;
        let cfg = DetectConfig::default();
        let total: usize = (0..50)
            .map(|r| cpfind(&null_series(1000, derive_seed(99, r)), &cfg).unwrap().len())
            .sum();
        let mean = total as f64 / 50.0;
        assert!(mean <= 0.15, "mean detections {mean}");
    }
}
