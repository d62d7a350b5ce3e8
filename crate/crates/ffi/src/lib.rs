// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI for the cpfind structural-break detector.
//!
//! Objects are exposed as opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`CpfStatus`]; on failure a description is available from
//! [`cpf_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpfind::detect::{cpfind, BreakSet, DetectConfig};
use cpfind::hypothesis::{
    critical_value, gumbel_quantile, test_joint, test_mean, test_variance, Target, TestConfig,
    TestOutcome,
};
use cpfind::simulate::{synthesize, DgpSpec, NoiseSpec, SimulationScenario};
use cpfind::{Error, TimeSeriesSample};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SegmentTooSmall = 3,
    EstimationFailed = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpfTarget {
    Mean = 0,
    Variance = 1,
    Joint = 2,
}

impl From<CpfTarget> for Target {
    fn from(t: CpfTarget) -> Self {
        match t {
            CpfTarget::Mean => Target::Mean,
            CpfTarget::Variance => Target::Variance,
            CpfTarget::Joint => Target::Joint,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpfDgp {
    WhiteNoise = 0,
    ArmaGarch = 1,
    Tar = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpfNoise {
    Normal = 0,
    StudentT = 1,
    PowerLaw = 2,
}

/// Opaque observed series.
pub struct CpfSample(TimeSeriesSample);

/// Opaque set of detected breaks.
pub struct CpfBreakSet(BreakSet);

/// Outcome of a single mean or variance test.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpfTestOutcome {
    pub statistic: f64,
    pub critical_value: f64,
    /// Grid size entering the critical value.
    pub m: usize,
    pub reject: bool,
    pub argmax_x: f64,
    pub bandwidth: f64,
    /// Estimate of `E(eps^4) - 1`; NaN for the mean test.
    pub nu_epsilon: f64,
}

impl From<&TestOutcome> for CpfTestOutcome {
    fn from(o: &TestOutcome) -> Self {
        Self {
            statistic: o.statistic,
            critical_value: o.critical_value,
            m: o.m,
            reject: o.reject,
            argmax_x: o.argmax_x,
            bandwidth: o.bandwidth,
            nu_epsilon: o.nu_epsilon.map_or(f64::NAN, |n| n.value),
        }
    }
}

/// Holm combination of the mean and variance tests.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CpfJointOutcome {
    pub mean: CpfTestOutcome,
    pub variance: CpfTestOutcome,
    pub t_max: f64,
    pub t_min: f64,
    pub critical_value_half: f64,
    pub reject_any: bool,
    pub reject_mean: bool,
    pub reject_variance: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpfStatus {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidInput(_)
        | Error::Domain { .. }
        | Error::InvalidRange { .. }
        | Error::InvalidSegment(_)
        | Error::InfeasibleBreaks(_) => CpfStatus::InvalidArgument,
        Error::SegmentTooSmall { .. } | Error::NotEnoughRows { .. } => CpfStatus::SegmentTooSmall,
        _ => CpfStatus::EstimationFailed,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (CpfStatus, String)>) -> CpfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CpfStatus::Panic
        }
    }
}

fn lift<T>(r: cpfind::Result<T>) -> Result<T, (CpfStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CpfStatus, String) {
    (CpfStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or valid for reads of `len` values.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (CpfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies `len` paired observations into a new sample. Times are `0..len`.
///
/// # Safety
/// `y` and `x` must be valid for reads of `len` values; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_sample_new(
    y: *const f64,
    x: *const f64,
    len: usize,
    out: *mut *mut CpfSample,
) -> CpfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let y = slice(y, len, "y")?.to_vec();
        let x = slice(x, len, "x")?.to_vec();
        let sample = lift(TimeSeriesSample::from_xy(y, x))?;
        *out = Box::into_raw(Box::new(CpfSample(sample)));
        Ok(())
    })
}

/// Number of observations, or 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpf_sample_len(sample: *const CpfSample) -> usize {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sample` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpf_sample_free(sample: *mut CpfSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

fn test_config(target: CpfTarget, alpha: f64) -> TestConfig {
    TestConfig {
        alpha,
        target: target.into(),
        ..TestConfig::default()
    }
}

/// Mean test (`target` Mean) or variance test (`target` Variance) splitting
/// the sample before index `split`.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_test(
    sample: *const CpfSample,
    split: usize,
    target: CpfTarget,
    alpha: f64,
    out: *mut CpfTestOutcome,
) -> CpfStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = test_config(target, alpha);
        let w = s.0.as_window();
        let o = match target {
            CpfTarget::Mean => lift(test_mean(w, split, &cfg))?,
            CpfTarget::Variance => lift(test_variance(w, split, &cfg))?,
            CpfTarget::Joint => {
                return Err((CpfStatus::InvalidArgument, "use cpf_test_joint for the joint target".into()))
            }
        };
        *out = (&o).into();
        Ok(())
    })
}

/// Joint mean-and-variance test.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_test_joint(
    sample: *const CpfSample,
    split: usize,
    alpha: f64,
    out: *mut CpfJointOutcome,
) -> CpfStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = lift(test_joint(s.0.as_window(), split, &test_config(CpfTarget::Joint, alpha)))?;
        *out = CpfJointOutcome {
            mean: (&o.mean).into(),
            variance: (&o.variance).into(),
            t_max: o.t_max,
            t_min: o.t_min,
            critical_value_half: o.critical_value_half,
            reject_any: o.reject_any,
            reject_mean: o.reject_mean,
            reject_variance: o.reject_variance,
        };
        Ok(())
    })
}

/// Runs the two-stage detector. `min_gap` of 0 means `l_min`.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_detect(
    sample: *const CpfSample,
    l_min: usize,
    alpha: f64,
    target: CpfTarget,
    min_gap: usize,
    out: *mut *mut CpfBreakSet,
) -> CpfStatus {
    guard(|| {
        let s = sample.as_ref().ok_or_else(|| null("sample"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = DetectConfig {
            l_min,
            alpha,
            target: target.into(),
            min_gap: (min_gap > 0).then_some(min_gap),
            ..DetectConfig::default()
        };
        lift(cfg.validate())?;
        let set = lift(cpfind(&s.0, &cfg))?;
        *out = Box::into_raw(Box::new(CpfBreakSet(set)));
        Ok(())
    })
}

/// Number of breaks, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpf_breakset_len(set: *const CpfBreakSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Index of break `i` (the first observation of the new regime).
///
/// # Safety
/// `set` must be a live handle and `index` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_breakset_get(set: *const CpfBreakSet, i: usize, index: *mut usize) -> CpfStatus {
    guard(|| {
        let s = set.as_ref().ok_or_else(|| null("set"))?;
        if index.is_null() {
            return Err(null("index"));
        }
        let b = s.0.breaks.get(i).ok_or_else(|| {
            (CpfStatus::InvalidArgument, format!("break {i} out of range (len {})", s.0.len()))
        })?;
        *index = b.index;
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpf_breakset_free(set: *mut CpfBreakSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Quantile of the limiting law `exp(-2 exp(-z))` at `1 - alpha`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_gumbel_quantile(alpha: f64, out: *mut f64) -> CpfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(gumbel_quantile(alpha))?;
        Ok(())
    })
}

/// Critical value `B_m(z)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_critical_value(m: usize, z: f64, out: *mut f64) -> CpfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lift(critical_value(m, z))?;
        Ok(())
    })
}

/// Synthetic series of length `n` with breaks at `breaks[0..n_breaks]` and
/// regression laws `segment_ids[0..=n_breaks]` (values 1 to 5).
///
/// # Safety
/// `breaks` must be valid for `n_breaks` reads, `segment_ids` for
/// `n_breaks + 1` reads, and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpf_synthesize(
    dgp: CpfDgp,
    noise: CpfNoise,
    n: usize,
    seed: u64,
    breaks: *const usize,
    n_breaks: usize,
    segment_ids: *const u8,
    out: *mut *mut CpfSample,
) -> CpfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if segment_ids.is_null() || (n_breaks > 0 && breaks.is_null()) {
            return Err(null("breaks or segment_ids"));
        }
        let breaks = if n_breaks == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(breaks, n_breaks).to_vec()
        };
        let scenario = SimulationScenario {
            n,
            dgp: match dgp {
                CpfDgp::WhiteNoise => DgpSpec::white_noise(),
                CpfDgp::ArmaGarch => DgpSpec::arma_garch(),
                CpfDgp::Tar => DgpSpec::tar(),
            },
            noise: match noise {
                CpfNoise::Normal => NoiseSpec::Normal,
                CpfNoise::StudentT => NoiseSpec::student_t(),
                CpfNoise::PowerLaw => NoiseSpec::power_law(),
            },
            breaks,
            segment_ids: std::slice::from_raw_parts(segment_ids, n_breaks + 1).to_vec(),
            seed,
        };
        let (sample, _) = lift(synthesize(&scenario))?;
        *out = Box::into_raw(Box::new(CpfSample(sample)));
        Ok(())
    })
}
