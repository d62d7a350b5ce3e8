// SPDX-License-Identifier: MIT OR Apache-2.0

//! Paired observations `(t, Y_t, X_t)` and borrowed contiguous windows over them.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered paired observations of a response and a scalar covariate.
///
/// `times` holds the original time key of each row (sample position, or a
/// day/second count for dated input). It is only used to map detected break
/// indices back to the caller's time axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSample {
    times: Vec<i64>,
    y: Vec<f64>,
    x: Vec<f64>,
}

impl TimeSeriesSample {
    pub fn new(times: Vec<i64>, y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if times.len() != y.len() || x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "length mismatch: times={}, y={}, x={}",
                times.len(),
                y.len(),
                x.len()
            )));
        }
        if let Some(i) = y.iter().chain(&x).position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at flat position {i}"
            )));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "time index must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, y, x })
    }

    /// Sample with time index `0..n`.
    pub fn from_xy(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        let times = (0..y.len() as i64).collect();
        Self::new(times, y, x)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Position of observation `i` on the unit interval.
    pub fn normalized_time(&self, i: usize) -> f64 {
        if self.len() <= 1 {
            0.0
        } else {
            i as f64 / (self.len() - 1) as f64
        }
    }

    pub fn window(&self, range: Range<usize>) -> Window<'_> {
        Window {
            x: &self.x[range.clone()],
            y: &self.y[range.clone()],
            offset: range.start,
        }
    }

    pub fn as_window(&self) -> Window<'_> {
        self.window(0..self.len())
    }
}

/// A contiguous run of observations borrowed from a [`TimeSeriesSample`].
///
/// `offset` is the position of the first observation in the parent sample, so
/// indices computed inside a window can be reported in absolute terms.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub offset: usize,
}

impl<'a> Window<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        assert_eq!(x.len(), y.len(), "window arrays must have equal length");
        Self { x, y, offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Sub-window over `range`, relative to this window.
    pub fn sub(&self, range: Range<usize>) -> Window<'a> {
        Window {
            x: &self.x[range.clone()],
            y: &self.y[range.clone()],
            offset: self.offset + range.start,
        }
    }

    /// Splits into `[0, at)` and `[at, len)`.
    pub fn split(&self, at: usize) -> (Window<'a>, Window<'a>) {
        (self.sub(0..at), self.sub(at..self.len()))
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mismatched_lengths() {
        assert!(TimeSeriesSample::new(vec![0, 1], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let err = TimeSeriesSample::from_xy(vec![1.0, f64::NAN], vec![0.0, 1.0]);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn rejects_unsorted_times() {
        assert!(TimeSeriesSample::new(vec![1, 1], vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn windows_track_absolute_offsets() {
        let s = TimeSeriesSample::from_xy((0..10).map(f64::from).collect(), vec![0.0; 10]).unwrap();
        let w = s.window(2..8);
        let (l, r) = w.split(3);
        assert_eq!(l.offset, 2);
        assert_eq!(r.offset, 5);
        assert_eq!(r.y[0], 5.0);
        assert_eq!(r.sub(1..2).offset, 6);
    }
}
