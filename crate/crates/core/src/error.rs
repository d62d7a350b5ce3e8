// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} = {value} lies outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("segment has {len} observations, at least {min} required")]
    SegmentTooSmall { len: usize, min: usize },
    #[error("no positive kernel mass around x = {x}")]
    EmptyWindow { x: f64 },
    #[error("invalid covariate range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("no grid point has enough covariate density in both segments")]
    AllPointsInvalid,
    #[error("no observation lies in a valid grid cell; cannot standardize residuals")]
    NoValidResiduals,
    #[error("excess fourth moment estimate {0} is not positive")]
    DegenerateNoise(f64),
    #[error("every candidate bandwidth leaves some observation without neighbours")]
    DegenerateSample,
    #[error("no admissible split candidate in a series of length {0}")]
    NoAdmissibleCandidate(usize),
    #[error("cannot place breaks with the required spacing in a series of length {0}")]
    InfeasibleBreaks(usize),
    #[error("unknown segment id {0}; expected 1..=5")]
    InvalidSegment(u8),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("only {usable} usable rows after cleaning, at least {min} required")]
    NotEnoughRows { usable: usize, min: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
