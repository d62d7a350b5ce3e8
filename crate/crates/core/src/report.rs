// SPDX-License-Identifier: MIT OR Apache-2.0

//! Machine-readable run reports and band CSV output.
//!
//! Reports hold no wall-clock or host data, so a fixed input and seed give
//! byte-identical JSON.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{BreakSet, DetectConfig};
use crate::error::Result;
use crate::hypothesis::{ConfidenceBand, JointOutcome, Target, TestConfig, TestOutcome};
use crate::ingest::{IngestSchema, Ingested};
use crate::simulate::{DetectionMetrics, DgpSpec, NoiseSpec, SizePowerResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub path: String,
    pub schema: IngestSchema,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub n: usize,
}

impl InputEcho {
    pub fn new(path: &str, schema: &IngestSchema, data: &Ingested) -> Self {
        Self {
            path: path.to_string(),
            schema: schema.clone(),
            rows_read: data.rows_read,
            rows_dropped: data.rows_dropped,
            n: data.sample.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEcho {
    pub protocol: String,
    pub dgp: DgpSpec,
    pub noise: NoiseSpec,
    pub n: usize,
    pub reps: usize,
}

/// Everything that determined the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detect: Option<DetectConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationEcho>,
    /// Bandwidth actually used, after resolving the configured rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            preset: None,
            input: None,
            test: None,
            detect: None,
            split: None,
            simulation: None,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestRecord {
    Mean { split: usize, outcome: TestOutcome },
    Variance { split: usize, outcome: TestOutcome },
    Joint { split: usize, outcome: JointOutcome },
    SizePower { target: Target, dgp: String, noise: String, result: SizePowerResult },
    Benchmark { target: Target, dgp: String, noise: String, metrics: DetectionMetrics },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakRecord {
    pub target: Target,
    pub index: usize,
    /// Time value of the first observation after the break, as it appeared
    /// in the input.
    pub time: String,
    pub confirmed: bool,
    pub mu_cp: f64,
    pub sigma_cp: f64,
    pub statistic: f64,
}

impl BreakRecord {
    pub fn from_set(target: Target, set: &BreakSet, labels: &[String]) -> Vec<Self> {
        set.breaks
            .iter()
            .map(|b| Self {
                target,
                index: b.index,
                time: labels.get(b.index).cloned().unwrap_or_else(|| b.index.to_string()),
                confirmed: b.confirmed,
                mu_cp: b.mu_cp,
                sigma_cp: b.sigma_cp,
                statistic: b.statistic,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    /// `mean` or `variance`.
    pub kind: String,
    pub level: f64,
    pub points: usize,
    pub excludes_zero: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl BandRecord {
    pub fn new(kind: &str, band: &ConfidenceBand, path: Option<&str>) -> Self {
        Self {
            kind: kind.to_string(),
            level: band.level,
            points: band.len(),
            excludes_zero: band.excludes_zero(),
            path: path.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub tests: Vec<TestRecord>,
    pub breaks: Vec<BreakRecord>,
    pub bands: Vec<BandRecord>,
    pub version: String,
    pub seed: Option<u64>,
}

impl RunReport {
    pub fn new(config: RunConfig, seed: Option<u64>) -> Self {
        Self {
            config,
            tests: Vec::new(),
            breaks: Vec::new(),
            bands: Vec::new(),
            version: VERSION.to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Writes `x,center,lower,upper` rows, one per band point.
pub fn write_band_csv(band: &ConfidenceBand, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "center", "lower", "upper"])?;
    for ((x, lo), (c, hi)) in band.x.iter().zip(band.lower()).zip(band.center.iter().zip(band.upper())) {
        w.write_record([x.to_string(), c.to_string(), lo.to_string(), hi.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
