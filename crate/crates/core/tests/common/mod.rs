// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cpfind"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn cpfind")
}

/// Daily price series with an interest covariate, a level shift one third
/// and a volatility regime change two thirds of the way through. A few rows are malformed on purpose.
pub fn write_price_fixture(dir: &Path, rows: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let mut text = String::from("date,close,interest\n");
    let mut prev_interest = 50.0_f64;
    for i in 0..rows {
        let interest: f64 = rng.random_range(5.0..100.0);
        let level = if i < rows / 3 { 8.0 } else { 9.0 };
        let vol = if i < 2 * rows / 3 { 0.4 } else { 1.6 };
        let shock: f64 = rng.random_range(-1.0..1.0);
        let log_p = level + 0.8 * (prev_interest - 50.0) / 50.0 + vol * shock;
        prev_interest = interest;
        let date = start + Duration::days(i as i64);
        text.push_str(&format!("{date},{:.6},{interest:.3}\n", log_p.exp()));
    }
    text.push_str("not-a-date,1.0,2.0\n");
    let path = dir.join("prices.csv");
    std::fs::write(&path, text).unwrap();
    path
}

/// Plain `y,x` series with a mean shift at `n / 2`.
pub fn write_xy_fixture(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::from("y,x\n");
    for i in 0..n {
        let x: f64 = rng.random_range(-2.0..2.0);
        let e: f64 = rng.random_range(-1.0..1.0);
        let shift = if i >= n / 2 { 2.0 } else { 0.0 };
        text.push_str(&format!("{:.8},{x:.8}\n", 0.5 * x + shift + e));
    }
    let path = dir.join("xy.csv");
    std::fs::write(&path, text).unwrap();
    path
}
