// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cpfind::detect::{cpfind, DetectConfig};
use cpfind::hypothesis::{
    confidence_band_mean_diff, confidence_band_variance_diff, test_joint, test_mean, test_variance,
    Target, TestConfig, VarianceAssumption,
};
use cpfind::ingest::{load_csv, CovariateScale, IngestSchema, Ingested, Transform};
use cpfind::kernels::BandwidthConfig;
use cpfind::report::{
    write_band_csv, BandRecord, BreakRecord, InputEcho, RunConfig, RunReport, SimulationEcho,
    TestRecord,
};
use cpfind::simulate::{
    run_detection_benchmark, run_size_power, DgpSpec, Experiment, NoiseSpec,
};
use cpfind::Error;

#[derive(Parser)]
#[command(name = "cpfind", version, about = "Nonparametric structural-break detection for time-series regressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate multiple breaks with the two-stage binary-segmentation detector.
    Detect {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        test: TestArgs,
        /// Minimum segment length for further splitting.
        #[arg(long, value_name = "N")]
        lmin: Option<usize>,
        /// Minimum spacing between reported breaks (default: lmin).
        #[arg(long, value_name = "N")]
        min_gap: Option<usize>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Test for a break at a single split index.
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        test: TestArgs,
        /// First index of the second segment.
        #[arg(long)]
        split: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write simultaneous confidence bands for the difference functions.
    Bands {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        test: TestArgs,
        #[arg(long)]
        split: usize,
        /// CSV destination for the mean-difference band.
        #[arg(long, value_name = "PATH")]
        mean_csv: Option<PathBuf>,
        /// CSV destination for the variance-difference band.
        #[arg(long, value_name = "PATH")]
        variance_csv: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte-Carlo experiments on synthetic data.
    Simulate {
        #[command(subcommand)]
        protocol: Protocol,
    },
}

#[derive(Subcommand)]
enum Protocol {
    /// Size and power of the midpoint test.
    SizePower {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value = "joint")]
        target: TargetArg,
        #[arg(long, value_parser = parse_alpha, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "common")]
        variance: VarianceArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Detection accuracy (AMD/ADN) on series with random breaks.
    Bench {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value = "joint")]
        target: TargetArg,
        #[arg(long, value_parser = parse_alpha, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        lmin: usize,
        #[arg(long)]
        min_gap: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_name = "NAME")]
    time_col: Option<String>,
    #[arg(long, value_name = "NAME", default_value = "y")]
    y_col: String,
    /// Covariate column; the lagged response is used when omitted.
    #[arg(long, value_name = "NAME")]
    x_col: Option<String>,
    #[arg(long, value_name = "N")]
    lag: Option<usize>,
    #[arg(long)]
    log_response: bool,
    /// Covariate rescaling before smoothing [default: none, unit with a preset].
    #[arg(long, value_enum, value_name = "MODE")]
    scale_x: Option<ScaleArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    None,
    Unit,
    Standard,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long, value_enum)]
    target: Option<TargetArg>,
    #[arg(long, value_parser = parse_alpha)]
    alpha: Option<f64>,
    /// `rot`, `cv`, or a fixed positive value.
    #[arg(long, value_parser = parse_bandwidth, default_value = "rot")]
    bandwidth: BandwidthConfig,
    #[arg(long, value_enum, default_value = "common")]
    variance: VarianceArg,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    dgp: DgpArg,
    #[arg(long, value_enum)]
    noise: NoiseArg,
    #[arg(long, value_parser = clap::value_parser!(u64).range(60..))]
    n: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
}

#[derive(Args)]
struct OutArgs {
    /// Report destination; the report goes to stdout when omitted.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Master seed for simulations; recorded in every report.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Mean,
    Variance,
    Joint,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Mean => Target::Mean,
            TargetArg::Variance => Target::Variance,
            TargetArg::Joint => Target::Joint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VarianceArg {
    Common,
    Separate,
}

impl From<VarianceArg> for VarianceAssumption {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Common => VarianceAssumption::Common,
            VarianceArg::Separate => VarianceAssumption::Separate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Daily log-price against the previous day's covariate: lag 1, log
    /// response, covariate mapped to [0, 1], lmin 200, min-gap 200, mean
    /// target with a variance check.
    Bitcoin,
}

#[derive(Clone, Copy, ValueEnum)]
enum DgpArg {
    White,
    ArmaGarch,
    Tar,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Normal,
    T,
    Powerlaw,
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("alpha must lie in (0, 1), got '{s}'")),
    }
}

fn parse_bandwidth(s: &str) -> Result<BandwidthConfig, String> {
    let cfg = match s {
        "rot" => BandwidthConfig::default(),
        "cv" => BandwidthConfig::CrossValidation { candidates: None },
        v => BandwidthConfig::Fixed {
            value: v.parse().map_err(|_| format!("expected rot, cv or a number, got '{v}'"))?,
        },
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

impl DataArgs {
    fn schema(&self, preset: Option<Preset>) -> IngestSchema {
        let bitcoin = matches!(preset, Some(Preset::Bitcoin));
        IngestSchema {
            time_column: self.time_col.clone(),
            response_column: self.y_col.clone(),
            covariate_column: self.x_col.clone(),
            lag: self.lag.unwrap_or(1),
            transform: if self.log_response || bitcoin {
                Transform::Log
            } else {
                Transform::None
            },
            covariate_scale: match (self.scale_x, bitcoin) {
                (Some(ScaleArg::None), _) | (None, false) => CovariateScale::None,
                (Some(ScaleArg::Unit), _) | (None, true) => CovariateScale::Unit,
                (Some(ScaleArg::Standard), _) => CovariateScale::Standard,
            },
        }
    }

    fn load(&self, preset: Option<Preset>) -> CliResult<(Ingested, InputEcho)> {
        let schema = self.schema(preset);
        let data = load_csv(&self.input, &schema)?;
        let echo = InputEcho::new(&self.input.to_string_lossy(), &schema, &data);
        Ok((data, echo))
    }
}

impl TestArgs {
    fn config(&self, default_target: Target) -> TestConfig {
        TestConfig {
            alpha: self.alpha.unwrap_or(0.05),
            variance_assumption: self.variance.into(),
            bandwidth: self.bandwidth.clone(),
            target: self.target.map(Into::into).unwrap_or(default_target),
            ..TestConfig::default()
        }
    }
}

fn emit(report: &RunReport, out: &OutArgs, summary: &[String]) -> CliResult<()> {
    match &out.output {
        Some(path) => {
            report.write(path)?;
            for line in summary {
                println!("{line}");
            }
        }
        None => print!("{}", report.to_json()?),
    }
    Ok(())
}

fn check_split(split: usize, n: usize) -> CliResult<()> {
    if split == 0 || split >= n {
        return Err(Failure::Usage(format!("--split must lie in 1..{n}, got {split}")));
    }
    Ok(())
}

fn run_detect(
    data: &DataArgs,
    test: &TestArgs,
    lmin: Option<usize>,
    min_gap: Option<usize>,
    preset: Option<Preset>,
    out: &OutArgs,
) -> CliResult<()> {
    let bitcoin = matches!(preset, Some(Preset::Bitcoin));
    let (ingested, echo) = data.load(preset)?;
    let tc = test.config(if bitcoin { Target::Mean } else { Target::Joint });
    let cfg = DetectConfig {
        l_min: lmin.unwrap_or(if bitcoin { 200 } else { 100 }),
        alpha: tc.alpha,
        target: tc.target,
        min_gap: min_gap.or(if bitcoin { Some(200) } else { None }),
        bandwidth: tc.bandwidth.clone(),
        variance_assumption: tc.variance_assumption,
        estimator: tc.estimator,
    };
    cfg.validate()?;
    let set = cpfind(&ingested.sample, &cfg)?;

    let mut rc = RunConfig::new("detect");
    rc.preset = bitcoin.then(|| "bitcoin".to_string());
    rc.input = Some(echo);
    rc.detect = Some(cfg.clone());
    rc.bandwidth = Some(set.bandwidth);
    let mut report = RunReport::new(rc, out.seed);
    report.breaks = BreakRecord::from_set(cfg.target, &set, &ingested.time_labels);
    if bitcoin && cfg.target != Target::Variance {
        let check = DetectConfig {
            target: Target::Variance,
            ..cfg.clone()
        };
        let vset = cpfind(&ingested.sample, &check)?;
        report
            .breaks
            .extend(BreakRecord::from_set(Target::Variance, &vset, &ingested.time_labels));
    }
    let summary = report
        .breaks
        .iter()
        .map(|b| format!("{:?} break at index {} (time {})", b.target, b.index, b.time).to_lowercase())
        .chain(std::iter::once(format!("{} break(s) reported", report.breaks.len())))
        .collect::<Vec<_>>();
    emit(&report, out, &summary)
}

fn run_test(data: &DataArgs, test: &TestArgs, split: usize, out: &OutArgs) -> CliResult<()> {
    let (ingested, echo) = data.load(None)?;
    check_split(split, ingested.sample.len())?;
    let cfg = test.config(Target::Mean);
    let w = ingested.sample.as_window();
    let (record, line) = match cfg.target {
        Target::Mean | Target::Variance => {
            let o = if cfg.target == Target::Mean {
                test_mean(w, split, &cfg)?
            } else {
                test_variance(w, split, &cfg)?
            };
            let line = format!(
                "statistic {:.6} m {} critical {:.6} decision {}",
                o.statistic,
                o.m,
                o.critical_value,
                if o.reject { "reject" } else { "fail to reject" }
            );
            let rec = if cfg.target == Target::Mean {
                TestRecord::Mean { split, outcome: o }
            } else {
                TestRecord::Variance { split, outcome: o }
            };
            (rec, line)
        }
        Target::Joint => {
            let o = test_joint(w, split, &cfg)?;
            let line = format!(
                "t_max {:.6} t_min {:.6} m {} critical(alpha/2) {:.6} decision {}",
                o.t_max,
                o.t_min,
                o.mean.m,
                o.critical_value_half,
                if o.reject_any { "reject" } else { "fail to reject" }
            );
            (TestRecord::Joint { split, outcome: o }, line)
        }
    };
    let mut rc = RunConfig::new("test");
    rc.input = Some(echo);
    rc.split = Some(split);
    rc.bandwidth = Some(match &record {
        TestRecord::Mean { outcome, .. } | TestRecord::Variance { outcome, .. } => outcome.bandwidth,
        TestRecord::Joint { outcome, .. } => outcome.mean.bandwidth,
        _ => unreachable!(),
    });
    rc.test = Some(cfg);
    let mut report = RunReport::new(rc, out.seed);
    report.tests.push(record);
    emit(&report, out, &[line])
}

fn run_bands(
    data: &DataArgs,
    test: &TestArgs,
    split: usize,
    mean_csv: Option<&PathBuf>,
    variance_csv: Option<&PathBuf>,
    out: &OutArgs,
) -> CliResult<()> {
    if mean_csv.is_none() && variance_csv.is_none() {
        return Err(Failure::Usage("give --mean-csv and/or --variance-csv".into()));
    }
    let (ingested, echo) = data.load(None)?;
    check_split(split, ingested.sample.len())?;
    let cfg = test.config(Target::Mean);
    let w = ingested.sample.as_window();
    let mut bands = Vec::new();
    let mut summary = Vec::new();
    for (kind, path) in [("mean", mean_csv), ("variance", variance_csv)] {
        let Some(path) = path else { continue };
        let band = if kind == "mean" {
            confidence_band_mean_diff(w, split, &cfg)?
        } else {
            confidence_band_variance_diff(w, split, &cfg)?
        };
        let file = std::fs::File::create(path).map_err(Error::from)?;
        write_band_csv(&band, file)?;
        summary.push(format!("{kind} band: {} points written to {}", band.len(), path.display()));
        bands.push(BandRecord::new(kind, &band, Some(&path.to_string_lossy())));
    }
    let mut rc = RunConfig::new("bands");
    rc.input = Some(echo);
    rc.split = Some(split);
    rc.bandwidth = Some(cfg.bandwidth.resolve(w)?);
    rc.test = Some(cfg);
    let mut report = RunReport::new(rc, out.seed);
    report.bands = bands;
    emit(&report, out, &summary)
}

fn experiment(sim: &SimArgs, out: &OutArgs) -> Experiment {
    Experiment {
        dgp: match sim.dgp {
            DgpArg::White => DgpSpec::white_noise(),
            DgpArg::ArmaGarch => DgpSpec::arma_garch(),
            DgpArg::Tar => DgpSpec::tar(),
        },
        noise: match sim.noise {
            NoiseArg::Normal => NoiseSpec::Normal,
            NoiseArg::T => NoiseSpec::student_t(),
            NoiseArg::Powerlaw => NoiseSpec::power_law(),
        },
        n: sim.n as usize,
        reps: sim.reps as usize,
        seed: out.seed.unwrap_or(0),
    }
}

fn sim_config(protocol: &str, exp: &Experiment) -> RunConfig {
    let mut rc = RunConfig::new("simulate");
    rc.simulation = Some(SimulationEcho {
        protocol: protocol.to_string(),
        dgp: exp.dgp,
        noise: exp.noise,
        n: exp.n,
        reps: exp.reps,
    });
    rc
}

fn run_simulate(protocol: &Protocol) -> CliResult<()> {
    match protocol {
        Protocol::SizePower {
            sim,
            target,
            alpha,
            variance,
            out,
        } => {
            let exp = experiment(sim, out);
            let cfg = TestConfig {
                alpha: *alpha,
                target: (*target).into(),
                variance_assumption: (*variance).into(),
                ..TestConfig::default()
            };
            let result = run_size_power(&exp, &cfg)?;
            let row = format!(
                "{:<10} {:<9} n={:<5} {:<8} size {:.2} power {:.2}",
                exp.dgp.name(),
                exp.noise.name(),
                exp.n,
                format!("{:?}", cfg.target).to_lowercase(),
                result.size,
                result.power
            );
            let mut rc = sim_config("size-power", &exp);
            rc.test = Some(cfg.clone());
            let mut report = RunReport::new(rc, Some(exp.seed));
            report.tests.push(TestRecord::SizePower {
                target: cfg.target,
                dgp: exp.dgp.name().into(),
                noise: exp.noise.name().into(),
                result,
            });
            emit(&report, out, &[row])
        }
        Protocol::Bench {
            sim,
            target,
            alpha,
            lmin,
            min_gap,
            out,
        } => {
            let exp = experiment(sim, out);
            let cfg = DetectConfig {
                l_min: *lmin,
                alpha: *alpha,
                target: (*target).into(),
                min_gap: *min_gap,
                ..DetectConfig::default()
            };
            cfg.validate()?;
            let metrics = run_detection_benchmark(&exp, &cfg)?;
            let row = format!(
                "{:<10} {:<9} n={:<5} AMD {:.2} ADN {:.2}",
                exp.dgp.name(),
                exp.noise.name(),
                exp.n,
                metrics.amd,
                metrics.adn
            );
            let mut rc = sim_config("bench", &exp);
            rc.detect = Some(cfg.clone());
            let mut report = RunReport::new(rc, Some(exp.seed));
            report.tests.push(TestRecord::Benchmark {
                target: cfg.target,
                dgp: exp.dgp.name().into(),
                noise: exp.noise.name().into(),
                metrics,
            });
            emit(&report, out, &[row])
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("CPFIND_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CPFIND_THREADS must be a positive integer, got '{v}'")))?;
    // fails only if a pool already exists, in which case it is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match &cli.command {
        Command::Detect {
            data,
            test,
            lmin,
            min_gap,
            preset,
            out,
        } => run_detect(data, test, *lmin, *min_gap, *preset, out),
        Command::Test { data, test, split, out } => run_test(data, test, *split, out),
        Command::Bands {
            data,
            test,
            split,
            mean_csv,
            variance_csv,
            out,
        } => run_bands(data, test, *split, mean_csv.as_ref(), variance_csv.as_ref(), out),
        Command::Simulate { protocol } => run_simulate(protocol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
