//! `ais dca`: dendritic-cell classification of an antigen stream.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use ais_core::dca::{run_stream, DcaConfig, SamplingMode, WeightTable};
use ais_core::io::{load_antigen_stream, load_signal_stream};

use crate::config::FileConfig;
use crate::report::{fmt_f64, Report, ReportFormat};

#[derive(Args, Debug)]
pub struct DcaArgs {
    /// Signal stream (tick,pamp,danger,safe).
    #[arg(long)]
    pub signals: PathBuf,
    /// Antigen stream (tick,antigen_type).
    #[arg(long)]
    pub antigens: PathBuf,
    /// Cell population size (default 10).
    #[arg(long)]
    pub population: Option<usize>,
    /// Lower migration threshold bound (default 5).
    #[arg(long)]
    pub threshold_lo: Option<f64>,
    /// Upper migration threshold bound (default 15).
    #[arg(long)]
    pub threshold_hi: Option<f64>,
    /// Anomaly cutoff: scores strictly above classify anomalous
    /// (default 0.5).
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Antigen sampling: round-robin or random (default round-robin).
    #[arg(long)]
    pub sampling: Option<String>,
    /// Nine comma-separated weights: csm row, semi row, mat row.
    #[arg(long)]
    pub weights: Option<String>,
    #[arg(long, env = "AIS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
    #[arg(long, env = "AIS_CONFIG")]
    pub config: Option<PathBuf>,
}

fn parse_weights(text: &str) -> Result<WeightTable> {
    let values: Vec<f64> = text
        .split(',')
        .map(|cell| cell.trim().parse().context("weights must be numeric"))
        .collect::<Result<_>>()?;
    if values.len() != 9 {
        bail!("--weights needs nine values (csm, semi, mat rows), got {}", values.len());
    }
    Ok(WeightTable {
        csm: [values[0], values[1], values[2]],
        semi: [values[3], values[4], values[5]],
        mat: [values[6], values[7], values[8]],
    })
}

fn parse_sampling(text: &str) -> Result<SamplingMode> {
    match text {
        "round-robin" => Ok(SamplingMode::RoundRobin),
        "random" => Ok(SamplingMode::Random),
        other => bail!("unknown sampling mode {other:?}"),
    }
}

pub fn run(args: DcaArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let weights = match args.weights.or(file.get("weights")?) {
        Some(text) => parse_weights(&text)?,
        None => WeightTable::default(),
    };
    let sampling = match args.sampling.or(file.get("sampling")?) {
        Some(text) => parse_sampling(&text)?,
        None => SamplingMode::RoundRobin,
    };
    let config = DcaConfig {
        population_size: args.population.or(file.get("population")?).unwrap_or(10),
        threshold_range: (
            args.threshold_lo.or(file.get("threshold_lo")?).unwrap_or(5.0),
            args.threshold_hi.or(file.get("threshold_hi")?).unwrap_or(15.0),
        ),
        weights,
        anomaly_cutoff: args.cutoff.or(file.get("cutoff")?).unwrap_or(0.5),
        sampling,
    };
    config.validate()?;
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);

    let signals = load_signal_stream(
        std::io::BufReader::new(std::fs::File::open(&args.signals).with_context(|| {
            format!("opening signal stream {}", args.signals.display())
        })?),
        ',',
    )?;
    let antigens = load_antigen_stream(
        std::io::BufReader::new(std::fs::File::open(&args.antigens).with_context(|| {
            format!("opening antigen stream {}", args.antigens.display())
        })?),
        ',',
    )?;

    let verdicts = run_stream(&signals, &antigens, &config, seed)?;

    let mut report = Report::new(args.format);
    report.record(
        "dca",
        &[
            ("population", config.population_size.to_string()),
            ("cutoff", fmt_f64(config.anomaly_cutoff)),
            ("frames", signals.len().to_string()),
            ("events", antigens.len().to_string()),
            ("verdicts", verdicts.len().to_string()),
            ("seed", seed.to_string()),
        ],
    );
    report.line(format!(
        "classified {} antigen types over {} frames ({} events)",
        verdicts.len(),
        signals.len(),
        antigens.len()
    ));
    for verdict in &verdicts {
        report.record(
            "verdict",
            &[
                ("antigen", verdict.antigen_type.clone()),
                ("mature", verdict.presentations_mature.to_string()),
                ("total", verdict.presentations_total.to_string()),
                ("score", fmt_f64(verdict.anomaly_score)),
                ("class", verdict.classification.to_string()),
            ],
        );
        report.line(format!(
            "  {} score={:.3} ({}/{} mature) -> {}",
            verdict.antigen_type,
            verdict.anomaly_score,
            verdict.presentations_mature,
            verdict.presentations_total,
            verdict.classification
        ));
    }
    report.print();
    Ok(())
}
