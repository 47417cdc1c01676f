//! `ais clonal`: clonal selection against a target antigen pattern.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ais_core::clonal::{clonal_step, ClonalConfig};
use ais_core::encoding::{BitMeasure, BitString};

use crate::config::FileConfig;
use crate::report::{Report, ReportFormat};

#[derive(Args, Debug)]
pub struct ClonalArgs {
    /// Pattern length when the antigen is random (default 16).
    #[arg(long)]
    pub length: Option<usize>,
    /// Steps to run (default 20). Zero steps echo the initial population.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Target pattern as a bit string; random when omitted.
    #[arg(long)]
    pub antigen: Option<String>,
    /// Affinity measure: hamming or contiguous (default hamming).
    #[arg(long)]
    pub measure: Option<String>,
    /// Individuals carried between steps (default 20).
    #[arg(long)]
    pub population_size: Option<usize>,
    /// Clone factor (default 1.0).
    #[arg(long)]
    pub clone_factor: Option<f64>,
    /// Per-individual clone cap (default 100).
    #[arg(long)]
    pub max_clones: Option<usize>,
    /// Base per-bit mutation rate (default 0.1).
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    /// Fraction of the population replaced with immigrants (default 0.2).
    #[arg(long)]
    pub replacement_fraction: Option<f64>,
    #[arg(long, env = "AIS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
    #[arg(long, env = "AIS_CONFIG")]
    pub config: Option<PathBuf>,
}

fn parse_measure(text: &str) -> Result<BitMeasure> {
    match text {
        "hamming" => Ok(BitMeasure::Hamming),
        "contiguous" => Ok(BitMeasure::LongestRun),
        other => anyhow::bail!("unknown measure {other:?} (hamming or contiguous)"),
    }
}

pub fn run(args: ClonalArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let config = ClonalConfig {
        clone_factor: args.clone_factor.or(file.get("clone_factor")?).unwrap_or(1.0),
        max_clones: args.max_clones.or(file.get("max_clones")?).unwrap_or(100),
        base_mutation_rate: args
            .mutation_rate
            .or(file.get("mutation_rate")?)
            .unwrap_or(0.1),
        population_size: args
            .population_size
            .or(file.get("population_size")?)
            .unwrap_or(20),
        replacement_fraction: args
            .replacement_fraction
            .or(file.get("replacement_fraction")?)
            .unwrap_or(0.2),
    };
    config.validate()?;
    let measure = match args.measure.or(file.get("measure")?) {
        Some(text) => parse_measure(&text)?,
        None => BitMeasure::Hamming,
    };
    let steps = args.steps.or(file.get("steps")?).unwrap_or(20);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let antigen = match args.antigen.or(file.get("antigen")?) {
        Some(text) => BitString::parse(&text).context("parsing --antigen")?,
        None => {
            let length = args.length.or(file.get("length")?).unwrap_or(16);
            anyhow::ensure!(length >= 1, "length must be at least 1");
            BitString::random(length, &mut rng)
        }
    };
    let mut population: Vec<BitString> = (0..config.population_size)
        .map(|_| BitString::random(antigen.len(), &mut rng))
        .collect();

    let best_of = |population: &[BitString]| -> Result<(usize, BitString)> {
        let mut best_score = 0usize;
        let mut best_pattern = population[0].clone();
        for individual in population {
            let score = measure.score(individual, &antigen)?;
            if score > best_score {
                best_score = score;
                best_pattern = individual.clone();
            }
        }
        Ok((best_score, best_pattern))
    };

    let mut report = Report::new(args.format);
    let measure_name = match measure {
        BitMeasure::Hamming => "hamming",
        BitMeasure::LongestRun => "contiguous",
    };
    report.record(
        "clonal",
        &[
            ("antigen", antigen.to_string()),
            ("length", antigen.len().to_string()),
            ("steps", steps.to_string()),
            ("population", config.population_size.to_string()),
            ("measure", measure_name.to_string()),
            ("seed", seed.to_string()),
        ],
    );
    report.line(format!(
        "clonal selection towards {antigen} ({measure_name}, population {}, {steps} steps)",
        config.population_size
    ));

    let (score, pattern) = best_of(&population)?;
    report.record(
        "trajectory",
        &[
            ("step", "0".into()),
            ("best_affinity", score.to_string()),
            ("best_pattern", pattern.to_string()),
        ],
    );
    report.line(format!("  step 0: best {score} ({pattern})"));
    for step in 1..=steps {
        let step_seed = rng.random::<u64>();
        population = clonal_step(&population, &antigen, measure, &config, step_seed)?;
        let (score, pattern) = best_of(&population)?;
        report.record(
            "trajectory",
            &[
                ("step", step.to_string()),
                ("best_affinity", score.to_string()),
                ("best_pattern", pattern.to_string()),
            ],
        );
        report.line(format!("  step {step}: best {score} ({pattern})"));
    }

    for (index, individual) in population.iter().enumerate() {
        report.record(
            "member",
            &[
                ("index", index.to_string()),
                ("pattern", individual.to_string()),
                ("affinity", measure.score(individual, &antigen)?.to_string()),
            ],
        );
    }
    report.print();
    Ok(())
}
