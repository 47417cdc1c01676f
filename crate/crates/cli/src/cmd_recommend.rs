//! `ais recommend`: immune-network recommendation for one target user.

use std::num::NonZeroU32;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use ais_core::encoding::ScoreRange;
use ais_core::io::{load_ratings, TableOptions};
use ais_core::network::{self, NetworkParams};

use crate::config::FileConfig;
use crate::report::{fmt_f64, Report, ReportFormat};

#[derive(Args, Debug)]
pub struct RecommendArgs {
    /// Ratings file (user_id,item_id,score).
    #[arg(long)]
    pub input: PathBuf,
    /// Target user id (the antigen).
    #[arg(long)]
    pub user: String,
    /// Number of recommendations to emit (default 5).
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Enable the idiotypic suppression term.
    #[arg(long)]
    pub idiotypic: bool,
    /// Stimulation rate k1 (default 2.0).
    #[arg(long)]
    pub k1: Option<f64>,
    /// Suppression rate k2 (default 1.0).
    #[arg(long)]
    pub k2: Option<f64>,
    /// Death rate k3 (default 1.0).
    #[arg(long)]
    pub k3: Option<f64>,
    /// Antigen concentration (default 1.0).
    #[arg(long)]
    pub antigen_concentration: Option<f64>,
    /// Network capacity (default 10).
    #[arg(long)]
    pub capacity: Option<usize>,
    /// Euler time step (default 0.1).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Removal floor (default 0.05).
    #[arg(long)]
    pub floor: Option<f64>,
    /// Saturation cap (default 10.0).
    #[arg(long)]
    pub cap: Option<f64>,
    /// Initial concentration (default 1.0).
    #[arg(long)]
    pub initial: Option<f64>,
    /// Stabilisation window in iterations (default 10).
    #[arg(long)]
    pub window: Option<u32>,
    /// Pearson overlap penalty cutoff (default 5).
    #[arg(long)]
    pub penalty_cutoff: Option<u32>,
    /// Keep anti-correlated neighbours by reflecting their votes.
    #[arg(long)]
    pub anti_correlation_rescue: bool,
    /// Lowest valid score (default 0).
    #[arg(long)]
    pub score_min: Option<i32>,
    /// Highest valid score (default 5).
    #[arg(long)]
    pub score_max: Option<i32>,
    /// Field delimiter for the ratings file (default ",").
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Seed echoed into the report; the run itself is deterministic.
    #[arg(long, env = "AIS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
    /// key=value config file consulted for any flag not given.
    #[arg(long, env = "AIS_CONFIG")]
    pub config: Option<PathBuf>,
}

pub fn run(args: RecommendArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let score_range = ScoreRange::new(
        args.score_min.or(file.get("score_min")?).unwrap_or(0),
        args.score_max.or(file.get("score_max")?).unwrap_or(5),
    )?;
    let penalty_cutoff = args
        .penalty_cutoff
        .or(file.get("penalty_cutoff")?)
        .unwrap_or(5);
    let params = NetworkParams {
        stimulation: args.k1.or(file.get("k1")?).unwrap_or(2.0),
        suppression: args.k2.or(file.get("k2")?).unwrap_or(1.0),
        death_rate: args.k3.or(file.get("k3")?).unwrap_or(1.0),
        antigen_concentration: args
            .antigen_concentration
            .or(file.get("antigen_concentration")?)
            .unwrap_or(1.0),
        capacity: args.capacity.or(file.get("capacity")?).unwrap_or(10),
        dt: args.dt.or(file.get("dt")?).unwrap_or(0.1),
        concentration_floor: args.floor.or(file.get("floor")?).unwrap_or(0.05),
        saturation_cap: args.cap.or(file.get("cap")?).unwrap_or(10.0),
        initial_concentration: args.initial.or(file.get("initial")?).unwrap_or(1.0),
        stabilisation_window: args.window.or(file.get("window")?).unwrap_or(10),
        penalty_cutoff: NonZeroU32::new(penalty_cutoff)
            .context("penalty_cutoff must be at least 1")?,
        score_range,
        anti_correlation_rescue: file.flag(
            args.anti_correlation_rescue,
            "anti_correlation_rescue",
        )?,
    };
    params.validate()?;
    let idiotypic = file.flag(args.idiotypic, "idiotypic")?;
    let top_k = args.top_k.or(file.get("top_k")?).unwrap_or(5);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);

    let reader = std::fs::File::open(&args.input)
        .with_context(|| format!("opening ratings file {}", args.input.display()))?;
    let table = load_ratings(
        std::io::BufReader::new(reader),
        &TableOptions {
            delimiter: args.delimiter.or(file.get("delimiter")?).unwrap_or(','),
            score_range,
        },
    )?;

    let antigen = table
        .profile(&args.user)
        .with_context(|| format!("target user {:?} not found in the input", args.user))?
        .clone();
    let pool: Vec<_> = table
        .profiles()
        .iter()
        .filter(|p| p.user_id() != args.user)
        .cloned()
        .collect();
    if pool.is_empty() {
        bail!("no candidate users besides the target");
    }
    let pool_size = pool.len();

    let network = network::run(antigen, pool, params, idiotypic)
        .context("the immune network could not retain any neighbour")?;

    let mut report = Report::new(args.format);
    let diversity = network
        .mean_pairwise_affinity()
        .map(fmt_f64)
        .unwrap_or_else(|| "na".into());
    report.record(
        "run",
        &[
            ("user", args.user.clone()),
            ("pool", pool_size.to_string()),
            ("capacity", network.params().capacity.to_string()),
            ("idiotypic", idiotypic.to_string()),
            ("iterations", network.iterations().to_string()),
            ("antibodies", network.len().to_string()),
            ("stabilised", network.is_stabilised().to_string()),
            ("mean_cross_affinity", diversity.clone()),
            ("seed", seed.to_string()),
        ],
    );
    report.line(format!(
        "network for {} stabilised={} after {} iterations with {} antibodies \
         (idiotypic={idiotypic}, mean cross affinity {diversity})",
        args.user,
        network.is_stabilised(),
        network.iterations(),
        network.len(),
    ));

    for (antibody, &affinity) in network.antibodies().iter().zip(network.antigen_affinities()) {
        report.record(
            "antibody",
            &[
                ("user", antibody.user_id().to_string()),
                ("concentration", fmt_f64(antibody.concentration())),
                ("affinity", fmt_f64(affinity)),
            ],
        );
        report.line(format!(
            "  neighbour {} concentration={:.3} affinity={:.3}",
            antibody.user_id(),
            antibody.concentration(),
            affinity
        ));
    }

    for (rank, (item, score)) in network.recommend(top_k).iter().enumerate() {
        report.record(
            "recommendation",
            &[
                ("rank", (rank + 1).to_string()),
                ("item", item.clone()),
                ("score", fmt_f64(*score)),
            ],
        );
        report.line(format!("  #{} {item} predicted {score:.3}", rank + 1));
    }

    report.print();
    Ok(())
}
