//! `ais synth`: synthetic-data generators with ground-truth manifests.

use std::net::Ipv4Addr;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};

use ais_core::encoding::ScoreRange;
use ais_core::io::{
    antigens_to_csv, flows_to_csv, ratings_to_csv, signals_to_csv, synth_dca_stream, synth_flows,
    synth_ratings, ClusterSpec, DcaPhase, DcaStreamSpec, FlowSynthSpec, RatingsSpec,
};

use crate::report::{Report, ReportFormat};

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Clustered ratings table.
    Ratings(RatingsArgs),
    /// Labeled flow log with injected attack rows.
    Flows(FlowsArgs),
    /// Tick-aligned DCA signal and antigen streams.
    Dca(DcaStreamArgs),
}

#[derive(Args, Debug)]
pub struct RatingsArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Item catalog size.
    #[arg(long, default_value_t = 30)]
    pub items: usize,
    /// Number of clusters (labeled c0, c1, ...).
    #[arg(long, default_value_t = 2)]
    pub clusters: usize,
    /// Members per cluster.
    #[arg(long, default_value_t = 8)]
    pub members: usize,
    /// Users with unclustered random tastes.
    #[arg(long, default_value_t = 8)]
    pub dispersed: usize,
    /// Fraction of items where a cluster deviates from the global taste.
    #[arg(long, default_value_t = 0.4)]
    pub spread: f64,
    /// Per-vote noise probability.
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,
    /// Items each user leaves unrated.
    #[arg(long, default_value_t = 3)]
    pub holdout: usize,
    #[arg(long, default_value_t = 0)]
    pub score_min: i32,
    #[arg(long, default_value_t = 5)]
    pub score_max: i32,
    #[arg(long, default_value_t = 0, env = "AIS_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct FlowsArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub self_count: usize,
    #[arg(long, default_value_t = 5)]
    pub attack_count: usize,
    /// Protocol tokens to draw from.
    #[arg(long, value_delimiter = ',')]
    pub protocols: Vec<String>,
    /// Source hosts to draw from.
    #[arg(long, value_delimiter = ',')]
    pub src_hosts: Vec<Ipv4Addr>,
    #[arg(long, default_value = "10.0.0.9")]
    pub dst_host: Ipv4Addr,
    /// Ports carried by trusted traffic.
    #[arg(long, value_delimiter = ',')]
    pub self_ports: Vec<u16>,
    /// Ports carried by attack rows.
    #[arg(long, value_delimiter = ',')]
    pub attack_ports: Vec<u16>,
    #[arg(long, default_value_t = 0, env = "AIS_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
}

#[derive(Args, Debug)]
pub struct DcaStreamArgs {
    #[arg(long)]
    pub signals_out: PathBuf,
    #[arg(long)]
    pub antigens_out: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Phase spec, repeatable:
    /// label=calm,ticks=200,pamp=0,danger=0,safe=1,antigens=A+B,events=1,jitter=0
    #[arg(long = "phase", required = true)]
    pub phases: Vec<String>,
    #[arg(long, default_value_t = 0, env = "AIS_SEED")]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
}

fn parse_phase(text: &str) -> Result<DcaPhase> {
    let mut label = None;
    let mut ticks = None;
    let mut pamp = None;
    let mut danger = None;
    let mut safe = None;
    let mut antigens: Vec<String> = Vec::new();
    let mut events_per_tick = 1usize;
    let mut jitter = 0.0f64;
    for part in text.split(',') {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("phase part {part:?} is not key=value"))?;
        match key {
            "label" => label = Some(value.to_string()),
            "ticks" => ticks = Some(value.parse().context("ticks")?),
            "pamp" => pamp = Some(value.parse().context("pamp")?),
            "danger" => danger = Some(value.parse().context("danger")?),
            "safe" => safe = Some(value.parse().context("safe")?),
            "antigens" => {
                antigens = value.split('+').map(str::to_string).collect();
            }
            "events" => events_per_tick = value.parse().context("events")?,
            "jitter" => jitter = value.parse().context("jitter")?,
            other => bail!("unknown phase key {other:?}"),
        }
    }
    Ok(DcaPhase {
        label: label.context("phase needs label=")?,
        ticks: ticks.context("phase needs ticks=")?,
        pamp: pamp.context("phase needs pamp=")?,
        danger: danger.context("phase needs danger=")?,
        safe: safe.context("phase needs safe=")?,
        antigen_types: antigens,
        events_per_tick,
        jitter,
    })
}

pub fn run(command: SynthCommand) -> Result<()> {
    match command {
        SynthCommand::Ratings(args) => ratings(args),
        SynthCommand::Flows(args) => flows(args),
        SynthCommand::Dca(args) => dca(args),
    }
}

fn ratings(args: RatingsArgs) -> Result<()> {
    let spec = RatingsSpec {
        items: args.items,
        clusters: (0..args.clusters)
            .map(|index| ClusterSpec {
                label: format!("c{index}"),
                members: args.members,
            })
            .collect(),
        dispersed_users: args.dispersed,
        cluster_spread: args.spread,
        member_noise: args.noise,
        holdout_per_user: args.holdout,
        score_range: ScoreRange::new(args.score_min, args.score_max)?,
    };
    let (table, manifest) = synth_ratings(&spec, args.seed)?;
    std::fs::write(&args.out, ratings_to_csv(&table))
        .with_context(|| format!("writing {}", args.out.display()))?;
    std::fs::write(&args.manifest, manifest.to_text())
        .with_context(|| format!("writing {}", args.manifest.display()))?;

    let mut report = Report::new(args.format);
    report.record(
        "synth",
        &[
            ("kind", "ratings".into()),
            ("users", table.len().to_string()),
            ("items", args.items.to_string()),
            ("clusters", args.clusters.to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    report.line(format!(
        "wrote {} users over {} items ({} clusters) with manifest",
        table.len(),
        args.items,
        args.clusters
    ));
    report.print();
    Ok(())
}

fn flows(args: FlowsArgs) -> Result<()> {
    let defaults = FlowSynthSpec::default();
    let spec = FlowSynthSpec {
        self_count: args.self_count,
        attack_count: args.attack_count,
        protocols: if args.protocols.is_empty() {
            defaults.protocols
        } else {
            args.protocols
        },
        src_hosts: if args.src_hosts.is_empty() {
            defaults.src_hosts
        } else {
            args.src_hosts
        },
        dst_host: args.dst_host,
        self_ports: if args.self_ports.is_empty() {
            defaults.self_ports
        } else {
            args.self_ports
        },
        attack_ports: if args.attack_ports.is_empty() {
            defaults.attack_ports
        } else {
            args.attack_ports
        },
    };
    let (log, manifest) = synth_flows(&spec, args.seed)?;
    std::fs::write(&args.out, flows_to_csv(&log))
        .with_context(|| format!("writing {}", args.out.display()))?;
    std::fs::write(&args.manifest, manifest.to_text())
        .with_context(|| format!("writing {}", args.manifest.display()))?;

    let mut report = Report::new(args.format);
    report.record(
        "synth",
        &[
            ("kind", "flows".into()),
            ("rows", manifest.rows.to_string()),
            ("attacks", manifest.attack_rows.len().to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    report.line(format!(
        "wrote {} flows ({} attack rows) with manifest",
        manifest.rows,
        manifest.attack_rows.len()
    ));
    report.print();
    Ok(())
}

fn dca(args: DcaStreamArgs) -> Result<()> {
    let spec = DcaStreamSpec {
        phases: args
            .phases
            .iter()
            .map(|text| parse_phase(text))
            .collect::<Result<_>>()?,
    };
    let (signals, antigens, manifest) = synth_dca_stream(&spec, args.seed)?;
    std::fs::write(&args.signals_out, signals_to_csv(&signals))
        .with_context(|| format!("writing {}", args.signals_out.display()))?;
    std::fs::write(&args.antigens_out, antigens_to_csv(&antigens))
        .with_context(|| format!("writing {}", args.antigens_out.display()))?;
    std::fs::write(&args.manifest, manifest.to_text())
        .with_context(|| format!("writing {}", args.manifest.display()))?;

    let mut report = Report::new(args.format);
    report.record(
        "synth",
        &[
            ("kind", "dca".into()),
            ("ticks", manifest.total_ticks.to_string()),
            ("events", antigens.len().to_string()),
            ("anomalous_types", manifest.anomalous_types.join(";")),
            ("seed", args.seed.to_string()),
        ],
    );
    report.line(format!(
        "wrote {} ticks / {} events; anomalous types: {}",
        manifest.total_ticks,
        antigens.len(),
        manifest.anomalous_types.join(", ")
    ));
    report.print();
    Ok(())
}
