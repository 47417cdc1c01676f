//! `ais negsel-train` and `ais negsel-monitor`: the flow anomaly-detection
//! workload.
//!
//! Training serializes self-labeled flows (optionally projected to one
//! field, which keeps the pattern universe small enough for random
//! detector generation to cover), censors random candidates against them,
//! and persists the surviving detector set. Monitoring replays a flow log
//! against a persisted set, reports alerts by record index, and applies
//! operator confirmations.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use ais_core::encoding::BitString;
use ais_core::io::{load_flows, project_field, FlowLabel, FlowOptions, ProtocolRegistry};
use ais_core::negsel::{
    generate_detectors, monitor as monitor_step, DetectorSettings, GeneratorConfig, Lifespan,
    NegSelError, PromotionOutcome, SelfSet,
};

use crate::config::FileConfig;
use crate::detector_store::{parse_lifespan, parse_rule, rule_name, DetectorFile};
use crate::report::{Report, ReportFormat};

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Flow log to train on; rows labeled `self` (or all rows when the
    /// file has no label column) form the self set.
    #[arg(long)]
    pub input: PathBuf,
    /// Where to persist the detector set.
    #[arg(long)]
    pub out: PathBuf,
    /// Serialized field the detectors operate on (default full).
    #[arg(long)]
    pub field: Option<String>,
    /// Matching rule: r-contiguous or hamming-threshold (default
    /// r-contiguous).
    #[arg(long)]
    pub rule: Option<String>,
    /// Matching threshold r.
    #[arg(long)]
    pub r: Option<usize>,
    /// Detectors to generate (default 50).
    #[arg(long)]
    pub count: Option<usize>,
    /// Candidate budget before giving up (default 100000).
    #[arg(long)]
    pub max_attempts: Option<usize>,
    /// Hypermutate censored candidates instead of discarding them.
    #[arg(long)]
    pub repair: bool,
    /// Matches needed to activate a detector (default 3).
    #[arg(long)]
    pub activation_threshold: Option<u32>,
    /// Detector lifespan in ticks, or "infinite" (default 1000).
    #[arg(long)]
    pub lifespan: Option<String>,
    #[arg(long, env = "AIS_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
    #[arg(long, env = "AIS_CONFIG")]
    pub config: Option<PathBuf>,
}

fn load_log(path: &PathBuf) -> Result<ais_core::io::FlowLog> {
    let reader = std::fs::File::open(path)
        .with_context(|| format!("opening flow log {}", path.display()))?;
    Ok(load_flows(
        std::io::BufReader::new(reader),
        &FlowOptions::default(),
    )?)
}

fn project_log(
    log: &ais_core::io::FlowLog,
    field: ais_core::io::FlowField,
) -> Result<Vec<BitString>> {
    let registry = ProtocolRegistry::default();
    log.records()
        .iter()
        .enumerate()
        .map(|(index, record)| {
            let encoded = registry.serialize_flow(record)?;
            project_field(&encoded, field).map_err(|e| {
                anyhow::anyhow!("record {index}: {e} (detector workloads need concrete fields)")
            })
        })
        .collect()
}

pub fn train(args: TrainArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let field: ais_core::io::FlowField = args
        .field
        .or(file.get("field")?)
        .unwrap_or_else(|| "full".into())
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))?;
    let rule_token = args
        .rule
        .or(file.get("rule")?)
        .unwrap_or_else(|| "r-contiguous".into());
    let threshold = args
        .r
        .or(file.get("r")?)
        .context("a matching threshold --r is required")?;
    let rule = parse_rule(&rule_token, threshold)?;
    let count = args.count.or(file.get("count")?).unwrap_or(50);
    let seed = args.seed.or(file.get("seed")?).unwrap_or(0);
    let lifespan = match args.lifespan.or(file.get("lifespan")?) {
        Some(text) => parse_lifespan(&text)?,
        None => Lifespan::Ticks(1000),
    };
    let settings = DetectorSettings {
        activation_threshold: args
            .activation_threshold
            .or(file.get("activation_threshold")?)
            .unwrap_or(3),
        lifespan,
    };

    let log = load_log(&args.input)?;
    let bits = project_log(&log, field)?;
    let self_patterns: BTreeSet<BitString> = match log.labels() {
        Some(labels) => bits
            .iter()
            .zip(labels)
            .filter(|(_, &label)| label == FlowLabel::SelfFlow)
            .map(|(b, _)| b.clone())
            .collect(),
        None => bits.iter().cloned().collect(),
    };
    if self_patterns.is_empty() {
        bail!("the input contains no self-labeled rows to train on");
    }
    let self_set = SelfSet::new(self_patterns.into_iter().collect())?;

    let generator = GeneratorConfig {
        repair: file.flag(args.repair, "repair")?,
        max_attempts: args.max_attempts.or(file.get("max_attempts")?).unwrap_or(100_000),
        settings,
        ..GeneratorConfig::new(count, rule, seed)
    };
    let detectors = match generate_detectors(&self_set, &generator) {
        Ok(detectors) => detectors,
        Err(NegSelError::Exhausted { found, attempts, target }) => {
            bail!(
                "exhausted {attempts} candidates with {}/{target} detectors; \
                 self covers too much of the space for rule {} r={}",
                found.len(),
                rule_name(&rule),
                rule.threshold()
            );
        }
        Err(other) => return Err(other.into()),
    };

    let store = DetectorFile {
        seed,
        rule,
        field,
        length: self_set.pattern_length(),
        detectors,
    };
    std::fs::write(&args.out, store.to_text())
        .with_context(|| format!("writing detector set to {}", args.out.display()))?;

    let mut report = Report::new(args.format);
    report.record(
        "train",
        &[
            ("self_patterns", self_set.patterns().len().to_string()),
            ("detectors", store.detectors.len().to_string()),
            ("rule", rule_name(&rule).to_string()),
            ("r", rule.threshold().to_string()),
            ("field", field.to_string()),
            ("length", store.length.to_string()),
            ("seed", seed.to_string()),
            ("repair", generator.repair.to_string()),
        ],
    );
    report.line(format!(
        "trained {} detectors over {} self patterns (rule {} r={} on {} bits of {field})",
        store.detectors.len(),
        self_set.patterns().len(),
        rule_name(&rule),
        rule.threshold(),
        store.length,
    ));
    for detector in &store.detectors {
        report.record(
            "detector",
            &[
                ("id", detector.id().to_string()),
                ("pattern", detector.pattern().to_string()),
                ("state", detector.state().to_string()),
            ],
        );
    }
    report.print();
    Ok(())
}

#[derive(Args, Debug)]
pub struct MonitorArgs {
    /// Persisted detector set from negsel-train.
    #[arg(long)]
    pub detectors: PathBuf,
    /// Flow log to replay.
    #[arg(long)]
    pub input: PathBuf,
    /// Confirm an activated detector (repeatable): promotes it to memory.
    #[arg(long)]
    pub confirm: Vec<u64>,
    /// Reject an activated detector (repeatable): retires it.
    #[arg(long)]
    pub reject: Vec<u64>,
    /// Persist the updated detector set here after promotions.
    #[arg(long)]
    pub save: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Records, env = "AIS_FORMAT")]
    pub format: ReportFormat,
}

pub fn monitor(args: MonitorArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.detectors)
        .with_context(|| format!("reading detector set {}", args.detectors.display()))?;
    let mut store = DetectorFile::parse(&text)?;

    let log = load_log(&args.input)?;
    let bits = project_log(&log, store.field)?;
    if let Some(first) = bits.first() {
        if first.len() != store.length {
            bail!(
                "detector file/rule mismatch with data length: detectors expect {} bits, \
                 flows project to {}",
                store.length,
                first.len()
            );
        }
    }

    let mut report = Report::new(args.format);
    let mut alerts: Vec<(usize, u64)> = Vec::new();
    for (tick, observed) in bits.iter().enumerate() {
        let outcome = monitor_step(&mut store.detectors, observed, &store.rule)?;
        for id in outcome.alerts {
            alerts.push((tick, id.0));
        }
    }

    report.record(
        "monitor",
        &[
            ("flows", bits.len().to_string()),
            ("detectors", store.detectors.len().to_string()),
            ("alerts", alerts.len().to_string()),
        ],
    );
    report.line(format!(
        "replayed {} flows against {} detectors: {} alerts",
        bits.len(),
        store.detectors.len(),
        alerts.len()
    ));
    for (tick, id) in &alerts {
        report.record(
            "alert",
            &[("tick", tick.to_string()), ("detector", id.to_string())],
        );
        report.line(format!("  alert at record {tick} from detector {id}"));
    }

    // Operator verdicts: confirmations promote to memory, rejections
    // retire. Both require the detector to be activated.
    for (&id, confirmed) in args
        .confirm
        .iter()
        .map(|id| (id, true))
        .chain(args.reject.iter().map(|id| (id, false)))
    {
        let index = store
            .detectors
            .iter()
            .position(|d| d.id().0 == id)
            .with_context(|| format!("no detector with id {id}"))?;
        let detector = store.detectors.remove(index);
        match detector.promote(confirmed)? {
            PromotionOutcome::Promoted(promoted) => {
                report.record(
                    "promotion",
                    &[("detector", id.to_string()), ("outcome", "memory".into())],
                );
                report.line(format!("  detector {id} promoted to memory"));
                store.detectors.insert(index, promoted);
            }
            PromotionOutcome::Retired => {
                report.record(
                    "promotion",
                    &[("detector", id.to_string()), ("outcome", "retired".into())],
                );
                report.line(format!("  detector {id} retired"));
            }
        }
    }

    for detector in &store.detectors {
        report.record(
            "detector",
            &[
                ("id", detector.id().to_string()),
                ("state", detector.state().to_string()),
                ("match_count", detector.match_count().to_string()),
                (
                    "activation_threshold",
                    detector.activation_threshold().to_string(),
                ),
            ],
        );
    }

    if let Some(save) = &args.save {
        std::fs::write(save, store.to_text())
            .with_context(|| format!("writing updated detector set to {}", save.display()))?;
    }
    report.print();
    Ok(())
}
