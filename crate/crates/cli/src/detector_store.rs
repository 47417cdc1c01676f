//! Detector-set persistence as `key=value` records, carrying the seed,
//! matching rule, projected field, and every detector's lifecycle state.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use ais_core::encoding::BitString;
use ais_core::io::FlowField;
use ais_core::negsel::{Detector, DetectorId, DetectorState, Lifespan, MatchRule};

#[derive(Debug, Clone)]
pub struct DetectorFile {
    pub seed: u64,
    pub rule: MatchRule,
    pub field: FlowField,
    pub length: usize,
    pub detectors: Vec<Detector>,
}

pub fn rule_name(rule: &MatchRule) -> &'static str {
    match rule {
        MatchRule::RContiguous { .. } => "r-contiguous",
        MatchRule::HammingThreshold { .. } => "hamming-threshold",
    }
}

pub fn parse_rule(name: &str, threshold: usize) -> Result<MatchRule> {
    match name {
        "r-contiguous" => Ok(MatchRule::RContiguous { threshold }),
        "hamming-threshold" => Ok(MatchRule::HammingThreshold { threshold }),
        other => bail!("unknown matching rule {other:?}"),
    }
}

fn lifespan_text(lifespan: Lifespan) -> String {
    match lifespan {
        Lifespan::Ticks(ticks) => ticks.to_string(),
        Lifespan::Infinite => "infinite".into(),
    }
}

pub fn parse_lifespan(text: &str) -> Result<Lifespan> {
    if text == "infinite" {
        Ok(Lifespan::Infinite)
    } else {
        Ok(Lifespan::Ticks(
            text.parse().context("lifespan must be a tick count or \"infinite\"")?,
        ))
    }
}

impl DetectorFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kind=detectors").unwrap();
        writeln!(out, "version=1").unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "rule={}", rule_name(&self.rule)).unwrap();
        writeln!(out, "r={}", self.rule.threshold()).unwrap();
        writeln!(out, "field={}", self.field).unwrap();
        writeln!(out, "length={}", self.length).unwrap();
        writeln!(out, "count={}", self.detectors.len()).unwrap();
        for (index, detector) in self.detectors.iter().enumerate() {
            writeln!(out, "detector.{index}.id={}", detector.id()).unwrap();
            writeln!(out, "detector.{index}.pattern={}", detector.pattern()).unwrap();
            writeln!(out, "detector.{index}.state={}", detector.state()).unwrap();
            writeln!(out, "detector.{index}.age={}", detector.age()).unwrap();
            writeln!(out, "detector.{index}.match_count={}", detector.match_count()).unwrap();
            writeln!(
                out,
                "detector.{index}.activation_threshold={}",
                detector.activation_threshold()
            )
            .unwrap();
            writeln!(
                out,
                "detector.{index}.lifespan={}",
                lifespan_text(detector.lifespan())
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = ais_core::io::parse_manifest(text);
        let get = |key: &str| {
            entries
                .get(key)
                .with_context(|| format!("detector file is missing {key}"))
        };
        if get("kind")? != "detectors" {
            bail!("not a detector file");
        }
        let seed: u64 = get("seed")?.parse().context("seed")?;
        let threshold: usize = get("r")?.parse().context("r")?;
        let rule = parse_rule(get("rule")?, threshold)?;
        let field: FlowField = get("field")?
            .parse()
            .map_err(|e: String| anyhow::anyhow!(e))?;
        let length: usize = get("length")?.parse().context("length")?;
        let count: usize = get("count")?.parse().context("count")?;

        let mut detectors = Vec::with_capacity(count);
        for index in 0..count {
            let get_field = |name: &str| {
                entries
                    .get(&format!("detector.{index}.{name}"))
                    .with_context(|| format!("detector {index} is missing {name}"))
            };
            let id: u64 = get_field("id")?.parse().context("id")?;
            let pattern = BitString::parse(get_field("pattern")?)?;
            if pattern.len() != length {
                bail!(
                    "detector {index} pattern length {} does not match file length {length}",
                    pattern.len()
                );
            }
            let state: DetectorState = get_field("state")?
                .parse()
                .map_err(|e: String| anyhow::anyhow!(e))?;
            let age: u64 = get_field("age")?.parse().context("age")?;
            let match_count: u32 = get_field("match_count")?.parse().context("match_count")?;
            let activation_threshold: u32 = get_field("activation_threshold")?
                .parse()
                .context("activation_threshold")?;
            let lifespan = parse_lifespan(get_field("lifespan")?)?;
            detectors.push(Detector::restore(
                DetectorId(id),
                pattern,
                state,
                age,
                match_count,
                activation_threshold,
                lifespan,
            )?);
        }
        rule.validate_for_length(length)?;
        Ok(Self {
            seed,
            rule,
            field,
            length,
            detectors,
        })
    }
}
