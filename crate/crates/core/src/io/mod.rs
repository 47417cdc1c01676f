//! Data ingestion, serialization, and synthetic-data generation.
//!
//! All file formats are header-bearing delimited text so they stay
//! inspectable; loaders reject malformed input with row-numbered
//! diagnostics instead of coercing. Manifests emitted by the generators
//! are plain `key=value` lines.

mod flow_codec;
mod synth;

pub use flow_codec::{
    project_field, EncodedFlow, FlowField, ProtocolRegistry, FLOW_BITS,
};
pub use synth::{
    parse_manifest, synth_dca_stream, synth_flows, synth_ratings, ClusterSpec, DcaPhase,
    DcaStreamManifest, DcaStreamSpec, FlowManifest, FlowSynthSpec, RatingsManifest, RatingsSpec,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::BufRead;
use std::net::Ipv4Addr;

use thiserror::Error;

use crate::dca::{AntigenEvent, DcaError, SignalFrame};
use crate::encoding::{EncodingError, FieldValue, FlowRecord, RatingProfile, ScoreRange};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("row {row}: {reason}")]
    Malformed { row: usize, reason: String },
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("input is empty")]
    Empty,
    #[error("contradictory spec: {reason}")]
    ContradictorySpec { reason: String },
    #[error("unknown protocol token {token:?}")]
    UnknownProtocol { token: String },
    #[error("unknown protocol code {code}")]
    UnknownProtocolCode { code: u8 },
    #[error("field {field} carries a wildcard and cannot be projected to bits")]
    WildcardField { field: &'static str },
    #[error("masked flow bits are not canonical: {reason}")]
    NonCanonicalBits { reason: String },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Dca(#[from] DcaError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Loader options shared by the delimited-text formats.
#[derive(Debug, Clone)]
pub struct TableOptions {
    pub delimiter: char,
    pub score_range: ScoreRange,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            score_range: ScoreRange::default(),
        }
    }
}

/// A loaded ratings table: user profiles in file order plus the item
/// catalog.
#[derive(Debug, Clone)]
pub struct RatingsTable {
    profiles: Vec<RatingProfile>,
    item_catalog: BTreeSet<String>,
}

impl RatingsTable {
    pub fn new(profiles: Vec<RatingProfile>) -> Self {
        let item_catalog = profiles
            .iter()
            .flat_map(|p| p.votes().keys().cloned())
            .collect();
        Self {
            profiles,
            item_catalog,
        }
    }

    /// Profiles in first-appearance order of the source rows. That order is
    /// the candidate pool order downstream, so it is load-bearing.
    pub fn profiles(&self) -> &[RatingProfile] {
        &self.profiles
    }

    pub fn item_catalog(&self) -> &BTreeSet<String> {
        &self.item_catalog
    }

    pub fn profile(&self, user_id: &str) -> Option<&RatingProfile> {
        self.profiles.iter().find(|p| p.user_id() == user_id)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

const RATINGS_HEADER: &[&str] = &["user_id", "item_id", "score"];

fn read_lines<R: BufRead>(reader: R) -> Result<Vec<String>, IoError> {
    let mut lines = Vec::new();
    for line in reader.lines() {
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        lines.push(line);
    }
    Ok(lines)
}

fn check_header(line: Option<&String>, expected: &[&str], delimiter: char) -> Result<(), IoError> {
    let expected_joined = expected.join(&delimiter.to_string());
    match line {
        Some(found) if found == &expected_joined => Ok(()),
        Some(found) => Err(IoError::Header {
            expected: expected_joined,
            found: found.clone(),
        }),
        None => Err(IoError::Empty),
    }
}

fn split_row(line: &str, delimiter: char, columns: usize, row: usize) -> Result<Vec<&str>, IoError> {
    let cells: Vec<&str> = line.split(delimiter).collect();
    if cells.len() != columns {
        return Err(IoError::Malformed {
            row,
            reason: format!("expected {columns} columns, found {}", cells.len()),
        });
    }
    Ok(cells)
}

/// Loads `user_id,item_id,score` rows into profiles.
///
/// Rows must parse, scores must sit inside the configured range, and each
/// `(user, item)` pair may appear only once; violations name the offending
/// row. Profiles keep the order in which users first appear.
pub fn load_ratings<R: BufRead>(reader: R, options: &TableOptions) -> Result<RatingsTable, IoError> {
    let lines = read_lines(reader)?;
    check_header(lines.first(), RATINGS_HEADER, options.delimiter)?;

    let mut order: Vec<String> = Vec::new();
    let mut votes: BTreeMap<String, Vec<(String, i32)>> = BTreeMap::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (index, line) in lines.iter().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row = index + 1;
        let cells = split_row(line, options.delimiter, 3, row)?;
        let (user, item, score_text) = (cells[0], cells[1], cells[2]);
        if user.is_empty() || item.is_empty() {
            return Err(IoError::Malformed {
                row,
                reason: "user_id and item_id must be non-empty".into(),
            });
        }
        let score: i32 = score_text.parse().map_err(|_| IoError::Malformed {
            row,
            reason: format!("column score: {score_text:?} is not an integer"),
        })?;
        if !options.score_range.contains(score) {
            return Err(IoError::Malformed {
                row,
                reason: format!(
                    "column score: {score} outside [{}, {}]",
                    options.score_range.min(),
                    options.score_range.max()
                ),
            });
        }
        if !seen.insert((user.to_string(), item.to_string())) {
            return Err(IoError::Malformed {
                row,
                reason: format!("duplicate vote for user {user:?} item {item:?}"),
            });
        }
        if !votes.contains_key(user) {
            order.push(user.to_string());
        }
        votes
            .entry(user.to_string())
            .or_default()
            .push((item.to_string(), score));
    }

    let mut profiles = Vec::with_capacity(order.len());
    for user in order {
        let user_votes = votes.remove(&user).unwrap_or_default();
        let profile = RatingProfile::new(user, user_votes, &options.score_range)?;
        profiles.push(profile);
    }
    Ok(RatingsTable::new(profiles))
}

/// Serializes a table back to the `user_id,item_id,score` format.
pub fn ratings_to_csv(table: &RatingsTable) -> String {
    let mut out = String::from("user_id,item_id,score\n");
    for profile in table.profiles() {
        for (item, score) in profile.votes() {
            writeln!(out, "{},{},{}", profile.user_id(), item, score).unwrap();
        }
    }
    out
}

/// Self/non-self tag on a flow row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowLabel {
    SelfFlow,
    NonSelf,
}

impl FlowLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FlowLabel::SelfFlow => "self",
            FlowLabel::NonSelf => "nonself",
        }
    }
}

/// Which flow fields may carry a `*` wildcard on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WildcardPolicy {
    pub protocol: bool,
    pub src_ip: bool,
    pub src_port: bool,
    pub dst_ip: bool,
    pub dst_port: bool,
}

impl Default for WildcardPolicy {
    fn default() -> Self {
        Self {
            protocol: true,
            src_ip: true,
            src_port: true,
            dst_ip: true,
            dst_port: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub delimiter: char,
    pub wildcards: WildcardPolicy,
    pub registry: ProtocolRegistry,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            delimiter: ',',
            wildcards: WildcardPolicy::default(),
            registry: ProtocolRegistry::default(),
        }
    }
}

/// An ordered flow log with optional per-record self/non-self labels.
#[derive(Debug, Clone)]
pub struct FlowLog {
    records: Vec<FlowRecord>,
    labels: Option<Vec<FlowLabel>>,
}

impl FlowLog {
    pub fn new(records: Vec<FlowRecord>, labels: Option<Vec<FlowLabel>>) -> Result<Self, IoError> {
        if let Some(labels) = &labels {
            if labels.len() != records.len() {
                return Err(IoError::ContradictorySpec {
                    reason: format!(
                        "{} labels for {} records",
                        labels.len(),
                        records.len()
                    ),
                });
            }
        }
        Ok(Self { records, labels })
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn labels(&self) -> Option<&[FlowLabel]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

const FLOW_HEADER: &[&str] = &["protocol", "src_ip", "src_port", "dst_ip", "dst_port"];
const FLOW_HEADER_LABELED: &[&str] = &[
    "protocol", "src_ip", "src_port", "dst_ip", "dst_port", "label",
];

fn parse_ip(cell: &str, allowed: bool, field: &str, row: usize) -> Result<FieldValue<Ipv4Addr>, IoError> {
    if cell == "*" {
        return if allowed {
            Ok(FieldValue::Any)
        } else {
            Err(IoError::Malformed {
                row,
                reason: format!("column {field}: wildcard not permitted"),
            })
        };
    }
    cell.parse::<Ipv4Addr>()
        .map(FieldValue::Value)
        .map_err(|_| IoError::Malformed {
            row,
            reason: format!("column {field}: {cell:?} is not an IPv4 address"),
        })
}

fn parse_port(cell: &str, allowed: bool, field: &str, row: usize) -> Result<FieldValue<u16>, IoError> {
    if cell == "*" {
        return if allowed {
            Ok(FieldValue::Any)
        } else {
            Err(IoError::Malformed {
                row,
                reason: format!("column {field}: wildcard not permitted"),
            })
        };
    }
    cell.parse::<u16>()
        .map(FieldValue::Value)
        .map_err(|_| IoError::Malformed {
            row,
            reason: format!("column {field}: {cell:?} is not a port in [0, 65535]"),
        })
}

/// Loads a flow log. The header decides whether a trailing `label` column
/// (`self`/`nonself`) is present; `*` marks a wildcard where the policy
/// permits one.
pub fn load_flows<R: BufRead>(reader: R, options: &FlowOptions) -> Result<FlowLog, IoError> {
    let lines = read_lines(reader)?;
    let labeled = match lines.first() {
        Some(first) => {
            let plain = FLOW_HEADER.join(&options.delimiter.to_string());
            let with_label = FLOW_HEADER_LABELED.join(&options.delimiter.to_string());
            if first == &plain {
                false
            } else if first == &with_label {
                true
            } else {
                return Err(IoError::Header {
                    expected: plain,
                    found: first.clone(),
                });
            }
        }
        None => return Err(IoError::Empty),
    };

    let columns = if labeled { 6 } else { 5 };
    let mut records = Vec::new();
    let mut labels = if labeled { Some(Vec::new()) } else { None };
    for (index, line) in lines.iter().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row = index + 1;
        let cells = split_row(line, options.delimiter, columns, row)?;

        let protocol = if cells[0] == "*" {
            if !options.wildcards.protocol {
                return Err(IoError::Malformed {
                    row,
                    reason: "column protocol: wildcard not permitted".into(),
                });
            }
            FieldValue::Any
        } else {
            let token = cells[0].to_ascii_lowercase();
            if options.registry.code(&token).is_none() {
                return Err(IoError::Malformed {
                    row,
                    reason: format!("column protocol: unknown token {:?}", cells[0]),
                });
            }
            FieldValue::Value(token)
        };
        let src_ip = parse_ip(cells[1], options.wildcards.src_ip, "src_ip", row)?;
        let src_port = parse_port(cells[2], options.wildcards.src_port, "src_port", row)?;
        let dst_ip = parse_ip(cells[3], options.wildcards.dst_ip, "dst_ip", row)?;
        let dst_port = parse_port(cells[4], options.wildcards.dst_port, "dst_port", row)?;
        records.push(FlowRecord {
            protocol,
            src_ip,
            src_port,
            dst_ip,
            dst_port,
        });
        if let Some(labels) = labels.as_mut() {
            match cells[5] {
                "self" => labels.push(FlowLabel::SelfFlow),
                "nonself" => labels.push(FlowLabel::NonSelf),
                other => {
                    return Err(IoError::Malformed {
                        row,
                        reason: format!(
                            "column label: {other:?} is neither \"self\" nor \"nonself\""
                        ),
                    })
                }
            }
        }
    }
    FlowLog::new(records, labels)
}

fn field_to_cell<T: std::fmt::Display>(value: &FieldValue<T>) -> String {
    match value {
        FieldValue::Value(v) => v.to_string(),
        FieldValue::Any => "*".to_string(),
    }
}

/// Serializes a flow log back to delimited text (with a label column when
/// labels are present).
pub fn flows_to_csv(log: &FlowLog) -> String {
    let labeled = log.labels().is_some();
    let mut out = String::new();
    out.push_str(if labeled {
        "protocol,src_ip,src_port,dst_ip,dst_port,label\n"
    } else {
        "protocol,src_ip,src_port,dst_ip,dst_port\n"
    });
    for (index, record) in log.records().iter().enumerate() {
        write!(
            out,
            "{},{},{},{},{}",
            field_to_cell(&record.protocol),
            field_to_cell(&record.src_ip),
            field_to_cell(&record.src_port),
            field_to_cell(&record.dst_ip),
            field_to_cell(&record.dst_port),
        )
        .unwrap();
        if let Some(labels) = log.labels() {
            write!(out, ",{}", labels[index].as_str()).unwrap();
        }
        out.push('\n');
    }
    out
}

const SIGNAL_HEADER: &[&str] = &["tick", "pamp", "danger", "safe"];
const ANTIGEN_HEADER: &[&str] = &["tick", "antigen_type"];

fn parse_number<T: std::str::FromStr>(cell: &str, column: &str, row: usize) -> Result<T, IoError> {
    cell.parse().map_err(|_| IoError::Malformed {
        row,
        reason: format!("column {column}: cannot parse {cell:?}"),
    })
}

/// Loads a `tick,pamp,danger,safe` signal stream; ticks must strictly
/// increase and values must be finite and non-negative.
pub fn load_signal_stream<R: BufRead>(reader: R, delimiter: char) -> Result<Vec<SignalFrame>, IoError> {
    let lines = read_lines(reader)?;
    check_header(lines.first(), SIGNAL_HEADER, delimiter)?;
    let mut frames: Vec<SignalFrame> = Vec::new();
    for (index, line) in lines.iter().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row = index + 1;
        let cells = split_row(line, delimiter, 4, row)?;
        let tick: u64 = parse_number(cells[0], "tick", row)?;
        let pamp: f64 = parse_number(cells[1], "pamp", row)?;
        let danger: f64 = parse_number(cells[2], "danger", row)?;
        let safe: f64 = parse_number(cells[3], "safe", row)?;
        let frame = SignalFrame::new(tick, pamp, danger, safe).map_err(|e| IoError::Malformed {
            row,
            reason: e.to_string(),
        })?;
        if let Some(previous) = frames.last() {
            if frame.tick <= previous.tick {
                return Err(IoError::Malformed {
                    row,
                    reason: format!(
                        "tick {} does not increase past {}",
                        frame.tick, previous.tick
                    ),
                });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Loads a `tick,antigen_type` event stream; ticks must not decrease.
pub fn load_antigen_stream<R: BufRead>(
    reader: R,
    delimiter: char,
) -> Result<Vec<AntigenEvent>, IoError> {
    let lines = read_lines(reader)?;
    check_header(lines.first(), ANTIGEN_HEADER, delimiter)?;
    let mut events: Vec<AntigenEvent> = Vec::new();
    for (index, line) in lines.iter().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let row = index + 1;
        let cells = split_row(line, delimiter, 2, row)?;
        let tick: u64 = parse_number(cells[0], "tick", row)?;
        if cells[1].is_empty() {
            return Err(IoError::Malformed {
                row,
                reason: "column antigen_type must be non-empty".into(),
            });
        }
        if let Some(previous) = events.last() {
            if tick < previous.tick {
                return Err(IoError::Malformed {
                    row,
                    reason: format!("tick {} decreases past {}", tick, previous.tick),
                });
            }
        }
        events.push(AntigenEvent::new(tick, cells[1]));
    }
    Ok(events)
}

/// Serializes signal frames to `tick,pamp,danger,safe` text.
pub fn signals_to_csv(frames: &[SignalFrame]) -> String {
    let mut out = String::from("tick,pamp,danger,safe\n");
    for frame in frames {
        writeln!(out, "{},{},{},{}", frame.tick, frame.pamp, frame.danger, frame.safe).unwrap();
    }
    out
}

/// Serializes antigen events to `tick,antigen_type` text.
pub fn antigens_to_csv(events: &[AntigenEvent]) -> String {
    let mut out = String::from("tick,antigen_type\n");
    for event in events {
        writeln!(out, "{},{}", event.tick, event.antigen_type).unwrap();
    }
    out
}
