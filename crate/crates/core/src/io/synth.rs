//! Seeded synthetic-data generators for both workloads.
//!
//! Each generator emits data plus a manifest of the ground-truth structure
//! it planted (cluster membership, attack row indices, anomalous antigen
//! types), so downstream checks can compare results against construction
//! instead of against opinion. Identical spec and seed reproduce identical
//! bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dca::{AntigenEvent, SignalFrame};
use crate::encoding::{FieldValue, FlowRecord, RatingProfile, ScoreRange};

use super::{FlowLabel, FlowLog, IoError, ProtocolRegistry, RatingsTable};

/// One cluster of like-minded users.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    pub label: String,
    pub members: usize,
}

/// Clustered ratings-table spec.
///
/// Votes derive from a global taste vector; each cluster perturbs a
/// `cluster_spread` fraction of items, members add per-vote noise, and
/// every user leaves `holdout_per_user` items unrated so there is room to
/// recommend.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsSpec {
    pub items: usize,
    pub clusters: Vec<ClusterSpec>,
    pub dispersed_users: usize,
    pub cluster_spread: f64,
    pub member_noise: f64,
    pub holdout_per_user: usize,
    pub score_range: ScoreRange,
}

impl Default for RatingsSpec {
    fn default() -> Self {
        Self {
            items: 30,
            clusters: vec![
                ClusterSpec {
                    label: "c0".into(),
                    members: 8,
                },
                ClusterSpec {
                    label: "c1".into(),
                    members: 8,
                },
            ],
            dispersed_users: 8,
            cluster_spread: 0.4,
            member_noise: 0.15,
            holdout_per_user: 3,
            score_range: ScoreRange::default(),
        }
    }
}

/// Ground truth emitted alongside a synthetic ratings table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsManifest {
    pub seed: u64,
    pub items: usize,
    pub votes_per_user: usize,
    pub clusters: Vec<(String, Vec<String>)>,
    pub dispersed: Vec<String>,
}

impl RatingsManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kind=ratings").unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "items={}", self.items).unwrap();
        writeln!(out, "votes_per_user={}", self.votes_per_user).unwrap();
        writeln!(out, "clusters={}", self.clusters.len()).unwrap();
        for (index, (label, members)) in self.clusters.iter().enumerate() {
            writeln!(out, "cluster.{index}.label={label}").unwrap();
            writeln!(out, "cluster.{index}.members={}", members.join(";")).unwrap();
        }
        writeln!(out, "dispersed={}", self.dispersed.join(";")).unwrap();
        out
    }
}

fn item_id(index: usize, width: usize) -> String {
    format!("m{index:0width$}")
}

fn clamp_vote(value: i32, range: &ScoreRange) -> i32 {
    value.clamp(range.min(), range.max())
}

/// Generates a clustered ratings table and its manifest.
pub fn synth_ratings(
    spec: &RatingsSpec,
    seed: u64,
) -> Result<(RatingsTable, RatingsManifest), IoError> {
    if spec.items == 0 {
        return Err(IoError::ContradictorySpec {
            reason: "items must be at least 1".into(),
        });
    }
    if spec.holdout_per_user >= spec.items {
        return Err(IoError::ContradictorySpec {
            reason: format!(
                "holdout_per_user {} leaves no votes for {} items",
                spec.holdout_per_user, spec.items
            ),
        });
    }
    let total_users: usize =
        spec.clusters.iter().map(|c| c.members).sum::<usize>() + spec.dispersed_users;
    if total_users == 0 {
        return Err(IoError::ContradictorySpec {
            reason: "spec produces no users".into(),
        });
    }
    for fraction in [spec.cluster_spread, spec.member_noise] {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(IoError::ContradictorySpec {
                reason: format!("fractions must lie in [0, 1], got {fraction}"),
            });
        }
    }
    let mut labels = BTreeSet::new();
    for cluster in &spec.clusters {
        if cluster.label.is_empty() || cluster.members == 0 {
            return Err(IoError::ContradictorySpec {
                reason: "clusters need a label and at least one member".into(),
            });
        }
        if !labels.insert(&cluster.label) {
            return Err(IoError::ContradictorySpec {
                reason: format!("duplicate cluster label {:?}", cluster.label),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = &spec.score_range;
    let width = spec.items.to_string().len();
    let global: Vec<i32> = (0..spec.items)
        .map(|_| rng.random_range(range.min()..=range.max()))
        .collect();

    let mut profiles = Vec::with_capacity(total_users);
    let mut manifest_clusters = Vec::with_capacity(spec.clusters.len());
    for cluster in &spec.clusters {
        let prototype: Vec<i32> = global
            .iter()
            .map(|&taste| {
                if rng.random_bool(spec.cluster_spread) {
                    let offset = [-2, -1, 1, 2][rng.random_range(0..4)];
                    clamp_vote(taste + offset, range)
                } else {
                    taste
                }
            })
            .collect();
        let mut members = Vec::with_capacity(cluster.members);
        for member in 0..cluster.members {
            let user = format!("{}_{member}", cluster.label);
            let votes = member_votes(&prototype, spec, range, &mut rng, width);
            profiles.push(RatingProfile::new(&user, votes, range)?);
            members.push(user);
        }
        manifest_clusters.push((cluster.label.clone(), members));
    }

    let mut dispersed = Vec::with_capacity(spec.dispersed_users);
    for index in 0..spec.dispersed_users {
        let user = format!("lone_{index}");
        let random_tastes: Vec<i32> = (0..spec.items)
            .map(|_| rng.random_range(range.min()..=range.max()))
            .collect();
        let votes = member_votes(&random_tastes, spec, range, &mut rng, width);
        profiles.push(RatingProfile::new(&user, votes, range)?);
        dispersed.push(user);
    }

    let manifest = RatingsManifest {
        seed,
        items: spec.items,
        votes_per_user: spec.items - spec.holdout_per_user,
        clusters: manifest_clusters,
        dispersed,
    };
    Ok((RatingsTable::new(profiles), manifest))
}

fn member_votes(
    prototype: &[i32],
    spec: &RatingsSpec,
    range: &ScoreRange,
    rng: &mut ChaCha8Rng,
    width: usize,
) -> Vec<(String, i32)> {
    let held_out: BTreeSet<usize> =
        rand::seq::index::sample(rng, spec.items, spec.holdout_per_user)
            .into_iter()
            .collect();
    prototype
        .iter()
        .enumerate()
        .filter(|(index, _)| !held_out.contains(index))
        .map(|(index, &vote)| {
            let vote = if spec.member_noise > 0.0 && rng.random_bool(spec.member_noise) {
                let offset = if rng.random::<bool>() { 1 } else { -1 };
                clamp_vote(vote + offset, range)
            } else {
                vote
            };
            (item_id(index, width), vote)
        })
        .collect()
}

/// Spec for a labeled flow log: self traffic with attack rows injected at
/// seeded positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSynthSpec {
    pub self_count: usize,
    pub attack_count: usize,
    pub protocols: Vec<String>,
    pub src_hosts: Vec<Ipv4Addr>,
    pub dst_host: Ipv4Addr,
    pub self_ports: Vec<u16>,
    pub attack_ports: Vec<u16>,
}

impl Default for FlowSynthSpec {
    fn default() -> Self {
        Self {
            self_count: 100,
            attack_count: 5,
            protocols: vec!["tcp".into()],
            src_hosts: vec![Ipv4Addr::new(10, 0, 0, 1), Ipv4Addr::new(10, 0, 0, 2)],
            dst_host: Ipv4Addr::new(10, 0, 0, 9),
            self_ports: vec![22, 25, 80, 443],
            attack_ports: vec![4444, 6667],
        }
    }
}

/// Ground truth for a synthetic flow log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowManifest {
    pub seed: u64,
    pub rows: usize,
    pub attack_rows: Vec<usize>,
    pub self_ports: Vec<u16>,
    pub attack_ports: Vec<u16>,
}

impl FlowManifest {
    pub fn to_text(&self) -> String {
        let join = |values: &[u16]| {
            values
                .iter()
                .map(u16::to_string)
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut out = String::new();
        writeln!(out, "kind=flows").unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "rows={}", self.rows).unwrap();
        writeln!(
            out,
            "attack_rows={}",
            self.attack_rows
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";")
        )
        .unwrap();
        writeln!(out, "self_ports={}", join(&self.self_ports)).unwrap();
        writeln!(out, "attack_ports={}", join(&self.attack_ports)).unwrap();
        out
    }
}

/// Generates a labeled flow log with attacks at seeded row positions.
pub fn synth_flows(spec: &FlowSynthSpec, seed: u64) -> Result<(FlowLog, FlowManifest), IoError> {
    let total = spec.self_count + spec.attack_count;
    if total == 0 {
        return Err(IoError::ContradictorySpec {
            reason: "spec produces no rows".into(),
        });
    }
    if spec.self_count > 0 && spec.self_ports.is_empty() {
        return Err(IoError::ContradictorySpec {
            reason: "self rows requested but self_ports is empty".into(),
        });
    }
    if spec.attack_count > 0 && spec.attack_ports.is_empty() {
        return Err(IoError::ContradictorySpec {
            reason: "attack rows requested but attack_ports is empty".into(),
        });
    }
    let overlap: Vec<u16> = spec
        .self_ports
        .iter()
        .filter(|p| spec.attack_ports.contains(p))
        .copied()
        .collect();
    if !overlap.is_empty() {
        return Err(IoError::ContradictorySpec {
            reason: format!("ports {overlap:?} appear as both self and attack"),
        });
    }
    if spec.protocols.is_empty() || spec.src_hosts.is_empty() {
        return Err(IoError::ContradictorySpec {
            reason: "protocols and src_hosts must be non-empty".into(),
        });
    }
    let registry = ProtocolRegistry::default();
    for token in &spec.protocols {
        if registry.code(token).is_none() {
            return Err(IoError::ContradictorySpec {
                reason: format!("protocol {token:?} is not in the registry"),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attack_rows: BTreeSet<usize> = rand::seq::index::sample(&mut rng, total, spec.attack_count)
        .into_iter()
        .collect();

    let mut records = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for row in 0..total {
        let is_attack = attack_rows.contains(&row);
        let ports = if is_attack {
            &spec.attack_ports
        } else {
            &spec.self_ports
        };
        let record = FlowRecord {
            protocol: FieldValue::Value(
                spec.protocols[rng.random_range(0..spec.protocols.len())].clone(),
            ),
            src_ip: FieldValue::Value(spec.src_hosts[rng.random_range(0..spec.src_hosts.len())]),
            src_port: FieldValue::Value(rng.random_range(1024..=60000)),
            dst_ip: FieldValue::Value(spec.dst_host),
            dst_port: FieldValue::Value(ports[rng.random_range(0..ports.len())]),
        };
        records.push(record);
        labels.push(if is_attack {
            FlowLabel::NonSelf
        } else {
            FlowLabel::SelfFlow
        });
    }
    let manifest = FlowManifest {
        seed,
        rows: total,
        attack_rows: attack_rows.into_iter().collect(),
        self_ports: spec.self_ports.clone(),
        attack_ports: spec.attack_ports.clone(),
    };
    Ok((FlowLog::new(records, Some(labels))?, manifest))
}

/// One phase of a synthetic signal/antigen stream: constant signal levels
/// (optionally jittered) and a set of antigen types emitted every tick.
#[derive(Debug, Clone, PartialEq)]
pub struct DcaPhase {
    pub label: String,
    pub ticks: u64,
    pub pamp: f64,
    pub danger: f64,
    pub safe: f64,
    pub antigen_types: Vec<String>,
    pub events_per_tick: usize,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DcaStreamSpec {
    pub phases: Vec<DcaPhase>,
}

/// Ground truth for a synthetic stream pair: which antigen types were
/// planted in danger-dominated phases. Dominance follows the default
/// weight structure (mature output 2p + d - 3s against semi output 3s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcaStreamManifest {
    pub seed: u64,
    pub total_ticks: u64,
    pub anomalous_types: Vec<String>,
    pub normal_types: Vec<String>,
    pub phases: Vec<(String, u64)>,
}

impl DcaStreamManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "kind=dca").unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        writeln!(out, "total_ticks={}", self.total_ticks).unwrap();
        writeln!(out, "anomalous_types={}", self.anomalous_types.join(";")).unwrap();
        writeln!(out, "normal_types={}", self.normal_types.join(";")).unwrap();
        writeln!(out, "phases={}", self.phases.len()).unwrap();
        for (index, (label, ticks)) in self.phases.iter().enumerate() {
            writeln!(out, "phase.{index}.label={label}").unwrap();
            writeln!(out, "phase.{index}.ticks={ticks}").unwrap();
        }
        out
    }
}

fn phase_dominance(phase: &DcaPhase) -> Result<bool, IoError> {
    // mature - semi accumulates 2p + d - 6s per tick under default weights.
    let margin = 2.0 * phase.pamp + phase.danger - 6.0 * phase.safe;
    // Worst-case jitter shifts the margin by up to 9 * jitter.
    if margin.abs() <= 9.0 * phase.jitter {
        return Err(IoError::ContradictorySpec {
            reason: format!(
                "phase {:?}: jitter {} can flip the signal dominance (margin {margin})",
                phase.label, phase.jitter
            ),
        });
    }
    Ok(margin > 0.0)
}

/// Generates tick-aligned signal and antigen streams plus the manifest of
/// planted anomalies.
pub fn synth_dca_stream(
    spec: &DcaStreamSpec,
    seed: u64,
) -> Result<(Vec<SignalFrame>, Vec<AntigenEvent>, DcaStreamManifest), IoError> {
    if spec.phases.is_empty() {
        return Err(IoError::ContradictorySpec {
            reason: "spec has no phases".into(),
        });
    }
    let mut type_dominance: BTreeMap<&str, bool> = BTreeMap::new();
    for phase in &spec.phases {
        if phase.ticks == 0 {
            return Err(IoError::ContradictorySpec {
                reason: format!("phase {:?} has zero ticks", phase.label),
            });
        }
        if phase.jitter < 0.0 {
            return Err(IoError::ContradictorySpec {
                reason: format!("phase {:?} has negative jitter", phase.label),
            });
        }
        let dangerous = phase_dominance(phase)?;
        for antigen_type in &phase.antigen_types {
            if let Some(&existing) = type_dominance.get(antigen_type.as_str()) {
                if existing != dangerous {
                    return Err(IoError::ContradictorySpec {
                        reason: format!(
                            "antigen type {antigen_type:?} appears in both safe and danger phases"
                        ),
                    });
                }
            }
            type_dominance.insert(antigen_type, dangerous);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signals = Vec::new();
    let mut antigens = Vec::new();
    let mut tick = 0u64;
    for phase in &spec.phases {
        for _ in 0..phase.ticks {
            let jitter = |rng: &mut ChaCha8Rng, base: f64| {
                if phase.jitter == 0.0 {
                    base
                } else {
                    (base + rng.random_range(-phase.jitter..=phase.jitter)).max(0.0)
                }
            };
            let pamp = jitter(&mut rng, phase.pamp);
            let danger = jitter(&mut rng, phase.danger);
            let safe = jitter(&mut rng, phase.safe);
            signals.push(SignalFrame::new(tick, pamp, danger, safe)?);
            for antigen_type in &phase.antigen_types {
                for _ in 0..phase.events_per_tick {
                    antigens.push(AntigenEvent::new(tick, antigen_type.clone()));
                }
            }
            tick += 1;
        }
    }

    let anomalous_types = type_dominance
        .iter()
        .filter(|(_, &dangerous)| dangerous)
        .map(|(t, _)| t.to_string())
        .collect();
    let normal_types = type_dominance
        .iter()
        .filter(|(_, &dangerous)| !dangerous)
        .map(|(t, _)| t.to_string())
        .collect();
    let manifest = DcaStreamManifest {
        seed,
        total_ticks: tick,
        anomalous_types,
        normal_types,
        phases: spec.phases.iter().map(|p| (p.label.clone(), p.ticks)).collect(),
    };
    Ok((signals, antigens, manifest))
}

/// Parses `key=value` manifest text; later duplicates win.
pub fn parse_manifest(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter(|line| !line.is_empty())
        .filter_map(|line| {
            line.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::pearson;
    use std::num::NonZeroU32;

    #[test]
    fn clustered_ratings_separate_within_and_between() {
        let spec = RatingsSpec {
            dispersed_users: 0,
            ..RatingsSpec::default()
        };
        let (table, manifest) = synth_ratings(&spec, 11).unwrap();
        let cutoff = NonZeroU32::new(5).unwrap();
        let cluster_a = &manifest.clusters[0].1;
        let cluster_b = &manifest.clusters[1].1;
        let mean_pearson = |users_a: &[String], users_b: &[String]| {
            let mut total = 0.0;
            let mut count = 0usize;
            for a in users_a {
                for b in users_b {
                    if a == b {
                        continue;
                    }
                    total += pearson(
                        table.profile(a).unwrap(),
                        table.profile(b).unwrap(),
                        cutoff,
                    )
                    .value();
                    count += 1;
                }
            }
            total / count as f64
        };
        let within =
            (mean_pearson(cluster_a, cluster_a) + mean_pearson(cluster_b, cluster_b)) / 2.0;
        let between = mean_pearson(cluster_a, cluster_b);
        assert!(
            within > between,
            "within {within} should exceed between {between}"
        );
    }

    #[test]
    fn ratings_generation_matches_manifest_ledger() {
        let spec = RatingsSpec::default();
        let (table, manifest) = synth_ratings(&spec, 5).unwrap();
        let expected_users: usize =
            spec.clusters.iter().map(|c| c.members).sum::<usize>() + spec.dispersed_users;
        assert_eq!(table.len(), expected_users);
        for profile in table.profiles() {
            assert_eq!(profile.vote_count(), manifest.votes_per_user);
        }
        let listed: usize = manifest.clusters.iter().map(|(_, m)| m.len()).sum::<usize>()
            + manifest.dispersed.len();
        assert_eq!(listed, expected_users);

        // The serialized file reloads to the same ledger counts.
        let csv = super::super::ratings_to_csv(&table);
        let reloaded = super::super::load_ratings(
            std::io::Cursor::new(csv),
            &super::super::TableOptions::default(),
        )
        .unwrap();
        assert_eq!(reloaded.len(), expected_users);
        for profile in reloaded.profiles() {
            assert_eq!(profile.vote_count(), manifest.votes_per_user);
        }
    }

    #[test]
    fn ratings_generation_is_reproducible() {
        let spec = RatingsSpec::default();
        let (table_a, manifest_a) = synth_ratings(&spec, 9).unwrap();
        let (table_b, manifest_b) = synth_ratings(&spec, 9).unwrap();
        assert_eq!(super::super::ratings_to_csv(&table_a), super::super::ratings_to_csv(&table_b));
        assert_eq!(manifest_a, manifest_b);
    }

    #[test]
    fn ratings_spec_validation() {
        let mut spec = RatingsSpec::default();
        spec.holdout_per_user = spec.items;
        assert!(synth_ratings(&spec, 0).is_err());
        let mut spec = RatingsSpec::default();
        spec.clusters[1].label = spec.clusters[0].label.clone();
        assert!(synth_ratings(&spec, 0).is_err());
    }

    #[test]
    fn flows_empty_attack_spec_labels_everything_self() {
        let spec = FlowSynthSpec {
            attack_count: 0,
            ..FlowSynthSpec::default()
        };
        let (log, manifest) = synth_flows(&spec, 3).unwrap();
        assert!(manifest.attack_rows.is_empty());
        assert!(log
            .labels()
            .unwrap()
            .iter()
            .all(|&l| l == FlowLabel::SelfFlow));
    }

    #[test]
    fn flows_attack_rows_match_manifest() {
        let spec = FlowSynthSpec::default();
        let (log, manifest) = synth_flows(&spec, 8).unwrap();
        assert_eq!(log.len(), manifest.rows);
        let labels = log.labels().unwrap();
        for (row, label) in labels.iter().enumerate() {
            let expected = if manifest.attack_rows.contains(&row) {
                FlowLabel::NonSelf
            } else {
                FlowLabel::SelfFlow
            };
            assert_eq!(*label, expected, "row {row}");
        }
        for (row, record) in log.records().iter().enumerate() {
            let port = *record.dst_port.value().unwrap();
            if manifest.attack_rows.contains(&row) {
                assert!(manifest.attack_ports.contains(&port));
            } else {
                assert!(manifest.self_ports.contains(&port));
            }
        }
    }

    #[test]
    fn flows_reject_overlapping_port_sets() {
        let spec = FlowSynthSpec {
            self_ports: vec![22, 80],
            attack_ports: vec![80, 4444],
            ..FlowSynthSpec::default()
        };
        assert!(matches!(
            synth_flows(&spec, 0),
            Err(IoError::ContradictorySpec { .. })
        ));
    }

    fn two_phase_spec() -> DcaStreamSpec {
        DcaStreamSpec {
            phases: vec![
                DcaPhase {
                    label: "calm".into(),
                    ticks: 200,
                    pamp: 0.0,
                    danger: 0.0,
                    safe: 1.0,
                    antigen_types: vec!["A".into()],
                    events_per_tick: 1,
                    jitter: 0.0,
                },
                DcaPhase {
                    label: "storm".into(),
                    ticks: 200,
                    pamp: 1.0,
                    danger: 1.0,
                    safe: 0.0,
                    antigen_types: vec!["B".into()],
                    events_per_tick: 1,
                    jitter: 0.0,
                },
            ],
        }
    }

    #[test]
    fn dca_stream_manifest_lists_danger_phase_types() {
        let (signals, antigens, manifest) = synth_dca_stream(&two_phase_spec(), 4).unwrap();
        assert_eq!(signals.len(), 400);
        assert_eq!(antigens.len(), 400);
        assert_eq!(manifest.anomalous_types, vec!["B".to_string()]);
        assert_eq!(manifest.normal_types, vec!["A".to_string()]);
        assert_eq!(manifest.total_ticks, 400);
    }

    #[test]
    fn dca_stream_rejects_contradictions() {
        let mut spec = two_phase_spec();
        spec.phases[1].antigen_types = vec!["A".into()];
        assert!(matches!(
            synth_dca_stream(&spec, 0),
            Err(IoError::ContradictorySpec { .. })
        ));

        // A tie in the dominance margin is ambiguous ground truth.
        let tie = DcaStreamSpec {
            phases: vec![DcaPhase {
                label: "tie".into(),
                ticks: 5,
                pamp: 3.0,
                danger: 0.0,
                safe: 1.0,
                antigen_types: vec!["T".into()],
                events_per_tick: 1,
                jitter: 0.0,
            }],
        };
        assert!(synth_dca_stream(&tie, 0).is_err());

        // Jitter large enough to flip dominance is rejected too.
        let mut spec = two_phase_spec();
        spec.phases[0].jitter = 2.0;
        assert!(synth_dca_stream(&spec, 0).is_err());
    }

    #[test]
    fn dca_stream_jitter_is_seeded_and_bounded() {
        let mut spec = two_phase_spec();
        spec.phases[0].jitter = 0.2;
        spec.phases[1].jitter = 0.2;
        let (signals_a, _, _) = synth_dca_stream(&spec, 21).unwrap();
        let (signals_b, _, _) = synth_dca_stream(&spec, 21).unwrap();
        assert_eq!(signals_a, signals_b);
        for frame in &signals_a[..200] {
            assert!(frame.safe >= 0.8 - 1e-12 && frame.safe <= 1.2 + 1e-12);
        }
    }

    #[test]
    fn manifest_text_round_trips_through_parser() {
        let (_, _, manifest) = synth_dca_stream(&two_phase_spec(), 4).unwrap();
        let parsed = parse_manifest(&manifest.to_text());
        assert_eq!(parsed["kind"], "dca");
        assert_eq!(parsed["anomalous_types"], "B");
        assert_eq!(parsed["phases"], "2");
    }
}
