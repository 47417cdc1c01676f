//! Property tests for the cross-module invariants, checked against
//! independent positional oracles on small instances.

use std::collections::BTreeMap;
use std::net::Ipv4Addr;
use std::num::NonZeroU32;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ais_core::clonal::{clonal_step, clone_count, hypermutate, ClonalConfig};
use ais_core::dca::{run_stream, AntigenEvent, DcaConfig, SignalFrame};
use ais_core::encoding::{
    hamming_similarity, longest_contiguous_match, pearson, BitMeasure, BitString, FieldValue,
    FlowRecord, RatingProfile, ScoreRange,
};
use ais_core::io::{project_field, FlowField, ProtocolRegistry, FLOW_BITS};
use ais_core::negsel::{generate_detectors, GeneratorConfig, MatchRule, NegSelError, SelfSet};
use ais_core::network::{ImmuneNetwork, NetworkParams};

const CUTOFF: NonZeroU32 = NonZeroU32::new(5).unwrap();

/// Position-by-position oracle for the agreement count.
fn oracle_hamming(a: &BitString, b: &BitString) -> usize {
    let mut count = 0;
    for i in 0..a.len() {
        if a.bits()[i] == b.bits()[i] {
            count += 1;
        }
    }
    count
}

/// Position-by-position oracle for the longest agreeing run.
fn oracle_longest_run(a: &BitString, b: &BitString) -> usize {
    let mut best = 0;
    for start in 0..a.len() {
        let mut run = 0;
        while start + run < a.len() && a.bits()[start + run] == b.bits()[start + run] {
            run += 1;
        }
        if run > best {
            best = run;
        }
    }
    best
}

fn bit_string(len: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), len..=len)
        .prop_map(|bits| BitString::new(bits).unwrap())
}

fn bit_pair() -> impl Strategy<Value = (BitString, BitString)> {
    (1usize..=12).prop_flat_map(|len| (bit_string(len), bit_string(len)))
}

proptest! {
    #[test]
    fn bit_measures_are_symmetric_bounded_and_ordered((a, b) in bit_pair()) {
        let hamming = hamming_similarity(&a, &b).unwrap().value() as usize;
        let run = longest_contiguous_match(&a, &b).unwrap().value() as usize;
        prop_assert_eq!(hamming, hamming_similarity(&b, &a).unwrap().value() as usize);
        prop_assert_eq!(run, longest_contiguous_match(&b, &a).unwrap().value() as usize);
        prop_assert!(hamming <= a.len());
        prop_assert!(run <= hamming);
        prop_assert_eq!(hamming, oracle_hamming(&a, &b));
        prop_assert_eq!(run, oracle_longest_run(&a, &b));
    }
}

#[test]
fn bit_measures_match_oracle_exhaustively_up_to_length_five() {
    for len in 1..=5usize {
        for left in 0..(1u32 << len) {
            for right in 0..(1u32 << len) {
                let a = BitString::new((0..len).map(|b| (left >> b) & 1 == 1).collect()).unwrap();
                let b = BitString::new((0..len).map(|b| (right >> b) & 1 == 1).collect()).unwrap();
                assert_eq!(
                    BitMeasure::Hamming.score(&a, &b).unwrap(),
                    oracle_hamming(&a, &b)
                );
                assert_eq!(
                    BitMeasure::LongestRun.score(&a, &b).unwrap(),
                    oracle_longest_run(&a, &b)
                );
            }
        }
    }
}

fn votes() -> impl Strategy<Value = BTreeMap<u8, i32>> {
    prop::collection::btree_map(0u8..20, 0i32..=5, 0..12)
}

fn profile_from(user: &str, votes: &BTreeMap<u8, i32>) -> RatingProfile {
    RatingProfile::new(
        user,
        votes.iter().map(|(&item, &score)| (format!("i{item:02}"), score)),
        &ScoreRange::default(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn pearson_is_symmetric_and_bounded(u in votes(), v in votes()) {
        let pu = profile_from("u", &u);
        let pv = profile_from("v", &v);
        let forward = pearson(&pu, &pv, CUTOFF).value();
        let backward = pearson(&pv, &pu, CUTOFF).value();
        prop_assert!(forward.abs() <= 1.0);
        prop_assert_eq!(forward, backward);
        let overlap = u.keys().filter(|k| v.contains_key(k)).count();
        if overlap == 0 {
            prop_assert_eq!(forward, 0.0);
        }
    }

    #[test]
    fn pearson_is_invariant_under_item_relabeling(u in votes(), v in votes()) {
        let pu = profile_from("u", &u);
        let pv = profile_from("v", &v);
        // 7 is coprime with 20, so this renaming is a bijection on the
        // item universe.
        let relabel = |votes: &BTreeMap<u8, i32>| {
            RatingProfile::new(
                "x",
                votes
                    .iter()
                    .map(|(&item, &score)| (format!("r{:02}", (item * 7 + 3) % 20), score)),
                &ScoreRange::default(),
            )
            .unwrap()
        };
        let original = pearson(&pu, &pv, CUTOFF).value();
        let renamed = pearson(&relabel(&u), &relabel(&v), CUTOFF).value();
        prop_assert!((original - renamed).abs() < 1e-12);
    }

    #[test]
    fn hypermutate_at_full_affinity_is_identity(pattern in bit_string(10), seed in any::<u64>()) {
        let config = ClonalConfig::default();
        prop_assert_eq!(hypermutate(&pattern, 1.0, &config, seed).unwrap(), pattern);
    }

    #[test]
    fn clone_counts_are_non_increasing_and_bounded(
        factor in 0.1f64..4.0,
        population in 1usize..60,
        max_clones in 1usize..40,
    ) {
        let config = ClonalConfig {
            clone_factor: factor,
            population_size: population,
            max_clones,
            ..ClonalConfig::default()
        };
        let mut previous = usize::MAX;
        let mut total = 0usize;
        for rank in 1..=population {
            let count = clone_count(rank, &config);
            prop_assert!(count <= max_clones);
            prop_assert!(count <= previous);
            previous = count;
            total += count;
        }
        prop_assert!(total <= max_clones * population);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clonal_step_preserves_size_and_monotone_best(
        len in 4usize..=10,
        size in 2usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let antigen = BitString::random(len, &mut rng);
        let mut population: Vec<BitString> =
            (0..size).map(|_| BitString::random(len, &mut rng)).collect();
        let config = ClonalConfig {
            population_size: size,
            max_clones: 20,
            ..ClonalConfig::default()
        };
        let best = |pop: &[BitString]| {
            pop.iter()
                .map(|p| BitMeasure::Hamming.score(p, &antigen).unwrap())
                .max()
                .unwrap()
        };
        let mut previous = best(&population);
        for step in 0..5 {
            population = clonal_step(
                &population,
                &antigen,
                BitMeasure::Hamming,
                &config,
                seed.wrapping_add(step),
            )
            .unwrap();
            prop_assert_eq!(population.len(), size);
            let now = best(&population);
            prop_assert!(now >= previous);
            previous = now;
        }
    }

    #[test]
    fn generated_detectors_are_self_tolerant_and_deterministic(
        len in 6usize..=10,
        self_count in 1usize..=5,
        threshold in 2usize..=4,
        repair in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
        let patterns: Vec<BitString> =
            (0..self_count).map(|_| BitString::random(len, &mut rng)).collect();
        let self_set = SelfSet::new(patterns).unwrap();
        let rule = MatchRule::RContiguous { threshold };
        let config = GeneratorConfig {
            repair,
            max_attempts: 2_000,
            ..GeneratorConfig::new(5, rule, seed)
        };
        let outcome = generate_detectors(&self_set, &config);
        let detectors = match &outcome {
            Ok(detectors) => detectors.as_slice(),
            Err(NegSelError::Exhausted { found, .. }) => found.as_slice(),
            Err(other) => return Err(TestCaseError::fail(format!("unexpected error {other}"))),
        };
        for detector in detectors {
            for pattern in self_set.patterns() {
                prop_assert!(!rule.matches(detector.pattern(), pattern).unwrap());
            }
        }
        if let Ok(detectors) = &outcome {
            let again = generate_detectors(&self_set, &config).unwrap();
            prop_assert_eq!(detectors, &again);
        }
    }

    #[test]
    fn network_concentrations_stay_inside_bounds(
        seed in any::<u64>(),
        dt in 0.05f64..0.5,
        stimulation in 0.5f64..4.0,
        idiotypic in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = NetworkParams {
            dt,
            stimulation,
            capacity: 6,
            ..NetworkParams::default()
        };
        let items = ["a", "b", "c", "d", "e", "f"];
        let mut make_profile = |user: String| {
            let mut votes: Vec<(String, i32)> = Vec::new();
            for item in items {
                if rng.random::<bool>() {
                    votes.push((item.to_string(), rng.random_range(0..=5)));
                }
            }
            RatingProfile::new(user, votes, &ScoreRange::default()).unwrap()
        };
        let antigen = make_profile("antigen".into());
        let mut network = ImmuneNetwork::new(antigen, params.clone(), idiotypic).unwrap();
        for i in 0..6 {
            network.add_antibody(make_profile(format!("u{i}"))).unwrap();
        }
        for _ in 0..30 {
            network.iterate();
            for antibody in network.antibodies() {
                let x = antibody.concentration();
                prop_assert!(x >= 0.0 && x <= params.saturation_cap);
                prop_assert!(x >= params.concentration_floor);
            }
        }
    }

    #[test]
    fn predictions_stay_inside_contributing_vote_range(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items = ["a", "b", "c", "d", "e", "target"];
        let mut make_profile = |user: String| {
            let mut votes: Vec<(String, i32)> = Vec::new();
            for item in items {
                if rng.random::<bool>() {
                    votes.push((item.to_string(), rng.random_range(0..=5)));
                }
            }
            RatingProfile::new(user, votes, &ScoreRange::default()).unwrap()
        };
        let antigen = make_profile("antigen".into());
        let mut network =
            ImmuneNetwork::new(antigen, NetworkParams::default(), false).unwrap();
        for i in 0..8 {
            network.add_antibody(make_profile(format!("u{i}"))).unwrap();
        }
        network.iterate();
        if let Some(predicted) = network.predict("target") {
            let contributing: Vec<i32> = network
                .antibodies()
                .iter()
                .zip(network.antigen_affinities())
                .filter(|(_, &m)| m > 0.0)
                .filter_map(|(a, _)| a.profile().vote("target"))
                .collect();
            let low = *contributing.iter().min().unwrap() as f64;
            let high = *contributing.iter().max().unwrap() as f64;
            prop_assert!(predicted >= low - 1e-12 && predicted <= high + 1e-12);
        }
    }
}

fn dca_stream(ticks: usize) -> impl Strategy<Value = Vec<(f64, f64, f64, u8)>> {
    prop::collection::vec(
        (0.5f64..2.0, 0.0f64..2.0, 0.0f64..1.0, 0u8..3),
        ticks..=ticks,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dca_scores_bounded_and_totals_conserved(stream in dca_stream(30), seed in any::<u64>()) {
        let signals: Vec<SignalFrame> = stream
            .iter()
            .enumerate()
            .map(|(t, &(p, d, s, _))| SignalFrame::new(t as u64, p, d, s).unwrap())
            .collect();
        let antigens: Vec<AntigenEvent> = stream
            .iter()
            .enumerate()
            .map(|(t, &(_, _, _, kind))| AntigenEvent::new(t as u64, format!("t{kind}")))
            .collect();
        let config = DcaConfig {
            population_size: 4,
            threshold_range: (2.0, 7.0),
            ..DcaConfig::default()
        };
        let verdicts = run_stream(&signals, &antigens, &config, seed).unwrap();
        let total: u64 = verdicts.iter().map(|v| v.presentations_total).sum();
        prop_assert_eq!(total, antigens.len() as u64);
        for verdict in &verdicts {
            prop_assert!(verdict.anomaly_score >= 0.0 && verdict.anomaly_score <= 1.0);
            prop_assert!(verdict.presentations_mature <= verdict.presentations_total);
        }
    }

    /// Raising every frame's safe component never raises any antigen's
    /// anomaly score. The migration cadence is pinned (threshold below the
    /// smallest per-tick csm delta, so every cell presents every tick) to
    /// keep the two runs window-aligned; with shifting windows a safe
    /// increase can reshuffle which signals land in which presentation.
    #[test]
    fn dca_more_safe_never_raises_scores(
        stream in dca_stream(40),
        delta in 0.0f64..1.5,
        seed in any::<u64>(),
    ) {
        let base: Vec<SignalFrame> = stream
            .iter()
            .enumerate()
            .map(|(t, &(p, d, s, _))| SignalFrame::new(t as u64, p, d, s).unwrap())
            .collect();
        let raised: Vec<SignalFrame> = base
            .iter()
            .map(|f| SignalFrame::new(f.tick, f.pamp, f.danger, f.safe + delta).unwrap())
            .collect();
        let antigens: Vec<AntigenEvent> = stream
            .iter()
            .enumerate()
            .map(|(t, &(_, _, _, kind))| AntigenEvent::new(t as u64, format!("t{kind}")))
            .collect();
        // pamp >= 0.5 makes every per-tick csm delta at least 1.0.
        let config = DcaConfig {
            population_size: 3,
            threshold_range: (1.0, 1.0),
            ..DcaConfig::default()
        };
        let before = run_stream(&base, &antigens, &config, seed).unwrap();
        let after = run_stream(&raised, &antigens, &config, seed).unwrap();
        let score_of = |verdicts: &[ais_core::dca::AntigenVerdict], name: &str| {
            verdicts
                .iter()
                .find(|v| v.antigen_type == name)
                .map(|v| v.anomaly_score)
        };
        for verdict in &before {
            let later = score_of(&after, &verdict.antigen_type).unwrap();
            prop_assert!(later <= verdict.anomaly_score + 1e-12);
        }
    }
}

fn flow_field<T: std::fmt::Debug + Clone>(
    value: impl Strategy<Value = T>,
) -> impl Strategy<Value = FieldValue<T>> {
    prop_oneof![
        4 => value.prop_map(FieldValue::Value),
        1 => Just(FieldValue::Any),
    ]
}

fn concrete_flow_record() -> impl Strategy<Value = FlowRecord> {
    (
        prop::sample::select(vec!["tcp", "udp", "icmp"]),
        any::<u32>(),
        any::<u16>(),
        any::<u32>(),
        any::<u16>(),
    )
        .prop_map(|(protocol, src_ip, src_port, dst_ip, dst_port)| FlowRecord {
            protocol: FieldValue::Value(protocol.to_string()),
            src_ip: FieldValue::Value(Ipv4Addr::from(src_ip)),
            src_port: FieldValue::Value(src_port),
            dst_ip: FieldValue::Value(Ipv4Addr::from(dst_ip)),
            dst_port: FieldValue::Value(dst_port),
        })
}

fn flow_record() -> impl Strategy<Value = FlowRecord> {
    (
        flow_field(prop::sample::select(vec!["tcp", "udp", "icmp"]).prop_map(str::to_string)),
        flow_field(any::<u32>().prop_map(Ipv4Addr::from)),
        flow_field(any::<u16>()),
        flow_field(any::<u32>().prop_map(Ipv4Addr::from)),
        flow_field(any::<u16>()),
    )
        .prop_map(|(protocol, src_ip, src_port, dst_ip, dst_port)| FlowRecord {
            protocol,
            src_ip,
            src_port,
            dst_ip,
            dst_port,
        })
}

proptest! {
    #[test]
    fn flow_codec_round_trips(record in flow_record()) {
        let registry = ProtocolRegistry::default();
        let encoded = registry.serialize_flow(&record).unwrap();
        prop_assert_eq!(encoded.bits.len(), FLOW_BITS);
        let decoded = registry.deserialize_flow(&encoded).unwrap();
        prop_assert_eq!(decoded, record);
    }

    #[test]
    fn flow_codec_is_injective_on_concrete_records(
        a in concrete_flow_record(),
        b in concrete_flow_record(),
    ) {
        let registry = ProtocolRegistry::default();
        let bits_a = registry.serialize_flow(&a).unwrap().bits;
        let bits_b = registry.serialize_flow(&b).unwrap().bits;
        if a != b {
            prop_assert_ne!(bits_a, bits_b);
        } else {
            prop_assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn projected_port_field_reads_back_the_port(port in any::<u16>()) {
        let registry = ProtocolRegistry::default();
        let record = FlowRecord {
            protocol: FieldValue::Value("tcp".into()),
            src_ip: FieldValue::Value(Ipv4Addr::new(10, 0, 0, 1)),
            src_port: FieldValue::Value(1024),
            dst_ip: FieldValue::Value(Ipv4Addr::new(10, 0, 0, 9)),
            dst_port: FieldValue::Value(port),
        };
        let encoded = registry.serialize_flow(&record).unwrap();
        let projected = project_field(&encoded, FlowField::DstPort).unwrap();
        let mut read_back = 0u16;
        for &bit in projected.bits() {
            read_back = (read_back << 1) | bit as u16;
        }
        prop_assert_eq!(read_back, port);
    }
}
