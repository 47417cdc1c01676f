//! Shared representations and affinity measures.
//!
//! Antigens and antibodies are encoded the same way: fixed-length bit
//! strings for detector workloads, sparse rating profiles for the
//! recommender, and flow records for network traffic. Every similarity
//! measure lives here so the algorithm modules agree on what "affinity"
//! means.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;
use std::num::NonZeroU32;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

/// Errors raised by constructors and measures in this module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodingError {
    #[error("bit string must contain at least one bit")]
    EmptyBitString,
    #[error("invalid bit character {found:?} (expected '0' or '1')")]
    InvalidBit { found: char },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("real vector must contain at least one value")]
    EmptyVector,
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("invalid score range: min {min} must be strictly below max {max}")]
    InvalidScoreRange { min: i32, max: i32 },
    #[error("duplicate vote for item {item:?}")]
    DuplicateVote { item: String },
    #[error("score {score} for item {item:?} outside [{min}, {max}]")]
    ScoreOutOfRange {
        item: String,
        score: i32,
        min: i32,
        max: i32,
    },
}

/// Fixed-length binary pattern. Detectors, self strings, and clonal
/// individuals all use this encoding. Ordering is lexicographic over the
/// bits, which keeps collections of patterns deterministic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    /// Wraps a bit vector; at least one bit is required.
    pub fn new(bits: Vec<bool>) -> Result<Self, EncodingError> {
        if bits.is_empty() {
            return Err(EncodingError::EmptyBitString);
        }
        Ok(Self { bits })
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(text: &str) -> Result<Self, EncodingError> {
        let bits = text
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(EncodingError::InvalidBit { found: other }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits)
    }

    /// Draws a uniform random bit string of the given length.
    ///
    /// Panics if `len` is zero; callers derive the length from an already
    /// validated source (a `SelfSet`, a config field checked up front).
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        assert!(len >= 1, "bit string length must be at least 1");
        Self {
            bits: (0..len).map(|_| rng.random::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one bit
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Flips every bit.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Flips the bit at `index`.
    pub fn flip(&mut self, index: usize) {
        self.bits[index] = !self.bits[index];
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.bits {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

/// Ordered sequence of finite real values.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector {
    values: Vec<f64>,
}

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EncodingError> {
        if values.is_empty() {
            return Err(EncodingError::EmptyVector);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EncodingError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Inclusive integer score range for votes, default `[0, 5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoreRange {
    min: i32,
    max: i32,
}

impl ScoreRange {
    pub fn new(min: i32, max: i32) -> Result<Self, EncodingError> {
        if min >= max {
            return Err(EncodingError::InvalidScoreRange { min, max });
        }
        Ok(Self { min, max })
    }

    pub fn min(&self) -> i32 {
        self.min
    }

    pub fn max(&self) -> i32 {
        self.max
    }

    pub fn contains(&self, score: i32) -> bool {
        score >= self.min && score <= self.max
    }

    /// Mirrors a score around the range midpoint: `max + min - score`.
    pub fn reflect(&self, score: i32) -> i32 {
        self.max + self.min - score
    }
}

impl Default for ScoreRange {
    fn default() -> Self {
        Self { min: 0, max: 5 }
    }
}

/// Sparse per-user vote list: item id to integer score.
///
/// Item ids are unique within a profile; iteration order is sorted by item
/// id so downstream arithmetic is reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingProfile {
    user_id: String,
    votes: BTreeMap<String, i32>,
}

impl RatingProfile {
    pub fn new<I, S>(
        user_id: impl Into<String>,
        votes: I,
        range: &ScoreRange,
    ) -> Result<Self, EncodingError>
    where
        I: IntoIterator<Item = (S, i32)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (item, score) in votes {
            let item = item.into();
            if !range.contains(score) {
                return Err(EncodingError::ScoreOutOfRange {
                    item,
                    score,
                    min: range.min,
                    max: range.max,
                });
            }
            if map.insert(item.clone(), score).is_some() {
                return Err(EncodingError::DuplicateVote { item });
            }
        }
        Ok(Self {
            user_id: user_id.into(),
            votes: map,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.user_id
    }

    pub fn votes(&self) -> &BTreeMap<String, i32> {
        &self.votes
    }

    pub fn vote(&self, item_id: &str) -> Option<i32> {
        self.votes.get(item_id).copied()
    }

    pub fn vote_count(&self) -> usize {
        self.votes.len()
    }

    /// Mean over all of this user's votes, not just any overlap.
    fn mean_vote(&self) -> Option<f64> {
        if self.votes.is_empty() {
            return None;
        }
        let sum: i64 = self.votes.values().map(|&v| v as i64).sum();
        Some(sum as f64 / self.votes.len() as f64)
    }
}

/// How an affinity value is to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffinityKind {
    /// Integral agreement count, bounded by the string length.
    CountBased,
    /// Correlation coefficient in `[-1, 1]`.
    Correlation,
    /// Non-negative metric distance.
    Distance,
}

/// A similarity (or distance) score together with its interpretation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affinity {
    value: f64,
    kind: AffinityKind,
}

impl Affinity {
    pub fn count(value: usize) -> Self {
        Self {
            value: value as f64,
            kind: AffinityKind::CountBased,
        }
    }

    pub fn correlation(value: f64) -> Self {
        debug_assert!((-1.0..=1.0).contains(&value));
        Self {
            value,
            kind: AffinityKind::Correlation,
        }
    }

    pub fn distance(value: f64) -> Self {
        debug_assert!(value >= 0.0);
        Self {
            value,
            kind: AffinityKind::Distance,
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn kind(&self) -> AffinityKind {
        self.kind
    }
}

/// The two bit-level similarity measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitMeasure {
    /// Number of agreeing positions (the opposite of Hamming distance).
    Hamming,
    /// Length of the longest run of consecutive agreeing positions.
    LongestRun,
}

impl BitMeasure {
    /// Raw integer score between two equal-length bit strings.
    pub fn score(self, a: &BitString, b: &BitString) -> Result<usize, EncodingError> {
        if a.len() != b.len() {
            return Err(EncodingError::LengthMismatch {
                left: a.len(),
                right: b.len(),
            });
        }
        let agree = a.bits().iter().zip(b.bits()).map(|(x, y)| x == y);
        Ok(match self {
            BitMeasure::Hamming => agree.filter(|&m| m).count(),
            BitMeasure::LongestRun => {
                let mut best = 0usize;
                let mut run = 0usize;
                for matched in agree {
                    if matched {
                        run += 1;
                        best = best.max(run);
                    } else {
                        run = 0;
                    }
                }
                best
            }
        })
    }
}

/// Number of positions where the two strings agree.
pub fn hamming_similarity(a: &BitString, b: &BitString) -> Result<Affinity, EncodingError> {
    BitMeasure::Hamming.score(a, b).map(Affinity::count)
}

/// Length of the longest contiguous run of agreeing positions.
pub fn longest_contiguous_match(a: &BitString, b: &BitString) -> Result<Affinity, EncodingError> {
    BitMeasure::LongestRun.score(a, b).map(Affinity::count)
}

/// Standard L2 distance between two equal-length real vectors.
pub fn euclidean_distance(a: &RealVector, b: &RealVector) -> Result<Affinity, EncodingError> {
    if a.len() != b.len() {
        return Err(EncodingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let sum_sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(Affinity::distance(sum_sq.sqrt()))
}

/// Pearson correlation between two rating profiles.
///
/// The sums run over the items both users voted on; each user's mean is
/// taken over all of their own votes. Disjoint profiles and zero-variance
/// overlaps score 0. When the overlap holds fewer than `penalty_cutoff`
/// common items the coefficient is damped linearly by
/// `overlap / penalty_cutoff`, and the result is clamped to `[-1, 1]`.
pub fn pearson(u: &RatingProfile, v: &RatingProfile, penalty_cutoff: NonZeroU32) -> Affinity {
    let overlap: Vec<(f64, f64)> = u
        .votes
        .iter()
        .filter_map(|(item, &u_score)| {
            v.vote(item).map(|v_score| (u_score as f64, v_score as f64))
        })
        .collect();
    if overlap.is_empty() {
        return Affinity::correlation(0.0);
    }
    // Both profiles are non-empty here, so the means exist.
    let u_mean = u.mean_vote().unwrap();
    let v_mean = v.mean_vote().unwrap();

    let mut numerator = 0.0;
    let mut u_dev_sq = 0.0;
    let mut v_dev_sq = 0.0;
    for &(u_score, v_score) in &overlap {
        let du = u_score - u_mean;
        let dv = v_score - v_mean;
        numerator += du * dv;
        u_dev_sq += du * du;
        v_dev_sq += dv * dv;
    }
    if u_dev_sq <= 0.0 || v_dev_sq <= 0.0 {
        return Affinity::correlation(0.0);
    }
    let mut r = numerator / (u_dev_sq * v_dev_sq).sqrt();
    let n = overlap.len() as f64;
    let cutoff = penalty_cutoff.get() as f64;
    if n < cutoff {
        r *= n / cutoff;
    }
    Affinity::correlation(r.clamp(-1.0, 1.0))
}

/// A concrete value or an "any" wildcard in a flow field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldValue<T> {
    Value(T),
    Any,
}

impl<T: PartialEq> FieldValue<T> {
    /// Wildcards match anything; concrete values must be equal.
    pub fn matches(&self, other: &FieldValue<T>) -> bool {
        match (self, other) {
            (FieldValue::Any, _) | (_, FieldValue::Any) => true,
            (FieldValue::Value(a), FieldValue::Value(b)) => a == b,
        }
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self, FieldValue::Any)
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            FieldValue::Value(v) => Some(v),
            FieldValue::Any => None,
        }
    }
}

/// One network flow: protocol token plus endpoint addresses and ports.
/// Any field may carry a wildcard where the loading configuration permits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowRecord {
    pub protocol: FieldValue<String>,
    pub src_ip: FieldValue<Ipv4Addr>,
    pub src_port: FieldValue<u16>,
    pub dst_ip: FieldValue<Ipv4Addr>,
    pub dst_port: FieldValue<u16>,
}

impl FlowRecord {
    /// Field-wise equality with wildcards counting as a match.
    pub fn matches(&self, other: &FlowRecord) -> bool {
        self.protocol.matches(&other.protocol)
            && self.src_ip.matches(&other.src_ip)
            && self.src_port.matches(&other.src_port)
            && self.dst_ip.matches(&other.dst_ip)
            && self.dst_port.matches(&other.dst_port)
    }

    /// True when no field carries a wildcard.
    pub fn is_concrete(&self) -> bool {
        !self.protocol.is_wildcard()
            && !self.src_ip.is_wildcard()
            && !self.src_port.is_wildcard()
            && !self.dst_ip.is_wildcard()
            && !self.dst_port.is_wildcard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    fn profile(user: &str, votes: &[(&str, i32)]) -> RatingProfile {
        RatingProfile::new(
            user,
            votes.iter().map(|&(i, s)| (i.to_string(), s)),
            &ScoreRange::default(),
        )
        .unwrap()
    }

    const CUTOFF: NonZeroU32 = NonZeroU32::new(5).unwrap();

    #[test]
    fn hamming_worked_examples() {
        let a = bits("00000");
        assert_eq!(hamming_similarity(&a, &bits("00011")).unwrap().value(), 3.0);
        assert_eq!(hamming_similarity(&a, &bits("01010")).unwrap().value(), 3.0);
        assert_eq!(hamming_similarity(&a, &a).unwrap().value(), 5.0);
    }

    #[test]
    fn longest_run_worked_examples() {
        let a = bits("00000");
        assert_eq!(
            longest_contiguous_match(&a, &bits("00011")).unwrap().value(),
            3.0
        );
        assert_eq!(
            longest_contiguous_match(&a, &bits("01010")).unwrap().value(),
            1.0
        );
        let b = bits("1001101");
        assert_eq!(
            longest_contiguous_match(&b, &b.complement()).unwrap().value(),
            0.0
        );
    }

    #[test]
    fn bit_measures_reject_length_mismatch() {
        let err = hamming_similarity(&bits("000"), &bits("00")).unwrap_err();
        assert_eq!(err, EncodingError::LengthMismatch { left: 3, right: 2 });
        assert!(longest_contiguous_match(&bits("0"), &bits("01")).is_err());
    }

    #[test]
    fn bit_string_validation() {
        assert_eq!(BitString::parse("").unwrap_err(), EncodingError::EmptyBitString);
        assert_eq!(
            BitString::parse("01x").unwrap_err(),
            EncodingError::InvalidBit { found: 'x' }
        );
        assert_eq!(bits("10010").to_string(), "10010");
        assert_eq!(bits("10010").complement(), bits("01101"));
    }

    #[test]
    fn euclidean_examples() {
        let zero = RealVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(euclidean_distance(&zero, &zero).unwrap().value(), 0.0);
        let p = RealVector::new(vec![0.0, 0.0]).unwrap();
        let q = RealVector::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(euclidean_distance(&p, &q).unwrap().value(), 5.0);
    }

    #[test]
    fn euclidean_matches_componentwise_oracle() {
        // Independent sum-of-squares accumulation over a fixed length-6 pair.
        let a = RealVector::new(vec![1.5, -2.0, 0.25, 7.0, -0.5, 3.125]).unwrap();
        let b = RealVector::new(vec![-1.0, 4.0, 0.25, 6.5, 2.5, -3.0]).unwrap();
        let mut acc = 0.0_f64;
        for i in 0..6 {
            let d = a.values()[i] - b.values()[i];
            acc += d.powi(2);
        }
        let expected = acc.sqrt();
        let got = euclidean_distance(&a, &b).unwrap().value();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn euclidean_rejects_non_finite_and_mismatch() {
        assert_eq!(
            RealVector::new(vec![1.0, f64::NAN]).unwrap_err(),
            EncodingError::NonFinite { index: 1 }
        );
        let a = RealVector::new(vec![1.0]).unwrap();
        let b = RealVector::new(vec![1.0, 2.0]).unwrap();
        assert!(euclidean_distance(&a, &b).is_err());
    }

    #[test]
    fn pearson_perfect_agreement() {
        let u = profile("u", &[("a", 1), ("b", 3), ("c", 5), ("d", 2), ("e", 4)]);
        let v = profile("v", &[("a", 1), ("b", 3), ("c", 5), ("d", 2), ("e", 4)]);
        let r = pearson(&u, &v, CUTOFF).value();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_disjoint_profiles_default_to_zero() {
        let u = profile("u", &[("a", 5), ("b", 1)]);
        let v = profile("v", &[("c", 3), ("d", 4)]);
        assert_eq!(pearson(&u, &v, CUTOFF).value(), 0.0);
    }

    #[test]
    fn pearson_zero_variance_overlap_is_zero() {
        // All of u's votes are identical, so its overlap deviations vanish.
        let u = profile("u", &[("a", 3), ("b", 3), ("c", 3)]);
        let v = profile("v", &[("a", 1), ("b", 4), ("c", 5)]);
        assert_eq!(pearson(&u, &v, CUTOFF).value(), 0.0);
    }

    #[test]
    fn pearson_eight_item_profiles_match_scalar_oracle() {
        let u = profile(
            "u",
            &[
                ("a", 5),
                ("b", 3),
                ("c", 0),
                ("d", 1),
                ("e", 4),
                ("f", 2),
                ("g", 5),
                ("h", 0),
            ],
        );
        let v = profile(
            "v",
            &[
                ("e", 1),
                ("f", 0),
                ("g", 3),
                ("h", 5),
                ("i", 2),
                ("j", 4),
                ("k", 1),
                ("l", 3),
            ],
        );
        // Scalar re-evaluation: overlap {e,f,g,h}, means over all eight votes
        // of each profile, then a linear penalty for a four-item overlap.
        let u_mean = [5, 3, 0, 1, 4, 2, 5, 0].iter().sum::<i32>() as f64 / 8.0;
        let v_mean = [1, 0, 3, 5, 2, 4, 1, 3].iter().sum::<i32>() as f64 / 8.0;
        let u_over = [4.0, 2.0, 5.0, 0.0];
        let v_over = [1.0, 0.0, 3.0, 5.0];
        let mut num = 0.0;
        let mut du2 = 0.0;
        let mut dv2 = 0.0;
        for k in 0..4 {
            num += (u_over[k] - u_mean) * (v_over[k] - v_mean);
            du2 += (u_over[k] - u_mean).powi(2);
            dv2 += (v_over[k] - v_mean).powi(2);
        }
        let expected = (num / (du2 * dv2).sqrt()) * (4.0 / 5.0);

        let got = pearson(&u, &v, CUTOFF).value();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        // Frozen from the oracle above.
        assert!((got - (-0.315311)).abs() < 1e-4, "{got}");
    }

    #[test]
    fn pearson_penalty_scales_small_overlaps() {
        // Identical three-item overlap, but each user has other votes too.
        let u = profile("u", &[("a", 0), ("b", 5), ("c", 3), ("x", 2)]);
        let v = profile("v", &[("a", 0), ("b", 5), ("c", 3), ("y", 4)]);
        let damped = pearson(&u, &v, CUTOFF).value();
        let undamped = pearson(&u, &v, NonZeroU32::new(3).unwrap()).value();
        assert!((damped - undamped * 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn rating_profile_validation() {
        let range = ScoreRange::default();
        let err = RatingProfile::new("u", vec![("a".to_string(), 7)], &range).unwrap_err();
        assert!(matches!(err, EncodingError::ScoreOutOfRange { score: 7, .. }));
        let err = RatingProfile::new(
            "u",
            vec![("a".to_string(), 1), ("a".to_string(), 2)],
            &range,
        )
        .unwrap_err();
        assert_eq!(err, EncodingError::DuplicateVote { item: "a".into() });
    }

    #[test]
    fn score_range_reflect_and_contains() {
        let range = ScoreRange::default();
        assert!(range.contains(0) && range.contains(5));
        assert!(!range.contains(-1) && !range.contains(6));
        assert_eq!(range.reflect(0), 5);
        assert_eq!(range.reflect(4), 1);
        assert!(ScoreRange::new(3, 3).is_err());
    }

    #[test]
    fn flow_record_wildcard_matching() {
        let concrete = FlowRecord {
            protocol: FieldValue::Value("tcp".into()),
            src_ip: FieldValue::Value(Ipv4Addr::new(10, 0, 0, 1)),
            src_port: FieldValue::Value(1234),
            dst_ip: FieldValue::Value(Ipv4Addr::new(10, 0, 0, 9)),
            dst_port: FieldValue::Value(25),
        };
        let any_port = FlowRecord {
            dst_port: FieldValue::Any,
            ..concrete.clone()
        };
        assert!(any_port.matches(&concrete));
        assert!(concrete.matches(&any_port));
        assert!(!any_port.is_concrete());
        let other = FlowRecord {
            dst_port: FieldValue::Value(80),
            ..concrete.clone()
        };
        assert!(!concrete.matches(&other));
        assert!(any_port.matches(&other));
    }
}
