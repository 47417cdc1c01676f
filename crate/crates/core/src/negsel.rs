//! Negative selection: random detector generation censored against a self
//! set, stream monitoring with activation thresholds, and operator-driven
//! promotion to memory detectors.
//!
//! Candidates are drawn uniformly at random, and any candidate matching a
//! self pattern is destroyed (or, in the repair variant, hypermutated away
//! from self and re-censored). Survivors mature and monitor traffic; a
//! mature detector whose match count reaches its activation threshold
//! raises an alert for an operator, who either promotes it to a memory
//! detector with an indefinite lifespan and minimum activation threshold,
//! or retires it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clonal::{self, ClonalConfig, ClonalError};
use crate::encoding::{BitMeasure, BitString, EncodingError};

#[derive(Debug, Error)]
pub enum NegSelError {
    #[error("self set must contain at least one pattern")]
    EmptySelfSet,
    #[error("self set mixes pattern lengths: {first} vs {other}")]
    MixedSelfLengths { first: usize, other: usize },
    #[error("match threshold {threshold} invalid for length {length}")]
    ThresholdOutOfRange { threshold: usize, length: usize },
    #[error("target detector count must be at least 1")]
    ZeroTargetCount,
    #[error("max_attempts must be at least 1")]
    ZeroMaxAttempts,
    #[error(
        "exhausted {attempts} attempts with {} of {target} detectors; self covers too much of the space",
        found.len()
    )]
    Exhausted {
        found: Vec<Detector>,
        attempts: usize,
        target: usize,
    },
    #[error("cannot promote a detector in state {state}")]
    PromotionFromState { state: DetectorState },
    #[error("memory detectors require an infinite lifespan and activation threshold 1")]
    InvalidMemoryDetector,
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Clonal(#[from] ClonalError),
}

/// Matching rule applied between a detector and an observed string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchRule {
    /// Match when the longest run of agreeing positions reaches `threshold`.
    RContiguous { threshold: usize },
    /// Match when the number of agreeing positions reaches `threshold`.
    HammingThreshold { threshold: usize },
}

impl MatchRule {
    pub fn threshold(&self) -> usize {
        match *self {
            MatchRule::RContiguous { threshold } => threshold,
            MatchRule::HammingThreshold { threshold } => threshold,
        }
    }

    fn measure(&self) -> BitMeasure {
        match self {
            MatchRule::RContiguous { .. } => BitMeasure::LongestRun,
            MatchRule::HammingThreshold { .. } => BitMeasure::Hamming,
        }
    }

    /// The threshold must fit the strings it will be applied to.
    pub fn validate_for_length(&self, length: usize) -> Result<(), NegSelError> {
        let threshold = self.threshold();
        if threshold == 0 || threshold > length {
            return Err(NegSelError::ThresholdOutOfRange { threshold, length });
        }
        Ok(())
    }

    pub fn matches(&self, a: &BitString, b: &BitString) -> Result<bool, NegSelError> {
        self.validate_for_length(a.len())?;
        Ok(self.measure().score(a, b)? >= self.threshold())
    }
}

/// Detector lifecycle; transitions only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorState {
    Immature,
    Mature,
    Activated,
    Memory,
}

impl std::fmt::Display for DetectorState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorState::Immature => "immature",
            DetectorState::Mature => "mature",
            DetectorState::Activated => "activated",
            DetectorState::Memory => "memory",
        })
    }
}

impl std::str::FromStr for DetectorState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "immature" => Ok(DetectorState::Immature),
            "mature" => Ok(DetectorState::Mature),
            "activated" => Ok(DetectorState::Activated),
            "memory" => Ok(DetectorState::Memory),
            other => Err(format!("unknown detector state {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifespan {
    Ticks(u64),
    Infinite,
}

impl Lifespan {
    fn exceeded_by(&self, age: u64) -> bool {
        match *self {
            Lifespan::Ticks(limit) => age > limit,
            Lifespan::Infinite => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectorId(pub u64);

impl std::fmt::Display for DetectorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Lifecycle defaults applied to freshly generated detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorSettings {
    pub activation_threshold: u32,
    pub lifespan: Lifespan,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        Self {
            activation_threshold: 3,
            lifespan: Lifespan::Ticks(1000),
        }
    }
}

/// A censored pattern with its lifecycle state and activation counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detector {
    id: DetectorId,
    pattern: BitString,
    state: DetectorState,
    age: u64,
    match_count: u32,
    activation_threshold: u32,
    lifespan: Lifespan,
}

impl Detector {
    /// A detector that survived censoring and starts monitoring.
    pub fn mature(id: DetectorId, pattern: BitString, settings: &DetectorSettings) -> Self {
        Self {
            id,
            pattern,
            state: DetectorState::Mature,
            age: 0,
            match_count: 0,
            activation_threshold: settings.activation_threshold.max(1),
            lifespan: settings.lifespan,
        }
    }

    /// Rebuilds a detector from persisted fields, enforcing the memory
    /// invariant (infinite lifespan, activation threshold 1).
    pub fn restore(
        id: DetectorId,
        pattern: BitString,
        state: DetectorState,
        age: u64,
        match_count: u32,
        activation_threshold: u32,
        lifespan: Lifespan,
    ) -> Result<Self, NegSelError> {
        if state == DetectorState::Memory
            && (lifespan != Lifespan::Infinite || activation_threshold != 1)
        {
            return Err(NegSelError::InvalidMemoryDetector);
        }
        if activation_threshold == 0 {
            return Err(NegSelError::InvalidMemoryDetector);
        }
        Ok(Self {
            id,
            pattern,
            state,
            age,
            match_count,
            activation_threshold,
            lifespan,
        })
    }

    pub fn id(&self) -> DetectorId {
        self.id
    }

    pub fn pattern(&self) -> &BitString {
        &self.pattern
    }

    pub fn state(&self) -> DetectorState {
        self.state
    }

    pub fn age(&self) -> u64 {
        self.age
    }

    pub fn match_count(&self) -> u32 {
        self.match_count
    }

    pub fn activation_threshold(&self) -> u32 {
        self.activation_threshold
    }

    pub fn lifespan(&self) -> Lifespan {
        self.lifespan
    }

    /// Applies the operator's verdict to an activated detector.
    ///
    /// Confirmed detectors become memory detectors with an indefinite
    /// lifespan and activation threshold 1; rejected detectors are retired.
    pub fn promote(mut self, confirmed: bool) -> Result<PromotionOutcome, NegSelError> {
        if self.state != DetectorState::Activated {
            return Err(NegSelError::PromotionFromState { state: self.state });
        }
        if confirmed {
            self.state = DetectorState::Memory;
            self.lifespan = Lifespan::Infinite;
            self.activation_threshold = 1;
            Ok(PromotionOutcome::Promoted(self))
        } else {
            Ok(PromotionOutcome::Retired)
        }
    }
}

/// Result of an operator decision on an activated detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromotionOutcome {
    Promoted(Detector),
    Retired,
}

/// Non-empty collection of trusted patterns of uniform length.
#[derive(Debug, Clone)]
pub struct SelfSet {
    patterns: Vec<BitString>,
    length: usize,
}

impl SelfSet {
    pub fn new(patterns: Vec<BitString>) -> Result<Self, NegSelError> {
        let first = patterns.first().ok_or(NegSelError::EmptySelfSet)?;
        let length = first.len();
        for pattern in &patterns {
            if pattern.len() != length {
                return Err(NegSelError::MixedSelfLengths {
                    first: length,
                    other: pattern.len(),
                });
            }
        }
        Ok(Self { patterns, length })
    }

    pub fn patterns(&self) -> &[BitString] {
        &self.patterns
    }

    pub fn pattern_length(&self) -> usize {
        self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensorVerdict {
    Keep,
    Eliminate,
}

/// Destroys any candidate that matches a self pattern under the rule.
pub fn censor(
    candidate: &BitString,
    self_set: &SelfSet,
    rule: &MatchRule,
) -> Result<CensorVerdict, NegSelError> {
    if candidate.len() != self_set.pattern_length() {
        return Err(NegSelError::Encoding(EncodingError::LengthMismatch {
            left: candidate.len(),
            right: self_set.pattern_length(),
        }));
    }
    rule.validate_for_length(candidate.len())?;
    for pattern in self_set.patterns() {
        if rule.matches(candidate, pattern)? {
            return Ok(CensorVerdict::Eliminate);
        }
    }
    Ok(CensorVerdict::Keep)
}

/// Generation parameters; see [`generate_detectors`].
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub target_count: usize,
    pub rule: MatchRule,
    pub seed: u64,
    /// Hypermutate failed candidates away from self instead of discarding
    /// them outright.
    pub repair: bool,
    /// Candidate budget before giving up with a partial result.
    pub max_attempts: usize,
    pub settings: DetectorSettings,
    /// Hypermutation rounds allowed per failed candidate.
    pub repair_budget: usize,
    /// Base per-bit mutation rate used while repairing.
    pub repair_rate: f64,
}

impl GeneratorConfig {
    pub fn new(target_count: usize, rule: MatchRule, seed: u64) -> Self {
        Self {
            target_count,
            rule,
            seed,
            repair: false,
            max_attempts: 100_000,
            settings: DetectorSettings::default(),
            repair_budget: 5,
            repair_rate: 0.3,
        }
    }
}

/// Fills a detector set with censored random candidates.
///
/// Candidates are drawn uniformly over the pattern space from a seeded
/// generator, so identical inputs reproduce the identical detector set.
/// Every returned detector is mature and matches no self pattern. With
/// `repair` enabled, a failing candidate is hypermutated away from self
/// (mutation strength grows with how strongly it matched self) and
/// re-censored up to `repair_budget` times before being discarded.
///
/// When `max_attempts` candidates are consumed before `target_count`
/// detectors pass, the error carries the detectors found so far; self
/// covers too much of the space for the requested rule.
pub fn generate_detectors(
    self_set: &SelfSet,
    config: &GeneratorConfig,
) -> Result<Vec<Detector>, NegSelError> {
    if config.target_count == 0 {
        return Err(NegSelError::ZeroTargetCount);
    }
    if config.max_attempts == 0 {
        return Err(NegSelError::ZeroMaxAttempts);
    }
    let length = self_set.pattern_length();
    config.rule.validate_for_length(length)?;
    let repair_config = ClonalConfig {
        base_mutation_rate: config.repair_rate,
        ..ClonalConfig::default()
    };
    repair_config.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut detectors: Vec<Detector> = Vec::with_capacity(config.target_count);
    let mut attempts = 0usize;
    while detectors.len() < config.target_count && attempts < config.max_attempts {
        attempts += 1;
        let mut candidate = BitString::random(length, &mut rng);
        let mut verdict = censor(&candidate, self_set, &config.rule)?;
        if verdict == CensorVerdict::Eliminate && config.repair {
            for _ in 0..config.repair_budget {
                // The harder the candidate matches self, the harder it is
                // shaken; affinity 1 would mean "leave unchanged", so the
                // strongest self-match maps to affinity 0.
                let strongest = self_set
                    .patterns()
                    .iter()
                    .map(|p| config.rule.measure().score(&candidate, p))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .max()
                    .unwrap_or(0);
                let affinity = 1.0 - strongest as f64 / length as f64;
                let repair_seed = rng.random::<u64>();
                candidate = clonal::hypermutate(&candidate, affinity, &repair_config, repair_seed)?;
                verdict = censor(&candidate, self_set, &config.rule)?;
                if verdict == CensorVerdict::Keep {
                    break;
                }
            }
        }
        if verdict == CensorVerdict::Keep {
            let id = DetectorId(detectors.len() as u64);
            detectors.push(Detector::mature(id, candidate, &config.settings));
        }
    }
    if detectors.len() < config.target_count {
        return Err(NegSelError::Exhausted {
            target: config.target_count,
            found: detectors,
            attempts,
        });
    }
    Ok(detectors)
}

/// Per-detector outcome of one monitoring step, plus the alerts raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorReport {
    /// `(detector id, matched)` for every detector, in input order.
    pub matches: Vec<(DetectorId, bool)>,
    /// Detectors whose match count reached their activation threshold on
    /// this observation. Already-activated and memory detectors alert on
    /// every further match.
    pub alerts: Vec<DetectorId>,
}

/// Feeds one observed string to the detector collection.
///
/// Matching detectors increment their match count; a mature detector
/// crossing its activation threshold becomes activated and is reported.
/// Immature detectors do not monitor.
pub fn monitor(
    detectors: &mut [Detector],
    observed: &BitString,
    rule: &MatchRule,
) -> Result<MonitorReport, NegSelError> {
    let mut report = MonitorReport {
        matches: Vec::with_capacity(detectors.len()),
        alerts: Vec::new(),
    };
    for detector in detectors.iter_mut() {
        if detector.state == DetectorState::Immature {
            report.matches.push((detector.id, false));
            continue;
        }
        let matched = rule.matches(&detector.pattern, observed)?;
        report.matches.push((detector.id, matched));
        if matched {
            detector.match_count += 1;
            if detector.match_count >= detector.activation_threshold {
                if detector.state == DetectorState::Mature {
                    detector.state = DetectorState::Activated;
                }
                report.alerts.push(detector.id);
            }
        }
    }
    Ok(report)
}

/// Ages every detector by `ticks` and drops the non-memory detectors whose
/// age now exceeds their lifespan. Memory detectors never expire.
pub fn age_and_expire(detectors: Vec<Detector>, ticks: u64) -> Vec<Detector> {
    detectors
        .into_iter()
        .filter_map(|mut detector| {
            detector.age = detector.age.saturating_add(ticks);
            if detector.state == DetectorState::Memory {
                return Some(detector);
            }
            if detector.lifespan.exceeded_by(detector.age) {
                None
            } else {
                Some(detector)
            }
        })
        .collect()
}
