//! Idiotypic immune-network recommender.
//!
//! The target user is the antigen; other users join as antibodies carrying
//! a concentration. Each iteration applies one explicit-Euler step of
//!
//! ```text
//! dx_i/dt = k1 * m_i * x_i * y  -  (k2 / n) * sum_j m_ij * x_i * x_j  -  k3 * x_i
//! ```
//!
//! where `m_i` is the antibody's correlation with the antigen, `m_ij` the
//! correlation between antibodies, `y` the antigen concentration, and `n`
//! the number of resident antibodies. The suppression term is present only
//! when the idiotypic effect is enabled; with it disabled (`k2` treated as
//! zero) the dynamics reduce to plain stimulation and decay. Concentrations
//! clamp to `[0, saturation_cap]` and antibodies falling below the floor
//! drop out. The network is stable once no antibody has dropped for a full
//! stabilisation window, after which concentrations weight a standard
//! weighted-average prediction.

use std::collections::BTreeSet;
use std::num::NonZeroU32;

use thiserror::Error;

use crate::encoding::{pearson, RatingProfile, ScoreRange};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("network is at capacity ({capacity}); iterate before adding")]
    AtCapacity { capacity: usize },
    #[error("invalid network parameter {field}: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("no antibody survived after {iterations} iterations; pool exhausted")]
    Exhausted { iterations: u64 },
}

/// Rate constants and bookkeeping limits for the concentration dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    /// Stimulation rate applied to the antigen match.
    pub stimulation: f64,
    /// Suppression rate for antibody-antibody recognition (idiotypic runs).
    pub suppression: f64,
    /// Death rate; concentrations decay by this in the absence of matching.
    pub death_rate: f64,
    /// Concentration of the sole antigen.
    pub antigen_concentration: f64,
    /// Maximum number of resident antibodies.
    pub capacity: usize,
    /// Explicit-Euler time step.
    pub dt: f64,
    /// Antibodies below this concentration are removed.
    pub concentration_floor: f64,
    /// Concentrations clamp here; strong matches saturate.
    pub saturation_cap: f64,
    /// Concentration granted to a newly added antibody.
    pub initial_concentration: f64,
    /// Consecutive no-drop iterations required for stability.
    pub stabilisation_window: u32,
    /// Overlap penalty cutoff handed to the Pearson measure.
    pub penalty_cutoff: NonZeroU32,
    /// Vote range, used when reflecting votes of anti-correlated neighbours.
    pub score_range: ScoreRange,
    /// Keep anti-correlated antibodies alive by stimulating on |m_i| and
    /// reflecting their votes at prediction time. Off by default: the plain
    /// signed dynamics let anti-correlated antibodies decay out.
    pub anti_correlation_rescue: bool,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            stimulation: 2.0,
            suppression: 1.0,
            death_rate: 1.0,
            antigen_concentration: 1.0,
            capacity: 10,
            dt: 0.1,
            concentration_floor: 0.05,
            saturation_cap: 10.0,
            initial_concentration: 1.0,
            stabilisation_window: 10,
            penalty_cutoff: NonZeroU32::new(5).unwrap(),
            score_range: ScoreRange::default(),
            anti_correlation_rescue: false,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let positive = [
            ("stimulation", self.stimulation),
            ("death_rate", self.death_rate),
            ("antigen_concentration", self.antigen_concentration),
            ("dt", self.dt),
            ("concentration_floor", self.concentration_floor),
            ("saturation_cap", self.saturation_cap),
            ("initial_concentration", self.initial_concentration),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NetworkError::InvalidParams {
                    field,
                    reason: format!("{value} must be positive and finite"),
                });
            }
        }
        if !(self.suppression >= 0.0 && self.suppression.is_finite()) {
            return Err(NetworkError::InvalidParams {
                field: "suppression",
                reason: format!("{} must be non-negative", self.suppression),
            });
        }
        if self.capacity == 0 {
            return Err(NetworkError::InvalidParams {
                field: "capacity",
                reason: "capacity must be at least 1".into(),
            });
        }
        if self.stabilisation_window == 0 {
            return Err(NetworkError::InvalidParams {
                field: "stabilisation_window",
                reason: "window must be at least 1".into(),
            });
        }
        if !(self.concentration_floor < self.initial_concentration
            && self.initial_concentration < self.saturation_cap)
        {
            return Err(NetworkError::InvalidParams {
                field: "concentration_floor",
                reason: format!(
                    "floor {} < initial {} < cap {} must hold",
                    self.concentration_floor, self.initial_concentration, self.saturation_cap
                ),
            });
        }
        Ok(())
    }
}

/// A candidate neighbour: a user profile carrying a concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct Antibody {
    profile: RatingProfile,
    concentration: f64,
    iterations_present: u64,
}

impl Antibody {
    pub fn profile(&self) -> &RatingProfile {
        &self.profile
    }

    pub fn user_id(&self) -> &str {
        self.profile.user_id()
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn iterations_present(&self) -> u64 {
        self.iterations_present
    }
}

/// The network state: antigen, resident antibodies, and cached affinities.
#[derive(Debug, Clone)]
pub struct ImmuneNetwork {
    antigen: RatingProfile,
    antibodies: Vec<Antibody>,
    /// m_i per antibody, aligned with `antibodies`.
    antigen_affinity: Vec<f64>,
    /// Symmetric m_ij rows, maintained only on idiotypic runs.
    cross_affinity: Vec<Vec<f64>>,
    params: NetworkParams,
    idiotypic_enabled: bool,
    iterations: u64,
    no_drop_streak: u32,
}

impl ImmuneNetwork {
    pub fn new(
        antigen: RatingProfile,
        params: NetworkParams,
        idiotypic_enabled: bool,
    ) -> Result<Self, NetworkError> {
        params.validate()?;
        Ok(Self {
            antigen,
            antibodies: Vec::with_capacity(params.capacity),
            antigen_affinity: Vec::new(),
            cross_affinity: Vec::new(),
            params,
            idiotypic_enabled,
            iterations: 0,
            no_drop_streak: 0,
        })
    }

    pub fn antigen(&self) -> &RatingProfile {
        &self.antigen
    }

    pub fn antibodies(&self) -> &[Antibody] {
        &self.antibodies
    }

    /// m_i values aligned with [`Self::antibodies`].
    pub fn antigen_affinities(&self) -> &[f64] {
        &self.antigen_affinity
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn idiotypic_enabled(&self) -> bool {
        self.idiotypic_enabled
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn len(&self) -> usize {
        self.antibodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antibodies.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.antibodies.len() >= self.params.capacity
    }

    /// Inserts a candidate with the initial concentration and computes its
    /// match against the antigen (and, on idiotypic runs, against every
    /// resident antibody).
    pub fn add_antibody(&mut self, candidate: RatingProfile) -> Result<(), NetworkError> {
        if self.is_full() {
            return Err(NetworkError::AtCapacity {
                capacity: self.params.capacity,
            });
        }
        let m_i = pearson(&self.antigen, &candidate, self.params.penalty_cutoff).value();
        if self.idiotypic_enabled {
            let mut row: Vec<f64> = self
                .antibodies
                .iter()
                .map(|resident| {
                    pearson(resident.profile(), &candidate, self.params.penalty_cutoff).value()
                })
                .collect();
            // The row includes the antibody's own self-correlation so the
            // suppression sum can run over every resident uniformly.
            row.push(pearson(&candidate, &candidate, self.params.penalty_cutoff).value());
            for (existing, &value) in self.cross_affinity.iter_mut().zip(&row) {
                existing.push(value);
            }
            self.cross_affinity.push(row);
        }
        self.antigen_affinity.push(m_i);
        self.antibodies.push(Antibody {
            profile: candidate,
            concentration: self.params.initial_concentration,
            iterations_present: 0,
        });
        Ok(())
    }

    /// Cached m_ij rows (idiotypic runs only).
    pub fn cross_affinities(&self) -> &[Vec<f64>] {
        &self.cross_affinity
    }

    /// One synchronous Euler step over all concentrations; returns the ids
    /// of antibodies that fell below the floor and were removed.
    pub fn iterate(&mut self) -> Vec<String> {
        let previous: Vec<f64> = self.antibodies.iter().map(|a| a.concentration).collect();
        let n = previous.len() as f64;
        let params = &self.params;
        for (i, antibody) in self.antibodies.iter_mut().enumerate() {
            let x = previous[i];
            let m_i = self.antigen_affinity[i];
            let stimulus_match = if params.anti_correlation_rescue {
                m_i.abs()
            } else {
                m_i
            };
            let suppression = if self.idiotypic_enabled {
                let cross: f64 = self.cross_affinity[i]
                    .iter()
                    .zip(&previous)
                    .map(|(m_ij, &x_j)| m_ij * x * x_j)
                    .sum();
                params.suppression / n * cross
            } else {
                0.0
            };
            antibody.concentration = concentration_step(
                x,
                &[(stimulus_match, params.antigen_concentration)],
                suppression,
                params,
            );
            antibody.iterations_present += 1;
        }

        let floor = self.params.concentration_floor;
        let mut dropped = Vec::new();
        let mut keep_mask = Vec::with_capacity(self.antibodies.len());
        for antibody in &self.antibodies {
            let keep = antibody.concentration >= floor;
            if !keep {
                dropped.push(antibody.user_id().to_string());
            }
            keep_mask.push(keep);
        }
        if !dropped.is_empty() {
            self.remove_by_mask(&keep_mask);
        }

        self.iterations += 1;
        if dropped.is_empty() {
            self.no_drop_streak += 1;
        } else {
            self.no_drop_streak = 0;
        }
        dropped
    }

    fn remove_by_mask(&mut self, keep: &[bool]) {
        let mut index = 0;
        self.antibodies.retain(|_| {
            let k = keep[index];
            index += 1;
            k
        });
        let mut index = 0;
        self.antigen_affinity.retain(|_| {
            let k = keep[index];
            index += 1;
            k
        });
        if self.idiotypic_enabled {
            let mut index = 0;
            self.cross_affinity.retain(|_| {
                let k = keep[index];
                index += 1;
                k
            });
            for row in &mut self.cross_affinity {
                let mut index = 0;
                row.retain(|_| {
                    let k = keep[index];
                    index += 1;
                    k
                });
            }
        }
    }

    /// True once no antibody has dropped for a full stabilisation window.
    pub fn is_stabilised(&self) -> bool {
        self.no_drop_streak >= self.params.stabilisation_window
    }

    /// Concentration-weighted average vote for one item, or `None` when no
    /// positively weighted antibody voted on it.
    ///
    /// Weights are `concentration * m_i`. By default only antibodies with a
    /// positive antigen correlation contribute, which keeps the prediction
    /// inside the contributing vote range; with anti-correlation rescue the
    /// weight uses |m_i| and negative correlations contribute their
    /// reflected vote.
    pub fn predict(&self, item_id: &str) -> Option<f64> {
        let mut numerator = 0.0;
        let mut denominator = 0.0;
        for (antibody, &m_i) in self.antibodies.iter().zip(&self.antigen_affinity) {
            let Some(vote) = antibody.profile().vote(item_id) else {
                continue;
            };
            let (weight, effective_vote) = if self.params.anti_correlation_rescue {
                let vote = if m_i < 0.0 {
                    self.params.score_range.reflect(vote)
                } else {
                    vote
                };
                (antibody.concentration * m_i.abs(), vote)
            } else {
                if m_i <= 0.0 {
                    continue;
                }
                (antibody.concentration * m_i, vote)
            };
            if weight <= 0.0 {
                continue;
            }
            numerator += weight * effective_vote as f64;
            denominator += weight;
        }
        (denominator > 0.0).then(|| numerator / denominator)
    }

    /// Items unseen by the antigen, ranked by predicted score descending
    /// with ties broken by ascending item id. May return fewer than `top_k`.
    pub fn recommend(&self, top_k: usize) -> Vec<(String, f64)> {
        let candidates: BTreeSet<&str> = self
            .antibodies
            .iter()
            .flat_map(|a| a.profile().votes().keys())
            .map(String::as_str)
            .filter(|item| self.antigen.vote(item).is_none())
            .collect();
        let mut scored: Vec<(String, f64)> = candidates
            .into_iter()
            .filter_map(|item| self.predict(item).map(|score| (item.to_string(), score)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_k);
        scored
    }

    /// Mean pairwise antibody correlation of the current residents; the
    /// report's diversity metric (lower means a more diverse neighbourhood).
    pub fn mean_pairwise_affinity(&self) -> Option<f64> {
        let n = self.antibodies.len();
        if n < 2 {
            return None;
        }
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                total += pearson(
                    self.antibodies[i].profile(),
                    self.antibodies[j].profile(),
                    self.params.penalty_cutoff,
                )
                .value();
                pairs += 1;
            }
        }
        Some(total / pairs as f64)
    }
}

/// One explicit-Euler update of a single antibody concentration under any
/// number of antigens:
///
/// ```text
/// x' = clamp(x + dt * (k1 * sum_j m_j * x * y_j - suppression - k3 * x))
/// ```
///
/// `antigen_stimuli` holds `(m_j, y_j)` pairs per antigen and
/// `suppression` is the caller-assembled antibody-antibody term. The
/// recommender's [`ImmuneNetwork::iterate`] is the single-antigen case of
/// this update.
pub fn concentration_step(
    concentration: f64,
    antigen_stimuli: &[(f64, f64)],
    suppression: f64,
    params: &NetworkParams,
) -> f64 {
    let stimulation: f64 = antigen_stimuli
        .iter()
        .map(|(matching, antigen_concentration)| {
            params.stimulation * matching * concentration * antigen_concentration
        })
        .sum();
    let death = params.death_rate * concentration;
    let next = concentration + params.dt * (stimulation - suppression - death);
    next.clamp(0.0, params.saturation_cap)
}

/// Builds and stabilises a network for the antigen user from an ordered
/// candidate pool.
///
/// Fills to capacity, iterates at full size until a drop-out or stability,
/// refills from the pool, and stops when stable or when the pool is
/// exhausted (whatever survives is the final neighbourhood). The run is
/// fully deterministic given the pool order and parameters. An empty
/// surviving network is an error: no candidate held any useful correlation
/// with the antigen.
pub fn run(
    antigen: RatingProfile,
    pool: impl IntoIterator<Item = RatingProfile>,
    params: NetworkParams,
    idiotypic_enabled: bool,
) -> Result<ImmuneNetwork, NetworkError> {
    let mut pool = pool.into_iter().peekable();
    if pool.peek().is_none() {
        return Err(NetworkError::EmptyPool);
    }
    let mut network = ImmuneNetwork::new(antigen, params, idiotypic_enabled)?;
    loop {
        while !network.is_full() {
            match pool.next() {
                Some(candidate) => network
                    .add_antibody(candidate)
                    .expect("network below capacity"),
                None => {
                    return if network.is_empty() {
                        Err(NetworkError::Exhausted {
                            iterations: network.iterations(),
                        })
                    } else {
                        Ok(network)
                    };
                }
            }
        }
        while network.is_full() && !network.is_stabilised() {
            network.iterate();
        }
        if network.is_stabilised() {
            return Ok(network);
        }
    }
}
