//! Population-based dendritic cell algorithm.
//!
//! Each cell accumulates three signal categories (PAMP, danger, safe)
//! through a weight table and collects antigens sampled from the event
//! stream. When a cell's costimulation budget reaches its migration
//! threshold it differentiates: mature when the accumulated mature output
//! exceeds the semi-mature output (PAMP/danger dominated), semi-mature
//! otherwise, and presents its stored antigens with that context before
//! resetting with a freshly drawn threshold. Per-antigen verdicts aggregate
//! the presentations: the anomaly score is the mature fraction.
//!
//! Thresholds drawn over a range give cells different time windows onto the
//! streams; that window spread is what correlates signals with antigens.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcaError {
    #[error("population must contain at least one cell")]
    EmptyPopulation,
    #[error("invalid dca config {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid signal frame at tick {tick}: {reason}")]
    InvalidSignal { tick: u64, reason: String },
    #[error("streams misaligned: {reason}")]
    MisalignedStreams { reason: String },
}

/// One tick of environmental signal levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalFrame {
    pub tick: u64,
    pub pamp: f64,
    pub danger: f64,
    pub safe: f64,
}

impl SignalFrame {
    pub fn new(tick: u64, pamp: f64, danger: f64, safe: f64) -> Result<Self, DcaError> {
        for (name, value) in [("pamp", pamp), ("danger", danger), ("safe", safe)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(DcaError::InvalidSignal {
                    tick,
                    reason: format!("{name} must be non-negative and finite, got {value}"),
                });
            }
        }
        Ok(Self {
            tick,
            pamp,
            danger,
            safe,
        })
    }
}

/// One categorical antigen observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntigenEvent {
    pub tick: u64,
    pub antigen_type: String,
}

impl AntigenEvent {
    pub fn new(tick: u64, antigen_type: impl Into<String>) -> Self {
        Self {
            tick,
            antigen_type: antigen_type.into(),
        }
    }
}

/// 3x3 signal transform: each output row weighs (pamp, danger, safe).
///
/// The defaults are not taken from any measurement; they are the simplest
/// table satisfying the dominance structure the algorithm needs (semi
/// output driven by safe, mature output by PAMP and danger with safe
/// opposing) and are fully configurable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightTable {
    pub csm: [f64; 3],
    pub semi: [f64; 3],
    pub mat: [f64; 3],
}

impl Default for WeightTable {
    fn default() -> Self {
        Self {
            csm: [2.0, 1.0, 2.0],
            semi: [0.0, 0.0, 3.0],
            mat: [2.0, 1.0, -3.0],
        }
    }
}

impl WeightTable {
    pub fn validate(&self) -> Result<(), DcaError> {
        for row in [self.csm, self.semi, self.mat] {
            for value in row {
                if !value.is_finite() {
                    return Err(DcaError::InvalidConfig {
                        field: "weights",
                        reason: format!("non-finite weight {value}"),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-tick accumulator deltas produced from one signal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalDeltas {
    pub csm: f64,
    pub semi: f64,
    pub mat: f64,
}

/// Applies the weight table to one frame.
pub fn signal_transform(frame: &SignalFrame, weights: &WeightTable) -> SignalDeltas {
    let inputs = [frame.pamp, frame.danger, frame.safe];
    let dot = |row: [f64; 3]| row.iter().zip(&inputs).map(|(w, s)| w * s).sum();
    SignalDeltas {
        csm: dot(weights.csm),
        semi: dot(weights.semi),
        mat: dot(weights.mat),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Immature,
    SemiMature,
    Mature,
}

/// Presentation context for a migrated cell's stored antigens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    SemiMature,
    Mature,
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Context::SemiMature => "semi",
            Context::Mature => "mature",
        })
    }
}

/// One dendritic cell's accumulators and antigen store.
#[derive(Debug, Clone, PartialEq)]
pub struct DendriticCell {
    state: CellState,
    csm: f64,
    semi_signal: f64,
    mat_signal: f64,
    antigen_store: Vec<String>,
    migration_threshold: f64,
}

impl DendriticCell {
    fn fresh(migration_threshold: f64) -> Self {
        Self {
            state: CellState::Immature,
            csm: 0.0,
            semi_signal: 0.0,
            mat_signal: 0.0,
            antigen_store: Vec::new(),
            migration_threshold,
        }
    }

    pub fn state(&self) -> CellState {
        self.state
    }

    pub fn csm(&self) -> f64 {
        self.csm
    }

    pub fn semi_signal(&self) -> f64 {
        self.semi_signal
    }

    pub fn mat_signal(&self) -> f64 {
        self.mat_signal
    }

    pub fn antigen_store(&self) -> &[String] {
        &self.antigen_store
    }

    pub fn migration_threshold(&self) -> f64 {
        self.migration_threshold
    }
}

/// How antigen events are distributed across cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Deterministic rotation over the population.
    #[default]
    RoundRobin,
    /// Seeded uniform choice per event.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcaConfig {
    pub population_size: usize,
    /// Migration thresholds are drawn uniformly from this inclusive range,
    /// once at birth and again after every presentation.
    pub threshold_range: (f64, f64),
    pub weights: WeightTable,
    /// Verdicts classify anomalous strictly above this score.
    pub anomaly_cutoff: f64,
    pub sampling: SamplingMode,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self {
            population_size: 10,
            threshold_range: (5.0, 15.0),
            weights: WeightTable::default(),
            anomaly_cutoff: 0.5,
            sampling: SamplingMode::RoundRobin,
        }
    }
}

impl DcaConfig {
    pub fn validate(&self) -> Result<(), DcaError> {
        if self.population_size == 0 {
            return Err(DcaError::EmptyPopulation);
        }
        let (lo, hi) = self.threshold_range;
        if !(lo > 0.0 && lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(DcaError::InvalidConfig {
                field: "threshold_range",
                reason: format!("need 0 < lo <= hi, got ({lo}, {hi})"),
            });
        }
        if !(0.0..=1.0).contains(&self.anomaly_cutoff) {
            return Err(DcaError::InvalidConfig {
                field: "anomaly_cutoff",
                reason: format!("must lie in [0, 1], got {}", self.anomaly_cutoff),
            });
        }
        self.weights.validate()
    }
}

/// One presented antigen instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub tick: u64,
    pub cell: usize,
    pub antigen_type: String,
    pub context: Context,
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tick={} cell={} antigen={} context={}",
            self.tick, self.cell, self.antigen_type, self.context
        )
    }
}

/// Anomaly classification for one antigen type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Normal,
    Anomalous,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Normal => "normal",
            Classification::Anomalous => "anomalous",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntigenVerdict {
    pub antigen_type: String,
    pub presentations_mature: u64,
    pub presentations_total: u64,
    pub anomaly_score: f64,
    pub classification: Classification,
}

/// The live cell population plus its sampling cursor and seeded generator.
#[derive(Debug, Clone)]
pub struct DcaPopulation {
    cells: Vec<DendriticCell>,
    cursor: usize,
    rng: ChaCha8Rng,
    weights: WeightTable,
    threshold_range: (f64, f64),
    sampling: SamplingMode,
}

fn draw_threshold(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..=range.1)
    }
}

impl DcaPopulation {
    pub fn new(config: &DcaConfig, seed: u64) -> Result<Self, DcaError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..config.population_size)
            .map(|_| DendriticCell::fresh(draw_threshold(&mut rng, config.threshold_range)))
            .collect();
        Ok(Self {
            cells,
            cursor: 0,
            rng,
            weights: config.weights,
            threshold_range: config.threshold_range,
            sampling: config.sampling,
        })
    }

    pub fn cells(&self) -> &[DendriticCell] {
        &self.cells
    }

    /// Processes one frame: samples this tick's antigen events into cells,
    /// accumulates the signal deltas, and migrates any cell whose csm
    /// reached its threshold. Migrated cells present their stored antigens
    /// (mature context iff the mature output exceeds the semi output; ties
    /// present semi-mature) and reset with a freshly drawn threshold.
    pub fn step(&mut self, frame: &SignalFrame, events: &[AntigenEvent]) -> Vec<Presentation> {
        for event in events {
            let index = match self.sampling {
                SamplingMode::RoundRobin => {
                    let index = self.cursor;
                    self.cursor = (self.cursor + 1) % self.cells.len();
                    index
                }
                SamplingMode::Random => self.rng.random_range(0..self.cells.len()),
            };
            self.cells[index]
                .antigen_store
                .push(event.antigen_type.clone());
        }

        let deltas = signal_transform(frame, &self.weights);
        let mut presented = Vec::new();
        for (index, cell) in self.cells.iter_mut().enumerate() {
            cell.csm += deltas.csm;
            cell.semi_signal += deltas.semi;
            cell.mat_signal += deltas.mat;
            if cell.csm >= cell.migration_threshold {
                let context = if cell.mat_signal > cell.semi_signal {
                    Context::Mature
                } else {
                    Context::SemiMature
                };
                cell.state = match context {
                    Context::Mature => CellState::Mature,
                    Context::SemiMature => CellState::SemiMature,
                };
                for antigen_type in cell.antigen_store.drain(..) {
                    presented.push(Presentation {
                        tick: frame.tick,
                        cell: index,
                        antigen_type,
                        context,
                    });
                }
                cell.state = CellState::Immature;
                cell.csm = 0.0;
                cell.semi_signal = 0.0;
                cell.mat_signal = 0.0;
                cell.migration_threshold = draw_threshold(&mut self.rng, self.threshold_range);
            }
        }
        presented
    }

    /// End-of-stream flush: cells still holding antigens present them as
    /// semi-mature so no observation is silently dropped. This biases tail
    /// antigens towards "normal".
    pub fn flush(&mut self, tick: u64) -> Vec<Presentation> {
        let mut presented = Vec::new();
        for (index, cell) in self.cells.iter_mut().enumerate() {
            for antigen_type in cell.antigen_store.drain(..) {
                presented.push(Presentation {
                    tick,
                    cell: index,
                    antigen_type,
                    context: Context::SemiMature,
                });
            }
            cell.csm = 0.0;
            cell.semi_signal = 0.0;
            cell.mat_signal = 0.0;
            cell.state = CellState::Immature;
        }
        presented
    }
}

fn validate_streams(
    signals: &[SignalFrame],
    antigens: &[AntigenEvent],
) -> Result<(), DcaError> {
    for pair in signals.windows(2) {
        if pair[1].tick <= pair[0].tick {
            return Err(DcaError::MisalignedStreams {
                reason: format!(
                    "signal ticks must strictly increase ({} then {})",
                    pair[0].tick, pair[1].tick
                ),
            });
        }
    }
    for pair in antigens.windows(2) {
        if pair[1].tick < pair[0].tick {
            return Err(DcaError::MisalignedStreams {
                reason: format!(
                    "antigen ticks must not decrease ({} then {})",
                    pair[0].tick, pair[1].tick
                ),
            });
        }
    }
    if let Some(first_event) = antigens.first() {
        match signals.first() {
            None => {
                return Err(DcaError::MisalignedStreams {
                    reason: "antigen events present but signal stream is empty".into(),
                })
            }
            Some(first_frame) if first_event.tick < first_frame.tick => {
                return Err(DcaError::MisalignedStreams {
                    reason: format!(
                        "antigen event at tick {} precedes first signal frame at tick {}",
                        first_event.tick, first_frame.tick
                    ),
                })
            }
            _ => {}
        }
    }
    Ok(())
}

/// Drives a population over tick-aligned signal and antigen streams and
/// aggregates per-antigen verdicts.
///
/// Signals are piecewise-constant between frames: an antigen event is
/// processed with the most recent frame at or before its tick. Cells still
/// immature at end of stream flush their antigens as semi-mature. An empty
/// antigen stream yields an empty verdict list.
pub fn run_stream(
    signals: &[SignalFrame],
    antigens: &[AntigenEvent],
    config: &DcaConfig,
    seed: u64,
) -> Result<Vec<AntigenVerdict>, DcaError> {
    run_stream_with_log(signals, antigens, config, seed).map(|(verdicts, _)| verdicts)
}

/// As [`run_stream`], also returning the full presentation log.
pub fn run_stream_with_log(
    signals: &[SignalFrame],
    antigens: &[AntigenEvent],
    config: &DcaConfig,
    seed: u64,
) -> Result<(Vec<AntigenVerdict>, Vec<Presentation>), DcaError> {
    config.validate()?;
    validate_streams(signals, antigens)?;

    let mut population = DcaPopulation::new(config, seed)?;
    let mut log: Vec<Presentation> = Vec::new();
    let mut event_index = 0usize;
    for (frame_index, frame) in signals.iter().enumerate() {
        let window_end = signals.get(frame_index + 1).map(|next| next.tick);
        let batch_start = event_index;
        while event_index < antigens.len()
            && window_end.is_none_or(|end| antigens[event_index].tick < end)
        {
            event_index += 1;
        }
        log.extend(population.step(frame, &antigens[batch_start..event_index]));
    }
    if let Some(last) = signals.last() {
        log.extend(population.flush(last.tick));
    }

    let mut tallies: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for presentation in &log {
        let entry = tallies.entry(&presentation.antigen_type).or_insert((0, 0));
        entry.1 += 1;
        if presentation.context == Context::Mature {
            entry.0 += 1;
        }
    }
    let verdicts = tallies
        .into_iter()
        .map(|(antigen_type, (mature, total))| {
            let score = mature as f64 / total as f64;
            AntigenVerdict {
                antigen_type: antigen_type.to_string(),
                presentations_mature: mature,
                presentations_total: total,
                anomaly_score: score,
                classification: if score > config.anomaly_cutoff {
                    Classification::Anomalous
                } else {
                    Classification::Normal
                },
            }
        })
        .collect();
    Ok((verdicts, log))
}
