//! Clonal selection: rank-proportional cloning with affinity-inverse
//! somatic hypermutation.
//!
//! Individuals that recognize the antigen proliferate; their clones mutate
//! with a per-bit flip probability that shrinks as the match improves, so
//! strong matches are refined and weak ones are shaken up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoding::{BitMeasure, BitString, EncodingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClonalError {
    #[error("config field {field} out of range: {value}")]
    ConfigOutOfRange { field: &'static str, value: f64 },
    #[error("normalized affinity {value} outside [0, 1]")]
    AffinityOutOfRange { value: f64 },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("population holds {found} individuals but config expects {expected}")]
    PopulationSizeMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// Tunables for cloning and hypermutation. Every constant of the algorithm
/// lives here; none are hidden in the implementation.
#[derive(Debug, Clone, PartialEq)]
pub struct ClonalConfig {
    /// Scales how many clones the best-ranked individuals receive.
    pub clone_factor: f64,
    /// Hard cap on clones per individual.
    pub max_clones: usize,
    /// Per-bit flip probability at zero affinity, in `(0, 1]`.
    pub base_mutation_rate: f64,
    /// Number of individuals carried between steps.
    pub population_size: usize,
    /// Fraction of the population replaced by fresh random individuals
    /// each step, in `(0, 1]`. The current best is never replaced.
    pub replacement_fraction: f64,
}

impl Default for ClonalConfig {
    fn default() -> Self {
        Self {
            clone_factor: 1.0,
            max_clones: 100,
            base_mutation_rate: 0.1,
            population_size: 20,
            replacement_fraction: 0.2,
        }
    }
}

impl ClonalConfig {
    pub fn validate(&self) -> Result<(), ClonalError> {
        if !(self.clone_factor > 0.0 && self.clone_factor.is_finite()) {
            return Err(ClonalError::ConfigOutOfRange {
                field: "clone_factor",
                value: self.clone_factor,
            });
        }
        if self.max_clones == 0 {
            return Err(ClonalError::ConfigOutOfRange {
                field: "max_clones",
                value: 0.0,
            });
        }
        if !(self.base_mutation_rate > 0.0 && self.base_mutation_rate <= 1.0) {
            return Err(ClonalError::ConfigOutOfRange {
                field: "base_mutation_rate",
                value: self.base_mutation_rate,
            });
        }
        if self.population_size == 0 {
            return Err(ClonalError::ConfigOutOfRange {
                field: "population_size",
                value: 0.0,
            });
        }
        if !(self.replacement_fraction > 0.0 && self.replacement_fraction <= 1.0) {
            return Err(ClonalError::ConfigOutOfRange {
                field: "replacement_fraction",
                value: self.replacement_fraction,
            });
        }
        Ok(())
    }
}

/// Clones awarded to the individual at `affinity_rank` (1 = best):
/// `min(max_clones, round(clone_factor * population_size / rank))`.
///
/// Non-increasing in rank and reaches 0 in the limit (rounding floors
/// small quotients to zero).
pub fn clone_count(affinity_rank: usize, config: &ClonalConfig) -> usize {
    assert!(affinity_rank >= 1, "ranks start at 1");
    let raw = config.clone_factor * config.population_size as f64 / affinity_rank as f64;
    (raw.round() as usize).min(config.max_clones)
}

/// Flips each bit independently with probability
/// `base_mutation_rate * (1 - normalized_affinity)`.
///
/// A perfect match (affinity 1) is returned unchanged for any seed; at
/// affinity 0 and rate 1 every bit flips.
pub fn hypermutate(
    pattern: &BitString,
    normalized_affinity: f64,
    config: &ClonalConfig,
    seed: u64,
) -> Result<BitString, ClonalError> {
    config.validate()?;
    if !(0.0..=1.0).contains(&normalized_affinity) {
        return Err(ClonalError::AffinityOutOfRange {
            value: normalized_affinity,
        });
    }
    let flip_probability = config.base_mutation_rate * (1.0 - normalized_affinity);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = pattern
        .bits()
        .iter()
        .map(|&bit| {
            if rng.random_bool(flip_probability) {
                !bit
            } else {
                bit
            }
        })
        .collect();
    Ok(BitString::new(bits).expect("pattern is non-empty"))
}

/// One generation of clonal selection against a single antigen.
///
/// Ranks the population by affinity, clones per [`clone_count`],
/// hypermutates the clones, then keeps the best `population_size`
/// individuals out of parents plus clones and replaces the worst
/// `replacement_fraction` of the survivors with fresh random individuals.
/// The current best always survives, so the best affinity never decreases
/// across steps. Censoring clones against a self set, when wanted, is the
/// negative-selection module's job.
pub fn clonal_step(
    population: &[BitString],
    antigen: &BitString,
    measure: BitMeasure,
    config: &ClonalConfig,
    seed: u64,
) -> Result<Vec<BitString>, ClonalError> {
    config.validate()?;
    if population.is_empty() {
        return Err(ClonalError::EmptyPopulation);
    }
    if population.len() != config.population_size {
        return Err(ClonalError::PopulationSizeMismatch {
            expected: config.population_size,
            found: population.len(),
        });
    }
    let length = antigen.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scores: Vec<usize> = population
        .iter()
        .map(|individual| measure.score(individual, antigen))
        .collect::<Result<_, _>>()?;

    // Stable rank: ties keep their population order.
    let mut ranked: Vec<usize> = (0..population.len()).collect();
    ranked.sort_by_key(|&i| std::cmp::Reverse(scores[i]));

    // Parents enter the pool unmutated, which keeps the best individual
    // reachable by selection below.
    let mut pool: Vec<(BitString, usize)> = population
        .iter()
        .cloned()
        .zip(scores.iter().copied())
        .collect();
    for (position, &parent) in ranked.iter().enumerate() {
        let count = clone_count(position + 1, config);
        let normalized = scores[parent] as f64 / length as f64;
        for _ in 0..count {
            let clone_seed = rng.random::<u64>();
            let clone = hypermutate(&population[parent], normalized, config, clone_seed)?;
            let score = measure.score(&clone, antigen)?;
            pool.push((clone, score));
        }
    }

    pool.sort_by_key(|(_, score)| std::cmp::Reverse(*score));
    let mut next: Vec<BitString> = pool
        .into_iter()
        .take(config.population_size)
        .map(|(individual, _)| individual)
        .collect();

    // Replace the tail with immigrants, never touching the best slot.
    let replace = ((config.replacement_fraction * config.population_size as f64).floor()
        as usize)
        .min(config.population_size - 1);
    let keep = config.population_size - replace;
    for slot in next.iter_mut().skip(keep) {
        *slot = BitString::random(length, &mut rng);
    }
    Ok(next)
}
