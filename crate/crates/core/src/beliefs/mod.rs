//! Belief representations and belief-update algorithms.
//!
//! Any type implementing [`Distribution`] can serve as a belief. The crate
//! ships a tabular [`HistogramBelief`], an unweighted or weighted
//! [`ParticleBelief`] and a multivariate [`GaussianDensity`]; user-defined
//! representations plug in through [`Belief::Custom`].

mod gaussian;
mod histogram;
mod particles;
mod update;

use std::any::Any;
use std::fmt;
use std::sync::Arc;

pub use gaussian::GaussianDensity;
pub(crate) use gaussian::normal_pdf;
pub use histogram::HistogramBelief;
pub use particles::ParticleBelief;
pub use update::{
    exact_belief_update, histogram_from_particles, particle_update_rejection,
    particle_update_weighted, reinvigorate, systematic_resample, BeliefUpdater, ExactUpdater,
    KeepBelief, RejectionUpdater, WeightedUpdater, DEFAULT_ATTEMPTS_PER_PARTICLE,
};

use crate::error::{PomdpError, Result};
use crate::model::{RandomSource, State};

/// Generative probability distribution.
pub trait Distribution<T>: Send + Sync {
    /// Probability (or density, for continuous values) of `value`.
    fn probability(&self, value: &T) -> f64;

    fn sample(&self, rng: &mut RandomSource) -> T;

    fn argmax(&self) -> Result<T> {
        Err(PomdpError::Capability("Distribution::argmax".into()))
    }

    /// Values with nonzero probability, in a stable order, when finite.
    fn support(&self) -> Option<Vec<T>> {
        None
    }
}

/// User-defined belief representation. `as_any` lets a matching
/// [`BeliefUpdater`] recover the concrete type.
pub trait CustomBelief<S>: Distribution<S> + Any {
    fn as_any(&self) -> &dyn Any;
}

/// Maps a state to a nearby state; used to refill depleted particle sets.
pub trait StatePerturbation<S>: Send + Sync {
    fn perturb(&self, state: &S, rng: &mut RandomSource) -> S;
}

impl<S, F> StatePerturbation<S> for F
where
    F: Fn(&S, &mut RandomSource) -> S + Send + Sync,
{
    fn perturb(&self, state: &S, rng: &mut RandomSource) -> S {
        self(state, rng)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPerturbation;

impl<S: Clone> StatePerturbation<S> for IdentityPerturbation {
    fn perturb(&self, state: &S, _rng: &mut RandomSource) -> S {
        state.clone()
    }
}

/// The agent's belief `b_t`.
#[derive(Clone)]
pub enum Belief<S> {
    Histogram(HistogramBelief<S>),
    Particles(ParticleBelief<S>),
    Custom(Arc<dyn CustomBelief<S>>),
}

impl<S: State> Belief<S> {
    /// Particle view of the belief; non-particle beliefs are sampled `count` times.
    pub fn to_particles(&self, count: usize, rng: &mut RandomSource) -> Result<ParticleBelief<S>> {
        match self {
            Belief::Particles(p) => Ok(p.clone()),
            other => {
                let particles = (0..count.max(1)).map(|_| other.sample(rng)).collect();
                ParticleBelief::new(particles)
            }
        }
    }

    /// Tabular view of the belief.
    pub fn to_histogram(&self) -> Result<HistogramBelief<S>> {
        match self {
            Belief::Histogram(h) => Ok(h.clone()),
            Belief::Particles(p) => Ok(histogram_from_particles(p)),
            Belief::Custom(c) => {
                let support = c.support().ok_or_else(|| {
                    PomdpError::Capability("custom belief without enumerable support".into())
                })?;
                HistogramBelief::from_weights(support.into_iter().map(|s| {
                    let p = c.probability(&s);
                    (s, p)
                }))
            }
        }
    }

    pub fn as_custom<T: 'static>(&self) -> Option<&T> {
        match self {
            Belief::Custom(c) => c.as_any().downcast_ref::<T>(),
            _ => None,
        }
    }
}

impl<S: State> Distribution<S> for Belief<S> {
    fn probability(&self, value: &S) -> f64 {
        match self {
            Belief::Histogram(h) => h.probability(value),
            Belief::Particles(p) => p.probability(value),
            Belief::Custom(c) => c.probability(value),
        }
    }

    fn sample(&self, rng: &mut RandomSource) -> S {
        match self {
            Belief::Histogram(h) => h.sample(rng),
            Belief::Particles(p) => p.sample(rng),
            Belief::Custom(c) => c.sample(rng),
        }
    }

    fn argmax(&self) -> Result<S> {
        match self {
            Belief::Histogram(h) => h.argmax(),
            Belief::Particles(p) => p.argmax(),
            Belief::Custom(c) => c.argmax(),
        }
    }

    fn support(&self) -> Option<Vec<S>> {
        match self {
            Belief::Histogram(h) => h.support(),
            Belief::Particles(p) => p.support(),
            Belief::Custom(c) => c.support(),
        }
    }
}

impl<S: State> fmt::Debug for Belief<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Belief::Histogram(h) => f.debug_tuple("Histogram").field(h).finish(),
            Belief::Particles(p) => write!(f, "Particles(n={})", p.len()),
            Belief::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Total variation distance between two finite distributions given as
/// `(value, probability)` lookups over the union of their supports.
pub fn total_variation<S: State>(a: &HistogramBelief<S>, b: &HistogramBelief<S>) -> f64 {
    let mut keys: Vec<&S> = a.iter().map(|(s, _)| s).chain(b.iter().map(|(s, _)| s)).collect();
    keys.sort();
    keys.dedup();
    0.5 * keys
        .into_iter()
        .map(|s| (a.probability(s) - b.probability(s)).abs())
        .sum::<f64>()
}
