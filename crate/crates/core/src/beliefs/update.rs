use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;

use super::{Belief, Distribution, HistogramBelief, ParticleBelief, StatePerturbation};
use crate::agent::Agent;
use crate::error::{PomdpError, Result};
use crate::model::{
    Action, BlackboxModel, Observation, ObservationModel, RandomSource, State, TransitionModel,
};

/// Rejection sampling gives up after this many draws per requested particle.
pub const DEFAULT_ATTEMPTS_PER_PARTICLE: usize = 100;

/// Exact Bayes update of a tabular belief:
/// `b'(s') = η · O(o | s', a) · Σ_s T(s' | s, a) · b(s)`.
pub fn exact_belief_update<S, A, O>(
    prior: &HistogramBelief<S>,
    action: &A,
    observation: &O,
    transition: &dyn TransitionModel<S, A>,
    observation_model: &dyn ObservationModel<S, A, O>,
) -> Result<HistogramBelief<S>>
where
    S: State,
    A: Action,
    O: Observation,
{
    let states = transition.all_states().ok_or_else(|| {
        PomdpError::Capability("exact update needs TransitionModel::all_states".into())
    })?;
    let mut posterior = Vec::with_capacity(states.len());
    let mut total = 0.0;
    for next in states {
        let likelihood = observation_model.probability(observation, &next, action);
        if likelihood == 0.0 {
            continue;
        }
        let predicted: f64 = prior
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(s, p)| transition.probability(&next, s, action) * p)
            .sum();
        let mass = likelihood * predicted;
        if mass > 0.0 {
            total += mass;
            posterior.push((next, mass));
        }
    }
    if total <= 0.0 {
        return Err(PomdpError::ImpossibleObservation { mass: total });
    }
    Ok(HistogramBelief::from_unnormalized(posterior, total))
}

/// Particle update by exact observation matching: draw `s` from the prior,
/// simulate `(s', o', r) ~ G(s, a)` and keep `s'` whenever `o' == o`.
///
/// Stops after `target_count` acceptances or `max_attempts` draws. Fewer than
/// `target_count` particles may be returned; zero acceptances is an error.
pub fn particle_update_rejection<S, A, O>(
    prior: &dyn Distribution<S>,
    action: &A,
    observation: &O,
    generator: &dyn BlackboxModel<S, A, O>,
    target_count: usize,
    max_attempts: usize,
    rng: &mut RandomSource,
) -> Result<ParticleBelief<S>>
where
    S: State,
    A: Action,
    O: Observation,
{
    let mut accepted = Vec::with_capacity(target_count);
    let mut attempts = 0;
    while accepted.len() < target_count && attempts < max_attempts {
        attempts += 1;
        let state = prior.sample(rng);
        let step = generator.generate(&state, action, rng);
        if step.observation == *observation {
            accepted.push(step.next_state);
        }
    }
    if accepted.is_empty() {
        return Err(PomdpError::ParticleDepletion);
    }
    ParticleBelief::new(accepted)
}

/// Importance-weighted update: propagate every particle through `T`, weight
/// it by `O(o | s', a)`, then systematically resample back to the prior's
/// particle count.
pub fn particle_update_weighted<S, A, O>(
    prior: &ParticleBelief<S>,
    action: &A,
    observation: &O,
    transition: &dyn TransitionModel<S, A>,
    observation_model: &dyn ObservationModel<S, A, O>,
    rng: &mut RandomSource,
) -> Result<ParticleBelief<S>>
where
    S: State,
    A: Action,
    O: Observation,
{
    let mut propagated = Vec::with_capacity(prior.len());
    let mut weights = Vec::with_capacity(prior.len());
    for (state, w) in prior.iter_weighted() {
        let next = transition.sample(state, action, rng);
        weights.push(w * observation_model.probability(observation, &next, action));
        propagated.push(next);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(PomdpError::ParticleDepletion);
    }
    let picks = systematic_resample(&weights, prior.len(), rng);
    ParticleBelief::new(picks.into_iter().map(|i| propagated[i].clone()).collect())
}

/// Systematic resampling: one uniform offset, `count` evenly spaced pointers
/// into the cumulative weights. Returns the selected indices.
pub fn systematic_resample(weights: &[f64], count: usize, rng: &mut RandomSource) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let mut u = rng.random::<f64>() * step;
    let mut picks = Vec::with_capacity(count);
    let mut acc = 0.0;
    let mut i = 0;
    for (j, w) in weights.iter().enumerate() {
        acc += w;
        while i < count && u < acc {
            picks.push(j);
            i += 1;
            u += step;
        }
    }
    // floating-point shortfall at the tail goes to the last positive weight
    let last = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
    picks.resize(count, last);
    picks
}

/// Refills a particle set to `target_count` by perturbing uniformly drawn
/// survivors. Existing particles are kept.
pub fn reinvigorate<S: State>(
    particles: &[S],
    perturbation: &dyn StatePerturbation<S>,
    target_count: usize,
    rng: &mut RandomSource,
) -> Result<ParticleBelief<S>> {
    if particles.is_empty() {
        return Err(PomdpError::UnrecoverableDepletion);
    }
    let mut out = particles.to_vec();
    while out.len() < target_count {
        let pick = &particles[rng.random_range(0..particles.len())];
        out.push(perturbation.perturb(pick, rng));
    }
    ParticleBelief::new(out)
}

/// Normalized empirical frequencies (or normalized weights) of a particle set.
pub fn histogram_from_particles<S: State>(particles: &ParticleBelief<S>) -> HistogramBelief<S> {
    let mut masses: HashMap<&S, f64> = HashMap::new();
    for (s, w) in particles.iter_weighted() {
        *masses.entry(s).or_default() += w;
    }
    let total: f64 = masses.values().sum();
    HistogramBelief::from_unnormalized(
        masses.into_iter().map(|(s, m)| (s.clone(), m)).collect(),
        total,
    )
}

/// Produces the next belief after a real `(action, observation)`.
pub trait BeliefUpdater<S, A, O>: Send + Sync {
    fn update(
        &self,
        agent: &Agent<S, A, O>,
        action: &A,
        observation: &O,
        rng: &mut RandomSource,
    ) -> Result<Belief<S>>;
}

/// Exact tabular update using the agent's explicit models.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactUpdater;

impl<S: State, A: Action, O: Observation> BeliefUpdater<S, A, O> for ExactUpdater {
    fn update(
        &self,
        agent: &Agent<S, A, O>,
        action: &A,
        observation: &O,
        _rng: &mut RandomSource,
    ) -> Result<Belief<S>> {
        let prior = agent.belief().to_histogram()?;
        let posterior = exact_belief_update(
            &prior,
            action,
            observation,
            agent.transition_model()?.as_ref(),
            agent.observation_model()?.as_ref(),
        )?;
        Ok(Belief::Histogram(posterior))
    }
}

/// Rejection particle filter over the agent's generator, optionally refilling
/// short particle sets.
pub struct RejectionUpdater<S> {
    pub target_count: usize,
    pub max_attempts: usize,
    pub perturbation: Option<Arc<dyn StatePerturbation<S>>>,
}

impl<S> RejectionUpdater<S> {
    pub fn new(target_count: usize) -> Self {
        Self {
            target_count,
            max_attempts: target_count.saturating_mul(DEFAULT_ATTEMPTS_PER_PARTICLE),
            perturbation: None,
        }
    }

    pub fn with_reinvigoration(mut self, perturbation: Arc<dyn StatePerturbation<S>>) -> Self {
        self.perturbation = Some(perturbation);
        self
    }
}

impl<S: State, A: Action, O: Observation> BeliefUpdater<S, A, O> for RejectionUpdater<S> {
    fn update(
        &self,
        agent: &Agent<S, A, O>,
        action: &A,
        observation: &O,
        rng: &mut RandomSource,
    ) -> Result<Belief<S>> {
        let posterior = particle_update_rejection(
            agent.belief(),
            action,
            observation,
            agent.blackbox().as_ref(),
            self.target_count,
            self.max_attempts,
            rng,
        )?;
        match &self.perturbation {
            Some(p) if posterior.len() < self.target_count => Ok(Belief::Particles(reinvigorate(
                posterior.particles(),
                p.as_ref(),
                self.target_count,
                rng,
            )?)),
            _ => Ok(Belief::Particles(posterior)),
        }
    }
}

/// Importance-weighted particle filter with systematic resampling. Beliefs
/// that are not particle sets are first sampled `particle_count` times.
#[derive(Debug, Clone, Copy)]
pub struct WeightedUpdater {
    pub particle_count: usize,
}

impl<S: State, A: Action, O: Observation> BeliefUpdater<S, A, O> for WeightedUpdater {
    fn update(
        &self,
        agent: &Agent<S, A, O>,
        action: &A,
        observation: &O,
        rng: &mut RandomSource,
    ) -> Result<Belief<S>> {
        let prior = agent.belief().to_particles(self.particle_count, rng)?;
        let posterior = particle_update_weighted(
            &prior,
            action,
            observation,
            agent.transition_model()?.as_ref(),
            agent.observation_model()?.as_ref(),
            rng,
        )?;
        Ok(Belief::Particles(posterior))
    }
}

/// Leaves the belief untouched (for planners that maintain it themselves).
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepBelief;

impl<S: State, A: Action, O: Observation> BeliefUpdater<S, A, O> for KeepBelief {
    fn update(
        &self,
        agent: &Agent<S, A, O>,
        _action: &A,
        _observation: &O,
        _rng: &mut RandomSource,
    ) -> Result<Belief<S>> {
        Ok(agent.belief().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::{total_variation, IdentityPerturbation};
    use crate::model::seeded_rng;

    #[test]
    fn systematic_resample_counts() {
        let mut rng = seeded_rng(9);
        let picks = systematic_resample(&[0.0, 0.25, 0.75, 0.0], 8, &mut rng);
        assert_eq!(picks.len(), 8);
        assert_eq!(picks.iter().filter(|&&i| i == 1).count(), 2);
        assert_eq!(picks.iter().filter(|&&i| i == 2).count(), 6);
    }

    #[test]
    fn reinvigorate_identity_stays_in_support() {
        let mut rng = seeded_rng(1);
        let src: Vec<u32> = (0..10).collect();
        let out = reinvigorate(&src, &IdentityPerturbation, 100, &mut rng).unwrap();
        assert_eq!(out.len(), 100);
        assert!(out.particles().iter().all(|p| src.contains(p)));
    }

    #[test]
    fn reinvigorate_empty_is_unrecoverable() {
        let mut rng = seeded_rng(1);
        let r = reinvigorate::<u32>(&[], &IdentityPerturbation, 10, &mut rng);
        assert_eq!(r.unwrap_err(), PomdpError::UnrecoverableDepletion);
    }

    #[test]
    fn reinvigorate_grid_jitter_radius() {
        // jitter of at most one cell in each axis
        let radius = 1i64;
        let jitter = move |s: &(i64, i64), rng: &mut RandomSource| {
            (
                s.0 + rng.random_range(-radius..=radius),
                s.1 + rng.random_range(-radius..=radius),
            )
        };
        let mut rng = seeded_rng(2);
        let out = reinvigorate(&[(4, 4)], &jitter, 50, &mut rng).unwrap();
        assert_eq!(out.len(), 50);
        for p in out.particles() {
            assert!((p.0 - 4).abs() <= radius && (p.1 - 4).abs() <= radius);
        }
    }

    #[test]
    fn histogram_from_particles_counts() {
        let p = ParticleBelief::new(vec!["a", "a", "b", "b"]).unwrap();
        let h = histogram_from_particles(&p);
        assert_eq!(h.probability(&"a"), 0.5);
        assert_eq!(h.probability(&"b"), 0.5);

        let w = ParticleBelief::weighted(vec![("a", 0.2), ("b", 0.8)]).unwrap();
        let h = histogram_from_particles(&w);
        assert!((h.probability(&"a") - 0.2).abs() < 1e-12);
        assert!((h.probability(&"b") - 0.8).abs() < 1e-12);
    }

    #[test]
    fn histogram_particle_round_trip() {
        let h = HistogramBelief::new((0..5u8).map(|i| (i, [0.1, 0.2, 0.3, 0.15, 0.25][i as usize]))).unwrap();
        let mut rng = seeded_rng(21);
        let particles = ParticleBelief::new((0..100_000).map(|_| h.sample(&mut rng)).collect()).unwrap();
        assert!(total_variation(&h, &histogram_from_particles(&particles)) <= 0.02);
    }
}
