//! Domain value types and the generative model interfaces.
//!
//! A problem is described by its state, action and observation types plus a
//! handful of models: transition `T(s, a, s')`, observation `O(s', a, o)`,
//! reward `R(s, a, s')` and a policy model that enumerates and samples
//! actions. A [`BlackboxModel`] can replace the explicit triple when only a
//! joint simulator `(s, a) -> (s', o, r)` is available.
//!
//! Every stochastic call takes an explicit random source.

use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PomdpError, Result};

/// Random source used throughout the crate.
pub type RandomSource = dyn RngCore;

/// Seeded generator with a stable stream across platforms and releases.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A hidden environment state. Equality, hashing and a total order are
/// required; the order breaks ties deterministically.
pub trait State: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static {}
impl<T: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static> State for T {}

/// An action the agent can take.
pub trait Action: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static {}
impl<T: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static> Action for T {}

/// An observation emitted after a transition.
pub trait Observation: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static {}
impl<T: Clone + Eq + Hash + Ord + Debug + Send + Sync + 'static> Observation for T {}

fn missing(what: &str) -> PomdpError {
    PomdpError::Capability(what.to_string())
}

/// `T(s, a, s') = Pr(s' | s, a)`.
pub trait TransitionModel<S, A>: Send + Sync {
    fn probability(&self, next_state: &S, state: &S, action: &A) -> f64;

    fn sample(&self, state: &S, action: &A, rng: &mut RandomSource) -> S;

    /// Most likely successor. Optional.
    fn argmax(&self, _state: &S, _action: &A) -> Result<S> {
        Err(missing("TransitionModel::argmax"))
    }

    /// Every state, in a stable order, when the space is enumerable.
    fn all_states(&self) -> Option<Vec<S>> {
        None
    }

    /// Terminal states end episodes and simulations.
    fn is_terminal(&self, _state: &S) -> bool {
        false
    }
}

/// `O(s', a, o) = Pr(o | s', a)`.
pub trait ObservationModel<S, A, O>: Send + Sync {
    fn probability(&self, observation: &O, next_state: &S, action: &A) -> f64;

    fn sample(&self, next_state: &S, action: &A, rng: &mut RandomSource) -> O;

    fn argmax(&self, _next_state: &S, _action: &A) -> Result<O> {
        Err(missing("ObservationModel::argmax"))
    }

    fn all_observations(&self) -> Option<Vec<O>> {
        None
    }
}

/// `R(s, a, s')`. Deterministic rewards only implement [`RewardModel::expected`].
pub trait RewardModel<S, A>: Send + Sync {
    fn expected(&self, state: &S, action: &A, next_state: &S) -> f64;

    fn sample(&self, state: &S, action: &A, next_state: &S, _rng: &mut RandomSource) -> f64 {
        self.expected(state, action, next_state)
    }

    /// `(R_min, R_max)` when known.
    fn range(&self) -> Option<(f64, f64)> {
        None
    }
}

/// Determines the valid actions at a state and samples among them.
pub trait PolicyModel<S, A: Clone>: Send + Sync {
    /// Valid actions at `state`; `None` asks for the actions valid regardless
    /// of state.
    fn actions(&self, state: Option<&S>) -> Vec<A>;

    /// Rollout action. Uniform over [`PolicyModel::actions`] unless overridden.
    fn sample(&self, state: &S, rng: &mut RandomSource) -> Option<A> {
        self.actions(Some(state)).choose(rng).cloned()
    }
}

/// Uniform policy over a fixed action list.
#[derive(Debug, Clone)]
pub struct UniformPolicy<A> {
    actions: Vec<A>,
}

impl<A: Action> UniformPolicy<A> {
    pub fn new(actions: Vec<A>) -> Self {
        Self { actions }
    }
}

impl<S, A: Action> PolicyModel<S, A> for UniformPolicy<A> {
    fn actions(&self, _state: Option<&S>) -> Vec<A> {
        self.actions.clone()
    }

    fn sample(&self, _state: &S, rng: &mut RandomSource) -> Option<A> {
        self.actions.choose(rng).cloned()
    }
}

/// One draw from a generative model.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated<S, O> {
    pub next_state: S,
    pub observation: O,
    pub reward: f64,
}

/// Joint sampler `G(s, a) -> (s', o, r)`.
pub trait BlackboxModel<S, A, O>: Send + Sync {
    fn generate(&self, state: &S, action: &A, rng: &mut RandomSource) -> Generated<S, O>;

    fn is_terminal(&self, _state: &S) -> bool {
        false
    }

    fn reward_range(&self) -> Option<(f64, f64)> {
        None
    }
}

pub type SharedTransition<S, A> = Arc<dyn TransitionModel<S, A>>;
pub type SharedObservation<S, A, O> = Arc<dyn ObservationModel<S, A, O>>;
pub type SharedReward<S, A> = Arc<dyn RewardModel<S, A>>;
pub type SharedPolicy<S, A> = Arc<dyn PolicyModel<S, A>>;
pub type SharedBlackbox<S, A, O> = Arc<dyn BlackboxModel<S, A, O>>;

/// Blackbox built from explicit models: `s' ~ T`, then `o ~ O(s', a)`,
/// then `r ~ R(s, a, s')`.
pub struct ExplicitBlackbox<S, A, O> {
    transition: SharedTransition<S, A>,
    observation: SharedObservation<S, A, O>,
    reward: SharedReward<S, A>,
}

impl<S, A, O> ExplicitBlackbox<S, A, O> {
    pub fn new(
        transition: SharedTransition<S, A>,
        observation: SharedObservation<S, A, O>,
        reward: SharedReward<S, A>,
    ) -> Self {
        Self {
            transition,
            observation,
            reward,
        }
    }
}

impl<S, A, O> BlackboxModel<S, A, O> for ExplicitBlackbox<S, A, O>
where
    S: State,
    A: Action,
    O: Observation,
{
    fn generate(&self, state: &S, action: &A, rng: &mut RandomSource) -> Generated<S, O> {
        let next_state = self.transition.sample(state, action, rng);
        let observation = self.observation.sample(&next_state, action, rng);
        let reward = self.reward.sample(state, action, &next_state, rng);
        Generated {
            next_state,
            observation,
            reward,
        }
    }

    fn is_terminal(&self, state: &S) -> bool {
        self.transition.is_terminal(state)
    }

    fn reward_range(&self) -> Option<(f64, f64)> {
        self.reward.range()
    }
}

/// Append-only sequence of `(action, observation)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History<A, O> {
    steps: Vec<(A, O)>,
}

impl<A, O> Default for History<A, O> {
    fn default() -> Self {
        Self { steps: Vec::new() }
    }
}

impl<A, O> History<A, O> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, action: A, observation: O) {
        self.steps.push((action, observation));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&(A, O)> {
        self.steps.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(A, O)> {
        self.steps.iter()
    }
}

/// Discount factor, `0 <= γ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Discount(f64);

impl Discount {
    pub fn new(gamma: f64) -> Result<Self> {
        if (0.0..1.0).contains(&gamma) {
            Ok(Self(gamma))
        } else {
            Err(PomdpError::Parameter(format!(
                "discount must lie in [0, 1), got {gamma}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Returns the largest conditional-row deviation from 1 over every
/// `(state, action)` pair of an enumerable transition model.
pub fn transition_row_error<S: State, A: Action>(
    model: &dyn TransitionModel<S, A>,
    actions: &[A],
) -> Result<f64> {
    let states = model
        .all_states()
        .ok_or_else(|| missing("TransitionModel::all_states"))?;
    let mut worst: f64 = 0.0;
    for s in &states {
        for a in actions {
            let total: f64 = states.iter().map(|n| model.probability(n, s, a)).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    Ok(worst)
}

/// Same as [`transition_row_error`] for an observation model, conditioning on
/// every `(next_state, action)` pair.
pub fn observation_row_error<S: State, A: Action, O: Observation>(
    model: &dyn ObservationModel<S, A, O>,
    states: &[S],
    actions: &[A],
) -> Result<f64> {
    let observations = model
        .all_observations()
        .ok_or_else(|| missing("ObservationModel::all_observations"))?;
    let mut worst: f64 = 0.0;
    for s in states {
        for a in actions {
            let total: f64 = observations.iter().map(|o| model.probability(o, s, a)).sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    Ok(worst)
}
