//! The agent/environment split.
//!
//! The agent carries its belief, history and its own models; the environment
//! holds the true hidden state and ground-truth dynamics. The two may hold
//! different model instances, and nothing here aliases them implicitly.

use std::sync::Arc;

use crate::beliefs::Belief;
use crate::error::{PomdpError, Result};
use crate::model::{
    Action, ExplicitBlackbox, History, Observation, RandomSource, SharedBlackbox, SharedObservation,
    SharedPolicy, SharedReward, SharedTransition, State,
};

pub struct Agent<S, A, O> {
    belief: Belief<S>,
    history: History<A, O>,
    policy: SharedPolicy<S, A>,
    transition: Option<SharedTransition<S, A>>,
    observation: Option<SharedObservation<S, A, O>>,
    reward: Option<SharedReward<S, A>>,
    blackbox: SharedBlackbox<S, A, O>,
}

impl<S: State, A: Action, O: Observation> Agent<S, A, O> {
    /// Agent with explicit `T`, `O`, `R`. Its blackbox samples them in turn.
    pub fn new(
        belief: Belief<S>,
        policy: SharedPolicy<S, A>,
        transition: SharedTransition<S, A>,
        observation: SharedObservation<S, A, O>,
        reward: SharedReward<S, A>,
    ) -> Self {
        let blackbox = Arc::new(ExplicitBlackbox::new(
            transition.clone(),
            observation.clone(),
            reward.clone(),
        ));
        Self {
            belief,
            history: History::new(),
            policy,
            transition: Some(transition),
            observation: Some(observation),
            reward: Some(reward),
            blackbox,
        }
    }

    /// Agent that only has a generative model `G`.
    pub fn with_blackbox(
        belief: Belief<S>,
        policy: SharedPolicy<S, A>,
        blackbox: SharedBlackbox<S, A, O>,
    ) -> Self {
        Self {
            belief,
            history: History::new(),
            policy,
            transition: None,
            observation: None,
            reward: None,
            blackbox,
        }
    }

    /// Replaces the generator derived from the explicit models.
    pub fn set_blackbox(&mut self, blackbox: SharedBlackbox<S, A, O>) {
        self.blackbox = blackbox;
    }

    pub fn belief(&self) -> &Belief<S> {
        &self.belief
    }

    pub fn set_belief(&mut self, belief: Belief<S>) {
        self.belief = belief;
    }

    pub fn history(&self) -> &History<A, O> {
        &self.history
    }

    /// Appends `(action, observation)` to the history without touching the belief.
    pub fn record(&mut self, action: A, observation: O) {
        self.history.push(action, observation);
    }

    pub fn policy(&self) -> &SharedPolicy<S, A> {
        &self.policy
    }

    pub fn blackbox(&self) -> &SharedBlackbox<S, A, O> {
        &self.blackbox
    }

    pub fn transition_model(&self) -> Result<&SharedTransition<S, A>> {
        self.transition
            .as_ref()
            .ok_or_else(|| PomdpError::Capability("agent has no explicit transition model".into()))
    }

    pub fn observation_model(&self) -> Result<&SharedObservation<S, A, O>> {
        self.observation
            .as_ref()
            .ok_or_else(|| PomdpError::Capability("agent has no explicit observation model".into()))
    }

    pub fn reward_model(&self) -> Result<&SharedReward<S, A>> {
        self.reward
            .as_ref()
            .ok_or_else(|| PomdpError::Capability("agent has no explicit reward model".into()))
    }

    /// Valid actions independent of state.
    pub fn actions(&self) -> Vec<A> {
        self.policy.actions(None)
    }
}

/// True hidden state and ground-truth transition and reward models.
pub struct Environment<S, A> {
    state: S,
    transition: SharedTransition<S, A>,
    reward: SharedReward<S, A>,
    action_space: Option<Vec<A>>,
}

impl<S: State, A: Action> Environment<S, A> {
    pub fn new(state: S, transition: SharedTransition<S, A>, reward: SharedReward<S, A>) -> Self {
        Self {
            state,
            transition,
            reward,
            action_space: None,
        }
    }

    /// Restricts accepted actions; others are rejected by [`Environment::step`].
    pub fn with_action_space(mut self, actions: Vec<A>) -> Self {
        self.action_space = Some(actions);
        self
    }

    pub fn state(&self) -> &S {
        &self.state
    }

    pub fn transition_model(&self) -> &SharedTransition<S, A> {
        &self.transition
    }

    pub fn reward_model(&self) -> &SharedReward<S, A> {
        &self.reward
    }

    pub fn is_terminal(&self) -> bool {
        self.transition.is_terminal(&self.state)
    }

    /// Applies `s' ~ T(s, a, ·)` and returns `r ~ R(s, a, s')`.
    pub fn step(&mut self, action: &A, rng: &mut RandomSource) -> Result<f64> {
        if let Some(space) = &self.action_space {
            if !space.contains(action) {
                return Err(PomdpError::InvalidAction(format!("{action:?}")));
            }
        }
        let next = self.transition.sample(&self.state, action, rng);
        let reward = self.reward.sample(&self.state, action, &next, rng);
        self.state = next;
        Ok(reward)
    }

    /// Samples `o ~ O(s', a, ·)` at the current state.
    pub fn observe<O>(
        &self,
        model: &dyn crate::model::ObservationModel<S, A, O>,
        action: &A,
        rng: &mut RandomSource,
    ) -> O {
        model.sample(&self.state, action, rng)
    }
}

/// A POMDP instance: an agent paired with its environment.
pub struct Problem<S, A, O> {
    pub agent: Agent<S, A, O>,
    pub env: Environment<S, A>,
}
