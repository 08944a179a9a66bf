//! The agent-environment control loop.
//!
//! Each iteration: the planner picks an action, the environment transitions
//! and emits a reward, the agent receives an observation, then history,
//! belief and planner are updated. The loop ends when the termination
//! condition holds, the environment reaches a terminal state, or `max_steps`
//! iterations have run.

use std::fmt;
use std::time::{Duration, Instant};

use crate::agent::{Agent, Environment};
use crate::beliefs::BeliefUpdater;
use crate::error::{PomdpError, Result};
use crate::model::{Action, Discount, Observation, ObservationModel, RandomSource, State};
use crate::solvers::Planner;

/// Checked before every iteration.
pub trait Termination<S> {
    fn is_done(&self, state: &S, steps_taken: usize) -> bool;
}

impl<S, F: Fn(&S, usize) -> bool> Termination<S> for F {
    fn is_done(&self, state: &S, steps_taken: usize) -> bool {
        self(state, steps_taken)
    }
}

/// Never terminates on its own; only `max_steps` and terminal states end the episode.
#[derive(Debug, Clone, Copy, Default)]
pub struct Never;

impl<S> Termination<S> for Never {
    fn is_done(&self, _state: &S, _steps_taken: usize) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<A, O> {
    pub action: A,
    pub observation: O,
    pub reward: f64,
    /// `Σ_{k ≤ t} γ^k r_k` up to and including this step.
    pub discounted_return: f64,
    pub plan_time: Duration,
    /// The planner could not reuse its search tree after this step.
    pub tree_reset: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<A, O> {
    pub discount: f64,
    pub steps: Vec<StepRecord<A, O>>,
}

impl<A, O> EpisodeLog<A, O> {
    fn new(discount: f64) -> Self {
        Self {
            discount,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn discounted_return(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.discounted_return)
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Recomputes `Σ γ^t r_t` from the logged rewards.
    pub fn recompute_discounted_return(&self) -> f64 {
        discounted_sum(self.steps.iter().map(|s| s.reward), self.discount)
    }
}

/// `Σ γ^t r_t`, accumulated front to back.
pub fn discounted_sum(rewards: impl IntoIterator<Item = f64>, discount: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 1.0;
    for r in rewards {
        total += weight * r;
        weight *= discount;
    }
    total
}

/// An episode that stopped on an error, with every step completed before it.
#[derive(Debug, Clone)]
pub struct EpisodeAborted<A, O> {
    pub log: EpisodeLog<A, O>,
    pub error: PomdpError,
}

impl<A, O> fmt::Display for EpisodeAborted<A, O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "episode aborted after {} steps: {}", self.log.steps.len(), self.error)
    }
}

impl<A: fmt::Debug, O: fmt::Debug> std::error::Error for EpisodeAborted<A, O> {}

/// Moves the environment one step and returns the reward.
pub fn environment_step<S: State, A: Action>(
    env: &mut Environment<S, A>,
    action: &A,
    rng: &mut RandomSource,
) -> Result<f64> {
    env.step(action, rng)
}

/// Observation emitted by the environment's current state.
pub fn environment_observe<S: State, A: Action, O: Observation>(
    env: &Environment<S, A>,
    observation_model: &dyn ObservationModel<S, A, O>,
    action: &A,
    rng: &mut RandomSource,
) -> O {
    env.observe(observation_model, action, rng)
}

/// Extends the history by `(action, observation)` and replaces the belief
/// with the updater's output.
pub fn agent_update<S: State, A: Action, O: Observation>(
    agent: &mut Agent<S, A, O>,
    action: &A,
    observation: &O,
    updater: &dyn BeliefUpdater<S, A, O>,
    rng: &mut RandomSource,
) -> Result<()> {
    let belief = updater.update(agent, action, observation, rng)?;
    agent.set_belief(belief);
    agent.record(action.clone(), observation.clone());
    Ok(())
}

/// Runs the control loop for at most `max_steps` iterations.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<S: State, A: Action, O: Observation>(
    agent: &mut Agent<S, A, O>,
    env: &mut Environment<S, A>,
    planner: &mut dyn Planner<S, A, O>,
    updater: &dyn BeliefUpdater<S, A, O>,
    termination: &dyn Termination<S>,
    max_steps: usize,
    discount: Discount,
    rng: &mut RandomSource,
) -> std::result::Result<EpisodeLog<A, O>, EpisodeAborted<A, O>> {
    let gamma = discount.value();
    let mut log = EpisodeLog::new(gamma);
    let mut weight = 1.0;
    let mut total = 0.0;
    for t in 0..max_steps {
        if env.is_terminal() || termination.is_done(env.state(), t) {
            break;
        }
        let outcome = (|| -> Result<StepRecord<A, O>> {
            let started = Instant::now();
            let action = planner.plan(agent, rng)?;
            let plan_time = started.elapsed();

            let reward = environment_step(env, &action, rng)?;
            let observation =
                environment_observe(env, agent.observation_model()?.as_ref(), &action, rng);

            let update = if planner.updates_belief() {
                let outcome = planner.update(agent, &action, &observation, rng)?;
                agent.record(action.clone(), observation.clone());
                outcome
            } else {
                agent_update(agent, &action, &observation, updater, rng)?;
                planner.update(agent, &action, &observation, rng)?
            };
            total += weight * reward;
            weight *= gamma;
            Ok(StepRecord {
                action,
                observation,
                reward,
                discounted_return: total,
                plan_time,
                tree_reset: update.tree_reset,
            })
        })();
        match outcome {
            Ok(record) => log.steps.push(record),
            Err(error) => return Err(EpisodeAborted { log, error }),
        }
    }
    Ok(log)
}
