//! Planners: PO-UCT and POMCP tree search, exact value iteration, and a
//! uniform random baseline.

mod mcts;
mod value_iteration;

use rand::seq::IndexedRandom;

pub use mcts::{Budget, Mcts, MctsParams, SearchTree, SubtreeSnapshot, TreeNodeId, DEFAULT_PARTICLES};
pub use value_iteration::{
    tabular_value_iteration, value_iteration, vi_policy_action, AlphaVector, TabularModel,
    ValueIterationPlanner,
    DEFAULT_VECTOR_CAP,
};

use crate::agent::Agent;
use crate::error::{PomdpError, Result};
use crate::model::{Action, Observation, RandomSource, State};

/// Diagnostics returned by [`Planner::update`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    /// The search tree had no node for the real `(action, observation)` and
    /// was discarded.
    pub tree_reset: bool,
}

pub trait Planner<S, A, O> {
    /// Chooses the next action from the information the agent carries.
    fn plan(&mut self, agent: &Agent<S, A, O>, rng: &mut RandomSource) -> Result<A>;

    /// Informs the planner of the real action and observation. Planners that
    /// maintain the belief themselves also update the agent's belief here.
    fn update(
        &mut self,
        _agent: &mut Agent<S, A, O>,
        _action: &A,
        _observation: &O,
        _rng: &mut RandomSource,
    ) -> Result<UpdateOutcome> {
        Ok(UpdateOutcome::default())
    }

    /// True when [`Planner::update`] replaces the agent's belief.
    fn updates_belief(&self) -> bool {
        false
    }
}

/// Picks uniformly among the agent's valid actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPlanner;

impl<S: State, A: Action, O: Observation> Planner<S, A, O> for RandomPlanner {
    fn plan(&mut self, agent: &Agent<S, A, O>, rng: &mut RandomSource) -> Result<A> {
        agent.actions().choose(rng).cloned().ok_or(PomdpError::NoActions)
    }
}
