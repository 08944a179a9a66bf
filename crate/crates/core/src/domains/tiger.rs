//! The tiger problem: a tiger hides behind one of two doors. Listening gives
//! a noisy hint; opening a door ends the round and the tiger is hidden again
//! uniformly at random.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::agent::{Agent, Environment, Problem};
use crate::beliefs::{Belief, HistogramBelief};
use crate::error::{PomdpError, Result};
use crate::model::{
    ObservationModel, RandomSource, RewardModel, TransitionModel, UniformPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TigerState {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TigerAction {
    Listen,
    OpenLeft,
    OpenRight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TigerObservation {
    GrowlLeft,
    GrowlRight,
}

impl TigerState {
    pub const ALL: [TigerState; 2] = [TigerState::Left, TigerState::Right];

    pub fn name(self) -> &'static str {
        match self {
            TigerState::Left => "tiger-left",
            TigerState::Right => "tiger-right",
        }
    }
}

impl TigerAction {
    pub const ALL: [TigerAction; 3] = [TigerAction::Listen, TigerAction::OpenLeft, TigerAction::OpenRight];

    pub fn name(self) -> &'static str {
        match self {
            TigerAction::Listen => "listen",
            TigerAction::OpenLeft => "open-left",
            TigerAction::OpenRight => "open-right",
        }
    }
}

impl TigerObservation {
    pub const ALL: [TigerObservation; 2] = [TigerObservation::GrowlLeft, TigerObservation::GrowlRight];

    pub fn name(self) -> &'static str {
        match self {
            TigerObservation::GrowlLeft => "growl-left",
            TigerObservation::GrowlRight => "growl-right",
        }
    }

    fn pointing_at(state: TigerState) -> Self {
        match state {
            TigerState::Left => TigerObservation::GrowlLeft,
            TigerState::Right => TigerObservation::GrowlRight,
        }
    }
}

macro_rules! display_name {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    )*};
}
display_name!(TigerState, TigerAction, TigerObservation);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TigerParams {
    pub listen_reward: f64,
    pub correct_door_reward: f64,
    pub wrong_door_reward: f64,
    /// Probability that a growl comes from the tiger's side.
    pub accuracy: f64,
}

impl Default for TigerParams {
    fn default() -> Self {
        Self {
            listen_reward: -1.0,
            correct_door_reward: 10.0,
            wrong_door_reward: -100.0,
            accuracy: 0.85,
        }
    }
}

impl TigerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.accuracy > 0.5 && self.accuracy <= 1.0) {
            return Err(PomdpError::Parameter(format!(
                "tiger accuracy must be in (0.5, 1], got {}",
                self.accuracy
            )));
        }
        let rewards = [self.listen_reward, self.correct_door_reward, self.wrong_door_reward];
        if rewards.iter().any(|r| !r.is_finite()) {
            return Err(PomdpError::Parameter("tiger rewards must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TigerTransition;

impl TransitionModel<TigerState, TigerAction> for TigerTransition {
    fn probability(&self, next: &TigerState, state: &TigerState, action: &TigerAction) -> f64 {
        match action {
            TigerAction::Listen => f64::from(u8::from(next == state)),
            _ => 0.5,
        }
    }

    fn sample(&self, state: &TigerState, action: &TigerAction, rng: &mut RandomSource) -> TigerState {
        match action {
            TigerAction::Listen => *state,
            _ => TigerState::ALL[rng.random_range(0..2)],
        }
    }

    fn argmax(&self, state: &TigerState, action: &TigerAction) -> Result<TigerState> {
        Ok(match action {
            TigerAction::Listen => *state,
            _ => TigerState::Left,
        })
    }

    fn all_states(&self) -> Option<Vec<TigerState>> {
        Some(TigerState::ALL.to_vec())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TigerObservationModel {
    pub accuracy: f64,
}

impl ObservationModel<TigerState, TigerAction, TigerObservation> for TigerObservationModel {
    fn probability(&self, o: &TigerObservation, next: &TigerState, action: &TigerAction) -> f64 {
        match action {
            TigerAction::Listen if *o == TigerObservation::pointing_at(*next) => self.accuracy,
            TigerAction::Listen => 1.0 - self.accuracy,
            _ => 0.5,
        }
    }

    fn sample(&self, next: &TigerState, action: &TigerAction, rng: &mut RandomSource) -> TigerObservation {
        match action {
            TigerAction::Listen => {
                let correct = TigerObservation::pointing_at(*next);
                if rng.random::<f64>() < self.accuracy {
                    correct
                } else {
                    TigerObservation::ALL[1 - correct as usize]
                }
            }
            _ => TigerObservation::ALL[rng.random_range(0..2)],
        }
    }

    fn argmax(&self, next: &TigerState, action: &TigerAction) -> Result<TigerObservation> {
        Ok(match action {
            TigerAction::Listen => TigerObservation::pointing_at(*next),
            _ => TigerObservation::GrowlLeft,
        })
    }

    fn all_observations(&self) -> Option<Vec<TigerObservation>> {
        Some(TigerObservation::ALL.to_vec())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TigerReward {
    pub params: TigerParams,
}

impl RewardModel<TigerState, TigerAction> for TigerReward {
    fn expected(&self, state: &TigerState, action: &TigerAction, _next: &TigerState) -> f64 {
        let p = &self.params;
        match (action, state) {
            (TigerAction::Listen, _) => p.listen_reward,
            (TigerAction::OpenLeft, TigerState::Right) | (TigerAction::OpenRight, TigerState::Left) => {
                p.correct_door_reward
            }
            _ => p.wrong_door_reward,
        }
    }

    fn range(&self) -> Option<(f64, f64)> {
        let p = &self.params;
        let all = [p.listen_reward, p.correct_door_reward, p.wrong_door_reward];
        Some((
            all.iter().copied().fold(f64::INFINITY, f64::min),
            all.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    }
}

pub type TigerProblem = Problem<TigerState, TigerAction, TigerObservation>;

/// Agent with a uniform belief and the tiger models; environment with a
/// uniformly drawn tiger position. Agent and environment get separate model
/// instances.
pub fn tiger_build(params: TigerParams, rng: &mut RandomSource) -> Result<TigerProblem> {
    params.validate()?;
    let belief = HistogramBelief::uniform(TigerState::ALL)?;
    let agent = Agent::new(
        Belief::Histogram(belief),
        Arc::new(UniformPolicy::new(TigerAction::ALL.to_vec())),
        Arc::new(TigerTransition),
        Arc::new(TigerObservationModel {
            accuracy: params.accuracy,
        }),
        Arc::new(TigerReward { params }),
    );
    let state = TigerState::ALL[rng.random_range(0..2)];
    let env = Environment::new(state, Arc::new(TigerTransition), Arc::new(TigerReward { params }))
        .with_action_space(TigerAction::ALL.to_vec());
    Ok(Problem { agent, env })
}
