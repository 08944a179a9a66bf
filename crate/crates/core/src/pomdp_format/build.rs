use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::PomdpFileModel;
use crate::agent::{Agent, Environment, Problem};
use crate::beliefs::{Belief, HistogramBelief};
use crate::error::Result;
use crate::model::{
    BlackboxModel, Generated, ObservationModel, RandomSource, RewardModel, TransitionModel,
    UniformPolicy,
};

macro_rules! index_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_type!(
    /// Position in the file's state list.
    StateIndex
);
index_type!(ActionIndex);
index_type!(ObsIndex);

fn sample_row(row: &[f64], rng: &mut RandomSource) -> usize {
    let total: f64 = row.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in row.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    // rounding: last index with positive mass
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

/// Explicit models backed by a parsed file.
///
/// As a [`RewardModel`] it reports `Σ_o O(o | s', a) R(s, a, s', o)`; as a
/// [`BlackboxModel`] it draws the observation first and returns the exact
/// `R(s, a, s', o)`.
#[derive(Debug, Clone)]
pub struct FilePomdp {
    model: Arc<PomdpFileModel>,
}

impl FilePomdp {
    pub fn new(model: PomdpFileModel) -> Self {
        Self {
            model: Arc::new(model),
        }
    }

    pub fn model(&self) -> &PomdpFileModel {
        &self.model
    }

    pub fn states(&self) -> Vec<StateIndex> {
        (0..self.model.states.len()).map(StateIndex).collect()
    }

    pub fn actions(&self) -> Vec<ActionIndex> {
        (0..self.model.actions.len()).map(ActionIndex).collect()
    }

    pub fn observations(&self) -> Vec<ObsIndex> {
        (0..self.model.observations.len()).map(ObsIndex).collect()
    }

    pub fn observation_reward(&self, s: StateIndex, a: ActionIndex, next: StateIndex, o: ObsIndex) -> f64 {
        self.model.reward[a.0][s.0][next.0][o.0]
    }

    /// Reads the tensors back through the model interfaces.
    pub fn to_tensors(&self) -> FileTensors {
        let (states, actions, observations) = (self.states(), self.actions(), self.observations());
        let mut t = Vec::new();
        let mut z = Vec::new();
        let mut r = Vec::new();
        for &a in &actions {
            t.push(
                states
                    .iter()
                    .map(|s| states.iter().map(|n| TransitionModel::probability(self, n, s, &a)).collect())
                    .collect(),
            );
            z.push(
                states
                    .iter()
                    .map(|n| {
                        observations
                            .iter()
                            .map(|o| ObservationModel::probability(self, o, n, &a))
                            .collect()
                    })
                    .collect(),
            );
            r.push(
                states
                    .iter()
                    .map(|&s| {
                        states
                            .iter()
                            .map(|&n| observations.iter().map(|&o| self.observation_reward(s, a, n, o)).collect())
                            .collect()
                    })
                    .collect(),
            );
        }
        FileTensors {
            transition: t,
            observation: z,
            reward: r,
        }
    }
}

/// Dense tensors in the file model's layout.
#[derive(Debug, Clone, PartialEq)]
pub struct FileTensors {
    pub transition: Vec<Vec<Vec<f64>>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TransitionModel<StateIndex, ActionIndex> for FilePomdp {
    fn probability(&self, next: &StateIndex, state: &StateIndex, action: &ActionIndex) -> f64 {
        self.model.transition[action.0][state.0][next.0]
    }

    fn sample(&self, state: &StateIndex, action: &ActionIndex, rng: &mut RandomSource) -> StateIndex {
        StateIndex(sample_row(&self.model.transition[action.0][state.0], rng))
    }

    fn all_states(&self) -> Option<Vec<StateIndex>> {
        Some(self.states())
    }
}

impl ObservationModel<StateIndex, ActionIndex, ObsIndex> for FilePomdp {
    fn probability(&self, o: &ObsIndex, next: &StateIndex, action: &ActionIndex) -> f64 {
        self.model.observation[action.0][next.0][o.0]
    }

    fn sample(&self, next: &StateIndex, action: &ActionIndex, rng: &mut RandomSource) -> ObsIndex {
        ObsIndex(sample_row(&self.model.observation[action.0][next.0], rng))
    }

    fn all_observations(&self) -> Option<Vec<ObsIndex>> {
        Some(self.observations())
    }
}

impl RewardModel<StateIndex, ActionIndex> for FilePomdp {
    fn expected(&self, state: &StateIndex, action: &ActionIndex, next: &StateIndex) -> f64 {
        let z = &self.model.observation[action.0][next.0];
        let r = &self.model.reward[action.0][state.0][next.0];
        z.iter().zip(r).map(|(p, v)| p * v).sum()
    }

    fn range(&self) -> Option<(f64, f64)> {
        let all = self.model.reward.iter().flatten().flatten().flatten();
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        lo.is_finite().then_some((lo, hi))
    }
}

impl BlackboxModel<StateIndex, ActionIndex, ObsIndex> for FilePomdp {
    fn generate(&self, state: &StateIndex, action: &ActionIndex, rng: &mut RandomSource) -> Generated<StateIndex, ObsIndex> {
        let next_state = TransitionModel::sample(self, state, action, rng);
        let observation = ObservationModel::sample(self, &next_state, action, rng);
        Generated {
            next_state,
            observation,
            reward: self.observation_reward(*state, *action, next_state, observation),
        }
    }

    fn reward_range(&self) -> Option<(f64, f64)> {
        self.range()
    }
}

pub struct FileProblem {
    pub problem: Problem<StateIndex, ActionIndex, ObsIndex>,
    pub models: Arc<FilePomdp>,
}

/// Agent with the file's start belief (uniform when absent), a uniform
/// policy and the file-backed models; environment state drawn from the same
/// start belief.
pub fn build_pomdp_from_file(model: &PomdpFileModel, rng: &mut RandomSource) -> Result<FileProblem> {
    let start = model.start_belief();
    let models = Arc::new(FilePomdp::new(model.clone()));
    let belief = HistogramBelief::from_weights(start.iter().copied().enumerate().map(|(i, p)| (StateIndex(i), p)))?;
    let mut agent = Agent::new(
        Belief::Histogram(belief),
        Arc::new(UniformPolicy::new(models.actions())),
        models.clone(),
        models.clone(),
        models.clone(),
    );
    agent.set_blackbox(models.clone());
    let truth = StateIndex(sample_row(&start, rng));
    let env_models = Arc::new(FilePomdp {
        model: models.model.clone(),
    });
    let env = Environment::new(truth, env_models.clone(), env_models).with_action_space(models.actions());
    Ok(FileProblem {
        problem: Problem { agent, env },
        models,
    })
}
