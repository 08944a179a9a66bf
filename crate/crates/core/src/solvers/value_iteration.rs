//! Naive exact finite-horizon value iteration, no pruning.
//!
//! `Γ_1` holds one vector per action with the expected immediate reward.
//! `Γ_d` pairs every action with every assignment of a `Γ_{d-1}` vector to
//! each observation, so `|Γ_d| = |A| · |Γ_{d-1}|^|O|`.

use crate::agent::Agent;
use crate::beliefs::{Distribution, HistogramBelief};
use crate::error::{PomdpError, Result};
use crate::model::{
    Action, Discount, Observation, ObservationModel, RandomSource, RewardModel, State,
    TransitionModel,
};

use super::Planner;

/// Default limit on the number of vectors a horizon may produce.
pub const DEFAULT_VECTOR_CAP: u128 = 1_000_000;

/// Value vector of a conditional plan, indexed like the state list it was
/// computed over, tagged with the plan's first action.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector<A> {
    pub action: A,
    pub values: Vec<f64>,
}

impl<A> AlphaVector<A> {
    pub fn dot(&self, belief: &[f64]) -> f64 {
        self.values.iter().zip(belief).map(|(a, b)| a * b).sum()
    }
}

/// Dense tables of an enumerable POMDP.
#[derive(Debug, Clone)]
pub struct TabularModel<S, A, O> {
    pub states: Vec<S>,
    pub actions: Vec<A>,
    pub observations: Vec<O>,
    transition: Vec<f64>,
    observation: Vec<f64>,
    reward: Vec<f64>,
}

impl<S: State, A: Action, O: Observation> TabularModel<S, A, O> {
    pub fn from_models(
        states: Vec<S>,
        actions: Vec<A>,
        observations: Vec<O>,
        transition: &dyn TransitionModel<S, A>,
        observation: &dyn ObservationModel<S, A, O>,
        reward: &dyn RewardModel<S, A>,
    ) -> Self {
        let (ns, na, no) = (states.len(), actions.len(), observations.len());
        let mut t = vec![0.0; na * ns * ns];
        let mut z = vec![0.0; na * ns * no];
        let mut r = vec![0.0; na * ns * ns];
        for (ai, a) in actions.iter().enumerate() {
            for (si, s) in states.iter().enumerate() {
                for (ni, n) in states.iter().enumerate() {
                    t[(ai * ns + si) * ns + ni] = transition.probability(n, s, a);
                    r[(ai * ns + si) * ns + ni] = reward.expected(s, a, n);
                }
                for (oi, o) in observations.iter().enumerate() {
                    z[(ai * ns + si) * no + oi] = observation.probability(o, s, a);
                }
            }
        }
        Self {
            states,
            actions,
            observations,
            transition: t,
            observation: z,
            reward: r,
        }
    }

    /// `T(s' | s, a)` by index.
    pub fn t(&self, a: usize, s: usize, next: usize) -> f64 {
        let ns = self.states.len();
        self.transition[(a * ns + s) * ns + next]
    }

    /// `O(o | s', a)` by index.
    pub fn z(&self, a: usize, next: usize, o: usize) -> f64 {
        self.observation[(a * self.states.len() + next) * self.observations.len() + o]
    }

    /// `R(s, a, s')` by index.
    pub fn r(&self, a: usize, s: usize, next: usize) -> f64 {
        let ns = self.states.len();
        self.reward[(a * ns + s) * ns + next]
    }

    /// Expected immediate reward `ρ(s, a) = Σ_{s'} T(s' | s, a) R(s, a, s')`.
    pub fn rho(&self, a: usize, s: usize) -> f64 {
        (0..self.states.len()).map(|n| self.t(a, s, n) * self.r(a, s, n)).sum()
    }

    /// Belief as a dense vector over `states`.
    pub fn belief_vector(&self, belief: &HistogramBelief<S>) -> Result<Vec<f64>> {
        dense_belief(&self.states, belief)
    }
}

fn dense_belief<S: State>(states: &[S], belief: &HistogramBelief<S>) -> Result<Vec<f64>> {
    let dense: Vec<f64> = states.iter().map(|s| belief.probability(s)).collect();
    let covered: f64 = dense.iter().sum();
    if (covered - belief.total()).abs() > 1e-9 {
        return Err(PomdpError::DimensionMismatch(
            "belief has mass on states outside the alpha-vector state set".into(),
        ));
    }
    Ok(dense)
}

/// Builds `Γ_horizon` over enumerated spaces.
#[allow(clippy::too_many_arguments)]
pub fn value_iteration<S: State, A: Action, O: Observation>(
    states: &[S],
    actions: &[A],
    observations: &[O],
    transition: &dyn TransitionModel<S, A>,
    observation: &dyn ObservationModel<S, A, O>,
    reward: &dyn RewardModel<S, A>,
    discount: Discount,
    horizon: usize,
    cap: u128,
) -> Result<Vec<AlphaVector<A>>> {
    let model = TabularModel::from_models(
        states.to_vec(),
        actions.to_vec(),
        observations.to_vec(),
        transition,
        observation,
        reward,
    );
    tabular_value_iteration(&model, discount, horizon, cap)
}

/// [`value_iteration`] over prebuilt tables.
pub fn tabular_value_iteration<S: State, A: Action, O: Observation>(
    model: &TabularModel<S, A, O>,
    discount: Discount,
    horizon: usize,
    cap: u128,
) -> Result<Vec<AlphaVector<A>>> {
    if horizon == 0 {
        return Err(PomdpError::Parameter("horizon must be >= 1".into()));
    }
    let (ns, na, no) = (model.states.len(), model.actions.len(), model.observations.len());
    if na as u128 > cap {
        return Err(PomdpError::Capacity {
            projected: na as u128,
            cap,
        });
    }
    let gamma = discount.value();
    let rho: Vec<Vec<f64>> = (0..na)
        .map(|a| (0..ns).map(|s| model.rho(a, s)).collect())
        .collect();

    let mut gamma_set: Vec<AlphaVector<A>> = (0..na)
        .map(|a| AlphaVector {
            action: model.actions[a].clone(),
            values: rho[a].clone(),
        })
        .collect();

    for _ in 1..horizon {
        let prev = gamma_set.len();
        let projected = (prev as u128)
            .checked_pow(no as u32)
            .and_then(|p| p.checked_mul(na as u128))
            .unwrap_or(u128::MAX);
        if projected > cap {
            return Err(PomdpError::Capacity { projected, cap });
        }

        // projection[a][o][j][s] = Σ_{s'} T(s'|s,a) O(o|s',a) α_j(s')
        let mut projection = vec![0.0; na * no * prev * ns];
        for a in 0..na {
            for o in 0..no {
                for (j, alpha) in gamma_set.iter().enumerate() {
                    let base = ((a * no + o) * prev + j) * ns;
                    for s in 0..ns {
                        projection[base + s] = (0..ns)
                            .map(|n| model.t(a, s, n) * model.z(a, n, o) * alpha.values[n])
                            .sum();
                    }
                }
            }
        }

        let mut next = Vec::with_capacity(projected as usize);
        let mut choice = vec![0usize; no];
        for a in 0..na {
            choice.iter_mut().for_each(|c| *c = 0);
            loop {
                let mut values = rho[a].clone();
                for (o, &j) in choice.iter().enumerate() {
                    let base = ((a * no + o) * prev + j) * ns;
                    for (s, v) in values.iter_mut().enumerate() {
                        *v += gamma * projection[base + s];
                    }
                }
                next.push(AlphaVector {
                    action: model.actions[a].clone(),
                    values,
                });
                if !advance(&mut choice, prev) {
                    break;
                }
            }
        }
        gamma_set = next;
    }
    Ok(gamma_set)
}

// Next assignment in lexicographic order; false after the last one.
fn advance(choice: &mut [usize], base: usize) -> bool {
    for digit in choice.iter_mut().rev() {
        *digit += 1;
        if *digit < base {
            return true;
        }
        *digit = 0;
    }
    false
}

/// First action of the vector maximizing `⟨α, b⟩`, with that value. Ties go
/// to the smaller action.
pub fn vi_policy_action<S: State, A: Action>(
    alphas: &[AlphaVector<A>],
    states: &[S],
    belief: &HistogramBelief<S>,
) -> Result<(A, f64)> {
    if alphas.is_empty() {
        return Err(PomdpError::Parameter("empty alpha-vector set".into()));
    }
    if let Some(bad) = alphas.iter().find(|a| a.values.len() != states.len()) {
        return Err(PomdpError::DimensionMismatch(format!(
            "alpha vector has {} entries for {} states",
            bad.values.len(),
            states.len()
        )));
    }
    let b = dense_belief(states, belief)?;
    let mut best: Option<(&A, f64)> = None;
    for alpha in alphas {
        let v = alpha.dot(&b);
        best = match best {
            Some((a, bv)) if bv > v || (bv == v && a <= &alpha.action) => Some((a, bv)),
            _ => Some((&alpha.action, v)),
        };
    }
    let (a, v) = best.expect("nonempty");
    Ok((a.clone(), v))
}

/// Receding-horizon greedy policy over a fixed `Γ_horizon`.
pub struct ValueIterationPlanner<S, A> {
    states: Vec<S>,
    alphas: Vec<AlphaVector<A>>,
}

impl<S: State, A: Action> ValueIterationPlanner<S, A> {
    pub fn new(states: Vec<S>, alphas: Vec<AlphaVector<A>>) -> Self {
        Self { states, alphas }
    }

    /// Solves the agent's explicit, enumerable models.
    pub fn from_agent<O: Observation>(
        agent: &Agent<S, A, O>,
        discount: Discount,
        horizon: usize,
        cap: u128,
    ) -> Result<Self> {
        let transition = agent.transition_model()?;
        let observation = agent.observation_model()?;
        let reward = agent.reward_model()?;
        let states = transition
            .all_states()
            .ok_or_else(|| PomdpError::Capability("value iteration needs all_states".into()))?;
        let observations = observation.all_observations().ok_or_else(|| {
            PomdpError::Capability("value iteration needs all_observations".into())
        })?;
        let mut actions = agent.actions();
        actions.sort();
        let alphas = value_iteration(
            &states,
            &actions,
            &observations,
            transition.as_ref(),
            observation.as_ref(),
            reward.as_ref(),
            discount,
            horizon,
            cap,
        )?;
        Ok(Self { states, alphas })
    }

    pub fn alphas(&self) -> &[AlphaVector<A>] {
        &self.alphas
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }
}

impl<S: State, A: Action, O: Observation> Planner<S, A, O> for ValueIterationPlanner<S, A> {
    fn plan(&mut self, agent: &Agent<S, A, O>, _rng: &mut RandomSource) -> Result<A> {
        let belief = agent.belief().to_histogram()?;
        vi_policy_action(&self.alphas, &self.states, &belief).map(|(a, _)| a)
    }
}
