//! Monte-Carlo tree search over histories.
//!
//! PO-UCT samples a root state from the agent's belief for every simulation,
//! descends the tree with UCB1, expands one node per simulation and scores it
//! with a rollout of the agent's policy model. POMCP is the same search that
//! also stores every simulated state in the particle set of the history node
//! it reaches; after a real step the matching child's particles become the
//! agent's belief.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::agent::Agent;
use crate::beliefs::{
    particle_update_rejection, reinvigorate, Belief, Distribution, IdentityPerturbation, ParticleBelief,
    StatePerturbation, DEFAULT_ATTEMPTS_PER_PARTICLE,
};
use crate::error::{PomdpError, Result};
use crate::model::{
    Action, BlackboxModel, Discount, Observation, PolicyModel, RandomSource, SharedPolicy, State,
};

use super::{Planner, UpdateOutcome};

/// Particle count POMCP keeps after an update when none is configured.
pub const DEFAULT_PARTICLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Simulations(usize),
    /// Wall-clock budget, checked between simulations.
    Time(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctsParams {
    pub budget: Budget,
    pub max_depth: usize,
    /// UCB1 exploration constant; `None` uses `R_max - R_min` when the
    /// generator reports a reward range, else 1.
    pub exploration: Option<f64>,
    pub discount: Discount,
    /// POMCP: particle count restored after each update.
    pub num_particles: usize,
    /// POMCP: when the real observation was never simulated, rebuild the
    /// belief by rejection sampling from the previous belief instead of
    /// failing outright.
    pub rejection_fallback: bool,
}

impl MctsParams {
    pub fn new(simulations: usize, max_depth: usize, discount: Discount) -> Self {
        Self {
            budget: Budget::Simulations(simulations),
            max_depth,
            exploration: None,
            discount,
            num_particles: DEFAULT_PARTICLES,
            rejection_fallback: true,
        }
    }

    pub fn with_exploration(mut self, c: f64) -> Self {
        self.exploration = Some(c);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.budget {
            Budget::Simulations(0) => {
                return Err(PomdpError::Parameter("num_simulations must be >= 1".into()))
            }
            Budget::Time(d) if d.is_zero() => {
                return Err(PomdpError::Parameter("time budget must be positive".into()))
            }
            _ => {}
        }
        if self.max_depth == 0 {
            return Err(PomdpError::Parameter("max_depth must be >= 1".into()));
        }
        if let Some(c) = self.exploration {
            if !(c >= 0.0) {
                return Err(PomdpError::Parameter(format!("exploration constant {c} < 0")));
            }
        }
        if self.num_particles == 0 {
            return Err(PomdpError::Parameter("num_particles must be >= 1".into()));
        }
        Ok(())
    }
}

pub type TreeNodeId = usize;

#[derive(Debug, Clone)]
struct ActionNode<A, O> {
    action: A,
    visits: u64,
    value: f64,
    children: BTreeMap<O, TreeNodeId>,
}

#[derive(Debug, Clone)]
struct HistoryNode<S, A, O> {
    visits: u64,
    expanded: bool,
    // sorted by action
    actions: Vec<ActionNode<A, O>>,
    particles: Vec<S>,
}

impl<S, A, O> Default for HistoryNode<S, A, O> {
    fn default() -> Self {
        Self {
            visits: 0,
            expanded: false,
            actions: Vec::new(),
            particles: Vec::new(),
        }
    }
}

/// History tree stored as an arena; the root has id [`SearchTree::root`].
#[derive(Debug, Clone)]
pub struct SearchTree<S, A, O> {
    nodes: Vec<HistoryNode<S, A, O>>,
}

/// Structural copy of a subtree, for comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtreeSnapshot<A, O> {
    pub visits: u64,
    pub particle_count: usize,
    pub actions: Vec<(A, u64, f64, Vec<(O, SubtreeSnapshot<A, O>)>)>,
}

impl<S: State, A: Action, O: Observation> SearchTree<S, A, O> {
    fn new() -> Self {
        Self {
            nodes: vec![HistoryNode::default()],
        }
    }

    pub fn root(&self) -> TreeNodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `N(h)`.
    pub fn visits(&self, node: TreeNodeId) -> u64 {
        self.nodes[node].visits
    }

    /// `(a, N(h, a), Q(h, a))` for every expanded action of `node`.
    pub fn action_stats(&self, node: TreeNodeId) -> Vec<(A, u64, f64)> {
        self.nodes[node]
            .actions
            .iter()
            .map(|q| (q.action.clone(), q.visits, q.value))
            .collect()
    }

    pub fn child(&self, node: TreeNodeId, action: &A, observation: &O) -> Option<TreeNodeId> {
        self.nodes[node]
            .actions
            .iter()
            .find(|q| q.action == *action)
            .and_then(|q| q.children.get(observation).copied())
    }

    pub fn particles(&self, node: TreeNodeId) -> &[S] {
        &self.nodes[node].particles
    }

    pub fn is_expanded(&self, node: TreeNodeId) -> bool {
        self.nodes[node].expanded
    }

    pub fn node_ids(&self) -> impl Iterator<Item = TreeNodeId> {
        0..self.nodes.len()
    }

    pub fn snapshot(&self, node: TreeNodeId) -> SubtreeSnapshot<A, O> {
        let n = &self.nodes[node];
        SubtreeSnapshot {
            visits: n.visits,
            particle_count: n.particles.len(),
            actions: n
                .actions
                .iter()
                .map(|q| {
                    let children = q
                        .children
                        .iter()
                        .map(|(o, &c)| (o.clone(), self.snapshot(c)))
                        .collect();
                    (q.action.clone(), q.visits, q.value, children)
                })
                .collect(),
        }
    }

    /// Keeps only the subtree under `node`, which becomes the new root.
    fn into_subtree(mut self, node: TreeNodeId) -> Self {
        let mut order = vec![node];
        let mut remap = HashMap::from([(node, 0)]);
        let mut queue = VecDeque::from([node]);
        while let Some(id) = queue.pop_front() {
            for q in &self.nodes[id].actions {
                for &c in q.children.values() {
                    remap.insert(c, order.len());
                    order.push(c);
                    queue.push_back(c);
                }
            }
        }
        let mut nodes = Vec::with_capacity(order.len());
        for id in order {
            let mut n = std::mem::take(&mut self.nodes[id]);
            for q in n.actions.iter_mut() {
                for c in q.children.values_mut() {
                    *c = remap[c];
                }
            }
            nodes.push(n);
        }
        Self { nodes }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    PoUct,
    Pomcp,
}

/// PO-UCT or POMCP planner. The tree persists across [`Planner::update`]
/// calls within an episode.
pub struct Mcts<S, A, O> {
    params: MctsParams,
    variant: Variant,
    tree: Option<SearchTree<S, A, O>>,
    rollout: Option<SharedPolicy<S, A>>,
    perturbation: Arc<dyn StatePerturbation<S>>,
    simulations_run: usize,
}

impl<S: State, A: Action, O: Observation> Mcts<S, A, O> {
    pub fn pouct(params: MctsParams) -> Result<Self> {
        Self::build(params, Variant::PoUct)
    }

    pub fn pomcp(params: MctsParams) -> Result<Self> {
        Self::build(params, Variant::Pomcp)
    }

    fn build(params: MctsParams, variant: Variant) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            variant,
            tree: None,
            rollout: None,
            perturbation: Arc::new(IdentityPerturbation),
            simulations_run: 0,
        })
    }

    /// Rollout policy used instead of the agent's policy model.
    pub fn with_rollout_policy(mut self, policy: SharedPolicy<S, A>) -> Self {
        self.rollout = Some(policy);
        self
    }

    /// Perturbation used when POMCP refills a short particle set.
    pub fn with_perturbation(mut self, perturbation: Arc<dyn StatePerturbation<S>>) -> Self {
        self.perturbation = perturbation;
        self
    }

    pub fn params(&self) -> &MctsParams {
        &self.params
    }

    pub fn tree(&self) -> Option<&SearchTree<S, A, O>> {
        self.tree.as_ref()
    }

    /// Simulations run by the last call to `plan`.
    pub fn simulations_run(&self) -> usize {
        self.simulations_run
    }

    fn exploration(&self, generator: &dyn BlackboxModel<S, A, O>) -> f64 {
        self.params.exploration.unwrap_or_else(|| {
            generator
                .reward_range()
                .map(|(lo, hi)| hi - lo)
                .filter(|c| *c > 0.0 && c.is_finite())
                .unwrap_or(1.0)
        })
    }

    fn update_pomcp_belief(
        &mut self,
        agent: &mut Agent<S, A, O>,
        action: &A,
        observation: &O,
        particles: Vec<S>,
        rng: &mut RandomSource,
    ) -> Result<()> {
        let target = self.params.num_particles;
        let survivors = if !particles.is_empty() {
            particles
        } else if self.params.rejection_fallback {
            let attempts = target.saturating_mul(DEFAULT_ATTEMPTS_PER_PARTICLE);
            let generator = agent.blackbox().as_ref();
            let direct = particle_update_rejection(agent.belief(), action, observation, generator, target, attempts, rng);
            let accepted = match direct {
                Err(PomdpError::ParticleDepletion) => {
                    // The prior may hold no state consistent with the
                    // observation; retry from perturbed prior draws.
                    let perturbed = Perturbed {
                        base: agent.belief(),
                        perturbation: self.perturbation.as_ref(),
                    };
                    particle_update_rejection(&perturbed, action, observation, generator, target, attempts, rng)?
                }
                other => other?,
            };
            accepted.particles().to_vec()
        } else {
            return Err(PomdpError::ParticleDepletion);
        };
        let belief = if survivors.len() < target {
            reinvigorate(&survivors, self.perturbation.as_ref(), target, rng)?
        } else {
            ParticleBelief::new(survivors)?
        };
        agent.set_belief(Belief::Particles(belief));
        Ok(())
    }
}

/// Prior draws passed through a perturbation.
struct Perturbed<'a, S> {
    base: &'a dyn Distribution<S>,
    perturbation: &'a dyn StatePerturbation<S>,
}

impl<S> Distribution<S> for Perturbed<'_, S> {
    fn probability(&self, _value: &S) -> f64 {
        f64::NAN
    }

    fn sample(&self, rng: &mut RandomSource) -> S {
        let s = self.base.sample(rng);
        self.perturbation.perturb(&s, rng)
    }
}

struct Search<'a, S, A, O> {
    tree: &'a mut SearchTree<S, A, O>,
    generator: &'a dyn BlackboxModel<S, A, O>,
    policy: &'a dyn PolicyModel<S, A>,
    rollout: &'a dyn PolicyModel<S, A>,
    exploration: f64,
    gamma: f64,
    max_depth: usize,
    keep_particles: bool,
    rng: &'a mut RandomSource,
}

impl<S: State, A: Action, O: Observation> Search<'_, S, A, O> {
    fn expand(&mut self, node: TreeNodeId, state: &S) -> Result<()> {
        let mut actions = self.policy.actions(Some(state));
        if actions.is_empty() {
            return Err(PomdpError::NoActions);
        }
        actions.sort();
        actions.dedup();
        let n = &mut self.tree.nodes[node];
        n.actions = actions
            .into_iter()
            .map(|action| ActionNode {
                action,
                visits: 0,
                value: 0.0,
                children: BTreeMap::new(),
            })
            .collect();
        n.expanded = true;
        Ok(())
    }

    /// UCB1; unvisited actions first, ties to the smallest action.
    fn select(&self, node: TreeNodeId) -> usize {
        let n = &self.tree.nodes[node];
        if let Some(i) = n.actions.iter().position(|q| q.visits == 0) {
            return i;
        }
        let log_n = (n.visits as f64).ln();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, q) in n.actions.iter().enumerate() {
            let score = q.value + self.exploration * (log_n / q.visits as f64).sqrt();
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        best
    }

    fn rollout(&mut self, mut state: S, depth: usize) -> Result<f64> {
        let mut total = 0.0;
        let mut weight = 1.0;
        for _ in depth..self.max_depth {
            if self.generator.is_terminal(&state) {
                break;
            }
            let action = self
                .rollout
                .sample(&state, self.rng)
                .ok_or(PomdpError::NoActions)?;
            let step = self.generator.generate(&state, &action, self.rng);
            total += weight * step.reward;
            weight *= self.gamma;
            state = step.next_state;
        }
        Ok(total)
    }

    fn simulate(&mut self, state: S, node: TreeNodeId, depth: usize) -> Result<f64> {
        if depth >= self.max_depth || self.generator.is_terminal(&state) {
            return Ok(0.0);
        }
        if !self.tree.nodes[node].expanded {
            self.expand(node, &state)?;
            if node != self.tree.root() {
                return self.rollout(state, depth);
            }
        }
        let ai = self.select(node);
        let action = self.tree.nodes[node].actions[ai].action.clone();
        let step = self.generator.generate(&state, &action, self.rng);
        let child = match self.tree.nodes[node].actions[ai].children.get(&step.observation) {
            Some(&c) => c,
            None => {
                let id = self.tree.nodes.len();
                self.tree.nodes.push(HistoryNode::default());
                self.tree.nodes[node].actions[ai]
                    .children
                    .insert(step.observation.clone(), id);
                id
            }
        };
        if self.keep_particles {
            self.tree.nodes[child].particles.push(step.next_state.clone());
        }
        let ret = step.reward + self.gamma * self.simulate(step.next_state, child, depth + 1)?;

        let n = &mut self.tree.nodes[node];
        n.visits += 1;
        let q = &mut n.actions[ai];
        q.visits += 1;
        q.value += (ret - q.value) / q.visits as f64;
        Ok(ret)
    }
}

impl<S: State, A: Action, O: Observation> Planner<S, A, O> for Mcts<S, A, O> {
    fn plan(&mut self, agent: &Agent<S, A, O>, rng: &mut RandomSource) -> Result<A> {
        let generator = agent.blackbox().as_ref();
        let exploration = self.exploration(generator);

        // POMCP draws root states from the particle view of the belief.
        let particle_view;
        let root_belief: &Belief<S> = match (self.variant, agent.belief()) {
            (Variant::Pomcp, Belief::Particles(p)) => {
                if p.is_empty() {
                    return Err(PomdpError::DepletedRoot);
                }
                agent.belief()
            }
            (Variant::Pomcp, other) => {
                particle_view = Belief::Particles(other.to_particles(self.params.num_particles, rng)?);
                &particle_view
            }
            (Variant::PoUct, b) => b,
        };

        let policy = agent.policy().as_ref();
        let rollout = self.rollout.as_deref().unwrap_or(policy);
        let tree = self.tree.get_or_insert_with(SearchTree::new);
        let mut search = Search {
            tree,
            generator,
            policy,
            rollout,
            exploration,
            gamma: self.params.discount.value(),
            max_depth: self.params.max_depth,
            keep_particles: self.variant == Variant::Pomcp,
            rng,
        };

        let started = Instant::now();
        let mut done = 0usize;
        loop {
            match self.params.budget {
                Budget::Simulations(n) if done >= n => break,
                Budget::Time(limit) if done > 0 && started.elapsed() >= limit => break,
                _ => {}
            }
            use crate::beliefs::Distribution;
            let state = root_belief.sample(search.rng);
            let root = search.tree.root();
            search.simulate(state, root, 0)?;
            done += 1;
        }
        self.simulations_run = done;

        let tree = self.tree.as_ref().expect("tree initialized above");
        let root = &tree.nodes[tree.root()];
        if root.actions.is_empty() {
            // every sampled root state was terminal
            let mut actions = agent.actions();
            actions.sort();
            return actions.into_iter().next().ok_or(PomdpError::NoActions);
        }
        let mut best: Option<&ActionNode<A, O>> = None;
        for q in root.actions.iter().filter(|q| q.visits > 0) {
            if best.is_none_or(|b| q.value > b.value) {
                best = Some(q);
            }
        }
        Ok(best.unwrap_or(&root.actions[0]).action.clone())
    }

    fn update(
        &mut self,
        agent: &mut Agent<S, A, O>,
        action: &A,
        observation: &O,
        rng: &mut RandomSource,
    ) -> Result<UpdateOutcome> {
        let child = self
            .tree
            .as_ref()
            .and_then(|t| t.child(t.root(), action, observation));
        let outcome = UpdateOutcome {
            tree_reset: child.is_none(),
        };
        let particles = match (self.tree.take(), child) {
            (Some(tree), Some(c)) => {
                let sub = tree.into_subtree(c);
                let particles = if self.variant == Variant::Pomcp {
                    sub.nodes[0].particles.clone()
                } else {
                    Vec::new()
                };
                self.tree = Some(sub);
                particles
            }
            _ => Vec::new(),
        };
        if self.variant == Variant::Pomcp {
            self.update_pomcp_belief(agent, action, observation, particles, rng)?;
        }
        Ok(outcome)
    }

    fn updates_belief(&self) -> bool {
        self.variant == Variant::Pomcp
    }
}
