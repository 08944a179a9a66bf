//! Object-oriented POMDPs.
//!
//! The state is a set of objects, each with a class and attribute values.
//! Transition and observation models factor per object,
//! `Pr(s' | s, a) = Π_i Pr(s'_i | s, a)`, and the belief keeps one
//! distribution per object, so its size grows with `Σ_i |S_i|` rather than
//! `Π_i |S_i|`.
//!
//! The factored belief update is exact when each object's transition depends
//! on its own state, the action, and objects whose belief is a point mass
//! (for example a robot with a known pose). Observation factors may read any
//! such known object from the next state. Coupled dynamics need a joint
//! update instead.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use crate::agent::Agent;
use crate::beliefs::{
    exact_belief_update, Belief, BeliefUpdater, CustomBelief, Distribution, HistogramBelief,
};
use crate::error::{PomdpError, Result};
use crate::model::{Action, ObservationModel, RandomSource, TransitionModel};

pub type ObjectId = u32;

/// Attribute or class name.
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrValue {
    Bool(bool),
    Int(i64),
    Cell(i64, i64),
    Text(Name),
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(b) => write!(f, "{b}"),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Cell(x, y) => write!(f, "({x},{y})"),
            AttrValue::Text(t) => write!(f, "{t}"),
        }
    }
}

/// State of one object: its class and attribute values, sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectState {
    class: Name,
    attributes: Vec<(Name, AttrValue)>,
}

impl ObjectState {
    pub fn new(
        class: impl Into<Name>,
        attributes: impl IntoIterator<Item = (Name, AttrValue)>,
    ) -> Result<Self> {
        let class = class.into();
        if class.is_empty() {
            return Err(PomdpError::Parameter("object class name is empty".into()));
        }
        let mut attributes: Vec<(Name, AttrValue)> = attributes.into_iter().collect();
        attributes.sort_by(|a, b| a.0.cmp(&b.0));
        if attributes.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PomdpError::Parameter(format!(
                "duplicate attribute in object of class {class}"
            )));
        }
        Ok(Self { class, attributes })
    }

    pub fn class(&self) -> &str {
        &self.class
    }

    pub fn get(&self, name: &str) -> Option<&AttrValue> {
        self.attributes
            .binary_search_by(|(n, _)| n.as_ref().cmp(name))
            .ok()
            .map(|i| &self.attributes[i].1)
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &AttrValue)> {
        self.attributes.iter().map(|(n, v)| (n.as_ref(), v))
    }

    /// Copy with one attribute replaced (or added).
    pub fn with(&self, name: &Name, value: AttrValue) -> Self {
        let mut out = self.clone();
        match out.attributes.binary_search_by(|(n, _)| n.cmp(name)) {
            Ok(i) => out.attributes[i].1 = value,
            Err(i) => out.attributes.insert(i, (name.clone(), value)),
        }
        out
    }
}

/// Joint state: object id to object state, sorted by id. Object states are
/// shared, so cloning a joint state does not copy unchanged objects.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OOState {
    objects: Vec<(ObjectId, Arc<ObjectState>)>,
}

impl OOState {
    pub fn new(objects: impl IntoIterator<Item = (ObjectId, ObjectState)>) -> Result<Self> {
        Self::from_shared(objects.into_iter().map(|(id, s)| (id, Arc::new(s))))
    }

    pub fn from_shared(
        objects: impl IntoIterator<Item = (ObjectId, Arc<ObjectState>)>,
    ) -> Result<Self> {
        let mut objects: Vec<_> = objects.into_iter().collect();
        objects.sort_by_key(|(id, _)| *id);
        if let Some(w) = objects.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PomdpError::Parameter(format!("duplicate object id {}", w[0].0)));
        }
        Ok(Self { objects })
    }

    pub fn get(&self, id: ObjectId) -> Option<&ObjectState> {
        self.get_shared(id).map(Arc::as_ref)
    }

    pub fn get_shared(&self, id: ObjectId) -> Option<&Arc<ObjectState>> {
        self.objects
            .binary_search_by_key(&id, |(i, _)| *i)
            .ok()
            .map(|i| &self.objects[i].1)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.objects.iter().map(|(id, _)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, &ObjectState)> {
        self.objects.iter().map(|(id, s)| (*id, s.as_ref()))
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Copy with object `id` replaced. Panics if `id` is absent.
    pub fn with_object(&self, id: ObjectId, state: Arc<ObjectState>) -> Self {
        let mut out = self.clone();
        let i = out
            .objects
            .binary_search_by_key(&id, |(i, _)| *i)
            .unwrap_or_else(|_| panic!("object {id} not in state"));
        out.objects[i].1 = state;
        out
    }
}

/// Per-object observation; `Null` when the object was not observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectObservation {
    Null,
    Detected(Vec<(Name, AttrValue)>),
}

/// Joint observation: one factor per object id, sorted by id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OOObservation {
    factors: Vec<(ObjectId, ObjectObservation)>,
}

impl OOObservation {
    pub fn new(factors: impl IntoIterator<Item = (ObjectId, ObjectObservation)>) -> Self {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|(id, _)| *id);
        Self { factors }
    }

    pub fn get(&self, id: ObjectId) -> Option<&ObjectObservation> {
        self.factors
            .binary_search_by_key(&id, |(i, _)| *i)
            .ok()
            .map(|i| &self.factors[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ObjectId, &ObjectObservation)> {
        self.factors.iter().map(|(id, o)| (*id, o))
    }
}

/// `Pr(s'_i | s, a)` for one object.
pub trait ObjectTransitionModel<A>: Send + Sync {
    fn probability(&self, next: &ObjectState, state: &OOState, action: &A) -> f64;

    fn sample(&self, state: &OOState, action: &A, rng: &mut RandomSource) -> Arc<ObjectState>;

    /// Every state this object can take.
    fn all_states(&self) -> Option<Vec<ObjectState>> {
        None
    }
}

/// `Pr(o_i | s', a)` for one object.
pub trait ObjectObservationModel<A>: Send + Sync {
    fn probability(&self, observation: &ObjectObservation, next_state: &OOState, action: &A) -> f64;

    fn sample(&self, next_state: &OOState, action: &A, rng: &mut RandomSource) -> ObjectObservation;

    fn all_observations(&self) -> Option<Vec<ObjectObservation>> {
        None
    }
}

type TerminalFn = Arc<dyn Fn(&OOState) -> bool + Send + Sync>;

fn check_ids<'a>(expected: impl Iterator<Item = ObjectId>, got: impl Iterator<Item = ObjectId> + 'a) -> Result<()> {
    let expected: Vec<ObjectId> = expected.collect();
    let got: Vec<ObjectId> = got.collect();
    if expected == got {
        return Ok(());
    }
    Err(PomdpError::ObjectIdMismatch {
        missing: expected.iter().filter(|id| !got.contains(id)).copied().collect(),
        extra: got.iter().filter(|id| !expected.contains(id)).copied().collect(),
    })
}

fn cartesian<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.into_iter()
            .flat_map(|prefix| {
                list.iter().map(move |item| {
                    let mut v = prefix.clone();
                    v.push(item.clone());
                    v
                })
            })
            .collect()
    })
}

/// Product of per-object transition factors.
pub struct OOTransitionModel<A> {
    factors: Vec<(ObjectId, Arc<dyn ObjectTransitionModel<A>>)>,
    terminal: Option<TerminalFn>,
}

impl<A: Action> OOTransitionModel<A> {
    pub fn new(factors: impl IntoIterator<Item = (ObjectId, Arc<dyn ObjectTransitionModel<A>>)>) -> Self {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|(id, _)| *id);
        Self {
            factors,
            terminal: None,
        }
    }

    pub fn with_terminal(mut self, terminal: impl Fn(&OOState) -> bool + Send + Sync + 'static) -> Self {
        self.terminal = Some(Arc::new(terminal));
        self
    }

    pub fn factor(&self, id: ObjectId) -> Option<&Arc<dyn ObjectTransitionModel<A>>> {
        self.factors.iter().find(|(i, _)| *i == id).map(|(_, f)| f)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.factors.iter().map(|(id, _)| *id)
    }

    /// `Π_i Pr(s'_i | s, a)`; both states must carry exactly the model's ids.
    pub fn joint_probability(&self, next: &OOState, state: &OOState, action: &A) -> Result<f64> {
        check_ids(self.ids(), next.ids())?;
        check_ids(self.ids(), state.ids())?;
        Ok(self
            .factors
            .iter()
            .map(|(id, f)| f.probability(next.get(*id).expect("checked"), state, action))
            .product())
    }
}

/// Free-function form of [`OOTransitionModel::joint_probability`].
pub fn oo_transition_probability<A: Action>(
    model: &OOTransitionModel<A>,
    next: &OOState,
    state: &OOState,
    action: &A,
) -> Result<f64> {
    model.joint_probability(next, state, action)
}

impl<A: Action> TransitionModel<OOState, A> for OOTransitionModel<A> {
    fn probability(&self, next_state: &OOState, state: &OOState, action: &A) -> f64 {
        self.joint_probability(next_state, state, action).unwrap_or(0.0)
    }

    fn sample(&self, state: &OOState, action: &A, rng: &mut RandomSource) -> OOState {
        OOState {
            objects: self
                .factors
                .iter()
                .map(|(id, f)| (*id, f.sample(state, action, rng)))
                .collect(),
        }
    }

    fn all_states(&self) -> Option<Vec<OOState>> {
        let lists: Option<Vec<Vec<ObjectState>>> =
            self.factors.iter().map(|(_, f)| f.all_states()).collect();
        let ids: Vec<ObjectId> = self.ids().collect();
        Some(
            cartesian(&lists?)
                .into_iter()
                .map(|combo| OOState {
                    objects: ids.iter().copied().zip(combo.into_iter().map(Arc::new)).collect(),
                })
                .collect(),
        )
    }

    fn is_terminal(&self, state: &OOState) -> bool {
        self.terminal.as_ref().is_some_and(|t| t(state))
    }
}

/// Product of per-object observation factors.
pub struct OOObservationModel<A> {
    factors: Vec<(ObjectId, Arc<dyn ObjectObservationModel<A>>)>,
}

impl<A: Action> OOObservationModel<A> {
    pub fn new(factors: impl IntoIterator<Item = (ObjectId, Arc<dyn ObjectObservationModel<A>>)>) -> Self {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|(id, _)| *id);
        Self { factors }
    }

    pub fn factor(&self, id: ObjectId) -> Option<&Arc<dyn ObjectObservationModel<A>>> {
        self.factors.iter().find(|(i, _)| *i == id).map(|(_, f)| f)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.factors.iter().map(|(id, _)| *id)
    }

    /// `Π_i Pr(o_i | s', a)`.
    pub fn joint_probability(&self, observation: &OOObservation, next: &OOState, action: &A) -> Result<f64> {
        check_ids(self.ids(), observation.factors.iter().map(|(id, _)| *id))?;
        check_ids(self.ids(), next.ids())?;
        Ok(self
            .factors
            .iter()
            .map(|(id, f)| f.probability(observation.get(*id).expect("checked"), next, action))
            .product())
    }
}

impl<A: Action> ObservationModel<OOState, A, OOObservation> for OOObservationModel<A> {
    fn probability(&self, observation: &OOObservation, next_state: &OOState, action: &A) -> f64 {
        self.joint_probability(observation, next_state, action)
            .unwrap_or(0.0)
    }

    fn sample(&self, next_state: &OOState, action: &A, rng: &mut RandomSource) -> OOObservation {
        OOObservation {
            factors: self
                .factors
                .iter()
                .map(|(id, f)| (*id, f.sample(next_state, action, rng)))
                .collect(),
        }
    }

    fn all_observations(&self) -> Option<Vec<OOObservation>> {
        let lists: Option<Vec<Vec<ObjectObservation>>> =
            self.factors.iter().map(|(_, f)| f.all_observations()).collect();
        let ids: Vec<ObjectId> = self.ids().collect();
        Some(
            cartesian(&lists?)
                .into_iter()
                .map(|combo| OOObservation {
                    factors: ids.iter().copied().zip(combo).collect(),
                })
                .collect(),
        )
    }
}

/// Factored belief: one distribution per object.
#[derive(Clone)]
pub struct OOBelief {
    factors: Vec<(ObjectId, Belief<ObjectState>)>,
}

impl fmt::Debug for OOBelief {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.factors.iter().map(|(id, b)| (id, b))).finish()
    }
}

impl OOBelief {
    pub fn new(factors: impl IntoIterator<Item = (ObjectId, Belief<ObjectState>)>) -> Result<Self> {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|(id, _)| *id);
        if let Some(w) = factors.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PomdpError::Parameter(format!("duplicate object id {}", w[0].0)));
        }
        Ok(Self { factors })
    }

    pub fn factor(&self, id: ObjectId) -> Option<&Belief<ObjectState>> {
        self.factors.iter().find(|(i, _)| *i == id).map(|(_, b)| b)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.factors.iter().map(|(id, _)| *id)
    }

    /// Number of stored `(state, probability)` entries, `Σ_i |support_i|`.
    pub fn representation_size(&self) -> usize {
        self.factors
            .iter()
            .map(|(_, b)| b.support().map_or(0, |s| s.len()))
            .sum()
    }

    /// Entries an equivalent joint histogram would need, `Π_i |support_i|`.
    pub fn joint_size(&self) -> u128 {
        self.factors
            .iter()
            .map(|(_, b)| b.support().map_or(0, |s| s.len() as u128))
            .product()
    }

    /// Per-object independent sample.
    pub fn sample_state(&self, rng: &mut RandomSource) -> OOState {
        OOState {
            objects: self
                .factors
                .iter()
                .map(|(id, b)| (*id, Arc::new(b.sample(rng))))
                .collect(),
        }
    }

    /// Per-object most probable state.
    pub fn mpe(&self) -> Result<OOState> {
        let objects = self
            .factors
            .iter()
            .map(|(id, b)| Ok((*id, Arc::new(b.argmax()?))))
            .collect::<Result<Vec<_>>>()?;
        Ok(OOState { objects })
    }
}

pub fn oo_belief_sample(belief: &OOBelief, rng: &mut RandomSource) -> OOState {
    belief.sample_state(rng)
}

pub fn oo_belief_mpe(belief: &OOBelief) -> Result<OOState> {
    belief.mpe()
}

impl Distribution<OOState> for OOBelief {
    fn probability(&self, value: &OOState) -> f64 {
        if check_ids(self.ids(), value.ids()).is_err() {
            return 0.0;
        }
        self.factors
            .iter()
            .map(|(id, b)| b.probability(value.get(*id).expect("checked")))
            .product()
    }

    fn sample(&self, rng: &mut RandomSource) -> OOState {
        self.sample_state(rng)
    }

    fn argmax(&self) -> Result<OOState> {
        self.mpe()
    }

    fn support(&self) -> Option<Vec<OOState>> {
        let lists: Option<Vec<Vec<ObjectState>>> =
            self.factors.iter().map(|(_, b)| b.support()).collect();
        let ids: Vec<ObjectId> = self.ids().collect();
        Some(
            cartesian(&lists?)
                .into_iter()
                .map(|combo| OOState {
                    objects: ids.iter().copied().zip(combo.into_iter().map(Arc::new)).collect(),
                })
                .collect(),
        )
    }
}

impl CustomBelief<OOState> for OOBelief {
    fn as_any(&self) -> &dyn Any {
        self
    }
}

// Object `id`'s transition with every other object fixed by `context`.
struct FactorTransition<'a, A> {
    id: ObjectId,
    model: &'a dyn ObjectTransitionModel<A>,
    context: &'a OOState,
}

impl<A: Action> TransitionModel<ObjectState, A> for FactorTransition<'_, A> {
    fn probability(&self, next: &ObjectState, state: &ObjectState, action: &A) -> f64 {
        let joint = self.context.with_object(self.id, Arc::new(state.clone()));
        self.model.probability(next, &joint, action)
    }

    fn sample(&self, state: &ObjectState, action: &A, rng: &mut RandomSource) -> ObjectState {
        let joint = self.context.with_object(self.id, Arc::new(state.clone()));
        self.model.sample(&joint, action, rng).as_ref().clone()
    }

    fn all_states(&self) -> Option<Vec<ObjectState>> {
        self.model.all_states()
    }
}

struct FactorObservation<'a, A> {
    id: ObjectId,
    model: &'a dyn ObjectObservationModel<A>,
    context: &'a OOState,
}

impl<A: Action> ObservationModel<ObjectState, A, ObjectObservation> for FactorObservation<'_, A> {
    fn probability(&self, observation: &ObjectObservation, next: &ObjectState, action: &A) -> f64 {
        let joint = self.context.with_object(self.id, Arc::new(next.clone()));
        self.model.probability(observation, &joint, action)
    }

    fn sample(&self, next: &ObjectState, action: &A, rng: &mut RandomSource) -> ObjectObservation {
        let joint = self.context.with_object(self.id, Arc::new(next.clone()));
        self.model.sample(&joint, action, rng)
    }
}

/// Exact belief update applied factor by factor.
///
/// Every factor must be tabular (histograms, or particle sets which are
/// tabulated first). Point-mass factors are updated first; other factors see
/// them at their prior value when transitioning and at their posterior value
/// when observed.
pub fn oo_belief_update<A: Action>(
    belief: &OOBelief,
    action: &A,
    observation: &OOObservation,
    transition: &OOTransitionModel<A>,
    observation_model: &OOObservationModel<A>,
) -> Result<OOBelief> {
    check_ids(transition.ids(), belief.ids())?;
    check_ids(observation_model.ids(), belief.ids())?;
    check_ids(observation_model.ids(), observation.factors.iter().map(|(id, _)| *id))?;

    let priors: Vec<(ObjectId, HistogramBelief<ObjectState>)> = belief
        .factors
        .iter()
        .map(|(id, b)| Ok((*id, b.to_histogram()?)))
        .collect::<Result<_>>()?;
    let before = belief.mpe()?;
    let mut after = before.clone();

    let mut order: Vec<usize> = (0..priors.len()).collect();
    order.sort_by_key(|&i| (priors[i].1.support().map_or(0, |s| s.len()) != 1, priors[i].0));

    let mut posteriors: Vec<Option<Belief<ObjectState>>> = vec![None; priors.len()];
    for i in order {
        let (id, prior) = &priors[i];
        let t = FactorTransition {
            id: *id,
            model: transition.factor(*id).expect("checked").as_ref(),
            context: &before,
        };
        let o = FactorObservation {
            id: *id,
            model: observation_model.factor(*id).expect("checked").as_ref(),
            context: &after,
        };
        let posterior = exact_belief_update(
            prior,
            action,
            observation.get(*id).expect("checked"),
            &t,
            &o,
        )
        .map_err(|e| match e {
            PomdpError::ImpossibleObservation { .. } => {
                PomdpError::ImpossibleObjectObservation { object: *id }
            }
            other => other,
        })?;
        after = after.with_object(*id, Arc::new(posterior.argmax()?));
        posteriors[i] = Some(Belief::Histogram(posterior));
    }
    OOBelief::new(
        priors
            .iter()
            .map(|(id, _)| *id)
            .zip(posteriors.into_iter().map(|p| p.expect("every factor updated"))),
    )
}

/// [`BeliefUpdater`] for agents whose belief is a [`Belief::Custom`] holding
/// an [`OOBelief`].
pub struct OOExactUpdater<A> {
    pub transition: Arc<OOTransitionModel<A>>,
    pub observation: Arc<OOObservationModel<A>>,
}

impl<A: Action> BeliefUpdater<OOState, A, OOObservation> for OOExactUpdater<A> {
    fn update(
        &self,
        agent: &Agent<OOState, A, OOObservation>,
        action: &A,
        observation: &OOObservation,
        _rng: &mut RandomSource,
    ) -> Result<Belief<OOState>> {
        let prior = agent
            .belief()
            .as_custom::<OOBelief>()
            .ok_or_else(|| PomdpError::Capability("agent belief is not an OOBelief".into()))?;
        let posterior = oo_belief_update(
            prior,
            action,
            observation,
            &self.transition,
            &self.observation,
        )?;
        Ok(Belief::Custom(Arc::new(posterior)))
    }
}
