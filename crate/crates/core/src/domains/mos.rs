//! Two-dimensional multi-object search.
//!
//! A robot on a `W × H` grid looks for static targets with a fan-shaped
//! sensor. The problem is object-oriented: object 0 is the robot, objects
//! `1..=n` are targets. Sensing happens on `Look`; `Find` claims every target
//! inside the current fan.
//!
//! Rewards: every non-`Find` step costs `step_reward`; a `Find` that marks at
//! least one new target earns `find_reward` per target, otherwise
//! `wrong_find_reward`. The episode ends once every target is found.

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::agent::{Agent, Environment, Problem};
use crate::beliefs::{Belief, HistogramBelief, StatePerturbation};
use crate::error::{PomdpError, Result};
use crate::model::{RandomSource, RewardModel, UniformPolicy};
use crate::oopomdp::{
    AttrValue, Name, OOBelief, OOExactUpdater, OOObservation, OOObservationModel, OOState,
    OOTransitionModel, ObjectId, ObjectObservation, ObjectObservationModel, ObjectState,
    ObjectTransitionModel,
};

pub const ROBOT_ID: ObjectId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MosAction {
    Forward,
    Back,
    TurnLeft,
    TurnRight,
    Look,
    Find,
}

impl MosAction {
    pub const ALL: [MosAction; 6] = [
        MosAction::Forward,
        MosAction::Back,
        MosAction::TurnLeft,
        MosAction::TurnRight,
        MosAction::Look,
        MosAction::Find,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MosAction::Forward => "forward",
            MosAction::Back => "back",
            MosAction::TurnLeft => "turn-left",
            MosAction::TurnRight => "turn-right",
            MosAction::Look => "look",
            MosAction::Find => "find",
        }
    }
}

impl fmt::Display for MosAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Compass heading, counter-clockwise from east. `y` grows northwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::East, Heading::North, Heading::West, Heading::South];

    pub fn vector(self) -> (i64, i64) {
        match self {
            Heading::East => (1, 0),
            Heading::North => (0, 1),
            Heading::West => (-1, 0),
            Heading::South => (0, -1),
        }
    }

    pub fn left(self) -> Self {
        Self::ALL[(self as usize + 1) % 4]
    }

    pub fn right(self) -> Self {
        Self::ALL[(self as usize + 3) % 4]
    }

    fn from_index(i: i64) -> Self {
        Self::ALL[i.rem_euclid(4) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pose {
    pub x: i64,
    pub y: i64,
    pub heading: Heading,
}

/// Cells within `range` of the robot and within `fov / 2` of its heading.
/// The robot's own cell is always inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanSensor {
    pub fov_degrees: f64,
    pub range: f64,
}

impl FanSensor {
    pub fn contains(&self, pose: Pose, cell: (i64, i64)) -> bool {
        let (dx, dy) = (cell.0 - pose.x, cell.1 - pose.y);
        if dx == 0 && dy == 0 {
            return true;
        }
        let d2 = (dx * dx + dy * dy) as f64;
        if d2 > self.range * self.range + 1e-9 {
            return false;
        }
        let (hx, hy) = pose.heading.vector();
        let cos = (dx * hx + dy * hy) as f64 / d2.sqrt();
        cos >= (self.fov_degrees.to_radians() / 2.0).cos() - 1e-9
    }
}

struct Names {
    pose: Name,
    heading: Name,
    attempted_find: Name,
    pos: Name,
    found: Name,
    robot: Name,
    target: Name,
}

fn names() -> &'static Names {
    static NAMES: OnceLock<Names> = OnceLock::new();
    NAMES.get_or_init(|| Names {
        pose: Arc::from("pose"),
        heading: Arc::from("heading"),
        attempted_find: Arc::from("attempted_find"),
        pos: Arc::from("pos"),
        found: Arc::from("found"),
        robot: Arc::from("robot"),
        target: Arc::from("target"),
    })
}

pub fn robot_state(pose: Pose, attempted_find: bool) -> ObjectState {
    let n = names();
    ObjectState::new(
        n.robot.clone(),
        [
            (n.pose.clone(), AttrValue::Cell(pose.x, pose.y)),
            (n.heading.clone(), AttrValue::Int(pose.heading as i64)),
            (n.attempted_find.clone(), AttrValue::Bool(attempted_find)),
        ],
    )
    .expect("well-formed robot state")
}

pub fn target_state(cell: (i64, i64), found: bool) -> ObjectState {
    let n = names();
    ObjectState::new(
        n.target.clone(),
        [
            (n.pos.clone(), AttrValue::Cell(cell.0, cell.1)),
            (n.found.clone(), AttrValue::Bool(found)),
        ],
    )
    .expect("well-formed target state")
}

fn cell_attr(state: &ObjectState, name: &str) -> (i64, i64) {
    match state.get(name) {
        Some(AttrValue::Cell(x, y)) => (*x, *y),
        other => panic!("attribute {name} is not a cell: {other:?}"),
    }
}

fn bool_attr(state: &ObjectState, name: &str) -> bool {
    match state.get(name) {
        Some(AttrValue::Bool(b)) => *b,
        other => panic!("attribute {name} is not a bool: {other:?}"),
    }
}

/// Robot pose stored in a robot object state.
pub fn robot_pose(state: &ObjectState) -> Pose {
    let (x, y) = cell_attr(state, "pose");
    let heading = match state.get("heading") {
        Some(AttrValue::Int(h)) => Heading::from_index(*h),
        other => panic!("robot heading missing: {other:?}"),
    };
    Pose { x, y, heading }
}

pub fn target_cell(state: &ObjectState) -> (i64, i64) {
    cell_attr(state, "pos")
}

pub fn target_found(state: &ObjectState) -> bool {
    bool_attr(state, "found")
}

fn joint_robot(state: &OOState) -> Pose {
    robot_pose(state.get(ROBOT_ID).expect("robot object present"))
}

fn detection(cell: (i64, i64)) -> ObjectObservation {
    ObjectObservation::Detected(vec![(names().pos.clone(), AttrValue::Cell(cell.0, cell.1))])
}

fn pose_observation(pose: Pose) -> ObjectObservation {
    let n = names();
    ObjectObservation::Detected(vec![
        (n.heading.clone(), AttrValue::Int(pose.heading as i64)),
        (n.pose.clone(), AttrValue::Cell(pose.x, pose.y)),
    ])
}

#[derive(Debug, Clone, Copy)]
struct Grid {
    width: i64,
    height: i64,
}

impl Grid {
    fn inside(&self, x: i64, y: i64) -> bool {
        (0..self.width).contains(&x) && (0..self.height).contains(&y)
    }

    fn cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| (x, y)))
    }

    /// Pose after `action`; moves into walls leave the pose unchanged.
    fn step(&self, pose: Pose, action: MosAction) -> Pose {
        let (hx, hy) = pose.heading.vector();
        let moved = |sign: i64| {
            let (x, y) = (pose.x + sign * hx, pose.y + sign * hy);
            if self.inside(x, y) {
                Pose { x, y, ..pose }
            } else {
                pose
            }
        };
        match action {
            MosAction::Forward => moved(1),
            MosAction::Back => moved(-1),
            MosAction::TurnLeft => Pose {
                heading: pose.heading.left(),
                ..pose
            },
            MosAction::TurnRight => Pose {
                heading: pose.heading.right(),
                ..pose
            },
            MosAction::Look | MosAction::Find => pose,
        }
    }
}

struct RobotTransition {
    grid: Grid,
}

impl ObjectTransitionModel<MosAction> for RobotTransition {
    fn probability(&self, next: &ObjectState, state: &OOState, action: &MosAction) -> f64 {
        let expected = robot_state(self.grid.step(joint_robot(state), *action), *action == MosAction::Find);
        f64::from(u8::from(*next == expected))
    }

    fn sample(&self, state: &OOState, action: &MosAction, _rng: &mut RandomSource) -> Arc<ObjectState> {
        Arc::new(robot_state(
            self.grid.step(joint_robot(state), *action),
            *action == MosAction::Find,
        ))
    }

    fn all_states(&self) -> Option<Vec<ObjectState>> {
        let mut out = Vec::new();
        for (x, y) in self.grid.cells() {
            for heading in Heading::ALL {
                for attempted in [false, true] {
                    out.push(robot_state(Pose { x, y, heading }, attempted));
                }
            }
        }
        Some(out)
    }
}

struct TargetTransition {
    id: ObjectId,
    grid: Grid,
    sensor: FanSensor,
}

impl TargetTransition {
    fn next_found(&self, current: &ObjectState, state: &OOState, action: &MosAction) -> bool {
        target_found(current)
            || (*action == MosAction::Find && self.sensor.contains(joint_robot(state), target_cell(current)))
    }
}

impl ObjectTransitionModel<MosAction> for TargetTransition {
    fn probability(&self, next: &ObjectState, state: &OOState, action: &MosAction) -> f64 {
        let current = state.get(self.id).expect("target object present");
        let same_cell = target_cell(next) == target_cell(current);
        f64::from(u8::from(same_cell && target_found(next) == self.next_found(current, state, action)))
    }

    fn sample(&self, state: &OOState, action: &MosAction, _rng: &mut RandomSource) -> Arc<ObjectState> {
        let current = state.get_shared(self.id).expect("target object present");
        if self.next_found(current, state, action) == target_found(current) {
            current.clone()
        } else {
            Arc::new(target_state(target_cell(current), true))
        }
    }

    fn all_states(&self) -> Option<Vec<ObjectState>> {
        Some(
            self.grid
                .cells()
                .flat_map(|c| [target_state(c, false), target_state(c, true)])
                .collect(),
        )
    }
}

struct RobotObservation {
    grid: Grid,
}

impl ObjectObservationModel<MosAction> for RobotObservation {
    fn probability(&self, o: &ObjectObservation, next: &OOState, _action: &MosAction) -> f64 {
        f64::from(u8::from(*o == pose_observation(joint_robot(next))))
    }

    fn sample(&self, next: &OOState, _action: &MosAction, _rng: &mut RandomSource) -> ObjectObservation {
        pose_observation(joint_robot(next))
    }

    fn all_observations(&self) -> Option<Vec<ObjectObservation>> {
        let mut out = Vec::new();
        for (x, y) in self.grid.cells() {
            for heading in Heading::ALL {
                out.push(pose_observation(Pose { x, y, heading }));
            }
        }
        Some(out)
    }
}

struct TargetObservation {
    id: ObjectId,
    grid: Grid,
    sensor: FanSensor,
    false_negative: f64,
}

impl TargetObservation {
    fn visible(&self, next: &OOState, action: &MosAction) -> Option<(i64, i64)> {
        if *action != MosAction::Look {
            return None;
        }
        let cell = target_cell(next.get(self.id).expect("target object present"));
        self.sensor.contains(joint_robot(next), cell).then_some(cell)
    }
}

impl ObjectObservationModel<MosAction> for TargetObservation {
    fn probability(&self, o: &ObjectObservation, next: &OOState, action: &MosAction) -> f64 {
        match (self.visible(next, action), o) {
            (None, ObjectObservation::Null) => 1.0,
            (None, _) => 0.0,
            (Some(_), ObjectObservation::Null) => self.false_negative,
            (Some(cell), seen) if *seen == detection(cell) => 1.0 - self.false_negative,
            (Some(_), _) => 0.0,
        }
    }

    fn sample(&self, next: &OOState, action: &MosAction, rng: &mut RandomSource) -> ObjectObservation {
        match self.visible(next, action) {
            Some(cell) if self.false_negative == 0.0 || rng.random::<f64>() >= self.false_negative => {
                detection(cell)
            }
            _ => ObjectObservation::Null,
        }
    }

    fn all_observations(&self) -> Option<Vec<ObjectObservation>> {
        Some(
            std::iter::once(ObjectObservation::Null)
                .chain(self.grid.cells().map(detection))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosParams {
    pub width: i64,
    pub height: i64,
    pub n_objects: usize,
    pub sensor: FanSensor,
    /// Probability that a target inside the fan goes unseen on `Look`.
    pub false_negative: f64,
    pub step_reward: f64,
    pub find_reward: f64,
    pub wrong_find_reward: f64,
}

impl Default for MosParams {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            n_objects: 2,
            sensor: FanSensor {
                fov_degrees: 90.0,
                range: 3.0,
            },
            false_negative: 0.0,
            step_reward: -1.0,
            find_reward: 1000.0,
            wrong_find_reward: -1000.0,
        }
    }
}

impl MosParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PomdpError::Parameter(m));
        if self.width < 1 || self.height < 1 {
            return fail(format!("grid {}x{} is empty", self.width, self.height));
        }
        if self.n_objects < 1 {
            return fail("at least one target object is required".into());
        }
        if self.n_objects as i64 > self.width * self.height {
            return fail(format!(
                "{} objects do not fit on {} cells",
                self.n_objects,
                self.width * self.height
            ));
        }
        if !(self.sensor.fov_degrees > 0.0 && self.sensor.fov_degrees <= 360.0) {
            return fail(format!("field of view {} not in (0, 360]", self.sensor.fov_degrees));
        }
        if !(self.sensor.range >= 0.0) {
            return fail(format!("sensor range {} < 0", self.sensor.range));
        }
        if !(0.0..1.0).contains(&self.false_negative) {
            return fail(format!("false-negative rate {} not in [0, 1)", self.false_negative));
        }
        if ![self.step_reward, self.find_reward, self.wrong_find_reward]
            .iter()
            .all(|r| r.is_finite())
        {
            return fail("rewards must be finite".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MosReward {
    pub params: MosParams,
}

impl RewardModel<OOState, MosAction> for MosReward {
    fn expected(&self, state: &OOState, action: &MosAction, next: &OOState) -> f64 {
        if *action != MosAction::Find {
            return self.params.step_reward;
        }
        let newly = state
            .iter()
            .filter(|(id, s)| *id != ROBOT_ID && !target_found(s))
            .filter(|(id, _)| next.get(*id).is_some_and(target_found))
            .count();
        if newly > 0 {
            self.params.find_reward * newly as f64
        } else {
            self.params.wrong_find_reward
        }
    }

    fn range(&self) -> Option<(f64, f64)> {
        let p = &self.params;
        let best = p.find_reward * p.n_objects as f64;
        let values = [p.step_reward, p.wrong_find_reward, p.find_reward, best];
        Some((
            values.iter().copied().fold(f64::INFINITY, f64::min),
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ))
    }
}

pub fn all_found(state: &OOState) -> bool {
    state
        .iter()
        .filter(|(id, _)| *id != ROBOT_ID)
        .all(|(_, s)| target_found(s))
}

/// Moves targets to uniformly random cells: each with probability one half,
/// and always at least one. Found flags are kept. Used to refill particle sets
/// that hold no state consistent with an observation.
#[derive(Debug, Clone, Copy)]
pub struct TargetRelocation {
    pub width: i64,
    pub height: i64,
}

impl StatePerturbation<OOState> for TargetRelocation {
    fn perturb(&self, state: &OOState, rng: &mut RandomSource) -> OOState {
        let targets: Vec<(ObjectId, bool)> = state
            .iter()
            .filter(|(id, _)| *id != ROBOT_ID)
            .map(|(id, s)| (id, target_found(s)))
            .collect();
        if targets.is_empty() {
            return state.clone();
        }
        let forced = rng.random_range(0..targets.len());
        let mut next = state.clone();
        for (i, (id, found)) in targets.into_iter().enumerate() {
            if i == forced || rng.random_bool(0.5) {
                let cell = (rng.random_range(0..self.width), rng.random_range(0..self.height));
                next = next.with_object(id, Arc::new(target_state(cell, found)));
            }
        }
        next
    }
}

/// Factored models of one MOS instance.
pub struct MosModels {
    pub transition: Arc<OOTransitionModel<MosAction>>,
    pub observation: Arc<OOObservationModel<MosAction>>,
    pub reward: Arc<MosReward>,
}

impl MosModels {
    pub fn new(params: &MosParams) -> Result<Self> {
        params.validate()?;
        let grid = Grid {
            width: params.width,
            height: params.height,
        };
        let mut transitions: Vec<(ObjectId, Arc<dyn ObjectTransitionModel<MosAction>>)> =
            vec![(ROBOT_ID, Arc::new(RobotTransition { grid }))];
        let mut observations: Vec<(ObjectId, Arc<dyn ObjectObservationModel<MosAction>>)> =
            vec![(ROBOT_ID, Arc::new(RobotObservation { grid }))];
        for id in 1..=params.n_objects as ObjectId {
            transitions.push((
                id,
                Arc::new(TargetTransition {
                    id,
                    grid,
                    sensor: params.sensor,
                }),
            ));
            observations.push((
                id,
                Arc::new(TargetObservation {
                    id,
                    grid,
                    sensor: params.sensor,
                    false_negative: params.false_negative,
                }),
            ));
        }
        Ok(Self {
            transition: Arc::new(OOTransitionModel::new(transitions).with_terminal(all_found)),
            observation: Arc::new(OOObservationModel::new(observations)),
            reward: Arc::new(MosReward { params: *params }),
        })
    }

    pub fn exact_updater(&self) -> OOExactUpdater<MosAction> {
        OOExactUpdater {
            transition: self.transition.clone(),
            observation: self.observation.clone(),
        }
    }
}

pub struct MosInstance {
    pub problem: Problem<OOState, MosAction, OOObservation>,
    pub models: MosModels,
    pub params: MosParams,
}

/// Random robot pose and distinct random target cells. The agent knows its
/// pose and holds a uniform belief over each target's cell.
pub fn mos_build(params: MosParams, rng: &mut RandomSource) -> Result<MosInstance> {
    let models = MosModels::new(&params)?;
    let grid = Grid {
        width: params.width,
        height: params.height,
    };
    let cells: Vec<(i64, i64)> = grid.cells().collect();
    let robot = Pose {
        x: rng.random_range(0..params.width),
        y: rng.random_range(0..params.height),
        heading: Heading::ALL[rng.random_range(0..4)],
    };
    let placed = sample_indices(rng, cells.len(), params.n_objects);

    let mut objects = vec![(ROBOT_ID, robot_state(robot, false))];
    let mut factors = vec![(
        ROBOT_ID,
        Belief::Histogram(HistogramBelief::point_mass(robot_state(robot, false))),
    )];
    for (k, idx) in placed.iter().enumerate() {
        let id = k as ObjectId + 1;
        objects.push((id, target_state(cells[idx], false)));
        let uniform = HistogramBelief::uniform(cells.iter().map(|&c| target_state(c, false)))?;
        factors.push((id, Belief::Histogram(uniform)));
    }
    let truth = OOState::new(objects)?;
    let belief = OOBelief::new(factors)?;

    // Separate model instances for agent and environment.
    let env_models = MosModels::new(&params)?;
    let agent = Agent::new(
        Belief::Custom(Arc::new(belief)),
        Arc::new(UniformPolicy::new(MosAction::ALL.to_vec())),
        models.transition.clone(),
        models.observation.clone(),
        models.reward.clone(),
    );
    let env = Environment::new(truth, env_models.transition, env_models.reward)
        .with_action_space(MosAction::ALL.to_vec());
    Ok(MosInstance {
        problem: Problem { agent, env },
        models,
        params,
    })
}
