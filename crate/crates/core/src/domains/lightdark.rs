//! Light-dark navigation with continuous state and observations.
//!
//! The agent moves in the plane by unit steps in eight directions and reads
//! its position through Gaussian noise whose standard deviation
//! `σ(x) = σ_min + k·|x₁ − L|` grows with the horizontal distance from a
//! light at `x₁ = L`. Entering the goal disc ends the episode.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::agent::{Agent, Environment, Problem};
use crate::beliefs::{normal_pdf, Belief, Distribution, GaussianDensity, ParticleBelief};
use crate::error::{PomdpError, Result};
use crate::model::{
    ObservationModel, RandomSource, RewardModel, TransitionModel, UniformPolicy,
};

/// A point in the plane. Equality, ordering and hashing use the exact bit
/// patterns, so it can serve as a state or observation.
#[derive(Debug, Clone, Copy)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl PartialEq for Point2 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Point2 {}

impl PartialOrd for Point2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Point2 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }
}

impl Hash for Point2 {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.x.to_bits().hash(state);
        self.y.to_bits().hash(state);
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Unit step in one of eight compass directions, counter-clockwise from east.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move(u8);

impl Move {
    pub fn all() -> Vec<Move> {
        (0..8).map(Move).collect()
    }

    pub fn index(self) -> u8 {
        self.0
    }

    pub fn displacement(self) -> Point2 {
        let angle = f64::from(self.0) * std::f64::consts::FRAC_PI_4;
        // exact values on the axes
        let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
        Point2::new(snap(angle.cos()), snap(angle.sin()))
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [&str; 8] = ["e", "ne", "n", "nw", "w", "sw", "s", "se"];
        f.write_str(NAMES[self.0 as usize])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightDarkParams {
    pub light_x: f64,
    pub goal: Point2,
    pub goal_radius: f64,
    pub sigma_min: f64,
    pub k: f64,
    pub step_reward: f64,
    pub goal_reward: f64,
    pub start_mean: Point2,
    pub start_sigma: f64,
    pub particles: usize,
}

impl Default for LightDarkParams {
    fn default() -> Self {
        Self {
            light_x: 5.0,
            goal: Point2::new(0.0, 0.0),
            goal_radius: 0.5,
            sigma_min: 0.1,
            k: 0.5,
            step_reward: -1.0,
            goal_reward: 100.0,
            start_mean: Point2::new(2.0, 2.0),
            start_sigma: 1.0,
            particles: 1000,
        }
    }
}

impl LightDarkParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PomdpError::Parameter(m));
        if !(self.sigma_min > 0.0 && self.sigma_min.is_finite()) {
            return fail(format!("sigma_min must be > 0, got {}", self.sigma_min));
        }
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return fail(format!("k must be >= 0, got {}", self.k));
        }
        if !(self.goal_radius >= 0.0) || !(self.start_sigma >= 0.0) {
            return fail("goal radius and start sigma must be >= 0".into());
        }
        if self.particles == 0 {
            return fail("particle count must be >= 1".into());
        }
        Ok(())
    }

    pub fn noise_sigma(&self, x: f64) -> f64 {
        self.sigma_min + self.k * (x - self.light_x).abs()
    }

    pub fn at_goal(&self, p: Point2) -> bool {
        p.distance(self.goal) <= self.goal_radius
    }
}

/// Deterministic `s' = s + a`; goal states absorb.
#[derive(Debug, Clone, Copy)]
pub struct LightDarkTransition {
    pub params: LightDarkParams,
}

impl LightDarkTransition {
    fn next(&self, s: &Point2, a: &Move) -> Point2 {
        if self.params.at_goal(*s) {
            return *s;
        }
        let d = a.displacement();
        Point2::new(s.x + d.x, s.y + d.y)
    }
}

impl TransitionModel<Point2, Move> for LightDarkTransition {
    fn probability(&self, next: &Point2, state: &Point2, action: &Move) -> f64 {
        f64::from(u8::from(*next == self.next(state, action)))
    }

    fn sample(&self, state: &Point2, action: &Move, _rng: &mut RandomSource) -> Point2 {
        self.next(state, action)
    }

    fn argmax(&self, state: &Point2, action: &Move) -> Result<Point2> {
        Ok(self.next(state, action))
    }

    fn is_terminal(&self, state: &Point2) -> bool {
        self.params.at_goal(*state)
    }
}

/// Position reading with noise `N(s', σ(s'.x)² I)`.
#[derive(Debug, Clone, Copy)]
pub struct LightDarkObservation {
    pub params: LightDarkParams,
}

impl ObservationModel<Point2, Move, Point2> for LightDarkObservation {
    fn probability(&self, o: &Point2, next: &Point2, _action: &Move) -> f64 {
        let sigma = self.params.noise_sigma(next.x);
        normal_pdf(o.x, next.x, sigma) * normal_pdf(o.y, next.y, sigma)
    }

    fn sample(&self, next: &Point2, _action: &Move, rng: &mut RandomSource) -> Point2 {
        let sigma = self.params.noise_sigma(next.x);
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        Point2::new(next.x + sigma * dx, next.y + sigma * dy)
    }

    fn argmax(&self, next: &Point2, _action: &Move) -> Result<Point2> {
        Ok(*next)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LightDarkReward {
    pub params: LightDarkParams,
}

impl RewardModel<Point2, Move> for LightDarkReward {
    fn expected(&self, state: &Point2, _action: &Move, next: &Point2) -> f64 {
        if !self.params.at_goal(*state) && self.params.at_goal(*next) {
            self.params.goal_reward
        } else {
            self.params.step_reward
        }
    }

    fn range(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.params.step_reward, self.params.goal_reward);
        Some((a.min(b), a.max(b)))
    }
}

/// Start-position density `N(start_mean, start_sigma² I)`.
pub fn start_density(params: &LightDarkParams) -> Result<GaussianDensity> {
    GaussianDensity::isotropic(
        DVector::from_vec(vec![params.start_mean.x, params.start_mean.y]),
        params.start_sigma,
    )
}

/// True start drawn from the start density; the agent holds
/// `params.particles` particles drawn from the same density.
pub fn lightdark_build(
    params: LightDarkParams,
    rng: &mut RandomSource,
) -> Result<Problem<Point2, Move, Point2>> {
    params.validate()?;
    let density = start_density(&params)?;
    let draw = |rng: &mut RandomSource| {
        let v = density.sample(rng);
        Point2::new(v[0], v[1])
    };
    let particles: Vec<Point2> = (0..params.particles).map(|_| draw(rng)).collect();
    let truth = draw(rng);
    let agent = Agent::new(
        Belief::Particles(ParticleBelief::new(particles)?),
        Arc::new(UniformPolicy::new(Move::all())),
        Arc::new(LightDarkTransition { params }),
        Arc::new(LightDarkObservation { params }),
        Arc::new(LightDarkReward { params }),
    );
    let env = Environment::new(
        truth,
        Arc::new(LightDarkTransition { params }),
        Arc::new(LightDarkReward { params }),
    )
    .with_action_space(Move::all());
    Ok(Problem { agent, env })
}
