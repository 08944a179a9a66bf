//! Build and solve partially observable Markov decision processes.
//!
//! The crate separates the *agent* (belief, history, models, planner) from
//! the *environment* (true state and ground-truth dynamics) and keeps every
//! model behind a small generative interface: `probability`, `sample`, and
//! optionally `argmax` and enumeration. Planners include PO-UCT, POMCP and
//! exact value iteration; beliefs include histograms, particle sets and
//! Gaussian densities. Object-oriented factored models, three reference
//! domains and a `.pomdp` file parser are provided on top.

pub mod agent;
pub mod beliefs;
pub mod cli;
pub mod domains;
pub mod episode;
pub mod error;
pub mod model;
pub mod oopomdp;
pub mod pomdp_format;
pub mod solvers;

pub use agent::{Agent, Environment, Problem};
pub use beliefs::{Belief, Distribution, HistogramBelief, ParticleBelief};
pub use episode::{run_episode, EpisodeLog};
pub use error::{PomdpError, Result};
pub use model::{seeded_rng, Discount, History};
pub use solvers::{Mcts, MctsParams, Planner};
