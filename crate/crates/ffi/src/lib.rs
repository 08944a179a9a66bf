//! C interface to `pomdp-core`.
//!
//! Models are loaded from `.pomdp` text and addressed by index: states,
//! actions and observations are `0..n` in declaration order. A session owns
//! an agent, a simulated environment, a planner and a seeded random stream.
//!
//! Every fallible function returns a [`PomdpStatus`]. On failure the message
//! is available from [`pomdp_last_error_message`] until the next call on the
//! same thread. Handles are opaque; free them with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pomdp_core::beliefs::{BeliefUpdater, ExactUpdater};
use pomdp_core::episode::{agent_update, environment_observe, environment_step};
use pomdp_core::model::{seeded_rng, Discount, RandomSource};
use pomdp_core::pomdp_format::{
    build_pomdp_from_file, parse_pomdp_file, ActionIndex, ObsIndex, PomdpFileModel, StateIndex,
};
use pomdp_core::solvers::{Mcts, MctsParams, Planner, RandomPlanner, ValueIterationPlanner, DEFAULT_VECTOR_CAP};
use pomdp_core::{Agent, Distribution, Environment, Problem};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PomdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    RuntimeError = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Planner used by a session.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PomdpSolver {
    Pouct = 0,
    Pomcp = 1,
    ValueIteration = 2,
    Random = 3,
}

/// Session settings. Zero `simulations`, `max_depth` or `horizon` select
/// 1000, 20 and 3.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PomdpSessionConfig {
    pub solver: PomdpSolver,
    pub simulations: usize,
    pub max_depth: usize,
    pub horizon: usize,
    pub seed: u64,
}

/// Parsed `.pomdp` model.
pub struct PomdpModel {
    model: PomdpFileModel,
}

/// Agent, environment, planner and random stream.
pub struct PomdpSession {
    agent: Agent<StateIndex, ActionIndex, ObsIndex>,
    env: Environment<StateIndex, ActionIndex>,
    planner: Box<dyn Planner<StateIndex, ActionIndex, ObsIndex>>,
    rng: Box<RandomSource>,
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: PomdpStatus, message: impl Into<String>) -> PomdpStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> PomdpStatus) -> PomdpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == PomdpStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(PomdpStatus::Panic, "internal panic"),
    }
}

/// Message describing the last failure on this thread; empty after success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn pomdp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `.pomdp` text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_parse(text: *const c_char, out: *mut *mut PomdpModel) -> PomdpStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            return fail(PomdpStatus::InvalidUtf8, "model text is not UTF-8");
        };
        match parse_pomdp_file(text) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(PomdpModel { model }));
                PomdpStatus::Ok
            }
            Err(e) => fail(PomdpStatus::ParseError, e.to_string()),
        }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`pomdp_model_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_free(model: *mut PomdpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the number of states, actions and observations.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_dimensions(
    model: *const PomdpModel,
    states: *mut usize,
    actions: *mut usize,
    observations: *mut usize,
) -> PomdpStatus {
    guard(|| {
        if model.is_null() || states.is_null() || actions.is_null() || observations.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        let m = &(*model).model;
        *states = m.states.len();
        *actions = m.actions.len();
        *observations = m.observations.len();
        PomdpStatus::Ok
    })
}

/// Writes the model's discount factor.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_model_discount(model: *const PomdpModel, discount: *mut f64) -> PomdpStatus {
    guard(|| {
        if model.is_null() || discount.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        *discount = (*model).model.discount;
        PomdpStatus::Ok
    })
}

fn build_session(model: &PomdpFileModel, config: &PomdpSessionConfig) -> Result<PomdpSession, (PomdpStatus, String)> {
    let invalid = |e: pomdp_core::PomdpError| (PomdpStatus::InvalidArgument, e.to_string());
    let mut rng: Box<RandomSource> = Box::new(seeded_rng(config.seed));
    let built = build_pomdp_from_file(model, rng.as_mut()).map_err(invalid)?;
    let Problem { agent, env } = built.problem;
    let discount = Discount::new(model.discount).map_err(invalid)?;
    let or = |v: usize, d: usize| if v == 0 { d } else { v };
    let params = MctsParams::new(or(config.simulations, 1000), or(config.max_depth, 20), discount);
    let planner: Box<dyn Planner<_, _, _>> = match config.solver {
        PomdpSolver::Pouct => Box::new(Mcts::pouct(params).map_err(invalid)?),
        PomdpSolver::Pomcp => Box::new(Mcts::pomcp(params).map_err(invalid)?),
        PomdpSolver::Random => Box::new(RandomPlanner),
        PomdpSolver::ValueIteration => Box::new(
            ValueIterationPlanner::from_agent(&agent, discount, or(config.horizon, 3), DEFAULT_VECTOR_CAP)
                .map_err(|e| (PomdpStatus::RuntimeError, e.to_string()))?,
        ),
    };
    Ok(PomdpSession {
        agent,
        env,
        planner,
        rng,
        num_states: model.states.len(),
        num_actions: model.actions.len(),
        num_observations: model.observations.len(),
    })
}

/// Creates a session for `model`. The environment's hidden state is drawn
/// from the start belief with the session seed.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_new(
    model: *const PomdpModel,
    config: *const PomdpSessionConfig,
    out: *mut *mut PomdpSession,
) -> PomdpStatus {
    guard(|| {
        if model.is_null() || config.is_null() || out.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        match build_session(&(*model).model, &*config) {
            Ok(session) => {
                *out = Box::into_raw(Box::new(session));
                PomdpStatus::Ok
            }
            Err((status, message)) => fail(status, message),
        }
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must come from [`pomdp_session_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_free(session: *mut PomdpSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Plans from the current belief and writes the chosen action index.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_plan(session: *mut PomdpSession, action: *mut usize) -> PomdpStatus {
    guard(|| {
        if session.is_null() || action.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        let s = &mut *session;
        match s.planner.plan(&s.agent, s.rng.as_mut()) {
            Ok(a) => {
                *action = a.0;
                PomdpStatus::Ok
            }
            Err(e) => fail(PomdpStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Executes `action` in the simulated environment and writes the emitted
/// observation and reward. The belief is unchanged; call
/// [`pomdp_session_update`] next.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_step(
    session: *mut PomdpSession,
    action: usize,
    observation: *mut usize,
    reward: *mut f64,
) -> PomdpStatus {
    guard(|| {
        if session.is_null() || observation.is_null() || reward.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        let s = &mut *session;
        if action >= s.num_actions {
            return fail(PomdpStatus::InvalidArgument, format!("action {action} out of range"));
        }
        let a = ActionIndex(action);
        let r = match environment_step(&mut s.env, &a, s.rng.as_mut()) {
            Ok(r) => r,
            Err(e) => return fail(PomdpStatus::RuntimeError, e.to_string()),
        };
        let model = match s.agent.observation_model() {
            Ok(m) => m.clone(),
            Err(e) => return fail(PomdpStatus::RuntimeError, e.to_string()),
        };
        *observation = environment_observe(&s.env, model.as_ref(), &a, s.rng.as_mut()).0;
        *reward = r;
        PomdpStatus::Ok
    })
}

/// Updates the agent's belief and the planner with a real action and
/// observation.
///
/// # Safety
/// `session` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_update(session: *mut PomdpSession, action: usize, observation: usize) -> PomdpStatus {
    guard(|| {
        if session.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        let s = &mut *session;
        if action >= s.num_actions || observation >= s.num_observations {
            return fail(PomdpStatus::InvalidArgument, "action or observation out of range");
        }
        let (a, o) = (ActionIndex(action), ObsIndex(observation));
        let result = if s.planner.updates_belief() {
            s.planner.update(&mut s.agent, &a, &o, s.rng.as_mut()).map(|_| {
                s.agent.record(a, o);
            })
        } else {
            let updater: &dyn BeliefUpdater<_, _, _> = &ExactUpdater;
            agent_update(&mut s.agent, &a, &o, updater, s.rng.as_mut())
                .and_then(|_| s.planner.update(&mut s.agent, &a, &o, s.rng.as_mut()).map(|_| ()))
        };
        match result {
            Ok(()) => PomdpStatus::Ok,
            Err(e) => fail(PomdpStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Writes the belief probability of every state into `out[0..len]`.
/// `len` must be at least the number of states.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_belief(session: *const PomdpSession, out: *mut f64, len: usize) -> PomdpStatus {
    guard(|| {
        if session.is_null() || out.is_null() {
            return fail(PomdpStatus::NullPointer, "null argument");
        }
        let s = &*session;
        if len < s.num_states {
            return fail(
                PomdpStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", s.num_states),
            );
        }
        let belief = s.agent.belief();
        let values = std::slice::from_raw_parts_mut(out, s.num_states);
        for (i, v) in values.iter_mut().enumerate() {
            *v = belief.probability(&StateIndex(i));
        }
        PomdpStatus::Ok
    })
}

/// Number of real steps recorded in the agent's history.
///
/// # Safety
/// `session` must be valid or null (null yields 0).
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_history_len(session: *const PomdpSession) -> usize {
    if session.is_null() {
        0
    } else {
        (*session).agent.history().len()
    }
}

/// Whether the environment has reached a terminal state.
///
/// # Safety
/// `session` must be valid or null (null yields false).
#[no_mangle]
pub unsafe extern "C" fn pomdp_session_is_terminal(session: *const PomdpSession) -> bool {
    !session.is_null() && (*session).env.is_terminal()
}
