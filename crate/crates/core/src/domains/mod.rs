//! Reference domains and the registry the command-line harness reads.

pub mod lightdark;
pub mod mos;
pub mod tiger;

use std::collections::BTreeMap;

use crate::error::{PomdpError, Result};

pub use lightdark::{lightdark_build, LightDarkParams, Move, Point2};
pub use mos::{mos_build, FanSensor, Heading, MosAction, MosInstance, MosParams, Pose, TargetRelocation};
pub use tiger::{tiger_build, TigerAction, TigerObservation, TigerParams, TigerState};

/// Domain parameter overrides, `name -> value` as text.
pub type ParamMap = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

#[derive(Debug, Clone, Copy)]
pub struct DomainInfo {
    pub id: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamSpec],
    pub solvers: &'static [&'static str],
    pub beliefs: &'static [&'static str],
    pub default_belief: &'static str,
}

const fn p(name: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { name, default, help }
}

pub const DOMAINS: &[DomainInfo] = &[
    DomainInfo {
        id: "tiger",
        description: "two doors, one tiger; listen or open",
        params: &[
            p("accuracy", "0.85", "probability a growl comes from the tiger's side"),
            p("listen_reward", "-1", "reward for listening"),
            p("correct_door_reward", "10", "reward for opening the tiger-free door"),
            p("wrong_door_reward", "-100", "reward for opening the tiger's door"),
        ],
        solvers: &["pouct", "pomcp", "vi", "random"],
        beliefs: &["exact", "particles-reject", "particles-weighted"],
        default_belief: "exact",
    },
    DomainInfo {
        id: "mos2d",
        description: "grid multi-object search with a fan-shaped sensor (object-oriented)",
        params: &[
            p("width", "5", "grid width"),
            p("height", "5", "grid height"),
            p("n_objects", "2", "number of static targets"),
            p("fov", "90", "sensor field of view in degrees"),
            p("range", "3", "sensor range in cells"),
            p("false_negative", "0", "probability an in-fan target is missed on look"),
            p("step_reward", "-1", "reward for every non-find action"),
            p("find_reward", "1000", "reward per newly found target"),
            p("wrong_find_reward", "-1000", "reward for a find that marks nothing"),
        ],
        solvers: &["pouct", "pomcp", "random"],
        beliefs: &["exact", "particles-reject", "particles-weighted"],
        default_belief: "exact",
    },
    DomainInfo {
        id: "lightdark",
        description: "continuous 2-D navigation with light-dependent observation noise",
        params: &[
            p("light_x", "5", "x coordinate of the light"),
            p("goal_x", "0", "goal x"),
            p("goal_y", "0", "goal y"),
            p("goal_radius", "0.5", "radius of the goal disc"),
            p("sigma_min", "0.1", "observation noise at the light"),
            p("k", "0.5", "noise growth per unit of horizontal distance"),
            p("step_reward", "-1", "reward per step"),
            p("goal_reward", "100", "reward for entering the goal"),
            p("start_x", "2", "mean start x"),
            p("start_y", "2", "mean start y"),
            p("start_sigma", "1", "standard deviation of the start position"),
        ],
        solvers: &["pouct", "random"],
        beliefs: &["particles-weighted"],
        default_belief: "particles-weighted",
    },
];

pub fn domain_info(id: &str) -> Option<&'static DomainInfo> {
    DOMAINS.iter().find(|d| d.id == id)
}

pub fn domain_ids() -> Vec<&'static str> {
    DOMAINS.iter().map(|d| d.id).collect()
}

/// Reads typed values out of a [`ParamMap`], rejecting unknown names.
struct Reader<'a> {
    info: &'static DomainInfo,
    map: &'a ParamMap,
}

impl<'a> Reader<'a> {
    fn new(id: &str, map: &'a ParamMap) -> Result<Self> {
        let info = domain_info(id)
            .ok_or_else(|| PomdpError::Parameter(format!("unknown domain {id}")))?;
        if let Some(bad) = map.keys().find(|k| !info.params.iter().any(|s| s.name == *k)) {
            let known: Vec<&str> = info.params.iter().map(|s| s.name).collect();
            return Err(PomdpError::Parameter(format!(
                "unknown parameter {bad} for domain {id} (known: {})",
                known.join(", ")
            )));
        }
        Ok(Self { info, map })
    }

    fn get<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let spec = self
            .info
            .params
            .iter()
            .find(|s| s.name == name)
            .expect("parameter declared in registry");
        let raw = self.map.get(name).map_or(spec.default, String::as_str);
        raw.trim().parse().map_err(|_| {
            PomdpError::Parameter(format!("parameter {name}: cannot parse {raw:?}"))
        })
    }
}

pub fn tiger_params(map: &ParamMap) -> Result<TigerParams> {
    let r = Reader::new("tiger", map)?;
    let params = TigerParams {
        listen_reward: r.get("listen_reward")?,
        correct_door_reward: r.get("correct_door_reward")?,
        wrong_door_reward: r.get("wrong_door_reward")?,
        accuracy: r.get("accuracy")?,
    };
    params.validate()?;
    Ok(params)
}

pub fn mos_params(map: &ParamMap) -> Result<MosParams> {
    let r = Reader::new("mos2d", map)?;
    let params = MosParams {
        width: r.get("width")?,
        height: r.get("height")?,
        n_objects: r.get("n_objects")?,
        sensor: FanSensor {
            fov_degrees: r.get("fov")?,
            range: r.get("range")?,
        },
        false_negative: r.get("false_negative")?,
        step_reward: r.get("step_reward")?,
        find_reward: r.get("find_reward")?,
        wrong_find_reward: r.get("wrong_find_reward")?,
    };
    params.validate()?;
    Ok(params)
}

/// Light-dark parameters; `particles` sets the initial belief size.
pub fn lightdark_params(map: &ParamMap, particles: usize) -> Result<LightDarkParams> {
    let r = Reader::new("lightdark", map)?;
    let params = LightDarkParams {
        light_x: r.get("light_x")?,
        goal: Point2::new(r.get("goal_x")?, r.get("goal_y")?),
        goal_radius: r.get("goal_radius")?,
        sigma_min: r.get("sigma_min")?,
        k: r.get("k")?,
        step_reward: r.get("step_reward")?,
        goal_reward: r.get("goal_reward")?,
        start_mean: Point2::new(r.get("start_x")?, r.get("start_y")?),
        start_sigma: r.get("start_sigma")?,
        particles,
    };
    params.validate()?;
    Ok(params)
}
