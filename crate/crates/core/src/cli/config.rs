use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;

use super::{CliError, RunArgs};
use crate::domains::{domain_info, ParamMap};
use crate::solvers::DEFAULT_VECTOR_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Pouct,
    Pomcp,
    Vi,
    Random,
}

impl SolverKind {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "pouct" => Ok(Self::Pouct),
            "pomcp" => Ok(Self::Pomcp),
            "vi" => Ok(Self::Vi),
            "random" => Ok(Self::Random),
            other => Err(CliError::Usage(format!(
                "unknown solver {other:?} (expected pouct, pomcp, vi or random)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Pouct => "pouct",
            Self::Pomcp => "pomcp",
            Self::Vi => "vi",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefKind {
    Exact,
    ParticlesReject,
    ParticlesWeighted,
}

impl BeliefKind {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "exact" => Ok(Self::Exact),
            "particles-reject" => Ok(Self::ParticlesReject),
            "particles-weighted" => Ok(Self::ParticlesWeighted),
            other => Err(CliError::Usage(format!(
                "unknown belief {other:?} (expected exact, particles-reject or particles-weighted)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::ParticlesReject => "particles-reject",
            Self::ParticlesWeighted => "particles-weighted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DomainSource {
    Registered(String),
    File(PathBuf),
}

/// Settings accepted in a `--config` TOML file. Keys mirror the long flags
/// with underscores; domain parameters go in a `[params]` table.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub domain: Option<String>,
    pub file: Option<PathBuf>,
    pub solver: Option<String>,
    pub episodes: Option<usize>,
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
    pub sims: Option<usize>,
    pub time_budget_ms: Option<u64>,
    pub depth: Option<usize>,
    pub ucb_c: Option<f64>,
    pub gamma: Option<f64>,
    pub belief: Option<String>,
    pub particles: Option<usize>,
    pub horizon: Option<usize>,
    pub out: Option<PathBuf>,
    pub record_timing: Option<bool>,
    pub params: Option<BTreeMap<String, toml::Value>>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }
}

/// Fully resolved `run` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: DomainSource,
    pub params: ParamMap,
    pub solver: SolverKind,
    /// `None` selects the domain's default updater.
    pub belief: Option<BeliefKind>,
    pub episodes: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub sims: usize,
    pub time_budget: Option<Duration>,
    pub depth: usize,
    pub ucb_c: Option<f64>,
    /// `None` uses 0.95 for registered domains and the file's discount otherwise.
    pub gamma: Option<f64>,
    pub particles: usize,
    pub horizon: usize,
    pub vector_cap: u128,
    pub out: Option<PathBuf>,
    pub record_timing: bool,
}

pub const DEFAULT_GAMMA: f64 = 0.95;

impl RunConfig {
    /// Defaults for a registered domain; seed is required elsewhere.
    pub fn for_domain(domain: &str, solver: SolverKind, seed: u64) -> Self {
        Self {
            source: DomainSource::Registered(domain.to_string()),
            params: ParamMap::new(),
            solver,
            belief: None,
            episodes: 1,
            max_steps: 100,
            seed,
            sims: 1000,
            time_budget: None,
            depth: 20,
            ucb_c: None,
            gamma: None,
            particles: 1000,
            horizon: 3,
            vector_cap: DEFAULT_VECTOR_CAP,
            out: None,
            record_timing: false,
        }
    }

    /// Merges `--config` (if any) under the flags and checks the result.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                FileConfig::from_toml(&text)?
            }
            None => FileConfig::default(),
        };

        let domain = args.domain.clone().or(file.domain);
        let path = args.file.clone().or(file.file);
        let source = match (domain, path) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either --domain or --file, not both".into())),
            (Some(d), None) => DomainSource::Registered(d),
            (None, Some(p)) => DomainSource::File(p),
            (None, None) => return Err(CliError::Usage("one of --domain or --file is required".into())),
        };
        let seed = args
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::Usage("--seed is required".into()))?;
        let solver = SolverKind::parse(args.solver.as_deref().or(file.solver.as_deref()).unwrap_or("pouct"))?;

        let mut cfg = Self::for_domain("", solver, seed);
        cfg.source = source;

        let mut params = ParamMap::new();
        for (k, v) in file.params.unwrap_or_default() {
            let text = match v {
                toml::Value::String(s) => s,
                other => other.to_string(),
            };
            params.insert(k, text);
        }
        for kv in &args.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--param expects NAME=VALUE, got {kv:?}")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        cfg.params = params;

        if let Some(b) = args.belief.as_deref().or(file.belief.as_deref()) {
            cfg.belief = Some(BeliefKind::parse(b)?);
        }
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = args.$field.clone().or(file.$field) {
                    cfg.$field = v;
                }
            };
        }
        take!(episodes);
        take!(max_steps);
        take!(sims);
        take!(depth);
        take!(particles);
        take!(horizon);
        cfg.ucb_c = args.ucb_c.or(file.ucb_c);
        cfg.gamma = args.gamma.or(file.gamma);
        cfg.time_budget = args.time_budget_ms.or(file.time_budget_ms).map(Duration::from_millis);
        cfg.out = args.out.clone().or(file.out);
        cfg.record_timing = args.record_timing || file.record_timing.unwrap_or(false);
        cfg.check()?;
        Ok(cfg)
    }

    /// Rejects settings the selected domain or solver cannot honour.
    pub fn check(&self) -> Result<(), CliError> {
        if self.sims == 0 && self.time_budget.is_none() {
            return Err(CliError::Usage("--sims must be at least 1".into()));
        }
        if self.time_budget == Some(Duration::ZERO) {
            return Err(CliError::Usage("--time-budget-ms must be positive".into()));
        }
        if self.particles == 0 {
            return Err(CliError::Usage("--particles must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(CliError::Usage("--horizon must be at least 1".into()));
        }
        if let Some(c) = self.ucb_c {
            if !(c.is_finite() && c >= 0.0) {
                return Err(CliError::Usage(format!("--ucb-c must be finite and non-negative, got {c}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(CliError::Usage(format!("--gamma must lie in [0, 1), got {g}")));
            }
        }
        match &self.source {
            DomainSource::Registered(id) => {
                let info = domain_info(id).ok_or_else(|| {
                    CliError::Usage(format!(
                        "unknown domain {id:?} (known: {})",
                        crate::domains::domain_ids().join(", ")
                    ))
                })?;
                if !info.solvers.contains(&self.solver.name()) {
                    return Err(CliError::Usage(format!(
                        "solver {} is not available for {id} (available: {})",
                        self.solver.name(),
                        info.solvers.join(", ")
                    )));
                }
                if let Some(b) = self.belief {
                    if !info.beliefs.contains(&b.name()) {
                        return Err(CliError::Usage(format!(
                            "belief {} is not available for {id} (available: {})",
                            b.name(),
                            info.beliefs.join(", ")
                        )));
                    }
                }
            }
            DomainSource::File(_) => {
                if !self.params.is_empty() {
                    return Err(CliError::Usage("--param applies to registered domains only".into()));
                }
            }
        }
        if self.solver == SolverKind::Vi && self.belief.is_some_and(|b| b != BeliefKind::Exact) {
            return Err(CliError::Usage("the vi solver needs the exact belief".into()));
        }
        Ok(())
    }
}
