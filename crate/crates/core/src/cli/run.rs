use std::fs;
use std::io::Write;
use std::sync::Arc;

use serde_json::{json, Value};

use super::config::{BeliefKind, DomainSource, RunConfig, SolverKind, DEFAULT_GAMMA};
use super::CliError;
use crate::agent::{Agent, Problem};
use crate::beliefs::{
    Belief, BeliefUpdater, ExactUpdater, KeepBelief, RejectionUpdater, StatePerturbation, WeightedUpdater,
};
use crate::domains::{
    domain_info, lightdark_build, lightdark_params, mos_build, mos_params, tiger_build, tiger_params,
    TargetRelocation,
};
use crate::episode::{run_episode, Never};
use crate::model::{seeded_rng, Action, Discount, Observation, State};
use crate::pomdp_format::{build_pomdp_from_file, parse_pomdp_file};
use crate::solvers::{AlphaVector, Budget, Mcts, MctsParams, Planner, RandomPlanner, ValueIterationPlanner};

struct EpisodeSetup<S, A, O> {
    problem: Problem<S, A, O>,
    /// Used unless the planner maintains the belief itself.
    updater: Box<dyn BeliefUpdater<S, A, O>>,
    /// Refills depleted particle sets; identity when absent.
    perturbation: Option<Arc<dyn StatePerturbation<S>>>,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn generic_updater<S: State, A: Action, O: Observation>(
    kind: BeliefKind,
    particles: usize,
    perturbation: Option<Arc<dyn StatePerturbation<S>>>,
) -> Box<dyn BeliefUpdater<S, A, O>> {
    match kind {
        BeliefKind::Exact => Box::new(ExactUpdater),
        BeliefKind::ParticlesReject => {
            let updater = RejectionUpdater::new(particles);
            Box::new(match perturbation {
                Some(p) => updater.with_reinvigoration(p),
                None => updater,
            })
        }
        BeliefKind::ParticlesWeighted => Box::new(WeightedUpdater {
            particle_count: particles,
        }),
    }
}

/// Runs `cfg.episodes` seeded episodes, writing one JSON line per episode and
/// a closing summary. Episode `i` uses seed `cfg.seed + i` for both problem
/// construction and the control loop.
///
/// On a runtime failure the records already written stay in `out`, followed by
/// an `error` record.
pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.check()?;
    match &cfg.source {
        DomainSource::Registered(id) => {
            let belief = cfg.belief.unwrap_or_else(|| {
                let info = domain_info(id).expect("checked");
                BeliefKind::parse(info.default_belief).expect("registry names are valid")
            });
            let gamma = Discount::new(cfg.gamma.unwrap_or(DEFAULT_GAMMA)).map_err(usage)?;
            match id.as_str() {
                "tiger" => {
                    let params = tiger_params(&cfg.params).map_err(usage)?;
                    drive(cfg, id, belief, gamma, out, |rng| {
                        Ok(EpisodeSetup {
                            problem: tiger_build(params.clone(), rng).map_err(runtime)?,
                            updater: generic_updater(belief, cfg.particles, None),
                            perturbation: None,
                        })
                    })
                }
                "mos2d" => {
                    let params = mos_params(&cfg.params).map_err(usage)?;
                    drive(cfg, id, belief, gamma, out, |rng| {
                        let instance = mos_build(params.clone(), rng).map_err(runtime)?;
                        let relocation: Arc<dyn StatePerturbation<_>> = Arc::new(TargetRelocation {
                            width: params.width,
                            height: params.height,
                        });
                        let updater: Box<dyn BeliefUpdater<_, _, _>> = match belief {
                            BeliefKind::Exact => Box::new(instance.models.exact_updater()),
                            other => generic_updater(other, cfg.particles, Some(relocation.clone())),
                        };
                        Ok(EpisodeSetup {
                            problem: instance.problem,
                            updater,
                            perturbation: Some(relocation),
                        })
                    })
                }
                "lightdark" => {
                    let params = lightdark_params(&cfg.params, cfg.particles).map_err(usage)?;
                    drive(cfg, id, belief, gamma, out, |rng| {
                        Ok(EpisodeSetup {
                            problem: lightdark_build(params.clone(), rng).map_err(runtime)?,
                            updater: generic_updater(belief, cfg.particles, None),
                            perturbation: None,
                        })
                    })
                }
                other => Err(CliError::Usage(format!("unknown domain {other:?}"))),
            }
        }
        DomainSource::File(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let model = parse_pomdp_file(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let gamma = Discount::new(cfg.gamma.unwrap_or(model.discount)).map_err(usage)?;
            let belief = cfg.belief.unwrap_or(BeliefKind::Exact);
            let label = path.display().to_string();
            drive(cfg, &label, belief, gamma, out, |rng| {
                Ok(EpisodeSetup {
                    problem: build_pomdp_from_file(&model, rng).map_err(runtime)?.problem,
                    updater: generic_updater(belief, cfg.particles, None),
                    perturbation: None,
                })
            })
        }
    }
}

fn make_planner<S: State, A: Action, O: Observation>(
    cfg: &RunConfig,
    agent: &Agent<S, A, O>,
    gamma: Discount,
    perturbation: Option<Arc<dyn StatePerturbation<S>>>,
    vi_cache: &mut Option<(Vec<S>, Vec<AlphaVector<A>>)>,
) -> Result<Box<dyn Planner<S, A, O>>, CliError> {
    let mcts_params = || {
        let mut params = MctsParams::new(cfg.sims, cfg.depth, gamma);
        if let Some(budget) = cfg.time_budget {
            params.budget = Budget::Time(budget);
        }
        params.exploration = cfg.ucb_c;
        params.num_particles = cfg.particles;
        params
    };
    Ok(match cfg.solver {
        SolverKind::Pouct => Box::new(Mcts::pouct(mcts_params()).map_err(usage)?),
        SolverKind::Pomcp => {
            let planner = Mcts::pomcp(mcts_params()).map_err(usage)?;
            Box::new(match perturbation {
                Some(p) => planner.with_perturbation(p),
                None => planner,
            })
        }
        SolverKind::Random => Box::new(RandomPlanner),
        SolverKind::Vi => {
            if vi_cache.is_none() {
                let solved = ValueIterationPlanner::from_agent(agent, gamma, cfg.horizon, cfg.vector_cap)
                    .map_err(runtime)?;
                *vi_cache = Some((solved.states().to_vec(), solved.alphas().to_vec()));
            }
            let (states, alphas) = vi_cache.clone().expect("filled above");
            Box::new(ValueIterationPlanner::new(states, alphas))
        }
    })
}

fn write_line(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    writeln!(out, "{value}")
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Runtime(format!("write failed: {e}")))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn drive<S, A, O, F>(
    cfg: &RunConfig,
    label: &str,
    belief: BeliefKind,
    gamma: Discount,
    out: &mut dyn Write,
    mut build: F,
) -> Result<(), CliError>
where
    S: State,
    A: Action,
    O: Observation,
    F: FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<EpisodeSetup<S, A, O>, CliError>,
{
    let mut vi_cache = None;
    let mut discounted = Vec::with_capacity(cfg.episodes);
    let mut undiscounted = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let mut rng = seeded_rng(cfg.seed.wrapping_add(episode as u64));
        let result = (|| -> Result<Value, (usize, CliError)> {
            let fail = |e: CliError| (0, e);
            let EpisodeSetup {
                problem,
                updater,
                perturbation,
            } = build(&mut rng).map_err(fail)?;
            let Problem { mut agent, mut env } = problem;
            let mut planner = make_planner(cfg, &agent, gamma, perturbation, &mut vi_cache).map_err(fail)?;
            let particle_belief = matches!(belief, BeliefKind::ParticlesReject | BeliefKind::ParticlesWeighted);
            if particle_belief && !planner.updates_belief() {
                let particles = agent.belief().to_particles(cfg.particles, &mut rng).map_err(|e| fail(runtime(e)))?;
                agent.set_belief(Belief::Particles(particles));
            }
            let updater: Box<dyn BeliefUpdater<S, A, O>> =
                if planner.updates_belief() { Box::new(KeepBelief) } else { updater };
            let log = run_episode(
                &mut agent,
                &mut env,
                planner.as_mut(),
                updater.as_ref(),
                &Never,
                cfg.max_steps,
                gamma,
                &mut rng,
            )
            .map_err(|aborted| (aborted.log.len(), runtime(aborted.error)))?;

            let recorded = log.discounted_return();
            let recomputed = log.recompute_discounted_return();
            if recorded.to_bits() != recomputed.to_bits() {
                return Err((
                    log.len(),
                    CliError::Runtime(format!(
                        "discounted return mismatch: recorded {recorded}, recomputed {recomputed}"
                    )),
                ));
            }
            let mut record = json!({
                "type": "episode",
                "episode": episode,
                "steps": log.len(),
                "discounted_return": recorded,
                "undiscounted_return": log.undiscounted_return(),
                "tree_resets": log.steps.iter().filter(|s| s.tree_reset).count(),
            });
            if cfg.record_timing {
                let times: Vec<f64> = log.steps.iter().map(|s| s.plan_time.as_secs_f64() * 1e3).collect();
                record["plan_ms"] = json!(times);
            }
            Ok(record)
        })();

        match result {
            Ok(record) => {
                discounted.push(record["discounted_return"].as_f64().unwrap_or(f64::NAN));
                undiscounted.push(record["undiscounted_return"].as_f64().unwrap_or(f64::NAN));
                write_line(out, &record)?;
            }
            Err((steps, error)) => {
                write_line(
                    out,
                    &json!({
                        "type": "error",
                        "episode": episode,
                        "steps_completed": steps,
                        "message": error.to_string(),
                    }),
                )?;
                return Err(error);
            }
        }
    }

    let (mean_d, std_d) = mean_std(&discounted);
    let (mean_u, std_u) = mean_std(&undiscounted);
    write_line(
        out,
        &json!({
            "type": "summary",
            "domain": label,
            "solver": cfg.solver.name(),
            "belief": belief.name(),
            "seed": cfg.seed,
            "count": discounted.len(),
            "mean_discounted_return": mean_d,
            "std_discounted_return": std_d,
            "mean_undiscounted_return": mean_u,
            "std_undiscounted_return": std_u,
        }),
    )
}
