//! Synchronous parameter-server runtime.
//!
//! Round r: the server broadcasts parameters, every worker collects a fixed
//! window of experience and answers with a report, the server validates the
//! full set of reports, merges, and steps the optimizer. Workers run in
//! parallel but the merge folds contributions in worker-id order, so a round
//! is a pure function of (state, reports) and whole runs replay exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::mathutil::{mean, mix_seed};
use crate::merge::{
    actor_merge, fedavg_params, merge_avg, merge_sum, strategy_weights, weighted_merge, ActorMode,
    StrategyKind,
};
use crate::metrics::ema_update;
use crate::nn::{apply_gradient, init_params, MlpSpec, OptimKind, OptimizerState, ParamVector};
use crate::ppo::{
    fill_gae, normalize_advantages, ActionSelect, AgentReport, Collector, LossConfig,
};

/// Spread between the base seeds of consecutive runs; workers within a run
/// offset from the run seed.
pub const RUN_SEED_STRIDE: u64 = 1_000_003;

/// Server -> worker broadcast at the start of a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerToWorker {
    pub round: usize,
    pub params: ParamVector,
}

/// Worker -> server reply. `local_params` is only populated by federated
/// averaging workers; everyone else contributes through `report.gradient`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerToServer {
    pub worker_id: usize,
    pub round: usize,
    pub report: AgentReport,
    pub local_params: Option<ParamVector>,
}

/// Parameter replicas held by the server. Most strategies share one global
/// vector; actor strategies keep one diverging replica per agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Replicas {
    Global {
        params: ParamVector,
        opt: OptimizerState,
    },
    PerAgent {
        params: Vec<ParamVector>,
        opts: Vec<OptimizerState>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub kind: StrategyKind,
    pub k: usize,
    pub h: f64,
    pub lr: f64,
    pub round: usize,
    pub l_use_magnitude: bool,
    pub replicas: Replicas,
}

impl ServerState {
    pub fn new(
        kind: StrategyKind,
        k: usize,
        h: f64,
        optim: OptimKind,
        lr: f64,
        init: ParamVector,
        l_use_magnitude: bool,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("server needs at least one worker"));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("h must be finite and positive"));
        }
        let dim = init.len();
        let replicas = if kind.is_per_agent() {
            Replicas::PerAgent {
                params: vec![init; k],
                opts: (0..k).map(|_| OptimizerState::new(optim, dim)).collect(),
            }
        } else {
            Replicas::Global {
                params: init,
                opt: OptimizerState::new(optim, dim),
            }
        };
        Ok(ServerState {
            kind,
            k,
            h,
            lr,
            round: 0,
            l_use_magnitude,
            replicas,
        })
    }

    /// Parameters the given worker should start the current round from.
    pub fn params_for(&self, worker_id: usize) -> &ParamVector {
        match &self.replicas {
            Replicas::Global { params, .. } => params,
            Replicas::PerAgent { params, .. } => &params[worker_id],
        }
    }

    pub fn broadcast(&self, worker_id: usize) -> ServerToWorker {
        ServerToWorker {
            round: self.round,
            params: self.params_for(worker_id).clone(),
        }
    }
}

/// Per-round merge byproducts for logging.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInfo {
    /// Per-agent weights for weighted strategies, None otherwise.
    pub weights: Option<Vec<f64>>,
    /// L2 norm of the merged update: the merged gradient for gradient
    /// strategies, the shared base term for actor strategies, and the
    /// parameter delta for federated averaging.
    pub grad_norm: f64,
}

fn validate_reports(state: &ServerState, msgs: &[WorkerToServer]) -> Result<()> {
    if msgs.len() != state.k {
        return Err(Error::invalid(format!(
            "expected {} worker reports, got {}",
            state.k,
            msgs.len()
        )));
    }
    let dim = state.params_for(0).len();
    for (i, m) in msgs.iter().enumerate() {
        if m.worker_id != i {
            return Err(Error::invalid(format!(
                "reports out of order: slot {i} holds worker {}",
                m.worker_id
            )));
        }
        if m.round != state.round {
            return Err(Error::invalid(format!(
                "worker {i} answered round {} during round {}",
                m.round, state.round
            )));
        }
        if m.report.gradient.len() != dim {
            return Err(Error::ShapeMismatch {
                what: "reported gradient",
                expected: dim,
                actual: m.report.gradient.len(),
            });
        }
        if !m.report.gradient.all_finite()
            || !m.report.avg_reward.is_finite()
            || !m.report.avg_loss.is_finite()
        {
            return Err(Error::NonFinite("worker report"));
        }
        match (state.kind, &m.local_params) {
            (StrategyKind::FedAvg, None) => {
                return Err(Error::invalid(format!(
                    "fedavg worker {i} did not send local parameters"
                )));
            }
            (StrategyKind::FedAvg, Some(p)) => {
                if p.len() != dim {
                    return Err(Error::ShapeMismatch {
                        what: "local parameters",
                        expected: dim,
                        actual: p.len(),
                    });
                }
                if !p.all_finite() {
                    return Err(Error::NonFinite("local parameters"));
                }
            }
            (_, Some(_)) => {
                return Err(Error::invalid(format!(
                    "worker {i} sent local parameters under a gradient strategy"
                )));
            }
            (_, None) => {}
        }
    }
    Ok(())
}

/// One server round: validate the complete report set, merge, update the
/// replicas, advance the round counter. Pure in (state, msgs).
pub fn run_round(state: &ServerState, msgs: &[WorkerToServer]) -> Result<(ServerState, RoundInfo)> {
    validate_reports(state, msgs)?;

    let grads: Vec<_> = msgs.iter().map(|m| m.report.gradient.clone()).collect();
    let rewards: Vec<f64> = msgs.iter().map(|m| m.report.avg_reward).collect();
    let losses: Vec<f64> = msgs.iter().map(|m| m.report.avg_loss).collect();

    let mut next = state.clone();
    next.round += 1;

    let info = match state.kind {
        StrategyKind::FedAvg => {
            let locals: Vec<ParamVector> = msgs
                .iter()
                .map(|m| m.local_params.clone().expect("validated above"))
                .collect();
            let merged = fedavg_params(&locals)?;
            let (old, opt) = match state.replicas {
                Replicas::Global {
                    ref params,
                    ref opt,
                } => (params, opt.clone()),
                Replicas::PerAgent { .. } => unreachable!("fedavg uses a global replica"),
            };
            let delta: f64 = merged
                .values()
                .iter()
                .zip(old.values())
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            next.replicas = Replicas::Global {
                params: merged,
                opt,
            };
            RoundInfo {
                weights: None,
                grad_norm: delta,
            }
        }
        StrategyKind::ActorSum | StrategyKind::ActorAvg => {
            let mode = if state.kind == StrategyKind::ActorSum {
                ActorMode::Sum
            } else {
                ActorMode::Avg
            };
            let base = match mode {
                ActorMode::Sum => merge_sum(&grads)?,
                ActorMode::Avg => merge_avg(&grads)?,
            };
            let outs = actor_merge(&grads, mode)?;
            let (params, opts) = match state.replicas {
                Replicas::PerAgent {
                    ref params,
                    ref opts,
                } => (params, opts),
                Replicas::Global { .. } => unreachable!("actor strategies use per-agent replicas"),
            };
            let mut new_params = Vec::with_capacity(state.k);
            let mut new_opts = Vec::with_capacity(state.k);
            for i in 0..state.k {
                let (p, o) = apply_gradient(&params[i], &opts[i], &outs[i], state.lr)?;
                new_params.push(p);
                new_opts.push(o);
            }
            next.replicas = Replicas::PerAgent {
                params: new_params,
                opts: new_opts,
            };
            RoundInfo {
                weights: None,
                grad_norm: base.norm(),
            }
        }
        _ => {
            let weights = strategy_weights(
                state.kind,
                &rewards,
                &losses,
                state.h,
                state.l_use_magnitude,
            )?;
            let merged = match (&weights, state.kind) {
                (Some(w), _) => weighted_merge(&grads, w)?,
                (None, StrategyKind::BaselineSum) => merge_sum(&grads)?,
                (None, StrategyKind::BaselineAvg) => merge_avg(&grads)?,
                (None, other) => unreachable!("unhandled global strategy {other:?}"),
            };
            let (params, opt) = match state.replicas {
                Replicas::Global {
                    ref params,
                    ref opt,
                } => (params, opt),
                Replicas::PerAgent { .. } => {
                    unreachable!("gradient strategies use a global replica")
                }
            };
            let norm = merged.norm();
            let (p, o) = apply_gradient(params, opt, &merged, state.lr)?;
            next.replicas = Replicas::Global { params: p, opt: o };
            RoundInfo {
                weights: weights.map(|w| w.into_vec()),
                grad_norm: norm,
            }
        }
    };

    Ok((next, info))
}

/// Local training loop for a federated averaging worker: `epochs` optimizer
/// steps starting from the broadcast parameters, returning the final local
/// parameters. With `frozen_batch` one window is collected up front and
/// re-evaluated every epoch; otherwise each epoch collects a fresh window at
/// the current local parameters.
#[allow(clippy::too_many_arguments)]
pub fn local_train_fedavg(
    collector: &mut Collector,
    start: &ParamVector,
    spec: &MlpSpec,
    cfg: &LossConfig,
    n_steps: usize,
    epochs: usize,
    frozen_batch: bool,
    optim: OptimKind,
    lr: f64,
    normalize: bool,
    mode: ActionSelect,
) -> Result<(ParamVector, AgentReport)> {
    if epochs == 0 {
        return Err(Error::invalid("fedavg needs at least one local epoch"));
    }

    let mut params = start.clone();
    let mut opt = OptimizerState::new(optim, start.len());
    let mut losses = Vec::with_capacity(epochs);
    let mut all_returns = Vec::new();
    let mut episodes = 0;
    let mut timesteps = 0;

    let mut frozen = None;
    if frozen_batch {
        let mut out = collector.collect_rollout(&params, spec, n_steps, mode)?;
        fill_gae(&mut out.batch, cfg.gamma, cfg.gae_lambda)?;
        if normalize {
            normalize_advantages(&mut out.batch);
        }
        episodes += out.completed_returns.len();
        all_returns.extend(out.completed_returns);
        timesteps += n_steps;
        frozen = Some(out.batch);
    }

    for _ in 0..epochs {
        let (loss, grad) = match &frozen {
            Some(batch) => crate::nn::backward(&params, spec, batch, cfg)?,
            None => {
                let mut out = collector.collect_rollout(&params, spec, n_steps, mode)?;
                fill_gae(&mut out.batch, cfg.gamma, cfg.gae_lambda)?;
                if normalize {
                    normalize_advantages(&mut out.batch);
                }
                episodes += out.completed_returns.len();
                all_returns.extend(out.completed_returns);
                timesteps += n_steps;
                crate::nn::backward(&params, spec, &out.batch, cfg)?
            }
        };
        losses.push(loss);
        let (p, o) = apply_gradient(&params, &opt, &grad, lr)?;
        params = p;
        opt = o;
    }

    let avg_reward = if all_returns.is_empty() {
        collector.partial_return()
    } else {
        mean(&all_returns)
    };
    let report = AgentReport {
        // Gradient slot carries the last local step's gradient for logging;
        // the merge consumes local_params instead.
        gradient: crate::nn::GradientVector::zeros(start.len()),
        avg_reward,
        avg_loss: mean(&losses),
        timesteps,
        episodes_completed: episodes,
    };
    Ok((params, report))
}

/// Per-agent slice of a round record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRoundStat {
    pub reward: f64,
    pub loss: f64,
    pub weight: Option<f64>,
}

/// One row of the per-run training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub run_id: usize,
    pub round: usize,
    pub cumulative_episodes: usize,
    pub mean_reward: f64,
    pub ema_reward: f64,
    pub mean_loss: f64,
    pub grad_norm: f64,
    pub agents: Vec<AgentRoundStat>,
}

/// A training failure that keeps the rounds finished before the abort.
#[derive(Debug)]
pub struct TrainError {
    pub records: Vec<RoundRecord>,
    pub source: Error,
}

impl std::fmt::Display for TrainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "training aborted after {} completed rounds: {}",
            self.records.len(),
            self.source
        )
    }
}

impl std::error::Error for TrainError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

struct WorkerState {
    id: usize,
    collector: Collector,
}

impl WorkerState {
    fn execute(
        &mut self,
        cfg: &ExperimentConfig,
        spec: &MlpSpec,
        msg: &ServerToWorker,
    ) -> Result<WorkerToServer> {
        let wrap = |e: Error| Error::WorkerFailed {
            worker_id: self.id,
            round: msg.round,
            source: Box::new(e),
        };
        let (report, local_params) = if cfg.strategy == StrategyKind::FedAvg {
            let (params, report) = local_train_fedavg(
                &mut self.collector,
                &msg.params,
                spec,
                &cfg.loss,
                cfg.steps_per_round,
                cfg.fedavg_local_epochs,
                cfg.fedavg_frozen_batch,
                cfg.optimizer.kind,
                cfg.optimizer.learning_rate,
                cfg.normalize_advantages,
                ActionSelect::Sample,
            )
            .map_err(wrap)?;
            (report, Some(params))
        } else {
            let report = crate::ppo::worker_round(
                &mut self.collector,
                &msg.params,
                spec,
                &cfg.loss,
                cfg.steps_per_round,
                cfg.normalize_advantages,
                ActionSelect::Sample,
            )
            .map_err(wrap)?;
            (report, None)
        };
        Ok(WorkerToServer {
            worker_id: self.id,
            round: msg.round,
            report,
            local_params,
        })
    }
}

/// Environment for one worker of one run. Worker environments use
/// consecutive seeds above the run seed; the sampling stream is decorrelated
/// through a mixer.
fn make_worker(cfg: &ExperimentConfig, run_seed: u64, worker_id: usize) -> Result<WorkerState> {
    let env: Env = cfg.make_env(run_seed.wrapping_add(worker_id as u64))?;
    let sample_seed = mix_seed(run_seed, worker_id as u64);
    Ok(WorkerState {
        id: worker_id,
        collector: Collector::new(env, sample_seed),
    })
}

/// Runs one seeded training run to completion: `cfg.rounds` synchronous
/// rounds with `cfg.k` workers. Returns every round record, or the partial
/// records alongside the abort error.
pub fn run_training(
    cfg: &ExperimentConfig,
    run_id: usize,
) -> std::result::Result<Vec<RoundRecord>, TrainError> {
    let fail = |records: Vec<RoundRecord>, source: Error| TrainError { records, source };

    let spec = match cfg.net_spec() {
        Ok(s) => s,
        Err(e) => return Err(fail(Vec::new(), e)),
    };
    let run_seed = cfg
        .seed_base
        .wrapping_add(RUN_SEED_STRIDE.wrapping_mul(run_id as u64));

    let init = init_params(&spec, run_seed);
    let mut server = match ServerState::new(
        cfg.strategy,
        cfg.k,
        cfg.h,
        cfg.optimizer.kind,
        cfg.optimizer.learning_rate,
        init,
        cfg.l_weights_use_magnitude,
    ) {
        Ok(s) => s,
        Err(e) => return Err(fail(Vec::new(), e)),
    };

    let mut workers = Vec::with_capacity(cfg.k);
    for id in 0..cfg.k {
        match make_worker(cfg, run_seed, id) {
            Ok(w) => workers.push(w),
            Err(e) => return Err(fail(Vec::new(), e)),
        }
    }

    let mut records = Vec::with_capacity(cfg.rounds);
    let mut ema = None;
    let mut cumulative_episodes = 0;

    for round in 0..cfg.rounds {
        let broadcasts: Vec<ServerToWorker> = (0..cfg.k).map(|i| server.broadcast(i)).collect();
        let replies: Result<Vec<WorkerToServer>> = workers
            .par_iter_mut()
            .zip(broadcasts.par_iter())
            .map(|(w, msg)| w.execute(cfg, &spec, msg))
            .collect();
        let replies = match replies {
            Ok(r) => r,
            Err(e) => return Err(fail(records, e)),
        };

        let (next, info) = match run_round(&server, &replies) {
            Ok(x) => x,
            Err(e) => return Err(fail(records, e)),
        };
        server = next;

        let rewards: Vec<f64> = replies.iter().map(|m| m.report.avg_reward).collect();
        let losses: Vec<f64> = replies.iter().map(|m| m.report.avg_loss).collect();
        let mean_reward = mean(&rewards);
        ema = Some(ema_update(ema, mean_reward));
        cumulative_episodes += replies
            .iter()
            .map(|m| m.report.episodes_completed)
            .sum::<usize>();

        let agents = replies
            .iter()
            .enumerate()
            .map(|(i, m)| AgentRoundStat {
                reward: m.report.avg_reward,
                loss: m.report.avg_loss,
                weight: info.weights.as_ref().map(|w| w[i]),
            })
            .collect();

        records.push(RoundRecord {
            run_id,
            round,
            cumulative_episodes,
            mean_reward,
            ema_reward: ema.unwrap(),
            mean_loss: mean(&losses),
            grad_norm: info.grad_norm,
            agents,
        });
    }

    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::tests::doors_test_config;
    use crate::nn::GradientVector;

    fn msg(worker_id: usize, round: usize, grad: &[f64], reward: f64, loss: f64) -> WorkerToServer {
        WorkerToServer {
            worker_id,
            round,
            report: AgentReport {
                gradient: GradientVector::new(grad.to_vec()),
                avg_reward: reward,
                avg_loss: loss,
                timesteps: 1,
                episodes_completed: 1,
            },
            local_params: None,
        }
    }

    fn sgd_server(kind: StrategyKind, k: usize, init: &[f64]) -> ServerState {
        ServerState::new(
            kind,
            k,
            k as f64,
            OptimKind::Sgd,
            0.5,
            ParamVector::new(init.to_vec()),
            true,
        )
        .unwrap()
    }

    #[test]
    fn baseline_sum_round_steps_global_params() {
        let state = sgd_server(StrategyKind::BaselineSum, 2, &[1.0, 1.0]);
        let msgs = vec![
            msg(0, 0, &[1.0, 0.0], 1.0, 0.1),
            msg(1, 0, &[0.0, 2.0], 2.0, 0.2),
        ];
        let (next, info) = run_round(&state, &msgs).unwrap();
        assert_eq!(next.round, 1);
        assert_eq!(info.weights, None);
        assert!((info.grad_norm - (1.0f64 + 4.0).sqrt()).abs() < 1e-12);
        match next.replicas {
            Replicas::Global { params, .. } => {
                // p - 0.5 * (g0 + g1) elementwise.
                assert_eq!(params.values(), &[0.5, 0.0]);
            }
            _ => panic!("expected global replica"),
        }
    }

    #[test]
    fn weighted_round_records_weights_summing_to_two() {
        let state = sgd_server(StrategyKind::RWeighted, 2, &[0.0, 0.0]);
        let msgs = vec![
            msg(0, 0, &[1.0, 0.0], 3.0, 0.1),
            msg(1, 0, &[0.0, 1.0], 1.0, 0.2),
        ];
        let (_, info) = run_round(&state, &msgs).unwrap();
        let w = info.weights.unwrap();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(w[0] > w[1]);
    }

    #[test]
    fn actor_round_keeps_replicas_diverging() {
        let state = sgd_server(StrategyKind::ActorAvg, 2, &[0.0]);
        let msgs = vec![msg(0, 0, &[2.0], 1.0, 0.0), msg(1, 0, &[0.0], 1.0, 0.0)];
        let (next, info) = run_round(&state, &msgs).unwrap();
        match next.replicas {
            Replicas::PerAgent { params, .. } => {
                // base = 1.0; replica i steps by -(base + g_i) * lr.
                assert_eq!(params[0].values(), &[-1.5]);
                assert_eq!(params[1].values(), &[-0.5]);
            }
            _ => panic!("expected per-agent replicas"),
        }
        assert!((info.grad_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fedavg_round_replaces_params_with_mean() {
        let state = sgd_server(StrategyKind::FedAvg, 2, &[0.0, 0.0]);
        let mut m0 = msg(0, 0, &[0.0, 0.0], 1.0, 0.0);
        m0.local_params = Some(ParamVector::new(vec![1.0, 3.0]));
        let mut m1 = msg(1, 0, &[0.0, 0.0], 1.0, 0.0);
        m1.local_params = Some(ParamVector::new(vec![3.0, 5.0]));
        let (next, info) = run_round(&state, &[m0, m1]).unwrap();
        match next.replicas {
            Replicas::Global { params, .. } => assert_eq!(params.values(), &[2.0, 4.0]),
            _ => panic!("expected global replica"),
        }
        // Delta norm from (0,0) to (2,4).
        assert!((info.grad_norm - 20.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn run_round_validates_report_set() {
        let state = sgd_server(StrategyKind::BaselineSum, 2, &[0.0]);
        // Too few reports.
        assert!(run_round(&state, &[msg(0, 0, &[1.0], 1.0, 0.0)]).is_err());
        // Out of order.
        let swapped = vec![msg(1, 0, &[1.0], 1.0, 0.0), msg(0, 0, &[1.0], 1.0, 0.0)];
        assert!(run_round(&state, &swapped).is_err());
        // Stale round.
        let stale = vec![msg(0, 1, &[1.0], 1.0, 0.0), msg(1, 1, &[1.0], 1.0, 0.0)];
        assert!(run_round(&state, &stale).is_err());
        // Wrong gradient length.
        let bad = vec![
            msg(0, 0, &[1.0, 2.0], 1.0, 0.0),
            msg(1, 0, &[1.0], 1.0, 0.0),
        ];
        assert!(run_round(&state, &bad).is_err());
        // Non-finite statistic.
        let nan = vec![
            msg(0, 0, &[1.0], f64::NAN, 0.0),
            msg(1, 0, &[1.0], 1.0, 0.0),
        ];
        assert!(run_round(&state, &nan).is_err());
        // Unexpected local params under a gradient strategy.
        let mut extra = vec![msg(0, 0, &[1.0], 1.0, 0.0), msg(1, 0, &[1.0], 1.0, 0.0)];
        extra[1].local_params = Some(ParamVector::new(vec![0.0]));
        assert!(run_round(&state, &extra).is_err());
    }

    #[test]
    fn messages_serialize_round_trip() {
        let b = ServerToWorker {
            round: 3,
            params: ParamVector::new(vec![1.5, -2.0]),
        };
        let js = serde_json::to_string(&b).unwrap();
        assert_eq!(serde_json::from_str::<ServerToWorker>(&js).unwrap(), b);

        let m = msg(1, 3, &[0.25], -1.0, 0.5);
        let js = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<WorkerToServer>(&js).unwrap(), m);
    }

    #[test]
    fn run_training_is_deterministic_and_counts_rounds() {
        let cfg = doors_test_config(StrategyKind::RWeighted, 2, 3, 32);
        let a = run_training(&cfg, 0).unwrap();
        let b = run_training(&cfg, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        for (i, rec) in a.iter().enumerate() {
            assert_eq!(rec.round, i);
            assert_eq!(rec.agents.len(), 2);
            assert!(rec.agents.iter().all(|s| s.weight.is_some()));
        }
        assert!(a[0].cumulative_episodes <= a[2].cumulative_episodes);
        let c = run_training(&cfg, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn run_training_ema_follows_round_means() {
        let cfg = doors_test_config(StrategyKind::BaselineAvg, 2, 4, 32);
        let recs = run_training(&cfg, 0).unwrap();
        assert_eq!(recs[0].ema_reward, recs[0].mean_reward);
        let expect = 0.9 * recs[0].ema_reward + 0.1 * recs[1].mean_reward;
        assert!((recs[1].ema_reward - expect).abs() < 1e-12);
        for rec in &recs {
            assert!(rec.agents.iter().all(|s| s.weight.is_none()));
        }
    }

    #[test]
    fn run_training_flushes_partial_records_on_divergence() {
        let mut cfg = doors_test_config(StrategyKind::BaselineSum, 2, 50, 16);
        cfg.optimizer.kind = OptimKind::Sgd;
        cfg.optimizer.learning_rate = 1e30;
        let err = run_training(&cfg, 0).unwrap_err();
        assert!(err.records.len() < 50, "should abort early");
        assert!(err.to_string().contains("training aborted"));
    }

    #[test]
    fn fedavg_training_round_smoke() {
        let mut cfg = doors_test_config(StrategyKind::FedAvg, 2, 2, 32);
        cfg.fedavg_local_epochs = 2;
        let recs = run_training(&cfg, 0).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.grad_norm.is_finite()));
    }
}
