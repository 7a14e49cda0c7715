//! Clipped-surrogate policy gradient pieces: rollout storage, generalized
//! advantage estimation, the loss, and the per-round worker routine.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::mathutil::{log_softmax, mean};
use crate::nn::{self, GradientVector, MlpSpec, ParamVector};

/// Loss hyperparameters. Defaults: clip 0.2, value coefficient 0.5, entropy
/// coefficient 0.01, gamma 0.99, lambda 0.95.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub clip_epsilon: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            gamma: 0.99,
            gae_lambda: 0.95,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::invalid("clip_epsilon must be in (0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::invalid("gamma must be in (0, 1]"));
        }
        if !(self.gae_lambda >= 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::invalid("gae_lambda must be in [0, 1]"));
        }
        if !(self.value_coef.is_finite() && self.value_coef >= 0.0) {
            return Err(Error::invalid("value_coef must be non-negative"));
        }
        if !(self.entropy_coef.is_finite() && self.entropy_coef >= 0.0) {
            return Err(Error::invalid("entropy_coef must be non-negative"));
        }
        Ok(())
    }
}

/// Fixed-length slice of experience. Observations are stored flattened
/// (`len * obs_dim`). `advantages` and `returns` are empty until GAE runs.
/// `bootstrap_value` is V(s_T) for the state following the last stored step,
/// used to close the advantage recursion when the batch ends mid-episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub bootstrap_value: f64,
}

impl RolloutBatch {
    pub fn with_capacity(obs_dim: usize, steps: usize) -> Self {
        RolloutBatch {
            obs_dim,
            observations: Vec::with_capacity(steps * obs_dim),
            actions: Vec::with_capacity(steps),
            old_log_probs: Vec::with_capacity(steps),
            rewards: Vec::with_capacity(steps),
            values: Vec::with_capacity(steps),
            dones: Vec::with_capacity(steps),
            advantages: Vec::new(),
            returns: Vec::new(),
            bootstrap_value: 0.0,
        }
    }

    pub fn push_step(
        &mut self,
        obs: &[f64],
        action: usize,
        old_log_prob: f64,
        reward: f64,
        value: f64,
        done: bool,
    ) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        self.observations.extend_from_slice(obs);
        self.actions.push(action);
        self.old_log_probs.push(old_log_prob);
        self.rewards.push(reward);
        self.values.push(value);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn obs(&self, t: usize) -> &[f64] {
        &self.observations[t * self.obs_dim..(t + 1) * self.obs_dim]
    }

    /// Structural checks shared by loss and gradient entry points.
    pub fn validate(&self, input_dim: usize, action_dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyInput("rollout batch"));
        }
        if self.obs_dim != input_dim {
            return Err(Error::ShapeMismatch {
                what: "batch observation dim",
                expected: input_dim,
                actual: self.obs_dim,
            });
        }
        let n = self.len();
        if self.observations.len() != n * self.obs_dim
            || self.old_log_probs.len() != n
            || self.rewards.len() != n
            || self.values.len() != n
            || self.dones.len() != n
        {
            return Err(Error::invalid("rollout batch field lengths disagree"));
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= action_dim) {
            return Err(Error::InvalidAction {
                action: a,
                space: action_dim,
            });
        }
        let finite = self.observations.iter().all(|v| v.is_finite())
            && self.old_log_probs.iter().all(|v| v.is_finite())
            && self.rewards.iter().all(|v| v.is_finite())
            && self.values.iter().all(|v| v.is_finite())
            && self.bootstrap_value.is_finite();
        if !finite {
            return Err(Error::NonFinite("rollout batch"));
        }
        Ok(())
    }
}

/// Raw generalized advantage estimation:
///
///   delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
///   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
///
/// with V(s_T) = bootstrap_value, and returns_t = A_t + V(s_t). Writes
/// `advantages`/`returns`; no normalization here.
pub fn fill_gae(batch: &mut RolloutBatch, gamma: f64, lambda: f64) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("rollout batch"));
    }
    let n = batch.len();
    batch.advantages.clear();
    batch.advantages.resize(n, 0.0);
    batch.returns.clear();
    batch.returns.resize(n, 0.0);

    let mut carry = 0.0;
    for t in (0..n).rev() {
        let not_done = if batch.dones[t] { 0.0 } else { 1.0 };
        let next_value = if t + 1 < n {
            batch.values[t + 1]
        } else {
            batch.bootstrap_value
        };
        let delta = batch.rewards[t] + gamma * next_value * not_done - batch.values[t];
        carry = delta + gamma * lambda * not_done * carry;
        batch.advantages[t] = carry;
        batch.returns[t] = carry + batch.values[t];
    }
    Ok(())
}

/// Rescales advantages in place to zero mean and unit variance. A batch with
/// (numerically) constant advantages just gets centered.
pub fn normalize_advantages(batch: &mut RolloutBatch) {
    let n = batch.advantages.len();
    if n == 0 {
        return;
    }
    let mean = batch.advantages.iter().sum::<f64>() / n as f64;
    let var = batch
        .advantages
        .iter()
        .map(|a| (a - mean) * (a - mean))
        .sum::<f64>()
        / n as f64;
    let std = var.sqrt();
    for a in batch.advantages.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

/// GAE followed by per-batch advantage normalization.
pub fn compute_gae(batch: &mut RolloutBatch, gamma: f64, lambda: f64) -> Result<()> {
    fill_gae(batch, gamma, lambda)?;
    normalize_advantages(batch);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Forward-only evaluation of the combined objective and its components:
/// total = policy + value_coef * value - entropy_coef * entropy, where
/// `value` is the raw mean squared error and `entropy` the mean policy
/// entropy.
pub fn ppo_loss(
    params: &ParamVector,
    spec: &MlpSpec,
    batch: &RolloutBatch,
    cfg: &LossConfig,
) -> Result<LossComponents> {
    batch.validate(spec.input_dim, spec.action_dim)?;
    if batch.advantages.len() != batch.len() || batch.returns.len() != batch.len() {
        return Err(Error::invalid(
            "rollout batch is missing advantages/returns; run GAE first",
        ));
    }

    let clip_lo = 1.0 - cfg.clip_epsilon;
    let clip_hi = 1.0 + cfg.clip_epsilon;
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;

    for t in 0..batch.len() {
        let (logits, value) = nn::forward(params, spec, batch.obs(t))?;
        let logp = log_softmax(&logits);
        let ratio = (logp[batch.actions[t]] - batch.old_log_probs[t]).exp();
        let adv = batch.advantages[t];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(clip_lo, clip_hi) * adv;
        policy_sum += -unclipped.min(clipped);
        entropy_sum += -logp
            .iter()
            .map(|&l| {
                let p = l.exp();
                if p > 0.0 {
                    p * l
                } else {
                    0.0
                }
            })
            .sum::<f64>();
        let diff = value - batch.returns[t];
        value_sum += diff * diff;
    }

    let n = batch.len() as f64;
    let policy = policy_sum / n;
    let value = value_sum / n;
    let entropy = entropy_sum / n;
    let total = policy + cfg.value_coef * value - cfg.entropy_coef * entropy;
    if !total.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(LossComponents {
        total,
        policy,
        value,
        entropy,
    })
}

/// What a worker sends the server after one round of experience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReport {
    pub gradient: GradientVector,
    /// Mean return of episodes completed this round (running return of the
    /// open episode when none completed).
    pub avg_reward: f64,
    pub avg_loss: f64,
    pub timesteps: usize,
    pub episodes_completed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSelect {
    /// Sample from the softmax policy (training).
    Sample,
    /// Always take the argmax action (debugging/evaluation).
    Greedy,
}

/// Outcome of one collection window.
#[derive(Debug, Clone)]
pub struct CollectOutcome {
    pub batch: RolloutBatch,
    /// Total returns of episodes that finished inside the window.
    pub completed_returns: Vec<f64>,
    /// Episodes started inside the window (including the very first episode
    /// on a fresh collector).
    pub episodes_begun: usize,
}

/// Owns one worker's environment, sampling RNG, and episode carry-over so
/// consecutive windows stitch into one continuous stream of experience.
#[derive(Debug, Clone)]
pub struct Collector {
    env: Env,
    rng: ChaCha8Rng,
    obs: Option<Vec<f64>>,
    partial_return: f64,
}

impl Collector {
    pub fn new(env: Env, sample_seed: u64) -> Self {
        Collector {
            env,
            rng: ChaCha8Rng::seed_from_u64(sample_seed),
            obs: None,
            partial_return: 0.0,
        }
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    /// Return of the episode currently in progress.
    pub fn partial_return(&self) -> f64 {
        self.partial_return
    }

    /// Runs the policy for exactly `n_steps` environment steps, resetting on
    /// episode boundaries. The final value estimate of the observation after
    /// the last step becomes the batch's bootstrap value.
    pub fn collect_rollout(
        &mut self,
        params: &ParamVector,
        spec: &MlpSpec,
        n_steps: usize,
        mode: ActionSelect,
    ) -> Result<CollectOutcome> {
        if n_steps == 0 {
            return Err(Error::invalid("collect_rollout needs n_steps >= 1"));
        }
        if spec.input_dim != self.env.obs_dim() || spec.action_dim != self.env.action_dim() {
            return Err(Error::invalid(
                "network spec does not match environment dimensions",
            ));
        }

        let mut batch = RolloutBatch::with_capacity(spec.input_dim, n_steps);
        let mut completed = Vec::new();
        let mut begun = 0;

        let mut obs = match self.obs.take() {
            Some(o) => o,
            None => {
                begun += 1;
                self.partial_return = 0.0;
                self.env.reset()
            }
        };

        for _ in 0..n_steps {
            let (logits, value) = nn::forward(params, spec, &obs)?;
            let logp = log_softmax(&logits);
            let action = match mode {
                ActionSelect::Sample => sample_categorical(&mut self.rng, &logp),
                ActionSelect::Greedy => argmax(&logits),
            };
            let step = self.env.step(action)?;
            batch.push_step(&obs, action, logp[action], step.reward, value, step.done);
            self.partial_return += step.reward;
            if step.done {
                completed.push(self.partial_return);
                self.partial_return = 0.0;
                begun += 1;
                obs = self.env.reset();
            } else {
                obs = step.observation;
            }
        }

        let (_, bootstrap) = nn::forward(params, spec, &obs)?;
        batch.bootstrap_value = bootstrap;
        self.obs = Some(obs);

        Ok(CollectOutcome {
            batch,
            completed_returns: completed,
            episodes_begun: begun,
        })
    }
}

fn sample_categorical(rng: &mut ChaCha8Rng, logp: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &l) in logp.iter().enumerate() {
        acc += l.exp();
        if u < acc {
            return i;
        }
    }
    logp.len() - 1
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// One full worker round: collect a fixed window, estimate advantages, and
/// compute the loss gradient at the broadcast parameters.
pub fn worker_round(
    collector: &mut Collector,
    params: &ParamVector,
    spec: &MlpSpec,
    cfg: &LossConfig,
    n_steps: usize,
    normalize: bool,
    mode: ActionSelect,
) -> Result<AgentReport> {
    let mut out = collector.collect_rollout(params, spec, n_steps, mode)?;
    fill_gae(&mut out.batch, cfg.gamma, cfg.gae_lambda)?;
    if normalize {
        normalize_advantages(&mut out.batch);
    }
    let (loss, gradient) = nn::backward(params, spec, &out.batch, cfg)?;

    let avg_reward = if out.completed_returns.is_empty() {
        collector.partial_return()
    } else {
        mean(&out.completed_returns)
    };

    Ok(AgentReport {
        gradient,
        avg_reward,
        avg_loss: loss,
        timesteps: n_steps,
        episodes_completed: out.completed_returns.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::DoorsSpec;
    use crate::nn::{init_params, NetPreset};
    use proptest::prelude::*;

    fn small_spec(input_dim: usize, action_dim: usize) -> MlpSpec {
        MlpSpec::preset(NetPreset::Small, input_dim, action_dim).unwrap()
    }

    fn two_step_batch() -> RolloutBatch {
        let mut b = RolloutBatch::with_capacity(1, 2);
        b.push_step(&[0.0], 0, -0.5, 0.0, 0.0, false);
        b.push_step(&[0.0], 0, -0.5, 1.0, 0.0, true);
        b.bootstrap_value = 0.0;
        b
    }

    #[test]
    fn gae_two_step_hand_recursion() {
        // r=(0,1), V=(0,0), bootstrap 0, gamma=0.99, lambda=0.95:
        // A_1 = 1, A_0 = 0 + 0.99*0.95*1 = 0.9405; returns equal advantages.
        let mut b = two_step_batch();
        fill_gae(&mut b, 0.99, 0.95).unwrap();
        assert!((b.advantages[0] - 0.9405).abs() < 1e-12);
        assert!((b.advantages[1] - 1.0).abs() < 1e-12);
        assert_eq!(b.returns, b.advantages);
    }

    #[test]
    fn gae_gamma_zero_is_td_residual() {
        let mut b = RolloutBatch::with_capacity(1, 3);
        b.push_step(&[0.0], 0, 0.0, 2.0, 0.5, false);
        b.push_step(&[0.0], 0, 0.0, -1.0, 0.25, false);
        b.push_step(&[0.0], 0, 0.0, 3.0, -0.5, true);
        b.bootstrap_value = 9.0;
        fill_gae(&mut b, 0.0, 0.95).unwrap();
        assert_eq!(b.advantages, vec![2.0 - 0.5, -1.0 - 0.25, 3.0 + 0.5]);
    }

    #[test]
    fn gae_done_blocks_bootstrap_and_carry() {
        // Terminal at t=0 must hide both V(s_1) and the t=1 advantage.
        let mut b = RolloutBatch::with_capacity(1, 2);
        b.push_step(&[0.0], 0, 0.0, 1.0, 0.0, true);
        b.push_step(&[0.0], 0, 0.0, 1.0, 0.0, false);
        b.bootstrap_value = 100.0;
        fill_gae(&mut b, 0.99, 0.95).unwrap();
        assert!((b.advantages[0] - 1.0).abs() < 1e-12);
        assert!((b.advantages[1] - (1.0 + 0.99 * 100.0)).abs() < 1e-12);
    }

    #[test]
    fn gae_bootstrap_feeds_last_open_step() {
        let mut b = RolloutBatch::with_capacity(1, 1);
        b.push_step(&[0.0], 0, 0.0, 1.0, 0.5, false);
        b.bootstrap_value = 2.0;
        fill_gae(&mut b, 0.5, 1.0).unwrap();
        assert!((b.advantages[0] - (1.0 + 0.5 * 2.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn normalized_advantages_have_zero_mean_unit_variance() {
        let mut b = RolloutBatch::with_capacity(1, 4);
        for i in 0..4 {
            b.push_step(&[0.0], 0, 0.0, i as f64, 0.0, false);
        }
        fill_gae(&mut b, 0.99, 0.95).unwrap();
        normalize_advantages(&mut b);
        let n = b.advantages.len() as f64;
        let mean: f64 = b.advantages.iter().sum::<f64>() / n;
        let var: f64 = b
            .advantages
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ppo_loss_ratio_one_recovers_advantage_and_entropy() {
        // With zero params the policy is uniform; feeding old_log_probs from
        // the same policy makes every ratio exactly 1, so the policy term is
        // -mean(A) and the entropy is ln(action_dim).
        let spec = small_spec(1, 4);
        let params = ParamVector::zeros(spec.param_count());
        let mut b = RolloutBatch::with_capacity(1, 2);
        let lp = (1.0f64 / 4.0).ln();
        b.push_step(&[1.0], 0, lp, 0.0, 0.0, false);
        b.push_step(&[1.0], 3, lp, 0.0, 0.0, false);
        b.advantages = vec![0.5, -0.25];
        b.returns = vec![1.0, -1.0];
        let cfg = LossConfig::default();
        let out = ppo_loss(&params, &spec, &b, &cfg).unwrap();
        assert!((out.policy - -(0.5 - 0.25) / 2.0).abs() < 1e-12);
        assert!((out.entropy - 4.0f64.ln()).abs() < 1e-12);
        assert!((out.value - 1.0).abs() < 1e-12);
        let total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
        assert!((out.total - total).abs() < 1e-15);
    }

    #[test]
    fn ppo_loss_clips_large_ratios() {
        // old log-prob far below current: ratio >> 1+eps. With positive
        // advantage the clipped branch is the minimum: -(1+eps)*A.
        let spec = small_spec(1, 2);
        let params = ParamVector::zeros(spec.param_count());
        let mut b = RolloutBatch::with_capacity(1, 1);
        b.push_step(&[1.0], 0, (0.5f64).ln() - 3.0, 0.0, 0.0, false);
        b.advantages = vec![2.0];
        b.returns = vec![0.0];
        let out = ppo_loss(&params, &spec, &b, &LossConfig::default()).unwrap();
        assert!((out.policy - -(1.2 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn collector_counts_episodes_and_returns() {
        let spec = small_spec(1, 8);
        let params = init_params(&spec, 0);
        let env = Env::doors(DoorsSpec::default()).unwrap();
        let mut c = Collector::new(env, 123);
        let out = c
            .collect_rollout(&params, &spec, 40, ActionSelect::Sample)
            .unwrap();
        // 40 steps of 16-step episodes: 2 completed, 3 begun (fresh start).
        assert_eq!(out.batch.len(), 40);
        assert_eq!(out.completed_returns.len(), 2);
        assert_eq!(out.episodes_begun, 3);
        // Dones at steps 16 and 32 (indices 15 and 31).
        let done_idx: Vec<usize> = (0..40).filter(|&t| out.batch.dones[t]).collect();
        assert_eq!(done_idx, vec![15, 31]);

        // The next window continues the open episode: 8 steps remain, so one
        // completion and one new start.
        let out2 = c
            .collect_rollout(&params, &spec, 8, ActionSelect::Sample)
            .unwrap();
        assert_eq!(out2.completed_returns.len(), 1);
        assert_eq!(out2.episodes_begun, 1);
    }

    #[test]
    fn collector_is_deterministic_per_seed() {
        let spec = small_spec(4, 2);
        let params = init_params(&spec, 5);
        let run = |seed: u64| {
            let mut c = Collector::new(Env::cartpole(seed), seed + 1000);
            c.collect_rollout(&params, &spec, 64, ActionSelect::Sample)
                .unwrap()
                .batch
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn greedy_mode_always_picks_argmax() {
        let spec = small_spec(1, 8);
        let params = init_params(&spec, 3);
        let (logits, _) = nn::forward(&params, &spec, &[1.0]).unwrap();
        let best = logits
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let env = Env::doors(DoorsSpec::default()).unwrap();
        let mut c = Collector::new(env, 0);
        let out = c
            .collect_rollout(&params, &spec, 10, ActionSelect::Greedy)
            .unwrap();
        assert!(out.batch.actions.iter().all(|&a| a == best));
    }

    #[test]
    fn worker_round_produces_finite_report() {
        let spec = small_spec(4, 2);
        let params = init_params(&spec, 9);
        let mut c = Collector::new(Env::cartpole(1), 2);
        let report = worker_round(
            &mut c,
            &params,
            &spec,
            &LossConfig::default(),
            256,
            true,
            ActionSelect::Sample,
        )
        .unwrap();
        assert_eq!(report.timesteps, 256);
        assert_eq!(report.gradient.len(), spec.param_count());
        assert!(report.gradient.all_finite());
        assert!(report.avg_loss.is_finite());
        assert!(report.avg_reward > 0.0);
        assert!(report.episodes_completed >= 1);
        assert!(report.gradient.norm() > 0.0);
    }

    #[test]
    fn cartpole_window_has_enough_episode_starts() {
        // 4000 steps against a 500-step cap cannot see fewer than 8 starts.
        let spec = small_spec(4, 2);
        let params = init_params(&spec, 0);
        let mut c = Collector::new(Env::cartpole(0), 1);
        let out = c
            .collect_rollout(&params, &spec, 4000, ActionSelect::Sample)
            .unwrap();
        assert!(out.episodes_begun >= 8, "begun={}", out.episodes_begun);
    }

    proptest! {
        #[test]
        fn gae_advantage_plus_value_equals_return(
            (rewards, values) in (1usize..40).prop_flat_map(|n| (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n + 1),
            )),
            gamma in 0.01f64..1.0,
            lambda in 0.0f64..1.0,
            done_every in 2usize..7,
        ) {
            let mut b = RolloutBatch::with_capacity(1, rewards.len());
            for (t, &r) in rewards.iter().enumerate() {
                b.push_step(&[0.0], 0, 0.0, r, values[t], (t + 1) % done_every == 0);
            }
            b.bootstrap_value = values[rewards.len()];
            fill_gae(&mut b, gamma, lambda).unwrap();
            for t in 0..rewards.len() {
                prop_assert!((b.returns[t] - (b.advantages[t] + b.values[t])).abs() < 1e-12);
            }
        }

        #[test]
        fn sampled_actions_are_always_in_range(seed in 0u64..200) {
            let spec = small_spec(1, 8);
            let params = init_params(&spec, seed);
            let env = Env::doors(DoorsSpec::default()).unwrap();
            let mut c = Collector::new(env, seed);
            let out = c.collect_rollout(&params, &spec, 32, ActionSelect::Sample).unwrap();
            prop_assert!(out.batch.actions.iter().all(|&a| a < 8));
        }
    }
}
