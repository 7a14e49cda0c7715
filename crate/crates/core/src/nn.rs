//! Actor-critic MLP on a flat `f64` parameter vector.
//!
//! The network is a shared tanh trunk with a linear policy head (one logit
//! per action) and a linear value head. Parameters live in one contiguous
//! vector so that merge arithmetic, optimizers, and serialization never need
//! to know the layer structure. Layout: trunk layers in order, then policy
//! head, then value head; within a layer all weights (row-major, one row per
//! output unit) followed by all biases.

use rand::distributions::Uniform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathutil::log_softmax;
use crate::ppo::{LossConfig, RolloutBatch};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
}

/// Named network sizes. Hidden layer count and width per preset:
/// small 1x64, medium 4x120, large 6x384.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetPreset {
    Small,
    Medium,
    Large,
}

impl NetPreset {
    pub fn hidden(self) -> (usize, usize) {
        match self {
            NetPreset::Small => (1, 64),
            NetPreset::Medium => (4, 120),
            NetPreset::Large => (6, 384),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetPreset::Small => "small",
            NetPreset::Medium => "medium",
            NetPreset::Large => "large",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "small" => Ok(NetPreset::Small),
            "medium" => Ok(NetPreset::Medium),
            "large" => Ok(NetPreset::Large),
            other => Err(Error::invalid(format!("unknown net preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub action_dim: usize,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden_layers: usize,
        hidden_units: usize,
        action_dim: usize,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_layers == 0 || hidden_units == 0 || action_dim == 0 {
            return Err(Error::invalid("MlpSpec dimensions must all be positive"));
        }
        Ok(MlpSpec {
            input_dim,
            hidden_layers,
            hidden_units,
            action_dim,
            activation: Activation::Tanh,
        })
    }

    pub fn preset(preset: NetPreset, input_dim: usize, action_dim: usize) -> Result<Self> {
        let (layers, units) = preset.hidden();
        MlpSpec::new(input_dim, layers, units, action_dim)
    }

    /// (fan_in, fan_out) for every affine map: trunk layers, policy head,
    /// value head, in parameter-layout order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 2);
        let mut fan_in = self.input_dim;
        for _ in 0..self.hidden_layers {
            dims.push((fan_in, self.hidden_units));
            fan_in = self.hidden_units;
        }
        dims.push((fan_in, self.action_dim));
        dims.push((fan_in, 1));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(fi, fo)| (fi + 1) * fo).sum()
    }
}

/// Flat parameter vector. Always the exact length of the owning spec's
/// `param_count`; callers validate on entry to every op.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Flat gradient vector, same layout and length as the parameter vector it
/// was computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Self {
        GradientVector(values)
    }

    pub fn zeros(len: usize) -> Self {
        GradientVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Deterministic init: weights uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)]
/// drawn in layout order from a ChaCha8 stream, biases zero.
pub fn init_params(spec: &MlpSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(spec.param_count());
    for (fan_in, fan_out) in spec.layer_dims() {
        let bound = (1.0 / fan_in as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        for _ in 0..fan_in * fan_out {
            out.push(rng.sample(dist));
        }
        out.extend(std::iter::repeat_n(0.0, fan_out));
    }
    ParamVector(out)
}

#[derive(Debug, Clone, Copy)]
struct LayerOffsets {
    w: usize,
    b: usize,
    fan_in: usize,
    fan_out: usize,
}

fn layer_offsets(spec: &MlpSpec) -> Vec<LayerOffsets> {
    let mut offs = Vec::with_capacity(spec.hidden_layers + 2);
    let mut cursor = 0;
    for (fan_in, fan_out) in spec.layer_dims() {
        offs.push(LayerOffsets {
            w: cursor,
            b: cursor + fan_in * fan_out,
            fan_in,
            fan_out,
        });
        cursor += (fan_in + 1) * fan_out;
    }
    offs
}

fn affine(params: &[f64], off: &LayerOffsets, input: &[f64], out: &mut [f64]) {
    debug_assert_eq!(input.len(), off.fan_in);
    debug_assert_eq!(out.len(), off.fan_out);
    for (j, o) in out.iter_mut().enumerate() {
        let row = &params[off.w + j * off.fan_in..off.w + (j + 1) * off.fan_in];
        let mut acc = params[off.b + j];
        for (w, x) in row.iter().zip(input.iter()) {
            acc += w * x;
        }
        *o = acc;
    }
}

fn check_forward_inputs(params: &ParamVector, spec: &MlpSpec, obs: &[f64]) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(Error::ShapeMismatch {
            what: "parameter vector",
            expected: spec.param_count(),
            actual: params.len(),
        });
    }
    if obs.len() != spec.input_dim {
        return Err(Error::ShapeMismatch {
            what: "observation",
            expected: spec.input_dim,
            actual: obs.len(),
        });
    }
    Ok(())
}

/// Full forward pass: returns (policy logits, state value).
pub fn forward(params: &ParamVector, spec: &MlpSpec, obs: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_forward_inputs(params, spec, obs)?;
    let offs = layer_offsets(spec);
    let p = params.values();

    let mut act = obs.to_vec();
    for off in &offs[..spec.hidden_layers] {
        let mut z = vec![0.0; off.fan_out];
        affine(p, off, &act, &mut z);
        for v in z.iter_mut() {
            *v = v.tanh();
        }
        act = z;
    }

    let pol = &offs[spec.hidden_layers];
    let mut logits = vec![0.0; pol.fan_out];
    affine(p, pol, &act, &mut logits);

    let val = &offs[spec.hidden_layers + 1];
    let mut value = [0.0];
    affine(p, val, &act, &mut value);

    Ok((logits, value[0]))
}

/// Forward pass that keeps every post-activation for backprop.
/// acts[0] is the observation, acts[i] the output of trunk layer i.
struct Trace {
    acts: Vec<Vec<f64>>,
    logits: Vec<f64>,
    value: f64,
}

fn forward_trace(p: &[f64], spec: &MlpSpec, offs: &[LayerOffsets], obs: &[f64]) -> Trace {
    let mut acts = Vec::with_capacity(spec.hidden_layers + 1);
    acts.push(obs.to_vec());
    for off in &offs[..spec.hidden_layers] {
        let mut z = vec![0.0; off.fan_out];
        affine(p, off, acts.last().unwrap(), &mut z);
        for v in z.iter_mut() {
            *v = v.tanh();
        }
        acts.push(z);
    }

    let pol = &offs[spec.hidden_layers];
    let mut logits = vec![0.0; pol.fan_out];
    affine(p, pol, acts.last().unwrap(), &mut logits);

    let val = &offs[spec.hidden_layers + 1];
    let mut value = [0.0];
    affine(p, val, acts.last().unwrap(), &mut value);

    Trace {
        acts,
        logits,
        value: value[0],
    }
}

/// Accumulates one affine layer's gradient and propagates into `d_input`.
fn backprop_affine(
    p: &[f64],
    off: &LayerOffsets,
    input: &[f64],
    d_out: &[f64],
    grad: &mut [f64],
    d_input: &mut [f64],
) {
    for (j, &g) in d_out.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        let row = off.w + j * off.fan_in;
        for (i, &x) in input.iter().enumerate() {
            grad[row + i] += g * x;
        }
        grad[off.b + j] += g;
        let w_row = &p[row..row + off.fan_in];
        for (d, &w) in d_input.iter_mut().zip(w_row.iter()) {
            *d += g * w;
        }
    }
}

/// Gradient of the combined clipped-surrogate objective over a batch:
///
///   loss = mean(-min(r A, clip(r, 1-eps, 1+eps) A))
///        + value_coef * mean((V - returns)^2)
///        - entropy_coef * mean(H)
///
/// Returns (loss, gradient). The clip branch uses the subgradient that is
/// zero whenever the clipped term is the active minimum, matching the
/// piecewise definition exactly away from the kink.
pub fn backward(
    params: &ParamVector,
    spec: &MlpSpec,
    batch: &RolloutBatch,
    cfg: &LossConfig,
) -> Result<(f64, GradientVector)> {
    batch.validate(spec.input_dim, spec.action_dim)?;
    if batch.advantages.len() != batch.len() || batch.returns.len() != batch.len() {
        return Err(Error::invalid(
            "rollout batch is missing advantages/returns; run GAE first",
        ));
    }
    if params.len() != spec.param_count() {
        return Err(Error::ShapeMismatch {
            what: "parameter vector",
            expected: spec.param_count(),
            actual: params.len(),
        });
    }
    if !params.all_finite() {
        return Err(Error::NonFinite("parameter vector"));
    }

    let offs = layer_offsets(spec);
    let p = params.values();
    let t_count = batch.len() as f64;
    let clip_lo = 1.0 - cfg.clip_epsilon;
    let clip_hi = 1.0 + cfg.clip_epsilon;

    let mut grad = vec![0.0; spec.param_count()];
    let mut policy_sum = 0.0;
    let mut value_sum = 0.0;
    let mut entropy_sum = 0.0;

    let mut d_logits = vec![0.0; spec.action_dim];
    for t in 0..batch.len() {
        let trace = forward_trace(p, spec, &offs, batch.obs(t));
        let logp = log_softmax(&trace.logits);
        let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();

        let action = batch.actions[t];
        let adv = batch.advantages[t];
        let ratio = (logp[action] - batch.old_log_probs[t]).exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(clip_lo, clip_hi) * adv;
        policy_sum += -unclipped.min(clipped);
        // d(-min)/d logit flows through the ratio only when the unclipped
        // surrogate is the active minimum.
        let pg = if unclipped <= clipped {
            ratio * adv
        } else {
            0.0
        };

        let entropy = -probs
            .iter()
            .zip(logp.iter())
            .map(|(&pr, &l)| if pr > 0.0 { pr * l } else { 0.0 })
            .sum::<f64>();
        entropy_sum += entropy;

        let diff = trace.value - batch.returns[t];
        value_sum += diff * diff;
        let d_value = 2.0 * cfg.value_coef * diff / t_count;

        for j in 0..spec.action_dim {
            let onehot = if j == action { 1.0 } else { 0.0 };
            let d_policy = -pg * (onehot - probs[j]);
            let d_entropy = probs[j] * (logp[j] + entropy);
            d_logits[j] = (d_policy + cfg.entropy_coef * d_entropy) / t_count;
        }

        let top = trace.acts.len() - 1;
        let mut d_act = vec![0.0; trace.acts[top].len()];
        backprop_affine(
            p,
            &offs[spec.hidden_layers],
            &trace.acts[top],
            &d_logits,
            &mut grad,
            &mut d_act,
        );
        backprop_affine(
            p,
            &offs[spec.hidden_layers + 1],
            &trace.acts[top],
            &[d_value],
            &mut grad,
            &mut d_act,
        );

        for layer in (0..spec.hidden_layers).rev() {
            let a = &trace.acts[layer + 1];
            let mut d_z = d_act;
            for (d, &av) in d_z.iter_mut().zip(a.iter()) {
                *d *= 1.0 - av * av;
            }
            let mut d_prev = vec![0.0; trace.acts[layer].len()];
            backprop_affine(
                p,
                &offs[layer],
                &trace.acts[layer],
                &d_z,
                &mut grad,
                &mut d_prev,
            );
            d_act = d_prev;
        }
    }

    let loss = policy_sum / t_count + cfg.value_coef * value_sum / t_count
        - cfg.entropy_coef * entropy_sum / t_count;
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    let grad = GradientVector(grad);
    if !grad.all_finite() {
        return Err(Error::NonFinite("gradient"));
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    Sgd,
    Adam,
}

impl OptimKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimKind::Sgd => "sgd",
            OptimKind::Adam => "adam",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sgd" => Ok(OptimKind::Sgd),
            "adam" => Ok(OptimKind::Adam),
            other => Err(Error::invalid(format!("unknown optimizer '{other}'"))),
        }
    }
}

/// Optimizer carry-over between rounds. Adam keeps first/second moment
/// estimates and the step counter used for bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OptimizerState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: u64 },
}

impl OptimizerState {
    pub fn new(kind: OptimKind, dim: usize) -> Self {
        match kind {
            OptimKind::Sgd => OptimizerState::Sgd,
            OptimKind::Adam => OptimizerState::Adam {
                m: vec![0.0; dim],
                v: vec![0.0; dim],
                t: 0,
            },
        }
    }

    pub fn kind(&self) -> OptimKind {
        match self {
            OptimizerState::Sgd => OptimKind::Sgd,
            OptimizerState::Adam { .. } => OptimKind::Adam,
        }
    }
}

/// One optimizer step. Pure: returns the updated parameters and optimizer
/// state without touching the inputs. SGD is exactly p - lr * g; Adam uses
/// bias-corrected moments with beta1=0.9, beta2=0.999, eps=1e-8.
pub fn apply_gradient(
    params: &ParamVector,
    state: &OptimizerState,
    grad: &GradientVector,
    lr: f64,
) -> Result<(ParamVector, OptimizerState)> {
    if grad.len() != params.len() {
        return Err(Error::ShapeMismatch {
            what: "gradient vector",
            expected: params.len(),
            actual: grad.len(),
        });
    }
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::invalid("learning rate must be finite and positive"));
    }
    if !grad.all_finite() {
        return Err(Error::NonFinite("gradient"));
    }

    let (next, state) = match state {
        OptimizerState::Sgd => {
            let next: Vec<f64> = params
                .values()
                .iter()
                .zip(grad.values().iter())
                .map(|(&p, &g)| p - lr * g)
                .collect();
            (next, OptimizerState::Sgd)
        }
        OptimizerState::Adam { m, v, t } => {
            if m.len() != params.len() {
                return Err(Error::ShapeMismatch {
                    what: "adam state",
                    expected: params.len(),
                    actual: m.len(),
                });
            }
            let t_next = t + 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(t_next as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(t_next as i32);
            let mut m_next = vec![0.0; m.len()];
            let mut v_next = vec![0.0; v.len()];
            let mut next = vec![0.0; params.len()];
            for i in 0..params.len() {
                let g = grad.values()[i];
                m_next[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v_next[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = m_next[i] / bc1;
                let v_hat = v_next[i] / bc2;
                next[i] = params.values()[i] - lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            (
                next,
                OptimizerState::Adam {
                    m: m_next,
                    v: v_next,
                    t: t_next,
                },
            )
        }
    };

    let next = ParamVector(next);
    if !next.all_finite() {
        return Err(Error::NonFinite("updated parameters"));
    }
    Ok((next, state))
}
