//! Gradient merge strategies for the parameter server.
//!
//! All weighted schemes produce one weight per agent and combine the agent
//! gradients as a weighted sum. Weights are a normalized share of the
//! agent's statistic (reward or loss) plus a uniform floor 1/h, so every
//! agent keeps influence:
//!
//!   w_i = s_i / sum(s) + 1/h        sum(w) = 1 + k/h
//!
//! With the default h = k the weights sum to 2. Reward shares shift the
//! statistic by its minimum so negative rewards are legal; loss shares use
//! magnitudes by default, with an optional shifted mode. When the total
//! share mass vanishes the share part falls back to uniform 1/k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathutil::softmax;
use crate::nn::{GradientVector, ParamVector};

/// Share masses below this are treated as zero and trigger the uniform
/// fallback.
pub const SHARE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    BaselineSum,
    BaselineAvg,
    #[serde(rename = "fedavg")]
    FedAvg,
    RWeighted,
    LWeighted,
    RSoftmax,
    LSoftmax,
    ActorSum,
    ActorAvg,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::BaselineSum,
        StrategyKind::BaselineAvg,
        StrategyKind::FedAvg,
        StrategyKind::RWeighted,
        StrategyKind::LWeighted,
        StrategyKind::RSoftmax,
        StrategyKind::LSoftmax,
        StrategyKind::ActorSum,
        StrategyKind::ActorAvg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BaselineSum => "baseline_sum",
            StrategyKind::BaselineAvg => "baseline_avg",
            StrategyKind::FedAvg => "fedavg",
            StrategyKind::RWeighted => "r_weighted",
            StrategyKind::LWeighted => "l_weighted",
            StrategyKind::RSoftmax => "r_softmax",
            StrategyKind::LSoftmax => "l_softmax",
            StrategyKind::ActorSum => "actor_sum",
            StrategyKind::ActorAvg => "actor_avg",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown merge strategy '{name}'")))
    }

    /// Strategies that compute per-agent weights (and report them).
    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            StrategyKind::RWeighted
                | StrategyKind::LWeighted
                | StrategyKind::RSoftmax
                | StrategyKind::LSoftmax
        )
    }

    /// Strategies where every agent keeps its own diverging parameter
    /// replica.
    pub fn is_per_agent(self) -> bool {
        matches!(self, StrategyKind::ActorSum | StrategyKind::ActorAvg)
    }
}

/// Per-agent merge weights, in worker-id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Self {
        WeightVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn check_grads(grads: &[GradientVector]) -> Result<usize> {
    if grads.is_empty() {
        return Err(Error::EmptyInput("gradient list"));
    }
    let dim = grads[0].len();
    for g in grads {
        if g.len() != dim {
            return Err(Error::ShapeMismatch {
                what: "gradient list entry",
                expected: dim,
                actual: g.len(),
            });
        }
        if !g.all_finite() {
            return Err(Error::NonFinite("gradient list"));
        }
    }
    Ok(dim)
}

fn check_stats(stats: &[f64], what: &'static str) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::EmptyInput(what));
    }
    if !stats.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::invalid("h must be finite and positive"));
    }
    Ok(())
}

/// Elementwise sum of agent gradients, folded in worker-id order.
pub fn merge_sum(grads: &[GradientVector]) -> Result<GradientVector> {
    let dim = check_grads(grads)?;
    let mut out = vec![0.0; dim];
    for g in grads {
        for (o, &v) in out.iter_mut().zip(g.values()) {
            *o += v;
        }
    }
    Ok(GradientVector::new(out))
}

/// Elementwise mean of agent gradients.
pub fn merge_avg(grads: &[GradientVector]) -> Result<GradientVector> {
    let k = grads.len() as f64;
    let mut out = merge_sum(grads)?.into_vec();
    for o in out.iter_mut() {
        *o /= k;
    }
    Ok(GradientVector::new(out))
}

/// Shares from a statistic shifted by its minimum, plus the 1/h floor.
fn shifted_share_weights(stats: &[f64], h: f64) -> WeightVector {
    let k = stats.len();
    let min = stats.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = stats.iter().map(|&s| s - min).collect();
    share_weights(&shifted, h, k)
}

/// w_i = share_i / total + 1/h, uniform share when the total vanishes.
fn share_weights(shares: &[f64], h: f64, k: usize) -> WeightVector {
    let total: f64 = shares.iter().sum();
    let floor = 1.0 / h;
    let w = if total <= SHARE_EPS {
        vec![1.0 / k as f64 + floor; k]
    } else {
        shares.iter().map(|&s| s / total + floor).collect()
    };
    WeightVector(w)
}

/// Reward weighting: shares proportional to reward above the worst agent.
pub fn r_weights(rewards: &[f64], h: f64) -> Result<WeightVector> {
    check_stats(rewards, "rewards")?;
    check_h(h)?;
    Ok(shifted_share_weights(rewards, h))
}

/// Loss weighting on magnitudes: shares proportional to |loss|.
pub fn l_weights(losses: &[f64], h: f64) -> Result<WeightVector> {
    check_stats(losses, "losses")?;
    check_h(h)?;
    let mags: Vec<f64> = losses.iter().map(|l| l.abs()).collect();
    Ok(share_weights(&mags, h, losses.len()))
}

/// Loss weighting in shifted mode: shares proportional to loss above the
/// smallest loss, mirroring the reward scheme.
pub fn l_weights_shifted(losses: &[f64], h: f64) -> Result<WeightVector> {
    check_stats(losses, "losses")?;
    check_h(h)?;
    Ok(shifted_share_weights(losses, h))
}

/// Softmax variant: shares are softmax of the raw statistic (reward or
/// loss), floor unchanged. Softmax mass always sums to one, so there is no
/// degenerate fallback.
pub fn softmax_weights(stats: &[f64], h: f64) -> Result<WeightVector> {
    check_stats(stats, "softmax statistics")?;
    check_h(h)?;
    let shares = softmax(stats);
    let floor = 1.0 / h;
    Ok(WeightVector(shares.iter().map(|&s| s + floor).collect()))
}

/// Weighted sum of gradients, folded in worker-id order. No renormalization:
/// the weights are used exactly as given.
pub fn weighted_merge(grads: &[GradientVector], weights: &WeightVector) -> Result<GradientVector> {
    let dim = check_grads(grads)?;
    if weights.len() != grads.len() {
        return Err(Error::ShapeMismatch {
            what: "weight vector",
            expected: grads.len(),
            actual: weights.len(),
        });
    }
    let mut out = vec![0.0; dim];
    for (g, &w) in grads.iter().zip(weights.values()) {
        for (o, &v) in out.iter_mut().zip(g.values()) {
            *o += w * v;
        }
    }
    Ok(GradientVector::new(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActorMode {
    Avg,
    Sum,
}

/// Actor merge: every agent keeps its own replica and receives the shared
/// merged gradient plus its own, out_i = base + g_i, where base is the sum
/// or mean of all gradients.
pub fn actor_merge(grads: &[GradientVector], mode: ActorMode) -> Result<Vec<GradientVector>> {
    let base = match mode {
        ActorMode::Avg => merge_avg(grads)?,
        ActorMode::Sum => merge_sum(grads)?,
    };
    Ok(grads
        .iter()
        .map(|g| {
            let v: Vec<f64> = base
                .values()
                .iter()
                .zip(g.values())
                .map(|(&b, &x)| b + x)
                .collect();
            GradientVector::new(v)
        })
        .collect())
}

/// Federated averaging of locally trained parameter vectors.
pub fn fedavg_params(params: &[ParamVector]) -> Result<ParamVector> {
    if params.is_empty() {
        return Err(Error::EmptyInput("parameter list"));
    }
    let dim = params[0].len();
    let k = params.len() as f64;
    let mut out = vec![0.0; dim];
    for p in params {
        if p.len() != dim {
            return Err(Error::ShapeMismatch {
                what: "parameter list entry",
                expected: dim,
                actual: p.len(),
            });
        }
        if !p.all_finite() {
            return Err(Error::NonFinite("parameter list"));
        }
        for (o, &v) in out.iter_mut().zip(p.values()) {
            *o += v;
        }
    }
    for o in out.iter_mut() {
        *o /= k;
    }
    Ok(ParamVector::new(out))
}

/// Weights for a global weighted strategy, or None for strategies without
/// per-agent weights.
pub fn strategy_weights(
    kind: StrategyKind,
    rewards: &[f64],
    losses: &[f64],
    h: f64,
    l_use_magnitude: bool,
) -> Result<Option<WeightVector>> {
    let w = match kind {
        StrategyKind::RWeighted => Some(r_weights(rewards, h)?),
        StrategyKind::LWeighted => {
            if l_use_magnitude {
                Some(l_weights(losses, h)?)
            } else {
                Some(l_weights_shifted(losses, h)?)
            }
        }
        StrategyKind::RSoftmax => Some(softmax_weights(rewards, h)?),
        StrategyKind::LSoftmax => Some(softmax_weights(losses, h)?),
        _ => None,
    };
    Ok(w)
}
