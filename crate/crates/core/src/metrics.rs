//! Evaluation metrics: smoothed reward curves, threshold crossings, and the
//! cross-algorithm summary table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathutil::mean;

/// Smoothing factor for the exponential moving average of round rewards.
pub const EMA_ALPHA: f64 = 0.9;

/// One EMA step; the first observation seeds the average.
pub fn ema_update(prev: Option<f64>, x: f64) -> f64 {
    match prev {
        None => x,
        Some(p) => EMA_ALPHA * p + (1.0 - EMA_ALPHA) * x,
    }
}

pub fn ema_series(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = None;
    for &x in xs {
        let e = ema_update(prev, x);
        out.push(e);
        prev = Some(e);
    }
    out
}

/// First round whose smoothed reward reaches a threshold. `NotReached`
/// renders as "N+" where N is the series length, meaning the crossing did
/// not happen within the recorded horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdCrossing {
    Reached(usize),
    NotReached { len: usize },
}

impl ThresholdCrossing {
    /// Ordering key: an unreached threshold sorts after every reached round.
    pub fn order_key(&self) -> usize {
        match *self {
            ThresholdCrossing::Reached(i) => i,
            ThresholdCrossing::NotReached { len } => len,
        }
    }

    pub fn reached(&self) -> bool {
        matches!(self, ThresholdCrossing::Reached(_))
    }

    /// Inverse of Display: "12" or "12+".
    pub fn parse(s: &str) -> Result<Self> {
        let (digits, not_reached) = match s.strip_suffix('+') {
            Some(d) => (d, true),
            None => (s, false),
        };
        let n: usize = digits
            .parse()
            .map_err(|_| Error::invalid(format!("bad threshold crossing '{s}'")))?;
        Ok(if not_reached {
            ThresholdCrossing::NotReached { len: n }
        } else {
            ThresholdCrossing::Reached(n)
        })
    }
}

impl fmt::Display for ThresholdCrossing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ThresholdCrossing::Reached(i) => write!(f, "{i}"),
            ThresholdCrossing::NotReached { len } => write!(f, "{len}+"),
        }
    }
}

/// Index of the first EMA value at or above `threshold`.
pub fn threshold_episode(rewards: &[f64], threshold: f64) -> ThresholdCrossing {
    let ema = ema_series(rewards);
    match ema.iter().position(|&e| e >= threshold) {
        Some(i) => ThresholdCrossing::Reached(i),
        None => ThresholdCrossing::NotReached { len: rewards.len() },
    }
}

/// Named per-round reward series for one algorithm (already averaged over
/// runs).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmSeries {
    pub name: String,
    pub rewards: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub avg_rew: f64,
    /// Mean reward from the earliest round at which *any* algorithm's EMA
    /// reaches the end threshold; None when nobody gets there.
    pub avg_end_rew: Option<f64>,
    pub percent_avg: Option<f64>,
    pub percent_end: Option<f64>,
    pub threshold_episode: ThresholdCrossing,
}

/// Percentage of `value` relative to `baseline`, on a scale where the
/// baseline is 100. A negative baseline shifts every value by the smallest
/// entry across algorithms first so the ratio stays meaningful; negative
/// percentages clamp to zero. Undefined (None) when the shifted baseline is
/// zero.
fn percent_of(value: f64, baseline: f64, global_min: f64) -> Option<f64> {
    let (v, b) = if baseline < 0.0 {
        (value - global_min, baseline - global_min)
    } else {
        (value, baseline)
    };
    if b == 0.0 {
        return None;
    }
    let pct = 100.0 * v / b;
    Some(pct.max(0.0))
}

/// Builds the summary table. `baseline` names the algorithm whose averages
/// define 100%; thresholds are in the same units as the reward series.
pub fn summarize(
    series: &[AlgorithmSeries],
    baseline: &str,
    env_threshold: f64,
    end_threshold: f64,
) -> Result<Vec<SummaryRow>> {
    if series.is_empty() {
        return Err(Error::EmptyInput("summary series"));
    }
    for s in series {
        if s.rewards.is_empty() {
            return Err(Error::EmptyInput("summary series entry"));
        }
        if !s.rewards.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("summary series"));
        }
    }
    let base_idx = series
        .iter()
        .position(|s| s.name == baseline)
        .ok_or_else(|| Error::invalid(format!("baseline algorithm '{baseline}' not in series")))?;

    // Earliest end-threshold crossing by any algorithm opens the end window.
    let end_start = series
        .iter()
        .filter_map(|s| match threshold_episode(&s.rewards, end_threshold) {
            ThresholdCrossing::Reached(i) => Some(i),
            ThresholdCrossing::NotReached { .. } => None,
        })
        .min();

    let avg: Vec<f64> = series.iter().map(|s| mean(&s.rewards)).collect();
    let avg_end: Vec<Option<f64>> = series
        .iter()
        .map(|s| match end_start {
            Some(e) if e < s.rewards.len() => Some(mean(&s.rewards[e..])),
            _ => None,
        })
        .collect();

    let min_avg = avg.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_end = avg_end
        .iter()
        .flatten()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    let rows = series
        .iter()
        .enumerate()
        .map(|(i, s)| SummaryRow {
            algorithm: s.name.clone(),
            avg_rew: avg[i],
            avg_end_rew: avg_end[i],
            percent_avg: percent_of(avg[i], avg[base_idx], min_avg),
            percent_end: match (avg_end[i], avg_end[base_idx]) {
                (Some(v), Some(b)) => percent_of(v, b, min_end),
                _ => None,
            },
            threshold_episode: threshold_episode(&s.rewards, env_threshold),
        })
        .collect();
    Ok(rows)
}
