//! Small numeric helpers shared across modules.

/// Numerically stable softmax (max subtracted before exponentiation).
pub(crate) fn softmax(xs: &[f64]) -> Vec<f64> {
    debug_assert!(!xs.is_empty());
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / total).collect()
}

/// Log-probabilities from raw logits: x_i - max - ln(sum exp(x - max)).
pub(crate) fn log_softmax(xs: &[f64]) -> Vec<f64> {
    debug_assert!(!xs.is_empty());
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
    xs.iter().map(|&x| x - max - log_sum).collect()
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Deterministic seed mixer for deriving per-worker RNG streams. splitmix64
/// finalizer applied to the combined value.
pub(crate) fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
