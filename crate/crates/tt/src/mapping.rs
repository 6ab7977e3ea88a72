//! Maps objective values to positive tensor entries whose maximum marks the
//! minimum of the objective.

/// Arguments beyond this many scales map to exactly zero.
const SATURATION: f64 = 700.0;

/// `h(J − α) = exp(−(J − α) / scale)`.
///
/// Non-finite `J` (a failed evaluation) maps to 0.
pub fn mapping_h(j: f64, alpha: f64, scale: f64) -> f64 {
    if !j.is_finite() {
        return 0.0;
    }
    let x = (j - alpha) / scale;
    if x > SATURATION {
        0.0
    } else {
        (-x).exp()
    }
}

/// `α ← min(α, min batch)`, ignoring non-finite values.
pub fn update_shift(alpha: f64, batch: &[f64]) -> f64 {
    batch
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(alpha, f64::min)
}

/// Scale from the spread of a batch above the shift: the median excess,
/// floored relative to the magnitude of `α`.
pub fn adaptive_scale(alpha: f64, batch: &[f64]) -> f64 {
    let mut excess: Vec<f64> = batch
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| v - alpha)
        .collect();
    let floor = 1e-12 * alpha.abs().max(1e-300);
    if excess.is_empty() {
        return 1.0;
    }
    let mid = excess.len() / 2;
    let (_, m, _) = excess.select_nth_unstable_by(mid, f64::total_cmp);
    m.max(floor)
}
