//! Small numerical helpers shared by several modules.

/// Full width at half maximum of a sampled, single-peaked curve, using
/// linear interpolation between samples on both sides of the maximum.
/// Returns `None` if the curve does not drop below half maximum on both
/// sides inside the sampled range.
pub fn full_width_half_max(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let (peak_idx, &peak) = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) {
        return None;
    }
    let half = 0.5 * peak;
    let crossing = |i: usize, j: usize| {
        // ys[i] >= half > ys[j]
        let t = (ys[i] - half) / (ys[i] - ys[j]);
        xs[i] + t * (xs[j] - xs[i])
    };
    let right = (peak_idx..xs.len() - 1)
        .find(|&i| ys[i + 1] < half)
        .map(|i| crossing(i, i + 1))?;
    let left = (1..=peak_idx)
        .rev()
        .find(|&i| ys[i - 1] < half)
        .map(|i| crossing(i, i - 1))?;
    Some(right - left)
}
