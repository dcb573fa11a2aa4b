/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .unwrap_or(x)
}

/// Nearest-rank quantile of already sorted values, `level` in `[0, 1]`.
///
/// Uses rank `ceil(level * n)` clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let rank = ((level * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Integer-exact nearest-rank for `k / m` levels, avoiding float error in `k/m * n`.
pub fn nearest_rank_fraction(sorted: &[f64], k: usize, m: usize) -> f64 {
    let n = sorted.len();
    let rank = ((k * n).div_ceil(m)).clamp(1, n);
    sorted[rank - 1]
}
