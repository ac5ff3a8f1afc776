//! Dynamic time warping between sensor traces.

use super::AnalysisError;

/// Classic DTW: absolute-difference local cost, steps `(i-1,j)`, `(i,j-1)`,
/// `(i-1,j-1)`, anchored at both ends, no window. Returns the total path cost.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptySignal);
    }
    // Two rolling rows over `b`.
    let mut prev = vec![f64::INFINITY; b.len()];
    let mut cur = vec![f64::INFINITY; b.len()];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            let cost = (ai - bj).abs();
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[b.len() - 1])
}

/// Uniform subsampling to at most `max_len` points with stride
/// `ceil(len / max_len)`; shorter signals are returned unchanged.
pub fn downsample(signal: &[f64], max_len: usize) -> Vec<f64> {
    if signal.len() <= max_len || max_len == 0 {
        return signal.to_vec();
    }
    let stride = signal.len().div_ceil(max_len);
    signal.iter().step_by(stride).copied().collect()
}
