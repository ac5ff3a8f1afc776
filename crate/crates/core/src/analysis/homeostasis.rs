//! Cross-environment sensor-signal similarity.

use super::{downsample, dtw, AnalysisError};
use crate::vehicle::{simulate_all, BodyDesign, EnvironmentSet, Policy, SimProfile};

/// Traces longer than this are strided down before alignment.
pub const DTW_MAX_LEN: usize = 500;

/// Mean pairwise DTW over environments, averaged over the two sensors.
///
/// `traces[k]` holds `(sensor_1, sensor_2)` for environment `k`.
pub fn aggregate_dtw_traces(traces: &[(Vec<f64>, Vec<f64>)]) -> Result<f64, AnalysisError> {
    let k = traces.len();
    if k < 2 {
        return Err(AnalysisError::TooFewEnvironments(k));
    }
    let reduced: Vec<(Vec<f64>, Vec<f64>)> = traces
        .iter()
        .map(|(a, b)| (downsample(a, DTW_MAX_LEN), downsample(b, DTW_MAX_LEN)))
        .collect();
    let pairs = (k * (k - 1) / 2) as f64;
    let mut sums = [0.0; 2];
    for i in 0..k {
        for j in i + 1..k {
            sums[0] += dtw(&reduced[i].0, &reduced[j].0)?;
            sums[1] += dtw(&reduced[i].1, &reduced[j].1)?;
        }
    }
    Ok((sums[0] / pairs + sums[1] / pairs) / 2.0)
}

/// Simulates every environment and scores how alike the sensor streams are.
pub fn aggregate_dtw(
    design: &BodyDesign,
    policy: &Policy,
    envset: &EnvironmentSet,
    profile: &SimProfile,
) -> Result<f64, AnalysisError> {
    if envset.len() < 2 {
        return Err(AnalysisError::TooFewEnvironments(envset.len()));
    }
    let traces: Vec<(Vec<f64>, Vec<f64>)> = simulate_all(design, policy, envset, profile)
        .into_iter()
        .map(|r| (r.sensor_trace_1, r.sensor_trace_2))
        .collect();
    aggregate_dtw_traces(&traces)
}
