//! Interference metrics over hill-climber lineage logs.
//!
//! Per run the champion is the final climber whose worst environment is
//! closest to the light. Its lineage of accepted mutations is scored by how
//! well each improvement vector `dD` aligns with uniform improvement
//! `V = (1, ..., 1)`, how large the steps were, and how often every
//! environment improved at once.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::optimizers::LineageLog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChapterTwoMetrics {
    /// Mean over runs of the champion's worst-environment distance.
    pub m1: f64,
    /// Mean angle in degrees between champion-lineage `dD` and `V`.
    pub m2: f64,
    /// Mean `|dD|` along champion lineages.
    pub m3: f64,
    /// Mean share of champion-lineage `dD` with every component positive.
    pub m4: f64,
    pub runs: usize,
    /// Runs whose champion never accepted a mutation; excluded from m2..m4.
    pub skipped: usize,
}

/// Angle in degrees between `delta` and the all-ones vector, or `None` for a
/// zero vector.
pub fn delta_angle_degrees(delta: &[f64]) -> Option<f64> {
    let norm2 = delta.iter().map(|d| d * d).sum::<f64>();
    if norm2 == 0.0 {
        return None;
    }
    let cos = delta.iter().sum::<f64>() / (norm2 * delta.len() as f64).sqrt();
    let theta = cos.clamp(-1.0, 1.0).acos().to_degrees();
    // arccos lies in [0, 180], so the reflex-angle branch never fires.
    debug_assert!(theta <= 180.0);
    Some(if theta > 180.0 { 360.0 - theta } else { theta })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Aggregates M1..M4 over runs. Champion ties go to the lowest climber index.
pub fn chapter_two_metrics(logs: &[LineageLog], k: usize) -> Result<ChapterTwoMetrics, AnalysisError> {
    if logs.is_empty() {
        return Err(AnalysisError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut worst = Vec::with_capacity(logs.len());
    let (mut angles, mut norms, mut uniform) = (Vec::new(), Vec::new(), Vec::new());
    for log in logs {
        if log.environments != k {
            return Err(AnalysisError::EnvironmentCount {
                expected: k,
                got: log.environments,
            });
        }
        let max_of = |d: &[f64]| d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut champion = None;
        for (i, c) in log.climbers.iter().enumerate() {
            let w = max_of(&c.final_distances);
            if champion.is_none_or(|(_, best)| w < best) {
                champion = Some((i, w));
            }
        }
        let Some((ci, w)) = champion else {
            return Err(AnalysisError::TooFewSamples { needed: 1, got: 0 });
        };
        worst.push(w);
        let events = &log.climbers[ci].events;
        if events.is_empty() {
            continue;
        }
        let run_angles: Vec<f64> = events.iter().filter_map(|e| delta_angle_degrees(&e.delta)).collect();
        if !run_angles.is_empty() {
            angles.push(mean(&run_angles));
        }
        let run_norms: Vec<f64> = events
            .iter()
            .map(|e| e.delta.iter().map(|d| d * d).sum::<f64>().sqrt())
            .collect();
        norms.push(mean(&run_norms));
        let positive = events.iter().filter(|e| e.delta.iter().all(|&d| d > 0.0)).count();
        uniform.push(positive as f64 / events.len() as f64);
    }
    let or_zero = |v: &[f64]| if v.is_empty() { 0.0 } else { mean(v) };
    Ok(ChapterTwoMetrics {
        m1: mean(&worst),
        m2: or_zero(&angles),
        m3: or_zero(&norms),
        m4: or_zero(&uniform),
        runs: logs.len(),
        skipped: logs.len() - norms.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{ClimberLog, FitnessCombinator, MutationEvent};
    use crate::vehicle::Policy;

    fn event(delta: &[f64]) -> MutationEvent {
        MutationEvent {
            generation: 1,
            parent_distances: vec![0.0; delta.len()],
            child_distances: delta.iter().map(|d| -d).collect(),
            delta: delta.to_vec(),
            fitness_before: 0.0,
            fitness_after: 1.0,
        }
    }

    fn climber(final_distances: Vec<f64>, events: Vec<MutationEvent>) -> ClimberLog {
        ClimberLog {
            events,
            fitness_trace: vec![],
            final_policy: Policy { w1: 0.0, w2: 0.0 },
            final_fitness: 0.0,
            final_distances,
        }
    }

    #[test]
    fn angle_examples() {
        assert_eq!(delta_angle_degrees(&[1.0, 1.0, 1.0, 1.0]), Some(0.0));
        let a = delta_angle_degrees(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((a - 60.0).abs() < 1e-12);
        assert_eq!(delta_angle_degrees(&[-2.0, -2.0]), Some(180.0));
        assert_eq!(delta_angle_degrees(&[0.0, 0.0]), None);
    }

    #[test]
    fn hand_computed_lineage() {
        let log = LineageLog {
            combinator: FitnessCombinator::Sum,
            environments: 2,
            climbers: vec![
                climber(vec![3.0, 1.0], vec![event(&[9.0, 9.0])]),
                climber(
                    vec![1.0, 2.0],
                    vec![event(&[1.0, 1.0]), event(&[1.0, -1.0]), event(&[2.0, 3.0])],
                ),
            ],
        };
        let m = chapter_two_metrics(&[log], 2).unwrap();
        assert_eq!(m.m1, 2.0);
        assert!((m.m4 - 2.0 / 3.0).abs() < 1e-15);
        let m3 = (2f64.sqrt() * 2.0 + 13f64.sqrt()) / 3.0;
        assert!((m.m3 - m3).abs() < 1e-12);
        assert!((m.m3 - 2.1446).abs() < 1e-4);
        assert_eq!(m.skipped, 0);
    }

    #[test]
    fn champion_ties_take_lowest_index_and_empty_lineages_skip() {
        let log = LineageLog {
            combinator: FitnessCombinator::Min,
            environments: 2,
            climbers: vec![
                climber(vec![1.0, 2.0], vec![]),
                climber(vec![2.0, 1.0], vec![event(&[1.0, 1.0])]),
            ],
        };
        let m = chapter_two_metrics(&[log], 2).unwrap();
        assert_eq!(m.m1, 2.0);
        assert_eq!(m.skipped, 1);
        assert_eq!((m.m2, m.m3, m.m4), (0.0, 0.0, 0.0));
    }

    #[test]
    fn environment_count_must_match() {
        let log = LineageLog {
            combinator: FitnessCombinator::Sum,
            environments: 3,
            climbers: vec![climber(vec![1.0; 3], vec![])],
        };
        assert!(chapter_two_metrics(&[log], 4).is_err());
    }
}
