//! Design-by-policy grid sweeps and the overlap metrics built on them.
//!
//! For every body design the controller weight box is sampled on an `n x n`
//! grid and each weight pair is simulated in every environment. The per
//! environment binary success matrices are summed into an overlap matrix whose
//! cell histogram yields the learnability metric `M_L` (share of cells solving
//! every environment) and the interference metric `M_CI` (share of those among
//! cells solving at least one).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::ordered_map;
use crate::vehicle::{
    simulate_batch, BodyDesign, Environment, EnvironmentSet, Policy, SimProfile, TrialSpec, Vec2,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LandscapeError {
    #[error("weight grid needs an odd point count of at least 1, got {0}")]
    WeightGridSize(usize),
    #[error("design grid needs at least 1 bin, got {0}")]
    DesignGridSize(usize),
    #[error("success matrices disagree in size: {expected} vs {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no success matrices supplied")]
    NoMatrices,
    #[error("overlap cell {value} exceeds environment count {k}")]
    CellOutOfRange { value: u8, k: usize },
}

/// Evenly spaced controller weights over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGrid {
    values: Vec<f64>,
}

impl WeightGrid {
    /// `n` must be odd so that zero and the mirror map `j -> n-1-j` are exact.
    pub fn new(n: usize) -> Result<Self, LandscapeError> {
        if n == 0 || n.is_multiple_of(2) {
            return Err(LandscapeError::WeightGridSize(n));
        }
        let values = if n == 1 {
            vec![0.0]
        } else {
            let h = (n - 1) / 2;
            // (j - h) / h: one rounding, so values[j] == -values[n-1-j] exactly.
            (0..n).map(|j| (j as f64 - h as f64) / h as f64).collect()
        };
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Evenly spaced sensor coordinates over `[-0.5, 0.5]`, shared by all four axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignGrid {
    positions: Vec<f64>,
}

impl DesignGrid {
    /// A single bin sits at the body centre.
    pub fn new(bins: usize) -> Result<Self, LandscapeError> {
        if bins == 0 {
            return Err(LandscapeError::DesignGridSize(bins));
        }
        let positions = if bins == 1 {
            vec![0.0]
        } else {
            // (2i - (bins-1)) / (2 (bins-1)): one rounding, exactly symmetric about 0.
            let span = (bins - 1) as f64;
            (0..bins)
                .map(|i| (2.0 * i as f64 - span) / (2.0 * span))
                .collect()
        };
        Ok(Self { positions })
    }

    pub fn bins(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.bins().pow(4)
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Design at row-major index over `(l1.x, l1.y, l2.x, l2.y)`.
    pub fn design(&self, index: usize) -> BodyDesign {
        let b = self.bins();
        let p = &self.positions;
        BodyDesign {
            l1: Vec2::new(p[index / (b * b * b) % b], p[index / (b * b) % b]),
            l2: Vec2::new(p[index / b % b], p[index % b]),
        }
    }

    pub fn designs(&self) -> Vec<BodyDesign> {
        (0..self.len()).map(|i| self.design(i)).collect()
    }
}

/// Binary success per weight pair; row is the `w1` index, column the `w2` index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessMatrix {
    n: usize,
    cells: Vec<u8>,
}

impl SuccessMatrix {
    pub fn from_cells(n: usize, cells: Vec<bool>) -> Result<Self, LandscapeError> {
        if cells.len() != n * n {
            return Err(LandscapeError::DimensionMismatch {
                expected: n * n,
                got: cells.len(),
            });
        }
        Ok(Self {
            n,
            cells: cells.into_iter().map(u8::from).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.n + j] == 1
    }

    /// Row-major cells, each 0 or 1.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let cells = (0..n * n).map(|c| self.cells[(c % n) * n + c / n]).collect();
        Self { n, cells }
    }
}

/// Cellwise count of environments solved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    n: usize,
    k: usize,
    cells: Vec<u8>,
}

impl OverlapMatrix {
    pub fn from_cells(n: usize, k: usize, cells: Vec<u8>) -> Result<Self, LandscapeError> {
        if cells.len() != n * n {
            return Err(LandscapeError::DimensionMismatch {
                expected: n * n,
                got: cells.len(),
            });
        }
        if let Some(&value) = cells.iter().find(|&&c| c as usize > k) {
            return Err(LandscapeError::CellOutOfRange { value, k });
        }
        Ok(Self { n, k, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.cells[i * self.n + j]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// `g[k]` is the number of cells equal to `k`, for `k = 0..=K`.
    pub fn histogram(&self) -> Vec<usize> {
        let mut g = vec![0; self.k + 1];
        for &c in &self.cells {
            g[c as usize] += 1;
        }
        g
    }

    pub fn is_null(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMetrics {
    pub m_l: f64,
    pub m_ci: f64,
    /// `g_1 ..= g_K`.
    pub counts: Vec<usize>,
}

impl DesignMetrics {
    pub fn from_overlap(o: &OverlapMatrix) -> Self {
        Self {
            m_l: metric_learnability(o),
            m_ci: metric_interference(o),
            counts: o.histogram()[1..].to_vec(),
        }
    }
}

/// Success of every grid policy in one environment.
pub fn success_matrix(
    design: &BodyDesign,
    env: &Environment,
    grid: &WeightGrid,
    profile: &SimProfile,
) -> SuccessMatrix {
    let v = grid.values();
    let specs: Vec<TrialSpec> = v
        .iter()
        .flat_map(|&w1| {
            v.iter().map(move |&w2| TrialSpec {
                design: *design,
                policy: Policy { w1, w2 },
                start: env.start,
            })
        })
        .collect();
    let cells = simulate_batch(&specs, profile).iter().map(|o| o.success).collect();
    SuccessMatrix::from_cells(grid.n(), cells).expect("grid-sized batch")
}

/// Success matrices for every environment, in environment order.
pub fn success_matrices(
    design: &BodyDesign,
    envset: &EnvironmentSet,
    grid: &WeightGrid,
    profile: &SimProfile,
) -> Vec<SuccessMatrix> {
    let k = envset.len();
    let v = grid.values();
    // One batch per design keeps the integrator lanes full.
    let mut specs = Vec::with_capacity(v.len() * v.len() * k);
    for &w1 in v {
        for &w2 in v {
            for env in envset.iter() {
                specs.push(TrialSpec {
                    design: *design,
                    policy: Policy { w1, w2 },
                    start: env.start,
                });
            }
        }
    }
    let outcomes = simulate_batch(&specs, profile);
    (0..k)
        .map(|e| {
            let cells = outcomes.iter().skip(e).step_by(k).map(|o| o.success).collect();
            SuccessMatrix::from_cells(grid.n(), cells).expect("grid-sized batch")
        })
        .collect()
}

/// Cellwise sum of success matrices.
pub fn overlap(matrices: &[SuccessMatrix]) -> Result<OverlapMatrix, LandscapeError> {
    let first = matrices.first().ok_or(LandscapeError::NoMatrices)?;
    let n = first.n;
    let mut cells = vec![0u8; n * n];
    for m in matrices {
        if m.n != n {
            return Err(LandscapeError::DimensionMismatch {
                expected: n,
                got: m.n,
            });
        }
        for (c, &s) in cells.iter_mut().zip(&m.cells) {
            *c += s;
        }
    }
    Ok(OverlapMatrix {
        n,
        k: matrices.len(),
        cells,
    })
}

/// Share of weight pairs that solve every environment.
pub fn metric_learnability(o: &OverlapMatrix) -> f64 {
    let full = o.cells.iter().filter(|&&c| c as usize == o.k).count();
    full as f64 / (o.n * o.n) as f64
}

/// Share of full solutions among weight pairs that solve at least one
/// environment; zero for a null overlap.
pub fn metric_interference(o: &OverlapMatrix) -> f64 {
    let g = o.histogram();
    let any: usize = g[1..].iter().sum();
    if any == 0 {
        0.0
    } else {
        g[o.k] as f64 / any as f64
    }
}

/// `(M l2, M l1)` with `M` the reflection about the x-axis.
pub fn mirror_design(design: &BodyDesign) -> BodyDesign {
    BodyDesign {
        l1: design.l2.reflect_y(),
        l2: design.l1.reflect_y(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub design: BodyDesign,
    pub metrics: DesignMetrics,
    pub overlap: OverlapMatrix,
    /// Present only when requested.
    pub success: Option<Vec<SuccessMatrix>>,
}

/// Evaluates every design of the grid; rows come back in design-index order
/// regardless of `workers`.
pub fn sweep_designs(
    dgrid: &DesignGrid,
    wgrid: &WeightGrid,
    envset: &EnvironmentSet,
    profile: &SimProfile,
    workers: usize,
    keep_success: bool,
) -> Vec<SweepRow> {
    let indices: Vec<usize> = (0..dgrid.len()).collect();
    sweep_indices(dgrid, &indices, wgrid, envset, profile, workers, keep_success)
}

/// Like [`sweep_designs`] restricted to the given design indices.
pub fn sweep_indices(
    dgrid: &DesignGrid,
    indices: &[usize],
    wgrid: &WeightGrid,
    envset: &EnvironmentSet,
    profile: &SimProfile,
    workers: usize,
    keep_success: bool,
) -> Vec<SweepRow> {
    ordered_map(indices, workers, |_, &index| {
        let design = dgrid.design(index);
        let s = success_matrices(&design, envset, wgrid, profile);
        let o = overlap(&s).expect("environment set is non-empty");
        SweepRow {
            index,
            design,
            metrics: DesignMetrics::from_overlap(&o),
            overlap: o,
            success: keep_success.then_some(s),
        }
    })
}
