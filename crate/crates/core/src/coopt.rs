//! Body-and-brain co-optimization against a controller-only baseline.
//!
//! Both modes run the same generational non-dominated-sorting MOEA with one
//! objective per environment (closest approach to the light). Co-optimization
//! searches sensor placement and weights together; the baseline pins the
//! canonical body and searches only the weights. Every genome that enters the
//! Pareto archive is scored for cross-environment sensor similarity.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{aggregate_dtw, mann_whitney, AnalysisError, MannWhitney};
use crate::optimizers::Bounds;
use crate::rng::{self, Rng};
use crate::vehicle::{
    simulate_batch, BodyDesign, EnvironmentSet, Policy, SimProfile, TrialSpec, HALF_BODY, WEIGHT_LIMIT,
};

pub const POPULATION: usize = 52;
pub const CROSSOVER_PROB: f64 = 0.9;
/// Mutation standard deviation as a fraction of each gene's range.
pub const MUTATION_SCALE: f64 = 0.05;
pub const MUTATION_PROB: f64 = 1.0 / 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CooptError {
    #[error("budget {budget} is smaller than the population size {population}")]
    BudgetBelowPopulation { budget: usize, population: usize },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CooptMode {
    /// Design and weights evolve together.
    Coopt,
    /// Canonical design, weights only.
    Baseline,
}

impl CooptMode {
    fn dim(self) -> usize {
        match self {
            CooptMode::Coopt => 6,
            CooptMode::Baseline => 2,
        }
    }

    fn bounds(self) -> Bounds {
        let mut low = Vec::new();
        let mut high = Vec::new();
        if self == CooptMode::Coopt {
            low.extend([-HALF_BODY; 4]);
            high.extend([HALF_BODY; 4]);
        }
        low.extend([-WEIGHT_LIMIT; 2]);
        high.extend([WEIGHT_LIMIT; 2]);
        Bounds::new(low, high).expect("static bounds")
    }

    fn decode(self, x: &[f64]) -> Genome {
        match self {
            CooptMode::Coopt => Genome {
                design: BodyDesign::from_array_clamped([x[0], x[1], x[2], x[3]]),
                policy: Policy::clamped(x[4], x[5]),
            },
            CooptMode::Baseline => Genome {
                design: BodyDesign::canonical(),
                policy: Policy::clamped(x[0], x[1]),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub design: BodyDesign,
    pub policy: Policy,
}

/// A genome entering the Pareto archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Admission {
    /// Position in the run's admission sequence, starting at 0.
    pub order: usize,
    /// 0 for the initial population.
    pub generation: usize,
    pub eval_index: usize,
    pub genome: Genome,
    pub objectives: Vec<f64>,
    pub dtw: f64,
}

/// Best-so-far state after evaluation `eval` (1-based), logged whenever it changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub eval: usize,
    pub best_loss: f64,
    /// Most environments solved by any candidate so far.
    pub envs_solved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub eval_index: usize,
    pub genome: Genome,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooptRunRecord {
    pub mode: CooptMode,
    pub seed: u64,
    pub budget: usize,
    pub evals_used: usize,
    pub generations: usize,
    pub curve: Vec<Checkpoint>,
    pub admissions: Vec<Admission>,
    pub evals_to_full_success: Option<usize>,
    /// Archive member with the smallest summed objectives.
    pub best: ArchiveEntry,
    pub archive: Vec<ArchiveEntry>,
}

impl CooptRunRecord {
    pub fn evals_or_censored(&self) -> usize {
        self.evals_to_full_success.unwrap_or(self.budget + 1)
    }
}

/// `a` dominates `b`: no worse anywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Pareto fronts as index lists, best front first; indices ascending within a front.
pub fn non_dominated_fronts(objectives: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objectives.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&objectives[i], &objectives[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front`; boundary points are infinite.
pub fn crowding_distances(objectives: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let m = front.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        return vec![f64::INFINITY; m];
    }
    let k = objectives[front[0]].len();
    #[allow(clippy::needless_range_loop)]
    for obj in 0..k {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            objectives[front[a]][obj]
                .total_cmp(&objectives[front[b]][obj])
                .then(front[a].cmp(&front[b]))
        });
        let lo = objectives[front[order[0]]][obj];
        let hi = objectives[front[order[m - 1]]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..m - 1 {
                let gap = objectives[front[order[w + 1]]][obj] - objectives[front[order[w - 1]]][obj];
                dist[order[w]] += gap / (hi - lo);
            }
        }
    }
    dist
}

struct Evaluated {
    x: Vec<f64>,
    objectives: Vec<f64>,
    eval_index: usize,
}

struct Run<'a> {
    mode: CooptMode,
    envset: &'a EnvironmentSet,
    profile: &'a SimProfile,
    budget: usize,
    used: usize,
    best_loss: f64,
    max_solved: usize,
    curve: Vec<Checkpoint>,
    first_full: Option<usize>,
    archive: Vec<ArchiveEntry>,
    admissions: Vec<Admission>,
}

impl Run<'_> {
    fn evaluate(&mut self, xs: Vec<Vec<f64>>, generation: usize) -> Result<Vec<Evaluated>, CooptError> {
        let take = xs.len().min(self.budget - self.used);
        let k = self.envset.len();
        let specs: Vec<TrialSpec> = xs[..take]
            .iter()
            .flat_map(|x| {
                let g = self.mode.decode(x);
                self.envset.iter().map(move |env| TrialSpec {
                    design: g.design,
                    policy: g.policy,
                    start: env.start,
                })
            })
            .collect();
        let outcomes = simulate_batch(&specs, self.profile);
        let mut out = Vec::with_capacity(take);
        for (x, chunk) in xs.into_iter().take(take).zip(outcomes.chunks(k)) {
            self.used += 1;
            let objectives: Vec<f64> = chunk.iter().map(|o| o.min_distance).collect();
            let solved = chunk.iter().filter(|o| o.success).count();
            let total: f64 = objectives.iter().sum();
            if total < self.best_loss || solved > self.max_solved || self.curve.is_empty() {
                self.best_loss = self.best_loss.min(total);
                self.max_solved = self.max_solved.max(solved);
                self.curve.push(Checkpoint {
                    eval: self.used,
                    best_loss: self.best_loss,
                    envs_solved: self.max_solved,
                });
            }
            if solved == k && self.first_full.is_none() {
                self.first_full = Some(self.used);
            }
            let e = Evaluated {
                x,
                objectives,
                eval_index: self.used,
            };
            self.admit(&e, generation)?;
            out.push(e);
        }
        Ok(out)
    }

    fn admit(&mut self, e: &Evaluated, generation: usize) -> Result<(), CooptError> {
        let covered = self
            .archive
            .iter()
            .any(|a| dominates(&a.objectives, &e.objectives) || a.objectives == e.objectives);
        if covered {
            return Ok(());
        }
        self.archive.retain(|a| !dominates(&e.objectives, &a.objectives));
        let genome = self.mode.decode(&e.x);
        let dtw = aggregate_dtw(&genome.design, &genome.policy, self.envset, self.profile)?;
        self.admissions.push(Admission {
            order: self.admissions.len(),
            generation,
            eval_index: e.eval_index,
            genome,
            objectives: e.objectives.clone(),
            dtw,
        });
        self.archive.push(ArchiveEntry {
            eval_index: e.eval_index,
            genome,
            objectives: e.objectives.clone(),
        });
        Ok(())
    }
}

/// Rank (front index) and crowding distance for every individual.
fn rank_and_crowding(objectives: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    let n = objectives.len();
    let mut rank = vec![0; n];
    let mut crowd = vec![0.0; n];
    for (r, front) in non_dominated_fronts(objectives).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distances(objectives, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

fn tournament(rng: &mut Rng, rank: &[usize], crowd: &[f64]) -> usize {
    let n = rank.len();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    let better = |i: usize, j: usize| {
        rank[i] < rank[j] || (rank[i] == rank[j] && (crowd[i] > crowd[j] || (crowd[i] == crowd[j] && i < j)))
    };
    if better(b, a) {
        b
    } else {
        a
    }
}

fn vary(rng: &mut Rng, p1: &[f64], p2: &[f64], bounds: &Bounds) -> Vec<f64> {
    let mut child = p1.to_vec();
    if rng.gen::<f64>() < CROSSOVER_PROB {
        for (c, &g) in child.iter_mut().zip(p2) {
            if rng.gen::<bool>() {
                *c = g;
            }
        }
    }
    for (i, c) in child.iter_mut().enumerate() {
        if rng.gen::<f64>() < MUTATION_PROB {
            let normal = Normal::new(0.0, MUTATION_SCALE * bounds.range(i)).expect("positive scale");
            *c += normal.sample(rng);
        }
    }
    bounds.clamp(&mut child);
    child
}

fn evolve(
    mode: CooptMode,
    envset: &EnvironmentSet,
    profile: &SimProfile,
    budget: usize,
    seed: u64,
) -> Result<CooptRunRecord, CooptError> {
    if budget < POPULATION {
        return Err(CooptError::BudgetBelowPopulation {
            budget,
            population: POPULATION,
        });
    }
    let bounds = mode.bounds();
    let mut rng = rng::stream(seed, &[0x434f_4f50, mode.dim() as u64]);
    let mut run = Run {
        mode,
        envset,
        profile,
        budget,
        used: 0,
        best_loss: f64::INFINITY,
        max_solved: 0,
        curve: Vec::new(),
        first_full: None,
        archive: Vec::new(),
        admissions: Vec::new(),
    };
    let initial: Vec<Vec<f64>> = (0..POPULATION).map(|_| bounds.sample(&mut rng)).collect();
    let mut pop = run.evaluate(initial, 0)?;
    let mut generations = 1;
    while run.used < budget {
        let objectives: Vec<Vec<f64>> = pop.iter().map(|e| e.objectives.clone()).collect();
        let (rank, crowd) = rank_and_crowding(&objectives);
        let offspring: Vec<Vec<f64>> = (0..POPULATION)
            .map(|_| {
                let a = tournament(&mut rng, &rank, &crowd);
                let b = tournament(&mut rng, &rank, &crowd);
                vary(&mut rng, &pop[a].x, &pop[b].x, &bounds)
            })
            .collect();
        let children = run.evaluate(offspring, generations)?;
        generations += 1;
        pop.extend(children);
        pop = survivors(pop);
    }
    let best = run
        .archive
        .iter()
        .min_by(|a, b| {
            let sa: f64 = a.objectives.iter().sum();
            let sb: f64 = b.objectives.iter().sum();
            sa.total_cmp(&sb).then(a.eval_index.cmp(&b.eval_index))
        })
        .cloned()
        .expect("archive holds at least one entry");
    Ok(CooptRunRecord {
        mode,
        seed,
        budget,
        evals_used: run.used,
        generations,
        curve: run.curve,
        admissions: run.admissions,
        evals_to_full_success: run.first_full,
        best,
        archive: run.archive,
    })
}

/// Keeps the best `POPULATION` by front, then by crowding distance.
fn survivors(mut pool: Vec<Evaluated>) -> Vec<Evaluated> {
    if pool.len() <= POPULATION {
        return pool;
    }
    let objectives: Vec<Vec<f64>> = pool.iter().map(|e| e.objectives.clone()).collect();
    let mut keep = Vec::with_capacity(POPULATION);
    for front in non_dominated_fronts(&objectives) {
        if keep.len() + front.len() <= POPULATION {
            keep.extend(front);
        } else {
            let crowd = crowding_distances(&objectives, &front);
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(front[a].cmp(&front[b])));
            keep.extend(order.iter().take(POPULATION - keep.len()).map(|&i| front[i]));
            break;
        }
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Evaluated>> = pool.drain(..).map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

/// Evolves sensor placement and weights together.
pub fn co_optimize(
    envset: &EnvironmentSet,
    profile: &SimProfile,
    budget: usize,
    seed: u64,
) -> Result<CooptRunRecord, CooptError> {
    evolve(CooptMode::Coopt, envset, profile, budget, seed)
}

/// Evolves weights only, on the canonical design.
pub fn baseline_optimize(
    envset: &EnvironmentSet,
    profile: &SimProfile,
    budget: usize,
    seed: u64,
) -> Result<CooptRunRecord, CooptError> {
    evolve(CooptMode::Baseline, envset, profile, budget, seed)
}

/// Mann-Whitney U on evaluations to full success, censored at `budget + 1`.
pub fn compare_runs(a: &[CooptRunRecord], b: &[CooptRunRecord]) -> Result<MannWhitney, AnalysisError> {
    let xs: Vec<f64> = a.iter().map(|r| r.evals_or_censored() as f64).collect();
    let ys: Vec<f64> = b.iter().map(|r| r.evals_or_censored() as f64).collect();
    mann_whitney(&xs, &ys)
}
