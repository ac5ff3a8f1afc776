//! Derivative-free minimizers, training sweeps and the parallel hill climber.
//!
//! Every minimizer proposes candidates in batches so that policy objectives can
//! push a whole batch through the lockstep integrator at once. Batching never
//! changes the sequence of evaluated candidates, only how they are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::ordered_map;
use crate::rng::{self, Rng};
use crate::vehicle::{
    simulate_batch, BodyDesign, EnvironmentSet, Policy, SimProfile, TrialSpec, WEIGHT_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("bounds need low < high in every dimension (dimension {0})")]
    InvalidBounds(usize),
    #[error("bounds must have at least one dimension")]
    EmptyBounds,
    #[error("unknown method '{0}' (expected random, gss, snes or de)")]
    UnknownMethod(String),
    #[error("unknown combinator '{0}' (expected sum, product or min)")]
    UnknownCombinator(String),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("mutation scale must be finite and non-negative, got {0}")]
    InvalidMutation(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Bounds {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self, OptError> {
        if low.is_empty() {
            return Err(OptError::EmptyBounds);
        }
        if low.len() != high.len() {
            return Err(OptError::InvalidBounds(low.len().min(high.len())));
        }
        if let Some(i) = (0..low.len()).find(|&i| low[i].partial_cmp(&high[i]) != Some(std::cmp::Ordering::Less)) {
            return Err(OptError::InvalidBounds(i));
        }
        Ok(Self { low, high })
    }

    /// The same interval in every dimension.
    pub fn uniform(dim: usize, low: f64, high: f64) -> Result<Self, OptError> {
        Self::new(vec![low; dim], vec![high; dim])
    }

    /// The controller weight box `[-1, 1]^2`.
    pub fn weights() -> Self {
        Self::uniform(2, -WEIGHT_LIMIT, WEIGHT_LIMIT).expect("static bounds")
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    pub fn range(&self, i: usize) -> f64 {
        self.high[i] - self.low[i]
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.low[i], self.high[i]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().enumerate().all(|(i, &v)| self.low[i] <= v && v <= self.high[i])
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        (0..self.dim())
            .map(|i| rng.gen_range(self.low[i]..=self.high[i]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Gss,
    Snes,
    De,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Random, Method::Gss, Method::Snes, Method::De];

    pub fn name(self) -> &'static str {
        match self {
            Method::Random => "random",
            Method::Gss => "gss",
            Method::Snes => "snes",
            Method::De => "de",
        }
    }

    fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = OptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| OptError::UnknownMethod(s.to_string()))
    }
}

/// Loss of one candidate and how many environments it solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub loss: f64,
    pub solved: usize,
}

/// A deterministic, batch-evaluated objective.
pub trait Objective: Sync {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Vec<Evaluation>;

    /// Number of environments a candidate can solve; zero disables success
    /// bookkeeping.
    fn environments(&self) -> usize;
}

/// Plain scalar function with no notion of environments.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Vec<Evaluation> {
        candidates
            .iter()
            .map(|x| Evaluation {
                loss: (self.0)(x),
                solved: 0,
            })
            .collect()
    }

    fn environments(&self) -> usize {
        0
    }
}

/// Phototaxis training loss of a fixed body over `(w1, w2)`.
pub struct PolicyObjective<'a> {
    pub design: BodyDesign,
    pub envset: &'a EnvironmentSet,
    pub profile: &'a SimProfile,
}

impl Objective for PolicyObjective<'_> {
    fn evaluate(&self, candidates: &[Vec<f64>]) -> Vec<Evaluation> {
        let pairs: Vec<(BodyDesign, Policy)> = candidates
            .iter()
            .map(|x| (self.design, Policy::clamped(x[0], x[1])))
            .collect();
        loss_batch(&pairs, self.envset, self.profile)
    }

    fn environments(&self) -> usize {
        self.envset.len()
    }
}

/// Sum of closest approaches over environments, and the number solved.
pub fn loss(design: &BodyDesign, policy: &Policy, envset: &EnvironmentSet, profile: &SimProfile) -> (f64, usize) {
    let e = loss_batch(&[(*design, *policy)], envset, profile)[0];
    (e.loss, e.solved)
}

/// [`loss`] for many `(design, policy)` pairs in one integrator batch.
pub fn loss_batch(pairs: &[(BodyDesign, Policy)], envset: &EnvironmentSet, profile: &SimProfile) -> Vec<Evaluation> {
    let k = envset.len();
    let specs: Vec<TrialSpec> = pairs
        .iter()
        .flat_map(|&(design, policy)| {
            envset.iter().map(move |env| TrialSpec {
                design,
                policy,
                start: env.start,
            })
        })
        .collect();
    simulate_batch(&specs, profile)
        .chunks(k)
        .map(|c| Evaluation {
            loss: c.iter().map(|o| o.min_distance).sum(),
            solved: c.iter().filter(|o| o.success).count(),
        })
        .collect()
}

/// Trace of one minimizer run. Evaluation indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptRunRecord {
    pub method: Method,
    pub seed: u64,
    pub budget: usize,
    pub evals_used: usize,
    /// `(eval index, best loss so far)` at every improvement.
    pub best_loss_curve: Vec<(usize, f64)>,
    /// `(eval index, most environments solved by any candidate so far)` at
    /// every increase.
    pub success_count_curve: Vec<(usize, usize)>,
    /// `None` when no candidate solved every environment (censored).
    pub evals_to_full_success: Option<usize>,
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    pub best_solved: usize,
}

impl OptRunRecord {
    /// Evaluations to full success with censored runs counted at `budget + 1`.
    pub fn evals_or_censored(&self) -> usize {
        self.evals_to_full_success.unwrap_or(self.budget + 1)
    }

    pub fn is_censored(&self) -> bool {
        self.evals_to_full_success.is_none()
    }
}

struct Tracker<'a, O: Objective + ?Sized> {
    objective: &'a O,
    bounds: &'a Bounds,
    budget: usize,
    stop_on_success: bool,
    used: usize,
    best_loss: f64,
    best_x: Vec<f64>,
    best_solved: usize,
    max_solved: usize,
    loss_curve: Vec<(usize, f64)>,
    success_curve: Vec<(usize, usize)>,
    first_full: Option<usize>,
}

impl<'a, O: Objective + ?Sized> Tracker<'a, O> {
    fn new(objective: &'a O, bounds: &'a Bounds, budget: usize, stop_on_success: bool) -> Self {
        Self {
            objective,
            bounds,
            budget,
            stop_on_success,
            used: 0,
            best_loss: f64::INFINITY,
            best_x: Vec::new(),
            best_solved: 0,
            max_solved: 0,
            loss_curve: Vec::new(),
            success_curve: Vec::new(),
            first_full: None,
        }
    }

    fn done(&self) -> bool {
        self.used >= self.budget || (self.stop_on_success && self.first_full.is_some())
    }

    /// Evaluates as much of `xs` as the budget allows and returns the losses
    /// of the evaluated prefix.
    fn evaluate(&mut self, xs: &[Vec<f64>]) -> Vec<f64> {
        if self.done() {
            return Vec::new();
        }
        let take = xs.len().min(self.budget - self.used);
        let batch = &xs[..take];
        debug_assert!(batch.iter().all(|x| self.bounds.contains(x)));
        let evals = self.objective.evaluate(batch);
        let k = self.objective.environments();
        for (x, e) in batch.iter().zip(&evals) {
            self.used += 1;
            if e.loss < self.best_loss || self.best_x.is_empty() {
                self.best_loss = e.loss;
                self.best_x = x.clone();
                self.best_solved = e.solved;
                self.loss_curve.push((self.used, e.loss));
            }
            if e.solved > self.max_solved || self.success_curve.is_empty() {
                self.max_solved = self.max_solved.max(e.solved);
                self.success_curve.push((self.used, self.max_solved));
            }
            if k > 0 && e.solved == k && self.first_full.is_none() {
                self.first_full = Some(self.used);
            }
        }
        evals.iter().map(|e| e.loss).collect()
    }

    fn finish(self, method: Method, seed: u64) -> OptRunRecord {
        OptRunRecord {
            method,
            seed,
            budget: self.budget,
            evals_used: self.used,
            best_loss_curve: self.loss_curve,
            success_count_curve: self.success_curve,
            evals_to_full_success: self.first_full,
            best_x: self.best_x,
            best_loss: self.best_loss,
            best_solved: self.best_solved,
        }
    }
}

/// Candidates proposed per random-search batch.
const RANDOM_BATCH: usize = 8;
/// Initial compass step as a fraction of each range.
const GSS_INITIAL_STEP: f64 = 0.1;
const GSS_MIN_STEP: f64 = 1e-6;
const SNES_INITIAL_SIGMA: f64 = 0.25;
const DE_POPULATION: usize = 20;
const DE_F: f64 = 0.7;
const DE_CR: f64 = 0.9;

/// Minimizes `objective` over `bounds` with at most `budget` evaluations.
pub fn minimize<O: Objective + ?Sized>(
    method: Method,
    objective: &O,
    bounds: &Bounds,
    budget: usize,
    seed: u64,
) -> Result<OptRunRecord, OptError> {
    minimize_with(method, objective, bounds, budget, seed, false)
}

/// Like [`minimize`]; with `stop_on_success` the run ends after the batch in
/// which a candidate first solves every environment. The evaluation sequence
/// up to that point is unchanged.
pub fn minimize_with<O: Objective + ?Sized>(
    method: Method,
    objective: &O,
    bounds: &Bounds,
    budget: usize,
    seed: u64,
    stop_on_success: bool,
) -> Result<OptRunRecord, OptError> {
    if budget == 0 {
        return Err(OptError::ZeroBudget);
    }
    // The initial candidate depends only on the seed, so every method starts
    // from the same point.
    let x0 = bounds.sample(&mut rng::stream(seed, &[0]));
    let mut rng = rng::stream(seed, &[method.tag()]);
    let mut t = Tracker::new(objective, bounds, budget, stop_on_success);
    match method {
        Method::Random => random_search(&mut t, x0, &mut rng),
        Method::Gss => compass_search(&mut t, x0),
        Method::Snes => snes(&mut t, x0, &mut rng),
        Method::De => differential_evolution(&mut t, x0, &mut rng),
    }
    Ok(t.finish(method, seed))
}

fn random_search<O: Objective + ?Sized>(t: &mut Tracker<O>, x0: Vec<f64>, rng: &mut Rng) {
    t.evaluate(&[x0]);
    while !t.done() {
        let batch: Vec<Vec<f64>> = (0..RANDOM_BATCH).map(|_| t.bounds.sample(rng)).collect();
        t.evaluate(&batch);
    }
}

/// Compass search with complete polling of all `2D` axis directions per round.
fn compass_search<O: Objective + ?Sized>(t: &mut Tracker<O>, x0: Vec<f64>) {
    let bounds = t.bounds;
    let d = bounds.dim();
    let Some(&f0) = t.evaluate(std::slice::from_ref(&x0)).first() else {
        return;
    };
    let (mut x, mut fx) = (x0, f0);
    let mut step: Vec<f64> = (0..d).map(|i| GSS_INITIAL_STEP * bounds.range(i)).collect();
    while !t.done() && step.iter().any(|&s| s >= GSS_MIN_STEP) {
        let mut polls = Vec::with_capacity(2 * d);
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sign * step[i];
                bounds.clamp(&mut y);
                if y != x {
                    polls.push(y);
                }
            }
        }
        if polls.is_empty() {
            step.iter_mut().for_each(|s| *s *= 0.5);
            continue;
        }
        let losses = t.evaluate(&polls);
        let best = losses
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < fx)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &l)| (i, l));
        match best {
            Some((i, l)) => {
                x = polls[i].clone();
                fx = l;
                for (j, s) in step.iter_mut().enumerate() {
                    *s = (*s * 2.0).min(bounds.range(j));
                }
            }
            None => step.iter_mut().for_each(|s| *s *= 0.5),
        }
    }
}

/// Separable natural evolution strategy.
fn snes<O: Objective + ?Sized>(t: &mut Tracker<O>, x0: Vec<f64>, rng: &mut Rng) {
    let bounds = t.bounds;
    let d = bounds.dim();
    let df = d as f64;
    let lambda = 4 + (3.0 * df.ln()).floor() as usize;
    let eta_sigma = (3.0 + df.ln()) / (5.0 * df.sqrt());
    let utilities = snes_utilities(lambda);
    let mut mu = x0.clone();
    let mut sigma: Vec<f64> = (0..d).map(|i| SNES_INITIAL_SIGMA * bounds.range(i)).collect();
    t.evaluate(&[x0]);
    while !t.done() {
        let noise: Vec<Vec<f64>> = (0..lambda)
            .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        let candidates: Vec<Vec<f64>> = noise
            .iter()
            .map(|s| {
                let mut z: Vec<f64> = (0..d).map(|i| mu[i] + sigma[i] * s[i]).collect();
                bounds.clamp(&mut z);
                z
            })
            .collect();
        let losses = t.evaluate(&candidates);
        if losses.len() < lambda {
            break;
        }
        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        let mut grad_mu = vec![0.0; d];
        let mut grad_sigma = vec![0.0; d];
        for (rank, &k) in order.iter().enumerate() {
            let u = utilities[rank];
            for i in 0..d {
                let s = noise[k][i];
                grad_mu[i] += u * s;
                grad_sigma[i] += u * (s * s - 1.0);
            }
        }
        for i in 0..d {
            mu[i] += sigma[i] * grad_mu[i];
            sigma[i] *= (0.5 * eta_sigma * grad_sigma[i]).exp();
        }
        bounds.clamp(&mut mu);
    }
}

/// Rank-based fitness shaping weights, best rank first; they sum to zero.
pub fn snes_utilities(lambda: usize) -> Vec<f64> {
    let l = lambda as f64;
    let raw: Vec<f64> = (1..=lambda)
        .map(|i| ((l / 2.0 + 1.0).ln() - (i as f64).ln()).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total - 1.0 / l).collect()
}

/// DE/rand/1/bin with synchronous generations and bound clamping.
fn differential_evolution<O: Objective + ?Sized>(t: &mut Tracker<O>, x0: Vec<f64>, rng: &mut Rng) {
    let bounds = t.bounds;
    let d = bounds.dim();
    let mut pop = vec![x0];
    pop.extend((1..DE_POPULATION).map(|_| bounds.sample(rng)));
    let mut fit = t.evaluate(&pop);
    if fit.len() < DE_POPULATION {
        return;
    }
    while !t.done() {
        let trials: Vec<Vec<f64>> = (0..DE_POPULATION)
            .map(|i| {
                let [r1, r2, r3] = distinct_others(rng, i, DE_POPULATION);
                let jrand = rng.gen_range(0..d);
                let mut y = pop[i].clone();
                for j in 0..d {
                    if j == jrand || rng.gen::<f64>() < DE_CR {
                        y[j] = pop[r1][j] + DE_F * (pop[r2][j] - pop[r3][j]);
                    }
                }
                bounds.clamp(&mut y);
                y
            })
            .collect();
        let losses = t.evaluate(&trials);
        for (i, &l) in losses.iter().enumerate() {
            if l <= fit[i] {
                pop[i] = trials[i].clone();
                fit[i] = l;
            }
        }
    }
}

fn distinct_others(rng: &mut Rng, exclude: usize, n: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut count = 0;
    while count < 3 {
        let c = rng.gen_range(0..n);
        if c != exclude && !picked[..count].contains(&c) {
            picked[count] = c;
            count += 1;
        }
    }
    picked
}

/// Seed of repetition `rep` for design `design_index`; shared across methods
/// so every method starts from the same initial policy.
pub fn run_seed(master: u64, design_index: usize, rep: usize) -> u64 {
    rng::derive_seed(master, &[design_index as u64, rep as u64])
}

/// One training run, summarized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRow {
    pub design_index: usize,
    pub method: Method,
    pub seed: u64,
    pub evals_to_full_success: Option<usize>,
    pub evals_used: usize,
    pub final_loss: f64,
    pub envs_solved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub design_index: usize,
    pub method: Method,
    pub runs: usize,
    /// Mean evaluations to full success, censored runs counted at `budget + 1`.
    pub mean_evals: f64,
    pub censor_rate: f64,
}

/// Trains every `(design, method, repetition)` with early stop at the first
/// full success. Rows are ordered design, method, repetition regardless of
/// `workers`.
#[allow(clippy::too_many_arguments)]
pub fn train_sweep(
    designs: &[(usize, BodyDesign)],
    methods: &[Method],
    seeds_per_design: usize,
    budget: usize,
    envset: &EnvironmentSet,
    profile: &SimProfile,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<TrainRow>, OptError> {
    if seeds_per_design == 0 {
        return Err(OptError::ZeroCount("seeds_per_design"));
    }
    if budget == 0 {
        return Err(OptError::ZeroBudget);
    }
    let mut tasks = Vec::new();
    for &(index, design) in designs {
        for &method in methods {
            for rep in 0..seeds_per_design {
                tasks.push((index, design, method, run_seed(master_seed, index, rep)));
            }
        }
    }
    let bounds = Bounds::weights();
    Ok(ordered_map(&tasks, workers, |_, &(design_index, design, method, seed)| {
        let objective = PolicyObjective {
            design,
            envset,
            profile,
        };
        let r = minimize_with(method, &objective, &bounds, budget, seed, true).expect("budget checked");
        TrainRow {
            design_index,
            method,
            seed,
            evals_to_full_success: r.evals_to_full_success,
            evals_used: r.evals_used,
            final_loss: r.best_loss,
            envs_solved: r.best_solved,
        }
    }))
}

/// Groups rows by `(design, method)` in first-appearance order.
pub fn summarize_training(rows: &[TrainRow], budget: usize) -> Vec<TrainSummary> {
    let mut out: Vec<(usize, Method, Vec<&TrainRow>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(d, m, _)| *d == r.design_index && *m == r.method) {
            Some((_, _, v)) => v.push(r),
            None => out.push((r.design_index, r.method, vec![r])),
        }
    }
    out.into_iter()
        .map(|(design_index, method, runs)| {
            let n = runs.len() as f64;
            let total: usize = runs
                .iter()
                .map(|r| r.evals_to_full_success.unwrap_or(budget + 1))
                .sum();
            let censored = runs.iter().filter(|r| r.evals_to_full_success.is_none()).count();
            TrainSummary {
                design_index,
                method,
                runs: runs.len(),
                mean_evals: total as f64 / n,
                censor_rate: censored as f64 / n,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessCombinator {
    Sum,
    Product,
    Min,
}

impl FitnessCombinator {
    pub const ALL: [FitnessCombinator; 3] = [Self::Sum, Self::Product, Self::Min];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sum => "sum",
            Self::Product => "product",
            Self::Min => "min",
        }
    }
}

impl fmt::Display for FitnessCombinator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FitnessCombinator {
    type Err = OptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| OptError::UnknownCombinator(s.to_string()))
    }
}

/// Folds per-environment fitness values into one score.
pub fn combine_fitness(kind: FitnessCombinator, f: &[f64]) -> f64 {
    match kind {
        FitnessCombinator::Sum => f.iter().sum(),
        FitnessCombinator::Product => f.iter().product(),
        FitnessCombinator::Min => f.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// One accepted mutation of a climber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationEvent {
    /// Generation that produced the child, starting at 1.
    pub generation: usize,
    pub parent_distances: Vec<f64>,
    pub child_distances: Vec<f64>,
    /// `-(child - parent)`: positive components are improvements.
    pub delta: Vec<f64>,
    pub fitness_before: f64,
    pub fitness_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClimberLog {
    pub events: Vec<MutationEvent>,
    /// Combined fitness after each generation, initial evaluation first.
    pub fitness_trace: Vec<f64>,
    pub final_policy: Policy,
    pub final_fitness: f64,
    /// Floored end-of-trial distance per environment.
    pub final_distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageLog {
    pub combinator: FitnessCombinator,
    pub environments: usize,
    pub climbers: Vec<ClimberLog>,
}

/// Negated change in per-environment distance from parent to child.
pub fn delta_distances(parent: &[f64], child: &[f64]) -> Vec<f64> {
    parent.iter().zip(child).map(|(p, c)| -(c - p)).collect()
}

/// End distances floored at the success radius, for a batch of policies.
fn end_distances(design: &BodyDesign, policies: &[Policy], envset: &EnvironmentSet, profile: &SimProfile) -> Vec<Vec<f64>> {
    let specs: Vec<TrialSpec> = policies
        .iter()
        .flat_map(|&policy| {
            envset.iter().map(move |env| TrialSpec {
                design: *design,
                policy,
                start: env.start,
            })
        })
        .collect();
    simulate_batch(&specs, profile)
        .chunks(envset.len())
        .map(|c| c.iter().map(|o| o.end_distance.max(profile.success_radius)).collect())
        .collect()
}

fn fitness_of(kind: FitnessCombinator, distances: &[f64]) -> f64 {
    let f: Vec<f64> = distances.iter().map(|d| 1.0 / (d * d)).collect();
    combine_fitness(kind, &f)
}

/// Parameters of a hill-climber run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    pub combinator: FitnessCombinator,
    pub population: usize,
    pub generations: usize,
    pub mutation: f64,
    pub seed: u64,
}

/// Independent elitist climbers over policy space; each child competes only
/// with its own parent.
pub fn hill_climb(
    envset: &EnvironmentSet,
    profile: &SimProfile,
    design: &BodyDesign,
    config: &HillClimbConfig,
) -> Result<LineageLog, OptError> {
    if config.population == 0 {
        return Err(OptError::ZeroCount("population"));
    }
    if config.generations == 0 {
        return Err(OptError::ZeroCount("generations"));
    }
    if !(config.mutation >= 0.0 && config.mutation.is_finite()) {
        return Err(OptError::InvalidMutation(config.mutation));
    }
    let kind = config.combinator;
    let mut rng = rng::stream(config.seed, &[0x4c49_4e45]);
    let mut policies: Vec<Policy> = (0..config.population)
        .map(|_| {
            Policy::clamped(
                rng.gen_range(-WEIGHT_LIMIT..=WEIGHT_LIMIT),
                rng.gen_range(-WEIGHT_LIMIT..=WEIGHT_LIMIT),
            )
        })
        .collect();
    let mut distances = end_distances(design, &policies, envset, profile);
    let mut fitness: Vec<f64> = distances.iter().map(|d| fitness_of(kind, d)).collect();
    let mut climbers: Vec<ClimberLog> = fitness
        .iter()
        .zip(&policies)
        .map(|(&f, &p)| ClimberLog {
            events: Vec::new(),
            fitness_trace: vec![f],
            final_policy: p,
            final_fitness: f,
            final_distances: Vec::new(),
        })
        .collect();
    for generation in 1..=config.generations {
        let children: Vec<Policy> = policies
            .iter()
            .map(|p| {
                let n1: f64 = StandardNormal.sample(&mut rng);
                let n2: f64 = StandardNormal.sample(&mut rng);
                Policy::clamped(p.w1 + config.mutation * n1, p.w2 + config.mutation * n2)
            })
            .collect();
        let child_distances = end_distances(design, &children, envset, profile);
        for (i, cd) in child_distances.into_iter().enumerate() {
            let cf = fitness_of(kind, &cd);
            if cf > fitness[i] {
                climbers[i].events.push(MutationEvent {
                    generation,
                    delta: delta_distances(&distances[i], &cd),
                    parent_distances: std::mem::take(&mut distances[i]),
                    child_distances: cd.clone(),
                    fitness_before: fitness[i],
                    fitness_after: cf,
                });
                policies[i] = children[i];
                distances[i] = cd;
                fitness[i] = cf;
            }
            climbers[i].fitness_trace.push(fitness[i]);
        }
    }
    for (i, c) in climbers.iter_mut().enumerate() {
        c.final_policy = policies[i];
        c.final_fitness = fitness[i];
        c.final_distances = distances[i].clone();
    }
    Ok(LineageLog {
        combinator: kind,
        environments: envset.len(),
        climbers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> FnObjective<impl Fn(&[f64]) -> f64 + Sync> {
        FnObjective(|x: &[f64]| x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("cmaes".parse::<Method>().is_err());
    }

    #[test]
    fn zero_budget_is_rejected() {
        let b = Bounds::weights();
        assert_eq!(minimize(Method::Random, &sphere(), &b, 0, 1), Err(OptError::ZeroBudget));
    }

    #[test]
    fn budget_one_is_initial_candidate() {
        let b = Bounds::weights();
        let records: Vec<OptRunRecord> = Method::ALL
            .iter()
            .map(|&m| minimize(m, &sphere(), &b, 1, 9).unwrap())
            .collect();
        for r in &records {
            assert_eq!(r.evals_used, 1);
            assert_eq!(r.best_x, records[0].best_x);
            assert_eq!(r.best_loss_curve.len(), 1);
        }
    }

    #[test]
    fn utilities_sum_to_zero_and_decrease() {
        for lambda in [4, 6, 9, 20] {
            let u = snes_utilities(lambda);
            assert!(u.iter().sum::<f64>().abs() < 1e-12);
            assert!(u.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![0.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
        assert!(Bounds::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let b = Bounds::uniform(2, -1.0, 1.0).unwrap();
        let mut x = [3.0, -7.0];
        b.clamp(&mut x);
        assert_eq!(x, [1.0, -1.0]);
    }

    #[test]
    fn combinator_examples() {
        let f = [0.5, 2.0];
        assert_eq!(combine_fitness(FitnessCombinator::Sum, &f), 2.5);
        assert_eq!(combine_fitness(FitnessCombinator::Product, &f), 1.0);
        assert_eq!(combine_fitness(FitnessCombinator::Min, &f), 0.5);
        for kind in FitnessCombinator::ALL {
            assert_eq!(combine_fitness(kind, &[0.7]), 0.7);
            assert_eq!(kind.name().parse::<FitnessCombinator>().unwrap(), kind);
        }
    }

    #[test]
    fn delta_is_negated_change() {
        assert_eq!(delta_distances(&[5.0, 5.0], &[3.0, 6.0]), vec![2.0, -1.0]);
    }

    #[test]
    fn summary_counts_censored_at_budget_plus_one() {
        let row = |e: Option<usize>| TrainRow {
            design_index: 3,
            method: Method::Gss,
            seed: 0,
            evals_to_full_success: e,
            evals_used: 0,
            final_loss: 0.0,
            envs_solved: 0,
        };
        let s = summarize_training(&[row(Some(10)), row(None)], 100);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_evals, (10.0 + 101.0) / 2.0);
        assert_eq!(s[0].censor_rate, 0.5);
    }
}
