//! Subcommand implementations. Each writes into `<out>/<command>/` with its
//! own manifest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use morpho_core::analysis::{
    aggregate_dtw, bonferroni, chapter_two_metrics, pearson, spearman, ChapterTwoMetrics, StatResult, DTW_MAX_LEN,
};
use morpho_core::coopt::{
    baseline_optimize, co_optimize, compare_runs, Admission, Checkpoint, CooptMode, CooptRunRecord, Genome,
    CROSSOVER_PROB, MUTATION_PROB, MUTATION_SCALE, POPULATION,
};
use morpho_core::landscape::{sweep_designs, DesignGrid, SweepRow, WeightGrid};
use morpho_core::optimizers::{
    hill_climb, summarize_training, train_sweep, FitnessCombinator, HillClimbConfig, LineageLog, Method, TrainRow,
};
use morpho_core::parallel::ordered_map;
use morpho_core::rng;
use morpho_core::vehicle::{BodyDesign, Policy};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::formats::{self, fmt_sig, MetricsRecord};
use crate::manifest::OutputDir;

fn open(cfg: &ExperimentConfig, command: &str, notes: Vec<String>) -> Result<OutputDir> {
    let root = cfg.out.join(command);
    OutputDir::create(&root, command, &cfg.snapshot_toml(), notes)
        .with_context(|| format!("cannot create output directory {}", root.display()))
}

fn profile_notes(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let p = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    Ok(vec![format!(
        "profile: dt {} steps {} success_radius {} sensor_floor {} body_length {}",
        p.dt, p.steps, p.success_radius, p.sensor_floor, p.body_length
    )])
}

/// Landscape sweep: `metrics.csv` plus one overlap binary per design.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<SweepRow>> {
    let profile = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    let envset = cfg.environment_set().map_err(anyhow::Error::msg)?;
    let dgrid = DesignGrid::new(cfg.sweep.bins)?;
    let wgrid = WeightGrid::new(cfg.sweep.grid_n)?;
    let mut out = open(cfg, "sweep", profile_notes(cfg)?)?;
    info!(
        "sweep: {} designs x {}^2 policies x {} environments on {workers} workers",
        dgrid.len(),
        wgrid.n(),
        envset.len()
    );
    let rows = sweep_designs(&dgrid, &wgrid, &envset, &profile, workers, cfg.sweep.store_success_matrices);
    for r in &rows {
        let name = formats::overlap_file_name(r.index);
        out.write_quiet(&format!("overlap/{name}"), &formats::encode_overlap(&r.overlap))?;
        if let Some(ms) = &r.success {
            for (k, m) in ms.iter().enumerate() {
                let single = morpho_core::landscape::overlap(std::slice::from_ref(m))?;
                let stem = name.trim_end_matches(".ovlp");
                out.write_quiet(&format!("success/{stem}_env{k}.ovlp"), &formats::encode_overlap(&single))?;
            }
        }
    }
    out.write("metrics.csv", &formats::metrics_csv(&rows, envset.len())?)?;
    out.finish()?;
    Ok(rows)
}

/// Picks `count` designs spread over the `M_L` distribution: designs are
/// ordered by `(M_L, index)`, cut into `count` equal strata, and one design is
/// drawn uniformly from each.
pub fn stratified_sample(records: &[MetricsRecord], count: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<&MetricsRecord> = records.iter().collect();
    order.sort_by(|a, b| a.m_l.total_cmp(&b.m_l).then(a.design_index.cmp(&b.design_index)));
    if count >= order.len() {
        let mut all: Vec<usize> = order.iter().map(|r| r.design_index).collect();
        all.sort_unstable();
        return all;
    }
    let n = order.len();
    let mut picked: Vec<usize> = (0..count)
        .map(|s| {
            let lo = s * n / count;
            let hi = (s + 1) * n / count;
            let mut r = rng::stream(seed, &[0x5354_5241, s as u64]);
            order[r.gen_range(lo..hi)].design_index
        })
        .collect();
    picked.sort_unstable();
    picked
}

fn default_metrics_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.join("sweep").join("metrics.csv")
}

/// Optimizer sweep: `training.csv` and `training_summary.csv`.
pub fn run_train(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<TrainRow>> {
    let profile = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    let envset = cfg.environment_set().map_err(anyhow::Error::msg)?;
    let metrics_path = cfg.train.metrics.clone().unwrap_or_else(|| default_metrics_path(cfg));
    let designs: Vec<(usize, BodyDesign)> = if metrics_path.exists() {
        let records = formats::read_metrics_csv(&metrics_path)?;
        let chosen = match cfg.train.sample {
            Some(count) => stratified_sample(&records, count, cfg.seed),
            None => records.iter().map(|r| r.design_index).collect(),
        };
        records
            .iter()
            .filter(|r| chosen.binary_search(&r.design_index).is_ok() || cfg.train.sample.is_none())
            .map(|r| (r.design_index, BodyDesign::from_array_clamped(r.design)))
            .collect()
    } else {
        if cfg.train.sample.is_some() {
            bail!(
                "train.sample needs a metrics table; none at {} (run `sweep` first or set train.metrics)",
                metrics_path.display()
            );
        }
        let grid = DesignGrid::new(cfg.sweep.bins)?;
        grid.designs().into_iter().enumerate().collect()
    };
    let mut notes = profile_notes(cfg)?;
    notes.push(format!("designs: {}", designs.len()));
    notes.push("censored runs: evals_to_full_success -1, averaged as budget+1".to_string());
    notes.push("runs stop at the first candidate solving every environment".to_string());
    let mut out = open(cfg, "train", notes)?;
    info!(
        "train: {} designs x {} methods x {} seeds, budget {}",
        designs.len(),
        cfg.train.methods.len(),
        cfg.train.seeds,
        cfg.train.budget
    );
    let rows = train_sweep(
        &designs,
        &cfg.train.methods,
        cfg.train.seeds,
        cfg.train.budget,
        &envset,
        &profile,
        cfg.seed,
        workers,
    )?;
    out.write("training.csv", &formats::training_csv(&rows)?)?;
    let summary = summarize_training(&rows, cfg.train.budget);
    out.write("training_summary.csv", &formats::training_summary_csv(&summary)?)?;
    out.finish()?;
    Ok(rows)
}

/// One line of `runs.jsonl`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RunLine {
    Checkpoint {
        mode: CooptMode,
        seed: u64,
        #[serde(flatten)]
        checkpoint: Checkpoint,
    },
    Admission {
        mode: CooptMode,
        seed: u64,
        #[serde(flatten)]
        admission: Admission,
    },
    Summary {
        mode: CooptMode,
        seed: u64,
        evals_used: usize,
        generations: usize,
        evals_to_full_success: Option<usize>,
        best_genome: Genome,
        best_objectives: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CooptReport {
    pub budget: usize,
    pub seeds: usize,
    pub coopt_median_evals: f64,
    pub baseline_median_evals: f64,
    pub coopt_full_success_runs: usize,
    pub baseline_full_success_runs: usize,
    /// Mann-Whitney on evaluations to full success (censored at budget + 1),
    /// co-optimization first.
    pub mann_whitney: StatResult,
    pub u_coopt: f64,
    pub u_baseline: f64,
    /// Spearman correlation of admission order with aggregate DTW, pooled
    /// over co-optimization runs.
    pub homeostasis_trend: Option<StatResult>,
}

pub struct CooptOutcome {
    pub coopt: Vec<CooptRunRecord>,
    pub baseline: Vec<CooptRunRecord>,
    pub report: CooptReport,
}

pub fn coopt_seed(master: u64, rep: usize) -> u64 {
    rng::derive_seed(master, &[0xC0_0F7, rep as u64])
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Pooled Spearman test of admission order against aggregate DTW.
pub fn homeostasis_trend(records: &[CooptRunRecord]) -> Option<StatResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = records
        .iter()
        .flat_map(|r| r.admissions.iter().map(|a| (a.order as f64, a.dtw)))
        .unzip();
    spearman(&x, &y).ok()
}

fn run_lines(r: &CooptRunRecord) -> Vec<RunLine> {
    let mut lines: Vec<RunLine> = r
        .curve
        .iter()
        .map(|&checkpoint| RunLine::Checkpoint {
            mode: r.mode,
            seed: r.seed,
            checkpoint,
        })
        .collect();
    lines.extend(r.admissions.iter().map(|a| RunLine::Admission {
        mode: r.mode,
        seed: r.seed,
        admission: a.clone(),
    }));
    lines.push(RunLine::Summary {
        mode: r.mode,
        seed: r.seed,
        evals_used: r.evals_used,
        generations: r.generations,
        evals_to_full_success: r.evals_to_full_success,
        best_genome: r.best.genome,
        best_objectives: r.best.objectives.clone(),
    });
    lines
}

/// Co-optimization against the fixed-body baseline, paired by seed.
pub fn run_coopt(cfg: &ExperimentConfig, workers: usize) -> Result<CooptOutcome> {
    let profile = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    let envset = cfg.environment_set().map_err(anyhow::Error::msg)?;
    let (budget, seeds) = (cfg.coopt.budget, cfg.coopt.seeds);
    let mut notes = profile_notes(cfg)?;
    notes.push(format!(
        "moea: non-dominated sorting, population {POPULATION}, binary tournament, uniform crossover p {CROSSOVER_PROB}, gaussian mutation sigma {MUTATION_SCALE} of range with p {MUTATION_PROB:.6} per gene"
    ));
    notes.push(format!("dtw: traces strided to at most {DTW_MAX_LEN} samples"));
    let mut out = open(cfg, "coopt", notes)?;
    info!("coopt: {seeds} seeds per mode, budget {budget}");
    let tasks: Vec<(CooptMode, u64)> = [CooptMode::Coopt, CooptMode::Baseline]
        .into_iter()
        .flat_map(|m| (0..seeds).map(move |s| (m, coopt_seed(cfg.seed, s))))
        .collect();
    let records = ordered_map(&tasks, workers, |_, &(mode, seed)| match mode {
        CooptMode::Coopt => co_optimize(&envset, &profile, budget, seed),
        CooptMode::Baseline => baseline_optimize(&envset, &profile, budget, seed),
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let (coopt, baseline): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| r.mode == CooptMode::Coopt);

    out.write(
        "runs.jsonl",
        &formats::json_lines(coopt.iter().chain(&baseline).flat_map(run_lines)),
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["mode", "seed", "evals_to_full_success", "best_loss", "admissions", "archive_size"])?;
    for r in coopt.iter().chain(&baseline) {
        w.write_record([
            serde_json::to_value(r.mode)?.as_str().unwrap_or_default().to_string(),
            r.seed.to_string(),
            r.evals_to_full_success.map_or("-1".to_string(), |e| e.to_string()),
            fmt_sig(r.best.objectives.iter().sum()),
            r.admissions.len().to_string(),
            r.archive.len().to_string(),
        ])?;
    }
    out.write("summary.csv", &w.into_inner().map_err(|e| e.into_error())?)?;

    let mw = compare_runs(&coopt, &baseline)?;
    let report = CooptReport {
        budget,
        seeds,
        coopt_median_evals: median(coopt.iter().map(|r| r.evals_or_censored() as f64).collect()),
        baseline_median_evals: median(baseline.iter().map(|r| r.evals_or_censored() as f64).collect()),
        coopt_full_success_runs: coopt.iter().filter(|r| r.evals_to_full_success.is_some()).count(),
        baseline_full_success_runs: baseline.iter().filter(|r| r.evals_to_full_success.is_some()).count(),
        mann_whitney: mw.result,
        u_coopt: mw.u1,
        u_baseline: mw.u2,
        homeostasis_trend: homeostasis_trend(&coopt),
    };
    out.write("report.json", (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    out.finish()?;
    Ok(CooptOutcome {
        coopt,
        baseline,
        report,
    })
}

/// Aggregate DTW for the genomes listed in the config.
pub fn run_dtw(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    let profile = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    let envset = cfg.environment_set().map_err(anyhow::Error::msg)?;
    if cfg.dtw.genomes.is_empty() {
        bail!("dtw.genomes is empty; list genomes as [l1x, l1y, l2x, l2y, w1, w2]");
    }
    let mut notes = profile_notes(cfg)?;
    notes.push(format!("dtw: traces strided to at most {DTW_MAX_LEN} samples"));
    let mut out = open(cfg, "dtw", notes)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "l1x", "l1y", "l2x", "l2y", "w1", "w2", "dtw"])?;
    let mut scores = Vec::new();
    for (i, g) in cfg.dtw.genomes.iter().enumerate() {
        let design = BodyDesign::from_array_clamped([g[0], g[1], g[2], g[3]]);
        let score = aggregate_dtw(&design, &Policy::clamped(g[4], g[5]), &envset, &profile)?;
        let mut rec = vec![i.to_string()];
        rec.extend(g.iter().map(|&v| fmt_sig(v)));
        rec.push(fmt_sig(score));
        w.write_record(&rec)?;
        scores.push(score);
    }
    out.write("dtw.csv", &w.into_inner().map_err(|e| e.into_error())?)?;
    out.finish()?;
    Ok(scores)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodCorrelation {
    pub method: Method,
    pub designs: usize,
    pub pearson: StatResult,
    /// p-value after Bonferroni correction over the methods tested.
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub designs: usize,
    pub ml_vs_mci: Option<StatResult>,
    pub ml_vs_mean_evals: Vec<MethodCorrelation>,
}

/// Pearson r(M_L, mean evaluations) per method over the designs in `rows`.
pub fn efficiency_correlations(
    metrics: &[MetricsRecord],
    rows: &[TrainRow],
    budget: usize,
) -> Vec<(Method, usize, Option<StatResult>)> {
    let summary = summarize_training(rows, budget);
    let mut methods: Vec<Method> = summary.iter().map(|s| s.method).collect();
    methods.sort();
    methods.dedup();
    methods
        .into_iter()
        .map(|m| {
            let (x, y): (Vec<f64>, Vec<f64>) = summary
                .iter()
                .filter(|s| s.method == m)
                .filter_map(|s| {
                    metrics
                        .iter()
                        .find(|r| r.design_index == s.design_index)
                        .map(|r| (r.m_l, s.mean_evals))
                })
                .unzip();
            (m, x.len(), pearson(&x, &y).ok())
        })
        .collect()
}

/// Correlation reports from existing sweep and training tables.
pub fn run_stats(cfg: &ExperimentConfig) -> Result<StatsReport> {
    let metrics_path = cfg.train.metrics.clone().unwrap_or_else(|| default_metrics_path(cfg));
    let metrics = formats::read_metrics_csv(&metrics_path)
        .with_context(|| format!("cannot read {}", metrics_path.display()))?;
    let ml: Vec<f64> = metrics.iter().map(|r| r.m_l).collect();
    let mci: Vec<f64> = metrics.iter().map(|r| r.m_ci).collect();
    let training_path = cfg.out.join("train").join("training.csv");
    let mut per_method = Vec::new();
    if training_path.exists() {
        let rows = formats::read_training_csv(&training_path)?;
        let found = efficiency_correlations(&metrics, &rows, cfg.train.budget);
        let tested = found.iter().filter(|f| f.2.is_some()).count();
        for (method, designs, r) in found {
            if let Some(pearson) = r {
                per_method.push(MethodCorrelation {
                    method,
                    designs,
                    p_bonferroni: bonferroni(pearson.p_value, tested),
                    pearson,
                });
            }
        }
    }
    let report = StatsReport {
        designs: metrics.len(),
        ml_vs_mci: pearson(&ml, &mci).ok(),
        ml_vs_mean_evals: per_method,
    };
    let shown = metrics_path.strip_prefix(&cfg.out).unwrap_or(&metrics_path);
    let mut out = open(cfg, "stats", vec![format!("metrics: {}", shown.display())])?;
    out.write("stats.json", (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    out.finish()?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineageRun {
    pub seed: u64,
    pub log: LineageLog,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinatorSummary {
    pub combinator: FitnessCombinator,
    pub metrics: ChapterTwoMetrics,
}

pub struct HillClimbOutcome {
    pub runs: Vec<LineageRun>,
    /// Per-run metrics in run order.
    pub per_run: Vec<ChapterTwoMetrics>,
    pub summary: Vec<CombinatorSummary>,
}

pub fn hillclimb_seed(master: u64, rep: usize) -> u64 {
    rng::derive_seed(master, &[0x4843, rep as u64])
}

/// Hill-climber runs per combinator, paired by seed, with M1..M4.
pub fn run_hillclimb(cfg: &ExperimentConfig, workers: usize) -> Result<HillClimbOutcome> {
    let profile = cfg.sim_profile().map_err(anyhow::Error::msg)?;
    let envset = cfg.environment_set().map_err(anyhow::Error::msg)?;
    let h = &cfg.hillclimb;
    let design = cfg.hillclimb_design();
    let mut notes = profile_notes(cfg)?;
    notes.push("per-environment fitness 1/d^2 with d the end distance floored at the success radius".to_string());
    let mut out = open(cfg, "hillclimb", notes)?;
    let tasks: Vec<(FitnessCombinator, u64)> = h
        .combinators
        .iter()
        .flat_map(|&c| (0..h.seeds).map(move |s| (c, hillclimb_seed(cfg.seed, s))))
        .collect();
    info!("hillclimb: {} runs, population {}, {} generations", tasks.len(), h.population, h.generations);
    let runs: Vec<LineageRun> = ordered_map(&tasks, workers, |_, &(combinator, seed)| {
        let config = HillClimbConfig {
            combinator,
            population: h.population,
            generations: h.generations,
            mutation: h.mutation,
            seed,
        };
        hill_climb(&envset, &profile, &design, &config).map(|log| LineageRun { seed, log })
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let k = envset.len();
    let per_run: Vec<ChapterTwoMetrics> = runs
        .iter()
        .map(|r| chapter_two_metrics(std::slice::from_ref(&r.log), k))
        .collect::<Result<_, _>>()?;
    let mut summary = Vec::new();
    for &c in &h.combinators {
        let logs: Vec<LineageLog> = runs.iter().filter(|r| r.log.combinator == c).map(|r| r.log.clone()).collect();
        summary.push(CombinatorSummary {
            combinator: c,
            metrics: chapter_two_metrics(&logs, k)?,
        });
    }
    out.write("lineage.jsonl", &formats::json_lines(&runs))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["combinator", "seed", "m1", "m2", "m3", "m4", "champion_events"])?;
    for (r, m) in runs.iter().zip(&per_run) {
        let skipped = m.skipped == 1;
        w.write_record([
            r.log.combinator.to_string(),
            r.seed.to_string(),
            fmt_sig(m.m1),
            if skipped { String::new() } else { fmt_sig(m.m2) },
            if skipped { String::new() } else { fmt_sig(m.m3) },
            if skipped { String::new() } else { fmt_sig(m.m4) },
            champion_events(&r.log).to_string(),
        ])?;
    }
    out.write("runs.csv", &w.into_inner().map_err(|e| e.into_error())?)?;
    out.write("summary.json", (serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    out.finish()?;
    Ok(HillClimbOutcome { runs, per_run, summary })
}

fn champion_events(log: &LineageLog) -> usize {
    let worst = |c: &morpho_core::optimizers::ClimberLog| c.final_distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in log.climbers.iter().enumerate() {
        let w = worst(c);
        if best.is_none_or(|(_, b)| w < b) {
            best = Some((i, w));
        }
    }
    best.map_or(0, |(i, _)| log.climbers[i].events.len())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    std::fs::read_to_string(path).ok().and_then(|t| serde_json::from_str(&t).ok())
}

/// Summary tables over whatever outputs exist under `<out>`, plus plot-ready
/// co-optimization curves.
pub fn run_report(cfg: &ExperimentConfig) -> Result<String> {
    let mut md = String::from("# Experiment report\n\n");
    let metrics_path = default_metrics_path(cfg);
    let mut curves = None;
    if let Ok(metrics) = formats::read_metrics_csv(&metrics_path) {
        let best = metrics
            .iter()
            .max_by(|a, b| a.m_l.total_cmp(&b.m_l).then(b.design_index.cmp(&a.design_index)));
        let canonical = BodyDesign::canonical().to_array();
        let zero = metrics.iter().filter(|r| r.m_l == 0.0).count();
        md.push_str("## Landscape\n\n");
        md.push_str(&format!("- designs: {}\n", metrics.len()));
        md.push_str(&format!("- designs with M_L = 0: {zero}\n"));
        if let Some(b) = best {
            md.push_str(&format!(
                "- best design {} {:?}: M_L {} M_CI {}\n",
                b.design_index,
                b.design,
                fmt_sig(b.m_l),
                fmt_sig(b.m_ci)
            ));
        }
        if let Some(c) = metrics.iter().find(|r| r.design == canonical) {
            md.push_str(&format!("- canonical design: M_L {} M_CI {}\n", fmt_sig(c.m_l), fmt_sig(c.m_ci)));
        }
        md.push('\n');
    }
    if let Some(stats) = read_json::<StatsReport>(&cfg.out.join("stats").join("stats.json")) {
        md.push_str("## Correlations\n\n");
        if let Some(r) = stats.ml_vs_mci {
            md.push_str(&format!("- r(M_L, M_CI) = {} (p = {})\n", fmt_sig(r.statistic), fmt_sig(r.p_value)));
        }
        for m in &stats.ml_vs_mean_evals {
            md.push_str(&format!(
                "- {}: r(M_L, mean evals) = {} (p = {}, {} designs)\n",
                m.method,
                fmt_sig(m.pearson.statistic),
                fmt_sig(m.pearson.p_value),
                m.designs
            ));
        }
        md.push('\n');
    }
    let coopt_dir = cfg.out.join("coopt");
    if let Some(rep) = read_json::<CooptReport>(&coopt_dir.join("report.json")) {
        md.push_str("## Co-optimization\n\n");
        md.push_str(&format!(
            "- median evals to full success: co-optimization {}, baseline {} (censored at {})\n",
            fmt_sig(rep.coopt_median_evals),
            fmt_sig(rep.baseline_median_evals),
            rep.budget + 1
        ));
        md.push_str(&format!(
            "- runs reaching full success: {} / {} vs {} / {}\n",
            rep.coopt_full_success_runs, rep.seeds, rep.baseline_full_success_runs, rep.seeds
        ));
        md.push_str(&format!("- Mann-Whitney p = {}\n", fmt_sig(rep.mann_whitney.p_value)));
        if let Some(t) = rep.homeostasis_trend {
            md.push_str(&format!(
                "- Spearman(admission order, DTW) = {} (p = {})\n",
                fmt_sig(t.statistic),
                fmt_sig(t.p_value)
            ));
        }
        md.push('\n');
        if let Ok(text) = std::fs::read_to_string(coopt_dir.join("runs.jsonl")) {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["mode", "seed", "eval", "best_loss", "envs_solved"])?;
            for line in text.lines() {
                if let Ok(RunLine::Checkpoint { mode, seed, checkpoint }) = serde_json::from_str(line) {
                    w.write_record([
                        serde_json::to_value(mode)?.as_str().unwrap_or_default().to_string(),
                        seed.to_string(),
                        checkpoint.eval.to_string(),
                        fmt_sig(checkpoint.best_loss),
                        checkpoint.envs_solved.to_string(),
                    ])?;
                }
            }
            curves = Some(w.into_inner().map_err(|e| e.into_error())?);
        }
    }
    if let Some(summary) = read_json::<Vec<CombinatorSummary>>(&cfg.out.join("hillclimb").join("summary.json")) {
        md.push_str("## Hill climber\n\n| combinator | M1 | M2 | M3 | M4 |\n|---|---|---|---|---|\n");
        for s in summary {
            md.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                s.combinator,
                fmt_sig(s.metrics.m1),
                fmt_sig(s.metrics.m2),
                fmt_sig(s.metrics.m3),
                fmt_sig(s.metrics.m4)
            ));
        }
        md.push('\n');
    }
    let mut out = open(cfg, "report", vec![])?;
    out.write("report.md", md.as_bytes())?;
    if let Some(c) = curves {
        out.write("coopt_curves.csv", &c)?;
    }
    out.finish()?;
    Ok(md)
}
