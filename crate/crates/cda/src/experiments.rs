//! Scenario runner: one repetition generates an SCM, samples and splits it,
//! augments the training part and scores baseline and augmented learners on
//! every variable as target. Sweeps run repetitions over the values of one
//! axis and aggregate the results.
//!
//! Seed lineage: `rep = derive(master, repetition)`, then model, sample,
//! split, outlier and learner seeds are `derive(rep, 1..=5)` and each target
//! uses `derive(learner, target)`. The lineage does not depend on the axis
//! value, so all cells of one repetition share their random draws where the
//! axis allows it.

use std::collections::BTreeMap;
use std::time::Instant;

use cda_core::augment::{augment, AugmentedSet, FilterStats};
use cda_core::dataset::{Dataset, Matrix};
use cda_core::kernels::KernelSpec;
use cda_core::learner::{self, GbtParams};
use cda_core::metrics::{self, DistributionReport, MetricConfig};
use cda_core::scm::{inject_outliers, ScmModel};
use cda_core::seed::{derive, rng};
use cda_core::Error as CoreError;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, AxisValue, CellSettings, ScenarioConfig};
use crate::error::CliError;

const MAPE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedLineage {
    pub master: u64,
    pub repetition: u64,
    pub model: u64,
    pub sample: u64,
    pub split: u64,
    pub outlier: u64,
    pub learner: u64,
}

impl SeedLineage {
    pub fn new(master: u64, rep_index: usize) -> Self {
        let rep = derive(master, rep_index as u64);
        Self {
            master,
            repetition: rep,
            model: derive(rep, 1),
            sample: derive(rep, 2),
            split: derive(rep, 3),
            outlier: derive(rep, 4),
            learner: derive(rep, 5),
        }
    }

    pub fn target(&self, target: usize) -> u64 {
        derive(self.learner, target as u64)
    }
}

/// How the augmentation of one repetition ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    AllFiltered,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::AllFiltered => "all_filtered",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnerScore {
    pub mape: f64,
    pub r2: f64,
    pub best: GbtParams,
}

/// One report row: a (axis value, repetition, target) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub axis: Axis,
    pub axis_index: usize,
    pub axis_value: AxisValue,
    pub repetition: usize,
    pub target: usize,
    pub seeds: SeedLineage,
    pub target_seed: u64,
    pub settings: CellSettings,
    pub n_train: usize,
    pub status: Status,
    pub stats: FilterStats,
    pub distribution: Option<DistributionSummary>,
    pub outlier_distribution: Option<DistributionSummary>,
    pub baseline: Option<LearnerScore>,
    pub augmented: Option<LearnerScore>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionSummary {
    pub kl: f64,
    pub wasserstein: f64,
    pub variance_rel_diff: f64,
}

impl From<&DistributionReport> for DistributionSummary {
    fn from(r: &DistributionReport) -> Self {
        Self {
            kl: r.kl_divergence,
            wasserstein: r.wasserstein,
            variance_rel_diff: r.variance_rel_diff,
        }
    }
}

impl ReportRow {
    pub const HEADER: [&'static str; 40] = [
        "axis",
        "axis_value",
        "repetition",
        "target",
        "master_seed",
        "repetition_seed",
        "model_seed",
        "sample_seed",
        "split_seed",
        "outlier_seed",
        "learner_seed",
        "target_seed",
        "d",
        "expected_degree",
        "mechanism",
        "noise_amplitude",
        "n_samples",
        "n_train",
        "theta",
        "outlier_fraction",
        "status",
        "all_filtered",
        "aug_set_size",
        "frac_new",
        "frac_filtered",
        "kl",
        "wasserstein",
        "variance_rel_diff",
        "kl_outlier",
        "wasserstein_outlier",
        "variance_rel_diff_outlier",
        "mape_baseline",
        "mape_augmented",
        "r2_baseline",
        "r2_augmented",
        "n_estimators_baseline",
        "reg_lambda_baseline",
        "n_estimators_augmented",
        "reg_lambda_augmented",
        "error",
    ];

    pub fn fields(&self) -> Vec<String> {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let s = &self.settings;
        let dist = self.distribution;
        let out = self.outlier_distribution;
        vec![
            self.axis.to_string(),
            self.axis_value.to_string(),
            self.repetition.to_string(),
            self.target.to_string(),
            self.seeds.master.to_string(),
            self.seeds.repetition.to_string(),
            self.seeds.model.to_string(),
            self.seeds.sample.to_string(),
            self.seeds.split.to_string(),
            self.seeds.outlier.to_string(),
            self.seeds.learner.to_string(),
            self.target_seed.to_string(),
            s.d.to_string(),
            s.expected_degree.to_string(),
            s.mechanism.to_string(),
            s.noise_amplitude.to_string(),
            s.n_samples.to_string(),
            self.n_train.to_string(),
            s.theta.to_string(),
            s.outlier_fraction.to_string(),
            self.status.name().to_string(),
            self.stats.all_filtered.to_string(),
            self.stats.size.to_string(),
            self.stats.frac_new.to_string(),
            self.stats.frac_filtered.to_string(),
            opt(dist.map(|m| m.kl)),
            opt(dist.map(|m| m.wasserstein)),
            opt(dist.map(|m| m.variance_rel_diff)),
            opt(out.map(|m| m.kl)),
            opt(out.map(|m| m.wasserstein)),
            opt(out.map(|m| m.variance_rel_diff)),
            opt(self.baseline.map(|l| l.mape)),
            opt(self.augmented.map(|l| l.mape)),
            opt(self.baseline.map(|l| l.r2)),
            opt(self.augmented.map(|l| l.r2)),
            opt(self.baseline.map(|l| l.best.n_estimators)),
            opt(self.baseline.map(|l| l.best.reg_lambda)),
            opt(self.augmented.map(|l| l.best.n_estimators)),
            opt(self.augmented.map(|l| l.best.reg_lambda)),
            self.error.clone().unwrap_or_default(),
        ]
    }

    /// `r2_augmented - r2_baseline` when both learners ran.
    pub fn r2_gap(&self) -> Option<f64> {
        Some(self.augmented?.r2 - self.baseline?.r2)
    }
}

/// Outcome of one augmentation attempt.
enum AugOutcome {
    Done(AugmentedSet),
    AllFiltered,
    Failed(String),
}

fn try_augment(train: &Dataset, model: &ScmModel, theta: f64, max_points: usize) -> AugOutcome {
    let specs = match KernelSpec::fit(train, model.graph()) {
        Ok(s) => s,
        Err(e) => return AugOutcome::Failed(format!("kernel fit: {e}")),
    };
    match augment(train, model.graph(), theta, &specs, max_points) {
        Ok(a) => AugOutcome::Done(a),
        Err(CoreError::EmptyResult { .. }) => AugOutcome::AllFiltered,
        Err(e) => AugOutcome::Failed(e.to_string()),
    }
}

fn other_columns(d: usize, target: usize) -> Vec<usize> {
    (0..d).filter(|&j| j != target).collect()
}

#[allow(clippy::too_many_arguments)]
fn score_learner(
    features: &Matrix,
    target: &[f64],
    weights: &[f64],
    test_x: &Matrix,
    test_y: &[f64],
    grid: &[GbtParams],
    folds: usize,
    seed: u64,
) -> Result<LearnerScore, CoreError> {
    let cv = learner::grid_search_cv(features, target, weights, grid, folds, derive(seed, 1))?;
    let model = learner::fit(features, target, weights, &cv.best, derive(seed, 2))?;
    let pred = model.predict(test_x)?;
    Ok(LearnerScore {
        mape: metrics::mape(test_y, &pred, MAPE_FLOOR)?,
        r2: metrics::r2(test_y, &pred)?,
        best: cv.best,
    })
}

/// Runs one repetition at one axis value and returns one row per target.
///
/// Failures inside the repetition are recorded on the rows; the only error
/// returned is a config value that does not fit the axis.
pub fn run_repetition(
    config: &ScenarioConfig,
    axis_index: usize,
    axis_value: AxisValue,
    rep_index: usize,
) -> Result<Vec<ReportRow>, CliError> {
    let settings = config.cell(axis_value)?;
    let seeds = SeedLineage::new(config.master_seed, rep_index);
    let d = settings.d;
    let n_train = config.train_size(settings.n_samples);
    let rows_for = |status: Status, stats: FilterStats, error: Option<String>| -> Vec<ReportRow> {
        (0..d)
            .map(|target| ReportRow {
                axis: config.axis,
                axis_index,
                axis_value,
                repetition: rep_index,
                target,
                seeds,
                target_seed: seeds.target(target),
                settings,
                n_train,
                status,
                stats,
                distribution: None,
                outlier_distribution: None,
                baseline: None,
                augmented: None,
                error: error.clone(),
            })
            .collect()
    };

    let prepared = prepare(config, &settings, &seeds, n_train);
    let (model, train, clean_train, test) = match prepared {
        Ok(p) => p,
        Err(e) => {
            return Ok(rows_for(
                Status::Failed,
                FilterStats::all_filtered(),
                Some(e.to_string()),
            ))
        }
    };

    let outcome = try_augment(&train, &model, settings.theta, config.max_points);
    let metric_config = MetricConfig {
        kl_grid_size: config.kl_grid_size,
        ..MetricConfig::default()
    };
    let (status, stats, aug, mut error) = match outcome {
        AugOutcome::Done(a) => (Status::Ok, a.stats(), Some(a), None),
        AugOutcome::AllFiltered => (Status::AllFiltered, FilterStats::all_filtered(), None, None),
        AugOutcome::Failed(msg) => (Status::Failed, FilterStats::all_filtered(), None, Some(msg)),
    };
    let mut rows = rows_for(status, stats, error.clone());

    let mut note = |msg: String| match &mut error {
        Some(e) => {
            e.push_str("; ");
            e.push_str(&msg);
        }
        None => error = Some(msg),
    };

    let distribution = match &aug {
        Some(a) => match metrics::compare(&train, a, &metric_config) {
            Ok(r) => Some(DistributionSummary::from(&r)),
            Err(e) => {
                note(format!("metrics: {e}"));
                None
            }
        },
        None => None,
    };

    // corrupted-augmented against clean-augmented
    let outlier_distribution = match (&aug, &clean_train) {
        (Some(a), Some(clean)) => match try_augment(clean, &model, settings.theta, config.max_points) {
            AugOutcome::Done(clean_aug) => match metrics::compare(a, &clean_aug, &metric_config) {
                Ok(r) => Some(DistributionSummary::from(&r)),
                Err(e) => {
                    note(format!("outlier metrics: {e}"));
                    None
                }
            },
            AugOutcome::AllFiltered => {
                note("clean augmentation fully filtered".into());
                None
            }
            AugOutcome::Failed(msg) => {
                note(format!("clean augmentation: {msg}"));
                None
            }
        },
        _ => None,
    };

    let aug_matrix = aug
        .as_ref()
        .map(|a| Matrix::new(a.len(), d, a.points_flat().to_vec()).expect("augmented set shape"));
    // same total mass as the baseline's unit weights
    let aug_weights: Option<Vec<f64>> = aug
        .as_ref()
        .map(|a| a.normalized_weights().iter().map(|w| w * n_train as f64).collect());
    let grid = config.grid();
    let train_weights = vec![1.0; train.n_rows()];

    for (target, row) in rows.iter_mut().enumerate() {
        row.distribution = distribution;
        row.outlier_distribution = outlier_distribution;
        row.error = error.clone();
        if !config.evaluate_learners {
            continue;
        }
        let cols = other_columns(d, target);
        let test_x = test.values().select_columns(&cols);
        let test_y = test.column(target);
        let seed = seeds.target(target);
        let mut problems: Vec<String> = error.iter().cloned().collect();

        let x = train.values().select_columns(&cols);
        let y = train.column(target);
        match score_learner(
            &x,
            &y,
            &train_weights,
            &test_x,
            &test_y,
            &grid,
            config.cv_folds,
            derive(seed, 1),
        ) {
            Ok(s) => row.baseline = Some(s),
            Err(e) => problems.push(format!("baseline learner: {e}")),
        }
        if let (Some(m), Some(w)) = (&aug_matrix, &aug_weights) {
            let x = m.select_columns(&cols);
            let y = m.column(target);
            match score_learner(&x, &y, w, &test_x, &test_y, &grid, config.cv_folds, derive(seed, 2)) {
                Ok(s) => row.augmented = Some(s),
                Err(e) => problems.push(format!("augmented learner: {e}")),
            }
        }
        if !problems.is_empty() {
            row.error = Some(problems.join("; "));
        }
    }
    Ok(rows)
}

type Prepared = (ScmModel, Dataset, Option<Dataset>, Dataset);

/// Generates, samples and splits. The second dataset is the clean training
/// part when outliers were injected.
fn prepare(
    config: &ScenarioConfig,
    settings: &CellSettings,
    seeds: &SeedLineage,
    n_train: usize,
) -> Result<Prepared, CoreError> {
    let model = ScmModel::generate(&settings.scm_config(config.polynomial_degree), seeds.model)?;
    let data = model.sample(settings.n_samples, seeds.sample)?;
    let n = data.n_rows();
    if n_train < 2 || n_train >= n {
        return Err(CoreError::Argument(format!(
            "split of {n} rows leaves {n_train} training rows"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng(seeds.split));
    let (train_idx, test_idx) = perm.split_at(n_train);
    let mut train_idx = train_idx.to_vec();
    let mut test_idx = test_idx.to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let train = data.select_rows(&train_idx);
    let test = data.select_rows(&test_idx);
    if settings.outlier_fraction > 0.0 {
        let (corrupted, _) = inject_outliers(
            &train,
            settings.outlier_fraction,
            config.outlier_magnitude,
            seeds.outlier,
        )?;
        Ok((model, corrupted, Some(train), test))
    } else {
        Ok((model, train, None, test))
    }
}

/// Timing of one (axis value, repetition) job.
#[derive(Debug, Clone, Serialize)]
pub struct CellTiming {
    pub axis_value: AxisValue,
    pub repetition: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Stat {
    pub count: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self::default();
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 {
            v[k / 2]
        } else {
            0.5 * (v[k / 2 - 1] + v[k / 2])
        };
        Self {
            count: k,
            median: Some(median),
            mean: Some(v.iter().sum::<f64>() / k as f64),
        }
    }
}

/// Aggregates at one axis value over repetitions and targets.
#[derive(Debug, Clone, Serialize)]
pub struct Aggregate {
    pub axis_value: AxisValue,
    pub rows: usize,
    pub repetitions: usize,
    pub all_filtered_rate: f64,
    pub failed_repetitions: usize,
    pub metrics: BTreeMap<&'static str, Stat>,
}

fn aggregate(axis_value: AxisValue, rows: &[&ReportRow]) -> Aggregate {
    let mut reps: BTreeMap<usize, Status> = BTreeMap::new();
    for r in rows {
        reps.insert(r.repetition, r.status);
    }
    let n_reps = reps.len();
    let filtered = reps.values().filter(|s| **s == Status::AllFiltered).count();
    let failed = reps.values().filter(|s| **s == Status::Failed).count();
    let collect = |f: &dyn Fn(&ReportRow) -> Option<f64>| -> Vec<f64> { rows.iter().filter_map(|r| f(r)).collect() };
    let evaluated = |r: &ReportRow| r.status != Status::Failed;
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "frac_new",
        Stat::of(&collect(&|r| evaluated(r).then_some(r.stats.frac_new))),
    );
    metrics.insert(
        "frac_filtered",
        Stat::of(&collect(&|r| evaluated(r).then_some(r.stats.frac_filtered))),
    );
    metrics.insert(
        "aug_set_size",
        Stat::of(&collect(&|r| evaluated(r).then_some(r.stats.size as f64))),
    );
    metrics.insert("kl", Stat::of(&collect(&|r| r.distribution.map(|m| m.kl))));
    metrics.insert(
        "wasserstein",
        Stat::of(&collect(&|r| r.distribution.map(|m| m.wasserstein))),
    );
    metrics.insert(
        "variance_rel_diff",
        Stat::of(&collect(&|r| r.distribution.map(|m| m.variance_rel_diff))),
    );
    metrics.insert(
        "kl_outlier",
        Stat::of(&collect(&|r| r.outlier_distribution.map(|m| m.kl))),
    );
    metrics.insert(
        "wasserstein_outlier",
        Stat::of(&collect(&|r| r.outlier_distribution.map(|m| m.wasserstein))),
    );
    metrics.insert(
        "variance_rel_diff_outlier",
        Stat::of(&collect(&|r| r.outlier_distribution.map(|m| m.variance_rel_diff))),
    );
    metrics.insert("mape_baseline", Stat::of(&collect(&|r| r.baseline.map(|l| l.mape))));
    metrics.insert("mape_augmented", Stat::of(&collect(&|r| r.augmented.map(|l| l.mape))));
    metrics.insert("r2_baseline", Stat::of(&collect(&|r| r.baseline.map(|l| l.r2))));
    metrics.insert("r2_augmented", Stat::of(&collect(&|r| r.augmented.map(|l| l.r2))));
    metrics.insert("r2_gap", Stat::of(&collect(&|r| r.r2_gap())));
    Aggregate {
        axis_value,
        rows: rows.len(),
        repetitions: n_reps,
        all_filtered_rate: if n_reps == 0 {
            0.0
        } else {
            filtered as f64 / n_reps as f64
        },
        failed_repetitions: failed,
        metrics,
    }
}

/// Result of a sweep.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub config: ScenarioConfig,
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
    pub timings: Vec<CellTiming>,
    pub wall_time_s: f64,
}

impl ScenarioReport {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), CliError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(ReportRow::HEADER).map_err(CliError::csv)?;
        for row in &self.rows {
            wtr.write_record(row.fields()).map_err(CliError::csv)?;
        }
        wtr.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// JSON summary: resolved config, aggregates per axis value and timings.
    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "library_version": crate::VERSION,
            "schema_version": crate::config::SCHEMA_VERSION,
            "config": self.config.to_json(),
            "axis": self.config.axis,
            "axis_values": self.config.values(),
            "rows": self.rows.len(),
            "aggregation": "median and mean over repetitions and targets; all_filtered_rate over repetitions",
            "aggregates": self.aggregates,
            "timings": self.timings,
            "wall_time_s": self.wall_time_s,
        })
    }

    /// Aggregate at the axis value with the given index.
    pub fn aggregate(&self, axis_index: usize) -> &Aggregate {
        &self.aggregates[axis_index]
    }

    pub fn median(&self, axis_index: usize, metric: &str) -> Option<f64> {
        self.aggregates[axis_index].metrics.get(metric).and_then(|s| s.median)
    }
}

/// Progress notification after each finished job.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
    pub axis_value: AxisValue,
    pub repetition: usize,
    pub wall_time_s: f64,
}

/// Runs every repetition at every axis value on `threads` worker threads.
///
/// Rows are sorted by axis position, repetition and target, so the report
/// does not depend on scheduling.
pub fn run_sweep<F>(config: &ScenarioConfig, threads: usize, progress: F) -> Result<ScenarioReport, CliError>
where
    F: Fn(Progress) + Sync,
{
    config.validate()?;
    let values = config.values();
    for v in &values {
        config.cell(*v)?;
    }
    let jobs: Vec<(usize, AxisValue, usize)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, v)| (0..config.defaults.repetitions).map(move |r| (i, *v, r)))
        .collect();
    let total = jobs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let results: Vec<(Vec<ReportRow>, CellTiming)> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, v, r)| {
                let t0 = Instant::now();
                let rows = run_repetition(config, i, v, r).expect("axis values validated");
                let wall = t0.elapsed().as_secs_f64();
                let k = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                progress(Progress {
                    done: k,
                    total,
                    axis_value: v,
                    repetition: r,
                    wall_time_s: wall,
                });
                (
                    rows,
                    CellTiming {
                        axis_value: v,
                        repetition: r,
                        wall_time_s: wall,
                    },
                )
            })
            .collect()
    });
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (r, t) in results {
        rows.extend(r);
        timings.push(t);
    }
    rows.sort_by_key(|r| (r.axis_index, r.repetition, r.target));
    let aggregates = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let at: Vec<&ReportRow> = rows.iter().filter(|r| r.axis_index == i).collect();
            aggregate(*v, &at)
        })
        .collect();
    Ok(ScenarioReport {
        config: config.clone(),
        rows,
        aggregates,
        timings,
        wall_time_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(axis: Axis, values: Vec<AxisValue>) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(axis, 11);
        cfg.axis_values = Some(values);
        cfg.defaults.d = 3;
        cfg.defaults.n_samples = 30;
        cfg.defaults.expected_degree = 1.0;
        cfg.defaults.repetitions = 1;
        cfg.defaults.theta = 1e-4;
        cfg.learner_grid.n_estimators = vec![5];
        cfg.learner_grid.reg_lambda = vec![1.0];
        cfg
    }

    #[test]
    fn one_value_one_rep_gives_d_rows() {
        let cfg = small(Axis::Theta, vec![AxisValue::Number(1e-4)]);
        let report = run_sweep(&cfg, 1, |_| {}).unwrap();
        assert_eq!(report.rows.len(), 3);
        for (t, row) in report.rows.iter().enumerate() {
            assert_eq!(row.target, t);
            assert!(row.baseline.is_some());
        }
    }

    #[test]
    fn lineage_is_stable() {
        let a = SeedLineage::new(5, 2);
        assert_eq!(a, SeedLineage::new(5, 2));
        assert_ne!(a.repetition, SeedLineage::new(5, 3).repetition);
        let all = [a.model, a.sample, a.split, a.outlier, a.learner];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let cfg = small(Axis::Theta, vec![AxisValue::Number(1e-4)]);
        let a = run_repetition(&cfg, 0, AxisValue::Number(1e-4), 0).unwrap();
        let b = run_repetition(&cfg, 0, AxisValue::Number(1e-4), 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outlier_rows_compare_corrupted_and_clean() {
        let mut cfg = small(Axis::OutlierFraction, vec![AxisValue::Number(0.1)]);
        cfg.evaluate_learners = false;
        cfg.defaults.theta = 0.0;
        let rows = run_repetition(&cfg, 0, AxisValue::Number(0.1), 0).unwrap();
        assert_eq!(rows[0].status, Status::Ok);
        assert!(rows[0].outlier_distribution.unwrap().kl > 0.0);
        let cfg0 = small(Axis::OutlierFraction, vec![AxisValue::Number(0.0)]);
        let rows = run_repetition(&cfg0, 0, AxisValue::Number(0.0), 0).unwrap();
        assert!(rows[0].outlier_distribution.is_none());
    }

    #[test]
    fn all_filtered_is_a_row_not_a_crash() {
        let mut cfg = small(Axis::Theta, vec![AxisValue::Number(0.5)]);
        cfg.evaluate_learners = false;
        let rows = run_repetition(&cfg, 0, AxisValue::Number(0.5), 0).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows
            .iter()
            .all(|r| r.status == Status::AllFiltered && r.stats.all_filtered));
    }

    #[test]
    fn stat_median_and_mean() {
        let s = Stat::of(&[3.0, 1.0, f64::NAN, 2.0, 10.0]);
        assert_eq!(s.count, 4);
        assert_eq!(s.median, Some(2.5));
        assert_eq!(s.mean, Some(4.0));
        assert!(Stat::of(&[]).median.is_none());
    }
}
