//! Seeded Monte-Carlo runner.
//!
//! A sweep is a grid of cells, one per (axis value, trial). Each cell draws an
//! ensemble and all task data once and evaluates every estimator on it, so the
//! estimators are paired by construction.

mod config;
mod presets;
mod verify;

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{make_ensemble, sample_dataset, sample_unlabeled, SparsityKind, TaskEnsemble};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, quantile, EvalReport};
use crate::pipeline::{augmented_mean, transfer_from_means};
use crate::train::{empirical_mean_direction, EstimatorKind};

pub use config::{
    CellPlan, EpsilonRule, EstimatorSpec, NamedEpsilon, ScaledLogRule, SweepAxis, SweepConfig, SweepSpec,
};
pub use presets::{preset, PresetName, PresetPlan, PRESET_N_TARGET};
pub use verify::{
    run_verify, run_verify_with, VerifyConfig, VerifyReport, VerifyRow, DIRECTION_MARGIN, DIRECTION_TOL, GAP_TOL,
};

/// Target draws used for accuracy when the noise has no closed form.
pub const MC_ACCURACY_SAMPLES: usize = 20_000;

const ACCURACY_STREAM: u64 = 0xA5A5_5A5A_0F0F_F0F0;

/// SplitMix64 finalizer.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Data seed of a cell. The estimator slot of the mixing key is fixed at 0 so
/// every estimator in the cell shares the draw.
pub fn cell_seed(root_seed: u64, axis_index: usize, trial_index: usize) -> u64 {
    let key = (axis_index as u64)
        .wrapping_mul(1_000_000)
        .wrapping_add(trial_index as u64);
    mix64(root_seed ^ key)
}

/// One row of output: an estimator evaluated on one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub axis_value: f64,
    pub estimator: String,
    pub trial: usize,
    pub seed: u64,
    pub p: usize,
    pub r: usize,
    #[serde(rename = "T")]
    pub tasks: usize,
    pub n: usize,
    pub n_target: usize,
    pub n_unlabeled: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub support_size: usize,
    pub sin_theta: f64,
    pub excess_risk: f64,
    pub target_accuracy: f64,
    pub suppressed_count: usize,
    pub wall_ms: f64,
    pub status: String,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Bitwise equality of every field except the wall-clock time.
    pub fn same_outcome(&self, other: &TrialRecord) -> bool {
        let mut a = self.clone();
        let mut b = other.clone();
        a.wall_ms = 0.0;
        b.wall_ms = 0.0;
        let bits = |r: &TrialRecord| {
            [
                r.axis_value,
                r.epsilon,
                r.alpha,
                r.sin_theta,
                r.excess_risk,
                r.target_accuracy,
            ]
            .map(f64::to_bits)
        };
        bits(&a) == bits(&b)
            && (a.experiment, a.estimator, a.trial, a.seed, a.p, a.r, a.tasks)
                == (b.experiment, b.estimator, b.trial, b.seed, b.p, b.r, b.tasks)
            && (
                a.n,
                a.n_target,
                a.n_unlabeled,
                a.support_size,
                a.suppressed_count,
                a.status,
            ) == (
                b.n,
                b.n_target,
                b.n_unlabeled,
                b.support_size,
                b.suppressed_count,
                b.status,
            )
    }
}

/// Sufficient statistics of one drawn cell.
#[derive(Debug, Clone)]
pub struct CellData {
    pub plan: CellPlan,
    pub seed: u64,
    pub ensemble: TaskEnsemble,
    /// Per-source signed means, after pseudo-label augmentation when `n_unlabeled > 0`.
    pub source_means: Vec<DVector<f64>>,
    pub target_mean: DVector<f64>,
    /// SHA-256 of every sampled input and label, hex; only when requested.
    pub digest: Option<String>,
    pub generation_ms: f64,
}

fn hash_matrix(h: &mut Sha256, m: &nalgebra::DMatrix<f64>) {
    for x in m.iter() {
        h.update(x.to_le_bytes());
    }
}

/// Draws the ensemble and all task data of a cell and reduces each task to its mean.
pub fn generate_cell(cfg: &SweepConfig, axis_index: usize, trial_index: usize, with_digest: bool) -> Result<CellData> {
    let start = Instant::now();
    let plan = cfg.cell(axis_index)?;
    let seed = cell_seed(cfg.seed, axis_index, trial_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ensemble = make_ensemble(&plan.ensemble, &mut rng)?;
    let mut hasher = with_digest.then(Sha256::new);

    let mut source_means = Vec::with_capacity(ensemble.tasks());
    for t in 1..=ensemble.tasks() {
        let ds = sample_dataset(&ensemble, t, plan.n_source, &mut rng)?;
        let pool = sample_unlabeled(&ensemble, t, plan.n_unlabeled, &mut rng)?;
        if let Some(h) = hasher.as_mut() {
            hash_matrix(h, ds.inputs());
            h.update(ds.labels().iter().map(|&y| y as u8).collect::<Vec<_>>());
            hash_matrix(h, &pool);
        }
        source_means.push(augmented_mean(&ds, &pool)?);
    }
    let target = sample_dataset(&ensemble, ensemble.target_index(), plan.n_target, &mut rng)?;
    if let Some(h) = hasher.as_mut() {
        hash_matrix(h, target.inputs());
        h.update(target.labels().iter().map(|&y| y as u8).collect::<Vec<_>>());
    }
    let target_mean = empirical_mean_direction(&target);
    let digest = hasher.map(|h| h.finalize().iter().map(|b| format!("{b:02x}")).collect::<String>());
    Ok(CellData {
        plan,
        seed,
        ensemble,
        source_means,
        target_mean,
        digest,
        generation_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn base_record(
    cfg: &SweepConfig,
    axis_index: usize,
    trial_index: usize,
    estimator: &EstimatorSpec,
) -> Result<TrialRecord> {
    let plan = cfg.cell(axis_index)?;
    let e = &plan.ensemble;
    Ok(TrialRecord {
        experiment: cfg.experiment.clone(),
        axis_value: cfg.sweep.values[axis_index],
        estimator: estimator.kind.tag().to_string(),
        trial: trial_index,
        seed: cell_seed(cfg.seed, axis_index, trial_index),
        p: e.p,
        r: e.r,
        tasks: e.tasks,
        n: plan.n_source,
        n_target: plan.n_target,
        n_unlabeled: plan.n_unlabeled,
        epsilon: if estimator.kind == EstimatorKind::Standard {
            0.0
        } else {
            f64::NAN
        },
        alpha: e.snr.alpha,
        support_size: match e.sparsity.kind {
            SparsityKind::Dense => e.p,
            SparsityKind::RowSparse => e.sparsity.support_size.unwrap_or(e.p),
        },
        sin_theta: f64::NAN,
        excess_risk: f64::NAN,
        target_accuracy: f64::NAN,
        suppressed_count: 0,
        wall_ms: 0.0,
        status: "ok".into(),
    })
}

fn evaluate_estimator(data: &CellData, spec: &EstimatorSpec) -> Result<(f64, EvalReport)> {
    let est = data.plan.estimator_config(spec, &data.ensemble)?;
    let out = transfer_from_means(&data.source_means, &data.target_mean, data.plan.ensemble.r, &est)?;
    let mut acc_rng = ChaCha8Rng::seed_from_u64(mix64(data.seed ^ ACCURACY_STREAM));
    let report = evaluate(&out, &data.ensemble, MC_ACCURACY_SAMPLES, &mut acc_rng)?;
    Ok((est.epsilon(), report))
}

/// Evaluates every estimator of the config on one shared cell.
pub fn run_cell(cfg: &SweepConfig, axis_index: usize, trial_index: usize) -> Result<Vec<TrialRecord>> {
    let mut records = cfg
        .estimators
        .iter()
        .map(|e| base_record(cfg, axis_index, trial_index, e))
        .collect::<Result<Vec<_>>>()?;
    let data = match generate_cell(cfg, axis_index, trial_index, false) {
        Ok(d) => d,
        Err(e) => {
            for rec in &mut records {
                rec.status = format!("error:{}", e.tag());
            }
            return Ok(records);
        }
    };
    for (rec, spec) in records.iter_mut().zip(&cfg.estimators) {
        let start = Instant::now();
        match evaluate_estimator(&data, spec) {
            Ok((eps, report)) => {
                rec.epsilon = eps;
                rec.sin_theta = report.sin_theta;
                rec.excess_risk = report.excess_risk;
                rec.target_accuracy = report.target_accuracy;
                rec.suppressed_count = report.suppressed_count;
            }
            Err(e) => rec.status = format!("error:{}", e.tag()),
        }
        rec.wall_ms = data.generation_ms + start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(records)
}

/// One estimator's record for one cell.
pub fn run_trial(
    cfg: &SweepConfig,
    axis_index: usize,
    estimator_index: usize,
    trial_index: usize,
) -> Result<TrialRecord> {
    cfg.validate()?;
    if estimator_index >= cfg.estimators.len() {
        return Err(Error::Index {
            index: estimator_index,
            max: cfg.estimators.len(),
        });
    }
    let mut one = cfg.clone();
    one.estimators = vec![cfg.estimators[estimator_index]];
    Ok(run_cell(&one, axis_index, trial_index)?.remove(0))
}

/// Worker count from `XFERLAB_THREADS`, else the number of logical cores.
pub fn default_threads() -> usize {
    std::env::var("XFERLAB_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |k| k.get()))
}

/// Runs all cells on a pool of `threads` workers.
///
/// Output is sorted by (axis index, estimator index, trial) and does not
/// depend on `threads`.
pub fn run_sweep(cfg: &SweepConfig, threads: usize) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    if threads == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Contract(format!("cannot start worker pool: {e}")))?;
    let cells: Vec<(usize, usize)> = (0..cfg.sweep.values.len())
        .flat_map(|a| (0..cfg.trials).map(move |t| (a, t)))
        .collect();
    let nested = pool.install(|| {
        cells
            .par_iter()
            .map(|&(a, t)| run_cell(cfg, a, t).map(|recs| (a, t, recs)))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut keyed: Vec<(usize, usize, usize, TrialRecord)> = nested
        .into_iter()
        .flat_map(|(a, t, recs)| recs.into_iter().enumerate().map(move |(e, r)| (a, e, t, r)))
        .collect();
    keyed.sort_by_key(|k| (k.0, k.1, k.2));
    Ok(keyed.into_iter().map(|k| k.3).collect())
}

/// Median and interpolated quartiles of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Summary {
        if values.is_empty() {
            return Summary {
                median: f64::NAN,
                q25: f64::NAN,
                q75: f64::NAN,
            };
        }
        let q = |level| quantile(values, level).expect("nonempty sample, valid level");
        Summary {
            median: q(0.5),
            q25: q(0.25),
            q75: q(0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub experiment: String,
    pub axis_value: f64,
    pub estimator: String,
    /// Successful trials in the cell.
    pub trial_count: usize,
    pub failed_count: usize,
    pub sin_theta: Summary,
    pub excess_risk: Summary,
    pub target_accuracy: Summary,
    pub suppressed_count: Summary,
}

/// Per (experiment, axis value, estimator) summaries over successful trials.
pub fn aggregate(records: &[TrialRecord]) -> Vec<AggregateRecord> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    let key_cmp = |a: &&TrialRecord, b: &&TrialRecord| {
        a.experiment
            .cmp(&b.experiment)
            .then(a.axis_value.total_cmp(&b.axis_value))
            .then(a.estimator.cmp(&b.estimator))
    };
    sorted.sort_by(key_cmp);
    let mut out = Vec::new();
    for group in sorted.chunk_by(|a, b| key_cmp(a, b).is_eq()) {
        let ok: Vec<&TrialRecord> = group.iter().copied().filter(|r| r.is_ok()).collect();
        // Sorting inside the cell makes the quantiles independent of input order.
        let metric = |f: fn(&TrialRecord) -> f64| {
            let mut v: Vec<f64> = ok.iter().map(|r| f(r)).collect();
            v.sort_by(f64::total_cmp);
            Summary::of(&v)
        };
        out.push(AggregateRecord {
            experiment: group[0].experiment.clone(),
            axis_value: group[0].axis_value,
            estimator: group[0].estimator.clone(),
            trial_count: ok.len(),
            failed_count: group.len() - ok.len(),
            sin_theta: metric(|r| r.sin_theta),
            excess_risk: metric(|r| r.excess_risk),
            target_accuracy: metric(|r| r.target_accuracy),
            suppressed_count: metric(|r| r.suppressed_count as f64),
        });
    }
    out
}
