//! End-to-end transfer: per-task fits, top-r SVD of the stacked directions, and
//! a target head fitted on top of the learned representation.

use nalgebra::{DMatrix, DVector};

use crate::datagen::{LabeledDataset, TaskEnsemble};
use crate::error::{Error, Result};
use crate::subspace::{truncated_svd, Representation};
use crate::train::{
    empirical_mean_direction, fit_from_mean, fit_standard, pseudo_label, target_head_from_mean, EstimatorConfig,
    FitResult,
};

/// Learned representation `Ŵ₁`, target head `ŵ₂` and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutput {
    pub w1: Representation,
    pub w2: DVector<f64>,
    pub per_task_fits: Vec<FitResult>,
    /// Full nonincreasing spectrum of the stacked per-task directions.
    pub singular_values: Vec<f64>,
}

impl TransferOutput {
    /// The composed linear predictor `Ŵ₁ŵ₂ ∈ ℝᵖ`.
    pub fn predictor(&self) -> DVector<f64> {
        self.w1.basis() * &self.w2
    }

    pub fn suppressed_count(&self) -> usize {
        self.per_task_fits.iter().filter(|f| f.suppressed).count()
    }
}

/// Runs the transfer pipeline on per-task signed means `μ̂_t`.
///
/// This is the sufficient-statistic form of [`algorithm1`] / [`algorithm2`]:
/// every estimator touches its data only through `μ̂_t`.
pub fn transfer_from_means(
    source_means: &[DVector<f64>],
    target_mean: &DVector<f64>,
    r: usize,
    cfg: &EstimatorConfig,
) -> Result<TransferOutput> {
    let tasks = source_means.len();
    if tasks == 0 {
        return Err(Error::Dimension("no source tasks".into()));
    }
    if r == 0 || tasks < r {
        return Err(Error::Dimension(format!("need 1 <= r <= T, got r={r}, T={tasks}")));
    }
    let p = source_means[0].len();
    if source_means.iter().any(|m| m.len() != p) || target_mean.len() != p {
        return Err(Error::Dimension("task means differ in dimension".into()));
    }

    let per_task_fits = source_means
        .iter()
        .map(|m| fit_from_mean(m, cfg))
        .collect::<Result<Vec<_>>>()?;

    if cfg.kind().is_adversarial() {
        let surviving = per_task_fits.iter().filter(|f| !f.suppressed).count();
        if surviving < r {
            return Err(Error::AllSuppressed {
                epsilon: cfg.epsilon(),
                surviving,
                required: r,
            });
        }
    }

    let stacked = DMatrix::from_fn(p, tasks, |i, t| per_task_fits[t].beta[i]);
    let svd = truncated_svd(&stacked, r)?;
    let w2 = target_head_from_mean(target_mean, &svd.basis)?;
    Ok(TransferOutput {
        w1: svd.basis,
        w2,
        per_task_fits,
        singular_values: svd.singular_values,
    })
}

fn means(sources: &[LabeledDataset]) -> Result<Vec<DVector<f64>>> {
    let Some(first) = sources.first() else {
        return Err(Error::Dimension("no source tasks".into()));
    };
    if sources.iter().any(|s| s.p() != first.p()) {
        return Err(Error::Dimension("source datasets differ in dimension".into()));
    }
    Ok(sources.iter().map(empirical_mean_direction).collect())
}

/// Standard transfer: normalized-mean fits, top-r SVD, target head.
pub fn algorithm1(sources: &[LabeledDataset], target: &LabeledDataset, r: usize) -> Result<TransferOutput> {
    transfer_from_means(
        &means(sources)?,
        &empirical_mean_direction(target),
        r,
        &EstimatorConfig::standard(),
    )
}

/// Adversarial transfer: the per-task fits use the ℓ2 or ℓ∞ adversarial closed
/// form; suppressed tasks enter the SVD as zero columns.
pub fn algorithm2(
    sources: &[LabeledDataset],
    target: &LabeledDataset,
    r: usize,
    cfg: &EstimatorConfig,
) -> Result<TransferOutput> {
    if !cfg.kind().is_adversarial() {
        return Err(Error::Config(
            "algorithm2 needs an adversarial estimator (adv_l2 or adv_linf)".into(),
        ));
    }
    transfer_from_means(&means(sources)?, &empirical_mean_direction(target), r, cfg)
}

/// Pseudo-label augmentation of one source task.
///
/// Fits the initial classifier on the labeled data, labels the unlabeled pool
/// with its sign, and appends those points to the labeled set.
pub fn augment(labeled: &LabeledDataset, unlabeled: &DMatrix<f64>) -> Result<LabeledDataset> {
    if unlabeled.nrows() == 0 {
        return Ok(labeled.clone());
    }
    let w_init = fit_standard(labeled).beta;
    let pseudo = pseudo_label(&w_init, unlabeled)?;
    labeled.augmented(unlabeled, &pseudo)
}

/// Signed mean of the pseudo-label-augmented task, weighting all points equally.
pub fn augmented_mean(labeled: &LabeledDataset, unlabeled: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(empirical_mean_direction(&augment(labeled, unlabeled)?))
}

/// Pseudo-labeling transfer.
///
/// Returns the standard-path output and, when `cfg` is adversarial, the
/// adversarial-path output, both trained on the augmented sources.
pub fn algorithm3(
    labeled_sources: &[LabeledDataset],
    unlabeled_sources: &[DMatrix<f64>],
    target: &LabeledDataset,
    r: usize,
    cfg: &EstimatorConfig,
) -> Result<(TransferOutput, Option<TransferOutput>)> {
    if labeled_sources.len() != unlabeled_sources.len() {
        return Err(Error::Dimension(format!(
            "{} labeled sources but {} unlabeled pools",
            labeled_sources.len(),
            unlabeled_sources.len()
        )));
    }
    let augmented = labeled_sources
        .iter()
        .zip(unlabeled_sources)
        .map(|(ds, xu)| augment(ds, xu))
        .collect::<Result<Vec<_>>>()?;
    let standard = algorithm1(&augmented, target, r)?;
    let adversarial = if cfg.kind().is_adversarial() {
        Some(algorithm2(&augmented, target, r, cfg)?)
    } else {
        None
    };
    Ok((standard, adversarial))
}

/// Gap between the weak and strong task-norm groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonBand {
    pub lo: f64,
    pub hi: f64,
    pub mid: f64,
}

/// `lo = max weak ‖a_t‖`, `hi = min strong ‖a_t‖`, `mid = (lo + hi) / 2`.
pub fn epsilon_band(ensemble: &TaskEnsemble) -> Result<EpsilonBand> {
    if !ensemble.has_groups() {
        return Err(Error::NotApplicable(
            "epsilon band needs a two-group norm profile".into(),
        ));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (t, &strong) in ensemble.strong_mask().iter().enumerate() {
        let norm = ensemble.task_vector(t + 1)?.norm();
        if strong {
            hi = hi.min(norm);
        } else {
            lo = lo.max(norm);
        }
    }
    if !lo.is_finite() {
        return Err(Error::NotApplicable("epsilon band needs at least one weak task".into()));
    }
    Ok(EpsilonBand {
        lo,
        hi,
        mid: 0.5 * (lo + hi),
    })
}
