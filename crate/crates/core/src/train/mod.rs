//! Per-task estimators for the linear loss `-y⟨β, x⟩` over the unit ball.
//!
//! Every fit depends on its dataset only through the signed empirical mean
//! `μ̂ = (1/n) Σ yᵢ xᵢ`, so each estimator comes in two forms: one taking a
//! [`LabeledDataset`] and a `*_from_mean` form taking `μ̂` directly.
//!
//! The adversarial inner maximization over `‖δᵢ‖_q ≤ ε` is never carried out
//! numerically; it is replaced by its exact value `ε‖β‖_{q*}` (dual norm), which
//! turns the ℓ2 attack into a norm penalty and the ℓ∞ attack into an ℓ1 penalty.

mod oracle;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};
use crate::subspace::Representation;

pub use oracle::{oracle_fit, ORACLE_ITERATIONS, ORACLE_MAX_N, ORACLE_MAX_P};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Standard,
    AdvL2,
    AdvLinf,
}

impl EstimatorKind {
    pub fn tag(self) -> &'static str {
        match self {
            EstimatorKind::Standard => "standard",
            EstimatorKind::AdvL2 => "adv_l2",
            EstimatorKind::AdvLinf => "adv_linf",
        }
    }

    pub fn is_adversarial(self) -> bool {
        self != EstimatorKind::Standard
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "adv_l2" => Ok(Self::AdvL2),
            "adv_linf" => Ok(Self::AdvLinf),
            other => Err(Error::Config(format!("unknown estimator kind {other:?}"))),
        }
    }
}

/// Trainer selection with its attack budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    kind: EstimatorKind,
    epsilon: f64,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        if kind == EstimatorKind::Standard && epsilon != 0.0 {
            return Err(Error::Config("standard training takes epsilon = 0".into()));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn standard() -> Self {
        Self {
            kind: EstimatorKind::Standard,
            epsilon: 0.0,
        }
    }

    pub fn adv_l2(epsilon: f64) -> Result<Self> {
        Self::new(EstimatorKind::AdvL2, epsilon)
    }

    pub fn adv_linf(epsilon: f64) -> Result<Self> {
        Self::new(EstimatorKind::AdvLinf, epsilon)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Penalty `pen(β)` multiplying `ε` in the reduced objective.
    fn penalty(&self, beta: &DVector<f64>) -> f64 {
        match self.kind {
            EstimatorKind::Standard => 0.0,
            EstimatorKind::AdvL2 => beta.norm(),
            EstimatorKind::AdvLinf => beta.lp_norm(1),
        }
    }
}

/// Outcome of one per-task fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta: DVector<f64>,
    /// Achieved empirical (adversarial) loss.
    pub objective: f64,
    /// True iff `beta` is exactly zero.
    pub suppressed: bool,
}

impl FitResult {
    fn from_beta(beta: DVector<f64>, mean: &DVector<f64>, cfg: &EstimatorConfig) -> Self {
        let suppressed = beta.iter().all(|&b| b == 0.0);
        let objective = if suppressed { 0.0 } else { objective(&beta, mean, cfg) };
        Self {
            beta,
            objective,
            suppressed,
        }
    }

    fn suppressed(p: usize) -> Self {
        Self {
            beta: DVector::zeros(p),
            objective: 0.0,
            suppressed: true,
        }
    }
}

/// Reduced empirical objective `-⟨β, μ̂⟩ + ε·pen(β)`.
pub fn objective(beta: &DVector<f64>, mean: &DVector<f64>, cfg: &EstimatorConfig) -> f64 {
    -beta.dot(mean) + cfg.epsilon * cfg.penalty(beta)
}

/// `μ̂ = (1/n) Σ yᵢ xᵢ`.
pub fn empirical_mean_direction(ds: &LabeledDataset) -> DVector<f64> {
    let n = ds.len();
    let y = DVector::from_iterator(n, ds.labels().iter().map(|&y| f64::from(y)));
    ds.inputs().tr_mul(&y) / n as f64
}

pub fn fit_standard_from_mean(mean: &DVector<f64>) -> FitResult {
    let norm = mean.norm();
    if norm > 0.0 {
        FitResult {
            beta: mean / norm,
            objective: -norm,
            suppressed: false,
        }
    } else {
        FitResult::suppressed(mean.len())
    }
}

/// Minimizer of `-⟨β, μ̂⟩` over the unit ball: the normalized mean.
pub fn fit_standard(ds: &LabeledDataset) -> FitResult {
    fit_standard_from_mean(&empirical_mean_direction(ds))
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!(
            "adversarial fits need epsilon > 0 (use the standard fit for 0), got {eps}"
        )));
    }
    Ok(())
}

pub fn fit_adv_l2_from_mean(mean: &DVector<f64>, eps: f64) -> Result<FitResult> {
    check_epsilon(eps)?;
    let norm = mean.norm();
    // Ties at ‖μ̂‖ = ε keep the normalized mean; both branches score 0 there.
    if norm >= eps && norm > 0.0 {
        Ok(FitResult {
            beta: mean / norm,
            objective: -norm + eps,
            suppressed: false,
        })
    } else {
        Ok(FitResult::suppressed(mean.len()))
    }
}

/// ℓ2-adversarial fit: normalized mean if `‖μ̂‖ ≥ ε`, otherwise zero.
pub fn fit_adv_l2(ds: &LabeledDataset, eps: f64) -> Result<FitResult> {
    fit_adv_l2_from_mean(&empirical_mean_direction(ds), eps)
}

/// Coordinatewise `sgn(μⱼ)·max(|μⱼ| - ε, 0)`.
pub fn hard_threshold(mean: &DVector<f64>, eps: f64) -> DVector<f64> {
    mean.map(|m| m.signum() * (m.abs() - eps).max(0.0))
}

pub fn fit_adv_linf_from_mean(mean: &DVector<f64>, eps: f64) -> Result<FitResult> {
    check_epsilon(eps)?;
    let shrunk = hard_threshold(mean, eps);
    let norm = shrunk.norm();
    if norm > 0.0 {
        let cfg = EstimatorConfig::adv_linf(eps)?;
        Ok(FitResult::from_beta(shrunk / norm, mean, &cfg))
    } else {
        Ok(FitResult::suppressed(mean.len()))
    }
}

/// ℓ∞-adversarial fit: the normalized hard-thresholded mean.
pub fn fit_adv_linf(ds: &LabeledDataset, eps: f64) -> Result<FitResult> {
    fit_adv_linf_from_mean(&empirical_mean_direction(ds), eps)
}

/// Closed-form fit for any estimator configuration.
pub fn fit_from_mean(mean: &DVector<f64>, cfg: &EstimatorConfig) -> Result<FitResult> {
    match cfg.kind {
        EstimatorKind::Standard => Ok(fit_standard_from_mean(mean)),
        EstimatorKind::AdvL2 => fit_adv_l2_from_mean(mean, cfg.epsilon),
        EstimatorKind::AdvLinf => fit_adv_linf_from_mean(mean, cfg.epsilon),
    }
}

pub fn fit(ds: &LabeledDataset, cfg: &EstimatorConfig) -> Result<FitResult> {
    fit_from_mean(&empirical_mean_direction(ds), cfg)
}

/// `sign(⟨w, xᵢ⟩)` for each row, with `sign(0) = +1`.
pub fn pseudo_label(w_init: &DVector<f64>, unlabeled: &DMatrix<f64>) -> Result<Vec<i8>> {
    if w_init.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateClassifier);
    }
    if unlabeled.nrows() > 0 && unlabeled.ncols() != w_init.len() {
        return Err(Error::Dimension(format!(
            "classifier has {} weights but inputs have {} columns",
            w_init.len(),
            unlabeled.ncols()
        )));
    }
    let scores = unlabeled * w_init;
    Ok(scores.iter().map(|&s| if s >= 0.0 { 1 } else { -1 }).collect())
}

pub fn target_head_from_mean(mean: &DVector<f64>, w1: &Representation) -> Result<DVector<f64>> {
    if mean.len() != w1.p() {
        return Err(Error::Dimension(format!(
            "target mean has length {} but representation has p = {}",
            mean.len(),
            w1.p()
        )));
    }
    let proj = w1.basis().tr_mul(mean);
    let norm = proj.norm();
    Ok(if norm > 0.0 { proj / norm } else { proj.map(|_| 0.0) })
}

/// Target head `ŵ₂ = W₁ᵀμ̂ / ‖W₁ᵀμ̂‖` (zero when the projection vanishes).
pub fn fit_target(ds: &LabeledDataset, w1: &Representation) -> Result<DVector<f64>> {
    target_head_from_mean(&empirical_mean_direction(ds), w1)
}
