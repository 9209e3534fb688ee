//! Sweep configuration: the JSON schema, validation, and per-cell resolution.

use serde::{Deserialize, Serialize};

use crate::datagen::{EnsembleSpec, SnrKind, SparsityKind, TaskEnsemble};
use crate::error::{Error, Result};
use crate::pipeline::epsilon_band;
use crate::train::{EstimatorConfig, EstimatorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "epsilon")]
    Epsilon,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "n_unlabeled")]
    NUnlabeled,
}

impl SweepAxis {
    pub fn tag(self) -> &'static str {
        match self {
            SweepAxis::N => "n",
            SweepAxis::T => "T",
            SweepAxis::P => "p",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Alpha => "alpha",
            SweepAxis::NUnlabeled => "n_unlabeled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedEpsilon {
    /// Midpoint of the weak/strong norm band of a two-group ensemble.
    BandMid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledLogRule {
    /// ε = scale · √(ln p / N), with N the per-task sample count after augmentation.
    pub sqrt_log_p_over_n: f64,
}

/// How an adversarial estimator picks its attack budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonRule {
    Fixed(f64),
    Named(NamedEpsilon),
    ScaledLog(ScaledLogRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    #[serde(default)]
    pub epsilon: Option<EpsilonRule>,
}

impl EstimatorSpec {
    pub fn standard() -> Self {
        EstimatorSpec {
            kind: EstimatorKind::Standard,
            epsilon: None,
        }
    }

    pub fn adversarial(kind: EstimatorKind, rule: EpsilonRule) -> Self {
        EstimatorSpec {
            kind,
            epsilon: Some(rule),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_trials() -> usize {
    50
}

/// One sweep, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: String,
    pub ensemble: EnsembleSpec,
    pub sweep: SweepSpec,
    pub estimators: Vec<EstimatorSpec>,
    pub n_source: usize,
    pub n_target: usize,
    #[serde(default)]
    pub n_unlabeled: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Everything one (axis value, trial) cell needs, with the axis applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPlan {
    pub ensemble: EnsembleSpec,
    pub n_source: usize,
    pub n_target: usize,
    pub n_unlabeled: usize,
    /// Set when the axis is ε; overrides every adversarial estimator's rule.
    pub epsilon_override: Option<f64>,
}

impl CellPlan {
    /// Resolves one estimator's attack budget against a drawn ensemble.
    pub fn estimator_config(&self, spec: &EstimatorSpec, ensemble: &TaskEnsemble) -> Result<EstimatorConfig> {
        if !spec.kind.is_adversarial() {
            return Ok(EstimatorConfig::standard());
        }
        let eps = match (self.epsilon_override, spec.epsilon) {
            (Some(e), _) => e,
            (None, Some(EpsilonRule::Fixed(e))) => e,
            (None, Some(EpsilonRule::Named(NamedEpsilon::BandMid))) => epsilon_band(ensemble)?.mid,
            (None, Some(EpsilonRule::ScaledLog(rule))) => {
                let total = (self.n_source + self.n_unlabeled) as f64;
                rule.sqrt_log_p_over_n * ((self.ensemble.p as f64).ln() / total).sqrt()
            }
            (None, None) => {
                return Err(Error::Config(format!("{} needs an epsilon", spec.kind.tag())));
            }
        };
        EstimatorConfig::new(spec.kind, eps)
    }
}

fn integral(v: f64, axis: SweepAxis) -> Result<usize> {
    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
        return Err(Error::Config(format!(
            "axis {} takes nonnegative integers, got {v}",
            axis.tag()
        )));
    }
    Ok(v as usize)
}

impl SweepConfig {
    /// Applies the axis value with the given index.
    pub fn cell(&self, axis_index: usize) -> Result<CellPlan> {
        let value = *self.sweep.values.get(axis_index).ok_or(Error::Index {
            index: axis_index,
            max: self.sweep.values.len(),
        })?;
        let mut plan = CellPlan {
            ensemble: self.ensemble.clone(),
            n_source: self.n_source,
            n_target: self.n_target,
            n_unlabeled: self.n_unlabeled,
            epsilon_override: None,
        };
        let axis = self.sweep.axis;
        match axis {
            SweepAxis::N => plan.n_source = integral(value, axis)?,
            SweepAxis::T => plan.ensemble.tasks = integral(value, axis)?,
            SweepAxis::P => plan.ensemble.p = integral(value, axis)?,
            SweepAxis::NUnlabeled => plan.n_unlabeled = integral(value, axis)?,
            SweepAxis::Alpha => plan.ensemble.snr.alpha = value,
            SweepAxis::Epsilon => plan.epsilon_override = Some(value),
        }
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.experiment.trim().is_empty() {
            return cfg("experiment name must be nonempty".into());
        }
        if self.experiment.contains([',', '"', '\n', '\r']) {
            return cfg(format!(
                "experiment name {:?} has CSV-special characters",
                self.experiment
            ));
        }
        if self.estimators.is_empty() {
            return cfg("estimators must be nonempty".into());
        }
        for (i, a) in self.estimators.iter().enumerate() {
            if self.estimators[..i].iter().any(|b| b.kind == a.kind) {
                return cfg(format!("estimator {} listed twice", a.kind.tag()));
            }
            if !a.kind.is_adversarial() && a.epsilon.is_some() {
                return cfg("standard estimator takes no epsilon".into());
            }
            if a.kind.is_adversarial() && a.epsilon.is_none() && self.sweep.axis != SweepAxis::Epsilon {
                return cfg(format!("{} needs an epsilon", a.kind.tag()));
            }
            match a.epsilon {
                Some(EpsilonRule::Fixed(e)) if !(e > 0.0 && e.is_finite()) => {
                    return cfg(format!("epsilon must be positive, got {e}"));
                }
                Some(EpsilonRule::ScaledLog(r)) if !(r.sqrt_log_p_over_n > 0.0 && r.sqrt_log_p_over_n.is_finite()) => {
                    return cfg(format!(
                        "sqrt_log_p_over_n scale must be positive, got {}",
                        r.sqrt_log_p_over_n
                    ));
                }
                Some(EpsilonRule::Named(NamedEpsilon::BandMid)) if self.ensemble.snr.kind != SnrKind::TwoGroup => {
                    return cfg("band_mid epsilon needs a two_group snr profile".into());
                }
                _ => {}
            }
        }
        if self.n_source == 0 || self.n_target == 0 {
            return cfg("n_source and n_target must be positive".into());
        }
        if self.trials == 0 {
            return cfg("trials must be positive".into());
        }
        let axis = self.sweep.axis;
        let values = &self.sweep.values;
        if values.is_empty() {
            return cfg("sweep.values must be nonempty".into());
        }
        // ñ = 0 is the labeled-only baseline, so that axis alone admits zero.
        let floor_ok = |v: f64| {
            if axis == SweepAxis::NUnlabeled {
                v >= 0.0
            } else {
                v > 0.0
            }
        };
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && floor_ok(**v))) {
            return cfg(format!("sweep value {v} out of range for axis {}", axis.tag()));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return cfg("sweep.values must be strictly ascending".into());
        }
        if axis == SweepAxis::Alpha && self.ensemble.snr.kind != SnrKind::TwoGroup {
            return cfg("alpha axis needs a two_group snr profile".into());
        }
        if axis == SweepAxis::Epsilon && !self.estimators.iter().any(|e| e.kind.is_adversarial()) {
            return cfg("epsilon axis needs an adversarial estimator".into());
        }
        for i in 0..values.len() {
            let plan = self.cell(i)?;
            plan.ensemble.validate()?;
            if plan.n_source == 0 {
                return cfg("n must be positive".into());
            }
            if plan.ensemble.sparsity.kind == SparsityKind::RowSparse
                && plan.ensemble.sparsity.support_size.is_some_and(|s| s > plan.ensemble.p)
            {
                return cfg("support_size exceeds p".into());
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved config (defaults applied).
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
