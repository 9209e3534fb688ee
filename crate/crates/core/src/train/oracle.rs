//! Projected-subgradient reference solver for the per-task minimax objective.
//!
//! Used only to audit the closed forms. It minimizes `-⟨β, μ̂⟩ + ε·pen(β)` over
//! the unit ball without any knowledge of their structure.

use nalgebra::DVector;

use super::{empirical_mean_direction, objective, EstimatorConfig, EstimatorKind, FitResult};
use crate::datagen::LabeledDataset;
use crate::error::{Error, Result};

pub const ORACLE_ITERATIONS: usize = 50_000;
pub const ORACLE_MAX_P: usize = 16;
pub const ORACLE_MAX_N: usize = 64;

/// Minimum-norm element of the subdifferential at `beta`.
///
/// At a kink (a zero coordinate for ℓ1, the origin for ℓ2) the penalty's
/// subgradient is chosen to cancel as much of `-μ̂` as it can.
fn min_norm_subgradient(beta: &DVector<f64>, mean: &DVector<f64>, cfg: &EstimatorConfig) -> DVector<f64> {
    let eps = cfg.epsilon();
    match cfg.kind() {
        EstimatorKind::Standard => -mean,
        EstimatorKind::AdvL2 => {
            let norm = beta.norm();
            if norm > 0.0 {
                -mean + beta * (eps / norm)
            } else {
                let m = mean.norm();
                if m <= eps {
                    DVector::zeros(mean.len())
                } else {
                    -mean * (1.0 - eps / m)
                }
            }
        }
        EstimatorKind::AdvLinf => DVector::from_fn(mean.len(), |j, _| {
            if beta[j] != 0.0 {
                -mean[j] + eps * beta[j].signum()
            } else {
                -mean[j] + eps * (mean[j] / eps).clamp(-1.0, 1.0)
            }
        }),
    }
}

/// Numerically solves the per-task problem by projected subgradient descent.
///
/// Starts at `β = 0`, runs [`ORACLE_ITERATIONS`] steps of size `c/√k` with
/// `c = ‖μ̂‖ + ε + 1`, projects onto the unit ball, and returns the best iterate.
pub fn oracle_fit(ds: &LabeledDataset, cfg: &EstimatorConfig) -> Result<FitResult> {
    if ds.p() > ORACLE_MAX_P || ds.len() > ORACLE_MAX_N {
        return Err(Error::Contract(format!(
            "oracle is limited to p <= {ORACLE_MAX_P} and n <= {ORACLE_MAX_N}, got p={}, n={}",
            ds.p(),
            ds.len()
        )));
    }
    let mean = empirical_mean_direction(ds);
    let scale = mean.norm() + cfg.epsilon() + 1.0;

    let mut beta = DVector::<f64>::zeros(ds.p());
    let mut best = beta.clone();
    let mut best_obj = objective(&beta, &mean, cfg);
    for k in 1..=ORACLE_ITERATIONS {
        let g = min_norm_subgradient(&beta, &mean, cfg);
        if g.iter().all(|&x| x == 0.0) {
            break;
        }
        beta -= g * (scale / (k as f64).sqrt());
        let norm = beta.norm();
        if norm > 1.0 {
            beta /= norm;
        }
        let obj = objective(&beta, &mean, cfg);
        if obj < best_obj {
            best_obj = obj;
            best.copy_from(&beta);
        }
    }
    let suppressed = best.iter().all(|&b| b == 0.0);
    Ok(FitResult {
        beta: best,
        objective: best_obj,
        suppressed,
    })
}
