//! Evaluation metrics, reference rates, and the small amount of statistics the
//! harness and report need.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::function::erf::erfc;

use crate::datagen::{sample_dataset, NoiseKind, TaskEnsemble};
use crate::error::{Error, Result};
use crate::pipeline::TransferOutput;
use crate::subspace::{sin_theta_dist, Representation};

/// Metrics for one pipeline output on one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sin_theta: f64,
    pub excess_risk: f64,
    pub target_accuracy: f64,
    pub suppressed_count: usize,
}

/// `‖sin Θ(Ŵ₁, B)‖_F`.
pub fn representation_error(w1: &Representation, ensemble: &TaskEnsemble) -> Result<f64> {
    sin_theta_dist(w1, ensemble.basis())
}

/// `‖μ‖ − ⟨v, μ⟩` for a predictor `v` with `‖v‖ ≤ 1`.
pub fn excess_risk_of_predictor(predictor: &DVector<f64>, target_mean: &DVector<f64>) -> Result<f64> {
    if predictor.len() != target_mean.len() {
        return Err(Error::Dimension(format!(
            "predictor has length {}, target mean {}",
            predictor.len(),
            target_mean.len()
        )));
    }
    Ok(target_mean.norm() - predictor.dot(target_mean))
}

/// Population loss of `Ŵ₁ŵ₂` on the target minus the best achievable loss `−‖μ_{T+1}‖`.
pub fn excess_risk(out: &TransferOutput, ensemble: &TaskEnsemble) -> Result<f64> {
    excess_risk_of_predictor(&out.predictor(), &ensemble.target_mean())
}

/// How [`target_accuracy`] is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyMode {
    ClosedForm,
    MonteCarlo(usize),
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `Φ(⟨v, μ⟩ / ρ)` for `v = predictor / ‖predictor‖`; 0.5 for the zero predictor.
pub fn closed_form_accuracy(predictor: &DVector<f64>, ensemble: &TaskEnsemble) -> Result<f64> {
    let noise = ensemble.noise();
    if noise.kind != NoiseKind::Gaussian {
        return Err(Error::Unsupported("closed-form accuracy needs gaussian noise".into()));
    }
    let mu = ensemble.target_mean();
    if predictor.len() != mu.len() {
        return Err(Error::Dimension(format!(
            "predictor has length {}, expected {}",
            predictor.len(),
            mu.len()
        )));
    }
    let norm = predictor.norm();
    if norm == 0.0 {
        return Ok(0.5);
    }
    Ok(normal_cdf(predictor.dot(&mu) / norm / noise.rho))
}

/// Empirical 0-1 accuracy of `sign(⟨v, x⟩)` on `m` fresh target samples, with sign(0) = +1.
pub fn monte_carlo_accuracy<R: Rng + ?Sized>(
    predictor: &DVector<f64>,
    ensemble: &TaskEnsemble,
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::Contract("monte-carlo accuracy needs m >= 1".into()));
    }
    if predictor.len() != ensemble.p() {
        return Err(Error::Dimension(format!(
            "predictor has length {}, expected {}",
            predictor.len(),
            ensemble.p()
        )));
    }
    if predictor.norm() == 0.0 {
        return Ok(0.5);
    }
    let ds = sample_dataset(ensemble, ensemble.target_index(), m, rng)?;
    let scores = ds.inputs() * predictor;
    let correct = scores
        .iter()
        .zip(ds.labels())
        .filter(|(s, &y)| (if **s >= 0.0 { 1 } else { -1 }) == y)
        .count();
    Ok(correct as f64 / m as f64)
}

pub fn target_accuracy<R: Rng + ?Sized>(
    out: &TransferOutput,
    ensemble: &TaskEnsemble,
    mode: AccuracyMode,
    rng: &mut R,
) -> Result<f64> {
    match mode {
        AccuracyMode::ClosedForm => closed_form_accuracy(&out.predictor(), ensemble),
        AccuracyMode::MonteCarlo(m) => monte_carlo_accuracy(&out.predictor(), ensemble, m, rng),
    }
}

/// Gaussian noise uses the closed form; other noise falls back to `mc_samples` draws.
pub fn evaluate<R: Rng + ?Sized>(
    out: &TransferOutput,
    ensemble: &TaskEnsemble,
    mc_samples: usize,
    rng: &mut R,
) -> Result<EvalReport> {
    let mode = match ensemble.noise().kind {
        NoiseKind::Gaussian => AccuracyMode::ClosedForm,
        NoiseKind::BoundedUniform => AccuracyMode::MonteCarlo(mc_samples),
    };
    Ok(EvalReport {
        sin_theta: representation_error(&out.w1, ensemble)?,
        excess_risk: excess_risk(out, ensemble)?,
        target_accuracy: target_accuracy(out, ensemble, mode, rng)?,
        suppressed_count: out.suppressed_count(),
    })
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::Contract(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some((x, y)) = points
        .iter()
        .find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::Domain(format!(
            "log-log fit needs positive finite values, got ({x}, {y})"
        )));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs at least two distinct x".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Theoretical rate families, all hidden constants set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    Lemma1N,
    Lemma1T,
    Thm1L2,
    Thm2Linf,
    Thm3Pseudo,
    Prop1Lower,
}

impl RateKind {
    pub fn tag(self) -> &'static str {
        match self {
            RateKind::Lemma1N => "lemma1_n",
            RateKind::Lemma1T => "lemma1_T",
            RateKind::Thm1L2 => "thm1_l2",
            RateKind::Thm2Linf => "thm2_linf",
            RateKind::Thm3Pseudo => "thm3_pseudo",
            RateKind::Prop1Lower => "prop1_lower",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RateParams {
    pub n: Option<f64>,
    pub tasks: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub s: Option<f64>,
    pub alpha_t: Option<f64>,
    pub n_tilde: Option<f64>,
}

fn need(v: Option<f64>, name: &str, kind: RateKind) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(Error::Domain(format!(
            "{}: {name} must be positive, got {x}",
            kind.tag()
        ))),
        None => Err(Error::Contract(format!("{}: missing parameter {name}", kind.tag()))),
    }
}

fn lemma1(r: f64, n: f64, t: f64, p: f64, log_n: f64) -> f64 {
    r * ((1.0 / n).sqrt() + (p / (n * t)).sqrt() + (log_n.max(0.0) / (n * t)).sqrt())
}

pub fn reference_rate(kind: RateKind, params: &RateParams) -> Result<f64> {
    let r = need(params.r, "r", kind)?;
    let t = need(params.tasks, "T", kind)?;
    let p = need(params.p, "p", kind)?;
    match kind {
        RateKind::Lemma1N | RateKind::Lemma1T => {
            let n = need(params.n, "n", kind)?;
            Ok(lemma1(r, n, t, p, n.ln()))
        }
        RateKind::Thm1L2 => {
            let n = need(params.n, "n", kind)?;
            let alpha = need(params.alpha_t, "alpha_T", kind)?;
            Ok(lemma1(r, n, t, p, n.ln()) / alpha)
        }
        RateKind::Thm2Linf => {
            let n = need(params.n, "n", kind)?;
            let s = need(params.s, "s", kind)?;
            Ok(r * ((1.0 / n).sqrt() + (s * s / (n * t)).sqrt()) * (t + p).ln())
        }
        RateKind::Thm3Pseudo => {
            // The log term keeps the labeled n.
            let n = need(params.n, "n", kind)?;
            let nt = need(params.n_tilde, "n_tilde", kind)?;
            Ok(r * ((1.0 / nt).sqrt() + (p / (nt * t)).sqrt() + (n.ln().max(0.0) / (nt * t)).sqrt()))
        }
        RateKind::Prop1Lower => {
            let n = need(params.n, "n", kind)?;
            Ok((r * p / (n * t)).sqrt())
        }
    }
}

/// Quantile by linear interpolation between order statistics (`q ∈ [0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Contract("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level {q} outside [0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// Ranks starting at 1, ties sharing their average rank.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Contract(format!(
            "spearman needs two equal-length samples of size >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let rx = ranks(x);
    let ry = ranks(y);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Domain("spearman undefined for a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// One-sided sign test: `P(X ≥ wins)` for `X ~ Binomial(trials, 1/2)`, ties excluded.
pub fn sign_test_p_value(wins: u64, trials: u64) -> Result<f64> {
    if wins > trials {
        return Err(Error::Contract(format!("{wins} wins out of {trials} trials")));
    }
    if wins == 0 {
        return Ok(1.0);
    }
    let b = Binomial::new(0.5, trials).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(b.sf(wins - 1))
}
