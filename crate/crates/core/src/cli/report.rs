//! Slope fits, reference-rate overlays, and paired win counts from a records file.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::harness::TrialRecord;
use crate::metrics::{fit_loglog_slope, median, reference_rate, sign_test_p_value, RateKind, RateParams};

use super::records::fmt_f64;

/// The estimator every other one is paired against.
pub const BASELINE: &str = "standard";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    N,
    T,
    P,
    NUnlabeled,
    Alpha,
    Epsilon,
    Unknown,
}

impl Axis {
    pub fn tag(self) -> &'static str {
        match self {
            Axis::N => "n",
            Axis::T => "T",
            Axis::P => "p",
            Axis::NUnlabeled => "n_unlabeled",
            Axis::Alpha => "alpha",
            Axis::Epsilon => "epsilon",
            Axis::Unknown => "unknown",
        }
    }
}

/// The record column that equals `axis_value` throughout the experiment.
pub fn infer_axis(records: &[&TrialRecord]) -> Axis {
    let all = |f: &dyn Fn(&TrialRecord) -> f64| records.iter().all(|r| f(r) == r.axis_value);
    if all(&|r| r.n as f64) {
        Axis::N
    } else if all(&|r| r.tasks as f64) {
        Axis::T
    } else if all(&|r| r.p as f64) {
        Axis::P
    } else if all(&|r| r.n_unlabeled as f64) {
        Axis::NUnlabeled
    } else if all(&|r| r.alpha) {
        Axis::Alpha
    } else if records
        .iter()
        .filter(|r| r.estimator != BASELINE && r.is_ok())
        .all(|r| r.epsilon == r.axis_value)
    {
        Axis::Epsilon
    } else {
        Axis::Unknown
    }
}

/// Regressor of the slope fit: the axis value, except that unlabeled-pool
/// sweeps use the augmented sample size `n + ñ`.
fn regressor(axis: Axis, r: &TrialRecord) -> f64 {
    match axis {
        Axis::NUnlabeled => (r.n + r.n_unlabeled) as f64,
        _ => r.axis_value,
    }
}

/// Which theoretical rate a cell is compared to.
pub fn reference_kind(axis: Axis, r: &TrialRecord) -> RateKind {
    if r.estimator == "adv_l2" && r.alpha > 1.0 {
        RateKind::Thm1L2
    } else if r.estimator == "adv_linf" {
        RateKind::Thm2Linf
    } else if axis == Axis::NUnlabeled || r.n_unlabeled > 0 {
        RateKind::Thm3Pseudo
    } else if axis == Axis::T {
        RateKind::Lemma1T
    } else {
        RateKind::Lemma1N
    }
}

fn rate_params(r: &TrialRecord) -> RateParams {
    RateParams {
        n: Some(r.n as f64),
        tasks: Some(r.tasks as f64),
        p: Some(r.p as f64),
        r: Some(r.r as f64),
        s: Some(r.support_size as f64),
        alpha_t: Some(r.alpha),
        n_tilde: Some((r.n + r.n_unlabeled) as f64),
    }
}

/// One (experiment, estimator, axis value) cell of the overlay table.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlayRow {
    pub experiment: String,
    pub estimator: String,
    pub axis: Axis,
    pub axis_value: f64,
    pub regressor: f64,
    pub trial_count: usize,
    pub failed_count: usize,
    pub sin_theta_median: f64,
    pub excess_risk_median: f64,
    pub reference_kind: RateKind,
    pub reference_rate: f64,
    pub prop1_lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeRow {
    pub experiment: String,
    pub estimator: String,
    pub axis: Axis,
    pub metric: &'static str,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub reference_kind: RateKind,
    pub reference_slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedRow {
    pub experiment: String,
    pub axis_value: f64,
    pub estimator: String,
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub unpaired: u64,
    pub sign_test_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub overlay: Vec<OverlayRow>,
    pub slopes: Vec<SlopeRow>,
    pub paired: Vec<PairedRow>,
}

fn median_or_nan(v: &[f64]) -> f64 {
    median(v).unwrap_or(f64::NAN)
}

pub fn build_report(records: &[TrialRecord]) -> Result<Report> {
    let mut by_experiment: BTreeMap<&str, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        by_experiment.entry(&r.experiment).or_default().push(r);
    }
    let mut report = Report::default();
    for (experiment, recs) in &by_experiment {
        let axis = infer_axis(recs);

        let mut cells: BTreeMap<(&str, u64), Vec<&TrialRecord>> = BTreeMap::new();
        for r in recs {
            // Axis values are positive or zero, so their bit patterns sort numerically.
            cells.entry((&r.estimator, r.axis_value.to_bits())).or_default().push(r);
        }
        for ((estimator, _), cell) in &cells {
            let ok: Vec<&&TrialRecord> = cell.iter().filter(|r| r.is_ok()).collect();
            let first = cell[0];
            let kind = reference_kind(axis, first);
            let params = rate_params(first);
            report.overlay.push(OverlayRow {
                experiment: experiment.to_string(),
                estimator: estimator.to_string(),
                axis,
                axis_value: first.axis_value,
                regressor: regressor(axis, first),
                trial_count: ok.len(),
                failed_count: cell.len() - ok.len(),
                sin_theta_median: median_or_nan(&ok.iter().map(|r| r.sin_theta).collect::<Vec<_>>()),
                excess_risk_median: median_or_nan(&ok.iter().map(|r| r.excess_risk).collect::<Vec<_>>()),
                reference_kind: kind,
                reference_rate: reference_rate(kind, &params).unwrap_or(f64::NAN),
                prop1_lower: reference_rate(RateKind::Prop1Lower, &params).unwrap_or(f64::NAN),
            });
        }

        let estimators: Vec<&str> = {
            let mut v: Vec<&str> = cells.keys().map(|k| k.0).collect();
            v.dedup();
            v
        };
        for estimator in &estimators {
            let rows: Vec<&OverlayRow> = report
                .overlay
                .iter()
                .filter(|o| o.experiment == *experiment && o.estimator == *estimator)
                .collect();
            for metric in ["sin_theta", "excess_risk"] {
                let pick = |o: &OverlayRow| match metric {
                    "sin_theta" => o.sin_theta_median,
                    _ => o.excess_risk_median,
                };
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .map(|o| (o.regressor, pick(o)))
                    .filter(|(x, y)| *x > 0.0 && *y > 0.0)
                    .collect();
                let refs: Vec<(f64, f64)> = rows
                    .iter()
                    .map(|o| (o.regressor, o.reference_rate))
                    .filter(|(x, y)| *x > 0.0 && *y > 0.0)
                    .collect();
                let fit = fit_loglog_slope(&pts).ok();
                report.slopes.push(SlopeRow {
                    experiment: experiment.to_string(),
                    estimator: estimator.to_string(),
                    axis,
                    metric,
                    points: pts.len(),
                    slope: fit.map_or(f64::NAN, |f| f.slope),
                    intercept: fit.map_or(f64::NAN, |f| f.intercept),
                    r_squared: fit.map_or(f64::NAN, |f| f.r_squared),
                    reference_kind: rows[0].reference_kind,
                    reference_slope: fit_loglog_slope(&refs).map_or(f64::NAN, |f| f.slope),
                });
            }
        }

        if !estimators.contains(&BASELINE) {
            continue;
        }
        let mut by_cell: BTreeMap<(u64, usize), BTreeMap<&str, &TrialRecord>> = BTreeMap::new();
        for r in recs {
            by_cell
                .entry((r.axis_value.to_bits(), r.trial))
                .or_default()
                .insert(&r.estimator, r);
        }
        for estimator in estimators.iter().filter(|e| **e != BASELINE) {
            let mut tallies: BTreeMap<u64, (u64, u64, u64, u64)> = BTreeMap::new();
            for ((axis_bits, _), members) in &by_cell {
                let t = tallies.entry(*axis_bits).or_default();
                match (members.get(BASELINE), members.get(estimator)) {
                    (Some(b), Some(a)) if a.is_ok() && b.is_ok() => {
                        if a.sin_theta < b.sin_theta {
                            t.0 += 1;
                        } else if a.sin_theta > b.sin_theta {
                            t.1 += 1;
                        } else {
                            t.2 += 1;
                        }
                    }
                    _ => t.3 += 1,
                }
            }
            for (axis_bits, (wins, losses, ties, unpaired)) in tallies {
                report.paired.push(PairedRow {
                    experiment: experiment.to_string(),
                    axis_value: f64::from_bits(axis_bits),
                    estimator: estimator.to_string(),
                    wins,
                    losses,
                    ties,
                    unpaired,
                    sign_test_p: sign_test_p_value(wins, wins + losses)?,
                });
            }
        }
    }
    Ok(report)
}

pub fn overlay_rows(report: &Report) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "experiment",
        "estimator",
        "axis",
        "axis_value",
        "regressor",
        "trial_count",
        "failed_count",
        "sin_theta_median",
        "excess_risk_median",
        "reference_kind",
        "reference_rate",
        "prop1_lower",
        "sin_theta_over_prop1",
    ];
    let rows = report
        .overlay
        .iter()
        .map(|o| {
            vec![
                o.experiment.clone(),
                o.estimator.clone(),
                o.axis.tag().into(),
                fmt_f64(o.axis_value),
                fmt_f64(o.regressor),
                o.trial_count.to_string(),
                o.failed_count.to_string(),
                fmt_f64(o.sin_theta_median),
                fmt_f64(o.excess_risk_median),
                o.reference_kind.tag().into(),
                fmt_f64(o.reference_rate),
                fmt_f64(o.prop1_lower),
                fmt_f64(o.sin_theta_median / o.prop1_lower),
            ]
        })
        .collect();
    (header, rows)
}

pub fn slope_rows(report: &Report) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "experiment",
        "estimator",
        "axis",
        "metric",
        "points",
        "slope",
        "intercept",
        "r_squared",
        "reference_kind",
        "reference_slope",
    ];
    let rows = report
        .slopes
        .iter()
        .map(|s| {
            vec![
                s.experiment.clone(),
                s.estimator.clone(),
                s.axis.tag().into(),
                s.metric.into(),
                s.points.to_string(),
                fmt_f64(s.slope),
                fmt_f64(s.intercept),
                fmt_f64(s.r_squared),
                s.reference_kind.tag().into(),
                fmt_f64(s.reference_slope),
            ]
        })
        .collect();
    (header, rows)
}

pub fn paired_rows(report: &Report) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "experiment",
        "axis_value",
        "estimator",
        "baseline",
        "wins",
        "losses",
        "ties",
        "unpaired",
        "sign_test_p",
    ];
    let rows = report
        .paired
        .iter()
        .map(|p| {
            vec![
                p.experiment.clone(),
                fmt_f64(p.axis_value),
                p.estimator.clone(),
                BASELINE.into(),
                p.wins.to_string(),
                p.losses.to_string(),
                p.ties.to_string(),
                p.unpaired.to_string(),
                fmt_f64(p.sign_test_p),
            ]
        })
        .collect();
    (header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, estimator: &str, trial: usize, sin_theta: f64) -> TrialRecord {
        TrialRecord {
            experiment: "law".into(),
            axis_value: n as f64,
            estimator: estimator.into(),
            trial,
            seed: 0,
            p: 64,
            r: 4,
            tasks: 64,
            n,
            n_target: 100,
            n_unlabeled: 0,
            epsilon: 0.0,
            alpha: 1.0,
            support_size: 64,
            sin_theta,
            excess_risk: sin_theta * sin_theta,
            target_accuracy: 0.9,
            suppressed_count: 0,
            wall_ms: 1.0,
            status: "ok".into(),
        }
    }

    #[test]
    fn synthetic_power_law_slope() {
        let recs: Vec<TrialRecord> = [64, 128, 256, 512, 1024]
            .iter()
            .flat_map(|&n| (0..3).map(move |t| rec(n, "standard", t, 3.0 * (n as f64).powf(-0.37))))
            .collect();
        let report = build_report(&recs).unwrap();
        let s = report.slopes.iter().find(|s| s.metric == "sin_theta").unwrap();
        assert_eq!(s.axis, Axis::N);
        assert!((s.slope + 0.37).abs() < 1e-6);
        let e = report.slopes.iter().find(|s| s.metric == "excess_risk").unwrap();
        assert!((e.slope + 0.74).abs() < 1e-6);
        assert_eq!(s.reference_kind, RateKind::Lemma1N);
    }

    #[test]
    fn paired_counts_sum_to_trials() {
        let mut recs = Vec::new();
        for n in [10, 20] {
            for t in 0..6 {
                recs.push(rec(n, "standard", t, 0.5));
                let adv = match t {
                    0..=3 => 0.4,
                    4 => 0.5,
                    _ => 0.6,
                };
                recs.push(rec(n, "adv_l2", t, adv));
            }
        }
        let report = build_report(&recs).unwrap();
        assert_eq!(report.paired.len(), 2);
        for p in &report.paired {
            assert_eq!((p.wins, p.losses, p.ties, p.unpaired), (4, 1, 1, 0));
            assert_eq!(p.wins + p.losses + p.ties, 6);
        }
    }

    #[test]
    fn failed_partner_is_unpaired() {
        let mut bad = rec(10, "adv_l2", 0, f64::NAN);
        bad.status = "error:all_suppressed".into();
        let recs = vec![rec(10, "standard", 0, 0.5), bad];
        let report = build_report(&recs).unwrap();
        assert_eq!(report.paired[0].unpaired, 1);
        assert_eq!(report.paired[0].sign_test_p, 1.0);
    }

    #[test]
    fn axis_inference() {
        let mut a = rec(10, "standard", 0, 0.5);
        a.axis_value = 4.0;
        a.alpha = 4.0;
        assert_eq!(infer_axis(&[&a]), Axis::Alpha);
        let mut b = rec(10, "standard", 0, 0.5);
        b.n_unlabeled = 200;
        b.axis_value = 200.0;
        assert_eq!(infer_axis(&[&b]), Axis::NUnlabeled);
        assert_eq!(regressor(Axis::NUnlabeled, &b), 210.0);
    }
}
