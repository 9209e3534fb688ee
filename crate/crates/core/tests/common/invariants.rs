//! Property checks for every stated invariant, runnable from any test target.
//!
//! Each check drives a deterministic proptest runner and returns the first
//! counterexample as an error string.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use xferlab::cli::config_digest;
use xferlab::cli::records::{fmt_f64, parse_records, records_csv};
use xferlab::datagen::{
    make_ensemble, sample_dataset, task_diversity, EnsembleSpec, LabeledDataset, NoiseSpec, SnrProfile, SparsitySpec,
};
use xferlab::harness::{
    aggregate, generate_cell, preset, run_sweep, EpsilonRule, EstimatorSpec, PresetName, SweepAxis, SweepConfig,
    SweepSpec,
};
use xferlab::metrics::{
    closed_form_accuracy, evaluate, excess_risk, monte_carlo_accuracy, representation_error, spearman,
};
use xferlab::pipeline::{algorithm1, algorithm2, transfer_from_means, TransferOutput};
use xferlab::subspace::{
    principal_angles, random_orthonormal, sin_theta_dist, top_r_left_singular, truncated_svd, StackedDirections,
};
use xferlab::train::{
    empirical_mean_direction, fit, fit_adv_l2, fit_adv_linf, fit_standard, oracle_fit, EstimatorConfig, EstimatorKind,
};

pub type Check = fn() -> Result<(), String>;

fn run<S>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn spec(p: usize, r: usize, tasks: usize) -> EnsembleSpec {
    EnsembleSpec {
        p,
        r,
        tasks,
        snr: SnrProfile::uniform(1.0),
        sparsity: SparsitySpec::dense(),
        noise: NoiseSpec::default(),
        target_norm: 1.0,
    }
}

/// (p, r) with 1 ≤ r ≤ p ≤ 12, plus a seed.
fn dims() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..=12).prop_flat_map(|p| (Just(p), 1..=p, any::<u64>()))
}

fn sources(
    ens: &xferlab::datagen::TaskEnsemble,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<LabeledDataset>, LabeledDataset) {
    let s = (1..=ens.tasks())
        .map(|t| sample_dataset(ens, t, n, rng).unwrap())
        .collect();
    let t = sample_dataset(ens, ens.target_index(), n, rng).unwrap();
    (s, t)
}

fn pipeline_case(seed: u64) -> (xferlab::datagen::TaskEnsemble, TransferOutput) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.random_range(1..=3);
    let p = rng.random_range(2 * r..=14);
    // Enough tasks for the diversity floor to be reachable.
    let tasks = rng.random_range(12 * r..=12 * r + 6);
    let ens = make_ensemble(&spec(p, r, tasks), &mut rng).unwrap();
    let (s, t) = sources(&ens, rng.random_range(2..40), &mut rng);
    let out = algorithm1(&s, &t, r).unwrap();
    (ens, out)
}

// subspace

pub fn svd_output_is_orthonormal() -> Result<(), String> {
    run(64, (dims(), 1usize..10), |((p, r, seed), extra)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tasks = r + extra;
        let mut m = gaussian(p, tasks, &mut rng);
        // Zero columns (suppressed tasks) are allowed.
        for j in 0..tasks {
            if j >= r && rng.random_bool(0.3) {
                m.column_mut(j).fill(0.0);
            }
        }
        for j in 0..tasks {
            let norm = m.column(j).norm();
            if norm > 1.0 {
                m.column_mut(j).unscale_mut(norm);
            }
        }
        let w = top_r_left_singular(&StackedDirections::new(m).unwrap(), r).unwrap();
        let gram = w.basis().tr_mul(w.basis());
        prop_assert!((gram - DMatrix::identity(r, r)).amax() <= 1e-8);
        Ok(())
    })
}

pub fn sin_theta_symmetric_and_bounded() -> Result<(), String> {
    run(128, dims(), |(p, r, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_orthonormal(p, r, &mut rng).unwrap();
        let f = random_orthonormal(p, r, &mut rng).unwrap();
        let d = sin_theta_dist(&e, &f).unwrap();
        prop_assert!((d - sin_theta_dist(&f, &e).unwrap()).abs() <= 1e-10);
        prop_assert!((0.0..=(r as f64).sqrt()).contains(&d));
        prop_assert!(sin_theta_dist(&e, &e).unwrap() <= 1e-10);
        Ok(())
    })
}

pub fn sin_theta_rotation_invariant() -> Result<(), String> {
    run(128, dims(), |(p, r, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_orthonormal(p, r, &mut rng).unwrap();
        let f = random_orthonormal(p, r, &mut rng).unwrap();
        let o = random_orthonormal(r, r, &mut rng).unwrap();
        let eo = e.rotate(o.basis()).unwrap();
        let diff = sin_theta_dist(&eo, &f).unwrap() - sin_theta_dist(&e, &f).unwrap();
        prop_assert!(diff.abs() <= 1e-8);
        Ok(())
    })
}

pub fn span_invariant_to_diagonal_rescaling() -> Result<(), String> {
    run(96, (dims(), 0usize..8), |((p, r, seed), extra)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tasks = r + extra;
        let b = random_orthonormal(p, r, &mut rng).unwrap();
        let m = b.basis() * gaussian(r, tasks, &mut rng);
        let d = DMatrix::from_diagonal(&DVector::from_fn(tasks, |_, _| rng.random_range(0.1..10.0)));
        let w = truncated_svd(&m, r).map_err(|e| TestCaseError::reject(e.to_string()))?;
        let wd = truncated_svd(&(&m * d), r).map_err(|e| TestCaseError::reject(e.to_string()))?;
        prop_assert!(sin_theta_dist(&w.basis, &wd.basis).unwrap() <= 1e-8);
        Ok(())
    })
}

pub fn sin_theta_matches_principal_angles() -> Result<(), String> {
    run(128, dims(), |(p, r, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_orthonormal(p, r, &mut rng).unwrap();
        let f = random_orthonormal(p, r, &mut rng).unwrap();
        // acos loses half the digits near zero angle, so compare squares.
        let definitional: f64 = principal_angles(&e, &f).unwrap().iter().map(|t| t.sin().powi(2)).sum();
        prop_assert!((definitional - sin_theta_dist(&e, &f).unwrap().powi(2)).abs() <= 1e-8);
        Ok(())
    })
}

// datagen

fn ensemble_spec() -> impl Strategy<Value = (EnsembleSpec, u64)> {
    (
        1usize..=4,
        0usize..10,
        0usize..10,
        any::<bool>(),
        any::<bool>(),
        any::<u64>(),
    )
        .prop_map(|(r, dp, dt, grouped, sparse, seed)| {
            let p = 2 * r + dp;
            let tasks = 12 * r + dt;
            let mut s = spec(p, r, tasks);
            if grouped {
                s.snr = SnrProfile::two_group(1.0, 3.0, 0.5);
            }
            if sparse {
                s.sparsity = SparsitySpec::row_sparse(r + (seed as usize) % (p - r + 1));
            }
            (s, seed)
        })
}

pub fn ensemble_diversity_floor() -> Result<(), String> {
    run(128, ensemble_spec(), |(s, seed)| {
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(task_diversity(&ens).unwrap() >= 0.5 / s.r as f64);
        if s.snr.kind == xferlab::datagen::SnrKind::TwoGroup {
            let k = s.snr.strong_count(s.tasks);
            prop_assert!(k >= 1 && k < s.tasks);
        }
        Ok(())
    })
}

pub fn row_sparse_support_is_exact() -> Result<(), String> {
    run(128, ensemble_spec(), |(s, seed)| {
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let b = ens.basis().basis();
        let nonzero_rows = (0..s.p).filter(|&i| b.row(i).iter().any(|&x| x != 0.0)).count();
        if let Some(k) = s.sparsity.support_size {
            prop_assert_eq!(nonzero_rows, k);
            for t in 1..=ens.target_index() {
                let mu = ens.mean(t).unwrap();
                prop_assert!(mu.iter().filter(|&&x| x != 0.0).count() <= k);
            }
        }
        Ok(())
    })
}

pub fn mean_norm_equals_task_norm() -> Result<(), String> {
    run(128, ensemble_spec(), |(s, seed)| {
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for t in 1..=ens.target_index() {
            let a = ens.task_vector(t).unwrap().norm();
            prop_assert!(a > 0.0);
            prop_assert!((ens.mean(t).unwrap().norm() - a).abs() <= 1e-10);
        }
        Ok(())
    })
}

pub fn sampling_is_seed_deterministic() -> Result<(), String> {
    run(64, (ensemble_spec(), 1usize..30), |((s, seed), n)| {
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let a = sample_dataset(&ens, 1, n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        let b = sample_dataset(&ens, 1, n, &mut ChaCha8Rng::seed_from_u64(seed ^ 1)).unwrap();
        prop_assert!(a
            .inputs()
            .iter()
            .zip(b.inputs().iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert_eq!(a.labels(), b.labels());
        prop_assert!(a.labels().iter().all(|&y| y == 1 || y == -1));
        Ok(())
    })
}

// train

fn small_dataset() -> impl Strategy<Value = LabeledDataset> {
    (1usize..=8, 1usize..=16, any::<u64>(), 0.0f64..3.0).prop_map(|(p, n, seed, scale)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = DVector::<f64>::from_fn(p, |_, _| rng.sample(StandardNormal)).normalize() * scale;
        let labels: Vec<i8> = (0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let x = DMatrix::from_fn(n, p, |i, j| {
            f64::from(labels[i]) * mu[j] + rng.sample::<f64, _>(StandardNormal)
        });
        LabeledDataset::new(x, labels).unwrap()
    })
}

pub fn adv_l2_reduces_to_standard() -> Result<(), String> {
    run(256, small_dataset(), |ds| {
        if empirical_mean_direction(&ds).norm() < 1e-6 {
            return Ok(());
        }
        let a = fit_adv_l2(&ds, 1e-12).unwrap();
        let s = fit_standard(&ds);
        prop_assert!((a.beta - s.beta).amax() <= 1e-9);
        Ok(())
    })
}

pub fn adv_linf_reduces_to_standard() -> Result<(), String> {
    run(256, small_dataset(), |ds| {
        let mean = empirical_mean_direction(&ds);
        if mean.iter().filter(|m| **m != 0.0).any(|m| m.abs() < 1e-6) {
            return Ok(());
        }
        let a = fit_adv_linf(&ds, 1e-12).unwrap();
        let s = fit_standard(&ds);
        prop_assert!((a.beta - s.beta).amax() <= 1e-6);
        Ok(())
    })
}

pub fn linf_support_is_monotone() -> Result<(), String> {
    run(256, (small_dataset(), 0.0f64..2.0, 0.0f64..2.0), |(ds, a, b)| {
        let (e1, e2) = if a <= b { (a, b) } else { (b, a) };
        let nnz = |e: f64| {
            let cfg = EstimatorConfig::adv_linf(e).unwrap();
            fit(&ds, &cfg).unwrap().beta.iter().filter(|x| **x != 0.0).count()
        };
        prop_assert!(nnz(e2) <= nnz(e1));
        Ok(())
    })
}

pub fn closed_form_never_loses_to_oracle() -> Result<(), String> {
    run(24, (small_dataset(), 0.05f64..2.0), |(ds, eps)| {
        for cfg in [
            EstimatorConfig::standard(),
            EstimatorConfig::adv_l2(eps).unwrap(),
            EstimatorConfig::adv_linf(eps).unwrap(),
        ] {
            let closed = fit(&ds, &cfg).unwrap();
            let oracle = oracle_fit(&ds, &cfg).unwrap();
            prop_assert!(closed.objective <= oracle.objective + 1e-3);
        }
        Ok(())
    })
}

pub fn fits_depend_only_on_mean() -> Result<(), String> {
    run(128, (small_dataset(), 0.0f64..2.0), |(ds, eps)| {
        // A one-point dataset (μ̂, +1) has the same signed mean.
        let mean = empirical_mean_direction(&ds);
        let proxy = LabeledDataset::new(DMatrix::from_row_slice(1, mean.len(), mean.as_slice()), vec![1]).unwrap();
        prop_assert_eq!(empirical_mean_direction(&proxy), mean.clone());
        for kind in [EstimatorKind::Standard, EstimatorKind::AdvL2, EstimatorKind::AdvLinf] {
            let e = if kind == EstimatorKind::Standard { 0.0 } else { eps };
            let cfg = EstimatorConfig::new(kind, e).unwrap();
            prop_assert_eq!(fit(&ds, &cfg).unwrap(), fit(&proxy, &cfg).unwrap());
        }
        Ok(())
    })
}

pub fn fit_result_contract() -> Result<(), String> {
    run(256, (small_dataset(), 0.0f64..3.0), |(ds, eps)| {
        prop_assert_eq!(EstimatorConfig::standard().epsilon(), 0.0);
        prop_assert!(EstimatorConfig::new(EstimatorKind::Standard, 0.5).is_err());
        for kind in [EstimatorKind::Standard, EstimatorKind::AdvL2, EstimatorKind::AdvLinf] {
            let e = if kind == EstimatorKind::Standard { 0.0 } else { eps };
            let f = fit(&ds, &EstimatorConfig::new(kind, e).unwrap()).unwrap();
            prop_assert!(f.beta.norm() <= 1.0 + 1e-10);
            prop_assert_eq!(f.suppressed, f.beta.norm() == 0.0);
        }
        Ok(())
    })
}

// pipeline

pub fn small_epsilon_keeps_span() -> Result<(), String> {
    run(64, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = make_ensemble(&spec(10, 2, 6), &mut rng).unwrap();
        let (s, t) = sources(&ens, 20, &mut rng);
        let min_norm = s
            .iter()
            .map(|d| empirical_mean_direction(d).norm())
            .fold(f64::INFINITY, f64::min);
        let eps = 0.5 * min_norm;
        if eps <= 0.0 {
            return Ok(());
        }
        let a1 = algorithm1(&s, &t, 2).unwrap();
        let a2 = algorithm2(&s, &t, 2, &EstimatorConfig::adv_l2(eps).unwrap()).unwrap();
        prop_assert!(sin_theta_dist(&a1.w1, &a2.w1).unwrap() <= 1e-8);
        Ok(())
    })
}

pub fn head_isometry_and_norm() -> Result<(), String> {
    run(128, any::<u64>(), |seed| {
        let (_, out) = pipeline_case(seed);
        prop_assert!((out.predictor().norm() - out.w2.norm()).abs() <= 1e-10);
        prop_assert!(out.w2.norm() <= 1.0 + 1e-10);
        let gram = out.w1.basis().tr_mul(out.w1.basis());
        prop_assert!((gram - DMatrix::identity(out.w1.r(), out.w1.r())).amax() <= 1e-8);
        prop_assert!(out.singular_values.windows(2).all(|w| w[0] >= w[1]));
        Ok(())
    })
}

pub fn pipeline_is_deterministic() -> Result<(), String> {
    run(64, any::<u64>(), |seed| {
        let (_, a) = pipeline_case(seed);
        let (_, b) = pipeline_case(seed);
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn suppression_accounting() -> Result<(), String> {
    run(128, (any::<u64>(), 0.0f64..1.5, any::<bool>()), |(seed, eps, linf)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = make_ensemble(&spec(10, 2, 8), &mut rng).unwrap();
        let (s, t) = sources(&ens, 8, &mut rng);
        let kind = if linf {
            EstimatorKind::AdvLinf
        } else {
            EstimatorKind::AdvL2
        };
        let cfg = EstimatorConfig::new(kind, eps).unwrap();
        let means: Vec<DVector<f64>> = s.iter().map(empirical_mean_direction).collect();
        match transfer_from_means(&means, &empirical_mean_direction(&t), 2, &cfg) {
            Ok(out) => {
                let zero_columns = out.per_task_fits.iter().filter(|f| f.beta.norm() == 0.0).count();
                prop_assert_eq!(zero_columns, out.suppressed_count());
            }
            Err(xferlab::Error::AllSuppressed { surviving, .. }) => prop_assert!(surviving < 2),
            Err(xferlab::Error::DegenerateRank { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
        Ok(())
    })
}

// metrics

pub fn eval_ranges() -> Result<(), String> {
    run(128, any::<u64>(), |seed| {
        let (ens, out) = pipeline_case(seed);
        let rep = evaluate(&out, &ens, 1000, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mu = ens.target_mean().norm();
        prop_assert!(rep.excess_risk >= -1e-9 && rep.excess_risk <= 2.0 * mu + 1e-9);
        prop_assert!(rep.sin_theta >= 0.0 && rep.sin_theta <= (out.w1.r() as f64).sqrt());
        prop_assert!((0.0..=1.0).contains(&rep.target_accuracy));
        prop_assert!(rep.suppressed_count <= ens.tasks());
        prop_assert!((rep.excess_risk - excess_risk(&out, &ens).unwrap()).abs() == 0.0);
        prop_assert!((rep.sin_theta - representation_error(&out.w1, &ens).unwrap()).abs() == 0.0);
        Ok(())
    })
}

pub fn metrics_rotation_invariant() -> Result<(), String> {
    run(128, any::<u64>(), |seed| {
        let (ens, out) = pipeline_case(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFF);
        let o = random_orthonormal(out.w1.r(), out.w1.r(), &mut rng).unwrap();
        let rotated = TransferOutput {
            w1: out.w1.rotate(o.basis()).unwrap(),
            w2: o.basis().tr_mul(&out.w2),
            ..out.clone()
        };
        let d_er = excess_risk(&rotated, &ens).unwrap() - excess_risk(&out, &ens).unwrap();
        prop_assert!(d_er.abs() <= 1e-10);
        let d_st = representation_error(&rotated.w1, &ens).unwrap() - representation_error(&out.w1, &ens).unwrap();
        prop_assert!(d_st.abs() <= 1e-8);
        Ok(())
    })
}

pub fn accuracy_monotone_in_alignment() -> Result<(), String> {
    run(128, (any::<u64>(), -1.0f64..1.0, -1.0f64..1.0), |(seed, a, b)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ens = make_ensemble(&spec(6, 2, 4), &mut rng).unwrap();
        let mu = ens.target_mean().normalize();
        let ortho = {
            let g = DVector::<f64>::from_fn(6, |_, _| rng.sample(StandardNormal));
            let g = &g - &mu * mu.dot(&g);
            g.normalize()
        };
        // Unit predictors whose alignment with μ is exactly the given cosine.
        let at = |c: f64| &mu * c + &ortho * (1.0 - c * c).sqrt();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let acc_lo = closed_form_accuracy(&at(lo), &ens).unwrap();
        let acc_hi = closed_form_accuracy(&at(hi), &ens).unwrap();
        prop_assert!(acc_lo <= acc_hi + 1e-15);
        Ok(())
    })
}

pub fn closed_form_accuracy_matches_monte_carlo() -> Result<(), String> {
    run(12, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = spec(5, 2, 4);
        s.target_norm = rng.random_range(0.1..2.0);
        let ens = make_ensemble(&s, &mut rng).unwrap();
        let v = DVector::<f64>::from_fn(5, |_, _| rng.sample(StandardNormal));
        let m = 40_000;
        let cf = closed_form_accuracy(&v, &ens).unwrap();
        let mc = monte_carlo_accuracy(&v, &ens, m, &mut rng).unwrap();
        let se = (cf * (1.0 - cf) / m as f64).sqrt();
        // Twelve cases at 4 SE keep the family-wise false alarm rate below 1e-3.
        prop_assert!((cf - mc).abs() <= 4.0 * se + 1e-12, "cf {} mc {}", cf, mc);
        Ok(())
    })
}

fn tiny_sweep(seed: u64) -> SweepConfig {
    SweepConfig {
        experiment: "prop".into(),
        ensemble: EnsembleSpec {
            snr: SnrProfile::two_group(1.0, 4.0, 0.5),
            ..spec(12, 2, 6)
        },
        sweep: SweepSpec {
            axis: SweepAxis::N,
            values: vec![8.0, 32.0],
        },
        estimators: vec![
            EstimatorSpec::standard(),
            EstimatorSpec::adversarial(EstimatorKind::AdvL2, EpsilonRule::Fixed(0.3)),
        ],
        n_source: 8,
        n_target: 40,
        n_unlabeled: 0,
        trials: 6,
        seed,
    }
}

pub fn sweep_sin_theta_excess_risk_concordant() -> Result<(), String> {
    run(6, any::<u64>(), |seed| {
        let recs = run_sweep(&tiny_sweep(seed), 1).unwrap();
        let ok: Vec<_> = recs.iter().filter(|r| r.is_ok()).collect();
        let x: Vec<f64> = ok.iter().map(|r| r.sin_theta).collect();
        let y: Vec<f64> = ok.iter().map(|r| r.excess_risk).collect();
        prop_assert!(spearman(&x, &y).unwrap() >= 0.0);
        Ok(())
    })
}

// harness

pub fn sweep_deterministic_under_parallelism() -> Result<(), String> {
    run(4, (any::<u64>(), 2usize..6), |(seed, threads)| {
        let a = run_sweep(&tiny_sweep(seed), 1).unwrap();
        let b = run_sweep(&tiny_sweep(seed), threads).unwrap();
        prop_assert_eq!(a.len(), b.len());
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.same_outcome(y)));
        Ok(())
    })
}

pub fn estimators_share_identical_data() -> Result<(), String> {
    run(16, (any::<u64>(), 0usize..2, 0usize..6), |(seed, axis, trial)| {
        let cfg = tiny_sweep(seed);
        let mut only_std = cfg.clone();
        only_std.estimators.truncate(1);
        let mut only_adv = cfg.clone();
        only_adv.estimators.remove(0);
        let a = generate_cell(&only_std, axis, trial, true).unwrap().digest;
        let b = generate_cell(&only_adv, axis, trial, true).unwrap().digest;
        prop_assert!(a.is_some());
        prop_assert_eq!(a, b);
        Ok(())
    })
}

pub fn aggregation_permutation_invariant_and_idempotent() -> Result<(), String> {
    let recs = run_sweep(&tiny_sweep(5), 1).map_err(|e| e.to_string())?;
    let reference = format!("{:?}", aggregate(&recs));
    run(64, Just(recs.clone()).prop_shuffle(), |shuffled| {
        prop_assert_eq!(format!("{:?}", aggregate(&shuffled)), reference.clone());
        prop_assert_eq!(
            format!("{:?}", aggregate(&shuffled)),
            format!("{:?}", aggregate(&shuffled))
        );
        Ok(())
    })
}

// cli

pub fn records_round_trip_preserves_aggregates() -> Result<(), String> {
    run(4, any::<u64>(), |seed| {
        let recs = run_sweep(&tiny_sweep(seed), 1).unwrap();
        let back = parse_records(&records_csv(&recs).unwrap()).unwrap();
        prop_assert_eq!(format!("{:?}", aggregate(&recs)), format!("{:?}", aggregate(&back)));
        Ok(())
    })
}

pub fn config_digest_tracks_fields() -> Result<(), String> {
    let base = preset(PresetName::Thm1L2Snr).sweeps().map_err(|e| e.to_string())?;
    run(64, (0usize..6, 1u64..1000), |(field, bump)| {
        let d0 = config_digest(&base);
        let reparsed: Vec<SweepConfig> = base
            .iter()
            .map(|c| serde_json::from_str(&serde_json::to_string(c).unwrap()).unwrap())
            .collect();
        prop_assert_eq!(config_digest(&reparsed), d0.clone());
        let mut c = base.clone();
        match field {
            0 => c[0].seed += bump,
            1 => c[0].trials += bump as usize,
            2 => c[0].n_source += bump as usize,
            3 => c[0].ensemble.noise.rho += bump as f64 * 1e-9,
            4 => c[0].sweep.values.push(100.0 + bump as f64),
            _ => c[0].experiment.push_str(&bump.to_string()),
        }
        prop_assert_ne!(config_digest(&c), d0);
        Ok(())
    })
}

pub fn floats_round_trip_exactly() -> Result<(), String> {
    run(2048, any::<u64>(), |bits| {
        let x = f64::from_bits(bits);
        if !x.is_finite() {
            return Ok(());
        }
        let text = fmt_f64(x);
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), bits);
        let digits = text
            .split('e')
            .next()
            .unwrap()
            .chars()
            .filter(|c| c.is_ascii_digit())
            .count();
        prop_assert_eq!(digits, 17);
        Ok(())
    })
}

pub const CHECKS: &[(&str, Check)] = &[
    ("svd_output_is_orthonormal", svd_output_is_orthonormal),
    ("sin_theta_symmetric_and_bounded", sin_theta_symmetric_and_bounded),
    ("sin_theta_rotation_invariant", sin_theta_rotation_invariant),
    (
        "span_invariant_to_diagonal_rescaling",
        span_invariant_to_diagonal_rescaling,
    ),
    ("sin_theta_matches_principal_angles", sin_theta_matches_principal_angles),
    ("ensemble_diversity_floor", ensemble_diversity_floor),
    ("row_sparse_support_is_exact", row_sparse_support_is_exact),
    ("mean_norm_equals_task_norm", mean_norm_equals_task_norm),
    ("sampling_is_seed_deterministic", sampling_is_seed_deterministic),
    ("adv_l2_reduces_to_standard", adv_l2_reduces_to_standard),
    ("adv_linf_reduces_to_standard", adv_linf_reduces_to_standard),
    ("linf_support_is_monotone", linf_support_is_monotone),
    ("closed_form_never_loses_to_oracle", closed_form_never_loses_to_oracle),
    ("fits_depend_only_on_mean", fits_depend_only_on_mean),
    ("fit_result_contract", fit_result_contract),
    ("small_epsilon_keeps_span", small_epsilon_keeps_span),
    ("head_isometry_and_norm", head_isometry_and_norm),
    ("pipeline_is_deterministic", pipeline_is_deterministic),
    ("suppression_accounting", suppression_accounting),
    ("eval_ranges", eval_ranges),
    ("metrics_rotation_invariant", metrics_rotation_invariant),
    ("accuracy_monotone_in_alignment", accuracy_monotone_in_alignment),
    (
        "closed_form_accuracy_matches_monte_carlo",
        closed_form_accuracy_matches_monte_carlo,
    ),
    (
        "sweep_sin_theta_excess_risk_concordant",
        sweep_sin_theta_excess_risk_concordant,
    ),
    (
        "sweep_deterministic_under_parallelism",
        sweep_deterministic_under_parallelism,
    ),
    ("estimators_share_identical_data", estimators_share_identical_data),
    (
        "aggregation_permutation_invariant_and_idempotent",
        aggregation_permutation_invariant_and_idempotent,
    ),
    (
        "records_round_trip_preserves_aggregates",
        records_round_trip_preserves_aggregates,
    ),
    ("config_digest_tracks_fields", config_digest_tracks_fields),
    ("floats_round_trip_exactly", floats_round_trip_exactly),
];
