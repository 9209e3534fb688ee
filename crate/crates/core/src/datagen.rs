//! Ground-truth task ensembles and samples from the two-point mixture model
//! `x = η + y·B·a_t` with balanced labels `y ∈ {-1, +1}`.
//!
//! Task indices are one-based: sources are `1..=T` and the target is `T + 1`.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{random_orthonormal, Representation};

/// Maximum number of task-vector redraws in [`make_ensemble`].
pub const DIVERSITY_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrKind {
    Uniform,
    TwoGroup,
}

/// Norm profile of the source task vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrProfile {
    pub kind: SnrKind,
    /// `‖a_t‖` for uniform or weak-group tasks.
    pub base_norm: f64,
    /// Strong-group multiplier; strong tasks have norm `base_norm * alpha`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Fraction of strong tasks, `⌊frac_strong·T⌋` of them.
    #[serde(default = "default_frac_strong")]
    pub frac_strong: f64,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_frac_strong() -> f64 {
    0.5
}

impl SnrProfile {
    pub fn uniform(base_norm: f64) -> Self {
        Self {
            kind: SnrKind::Uniform,
            base_norm,
            alpha: 1.0,
            frac_strong: 0.5,
        }
    }

    pub fn two_group(base_norm: f64, alpha: f64, frac_strong: f64) -> Self {
        Self {
            kind: SnrKind::TwoGroup,
            base_norm,
            alpha,
            frac_strong,
        }
    }

    /// Number of strong tasks out of `tasks` (zero for uniform profiles).
    pub fn strong_count(&self, tasks: usize) -> usize {
        match self.kind {
            SnrKind::Uniform => 0,
            SnrKind::TwoGroup => (self.frac_strong * tasks as f64 + 1e-9).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityKind {
    Dense,
    RowSparse,
}

/// Row sparsity of `B`: only `support_size` rows are nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SparsitySpec {
    pub kind: SparsityKind,
    #[serde(default)]
    pub support_size: Option<usize>,
}

impl SparsitySpec {
    pub fn dense() -> Self {
        Self {
            kind: SparsityKind::Dense,
            support_size: None,
        }
    }

    pub fn row_sparse(support_size: usize) -> Self {
        Self {
            kind: SparsityKind::RowSparse,
            support_size: Some(support_size),
        }
    }
}

impl Default for SparsitySpec {
    fn default() -> Self {
        Self::dense()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian,
    /// i.i.d. `Uniform[-ρ√3, ρ√3]` per coordinate (variance `ρ²`).
    BoundedUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub rho: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            rho: 1.0,
        }
    }
}

/// Generative-model parameters. Serializes to the `"ensemble"` config block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub p: usize,
    pub r: usize,
    #[serde(rename = "T")]
    pub tasks: usize,
    pub snr: SnrProfile,
    #[serde(default)]
    pub sparsity: SparsitySpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_target_norm")]
    pub target_norm: f64,
}

fn default_target_norm() -> f64 {
    1.0
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.r == 0 {
            return cfg("r must be positive".into());
        }
        if 2 * self.r > self.p.min(self.tasks) {
            return cfg(format!(
                "need 2r <= min(p, T), got r={}, p={}, T={}",
                self.r, self.p, self.tasks
            ));
        }
        if !(self.snr.base_norm > 0.0 && self.snr.base_norm.is_finite()) {
            return cfg(format!("snr.base_norm must be positive, got {}", self.snr.base_norm));
        }
        if self.snr.kind == SnrKind::TwoGroup {
            if !(self.snr.alpha > 1.0 && self.snr.alpha.is_finite()) {
                return cfg(format!("two_group needs alpha > 1, got {}", self.snr.alpha));
            }
            if !(self.snr.frac_strong > 0.0 && self.snr.frac_strong < 1.0) {
                return cfg(format!("frac_strong must lie in (0, 1), got {}", self.snr.frac_strong));
            }
            let k = self.snr.strong_count(self.tasks);
            if k < 1 || k > self.tasks - 1 {
                return cfg(format!("two_group needs 1 <= floor(frac_strong*T) <= T-1, got {k}"));
            }
        }
        match self.sparsity.kind {
            SparsityKind::Dense => {}
            SparsityKind::RowSparse => {
                let s = self
                    .sparsity
                    .support_size
                    .ok_or_else(|| Error::Config("row_sparse needs sparsity.support_size".into()))?;
                if s < self.r || s > self.p {
                    return cfg(format!(
                        "support_size must satisfy r <= s <= p, got s={s}, r={}, p={}",
                        self.r, self.p
                    ));
                }
            }
        }
        if !(self.noise.rho > 0.0 && self.noise.rho.is_finite()) {
            return cfg(format!("noise.rho must be positive, got {}", self.noise.rho));
        }
        if !(self.target_norm > 0.0 && self.target_norm.is_finite()) {
            return cfg(format!("target_norm must be positive, got {}", self.target_norm));
        }
        Ok(())
    }
}

/// Ground truth: shared basis `B` and task vectors `a_1, …, a_{T+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEnsemble {
    basis: Representation,
    task_vectors: Vec<DVector<f64>>,
    strong: Vec<bool>,
    noise: NoiseSpec,
}

impl TaskEnsemble {
    /// Assembles an ensemble from explicit parts. `task_vectors` holds the `T`
    /// sources followed by the target; `strong` marks the strong group (may be
    /// empty for single-group ensembles).
    pub fn from_parts(
        basis: Representation,
        task_vectors: Vec<DVector<f64>>,
        strong: Vec<bool>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        if task_vectors.len() < 2 {
            return Err(Error::Dimension("need at least one source task and the target".into()));
        }
        let r = basis.r();
        for (t, a) in task_vectors.iter().enumerate() {
            if a.len() != r {
                return Err(Error::Dimension(format!(
                    "task vector {} has length {}, expected {r}",
                    t + 1,
                    a.len()
                )));
            }
            if !(a.norm() > 0.0) {
                return Err(Error::Contract(format!("task vector {} is zero", t + 1)));
            }
        }
        let tasks = task_vectors.len() - 1;
        let strong = if strong.is_empty() { vec![false; tasks] } else { strong };
        if strong.len() != tasks {
            return Err(Error::Dimension(format!(
                "strong-group mask has length {}, expected {tasks}",
                strong.len()
            )));
        }
        if !(noise.rho > 0.0) {
            return Err(Error::Config(format!("noise rho must be positive, got {}", noise.rho)));
        }
        Ok(Self {
            basis,
            task_vectors,
            strong,
            noise,
        })
    }

    pub fn basis(&self) -> &Representation {
        &self.basis
    }

    pub fn p(&self) -> usize {
        self.basis.p()
    }

    pub fn r(&self) -> usize {
        self.basis.r()
    }

    /// Number of source tasks `T`.
    pub fn tasks(&self) -> usize {
        self.task_vectors.len() - 1
    }

    /// One-based index of the target task.
    pub fn target_index(&self) -> usize {
        self.task_vectors.len()
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    /// Source tasks flagged as belonging to the strong group.
    pub fn strong_mask(&self) -> &[bool] {
        &self.strong
    }

    pub fn has_groups(&self) -> bool {
        self.strong.iter().any(|&s| s)
    }

    fn check_index(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.target_index() {
            return Err(Error::Index {
                index: t,
                max: self.target_index(),
            });
        }
        Ok(())
    }

    /// Task vector `a_t` (one-based).
    pub fn task_vector(&self, t: usize) -> Result<&DVector<f64>> {
        self.check_index(t)?;
        Ok(&self.task_vectors[t - 1])
    }

    /// Class mean `μ_t = B a_t` (one-based).
    pub fn mean(&self, t: usize) -> Result<DVector<f64>> {
        Ok(self.basis.basis() * self.task_vector(t)?)
    }

    pub fn target_mean(&self) -> DVector<f64> {
        self.basis.basis() * &self.task_vectors[self.tasks()]
    }
}

/// Labeled sample for one task: `n × p` inputs and `±1` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    inputs: DMatrix<f64>,
    labels: Vec<i8>,
}

impl LabeledDataset {
    pub fn new(inputs: DMatrix<f64>, labels: Vec<i8>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(Error::Contract("dataset must contain at least one point".into()));
        }
        if inputs.nrows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} input rows but {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::Contract("labels must be exactly +1 or -1".into()));
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn p(&self) -> usize {
        self.inputs.ncols()
    }

    /// Appends extra rows with their labels.
    pub fn augmented(&self, inputs: &DMatrix<f64>, labels: &[i8]) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Ok(self.clone());
        }
        if inputs.ncols() != self.p() {
            return Err(Error::Dimension(format!(
                "cannot append {}-column rows to a {}-column dataset",
                inputs.ncols(),
                self.p()
            )));
        }
        let n = self.len() + inputs.nrows();
        let mut all = DMatrix::<f64>::zeros(n, self.p());
        all.rows_mut(0, self.len()).copy_from(&self.inputs);
        all.rows_mut(self.len(), inputs.nrows()).copy_from(inputs);
        let mut ys = self.labels.clone();
        ys.extend_from_slice(labels);
        Self::new(all, ys)
    }
}

/// Draws a ground-truth ensemble.
///
/// Task directions are redrawn (up to [`DIVERSITY_ATTEMPTS`] times) until the
/// source diversity `σ_r(MᵀM/T)` reaches `0.5 / r`.
pub fn make_ensemble<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<TaskEnsemble> {
    spec.validate()?;
    let (p, r, tasks) = (spec.p, spec.r, spec.tasks);

    let basis = match spec.sparsity.kind {
        SparsityKind::Dense => random_orthonormal(p, r, rng)?,
        SparsityKind::RowSparse => {
            let s = spec.sparsity.support_size.expect("validated");
            let mut rows = index::sample(rng, p, s).into_vec();
            rows.sort_unstable();
            let inner = random_orthonormal(s, r, rng)?;
            let mut full = DMatrix::<f64>::zeros(p, r);
            for (k, &row) in rows.iter().enumerate() {
                full.row_mut(row).copy_from(&inner.basis().row(k));
            }
            Representation::from_orthonormal(full)
        }
    };

    let strong_count = spec.snr.strong_count(tasks);
    let strong: Vec<bool> = (0..tasks).map(|t| t >= tasks - strong_count).collect();
    let norms: Vec<f64> = strong
        .iter()
        .map(|&s| {
            if s {
                spec.snr.base_norm * spec.snr.alpha
            } else {
                spec.snr.base_norm
            }
        })
        .chain(std::iter::once(spec.target_norm))
        .collect();

    let floor = 0.5 / r as f64;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..DIVERSITY_ATTEMPTS {
        let dirs: Vec<DVector<f64>> = (0..=tasks).map(|_| sphere_direction(r, rng)).collect();
        let diversity = diversity_of(&dirs[..tasks], r)?;
        best = best.max(diversity);
        if diversity >= floor {
            let task_vectors = dirs.into_iter().zip(&norms).map(|(d, &n)| d * n).collect();
            return TaskEnsemble::from_parts(basis, task_vectors, strong, spec.noise);
        }
    }
    Err(Error::Diversity {
        best,
        floor,
        attempts: DIVERSITY_ATTEMPTS,
    })
}

fn sphere_direction<R: Rng + ?Sized>(r: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::<f64>::from_fn(r, |_, _| rng.sample(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// `σ_r(MᵀM/T)` for the matrix `M` whose columns are the normalized vectors.
pub fn diversity_of(task_vectors: &[DVector<f64>], r: usize) -> Result<f64> {
    let tasks = task_vectors.len();
    if tasks < r {
        return Err(Error::Dimension(format!(
            "task diversity needs T >= r, got T={tasks}, r={r}"
        )));
    }
    // The nonzero spectrum of MᵀM equals that of the r×r matrix MMᵀ.
    let mut gram = DMatrix::<f64>::zeros(r, r);
    for a in task_vectors {
        if a.len() != r {
            return Err(Error::Dimension("task vector length differs from r".into()));
        }
        let u = a / a.norm();
        gram += &u * u.transpose();
    }
    gram /= tasks as f64;
    let eig = gram.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min).max(0.0))
}

/// Source-task diversity of an ensemble.
pub fn task_diversity(ensemble: &TaskEnsemble) -> Result<f64> {
    diversity_of(&ensemble.task_vectors[..ensemble.tasks()], ensemble.r())
}

fn noise_sample<R: Rng + ?Sized>(noise: NoiseSpec, rng: &mut R) -> f64 {
    match noise.kind {
        NoiseKind::Gaussian => noise.rho * rng.sample::<f64, _>(StandardNormal),
        NoiseKind::BoundedUniform => {
            let half_width = noise.rho * 3f64.sqrt();
            (2.0 * rng.random::<f64>() - 1.0) * half_width
        }
    }
}

fn draw_rows<R: Rng + ?Sized>(
    ensemble: &TaskEnsemble,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, Vec<i8>)> {
    let mu = ensemble.mean(t)?;
    let p = ensemble.p();
    let noise = ensemble.noise();
    let mut rows = Vec::with_capacity(n * p);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y: i8 = if rng.random::<bool>() { 1 } else { -1 };
        let yf = f64::from(y);
        for j in 0..p {
            rows.push(noise_sample(noise, rng) + yf * mu[j]);
        }
        labels.push(y);
    }
    Ok((DMatrix::from_row_slice(n, p, &rows), labels))
}

/// Draws `n` labeled points from task `t` (one-based).
pub fn sample_dataset<R: Rng + ?Sized>(
    ensemble: &TaskEnsemble,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<LabeledDataset> {
    if n == 0 {
        return Err(Error::Contract("sample size must be positive".into()));
    }
    let (inputs, labels) = draw_rows(ensemble, t, n, rng)?;
    LabeledDataset::new(inputs, labels)
}

/// Draws `n_u` unlabeled inputs from task `t`; labels are drawn and discarded.
pub fn sample_unlabeled<R: Rng + ?Sized>(
    ensemble: &TaskEnsemble,
    t: usize,
    n_u: usize,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    draw_rows(ensemble, t, n_u, rng).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

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

    fn e(r: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(r);
        v[i] = 1.0;
        v
    }

    #[test]
    fn rank_one_ensemble_is_collinear() {
        let ens = make_ensemble(&spec(4, 1, 3), &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = ens.basis().basis().column(0).into_owned();
        for t in 1..=3 {
            let a = ens.task_vector(t).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-12);
            let mu = ens.mean(t).unwrap();
            let err = (&mu - &b).norm().min((&mu + &b).norm());
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn two_group_norms_are_exact() {
        let mut s = spec(100, 4, 80);
        s.snr = SnrProfile::two_group(1.0, 8.0, 0.5);
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let norms: Vec<f64> = (1..=80).map(|t| ens.task_vector(t).unwrap().norm()).collect();
        assert_eq!(norms.iter().filter(|&&n| (n - 1.0).abs() < 1e-12).count(), 40);
        assert_eq!(norms.iter().filter(|&&n| (n - 8.0).abs() < 1e-12).count(), 40);
        assert_eq!(ens.strong_mask().iter().filter(|&&s| s).count(), 40);
    }

    #[test]
    fn row_sparse_means_have_bounded_support() {
        let mut s = spec(512, 4, 64);
        s.sparsity = SparsitySpec::row_sparse(10);
        let ens = make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let nonzero_rows = (0..512)
            .filter(|&i| ens.basis().basis().row(i).iter().any(|&x| x != 0.0))
            .count();
        assert_eq!(nonzero_rows, 10);
        for t in 1..=65 {
            let mu = ens.mean(t).unwrap();
            assert!(mu.iter().filter(|&&x| x != 0.0).count() <= 10);
            assert!((mu.norm() - ens.task_vector(t).unwrap().norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn diversity_of_orthonormal_pair_is_half() {
        let d = diversity_of(&[e(2, 0), e(2, 1)], 2).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diversity_of_identical_directions_is_zero() {
        let d = diversity_of(&[e(2, 0), e(2, 0), e(2, 0)], 2).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn diversity_requires_enough_tasks() {
        assert!(matches!(diversity_of(&[e(3, 0)], 3), Err(Error::Dimension(_))));
    }

    #[test]
    fn generated_ensembles_meet_diversity_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let ens = make_ensemble(&spec(16, 4, 16), &mut rng).unwrap();
            assert!(task_diversity(&ens).unwrap() >= 0.5 / 4.0);
        }
    }

    #[test]
    fn invalid_spec_is_config_error() {
        let s = spec(6, 4, 10);
        assert!(matches!(
            make_ensemble(&s, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::Config(_))
        ));
        let mut s = spec(16, 2, 16);
        s.snr = SnrProfile::two_group(1.0, 1.0, 0.5);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = spec(16, 2, 16);
        s.sparsity = SparsitySpec::row_sparse(1);
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn noiseless_rows_are_signed_means() {
        let mut s = spec(5, 2, 4);
        s.noise.rho = 1e-12;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ens = make_ensemble(&s, &mut rng).unwrap();
        let ds = sample_dataset(&ens, 2, 50, &mut rng).unwrap();
        let mu = ens.mean(2).unwrap();
        for (i, &y) in ds.labels().iter().enumerate() {
            let row = ds.inputs().row(i).transpose();
            assert!((row - &mu * f64::from(y)).amax() < 1e-9);
        }
    }

    #[test]
    fn signed_mean_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ens = make_ensemble(&spec(4, 1, 3), &mut rng).unwrap();
        let n = 100_000;
        let ds = sample_dataset(&ens, 1, n, &mut rng).unwrap();
        let y = DVector::from_iterator(n, ds.labels().iter().map(|&y| f64::from(y)));
        let mean = ds.inputs().transpose() * y / n as f64;
        // 4 standard errors of a unit-variance coordinate mean is 0.0126.
        assert!((mean - ens.mean(1).unwrap()).amax() < 0.02);
    }

    #[test]
    fn labels_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ens = make_ensemble(&spec(4, 1, 3), &mut rng).unwrap();
        let ds = sample_dataset(&ens, 1, 10_000, &mut rng).unwrap();
        let frac = ds.labels().iter().filter(|&&y| y == 1).count() as f64 / 1e4;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn unlabeled_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = make_ensemble(&spec(7, 1, 3), &mut rng).unwrap();
        let empty = sample_unlabeled(&ens, 1, 0, &mut rng).unwrap();
        assert_eq!(empty.shape(), (0, 7));
        assert_eq!(sample_unlabeled(&ens, 1, 13, &mut rng).unwrap().shape(), (13, 7));
    }

    #[test]
    fn unlabeled_columns_are_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ens = make_ensemble(&spec(4, 1, 3), &mut rng).unwrap();
        let n = 100_000;
        let x = sample_unlabeled(&ens, 2, n, &mut rng).unwrap();
        let mu = ens.mean(2).unwrap();
        for j in 0..4 {
            let mean = x.column(j).sum() / n as f64;
            let sd = (1.0 + mu[j] * mu[j]).sqrt();
            assert!(mean.abs() < 4.0 * sd / (n as f64).sqrt(), "column {j}: {mean}");
        }
    }

    #[test]
    fn bounded_uniform_noise_has_unit_variance_and_bounds() {
        let mut s = spec(4, 1, 3);
        s.noise = NoiseSpec {
            kind: NoiseKind::BoundedUniform,
            rho: 2.0,
        };
        s.snr = SnrProfile::uniform(1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let ens = make_ensemble(&s, &mut rng).unwrap();
        let x = sample_unlabeled(&ens, 1, 50_000, &mut rng).unwrap();
        let bound = 2.0 * 3f64.sqrt() + 1e-6;
        assert!(x.iter().all(|v| v.abs() <= bound));
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 4.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn task_index_is_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = make_ensemble(&spec(4, 1, 3), &mut rng).unwrap();
        assert!(matches!(
            sample_dataset(&ens, 0, 5, &mut rng),
            Err(Error::Index { index: 0, max: 4 })
        ));
        assert!(matches!(sample_dataset(&ens, 5, 5, &mut rng), Err(Error::Index { .. })));
        assert!(sample_dataset(&ens, 4, 5, &mut rng).is_ok());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let ens = make_ensemble(&spec(6, 2, 4), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let a = sample_dataset(&ens, 3, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let b = sample_dataset(&ens, 3, 20, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
    }
}
