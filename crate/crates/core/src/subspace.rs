//! Orthonormal bases, truncated SVD and principal-angle distances.
//!
//! Everything here is a pure function of its inputs. The SVD backend is
//! nalgebra's one-sided Golub-Kahan implementation, which is deterministic for a
//! fixed input; singular-vector signs are canonicalized so that the
//! largest-magnitude entry of every column is positive.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Entrywise tolerance on `BᵀB = I` accepted by [`Representation::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Smallest `σ_r` accepted by [`top_r_left_singular`].
pub const DEGENERATE_SIGMA: f64 = 1e-12;

/// A `p × r` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    basis: DMatrix<f64>,
}

impl Representation {
    /// Wraps `basis`, checking `1 ≤ r ≤ p` and column orthonormality.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (p, r) = basis.shape();
        if r == 0 || r > p {
            return Err(Error::Dimension(format!(
                "representation needs 1 <= r <= p, got p={p}, r={r}"
            )));
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::<f64>::identity(r, r)).amax();
        if !(dev <= ORTHONORMAL_TOL) {
            return Err(Error::Contract(format!(
                "columns are not orthonormal (max |BᵀB - I| = {dev:.3e})"
            )));
        }
        Ok(Self { basis })
    }

    pub(crate) fn from_orthonormal(basis: DMatrix<f64>) -> Self {
        debug_assert!(basis.ncols() >= 1 && basis.ncols() <= basis.nrows());
        Self { basis }
    }

    /// Ambient dimension `p`.
    pub fn p(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace rank `r`.
    pub fn r(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.basis
    }

    /// Right-multiplies by an `r × r` matrix, which must be orthogonal.
    pub fn rotate(&self, rotation: &DMatrix<f64>) -> Result<Self> {
        if rotation.shape() != (self.r(), self.r()) {
            return Err(Error::Dimension(format!(
                "rotation must be {r}x{r}, got {:?}",
                rotation.shape(),
                r = self.r()
            )));
        }
        Self::new(&self.basis * rotation)
    }
}

/// Column-stacked per-task directions `[β̂₁, …, β̂_T]`, each of norm at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDirections {
    columns: DMatrix<f64>,
}

impl StackedDirections {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        if columns.ncols() == 0 || columns.nrows() == 0 {
            return Err(Error::Dimension(
                "stacked directions need at least one row and one column".into(),
            ));
        }
        for (t, col) in columns.column_iter().enumerate() {
            let norm = col.norm();
            if !(norm <= 1.0 + 1e-8) {
                return Err(Error::Contract(format!("column {t} has norm {norm} > 1")));
            }
        }
        Ok(Self { columns })
    }

    /// Stacks vectors as columns.
    pub fn from_columns(cols: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = cols.first() else {
            return Err(Error::Dimension("no columns to stack".into()));
        };
        let p = first.len();
        if cols.iter().any(|c| c.len() != p) {
            return Err(Error::Dimension("columns differ in length".into()));
        }
        Self::new(DMatrix::from_fn(p, cols.len(), |i, j| cols[j][i]))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn p(&self) -> usize {
        self.columns.nrows()
    }

    pub fn tasks(&self) -> usize {
        self.columns.ncols()
    }
}

/// Draws a Haar-distributed orthonormal `p × r` basis.
///
/// QR of a Gaussian matrix with the signs of `diag(R)` folded into `Q`.
pub fn random_orthonormal<R: Rng + ?Sized>(p: usize, r: usize, rng: &mut R) -> Result<Representation> {
    if r == 0 || r > p {
        return Err(Error::Dimension(format!(
            "random_orthonormal needs 1 <= r <= p, got p={p}, r={r}"
        )));
    }
    let mut gauss = DMatrix::<f64>::zeros(p, r);
    for j in 0..r {
        for i in 0..p {
            gauss[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let qr = gauss.qr();
    let mut q = qr.q();
    let rmat = qr.r();
    for j in 0..r {
        if rmat[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(Representation::from_orthonormal(q))
}

/// Result of [`truncated_svd`].
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub basis: Representation,
    /// All `min(p, T)` singular values, nonincreasing.
    pub singular_values: Vec<f64>,
}

/// Left singular vectors and singular values of a square matrix by one-sided
/// Jacobi rotations, in the order the columns end up (unsorted).
fn jacobi_svd_square(mut a: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let k = a.ncols();
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if alpha == 0.0 || beta == 0.0 || gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for row in 0..a.nrows() {
                    let x = a[(row, i)];
                    let y = a[(row, j)];
                    a[(row, i)] = c * x - s * y;
                    a[(row, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    for (j, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            a.column_mut(j).unscale_mut(s);
        }
    }
    (a, sigma)
}

const JACOBI_MAX_SWEEPS: usize = 60;
const JACOBI_TOL: f64 = 1e-15;

/// Top-`r` left singular vectors of a dense matrix, with the full singular spectrum.
///
/// The matrix is first reduced to a `min(p, T)` square triangle by Householder
/// QR, then diagonalized by one-sided Jacobi, which keeps small singular values
/// accurate to high relative precision.
pub fn truncated_svd(m: &DMatrix<f64>, r: usize) -> Result<TruncatedSvd> {
    let (p, t) = m.shape();
    if r == 0 || r > p.min(t) {
        return Err(Error::Dimension(format!("rank {r} not in 1..=min(p={p}, T={t})")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("matrix has non-finite entries".into()));
    }
    // m = Q R with p >= T, or mᵀ = Q R (so m = Rᵀ Qᵀ) with p < T.
    let (u, sv) = if p >= t {
        let qr = m.clone().qr();
        let (u_small, sv) = jacobi_svd_square(qr.r());
        (qr.q() * u_small, sv)
    } else {
        let qr = m.transpose().qr();
        jacobi_svd_square(qr.r().transpose())
    };

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
    let singular_values: Vec<f64> = order.iter().map(|&k| sv[k]).collect();

    if !(singular_values[r - 1] >= DEGENERATE_SIGMA) {
        let observed = singular_values.iter().filter(|&&s| s >= DEGENERATE_SIGMA).count();
        return Err(Error::DegenerateRank { requested: r, observed });
    }

    let mut basis = DMatrix::<f64>::zeros(p, r);
    for (j, &k) in order.iter().take(r).enumerate() {
        basis.set_column(j, &u.column(k));
        canonicalize_sign(basis.column_mut(j));
    }
    Ok(TruncatedSvd {
        basis: Representation::from_orthonormal(basis),
        singular_values,
    })
}

fn canonicalize_sign(mut col: nalgebra::DVectorViewMut<'_, f64>) {
    let mut best = 0usize;
    for i in 1..col.len() {
        if col[i].abs() > col[best].abs() {
            best = i;
        }
    }
    if col[best] < 0.0 {
        col.neg_mut();
    }
}

/// Top-`r` left singular subspace of the stacked per-task directions.
pub fn top_r_left_singular(m: &StackedDirections, r: usize) -> Result<Representation> {
    truncated_svd(m.matrix(), r).map(|s| s.basis)
}

fn check_conforming(e: &Representation, f: &Representation) -> Result<()> {
    if e.p() != f.p() || e.r() != f.r() {
        return Err(Error::Dimension(format!(
            "subspaces must share shape, got {}x{} and {}x{}",
            e.p(),
            e.r(),
            f.p(),
            f.r()
        )));
    }
    Ok(())
}

/// `‖sin Θ(E, F)‖_F`, in `[0, √r]`.
///
/// Evaluated as the residual `‖F − E EᵀF‖_F`, which equals
/// `sqrt(r − ‖EᵀF‖_F²)` for orthonormal inputs but does not lose half the
/// digits to cancellation when the spans nearly coincide.
pub fn sin_theta_dist(e: &Representation, f: &Representation) -> Result<f64> {
    check_conforming(e, f)?;
    let cross = e.basis().tr_mul(f.basis());
    let residual = f.basis() - e.basis() * cross;
    Ok(residual.norm().min((e.r() as f64).sqrt()))
}

/// Principal angles between the spans, in radians, nondecreasing.
///
/// Cosines are clamped to `[0, 1]` before `acos`.
pub fn principal_angles(e: &Representation, f: &Representation) -> Result<Vec<f64>> {
    check_conforming(e, f)?;
    let cross = e.basis().transpose() * f.basis();
    let (_, sv) = jacobi_svd_square(cross);
    let mut cosines: Vec<f64> = sv.into_iter().map(|s| s.clamp(0.0, 1.0)).collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    Ok(cosines.into_iter().map(f64::acos).collect())
}

/// Number of singular values strictly above `tau`.
pub fn rank_estimate(singular_values: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::Contract(format!("tau must be positive, got {tau}")));
    }
    if singular_values.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Contract("singular values must be nonnegative".into()));
    }
    if singular_values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Contract("singular values must be sorted nonincreasing".into()));
    }
    Ok(singular_values.iter().filter(|&&s| s > tau).count())
}
