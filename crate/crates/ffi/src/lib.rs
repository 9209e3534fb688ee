//! C ABI for xferlab.
//!
//! Objects are exposed as opaque handles created by `xl_*_new`/`xl_*_sample`
//! functions and released with the matching `xl_*_free`. Every fallible call
//! returns an [`XlStatus`]; on failure a message for the calling thread is
//! available from [`xl_last_error_message`].
//!
//! Matrices cross the boundary as flat `double` buffers. Representations and
//! bases are column-major `p × r`; dataset inputs are row-major `n × p`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use xferlab::datagen::{
    make_ensemble, sample_dataset, task_diversity, EnsembleSpec, LabeledDataset, NoiseKind, NoiseSpec, SnrProfile,
    SparsitySpec, TaskEnsemble,
};
use xferlab::metrics::evaluate;
use xferlab::pipeline::{algorithm1, algorithm2, TransferOutput};
use xferlab::subspace::{sin_theta_dist, Representation};
use xferlab::train::{fit, EstimatorConfig, EstimatorKind};
use xferlab::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Dimension = 4,
    DegenerateRank = 5,
    Contract = 6,
    Config = 7,
    Diversity = 8,
    Index = 9,
    AllSuppressed = 10,
    DegenerateClassifier = 11,
    Unsupported = 12,
    NotApplicable = 13,
    Domain = 14,
    Io = 15,
    Panic = 16,
}

impl From<&Error> for XlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Dimension(_) => XlStatus::Dimension,
            Error::DegenerateRank { .. } => XlStatus::DegenerateRank,
            Error::Contract(_) => XlStatus::Contract,
            Error::Config(_) => XlStatus::Config,
            Error::Diversity { .. } => XlStatus::Diversity,
            Error::Index { .. } => XlStatus::Index,
            Error::AllSuppressed { .. } => XlStatus::AllSuppressed,
            Error::DegenerateClassifier => XlStatus::DegenerateClassifier,
            Error::Unsupported(_) => XlStatus::Unsupported,
            Error::NotApplicable(_) => XlStatus::NotApplicable,
            Error::Domain(_) => XlStatus::Domain,
            Error::Io(_) => XlStatus::Io,
        }
    }
}

/// Values for [`XlEnsembleSpec::snr_kind`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XlSnrKind {
    Uniform = 0,
    TwoGroup = 1,
}

/// Values for [`XlEnsembleSpec::noise_kind`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XlNoiseKind {
    Gaussian = 0,
    BoundedUniform = 1,
}

/// Values for [`XlEstimator::kind`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XlEstimatorKind {
    Standard = 0,
    AdvL2 = 1,
    AdvLinf = 2,
}

/// Generative-model parameters. `support_size == 0` means a dense basis.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct XlEnsembleSpec {
    pub p: usize,
    pub r: usize,
    pub tasks: usize,
    /// An [`XlSnrKind`] value.
    pub snr_kind: u32,
    pub base_norm: f64,
    pub alpha: f64,
    pub frac_strong: f64,
    pub support_size: usize,
    /// An [`XlNoiseKind`] value.
    pub noise_kind: u32,
    pub rho: f64,
    pub target_norm: f64,
}

/// An estimator choice. `epsilon` must be 0 for the standard estimator.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct XlEstimator {
    /// An [`XlEstimatorKind`] value.
    pub kind: u32,
    pub epsilon: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct XlEvalReport {
    pub sin_theta: f64,
    pub excess_risk: f64,
    pub target_accuracy: f64,
    pub suppressed_count: usize,
}

/// A sampled task ensemble (basis, task vectors, noise model).
pub struct XlEnsemble(TaskEnsemble);

/// A labeled dataset with labels in {-1, +1}.
pub struct XlDataset(LabeledDataset);

/// Output of the transfer pipeline.
pub struct XlTransfer(TransferOutput);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_last_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut buf = e.borrow_mut();
        buf.clear();
        buf.extend(msg.bytes().filter(|&b| b != 0));
    });
}

struct Fail(XlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(XlStatus::from(&e), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> XlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            XlStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            XlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(XlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(XlStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn input_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` into the caller's buffer of capacity `len`.
unsafe fn write_out(src: &[f64], buf: *mut f64, len: usize) -> FfiResult {
    if len < src.len() {
        return Err(Fail(
            XlStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn estimator_config(e: &XlEstimator) -> Result<EstimatorConfig, Fail> {
    let kind = match e.kind {
        k if k == XlEstimatorKind::Standard as u32 => EstimatorKind::Standard,
        k if k == XlEstimatorKind::AdvL2 as u32 => EstimatorKind::AdvL2,
        k if k == XlEstimatorKind::AdvLinf as u32 => EstimatorKind::AdvLinf,
        k => return Err(invalid(format!("unknown estimator kind {k}"))),
    };
    Ok(EstimatorConfig::new(kind, e.epsilon)?)
}

fn ensemble_spec(s: &XlEnsembleSpec) -> Result<EnsembleSpec, Fail> {
    let snr = match s.snr_kind {
        k if k == XlSnrKind::Uniform as u32 => SnrProfile::uniform(s.base_norm),
        k if k == XlSnrKind::TwoGroup as u32 => SnrProfile::two_group(s.base_norm, s.alpha, s.frac_strong),
        k => return Err(invalid(format!("unknown snr kind {k}"))),
    };
    let noise_kind = match s.noise_kind {
        k if k == XlNoiseKind::Gaussian as u32 => NoiseKind::Gaussian,
        k if k == XlNoiseKind::BoundedUniform as u32 => NoiseKind::BoundedUniform,
        k => return Err(invalid(format!("unknown noise kind {k}"))),
    };
    Ok(EnsembleSpec {
        p: s.p,
        r: s.r,
        tasks: s.tasks,
        snr,
        sparsity: if s.support_size == 0 {
            SparsitySpec::dense()
        } else {
            SparsitySpec::row_sparse(s.support_size)
        },
        noise: NoiseSpec {
            kind: noise_kind,
            rho: s.rho,
        },
        target_norm: s.target_norm,
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xl_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to fit) and returns the full message length including the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn xl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Draws a task ensemble from `spec` with the given seed.
///
/// # Safety
/// `spec` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_new(
    spec: *const XlEnsembleSpec,
    seed: u64,
    out: *mut *mut XlEnsemble,
) -> XlStatus {
    guard(|| {
        let spec = deref(spec, "spec")?;
        let out = out_ref(out, "out")?;
        let ens = make_ensemble(&ensemble_spec(spec)?, &mut ChaCha8Rng::seed_from_u64(seed))?;
        *out = Box::into_raw(Box::new(XlEnsemble(ens)));
        Ok(())
    })
}

/// # Safety
/// `ens` must be null or a handle from [`xl_ensemble_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_free(ens: *mut XlEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// # Safety
/// `ens` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_dims(
    ens: *const XlEnsemble,
    p: *mut usize,
    r: *mut usize,
    tasks: *mut usize,
) -> XlStatus {
    guard(|| {
        let e = &deref(ens, "ensemble")?.0;
        for (dst, v) in [(p, e.p()), (r, e.r()), (tasks, e.tasks())] {
            if let Some(d) = dst.as_mut() {
                *d = v;
            }
        }
        Ok(())
    })
}

/// Writes the true basis `B` (column-major `p × r`).
///
/// # Safety
/// `ens` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_basis(ens: *const XlEnsemble, buf: *mut f64, len: usize) -> XlStatus {
    guard(|| write_out(deref(ens, "ensemble")?.0.basis().basis().as_slice(), buf, len))
}

/// Writes the class mean `μ_t` of task `t` (1-based; `T + 1` is the target).
///
/// # Safety
/// `ens` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_mean(ens: *const XlEnsemble, t: usize, buf: *mut f64, len: usize) -> XlStatus {
    guard(|| write_out(deref(ens, "ensemble")?.0.mean(t)?.as_slice(), buf, len))
}

/// # Safety
/// `ens` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn xl_ensemble_diversity(ens: *const XlEnsemble, out: *mut f64) -> XlStatus {
    guard(|| {
        let d = task_diversity(&deref(ens, "ensemble")?.0)?;
        *out_ref(out, "out")? = d;
        Ok(())
    })
}

/// Draws `n` labeled points from task `t` of the ensemble.
///
/// # Safety
/// `ens` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xl_dataset_sample(
    ens: *const XlEnsemble,
    t: usize,
    n: usize,
    seed: u64,
    out: *mut *mut XlDataset,
) -> XlStatus {
    guard(|| {
        let e = &deref(ens, "ensemble")?.0;
        let out = out_ref(out, "out")?;
        let ds = sample_dataset(e, t, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
        *out = Box::into_raw(Box::new(XlDataset(ds)));
        Ok(())
    })
}

/// Builds a dataset from caller data: `inputs` row-major `n × p`, `labels` of ±1.
///
/// # Safety
/// `inputs` must be valid for `n * p` doubles, `labels` for `n` bytes, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xl_dataset_new(
    inputs: *const f64,
    labels: *const i8,
    n: usize,
    p: usize,
    out: *mut *mut XlDataset,
) -> XlStatus {
    guard(|| {
        let count = n.checked_mul(p).ok_or_else(|| invalid("n * p overflows"))?;
        let x = input_slice(inputs, count, "inputs")?;
        let y = input_slice(labels, n, "labels")?;
        let out = out_ref(out, "out")?;
        let ds = LabeledDataset::new(DMatrix::from_row_slice(n, p, x), y.to_vec())?;
        *out = Box::into_raw(Box::new(XlDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a dataset handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xl_dataset_free(ds: *mut XlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn xl_dataset_shape(ds: *const XlDataset, n: *mut usize, p: *mut usize) -> XlStatus {
    guard(|| {
        let d = &deref(ds, "dataset")?.0;
        if let Some(n) = n.as_mut() {
            *n = d.len();
        }
        if let Some(p) = p.as_mut() {
            *p = d.p();
        }
        Ok(())
    })
}

/// Copies inputs (row-major `n × p`) and labels out of a dataset.
///
/// # Safety
/// `inputs` must be valid for `inputs_len` doubles and `labels` for `labels_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn xl_dataset_copy(
    ds: *const XlDataset,
    inputs: *mut f64,
    inputs_len: usize,
    labels: *mut i8,
    labels_len: usize,
) -> XlStatus {
    guard(|| {
        let d = &deref(ds, "dataset")?.0;
        let row_major: Vec<f64> = d.inputs().transpose().as_slice().to_vec();
        write_out(&row_major, inputs, inputs_len)?;
        if labels_len < d.len() {
            return Err(Fail(
                XlStatus::BufferTooSmall,
                format!("label buffer holds {labels_len}, need {}", d.len()),
            ));
        }
        if labels.is_null() {
            return Err(null("labels"));
        }
        ptr::copy_nonoverlapping(d.labels().as_ptr(), labels, d.len());
        Ok(())
    })
}

/// `‖sin Θ(E, F)‖_F` for two column-major `p × r` orthonormal matrices.
///
/// # Safety
/// `e` and `f` must be valid for `p * r` doubles and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn xl_sin_theta_dist(
    e: *const f64,
    f: *const f64,
    p: usize,
    r: usize,
    out: *mut f64,
) -> XlStatus {
    guard(|| {
        let count = p.checked_mul(r).ok_or_else(|| invalid("p * r overflows"))?;
        let e = Representation::new(DMatrix::from_column_slice(p, r, input_slice(e, count, "e")?))?;
        let f = Representation::new(DMatrix::from_column_slice(p, r, input_slice(f, count, "f")?))?;
        *out_ref(out, "out")? = sin_theta_dist(&e, &f)?;
        Ok(())
    })
}

/// Fits one task: writes `β` (length `p`), the achieved objective and whether
/// the fit was suppressed to zero. `objective` and `suppressed` may be null.
///
/// # Safety
/// `ds` and `est` must be valid, `beta` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_fit(
    ds: *const XlDataset,
    est: *const XlEstimator,
    beta: *mut f64,
    len: usize,
    objective: *mut f64,
    suppressed: *mut bool,
) -> XlStatus {
    guard(|| {
        let d = &deref(ds, "dataset")?.0;
        let cfg = estimator_config(deref(est, "estimator")?)?;
        let res = fit(d, &cfg)?;
        write_out(res.beta.as_slice(), beta, len)?;
        if let Some(o) = objective.as_mut() {
            *o = res.objective;
        }
        if let Some(s) = suppressed.as_mut() {
            *s = res.suppressed;
        }
        Ok(())
    })
}

/// Learns a rank-`r` representation from the source datasets and a head on
/// the target dataset.
///
/// # Safety
/// `sources` must hold `n_sources` live dataset handles; `target`, `est` and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer(
    sources: *const *const XlDataset,
    n_sources: usize,
    target: *const XlDataset,
    r: usize,
    est: *const XlEstimator,
    out: *mut *mut XlTransfer,
) -> XlStatus {
    guard(|| {
        let handles = input_slice(sources, n_sources, "sources")?;
        let srcs = handles
            .iter()
            .map(|&h| deref(h, "source dataset").map(|d| d.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let target = &deref(target, "target")?.0;
        let cfg = estimator_config(deref(est, "estimator")?)?;
        let out = out_ref(out, "out")?;
        let res = if cfg.kind() == EstimatorKind::Standard {
            algorithm1(&srcs, target, r)?
        } else {
            algorithm2(&srcs, target, r, &cfg)?
        };
        *out = Box::into_raw(Box::new(XlTransfer(res)));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a transfer handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer_free(t: *mut XlTransfer) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Writes `Ŵ₁` (column-major `p × r`).
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer_w1(t: *const XlTransfer, buf: *mut f64, len: usize) -> XlStatus {
    guard(|| write_out(deref(t, "transfer")?.0.w1.basis().as_slice(), buf, len))
}

/// Writes the target head `ŵ₂` (length `r`).
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer_w2(t: *const XlTransfer, buf: *mut f64, len: usize) -> XlStatus {
    guard(|| write_out(deref(t, "transfer")?.0.w2.as_slice(), buf, len))
}

/// Writes the composed predictor `Ŵ₁ŵ₂` (length `p`).
///
/// # Safety
/// `t` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer_predictor(t: *const XlTransfer, buf: *mut f64, len: usize) -> XlStatus {
    guard(|| {
        let v: DVector<f64> = deref(t, "transfer")?.0.predictor();
        write_out(v.as_slice(), buf, len)
    })
}

/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn xl_transfer_suppressed_count(t: *const XlTransfer, out: *mut usize) -> XlStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(t, "transfer")?.0.suppressed_count();
        Ok(())
    })
}

/// Scores a transfer output against the ensemble it was trained on.
/// `mc_samples` and `seed` are used only for non-Gaussian noise.
///
/// # Safety
/// `t`, `ens` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn xl_evaluate(
    t: *const XlTransfer,
    ens: *const XlEnsemble,
    mc_samples: usize,
    seed: u64,
    out: *mut XlEvalReport,
) -> XlStatus {
    guard(|| {
        let t = &deref(t, "transfer")?.0;
        let e = &deref(ens, "ensemble")?.0;
        let rep = evaluate(t, e, mc_samples, &mut ChaCha8Rng::seed_from_u64(seed))?;
        *out_ref(out, "out")? = XlEvalReport {
            sin_theta: rep.sin_theta,
            excess_risk: rep.excess_risk,
            target_accuracy: rep.target_accuracy,
            suppressed_count: rep.suppressed_count,
        };
        Ok(())
    })
}

/// Name of a status code as a static string; null for unknown codes.
#[no_mangle]
pub extern "C" fn xl_status_name(status: i32) -> *const c_char {
    const ALL: [XlStatus; 17] = [
        XlStatus::Ok,
        XlStatus::NullPointer,
        XlStatus::InvalidArgument,
        XlStatus::BufferTooSmall,
        XlStatus::Dimension,
        XlStatus::DegenerateRank,
        XlStatus::Contract,
        XlStatus::Config,
        XlStatus::Diversity,
        XlStatus::Index,
        XlStatus::AllSuppressed,
        XlStatus::DegenerateClassifier,
        XlStatus::Unsupported,
        XlStatus::NotApplicable,
        XlStatus::Domain,
        XlStatus::Io,
        XlStatus::Panic,
    ];
    let Some(&status) = ALL.iter().find(|s| **s as i32 == status) else {
        return ptr::null();
    };
    let s: &'static CStr = match status {
        XlStatus::Ok => c"ok",
        XlStatus::NullPointer => c"null_pointer",
        XlStatus::InvalidArgument => c"invalid_argument",
        XlStatus::BufferTooSmall => c"buffer_too_small",
        XlStatus::Dimension => c"dimension",
        XlStatus::DegenerateRank => c"degenerate_rank",
        XlStatus::Contract => c"contract",
        XlStatus::Config => c"config",
        XlStatus::Diversity => c"diversity",
        XlStatus::Index => c"index",
        XlStatus::AllSuppressed => c"all_suppressed",
        XlStatus::DegenerateClassifier => c"degenerate_classifier",
        XlStatus::Unsupported => c"unsupported",
        XlStatus::NotApplicable => c"not_applicable",
        XlStatus::Domain => c"domain",
        XlStatus::Io => c"io",
        XlStatus::Panic => c"panic",
    };
    s.as_ptr()
}
