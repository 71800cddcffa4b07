//! C ABI for the anacp engine.
//!
//! Every function returns an [`AnacpStatus`]; on failure a message is kept
//! per thread and can be read with [`anacp_last_error`]. Handles are opaque
//! and must be released with their matching `_free` function. Panics never
//! cross the boundary; they are reported as `ANACP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use anacp::feature_store::{self, FeatureDataset};
use anacp::pipeline::{self, ClassifierKind, Learner, LearnerConfig, Method, PredictMode};
use anacp::{checkpoint, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnacpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    DimensionMismatch = 5,
    Numerical = 6,
    NotFitted = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnacpMethod {
    Anacp = 0,
    RawNcm = 1,
    IncrementalRidge = 2,
    RpRidge = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnacpClassifier {
    Ncm = 0,
    Elm = 1,
}

/// Learner settings. Fill with [`anacp_config_default`] and override.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct AnacpConfig {
    pub method: AnacpMethod,
    pub classifier: AnacpClassifier,
    pub rp_dim: usize,
    pub heads: usize,
    pub replay: usize,
    pub lambda_cp: f64,
    pub lambda_cls: f64,
    pub alpha: f64,
    pub eps_scale: f64,
    pub base_seed: u64,
    pub use_repulsion: bool,
    pub normalize_inputs: bool,
}

impl From<&LearnerConfig> for AnacpConfig {
    fn from(c: &LearnerConfig) -> Self {
        Self {
            method: match c.method {
                Method::Anacp => AnacpMethod::Anacp,
                Method::RawNcm => AnacpMethod::RawNcm,
                Method::IncrementalRidge => AnacpMethod::IncrementalRidge,
                Method::RpRidge => AnacpMethod::RpRidge,
            },
            classifier: match c.classifier {
                ClassifierKind::Ncm => AnacpClassifier::Ncm,
                ClassifierKind::Elm => AnacpClassifier::Elm,
            },
            rp_dim: c.rp_dim,
            heads: c.heads,
            replay: c.replay,
            lambda_cp: c.lambda_cp,
            lambda_cls: c.lambda_cls,
            alpha: c.alpha,
            eps_scale: c.eps_scale,
            base_seed: c.base_seed,
            use_repulsion: c.use_repulsion,
            normalize_inputs: c.normalize_inputs,
        }
    }
}

impl From<&AnacpConfig> for LearnerConfig {
    fn from(c: &AnacpConfig) -> Self {
        Self {
            method: match c.method {
                AnacpMethod::Anacp => Method::Anacp,
                AnacpMethod::RawNcm => Method::RawNcm,
                AnacpMethod::IncrementalRidge => Method::IncrementalRidge,
                AnacpMethod::RpRidge => Method::RpRidge,
            },
            classifier: match c.classifier {
                AnacpClassifier::Ncm => ClassifierKind::Ncm,
                AnacpClassifier::Elm => ClassifierKind::Elm,
            },
            rp_dim: c.rp_dim,
            heads: c.heads,
            replay: c.replay,
            lambda_cp: c.lambda_cp,
            lambda_cls: c.lambda_cls,
            alpha: c.alpha,
            eps_scale: c.eps_scale,
            base_seed: c.base_seed,
            use_repulsion: c.use_repulsion,
            normalize_inputs: c.normalize_inputs,
            ..LearnerConfig::default()
        }
    }
}

/// Labelled feature matrix.
pub struct AnacpDataset {
    inner: FeatureDataset,
}

/// Incremental learner.
pub struct AnacpLearner {
    inner: Learner,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> AnacpStatus {
    match err {
        Error::Io { .. } => AnacpStatus::Io,
        Error::BadMagic
        | Error::UnsupportedVersion(_)
        | Error::TruncatedFile { .. }
        | Error::TrailingBytes(_)
        | Error::Checkpoint(_)
        | Error::Manifest(_)
        | Error::Json { .. } => AnacpStatus::Format,
        Error::DimensionMismatch { .. } => AnacpStatus::DimensionMismatch,
        Error::EigDecompositionFailure | Error::SingularSystem | Error::ZeroVector(_) | Error::NonOrthonormalBasis(_) => {
            AnacpStatus::Numerical
        }
        Error::NotFitted => AnacpStatus::NotFitted,
        _ => AnacpStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (AnacpStatus, String)>) -> AnacpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AnacpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            AnacpStatus::Panic
        }
    }
}

fn lift(err: Error) -> (AnacpStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (AnacpStatus, String) {
    (AnacpStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> (AnacpStatus, String) {
    (AnacpStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (AnacpStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, (AnacpStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, (AnacpStatus, String)> {
    p.as_mut().ok_or_else(|| null(name))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn anacp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Writes the default configuration to `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_config_default(out: *mut AnacpConfig) -> AnacpStatus {
    guard(|| {
        *out_arg(out, "out")? = AnacpConfig::from(&LearnerConfig::default());
        Ok(())
    })
}

/// Loads a single `.feat` file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_load(path: *const c_char, out: *mut *mut AnacpDataset) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = feature_store::load_feature_file(str_arg(path, "path")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(AnacpDataset { inner }));
        Ok(())
    })
}

/// Loads split `split` (`"train"` or `"test"`) of a feature directory,
/// verifying the manifest checksum.
///
/// # Safety
/// `dir` and `split` must be nul-terminated strings; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_load_split(
    dir: *const c_char,
    split: *const c_char,
    out: *mut *mut AnacpDataset,
) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let dir = str_arg(dir, "dir")?;
        let manifest = feature_store::read_manifest(dir).map_err(lift)?;
        let inner = feature_store::load_split(dir, &manifest, str_arg(split, "split")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(AnacpDataset { inner }));
        Ok(())
    })
}

/// Copies `rows × dim` row-major features and `rows` labels into a new
/// dataset. Labels must be below `num_classes`.
///
/// # Safety
/// `features` must point to `rows * dim` floats, `labels` to `rows`
/// integers; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_from_raw(
    features: *const f32,
    labels: *const u32,
    rows: usize,
    dim: usize,
    num_classes: u32,
    out: *mut *mut AnacpDataset,
) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let len = rows.checked_mul(dim).ok_or_else(|| invalid("rows * dim overflows"))?;
        if rows > 0 && (features.is_null() || labels.is_null()) {
            return Err(null("features or labels"));
        }
        let (x, y) = if rows == 0 {
            (Vec::new(), Vec::new())
        } else {
            (
                std::slice::from_raw_parts(features, len).to_vec(),
                std::slice::from_raw_parts(labels, rows).to_vec(),
            )
        };
        let inner = FeatureDataset::new(x, y, dim, num_classes).map_err(lift)?;
        *out = Box::into_raw(Box::new(AnacpDataset { inner }));
        Ok(())
    })
}

/// Writes sample count, dimension and class count; any output may be null.
///
/// # Safety
/// `dataset` must come from an `anacp_dataset_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_shape(
    dataset: *const AnacpDataset,
    rows: *mut usize,
    dim: *mut usize,
    num_classes: *mut u32,
) -> AnacpStatus {
    guard(|| {
        let ds = &ref_arg(dataset, "dataset")?.inner;
        if let Some(r) = rows.as_mut() {
            *r = ds.len();
        }
        if let Some(d) = dim.as_mut() {
            *d = ds.dim();
        }
        if let Some(c) = num_classes.as_mut() {
            *c = ds.num_classes();
        }
        Ok(())
    })
}

/// Rows of `dataset` whose label is one of `classes`.
///
/// # Safety
/// `classes` must point to `count` integers; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_select_classes(
    dataset: *const AnacpDataset,
    classes: *const u32,
    count: usize,
    out: *mut *mut AnacpDataset,
) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let ds = &ref_arg(dataset, "dataset")?.inner;
        if classes.is_null() && count > 0 {
            return Err(null("classes"));
        }
        let wanted = if count == 0 { &[][..] } else { std::slice::from_raw_parts(classes, count) };
        *out = Box::into_raw(Box::new(AnacpDataset {
            inner: ds.select_classes(wanted),
        }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn anacp_dataset_free(dataset: *mut AnacpDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `config` must point to a valid configuration; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_new(
    config: *const AnacpConfig,
    dim: usize,
    out: *mut *mut AnacpLearner,
) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let config = LearnerConfig::from(ref_arg(config, "config")?);
        let inner = Learner::new(config, dim).map_err(lift)?;
        *out = Box::into_raw(Box::new(AnacpLearner { inner }));
        Ok(())
    })
}

/// Learns one task made of every class present in `train`. On failure the
/// learner is unchanged.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_learn_task(learner: *mut AnacpLearner, train: *const AnacpDataset) -> AnacpStatus {
    guard(|| {
        let learner = &mut out_arg(learner, "learner")?.inner;
        let train = &ref_arg(train, "train")?.inner;
        learner.learn_task(train).map_err(lift)
    })
}

/// Number of tasks learned so far.
///
/// # Safety
/// `learner` must be live; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_num_tasks(learner: *const AnacpLearner, out: *mut usize) -> AnacpStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(learner, "learner")?.inner.tasks().len();
        Ok(())
    })
}

/// Predicts a class for every row of `data`. `task < 0` predicts among all
/// seen classes; otherwise among the classes of that task.
///
/// # Safety
/// Handles must be live; `out_labels` must hold `capacity` integers, at
/// least the number of rows of `data`.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_predict(
    learner: *const AnacpLearner,
    data: *const AnacpDataset,
    task: i64,
    out_labels: *mut u32,
    capacity: usize,
) -> AnacpStatus {
    guard(|| {
        let learner = &ref_arg(learner, "learner")?.inner;
        let data = &ref_arg(data, "data")?.inner;
        if capacity < data.len() {
            return Err(invalid(format!("output holds {capacity} labels, need {}", data.len())));
        }
        if data.is_empty() {
            return Ok(());
        }
        if out_labels.is_null() {
            return Err(null("out_labels"));
        }
        let mode = if task < 0 {
            PredictMode::Cil
        } else {
            PredictMode::Til(task as usize)
        };
        let pred = learner.predict(&data.to_matrix(), mode).map_err(lift)?;
        std::slice::from_raw_parts_mut(out_labels, pred.len()).copy_from_slice(&pred);
        Ok(())
    })
}

/// # Safety
/// `learner` must be live; `path` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_save(learner: *const AnacpLearner, path: *const c_char) -> AnacpStatus {
    guard(|| {
        let learner = &ref_arg(learner, "learner")?.inner;
        checkpoint::save(learner, str_arg(path, "path")?).map_err(lift)
    })
}

/// # Safety
/// `path` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_load(path: *const c_char, out: *mut *mut AnacpLearner) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = checkpoint::load(str_arg(path, "path")?).map_err(lift)?;
        *out = Box::into_raw(Box::new(AnacpLearner { inner }));
        Ok(())
    })
}

/// # Safety
/// `learner` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn anacp_learner_free(learner: *mut AnacpLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

/// Relative error reduction of `improved` over `baseline`, both in percent.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_rel_error_reduction(baseline: f64, improved: f64, out: *mut f64) -> AnacpStatus {
    guard(|| {
        *out_arg(out, "out")? = pipeline::rel_error_reduction(baseline, improved).map_err(lift)?;
        Ok(())
    })
}

/// Splits the classes of `train`/`test` into `num_tasks` tasks (shuffled
/// with `stream_seed`), runs the learner over them and returns the report
/// as a JSON string to be released with [`anacp_string_free`].
///
/// # Safety
/// Handles must be live; `out_json` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn anacp_run_stream(
    config: *const AnacpConfig,
    train: *const AnacpDataset,
    test: *const AnacpDataset,
    num_tasks: usize,
    stream_seed: u64,
    out_json: *mut *mut c_char,
) -> AnacpStatus {
    guard(|| {
        let out = out_arg(out_json, "out_json")?;
        let config = LearnerConfig::from(ref_arg(config, "config")?);
        let train = &ref_arg(train, "train")?.inner;
        let test = &ref_arg(test, "test")?.inner;
        let stream = feature_store::make_task_stream(train, test, num_tasks, stream_seed).map_err(lift)?;
        let report = pipeline::run_stream(&config, &stream).map_err(lift)?;
        *out = CString::new(report.to_json()).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn anacp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
