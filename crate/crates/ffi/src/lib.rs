//! C interface to `tritree`.
//!
//! Datasets and trees are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a [`TtStatus`];
//! on failure, [`tt_last_error`] describes what went wrong on the calling
//! thread. Strings returned through out-parameters are released with
//! [`tt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tritree::biasdemo::{self, BiasScenario};
use tritree::tree::train_all;
use tritree::{ColumnKind, Dataset, Error, Schema, Strategy, TaskKind, TrainConfig, Tree};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Schema = 5,
    Validation = 6,
    Config = 7,
    TreeFormat = 8,
    BufferSize = 9,
    Panic = 10,
}

pub const TT_STRATEGY_MAJORITY: u32 = 0;
pub const TT_STRATEGY_MIA: u32 = 1;
pub const TT_STRATEGY_FC: u32 = 2;
pub const TT_STRATEGY_TRINARY: u32 = 3;
pub const TT_STRATEGY_TRINARY_MIA: u32 = 4;

pub const TT_TASK_REGRESSION: u32 = 0;
pub const TT_TASK_CLASSIFICATION: u32 = 1;

/// A loaded dataset.
pub struct TtDataset(Dataset);

/// A trained decision tree.
pub struct TtTree(Tree);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TtBiasScenario {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TtBiasResult {
    pub mean_a_hat: f64,
    pub se: f64,
    /// NaN for strategies without a routing rule.
    pub kappa_hat: f64,
    pub bound: f64,
    pub used_reps: usize,
    pub skipped_reps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(TtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => TtStatus::Io,
            Error::Csv(_) | Error::Parse { .. } => TtStatus::Parse,
            Error::Schema(_) => TtStatus::Schema,
            Error::Validation(_) => TtStatus::Validation,
            Error::Config(_) => TtStatus::Config,
            Error::TreeFormat(_) => TtStatus::TreeFormat,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TtStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            TtStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TtStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(TtStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn strategy_of(code: u32) -> Result<Strategy, Failure> {
    Strategy::ALL
        .get(code as usize)
        .copied()
        .ok_or_else(|| Failure(TtStatus::InvalidArgument, format!("unknown strategy code {code}")))
}

fn out_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(TtStatus::InvalidArgument, "string contains NUL".into()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tt_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a CSV file. `categorical` is a comma-separated list of column
/// names, or NULL.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_load_csv(
    path: *const c_char,
    target: *const c_char,
    task: u32,
    categorical: *const c_char,
    out: *mut *mut TtDataset,
) -> TtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let target = str_arg(target, "target")?;
        let task = match task {
            TT_TASK_REGRESSION => TaskKind::Regression,
            TT_TASK_CLASSIFICATION => TaskKind::Classification,
            other => return Err(Failure(TtStatus::InvalidArgument, format!("unknown task code {other}"))),
        };
        let mut schema = Schema::new(target, task);
        if !categorical.is_null() {
            for name in str_arg(categorical, "categorical")?.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                schema = schema.with_kind(name, ColumnKind::Categorical);
            }
        }
        let ds = tritree::load_csv(path, &schema)?;
        *out = Box::into_raw(Box::new(TtDataset(ds)));
        Ok(())
    })
}

/// Loads a CSV file typed by a TOML schema file.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_load_with_schema(
    path: *const c_char,
    schema_path: *const c_char,
    out: *mut *mut TtDataset,
) -> TtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let schema = Schema::from_toml_file(str_arg(schema_path, "schema_path")?)?;
        let ds = tritree::load_csv(str_arg(path, "path")?, &schema)?;
        *out = Box::into_raw(Box::new(TtDataset(ds)));
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_n_rows(ds: *const TtDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_rows())
}

/// # Safety
/// `ds` must be a live dataset handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_n_features(ds: *const TtDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_features())
}

/// Copy of `ds` with feature cells censored completely at random
/// (`informative == 0`) or largest-first (`informative != 0`).
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_censor(
    ds: *const TtDataset,
    q: f64,
    informative: i32,
    seed: u64,
    out: *mut *mut TtDataset,
) -> TtStatus {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let censored = if informative != 0 {
            tritree::censor_im(&ds.0, q)?
        } else {
            tritree::censor_mcar(&ds.0, q, seed)?
        };
        *out = Box::into_raw(Box::new(TtDataset(censored)));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tt_dataset_free(ds: *mut TtDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains on every row of `ds`.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_train(
    ds: *const TtDataset,
    strategy: u32,
    max_depth: usize,
    min_samples: usize,
    out: *mut *mut TtTree,
) -> TtStatus {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = TrainConfig::new(strategy_of(strategy)?, max_depth, min_samples);
        *out = Box::into_raw(Box::new(TtTree(train_all(&ds.0, &cfg)?)));
        Ok(())
    })
}

/// Number of classes, or 0 for a regression tree.
///
/// # Safety
/// `tree` must be a live tree handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_n_classes(tree: *const TtTree) -> usize {
    tree.as_ref().map_or(0, |t| t.0.classes.len())
}

/// Writes one point prediction per row into `out`: the mean for regression,
/// the class index for classification. `len` must equal the row count.
///
/// # Safety
/// Handles must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_predict(tree: *const TtTree, ds: *const TtDataset, out: *mut f64, len: usize) -> TtStatus {
    guard(|| {
        let (tree, ds) = (ref_arg(tree, "tree")?, ref_arg(ds, "ds")?);
        if out.is_null() {
            return Err(null("out"));
        }
        if len != ds.0.n_rows() {
            return Err(Failure(TtStatus::BufferSize, format!("buffer holds {len}, need {}", ds.0.n_rows())));
        }
        let preds = tree.0.predict(&ds.0)?;
        let out = std::slice::from_raw_parts_mut(out, len);
        for (slot, p) in out.iter_mut().zip(&preds) {
            *slot = p.point();
        }
        Ok(())
    })
}

/// Writes row-major class probabilities; `len` must equal rows × classes.
///
/// # Safety
/// Handles must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_predict_proba(
    tree: *const TtTree,
    ds: *const TtDataset,
    out: *mut f64,
    len: usize,
) -> TtStatus {
    guard(|| {
        let (tree, ds) = (ref_arg(tree, "tree")?, ref_arg(ds, "ds")?);
        if out.is_null() {
            return Err(null("out"));
        }
        let k = tree.0.classes.len();
        if k == 0 {
            return Err(Failure(TtStatus::InvalidArgument, "regression trees have no probabilities".into()));
        }
        if len != ds.0.n_rows() * k {
            return Err(Failure(TtStatus::BufferSize, format!("buffer holds {len}, need {}", ds.0.n_rows() * k)));
        }
        let preds = tree.0.predict(&ds.0)?;
        let out = std::slice::from_raw_parts_mut(out, len);
        for (chunk, p) in out.chunks_mut(k).zip(&preds) {
            chunk.copy_from_slice(p.probs().expect("classification leaf"));
        }
        Ok(())
    })
}

/// Total loss of the tree on `ds`: squared error or cross-entropy.
///
/// # Safety
/// Handles must be live; `loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_evaluate(tree: *const TtTree, ds: *const TtDataset, loss: *mut f64) -> TtStatus {
    guard(|| {
        let (tree, ds) = (ref_arg(tree, "tree")?, ref_arg(ds, "ds")?);
        if loss.is_null() {
            return Err(null("loss"));
        }
        *loss = tree.0.evaluate(&ds.0)?.loss;
        Ok(())
    })
}

/// Serializes the tree to a JSON document.
///
/// # Safety
/// `tree` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_to_json(tree: *const TtTree, out: *mut *mut c_char) -> TtStatus {
    guard(|| {
        let tree = ref_arg(tree, "tree")?;
        if out.is_null() {
            return Err(null("out"));
        }
        out_string(tree.0.to_json(), out)
    })
}

/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_from_json(json: *const c_char, out: *mut *mut TtTree) -> TtStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(TtTree(Tree::from_json(json)?)));
        Ok(())
    })
}

/// Human-readable rendering of the tree.
///
/// # Safety
/// `tree` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_render(tree: *const TtTree, out: *mut *mut c_char) -> TtStatus {
    guard(|| {
        let tree = ref_arg(tree, "tree")?;
        if out.is_null() {
            return Err(null("out"));
        }
        out_string(tree.0.render(), out)
    })
}

/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tt_tree_free(tree: *mut TtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `s` must be a string returned by this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn tt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Monte-Carlo estimate of the left-leaf bias for one strategy (not
/// TrinaryMIA).
///
/// # Safety
/// `scenario` must be readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tt_bias_simulate(
    scenario: *const TtBiasScenario,
    strategy: u32,
    out: *mut TtBiasResult,
) -> TtStatus {
    guard(|| {
        let sc = ref_arg(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sc = BiasScenario {
            a: sc.a,
            b: sc.b,
            p: sc.p,
            q: sc.q,
            sigma: sc.sigma,
            n: sc.n,
            reps: sc.reps,
            seed: sc.seed,
        };
        let r = biasdemo::simulate(&sc, strategy_of(strategy)?)?;
        *out = TtBiasResult {
            mean_a_hat: r.mean_a_hat,
            se: r.se,
            kappa_hat: r.kappa_hat.unwrap_or(f64::NAN),
            bound: r.bound,
            used_reps: r.used_reps,
            skipped_reps: r.skipped_reps,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_are_stable() {
        assert_eq!(TtStatus::Ok as i32, 0);
        assert_eq!(TtStatus::Panic as i32, 10);
        assert_eq!(strategy_of(TT_STRATEGY_TRINARY_MIA).ok(), Some(Strategy::TrinaryMia));
        assert_eq!(strategy_of(TT_STRATEGY_FC).ok(), Some(Strategy::FractionalCase));
        assert!(strategy_of(5).is_err());
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), TtStatus::Panic);
        let msg = unsafe { CStr::from_ptr(tt_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
        assert_eq!(guard(|| Ok(())), TtStatus::Ok);
        assert_eq!(unsafe { CStr::from_ptr(tt_last_error()) }.to_bytes(), b"");
    }

    #[test]
    fn null_out_pointers_rejected() {
        let status = unsafe { tt_tree_from_json(c"{}".as_ptr(), std::ptr::null_mut()) };
        assert_eq!(status, TtStatus::NullPointer);
    }
}
