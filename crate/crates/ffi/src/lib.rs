//! C ABI over the natner toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`NatnerStatus`]; on failure a description is available from
//! [`natner_last_error`] on the same thread. Strings returned through out
//! parameters are owned by the caller and released with
//! [`natner_string_free`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use natner::corpus::{parse_conll, write_conll, Corpus};
use natner::eval::entity_prf;
use natner::labeler::{load_model, save_model, tag_corpus, CrfModel};
use natner::noise::{
    analyze_errors, inject_noise, load_error_table, make_artificial, save_error_table, ErrorTable,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NatnerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    IoError = 5,
    ModelError = 6,
    Internal = 7,
}

/// Parsed CoNLL corpus.
pub struct NatnerCorpus(Corpus);

/// OCR error table.
pub struct NatnerErrorTable(ErrorTable);

/// Trained CRF labeler.
pub struct NatnerModel(CrfModel);

/// Strict entity-level micro scores.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NatnerScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (NatnerStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NatnerStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NatnerStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NatnerStatus::Internal
        }
    }
}

fn fail<E: std::fmt::Display>(status: NatnerStatus) -> impl Fn(E) -> Failure {
    move |e| (status, e.to_string())
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| (NatnerStatus::NullPointer, format!("{name} is null")))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((NatnerStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (NatnerStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err((NatnerStatus::NullPointer, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err((NatnerStatus::NullPointer, "output pointer is null".into()));
    }
    let c = CString::new(s).map_err(fail(NatnerStatus::Internal))?;
    *out = c.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next natner call on the same thread.
#[no_mangle]
pub extern "C" fn natner_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn natner_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn natner_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses CoNLL text.
///
/// # Safety
/// `conll` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_corpus_parse(conll: *const c_char, out: *mut *mut NatnerCorpus) -> NatnerStatus {
    guard(|| {
        let c = parse_conll(text(conll, "conll")?).map_err(fail(NatnerStatus::ParseError))?;
        put(out, NatnerCorpus(c))
    })
}

/// Serializes a corpus to CoNLL text.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_corpus_write(corpus: *const NatnerCorpus, out: *mut *mut c_char) -> NatnerStatus {
    guard(|| {
        let c = borrow(corpus, "corpus")?;
        put_string(out, write_conll(&c.0))
    })
}

/// Number of segments, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn natner_corpus_segment_count(corpus: *const NatnerCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.segment_count())
}

/// Number of tokens, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn natner_corpus_token_count(corpus: *const NatnerCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.token_count())
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn natner_corpus_free(corpus: *mut NatnerCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Parses a `recognized;correct;type;frequency` table.
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_error_table_load(csv: *const c_char, out: *mut *mut NatnerErrorTable) -> NatnerStatus {
    guard(|| {
        let t = load_error_table(text(csv, "csv")?).map_err(fail(NatnerStatus::ParseError))?;
        put(out, NatnerErrorTable(t))
    })
}

/// The bundled default table.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_error_table_default(out: *mut *mut NatnerErrorTable) -> NatnerStatus {
    guard(|| put(out, NatnerErrorTable(ErrorTable::bundled())))
}

/// # Safety
/// `table` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_error_table_save(table: *const NatnerErrorTable, out: *mut *mut c_char) -> NatnerStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        put_string(out, save_error_table(&t.0))
    })
}

/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn natner_error_table_free(table: *mut NatnerErrorTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Builds an error table from parallel noisy and clean corpora.
///
/// # Safety
/// Both corpora must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_analyze_errors(
    noisy: *const NatnerCorpus,
    clean: *const NatnerCorpus,
    out: *mut *mut NatnerErrorTable,
) -> NatnerStatus {
    guard(|| {
        let n = borrow(noisy, "noisy")?;
        let c = borrow(clean, "clean")?;
        let t = analyze_errors(&n.0, &c.0).map_err(fail(NatnerStatus::InvalidArgument))?;
        put(out, NatnerErrorTable(t))
    })
}

/// Perturbs every eligible token once. `doubled` non-zero returns the
/// clean segments followed by the noised copies.
///
/// # Safety
/// `corpus` and `table` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_inject_noise(
    corpus: *const NatnerCorpus,
    table: *const NatnerErrorTable,
    seed: u64,
    lambda: f64,
    doubled: i32,
    out: *mut *mut NatnerCorpus,
) -> NatnerStatus {
    guard(|| {
        let c = borrow(corpus, "corpus")?;
        let t = borrow(table, "table")?;
        let r = if doubled != 0 {
            make_artificial(&c.0, &t.0, seed, lambda)
        } else {
            inject_noise(&c.0, &t.0, seed, lambda)
        }
        .map_err(fail(NatnerStatus::InvalidArgument))?;
        put(out, NatnerCorpus(r))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_model_load(path: *const c_char, out: *mut *mut NatnerModel) -> NatnerStatus {
    guard(|| {
        let p = text(path, "path")?;
        let m = load_model(Path::new(p)).map_err(|e| match e {
            natner::labeler::LabelerError::Io(m) => (NatnerStatus::IoError, m),
            other => (NatnerStatus::ModelError, other.to_string()),
        })?;
        put(out, NatnerModel(m))
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn natner_model_save(model: *const NatnerModel, path: *const c_char) -> NatnerStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let p = text(path, "path")?;
        save_model(&m.0, Path::new(p)).map_err(fail(NatnerStatus::IoError))
    })
}

/// Viterbi-labels every segment.
///
/// # Safety
/// `model` and `corpus` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_model_tag(
    model: *const NatnerModel,
    corpus: *const NatnerCorpus,
    out: *mut *mut NatnerCorpus,
) -> NatnerStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let c = borrow(corpus, "corpus")?;
        put(out, NatnerCorpus(tag_corpus(&m.0, &c.0)))
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn natner_model_free(model: *mut NatnerModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Strict entity-level scores of `pred` against `gold`.
///
/// # Safety
/// Both corpora must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn natner_evaluate(
    gold: *const NatnerCorpus,
    pred: *const NatnerCorpus,
    out: *mut NatnerScores,
) -> NatnerStatus {
    guard(|| {
        let g = borrow(gold, "gold")?;
        let p = borrow(pred, "pred")?;
        if out.is_null() {
            return Err((NatnerStatus::NullPointer, "output pointer is null".into()));
        }
        let r = entity_prf(&g.0, &p.0).map_err(fail(NatnerStatus::InvalidArgument))?;
        *out = NatnerScores {
            precision: r.precision(),
            recall: r.recall(),
            f1: r.f1(),
            true_positives: r.micro.tp,
            false_positives: r.micro.fp,
            false_negatives: r.micro.fn_,
        };
        Ok(())
    })
}
