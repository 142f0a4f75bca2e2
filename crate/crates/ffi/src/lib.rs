//! C ABI over `murreid` model bundles.
//!
//! Handles are opaque: load a bundle with [`murreid_model_load`], classify
//! with [`murreid_predict`] and release it with [`murreid_model_free`]. Every
//! fallible call returns a [`MurreidStatus`]; on failure
//! [`murreid_last_error`] describes the problem for the calling thread.
//!
//! A loaded model is immutable, so one handle may be used from several
//! threads at once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use murreid::corpus::{DialectLabel, NUM_DIALECTS};
use murreid::dsp::Waveform;
use murreid::models::{load_bundle, ModelBundle, ModelKind};
use murreid::Error;

/// Number of dialect classes; score buffers need at least this many slots.
pub const MURREID_NUM_DIALECTS: usize = 23;

const _: () = assert!(MURREID_NUM_DIALECTS == NUM_DIALECTS);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MurreidStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// The file is not a readable bundle of a supported version.
    Format = 4,
    /// A fusion model was called without audio.
    AudioRequired = 5,
    InvalidArgument = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MurreidModelKind {
    Text = 0,
    Fusion = 1,
}

/// Opaque handle to a loaded model bundle.
pub struct MurreidModel {
    bundle: ModelBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> MurreidStatus {
    match err {
        Error::Io { .. } => MurreidStatus::Io,
        Error::NotABundle | Error::BundleVersion { .. } | Error::Corrupt(_) => MurreidStatus::Format,
        Error::AudioRequired => MurreidStatus::AudioRequired,
        e if e.is_input_error() => MurreidStatus::InvalidArgument,
        _ => MurreidStatus::Internal,
    }
}

fn fail(status: MurreidStatus, msg: impl Into<String>) -> MurreidStatus {
    set_last_error(msg);
    status
}

/// Runs `f`, recording its error message and converting panics.
fn guarded(f: impl FnOnce() -> Result<(), (MurreidStatus, String)>) -> MurreidStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MurreidStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(MurreidStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (MurreidStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MurreidStatus, String)> {
    if p.is_null() {
        return Err((MurreidStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MurreidStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Loads a bundle file. On success `*out` receives a handle that must be
/// released with [`murreid_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn murreid_model_load(path: *const c_char, out: *mut *mut MurreidModel) -> MurreidStatus {
    guarded(|| {
        if out.is_null() {
            return Err((MurreidStatus::NullPointer, "out is null".into()));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let bundle = load_bundle(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MurreidModel { bundle }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must come from [`murreid_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn murreid_model_free(model: *mut MurreidModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn murreid_model_kind(model: *const MurreidModel, out: *mut MurreidModelKind) -> MurreidStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return Err((MurreidStatus::NullPointer, "model or out is null".into()));
        }
        *out = match (*model).bundle.kind() {
            ModelKind::Text => MurreidModelKind::Text,
            ModelKind::Fusion => MurreidModelKind::Fusion,
        };
        Ok(())
    })
}

/// Classifies a transcript with optional mono audio.
///
/// Pass `samples = NULL, n_samples = 0` for no audio; fusion models then fail
/// with `AUDIO_REQUIRED`. Samples are in [-1, 1] at `sample_rate_hz`. The
/// class probabilities are written to `scores_out`, which must hold at least
/// `MURREID_NUM_DIALECTS` values, and the predicted class index to
/// `label_out`.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `transcript` must be
/// NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn murreid_predict(
    model: *const MurreidModel,
    transcript: *const c_char,
    samples: *const f32,
    n_samples: usize,
    sample_rate_hz: u32,
    scores_out: *mut f64,
    n_scores: usize,
    label_out: *mut u32,
) -> MurreidStatus {
    guarded(|| {
        if model.is_null() || scores_out.is_null() || label_out.is_null() {
            return Err((MurreidStatus::NullPointer, "model, scores_out or label_out is null".into()));
        }
        if n_scores < NUM_DIALECTS {
            return Err((
                MurreidStatus::InvalidArgument,
                format!("score buffer holds {n_scores} values, need {NUM_DIALECTS}"),
            ));
        }
        let transcript = str_arg(transcript, "transcript")?;
        let audio = match (samples.is_null(), n_samples) {
            (true, 0) => None,
            (true, _) => return Err((MurreidStatus::NullPointer, "samples is null".into())),
            (false, _) => {
                if sample_rate_hz == 0 {
                    return Err((MurreidStatus::InvalidArgument, "sample rate must be positive".into()));
                }
                let s = std::slice::from_raw_parts(samples, n_samples);
                Some(Waveform::new(s.iter().map(|&x| x as f64).collect(), sample_rate_hz))
            }
        };
        let p = (*model).bundle.predict(transcript, audio.as_ref()).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(scores_out, NUM_DIALECTS).copy_from_slice(&p.scores);
        *label_out = p.label.index() as u32;
        Ok(())
    })
}

struct LabelStrings {
    codes: Vec<CString>,
    names: Vec<CString>,
}

fn labels() -> &'static LabelStrings {
    static LABELS: OnceLock<LabelStrings> = OnceLock::new();
    LABELS.get_or_init(|| LabelStrings {
        codes: DialectLabel::all().map(|l| CString::new(l.code()).unwrap()).collect(),
        names: DialectLabel::all().map(|l| CString::new(l.name()).unwrap()).collect(),
    })
}

/// Dialect code (e.g. "EH") for a class index, or NULL when out of range.
/// The string is static.
#[no_mangle]
pub extern "C" fn murreid_label_code(index: u32) -> *const c_char {
    labels().codes.get(index as usize).map_or(ptr::null(), |s| s.as_ptr())
}

/// Dialect name for a class index, or NULL when out of range.
#[no_mangle]
pub extern "C" fn murreid_label_name(index: u32) -> *const c_char {
    labels().names.get(index as usize).map_or(ptr::null(), |s| s.as_ptr())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn murreid_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn murreid_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(env!("CARGO_PKG_VERSION")).unwrap())
        .as_ptr()
}
