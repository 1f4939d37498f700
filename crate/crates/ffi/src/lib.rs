//! C ABI over the `relnas` search library.
//!
//! Every function returns a [`RelnasStatus`]. On failure the message is kept
//! per thread and can be read with [`relnas_last_error_message`]. Strings
//! handed out by this library must be released with [`relnas_string_free`],
//! search handles with [`relnas_search_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use relnas::harness::{ConfigOverrides, RunConfig, Setup};
use relnas::search_space::{decode, encode, ArchVector, Genotype, SearchSpaceScheme};
use relnas::slow_fast::SearchState;
use relnas::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelnasStatus {
    Ok = 0,
    NullArgument = 1,
    /// Malformed vector, genotype or string argument.
    InvalidArgument = 2,
    /// Output buffer too small; the required length is reported.
    BufferTooSmall = 3,
    Config = 4,
    Evaluation = 5,
    Io = 6,
    /// The search already ran all its generations.
    Finished = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: RelnasStatus, msg: impl Into<String>) -> RelnasStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> RelnasStatus {
    match err {
        Error::InvalidGene { .. }
        | Error::LengthMismatch { .. }
        | Error::InvalidGenotype(_)
        | Error::SchemeMismatch(..)
        | Error::Json(_) => RelnasStatus::InvalidArgument,
        Error::Config(_) | Error::OddPopulation(_) | Error::HashMismatch { .. } => RelnasStatus::Config,
        Error::Io { .. } | Error::Csv(_) | Error::CorruptCheckpoint(_) => RelnasStatus::Io,
        _ => RelnasStatus::Evaluation,
    }
}

fn guard(f: impl FnOnce() -> Result<(), RelnasStatus>) -> RelnasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RelnasStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(RelnasStatus::Panic, "internal panic"),
    }
}

fn lift<T>(result: relnas::Result<T>) -> Result<T, RelnasStatus> {
    result.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, RelnasStatus> {
    if s.is_null() {
        return Err(fail(RelnasStatus::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(RelnasStatus::InvalidArgument, "string argument is not UTF-8"))
}

fn hand_out(s: String) -> Result<*mut c_char, RelnasStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(RelnasStatus::Panic, "string holds a NUL byte"))
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn relnas_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn relnas_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decodes `len` genes (`8 * blocks_per_cell` of them) into canonical genotype JSON.
///
/// # Safety
/// `genes` must point to `len` readable doubles; `json_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnas_decode(
    genes: *const f64,
    len: usize,
    blocks_per_cell: usize,
    json_out: *mut *mut c_char,
) -> RelnasStatus {
    guard(|| {
        if genes.is_null() || json_out.is_null() {
            return Err(fail(RelnasStatus::NullArgument, "genes and json_out must not be null"));
        }
        let scheme = lift(SearchSpaceScheme::new(blocks_per_cell))?;
        let values = std::slice::from_raw_parts(genes, len).to_vec();
        let arch = lift(ArchVector::new(values, &scheme))?;
        let genotype = lift(decode(&arch, &scheme))?;
        *json_out = hand_out(genotype.to_json())?;
        Ok(())
    })
}

/// Encodes genotype JSON to its midpoint vector. Writes up to `capacity`
/// genes and always stores the full length in `len_out`; a short buffer
/// yields `BufferTooSmall`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `genes_out` must have room for
/// `capacity` doubles (it may be null when `capacity` is 0); `len_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnas_encode(
    json: *const c_char,
    genes_out: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> RelnasStatus {
    guard(|| {
        if len_out.is_null() || (genes_out.is_null() && capacity > 0) {
            return Err(fail(RelnasStatus::NullArgument, "len_out and genes_out must not be null"));
        }
        let genotype = lift(Genotype::from_json(read_str(json)?))?;
        let scheme = lift(SearchSpaceScheme::new(genotype.blocks_per_cell()))?;
        let vector = lift(encode(&genotype, &scheme))?;
        let values = vector.as_slice();
        *len_out = values.len();
        if capacity < values.len() {
            return Err(fail(
                RelnasStatus::BufferTooSmall,
                format!("need room for {} genes, got {capacity}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), genes_out, values.len());
        Ok(())
    })
}

/// An in-progress search.
pub struct RelnasSearch {
    config: RunConfig,
    setup: Setup,
    state: SearchState,
}

/// Starts a search from TOML config text (the same format the command line
/// reads). Nothing is written to disk.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnas_search_new(config_toml: *const c_char, out: *mut *mut RelnasSearch) -> RelnasStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(RelnasStatus::NullArgument, "out must not be null"));
        }
        *out = ptr::null_mut();
        let config = lift(RunConfig::parse(read_str(config_toml)?, "config", &ConfigOverrides::default()))?;
        let setup = lift(Setup::new(&config))?;
        let state = lift(SearchState::initialize(
            &config.search,
            &setup.scheme,
            &*setup.evaluator,
            &config.streams(),
        ))?;
        *out = Box::into_raw(Box::new(RelnasSearch { config, setup, state }));
        Ok(())
    })
}

/// Runs one generation. Reports the completed generation number and that
/// generation's lowest loss (either pointer may be null).
///
/// # Safety
/// `search` must be a live handle from [`relnas_search_new`].
#[no_mangle]
pub unsafe extern "C" fn relnas_search_step(
    search: *mut RelnasSearch,
    generation_out: *mut usize,
    min_loss_out: *mut f64,
) -> RelnasStatus {
    guard(|| {
        let Some(s) = search.as_mut() else {
            return Err(fail(RelnasStatus::NullArgument, "search handle is null"));
        };
        if s.state.is_finished(&s.config.search) {
            return Err(fail(RelnasStatus::Finished, "all generations have run"));
        }
        let stats = lift(s.state.step(&*s.setup.evaluator, &s.setup.scheme, &s.config.search))?;
        let (generation, min) = (stats.generation, stats.min);
        if !generation_out.is_null() {
            *generation_out = generation;
        }
        if !min_loss_out.is_null() {
            *min_loss_out = min;
        }
        Ok(())
    })
}

/// Generations completed so far.
///
/// # Safety
/// `search` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnas_search_generation(search: *const RelnasSearch, out: *mut usize) -> RelnasStatus {
    guard(|| match (search.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.state.generation();
            Ok(())
        }
        _ => Err(fail(RelnasStatus::NullArgument, "search and out must not be null")),
    })
}

/// Best estimate so far and its genotype JSON (free with [`relnas_string_free`]).
/// Before the first generation this fails with `InvalidArgument`.
///
/// # Safety
/// `search` must be a live handle; `loss_out` and `json_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn relnas_search_best(
    search: *const RelnasSearch,
    loss_out: *mut f64,
    json_out: *mut *mut c_char,
) -> RelnasStatus {
    guard(|| {
        let Some(s) = search.as_ref() else {
            return Err(fail(RelnasStatus::NullArgument, "search handle is null"));
        };
        if loss_out.is_null() || json_out.is_null() {
            return Err(fail(RelnasStatus::NullArgument, "loss_out and json_out must not be null"));
        }
        let Some(best) = &s.state.best else {
            return Err(fail(RelnasStatus::InvalidArgument, "no generation has run yet"));
        };
        *json_out = hand_out(s.setup.present(&best.genotype).to_json())?;
        *loss_out = best.loss;
        Ok(())
    })
}

/// Releases a search handle. Null is ignored.
///
/// # Safety
/// `search` must come from [`relnas_search_new`] and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn relnas_search_free(search: *mut RelnasSearch) {
    if !search.is_null() {
        drop(Box::from_raw(search));
    }
}
