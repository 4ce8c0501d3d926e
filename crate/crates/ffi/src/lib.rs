//! C ABI over `uniqset`.
//!
//! Objects cross the boundary as opaque handles created by `uq_*_new` style
//! constructors and released with the matching `uq_*_free`. Every fallible
//! call returns a [`UqStatus`]; on failure `uq_last_error` holds a message for
//! the calling thread until its next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use uniqset::capacity::estimate;
use uniqset::geometry::{bc_entropy, CompactSet, Generation};
use uniqset::harness::{self, RunOutcome};
use uniqset::outer::{build_chi, build_outer, OuterSpec, DEFAULT_ETA, OUTER_GRID};
use uniqset::uniqueness::{assemble_uniqueness_set, build_schedule, ScheduleConfig};
use uniqset::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DegenerateSet = 3,
    Numerical = 4,
    Precondition = 5,
    SearchExhausted = 6,
    Io = 7,
    Panic = 99,
}

/// A compact set `E` on the circle.
pub struct UqSet {
    set: CompactSet,
}

/// Boundary data of one outer function `F = 1 − exp(χ + iχ̃)`.
pub struct UqOuter {
    spec: OuterSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: UqStatus,
    message: String,
}

impl Failure {
    fn new(status: UqStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn null(name: &str) -> Self {
        Self::new(UqStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter(_) | Error::Parse { .. } | Error::Json(_) => UqStatus::InvalidArgument,
            Error::DegenerateSet => UqStatus::DegenerateSet,
            Error::DivergentTail(_)
            | Error::GridTooSmall { .. }
            | Error::Overflow(_)
            | Error::Resolution(_)
            | Error::ExpOverflow(_) => UqStatus::Numerical,
            Error::Precondition(_) | Error::SupportViolation(_) => UqStatus::Precondition,
            Error::SearchExhausted(_) => UqStatus::SearchExhausted,
            Error::MissingTable(_) | Error::Io(_) => UqStatus::Io,
        };
        Self::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> UqStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => UqStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(_) => {
            set_last_error("panic inside uniqset");
            UqStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(UqStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(name))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds `E` from `len` generations `(ns[i], deltas[i])`.
///
/// # Safety
/// `ns` and `deltas` must point to `len` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_new(ns: *const u64, deltas: *const f64, len: usize, out: *mut *mut UqSet) -> UqStatus {
    guard(|| {
        if len > 0 && (ns.is_null() || deltas.is_null()) {
            return Err(Failure::null("ns or deltas"));
        }
        let gens = (0..len)
            .map(|i| Generation::new(*ns.add(i) as u128, *deltas.add(i)))
            .collect::<Result<Vec<_>, _>>()?;
        write(out, boxed(UqSet { set: CompactSet::new(gens)? }), "out")
    })
}

/// Parses a set from the `set.json` format written by the CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_from_json(json: *const c_char, out: *mut *mut UqSet) -> UqStatus {
    guard(|| {
        let set: CompactSet = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        write(out, boxed(UqSet { set }), "out")
    })
}

/// Assembles the MAIN-rule set `δ_j = c/(j log^a j)` with `c` chosen from the budget.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_build_main(a: f64, budget: f64, generations: usize, out: *mut *mut UqSet) -> UqStatus {
    guard(|| {
        let schedule = build_schedule(&ScheduleConfig::main(a, budget, generations))?;
        let uset = assemble_uniqueness_set(&schedule)?;
        write(out, boxed(UqSet { set: uset.set }), "out")
    })
}

/// Releases a set; NULL is ignored.
///
/// # Safety
/// `set` must come from a `uq_set_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn uq_set_free(set: *mut UqSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_generation_count(set: *const UqSet, out: *mut usize) -> UqStatus {
    guard(|| write(out, handle(set, "set")?.set.generations().len(), "out"))
}

/// Lebesgue measure of `E`.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_measure(set: *const UqSet, out: *mut f64) -> UqStatus {
    guard(|| write(out, handle(set, "set")?.set.measure(), "out"))
}

/// Exact entropy of the complement and its generation-wise bound.
///
/// # Safety
/// `set` must be a live handle; `exact` and `bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_entropy(set: *const UqSet, exact: *mut f64, bound: *mut f64) -> UqStatus {
    guard(|| {
        let cert = bc_entropy(&handle(set, "set")?.set)?;
        write(exact, cert.exact, "exact")?;
        write(bound, cert.lemma_bc_bound, "bound")
    })
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_contains(set: *const UqSet, t: f64, out: *mut bool) -> UqStatus {
    guard(|| write(out, handle(set, "set")?.set.contains(t), "out"))
}

/// Serializes a set; release the string with `uq_string_free`.
///
/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_set_to_json(set: *const UqSet, out: *mut *mut c_char) -> UqStatus {
    guard(|| {
        let text = serde_json::to_string(&handle(set, "set")?.set).map_err(Error::from)?;
        let c = CString::new(text).map_err(|_| Failure::new(UqStatus::InvalidArgument, "interior NUL"))?;
        write(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn uq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Two-sided bounds on the `A_p` capacity of `E`, `p > 2`.
///
/// # Safety
/// `set` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_capacity(set: *const UqSet, p: f64, lower: *mut f64, upper: *mut f64) -> UqStatus {
    guard(|| {
        let est = estimate(&handle(set, "set")?.set, p, &[uniqset::capacity::PrimalWitness::One])?;
        write(lower, est.lower, "lower")?;
        write(upper, est.upper, "upper")
    })
}

/// Outer function for the arc `I(δ)` and level `ε` on the default grid.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_outer_new(delta: f64, eps: f64, out: *mut *mut UqOuter) -> UqStatus {
    guard(|| {
        let spec = build_outer(build_chi(delta, eps, DEFAULT_ETA, OUTER_GRID)?)?;
        write(out, boxed(UqOuter { spec }), "out")
    })
}

/// # Safety
/// `outer` must come from `uq_outer_new` and not be used afterwards; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn uq_outer_free(outer: *mut UqOuter) {
    if !outer.is_null() {
        drop(Box::from_raw(outer));
    }
}

/// `F̂(n)`; zero for `n < 0`.
///
/// # Safety
/// `outer` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_outer_coeff(outer: *const UqOuter, n: i64, re: *mut f64, im: *mut f64) -> UqStatus {
    guard(|| {
        let c = handle(outer, "outer")?.spec.coeff(n);
        write(re, c.re, "re")?;
        write(im, c.im, "im")
    })
}

/// Certified interval for `‖F‖_{A_1}`.
///
/// # Safety
/// `outer` must be a live handle; `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_outer_a1(outer: *const UqOuter, lower: *mut f64, upper: *mut f64) -> UqStatus {
    guard(|| {
        let a1 = handle(outer, "outer")?.spec.a1;
        write(lower, a1.lower, "lower")?;
        write(upper, a1.upper, "upper")
    })
}

/// `|F(0)|` and `sup |F − 1|` off the widened arc.
///
/// # Safety
/// `outer` must be a live handle; `f0` and `offarc_sup` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_outer_properties(outer: *const UqOuter, f0: *mut f64, offarc_sup: *mut f64) -> UqStatus {
    guard(|| {
        let spec = &handle(outer, "outer")?.spec;
        write(f0, spec.f0, "f0")?;
        write(offarc_sup, spec.offarc_sup, "offarc_sup")
    })
}

/// Runs a CLI pipeline (`build`, `blocks`, `separate`, `density`, `capacity`,
/// `outer`, `transfer` or `asymmetry-demo`) into `out_dir`.
///
/// `config_json` may be NULL for the defaults. `passed` receives whether
/// every certificate of the run passed.
///
/// # Safety
/// String arguments must be NUL-terminated; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uq_run(
    command: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    passed: *mut bool,
) -> UqStatus {
    guard(|| {
        let command = str_arg(command, "command")?;
        let json = if config_json.is_null() { "{}" } else { str_arg(config_json, "config_json")? };
        let out = Path::new(str_arg(out_dir, "out_dir")?);
        let outcome = dispatch(command, json, out)?;
        write(passed, outcome.passed(), "passed")
    })
}

fn dispatch(command: &str, json: &str, out: &Path) -> Result<RunOutcome, Failure> {
    fn cfg<T: for<'de> serde::Deserialize<'de>>(json: &str) -> Result<T, Failure> {
        Ok(serde_json::from_str(json).map_err(Error::from)?)
    }
    Ok(match command {
        "build" => harness::run_build(&cfg(json)?, out)?,
        "blocks" => harness::run_blocks(&cfg(json)?, out)?,
        "separate" => harness::run_separate(&cfg(json)?, out)?,
        "density" => harness::run_density(&cfg(json)?, out)?,
        "capacity" => harness::run_capacity(&cfg(json)?, out)?,
        "outer" => harness::run_outer(&cfg(json)?, out)?,
        "transfer" => harness::run_transfer(&cfg(json)?, out)?,
        "asymmetry-demo" => harness::run_demo(&cfg(json)?, out)?,
        other => return Err(Failure::new(UqStatus::InvalidArgument, format!("unknown command '{other}'"))),
    })
}
