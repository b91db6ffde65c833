//! C interface to `fracdim`.
//!
//! Clouds and families cross the boundary as opaque handles. Every function
//! returns a [`FracStatus`]; on failure a message is available from
//! [`fracdim_last_error`] on the same thread. Strings returned through `out`
//! parameters are owned by the caller and released with [`fracdim_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use fracdim::covering::DEFAULT_EXACT_CUTOFF;
use fracdim::generators::GeneratorSpec;
use fracdim::io::{cloud_from_json, cloud_to_json, to_json_string};
use fracdim::lowerdim::lower_dim_estimate_with;
use fracdim::regular::{certificate_scaling_check, choose_parameters, search_regular, verify_regular, SearchStatus};
use fracdim::{dimension_bound, Error, Mode, PointCloud, RegularFamily, ScaleWindow};

pub const FRACDIM_MODE_EXACT: u32 = 0;
pub const FRACDIM_MODE_GREEDY: u32 = 1;
pub const FRACDIM_MODE_AUTO: u32 = 2;

/// Result codes. The numbering matches the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FracStatus {
    Ok = 0,
    InvalidArgument = 2,
    NotFound = 3,
    VerificationFailed = 4,
    Io = 5,
    NullPointer = 6,
    Panic = 7,
}

/// A point cloud.
pub struct FracCloud(PointCloud);

/// A labeled (k,l)-regular family.
pub struct FracFamily(RegularFamily);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(FracStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            _ if err.is_io() => FracStatus::Io,
            Error::UnverifiedFamily(_) => FracStatus::VerificationFailed,
            _ => FracStatus::InvalidArgument,
        };
        Failure(status, err.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        Failure(FracStatus::InvalidArgument, format!("malformed JSON: {err}"))
    }
}

fn set_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FracStatus {
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(None);
            FracStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(Some(msg));
            status
        }
        Err(_) => {
            set_error(Some("internal panic".into()));
            FracStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FracStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(FracStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let s = CString::new(s).map_err(|_| Failure(FracStatus::InvalidArgument, "string contains NUL".into()))?;
    put(out, s.into_raw(), "out")
}

fn mode(code: u32) -> Result<Mode, Failure> {
    match code {
        FRACDIM_MODE_EXACT => Ok(Mode::Exact),
        FRACDIM_MODE_GREEDY => Ok(Mode::Greedy),
        FRACDIM_MODE_AUTO => Ok(Mode::Auto),
        _ => Err(Failure(FracStatus::InvalidArgument, format!("unknown mode {code}"))),
    }
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn fracdim_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fracdim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a cloud document (`metric` plus `points` or `matrix`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_cloud_from_json(json: *const c_char, out: *mut *mut FracCloud) -> FracStatus {
    guard(|| {
        let cloud = cloud_from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(FracCloud(cloud))), "out")
    })
}

/// Builds a cloud from a generator spec such as `{"kind":"cantor","level":5}`.
///
/// # Safety
/// `spec_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_cloud_generate(spec_json: *const c_char, out: *mut *mut FracCloud) -> FracStatus {
    guard(|| {
        let spec: GeneratorSpec = serde_json::from_str(text(spec_json, "spec_json")?)?;
        let cloud = spec.build()?;
        put(out, Box::into_raw(Box::new(FracCloud(cloud))), "out")
    })
}

/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_cloud_to_json(cloud: *const FracCloud, out: *mut *mut c_char) -> FracStatus {
    guard(|| put_string(out, cloud_to_json(&borrow(cloud, "cloud")?.0)?))
}

/// # Safety
/// `cloud` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_cloud_len(cloud: *const FracCloud, out: *mut usize) -> FracStatus {
    guard(|| put(out, borrow(cloud, "cloud")?.0.len(), "out"))
}

/// # Safety
/// `cloud` must be null or a live handle, which becomes invalid.
#[no_mangle]
pub unsafe extern "C" fn fracdim_cloud_free(cloud: *mut FracCloud) {
    if !cloud.is_null() {
        drop(Box::from_raw(cloud));
    }
}

/// Window lower-dimension estimate, returned as a JSON report.
/// A null `window_json` selects the default window; `cutoff` 0 selects the default.
///
/// # Safety
/// `cloud` must be a live handle, `window_json` null or NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_estimate(
    cloud: *const FracCloud,
    window_json: *const c_char,
    mode_code: u32,
    cutoff: usize,
    out: *mut *mut c_char,
) -> FracStatus {
    guard(|| {
        let cloud = &borrow(cloud, "cloud")?.0;
        let window = if window_json.is_null() {
            ScaleWindow::default()
        } else {
            serde_json::from_str(text(window_json, "window_json")?)?
        };
        let cutoff = if cutoff == 0 { DEFAULT_EXACT_CUTOFF } else { cutoff };
        let report = lower_dim_estimate_with(cloud, &window, mode(mode_code)?, cutoff)?;
        put_string(out, to_json_string(&report)?)
    })
}

/// Searches for a (k,l)-regular family of the given depth.
/// Returns `NotFound` when none exists or the budget runs out; `*exhausted`
/// (if non-null) tells the two apart.
///
/// # Safety
/// `cloud` must be a live handle; `out` writable; `exhausted` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_search(
    cloud: *const FracCloud,
    k: u32,
    l: u32,
    depth: u32,
    strong: bool,
    budget: u64,
    out: *mut *mut FracFamily,
    exhausted: *mut bool,
) -> FracStatus {
    guard(|| {
        let cloud = &borrow(cloud, "cloud")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let outcome = search_regular(cloud, k, l, depth, strong, budget)?;
        let status = outcome.status();
        if !exhausted.is_null() {
            exhausted.write(status == SearchStatus::BudgetExhausted);
        }
        match outcome.family {
            Some(f) => put(out, Box::into_raw(Box::new(FracFamily(f))), "out"),
            None => {
                out.write(ptr::null_mut());
                Err(Failure(FracStatus::NotFound, format!("{status} after {} expansions", outcome.expansions)))
            }
        }
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_family_from_json(json: *const c_char, out: *mut *mut FracFamily) -> FracStatus {
    guard(|| {
        let family = RegularFamily::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(FracFamily(family))), "out")
    })
}

/// # Safety
/// `family` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_family_to_json(family: *const FracFamily, out: *mut *mut c_char) -> FracStatus {
    guard(|| put_string(out, to_json_string(&borrow(family, "family")?.0)?))
}

/// Dimension bound `log2(l)/k` certified by a family.
///
/// # Safety
/// `family` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_family_bound(family: *const FracFamily, out: *mut f64) -> FracStatus {
    guard(|| put(out, borrow(family, "family")?.0.bound(), "out"))
}

/// # Safety
/// `family` must be null or a live handle, which becomes invalid.
#[no_mangle]
pub unsafe extern "C" fn fracdim_family_free(family: *mut FracFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Checks a family against its cloud. Returns `VerificationFailed` if any
/// constraint is violated; the JSON report (if `report` is non-null) lists them.
///
/// # Safety
/// Handles must be live; `report` null or writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_verify(
    cloud: *const FracCloud,
    family: *const FracFamily,
    report: *mut *mut c_char,
) -> FracStatus {
    guard(|| {
        let rep = verify_regular(&borrow(cloud, "cloud")?.0, &borrow(family, "family")?.0)?;
        if !report.is_null() {
            put_string(report, to_json_string(&rep)?)?;
        }
        if rep.ok {
            Ok(())
        } else {
            Err(Failure(FracStatus::VerificationFailed, format!("{} violations", rep.violations.len())))
        }
    })
}

/// Runs the covering-count check on a verified family.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn fracdim_scaling_check(cloud: *const FracCloud, family: *const FracFamily) -> FracStatus {
    guard(|| {
        if certificate_scaling_check(&borrow(cloud, "cloud")?.0, &borrow(family, "family")?.0)? {
            Ok(())
        } else {
            Err(Failure(FracStatus::VerificationFailed, "counting inequality fails".into()))
        }
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_dimension_bound(k: u32, l: u64, out: *mut f64) -> FracStatus {
    guard(|| put(out, dimension_bound(k, l)?, "out"))
}

/// # Safety
/// `k` and `l` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fracdim_choose_parameters(
    c: f64,
    beta: f64,
    alpha: f64,
    k: *mut u32,
    l: *mut u64,
) -> FracStatus {
    guard(|| {
        if k.is_null() || l.is_null() {
            return Err(null("k or l"));
        }
        let (kk, ll) = choose_parameters(c, beta, alpha)?;
        k.write(kk);
        l.write(ll);
        Ok(())
    })
}
