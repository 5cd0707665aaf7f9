//! C ABI over the microlocal library.
//!
//! Handles are opaque and owned by the caller; free each with its `_free`
//! function. Every fallible call returns an `i32` status, `ML_OK` on success,
//! and writes results through out-pointers. `ml_last_error` copies the message
//! of the most recent failure on the calling thread.

use microlocal::config::LoadedConfig;
use microlocal::detector::{classify_point, Verdict};
use microlocal::geometry::FrequencyWindow;
use microlocal::group::{DilationGroup, DilationGroupSpec, GroupKind};
use microlocal::transform::{coefficient_analytic, AnalysedObject, CoefficientSettings};
use microlocal::verifier::{anisotropy_gate, StrongModeGate};
use microlocal::wavelet::{normalized_wavelet, AdmissibilitySettings, BandlimitedWavelet};
use microlocal::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

pub const ML_OK: i32 = 0;
pub const ML_ERR_NULL: i32 = -1;
pub const ML_ERR_UTF8: i32 = -2;
pub const ML_ERR_CONFIG: i32 = -3;
pub const ML_ERR_PARAMETER: i32 = -4;
pub const ML_ERR_COMPUTE: i32 = -5;
pub const ML_ERR_PANIC: i32 = -6;
pub const ML_ERR_IO: i32 = -7;

pub const ML_GROUP_SIMILITUDE: i32 = 0;
pub const ML_GROUP_DIAGONAL: i32 = 1;
pub const ML_GROUP_SHEARLET: i32 = 2;

pub const ML_VERDICT_REGULAR: i32 = 0;
pub const ML_VERDICT_SINGULAR: i32 = 1;
pub const ML_VERDICT_INCONCLUSIVE: i32 = 2;

pub struct MlGroup {
    inner: DilationGroup,
}

pub struct MlWavelet {
    inner: BandlimitedWavelet,
}

pub struct MlConfig {
    inner: LoadedConfig,
    group: DilationGroup,
    wavelet: BandlimitedWavelet,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Fail(i32, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) => ML_ERR_CONFIG,
            Error::Io(_) => ML_ERR_IO,
            Error::Dimension(_)
            | Error::AnisotropyLength { .. }
            | Error::Parameter(_)
            | Error::InvalidArgument(_)
            | Error::OutsideOrbit(_)
            | Error::EmptyWindow
            | Error::Variant(_) => ML_ERR_PARAMETER,
            _ => ML_ERR_COMPUTE,
        };
        Fail(code, e.to_string())
    }
}

fn run(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    let (code, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return ML_OK,
        Ok(Err(Fail(code, m))) => (code, m),
        Err(_) => (ML_ERR_PANIC, "panic inside the library".to_string()),
    };
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
    code
}

fn null() -> Fail {
    Fail(ML_ERR_NULL, "null pointer argument".into())
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|e| Fail(ML_ERR_UTF8, e.to_string()))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(null)
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn ml_last_error(buf: *mut c_char, cap: usize) -> i32 {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len() as i32
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ml_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a dilation group. `anisotropy` may be null when `anisotropy_len` is 0.
///
/// # Safety
/// `anisotropy` must be valid for `anisotropy_len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ml_group_new(kind: i32, dimension: usize, anisotropy: *const f64, anisotropy_len: usize, out_group: *mut *mut MlGroup) -> i32 {
    run(|| {
        let out_group = out(out_group)?;
        let kind = match kind {
            ML_GROUP_SIMILITUDE => GroupKind::Similitude,
            ML_GROUP_DIAGONAL => GroupKind::Diagonal,
            ML_GROUP_SHEARLET => GroupKind::Shearlet,
            k => return Err(Fail(ML_ERR_PARAMETER, format!("unknown group kind {k}"))),
        };
        let anisotropy = if anisotropy_len == 0 { vec![] } else { slice(anisotropy, anisotropy_len)?.to_vec() };
        let inner = DilationGroup::build(DilationGroupSpec { kind, dimension, anisotropy, component: None })?;
        *out_group = Box::into_raw(Box::new(MlGroup { inner }));
        Ok(())
    })
}

/// # Safety
/// `group` must come from `ml_group_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_group_free(group: *mut MlGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

/// ‖h‖, ‖h⁻¹‖ and det h for the element with the given flat chart vector
/// (similitude d=2: [scale, angle]; diagonal: entries; shearlet: [scale, shears…]).
///
/// # Safety
/// Pointers must be valid; `chart` for `chart_len` reads.
#[no_mangle]
pub unsafe extern "C" fn ml_group_element_norms(
    group: *const MlGroup,
    chart: *const f64,
    chart_len: usize,
    out_norm: *mut f64,
    out_inverse_norm: *mut f64,
    out_det: *mut f64,
) -> i32 {
    run(|| {
        let g = &handle(group)?.inner;
        let (n, ni, det) = (out(out_norm)?, out(out_inverse_norm)?, out(out_det)?);
        let h = g.from_chart_vector(slice(chart, chart_len)?)?;
        (*n, *ni, *det) = (h.op_norm, h.inv_op_norm, h.det);
        Ok(())
    })
}

/// Writes 1 when ξ lies in the open dual orbit, else 0.
///
/// # Safety
/// `xi` must be valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn ml_group_in_orbit(group: *const MlGroup, xi: *const f64, len: usize, out_flag: *mut i32) -> i32 {
    run(|| {
        let g = &handle(group)?.inner;
        let xi = slice(xi, len)?;
        if xi.len() != g.dimension() {
            return Err(Fail(ML_ERR_PARAMETER, "xi has the wrong dimension".into()));
        }
        *out(out_flag)? = g.in_open_orbit(xi) as i32;
        Ok(())
    })
}

/// Writes 1 when strong cone approximation is not excluded by scalar dilations, else 0.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ml_strong_mode_permitted(group: *const MlGroup, out_flag: *mut i32) -> i32 {
    run(|| {
        let g = &handle(group)?.inner;
        *out(out_flag)? = (anisotropy_gate(g) == StrongModeGate::Permitted) as i32;
        Ok(())
    })
}

/// Normalized bump wavelet on a frequency window given as JSON, e.g.
/// `{"shape":"shearlet_box","dimension":2}`.
///
/// # Safety
/// `group` must be valid and `window_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ml_wavelet_new(group: *const MlGroup, window_json: *const c_char, out_wavelet: *mut *mut MlWavelet) -> i32 {
    run(|| {
        let g = &handle(group)?.inner;
        let out_wavelet = out(out_wavelet)?;
        let window: FrequencyWindow = serde_json::from_str(text(window_json)?).map_err(|e| Fail(ML_ERR_CONFIG, e.to_string()))?;
        let inner = normalized_wavelet(g, window, &AdmissibilitySettings::default())?;
        *out_wavelet = Box::into_raw(Box::new(MlWavelet { inner }));
        Ok(())
    })
}

/// # Safety
/// `wavelet` must come from `ml_wavelet_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_wavelet_free(wavelet: *mut MlWavelet) {
    if !wavelet.is_null() {
        drop(Box::from_raw(wavelet));
    }
}

/// Analytic coefficient ⟨u, π(y,h)ψ⟩ for an object given as JSON, e.g.
/// `{"kind":"point_mass","x0":[0.1,-0.2]}`; h is given by its flat chart vector.
///
/// # Safety
/// Pointers must be valid; `y` for `dimension` reads, `chart` for `chart_len` reads.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ml_coefficient(
    group: *const MlGroup,
    wavelet: *const MlWavelet,
    object_json: *const c_char,
    y: *const f64,
    dimension: usize,
    chart: *const f64,
    chart_len: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_error: *mut f64,
) -> i32 {
    run(|| {
        let g = &handle(group)?.inner;
        let psi = &handle(wavelet)?.inner;
        let (re, im, err) = (out(out_re)?, out(out_im)?, out(out_error)?);
        let u: AnalysedObject = serde_json::from_str(text(object_json)?).map_err(|e| Fail(ML_ERR_CONFIG, e.to_string()))?;
        let h = g.from_chart_vector(slice(chart, chart_len)?)?;
        let q = coefficient_analytic(&u, psi, slice(y, dimension)?, &h, &CoefficientSettings::default())?;
        (*re, *im, *err) = (q.value.re, q.value.im, q.error);
        Ok(())
    })
}

/// Loads a TOML run configuration and builds its group and wavelet.
///
/// # Safety
/// `path` must be NUL-terminated; `out_config` writable.
#[no_mangle]
pub unsafe extern "C" fn ml_config_load(path: *const c_char, out_config: *mut *mut MlConfig) -> i32 {
    run(|| {
        let out_config = out(out_config)?;
        let inner = LoadedConfig::from_path(Path::new(text(path)?))?;
        let group = inner.config.build_group()?;
        let wavelet = inner.config.wavelet(&group)?;
        *out_config = Box::into_raw(Box::new(MlConfig { inner, group, wavelet }));
        Ok(())
    })
}

/// # Safety
/// `config` must come from `ml_config_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_config_free(config: *mut MlConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Classifies (x, ξ) for the configured signal. Writes an `ML_VERDICT_*`
/// code and the fitted decay slope (NaN when no fit was possible).
///
/// # Safety
/// `x` and `xi` must be valid for `dimension` reads.
#[no_mangle]
pub unsafe extern "C" fn ml_probe(config: *const MlConfig, x: *const f64, xi: *const f64, dimension: usize, out_verdict: *mut i32, out_slope: *mut f64) -> i32 {
    run(|| {
        let c = handle(config)?;
        let (verdict, slope) = (out(out_verdict)?, out(out_slope)?);
        let u = c.inner.config.signal.as_ref().ok_or_else(|| Fail(ML_ERR_CONFIG, "config has no [signal] section".into()))?;
        let report = classify_point(u, &c.wavelet, &c.group, slice(x, dimension)?, slice(xi, dimension)?, &c.inner.config.detector)?;
        *verdict = match report.verdict {
            Verdict::Regular => ML_VERDICT_REGULAR,
            Verdict::Singular => ML_VERDICT_SINGULAR,
            Verdict::Inconclusive => ML_VERDICT_INCONCLUSIVE,
        };
        *slope = report.fitted_slope.unwrap_or(f64::NAN);
        Ok(())
    })
}
