//! C interface to gradstft.
//!
//! Objects are opaque handles created by `gs_*_new`-style constructors and
//! released with the matching `gs_*_free`. Fallible calls return a
//! [`GsStatus`]; on failure [`gs_last_error`] holds a message for the
//! calling thread. No function unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gradstft::adaptive::{train_adaptive, AdaptiveConfig, WindowLayout};
use gradstft::signals::export::write_atomic;
use gradstft::signals::{export_spectrogram, load_wav, ExportFormat};
use gradstft::sparsity::{optimize_sigma, sparsity_loss_global_value};
use gradstft::{Error, GaussianStftConfig, Signal, Spectrogram};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Degenerate = 3,
    Numeric = 4,
    Io = 5,
    Wav = 6,
    Csv = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Spectrogram file format.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsFormat {
    Csv = 0,
    Pgm = 1,
}

/// How an optimisation run ended.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsFailure {
    None = 0,
    SigmaFloor = 1,
    SigmaCeiling = 2,
    NonFinite = 3,
    LayoutCollapsed = 4,
}

/// Opaque signal handle.
pub struct GsSignal(Signal);

/// Opaque spectrogram handle.
pub struct GsSpectrogram(Spectrogram);

/// Opaque window layout handle.
pub struct GsLayout(WindowLayout);

/// Outcome of `gs_optimize_sigma`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsSigmaFit {
    pub sigma: f64,
    /// Effective window length `floor(6 sigma)`.
    pub length: usize,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub failure: GsFailure,
}

/// One trapezoid: zero before `rise`, ramps to one at `flat`, one until
/// `fall`, zero from `end`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GsWindow {
    pub index: i64,
    pub rise: f64,
    pub flat: f64,
    pub fall: f64,
    pub end: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GsStatus {
    match e {
        Error::NonFinite(_) | Error::DivisionByZero | Error::LogDomain(_) | Error::SqrtDomain(_) => GsStatus::Numeric,
        Error::InvalidParameter { .. } | Error::Config(_) | Error::ForeignVar => GsStatus::InvalidArgument,
        Error::Degenerate(_) => GsStatus::Degenerate,
        Error::Wav(_) => GsStatus::Wav,
        Error::Csv { .. } => GsStatus::Csv,
        Error::Io { .. } => GsStatus::Io,
    }
}

fn failure_of(f: Option<gradstft::history::Failure>) -> GsFailure {
    use gradstft::history::Failure;
    match f {
        None => GsFailure::None,
        Some(Failure::SigmaFloor) => GsFailure::SigmaFloor,
        Some(Failure::SigmaCeiling) => GsFailure::SigmaCeiling,
        Some(Failure::NonFinite) => GsFailure::NonFinite,
        Some(Failure::LayoutCollapsed) => GsFailure::LayoutCollapsed,
    }
}

struct Fail(GsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(GsStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` samples into a new signal.
///
/// # Safety
/// `samples` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_signal_new(samples: *const f64, len: usize, sample_rate: f64, out: *mut *mut GsSignal) -> GsStatus {
    guard(|| {
        if samples.is_null() && len > 0 {
            return Err(null("samples"));
        }
        let data = if len == 0 { Vec::new() } else { std::slice::from_raw_parts(samples, len).to_vec() };
        put(out, GsSignal(Signal::new(data, sample_rate)?))
    })
}

/// Loads a mono or multichannel PCM16 WAV file, averaged to mono.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_signal_load_wav(path: *const c_char, out: *mut *mut GsSignal) -> GsStatus {
    guard(|| {
        let path = path_arg(path)?;
        put(out, GsSignal(load_wav(path)?))
    })
}

/// Number of samples, or 0 for NULL.
///
/// # Safety
/// `signal` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_signal_len(signal: *const GsSignal) -> usize {
    signal.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `signal` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_signal_free(signal: *mut GsSignal) {
    if !signal.is_null() {
        drop(Box::from_raw(signal));
    }
}

/// Gaussian-window STFT with window length `floor(6 sigma)` and half-window hop.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_stft(signal: *const GsSignal, sigma: f64, out: *mut *mut GsSpectrogram) -> GsStatus {
    guard(|| {
        let s = deref(signal, "signal")?;
        let spec = gradstft::stft::stft(&s.0, &GaussianStftConfig::new(sigma)?)?;
        put(out, GsSpectrogram(spec))
    })
}

/// Number of frames, or 0 for NULL.
///
/// # Safety
/// `spec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_spectrogram_frames(spec: *const GsSpectrogram) -> usize {
    spec.as_ref().map_or(0, |s| s.0.len())
}

/// Bin count of `frame`, or 0 when out of range.
///
/// # Safety
/// `spec` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_spectrogram_bins(spec: *const GsSpectrogram, frame: usize) -> usize {
    spec.as_ref()
        .and_then(|s| s.0.frames().get(frame))
        .map_or(0, Vec::len)
}

/// Writes the magnitudes of `frame` into `out`, which holds `capacity`
/// doubles.
///
/// # Safety
/// `spec` must be a live handle; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn gs_spectrogram_magnitudes(
    spec: *const GsSpectrogram,
    frame: usize,
    out: *mut f64,
    capacity: usize,
) -> GsStatus {
    guard(|| {
        let s = deref(spec, "spectrogram")?;
        if frame >= s.0.len() {
            return Err(Fail(GsStatus::InvalidArgument, format!("frame {frame} out of range")));
        }
        let mags = s.0.magnitudes(frame);
        if capacity < mags.len() {
            return Err(Fail(
                GsStatus::BufferTooSmall,
                format!("frame has {} bins, buffer holds {capacity}", mags.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, mags.len()).copy_from_slice(&mags);
        Ok(())
    })
}

/// Writes the spectrogram to `path`, replacing it atomically.
///
/// # Safety
/// `spec` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_spectrogram_write(spec: *const GsSpectrogram, path: *const c_char, format: GsFormat) -> GsStatus {
    guard(|| {
        let s = deref(spec, "spectrogram")?;
        let path = path_arg(path)?;
        let format = match format {
            GsFormat::Csv => ExportFormat::Csv,
            GsFormat::Pgm => ExportFormat::Pgm,
        };
        Ok(export_spectrogram(&s.0, path, format)?)
    })
}

/// # Safety
/// `spec` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_spectrogram_free(spec: *mut GsSpectrogram) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Global sparsity of the Gaussian STFT at `sigma`.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_sparsity(signal: *const GsSignal, sigma: f64, out: *mut f64) -> GsStatus {
    guard(|| {
        let s = deref(signal, "signal")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = sparsity_loss_global_value(&s.0, sigma)?;
        Ok(())
    })
}

/// Gradient ascent of the global sparsity in sigma from `sigma0`.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_optimize_sigma(
    signal: *const GsSignal,
    sigma0: f64,
    learning_rate: f64,
    max_iters: usize,
    out: *mut GsSigmaFit,
) -> GsStatus {
    guard(|| {
        let s = deref(signal, "signal")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let fit = optimize_sigma(&s.0, sigma0, learning_rate, max_iters)?;
        *out = GsSigmaFit {
            sigma: fit.sigma,
            length: fit.length(),
            objective: fit.objective,
            iterations: fit.history.iterations(),
            converged: fit.history.converged,
            failure: failure_of(fit.history.failure),
        };
        Ok(())
    })
}

/// Learns a trapezoid window layout with the default settings, overriding
/// the iteration count, learning rate and seed.
///
/// # Safety
/// `signal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_train_adaptive(
    signal: *const GsSignal,
    iterations: usize,
    learning_rate: f64,
    seed: u64,
    out: *mut *mut GsLayout,
) -> GsStatus {
    guard(|| {
        let s = deref(signal, "signal")?;
        let config = AdaptiveConfig {
            iterations,
            learning_rate,
            seed,
            snapshot_every: 0,
            ..AdaptiveConfig::default()
        };
        let fit = train_adaptive(&s.0, &config)?;
        put(out, GsLayout(fit.layout))
    })
}

/// Number of windows, or 0 for NULL.
///
/// # Safety
/// `layout` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gs_layout_len(layout: *const GsLayout) -> usize {
    layout.as_ref().map_or(0, |l| l.0.len())
}

/// # Safety
/// `layout` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gs_layout_window(layout: *const GsLayout, k: usize, out: *mut GsWindow) -> GsStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        let t = l
            .0
            .windows()
            .get(k)
            .ok_or_else(|| Fail(GsStatus::InvalidArgument, format!("window {k} out of range")))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = GsWindow {
            index: t.index,
            rise: t.rise,
            flat: t.flat,
            fall: t.fall,
            end: t.end,
        };
        Ok(())
    })
}

/// Writes the layout CSV (`i,x_i,y_i,length,center`) to `path`.
///
/// # Safety
/// `layout` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_layout_write_csv(layout: *const GsLayout, path: *const c_char) -> GsStatus {
    guard(|| {
        let l = deref(layout, "layout")?;
        let path = path_arg(path)?;
        Ok(write_atomic(&path, l.0.to_csv().as_bytes())?)
    })
}

/// # Safety
/// `layout` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gs_layout_free(layout: *mut GsLayout) {
    if !layout.is_null() {
        drop(Box::from_raw(layout));
    }
}
