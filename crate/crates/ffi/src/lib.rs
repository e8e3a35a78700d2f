//! C ABI over `pleader`.
//!
//! Objects cross the boundary as opaque handles created by `pld_*_new`-style
//! constructors and released with the matching `pld_*_free`. Every fallible
//! call returns a [`PldStatus`]; on failure a message is kept per thread and
//! can be read with [`pld_last_error_message`]. Panics never unwind into the
//! caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pleader::cwt::{cwt, SampledSignal, ScaleGrid, TimeScalePlane, UniformGrid};
use pleader::exponent::estimate_p_exponent;
use pleader::leaders::leader_field;
use pleader::pulse::{evaluate, sample_process, PulseIndex, PulseProcessParams, PulseSet};
use pleader::spectrum::{admissible_p_range, theoretical_holder_spectrum, theoretical_p_spectrum, Dim};
use pleader::wavelet::{admissibility_constant, build_even_wavelet, AnalyzingWavelet, WaveletShape};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PldStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    Numerical = -3,
    Panic = -255,
}

/// Analyzing wavelet.
pub struct PldWavelet(AnalyzingWavelet);

/// Time-scale plane, row-major with scales decreasing down the rows.
pub struct PldPlane(TimeScalePlane);

/// One realization of the pulse process with its lookup index.
pub struct PldPulses {
    params: PulseProcessParams,
    set: PulseSet,
    index: PulseIndex,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(message: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(message.bytes().filter(|&b| b != 0));
    });
}

struct Failure(PldStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(PldStatus::NullPointer, format!("{what} is null"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        Failure(PldStatus::InvalidArgument, message.into())
    }
}

impl From<pleader::error::Error> for Failure {
    fn from(e: pleader::error::Error) -> Self {
        let status = match e {
            pleader::error::Error::Wavelet(_) => PldStatus::Numerical,
            _ => PldStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_from_domain {
    ($($t:ty => $status:expr),* $(,)?) => {
        $(impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure($status, e.to_string())
            }
        })*
    };
}

impl_from_domain! {
    pleader::error::WaveletError => PldStatus::Numerical,
    pleader::error::AnalysisError => PldStatus::InvalidArgument,
    pleader::error::ModelError => PldStatus::InvalidArgument,
}

/// Runs `body`, turning errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> PldStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            PldStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {message}"));
            PldStatus::Panic
        }
    }
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| Failure::null(what))
}

fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: non-null handles come from this library and are still live.
    unsafe { p.as_ref() }.ok_or_else(|| Failure::null(what))
}

fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    // SAFETY: the caller guarantees `len` writable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

fn boxed<T>(value: T, slot: *mut *mut T, what: &str) -> Result<(), Failure> {
    let slot = out(slot, what)?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` was produced by `Box::into_raw` in this library and is
        // released once.
        drop(unsafe { Box::from_raw(p) });
    }
}

fn dim_value(d: Dim) -> f64 {
    d.finite().unwrap_or(f64::NEG_INFINITY)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pld_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Length in bytes of this thread's last error message, without the NUL.
#[no_mangle]
pub extern "C" fn pld_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().len())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `capacity - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pld_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = e.len().min(capacity - 1);
            // SAFETY: `buf` holds `capacity > n` bytes.
            unsafe {
                ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        e.len()
    })
}

// ---------------------------------------------------------------- wavelets

/// Even wavelet on `[-1, 1]` with `vanishing_moments` vanishing moments and
/// `smoothness` continuous derivatives.
///
/// # Safety
/// `out` must be null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn pld_wavelet_build(vanishing_moments: u32, smoothness: u32, out: *mut *mut PldWavelet) -> PldStatus {
    guard(|| {
        let w = build_even_wavelet(vanishing_moments, smoothness)?;
        boxed(PldWavelet(w), out, "out")
    })
}

/// # Safety
/// `w` must be null or a handle from `pld_wavelet_build` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pld_wavelet_free(w: *mut PldWavelet) {
    free(w)
}

/// # Safety
/// `w` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_wavelet_eval(w: *const PldWavelet, x: f64, value: *mut f64) -> PldStatus {
    guard(|| {
        *out(value, "value")? = handle(w, "wavelet")?.0.eval(x);
        Ok(())
    })
}

/// `∫ x^m ψ(x) dx`, exact.
///
/// # Safety
/// `w` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_wavelet_moment(w: *const PldWavelet, m: u32, value: *mut f64) -> PldStatus {
    guard(|| {
        *out(value, "value")? = handle(w, "wavelet")?.0.moment(m);
        Ok(())
    })
}

/// The admissibility constant `c_ψ`.
///
/// # Safety
/// `w` must be a live handle and `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_wavelet_admissibility(w: *const PldWavelet, value: *mut f64) -> PldStatus {
    guard(|| {
        *out(value, "value")? = admissibility_constant(&handle(w, "wavelet")?.0)?.c_psi;
        Ok(())
    })
}

// ---------------------------------------------------------------- transform

/// Transform of `len` samples `f(origin + i step)` on dyadic scales from
/// `a_max` down to `a_min` and on `positions_len` positions
/// `positions_start + k positions_step`.
///
/// # Safety
/// `samples` must hold `len` doubles; `w` must be a live handle; `out` must be
/// a valid handle slot.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pld_cwt(
    w: *const PldWavelet,
    samples: *const f64,
    len: usize,
    origin: f64,
    step: f64,
    a_max: f64,
    a_min: f64,
    scales_per_octave: u32,
    positions_start: f64,
    positions_step: f64,
    positions_len: usize,
    out: *mut *mut PldPlane,
) -> PldStatus {
    guard(|| {
        let w = handle(w, "wavelet")?;
        let f = SampledSignal::new(origin, step, slice(samples, len, "samples")?.to_vec())?;
        let grid = ScaleGrid::dyadic(a_max, a_min, scales_per_octave)?;
        let positions = UniformGrid::new(positions_start, positions_step, positions_len)?;
        let plane = cwt(&f, &w.0, &grid, &positions)?;
        boxed(PldPlane(plane), out, "out")
    })
}

/// # Safety
/// `plane` must be null or a handle from `pld_cwt` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pld_plane_free(plane: *mut PldPlane) {
    free(plane)
}

/// Number of scales (rows) and positions (columns).
///
/// # Safety
/// `plane` must be a live handle; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pld_plane_shape(plane: *const PldPlane, rows: *mut usize, cols: *mut usize) -> PldStatus {
    guard(|| {
        let p = &handle(plane, "plane")?.0;
        *out(rows, "rows")? = p.scale_grid().len();
        *out(cols, "cols")? = p.positions().len;
        Ok(())
    })
}

/// Copies the scales (decreasing) into `buf`, which must hold `rows` doubles.
///
/// # Safety
/// `plane` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pld_plane_scales(plane: *const PldPlane, buf: *mut f64, capacity: usize) -> PldStatus {
    guard(|| {
        let scales = handle(plane, "plane")?.0.scale_grid().scales();
        if capacity < scales.len() {
            return Err(Failure::invalid(format!("buffer holds {capacity} values, need {}", scales.len())));
        }
        slice_mut(buf, scales.len(), "buf")?.copy_from_slice(scales);
        Ok(())
    })
}

/// Copies the plane row-major into `buf`, which must hold `rows * cols`
/// doubles. Entries whose wavelet support leaves the signal are NaN.
///
/// # Safety
/// `plane` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pld_plane_values(plane: *const PldPlane, buf: *mut f64, capacity: usize) -> PldStatus {
    guard(|| {
        let p = &handle(plane, "plane")?.0;
        let (rows, cols) = (p.scale_grid().len(), p.positions().len);
        if capacity < rows * cols {
            return Err(Failure::invalid(format!("buffer holds {capacity} values, need {}", rows * cols)));
        }
        let dst = slice_mut(buf, rows * cols, "buf")?;
        for i in 0..rows {
            for (j, (v, ok)) in p.row(i).iter().zip(p.row_valid(i)).enumerate() {
                dst[i * cols + j] = if *ok { *v } else { f64::NAN };
            }
        }
        Ok(())
    })
}

/// p-exponent at `x0` (a plane position) from a log-log fit of the p-leaders
/// over `[scale_lo, scale_hi]`; `p = INFINITY` uses sup-leaders. A signal that
/// vanishes near `x0` yields `INFINITY`.
///
/// # Safety
/// `plane` must be a live handle; `value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_p_exponent(
    plane: *const PldPlane,
    p: f64,
    x0: f64,
    scale_lo: f64,
    scale_hi: f64,
    value: *mut f64,
) -> PldStatus {
    guard(|| {
        let plane = &handle(plane, "plane")?.0;
        let at = UniformGrid::new(x0, 1.0, 1)?;
        let leaders = leader_field(plane, p, scale_lo, scale_hi, &at)?;
        *out(value, "value")? = estimate_p_exponent(&leaders, x0, (scale_lo, scale_hi))?.value();
        Ok(())
    })
}

// ---------------------------------------------------------------- pulses

/// Samples a pulse process with the default pulse shape.
///
/// # Safety
/// `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn pld_pulses_simulate(
    alpha: f64,
    eta: f64,
    j_max: u32,
    seed: u64,
    out: *mut *mut PldPulses,
) -> PldStatus {
    guard(|| {
        let params = PulseProcessParams::new(alpha, eta, j_max, seed)?;
        let set = sample_process(&params);
        let index = PulseIndex::new(&set);
        boxed(PldPulses { params, set, index }, out, "out")
    })
}

/// # Safety
/// `pulses` must be null or a handle from `pld_pulses_simulate` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pld_pulses_free(pulses: *mut PldPulses) {
    free(pulses)
}

/// # Safety
/// `pulses` must be a live handle; `count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_pulses_count(pulses: *const PldPulses, count: *mut usize) -> PldStatus {
    guard(|| {
        *out(count, "count")? = handle(pulses, "pulses")?.set.len();
        Ok(())
    })
}

/// Copies the `(C_n, B_n, X_n)` triples into `buf` (3 doubles per pulse).
///
/// # Safety
/// `pulses` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pld_pulses_triples(pulses: *const PldPulses, buf: *mut f64, capacity: usize) -> PldStatus {
    guard(|| {
        let set = &handle(pulses, "pulses")?.set;
        let need = 3 * set.len();
        if capacity < need {
            return Err(Failure::invalid(format!("buffer holds {capacity} values, need {need}")));
        }
        let dst = slice_mut(buf, need, "buf")?;
        for (chunk, p) in dst.chunks_exact_mut(3).zip(&set.pulses) {
            chunk.copy_from_slice(&[p.c, p.b, p.x]);
        }
        Ok(())
    })
}

/// Path values at the `len` points in `xs`, written to `values`.
///
/// # Safety
/// `pulses` must be a live handle; `xs` and `values` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pld_pulses_evaluate(
    pulses: *const PldPulses,
    xs: *const f64,
    values: *mut f64,
    len: usize,
) -> PldStatus {
    guard(|| {
        let h = handle(pulses, "pulses")?;
        let xs = slice(xs, len, "xs")?;
        let dst = slice_mut(values, len, "values")?;
        for (v, &x) in dst.iter_mut().zip(xs) {
            *v = evaluate(&h.params, &h.index, x);
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- spectra

/// `D(h) = h/α` on `[αη, α]`, `-INFINITY` elsewhere.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_holder_spectrum(alpha: f64, eta: f64, h: f64, value: *mut f64) -> PldStatus {
    guard(|| {
        *out(value, "value")? = dim_value(theoretical_holder_spectrum(alpha, eta, h)?);
        Ok(())
    })
}

/// p-spectrum for `α < 0`, `-INFINITY` outside its support.
///
/// # Safety
/// `value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pld_p_spectrum(alpha: f64, eta: f64, p: f64, h: f64, value: *mut f64) -> PldStatus {
    guard(|| {
        *out(value, "value")? = dim_value(theoretical_p_spectrum(alpha, eta, p, h)?);
        Ok(())
    })
}

/// Open interval of `p` for which the p-spectrum formula holds.
///
/// # Safety
/// `lo` and `hi` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn pld_admissible_p_range(alpha: f64, eta: f64, lo: *mut f64, hi: *mut f64) -> PldStatus {
    guard(|| {
        let (l, h) = admissible_p_range(alpha, eta)?;
        *out(lo, "lo")? = l;
        *out(hi, "hi")? = h;
        Ok(())
    })
}
