//! C ABI over the `qadam` core: an opaque optimizer handle, the wire codec,
//! and status-code error reporting.
//!
//! Conventions:
//! - Every fallible function returns a [`QadamStatus`]; `QADAM_STATUS_OK` (0)
//!   means success.
//! - On failure a thread-local message is set; fetch it with
//!   [`qadam_last_error_message`].
//! - Out-parameters are written only on success.
//! - Buffers follow the two-call pattern: pass a null output buffer to query
//!   the required size, then call again with a buffer at least that large.
//! - Handles returned by `*_new` must be released with the matching `*_free`;
//!   `free` on a null pointer is a no-op.
//!
//! The generated header lands in `include/qadam.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use qadam::optimizer::{Hyperparams, QuantizedAdam, Schedule};
use qadam::quantize::Quantizer;
use qadam::tensor::Tensor;
use qadam::{wire, Error};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QadamStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Invalid configuration (bad hyperparameter, schedule, or quantizer).
    Config = 3,
    /// Numeric domain error (non-finite input, division by zero).
    Domain = 4,
    /// Length mismatch between buffers.
    Shape = 5,
    /// A recorded trace failed verification.
    Verification = 6,
    /// I/O failure.
    Io = 7,
    /// Malformed wire frame.
    Format = 8,
    /// Frame or payload failed integrity checks.
    Corruption = 9,
    /// Parameter-server protocol violation.
    Protocol = 10,
    /// The output buffer was too small; re-query the required size.
    BufferTooSmall = 11,
    /// An internal panic was caught at the FFI boundary.
    Panic = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> QadamStatus {
    match err {
        Error::Config(_) => QadamStatus::Config,
        Error::Domain(_) => QadamStatus::Domain,
        Error::Shape(_) => QadamStatus::Shape,
        Error::Verification(_) => QadamStatus::Verification,
        Error::Io(_) | Error::Json(_) => QadamStatus::Io,
        Error::Format(_) => QadamStatus::Format,
        Error::Corruption(_) => QadamStatus::Corruption,
        Error::Protocol(_) => QadamStatus::Protocol,
    }
}

fn fail(err: Error) -> QadamStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs `body` with panic containment; a caught panic becomes `Panic`.
fn guarded(body: impl FnOnce() -> QadamStatus) -> QadamStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic caught at FFI boundary");
            QadamStatus::Panic
        }
    }
}

/// Copies the message for the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to fit) and returns the full message length in
/// bytes, excluding the terminator. Call with a null `buf` to query the
/// length. A zero return means no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to at least `buf_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qadam_last_error_message(buf: *mut c_char, buf_len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && buf_len > 0 {
            let n = msg.len().min(buf_len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

unsafe fn parse_c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, QadamStatus> {
    if ptr.is_null() {
        set_error(format!("{what} must not be null"));
        return Err(QadamStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        QadamStatus::InvalidUtf8
    })
}

// ---------------------------------------------------------------------------
// Optimizer handle
// ---------------------------------------------------------------------------

/// Opaque single-machine quantized-Adam optimizer.
pub struct QadamOptimizer {
    inner: QuantizedAdam,
    dim: usize,
}

/// Creates an optimizer handle.
///
/// `schedule` is one of `"decay_sqrt_t"`, `"fixed_horizon:T"`,
/// `"epoch_halving:P"`; `quantizer` is `"fp"`, `"ternary"`, or a bit width
/// (`"2"` to `"16"`). `error_feedback` nonzero keeps the residual between
/// steps. On success `*out` owns the handle.
///
/// # Safety
/// `schedule` and `quantizer` must be NUL-terminated strings; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qadam_optimizer_new(
    dim: usize,
    alpha: f64,
    beta: f64,
    theta: f64,
    epsilon: f64,
    schedule: *const c_char,
    quantizer: *const c_char,
    error_feedback: i32,
    out: *mut *mut QadamOptimizer,
) -> QadamStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out must not be null");
            return QadamStatus::NullPointer;
        }
        let schedule = match parse_c_str(schedule, "schedule") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let quantizer = match parse_c_str(quantizer, "quantizer") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let schedule = match Schedule::from_str(schedule) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let quantizer = match Quantizer::from_str(quantizer) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        let hyperparams = Hyperparams {
            alpha,
            beta,
            theta,
            epsilon,
            schedule,
        };
        match QuantizedAdam::new(dim, hyperparams, quantizer, error_feedback != 0) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QadamOptimizer { inner, dim }));
                QadamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// One optimizer step: reads the iterate `x` and gradient `g` (both `len`
/// doubles) and writes the next iterate to `x_next` (also `len` doubles;
/// in-place `x_next == x` is allowed). `len` must equal the handle's
/// dimension.
///
/// # Safety
/// `opt` must be a live handle from `qadam_optimizer_new`; the three buffers
/// must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qadam_optimizer_step(
    opt: *mut QadamOptimizer,
    x: *const f64,
    g: *const f64,
    len: usize,
    x_next: *mut f64,
) -> QadamStatus {
    guarded(|| {
        if opt.is_null() || x.is_null() || g.is_null() || x_next.is_null() {
            set_error("opt, x, g, and x_next must not be null");
            return QadamStatus::NullPointer;
        }
        let opt = &mut *opt;
        if len != opt.dim {
            set_error(format!("len {len} does not match optimizer dimension {}", opt.dim));
            return QadamStatus::Shape;
        }
        let xt = match Tensor::from_vec(std::slice::from_raw_parts(x, len).to_vec()) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let gt = match Tensor::from_vec(std::slice::from_raw_parts(g, len).to_vec()) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        match opt.inner.step(&xt, &gt) {
            Ok((next, _)) => {
                std::ptr::copy_nonoverlapping(next.as_slice().as_ptr(), x_next, len);
                QadamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes the l2 norm of the current error-feedback residual to `out`.
///
/// # Safety
/// `opt` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qadam_optimizer_error_norm(
    opt: *const QadamOptimizer,
    out: *mut f64,
) -> QadamStatus {
    guarded(|| {
        if opt.is_null() || out.is_null() {
            set_error("opt and out must not be null");
            return QadamStatus::NullPointer;
        }
        *out = (*opt).inner.state.e.norm(qadam::tensor::Norm::L2);
        QadamStatus::Ok
    })
}

/// Releases an optimizer handle. Null is a no-op.
///
/// # Safety
/// `opt` must be null or a handle from `qadam_optimizer_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qadam_optimizer_free(opt: *mut QadamOptimizer) {
    if !opt.is_null() {
        drop(Box::from_raw(opt));
    }
}

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

/// Total wire-frame size in bits for `len` coordinates at bit width `k`.
#[no_mangle]
pub extern "C" fn qadam_frame_bits(len: usize, k: u8) -> u64 {
    wire::bits_for_message(len, k)
}

/// Quantizes `x` (`len` doubles) on the k-bit midpoint grid and encodes the
/// wire frame into `buf`. Writes the frame size in bytes to `*written`. Pass
/// a null `buf` to query the size without encoding.
///
/// # Safety
/// `x` must hold `len` doubles; `buf` must be null or hold `buf_len` bytes;
/// `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qadam_quantize_encode(
    x: *const f64,
    len: usize,
    k: u8,
    buf: *mut u8,
    buf_len: usize,
    written: *mut usize,
) -> QadamStatus {
    guarded(|| {
        if x.is_null() && len > 0 {
            set_error("x must not be null");
            return QadamStatus::NullPointer;
        }
        if written.is_null() {
            set_error("written must not be null");
            return QadamStatus::NullPointer;
        }
        let needed = wire::frame_bytes(len, k);
        if buf.is_null() {
            *written = needed;
            return QadamStatus::Ok;
        }
        if buf_len < needed {
            set_error(format!("frame needs {needed} bytes, buffer holds {buf_len}"));
            return QadamStatus::BufferTooSmall;
        }
        let data = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(x, len).to_vec()
        };
        let xt = match Tensor::from_vec(data) {
            Ok(t) => t,
            Err(e) => return fail(e),
        };
        let q = match qadam::quantize::quantize_midpoint(&xt, k) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        match wire::encode(&q) {
            Ok(frame) => {
                std::ptr::copy_nonoverlapping(frame.as_ptr(), buf, frame.len());
                *written = frame.len();
                QadamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Decodes a wire frame and writes the dequantized coordinates to `out`.
/// Writes the coordinate count to `*written`. Pass a null `out` to query the
/// count without decoding into a buffer.
///
/// # Safety
/// `frame` must hold `frame_len` bytes; `out` must be null or hold `out_len`
/// doubles; `written` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qadam_decode_dequantize(
    frame: *const u8,
    frame_len: usize,
    out: *mut f64,
    out_len: usize,
    written: *mut usize,
) -> QadamStatus {
    guarded(|| {
        if frame.is_null() || written.is_null() {
            set_error("frame and written must not be null");
            return QadamStatus::NullPointer;
        }
        let bytes = std::slice::from_raw_parts(frame, frame_len);
        let q = match wire::decode(bytes) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        if out.is_null() {
            *written = q.len();
            return QadamStatus::Ok;
        }
        if out_len < q.len() {
            set_error(format!("frame holds {} coordinates, buffer holds {out_len}", q.len()));
            return QadamStatus::BufferTooSmall;
        }
        match qadam::quantize::dequantize(&q) {
            Ok(t) => {
                std::ptr::copy_nonoverlapping(t.as_slice().as_ptr(), out, t.len());
                *written = t.len();
                QadamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
