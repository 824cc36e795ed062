//! C ABI over the `taskcomm` library.
//!
//! Every fallible call returns a [`TcStatus`]; on failure a message for the
//! calling thread is available from [`tc_last_error_message`]. Objects are
//! handed out as opaque pointers and must be released with the matching
//! `*_free` function. Panics never cross the boundary; they surface as
//! `TC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use num_complex::Complex64;

use taskcomm::channel::{transmit, ChannelConfig, ChannelError};
use taskcomm::codec::{
    classify, CodecError, CodecModel, Frame, VideoSegment, FRAMES_PER_SEGMENT, FRAME_BYTES, NUM_ACTIVITIES,
    SYMBOLS_PER_FRAME,
};
use taskcomm::controller::{AckPolicy, ControllerError, TransmissionController};
use taskcomm::overhead;
use taskcomm::posture::{
    gravity_feature, train_forest, AccelWindow, ForestConfig, PostureError, PostureLabel, RandomForest,
};
use taskcomm::symbols::SymbolFrame;
use taskcomm::weights::FormatError;

/// Complex symbols in one semantic feature frame.
pub const TC_SYMBOLS_PER_FRAME: usize = 4840;
/// Bytes in one 16-frame RGB segment (16 × 112 × 112 × 3).
pub const TC_SEGMENT_BYTES: usize = 602_112;
pub const TC_NUM_ACTIVITIES: usize = 5;
pub const TC_NUM_POSTURES: usize = 4;

const _: () = assert!(TC_SYMBOLS_PER_FRAME == SYMBOLS_PER_FRAME);
const _: () = assert!(TC_SEGMENT_BYTES == FRAMES_PER_SEGMENT * FRAME_BYTES);
const _: () = assert!(TC_NUM_ACTIVITIES == NUM_ACTIVITIES);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Bad magic, version, truncation or layout in a SEMW file.
    Format = 4,
    Shape = 5,
    Channel = 6,
    Controller = 7,
    Training = 8,
    Panic = 99,
}

/// Opaque transmission controller.
pub struct TcController(TransmissionController);
/// Opaque posture random forest.
pub struct TcForest(RandomForest);
/// Opaque video codec model.
pub struct TcCodec(CodecModel);

/// A validated postural transition. Posture codes: 0 lying, 1 sitting,
/// 2 standing, 3 walking.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TcAckEvent {
    pub t: usize,
    pub from: u32,
    pub to: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TcStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(TcStatus::NullPointer, format!("{what} is null"))
    }

    fn arg(msg: impl Into<String>) -> Self {
        Failure(TcStatus::InvalidArgument, msg.into())
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let status = match e {
            FormatError::Io(_) => TcStatus::Io,
            _ => TcStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

impl From<CodecError> for Failure {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Format(f) => f.into(),
            CodecError::Channel(c) => c.into(),
            CodecError::Shape(_) | CodecError::SymbolCount { .. } | CodecError::Tensor(_) => {
                Failure(TcStatus::Shape, e.to_string())
            }
            _ => Failure(TcStatus::Training, e.to_string()),
        }
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        Failure(TcStatus::Channel, e.to_string())
    }
}

impl From<ControllerError> for Failure {
    fn from(e: ControllerError) -> Self {
        Failure(TcStatus::Controller, e.to_string())
    }
}

impl From<PostureError> for Failure {
    fn from(e: PostureError) -> Self {
        match e {
            PostureError::Format(f) => f.into(),
            _ => Failure(TcStatus::InvalidArgument, e.to_string()),
        }
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `body`, records any failure for [`tc_last_error_message`] and
/// converts it to a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            TcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TcStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure::null("handle"))
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(Failure::null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure::arg("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

fn posture(code: u32) -> Result<PostureLabel, Failure> {
    PostureLabel::from_code(code as usize).ok_or_else(|| Failure::arg(format!("posture code {code} out of range")))
}

fn complex_from_interleaved(values: &[f64]) -> Vec<Complex64> {
    values.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

fn write_interleaved(symbols: &[Complex64], out: &mut [f64]) {
    for (dst, s) in out.chunks_exact_mut(2).zip(symbols) {
        dst[0] = s.re;
        dst[1] = s.im;
    }
}

fn segment_from_bytes(pixels: &[u8]) -> Result<VideoSegment, Failure> {
    if pixels.len() != TC_SEGMENT_BYTES {
        return Err(Failure(
            TcStatus::Shape,
            format!("segment has {} bytes, expected {TC_SEGMENT_BYTES}", pixels.len()),
        ));
    }
    let frames = pixels
        .chunks_exact(FRAME_BYTES)
        .map(|f| Frame::new(f.to_vec()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VideoSegment::new(0, frames)?)
}

/// Message describing the last failed call on this thread, or NULL if the
/// last call succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn tc_status_name(status: TcStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TcStatus::Ok => c"ok",
        TcStatus::NullPointer => c"null pointer",
        TcStatus::InvalidArgument => c"invalid argument",
        TcStatus::Io => c"i/o error",
        TcStatus::Format => c"format error",
        TcStatus::Shape => c"shape error",
        TcStatus::Channel => c"channel error",
        TcStatus::Controller => c"controller error",
        TcStatus::Training => c"training error",
        TcStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Symbols to stream every segment: `l · n_f` (saturating).
#[no_mangle]
pub extern "C" fn tc_overhead_c_sc(l: u64, n_f: u64) -> u64 {
    overhead::c_sc(l, n_f)
}

/// Symbols to send only ACK-triggered segments: `l · n_t` (saturating).
#[no_mangle]
pub extern "C" fn tc_overhead_c_tc(l: u64, n_t: u64) -> u64 {
    overhead::c_tc(l, n_t)
}

/// Channel uses for `n_b` bits at capacity `log2(1 + SNR)`.
#[no_mangle]
pub extern "C" fn tc_overhead_c_mpeg(n_b: u64, snr_db: f64) -> f64 {
    overhead::c_mpeg(n_b, snr_db)
}

/// `1 − c_tc / c_sc`; fails when `c_sc` is zero.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tc_overhead_reduction(c_tc: u64, c_sc: u64, out: *mut f64) -> TcStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        *out = overhead::reduction(c_tc, c_sc).ok_or_else(|| Failure::arg("c_sc is zero"))?;
        Ok(())
    })
}

/// Mean cosine between each column of a window and the default gravity
/// direction. `xyz` holds `n_columns` interleaved `(x, y, z)` triples.
///
/// # Safety
/// `xyz` must point to `3 · n_columns` doubles; `out_u` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_gravity_feature(xyz: *const f64, n_columns: usize, out_u: *mut f64) -> TcStatus {
    guard(|| {
        let len = n_columns.checked_mul(3).ok_or_else(|| Failure::arg("n_columns too large"))?;
        let values = slice(xyz, len, "xyz")?;
        let out_u = out(out_u, "out_u")?;
        let window = AccelWindow {
            index: 0,
            columns: values.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        };
        *out_u = gravity_feature(&window)?.u;
        Ok(())
    })
}

/// Sends `n_symbols` interleaved `(re, im)` symbols through an AWGN channel
/// at `snr_db` relative to their average power. Pass `INFINITY` for a
/// noiseless link. `out` may alias `symbols`.
///
/// # Safety
/// `symbols` and `out` must each hold `2 · n_symbols` doubles.
#[no_mangle]
pub unsafe extern "C" fn tc_channel_transmit(
    symbols: *const f64,
    n_symbols: usize,
    snr_db: f64,
    seed: u64,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let len = n_symbols.checked_mul(2).ok_or_else(|| Failure::arg("n_symbols too large"))?;
        let tx = SymbolFrame::raw(complex_from_interleaved(slice(symbols, len, "symbols")?));
        let rx = transmit(&tx, &ChannelConfig::new(snr_db, seed))?;
        write_interleaved(rx.symbols(), slice_mut(out, len, "out")?);
        Ok(())
    })
}

/// Creates a controller that accepts a posture change after
/// `validation_windows` consecutive windows and broadcasts to all cameras.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tc_controller_new(validation_windows: usize, out: *mut *mut TcController) -> TcStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let policy = AckPolicy {
            validation_windows,
            ..AckPolicy::default()
        };
        *out = Box::into_raw(Box::new(TcController(TransmissionController::new(policy)?)));
        Ok(())
    })
}

/// Feeds the posture classified for window `window_index`. Window indices
/// must be consecutive. `*fired` is set to whether an ACK was issued and,
/// if so, `*event` describes it.
///
/// # Safety
/// `controller` must come from [`tc_controller_new`]; `event` and `fired`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_controller_observe(
    controller: *mut TcController,
    posture_code: u32,
    window_index: usize,
    event: *mut TcAckEvent,
    fired: *mut bool,
) -> TcStatus {
    guard(|| {
        let c = controller.as_mut().ok_or_else(|| Failure::null("controller"))?;
        let event = out(event, "event")?;
        let fired = out(fired, "fired")?;
        match c.0.observe(posture(posture_code)?, window_index)? {
            Some(e) => {
                *event = TcAckEvent {
                    t: e.t,
                    from: e.from.code() as u32,
                    to: e.to.code() as u32,
                };
                *fired = true;
            }
            None => *fired = false,
        }
        Ok(())
    })
}

/// # Safety
/// `controller` must come from [`tc_controller_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn tc_controller_free(controller: *mut TcController) {
    if !controller.is_null() {
        drop(Box::from_raw(controller));
    }
}

/// Fits a forest on `n` labelled orientation features.
///
/// # Safety
/// `u` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_forest_train(
    u: *const f64,
    labels: *const u32,
    n: usize,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
    out: *mut *mut TcForest,
) -> TcStatus {
    guard(|| {
        let u = slice(u, n, "u")?;
        let labels = slice(labels, n, "labels")?;
        let out = self::out(out, "out")?;
        let data = u
            .iter()
            .zip(labels)
            .map(|(&x, &l)| Ok((x, posture(l)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let config = ForestConfig {
            n_trees,
            max_depth,
            seed,
        };
        *out = Box::into_raw(Box::new(TcForest(train_forest(&data, &config)?)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_forest_load(path: *const c_char, out: *mut *mut TcForest) -> TcStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = self::out(out, "out")?;
        *out = Box::into_raw(Box::new(TcForest(RandomForest::load(path)?)));
        Ok(())
    })
}

/// # Safety
/// `forest` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tc_forest_save(forest: *const TcForest, path: *const c_char) -> TcStatus {
    guard(|| {
        handle(forest)?.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Plurality vote of the forest for feature `u`, as a posture code.
///
/// # Safety
/// `forest` must be a live handle; `out_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_forest_classify(forest: *const TcForest, u: f64, out_code: *mut u32) -> TcStatus {
    guard(|| {
        let forest = handle(forest)?;
        *out(out_code, "out_code")? = forest.0.classify(u).code() as u32;
        Ok(())
    })
}

/// # Safety
/// `forest` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn tc_forest_free(forest: *mut TcForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// Untrained codec with seeded weights.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_codec_init(seed: u64, out: *mut *mut TcCodec) -> TcStatus {
    guard(|| {
        *self::out(out, "out")? = Box::into_raw(Box::new(TcCodec(CodecModel::init(seed))));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_codec_load(path: *const c_char, out: *mut *mut TcCodec) -> TcStatus {
    guard(|| {
        let path = path_arg(path)?;
        let out = self::out(out, "out")?;
        *out = Box::into_raw(Box::new(TcCodec(CodecModel::load(path)?)));
        Ok(())
    })
}

/// Encodes one segment (`TC_SEGMENT_BYTES` bytes: 16 frames of 112×112
/// interleaved RGB) into `TC_SYMBOLS_PER_FRAME` unit-power symbols written
/// as interleaved `(re, im)` pairs, plus the normalization gain.
///
/// # Safety
/// `pixels` must hold `len` bytes, `out_symbols` `2 · TC_SYMBOLS_PER_FRAME`
/// doubles; `out_gain` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_codec_encode(
    codec: *const TcCodec,
    pixels: *const u8,
    len: usize,
    out_symbols: *mut f64,
    out_gain: *mut f64,
) -> TcStatus {
    guard(|| {
        let codec = handle(codec)?;
        let segment = segment_from_bytes(slice(pixels, len, "pixels")?)?;
        let out_symbols = slice_mut(out_symbols, 2 * TC_SYMBOLS_PER_FRAME, "out_symbols")?;
        let out_gain = out(out_gain, "out_gain")?;
        let frame = codec.0.encode(&segment)?;
        write_interleaved(frame.symbols(), out_symbols);
        *out_gain = frame.gain();
        Ok(())
    })
}

/// Decodes received symbols (interleaved, with the transmitter's gain) into
/// five activity logits and the winning activity code (0 sleeping,
/// 1 resting, 2 dress-up, 3 eating, 4 calling).
///
/// # Safety
/// `symbols` must hold `2 · n_symbols` doubles, `out_logits`
/// `TC_NUM_ACTIVITIES` doubles; `out_activity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tc_codec_decode(
    codec: *const TcCodec,
    symbols: *const f64,
    n_symbols: usize,
    gain: f64,
    out_logits: *mut f64,
    out_activity: *mut u32,
) -> TcStatus {
    guard(|| {
        let codec = handle(codec)?;
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Failure::arg(format!("gain must be positive, got {gain}")));
        }
        let len = n_symbols.checked_mul(2).ok_or_else(|| Failure::arg("n_symbols too large"))?;
        let frame = SymbolFrame::from_parts(complex_from_interleaved(slice(symbols, len, "symbols")?), gain);
        let out_logits = slice_mut(out_logits, TC_NUM_ACTIVITIES, "out_logits")?;
        let out_activity = out(out_activity, "out_activity")?;
        let decoded = codec.0.decode(&frame)?;
        out_logits.copy_from_slice(decoded.logits.data());
        *out_activity = classify(&decoded.logits).code() as u32;
        Ok(())
    })
}

/// # Safety
/// `codec` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn tc_codec_free(codec: *mut TcCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}
