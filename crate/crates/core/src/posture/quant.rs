//! 12-bit ADC model and raw symbol packing for accelerometer samples.

use super::{sample_time, AccelSample, PostureError, SAMPLE_RATE_HZ};
use crate::symbols::{pack_pairs, unpack_pairs, SymbolFrame};

pub const QUANT_BITS: u32 = 12;
/// Full scale is `[-RANGE_G, +RANGE_G)`.
pub const RANGE_G: f64 = 4.0;
pub const QUANT_STEP: f64 = 2.0 * RANGE_G / (1u32 << QUANT_BITS) as f64;
/// One second of 3-axis samples.
pub const VALUES_PER_RAW_FRAME: usize = 3 * SAMPLE_RATE_HZ;
pub const SYMBOLS_PER_RAW_FRAME: usize = VALUES_PER_RAW_FRAME / 2;

const CODE_MIN: i32 = -(1 << (QUANT_BITS - 1));
const CODE_MAX: i32 = (1 << (QUANT_BITS - 1)) - 1;
const FULL_SCALE: f64 = (1 << (QUANT_BITS - 1)) as f64;

/// Signed code for `a` g. The flag is true when `a` lay outside the range
/// (or was NaN) and had to be clamped.
pub fn quantize(a: f64) -> (i32, bool) {
    if a.is_nan() {
        return (0, true);
    }
    let out_of_range = !(-RANGE_G..=RANGE_G).contains(&a);
    let code = (a / QUANT_STEP).round().clamp(CODE_MIN as f64, CODE_MAX as f64) as i32;
    (code, out_of_range)
}

pub fn dequantize(code: i32) -> f64 {
    f64::from(code) * QUANT_STEP
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawEncoding {
    pub frames: Vec<SymbolFrame>,
    /// Values that were outside `±RANGE_G` and got clamped.
    pub clamped: usize,
    /// Trailing samples that did not fill a whole second.
    pub dropped_samples: usize,
}

/// Quantizes samples and packs each second (150 values, axis-interleaved
/// per sample) into a 75-symbol frame. Amplitudes are `code / 2048`, so the
/// frames are sent unnormalized.
pub fn encode_raw(samples: &[AccelSample]) -> RawEncoding {
    let mut clamped = 0;
    let frames = samples
        .chunks_exact(SAMPLE_RATE_HZ)
        .map(|second| {
            let values: Vec<f64> = second
                .iter()
                .flat_map(|s| s.a)
                .map(|a| {
                    let (code, clipped) = quantize(a);
                    clamped += usize::from(clipped);
                    f64::from(code) / FULL_SCALE
                })
                .collect();
            SymbolFrame::raw(pack_pairs(&values))
        })
        .collect();
    RawEncoding {
        frames,
        clamped,
        dropped_samples: samples.len() % SAMPLE_RATE_HZ,
    }
}

/// Inverse of [`encode_raw`] with nearest-code rounding of the received
/// amplitudes. Timestamps are regenerated on the 50 Hz grid.
pub fn decode_raw(frames: &[SymbolFrame]) -> Result<Vec<AccelSample>, PostureError> {
    let mut out = Vec::with_capacity(frames.len() * SAMPLE_RATE_HZ);
    for frame in frames {
        if frame.len() != SYMBOLS_PER_RAW_FRAME {
            return Err(PostureError::MalformedFrame(frame.len()));
        }
        let values = unpack_pairs(&frame.denormalized());
        for xyz in values.chunks_exact(3) {
            let a = [0, 1, 2].map(|c| {
                let code = (xyz[c] * FULL_SCALE).round().clamp(CODE_MIN as f64, CODE_MAX as f64);
                dequantize(code as i32)
            });
            out.push(AccelSample::new(sample_time(out.len()), a));
        }
    }
    Ok(out)
}
