use crate::tensor::Tensor;

use super::CodecError;

pub const FRAME_SIZE: usize = 112;
pub const COLOR_CHANNELS: usize = 3;
pub const FRAMES_PER_SEGMENT: usize = 16;
/// Non-overlapping windows: 29,640 frames give exactly 1,852 segments.
pub const DEFAULT_STRIDE: usize = 16;
pub const FRAME_BYTES: usize = FRAME_SIZE * FRAME_SIZE * COLOR_CHANNELS;

/// One 112×112 RGB frame, 8 bits per channel, row-major with interleaved
/// channels (`(y·W + x)·3 + c`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(pixels: Vec<u8>) -> Result<Self, CodecError> {
        if pixels.len() != FRAME_BYTES {
            return Err(CodecError::Shape(format!(
                "frame has {} bytes, expected {FRAME_BYTES}",
                pixels.len()
            )));
        }
        Ok(Self { pixels })
    }

    pub fn blank() -> Self {
        Self {
            pixels: vec![0; FRAME_BYTES],
        }
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }
}

/// Sixteen consecutive frames cut from a camera stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSegment {
    pub index: usize,
    frames: Vec<Frame>,
}

impl VideoSegment {
    pub fn new(index: usize, frames: Vec<Frame>) -> Result<Self, CodecError> {
        if frames.len() != FRAMES_PER_SEGMENT {
            return Err(CodecError::Shape(format!(
                "segment needs {FRAMES_PER_SEGMENT} frames, got {}",
                frames.len()
            )));
        }
        Ok(Self { index, frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// Channels-first `[3, 16, 112, 112]` tensor with values in [0, 1].
    pub fn tensor(&self) -> Tensor {
        let plane = FRAME_SIZE * FRAME_SIZE;
        let mut data = vec![0.0; COLOR_CHANNELS * FRAMES_PER_SEGMENT * plane];
        for (t, frame) in self.frames.iter().enumerate() {
            for (p, rgb) in frame.pixels.chunks_exact(COLOR_CHANNELS).enumerate() {
                for (c, &v) in rgb.iter().enumerate() {
                    data[(c * FRAMES_PER_SEGMENT + t) * plane + p] = f64::from(v) / 255.0;
                }
            }
        }
        Tensor::new(
            vec![COLOR_CHANNELS, FRAMES_PER_SEGMENT, FRAME_SIZE, FRAME_SIZE],
            data,
        )
        .expect("segment tensor dims are fixed")
    }
}

/// Number of full windows a stream of `total` frames yields at `stride`.
pub fn segment_count(total: usize, stride: usize) -> usize {
    if stride == 0 || total < FRAMES_PER_SEGMENT {
        0
    } else {
        (total - FRAMES_PER_SEGMENT) / stride + 1
    }
}

/// Cuts a frame stream into windows `[j·stride, j·stride + 16)` for as long
/// as a full window fits.
pub fn sample_segments(frames: &[Frame], stride: usize) -> Result<Vec<VideoSegment>, CodecError> {
    if stride == 0 {
        return Err(CodecError::Shape("stride must be >= 1".into()));
    }
    (0..segment_count(frames.len(), stride))
        .map(|j| {
            let start = j * stride;
            VideoSegment::new(j, frames[start..start + FRAMES_PER_SEGMENT].to_vec())
        })
        .collect()
}
