//! Synthetic camera video. The occupied room shows an activity-specific
//! coloured blob circling a fixed anchor; empty rooms show only their
//! background. Pixel noise is Gaussian, clamped and quantized to 8 bits.

use rand::Rng as _;

use super::scenario::{Phase, Scenario};
use super::{home_room, Room};
use crate::codec::{
    segment_count, ActivityLabel, Frame, LabeledSegment, VideoSegment, FRAMES_PER_SEGMENT, FRAME_SIZE,
};
use crate::rng::{derive_seed, seeded, Gaussian};

pub const VIDEO_FPS: u64 = 50;
const BLOB_RADIUS: f64 = 20.0;
const ORBIT_RADIUS: f64 = 6.0;

struct Pattern {
    anchor: (f64, f64),
    color: [f64; 3],
    /// Orbit frequency in Hz.
    freq: f64,
}

fn pattern(activity: ActivityLabel) -> Pattern {
    let (anchor, color, freq) = match activity {
        ActivityLabel::Sleeping => ((30.0, 30.0), [0.3, 0.4, 1.0], 0.25),
        ActivityLabel::Resting => ((82.0, 30.0), [0.2, 1.0, 0.3], 0.5),
        ActivityLabel::DressUp => ((56.0, 56.0), [1.0, 0.3, 0.3], 1.5),
        ActivityLabel::Eating => ((30.0, 82.0), [1.0, 0.9, 0.2], 1.0),
        ActivityLabel::Calling => ((82.0, 82.0), [0.9, 0.3, 0.9], 0.75),
    };
    Pattern {
        anchor,
        color,
        freq,
    }
}

fn background(room: Room, y: usize) -> [f64; 3] {
    let base = match room {
        Room::Bedroom => [0.06, 0.04, 0.08],
        Room::LivingRoom => [0.08, 0.07, 0.04],
        Room::Kitchen => [0.05, 0.08, 0.07],
    };
    let shade = 0.04 * (y as f64 / (FRAME_SIZE - 1) as f64 - 0.5);
    base.map(|c| c + shade)
}

/// Renders frame `frame_index` of `room`'s camera. `occupant` is the
/// activity taking place in the room, if any.
pub fn render_frame(
    room: Room,
    occupant: Option<ActivityLabel>,
    frame_index: u64,
    pixel_noise: f64,
    noise_seed: u64,
) -> Frame {
    let blob = occupant.map(|a| {
        let p = pattern(a);
        let phase = std::f64::consts::TAU * p.freq * frame_index as f64 / VIDEO_FPS as f64;
        let cx = p.anchor.0 + ORBIT_RADIUS * phase.cos();
        let cy = p.anchor.1 + ORBIT_RADIUS * phase.sin();
        (cx, cy, p.color)
    });
    let mut noise = (pixel_noise > 0.0).then(|| {
        Gaussian::new(seeded(
            derive_seed(noise_seed, &[room as u64, frame_index]),
            0,
        ))
    });
    let mut frame = Frame::blank();
    let px = frame.pixels_mut();
    for y in 0..FRAME_SIZE {
        let bg = background(room, y);
        for x in 0..FRAME_SIZE {
            let mut rgb = bg;
            if let Some((cx, cy, color)) = blob {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                if dx * dx + dy * dy <= BLOB_RADIUS * BLOB_RADIUS {
                    rgb = color;
                }
            }
            for (c, v) in rgb.iter().enumerate() {
                let n = noise.as_mut().map_or(0.0, |g| pixel_noise * g.sample());
                px[(y * FRAME_SIZE + x) * 3 + c] = quantize(v + n);
            }
        }
    }
    frame
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Sixteen consecutive frames starting at `start_frame`.
pub fn render_segment(
    index: usize,
    room: Room,
    occupant: Option<ActivityLabel>,
    start_frame: u64,
    pixel_noise: f64,
    noise_seed: u64,
) -> VideoSegment {
    let frames = (0..FRAMES_PER_SEGMENT as u64)
        .map(|k| render_frame(room, occupant, start_frame + k, pixel_noise, noise_seed))
        .collect();
    VideoSegment::new(index, frames).expect("16 frames rendered")
}

/// Balanced labelled segments for codec training and testing: sample `i`
/// has class `i mod 5`, is filmed in that activity's room, and starts at a
/// random point of the activity's motion cycle.
pub fn codec_dataset(n: usize, pixel_noise: f64, seed: u64) -> Vec<LabeledSegment> {
    let mut rng = seeded(seed, 7);
    (0..n)
        .map(|i| {
            let label = ActivityLabel::ALL[i % ActivityLabel::ALL.len()];
            let start = rng.gen_range(0..10 * VIDEO_FPS);
            let noise_seed = derive_seed(seed, &[i as u64]);
            LabeledSegment {
                segment: render_segment(i, home_room(label), Some(label), start, pixel_noise, noise_seed),
                label,
            }
        })
        .collect()
}

/// The three camera streams of a scenario, rendered on demand so a full
/// ten-minute run never has to sit in memory.
#[derive(Debug, Clone)]
pub struct ScenarioVideo {
    phases: Vec<Phase>,
    total_frames: usize,
    pixel_noise: f64,
    noise_seed: u64,
}

impl ScenarioVideo {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            phases: scenario.phases(),
            total_frames: scenario.total_samples(),
            pixel_noise: scenario.noise.pixel_sigma,
            noise_seed: derive_seed(scenario.seed, &[0x71de0]),
        }
    }

    pub fn total_frames(&self) -> usize {
        self.total_frames
    }

    pub fn segment_count(&self, stride: usize) -> usize {
        segment_count(self.total_frames, stride)
    }

    fn phase(&self, frame: usize) -> Option<&Phase> {
        self.phases
            .iter()
            .find(|p| frame >= p.start && frame < p.start + p.len)
    }

    /// Activity visible in `room` at `frame`, if anyone is there.
    pub fn occupant(&self, room: Room, frame: usize) -> Option<ActivityLabel> {
        self.phase(frame)
            .filter(|p| p.room == Some(room))
            .and_then(|p| p.activity)
    }

    pub fn frame(&self, room: Room, frame: usize) -> Frame {
        render_frame(
            room,
            self.occupant(room, frame),
            frame as u64,
            self.pixel_noise,
            self.noise_seed,
        )
    }

    /// Segment `j` of `room`'s stream: frames `[j·stride, j·stride + 16)`.
    pub fn segment(&self, room: Room, j: usize, stride: usize) -> Option<VideoSegment> {
        if j >= self.segment_count(stride) {
            return None;
        }
        let start = j * stride;
        let frames = (start..start + FRAMES_PER_SEGMENT).map(|f| self.frame(room, f)).collect();
        Some(VideoSegment::new(j, frames).expect("16 frames rendered"))
    }

    /// Ground truth of a segment: the activity in `room` at its middle frame.
    pub fn segment_truth(&self, room: Room, j: usize, stride: usize) -> Option<ActivityLabel> {
        self.occupant(room, j * stride + FRAMES_PER_SEGMENT / 2)
    }
}
