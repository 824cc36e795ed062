//! Accelerometer side of the system: raw symbol transmission of the 3-axis
//! samples, gravity estimation, the per-window orientation feature and the
//! random-forest posture classifier.

mod feature;
mod filter;
mod forest;
mod quant;

use std::fmt;
use std::str::FromStr;

pub use feature::{gravity_feature, make_windows, AccelWindow, GravityFeature, G_DEF, MIN_COLUMN_NORM};
pub use filter::{butterworth_magnitude, lowpass_gravity, Biquad, GravityFilter, GRAVITY_CUTOFF_HZ};
pub use forest::{
    bootstrap_indices, classify_posture, train_forest, DecisionTree, ForestConfig, Node, RandomForest,
};
pub use quant::{
    decode_raw, dequantize, encode_raw, quantize, RawEncoding, QUANT_BITS, QUANT_STEP, RANGE_G,
    SYMBOLS_PER_RAW_FRAME, VALUES_PER_RAW_FRAME,
};

use crate::weights::FormatError;

pub const SAMPLE_RATE_HZ: usize = 50;
/// Samples per one-second window.
pub const WINDOW_LEN: usize = SAMPLE_RATE_HZ;
pub const NUM_POSTURES: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum PostureError {
    #[error("raw frame has {0} symbols, expected {SYMBOLS_PER_RAW_FRAME}")]
    MalformedFrame(usize),
    #[error("window {index}: every column has norm <= {MIN_COLUMN_NORM}")]
    DegenerateWindow { index: usize },
    #[error("window has {0} columns, expected {WINDOW_LEN}")]
    WindowLength(usize),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite feature value {0}")]
    NonFinite(f64),
    #[error("invalid forest config: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PostureLabel {
    Lying = 0,
    Sitting = 1,
    Standing = 2,
    Walking = 3,
}

impl PostureLabel {
    pub const ALL: [PostureLabel; NUM_POSTURES] = [
        PostureLabel::Lying,
        PostureLabel::Sitting,
        PostureLabel::Standing,
        PostureLabel::Walking,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PostureLabel::Lying => "lying",
            PostureLabel::Sitting => "sitting",
            PostureLabel::Standing => "standing",
            PostureLabel::Walking => "walking",
        }
    }
}

impl fmt::Display for PostureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PostureLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown posture '{s}'"))
    }
}

/// One accelerometer reading in g units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample {
    pub t: f64,
    pub a: [f64; 3],
}

impl AccelSample {
    pub fn new(t: f64, a: [f64; 3]) -> Self {
        Self { t, a }
    }
}

/// Timestamp of sample `k` in a 50 Hz stream.
pub fn sample_time(k: usize) -> f64 {
    k as f64 / SAMPLE_RATE_HZ as f64
}
