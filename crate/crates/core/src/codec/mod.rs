//! Joint semantic/channel codec for camera video.
//!
//! Camera side: conv3d(3→4, 3×3×3, pad 1) → ReLU → maxpool (3,5,5)/(3,5,5)
//! yields a 4×5×22×22 semantic feature, which is paired row-major into 4840
//! complex symbols and normalized to unit power.
//!
//! Server side: de-normalize, reshape back to 4×5×22×22, then three
//! conv3d(→8)+ReLU stages with two (2,2,2) max-pools in between give the
//! 8×1×5×5 deep feature, flattened into a 200→5 linear head.

mod train;
mod video;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::channel::ChannelError;
use crate::rng::seeded;
use crate::symbols::{pack_pairs, unpack_pairs, SymbolFrame};
use crate::tensor::{LayerSpec, Sequential, Tensor, TensorError};
use crate::weights::{snap, FormatError, NamedArray, WeightFile};

pub use train::{evaluate, train, EpochStats, LabeledSegment, TrainConfig, TrainOutcome};
pub use video::{
    sample_segments, segment_count, Frame, VideoSegment, COLOR_CHANNELS, DEFAULT_STRIDE,
    FRAMES_PER_SEGMENT, FRAME_BYTES, FRAME_SIZE,
};

pub const FEATURE_DIMS: [usize; 4] = [4, 5, 22, 22];
/// Symbols per feature frame (`L`).
pub const SYMBOLS_PER_FRAME: usize = 4840;
pub const DEEP_FEATURE_DIMS: [usize; 4] = [8, 1, 5, 5];
pub const NUM_ACTIVITIES: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("expected {expected} symbols, got {actual}")]
    SymbolCount { expected: usize, actual: usize },
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training set has no samples of class {0}")]
    MissingClass(ActivityLabel),
    #[error("invalid training configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(into = "&'static str")]
pub enum ActivityLabel {
    Sleeping = 0,
    Resting = 1,
    DressUp = 2,
    Eating = 3,
    Calling = 4,
}

impl ActivityLabel {
    pub const ALL: [ActivityLabel; NUM_ACTIVITIES] = [
        ActivityLabel::Sleeping,
        ActivityLabel::Resting,
        ActivityLabel::DressUp,
        ActivityLabel::Eating,
        ActivityLabel::Calling,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Sleeping => "sleeping",
            ActivityLabel::Resting => "resting",
            ActivityLabel::DressUp => "dress-up",
            ActivityLabel::Eating => "eating",
            ActivityLabel::Calling => "calling",
        }
    }
}

impl From<ActivityLabel> for &'static str {
    fn from(a: ActivityLabel) -> Self {
        a.name()
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s || (s == "dressup" && *a == ActivityLabel::DressUp))
            .ok_or_else(|| format!("unknown activity {s:?}"))
    }
}

/// Encoder output, always 4×5×22×22.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFeature(Tensor);

impl SemanticFeature {
    pub fn new(t: Tensor) -> Result<Self, CodecError> {
        t.expect_dims(&FEATURE_DIMS)?;
        Ok(Self(t))
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    /// Row-major reshape into 4840 complex symbols.
    pub fn to_symbols(&self) -> Vec<Complex64> {
        pack_pairs(self.0.data())
    }

    pub fn from_symbols(symbols: &[Complex64]) -> Result<Self, CodecError> {
        if symbols.len() != SYMBOLS_PER_FRAME {
            return Err(CodecError::SymbolCount {
                expected: SYMBOLS_PER_FRAME,
                actual: symbols.len(),
            });
        }
        Ok(Self(Tensor::new(FEATURE_DIMS.to_vec(), unpack_pairs(symbols))?))
    }
}

/// Receiver output: class logits plus the 8×1×5×5 deep feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub logits: Tensor,
    pub deep: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingMeta {
    pub epochs: u32,
    /// `+∞` for a model trained without channel noise.
    pub snr_train_db: f32,
}

impl Default for TrainingMeta {
    fn default() -> Self {
        Self {
            epochs: 0,
            snr_train_db: f32::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecModel {
    pub(crate) encoder: Sequential,
    pub(crate) trunk: Sequential,
    pub(crate) head: Sequential,
    pub meta: TrainingMeta,
}

fn conv(cin: usize, cout: usize) -> LayerSpec {
    LayerSpec::Conv3d {
        in_channels: cin,
        out_channels: cout,
        kernel: [3, 3, 3],
        padding: [1, 1, 1],
    }
}

fn pool2() -> LayerSpec {
    LayerSpec::MaxPool3d {
        kernel: [2, 2, 2],
        stride: [2, 2, 2],
    }
}

pub fn encoder_specs() -> Vec<LayerSpec> {
    vec![
        conv(3, 4),
        LayerSpec::Relu,
        // (5,5,3) kernel/stride read as depth 3, height 5, width 5.
        LayerSpec::MaxPool3d {
            kernel: [3, 5, 5],
            stride: [3, 5, 5],
        },
    ]
}

pub fn decoder_trunk_specs() -> Vec<LayerSpec> {
    vec![
        conv(4, 8),
        LayerSpec::Relu,
        pool2(),
        conv(8, 8),
        LayerSpec::Relu,
        pool2(),
        conv(8, 8),
        LayerSpec::Relu,
    ]
}

pub fn decoder_head_specs() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Reshape { dims: vec![200] },
        LayerSpec::Linear {
            in_features: 200,
            out_features: NUM_ACTIVITIES,
        },
    ]
}

const PARAM_NAMES: [&str; 10] = [
    "encoder.conv.weight",
    "encoder.conv.bias",
    "decoder.conv1.weight",
    "decoder.conv1.bias",
    "decoder.conv2.weight",
    "decoder.conv2.bias",
    "decoder.conv3.weight",
    "decoder.conv3.bias",
    "decoder.linear.weight",
    "decoder.linear.bias",
];

impl CodecModel {
    /// Freshly initialized model (He-uniform, zero bias), parameters rounded
    /// to storage precision so a saved model reloads bit for bit.
    pub fn init(seed: u64) -> Self {
        let mut rng = seeded(seed, 0);
        let build = |specs: Vec<LayerSpec>, rng: &mut _| {
            Sequential::init(&specs, rng).expect("codec layer specs are valid")
        };
        let mut model = Self {
            encoder: build(encoder_specs(), &mut rng),
            trunk: build(decoder_trunk_specs(), &mut rng),
            head: build(decoder_head_specs(), &mut rng),
            meta: TrainingMeta::default(),
        };
        model.snap_to_storage();
        model
    }

    pub fn params(&self) -> Vec<&Tensor> {
        let mut p = self.encoder.params();
        p.extend(self.trunk.params());
        p.extend(self.head.params());
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = self.encoder.params_mut();
        p.extend(self.trunk.params_mut());
        p.extend(self.head.params_mut());
        p
    }

    pub(crate) fn snap_to_storage(&mut self) {
        for p in self.params_mut() {
            for v in p.data_mut() {
                *v = snap(*v);
            }
        }
    }

    pub fn extract_feature(&self, segment: &VideoSegment) -> Result<SemanticFeature, CodecError> {
        self.feature_from_tensor(&segment.tensor())
    }

    pub fn feature_from_tensor(&self, x: &Tensor) -> Result<SemanticFeature, CodecError> {
        x.expect_dims(&[COLOR_CHANNELS, FRAMES_PER_SEGMENT, FRAME_SIZE, FRAME_SIZE])?;
        SemanticFeature::new(self.encoder.forward(x)?)
    }

    /// Camera-side encoder: segment → power-normalized 4840-symbol frame.
    pub fn encode(&self, segment: &VideoSegment) -> Result<SymbolFrame, CodecError> {
        Ok(feature_to_frame(&self.extract_feature(segment)?))
    }

    /// Server-side decoder.
    pub fn decode(&self, received: &SymbolFrame) -> Result<Decoded, CodecError> {
        let feature = frame_to_feature(received)?;
        self.decode_feature(&feature)
    }

    pub fn decode_feature(&self, feature: &SemanticFeature) -> Result<Decoded, CodecError> {
        let deep = self.trunk.forward(feature.tensor())?;
        let logits = self.head.forward(&deep)?;
        Ok(Decoded { logits, deep })
    }

    /// Transmitter and receiver composed without a channel in between.
    pub fn forward_clean(&self, segment: &VideoSegment) -> Result<Decoded, CodecError> {
        let frame = self.encode(segment)?;
        self.decode(&frame)
    }

    pub fn to_weight_file(&self) -> WeightFile {
        let mut w = WeightFile::new();
        for (name, p) in PARAM_NAMES.iter().zip(self.params()) {
            w.push(NamedArray::new(*name, p.dims(), p.data()));
        }
        w.push(NamedArray {
            name: "meta".into(),
            dims: vec![2],
            data: vec![self.meta.epochs as f32, self.meta.snr_train_db],
        });
        w
    }

    pub fn from_weight_file(w: &WeightFile) -> Result<Self, CodecError> {
        let mut model = Self::init(0);
        for (name, p) in PARAM_NAMES.iter().zip(model.params_mut()) {
            let a = w.get(name)?;
            if a.dims_usize() != p.dims() {
                return Err(FormatError::Malformed(format!(
                    "{name} has dims {:?}, expected {:?}",
                    a.dims,
                    p.dims()
                ))
                .into());
            }
            p.data_mut().copy_from_slice(&a.to_f64());
        }
        let meta = w.get("meta")?;
        if meta.data.len() != 2 {
            return Err(FormatError::Malformed("meta must hold 2 values".into()).into());
        }
        model.meta = TrainingMeta {
            epochs: meta.data[0] as u32,
            snr_train_db: meta.data[1],
        };
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CodecError> {
        Ok(self.to_weight_file().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CodecError> {
        Self::from_weight_file(&WeightFile::load(path)?)
    }
}

pub fn save_model(model: &CodecModel, path: impl AsRef<Path>) -> Result<(), CodecError> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CodecModel, CodecError> {
    CodecModel::load(path)
}

pub fn feature_to_frame(feature: &SemanticFeature) -> SymbolFrame {
    SymbolFrame::normalized(feature.to_symbols())
}

/// Receiver-side channel decoding: undo the transmit gain and reshape.
pub fn frame_to_feature(frame: &SymbolFrame) -> Result<SemanticFeature, CodecError> {
    SemanticFeature::from_symbols(&frame.denormalized())
}

/// Arg-max over the logits, ties going to the lowest class code.
pub fn classify(logits: &Tensor) -> ActivityLabel {
    let mut best = 0;
    for (i, &v) in logits.data().iter().enumerate().take(NUM_ACTIVITIES) {
        if v > logits.data()[best] {
            best = i;
        }
    }
    ActivityLabel::from_code(best).expect("index bounded by class count")
}
