use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{
    classify, feature_to_frame, frame_to_feature, ActivityLabel, CodecError, CodecModel,
    SemanticFeature, TrainingMeta, VideoSegment, NUM_ACTIVITIES,
};
use crate::channel::{transmit, ChannelConfig};
use crate::rng::{derive_seed, seeded};
use crate::tensor::{softmax_cross_entropy, GradientTape, Momentum, StepDecay, Tensor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSegment {
    pub segment: VideoSegment,
    pub label: ActivityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub schedule: StepDecay,
    /// Heavy-ball momentum; 0 gives plain SGD.
    pub momentum: f64,
    /// Channel SNR during training; `+∞` trains without noise.
    pub snr_train_db: f64,
    /// Drives initialization, shuffling and channel noise.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch_size: 32,
            schedule: StepDecay::default(),
            momentum: 0.9,
            snr_train_db: 25.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    /// Mean cross-entropy over the epoch's forward passes.
    pub loss: f64,
    /// Fraction of the epoch's (noisy) forward passes classified correctly.
    pub accuracy: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CodecModel,
    pub history: Vec<EpochStats>,
    pub optimizer_steps: usize,
}

struct SampleGrad {
    loss: f64,
    correct: bool,
    grads: Vec<Tensor>,
}

fn one_hot(label: ActivityLabel) -> Tensor {
    let mut t = Tensor::zeros(&[NUM_ACTIVITIES]);
    t.data_mut()[label.code()] = 1.0;
    t
}

/// Forward through encoder, channel and decoder, then back again. The
/// channel (normalize, add noise, de-normalize) is treated as the identity
/// in the backward pass.
fn sample_gradient(
    model: &CodecModel,
    sample: &LabeledSegment,
    channel: &ChannelConfig,
) -> Result<SampleGrad, CodecError> {
    let x = sample.segment.tensor();
    let mut enc_tape = GradientTape::new();
    let feature = SemanticFeature::new(model.encoder.forward_recorded(&x, &mut enc_tape)?)?;
    let received = frame_to_feature(&transmit(&feature_to_frame(&feature), channel)?)?;

    let mut trunk_tape = GradientTape::new();
    let deep = model.trunk.forward_recorded(received.tensor(), &mut trunk_tape)?;
    let mut head_tape = GradientTape::new();
    let logits = model.head.forward_recorded(&deep, &mut head_tape)?;
    let (loss, g_logits) = softmax_cross_entropy(&logits, &one_hot(sample.label))?;

    let head = model.head.backward(&head_tape, &g_logits, true)?;
    let trunk = model.trunk.backward(&trunk_tape, &head.input.expect("requested"), true)?;
    let enc = model.encoder.backward(&enc_tape, &trunk.input.expect("requested"), false)?;

    let mut grads = enc.params;
    grads.extend(trunk.params);
    grads.extend(head.params);
    Ok(SampleGrad {
        loss,
        correct: classify(&logits) == sample.label,
        grads,
    })
}

struct BatchGrad {
    loss_sum: f64,
    correct: usize,
    /// Gradient averaged over the batch.
    grads: Vec<Tensor>,
}

fn batch_gradient(
    model: &CodecModel,
    jobs: &[(&LabeledSegment, ChannelConfig)],
) -> Result<BatchGrad, CodecError> {
    let results = jobs
        .par_iter()
        .map(|(sample, channel)| sample_gradient(model, sample, channel))
        .collect::<Result<Vec<_>, _>>()?;
    let mut iter = results.into_iter();
    let first = iter
        .next()
        .ok_or_else(|| CodecError::Config("empty batch".into()))?;
    let (mut loss_sum, mut correct) = (first.loss, usize::from(first.correct));
    let mut total = first.grads;
    for r in iter {
        loss_sum += r.loss;
        correct += usize::from(r.correct);
        for (acc, g) in total.iter_mut().zip(&r.grads) {
            acc.axpy(1.0, g)?;
        }
    }
    let scale = 1.0 / jobs.len() as f64;
    Ok(BatchGrad {
        loss_sum,
        correct,
        grads: total.iter().map(|g| g.map(|v| v * scale)).collect(),
    })
}

fn channel_for(snr_db: f64, seed: u64) -> ChannelConfig {
    ChannelConfig::new(snr_db, seed)
}

/// End-to-end training through the noisy channel with mini-batch SGD.
///
/// Per-sample gradients in a batch are computed in parallel and summed in
/// batch order, so the result depends only on the data and `config`.
pub fn train(dataset: &[LabeledSegment], config: &TrainConfig) -> Result<TrainOutcome, CodecError> {
    if dataset.is_empty() {
        return Err(CodecError::EmptyDataset);
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(CodecError::Config(
            "epochs and batch size must be >= 1".into(),
        ));
    }
    for class in ActivityLabel::ALL {
        if !dataset.iter().any(|s| s.label == class) {
            return Err(CodecError::MissingClass(class));
        }
    }

    let mut optimizer = Momentum::new(config.momentum)?;
    let mut model = CodecModel::init(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut steps = 0;
    for epoch in 0..config.epochs {
        let lr = config.schedule.lr(epoch);
        order.shuffle(&mut seeded(derive_seed(config.seed, &[1, epoch as u64]), 0));
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        let mut epoch_steps = 0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let jobs: Vec<_> = batch
                .iter()
                .enumerate()
                .map(|(k, &i)| {
                    let noise = derive_seed(config.seed, &[2, epoch as u64, b as u64, k as u64]);
                    (&dataset[i], channel_for(config.snr_train_db, noise))
                })
                .collect();
            let result = batch_gradient(&model, &jobs)?;
            loss_sum += result.loss_sum;
            correct += result.correct;
            optimizer.step(&mut model.params_mut(), &result.grads, lr)?;
            epoch_steps += 1;
        }
        steps += epoch_steps;
        history.push(EpochStats {
            epoch,
            lr,
            loss: loss_sum / dataset.len() as f64,
            accuracy: correct as f64 / dataset.len() as f64,
            steps: epoch_steps,
        });
    }
    model.snap_to_storage();
    model.meta = TrainingMeta {
        epochs: config.epochs as u32,
        snr_train_db: config.snr_train_db as f32,
    };
    Ok(TrainOutcome {
        model,
        history,
        optimizer_steps: steps,
    })
}

/// Classification accuracy over `dataset` with every segment sent through
/// an AWGN channel at `snr_db` (fresh noise per sample derived from `seed`).
pub fn evaluate(
    model: &CodecModel,
    dataset: &[LabeledSegment],
    snr_db: f64,
    seed: u64,
) -> Result<f64, CodecError> {
    if dataset.is_empty() {
        return Err(CodecError::EmptyDataset);
    }
    let hits = dataset
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> Result<usize, CodecError> {
            let tx = model.encode(&s.segment)?;
            let rx = transmit(&tx, &channel_for(snr_db, derive_seed(seed, &[i as u64])))?;
            Ok(usize::from(classify(&model.decode(&rx)?.logits) == s.label))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / dataset.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Frame, FRAMES_PER_SEGMENT, FRAME_BYTES};
    use rand::Rng;

    fn tiny_dataset(per_class: usize) -> Vec<LabeledSegment> {
        let mut rng = seeded(99, 0);
        let mut out = Vec::new();
        for i in 0..per_class * NUM_ACTIVITIES {
            let label = ActivityLabel::from_code(i % NUM_ACTIVITIES).unwrap();
            let level = 40 * label.code() as u8 + rng.gen_range(0..10);
            let frames = vec![Frame::new(vec![level; FRAME_BYTES]).unwrap(); FRAMES_PER_SEGMENT];
            out.push(LabeledSegment {
                segment: VideoSegment::new(i, frames).unwrap(),
                label,
            });
        }
        out
    }

    #[test]
    fn step_count_bookkeeping() {
        let data = tiny_dataset(7); // 35 samples -> 2 batches of 32
        let cfg = TrainConfig {
            epochs: 2,
            snr_train_db: f64::INFINITY,
            ..TrainConfig::default()
        };
        let out = train(&data, &cfg).unwrap();
        assert_eq!(out.optimizer_steps, 2 * 2);
        assert_eq!(out.history.len(), 2);
        assert_eq!(out.model.meta.epochs, 2);
    }

    #[test]
    fn identical_batch_matches_single_sample_gradient() {
        let data = tiny_dataset(1);
        let model = CodecModel::init(3);
        let ch = ChannelConfig::noiseless();
        let single = batch_gradient(&model, &[(&data[2], ch)]).unwrap();
        let four = batch_gradient(&model, &[(&data[2], ch); 4]).unwrap();
        for (t, g) in four.grads.iter().zip(&single.grads) {
            for (a, b) in t.data().iter().zip(g.data()) {
                assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b}");
            }
        }
        assert_eq!(four.correct, 4 * single.correct);
    }

    #[test]
    fn rejects_empty_and_missing_class() {
        assert!(matches!(
            train(&[], &TrainConfig::default()),
            Err(CodecError::EmptyDataset)
        ));
        let data: Vec<_> = tiny_dataset(1).into_iter().take(4).collect();
        assert!(matches!(
            train(&data, &TrainConfig::default()),
            Err(CodecError::MissingClass(ActivityLabel::Calling))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let data = tiny_dataset(2);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 4,
            ..TrainConfig::default()
        };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }
}
