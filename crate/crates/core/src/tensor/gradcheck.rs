use rand::Rng as _;

use super::layers::softmax_cross_entropy;
use super::{GradientTape, LayerSpec, Result, Sequential, Tensor, TensorError};
use crate::rng::seeded;

fn one_hot(label: usize, classes: usize) -> Result<Tensor> {
    if label >= classes {
        return Err(TensorError::Precondition(format!(
            "label {label} out of range for {classes} classes"
        )));
    }
    let mut t = Tensor::zeros(&[classes]);
    t.data_mut()[label] = 1.0;
    Ok(t)
}

fn loss(net: &Sequential, input: &Tensor, target: &Tensor) -> Result<f64> {
    softmax_cross_entropy(&net.forward(input)?, target).map(|(l, _)| l)
}

/// Compares the analytic parameter gradients of a softmax cross-entropy
/// loss against central differences and returns the worst relative error,
/// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// The network must map `input` to a vector of logits.
pub fn grad_check(network: &Sequential, input: &Tensor, label: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(TensorError::Precondition(format!(
            "finite-difference step must be positive, got {epsilon}"
        )));
    }
    let mut tape = GradientTape::new();
    let logits = network.forward_recorded(input, &mut tape)?;
    let target = one_hot(label, logits.len())?;
    let (_, grad_logits) = softmax_cross_entropy(&logits, &target)?;
    let analytic = network.backward(&tape, &grad_logits, false)?.params;

    let mut probe = network.clone();
    let mut worst = 0.0f64;
    for (pi, grad) in analytic.iter().enumerate() {
        for (k, &a) in grad.data().iter().enumerate() {
            let original = probe.params()[pi].data()[k];
            probe.params_mut()[pi].data_mut()[k] = original + epsilon;
            let up = loss(&probe, input, &target)?;
            probe.params_mut()[pi].data_mut()[k] = original - epsilon;
            let down = loss(&probe, input, &target)?;
            probe.params_mut()[pi].data_mut()[k] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

/// A seeded network/input/label triple small enough for exhaustive
/// finite differences: conv3d → ReLU → maxpool3d → flatten → linear.
#[derive(Debug, Clone)]
pub struct TinyCase {
    pub network: Sequential,
    pub input: Tensor,
    pub label: usize,
}

pub fn tiny_network(seed: u64) -> TinyCase {
    let specs = [
        LayerSpec::Conv3d {
            in_channels: 2,
            out_channels: 3,
            kernel: [3, 3, 3],
            padding: [1, 1, 1],
        },
        LayerSpec::Relu,
        LayerSpec::MaxPool3d {
            kernel: [2, 2, 2],
            stride: [2, 2, 2],
        },
        LayerSpec::Reshape { dims: vec![54] },
        LayerSpec::Linear {
            in_features: 54,
            out_features: 5,
        },
    ];
    let mut rng = seeded(seed, 0);
    let network = Sequential::init(&specs, &mut rng).expect("tiny network specs are valid");
    let input = Tensor::new(
        vec![2, 4, 6, 6],
        (0..288).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .expect("tiny input dims are valid");
    let label = rng.gen_range(0..5);
    TinyCase {
        network,
        input,
        label,
    }
}
