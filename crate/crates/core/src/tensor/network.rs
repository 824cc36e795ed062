use rand::Rng as _;

use super::layers::{
    conv3d_backward, conv3d_forward, linear_backward, linear_forward, maxpool3d_backward,
    maxpool3d_forward, relu_backward, relu_forward,
};
use super::{Result, Tensor, TensorError, Triple, AXES4};
use crate::rng::Rng;

/// Static description of one layer, independent of its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// Stride-1 convolution; kernel and padding in (D, H, W) order.
    Conv3d {
        in_channels: usize,
        out_channels: usize,
        kernel: Triple,
        padding: Triple,
    },
    MaxPool3d { kernel: Triple, stride: Triple },
    Relu,
    Reshape { dims: Vec<usize> },
    Linear { in_features: usize, out_features: usize },
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TensorError::InvalidSpec(msg.to_string()));
        match self {
            LayerSpec::Conv3d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => {
                if *in_channels == 0 || *out_channels == 0 {
                    return bad("conv channels must be >= 1");
                }
                if kernel.contains(&0) {
                    return bad("conv kernel entries must be >= 1");
                }
            }
            LayerSpec::MaxPool3d { kernel, stride } => {
                if kernel.contains(&0) || stride.contains(&0) {
                    return bad("pool kernel and stride entries must be >= 1");
                }
            }
            LayerSpec::Reshape { dims } => {
                if dims.is_empty() || dims.len() > 5 || dims.contains(&0) {
                    return bad("reshape dims must be rank 1-5 and positive");
                }
            }
            LayerSpec::Linear {
                in_features,
                out_features,
            } => {
                if *in_features == 0 || *out_features == 0 {
                    return bad("linear features must be >= 1");
                }
            }
            LayerSpec::Relu => {}
        }
        Ok(())
    }

    /// Output dims for a given input; `floor((in + 2·pad − k)/stride) + 1`
    /// per spatial axis for conv (stride 1) and pool (pad 0).
    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.validate()?;
        let spatial = |input: &[usize], k: Triple, pad: Triple, stride: Triple| {
            let mut out = vec![0; 3];
            for a in 0..3 {
                let padded = input[a + 1] + 2 * pad[a];
                if padded < k[a] {
                    return Err(TensorError::KernelTooLarge {
                        axis: AXES4[a + 1],
                        kernel: k[a],
                        input: padded,
                    });
                }
                out[a] = (padded - k[a]) / stride[a] + 1;
            }
            Ok(out)
        };
        let rank4 = |input: &[usize]| {
            if input.len() == 4 {
                Ok(())
            } else {
                Err(TensorError::Rank {
                    expected: 4,
                    actual: input.len(),
                })
            }
        };
        match self {
            LayerSpec::Conv3d {
                in_channels,
                out_channels,
                kernel,
                padding,
            } => {
                rank4(input)?;
                if input[0] != *in_channels {
                    return Err(TensorError::ShapeMismatch {
                        axis: "channels",
                        expected: *in_channels,
                        actual: input[0],
                    });
                }
                let s = spatial(input, *kernel, *padding, [1, 1, 1])?;
                Ok(vec![*out_channels, s[0], s[1], s[2]])
            }
            LayerSpec::MaxPool3d { kernel, stride } => {
                rank4(input)?;
                let s = spatial(input, *kernel, [0, 0, 0], *stride)?;
                Ok(vec![input[0], s[0], s[1], s[2]])
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Reshape { dims } => {
                let (have, want) = (input.iter().product::<usize>(), dims.iter().product());
                if have != want {
                    return Err(TensorError::ShapeMismatch {
                        axis: "elements",
                        expected: want,
                        actual: have,
                    });
                }
                Ok(dims.clone())
            }
            LayerSpec::Linear {
                in_features,
                out_features,
            } => {
                if input != [*in_features] {
                    return Err(TensorError::ShapeMismatch {
                        axis: "in_features",
                        expected: *in_features,
                        actual: input.iter().product(),
                    });
                }
                Ok(vec![*out_features])
            }
        }
    }
}

/// A layer together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv3d {
        weights: Tensor,
        bias: Tensor,
        padding: Triple,
    },
    MaxPool3d { kernel: Triple, stride: Triple },
    Relu,
    Reshape { dims: Vec<usize> },
    Linear { weights: Tensor, bias: Tensor },
}

fn he_uniform(dims: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let bound = (6.0 / fan_in as f64).sqrt();
    let mut t = Tensor::zeros(dims);
    for v in t.data_mut() {
        *v = rng.gen_range(-bound..bound);
    }
    t
}

impl Layer {
    /// He-uniform weights (fan-in), zero bias.
    pub fn init(spec: &LayerSpec, rng: &mut Rng) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            LayerSpec::Conv3d {
                in_channels,
                out_channels,
                kernel,
                padding,
            } => {
                let fan_in = in_channels * kernel.iter().product::<usize>();
                Layer::Conv3d {
                    weights: he_uniform(
                        &[*out_channels, *in_channels, kernel[0], kernel[1], kernel[2]],
                        fan_in,
                        rng,
                    ),
                    bias: Tensor::zeros(&[*out_channels]),
                    padding: *padding,
                }
            }
            LayerSpec::MaxPool3d { kernel, stride } => Layer::MaxPool3d {
                kernel: *kernel,
                stride: *stride,
            },
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Reshape { dims } => Layer::Reshape { dims: dims.clone() },
            LayerSpec::Linear {
                in_features,
                out_features,
            } => Layer::Linear {
                weights: he_uniform(&[*out_features, *in_features], *in_features, rng),
                bias: Tensor::zeros(&[*out_features]),
            },
        })
    }

    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Conv3d {
                weights, padding, ..
            } => {
                let d = weights.dims();
                LayerSpec::Conv3d {
                    in_channels: d[1],
                    out_channels: d[0],
                    kernel: [d[2], d[3], d[4]],
                    padding: *padding,
                }
            }
            Layer::MaxPool3d { kernel, stride } => LayerSpec::MaxPool3d {
                kernel: *kernel,
                stride: *stride,
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::Reshape { dims } => LayerSpec::Reshape { dims: dims.clone() },
            Layer::Linear { weights, .. } => LayerSpec::Linear {
                in_features: weights.dims()[1],
                out_features: weights.dims()[0],
            },
        }
    }

    fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv3d { weights, bias, .. } | Layer::Linear { weights, bias } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv3d { weights, bias, .. } | Layer::Linear { weights, bias } => {
                vec![weights, bias]
            }
            _ => Vec::new(),
        }
    }

    fn forward(&self, x: Tensor, tape: Option<&mut GradientTape>) -> Result<Tensor> {
        let (out, entry) = match self {
            Layer::Conv3d {
                weights,
                bias,
                padding,
            } => (conv3d_forward(&x, weights, bias, *padding)?, Cached::Input(x)),
            Layer::MaxPool3d { kernel, stride } => {
                let p = maxpool3d_forward(&x, *kernel, *stride)?;
                (
                    p.output,
                    Cached::Pool {
                        input_dims: x.dims().to_vec(),
                        argmax: p.argmax,
                    },
                )
            }
            Layer::Relu => (relu_forward(&x), Cached::Input(x)),
            Layer::Reshape { dims } => {
                let input_dims = x.dims().to_vec();
                (x.reshape(dims.clone())?, Cached::Dims(input_dims))
            }
            Layer::Linear { weights, bias } => {
                (linear_forward(&x, weights, bias)?, Cached::Input(x))
            }
        };
        if let Some(tape) = tape {
            tape.entries.push(entry);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
enum Cached {
    Input(Tensor),
    Pool {
        input_dims: Vec<usize>,
        argmax: Vec<usize>,
    },
    Dims(Vec<usize>),
}

/// Per-layer activations recorded during a forward pass.
#[derive(Debug, Clone, Default)]
pub struct GradientTape {
    entries: Vec<Cached>,
}

impl GradientTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_recorded(&self) -> bool {
        !self.entries.is_empty()
    }
}

/// Result of a backward pass: the input gradient (if requested) and one
/// gradient per parameter tensor, in `Sequential::params` order.
#[derive(Debug, Clone)]
pub struct Backward {
    pub input: Option<Tensor>,
    pub params: Vec<Tensor>,
}

/// A fixed chain of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
}

impl Sequential {
    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn init(specs: &[LayerSpec], rng: &mut Rng) -> Result<Self> {
        specs
            .iter()
            .map(|s| Layer::init(s, rng))
            .collect::<Result<Vec<_>>>()
            .map(Self::from_layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(Layer::spec).collect()
    }

    pub fn output_dims(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |dims, l| l.spec().output_dims(&dims))
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.layers
            .iter()
            .try_fold(x.clone(), |x, l| l.forward(x, None))
    }

    /// Forward pass that records what the backward pass needs. Any previous
    /// contents of `tape` are discarded.
    pub fn forward_recorded(&self, x: &Tensor, tape: &mut GradientTape) -> Result<Tensor> {
        tape.entries.clear();
        let mut x = x.clone();
        for l in &self.layers {
            x = l.forward(x, Some(tape))?;
        }
        Ok(x)
    }

    pub fn backward(
        &self,
        tape: &GradientTape,
        upstream: &Tensor,
        want_input_grad: bool,
    ) -> Result<Backward> {
        if tape.entries.len() != self.layers.len() || self.layers.is_empty() {
            return Err(TensorError::MissingTape);
        }
        let mut grad = upstream.clone();
        let mut per_layer: Vec<Vec<Tensor>> = Vec::with_capacity(self.layers.len());
        for (i, (layer, cached)) in self.layers.iter().zip(&tape.entries).enumerate().rev() {
            let need_input = want_input_grad || i > 0;
            let (g_in, params) = match (layer, cached) {
                (
                    Layer::Conv3d {
                        weights, padding, ..
                    },
                    Cached::Input(x),
                ) => {
                    let g = conv3d_backward(x, weights, *padding, &grad, need_input)?;
                    (g.input, vec![g.weights, g.bias])
                }
                (Layer::MaxPool3d { .. }, Cached::Pool { input_dims, argmax }) => (
                    Some(maxpool3d_backward(input_dims, argmax, &grad)?),
                    Vec::new(),
                ),
                (Layer::Relu, Cached::Input(x)) => (Some(relu_backward(x, &grad)?), Vec::new()),
                (Layer::Reshape { .. }, Cached::Dims(d)) => {
                    (Some(grad.clone().reshape(d.clone())?), Vec::new())
                }
                (Layer::Linear { weights, .. }, Cached::Input(x)) => {
                    let g = linear_backward(x, weights, &grad)?;
                    (Some(g.input), vec![g.weights, g.bias])
                }
                _ => return Err(TensorError::MissingTape),
            };
            per_layer.push(params);
            if let Some(g) = g_in {
                grad = g;
            }
        }
        per_layer.reverse();
        Ok(Backward {
            input: want_input_grad.then_some(grad),
            params: per_layer.into_iter().flatten().collect(),
        })
    }
}
