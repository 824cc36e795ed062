//! Dense row-major `f64` tensors and the fixed-pipeline layers the video
//! codec is built from: 3D convolution, 3D max-pooling, ReLU, reshape and a
//! fully connected head, each with a hand-written backward pass.

mod gradcheck;
mod layers;
mod network;
mod optim;

pub use gradcheck::{grad_check, tiny_network, TinyCase};
pub use layers::{
    conv3d_backward, conv3d_forward, linear_backward, linear_forward, maxpool3d_backward,
    maxpool3d_forward, relu_backward, relu_forward, softmax, softmax_cross_entropy, Conv3dGrads,
    LinearGrads, PoolOutput,
};
pub use network::{Backward, GradientTape, Layer, LayerSpec, Sequential};
pub use optim::{lr_schedule, sgd_step, Momentum, StepDecay, BASE_LEARNING_RATE};

/// Spatial triple in (depth, height, width) order.
pub type Triple = [usize; 3];

pub type Result<T> = std::result::Result<T, TensorError>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("shape mismatch on {axis}: expected {expected}, got {actual}")]
    ShapeMismatch {
        axis: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("expected a rank-{expected} tensor, got rank {actual}")]
    Rank { expected: usize, actual: usize },
    #[error("kernel extent {kernel} exceeds (padded) input extent {input} on {axis}")]
    KernelTooLarge {
        axis: &'static str,
        kernel: usize,
        input: usize,
    },
    #[error("invalid dims {dims:?} for {len} elements")]
    InvalidDims { dims: Vec<usize>, len: usize },
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("backward pass requested before a recorded forward pass")]
    MissingTape,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub(crate) const AXES4: [&str; 4] = ["channels", "depth", "height", "width"];

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor of rank 1 to 5 from row-major data.
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_dims(&dims, data.len())?;
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self::full(dims, 0.0)
    }

    pub fn full(dims: &[usize], value: f64) -> Self {
        let len = dims.iter().product();
        check_dims(dims, len).expect("zeros/full called with invalid dims");
        Self {
            dims: dims.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the data under new dims with the same element count.
    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        Self::new(dims, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `self += alpha * other`; dims must agree.
    pub fn axpy(&mut self, alpha: f64, other: &Tensor) -> Result<()> {
        self.expect_dims(other.dims())?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub(crate) fn expect_dims(&self, dims: &[usize]) -> Result<()> {
        if self.dims.len() != dims.len() {
            return Err(TensorError::Rank {
                expected: dims.len(),
                actual: self.dims.len(),
            });
        }
        for (i, (&have, &want)) in self.dims.iter().zip(dims).enumerate() {
            if have != want {
                return Err(TensorError::ShapeMismatch {
                    axis: axis_name(i, dims.len()),
                    expected: want,
                    actual: have,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn expect_rank(&self, rank: usize) -> Result<()> {
        if self.dims.len() == rank {
            Ok(())
        } else {
            Err(TensorError::Rank {
                expected: rank,
                actual: self.dims.len(),
            })
        }
    }
}

fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    let ok = (1..=5).contains(&dims.len())
        && dims.iter().all(|&d| d > 0)
        && dims.iter().product::<usize>() == len;
    if ok {
        Ok(())
    } else {
        Err(TensorError::InvalidDims {
            dims: dims.to_vec(),
            len,
        })
    }
}

pub(crate) fn axis_name(i: usize, rank: usize) -> &'static str {
    match rank {
        4 => AXES4[i],
        5 => ["filters", "channels", "depth", "height", "width"][i],
        2 => ["rows", "cols"][i],
        _ => ["axis0", "axis1", "axis2", "axis3", "axis4"][i.min(4)],
    }
}
