use super::{Result, Tensor, TensorError};

/// Initial learning rate of the codec training recipe.
pub const BASE_LEARNING_RATE: f64 = 0.003;

/// Step-decay schedule: `base / factor^floor(epoch / every)`, epochs 0-indexed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecay {
    pub base: f64,
    pub factor: f64,
    pub every: usize,
}

impl Default for StepDecay {
    fn default() -> Self {
        Self {
            base: BASE_LEARNING_RATE,
            factor: 4.0,
            every: 4,
        }
    }
}

impl StepDecay {
    pub fn lr(&self, epoch: usize) -> f64 {
        self.base / self.factor.powi((epoch / self.every.max(1)) as i32)
    }
}

/// Learning rate for `epoch` under the default schedule (0.003, ÷4 every 4).
pub fn lr_schedule(epoch: usize) -> f64 {
    StepDecay::default().lr(epoch)
}

/// Plain SGD: `p ← p − lr·g` for every parameter/gradient pair.
pub fn sgd_step(params: &mut [&mut Tensor], grads: &[Tensor], lr: f64) -> Result<()> {
    if !(lr > 0.0) {
        return Err(TensorError::Precondition(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if params.len() != grads.len() {
        return Err(TensorError::ShapeMismatch {
            axis: "parameter count",
            expected: params.len(),
            actual: grads.len(),
        });
    }
    for (p, g) in params.iter_mut().zip(grads) {
        p.axpy(-lr, g)?;
    }
    Ok(())
}

/// SGD with heavy-ball momentum in the PyTorch convention:
/// `v ← μ·v + g`, `p ← p − lr·v`. With `μ = 0` every step is bitwise a
/// [`sgd_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Momentum {
    pub mu: f64,
    velocity: Vec<Tensor>,
}

impl Momentum {
    pub fn new(mu: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) {
            return Err(TensorError::Precondition(format!(
                "momentum must lie in [0, 1), got {mu}"
            )));
        }
        Ok(Self {
            mu,
            velocity: Vec::new(),
        })
    }

    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[Tensor], lr: f64) -> Result<()> {
        if self.mu == 0.0 {
            return sgd_step(params, grads, lr);
        }
        if self.velocity.is_empty() {
            self.velocity = grads.to_vec();
        } else {
            if self.velocity.len() != grads.len() {
                return Err(TensorError::ShapeMismatch {
                    axis: "parameter count",
                    expected: self.velocity.len(),
                    actual: grads.len(),
                });
            }
            for (v, g) in self.velocity.iter_mut().zip(grads) {
                v.expect_dims(g.dims())?;
                for (a, b) in v.data_mut().iter_mut().zip(g.data()) {
                    *a = self.mu * *a + b;
                }
            }
        }
        sgd_step(params, &self.velocity, lr)
    }
}
