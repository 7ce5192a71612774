//! Small dense and recurrent networks with hand-written backpropagation,
//! plus an Adam optimizer and a binary checkpoint format.

mod adam;
mod checkpoint;
mod dense;
mod lstm;

pub use self::adam::{Adam, AdamConfig};
pub use self::checkpoint::Checkpoint;
pub use self::dense::{DenseCache, DenseNet};
pub use self::lstm::{LstmBatchTape, LstmCell, LstmStep, LstmTape};

use rand::Rng;

/// A bag of parameter tensors visited in a fixed order. Gradients use the
/// same type as the model they belong to.
pub trait Model: Clone {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Same shapes, all zeros.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`.
    fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Uniform in `±1/sqrt(fan_in)`.
pub(crate) fn init_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, out: &mut [f64]) {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    for v in out {
        *v = (rng.random::<f64>() * 2.0 - 1.0) * bound;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
