use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{init_uniform, Model};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    /// `out x in`
    w: Array2<f64>,
    b: Array1<f64>,
}

/// Feed-forward network: rectifier hidden layers, linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Activations kept from a batched forward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    /// `acts[0]` is the input; `acts[l + 1]` is the output of layer `l`
    /// (after the rectifier for hidden layers).
    acts: Vec<Array2<f64>>,
}

impl DenseCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("nonempty")
    }
}

impl DenseNet {
    /// All-zero network with the given layer sizes (input first).
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                w: Array2::zeros((w[1], w[0])),
                b: Array1::zeros(w[1]),
            })
            .collect();
        Self {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let fan_in = layer.w.ncols();
            init_uniform(
                rng,
                fan_in,
                layer.w.as_slice_mut().expect("standard layout"),
            );
            init_uniform(
                rng,
                fan_in,
                layer.b.as_slice_mut().expect("standard layout"),
            );
        }
        net
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("nonempty")
    }

    pub fn weight(&self, layer: usize) -> &Array2<f64> {
        &self.layers[layer].w
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut Array2<f64> {
        &mut self.layers[layer].w
    }

    pub fn bias(&self, layer: usize) -> &Array1<f64> {
        &self.layers[layer].b
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut Array1<f64> {
        &mut self.layers[layer].b
    }

    fn check_input(&self, dim: usize) -> Result<()> {
        if dim != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: dim,
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x.len())?;
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward_batch(view)?.output().row(0).to_vec())
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<DenseCache> {
        self.check_input(x.ncols())?;
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = acts[l].dot(&layer.w.t());
            z += &layer.b;
            if l != last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        Ok(DenseCache { acts })
    }

    /// Parameter gradients of `Σ_rows upstream · output` for a cached batch.
    pub fn backward_batch(
        &self,
        cache: &DenseCache,
        upstream: ArrayView2<f64>,
    ) -> Result<DenseNet> {
        let out = cache.output();
        if upstream.dim() != out.dim() {
            return Err(Error::Dimension {
                expected: out.ncols(),
                actual: upstream.ncols(),
            });
        }
        let mut grads = self.zeros_like();
        let mut delta = upstream.to_owned();
        for l in (0..self.layers.len()).rev() {
            let prev = &cache.acts[l];
            grads.layers[l].w = delta.t().dot(prev);
            grads.layers[l].b = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut d = delta.dot(&self.layers[l].w);
                ndarray::Zip::from(&mut d).and(prev).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = d;
            }
        }
        Ok(grads)
    }

    /// Single-sample gradient of `upstream · forward(x)`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<DenseNet> {
        self.check_input(x.len())?;
        if upstream.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                actual: upstream.len(),
            });
        }
        let xv = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let uv = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row vector");
        let cache = self.forward_batch(xv)?;
        self.backward_batch(&cache, uv)
    }
}

impl Model for DenseNet {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.w.as_slice().expect("standard"),
                    l.b.as_slice().expect("standard"),
                ]
            })
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.w.as_slice_mut().expect("standard"),
                    l.b.as_slice_mut().expect("standard"),
                ]
            })
            .collect()
    }
}
