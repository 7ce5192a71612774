use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{init_uniform, sigmoid, Model};
use crate::error::{Error, Result};

/// LSTM cell with a linear readout.
///
/// Gate pre-activations are `W [x; h] + b`, stacked as input, forget,
/// output and candidate blocks of `hidden` rows each.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    input_dim: usize,
    hidden_dim: usize,
    /// `4H x (I + H)`
    w: Array2<f64>,
    b: Array1<f64>,
    /// `O x H`
    readout_w: Array2<f64>,
    readout_b: Array1<f64>,
}

/// Everything one step produced, kept for backpropagation through time.
#[derive(Debug, Clone)]
pub struct LstmStep {
    input: Array1<f64>,
    h_prev: Array1<f64>,
    c_prev: Array1<f64>,
    i: Array1<f64>,
    f: Array1<f64>,
    o: Array1<f64>,
    g: Array1<f64>,
    tanh_c: Array1<f64>,
    pub h: Array1<f64>,
    pub c: Array1<f64>,
    pub readout: Array1<f64>,
}

/// A recorded unroll.
#[derive(Debug, Clone, Default)]
pub struct LstmTape {
    pub steps: Vec<LstmStep>,
}

/// A recorded unroll of a batch of equal-length sequences (rows are
/// sequences).
#[derive(Debug, Clone, Default)]
pub struct LstmBatchTape {
    steps: Vec<BatchStep>,
}

#[derive(Debug, Clone)]
struct BatchStep {
    xh: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    o: Array2<f64>,
    g: Array2<f64>,
    tanh_c: Array2<f64>,
    h: Array2<f64>,
    readout: Array2<f64>,
}

impl LstmBatchTape {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Readouts of step `t`, one row per sequence.
    pub fn readout(&self, t: usize) -> &Array2<f64> {
        &self.steps[t].readout
    }

    pub fn hidden(&self, t: usize) -> &Array2<f64> {
        &self.steps[t].h
    }
}

impl LstmTape {
    pub fn last_readout(&self) -> Option<&Array1<f64>> {
        self.steps.last().map(|s| &s.readout)
    }
}

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_dim,
            w: Array2::zeros((4 * hidden_dim, input_dim + hidden_dim)),
            b: Array1::zeros(4 * hidden_dim),
            readout_w: Array2::zeros((output_dim, hidden_dim)),
            readout_b: Array1::zeros(output_dim),
        }
    }

    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Self {
        let mut cell = Self::zeros(input_dim, hidden_dim, output_dim);
        let fan = input_dim + hidden_dim;
        init_uniform(rng, fan, cell.w.as_slice_mut().expect("standard"));
        init_uniform(rng, fan, cell.b.as_slice_mut().expect("standard"));
        init_uniform(
            rng,
            hidden_dim,
            cell.readout_w.as_slice_mut().expect("standard"),
        );
        init_uniform(
            rng,
            hidden_dim,
            cell.readout_b.as_slice_mut().expect("standard"),
        );
        cell
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        self.readout_b.len()
    }

    fn check(&self, what: usize, expected: usize) -> Result<()> {
        if what != expected {
            return Err(Error::Dimension {
                expected,
                actual: what,
            });
        }
        Ok(())
    }

    /// One recurrence step from `(h, c)` on input `x`.
    pub fn step(&self, h: &[f64], c: &[f64], x: &[f64]) -> Result<LstmStep> {
        self.check(h.len(), self.hidden_dim)?;
        self.check(c.len(), self.hidden_dim)?;
        self.check(x.len(), self.input_dim)?;
        let hd = self.hidden_dim;
        let mut xh = Array1::zeros(self.input_dim + hd);
        xh.slice_mut(s![..self.input_dim])
            .assign(&Array1::from(x.to_vec()));
        xh.slice_mut(s![self.input_dim..])
            .assign(&Array1::from(h.to_vec()));
        let z = self.w.dot(&xh) + &self.b;
        let i = z.slice(s![..hd]).mapv(sigmoid);
        let f = z.slice(s![hd..2 * hd]).mapv(sigmoid);
        let o = z.slice(s![2 * hd..3 * hd]).mapv(sigmoid);
        let g = z.slice(s![3 * hd..]).mapv(f64::tanh);
        let c_prev = Array1::from(c.to_vec());
        let c_new = &f * &c_prev + &i * &g;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c;
        let readout = self.readout_w.dot(&h_new) + &self.readout_b;
        Ok(LstmStep {
            input: Array1::from(x.to_vec()),
            h_prev: Array1::from(h.to_vec()),
            c_prev,
            i,
            f,
            o,
            g,
            tanh_c,
            h: h_new,
            c: c_new,
            readout,
        })
    }

    /// Unrolls over `inputs` starting from `(h0, c0)`.
    pub fn unroll(&self, h0: &[f64], c0: &[f64], inputs: &[Vec<f64>]) -> Result<LstmTape> {
        let mut tape = LstmTape::default();
        let mut h = h0.to_vec();
        let mut c = c0.to_vec();
        for x in inputs {
            let step = self.step(&h, &c, x)?;
            h = step.h.to_vec();
            c = step.c.to_vec();
            tape.steps.push(step);
        }
        Ok(tape)
    }

    /// Backpropagation through time. `d_readout[t]` is the gradient of the
    /// loss with respect to step `t`'s readout (`None` when that step is
    /// not scored). Returns parameter gradients and the gradients with
    /// respect to the initial hidden and cell states.
    pub fn backward(
        &self,
        tape: &LstmTape,
        d_readout: &[Option<Vec<f64>>],
    ) -> Result<(LstmCell, Array1<f64>, Array1<f64>)> {
        self.check(d_readout.len(), tape.steps.len())?;
        let hd = self.hidden_dim;
        let id = self.input_dim;
        let mut grads = self.zeros_like();
        let mut dh_next = Array1::<f64>::zeros(hd);
        let mut dc_next = Array1::<f64>::zeros(hd);
        for (step, dy) in tape.steps.iter().zip(d_readout).rev() {
            let mut dh = dh_next.clone();
            if let Some(dy) = dy {
                self.check(dy.len(), self.output_dim())?;
                let dy = Array1::from(dy.clone());
                dh += &self.readout_w.t().dot(&dy);
                let outer = dy
                    .view()
                    .insert_axis(ndarray::Axis(1))
                    .dot(&step.h.view().insert_axis(ndarray::Axis(0)));
                grads.readout_w += &outer;
                grads.readout_b += &dy;
            }
            let d_o = &dh * &step.tanh_c;
            let dc = &dh * &step.o * &step.tanh_c.mapv(|t| 1.0 - t * t) + &dc_next;
            let d_i = &dc * &step.g;
            let d_g = &dc * &step.i;
            let d_f = &dc * &step.c_prev;
            dc_next = &dc * &step.f;

            let mut dz = Array1::<f64>::zeros(4 * hd);
            dz.slice_mut(s![..hd])
                .assign(&(&d_i * &step.i.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![hd..2 * hd])
                .assign(&(&d_f * &step.f.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![2 * hd..3 * hd])
                .assign(&(&d_o * &step.o.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![3 * hd..])
                .assign(&(&d_g * &step.g.mapv(|v| 1.0 - v * v)));

            let mut xh = Array1::zeros(id + hd);
            xh.slice_mut(s![..id]).assign(&step.input);
            xh.slice_mut(s![id..]).assign(&step.h_prev);
            let outer = dz
                .view()
                .insert_axis(ndarray::Axis(1))
                .dot(&xh.view().insert_axis(ndarray::Axis(0)));
            grads.w += &outer;
            grads.b += &dz;
            let dxh = self.w.t().dot(&dz);
            dh_next = dxh.slice(s![id..]).to_owned();
        }
        Ok((grads, dh_next, dc_next))
    }
}

impl LstmCell {
    /// Batched [`LstmCell::unroll`]: `h0`, `c0` are `B x H`, each input is
    /// `B x I`.
    pub fn unroll_batch(
        &self,
        h0: ArrayView2<f64>,
        c0: ArrayView2<f64>,
        inputs: &[Array2<f64>],
    ) -> Result<LstmBatchTape> {
        let hd = self.hidden_dim;
        let rows = h0.nrows();
        self.check(h0.ncols(), hd)?;
        self.check(c0.ncols(), hd)?;
        self.check(c0.nrows(), rows)?;
        let mut h = h0.to_owned();
        let mut c = c0.to_owned();
        let mut tape = LstmBatchTape::default();
        for x in inputs {
            self.check(x.ncols(), self.input_dim)?;
            self.check(x.nrows(), rows)?;
            let xh = concatenate![Axis(1), x.view(), h.view()];
            let mut z = xh.dot(&self.w.t());
            z += &self.b;
            let i = z.slice(s![.., ..hd]).mapv(sigmoid);
            let f = z.slice(s![.., hd..2 * hd]).mapv(sigmoid);
            let o = z.slice(s![.., 2 * hd..3 * hd]).mapv(sigmoid);
            let g = z.slice(s![.., 3 * hd..]).mapv(f64::tanh);
            let c_new = &f * &c + &i * &g;
            let tanh_c = c_new.mapv(f64::tanh);
            let h_new = &o * &tanh_c;
            let mut readout = h_new.dot(&self.readout_w.t());
            readout += &self.readout_b;
            tape.steps.push(BatchStep {
                xh,
                c_prev: c,
                i,
                f,
                o,
                g,
                tanh_c,
                h: h_new.clone(),
                readout,
            });
            h = h_new;
            c = c_new;
        }
        Ok(tape)
    }

    /// Batched [`LstmCell::backward`]; gradients are summed over rows.
    pub fn backward_batch(
        &self,
        tape: &LstmBatchTape,
        d_readout: &[Option<Array2<f64>>],
    ) -> Result<(LstmCell, Array2<f64>, Array2<f64>)> {
        self.check(d_readout.len(), tape.steps.len())?;
        let hd = self.hidden_dim;
        let id = self.input_dim;
        let rows = tape.steps.first().map_or(0, |s| s.h.nrows());
        let mut grads = self.zeros_like();
        let mut dh_next = Array2::<f64>::zeros((rows, hd));
        let mut dc_next = Array2::<f64>::zeros((rows, hd));
        for (step, dy) in tape.steps.iter().zip(d_readout).rev() {
            let mut dh = dh_next.clone();
            if let Some(dy) = dy {
                if dy.dim() != step.readout.dim() {
                    return Err(Error::Dimension {
                        expected: step.readout.ncols(),
                        actual: dy.ncols(),
                    });
                }
                dh += &dy.dot(&self.readout_w);
                grads.readout_w += &dy.t().dot(&step.h);
                grads.readout_b += &dy.sum_axis(Axis(0));
            }
            let d_o = &dh * &step.tanh_c;
            let dc = &dh * &step.o * &step.tanh_c.mapv(|t| 1.0 - t * t) + &dc_next;
            let mut dz = Array2::<f64>::zeros((rows, 4 * hd));
            dz.slice_mut(s![.., ..hd])
                .assign(&(&dc * &step.g * &step.i.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., hd..2 * hd])
                .assign(&(&dc * &step.c_prev * &step.f.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., 2 * hd..3 * hd])
                .assign(&(&d_o * &step.o.mapv(|v| v * (1.0 - v))));
            dz.slice_mut(s![.., 3 * hd..])
                .assign(&(&dc * &step.i * &step.g.mapv(|v| 1.0 - v * v)));
            dc_next = &dc * &step.f;
            grads.w += &dz.t().dot(&step.xh);
            grads.b += &dz.sum_axis(Axis(0));
            let dxh = dz.dot(&self.w);
            dh_next = dxh.slice(s![.., id..]).to_owned();
        }
        Ok((grads, dh_next, dc_next))
    }
}

impl Model for LstmCell {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w.as_slice().expect("standard"),
            self.b.as_slice().expect("standard"),
            self.readout_w.as_slice().expect("standard"),
            self.readout_b.as_slice().expect("standard"),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w.as_slice_mut().expect("standard"),
            self.b.as_slice_mut().expect("standard"),
            self.readout_w.as_slice_mut().expect("standard"),
            self.readout_b.as_slice_mut().expect("standard"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cell_keeps_zero_hidden_state() {
        let cell = LstmCell::zeros(2, 3, 3);
        let step = cell.step(&[0.0; 3], &[0.0; 3], &[1.0, 0.0]).unwrap();
        assert!(step.i.iter().all(|&v| v == 0.5));
        assert!(step.g.iter().all(|&v| v == 0.0));
        assert!(step.h.iter().all(|&v| v == 0.0));
        assert!(step.c.iter().all(|&v| v == 0.0));
        assert!(step.readout.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = LstmCell::new(3, 4, 2, &mut rng);
        let a = cell
            .step(&[0.1, 0.2, 0.3, 0.4], &[0.0; 4], &[1.0, 0.0, 0.0])
            .unwrap();
        let b = cell
            .step(&[0.1, 0.2, 0.3, 0.4], &[0.0; 4], &[1.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(a.readout, b.readout);
        assert_eq!(a.c, b.c);
    }

    #[test]
    fn batch_unroll_matches_single_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cell = LstmCell::new(2, 3, 2, &mut rng);
        let h0 = Array2::from_shape_vec((2, 3), vec![0.1, -0.2, 0.3, 0.5, 0.0, -0.4]).unwrap();
        let c0 = Array2::from_shape_vec((2, 3), vec![0.0, 0.2, -0.1, 0.3, 0.1, 0.0]).unwrap();
        let xs = vec![
            Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Array2::from_shape_vec((2, 2), vec![0.5, -0.5, 0.2, 0.1]).unwrap(),
        ];
        let dys = vec![
            None,
            Some(Array2::from_shape_vec((2, 2), vec![1.0, -2.0, 0.5, 0.25]).unwrap()),
        ];
        let tape = cell.unroll_batch(h0.view(), c0.view(), &xs).unwrap();
        let (g, dh0, dc0) = cell.backward_batch(&tape, &dys).unwrap();
        let mut sum = cell.zeros_like();
        for r in 0..2 {
            let inputs: Vec<Vec<f64>> = xs.iter().map(|x| x.row(r).to_vec()).collect();
            let single = cell
                .unroll(&h0.row(r).to_vec(), &c0.row(r).to_vec(), &inputs)
                .unwrap();
            let last = single.last_readout().unwrap();
            for (a, b) in last.iter().zip(tape.readout(1).row(r)) {
                assert!((a - b).abs() < 1e-12);
            }
            let d = vec![None, Some(dys[1].as_ref().unwrap().row(r).to_vec())];
            let (gs, dh, dc) = cell.backward(&single, &d).unwrap();
            sum.add_scaled(&gs, 1.0);
            for k in 0..3 {
                assert!((dh[k] - dh0[[r, k]]).abs() < 1e-12);
                assert!((dc[k] - dc0[[r, k]]).abs() < 1e-12);
            }
        }
        for (a, b) in g.tensors().iter().zip(sum.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_errors() {
        let cell = LstmCell::zeros(2, 3, 1);
        assert!(cell.step(&[0.0; 2], &[0.0; 3], &[0.0; 2]).is_err());
        assert!(cell.step(&[0.0; 3], &[0.0; 3], &[0.0; 3]).is_err());
    }
}
