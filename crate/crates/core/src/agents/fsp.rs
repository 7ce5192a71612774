use ndarray::Array2;
use rand::Rng;

use super::dqn::argmax_legal;
use super::replay::{FspSample, ReplayBuffer};
use super::Selection;
use crate::env::{Action, CampaignState};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, LstmCell, Model};

/// Recurrent predictor of the next stage-boundary state.
///
/// The hidden state is initialised to the current state `s` (hence hidden
/// size `5n`), the cell state to zero, and each selected debunker is fed
/// as a one-hot input of length `n`. The readout after the last debunker
/// is the predicted next state.
#[derive(Debug, Clone)]
pub struct FspModel {
    cell: LstmCell,
    opt: Adam,
}

/// Recurrence carried across the picks of one stage.
#[derive(Debug, Clone)]
pub struct FspRollout {
    h: Vec<f64>,
    c: Vec<f64>,
}

impl FspModel {
    pub fn new<R: Rng + ?Sized>(n: usize, optimizer: AdamConfig, rng: &mut R) -> Self {
        Self {
            cell: LstmCell::new(n, 5 * n, 5 * n, rng),
            opt: Adam::new(optimizer),
        }
    }

    pub fn from_cell(cell: LstmCell, optimizer: AdamConfig) -> Result<Self> {
        let n = cell.input_dim();
        if cell.hidden_dim() != 5 * n || cell.output_dim() != 5 * n {
            return Err(Error::Dimension {
                expected: 5 * n,
                actual: cell.hidden_dim(),
            });
        }
        Ok(Self {
            cell,
            opt: Adam::new(optimizer),
        })
    }

    pub fn n(&self) -> usize {
        self.cell.input_dim()
    }

    pub fn cell(&self) -> &LstmCell {
        &self.cell
    }

    fn one_hot(&self, u: usize) -> Result<Vec<f64>> {
        let n = self.n();
        if u >= n {
            return Err(Error::InvalidAction(format!("node {u} out of range")));
        }
        let mut x = vec![0.0; n];
        x[u] = 1.0;
        Ok(x)
    }

    pub fn start(&self, state: &CampaignState) -> Result<FspRollout> {
        if state.dim() != 5 * self.n() {
            return Err(Error::Dimension {
                expected: 5 * self.n(),
                actual: state.dim(),
            });
        }
        Ok(FspRollout {
            h: state.as_slice().to_vec(),
            c: vec![0.0; 5 * self.n()],
        })
    }

    /// Feeds debunker `u` and returns the predicted state.
    pub fn advance(&self, rollout: &mut FspRollout, u: usize) -> Result<CampaignState> {
        let step = self.cell.step(&rollout.h, &rollout.c, &self.one_hot(u)?)?;
        rollout.h = step.h.to_vec();
        rollout.c = step.c.to_vec();
        CampaignState::from_vec(step.readout.to_vec())
    }

    /// Predicted state after feeding `actions` in order (the input state
    /// itself when `actions` is empty).
    pub fn predict(&self, state: &CampaignState, actions: &[usize]) -> Result<CampaignState> {
        let mut rollout = self.start(state)?;
        let mut out = state.clone();
        for &u in actions {
            out = self.advance(&mut rollout, u)?;
        }
        Ok(out)
    }

    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        memory: &ReplayBuffer<FspSample>,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let batch = memory.sample(rng, batch_size)?;
        self.train_on(&batch)
    }

    /// One gradient step on the mean squared error of the final readout.
    /// Samples with the same number of debunkers are unrolled together.
    pub fn train_on(&mut self, batch: &[&FspSample]) -> Result<f64> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::InsufficientSamples {
                needed: 1,
                available: 0,
            });
        }
        let n = self.n();
        let dim = 5 * n;
        for sample in batch {
            if sample.actions.is_empty() {
                return Err(Error::InvalidAction(
                    "predictor sample without debunkers".into(),
                ));
            }
            for s in [&sample.state, &sample.next_state] {
                if s.dim() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        actual: s.dim(),
                    });
                }
            }
            if let Some(&u) = sample.actions.iter().find(|&&u| u >= n) {
                return Err(Error::InvalidAction(format!("node {u} out of range")));
            }
        }
        let mut lengths: Vec<usize> = batch.iter().map(|s| s.actions.len()).collect();
        lengths.sort_unstable();
        lengths.dedup();

        let mut grads = self.cell.zeros_like();
        let mut loss = 0.0;
        for len in lengths {
            let group: Vec<&FspSample> = batch
                .iter()
                .copied()
                .filter(|s| s.actions.len() == len)
                .collect();
            let rows = group.len();
            let h0 = Array2::from_shape_fn((rows, dim), |(r, k)| group[r].state.as_slice()[k]);
            let c0 = Array2::zeros((rows, dim));
            let inputs: Vec<Array2<f64>> = (0..len)
                .map(|t| {
                    Array2::from_shape_fn((rows, n), |(r, k)| {
                        f64::from(u8::from(group[r].actions[t] == k))
                    })
                })
                .collect();
            let tape = self.cell.unroll_batch(h0.view(), c0.view(), &inputs)?;
            let target =
                Array2::from_shape_fn((rows, dim), |(r, k)| group[r].next_state.as_slice()[k]);
            let diff = tape.readout(len - 1) - &target;
            loss += diff.iter().map(|v| v * v).sum::<f64>() / dim as f64;
            let mut d = vec![None; len];
            d[len - 1] = Some(diff * (2.0 / (dim * b) as f64));
            let (g, _, _) = self.cell.backward_batch(&tape, &d)?;
            grads.add_scaled(&g, 1.0);
        }
        self.opt.step(&mut self.cell, &grads)?;
        Ok(loss / b as f64)
    }
}

/// Greedy multi-debunker selection with the predictor: after each pick the
/// working state is replaced by the predicted next state and the Q-network
/// is re-evaluated on it. Stops when nothing affordable remains.
pub fn select_multi_debunkers(
    q: &crate::nn::DenseNet,
    fsp: &FspModel,
    state: &CampaignState,
    costs: &[f64],
    spreaders: &[usize],
    budget: f64,
) -> Result<Action> {
    let mut selection = Selection::new(costs, spreaders, budget);
    let mut rollout = fsp.start(state)?;
    let mut working = state.clone();
    loop {
        let legal = selection.legal();
        if legal.is_empty() {
            break;
        }
        let values = q.forward(working.as_slice())?;
        let u = argmax_legal(&values, &legal);
        selection.take(u);
        working = fsp.advance(&mut rollout, u)?;
    }
    Ok(selection.into_action())
}

/// Greedy multi-debunker selection without the predictor: repeatedly takes
/// the highest-valued affordable node under the Q-values of `state`.
pub fn greedy_q_action(
    q: &crate::nn::DenseNet,
    state: &CampaignState,
    costs: &[f64],
    spreaders: &[usize],
    budget: f64,
) -> Result<Action> {
    let values = q.forward(state.as_slice())?;
    let mut selection = Selection::new(costs, spreaders, budget);
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    for u in order {
        if selection.affordable(u) {
            selection.take(u);
        }
    }
    Ok(selection.into_action())
}
