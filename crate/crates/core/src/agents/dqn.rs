use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::replay::{ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::nn::{Adam, AdamConfig, DenseNet};

/// Network shape and learning settings of the Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    /// Training steps between target-network refreshes.
    pub target_sync: u64,
    pub optimizer: AdamConfig,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            gamma: 0.8,
            target_sync: 100,
            optimizer: AdamConfig::default(),
        }
    }
}

/// Linear decay from `start` to `end` over the first `decay_fraction` of
/// the episodes, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.05,
            decay_fraction: 0.5,
        }
    }
}

impl EpsilonSchedule {
    pub fn value(&self, episode: usize, episodes: usize) -> f64 {
        let span = self.decay_fraction * episodes as f64;
        if span <= 0.0 {
            return self.end;
        }
        let frac = (episode as f64 / span).min(1.0);
        self.start + (self.end - self.start) * frac
    }
}

/// Bootstrapped regression target `r + γ max_u' Q⁻(s', u')`, with no
/// bootstrap after the last stage.
pub fn td_target(reward: f64, gamma: f64, max_next_q: f64, done: bool) -> f64 {
    if done || gamma == 0.0 {
        reward
    } else {
        reward + gamma * max_next_q
    }
}

/// Masked arg-max over `legal`, or a uniform legal node with probability
/// `epsilon`. Ties go to the earliest entry of `legal`.
pub fn q_select<R: Rng + ?Sized>(
    q: &[f64],
    legal: &[usize],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    if legal.is_empty() {
        return Err(Error::NoLegalAction);
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(legal[rng.random_range(0..legal.len())]);
    }
    Ok(argmax_legal(q, legal))
}

/// First legal index with the largest value; `legal` must be nonempty.
pub(crate) fn argmax_legal(q: &[f64], legal: &[usize]) -> usize {
    let mut best = legal[0];
    for &i in &legal[1..] {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

/// Online and target Q-networks with their optimizer.
#[derive(Debug, Clone)]
pub struct QPolicy {
    online: DenseNet,
    target: DenseNet,
    opt: Adam,
    gamma: f64,
    target_sync: u64,
    updates: u64,
    /// Outputs excluded from the bootstrap maximum (spreaders).
    masked: Vec<bool>,
}

impl QPolicy {
    pub fn new<R: Rng + ?Sized>(
        n: usize,
        spreaders: &[usize],
        config: &DqnConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mut sizes = vec![5 * n];
        sizes.extend(&config.hidden);
        sizes.push(n);
        Self::from_network(DenseNet::new(&sizes, rng), spreaders, config)
    }

    /// Wraps an existing network; the target starts as a copy of it.
    pub fn from_network(online: DenseNet, spreaders: &[usize], config: &DqnConfig) -> Result<Self> {
        if !(0.0..=1.0).contains(&config.gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("must lie in [0, 1], got {}", config.gamma),
            ));
        }
        if config.target_sync == 0 {
            return Err(Error::invalid("target_sync", "must be at least 1"));
        }
        let n = online.output_dim();
        if online.input_dim() != 5 * n {
            return Err(Error::Dimension {
                expected: 5 * n,
                actual: online.input_dim(),
            });
        }
        let mut masked = vec![false; n];
        for &s in spreaders {
            if s < n {
                masked[s] = true;
            }
        }
        Ok(Self {
            target: online.clone(),
            online,
            opt: Adam::new(config.optimizer),
            gamma: config.gamma,
            target_sync: config.target_sync,
            updates: 0,
            masked,
        })
    }

    pub fn online(&self) -> &DenseNet {
        &self.online
    }

    pub fn target(&self) -> &DenseNet {
        &self.target
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.online.forward(state)
    }

    pub fn select<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        legal: &[usize],
        epsilon: f64,
        rng: &mut R,
    ) -> Result<usize> {
        if legal.is_empty() {
            return Err(Error::NoLegalAction);
        }
        let q = self.q_values(state)?;
        q_select(&q, legal, epsilon, rng)
    }

    /// Samples a minibatch and takes one gradient step.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer<Transition>,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let batch = buffer.sample(rng, batch_size)?;
        self.train_on(&batch)
    }

    /// One gradient step on the squared TD error of `batch`.
    pub fn train_on(&mut self, batch: &[&Transition]) -> Result<f64> {
        let b = batch.len();
        if b == 0 {
            return Err(Error::InsufficientSamples {
                needed: 1,
                available: 0,
            });
        }
        let dim = self.online.input_dim();
        let rows = |f: &dyn Fn(&Transition) -> &[f64]| -> Result<Array2<f64>> {
            let mut m = Array2::zeros((b, dim));
            for (r, t) in batch.iter().enumerate() {
                let s = f(t);
                if s.len() != dim {
                    return Err(Error::Dimension {
                        expected: dim,
                        actual: s.len(),
                    });
                }
                m.row_mut(r).assign(&ndarray::ArrayView1::from(s));
            }
            Ok(m)
        };
        let states = rows(&|t| t.state.as_slice())?;

        let targets: Vec<f64> = if self.gamma == 0.0 {
            batch.iter().map(|t| t.reward).collect()
        } else {
            let next = rows(&|t| t.next_state.as_slice())?;
            let tq = self.target.forward_batch(next.view())?;
            batch
                .iter()
                .enumerate()
                .map(|(r, t)| {
                    let max = tq
                        .output()
                        .row(r)
                        .iter()
                        .zip(&self.masked)
                        .filter(|(_, m)| !**m)
                        .map(|(q, _)| *q)
                        .fold(f64::NEG_INFINITY, f64::max);
                    let max = if max.is_finite() { max } else { 0.0 };
                    td_target(t.reward, self.gamma, max, t.done)
                })
                .collect()
        };
        if targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("q_target", "non-finite bootstrap target"));
        }

        let cache = self.online.forward_batch(states.view())?;
        let out = cache.output();
        let mut upstream = Array2::zeros(out.dim());
        let mut loss = 0.0;
        for (r, t) in batch.iter().enumerate() {
            if t.action >= out.ncols() {
                return Err(Error::InvalidAction(format!(
                    "node {} out of range",
                    t.action
                )));
            }
            let diff = out[[r, t.action]] - targets[r];
            loss += diff * diff;
            upstream[[r, t.action]] = 2.0 * diff / b as f64;
        }
        let grads = self.online.backward_batch(&cache, upstream.view())?;
        self.opt.step(&mut self.online, &grads)?;
        self.updates += 1;
        if self.updates % self.target_sync == 0 {
            self.target = self.online.clone();
        }
        Ok(loss / b as f64)
    }
}
