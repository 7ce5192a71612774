#![allow(dead_code)]

use debunk::nn::{DenseNet, LstmCell, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-6;
/// Gradients smaller than this are compared in absolute terms.
pub const FD_FLOOR: f64 = 1e-6;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FD_FLOOR)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Worst relative error between the analytic gradient and central
/// differences, over every parameter of `model`.
fn worst_param_error<M: Model>(model: &M, analytic: &M, loss: impl Fn(&M) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    let counts: Vec<usize> = model.tensors().iter().map(|t| t.len()).collect();
    let grads: Vec<Vec<f64>> = analytic.tensors().iter().map(|t| t.to_vec()).collect();
    for (ti, &len) in counts.iter().enumerate() {
        for k in 0..len {
            let mut plus = model.clone();
            plus.tensors_mut()[ti][k] += FD_STEP;
            let mut minus = model.clone();
            minus.tensors_mut()[ti][k] -= FD_STEP;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(grads[ti][k], numeric));
        }
    }
    worst
}

/// Dense 5 -> 4 -> 3 network, loss `u · f(x)`; returns the worst error.
pub fn dense_gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = DenseNet::new(&[5, 4, 3], &mut rng);
    let x = random_vec(&mut rng, 5);
    let u = random_vec(&mut rng, 3);
    let loss = |m: &DenseNet| {
        m.forward(&x)
            .unwrap()
            .iter()
            .zip(&u)
            .map(|(a, b)| a * b)
            .sum::<f64>()
    };
    let g = net.backward(&x, &u).unwrap();
    worst_param_error(&net, &g, loss)
}

/// LSTM over a 3-step unroll from a random initial state, loss
/// `Σ_t u_t · readout_t`; also checks the initial-state gradients.
pub fn lstm_gradient_check(seed: u64) -> f64 {
    let (input, hidden, output) = (3, 4, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cell = LstmCell::new(input, hidden, output, &mut rng);
    let h0 = random_vec(&mut rng, hidden);
    let c0 = random_vec(&mut rng, hidden);
    let xs: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, input)).collect();
    let us: Vec<Vec<f64>> = (0..3).map(|_| random_vec(&mut rng, output)).collect();
    let loss_at = |m: &LstmCell, h0: &[f64], c0: &[f64]| {
        let tape = m.unroll(h0, c0, &xs).unwrap();
        tape.steps
            .iter()
            .zip(&us)
            .map(|(s, u)| s.readout.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>()
    };
    let tape = cell.unroll(&h0, &c0, &xs).unwrap();
    let d: Vec<Option<Vec<f64>>> = us.iter().cloned().map(Some).collect();
    let (g, dh0, dc0) = cell.backward(&tape, &d).unwrap();
    let mut worst = worst_param_error(&cell, &g, |m| loss_at(m, &h0, &c0));
    for k in 0..hidden {
        let mut hp = h0.clone();
        hp[k] += FD_STEP;
        let mut hm = h0.clone();
        hm[k] -= FD_STEP;
        let nh = (loss_at(&cell, &hp, &c0) - loss_at(&cell, &hm, &c0)) / (2.0 * FD_STEP);
        let mut cp = c0.clone();
        cp[k] += FD_STEP;
        let mut cm = c0.clone();
        cm[k] -= FD_STEP;
        let nc = (loss_at(&cell, &h0, &cp) - loss_at(&cell, &h0, &cm)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(dh0[k], nh)).max(rel_err(dc0[k], nc));
    }
    worst
}

/// Deterministic two-node bandit: selecting node 0 pays 1, anything else
/// pays 0, and the state never changes.
pub struct Bandit {
    state: debunk::env::CampaignState,
    costs: Vec<f64>,
    stages: usize,
    stage: usize,
}

impl Bandit {
    pub const N: usize = 2;

    pub fn new(stages: usize) -> Self {
        let state = debunk::env::CampaignState::from_vec(vec![
            0.0, 0.0, 0.1, 0.1, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0,
        ])
        .unwrap();
        Self {
            state,
            costs: vec![1.0; Self::N],
            stages,
            stage: 0,
        }
    }
}

impl debunk::agents::Environment for Bandit {
    fn state(&self) -> &debunk::env::CampaignState {
        &self.state
    }
    fn budget(&self) -> f64 {
        1.0
    }
    fn costs(&self) -> &[f64] {
        &self.costs
    }
    fn spreaders(&self) -> &[usize] {
        &[]
    }
    fn stage(&self) -> usize {
        self.stage
    }
    fn is_done(&self) -> bool {
        self.stage >= self.stages
    }
    fn step(&mut self, action: &debunk::env::Action) -> debunk::Result<debunk::env::StageOutcome> {
        self.stage += 1;
        let reward = if action.debunkers.contains(&0) {
            1.0
        } else {
            0.0
        };
        Ok(debunk::env::StageOutcome {
            reward,
            next_state: self.state.clone(),
        })
    }
}

/// Trains on the bandit with `γ = 0` and returns the greedy choice.
pub fn bandit_greedy_choice(seed: u64, episodes: usize) -> usize {
    use debunk::agents::{train_single_debunker, TrainConfig};
    let cfg = TrainConfig {
        episodes,
        ..TrainConfig::default()
    };
    let out =
        train_single_debunker(|_| Ok(Bandit::new(5)), Bandit::N, &[], 0.0, &cfg, seed).unwrap();
    let q = out
        .policy
        .q_values(Bandit::new(1).state.as_slice())
        .unwrap();
    if q[0] >= q[1] {
        0
    } else {
        1
    }
}

/// A random stage: state, costs in `[1, 5]`, spreaders and budget.
pub struct RandomStage {
    pub state: debunk::env::CampaignState,
    pub costs: Vec<f64>,
    pub spreaders: Vec<usize>,
    pub budget: f64,
}

impl RandomStage {
    pub fn draw(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let state = debunk::env::CampaignState::from_vec(
            (0..5 * n).map(|_| rng.random_range(0.0..2.0)).collect(),
        )
        .unwrap();
        let costs = (0..n).map(|_| rng.random_range(1.0..5.0)).collect();
        let k = rng.random_range(0..n.min(3));
        let spreaders = rand::seq::index::sample(rng, n, k).into_vec();
        let budget = rng.random_range(0.0..30.0);
        Self {
            state,
            costs,
            spreaders,
            budget,
        }
    }

    pub fn context(&self, stage: usize) -> debunk::agents::StageContext<'_> {
        debunk::agents::StageContext {
            state: &self.state,
            costs: &self.costs,
            spreaders: &self.spreaders,
            budget: self.budget,
            stage,
        }
    }
}

/// Untrained networks of the right shapes for every learned policy.
pub fn random_models(rng: &mut ChaCha8Rng, n: usize) -> debunk::agents::TrainedModels {
    debunk::agents::TrainedModels {
        q: Some(DenseNet::new(&[5 * n, 16, n], rng)),
        fsp: Some(debunk::agents::FspModel::new(
            n,
            debunk::nn::AdamConfig::default(),
            rng,
        )),
        reward: Some(DenseNet::new(&[5 * n, 16, n], rng)),
    }
}
