use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dqn::{DqnConfig, EpsilonSchedule, QPolicy};
use super::fsp::{select_multi_debunkers, FspModel};
use super::replay::{FspSample, ReplayBuffer, Transition};
use super::{legal_actions, Environment};
use crate::env::{campaign_return, Action};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, DenseNet};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Single-debunker training campaigns.
    pub episodes: usize,
    pub hidden_layers: Vec<usize>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Q-network updates between target refreshes.
    pub target_sync: u64,
    pub learning_rate: f64,
    pub epsilon: EpsilonSchedule,
    /// Predictor updates after each stage.
    pub fsp_updates_per_stage: usize,
    /// Multi-debunker campaigns that only refine the predictor.
    pub refine_episodes: usize,
    /// Updates of the immediate-reward regressor.
    pub reward_model_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            hidden_layers: vec![256, 256],
            replay_capacity: 10_000,
            batch_size: 32,
            target_sync: 100,
            learning_rate: 1e-3,
            epsilon: EpsilonSchedule::default(),
            fsp_updates_per_stage: 4,
            refine_episodes: 20,
            reward_model_steps: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replay_capacity == 0 {
            return Err(Error::invalid("replay_capacity", "must be at least 1"));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(Error::invalid(
                "batch_size",
                "must be in 1..=replay_capacity",
            ));
        }
        if self.target_sync == 0 {
            return Err(Error::invalid("target_sync", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        let e = &self.epsilon;
        if ![e.start, e.end].iter().all(|v| (0.0..=1.0).contains(v)) || e.decay_fraction < 0.0 {
            return Err(Error::invalid(
                "epsilon",
                "start and end must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            ..AdamConfig::default()
        }
    }

    pub fn dqn(&self, gamma: f64) -> DqnConfig {
        DqnConfig {
            hidden: self.hidden_layers.clone(),
            gamma,
            target_sync: self.target_sync,
            optimizer: self.adam(),
        }
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    /// `dqn` for single-debunker episodes, `refine` for predictor refinement.
    pub phase: &'static str,
    pub discounted_return: f64,
    /// Mean Q loss over the episode's updates (NaN when none ran).
    pub dqn_loss: f64,
    pub fsp_loss: f64,
    pub epsilon: f64,
}

pub fn write_curve<W: Write>(rows: &[EpisodeStats], mut w: W) -> Result<()> {
    writeln!(w, "episode,phase,return,dqn_loss,fsp_loss,epsilon")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.episode, r.phase, r.discounted_return, r.dqn_loss, r.fsp_loss, r.epsilon
        )?;
    }
    Ok(())
}

pub struct TrainOutput {
    pub policy: QPolicy,
    pub fsp: FspModel,
    pub replay: ReplayBuffer<Transition>,
    pub fsp_memory: ReplayBuffer<FspSample>,
    pub curve: Vec<EpisodeStats>,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Deep Q-learning with one debunker per stage. `make_env(e)` builds the
/// environment of episode `e`. Every stage transition is stored in the
/// replay memory and the predictor memory, followed by one Q update and
/// `fsp_updates_per_stage` predictor updates once the memories hold a
/// minibatch.
pub fn train_single_debunker<E, F>(
    mut make_env: F,
    n: usize,
    spreaders: &[usize],
    gamma: f64,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutput>
where
    E: Environment,
    F: FnMut(usize) -> Result<E>,
{
    config.validate()?;
    if config.episodes == 0 {
        return Err(Error::invalid("episodes", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7A41]));
    let mut policy = QPolicy::new(n, spreaders, &config.dqn(gamma), &mut rng)?;
    let mut fsp = FspModel::new(n, config.adam(), &mut rng);
    let mut replay = ReplayBuffer::new(config.replay_capacity)?;
    let mut fsp_memory = ReplayBuffer::new(config.replay_capacity)?;
    let mut curve = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let epsilon = config.epsilon.value(episode, config.episodes);
        let mut env = make_env(episode)?;
        let (mut rewards, mut losses, mut fsp_losses) = (Vec::new(), Vec::new(), Vec::new());
        while !env.is_done() {
            let state = env.state().clone();
            let legal = legal_actions(env.costs(), env.spreaders(), &[], env.budget());
            if legal.is_empty() {
                rewards.push(env.step(&Action::empty())?.reward);
                continue;
            }
            let u = policy.select(state.as_slice(), &legal, epsilon, &mut rng)?;
            let outcome = env.step(&Action::new(vec![u]))?;
            rewards.push(outcome.reward);
            replay.push(Transition {
                state: state.clone(),
                action: u,
                reward: outcome.reward,
                next_state: outcome.next_state.clone(),
                done: env.is_done(),
            });
            fsp_memory.push(FspSample {
                state,
                actions: vec![u],
                next_state: outcome.next_state,
            });
            if replay.len() >= config.batch_size {
                losses.push(policy.train_step(&replay, config.batch_size, &mut rng)?);
            }
            if fsp_memory.len() >= config.batch_size {
                for _ in 0..config.fsp_updates_per_stage {
                    fsp_losses.push(fsp.train_step(&fsp_memory, config.batch_size, &mut rng)?);
                }
            }
        }
        let stats = EpisodeStats {
            episode,
            phase: "dqn",
            discounted_return: campaign_return(&rewards, gamma),
            dqn_loss: mean(&losses),
            fsp_loss: mean(&fsp_losses),
            epsilon,
        };
        log::debug!(
            "episode {episode}: return {:.4}, loss {:.4}, eps {epsilon:.3}",
            stats.discounted_return,
            stats.dqn_loss
        );
        curve.push(stats);
    }
    Ok(TrainOutput {
        policy,
        fsp,
        replay,
        fsp_memory,
        curve,
    })
}

/// Runs multi-debunker campaigns with the frozen Q-network and the
/// predictor, storing each stage's `(s, H, s')` and continuing to train the
/// predictor on the growing memory. Rows are appended to `out.curve`.
pub fn refine_predictor<E, F>(
    mut make_env: F,
    out: &mut TrainOutput,
    gamma: f64,
    config: &TrainConfig,
    seed: u64,
) -> Result<()>
where
    E: Environment,
    F: FnMut(usize) -> Result<E>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7A42]));
    let offset = out.curve.len();
    for episode in 0..config.refine_episodes {
        let mut env = make_env(episode)?;
        let (mut rewards, mut fsp_losses) = (Vec::new(), Vec::new());
        while !env.is_done() {
            let state = env.state().clone();
            let action = select_multi_debunkers(
                out.policy.online(),
                &out.fsp,
                &state,
                env.costs(),
                env.spreaders(),
                env.budget(),
            )?;
            let outcome = env.step(&action)?;
            rewards.push(outcome.reward);
            if !action.is_empty() {
                out.fsp_memory.push(FspSample {
                    state,
                    actions: action.debunkers,
                    next_state: outcome.next_state,
                });
            }
            if out.fsp_memory.len() >= config.batch_size {
                for _ in 0..config.fsp_updates_per_stage {
                    fsp_losses.push(out.fsp.train_step(
                        &out.fsp_memory,
                        config.batch_size,
                        &mut rng,
                    )?);
                }
            }
        }
        out.curve.push(EpisodeStats {
            episode: offset + episode,
            phase: "refine",
            discounted_return: campaign_return(&rewards, gamma),
            dqn_loss: f64::NAN,
            fsp_loss: mean(&fsp_losses),
            epsilon: 0.0,
        });
    }
    Ok(())
}

/// Regressor of the immediate reward of each single-debunker choice,
/// fitted on the replay memory (same architecture as the Q-network).
pub fn train_reward_model(
    replay: &ReplayBuffer<Transition>,
    n: usize,
    spreaders: &[usize],
    config: &TrainConfig,
    seed: u64,
) -> Result<DenseNet> {
    let batch = config.batch_size.min(replay.len());
    if batch == 0 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            available: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x7A43]));
    let mut model = QPolicy::new(n, spreaders, &config.dqn(0.0), &mut rng)?;
    for _ in 0..config.reward_model_steps {
        model.train_step(replay, batch, &mut rng)?;
    }
    Ok(model.online().clone())
}
