use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::fsp::{greedy_q_action, select_multi_debunkers, FspModel};
use super::{Selection, StageContext};
use crate::env::{Action, BudgetSplit};
use crate::error::{Error, Result};
use crate::hawkes::NewsKind;
use crate::nn::{AdamConfig, Checkpoint, DenseNet, LstmCell};

/// Chooses the debunkers of each stage of one campaign. A fresh instance
/// is built per campaign; `rng` is the campaign's policy stream, separate
/// from the environment's.
pub trait Policy {
    fn kind(&self) -> PolicyKind;
    fn select(&mut self, ctx: &StageContext<'_>, rng: &mut ChaCha8Rng) -> Result<Action>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Rnd,
    MaxInf,
    MaxCov,
    Nn,
    Ltd,
    Dqn,
    DqnFsp,
    NoMitigation,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::Rnd,
        PolicyKind::MaxInf,
        PolicyKind::MaxCov,
        PolicyKind::Nn,
        PolicyKind::Ltd,
        PolicyKind::Dqn,
        PolicyKind::DqnFsp,
        PolicyKind::NoMitigation,
    ];

    /// The seven compared policies (everything except no-mitigation).
    pub const COMPARED: [PolicyKind; 7] = [
        PolicyKind::Rnd,
        PolicyKind::MaxInf,
        PolicyKind::MaxCov,
        PolicyKind::Nn,
        PolicyKind::Ltd,
        PolicyKind::Dqn,
        PolicyKind::DqnFsp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Rnd => "rnd",
            PolicyKind::MaxInf => "max-inf",
            PolicyKind::MaxCov => "max-cov",
            PolicyKind::Nn => "nn",
            PolicyKind::Ltd => "ltd",
            PolicyKind::Dqn => "dqn",
            PolicyKind::DqnFsp => "dqn-fsp",
            PolicyKind::NoMitigation => "none",
        }
    }

    /// Fixed-set campaigns spread the same total budget evenly.
    pub fn budget_split(self) -> BudgetSplit {
        match self {
            PolicyKind::Ltd => BudgetSplit::Equal,
            _ => BudgetSplit::Random,
        }
    }

    pub fn needs_training(self) -> bool {
        matches!(self, PolicyKind::Nn | PolicyKind::Dqn | PolicyKind::DqnFsp)
    }

    /// Parses a comma-separated list; `all` expands to the compared set.
    pub fn parse_list(s: &str) -> Result<Vec<PolicyKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(Self::COMPARED);
            } else {
                out.push(part.parse()?);
            }
        }
        let mut seen = Vec::new();
        out.retain(|k| {
            let fresh = !seen.contains(k);
            seen.push(*k);
            fresh
        });
        Ok(out)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == lower)
            .ok_or_else(|| Error::UnknownPolicy {
                name: s.to_string(),
                valid: PolicyKind::ALL.map(|k| k.name()).join(", "),
            })
    }
}

/// Fills the budget with uniformly random affordable nodes.
#[derive(Debug, Default)]
pub struct Rnd;

impl Policy for Rnd {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Rnd
    }

    fn select(&mut self, ctx: &StageContext<'_>, rng: &mut ChaCha8Rng) -> Result<Action> {
        Ok(random_fill(ctx.costs, ctx.spreaders, ctx.budget, rng))
    }
}

fn random_fill(costs: &[f64], spreaders: &[usize], budget: f64, rng: &mut ChaCha8Rng) -> Action {
    let mut sel = Selection::new(costs, spreaders, budget);
    loop {
        let legal = sel.legal();
        if legal.is_empty() {
            break;
        }
        sel.take(legal[rng.random_range(0..legal.len())]);
    }
    sel.into_action()
}

/// Takes nodes in the given order, skipping any that no longer fit.
fn fill_in_order(order: &[usize], ctx: &StageContext<'_>) -> Action {
    let mut sel = Selection::new(ctx.costs, ctx.spreaders, ctx.budget);
    for &u in order {
        if sel.affordable(u) {
            sel.take(u);
        }
    }
    sel.into_action()
}

/// Highest `z_M · z_F` first.
#[derive(Debug, Default)]
pub struct MaxInf;

impl Policy for MaxInf {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MaxInf
    }

    fn select(&mut self, ctx: &StageContext<'_>, _rng: &mut ChaCha8Rng) -> Result<Action> {
        let zm = ctx.state.z(NewsKind::Mitigation);
        let zf = ctx.state.z(NewsKind::Fake);
        let score: Vec<f64> = zm.iter().zip(zf).map(|(m, f)| m * f).collect();
        let mut order: Vec<usize> = (0..score.len()).collect();
        order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
        Ok(fill_in_order(&order, ctx))
    }
}

/// Cheapest first.
#[derive(Debug, Default)]
pub struct MaxCov;

impl Policy for MaxCov {
    fn kind(&self) -> PolicyKind {
        PolicyKind::MaxCov
    }

    fn select(&mut self, ctx: &StageContext<'_>, _rng: &mut ChaCha8Rng) -> Result<Action> {
        let mut order: Vec<usize> = (0..ctx.costs.len()).collect();
        order.sort_by(|&a, &b| ctx.costs[a].total_cmp(&ctx.costs[b]).then(a.cmp(&b)));
        Ok(fill_in_order(&order, ctx))
    }
}

/// One random debunker set drawn at the first stage and reused for the
/// whole campaign.
#[derive(Debug, Default)]
pub struct Ltd {
    set: Option<Vec<usize>>,
}

impl Ltd {
    pub fn fixed_set(&self) -> Option<&[usize]> {
        self.set.as_deref()
    }
}

impl Policy for Ltd {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ltd
    }

    fn select(&mut self, ctx: &StageContext<'_>, rng: &mut ChaCha8Rng) -> Result<Action> {
        let set = self.set.get_or_insert_with(|| {
            random_fill(ctx.costs, ctx.spreaders, ctx.budget, rng).debunkers
        });
        Ok(fill_in_order(set, ctx))
    }
}

#[derive(Debug, Default)]
pub struct NoMitigation;

impl Policy for NoMitigation {
    fn kind(&self) -> PolicyKind {
        PolicyKind::NoMitigation
    }

    fn select(&mut self, _ctx: &StageContext<'_>, _rng: &mut ChaCha8Rng) -> Result<Action> {
        Ok(Action::empty())
    }
}

/// Highest network output first, on the stage-start state only. Serves the
/// Q-network without the predictor and the immediate-reward regressor.
#[derive(Debug)]
pub struct GreedyQ<'a> {
    kind: PolicyKind,
    net: &'a DenseNet,
}

impl<'a> GreedyQ<'a> {
    pub fn new(kind: PolicyKind, net: &'a DenseNet) -> Self {
        Self { kind, net }
    }
}

impl Policy for GreedyQ<'_> {
    fn kind(&self) -> PolicyKind {
        self.kind
    }

    fn select(&mut self, ctx: &StageContext<'_>, _rng: &mut ChaCha8Rng) -> Result<Action> {
        greedy_q_action(self.net, ctx.state, ctx.costs, ctx.spreaders, ctx.budget)
    }
}

/// Q-network with the future-state predictor.
#[derive(Debug)]
pub struct QWithPredictor<'a> {
    q: &'a DenseNet,
    fsp: &'a FspModel,
}

impl<'a> QWithPredictor<'a> {
    pub fn new(q: &'a DenseNet, fsp: &'a FspModel) -> Self {
        Self { q, fsp }
    }
}

impl Policy for QWithPredictor<'_> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::DqnFsp
    }

    fn select(&mut self, ctx: &StageContext<'_>, _rng: &mut ChaCha8Rng) -> Result<Action> {
        select_multi_debunkers(
            self.q,
            self.fsp,
            ctx.state,
            ctx.costs,
            ctx.spreaders,
            ctx.budget,
        )
    }
}

/// Networks produced by training.
#[derive(Debug, Clone, Default)]
pub struct TrainedModels {
    pub q: Option<DenseNet>,
    pub fsp: Option<FspModel>,
    pub reward: Option<DenseNet>,
}

const Q_FILE: &str = "q_network.ckpt";
const FSP_FILE: &str = "predictor.ckpt";
const REWARD_FILE: &str = "reward_model.ckpt";

impl TrainedModels {
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(q) = &self.q {
            q.save(&dir.join(Q_FILE))?;
        }
        if let Some(f) = &self.fsp {
            f.cell().save(&dir.join(FSP_FILE))?;
        }
        if let Some(r) = &self.reward {
            r.save(&dir.join(REWARD_FILE))?;
        }
        Ok(())
    }

    /// Loads whichever checkpoints exist in `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        Ok(Self {
            q: opt(Q_FILE).map(|p| DenseNet::load(&p)).transpose()?,
            fsp: opt(FSP_FILE)
                .map(|p| {
                    LstmCell::load(&p).and_then(|c| FspModel::from_cell(c, AdamConfig::default()))
                })
                .transpose()?,
            reward: opt(REWARD_FILE).map(|p| DenseNet::load(&p)).transpose()?,
        })
    }
}

/// Instantiates `kind` for one campaign.
pub fn build_policy<'a>(
    kind: PolicyKind,
    models: &'a TrainedModels,
) -> Result<Box<dyn Policy + 'a>> {
    let missing = |what: &str| Error::Checkpoint(format!("policy `{kind}` needs a trained {what}"));
    Ok(match kind {
        PolicyKind::Rnd => Box::new(Rnd),
        PolicyKind::MaxInf => Box::new(MaxInf),
        PolicyKind::MaxCov => Box::new(MaxCov),
        PolicyKind::Ltd => Box::new(Ltd::default()),
        PolicyKind::NoMitigation => Box::new(NoMitigation),
        PolicyKind::Nn => Box::new(GreedyQ::new(
            kind,
            models
                .reward
                .as_ref()
                .ok_or_else(|| missing("reward model"))?,
        )),
        PolicyKind::Dqn => Box::new(GreedyQ::new(
            kind,
            models.q.as_ref().ok_or_else(|| missing("Q-network"))?,
        )),
        PolicyKind::DqnFsp => Box::new(QWithPredictor::new(
            models.q.as_ref().ok_or_else(|| missing("Q-network"))?,
            models
                .fsp
                .as_ref()
                .ok_or_else(|| missing("state predictor"))?,
        )),
    })
}
