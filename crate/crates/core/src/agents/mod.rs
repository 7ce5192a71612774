//! Debunker-selection policies: the deep Q-network trained one debunker
//! per stage, the recurrent future-state predictor used to pick several
//! debunkers in sequence, and the baseline heuristics.

mod baselines;
mod dqn;
mod fsp;
mod replay;
mod train;

pub use self::baselines::{
    build_policy, GreedyQ, Ltd, MaxCov, MaxInf, NoMitigation, Policy, PolicyKind, QWithPredictor,
    Rnd, TrainedModels,
};
pub use self::dqn::{q_select, td_target, DqnConfig, EpsilonSchedule, QPolicy};
pub use self::fsp::{greedy_q_action, select_multi_debunkers, FspModel, FspRollout};
pub use self::replay::{FspSample, ReplayBuffer, Transition};
pub use self::train::{
    refine_predictor, train_reward_model, train_single_debunker, write_curve, EpisodeStats,
    TrainConfig, TrainOutput,
};

use crate::env::{Action, Campaign, CampaignState, StageOutcome};
use crate::error::Result;

/// What a policy sees when choosing the debunkers of one stage.
#[derive(Debug, Clone, Copy)]
pub struct StageContext<'a> {
    pub state: &'a CampaignState,
    pub costs: &'a [f64],
    pub spreaders: &'a [usize],
    pub budget: f64,
    pub stage: usize,
}

/// A staged environment a policy can be trained against.
pub trait Environment {
    fn state(&self) -> &CampaignState;
    fn budget(&self) -> f64;
    fn costs(&self) -> &[f64];
    fn spreaders(&self) -> &[usize];
    fn stage(&self) -> usize;
    fn is_done(&self) -> bool;
    fn step(&mut self, action: &Action) -> Result<StageOutcome>;

    fn context(&self) -> StageContext<'_> {
        StageContext {
            state: self.state(),
            costs: self.costs(),
            spreaders: self.spreaders(),
            budget: self.budget(),
            stage: self.stage(),
        }
    }
}

impl Environment for Campaign<'_> {
    fn state(&self) -> &CampaignState {
        Campaign::state(self)
    }

    fn budget(&self) -> f64 {
        Campaign::budget(self)
    }

    fn costs(&self) -> &[f64] {
        self.scenario().costs()
    }

    fn spreaders(&self) -> &[usize] {
        &self.scenario().spreaders
    }

    fn stage(&self) -> usize {
        Campaign::stage(self)
    }

    fn is_done(&self) -> bool {
        Campaign::is_done(self)
    }

    fn step(&mut self, action: &Action) -> Result<StageOutcome> {
        Campaign::step(self, action)
    }
}

/// Nodes that are not spreaders, not yet selected, and cost at most
/// `remaining`.
pub fn legal_actions(
    costs: &[f64],
    spreaders: &[usize],
    selected: &[usize],
    remaining: f64,
) -> Vec<usize> {
    (0..costs.len())
        .filter(|i| costs[*i] <= remaining && !spreaders.contains(i) && !selected.contains(i))
        .collect()
}

/// Incremental debunker set for one stage. Affordability is checked on the
/// running total, summed in selection order exactly as [`Action::cost`]
/// does, so a finished selection always validates.
#[derive(Debug, Clone)]
pub(crate) struct Selection<'a> {
    costs: &'a [f64],
    budget: f64,
    spent: f64,
    blocked: Vec<bool>,
    chosen: Vec<usize>,
}

impl<'a> Selection<'a> {
    pub(crate) fn new(costs: &'a [f64], spreaders: &[usize], budget: f64) -> Self {
        let mut blocked = vec![false; costs.len()];
        for &s in spreaders {
            if s < blocked.len() {
                blocked[s] = true;
            }
        }
        Self {
            costs,
            budget,
            spent: 0.0,
            blocked,
            chosen: Vec::new(),
        }
    }

    pub(crate) fn affordable(&self, i: usize) -> bool {
        !self.blocked[i] && self.spent + self.costs[i] <= self.budget
    }

    pub(crate) fn legal(&self) -> Vec<usize> {
        (0..self.costs.len())
            .filter(|&i| self.affordable(i))
            .collect()
    }

    pub(crate) fn take(&mut self, i: usize) {
        debug_assert!(self.affordable(i));
        self.blocked[i] = true;
        self.spent += self.costs[i];
        self.chosen.push(i);
    }

    pub(crate) fn into_action(self) -> Action {
        Action::new(self.chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legal_actions_filters_by_cost_and_membership() {
        let costs = [2.0, 3.0, 4.0];
        assert_eq!(legal_actions(&costs, &[], &[], 3.0), vec![0, 1]);
        assert!(legal_actions(&costs, &[], &[], 0.0).is_empty());
        assert_eq!(legal_actions(&costs, &[], &[0], 3.0), vec![1]);
        assert_eq!(legal_actions(&costs, &[1], &[], 10.0), vec![0, 2]);
    }

    #[test]
    fn selection_respects_budget() {
        let costs = [0.1, 0.2, 0.3];
        let mut sel = Selection::new(&costs, &[], 0.6);
        for i in 0..3 {
            if sel.affordable(i) {
                sel.take(i);
            }
        }
        let action = sel.into_action();
        action.validate(&costs, &[], 0.6).unwrap();
    }
}
