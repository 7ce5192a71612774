//! The multi-stage mitigation campaign: stage schedule, state features,
//! debunker actions, stage simulation and the correlation reward.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{excitation, simulate_into, EventLog, HawkesParams, NewsKind};
use crate::network::SocialGraph;
use crate::scenario::Scenario;
use crate::seeds::derive_seed;

/// Per-campaign settings. Defaults: window 500, 10 stages, stage budgets
/// in `[5, 50]`, boost 3, rate window 25, discount 0.8.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub horizon: f64,
    pub num_stages: usize,
    pub budget_min: f64,
    pub budget_max: f64,
    /// Increase of a debunker's mitigation base intensity during its stage.
    pub boost: f64,
    /// Window for the recent posting rates in the state.
    pub delta_t: f64,
    pub gamma: f64,
    /// Use `B^T` instead of `B` when aggregating posts into exposure.
    pub exposure_transpose: bool,
    /// Min-max scale follower counts into `[0, 1]` in the state vector.
    pub normalize_followers: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            horizon: 500.0,
            num_stages: 10,
            budget_min: 5.0,
            budget_max: 50.0,
            boost: 3.0,
            delta_t: 25.0,
            gamma: 0.8,
            exposure_transpose: false,
            normalize_followers: false,
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("campaign.horizon", "must be positive"));
        }
        if self.num_stages == 0 {
            return Err(Error::invalid("campaign.num_stages", "must be at least 1"));
        }
        if !(self.budget_min >= 0.0 && self.budget_min <= self.budget_max) {
            return Err(Error::invalid(
                "campaign.budget_min/budget_max",
                "need 0 <= min <= max",
            ));
        }
        if !(self.boost >= 0.0) {
            return Err(Error::invalid("campaign.boost", "must be nonnegative"));
        }
        if !(self.delta_t > 0.0) {
            return Err(Error::invalid("campaign.delta_t", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("campaign.gamma", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Stage boundaries `0 = t_0 < t_1 < ... < t_K = horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSchedule {
    boundaries: Vec<f64>,
}

impl StageSchedule {
    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 || boundaries[0] != 0.0 {
            return Err(Error::invalid(
                "schedule",
                "needs at least two boundaries starting at 0",
            ));
        }
        if boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "schedule",
                "boundaries must be strictly increasing",
            ));
        }
        Ok(Self { boundaries })
    }

    /// Evenly spaced stages.
    pub fn uniform(horizon: f64, num_stages: usize) -> Result<Self> {
        let k = num_stages.max(1);
        Self::from_boundaries((0..=k).map(|i| horizon * i as f64 / k as f64).collect())
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn num_stages(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn start(&self, k: usize) -> f64 {
        self.boundaries[k]
    }

    pub fn end(&self, k: usize) -> f64 {
        self.boundaries[k + 1]
    }

    pub fn horizon(&self) -> f64 {
        *self.boundaries.last().expect("nonempty")
    }
}

/// `K - 1` interior boundaries drawn uniformly from `(0, horizon)`,
/// sorted and deduplicated.
pub fn make_schedule<R: Rng + ?Sized>(config: &CampaignConfig, rng: &mut R) -> StageSchedule {
    let mut interior: Vec<f64> = (1..config.num_stages.max(1))
        .map(|_| loop {
            let t = rng.random::<f64>() * config.horizon;
            if t > 0.0 {
                break t;
            }
        })
        .collect();
    interior.sort_by(f64::total_cmp);
    interior.dedup();
    let mut boundaries = Vec::with_capacity(interior.len() + 2);
    boundaries.push(0.0);
    boundaries.extend(interior);
    boundaries.push(config.horizon);
    StageSchedule { boundaries }
}

/// Per-stage budgets drawn uniformly from the configured range.
pub fn draw_budgets<R: Rng + ?Sized>(
    config: &CampaignConfig,
    stages: usize,
    rng: &mut R,
) -> Vec<f64> {
    (0..stages)
        .map(|_| config.budget_min + rng.random::<f64>() * (config.budget_max - config.budget_min))
        .collect()
}

/// Propagation state at a stage boundary: `[y_F; y_M; z_F; z_M; e]`,
/// length `5n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignState {
    n: usize,
    data: Vec<f64>,
}

impl CampaignState {
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if data.len() % 5 != 0 {
            return Err(Error::invalid(
                "state",
                format!("length {} is not a multiple of 5", data.len()),
            ));
        }
        Ok(Self {
            n: data.len() / 5,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    fn block(&self, b: usize) -> &[f64] {
        &self.data[b * self.n..(b + 1) * self.n]
    }

    /// Excited intensity (base excluded) at the boundary.
    pub fn y(&self, kind: NewsKind) -> &[f64] {
        match kind {
            NewsKind::Fake => self.block(0),
            NewsKind::Mitigation => self.block(1),
        }
    }

    /// Posting rate over the trailing rate window.
    pub fn z(&self, kind: NewsKind) -> &[f64] {
        match kind {
            NewsKind::Fake => self.block(2),
            NewsKind::Mitigation => self.block(3),
        }
    }

    pub fn followers(&self) -> &[f64] {
        self.block(4)
    }

    /// Min-max scales the follower block into `[0, 1]` (all zeros when the
    /// counts are constant).
    pub fn with_normalized_followers(mut self) -> Self {
        let n = self.n;
        let e = &mut self.data[4 * n..];
        let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in e.iter_mut() {
            *v = if hi > lo { (*v - lo) / (hi - lo) } else { 0.0 };
        }
        self
    }
}

/// Builds the state at boundary `t_k`: `y` from events strictly before
/// `t_k`, `z` from events in `(t_k - delta_t, t_k]`, `e` from the graph.
pub fn build_state(
    params: &HawkesParams,
    graph: &SocialGraph,
    log_fake: &EventLog,
    log_mitigation: &EventLog,
    t_k: f64,
    delta_t: f64,
) -> CampaignState {
    let n = params.n();
    let mut data = Vec::with_capacity(5 * n);
    data.extend(excitation(params, NewsKind::Fake, log_fake, t_k));
    data.extend(excitation(
        params,
        NewsKind::Mitigation,
        log_mitigation,
        t_k,
    ));
    for (kind, log) in [
        (NewsKind::Fake, log_fake),
        (NewsKind::Mitigation, log_mitigation),
    ] {
        let counts = log.counts_between(n, kind, t_k - delta_t, t_k);
        data.extend(counts.into_iter().map(|c| c as f64 / delta_t));
    }
    data.extend(graph.follower_counts().into_iter().map(|e| e as f64));
    CampaignState { n, data }
}

/// Debunkers selected for one stage, in selection order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Action {
    pub debunkers: Vec<usize>,
}

impl Action {
    pub fn new(debunkers: Vec<usize>) -> Self {
        Self { debunkers }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.debunkers.is_empty()
    }

    pub fn cost(&self, costs: &[f64]) -> f64 {
        self.debunkers.iter().map(|&i| costs[i]).sum()
    }

    /// Checks the budget, spreader and duplicate constraints.
    pub fn validate(&self, costs: &[f64], spreaders: &[usize], budget: f64) -> Result<()> {
        let n = costs.len();
        let mut seen = vec![false; n];
        for &i in &self.debunkers {
            if i >= n {
                return Err(Error::InvalidAction(format!("node {i} out of range")));
            }
            if seen[i] {
                return Err(Error::InvalidAction(format!("node {i} selected twice")));
            }
            seen[i] = true;
            if spreaders.contains(&i) {
                return Err(Error::InvalidAction(format!(
                    "node {i} is a fake-news spreader"
                )));
            }
        }
        let spent = self.cost(costs);
        if spent > budget {
            return Err(Error::InvalidAction(format!(
                "cost {spent} exceeds stage budget {budget}"
            )));
        }
        Ok(())
    }
}

/// Raises the mitigation base intensity of every debunker by `boost`.
pub fn apply_action(params: &HawkesParams, action: &Action, boost: f64) -> HawkesParams {
    let mut out = params.clone();
    if boost != 0.0 {
        let mu = out.mu_mitigation_mut();
        for &i in &action.debunkers {
            mu[i] += boost;
        }
    }
    out
}

/// Correlation reward over the window `(t_k, t]`:
/// `(1/n) Σ_i M_i F_i` with `M_i = Σ_j b_ij ΔN^M_j / (t - t_k)` and `F`
/// analogous for fake news.
pub fn reward(
    graph: &SocialGraph,
    log_fake: &EventLog,
    log_mitigation: &EventLog,
    t_k: f64,
    t: f64,
    transpose: bool,
) -> Result<f64> {
    if !(t > t_k) {
        return Err(Error::EmptyWindow { t_start: t_k, t });
    }
    let n = graph.n();
    if n == 0 {
        return Ok(0.0);
    }
    let width = t - t_k;
    let rates = |log: &EventLog, kind| -> Vec<f64> {
        log.counts_between(n, kind, t_k, t)
            .into_iter()
            .map(|c| c as f64 / width)
            .collect()
    };
    let m = graph.exposure(&rates(log_mitigation, NewsKind::Mitigation), transpose);
    let f = graph.exposure(&rates(log_fake, NewsKind::Fake), transpose);
    Ok(m.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>() / n as f64)
}

/// Discounted return `Σ_k γ^k R^k`.
pub fn campaign_return(rewards: &[f64], gamma: f64) -> f64 {
    let mut discount = 1.0;
    let mut total = 0.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// The two event histories of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignLogs {
    pub fake: EventLog,
    pub mitigation: EventLog,
}

impl CampaignLogs {
    pub fn new(horizon: f64) -> Self {
        Self {
            fake: EventLog::new(horizon),
            mitigation: EventLog::new(horizon),
        }
    }

    pub fn get(&self, kind: NewsKind) -> &EventLog {
        match kind {
            NewsKind::Fake => &self.fake,
            NewsKind::Mitigation => &self.mitigation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub reward: f64,
    pub next_state: CampaignState,
}

/// Random streams for one stage: one generator per news kind.
pub struct StageRng {
    pub fake: ChaCha8Rng,
    pub mitigation: ChaCha8Rng,
}

impl StageRng {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            fake: ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0])),
            mitigation: ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1])),
        }
    }
}

/// Runs stage `k`: validates the action against `budget`, simulates both
/// cascades over `(t_k, t_{k+1}]` with the debunkers boosted, scores the
/// stage and builds the next state. The boost is confined to this stage;
/// `scenario.params` is never modified.
#[allow(clippy::too_many_arguments)]
pub fn run_stage(
    scenario: &Scenario,
    config: &CampaignConfig,
    logs: &mut CampaignLogs,
    schedule: &StageSchedule,
    k: usize,
    budget: f64,
    action: &Action,
    rng: &mut StageRng,
) -> Result<StageOutcome> {
    action.validate(scenario.costs(), &scenario.spreaders, budget)?;
    let (t_k, t_next) = (schedule.start(k), schedule.end(k));
    for log in [&logs.fake, &logs.mitigation] {
        if log.last_time().is_some_and(|t| t > t_k) {
            return Err(Error::InvalidLog(format!(
                "history extends past stage start {t_k}"
            )));
        }
    }

    let boosted = apply_action(&scenario.params, action, config.boost);
    simulate_into(
        &scenario.params,
        NewsKind::Fake,
        &mut logs.fake,
        t_k,
        t_next,
        &mut rng.fake,
    )?;
    simulate_into(
        &boosted,
        NewsKind::Mitigation,
        &mut logs.mitigation,
        t_k,
        t_next,
        &mut rng.mitigation,
    )?;

    let r = reward(
        &scenario.graph,
        &logs.fake,
        &logs.mitigation,
        t_k,
        t_next,
        config.exposure_transpose,
    )?;
    let mut next_state = build_state(
        &scenario.params,
        &scenario.graph,
        &logs.fake,
        &logs.mitigation,
        t_next,
        config.delta_t,
    );
    if config.normalize_followers {
        next_state = next_state.with_normalized_followers();
    }
    Ok(StageOutcome {
        reward: r,
        next_state,
    })
}

/// One row of a campaign trace.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub budget: f64,
    pub debunkers: Vec<usize>,
    pub cost_spent: f64,
    pub reward: f64,
}

/// How stage budgets are set for a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetSplit {
    /// Independent draws from the configured range.
    Random,
    /// Same total as the random draws, split equally across stages.
    Equal,
}

/// A running campaign. Schedule, budgets and every stage's simulation
/// streams derive from the campaign seed alone, so different policies
/// replayed on the same seed face the same environment noise.
pub struct Campaign<'a> {
    scenario: &'a Scenario,
    config: &'a CampaignConfig,
    seed: u64,
    schedule: StageSchedule,
    budgets: Vec<f64>,
    logs: CampaignLogs,
    stage: usize,
    state: CampaignState,
    rewards: Vec<f64>,
    trace: Vec<StageRecord>,
}

impl<'a> Campaign<'a> {
    pub fn new(scenario: &'a Scenario, config: &'a CampaignConfig, seed: u64) -> Result<Self> {
        Self::with_split(scenario, config, seed, BudgetSplit::Random)
    }

    pub fn with_split(
        scenario: &'a Scenario,
        config: &'a CampaignConfig,
        seed: u64,
        split: BudgetSplit,
    ) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xC0FFEE]));
        let schedule = make_schedule(config, &mut rng);
        let mut budgets = draw_budgets(config, schedule.num_stages(), &mut rng);
        if split == BudgetSplit::Equal {
            let each = budgets.iter().sum::<f64>() / budgets.len() as f64;
            budgets.iter_mut().for_each(|b| *b = each);
        }
        Ok(Self::from_parts(scenario, config, seed, schedule, budgets))
    }

    /// Campaign with an explicit schedule and budgets.
    pub fn from_parts(
        scenario: &'a Scenario,
        config: &'a CampaignConfig,
        seed: u64,
        schedule: StageSchedule,
        budgets: Vec<f64>,
    ) -> Self {
        assert_eq!(budgets.len(), schedule.num_stages(), "one budget per stage");
        let logs = CampaignLogs::new(schedule.horizon());
        let mut state = build_state(
            &scenario.params,
            &scenario.graph,
            &logs.fake,
            &logs.mitigation,
            0.0,
            config.delta_t,
        );
        if config.normalize_followers {
            state = state.with_normalized_followers();
        }
        Self {
            scenario,
            config,
            seed,
            schedule,
            budgets,
            logs,
            stage: 0,
            state,
            rewards: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn config(&self) -> &'a CampaignConfig {
        self.config
    }

    pub fn schedule(&self) -> &StageSchedule {
        &self.schedule
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn num_stages(&self) -> usize {
        self.schedule.num_stages()
    }

    pub fn is_done(&self) -> bool {
        self.stage >= self.num_stages()
    }

    /// Budget of the current stage.
    pub fn budget(&self) -> f64 {
        self.budgets[self.stage]
    }

    pub fn state(&self) -> &CampaignState {
        &self.state
    }

    pub fn logs(&self) -> &CampaignLogs {
        &self.logs
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn trace(&self) -> &[StageRecord] {
        &self.trace
    }

    pub fn discounted_return(&self) -> f64 {
        campaign_return(&self.rewards, self.config.gamma)
    }

    /// Executes the current stage with `action`.
    pub fn step(&mut self, action: &Action) -> Result<StageOutcome> {
        if self.is_done() {
            return Err(Error::invalid("stage", "campaign already finished"));
        }
        let k = self.stage;
        let mut rng = StageRng::from_seed(derive_seed(self.seed, &[1, k as u64]));
        let outcome = run_stage(
            self.scenario,
            self.config,
            &mut self.logs,
            &self.schedule,
            k,
            self.budgets[k],
            action,
            &mut rng,
        )?;
        self.trace.push(StageRecord {
            stage: k,
            t_start: self.schedule.start(k),
            t_end: self.schedule.end(k),
            budget: self.budgets[k],
            debunkers: action.debunkers.clone(),
            cost_spent: action.cost(self.scenario.costs()),
            reward: outcome.reward,
        });
        self.rewards.push(outcome.reward);
        self.state = outcome.next_state.clone();
        self.stage += 1;
        Ok(outcome)
    }

    /// Writes `trace.csv`, `events_fake.txt` and `events_mitigation.txt`.
    pub fn save_trace(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let f = std::fs::File::create(dir.join("trace.csv"))?;
        write_trace(&self.trace, std::io::BufWriter::new(f))?;
        self.logs.fake.save(&dir.join("events_fake.txt"))?;
        self.logs
            .mitigation
            .save(&dir.join("events_mitigation.txt"))?;
        Ok(())
    }
}

pub fn write_trace<W: Write>(records: &[StageRecord], mut w: W) -> Result<()> {
    writeln!(w, "stage,t_start,t_end,budget,debunkers,cost_spent,reward")?;
    for r in records {
        let debunkers: Vec<String> = r.debunkers.iter().map(|d| d.to_string()).collect();
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.stage,
            r.t_start,
            r.t_end,
            r.budget,
            debunkers.join(";"),
            r.cost_spent,
            r.reward
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<StageRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate().skip(1) {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::parse(path, idx + 1, format!("bad {what}"));
        let f: Vec<&str> = t.split(',').collect();
        if f.len() != 7 {
            return Err(Error::parse(path, idx + 1, "expected 7 fields"));
        }
        let debunkers = if f[4].is_empty() {
            Vec::new()
        } else {
            f[4].split(';')
                .map(|d| d.parse::<usize>().map_err(|_| bad("debunker")))
                .collect::<Result<_>>()?
        };
        out.push(StageRecord {
            stage: f[0].parse().map_err(|_| bad("stage"))?,
            t_start: f[1].parse().map_err(|_| bad("t_start"))?,
            t_end: f[2].parse().map_err(|_| bad("t_end"))?,
            budget: f[3].parse().map_err(|_| bad("budget"))?,
            debunkers,
            cost_spent: f[5].parse().map_err(|_| bad("cost_spent"))?,
            reward: f[6].parse().map_err(|_| bad("reward"))?,
        });
    }
    Ok(out)
}

/// Cumulative exposure of one user at a boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposurePoint {
    pub node: usize,
    pub fake: f64,
    pub mitigation: f64,
    pub spreader: bool,
}

impl ExposurePoint {
    /// More true-news than fake-news exposure.
    pub fn above_diagonal(&self) -> bool {
        self.mitigation > self.fake
    }
}

/// Adjacency-weighted post counts over `[0, t]` for every user.
pub fn exposure_scatter(
    graph: &SocialGraph,
    logs: &CampaignLogs,
    spreaders: &[usize],
    t: f64,
    transpose: bool,
) -> Result<Vec<ExposurePoint>> {
    let horizon = logs.fake.horizon().max(logs.mitigation.horizon());
    if !(0.0..=horizon).contains(&t) {
        return Err(Error::invalid(
            "boundary",
            format!("{t} lies outside [0, {horizon}]"),
        ));
    }
    let n = graph.n();
    let posts = |kind| -> Vec<f64> {
        logs.get(kind)
            .counts_between(n, kind, f64::NEG_INFINITY, t)
            .into_iter()
            .map(|c| c as f64)
            .collect()
    };
    let fake = graph.exposure(&posts(NewsKind::Fake), transpose);
    let mitigation = graph.exposure(&posts(NewsKind::Mitigation), transpose);
    Ok((0..n)
        .map(|i| ExposurePoint {
            node: i,
            fake: fake[i],
            mitigation: mitigation[i],
            spreader: spreaders.contains(&i),
        })
        .collect())
}

pub fn write_scatter<W: Write>(points: &[(f64, Vec<ExposurePoint>)], mut w: W) -> Result<()> {
    writeln!(w, "boundary,node,fake_exposure,true_exposure,spreader")?;
    for (t, pts) in points {
        for p in pts {
            writeln!(
                w,
                "{},{},{},{},{}",
                t,
                p.node,
                p.fake,
                p.mitigation,
                u8::from(p.spreader)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes::Event;
    use crate::network::assign_costs;
    use ndarray::{array, Array2};

    fn ev(user: usize, time: f64, kind: NewsKind) -> Event {
        Event { user, time, kind }
    }

    #[test]
    fn single_stage_schedule() {
        let cfg = CampaignConfig {
            num_stages: 1,
            ..Default::default()
        };
        let s = make_schedule(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(s.boundaries(), &[0.0, 500.0]);
    }

    #[test]
    fn default_schedule_shape() {
        let cfg = CampaignConfig::default();
        let s = make_schedule(&cfg, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(s.boundaries().len(), 11);
        assert_eq!(s.start(0), 0.0);
        assert_eq!(s.horizon(), 500.0);
        assert!(s.boundaries().windows(2).all(|w| w[0] < w[1]));
        let again = make_schedule(&cfg, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(s, again);
    }

    #[test]
    fn state_of_empty_history() {
        let g = SocialGraph::from_edges(3, [(0, 1), (0, 2), (1, 0)]).unwrap();
        let p = HawkesParams::new(Array2::zeros((3, 3)), 1.0, vec![0.1; 3], vec![0.1; 3]).unwrap();
        let s = build_state(
            &p,
            &g,
            &EventLog::new(10.0),
            &EventLog::new(10.0),
            5.0,
            25.0,
        );
        assert_eq!(s.dim(), 15);
        assert!(s.as_slice()[..12].iter().all(|&v| v == 0.0));
        assert_eq!(s.followers(), &[2.0, 1.0, 0.0]);
        let norm = s.with_normalized_followers();
        assert_eq!(norm.followers(), &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn state_excitation_and_rates() {
        let g = SocialGraph::from_edges(2, [(0, 1)]).unwrap();
        let p = HawkesParams::new(
            array![[0.0, 0.3], [0.0, 0.0]],
            1.0,
            vec![0.0; 2],
            vec![0.0; 2],
        )
        .unwrap();
        let fake = EventLog::from_events(vec![ev(1, 0.0, NewsKind::Fake)], 100.0).unwrap();
        let s = build_state(&p, &g, &fake, &EventLog::new(100.0), 1.0, 25.0);
        assert!((s.y(NewsKind::Fake)[0] - 0.3 * (-1.0f64).exp()).abs() < 1e-12);
        assert!((s.y(NewsKind::Fake)[0] - 0.1104).abs() < 1e-4);

        let true_posts: Vec<Event> = [51.0, 60.0, 61.0, 70.0, 75.0]
            .iter()
            .map(|&t| ev(1, t, NewsKind::Mitigation))
            .collect();
        let mit = EventLog::from_events(true_posts, 100.0).unwrap();
        let s = build_state(&p, &g, &EventLog::new(100.0), &mit, 75.0, 25.0);
        assert!((s.z(NewsKind::Mitigation)[1] - 0.2).abs() < 1e-12);
        assert_eq!(s.z(NewsKind::Mitigation)[0], 0.0);
    }

    #[test]
    fn apply_action_boosts_only_debunkers() {
        let p =
            HawkesParams::new(Array2::zeros((10, 10)), 1.0, vec![0.0; 10], vec![0.05; 10]).unwrap();
        assert_eq!(apply_action(&p, &Action::empty(), 3.0), p);
        assert_eq!(apply_action(&p, &Action::new(vec![2, 7]), 0.0), p);
        let boosted = apply_action(&p, &Action::new(vec![2, 7]), 3.0);
        for (i, &m) in boosted.mu_mitigation().iter().enumerate() {
            let want = if i == 2 || i == 7 { 3.05 } else { 0.05 };
            assert!((m - want).abs() < 1e-12);
        }
        assert_eq!(boosted.a(), p.a());
        assert_eq!(boosted.mu_fake(), p.mu_fake());
    }

    #[test]
    fn reward_two_node_fixture() {
        // b_12 = 1 (user 2 follows user 1), 0-based (0, 1)
        let g = SocialGraph::from_edges(2, [(0, 1)]).unwrap();
        let fake = EventLog::from_events(
            vec![ev(1, 2.0, NewsKind::Fake), ev(1, 7.0, NewsKind::Fake)],
            10.0,
        )
        .unwrap();
        let mit = EventLog::from_events(
            [1.0, 3.0, 5.0, 9.0]
                .iter()
                .map(|&t| ev(1, t, NewsKind::Mitigation))
                .collect(),
            10.0,
        )
        .unwrap();
        let r = reward(&g, &fake, &mit, 0.0, 10.0, false).unwrap();
        assert!((r - 0.04).abs() < 1e-12);
        let empty = SocialGraph::from_edges(2, []).unwrap();
        assert_eq!(reward(&empty, &fake, &mit, 0.0, 10.0, false).unwrap(), 0.0);
        assert_eq!(
            reward(
                &g,
                &EventLog::new(10.0),
                &EventLog::new(10.0),
                0.0,
                10.0,
                false
            )
            .unwrap(),
            0.0
        );
        assert!(matches!(
            reward(&g, &fake, &mit, 5.0, 5.0, false),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn discounted_returns() {
        assert_eq!(campaign_return(&[1.0, 1.0, 1.0], 0.0), 1.0);
        assert!((campaign_return(&[1.0, 1.0], 0.8) - 1.8).abs() < 1e-12);
        assert_eq!(campaign_return(&[], 0.8), 0.0);
    }

    #[test]
    fn action_validation() {
        let costs = [2.0, 3.0, 4.0];
        assert!(Action::new(vec![0, 1]).validate(&costs, &[], 5.0).is_ok());
        assert!(Action::new(vec![0, 1]).validate(&costs, &[], 4.9).is_err());
        assert!(Action::new(vec![0, 0]).validate(&costs, &[], 10.0).is_err());
        assert!(Action::new(vec![2]).validate(&costs, &[2], 10.0).is_err());
        assert!(Action::new(vec![3]).validate(&costs, &[], 10.0).is_err());
    }

    fn silent_scenario() -> Scenario {
        let g = assign_costs(
            SocialGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap(),
            1.0,
            5.0,
        )
        .unwrap();
        let p = HawkesParams::new(Array2::zeros((3, 3)), 1.0, vec![0.0; 3], vec![0.0; 3]).unwrap();
        Scenario::new(g, p, vec![0]).unwrap()
    }

    #[test]
    fn silent_environment_yields_zero_reward() {
        let scenario = silent_scenario();
        let cfg = CampaignConfig {
            boost: 0.0,
            ..Default::default()
        };
        let mut c = Campaign::new(&scenario, &cfg, 3).unwrap();
        while !c.is_done() {
            let out = c.step(&Action::empty()).unwrap();
            assert_eq!(out.reward, 0.0);
        }
        assert!(c.logs().fake.is_empty() && c.logs().mitigation.is_empty());
        assert_eq!(c.trace().len(), 10);
    }

    #[test]
    fn campaign_rejects_infeasible_actions() {
        let scenario = silent_scenario();
        let cfg = CampaignConfig::default();
        let mut c = Campaign::new(&scenario, &cfg, 3).unwrap();
        assert!(c.step(&Action::new(vec![0])).is_err());
        assert!(c.step(&Action::new(vec![1, 1])).is_err());
        let too_much = CampaignConfig {
            budget_min: 1.0,
            budget_max: 1.0,
            ..Default::default()
        };
        let mut c = Campaign::new(&scenario, &too_much, 3).unwrap();
        // follower counts (1, 1, 0) give costs (5, 5, 1)
        assert!(c.step(&Action::new(vec![1])).is_err());
        assert!(c.step(&Action::new(vec![2])).is_ok());
    }

    #[test]
    fn equal_split_preserves_total() {
        let scenario = silent_scenario();
        let cfg = CampaignConfig::default();
        let a = Campaign::new(&scenario, &cfg, 8).unwrap();
        let b = Campaign::with_split(&scenario, &cfg, 8, BudgetSplit::Equal).unwrap();
        let ta: f64 = a.budgets().iter().sum();
        let tb: f64 = b.budgets().iter().sum();
        assert!((ta - tb).abs() < 1e-9);
        assert!(b.budgets().windows(2).all(|w| w[0] == w[1]));
        assert_eq!(a.schedule(), b.schedule());
    }

    #[test]
    fn scatter_of_empty_logs_is_origin() {
        let scenario = silent_scenario();
        let logs = CampaignLogs::new(500.0);
        let pts =
            exposure_scatter(&scenario.graph, &logs, &scenario.spreaders, 250.0, false).unwrap();
        assert!(pts.iter().all(|p| p.fake == 0.0 && p.mitigation == 0.0));
        assert!(pts[0].spreader && !pts[1].spreader);
        assert!(exposure_scatter(&scenario.graph, &logs, &[], 600.0, false).is_err());
    }

    #[test]
    fn trace_round_trips() {
        let rec = vec![
            StageRecord {
                stage: 0,
                t_start: 0.0,
                t_end: 12.5,
                budget: 7.25,
                debunkers: vec![3, 1],
                cost_spent: 4.5,
                reward: 0.125,
            },
            StageRecord {
                stage: 1,
                t_start: 12.5,
                t_end: 20.0,
                budget: 5.0,
                debunkers: vec![],
                cost_spent: 0.0,
                reward: 0.0,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&rec, std::fs::File::create(&path).unwrap()).unwrap();
        assert_eq!(read_trace(&path).unwrap(), rec);
    }
}
