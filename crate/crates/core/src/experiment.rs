//! Experiment orchestration: configuration files, scenario generation,
//! training, matched-seed evaluation and exposure diagnostics.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    build_policy, refine_predictor, train_reward_model, train_single_debunker, write_curve,
    EpisodeStats, PolicyKind, TrainConfig, TrainedModels,
};
use crate::env::{
    exposure_scatter, read_trace, write_scatter, Campaign, CampaignConfig, CampaignLogs,
};
use crate::error::{Error, Result};
use crate::hawkes::EventLog;
use crate::scenario::{Scenario, SyntheticConfig};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub n: usize,
    /// Probability of each ordered follower pair.
    pub density: f64,
    pub cost_min: f64,
    pub cost_max: f64,
    /// Master seed for every derived random stream.
    pub seed: u64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            n: 100,
            density: 0.02,
            cost_min: 1.0,
            cost_max: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HawkesSection {
    pub omega: f64,
    /// Raw excitation coefficients come from `U[0, alpha_max]` before scaling.
    pub alpha_max: f64,
    pub spectral_radius: f64,
    pub mu_fake_max: f64,
    pub mu_mitigation_max: f64,
    pub num_spreaders: usize,
    /// Mitigation base-intensity increase of a selected debunker.
    pub boost: f64,
}

impl Default for HawkesSection {
    fn default() -> Self {
        Self {
            omega: 1.0,
            alpha_max: 0.5,
            spectral_radius: 0.8,
            mu_fake_max: 0.2,
            mu_mitigation_max: 0.1,
            num_spreaders: 5,
            boost: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignSection {
    pub horizon: f64,
    pub num_stages: usize,
    pub budget_min: f64,
    pub budget_max: f64,
    pub delta_t: f64,
    pub gamma: f64,
    pub exposure_transpose: bool,
    pub normalize_followers: bool,
}

impl Default for CampaignSection {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Self {
            horizon: c.horizon,
            num_stages: c.num_stages,
            budget_min: c.budget_min,
            budget_max: c.budget_max,
            delta_t: c.delta_t,
            gamma: c.gamma,
            exposure_transpose: c.exposure_transpose,
            normalize_followers: c.normalize_followers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub policies: Vec<String>,
    /// Test campaigns per run.
    pub test_campaigns: usize,
    pub runs: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            policies: PolicyKind::COMPARED
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            test_campaigns: 100,
            runs: 1,
        }
    }
}

/// Everything an experiment needs. All defaults reproduce the reference
/// synthetic setting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSection,
    pub hawkes: HawkesSection,
    pub campaign: CampaignSection,
    pub training: TrainConfig,
    pub evaluation: EvaluationSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.synthetic().validate()?;
        self.campaign_config().validate()?;
        self.training.validate()?;
        self.policies()?;
        if self.evaluation.test_campaigns == 0 || self.evaluation.runs == 0 {
            return Err(Error::invalid(
                "evaluation.test_campaigns/runs",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.network.seed
    }

    pub fn synthetic(&self) -> SyntheticConfig {
        SyntheticConfig {
            n: self.network.n,
            density: self.network.density,
            cost_min: self.network.cost_min,
            cost_max: self.network.cost_max,
            alpha_max: self.hawkes.alpha_max,
            spectral_radius: self.hawkes.spectral_radius,
            omega: self.hawkes.omega,
            mu_fake_max: self.hawkes.mu_fake_max,
            mu_mitigation_max: self.hawkes.mu_mitigation_max,
            num_spreaders: self.hawkes.num_spreaders,
        }
    }

    pub fn campaign_config(&self) -> CampaignConfig {
        let c = &self.campaign;
        CampaignConfig {
            horizon: c.horizon,
            num_stages: c.num_stages,
            budget_min: c.budget_min,
            budget_max: c.budget_max,
            boost: self.hawkes.boost,
            delta_t: c.delta_t,
            gamma: c.gamma,
            exposure_transpose: c.exposure_transpose,
            normalize_followers: c.normalize_followers,
        }
    }

    pub fn policies(&self) -> Result<Vec<PolicyKind>> {
        PolicyKind::parse_list(&self.evaluation.policies.join(","))
    }

    /// Multiplies both ends of the stage-budget range.
    pub fn scale_budgets(&mut self, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor >= 0.0) {
            return Err(Error::invalid(
                "budget-scale",
                "must be a nonnegative number",
            ));
        }
        self.campaign.budget_min *= factor;
        self.campaign.budget_max *= factor;
        Ok(())
    }
}

mod streams {
    pub const SCENARIO: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const REFINE: u64 = 3;
    pub const EVAL: u64 = 4;
    pub const LEARNER: u64 = 5;
    pub const POLICY: u64 = 0x9011;
}

/// Builds the synthetic scenario of `cfg`.
pub fn generate(cfg: &ExperimentConfig) -> Result<Scenario> {
    Scenario::synthetic(
        &cfg.synthetic(),
        derive_seed(cfg.seed(), &[streams::SCENARIO]),
    )
}

/// Seed of test campaign `c` in evaluation run `run`.
pub fn test_campaign_seed(cfg: &ExperimentConfig, run: usize, c: usize) -> u64 {
    derive_seed(cfg.seed(), &[streams::EVAL, run as u64, c as u64])
}

/// Single-debunker training, predictor refinement and the reward
/// regressor, in that order.
pub fn train(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
) -> Result<(TrainedModels, Vec<EpisodeStats>)> {
    let campaign = cfg.campaign_config();
    let seed = cfg.seed();
    let tc = &cfg.training;
    let mut out = train_single_debunker(
        |e| {
            Campaign::new(
                scenario,
                &campaign,
                derive_seed(seed, &[streams::TRAIN, e as u64]),
            )
        },
        scenario.n(),
        &scenario.spreaders,
        campaign.gamma,
        tc,
        derive_seed(seed, &[streams::LEARNER]),
    )?;
    refine_predictor(
        |e| {
            Campaign::new(
                scenario,
                &campaign,
                derive_seed(seed, &[streams::REFINE, e as u64]),
            )
        },
        &mut out,
        campaign.gamma,
        tc,
        derive_seed(seed, &[streams::LEARNER]),
    )?;
    let reward = train_reward_model(
        &out.replay,
        scenario.n(),
        &scenario.spreaders,
        tc,
        derive_seed(seed, &[streams::LEARNER]),
    )?;
    let models = TrainedModels {
        q: Some(out.policy.online().clone()),
        fsp: Some(out.fsp),
        reward: Some(reward),
    };
    Ok((models, out.curve))
}

/// Plays one full campaign with a fresh instance of `kind`. The policy's
/// random stream derives from the campaign seed but is separate from the
/// environment streams.
pub fn run_campaign<'a>(
    scenario: &'a Scenario,
    config: &'a CampaignConfig,
    kind: PolicyKind,
    models: &TrainedModels,
    seed: u64,
) -> Result<Campaign<'a>> {
    let mut campaign = Campaign::with_split(scenario, config, seed, kind.budget_split())?;
    let mut policy = build_policy(kind, models)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[streams::POLICY]));
    while !campaign.is_done() {
        let ctx = crate::agents::Environment::context(&campaign);
        let action = policy.select(&ctx, &mut rng)?;
        campaign.step(&action)?;
    }
    Ok(campaign)
}

/// Return of one test campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub policy: PolicyKind,
    pub run: usize,
    pub campaign: usize,
    pub seed: u64,
    pub discounted_return: f64,
}

/// Aggregate over the campaigns of one `(policy, run)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub policy: PolicyKind,
    pub run: usize,
    pub campaigns: usize,
    pub mean: f64,
    pub std: f64,
    /// Mean return relative to RND in the same run (NaN without RND).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub mean: f64,
    pub std: f64,
    /// Average over runs of the per-run ratio to RND.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub campaigns: Vec<CampaignResult>,
    pub runs: Vec<RunSummary>,
    pub summary: Vec<PolicySummary>,
}

impl Evaluation {
    pub fn summary_for(&self, policy: PolicyKind) -> Option<&PolicySummary> {
        self.summary.iter().find(|s| s.policy == policy)
    }

    pub fn ratio(&self, policy: PolicyKind) -> f64 {
        self.summary_for(policy).map_or(f64::NAN, |s| s.ratio)
    }

    pub fn mean(&self, policy: PolicyKind) -> f64 {
        self.summary_for(policy).map_or(f64::NAN, |s| s.mean)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs every policy on the same test campaigns. Campaigns run in
/// parallel; results are collected in a fixed order.
pub fn evaluate(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    models: &TrainedModels,
    policies: &[PolicyKind],
) -> Result<Evaluation> {
    let campaign_cfg = cfg.campaign_config();
    let (runs, per_run) = (cfg.evaluation.runs, cfg.evaluation.test_campaigns);
    for &p in policies {
        build_policy(p, models)?;
    }
    let jobs: Vec<(PolicyKind, usize, usize)> = policies
        .iter()
        .flat_map(|&p| (0..runs).flat_map(move |r| (0..per_run).map(move |c| (p, r, c))))
        .collect();
    let campaigns = jobs
        .par_iter()
        .map(|&(policy, run, c)| {
            let seed = test_campaign_seed(cfg, run, c);
            let done = run_campaign(scenario, &campaign_cfg, policy, models, seed)?;
            Ok(CampaignResult {
                policy,
                run,
                campaign: c,
                seed,
                discounted_return: done.discounted_return(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let returns = |p: PolicyKind, r: usize| -> Vec<f64> {
        campaigns
            .iter()
            .filter(|c| c.policy == p && c.run == r)
            .map(|c| c.discounted_return)
            .collect()
    };
    let has_rnd = policies.contains(&PolicyKind::Rnd);
    let mut run_rows = Vec::new();
    for &p in policies {
        for r in 0..runs {
            let (mean, std) = mean_std(&returns(p, r));
            let ratio = if has_rnd {
                mean / mean_std(&returns(PolicyKind::Rnd, r)).0
            } else {
                f64::NAN
            };
            run_rows.push(RunSummary {
                policy: p,
                run: r,
                campaigns: per_run,
                mean,
                std,
                ratio,
            });
        }
    }
    let summary = policies
        .iter()
        .map(|&p| {
            let all: Vec<f64> = campaigns
                .iter()
                .filter(|c| c.policy == p)
                .map(|c| c.discounted_return)
                .collect();
            let (mean, std) = mean_std(&all);
            let ratios: Vec<f64> = run_rows
                .iter()
                .filter(|r| r.policy == p)
                .map(|r| r.ratio)
                .collect();
            PolicySummary {
                policy: p,
                mean,
                std,
                ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
            }
        })
        .collect();
    Ok(Evaluation {
        campaigns,
        runs: run_rows,
        summary,
    })
}

/// Writes `metrics.csv` (one row per policy and run, then a summary block
/// of one row per policy) and `campaigns.csv` (one row per campaign).
pub fn write_evaluation(eval: &Evaluation, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("metrics.csv"))?);
    writeln!(
        w,
        "policy,run,campaigns,mean_return,std_return,ratio_vs_rnd"
    )?;
    for r in &eval.runs {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.policy, r.run, r.campaigns, r.mean, r.std, r.ratio
        )?;
    }
    writeln!(w)?;
    writeln!(w, "# summary")?;
    writeln!(w, "policy,mean_return,std_return,ratio_vs_rnd")?;
    for s in &eval.summary {
        writeln!(w, "{},{},{},{}", s.policy, s.mean, s.std, s.ratio)?;
    }
    w.flush()?;

    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("campaigns.csv"))?);
    writeln!(w, "policy,run,campaign,seed,return")?;
    for c in &eval.campaigns {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.policy, c.run, c.campaign, c.seed, c.discounted_return
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_training_curve(curve: &[EpisodeStats], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_curve(curve, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Exposure scatter of a saved campaign trace at the given boundaries, or
/// at every stage boundary of the trace when `boundaries` is empty.
pub fn scatter_from_trace(
    scenario: &Scenario,
    trace_dir: &Path,
    boundaries: &[f64],
    transpose: bool,
) -> Result<Vec<(f64, Vec<crate::env::ExposurePoint>)>> {
    let logs = CampaignLogs {
        fake: EventLog::load(&trace_dir.join("events_fake.txt"))?,
        mitigation: EventLog::load(&trace_dir.join("events_mitigation.txt"))?,
    };
    let times: Vec<f64> = if boundaries.is_empty() {
        read_trace(&trace_dir.join("trace.csv"))?
            .iter()
            .map(|r| r.t_end)
            .collect()
    } else {
        boundaries.to_vec()
    };
    times
        .into_iter()
        .map(|t| {
            Ok((
                t,
                exposure_scatter(&scenario.graph, &logs, &scenario.spreaders, t, transpose)?,
            ))
        })
        .collect()
}

pub fn write_scatter_file(
    points: &[(f64, Vec<crate::env::ExposurePoint>)],
    path: &Path,
) -> Result<()> {
    write_scatter(
        points,
        std::io::BufWriter::new(std::fs::File::create(path)?),
    )
}

/// Standard output layout under an experiment directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn scenario(&self) -> PathBuf {
        self.root.join("scenario")
    }

    pub fn checkpoints(&self) -> PathBuf {
        self.root.join("checkpoints")
    }

    pub fn curve(&self) -> PathBuf {
        self.root.join("training_curve.csv")
    }

    pub fn traces(&self) -> PathBuf {
        self.root.join("traces")
    }
}
