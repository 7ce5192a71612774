//! Command-line front end: `generate`, `train`, `evaluate`, `scatter`, `fit`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::{PolicyKind, TrainedModels};
use crate::error::{Error, Result};
use crate::estimation::{fit_least_squares, ingest_file, FitConfig, IngestOptions};
use crate::experiment::{
    evaluate, generate, run_campaign, scatter_from_trace, test_campaign_seed, train,
    write_evaluation, write_scatter_file, write_training_curve, ExperimentConfig, Layout,
};
use crate::hawkes::{scale_to_spectral_radius, HawkesParams};
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(
    name = "debunk",
    version,
    about = "Multi-stage fake-news mitigation experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the synthetic network and Hawkes parameters.
    Generate(Common),
    /// Train the Q-network, the state predictor and the reward regressor.
    Train(Common),
    /// Run policies on matched test campaigns and write metrics.
    Evaluate(Common),
    /// Exposure scatter of a saved campaign trace.
    Scatter(ScatterArgs),
    /// Fit Hawkes parameters to a labelled event file.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `network.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Comma-separated policy names, or `all`.
    #[arg(long)]
    pub policies: Option<String>,
    /// Training episodes, overriding `training.episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
    /// Multiplies both ends of the stage-budget range.
    #[arg(long)]
    pub budget_scale: Option<f64>,
}

impl Common {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.network.seed = s;
        }
        if let Some(e) = self.episodes {
            cfg.training.episodes = e;
        }
        if let Some(p) = &self.policies {
            cfg.evaluation.policies = p.split(',').map(|s| s.trim().to_string()).collect();
        }
        if let Some(f) = self.budget_scale {
            cfg.scale_budgets(f)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub common: Common,
    /// Trace directory; defaults to `<out-dir>/traces/<policy>`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Policy whose saved trace is used when `--trace` is absent.
    #[arg(long, default_value = "none")]
    pub policy: String,
    /// Comma-separated times; defaults to every stage boundary.
    #[arg(long, value_delimiter = ',')]
    pub boundaries: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Records `user_id,timestamp,label`.
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    /// Keep negative estimates instead of clipping them to zero.
    #[arg(long)]
    pub allow_negative: bool,
    /// Horizon the timestamps are rescaled onto.
    #[arg(long, default_value_t = 500.0)]
    pub horizon: f64,
    /// Keep the shifted timestamps on their original scale.
    #[arg(long)]
    pub no_rescale: bool,
    /// Target spectral radius of the fitted matrix; 0 leaves it unscaled.
    #[arg(long, default_value_t = 0.8)]
    pub spectral_radius: f64,
    /// Write all-zero parameters for an empty log instead of failing.
    #[arg(long)]
    pub allow_empty: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(c) => cmd_generate(&c),
        Command::Train(c) => cmd_train(&c),
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Scatter(s) => cmd_scatter(&s),
        Command::Fit(f) => cmd_fit(&f),
    }
}

fn save_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    Ok(())
}

/// Loads the scenario under `out-dir`, generating it when absent.
fn scenario_for(cfg: &ExperimentConfig, layout: &Layout) -> Result<Scenario> {
    let dir = layout.scenario();
    if dir.join("params.toml").exists() {
        Scenario::load(&dir)
    } else {
        log::info!("no scenario in {}; generating", dir.display());
        let s = generate(cfg)?;
        s.save(&dir)?;
        Ok(s)
    }
}

pub fn cmd_generate(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let layout = Layout::new(&c.out_dir);
    let scenario = generate(&cfg)?;
    scenario.save(&layout.scenario())?;
    save_config(&cfg, &layout.root)?;
    println!(
        "wrote {} users, {} follower edges; spectral radius of A = {:.9}",
        scenario.n(),
        scenario.graph.edge_count(),
        scenario.params.spectral_radius()
    );
    Ok(())
}

pub fn cmd_train(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let layout = Layout::new(&c.out_dir);
    let scenario = scenario_for(&cfg, &layout)?;
    log::info!("training for {} episodes", cfg.training.episodes);
    let (models, curve) = train(&cfg, &scenario)?;
    models.save(&layout.checkpoints())?;
    write_training_curve(&curve, &layout.curve())?;
    save_config(&cfg, &layout.root)?;
    println!(
        "wrote checkpoints to {} and {} curve rows",
        layout.checkpoints().display(),
        curve.len()
    );
    Ok(())
}

pub fn cmd_evaluate(c: &Common) -> Result<()> {
    let cfg = c.resolve()?;
    let policies = cfg.policies()?;
    let layout = Layout::new(&c.out_dir);
    let scenario = scenario_for(&cfg, &layout)?;
    let models = if policies.iter().any(|p| p.needs_training()) {
        TrainedModels::load(&layout.checkpoints())?
    } else {
        TrainedModels::default()
    };
    let eval = evaluate(&cfg, &scenario, &models, &policies)?;
    write_evaluation(&eval, &layout.root)?;
    let campaign = cfg.campaign_config();
    for &p in &policies {
        let done = run_campaign(
            &scenario,
            &campaign,
            p,
            &models,
            test_campaign_seed(&cfg, 0, 0),
        )?;
        done.save_trace(&layout.traces().join(p.name()))?;
    }
    for s in &eval.summary {
        println!(
            "{:<8} mean {:>10.4} std {:>9.4} ratio {:>7.4}",
            s.policy, s.mean, s.std, s.ratio
        );
    }
    Ok(())
}

pub fn cmd_scatter(s: &ScatterArgs) -> Result<()> {
    let cfg = s.common.resolve()?;
    let layout = Layout::new(&s.common.out_dir);
    let scenario = Scenario::load(&layout.scenario())?;
    let policy: PolicyKind = s.policy.parse()?;
    let trace = s
        .trace
        .clone()
        .unwrap_or_else(|| layout.traces().join(policy.name()));
    let points = scatter_from_trace(
        &scenario,
        &trace,
        &s.boundaries,
        cfg.campaign.exposure_transpose,
    )?;
    let out = layout.root.join(format!("scatter_{}.csv", policy.name()));
    write_scatter_file(&points, &out)?;
    for (t, pts) in &points {
        let above = pts
            .iter()
            .filter(|p| !p.spreader && p.above_diagonal())
            .count();
        println!("t = {t:.3}: {above} non-spreader users above the diagonal");
    }
    Ok(())
}

pub fn cmd_fit(f: &FitArgs) -> Result<()> {
    let opts = IngestOptions {
        horizon: (!f.no_rescale).then_some(f.horizon),
    };
    let data = ingest_file(&f.events, opts)?;
    let fit = FitConfig {
        omega: f.omega,
        nonnegative: !f.allow_negative,
        ridge: f.ridge,
    };
    let n = data.n();
    let params = if n == 0 {
        if !f.allow_empty {
            return Err(Error::invalid(
                "events",
                "no records to fit (pass --allow-empty for zero parameters)",
            ));
        }
        HawkesParams::new(ndarray::Array2::zeros((0, 0)), f.omega, vec![], vec![])?
    } else {
        let raw = fit_least_squares(std::slice::from_ref(&data.logs), n, &fit)?;
        if f.spectral_radius > 0.0 {
            match scale_to_spectral_radius(raw.a(), f.spectral_radius) {
                Ok(a) => HawkesParams::new(
                    a,
                    f.omega,
                    raw.mu_fake().to_vec(),
                    raw.mu_mitigation().to_vec(),
                )?,
                Err(Error::ZeroSpectralRadius) => {
                    log::warn!("fitted excitation matrix has spectral radius 0; left unscaled");
                    raw
                }
                Err(e) => return Err(e),
            }
        } else {
            raw
        }
    };
    std::fs::create_dir_all(&f.out_dir)?;
    params.save(&f.out_dir.join("fitted_params.toml"))?;
    std::fs::write(
        f.out_dir.join("users.txt"),
        data.users.join("\n") + if n > 0 { "\n" } else { "" },
    )?;
    println!(
        "fitted {n} users ({} fake, {} true events); spectral radius {:.6}",
        data.logs.fake.len(),
        data.logs.mitigation.len(),
        params.spectral_radius()
    );
    Ok(())
}
