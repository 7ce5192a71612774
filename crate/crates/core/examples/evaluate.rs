//! Compares the heuristic policies on matched test campaigns.

use debunk::agents::{PolicyKind, TrainedModels};
use debunk::experiment::{evaluate, generate, ExperimentConfig};

fn main() -> debunk::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.n = 40;
    cfg.evaluation.test_campaigns = 20;
    let scenario = generate(&cfg)?;
    let policies = [
        PolicyKind::Rnd,
        PolicyKind::MaxInf,
        PolicyKind::MaxCov,
        PolicyKind::Ltd,
        PolicyKind::NoMitigation,
    ];
    let eval = evaluate(&cfg, &scenario, &TrainedModels::default(), &policies)?;
    for s in &eval.summary {
        println!("{:<8} mean {:8.4} std {:8.4} ratio {:.3}", s.policy, s.mean, s.std, s.ratio);
    }
    Ok(())
}
