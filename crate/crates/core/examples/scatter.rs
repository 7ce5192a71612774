//! Counts users with more true than fake exposure at each stage boundary.

use debunk::agents::{PolicyKind, TrainedModels};
use debunk::env::exposure_scatter;
use debunk::experiment::{generate, run_campaign, ExperimentConfig};

fn main() -> debunk::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.n = 40;
    let scenario = generate(&cfg)?;
    let config = cfg.campaign_config();
    let models = TrainedModels::default();
    for kind in [PolicyKind::NoMitigation, PolicyKind::MaxInf] {
        let done = run_campaign(&scenario, &config, kind, &models, 3)?;
        let counts: Vec<usize> = done
            .schedule()
            .boundaries()
            .iter()
            .skip(1)
            .map(|&t| {
                exposure_scatter(&scenario.graph, done.logs(), &scenario.spreaders, t, config.exposure_transpose)
                    .map(|pts| pts.iter().filter(|p| !p.spreader && p.above_diagonal()).count())
            })
            .collect::<debunk::Result<_>>()?;
        println!("{kind:<8} above diagonal per boundary: {counts:?}");
    }
    Ok(())
}
