//! Trains the learned policies on a small network and prints the curve.

use debunk::experiment::{generate, train, ExperimentConfig};

fn main() -> debunk::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.n = 20;
    cfg.network.density = 0.1;
    cfg.training.episodes = 10;
    cfg.training.hidden_layers = vec![32];
    cfg.training.refine_episodes = 2;
    cfg.training.reward_model_steps = 100;
    let scenario = generate(&cfg)?;
    let (models, curve) = train(&cfg, &scenario)?;
    for row in &curve {
        println!(
            "{:>3} {:<6} return {:8.4} dqn loss {:.4} fsp loss {:.4}",
            row.episode, row.phase, row.discounted_return, row.dqn_loss, row.fsp_loss
        );
    }
    let dir = std::env::temp_dir().join("debunk-train-example");
    models.save(&dir)?;
    println!("checkpoints in {}", dir.display());
    Ok(())
}
