//! Builds a synthetic scenario and writes it to a directory.

use debunk::scenario::{Scenario, SyntheticConfig};

fn main() -> debunk::Result<()> {
    let cfg = SyntheticConfig {
        n: 30,
        density: 0.1,
        ..SyntheticConfig::default()
    };
    let scenario = Scenario::synthetic(&cfg, 1)?;
    println!(
        "{} users, {} edges, radius {:.3}, spreaders {:?}",
        scenario.n(),
        scenario.graph.edge_count(),
        scenario.params.spectral_radius(),
        scenario.spreaders
    );
    let dir = std::env::temp_dir().join("debunk-scenario-example");
    scenario.save(&dir)?;
    let back = Scenario::load(&dir)?;
    assert_eq!(back.params, scenario.params);
    println!("saved to {}", dir.display());
    Ok(())
}
