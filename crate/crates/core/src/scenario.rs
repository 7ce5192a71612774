//! Synthetic mitigation environments: a follower graph with costs, the
//! Hawkes parameters driving both cascades, and the fake-news sources.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{scale_to_spectral_radius, HawkesParams};
use crate::network::{assign_costs, erdos_renyi, SocialGraph};
use crate::seeds::derive_seed;

/// Knobs for [`Scenario::synthetic`]. Defaults follow the reference
/// synthetic setting (100 users, edge probability 0.02, spectral radius 0.8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub density: f64,
    pub cost_min: f64,
    pub cost_max: f64,
    /// Raw excitation coefficients are drawn from `U[0, alpha_max]` before scaling.
    pub alpha_max: f64,
    pub spectral_radius: f64,
    pub omega: f64,
    pub mu_fake_max: f64,
    pub mu_mitigation_max: f64,
    pub num_spreaders: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 100,
            density: 0.02,
            cost_min: 1.0,
            cost_max: 5.0,
            alpha_max: 0.5,
            spectral_radius: 0.8,
            omega: 1.0,
            mu_fake_max: 0.2,
            mu_mitigation_max: 0.1,
            num_spreaders: 5,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("network.n", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::invalid("network.density", "must lie in [0, 1]"));
        }
        if !(self.cost_min > 0.0 && self.cost_min <= self.cost_max) {
            return Err(Error::invalid(
                "network.cost_min/cost_max",
                "need 0 < min <= max",
            ));
        }
        if !(self.alpha_max >= 0.0) {
            return Err(Error::invalid("hawkes.alpha_max", "must be nonnegative"));
        }
        if !(self.spectral_radius > 0.0) {
            return Err(Error::invalid("hawkes.spectral_radius", "must be positive"));
        }
        if !(self.omega > 0.0) {
            return Err(Error::invalid("hawkes.omega", "must be positive"));
        }
        if !(self.mu_fake_max >= 0.0 && self.mu_mitigation_max >= 0.0) {
            return Err(Error::invalid("hawkes.mu_*_max", "must be nonnegative"));
        }
        if self.num_spreaders > self.n {
            return Err(Error::invalid("hawkes.num_spreaders", "cannot exceed n"));
        }
        Ok(())
    }
}

/// Everything a campaign needs that stays fixed across campaigns.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: SocialGraph,
    pub params: HawkesParams,
    /// Fake-news sources; never eligible as debunkers.
    pub spreaders: Vec<usize>,
}

impl Scenario {
    pub fn new(
        graph: SocialGraph,
        params: HawkesParams,
        mut spreaders: Vec<usize>,
    ) -> Result<Self> {
        if graph.n() != params.n() {
            return Err(Error::Dimension {
                expected: graph.n(),
                actual: params.n(),
            });
        }
        if graph.costs().is_none() {
            return Err(Error::invalid(
                "graph",
                "mitigation costs have not been assigned",
            ));
        }
        spreaders.sort_unstable();
        spreaders.dedup();
        if spreaders.iter().any(|&s| s >= graph.n()) {
            return Err(Error::invalid("spreaders", "node index out of range"));
        }
        Ok(Self {
            graph,
            params,
            spreaders,
        })
    }

    /// Random environment: Erdős–Rényi graph, `A = A_fc ⊙ B` with
    /// `A_fc ~ U[0, alpha_max]` rescaled to the target spectral radius,
    /// `μ^M ~ U[0, mu_mitigation_max]` everywhere and
    /// `μ^F ~ U[0, mu_fake_max]` on the spreaders only. When the graph has
    /// no cycle the spectral radius is zero at every scale and `A` keeps
    /// its raw draws.
    pub fn synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n;
        let graph = erdos_renyi(n, cfg.density, derive_seed(seed, &[0]))?;
        let graph = assign_costs(graph, cfg.cost_min, cfg.cost_max)?;

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
        let mut a = Array2::zeros((n, n));
        for (i, j) in graph.edges() {
            a[[i, j]] = rng.random::<f64>() * cfg.alpha_max;
        }
        // an acyclic follower graph gives a nilpotent matrix: radius 0 at
        // any scale, so the raw coefficients are kept
        let a = match scale_to_spectral_radius(&a, cfg.spectral_radius) {
            Ok(scaled) => scaled,
            Err(Error::ZeroSpectralRadius) => {
                if a.iter().any(|&v| v != 0.0) {
                    log::warn!("follower graph is acyclic; excitation matrix left unscaled (spectral radius 0)");
                }
                a
            }
            Err(e) => return Err(e),
        };

        let spreaders: Vec<usize> = sample(&mut rng, n, cfg.num_spreaders).into_vec();
        let mut mu_fake = vec![0.0; n];
        for &s in &spreaders {
            mu_fake[s] = rng.random::<f64>() * cfg.mu_fake_max;
        }
        let mu_mitigation = (0..n)
            .map(|_| rng.random::<f64>() * cfg.mu_mitigation_max)
            .collect();
        let params = HawkesParams::new(a, cfg.omega, mu_fake, mu_mitigation)?;
        Scenario::new(graph, params, spreaders)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn costs(&self) -> &[f64] {
        self.graph.costs().expect("checked in Scenario::new")
    }

    pub fn is_spreader(&self, node: usize) -> bool {
        self.spreaders.binary_search(&node).is_ok()
    }

    /// Writes `graph.txt`, `params.toml` and `spreaders.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.graph.save(&dir.join("graph.txt"))?;
        self.params.save(&dir.join("params.toml"))?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("spreaders.txt"))?);
        for s in &self.spreaders {
            writeln!(f, "{s}")?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let graph = SocialGraph::load(&dir.join("graph.txt"))?;
        let params = HawkesParams::load(&dir.join("params.toml"))?;
        let path = dir.join("spreaders.txt");
        let text = std::fs::read_to_string(&path)?;
        let mut spreaders = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            spreaders.push(
                t.parse::<usize>()
                    .map_err(|e| Error::parse(&path, idx + 1, format!("bad node: {e}")))?,
            );
        }
        Scenario::new(graph, params, spreaders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_synthetic_scenario_is_stable() {
        let s = Scenario::synthetic(&SyntheticConfig::default(), 3).unwrap();
        assert_eq!(s.n(), 100);
        assert_eq!(s.spreaders.len(), 5);
        assert!((s.params.spectral_radius() - 0.8).abs() < 1e-9);
        for i in 0..s.n() {
            assert_eq!(s.params.mu_fake()[i] > 0.0, s.is_spreader(i));
            assert!(s.params.mu_mitigation()[i] <= 0.1);
            for j in 0..s.n() {
                if s.params.a()[[i, j]] > 0.0 {
                    assert!(s.graph.has_edge(i, j));
                }
            }
        }
    }

    #[test]
    fn empty_graph_gives_zero_excitation() {
        let cfg = SyntheticConfig {
            density: 0.0,
            n: 10,
            ..Default::default()
        };
        let s = Scenario::synthetic(&cfg, 1).unwrap();
        assert_eq!(s.graph.edge_count(), 0);
        assert!(s.params.a().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn save_and_load() {
        let cfg = SyntheticConfig {
            n: 20,
            density: 0.1,
            ..Default::default()
        };
        let s = Scenario::synthetic(&cfg, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.save(dir.path()).unwrap();
        assert_eq!(Scenario::load(dir.path()).unwrap(), s);
    }
}
