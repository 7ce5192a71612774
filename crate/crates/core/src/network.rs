//! Follower graphs and mitigation costs.
//!
//! `b_ij = 1` means user `j` follows user `i`; the follower count of `i`
//! is the row sum `e_i = Σ_j b_ij`.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    n: usize,
    /// `followers[i]`: sorted list of `j` with `b_ij = 1`.
    followers: Vec<Vec<usize>>,
    /// `following[j]`: sorted list of `i` with `b_ij = 1`.
    following: Vec<Vec<usize>>,
    costs: Option<Vec<f64>>,
}

impl SocialGraph {
    /// Builds a graph from `(i, j)` pairs meaning "j follows i". Duplicate
    /// pairs collapse; self-follows are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut followers = vec![Vec::new(); n];
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(
                    "edge",
                    format!("({i}, {j}) out of range for n = {n}"),
                ));
            }
            if i == j {
                return Err(Error::invalid("edge", format!("self-follow at node {i}")));
            }
            followers[i].push(j);
        }
        let mut following = vec![Vec::new(); n];
        for (i, list) in followers.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &j in list.iter() {
                following[j].push(i);
            }
        }
        Ok(Self {
            n,
            followers,
            following,
            costs: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn followers(&self, i: usize) -> &[usize] {
        &self.followers[i]
    }

    /// Users that `j` follows.
    pub fn following(&self, j: usize) -> &[usize] {
        &self.following[j]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.followers[i].binary_search(&j).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.followers.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.followers
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
    }

    /// `e`: follower count of every user.
    pub fn follower_counts(&self) -> Vec<usize> {
        self.followers.iter().map(Vec::len).collect()
    }

    pub fn costs(&self) -> Option<&[f64]> {
        self.costs.as_deref()
    }

    pub fn with_costs(mut self, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: costs.len(),
            });
        }
        if costs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::invalid("costs", "must be finite and positive"));
        }
        self.costs = Some(costs);
        Ok(self)
    }

    /// `out_i = Σ_j b_ij · posts_j`, or with `transpose` set,
    /// `out_i = Σ_j b_ji · posts_j`.
    pub fn exposure(&self, posts: &[f64], transpose: bool) -> Vec<f64> {
        let lists = if transpose {
            &self.following
        } else {
            &self.followers
        };
        lists
            .iter()
            .map(|list| list.iter().map(|&j| posts[j]).sum())
            .collect()
    }

    /// Dense 0/1 adjacency, row-major.
    pub fn adjacency(&self) -> ndarray::Array2<f64> {
        let mut b = ndarray::Array2::zeros((self.n, self.n));
        for (i, j) in self.edges() {
            b[[i, j]] = 1.0;
        }
        b
    }

    /// Writes the header line `n`, one `i j` line per edge, and an optional
    /// `costs` section with one value per line.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.n)?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        if let Some(costs) = &self.costs {
            writeln!(w, "costs")?;
            for c in costs {
                writeln!(w, "{c}")?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R, path: &Path) -> Result<Self> {
        let mut n = None;
        let mut edges = Vec::new();
        let mut costs: Option<Vec<f64>> = None;
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if n.is_none() {
                n = Some(
                    t.parse::<usize>()
                        .map_err(|e| Error::parse(path, lineno, format!("bad node count: {e}")))?,
                );
                continue;
            }
            if t == "costs" {
                costs = Some(Vec::new());
                continue;
            }
            if let Some(c) = costs.as_mut() {
                c.push(
                    t.parse::<f64>()
                        .map_err(|e| Error::parse(path, lineno, format!("bad cost: {e}")))?,
                );
                continue;
            }
            let mut parts = t.split_whitespace();
            let (Some(i), Some(j), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(path, lineno, "expected `i j`"));
            };
            let i = i
                .parse::<usize>()
                .map_err(|e| Error::parse(path, lineno, format!("bad node: {e}")))?;
            let j = j
                .parse::<usize>()
                .map_err(|e| Error::parse(path, lineno, format!("bad node: {e}")))?;
            edges.push((i, j));
        }
        let n = n.ok_or_else(|| Error::parse(path, 1, "missing node count header"))?;
        let graph = SocialGraph::from_edges(n, edges)?;
        match costs {
            Some(c) => graph.with_costs(c),
            None => Ok(graph),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file), path)
    }
}

/// Directed Erdős–Rényi graph: every ordered pair `(i, j)`, `i != j`,
/// is an edge independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SocialGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(
            "p",
            format!("edge probability must lie in [0, 1], got {p}"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n", "graph needs at least one node"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SocialGraph::from_edges(n, edges)
}

/// Affine map from follower count onto `[cost_min, cost_max]`; when every
/// node has the same count, all costs sit at the midpoint.
pub fn assign_costs(graph: SocialGraph, cost_min: f64, cost_max: f64) -> Result<SocialGraph> {
    if !(cost_min > 0.0 && cost_min <= cost_max && cost_max.is_finite()) {
        return Err(Error::invalid(
            "cost range",
            format!("need 0 < min <= max, got [{cost_min}, {cost_max}]"),
        ));
    }
    let e = graph.follower_counts();
    let lo = e.iter().copied().min().unwrap_or(0);
    let hi = e.iter().copied().max().unwrap_or(0);
    let costs = if hi == lo {
        vec![0.5 * (cost_min + cost_max); graph.n()]
    } else {
        let span = (hi - lo) as f64;
        e.iter()
            .map(|&ei| cost_min + (cost_max - cost_min) * (ei - lo) as f64 / span)
            .collect()
    };
    graph.with_costs(costs)
}
