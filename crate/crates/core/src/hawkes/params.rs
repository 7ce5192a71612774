use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::NewsKind;
use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 10_000;

/// Parameters of the two exponential-kernel Hawkes processes.
///
/// Both kinds share the excitation matrix `A` (entry `(i, j)` is the jump in
/// user `i`'s intensity caused by an event of user `j`) and the decay
/// `omega`; each kind has its own base intensity vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams {
    a: Array2<f64>,
    omega: f64,
    mu_fake: Vec<f64>,
    mu_mitigation: Vec<f64>,
    radius: f64,
}

impl HawkesParams {
    pub fn new(
        a: Array2<f64>,
        omega: f64,
        mu_fake: Vec<f64>,
        mu_mitigation: Vec<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: a.ncols(),
            });
        }
        if a.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "A",
                "entries must be finite and nonnegative",
            ));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid(
                "omega",
                format!("must be positive, got {omega}"),
            ));
        }
        for (name, mu) in [("mu_fake", &mu_fake), ("mu_mitigation", &mu_mitigation)] {
            if mu.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: mu.len(),
                });
            }
            if mu.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid(
                    name,
                    "entries must be finite and nonnegative",
                ));
            }
        }
        let radius = spectral_radius(&a)?;
        Ok(Self {
            a,
            omega,
            mu_fake,
            mu_mitigation,
            radius,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mu(&self, kind: NewsKind) -> &[f64] {
        match kind {
            NewsKind::Fake => &self.mu_fake,
            NewsKind::Mitigation => &self.mu_mitigation,
        }
    }

    pub fn mu_fake(&self) -> &[f64] {
        &self.mu_fake
    }

    pub fn mu_mitigation(&self) -> &[f64] {
        &self.mu_mitigation
    }

    /// Spectral radius of `A` (not divided by omega).
    pub fn spectral_radius(&self) -> f64 {
        self.radius
    }

    /// Spectral radius of the branching matrix `A / omega`.
    pub fn branching_radius(&self) -> f64 {
        self.radius / self.omega
    }

    pub fn is_stable(&self) -> bool {
        self.branching_radius() < 1.0
    }

    pub fn check_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable(self.branching_radius()))
        }
    }

    /// Replaces one kind's base intensities; `A` and the cached radius are kept.
    pub fn with_mu(&self, kind: NewsKind, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                actual: mu.len(),
            });
        }
        if mu.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(
                "mu",
                "entries must be finite and nonnegative",
            ));
        }
        let mut out = self.clone();
        match kind {
            NewsKind::Fake => out.mu_fake = mu,
            NewsKind::Mitigation => out.mu_mitigation = mu,
        }
        Ok(out)
    }

    pub(crate) fn mu_mitigation_mut(&mut self) -> &mut [f64] {
        &mut self.mu_mitigation
    }

    /// Nonzero entries of each column: `columns[j]` lists `(i, a_ij)`.
    pub(crate) fn sparse_columns(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n();
        let mut cols = vec![Vec::new(); n];
        for ((i, j), &v) in self.a.indexed_iter() {
            if v != 0.0 {
                cols[j].push((i, v));
            }
        }
        cols
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ParamsFile::from(self);
        let text = toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: ParamsFile =
            toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
        file.into_params()
    }
}

/// Structured-text layout of [`HawkesParams`].
#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsFile {
    pub n: usize,
    pub omega: f64,
    pub mu_fake: Vec<f64>,
    pub mu_mitigation: Vec<f64>,
    pub a: Vec<Vec<f64>>,
}

impl From<&HawkesParams> for ParamsFile {
    fn from(p: &HawkesParams) -> Self {
        Self {
            n: p.n(),
            omega: p.omega,
            mu_fake: p.mu_fake.clone(),
            mu_mitigation: p.mu_mitigation.clone(),
            a: p.a.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}

impl ParamsFile {
    pub fn into_params(self) -> Result<HawkesParams> {
        let n = self.n;
        if self.a.len() != n || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(
                "a",
                format!("expected a dense {n}x{n} matrix"),
            ));
        }
        let flat: Vec<f64> = self.a.into_iter().flatten().collect();
        let a = Array2::from_shape_vec((n, n), flat).expect("shape checked");
        HawkesParams::new(a, self.omega, self.mu_fake, self.mu_mitigation)
    }
}

/// Spectral radius of a square matrix.
///
/// For nonnegative matrices the radius is the largest radius over the
/// strongly connected components of the nonzero pattern (zero when the
/// pattern is acyclic). Each irreducible block is handled by power
/// iteration on the shifted block `A + sI`, which removes the periodicity
/// that stalls plain power iteration. Matrices with negative entries, or
/// blocks where the iteration does not settle within the cap, go through a
/// real Schur decomposition instead.
pub fn spectral_radius(a: &Array2<f64>) -> Result<f64> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: a.ncols(),
        });
    }
    if n == 0 || a.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    if a.iter().any(|&v| v < 0.0) {
        return schur_radius(a);
    }
    let mut radius = 0.0_f64;
    for comp in strongly_connected_components(a) {
        let cyclic = comp.len() > 1 || a[[comp[0], comp[0]]] != 0.0;
        if !cyclic {
            continue;
        }
        let block = Array2::from_shape_fn((comp.len(), comp.len()), |(i, j)| a[[comp[i], comp[j]]]);
        let r = match shifted_power_iteration(&block) {
            Some(r) => r,
            None => {
                log::debug!(
                    "power iteration stalled on a {}-node block; using Schur",
                    comp.len()
                );
                schur_radius(&block)?
            }
        };
        radius = radius.max(r);
    }
    Ok(radius)
}

/// Tarjan's algorithm over the pattern `a_ij != 0` (edge `i -> j`).
fn strongly_connected_components(a: &Array2<f64>) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| a[[i, j]] != 0.0).collect())
        .collect();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    // explicit call stack of (node, next neighbour position)
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

fn shifted_power_iteration(a: &Array2<f64>) -> Option<f64> {
    let n = a.nrows();
    let shift = a
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        * 0.5;
    let mut x = Array1::from_elem(n, 1.0);
    let mut prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let mut y = a.dot(&x);
        y.scaled_add(shift, &x);
        let norm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if norm == 0.0 {
            return Some(0.0);
        }
        y.mapv_inplace(|v| v / norm);
        x = y;
        if (norm - prev).abs() <= POWER_TOL * norm {
            return Some((norm - shift).max(0.0));
        }
        prev = norm;
    }
    None
}

fn schur_radius(a: &Array2<f64>) -> Result<f64> {
    let n = a.nrows();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or(Error::NoConvergence(POWER_MAX_ITER))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Rescales a nonnegative matrix so its spectral radius equals `target`.
pub fn scale_to_spectral_radius(a: &Array2<f64>, target: f64) -> Result<Array2<f64>> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::invalid(
            "target",
            format!("must be positive, got {target}"),
        ));
    }
    if a.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("A", "entries must be nonnegative"));
    }
    let radius = spectral_radius(a)?;
    if radius == 0.0 {
        return Err(Error::ZeroSpectralRadius);
    }
    Ok(a * (target / radius))
}
