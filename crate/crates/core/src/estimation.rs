//! Least-squares fitting of Hawkes parameters from event logs, and
//! ingestion of labelled `user_id,timestamp,label` records.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hawkes::{Event, EventLog, HawkesParams, NewsKind};

/// Offset applied to break timestamp ties.
pub const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Kernel decay, held fixed.
    pub omega: f64,
    /// Clip negative estimates to zero.
    pub nonnegative: bool,
    /// Ridge weight on every coefficient.
    pub ridge: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            nonnegative: true,
            ridge: 1e-6,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::invalid("omega", "must be positive"));
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::invalid("ridge", "must be nonnegative"));
        }
        Ok(())
    }
}

/// The fake and mitigation histories of one observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct KindLogs {
    pub fake: EventLog,
    pub mitigation: EventLog,
}

impl KindLogs {
    fn get(&self, kind: NewsKind) -> &EventLog {
        match kind {
            NewsKind::Fake => &self.fake,
            NewsKind::Mitigation => &self.mitigation,
        }
    }
}

/// Sufficient statistics of the least-squares contrast
/// `Σ_i ∫ λ_i(t)² dt - 2 Σ_events λ_i(t-)` with `λ_i = θ_iᵀ x(t)`.
///
/// The regressor is `x(t) = [1_F, 1_M, g_1(t), .., g_n(t)]` where
/// `g_j(t) = Σ_{t_jl < t} exp(-ω (t - t_jl))` and the indicator picks the
/// base rate of the log's kind. `gram = ∫ x xᵀ dt` is shared by every user;
/// column `i` of `rhs` sums `x(t-)` over the events of user `i`.
struct Moments {
    gram: DMatrix<f64>,
    rhs: DMatrix<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Self {
            gram: DMatrix::zeros(n + 2, n + 2),
            rhs: DMatrix::zeros(n + 2, n),
        }
    }

    /// Exact integrals of `x xᵀ` over `[t0, t0 + dt)` starting from `g`.
    fn integrate(&mut self, k: usize, g: &[f64], dt: f64, omega: f64) {
        if dt <= 0.0 {
            return;
        }
        let single = (1.0 - (-omega * dt).exp()) / omega;
        let double = (1.0 - (-2.0 * omega * dt).exp()) / (2.0 * omega);
        self.gram[(k, k)] += dt;
        for (j, &gj) in g.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            let v = gj * single;
            self.gram[(k, 2 + j)] += v;
            self.gram[(2 + j, k)] += v;
            for (m, &gm) in g.iter().enumerate() {
                if gm != 0.0 {
                    self.gram[(2 + j, 2 + m)] += gj * gm * double;
                }
            }
        }
    }

    fn accumulate(&mut self, log: &EventLog, kind: NewsKind, n: usize, omega: f64) -> Result<()> {
        let k = match kind {
            NewsKind::Fake => 0,
            NewsKind::Mitigation => 1,
        };
        let mut g = vec![0.0; n];
        let mut t = 0.0;
        for e in log.events().iter().filter(|e| e.kind == kind) {
            if e.user >= n {
                return Err(Error::invalid(
                    "log",
                    format!("user {} out of range for n = {n}", e.user),
                ));
            }
            let dt = e.time - t;
            self.integrate(k, &g, dt, omega);
            let decay = (-omega * dt).exp();
            g.iter_mut().for_each(|v| *v *= decay);
            self.rhs[(k, e.user)] += 1.0;
            for (j, &gj) in g.iter().enumerate() {
                self.rhs[(2 + j, e.user)] += gj;
            }
            g[e.user] += 1.0;
            t = e.time;
        }
        self.integrate(k, &g, log.horizon() - t, omega);
        Ok(())
    }

    fn loss(&self, theta: &DMatrix<f64>) -> f64 {
        let quad = (theta.transpose() * &self.gram * theta).trace();
        quad - 2.0 * theta.component_mul(&self.rhs).sum()
    }
}

fn moments(logs: &[KindLogs], n: usize, cfg: &FitConfig) -> Result<Moments> {
    let mut m = Moments::new(n);
    for window in logs {
        for kind in NewsKind::ALL {
            m.accumulate(window.get(kind), kind, n, cfg.omega)?;
        }
    }
    Ok(m)
}

/// Ridge solution `(G + λI)⁻¹ R`, one column per user.
fn solve(m: &Moments, ridge: f64) -> Result<DMatrix<f64>> {
    let mut gram = m.gram.clone();
    for d in 0..gram.nrows() {
        gram[(d, d)] += ridge;
    }
    let chol = gram.cholesky().ok_or(Error::SingularDesign)?;
    let theta = chol.solve(&m.rhs);
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDesign);
    }
    Ok(theta)
}

/// Raw (unclipped) coefficients: `theta[(0, i)]`, `theta[(1, i)]` are the
/// base rates of user `i`, `theta[(2 + j, i)]` is `α_ij`. Also returns the
/// contrast at the solution.
fn fit_coefficients(logs: &[KindLogs], n: usize, cfg: &FitConfig) -> Result<(DMatrix<f64>, f64)> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "no users to fit"));
    }
    let m = moments(logs, n, cfg)?;
    if !(m.gram[(0, 0)] > 0.0 && m.gram[(1, 1)] > 0.0) {
        return Err(Error::invalid(
            "logs",
            "need an observation window of positive length for both kinds",
        ));
    }
    let theta = solve(&m, cfg.ridge)?;
    let loss = m.loss(&theta);
    Ok((theta, loss))
}

/// Least-squares contrast of the unclipped fit on the observed windows.
pub fn fit_loss(logs: &[KindLogs], n: usize, cfg: &FitConfig) -> Result<f64> {
    fit_coefficients(logs, n, cfg).map(|(_, r)| r)
}

/// Unclipped excitation estimates `α_ij`.
pub fn fit_raw_excitation(logs: &[KindLogs], n: usize, cfg: &FitConfig) -> Result<Array2<f64>> {
    let (theta, _) = fit_coefficients(logs, n, cfg)?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| theta[(2 + j, i)]))
}

/// Fits `(A, μ^F, μ^M)` to the windows in `logs` by minimizing the
/// ridge-penalized least-squares contrast, sharing `A` across kinds.
/// Negative estimates are set to zero when `nonnegative` is on; otherwise
/// they must already be nonnegative to form valid parameters.
pub fn fit_least_squares(logs: &[KindLogs], n: usize, cfg: &FitConfig) -> Result<HawkesParams> {
    let (theta, _) = fit_coefficients(logs, n, cfg)?;
    let clip = |v: f64| if cfg.nonnegative { v.max(0.0) } else { v };
    let a = Array2::from_shape_fn((n, n), |(i, j)| clip(theta[(2 + j, i)]));
    let mu_fake = (0..n).map(|i| clip(theta[(0, i)])).collect();
    let mu_mitigation = (0..n).map(|i| clip(theta[(1, i)])).collect();
    HawkesParams::new(a, cfg.omega, mu_fake, mu_mitigation)
}

/// Ingestion output: one log per kind plus the original user ids, where
/// `users[i]` is the id mapped to index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub logs: KindLogs,
    pub users: Vec<String>,
}

impl Ingested {
    pub fn n(&self) -> usize {
        self.users.len()
    }

    /// Writes the records back as `user_id,timestamp,label`, time-ordered.
    pub fn write_records<W: Write>(&self, mut w: W) -> Result<()> {
        let merged = self.logs.fake.merged(&self.logs.mitigation);
        for e in merged.events() {
            let label = match e.kind {
                NewsKind::Fake => "fake",
                NewsKind::Mitigation => "true",
            };
            writeln!(w, "{},{},{}", self.users[e.user], e.time, label)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Rescale times onto `[0, horizon]`; `None` keeps the shifted scale.
    pub horizon: Option<f64>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            horizon: Some(500.0),
        }
    }
}

fn parse_label(s: &str) -> Option<NewsKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "fake" => Some(NewsKind::Fake),
        "true" => Some(NewsKind::Mitigation),
        _ => None,
    }
}

/// Reads `user_id,timestamp,label` records (`label` is `fake` or `true`).
/// Blank lines, `#` comments and a leading header are skipped. Users are
/// indexed in order of first appearance in time; times are shifted so the
/// first event is at 0, optionally rescaled onto the horizon, and ties are
/// broken by [`TIE_EPSILON`] so the merged sequence is strictly increasing.
pub fn ingest<R: BufRead>(reader: R, path: &Path, opts: IngestOptions) -> Result<Ingested> {
    if let Some(h) = opts.horizon {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid("horizon", "must be positive"));
        }
    }
    let mut records: Vec<(String, f64, NewsKind)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let time = match fields[1].parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ if records.is_empty() && fields[1].eq_ignore_ascii_case("timestamp") => continue,
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("bad timestamp `{}`", fields[1]),
                ))
            }
        };
        let kind = parse_label(fields[2]).ok_or_else(|| {
            Error::parse(
                path,
                lineno,
                format!("label must be `fake` or `true`, got `{}`", fields[2]),
            )
        })?;
        if fields[0].is_empty() {
            return Err(Error::parse(path, lineno, "empty user id"));
        }
        records.push((fields[0].to_string(), time, kind));
    }

    if records.is_empty() {
        log::warn!("{}: no records; returning empty logs", path.display());
        let h = opts.horizon.unwrap_or(0.0);
        return Ok(Ingested {
            logs: KindLogs {
                fake: EventLog::new(h),
                mitigation: EventLog::new(h),
            },
            users: Vec::new(),
        });
    }

    records.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut users = Vec::new();
    let t0 = records[0].1;
    let span = records.last().expect("nonempty").1 - t0;
    let scale = match opts.horizon {
        Some(h) if span > 0.0 => h / span,
        _ => 1.0,
    };
    let mut times: Vec<f64> = records.iter().map(|r| (r.1 - t0) * scale).collect();
    for k in 1..times.len() {
        if times[k] <= times[k - 1] {
            times[k] = times[k - 1] + TIE_EPSILON;
        }
    }
    let last = *times.last().expect("nonempty");
    let horizon = match opts.horizon {
        Some(h) if last > 0.0 => {
            if last != h {
                let f = h / last;
                times.iter_mut().for_each(|t| *t *= f);
            }
            *times.last_mut().expect("nonempty") = h;
            h
        }
        Some(h) => h,
        None => last,
    };

    let mut fake = EventLog::new(horizon);
    let mut mitigation = EventLog::new(horizon);
    for ((id, _, kind), time) in records.into_iter().zip(times) {
        let user = *index.entry(id.clone()).or_insert_with(|| {
            users.push(id);
            users.len() - 1
        });
        let log = match kind {
            NewsKind::Fake => &mut fake,
            NewsKind::Mitigation => &mut mitigation,
        };
        log.push(Event { user, time, kind })?;
    }
    Ok(Ingested {
        logs: KindLogs { fake, mitigation },
        users,
    })
}

pub fn ingest_file(path: &Path, opts: IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    ingest(std::io::BufReader::new(file), path, opts)
}
