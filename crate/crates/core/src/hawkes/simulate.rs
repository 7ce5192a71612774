use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Event, EventLog, HawkesParams, NewsKind};
use crate::error::{Error, Result};

/// Excited part of the conditional intensity at `t`: for every user `i`,
/// the sum over events of `kind` strictly before `t` of
/// `a_ij * exp(-omega * (t - t_event))`.
pub fn excitation(params: &HawkesParams, kind: NewsKind, log: &EventLog, t: f64) -> Vec<f64> {
    spread(params, &decayed_counts(params, kind, log.before(t), t))
}

/// Per-user `Σ_l exp(-omega (t - t_l))` over the events of `kind` in `events`.
fn decayed_counts(params: &HawkesParams, kind: NewsKind, events: &[Event], t: f64) -> Vec<f64> {
    let omega = params.omega();
    let mut sums = vec![0.0; params.n()];
    for ev in events.iter().filter(|e| e.kind == kind) {
        sums[ev.user] += (-omega * (t - ev.time)).exp();
    }
    sums
}

/// `A · sums`, skipping zero coefficients.
fn spread(params: &HawkesParams, sums: &[f64]) -> Vec<f64> {
    let a = params.a();
    let mut out = vec![0.0; params.n()];
    for (j, &s) in sums.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let aij = a[[i, j]];
            if aij != 0.0 {
                *slot += aij * s;
            }
        }
    }
    out
}

/// Conditional intensity `mu_i + excitation_i(t)` for every user.
pub fn intensity(params: &HawkesParams, kind: NewsKind, log: &EventLog, t: f64) -> Vec<f64> {
    let mut lambda = excitation(params, kind, log, t);
    for (l, m) in lambda.iter_mut().zip(params.mu(kind)) {
        *l += m;
    }
    lambda
}

/// Simulates `kind` events on `(t_start, t_end]` given the history in
/// `seed_log`, returning the extended log. Deterministic in `seed`.
pub fn simulate(
    params: &HawkesParams,
    kind: NewsKind,
    seed_log: &EventLog,
    t_start: f64,
    t_end: f64,
    seed: u64,
) -> Result<EventLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = seed_log.clone();
    simulate_into(params, kind, &mut log, t_start, t_end, &mut rng)?;
    Ok(log)
}

/// In-place variant of [`simulate`] drawing from a caller-owned generator.
/// Returns the number of events appended.
///
/// Ogata thinning: between events every exponential kernel decays, so the
/// total intensity right after the current time bounds the intensity until
/// the next accepted event.
pub fn simulate_into<R: Rng + ?Sized>(
    params: &HawkesParams,
    kind: NewsKind,
    log: &mut EventLog,
    t_start: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<usize> {
    params.check_stable()?;
    if !(t_start >= 0.0 && t_start <= t_end) {
        return Err(Error::invalid(
            "t_start",
            format!("need 0 <= t_start <= t_end, got [{t_start}, {t_end}]"),
        ));
    }
    if let Some(last) = log.last_time() {
        if last > t_start {
            return Err(Error::InvalidLog(format!(
                "history extends past the simulation start ({last} > {t_start})"
            )));
        }
    }
    log.extend_horizon(t_end);

    let n = params.n();
    let omega = params.omega();
    let columns = params.sparse_columns();
    let mu = params.mu(kind);
    let mu_total: f64 = mu.iter().sum();

    // excitation materialized at t_ref; includes events at exactly t_start
    let mut exc = spread(
        params,
        &decayed_counts(params, kind, log.up_to(t_start), t_start),
    );
    let mut exc_total: f64 = exc.iter().sum();
    let mut t_ref = t_start;
    let mut t = t_start;
    let mut last = log.last_time().unwrap_or(f64::NEG_INFINITY);
    let mut appended = 0;

    loop {
        let bound = mu_total + exc_total * (-omega * (t - t_ref)).exp();
        if !(bound > 0.0) {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / bound;
        if t > t_end {
            break;
        }
        let decay = (-omega * (t - t_ref)).exp();
        let lambda = mu_total + exc_total * decay;
        let v: f64 = rng.random();
        if v * bound >= lambda || t <= last {
            continue;
        }

        for e in exc.iter_mut() {
            *e *= decay;
        }
        t_ref = t;

        let target = rng.random::<f64>() * lambda;
        let mut acc = 0.0;
        let mut user = None;
        for i in 0..n {
            let rate = mu[i] + exc[i];
            if rate <= 0.0 {
                continue;
            }
            acc += rate;
            user = Some(i);
            if target < acc {
                break;
            }
        }
        let Some(user) = user else { break };

        log.push_unchecked(Event {
            user,
            time: t,
            kind,
        });
        last = t;
        appended += 1;
        for &(i, aij) in &columns[user] {
            exc[i] += aij;
        }
        exc_total = exc.iter().sum();
    }
    Ok(appended)
}
