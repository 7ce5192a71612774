//! Recovers Hawkes parameters from simulated event logs.

use debunk::estimation::{fit_least_squares, FitConfig, KindLogs};
use debunk::hawkes::{simulate, EventLog, HawkesParams, NewsKind};
use ndarray::array;

fn main() -> debunk::Result<()> {
    let a = array![[0.2, 0.3, 0.0], [0.0, 0.1, 0.35], [0.25, 0.0, 0.15]];
    let truth = HawkesParams::new(a, 1.0, vec![0.1, 0.2, 0.05], vec![0.1, 0.05, 0.2])?;
    let logs = (0..20u64)
        .map(|w| {
            Ok(KindLogs {
                fake: simulate(&truth, NewsKind::Fake, &EventLog::new(0.0), 0.0, 500.0, 2 * w)?,
                mitigation: simulate(&truth, NewsKind::Mitigation, &EventLog::new(0.0), 0.0, 500.0, 2 * w + 1)?,
            })
        })
        .collect::<debunk::Result<Vec<_>>>()?;
    let fit = fit_least_squares(&logs, 3, &FitConfig::default())?;
    println!("true A:\n{}\nfitted A:\n{:.3}", truth.a(), fit.a());
    println!("fitted mu fake {:.3?}, mitigation {:.3?}", fit.mu_fake(), fit.mu_mitigation());
    Ok(())
}
