//! Simulates a three-user Hawkes process and compares empirical rates with
//! the stationary mean.

use debunk::hawkes::{simulate, EventLog, HawkesParams, NewsKind};
use ndarray::array;

fn main() -> debunk::Result<()> {
    let a = array![[0.2, 0.3, 0.0], [0.0, 0.1, 0.35], [0.25, 0.0, 0.15]];
    let params = HawkesParams::new(a, 1.0, vec![0.3, 0.2, 0.1], vec![0.0; 3])?;
    println!("spectral radius of A/omega: {:.4}", params.branching_radius());

    let horizon = 2000.0;
    let log = simulate(&params, NewsKind::Fake, &EventLog::new(0.0), 0.0, horizon, 7)?;
    let counts = log.counts_between(3, NewsKind::Fake, 0.0, horizon);
    for (i, c) in counts.iter().enumerate() {
        println!("user {i}: {c} posts, rate {:.3}", *c as f64 / horizon);
    }
    Ok(())
}
