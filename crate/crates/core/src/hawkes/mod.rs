//! Multivariate Hawkes processes with exponential kernels.
//!
//! The conditional intensity of user `i` is
//!
//! ```text
//! λ_i(t) = μ_i + Σ_j Σ_{t_{j,l} < t} a_ij · exp(-ω (t - t_{j,l}))
//! ```
//!
//! Fake and mitigation news are two separate processes sharing `A` and `ω`
//! but with their own base intensities and histories; there is no
//! excitation across kinds.

mod log;
mod params;
mod simulate;

pub use self::log::{count, Event, EventLog, NewsKind};
pub use self::params::{scale_to_spectral_radius, spectral_radius, HawkesParams, ParamsFile};
pub use self::simulate::{excitation, intensity, simulate, simulate_into};
