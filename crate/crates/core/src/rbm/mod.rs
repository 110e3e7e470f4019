//! Reflected Brownian motion in a domain bounded by a hypersurface: projected
//! Euler steps, boundary local time, inverse local time and the excursion
//! skeleton.

mod excursions;
mod path;
mod rng;

pub use excursions::{default_boundary_tol, extract_excursions, simulate_skeleton, ExcursionRecord, ExcursionSkeleton, FirstContact};
pub use path::{
    default_max_step, inverse_local_time, simulate_local_time, simulate_path, uniform_start, RbmPath,
    SimulationOptions, Until,
};
pub use rng::{replica_rng, StepNoise, StreamPurpose};
