//! The multiplicative functional `A_{r,ε}` built from the excursion skeleton
//! of a reflected path, its ε-ladder, rank diagnostics, and the parabola
//! example where the flow along jumpy paths loses its limit.

mod assemble;
mod counterexample;
mod ladder;
mod rank;

pub use assemble::{assemble_a, excursion_factors, factor_product, Factor};
pub use counterexample::{counterexample_parabola, oscillating_path, CounterexampleRow, CounterexampleTable};
pub use ladder::{epsilon_ladder, fit_slope, Coupling, EpsilonLadderReport, LadderOptions, Rung};
pub use rank::{default_rho1, projection_log_drop, rank_diagnostics, LargeGap, LogDrop, RankDiagnostics, RANK_RTOL};
