//! The measure ODE `Dv = S(γ)v dt` along bounded-variation paths on a surface.
//!
//! Along a finite trajectory the solution is the product formula
//! `v(t) = e^{(t−t_k)S(x_k)} π_{x_k} ⋯ π_{x_1} e^{(t_1−t_0)S(x_0)} v₀`:
//! exponential growth along each piece, orthogonal projection at each jump.
//! General paths are handled by solving along finite approximations at a
//! decreasing ladder of tolerances.

mod solver;
mod stability;

pub use solver::{
    ode_residual, ode_residual_with, solution_operator, solve_finite, FlowSolution, OdeResidual, SolutionOperator,
    TANGENCY_TOL,
};
pub use stability::{
    limit_solution, reparametrization_gap, solution_sup_distance, stability_gap, stability_skorokhod, LadderRung,
    LimitSolution, SkorokhodStability, StabilityGap, CAUCHY_SLACK, SUP_SUBDIVISIONS,
};
