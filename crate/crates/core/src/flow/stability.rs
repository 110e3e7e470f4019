use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::{Matrix, Vector};
use crate::nbv::{finite_approximation, merged_times, skorokhod_distance, Alignment, FiniteTrajectory, SampledNbvFunction, TimeChange};

use super::{solve_finite, FlowSolution, SolutionOperator};

/// Points per merged interval at which sup norms are sampled; the
/// right-hand left limit is always included as well.
pub const SUP_SUBDIVISIONS: usize = 8;

/// Sup over `[0, T]` of `dist(t)` and `dist_left(t)` sampled at the merged
/// breakpoints, `SUP_SUBDIVISIONS` interior points per interval, and every
/// interval's right-end left limit.
fn sup_over(
    horizon: f64,
    breakpoints: &[f64],
    mut dist: impl FnMut(f64) -> Result<f64>,
    mut dist_left: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let mut grid = merged_times(breakpoints, &[0.0, horizon]);
    grid.retain(|&t| (0.0..=horizon).contains(&t));
    let mut worst = 0.0f64;
    for w in grid.windows(2) {
        for j in 0..SUP_SUBDIVISIONS {
            worst = worst.max(dist(w[0] + (w[1] - w[0]) * j as f64 / SUP_SUBDIVISIONS as f64)?);
        }
        worst = worst.max(dist_left(w[1])?);
    }
    worst = worst.max(dist(horizon)?);
    Ok(worst)
}

/// `‖v − ṽ‖_∞` for two solutions from the same initial vector.
pub fn solution_sup_distance(a: &FlowSolution, b: &FlowSolution) -> Result<f64> {
    let times = merged_times(a.trajectory().times(), b.trajectory().times());
    sup_over(
        a.horizon(),
        &times,
        |t| Ok((a.eval(t)? - b.eval(t)?).norm()),
        |t| Ok((a.left_limit(t)? - b.left_limit(t)?).norm()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityGap {
    pub sup_difference: f64,
    /// `C(1 + ‖dγ‖ + ‖dγ̃‖)‖γ − γ̃‖_∞ |v₀|`.
    pub bound_rhs: f64,
}

fn check_origin(a: &FiniteTrajectory, b: &FiniteTrajectory) -> Result<()> {
    let distance = (a.start() - b.start()).norm();
    if distance > 1e-12 * (1.0 + a.start().norm()) {
        return Err(Error::OriginMismatch { distance });
    }
    Ok(())
}

/// Measured `‖v − ṽ‖_∞` between solutions along `γ` and `γ̃` and the
/// right-hand side of the stability estimate with constant `c`.
pub fn stability_gap(gamma: &FiniteTrajectory, other: &FiniteTrajectory, v0: &Vector, c: f64) -> Result<StabilityGap> {
    check_origin(gamma, other)?;
    let v = solve_finite(gamma, v0)?;
    let w = solve_finite(other, v0)?;
    let sup_difference = solution_sup_distance(&v, &w)?;
    let bound_rhs =
        c * (1.0 + gamma.total_variation() + other.total_variation()) * gamma.sup_distance(other)? * v0.norm();
    Ok(StabilityGap { sup_difference, bound_rhs })
}

/// Effect of a time change: with `γ̃` defined by `γ̃(λ(t)) = γ(t)`, returns
/// `sup_t |v(t) − ṽ(λ(t))|` and `c‖λ − Id‖_∞ |v₀|`.
pub fn reparametrization_gap(gamma: &FiniteTrajectory, lambda: &TimeChange, v0: &Vector, c: f64) -> Result<StabilityGap> {
    let moved = gamma.reparametrized(lambda)?;
    let v = solve_finite(gamma, v0)?;
    let w = solve_finite(&moved, v0)?;
    let knots: Vec<f64> = lambda.knots().map(|(s, _)| s).collect();
    let times = merged_times(gamma.times(), &knots);
    let sup_difference = sup_over(
        gamma.horizon(),
        &times,
        |t| Ok((v.eval(t)? - w.eval(lambda.eval(t))?).norm()),
        |t| Ok((v.left_limit(t)? - w.left_limit(lambda.eval(t))?).norm()),
    )?;
    Ok(StabilityGap { sup_difference, bound_rhs: c * lambda.sup_deviation() * v0.norm() })
}

#[derive(Debug, Clone)]
pub struct LadderRung {
    pub eps: f64,
    pub breakpoints: usize,
    pub total_variation: f64,
}

#[derive(Debug)]
pub struct LimitSolution {
    /// Solution along the finest approximation.
    pub solution: FlowSolution,
    pub rungs: Vec<LadderRung>,
    /// `‖v_{k+1} − v_k‖_∞` between consecutive rungs.
    pub gaps: Vec<f64>,
}

/// Slack allowed when checking that successive gaps decrease.
pub const CAUCHY_SLACK: f64 = 1.5;

/// Solves along finite approximations of a sampled path at each `ε` of a
/// decreasing ladder and checks that the solutions form a Cauchy sequence.
pub fn limit_solution(
    gamma: &SampledNbvFunction,
    surface: &Hypersurface,
    ladder: &[f64],
    v0: &Vector,
) -> Result<LimitSolution> {
    if ladder.is_empty() || ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("the ε ladder must be nonempty and strictly decreasing".into()));
    }
    let solutions = ladder
        .par_iter()
        .map(|&eps| {
            let approx = finite_approximation(gamma, surface, eps)?;
            solve_finite(&approx, v0)
        })
        .collect::<Result<Vec<_>>>()?;
    let gaps = solutions
        .par_windows(2)
        .map(|w| solution_sup_distance(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    for (k, w) in gaps.windows(2).enumerate() {
        if w[1] > CAUCHY_SLACK * w[0] + 1e-14 {
            return Err(Error::NotCauchy { rung: k + 1, prev: w[0], next: w[1] });
        }
    }
    let rungs = ladder
        .iter()
        .zip(&solutions)
        .map(|(&eps, s)| LadderRung {
            eps,
            breakpoints: s.trajectory().times().len(),
            total_variation: s.trajectory().total_variation(),
        })
        .collect();
    let solution = solutions.into_iter().next_back().expect("nonempty ladder");
    Ok(LimitSolution { solution, rungs, gaps })
}

#[derive(Debug, Clone)]
pub struct SkorokhodStability {
    /// Upper bound on `d_S(A, Ã)` under the path witness `λ`.
    pub operator_distance: f64,
    /// Upper bound on `d_S(γ, γ̃)`.
    pub path_distance: f64,
    pub alignment: Alignment,
}

impl SkorokhodStability {
    /// `d_S(A, Ã) / d_S(γ, γ̃)`, 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.path_distance > 0.0 {
            self.operator_distance / self.path_distance
        } else if self.operator_distance == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Compares solution operators entrywise in sup norm under the time change that
/// aligns the driving trajectories.
pub fn stability_skorokhod(gamma: &FiniteTrajectory, other: &FiniteTrajectory) -> Result<SkorokhodStability> {
    check_origin(gamma, other)?;
    let alignment = skorokhod_distance(gamma, other)?;
    let a = SolutionOperator::new(gamma)?;
    let b = SolutionOperator::new(other)?;
    let lambda = &alignment.lambda;
    let mapped: Vec<f64> = other.times().iter().map(|&s| lambda.inverse(s)).collect();
    let knots: Vec<f64> = lambda.knots().map(|(s, _)| s).collect();
    let times = merged_times(&merged_times(gamma.times(), &mapped), &knots);
    let diff = |x: Matrix, y: Matrix| (x - y).abs().max();
    let sup = sup_over(
        gamma.horizon(),
        &times,
        |t| Ok(diff(a.at(t)?, b.at(lambda.eval(t))?)),
        |t| Ok(diff(a.left_limit(t)?, b.left_limit(lambda.eval(t))?)),
    )?;
    Ok(SkorokhodStability {
        operator_distance: sup.max(lambda.sup_deviation()),
        path_distance: alignment.distance,
        alignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    fn circle_traj(times: &[f64], angles: &[f64]) -> FiniteTrajectory {
        FiniteTrajectory::new(
            Hypersurface::ball(2, 1.0),
            1.0,
            times.to_vec(),
            angles.iter().map(|a| from_slice(&[a.cos(), a.sin()])).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_trajectories_have_no_gap() {
        let g = circle_traj(&[0.0, 0.5], &[0.0, 0.3]);
        let v0 = from_slice(&[0.0, 1.0]);
        assert_eq!(stability_gap(&g, &g, &v0, 1.0).unwrap().sup_difference, 0.0);
        let s = stability_skorokhod(&g, &g).unwrap();
        assert_eq!((s.operator_distance, s.path_distance), (0.0, 0.0));
    }

    #[test]
    fn different_origins_are_rejected() {
        let g = circle_traj(&[0.0], &[0.0]);
        let h = circle_traj(&[0.0], &[0.1]);
        assert!(matches!(stability_gap(&g, &h, &from_slice(&[0.0, 1.0]), 1.0), Err(Error::OriginMismatch { .. })));
    }

    #[test]
    fn constant_trajectory_time_change_closed_form() {
        // v(t) = e^t v₀ on the unit circle, so the gap is sup |e^t − e^{λ(t)}|.
        let g = circle_traj(&[0.0], &[0.0]);
        let v0 = from_slice(&[0.0, 1.0]);
        let lambda = TimeChange::bump(1.0, 0.5, 0.1).unwrap();
        let gap = reparametrization_gap(&g, &lambda, &v0, 1.0).unwrap();
        let expected = 0.6f64.exp() - 0.5f64.exp();
        assert!((gap.sup_difference - expected).abs() < 1e-12, "{}", gap.sup_difference);
        assert!(gap.sup_difference <= 0.1 * 1f64.exp());
    }

    #[test]
    fn identity_time_change_has_no_gap() {
        let g = circle_traj(&[0.0, 0.5], &[0.0, 0.3]);
        let gap = reparametrization_gap(&g, &TimeChange::identity(1.0), &from_slice(&[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(gap.sup_difference, 0.0);
    }
}
