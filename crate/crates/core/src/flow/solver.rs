use std::io::Write;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::ShapeOperator;
use crate::linalg::{row_major, Matrix, Vector};
use crate::nbv::{format_f64, FiniteTrajectory};

/// Tangency tolerance for initial vectors, relative to `|v₀|`.
pub const TANGENCY_TOL: f64 = 1e-8;

struct Factors {
    shapes: Vec<ShapeOperator>,
    projectors: Vec<Matrix>,
    normals: Vec<Vector>,
    /// `e^{l_i S_i}` for `l_i = t_{i+1} − t_i`, one per completed piece.
    piece_exps: Vec<Matrix>,
}

impl Factors {
    fn new(gamma: &FiniteTrajectory) -> Result<Self> {
        let surface = gamma.surface();
        let times = gamma.times();
        let mut shapes = Vec::with_capacity(times.len());
        let mut projectors = Vec::with_capacity(times.len());
        let mut normals = Vec::with_capacity(times.len());
        for x in gamma.points() {
            let pi = surface.tangent_project(x)?;
            shapes.push(surface.shape_operator(x)?);
            projectors.push(pi.matrix);
            normals.push(pi.normal);
        }
        let piece_exps = times
            .windows(2)
            .enumerate()
            .map(|(i, w)| shapes[i].exp(w[1] - w[0]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { shapes, projectors, normals, piece_exps })
    }
}

/// `A(t) = e^{(t−t_k)S(x_k)} π_{x_k} ⋯ e^{(t_1−t_0)S(x_0)} π_{x_0}`, the
/// product formula applied to all of `R^n` at once. `A(t) n(x_0) = 0`.
pub struct SolutionOperator {
    trajectory: FiniteTrajectory,
    factors: Factors,
    /// `A(t_k)`.
    prefix: Vec<Matrix>,
}

impl std::fmt::Debug for SolutionOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolutionOperator").field("breakpoints", &self.trajectory.times()).finish()
    }
}

impl SolutionOperator {
    pub fn new(gamma: &FiniteTrajectory) -> Result<Self> {
        let factors = Factors::new(gamma)?;
        let mut prefix = Vec::with_capacity(gamma.times().len());
        prefix.push(factors.projectors[0].clone());
        for k in 1..gamma.times().len() {
            let next = &factors.projectors[k] * (&factors.piece_exps[k - 1] * &prefix[k - 1]);
            prefix.push(next);
        }
        Ok(Self { trajectory: gamma.clone(), factors, prefix })
    }

    pub fn trajectory(&self) -> &FiniteTrajectory {
        &self.trajectory
    }

    pub fn dim(&self) -> usize {
        self.trajectory.surface().dim()
    }

    pub fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }

    /// `A(t_k)` at every breakpoint.
    pub fn prefix_products(&self) -> &[Matrix] {
        &self.prefix
    }

    pub fn at(&self, t: f64) -> Result<Matrix> {
        let k = self.trajectory.index_at(t);
        let dt = (t - self.trajectory.times()[k]).max(0.0);
        Ok(self.factors.shapes[k].exp(dt)? * &self.prefix[k])
    }

    /// `A(t−)`; equals `A(t)` away from breakpoints and `A(0−) = π_{x_0}`.
    pub fn left_limit(&self, t: f64) -> Result<Matrix> {
        let times = self.trajectory.times();
        let k = self.trajectory.index_at(t);
        if k > 0 && times[k] == t {
            Ok(&self.factors.piece_exps[k - 1] * &self.prefix[k - 1])
        } else if t <= 0.0 {
            Ok(self.prefix[0].clone())
        } else {
            self.at(t)
        }
    }

    /// CSV with header `t,a_11,a_12,…,a_nn` (row-major), one row per time.
    pub fn write_csv<W: Write>(&self, writer: W, times: &[f64]) -> Result<()> {
        let n = self.dim();
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        for i in 1..=n {
            for j in 1..=n {
                header.push(format!("a_{i}{j}"));
            }
        }
        w.write_record(&header)?;
        for &t in times {
            let mut row = vec![format_f64(t)];
            row.extend(row_major(&self.at(t)?).into_iter().map(format_f64));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn solution_operator(gamma: &FiniteTrajectory) -> Result<SolutionOperator> {
    SolutionOperator::new(gamma)
}

/// The solution `v(t)` of the measure ODE along a finite trajectory.
/// Breakpoint prefixes `v(t_k)` are computed on first use and cached.
pub struct FlowSolution {
    trajectory: FiniteTrajectory,
    factors: Factors,
    v0: Vector,
    prefix: OnceLock<Vec<Vector>>,
}

impl std::fmt::Debug for FlowSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowSolution")
            .field("breakpoints", &self.trajectory.times())
            .field("v0", &self.v0.as_slice())
            .finish()
    }
}

impl FlowSolution {
    pub fn trajectory(&self) -> &FiniteTrajectory {
        &self.trajectory
    }

    pub fn initial(&self) -> &Vector {
        &self.v0
    }

    pub fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }

    fn prefix(&self) -> &[Vector] {
        self.prefix.get_or_init(|| {
            let mut out = Vec::with_capacity(self.trajectory.times().len());
            out.push(self.v0.clone());
            for k in 1..self.trajectory.times().len() {
                let prev: &Vector = &out[k - 1];
                let moved = &self.factors.piece_exps[k - 1] * prev;
                out.push(&self.factors.projectors[k] * moved);
            }
            out
        })
    }

    /// `v(t_k)` at every breakpoint.
    pub fn breakpoint_values(&self) -> &[Vector] {
        self.prefix()
    }

    pub fn eval(&self, t: f64) -> Result<Vector> {
        let k = self.trajectory.index_at(t);
        let dt = (t - self.trajectory.times()[k]).max(0.0);
        Ok(self.factors.shapes[k].exp(dt)? * &self.prefix()[k])
    }

    /// `v(t−)`, with `v(0−) = v₀`.
    pub fn left_limit(&self, t: f64) -> Result<Vector> {
        let times = self.trajectory.times();
        let k = self.trajectory.index_at(t);
        if k > 0 && times[k] == t {
            Ok(&self.factors.piece_exps[k - 1] * &self.prefix()[k - 1])
        } else if t <= 0.0 {
            Ok(self.v0.clone())
        } else {
            self.eval(t)
        }
    }

    /// Recomputes `v(t)` by folding every factor from scratch, without the
    /// cached prefixes or precomputed exponentials.
    pub fn eval_uncached(&self, t: f64) -> Result<Vector> {
        let surface = self.trajectory.surface();
        let times = self.trajectory.times();
        let points = self.trajectory.points();
        let k = self.trajectory.index_at(t);
        let mut v = self.v0.clone();
        for i in 0..k {
            if i > 0 {
                v = surface.tangent_project(&points[i])?.apply(&v);
            }
            v = surface.shape_operator(&points[i])?.exp(times[i + 1] - times[i])? * v;
        }
        if k > 0 {
            v = surface.tangent_project(&points[k])?.apply(&v);
        }
        Ok(surface.shape_operator(&points[k])?.exp((t - times[k]).max(0.0))? * v)
    }

    /// `n(γ(t))`.
    pub fn normal_at(&self, t: f64) -> &Vector {
        &self.factors.normals[self.trajectory.index_at(t)]
    }
}

/// Solves along `γ` from a tangent `v₀ ∈ T_{γ(0)}M`.
pub fn solve_finite(gamma: &FiniteTrajectory, v0: &Vector) -> Result<FlowSolution> {
    if v0.len() != gamma.surface().dim() {
        return Err(Error::InvalidInput(format!("v0 has dimension {}, surface {}", v0.len(), gamma.surface().dim())));
    }
    let n0 = gamma.surface().normal(gamma.start())?;
    let normal_component = n0.dot(v0).abs();
    if normal_component > TANGENCY_TOL * v0.norm() {
        return Err(Error::NotTangent { normal_component });
    }
    Ok(FlowSolution { trajectory: gamma.clone(), factors: Factors::new(gamma)?, v0: v0.clone(), prefix: OnceLock::new() })
}

/// Components of the ODE check; see [`ode_residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeResidual {
    /// `sup |v′ − S v|` between breakpoints, by central differences.
    pub derivative: f64,
    /// `max |v(t_i) − π_{x_i} v(t_i−)|`.
    pub jump: f64,
    /// `sup |⟨v(t), n(γ(t))⟩|`.
    pub tangency: f64,
}

impl OdeResidual {
    pub fn max(&self) -> f64 {
        self.derivative.max(self.jump).max(self.tangency)
    }
}

/// Checks the solution against the ODE with finite-difference step `1e-4`
/// and 16 sample times per piece.
pub fn ode_residual(sol: &FlowSolution) -> Result<OdeResidual> {
    ode_residual_with(sol, 1e-4, 16)
}

pub fn ode_residual_with(sol: &FlowSolution, fd_step: f64, samples_per_piece: usize) -> Result<OdeResidual> {
    let times = sol.trajectory.times();
    let horizon = sol.horizon();
    let mut res = OdeResidual { derivative: 0.0, jump: 0.0, tangency: 0.0 };
    for k in 0..times.len() {
        let start = times[k];
        let end = times.get(k + 1).copied().unwrap_or(horizon);
        let s = &sol.factors.shapes[k];
        let n = &sol.factors.normals[k];
        if k > 0 {
            let expected = &sol.factors.projectors[k] * sol.left_limit(start)?;
            res.jump = res.jump.max((sol.eval(start)? - expected).norm());
        }
        res.tangency = res.tangency.max(sol.eval(start)?.dot(n).abs());
        let len = end - start;
        if len <= 0.0 {
            continue;
        }
        let h = fd_step.min(len / 4.0);
        for j in 0..samples_per_piece {
            let tau = start + h + (len - 2.0 * h) * (j as f64 + 0.5) / samples_per_piece as f64;
            let v = sol.eval(tau)?;
            let deriv = (sol.eval(tau + h)? - sol.eval(tau - h)?) / (2.0 * h);
            res.derivative = res.derivative.max((deriv - &s.matrix * &v).norm());
            res.tangency = res.tangency.max(v.dot(n).abs());
        }
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hypersurface;
    use crate::linalg::{from_slice, op_norm};

    fn sphere_traj(times: &[f64], points: &[[f64; 3]]) -> FiniteTrajectory {
        FiniteTrajectory::new(
            Hypersurface::ball(3, 1.0),
            1.0,
            times.to_vec(),
            points.iter().map(|p| from_slice(p).normalize()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn constant_trajectory_grows_like_e_to_the_t() {
        let g = sphere_traj(&[0.0], &[[0.0, 0.0, 1.0]]);
        let v0 = from_slice(&[0.3, -0.4, 0.0]);
        let sol = solve_finite(&g, &v0).unwrap();
        assert!((sol.eval(1.0).unwrap() - &v0 * 1f64.exp()).norm() < 1e-12);
        let a = solution_operator(&g).unwrap();
        let pi = Hypersurface::ball(3, 1.0).tangent_project(g.start()).unwrap().matrix;
        assert!(op_norm(&(a.at(0.0).unwrap() - &pi)) < 1e-15);
        assert!(op_norm(&(a.at(0.7).unwrap() - &pi * 0.7f64.exp())) < 1e-12);
    }

    #[test]
    fn non_tangent_initial_vector_is_rejected() {
        let g = sphere_traj(&[0.0], &[[0.0, 0.0, 1.0]]);
        assert!(matches!(solve_finite(&g, &from_slice(&[0.0, 0.1, 1.0])), Err(Error::NotTangent { .. })));
    }

    #[test]
    fn two_piece_sphere_against_hand_product() {
        let g = sphere_traj(&[0.0, 0.4], &[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let v0 = from_slice(&[0.6, 0.8, 0.0]);
        let sol = solve_finite(&g, &v0).unwrap();
        // On the unit sphere e^{tS(x)} = π_x e^t + x xᵀ.
        let before = &v0 * 0.4f64.exp();
        let after_jump = from_slice(&[0.0, before[1], before[2]]);
        assert!((sol.eval(0.4).unwrap() - &after_jump).norm() < 1e-13);
        assert!((sol.eval(1.0).unwrap() - &after_jump * 0.6f64.exp()).norm() < 1e-12);
        assert!((sol.left_limit(0.4).unwrap() - before).norm() < 1e-13);
    }

    #[test]
    fn cached_and_uncached_evaluation_agree() {
        let g = sphere_traj(&[0.0, 0.2, 0.5, 0.9], &[[0.0, 0.0, 1.0], [0.1, 0.2, 1.0], [0.3, -0.2, 1.0], [0.5, 0.1, 0.9]]);
        let sol = solve_finite(&g, &from_slice(&[1.0, 0.5, 0.0])).unwrap();
        for t in [0.0, 0.1, 0.2, 0.45, 0.9, 1.0] {
            assert!((sol.eval(t).unwrap() - sol.eval_uncached(t).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn residual_of_constant_trajectory_is_small() {
        let g = sphere_traj(&[0.0], &[[0.0, 0.0, 1.0]]);
        let sol = solve_finite(&g, &from_slice(&[1.0, 0.0, 0.0])).unwrap();
        assert!(ode_residual(&sol).unwrap().max() <= 1e-6);
        let zero = solve_finite(&g, &Vector::zeros(3)).unwrap();
        assert_eq!(ode_residual(&zero).unwrap().max(), 0.0);
    }

    #[test]
    fn operator_csv_header() {
        let g = sphere_traj(&[0.0], &[[0.0, 0.0, 1.0]]);
        let mut buf = Vec::new();
        solution_operator(&g).unwrap().write_csv(&mut buf, &[0.0, 0.5]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,a_11,a_12,a_13,a_21"));
        assert_eq!(text.lines().count(), 3);
    }
}
