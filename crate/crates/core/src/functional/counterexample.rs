use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::solve_finite;
use crate::geometry::{Hypersurface, Orientation};
use crate::linalg::{from_slice, Vector};
use crate::nbv::FiniteTrajectory;

use super::fit_slope;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub j: u32,
    /// Number of `(x_j, y_j)` pairs, `j³/2`.
    pub pairs: u64,
    pub total_variation: f64,
    /// `|⟨t_{x_j}, t_{y_j}⟩|`.
    pub contraction: f64,
    /// `|v_j(1)|`.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleTable {
    pub scale: f64,
    pub orientation: String,
    pub rows: Vec<CounterexampleRow>,
    /// `|v(1)|` along the constant path at the vertex.
    pub limit_norm: f64,
    /// Least-squares slope of `ln|v_j(1)|` against `j`.
    pub slope: Option<f64>,
}

/// The path jumping between `x_j = (1/j, c/j²)` and `y_j = (−1/j, c/j²)` on
/// `x₂ = c x₁²`: it sits at `x_j` on `[2k/j³, (2k+1)/j³)`, at `y_j` on
/// `[(2k+1)/j³, (2k+2)/j³)`, and returns to `x_j` at time 1.
pub fn oscillating_path(surface: &Hypersurface, j: u32, scale: f64) -> Result<FiniteTrajectory> {
    if j < 2 || j % 2 != 0 {
        return Err(Error::InvalidInput(format!("j must be even and at least 2, got {j}")));
    }
    let jf = j as f64;
    let x = from_slice(&[1.0 / jf, scale / (jf * jf)]);
    let y = from_slice(&[-1.0 / jf, scale / (jf * jf)]);
    let pieces = (j as usize).pow(3);
    let mut times: Vec<f64> = (0..pieces).map(|k| k as f64 / pieces as f64).collect();
    let mut points: Vec<Vector> = (0..pieces).map(|k| if k % 2 == 0 { x.clone() } else { y.clone() }).collect();
    times.push(1.0);
    points.push(x);
    FiniteTrajectory::new(surface.clone(), 1.0, times, points)
}

/// `|v_j(1)|` for each `j` with `v₀ = π_{x_j} e₁`, and the value `|e^{S(0)} e₁|`
/// of the constant path at the vertex.
pub fn counterexample_parabola(js: &[u32], scale: f64, orientation: Orientation) -> Result<CounterexampleTable> {
    let surface = Hypersurface::parabola(scale).with_orientation(orientation);
    let e1 = from_slice(&[1.0, 0.0]);
    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        let gamma = oscillating_path(&surface, j, scale)?;
        let (x, y) = (&gamma.points()[0], &gamma.points()[1]);
        let v0 = surface.tangent_project(x)?.apply(&e1);
        let v = solve_finite(&gamma, &v0)?.eval(1.0)?;
        let (nx, ny) = (surface.normal(x)?, surface.normal(y)?);
        // in the plane |⟨t_x, t_y⟩| = |⟨n_x, n_y⟩|
        rows.push(CounterexampleRow {
            j,
            pairs: (j as u64).pow(3) / 2,
            total_variation: gamma.total_variation(),
            contraction: nx.dot(&ny).abs(),
            norm: v.norm(),
        });
    }
    let origin = from_slice(&[0.0, 0.0]);
    let constant = FiniteTrajectory::constant(surface.clone(), 1.0, origin.clone())?;
    let limit_norm = solve_finite(&constant, &surface.tangent_project(&origin)?.apply(&e1))?.eval(1.0)?.norm();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.j as f64, r.norm.ln())).unzip();
    let orientation = match orientation {
        Orientation::AlongGradient => "up",
        Orientation::AgainstGradient => "down",
    };
    Ok(CounterexampleTable { scale, orientation: orientation.into(), rows, limit_norm, slope: fit_slope(&xs, &ys) })
}
