//! Solves the tangent flow along a piecewise-constant path on the sphere and
//! checks it against the constant-path closed form and the ODE residual.

use reflected_flow::flow::{ode_residual, solution_operator, solve_finite};
use reflected_flow::linalg::from_slice;
use reflected_flow::nbv::FiniteTrajectory;
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let sphere = Hypersurface::ball(3, 1.0);
    let north = from_slice(&[0.0, 0.0, 1.0]);
    let v0 = from_slice(&[1.0, 0.0, 0.0]);

    let still = FiniteTrajectory::constant(sphere.clone(), 1.0, north.clone())?;
    let v1 = solve_finite(&still, &v0)?.eval(1.0)?;
    println!("constant path: |v(1)| = {:.15}, e = {:.15}", v1.norm(), std::f64::consts::E);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let points = vec![north, from_slice(&[s, 0.0, s]), from_slice(&[0.0, s, s]), from_slice(&[0.0, 0.0, 1.0])];
    let gamma = FiniteTrajectory::new(sphere, 1.0, vec![0.0, 0.25, 0.5, 0.75], points)?;
    let sol = solve_finite(&gamma, &v0)?;
    for k in 0..=8 {
        let t = k as f64 / 8.0;
        let v = sol.eval(t)?;
        println!("t = {t:.3}  v = [{:+.6}, {:+.6}, {:+.6}]", v[0], v[1], v[2]);
    }
    println!("max ODE residual: {:.3e}", ode_residual(&sol)?.max());
    println!("A(1) =\n{}", solution_operator(&gamma)?.at(1.0)?);
    Ok(())
}
