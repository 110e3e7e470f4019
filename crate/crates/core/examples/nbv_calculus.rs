//! Stieltjes calculus on sampled paths and the finite ε-approximation of a
//! continuous path on the circle.

use reflected_flow::linalg::from_slice;
use reflected_flow::nbv::{
    finite_approximation, integration_by_parts_residual, product_rule_residual, sup_distance_to_samples,
    SampledNbvFunction,
};
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let step = |t: f64| if t < 0.5 { 0.0 } else { 1.0 };
    let u = SampledNbvFunction::from_fn(1.0, 200, |t| from_slice(&[t, step(t)]))?;
    let v = SampledNbvFunction::from_fn(1.0, 200, |t| from_slice(&[(3.0 * t).sin(), 1.0 - step(t)]))?;
    println!("integration by parts residual: {:.3e}", integration_by_parts_residual(&u, &v, 0.1, 0.9)?);
    println!("product rule residual:         {:.3e}", product_rule_residual(&u, &v)?);

    let circle = Hypersurface::ball(2, 1.0);
    let gamma = SampledNbvFunction::from_fn(1.0, 20_000, |t| {
        let a = 0.8 * (3.0 * std::f64::consts::TAU * t).sin();
        from_slice(&[a.cos(), a.sin()])
    })?;
    println!("total variation of γ: {:.4}", gamma.total_variation());
    println!("{:>10} {:>12} {:>12} {:>10}", "eps", "sup dist", "variation", "jumps");
    for j in 1..=8 {
        let eps = 0.5f64.powi(j);
        let approx = finite_approximation(&gamma, &circle, eps)?;
        let d = sup_distance_to_samples(&gamma, &approx)?;
        println!("{eps:>10.5} {d:>12.6} {:>12.6} {:>10}", approx.total_variation(), approx.jumps());
    }
    Ok(())
}
