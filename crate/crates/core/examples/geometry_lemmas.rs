//! Projections, shape operators and the global constant K on three surfaces.

use reflected_flow::geometry::{check_global_k, estimate_global_k};
use reflected_flow::linalg::from_slice;
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let surfaces =
        [Hypersurface::ball(3, 1.0), Hypersurface::ellipsoid(&[2.0, 1.0, 0.5]), Hypersurface::parabola(0.25)];
    for s in &surfaces {
        let est = estimate_global_k(s, 1.5, 1.0, 2000, 7)?;
        let check = check_global_k(s, 1.5, 1.0, 2.0 * est.k, 2000, 8)?;
        println!("{:<22} K = {:>10.4}  inequalities hold with 2K: {}", s.label(), est.k, check.holds());
    }

    let parabola = Hypersurface::parabola(1.0);
    let origin = from_slice(&[0.0, 0.0]);
    let shape = parabola.shape_operator(&origin)?;
    println!("parabola(1) at the origin: eigenvalues of S = {:?}", shape.eigenvalues().as_slice());
    println!("e^S = {}", shape.exp(1.0)?);
    Ok(())
}
