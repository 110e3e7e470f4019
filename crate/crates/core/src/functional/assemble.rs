use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::{Matrix, Vector};
use crate::rbm::ExcursionSkeleton;

/// One factor `exp(Δℓ S(x)) π_x` of the excursion product.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub point: Vector,
    /// Local time spent on this factor, `ℓ_{k+1} − ℓ_k`.
    pub weight: f64,
}

/// The factors of `A_{r,ε}` in application order: the first contact, then
/// the endpoint of every excursion with jump at least `eps` starting before
/// local time `r`. Weights sum to `r`.
pub fn excursion_factors(skeleton: &ExcursionSkeleton, r: f64, eps: f64) -> Result<Vec<Factor>> {
    if !(r >= 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("need r >= 0 and eps > 0, got r = {r}, eps = {eps}")));
    }
    let first = skeleton.first_contact()?;
    if skeleton.final_local_time < r {
        return Err(Error::LocalTimeNotReached { requested: r, reached: skeleton.final_local_time });
    }
    let mut points = vec![(0.0, first.point.clone())];
    points.extend(skeleton.large(eps, r).map(|e| (e.local_time, e.end_point.clone())));
    let mut factors = Vec::with_capacity(points.len());
    for (k, (ell, point)) in points.iter().enumerate() {
        let next = points.get(k + 1).map_or(r, |p| p.0);
        factors.push(Factor { point: point.clone(), weight: (next - ell).max(0.0) });
    }
    Ok(factors)
}

/// Ordered product of factors, latest on the left.
pub fn factor_product(surface: &Hypersurface, factors: &[Factor]) -> Result<Matrix> {
    let n = surface.dim();
    let mut a = Matrix::identity(n, n);
    for f in factors {
        let shape = surface.shape_operator(&f.point)?;
        let pi = surface.tangent_project(&f.point)?.matrix;
        a = shape.exp(f.weight)? * pi * a;
    }
    Ok(a)
}

/// `A_{r,ε} = exp(Δℓ_m S(x_m))π_{x_m} ⋯ exp(Δℓ_0 S(x_0))π_{x_0}` from an
/// excursion skeleton.
pub fn assemble_a(skeleton: &ExcursionSkeleton, surface: &Hypersurface, r: f64, eps: f64) -> Result<Matrix> {
    factor_product(surface, &excursion_factors(skeleton, r, eps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;
    use crate::rbm::{ExcursionRecord, FirstContact};

    fn record(ell: f64, from: &[f64], to: &[f64]) -> ExcursionRecord {
        let (a, b) = (from_slice(from), from_slice(to));
        ExcursionRecord {
            start_time: ell,
            end_time: ell + 0.01,
            jump: (&b - &a).norm(),
            start_point: a,
            end_point: b,
            local_time: ell,
        }
    }

    fn skeleton() -> ExcursionSkeleton {
        let first = FirstContact { time: 0.0, point: from_slice(&[1.0, 0.0]) };
        let records = vec![
            record(0.2, &[1.0, 0.0], &[0.0, 1.0]),
            record(0.3, &[0.0, 1.0], &[0.0, 1.0]),
            record(0.7, &[0.0, 1.0], &[-1.0, 0.0]),
        ];
        ExcursionSkeleton::from_records(first, records, 5.0, 1.5).unwrap()
    }

    #[test]
    fn weights_follow_local_times() {
        let f = excursion_factors(&skeleton(), 1.0, 0.5).unwrap();
        let w: Vec<f64> = f.iter().map(|f| f.weight).collect();
        assert_eq!(w.len(), 3);
        assert!((w[0] - 0.2).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn no_large_excursion_gives_single_factor() {
        let disk = Hypersurface::ball(2, 1.0);
        let a = assemble_a(&skeleton(), &disk, 1.0, 10.0).unwrap();
        // exp(S) π at (1, 0) on the unit circle: e on the tangent e₂, 0 on e₁.
        let expected = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1f64.exp()]);
        assert!((a - expected).abs().max() < 1e-14);
    }

    #[test]
    fn kills_the_first_normal() {
        let disk = Hypersurface::ball(2, 1.0);
        let a = assemble_a(&skeleton(), &disk, 1.0, 0.5).unwrap();
        assert!((a * from_slice(&[1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn short_skeleton_is_refused() {
        let disk = Hypersurface::ball(2, 1.0);
        assert!(matches!(assemble_a(&skeleton(), &disk, 2.0, 0.5), Err(Error::LocalTimeNotReached { .. })));
    }
}
