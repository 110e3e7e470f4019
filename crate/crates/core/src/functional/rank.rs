use serde::Serialize;

use crate::error::Result;
use crate::geometry::Hypersurface;
use crate::linalg::{Matrix, Vector};
use crate::rbm::ExcursionSkeleton;

use super::excursion_factors;

/// Relative singular-value threshold for the numerical rank.
pub const RANK_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankDiagnostics {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Angle in radians between `n(x₀)` and the numerical kernel; the
    /// smallest right singular vector stands in when the kernel is trivial.
    pub kernel_angle: f64,
}

pub fn rank_diagnostics(a: &Matrix, surface: &Hypersurface, x0: &Vector) -> Result<RankDiagnostics> {
    let n = surface.normal(x0)?;
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = singular_values.first().copied().unwrap_or(0.0);
    let threshold = RANK_RTOL * top;
    let rank = singular_values.iter().filter(|&&s| s > threshold && s > 0.0).count();
    let mut kernel: Vec<usize> = order.iter().copied().filter(|&i| !(svd.singular_values[i] > threshold && svd.singular_values[i] > 0.0)).collect();
    if kernel.is_empty() {
        kernel.push(*order.last().expect("nonempty matrix"));
    }
    let in_kernel = kernel.iter().map(|&i| v_t.row(i).transpose().dot(&n).powi(2)).sum::<f64>().sqrt();
    let cos = in_kernel.min(1.0);
    // asin of the orthogonal part is accurate near zero, acos is not
    let kernel_angle = (1.0 - cos * cos).max(0.0).sqrt().asin();
    Ok(RankDiagnostics { singular_values, rank, kernel_angle })
}

/// A consecutive endpoint pair at distance at least `ρ₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargeGap {
    /// Index `k` of the pair `(x_k, x_{k+1})` among the product factors.
    pub index: usize,
    pub distance: f64,
    /// `log|⟨n(x_k), n(x_{k+1})⟩|`, the worst-case log shrinkage of a tangent
    /// vector at `x_k` under `π_{x_{k+1}}`.
    pub log_drop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogDrop {
    /// `Σ |x_k − x_{k+1}|²` over pairs closer than `ρ₁`.
    pub quadratic_sum: f64,
    pub large: Vec<LargeGap>,
}

/// Default split threshold: half the inverse curvature bound.
pub fn default_rho1(surface: &Hypersurface, radius: f64) -> Result<f64> {
    let kappa = surface.curvature_bound(radius)?;
    Ok(if kappa > 0.0 { 0.5 / kappa } else { f64::INFINITY })
}

/// Splits consecutive factor points of `A_{r,ε}` at `ρ₁`; pairs at distance
/// exactly `ρ₁` count as large.
pub fn projection_log_drop(
    skeleton: &ExcursionSkeleton,
    surface: &Hypersurface,
    r: f64,
    eps: f64,
    rho1: f64,
) -> Result<LogDrop> {
    let factors = excursion_factors(skeleton, r, eps)?;
    let mut quadratic_sum = 0.0;
    let mut large = Vec::new();
    for (index, w) in factors.windows(2).enumerate() {
        let distance = (&w[1].point - &w[0].point).norm();
        if distance >= rho1 {
            let cos = surface.normal(&w[0].point)?.dot(&surface.normal(&w[1].point)?);
            large.push(LargeGap { index, distance, log_drop: cos.abs().ln() });
        } else {
            quadratic_sum += distance * distance;
        }
    }
    Ok(LogDrop { quadratic_sum, large })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;
    use crate::rbm::{ExcursionRecord, FirstContact};

    #[test]
    fn single_factor_on_disk_has_rank_one() {
        let disk = Hypersurface::ball(2, 1.0);
        let x0 = from_slice(&[0.6, 0.8]);
        let a = disk.shape_operator(&x0).unwrap().exp(0.7).unwrap() * disk.tangent_project(&x0).unwrap().matrix;
        let d = rank_diagnostics(&a, &disk, &x0).unwrap();
        assert_eq!(d.rank, 1);
        assert!((d.singular_values[0] - 0.7f64.exp()).abs() < 1e-13);
        assert!(d.singular_values[1] < 1e-15);
        assert!(d.kernel_angle < 1e-12);
    }

    #[test]
    fn orthogonal_tangents_collapse_the_rank() {
        let disk = Hypersurface::ball(2, 1.0);
        let (x, y) = (from_slice(&[1.0, 0.0]), from_slice(&[0.0, 1.0]));
        let a = disk.tangent_project(&y).unwrap().matrix * disk.tangent_project(&x).unwrap().matrix;
        assert_eq!(rank_diagnostics(&a, &disk, &x).unwrap().rank, 0);
    }

    fn skeleton_with_gap(gap_end: &[f64]) -> ExcursionSkeleton {
        let start = from_slice(&[1.0, 0.0]);
        let end = from_slice(gap_end);
        let rec = ExcursionRecord {
            start_time: 0.1,
            end_time: 0.2,
            jump: (&end - &start).norm(),
            start_point: start.clone(),
            end_point: end,
            local_time: 0.1,
        };
        ExcursionSkeleton::from_records(FirstContact { time: 0.0, point: start }, vec![rec], 1.0, 1.0).unwrap()
    }

    #[test]
    fn tie_at_rho1_is_large() {
        let disk = Hypersurface::ball(2, 1.0);
        let s = skeleton_with_gap(&[0.0, 1.0]);
        let rho1 = 2f64.sqrt();
        let d = projection_log_drop(&s, &disk, 1.0, 0.01, (&s.records[0].end_point - &s.records[0].start_point).norm()).unwrap();
        assert_eq!(d.large.len(), 1);
        assert_eq!(d.quadratic_sum, 0.0);
        let small = projection_log_drop(&s, &disk, 1.0, 0.01, rho1 * 2.0).unwrap();
        assert!(small.large.is_empty());
        assert!((small.quadratic_sum - 2.0).abs() < 1e-14);
    }
}
