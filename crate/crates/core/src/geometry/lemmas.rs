//! Sampled estimates of the surface constants `K` and `C` and the operator
//! inequalities they control.
//!
//! The constants exist but are never given numerically, so they are measured:
//! `estimate_global_k` takes the worst quotient over a sample of `M_R`, and
//! `check_global_k` replays every inequality on a fresh sample with a given `K`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Hypersurface;
use crate::error::Result;
use crate::linalg::{op_norm, Matrix, Vector};

const NEAR_SCALES: [f64; 3] = [1e-1, 1e-2, 1e-3];
const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct GlobalKEstimate {
    pub radius: f64,
    pub horizon: f64,
    pub seed: u64,
    pub points: usize,
    pub pairs: usize,
    pub pi_lipschitz: f64,
    pub shape_norm: f64,
    pub shape_lipschitz: f64,
    pub exp_growth: f64,
    pub exp_decay: f64,
    pub exp_near_identity: f64,
    pub exp_lipschitz: f64,
    pub normal_lipschitz: f64,
    /// The maximum of all of the above.
    pub k: f64,
}

struct Sample {
    point: Vector,
    normal: Vector,
    projector: Matrix,
    shape: super::ShapeOperator,
}

fn sample_at(surface: &Hypersurface, point: Vector) -> Result<Sample> {
    let projector = surface.tangent_project(&point)?;
    let shape = surface.shape_operator(&point)?;
    Ok(Sample { normal: projector.normal, projector: projector.matrix, shape, point })
}

/// Close pairs control the Lipschitz quotients; far pairs keep the estimate global.
fn sample_pairs(
    surface: &Hypersurface,
    radius: f64,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(Sample, Sample)>> {
    let points = surface.sample_points(radius, count, rng)?;
    let mut pairs = Vec::with_capacity(2 * points.len());
    for (i, p) in points.iter().enumerate() {
        let far = &points[rng.random_range(0..points.len())];
        if (far - p).norm() > 0.0 {
            pairs.push((sample_at(surface, p.clone())?, sample_at(surface, far.clone())?));
        }
        let scale = NEAR_SCALES[i % NEAR_SCALES.len()] * radius;
        if let Ok(q) = surface.perturb_on_surface(p, scale, rng) {
            if q.norm() <= radius * (1.0 + 1e-9) && surface.is_on_surface(&q) && (&q - p).norm() > 0.0 {
                pairs.push((sample_at(surface, p.clone())?, sample_at(surface, q)?));
            }
        }
    }
    Ok(pairs)
}

fn extreme_eigenvalues(s: &super::ShapeOperator) -> (f64, f64) {
    s.eigenvalues().iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// `sup_{0 < l ≤ T} ‖e^{lS} - I‖ / l` from the eigenvalues: decreasing
/// eigenvalues peak as `l → 0`, increasing ones at `l = T`.
fn exp_near_identity_sup(s: &super::ShapeOperator, horizon: f64) -> f64 {
    s.eigenvalues()
        .iter()
        .map(|&lam| {
            if lam <= 0.0 || horizon <= 0.0 {
                lam.abs()
            } else {
                (horizon * lam).exp_m1() / horizon
            }
        })
        .fold(0.0, f64::max)
}

fn l_grid(horizon: f64) -> impl Iterator<Item = f64> {
    (0..7).map(move |k| horizon * 0.5f64.powi(k))
}

/// Estimates `K` over `M_R = M ∩ B(0, radius)` for horizon `T`.
pub fn estimate_global_k(
    surface: &Hypersurface,
    radius: f64,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<GlobalKEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = sample_pairs(surface, radius, samples, &mut rng)?;

    let mut est = GlobalKEstimate {
        radius,
        horizon,
        seed,
        points: samples,
        pairs: pairs.len(),
        pi_lipschitz: 0.0,
        shape_norm: 0.0,
        shape_lipschitz: 0.0,
        exp_growth: 0.0,
        exp_decay: 0.0,
        exp_near_identity: 0.0,
        exp_lipschitz: 0.0,
        normal_lipschitz: 0.0,
        k: 0.0,
    };
    for (a, b) in &pairs {
        let d = (&a.point - &b.point).norm();
        est.pi_lipschitz = est.pi_lipschitz.max(op_norm(&(&a.projector - &b.projector)) / d);
        est.shape_lipschitz = est.shape_lipschitz.max(op_norm(&(&a.shape.matrix - &b.shape.matrix)) / d);
        est.normal_lipschitz = est.normal_lipschitz.max((&a.normal - &b.normal).norm() / d);
        for s in [&a.shape, &b.shape] {
            let (lo, hi) = extreme_eigenvalues(s);
            est.shape_norm = est.shape_norm.max(s.spectral_radius());
            est.exp_growth = est.exp_growth.max(hi);
            est.exp_decay = est.exp_decay.max(-lo);
            est.exp_near_identity = est.exp_near_identity.max(exp_near_identity_sup(s, horizon));
        }
        for l in l_grid(horizon).filter(|l| *l > 0.0) {
            let diff = a.shape.exp(l)? - b.shape.exp(l)?;
            est.exp_lipschitz = est.exp_lipschitz.max(op_norm(&diff) / (l * d));
        }
    }
    est.k = [
        est.pi_lipschitz,
        est.shape_norm,
        est.shape_lipschitz,
        est.exp_growth,
        est.exp_decay,
        est.exp_near_identity,
        est.exp_lipschitz,
        est.normal_lipschitz,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(est)
}

/// Outcome of one inequality over a sample. `worst_ratio` is the largest
/// observed `lhs / rhs`; the inequality holds when it is at most 1.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    pub worst_ratio: f64,
}

impl InequalityCheck {
    fn new(name: &'static str) -> Self {
        Self { name, checked: 0, violations: 0, worst_ratio: 0.0 }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        self.checked += 1;
        let tol = RELATIVE_SLACK * (1.0 + rhs.abs());
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= tol {
            0.0
        } else {
            f64::INFINITY
        };
        self.worst_ratio = self.worst_ratio.max(ratio);
        if !(lhs <= rhs + tol) {
            self.violations += 1;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalKCheck {
    pub k: f64,
    pub inequalities: Vec<InequalityCheck>,
}

impl GlobalKCheck {
    pub fn holds(&self) -> bool {
        self.inequalities.iter().all(|c| c.violations == 0 && c.checked > 0)
    }
}

/// Evaluates all eight operator inequalities with constant `k` on a fresh sample.
pub fn check_global_k(
    surface: &Hypersurface,
    radius: f64,
    horizon: f64,
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<GlobalKCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = sample_pairs(surface, radius, samples, &mut rng)?;
    let dim = surface.dim();
    let id = Matrix::identity(dim, dim);

    let mut pi_lip = InequalityCheck::new("pi_lipschitz");
    let mut s_norm = InequalityCheck::new("shape_norm");
    let mut s_lip = InequalityCheck::new("shape_lipschitz");
    let mut growth = InequalityCheck::new("exp_growth");
    let mut decay = InequalityCheck::new("exp_decay");
    let mut near_id = InequalityCheck::new("exp_near_identity");
    let mut exp_lip = InequalityCheck::new("exp_lipschitz");
    let mut n_lip = InequalityCheck::new("normal_lipschitz");

    for (a, b) in &pairs {
        let d = (&a.point - &b.point).norm();
        pi_lip.record(op_norm(&(&a.projector - &b.projector)), k * d);
        s_lip.record(op_norm(&(&a.shape.matrix - &b.shape.matrix)), k * d);
        n_lip.record((&a.normal - &b.normal).norm(), k * d);

        let t = rng.random_range(0.0..=horizon);
        let ea = a.shape.exp(t)?;
        s_norm.record(op_norm(&a.shape.matrix), k);
        growth.record(op_norm(&ea), (k * t).exp());
        let z = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        decay.record((-k * t).exp() * z.norm(), (&ea * &z).norm());
        near_id.record(op_norm(&(&ea - &id)), k * t);
        exp_lip.record(op_norm(&(ea - b.shape.exp(t)?)), k * t * d);
    }
    Ok(GlobalKCheck { k, inequalities: vec![pi_lip, s_norm, s_lip, growth, decay, near_id, exp_lip, n_lip] })
}

/// Result of one `‖π_z(π_y − π_x)π_w‖ ≤ C(|w−y||y−z| + |w−x||x−z|)` evaluation.
/// `ratio` is the constant the configuration needs: `lhs / (|w−y||y−z| + |w−x||x−z|)`,
/// defined as 0 when both sides vanish.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PipiCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn pipi_pipi_bound_check(
    surface: &Hypersurface,
    w: &Vector,
    x: &Vector,
    y: &Vector,
    z: &Vector,
    c: f64,
) -> Result<PipiCheck> {
    let pw = surface.tangent_project(w)?.matrix;
    let px = surface.tangent_project(x)?.matrix;
    let py = surface.tangent_project(y)?.matrix;
    let pz = surface.tangent_project(z)?.matrix;
    let lhs = op_norm(&(pz * (py - px) * pw));
    let scale = (w - y).norm() * (y - z).norm() + (w - x).norm() * (x - z).norm();
    let rhs = c * scale;
    let ratio = if scale > 0.0 {
        lhs / scale
    } else if lhs <= 1e-15 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(PipiCheck { holds: lhs <= rhs + RELATIVE_SLACK * (1.0 + rhs), lhs, rhs, ratio })
}

/// Largest ratio over random quadruples in `M_R`, half of them clustered
/// around a base point.
pub fn calibrate_pipi_constant(surface: &Hypersurface, radius: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = surface.sample_points(radius, samples.max(4), &mut rng)?;
    let mut best = 0.0f64;
    for i in 0..samples {
        let quad: Vec<Vector> = if i % 2 == 0 {
            (0..4).map(|_| points[rng.random_range(0..points.len())].clone()).collect()
        } else {
            let base = &points[i % points.len()];
            let scale = NEAR_SCALES[(i / 2) % NEAR_SCALES.len()] * radius;
            let mut q = Vec::with_capacity(4);
            for _ in 0..4 {
                match surface.perturb_on_surface(base, scale, &mut rng) {
                    Ok(p) if p.norm() <= radius * (1.0 + 1e-9) && surface.is_on_surface(&p) => q.push(p),
                    _ => q.push(base.clone()),
                }
            }
            q
        };
        let check = pipi_pipi_bound_check(surface, &quad[0], &quad[1], &quad[2], &quad[3], 0.0)?;
        if check.ratio.is_finite() {
            best = best.max(check.ratio);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    #[test]
    fn unit_sphere_constant_is_at_least_one() {
        let sphere = Hypersurface::ball(3, 1.0);
        let est = estimate_global_k(&sphere, 1.0, 1.0, 300, 7).unwrap();
        assert!((est.shape_norm - 1.0).abs() < 1e-12);
        assert!(est.k >= 1.0);
        // Normals of the unit sphere are -x, so the quotient is exactly 1.
        assert!((est.normal_lipschitz - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plane_admits_zero_constant() {
        let plane = Hypersurface::plane(3);
        let est = estimate_global_k(&plane, 2.0, 1.0, 100, 1).unwrap();
        assert_eq!(est.k, 0.0);
        assert!(check_global_k(&plane, 2.0, 1.0, 0.0, 100, 2).unwrap().holds());
    }

    #[test]
    fn quarter_parabola_vertex_norm() {
        let p = Hypersurface::parabola(0.25);
        let s = p.shape_operator(&from_slice(&[0.0, 0.0])).unwrap();
        assert!((op_norm(&s.matrix) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn calibrated_constant_passes_fresh_sample() {
        let e = Hypersurface::ellipsoid(&[2.0, 1.0, 1.0]);
        let est = estimate_global_k(&e, 2.0, 1.0, 400, 11).unwrap();
        let check = check_global_k(&e, 2.0, 1.0, 2.0 * est.k, 400, 12).unwrap();
        assert!(check.holds(), "{check:?}");
    }

    #[test]
    fn pipi_degenerate_configurations() {
        let sphere = Hypersurface::ball(3, 1.0);
        let a = from_slice(&[1.0, 0.0, 0.0]);
        let b = from_slice(&[0.0, 0.6, 0.8]);
        let same = pipi_pipi_bound_check(&sphere, &a, &a, &a, &a, 1.0).unwrap();
        assert!(same.holds && same.lhs == 0.0 && same.ratio == 0.0);
        let xy = pipi_pipi_bound_check(&sphere, &b, &a, &a, &b, 1.0).unwrap();
        assert_eq!(xy.lhs, 0.0);
    }
}
