//! Implicit hypersurfaces: unit normals, tangent projections, shape
//! operators and their exponentials.
//!
//! A surface is the zero set of a level function `f`; the domain it bounds is
//! `{f < 0}`. Normals are `±∇f/|∇f|`, with the sign selected by
//! [`Orientation`]. The shape operator is `S(x)v = -∂_v n(x)` on the tangent
//! space, extended to all of `R^n` by `S(x)n(x) = 0`.

mod lemmas;
mod registry;
mod surfaces;

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{complement_projector, symmetrize, Matrix, Vector};

pub use lemmas::{
    calibrate_pipi_constant, check_global_k, estimate_global_k, pipi_pipi_bound_check,
    GlobalKCheck, GlobalKEstimate, PipiCheck,
};
pub use registry::SurfaceSpec;
pub use surfaces::{Ball, Ellipsoid, FnLevelSet, Parabola, Plane};

/// Default absolute tolerance on `|f(x)|` for a point to count as on the surface.
pub const DEFAULT_SURFACE_TOL: f64 = 1e-9;

/// Gradients shorter than this are treated as degenerate.
pub const MIN_GRADIENT_NORM: f64 = 1e-12;

const NEWTON_MAX_ITERS: usize = 50;

/// A `C²` level function together with its derivatives.
///
/// Implementations may override [`LevelSet::closest_point`] with a closed form;
/// otherwise the nearest point is found by damped Newton on the Lagrange system.
pub trait LevelSet: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;

    fn closest_point(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    /// Upper bound on the principal curvatures, if known in closed form.
    fn curvature_bound(&self) -> Option<f64> {
        None
    }

    /// Lebesgue measure of `{f < 0}`, if bounded and known.
    fn enclosed_volume(&self) -> Option<f64> {
        None
    }

    /// Surface measure of `{f = 0}`, if known.
    fn boundary_area(&self) -> Option<f64> {
        None
    }

    /// Diameter of the bounded domain, if known.
    fn diameter(&self) -> Option<f64> {
        None
    }

    /// Axis-aligned box `(lo, hi)` containing the bounded domain, if known.
    fn bounding_box(&self) -> Option<(Vector, Vector)> {
        None
    }
}

/// Which way the unit normal points relative to `∇f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    AlongGradient,
    AgainstGradient,
}

impl Orientation {
    /// Inward normal of the domain `{f < 0}`.
    pub const INWARD: Orientation = Orientation::AgainstGradient;

    pub fn sign(self) -> f64 {
        match self {
            Orientation::AlongGradient => 1.0,
            Orientation::AgainstGradient => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::AlongGradient => Orientation::AgainstGradient,
            Orientation::AgainstGradient => Orientation::AlongGradient,
        }
    }
}

/// An oriented implicit hypersurface. Cheap to clone and safe to share.
#[derive(Clone)]
pub struct Hypersurface {
    level_set: Arc<dyn LevelSet>,
    orientation: Orientation,
    surface_tol: f64,
    label: String,
}

impl fmt::Debug for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypersurface")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("orientation", &self.orientation)
            .field("surface_tol", &self.surface_tol)
            .finish()
    }
}

impl Hypersurface {
    pub fn new(level_set: impl LevelSet + 'static, orientation: Orientation) -> Self {
        let label = format!("{level_set:?}");
        Self {
            level_set: Arc::new(level_set),
            orientation,
            surface_tol: DEFAULT_SURFACE_TOL,
            label,
        }
    }

    /// Sphere of radius `radius` centred at the origin of `R^dim`, inward normal.
    pub fn ball(dim: usize, radius: f64) -> Self {
        Self::new(Ball::centered(dim, radius), Orientation::INWARD).with_label(format!("ball(r={radius})"))
    }

    /// Axis-aligned ellipsoid `Σ x_i²/a_i² = 1`, inward normal.
    pub fn ellipsoid(semi_axes: &[f64]) -> Self {
        let label = format!(
            "ellipsoid({})",
            semi_axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
        );
        Self::new(Ellipsoid::new(semi_axes.to_vec()), Orientation::INWARD).with_label(label)
    }

    /// Parabola `x₂ = c·x₁²` in `R²` with the upward normal (along `∇f`).
    pub fn parabola(scale: f64) -> Self {
        Self::new(Parabola::new(scale), Orientation::AlongGradient).with_label(format!("parabola({scale})"))
    }

    /// Hyperplane `x_n = 0`.
    pub fn plane(dim: usize) -> Self {
        Self::new(Plane::new(dim), Orientation::AlongGradient).with_label(format!("plane(n={dim})"))
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_surface_tol(mut self, tol: f64) -> Self {
        self.surface_tol = tol;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.level_set.dim()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn surface_tol(&self) -> f64 {
        self.surface_tol
    }

    pub fn level_set(&self) -> &dyn LevelSet {
        self.level_set.as_ref()
    }

    pub fn level(&self, x: &Vector) -> f64 {
        self.level_set.value(x)
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.level_set.gradient(x)
    }

    pub fn hessian(&self, x: &Vector) -> Matrix {
        self.level_set.hessian(x)
    }

    /// True when `x` lies in the open domain `{f < 0}`.
    pub fn contains(&self, x: &Vector) -> bool {
        self.level(x) < 0.0
    }

    pub fn is_on_surface(&self, x: &Vector) -> bool {
        self.level(x).abs() <= self.surface_tol
    }

    pub fn check_on_surface(&self, x: &Vector) -> Result<()> {
        let level = self.level(x);
        if level.abs() <= self.surface_tol {
            Ok(())
        } else {
            Err(Error::PointOffSurface { level, tol: self.surface_tol })
        }
    }

    /// The oriented unit normal at a surface point.
    pub fn normal(&self, x: &Vector) -> Result<Vector> {
        self.check_on_surface(x)?;
        self.normal_field(x)
    }

    /// Oriented normalized gradient at any point of the tubular neighborhood;
    /// no on-surface check.
    pub fn normal_field(&self, x: &Vector) -> Result<Vector> {
        let g = self.gradient(x);
        let norm = g.norm();
        if !(norm >= MIN_GRADIENT_NORM) {
            return Err(Error::DegenerateGradient { norm });
        }
        Ok(g * (self.orientation.sign() / norm))
    }

    pub fn tangent_project(&self, x: &Vector) -> Result<TangentProjector> {
        let n = self.normal(x)?;
        Ok(TangentProjector { base_point: x.clone(), matrix: complement_projector(&n), normal: n })
    }

    /// Shape operator assembled from the analytic Hessian:
    /// `S = -sign · π H π / |∇f|`, which is `-π·D(n)` symmetrized on the tangent
    /// space with `S n = 0`.
    pub fn shape_operator(&self, x: &Vector) -> Result<ShapeOperator> {
        self.check_on_surface(x)?;
        self.shape_operator_unchecked(x)
    }

    pub(crate) fn shape_operator_unchecked(&self, x: &Vector) -> Result<ShapeOperator> {
        let g = self.gradient(x);
        let norm = g.norm();
        if !(norm >= MIN_GRADIENT_NORM) {
            return Err(Error::DegenerateGradient { norm });
        }
        let n = &g / norm;
        let pi = complement_projector(&n);
        let h = self.hessian(x);
        let s = symmetrize(&(&pi * h * &pi)) * (-self.orientation.sign() / norm);
        ShapeOperator::from_matrix(x.clone(), s)
    }

    /// Euclidean nearest point on the surface.
    pub fn nearest_point(&self, x: &Vector) -> Result<Vector> {
        if let Some(y) = self.level_set.closest_point(x) {
            return Ok(y);
        }
        newton_nearest_point(self.level_set.as_ref(), x, self.surface_tol)
            .or_else(|| normal_line_bisection(self.level_set.as_ref(), x, self.surface_tol))
            .ok_or_else(|| Error::ProjectionDiverged { point: x.iter().copied().collect() })
    }

    pub fn distance_to_surface(&self, x: &Vector) -> Result<f64> {
        Ok((x - self.nearest_point(x)?).norm())
    }

    /// Bound on principal curvatures: closed form when the level set knows it,
    /// else the sampled maximum of `‖S‖` over `M_R` with `R = radius`.
    pub fn curvature_bound(&self, radius: f64) -> Result<f64> {
        if let Some(k) = self.level_set.curvature_bound() {
            return Ok(k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        let points = self.sample_points(radius, 2000, &mut rng)?;
        let mut best = 0.0f64;
        for p in &points {
            best = best.max(self.shape_operator_unchecked(p)?.spectral_radius());
        }
        Ok(best)
    }

    /// Draws up to `count` points of `M_R = M ∩ B(0, radius)` by projecting
    /// uniform samples of the cube `[-R, R]^n` onto the surface.
    pub fn sample_points<R: Rng + ?Sized>(
        &self,
        radius: f64,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Vector>> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(count);
        let max_attempts = 50 * count.max(1);
        for _ in 0..max_attempts {
            if out.len() == count {
                break;
            }
            let z = Vector::from_fn(dim, |_, _| rng.random_range(-radius..=radius));
            let Ok(y) = self.nearest_point(&z) else { continue };
            if y.norm() <= radius * (1.0 + 1e-9) && self.is_on_surface(&y) && self.normal_field(&y).is_ok() {
                out.push(y);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptySurfaceRegion { radius });
        }
        Ok(out)
    }

    /// A surface point near `x` displaced by roughly `scale` along a random direction.
    pub fn perturb_on_surface<R: Rng + ?Sized>(&self, x: &Vector, scale: f64, rng: &mut R) -> Result<Vector> {
        let dir = Vector::from_fn(self.dim(), |_, _| rng.random_range(-1.0..=1.0));
        let dir = if dir.norm() > 0.0 { dir.normalize() } else { dir };
        self.nearest_point(&(x + dir * scale))
    }
}

/// `π_x = I - n(x)n(x)ᵀ`, the orthogonal projection onto `T_x M`.
#[derive(Debug, Clone)]
pub struct TangentProjector {
    pub base_point: Vector,
    pub matrix: Matrix,
    pub normal: Vector,
}

impl TangentProjector {
    pub fn apply(&self, z: &Vector) -> Vector {
        z - &self.normal * self.normal.dot(z)
    }
}

/// The Weingarten map at a surface point, extended by `S n = 0`, with its
/// eigendecomposition cached for repeated exponentials.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    pub base_point: Vector,
    pub matrix: Matrix,
    eigenvalues: Vector,
    eigenvectors: Matrix,
}

impl ShapeOperator {
    pub fn from_matrix(base_point: Vector, matrix: Matrix) -> Result<Self> {
        let eig = SymmetricEigen::new(matrix.clone());
        if eig.eigenvalues.iter().chain(eig.eigenvectors.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite eigendecomposition of the shape operator at {:?}",
                base_point.as_slice()
            )));
        }
        Ok(Self { base_point, matrix, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues of the extended operator; the principal curvatures plus a
    /// zero for the normal direction.
    pub fn eigenvalues(&self) -> &Vector {
        &self.eigenvalues
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `e^{tS}` from the cached eigendecomposition. The normal direction has
    /// eigenvalue zero, so `e^{tS} n = n`.
    pub fn exp(&self, t: f64) -> Result<Matrix> {
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("exp_shape needs t >= 0, got {t}")));
        }
        let scaled = self.eigenvalues.map(|l| (t * l).exp());
        if scaled.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown(format!("overflow in exp(tS) at t = {t}")));
        }
        let v = &self.eigenvectors;
        Ok(v * Matrix::from_diagonal(&scaled) * v.transpose())
    }
}

fn newton_nearest_point(ls: &dyn LevelSet, x: &Vector, tol: f64) -> Option<Vector> {
    let dim = ls.dim();
    let g0 = ls.gradient(x);
    let g0n2 = g0.norm_squared();
    if !(g0n2.sqrt() >= MIN_GRADIENT_NORM) {
        return None;
    }
    let f0 = ls.value(x);
    let mut y = x - &g0 * (f0 / g0n2);
    let mut mu = f0 / g0n2;

    let residual = |y: &Vector, mu: f64| -> (Vector, f64) {
        let g = ls.gradient(y);
        let mut r = Vector::zeros(dim + 1);
        r.rows_mut(0, dim).copy_from(&(y - x + &g * mu));
        r[dim] = ls.value(y);
        let norm = r.norm();
        (r, norm)
    };

    let (mut r, mut rnorm) = residual(&y, mu);
    for _ in 0..NEWTON_MAX_ITERS {
        if r[dim].abs() <= tol && rnorm <= tol.max(1e-12) * 10.0 {
            return Some(y);
        }
        let g = ls.gradient(&y);
        let h = ls.hessian(&y);
        let mut jac = Matrix::zeros(dim + 1, dim + 1);
        jac.view_mut((0, 0), (dim, dim)).copy_from(&(Matrix::identity(dim, dim) + h * mu));
        jac.view_mut((0, dim), (dim, 1)).copy_from(&g);
        jac.view_mut((dim, 0), (1, dim)).copy_from(&g.transpose());
        let step = jac.lu().solve(&(-&r))?;
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let y_new = &y + step.rows(0, dim) * damping;
            let mu_new = mu + step[dim] * damping;
            let (r_new, norm_new) = residual(&y_new, mu_new);
            if norm_new.is_finite() && norm_new < rnorm {
                y = y_new;
                mu = mu_new;
                r = r_new;
                rnorm = norm_new;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r[dim].abs() <= tol && rnorm <= tol.sqrt()).then_some(y)
}

/// Bracket-and-bisect along the gradient line through `x`.
fn normal_line_bisection(ls: &dyn LevelSet, x: &Vector, tol: f64) -> Option<Vector> {
    let g = ls.gradient(x);
    let gn = g.norm();
    if !(gn >= MIN_GRADIENT_NORM) {
        return None;
    }
    let f0 = ls.value(x);
    if f0.abs() <= tol {
        return Some(x.clone());
    }
    let dir = &g * (-f0.signum() / gn);
    let along = |s: f64| x + &dir * s;
    let mut lo = 0.0;
    let mut hi = (f0.abs() / gn).max(1e-12);
    let mut bracketed = false;
    for _ in 0..NEWTON_MAX_ITERS {
        if ls.value(&along(hi)).signum() != f0.signum() {
            bracketed = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !bracketed {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = ls.value(&along(mid));
        if fm.abs() <= tol {
            return Some(along(mid));
        }
        if fm.signum() == f0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    None
}
