use std::f64::consts::PI;
use std::fmt;

use super::LevelSet;
use crate::linalg::{Matrix, Vector};

/// Volume of the unit ball in `R^n`.
pub(crate) fn unit_ball_volume(n: usize) -> f64 {
    // V_n = 2π/n · V_{n-2}
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// `|x - c|² - R²`.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Vector,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn centered(dim: usize, radius: f64) -> Self {
        Self::new(Vector::zeros(dim), radius)
    }
}

impl LevelSet for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter().zip(self.center.iter()).map(|(a, c)| (a - c) * (a - c)).sum::<f64>() - self.radius * self.radius
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (x - &self.center) * 2.0
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::identity(self.dim(), self.dim()) * 2.0
    }

    fn closest_point(&self, x: &Vector) -> Option<Vector> {
        // Every boundary point is nearest to the center; pick the first axis.
        let d = x - &self.center;
        let norm = d.norm();
        if norm > 0.0 {
            return Some(&self.center + d * (self.radius / norm));
        }
        let mut y = self.center.clone();
        y[0] += self.radius;
        Some(y)
    }

    fn curvature_bound(&self) -> Option<f64> {
        Some(1.0 / self.radius)
    }

    fn enclosed_volume(&self) -> Option<f64> {
        Some(unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32))
    }

    fn boundary_area(&self) -> Option<f64> {
        let n = self.dim();
        Some(n as f64 * unit_ball_volume(n) * self.radius.powi(n as i32 - 1))
    }

    fn diameter(&self) -> Option<f64> {
        Some(2.0 * self.radius)
    }

    fn bounding_box(&self) -> Option<(Vector, Vector)> {
        Some((self.center.add_scalar(-self.radius), self.center.add_scalar(self.radius)))
    }
}

/// `Σ x_i²/a_i² - 1`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    pub semi_axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(semi_axes: Vec<f64>) -> Self {
        Self { semi_axes }
    }
}

impl LevelSet for Ellipsoid {
    fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter().zip(&self.semi_axes).map(|(xi, a)| xi * xi / (a * a)).sum::<f64>() - 1.0
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.dim(), |i, _| 2.0 * x[i] / (self.semi_axes[i] * self.semi_axes[i]))
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::from_diagonal(&Vector::from_iterator(
            self.dim(),
            self.semi_axes.iter().map(|a| 2.0 / (a * a)),
        ))
    }

    fn curvature_bound(&self) -> Option<f64> {
        let max = self.semi_axes.iter().copied().fold(f64::MIN, f64::max);
        let min = self.semi_axes.iter().copied().fold(f64::MAX, f64::min);
        Some(max / (min * min))
    }

    fn enclosed_volume(&self) -> Option<f64> {
        Some(unit_ball_volume(self.dim()) * self.semi_axes.iter().product::<f64>())
    }

    fn boundary_area(&self) -> Option<f64> {
        let first = self.semi_axes[0];
        self.semi_axes
            .iter()
            .all(|a| (a - first).abs() <= 1e-15 * first)
            .then(|| self.dim() as f64 * unit_ball_volume(self.dim()) * first.powi(self.dim() as i32 - 1))
    }

    fn diameter(&self) -> Option<f64> {
        Some(2.0 * self.semi_axes.iter().copied().fold(f64::MIN, f64::max))
    }

    fn bounding_box(&self) -> Option<(Vector, Vector)> {
        let hi = Vector::from_column_slice(&self.semi_axes);
        Some((-&hi, hi))
    }
}

/// `x₂ - c·x₁²` in `R²`.
#[derive(Debug, Clone)]
pub struct Parabola {
    pub scale: f64,
}

impl Parabola {
    pub fn new(scale: f64) -> Self {
        Self { scale }
    }
}

impl LevelSet for Parabola {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> f64 {
        x[1] - self.scale * x[0] * x[0]
    }

    fn gradient(&self, x: &Vector) -> Vector {
        Vector::from_column_slice(&[-2.0 * self.scale * x[0], 1.0])
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::from_row_slice(2, 2, &[-2.0 * self.scale, 0.0, 0.0, 0.0])
    }

    fn curvature_bound(&self) -> Option<f64> {
        Some(2.0 * self.scale.abs())
    }
}

/// `x_n` in `R^n`.
#[derive(Debug, Clone)]
pub struct Plane {
    pub dim: usize,
}

impl Plane {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl LevelSet for Plane {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        x[self.dim - 1]
    }

    fn gradient(&self, _x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        g[self.dim - 1] = 1.0;
        g
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::zeros(self.dim, self.dim)
    }

    fn closest_point(&self, x: &Vector) -> Option<Vector> {
        let mut y = x.clone();
        y[self.dim - 1] = 0.0;
        Some(y)
    }

    fn curvature_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

type ScalarFn = Box<dyn Fn(&Vector) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;
type MatrixFn = Box<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// A level set given by user closures for the value, gradient and Hessian.
pub struct FnLevelSet {
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
    hessian: MatrixFn,
}

impl FnLevelSet {
    pub fn new(
        dim: usize,
        value: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
        hessian: impl Fn(&Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        Self { dim, value: Box::new(value), gradient: Box::new(gradient), hessian: Box::new(hessian) }
    }
}

impl fmt::Debug for FnLevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnLevelSet(dim={})", self.dim)
    }
}

impl LevelSet for FnLevelSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (self.gradient)(x)
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        (self.hessian)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        let disk = Ball::centered(2, 1.0);
        assert!((disk.boundary_area().unwrap() - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn ball_center_has_a_nearest_point() {
        let ball = Ball::centered(3, 2.0);
        let y = ball.closest_point(&Vector::zeros(3)).unwrap();
        assert!((y.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ellipsoid_curvature_bound_is_tip_curvature() {
        // Tip of the long axis: κ = a / b² with a = 2, b = 1.
        assert_eq!(Ellipsoid::new(vec![2.0, 1.0, 1.0]).curvature_bound(), Some(2.0));
    }
}
