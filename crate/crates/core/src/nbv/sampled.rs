use crate::error::{Error, Result};
use crate::linalg::Vector;

use super::FiniteTrajectory;

/// Relative tolerance for deciding that a time sits on a grid point.
const GRID_SNAP: f64 = 1e-9;

/// A right-continuous function sampled on the uniform grid `t_k = k·h`,
/// `k = 0..=N`, read as piecewise constant: `u_k` on `[t_k, t_{k+1})`.
///
/// Declared jumps mark grid indices where the underlying path genuinely
/// jumps; every other increment is taken to be sampled continuous motion.
/// Values live in `R^d`; products are Euclidean inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledNbvFunction {
    horizon: f64,
    step: f64,
    values: Vec<Vector>,
    declared_jumps: Vec<usize>,
}

/// Which ends of the integration interval carry their atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoints {
    OpenClosed,
    ClosedClosed,
    OpenOpen,
    ClosedOpen,
}

impl Endpoints {
    fn left_closed(self) -> bool {
        matches!(self, Endpoints::ClosedClosed | Endpoints::ClosedOpen)
    }

    fn right_closed(self) -> bool {
        matches!(self, Endpoints::ClosedClosed | Endpoints::OpenClosed)
    }
}

impl SampledNbvFunction {
    pub fn new(horizon: f64, values: Vec<Vector>) -> Result<Self> {
        if values.len() < 2 || !(horizon > 0.0) {
            return Err(Error::InvalidInput("a sampled function needs T > 0 and at least two grid values".into()));
        }
        let dim = values[0].len();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput("grid values must share one dimension".into()));
        }
        let step = horizon / (values.len() - 1) as f64;
        Ok(Self { horizon, step, values, declared_jumps: Vec::new() })
    }

    pub fn scalar(horizon: f64, values: &[f64]) -> Result<Self> {
        Self::new(horizon, values.iter().map(|&v| Vector::from_element(1, v)).collect())
    }

    pub fn from_fn(horizon: f64, steps: usize, f: impl Fn(f64) -> Vector) -> Result<Self> {
        let h = horizon / steps as f64;
        Self::new(horizon, (0..=steps).map(|k| f(k as f64 * h)).collect())
    }

    /// Samples a finite trajectory on `steps` cells, declaring a jump wherever
    /// a breakpoint falls in `(t_{k−1}, t_k]`.
    pub fn from_trajectory(gamma: &FiniteTrajectory, steps: usize) -> Result<Self> {
        let h = gamma.horizon() / steps as f64;
        let mut out = Self::new(gamma.horizon(), (0..=steps).map(|k| gamma.value_at(k as f64 * h).clone()).collect())?;
        let jumps = (1..=steps).filter(|&k| out.values[k] != out.values[k - 1]).collect();
        out.declared_jumps = jumps;
        Ok(out)
    }

    pub fn with_declared_jumps(mut self, mut jumps: Vec<usize>) -> Result<Self> {
        jumps.sort_unstable();
        jumps.dedup();
        if jumps.iter().any(|&k| k == 0 || k >= self.values.len()) {
            return Err(Error::InvalidInput(format!("declared jumps must lie in 1..={}", self.values.len() - 1)));
        }
        self.declared_jumps = jumps;
        Ok(self)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Number of grid cells `N`.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[Vector] {
        &self.values
    }

    pub fn declared_jumps(&self) -> &[usize] {
        &self.declared_jumps
    }

    pub fn is_declared_jump(&self, k: usize) -> bool {
        self.declared_jumps.binary_search(&k).is_ok()
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.cells() {
            self.horizon
        } else {
            k as f64 * self.step
        }
    }

    /// Grid index whose cell contains `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let p = t / self.step;
        let k = if (p - p.round()).abs() <= GRID_SNAP { p.round() } else { p.floor() };
        (k.max(0.0) as usize).min(self.cells())
    }

    pub fn value_at(&self, t: f64) -> &Vector {
        &self.values[self.index_at(t)]
    }

    /// `u(t−)`, with `u(0−) = 0`.
    pub fn left_limit_at(&self, t: f64) -> Vector {
        let p = t / self.step;
        let on_grid = (p - p.round()).abs() <= GRID_SNAP;
        let k = self.index_at(t);
        if on_grid {
            if k == 0 {
                Vector::zeros(self.dim())
            } else {
                self.values[k - 1].clone()
            }
        } else {
            self.values[k].clone()
        }
    }

    /// Atom at grid point `k`: `u_k − u_{k−1}`, and `u_0` at `k = 0`.
    pub fn atom(&self, k: usize) -> Vector {
        if k == 0 {
            self.values[0].clone()
        } else {
            &self.values[k] - &self.values[k - 1]
        }
    }

    fn left_value(&self, k: usize) -> Vector {
        if k == 0 {
            Vector::zeros(self.dim())
        } else {
            self.values[k - 1].clone()
        }
    }

    /// Grid TV estimate `Σ_{k≥1} |u_k − u_{k−1}|`; never decreases under refinement.
    pub fn total_variation(&self) -> f64 {
        self.values.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
    }

    /// Largest increment at an index not declared as a jump, with its index.
    pub fn max_undeclared_increment(&self) -> Option<(usize, f64)> {
        (1..self.values.len())
            .filter(|&k| !self.is_declared_jump(k))
            .map(|k| (k, (&self.values[k] - &self.values[k - 1]).norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn index_range(&self, a: f64, b: f64, ends: Endpoints) -> Result<std::ops::RangeInclusive<usize>> {
        if !(0.0 <= a && a <= b && b <= self.horizon * (1.0 + GRID_SNAP)) {
            return Err(Error::InvalidInput(format!("interval ({a}, {b}) not inside [0, {}]", self.horizon)));
        }
        let snap = |t: f64| {
            let p = t / self.step;
            let r = p.round();
            ((p - r).abs() <= GRID_SNAP).then_some(r as i64).ok_or(p)
        };
        let first = match snap(a) {
            Ok(k) if ends.left_closed() => k,
            Ok(k) => k + 1,
            Err(p) => p.ceil() as i64,
        };
        let last = match snap(b) {
            Ok(k) if ends.right_closed() => k,
            Ok(k) => k - 1,
            Err(p) => p.floor() as i64,
        };
        let n = self.cells() as i64;
        let first = first.clamp(0, n + 1) as usize;
        let last = last.clamp(-1, n);
        if last < first as i64 {
            #[allow(clippy::reversed_empty_ranges)]
            return Ok(1..=0);
        }
        Ok(first..=last as usize)
    }
}

fn check_grids(u: &SampledNbvFunction, v: &SampledNbvFunction) -> Result<()> {
    if u.values.len() != v.values.len() {
        return Err(Error::GridMismatch(format!("{} vs {} grid points", u.values.len(), v.values.len())));
    }
    if (u.horizon - v.horizon).abs() > GRID_SNAP * u.horizon {
        return Err(Error::GridMismatch(format!("horizons {} vs {}", u.horizon, v.horizon)));
    }
    if u.dim() != v.dim() {
        return Err(Error::GridMismatch(format!("value dimensions {} vs {}", u.dim(), v.dim())));
    }
    Ok(())
}

/// `∫_I ⟨u, dv⟩` over `I` with ends from `a`, `b` per `ends`, crediting
/// `u(s)·Δ_s v` at every atom in `I`.
pub fn stieltjes_integral(
    u: &SampledNbvFunction,
    v: &SampledNbvFunction,
    a: f64,
    b: f64,
    ends: Endpoints,
) -> Result<f64> {
    check_grids(u, v)?;
    Ok(v.index_range(a, b, ends)?.map(|k| u.values[k].dot(&v.atom(k))).sum())
}

/// `∫_I ⟨u₋, dv⟩`: the integrand is the left limit `u(s−)`.
pub fn stieltjes_integral_left_limit(
    u: &SampledNbvFunction,
    v: &SampledNbvFunction,
    a: f64,
    b: f64,
    ends: Endpoints,
) -> Result<f64> {
    check_grids(u, v)?;
    Ok(v.index_range(a, b, ends)?.map(|k| u.left_value(k).dot(&v.atom(k))).sum())
}

/// `|∫_(a,b] u dv + ∫_(a,b] v₋ du − (u(b)v(b) − u(a)v(a))|`.
pub fn integration_by_parts_residual(u: &SampledNbvFunction, v: &SampledNbvFunction, a: f64, b: f64) -> Result<f64> {
    let lhs = stieltjes_integral(u, v, a, b, Endpoints::OpenClosed)?
        + stieltjes_integral_left_limit(v, u, a, b, Endpoints::OpenClosed)?;
    let rhs = u.value_at(b).dot(v.value_at(b)) - u.value_at(a).dot(v.value_at(a));
    Ok((lhs - rhs).abs())
}

/// Largest atom-wise disagreement between `d(uv)`, `u dv + v₋ du` and
/// `u dv + v du − Δu Δv` over the whole grid.
pub fn product_rule_residual(u: &SampledNbvFunction, v: &SampledNbvFunction) -> Result<f64> {
    check_grids(u, v)?;
    let mut worst = 0.0f64;
    for k in 0..u.values.len() {
        let (du, dv) = (u.atom(k), v.atom(k));
        let d_uv = u.values[k].dot(&v.values[k]) - u.left_value(k).dot(&v.left_value(k));
        let left_form = u.values[k].dot(&dv) + v.left_value(k).dot(&du);
        let sym_form = u.values[k].dot(&dv) + v.values[k].dot(&du) - du.dot(&dv);
        worst = worst.max((d_uv - left_form).abs()).max((d_uv - sym_form).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_at(k: usize, n: usize) -> SampledNbvFunction {
        SampledNbvFunction::scalar(1.0, &(0..=n).map(|i| if i >= k { 1.0 } else { 0.0 }).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn integral_of_one_is_increment() {
        let v = SampledNbvFunction::scalar(1.0, &[0.3, 0.5, -1.0, 2.0, 2.5]).unwrap();
        let one = SampledNbvFunction::scalar(1.0, &[1.0; 5]).unwrap();
        let got = stieltjes_integral(&one, &v, 0.25, 0.75, Endpoints::OpenClosed).unwrap();
        assert!((got - (2.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn constant_integrator_has_no_interior_atoms() {
        let u = SampledNbvFunction::scalar(1.0, &[0.3, 0.5, -1.0, 2.0]).unwrap();
        let v = SampledNbvFunction::scalar(1.0, &[4.0; 4]).unwrap();
        assert_eq!(stieltjes_integral(&u, &v, 0.0, 1.0, Endpoints::OpenClosed).unwrap(), 0.0);
        // The closed left end picks up Δ_0 v = v(0) = 4 with u(0) = 0.3.
        let closed = stieltjes_integral(&u, &v, 0.0, 1.0, Endpoints::ClosedClosed).unwrap();
        assert!((closed - 1.2).abs() < 1e-15);
    }

    #[test]
    fn unit_step_against_itself() {
        let u = step_at(5, 10);
        assert_eq!(stieltjes_integral(&u, &u, 0.2, 0.8, Endpoints::OpenClosed).unwrap(), 1.0);
        assert_eq!(stieltjes_integral_left_limit(&u, &u, 0.2, 0.8, Endpoints::OpenClosed).unwrap(), 0.0);
        assert_eq!(integration_by_parts_residual(&u, &u, 0.2, 0.8).unwrap(), 0.0);
        assert_eq!(product_rule_residual(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn endpoint_conventions_on_an_atom() {
        let u = SampledNbvFunction::scalar(1.0, &[1.0; 11]).unwrap();
        let v = step_at(5, 10);
        let at = |a: f64, b: f64, e| stieltjes_integral(&u, &v, a, b, e).unwrap();
        assert_eq!(at(0.5, 0.8, Endpoints::OpenClosed), 0.0);
        assert_eq!(at(0.5, 0.8, Endpoints::ClosedClosed), 1.0);
        assert_eq!(at(0.2, 0.5, Endpoints::OpenClosed), 1.0);
        assert_eq!(at(0.2, 0.5, Endpoints::OpenOpen), 0.0);
        assert_eq!(at(0.5, 0.5, Endpoints::ClosedOpen), 0.0);
        assert_eq!(at(0.5, 0.5, Endpoints::ClosedClosed), 1.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let u = SampledNbvFunction::scalar(1.0, &[0.0, 1.0, 2.0]).unwrap();
        let v = SampledNbvFunction::scalar(1.0, &[0.0, 1.0]).unwrap();
        assert!(matches!(stieltjes_integral(&u, &v, 0.0, 1.0, Endpoints::OpenClosed), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn left_limits() {
        let u = SampledNbvFunction::scalar(1.0, &[2.0, 3.0, 5.0]).unwrap();
        assert_eq!(u.left_limit_at(0.0)[0], 0.0);
        assert_eq!(u.left_limit_at(0.5)[0], 2.0);
        assert_eq!(u.left_limit_at(0.7)[0], 3.0);
        assert_eq!(u.value_at(0.5)[0], 3.0);
    }
}
