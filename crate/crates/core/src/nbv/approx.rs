//! Finite-trajectory approximation by the cover construction.
//!
//! Each grid point `a` carries a window radius `D(a)` (in cells): to the right
//! the path stays within `ε` of `γ(a)`, to the left within `ε/2` of `γ(a−)`.
//! Centres `a_0 = 0 < a_1 < … < a_m = N` are chosen greedily (farthest centre
//! whose window still overlaps the previous one), a separator `b_i` is taken
//! in each overlap, and `γ̃ = γ(a_{i−1})` on `[a_{i−1}, b_i)`, `γ(b_i)` on
//! `[b_i, a_i)`.

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;

use super::{merged_times, FiniteTrajectory, SampledNbvFunction};

struct Windows<'a> {
    gamma: &'a SampledNbvFunction,
    eps: f64,
}

impl Windows<'_> {
    fn n(&self) -> usize {
        self.gamma.cells()
    }

    /// Cells `a, a+1, …, a+len−1` all within `ε` of `u_a`.
    fn right_holds(&self, a: usize, len: usize) -> bool {
        let u = self.gamma.values();
        if a + len > self.n() + 1 {
            return false;
        }
        (a..a + len).all(|j| (&u[j] - &u[a]).norm() < self.eps)
    }

    /// Cells `a−1, …, a−len` all within `ε/2` of `u_{a−1}`.
    fn left_holds(&self, a: usize, len: usize) -> bool {
        let u = self.gamma.values();
        if a == 0 || len > a {
            return false;
        }
        (a - len..a).all(|j| (&u[j] - &u[a - 1]).norm() < 0.5 * self.eps)
    }

    /// Whether `D(a) ≥ len`. The first point has no left window, the last no right one.
    fn radius_at_least(&self, a: usize, len: usize) -> bool {
        if len == 0 {
            return true;
        }
        let right = a == self.n() || self.right_holds(a, len);
        let left = a == 0 || self.left_holds(a, len);
        right && left
    }

    fn radius(&self, a: usize) -> usize {
        let mut d = 1;
        while self.radius_at_least(a, d + 1) {
            d += 1;
        }
        d
    }
}

/// A finite trajectory within `ε` of `γ` in sup norm whose total variation
/// does not exceed that of `γ`. Both conclusions are checked before returning.
pub fn finite_approximation(
    gamma: &SampledNbvFunction,
    surface: &Hypersurface,
    eps: f64,
) -> Result<FiniteTrajectory> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if let Some((k, increment)) = gamma.max_undeclared_increment() {
        if increment >= 0.5 * eps {
            return Err(Error::OscillationNotResolved { eps, increment, time: gamma.time(k) });
        }
    }
    let u = gamma.values();
    let n = gamma.cells();
    let h = gamma.step();
    let w = Windows { gamma, eps };

    let mut times = vec![0.0];
    let mut points = vec![u[0].clone()];
    let mut push = |t: f64, k: usize| {
        if u[k] != *points.last().unwrap() {
            times.push(t);
            points.push(u[k].clone());
        }
    };

    let mut cur = 0usize;
    let mut d_cur = w.radius(0);
    while cur < n {
        let reach = cur + d_cur;
        let next = if reach > n {
            n
        } else {
            // Past the first index that leaves the ε-ball around u_{reach−1},
            // no left window can stretch back to `reach`.
            let mut upper = reach;
            while upper <= n && (&u[upper] - &u[reach - 1]).norm() < eps {
                upper += 1;
            }
            let upper = upper.min(n);
            (cur + 1..=upper)
                .rev()
                .find(|&a| w.radius_at_least(a, (a + 1).saturating_sub(reach)))
                .expect("the next grid point always overlaps")
        };
        let d_next = w.radius(next);
        let lo = cur.max(next.saturating_sub(d_next)) as f64;
        let hi = reach.min(next) as f64;
        let b = 0.5 * (lo + hi);
        let b_cell = b.floor() as usize;
        push(b * h, b_cell);
        push(gamma.time(next), next);
        cur = next;
        d_cur = d_next;
    }

    let approx = FiniteTrajectory::new(surface.clone(), gamma.horizon(), times, points)?;
    let sup = sup_distance_to_samples(gamma, &approx)?;
    if !(sup < eps) {
        return Err(Error::NumericalBreakdown(format!("approximation misses the ε-tube: sup {sup} ≥ {eps}")));
    }
    let (tv, tv_gamma) = (approx.total_variation(), gamma.total_variation());
    if tv > tv_gamma * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::NumericalBreakdown(format!("approximation increased total variation: {tv} > {tv_gamma}")));
    }
    Ok(approx)
}

/// `sup_t |γ(t) − γ̃(t)|` between a grid function and a finite trajectory.
pub fn sup_distance_to_samples(gamma: &SampledNbvFunction, approx: &FiniteTrajectory) -> Result<f64> {
    if (gamma.horizon() - approx.horizon()).abs() > 1e-12 * gamma.horizon() {
        return Err(Error::HorizonMismatch { left: gamma.horizon(), right: approx.horizon() });
    }
    let grid: Vec<f64> = (0..=gamma.cells()).map(|k| gamma.time(k)).collect();
    Ok(merged_times(&grid, approx.times())
        .into_iter()
        .map(|t| (gamma.value_at(t) - approx.value_at(t)).norm())
        .fold(0.0, f64::max))
}
