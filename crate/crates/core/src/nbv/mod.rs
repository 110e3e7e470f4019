//! Right-continuous bounded-variation paths: piecewise-constant surface
//! trajectories, grid-sampled functions with Stieltjes sums, the cover
//! construction of finite approximations, and Skorokhod alignment.

mod approx;
mod sampled;
mod skorokhod;
mod trajectory;

pub use approx::{finite_approximation, sup_distance_to_samples};
pub use sampled::{
    integration_by_parts_residual, product_rule_residual, stieltjes_integral, stieltjes_integral_left_limit,
    Endpoints, SampledNbvFunction,
};
pub use skorokhod::{skorokhod_align, skorokhod_distance, Alignment, EXHAUSTIVE_MAX_JUMPS, BEAM_WIDTH};
pub use trajectory::FiniteTrajectory;

pub(crate) use trajectory::{format_f64, merged_times, TIME_EPS};

use crate::error::{Error, Result};

/// Increasing piecewise-linear bijection of `[0, T]` through the knots
/// `(0, 0), (s_1, λ(s_1)), …, (T, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    horizon: f64,
    domain: Vec<f64>,
    image: Vec<f64>,
}

impl TimeChange {
    pub fn identity(horizon: f64) -> Self {
        Self { horizon, domain: vec![0.0, horizon], image: vec![0.0, horizon] }
    }

    /// Builds `λ` from interior knots `(s, λ(s))`; the endpoints are added.
    pub fn new(horizon: f64, interior: Vec<(f64, f64)>) -> Result<Self> {
        let mut domain = vec![0.0];
        let mut image = vec![0.0];
        for (s, l) in interior {
            domain.push(s);
            image.push(l);
        }
        domain.push(horizon);
        image.push(horizon);
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !(horizon > 0.0) || !increasing(&domain) || !increasing(&image) {
            return Err(Error::InvalidInput("time change knots must be strictly increasing inside (0, T)".into()));
        }
        Ok(Self { horizon, domain, image })
    }

    /// `λ(t) = t + δ·φ(t)` with `φ` the hat function peaking at `t_peak`; the
    /// simplest way to move one breakpoint by `δ`.
    pub fn bump(horizon: f64, t_peak: f64, delta: f64) -> Result<Self> {
        Self::new(horizon, vec![(t_peak, t_peak + delta)])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.domain.iter().copied().zip(self.image.iter().copied())
    }

    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.domain, &self.image, t)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        interpolate(&self.image, &self.domain, s)
    }

    /// `‖λ − Id‖_∞`, attained at a knot.
    pub fn sup_deviation(&self) -> f64 {
        self.knots().map(|(s, l)| (l - s).abs()).fold(0.0, f64::max)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if t <= xs[0] {
        return ys[0];
    }
    if t >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let k = xs.partition_point(|&x| x <= t) - 1;
    if xs[k] == t {
        return ys[k];
    }
    let w = (t - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_deviation() {
        let id = TimeChange::identity(2.0);
        assert_eq!(id.sup_deviation(), 0.0);
        assert_eq!(id.eval(0.7), 0.7);
    }

    #[test]
    fn bump_moves_one_point() {
        let l = TimeChange::bump(1.0, 0.5, 0.1).unwrap();
        assert!((l.eval(0.5) - 0.6).abs() < 1e-15);
        assert!((l.inverse(0.6) - 0.5).abs() < 1e-15);
        assert!((l.sup_deviation() - 0.1).abs() < 1e-15);
        assert_eq!(l.eval(1.0), 1.0);
        for t in [0.1, 0.3, 0.55, 0.9] {
            assert!((l.inverse(l.eval(t)) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_monotone_knots() {
        assert!(TimeChange::new(1.0, vec![(0.5, 0.4), (0.6, 0.3)]).is_err());
        assert!(TimeChange::new(1.0, vec![(0.5, 1.2)]).is_err());
    }
}
