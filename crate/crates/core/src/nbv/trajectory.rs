use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::Vector;

use super::TimeChange;

/// Breakpoints closer than this (relative to the horizon) are treated as equal.
pub(crate) const TIME_EPS: f64 = 1e-12;

/// A right-continuous, piecewise-constant path on a surface: `x_i` on
/// `[t_i, t_{i+1})`, `x_m` on `[t_m, T]`.
#[derive(Debug, Clone)]
pub struct FiniteTrajectory {
    surface: Hypersurface,
    horizon: f64,
    times: Vec<f64>,
    points: Vec<Vector>,
}

impl FiniteTrajectory {
    pub fn new(surface: Hypersurface, horizon: f64, times: Vec<f64>, points: Vec<Vector>) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        if times.is_empty() || times.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "need one point per breakpoint and at least one breakpoint ({} times, {} points)",
                times.len(),
                points.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidInput(format!("first breakpoint must be 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if *times.last().unwrap() > horizon {
            return Err(Error::InvalidInput(format!("breakpoint {} beyond horizon {horizon}", times.last().unwrap())));
        }
        for p in &points {
            if p.len() != surface.dim() {
                return Err(Error::InvalidInput(format!("point of dimension {} on a surface in R^{}", p.len(), surface.dim())));
            }
            surface.check_on_surface(p)?;
        }
        Ok(Self { surface, horizon, times, points })
    }

    pub fn constant(surface: Hypersurface, horizon: f64, x0: Vector) -> Result<Self> {
        Self::new(surface, horizon, vec![0.0], vec![x0])
    }

    pub fn surface(&self) -> &Hypersurface {
        &self.surface
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    /// Number of breakpoints after `t₀`.
    pub fn jumps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn start(&self) -> &Vector {
        &self.points[0]
    }

    /// Largest `i` with `t_i ≤ t`; times outside `[0, T]` are clamped.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn value_at(&self, t: f64) -> &Vector {
        &self.points[self.index_at(t)]
    }

    /// `Σ_{i≥1} |x_i − x_{i−1}|`; the initial placement is not a jump.
    pub fn total_variation(&self) -> f64 {
        self.points.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
    }

    /// `sup_t |γ(t)|`.
    pub fn sup_norm(&self) -> f64 {
        self.points.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// `sup_{t∈[0,T]} |γ(t) − other(t)|`, exact over the merged breakpoints.
    pub fn sup_distance(&self, other: &FiniteTrajectory) -> Result<f64> {
        self.check_horizon(other)?;
        Ok(merged_times(&self.times, &other.times)
            .into_iter()
            .map(|t| (self.value_at(t) - other.value_at(t)).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_horizon(&self, other: &FiniteTrajectory) -> Result<()> {
        if (self.horizon - other.horizon).abs() > TIME_EPS * self.horizon.max(1.0) {
            return Err(Error::HorizonMismatch { left: self.horizon, right: other.horizon });
        }
        Ok(())
    }

    /// Same path with an extra breakpoint at `t` that does not change any value.
    pub fn with_breakpoint(&self, t: f64) -> Result<Self> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::InvalidInput(format!("time {t} outside [0, {}]", self.horizon)));
        }
        let i = self.index_at(t);
        if self.times[i] == t {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.times.insert(i + 1, t);
        out.points.insert(i + 1, self.points[i].clone());
        Ok(out)
    }

    /// Drops breakpoints whose value repeats the previous one.
    pub fn merged(&self) -> Self {
        let mut out = Self { times: vec![0.0], points: vec![self.points[0].clone()], ..self.clone() };
        for (t, p) in self.times.iter().zip(&self.points).skip(1) {
            if p != out.points.last().unwrap() {
                out.times.push(*t);
                out.points.push(p.clone());
            }
        }
        out
    }

    /// The path `γ̃` with `γ̃(λ(t)) = γ(t)`: every breakpoint moves to `λ(t_i)`.
    pub fn reparametrized(&self, lambda: &TimeChange) -> Result<Self> {
        self.check_lambda(lambda)?;
        let times = self.times.iter().map(|&t| lambda.eval(t)).collect();
        Self::new(self.surface.clone(), self.horizon, times, self.points.clone())
    }

    /// The path `γ∘λ`: breakpoints move to `λ⁻¹(t_i)`.
    pub fn composed(&self, lambda: &TimeChange) -> Result<Self> {
        self.check_lambda(lambda)?;
        let times = self.times.iter().map(|&t| lambda.inverse(t)).collect();
        Self::new(self.surface.clone(), self.horizon, times, self.points.clone())
    }

    fn check_lambda(&self, lambda: &TimeChange) -> Result<()> {
        if (lambda.horizon() - self.horizon).abs() > TIME_EPS * self.horizon.max(1.0) {
            return Err(Error::HorizonMismatch { left: self.horizon, right: lambda.horizon() });
        }
        Ok(())
    }

    /// CSV with header `t,x_1,…,x_n`, one row per breakpoint.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.surface.dim()).map(|i| format!("x_{i}")));
        w.write_record(&header)?;
        for (t, p) in self.times.iter().zip(&self.points) {
            let mut row = vec![format_f64(*t)];
            row.extend(p.iter().map(|v| format_f64(*v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(surface: Hypersurface, horizon: f64, reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let mut times = Vec::new();
        let mut points = Vec::new();
        for record in r.records() {
            let record = record?;
            let nums = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number `{f}`"))))
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != surface.dim() + 1 {
                return Err(Error::InvalidInput(format!("expected {} columns, got {}", surface.dim() + 1, nums.len())));
            }
            times.push(nums[0]);
            points.push(Vector::from_column_slice(&nums[1..]));
        }
        Self::new(surface, horizon, times, points)
    }
}

/// Shortest decimal that round-trips, so CSV output is exact and stable.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Sorted union of two breakpoint lists with near-duplicates removed.
pub(crate) fn merged_times(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    fn circle_point(theta: f64) -> Vector {
        from_slice(&[theta.cos(), theta.sin()])
    }

    fn two_piece() -> FiniteTrajectory {
        FiniteTrajectory::new(
            Hypersurface::ball(2, 1.0),
            1.0,
            vec![0.0, 0.5],
            vec![circle_point(0.0), circle_point(std::f64::consts::FRAC_PI_2)],
        )
        .unwrap()
    }

    #[test]
    fn values_are_right_continuous() {
        let g = two_piece();
        assert_eq!(g.value_at(0.4999), &circle_point(0.0));
        assert_eq!(g.value_at(0.5), &g.points()[1]);
        assert_eq!(g.value_at(1.0), &g.points()[1]);
    }

    #[test]
    fn total_variation_counts_jumps_only() {
        let g = two_piece();
        assert!((g.total_variation() - 2f64.sqrt()).abs() < 1e-15);
        let c = FiniteTrajectory::constant(Hypersurface::ball(2, 1.0), 1.0, circle_point(0.3)).unwrap();
        assert_eq!(c.total_variation(), 0.0);
    }

    #[test]
    fn rejects_bad_breakpoints() {
        let s = Hypersurface::ball(2, 1.0);
        let p = circle_point(0.0);
        assert!(FiniteTrajectory::new(s.clone(), 1.0, vec![0.1], vec![p.clone()]).is_err());
        assert!(FiniteTrajectory::new(s.clone(), 1.0, vec![0.0, 0.0], vec![p.clone(), p.clone()]).is_err());
        assert!(FiniteTrajectory::new(s.clone(), 1.0, vec![0.0, 1.5], vec![p.clone(), p.clone()]).is_err());
        assert!(matches!(
            FiniteTrajectory::new(s, 1.0, vec![0.0], vec![from_slice(&[0.5, 0.0])]),
            Err(Error::PointOffSurface { .. })
        ));
    }

    #[test]
    fn inserting_and_merging_breakpoints() {
        let g = two_piece();
        let h = g.with_breakpoint(0.25).unwrap();
        assert_eq!(h.times(), &[0.0, 0.25, 0.5]);
        assert_eq!(h.merged().times(), g.times());
    }

    #[test]
    fn csv_round_trip() {
        let g = two_piece();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x_1,x_2\n"));
        let back = FiniteTrajectory::read_csv(g.surface().clone(), 1.0, buf.as_slice()).unwrap();
        assert_eq!(back.times(), g.times());
        assert_eq!(back.points(), g.points());
    }

    #[test]
    fn reparametrization_moves_breakpoints() {
        let g = two_piece();
        let lambda = TimeChange::new(1.0, vec![(0.5, 0.6)]).unwrap();
        let r = g.reparametrized(&lambda).unwrap();
        assert!((r.times()[1] - 0.6).abs() < 1e-15);
        let c = g.composed(&lambda).unwrap();
        assert!((c.times()[1] - 0.5 * 0.5 / 0.6).abs() < 1e-15);
    }
}
