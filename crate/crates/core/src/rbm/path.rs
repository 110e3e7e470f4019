use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::Vector;
use crate::nbv::format_f64;

use super::rng::{replica_rng, StepNoise, StreamPurpose};

/// When to stop a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Until {
    /// Run to time `T`.
    Time(f64),
    /// Run until local time reaches `r`, giving up at `max_time`.
    LocalTime { r: f64, max_time: f64 },
}

/// Largest admissible step: `(0.1/κ)²` for curvature bound `κ`.
pub fn default_max_step(surface: &Hypersurface, radius: f64) -> Result<f64> {
    let kappa = surface.curvature_bound(radius)?;
    Ok(if kappa > 0.0 { (0.1 / kappa).powi(2) } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub step: f64,
    /// Steps above this are refused; `None` uses [`default_max_step`].
    pub max_step: Option<f64>,
    pub seed: u64,
    pub replica: u64,
}

/// A simulated reflected path on the grid `t_k = k·h`.
#[derive(Debug, Clone)]
pub struct RbmPath {
    dim: usize,
    step: f64,
    seed: u64,
    replica: u64,
    /// Row-major states, `dim` per step.
    states: Vec<f64>,
    local_time: Vec<f64>,
    projected: Vec<bool>,
}

impl RbmPath {
    /// A path from explicit states; steps flagged `projected` carry the
    /// local-time increments. Used for fixtures and replays.
    pub fn from_states(step: f64, states: Vec<Vector>, local_time: Vec<f64>, projected: Vec<bool>) -> Result<Self> {
        let dim = states.first().map(|s| s.len()).unwrap_or(0);
        if states.is_empty() || local_time.len() != states.len() || projected.len() != states.len() {
            return Err(Error::InvalidInput("states, local times and flags must have equal nonzero length".into()));
        }
        if local_time.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("local time must be nondecreasing".into()));
        }
        Ok(Self {
            dim,
            step,
            seed: 0,
            replica: 0,
            states: states.iter().flat_map(|s| s.iter().copied()).collect(),
            local_time,
            projected,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// Number of recorded states (steps + 1).
    pub fn len(&self) -> usize {
        self.local_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.local_time.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn state(&self, k: usize) -> Vector {
        Vector::from_column_slice(&self.states[k * self.dim..(k + 1) * self.dim])
    }

    pub fn local_time(&self, k: usize) -> f64 {
        self.local_time[k]
    }

    pub fn local_times(&self) -> &[f64] {
        &self.local_time
    }

    pub fn final_local_time(&self) -> f64 {
        *self.local_time.last().unwrap()
    }

    /// Whether step `k` ended with a push back onto the boundary.
    pub fn projected(&self, k: usize) -> bool {
        self.projected[k]
    }

    /// CSV with header `step,t,x_1,…,x_n,L,contact_flag`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["step".to_string(), "t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x_{i}")));
        header.push("L".into());
        header.push("contact_flag".into());
        w.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![k.to_string(), format_f64(self.time(k))];
            row.extend(self.states[k * self.dim..(k + 1) * self.dim].iter().map(|v| format_f64(*v)));
            row.push(format_f64(self.local_time[k]));
            row.push(u8::from(self.projected[k]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(super) fn check_step(surface: &Hypersurface, opts: &SimulationOptions, radius: f64) -> Result<()> {
    if !(opts.step > 0.0) || !opts.step.is_finite() {
        return Err(Error::InvalidInput(format!("step must be positive, got {}", opts.step)));
    }
    let max = match opts.max_step {
        Some(m) => m,
        None => default_max_step(surface, radius)?,
    };
    if opts.step > max {
        return Err(Error::StepTooLarge { step: opts.step, max });
    }
    Ok(())
}

pub(super) fn check_start(surface: &Hypersurface, x: &Vector) -> Result<()> {
    if x.len() != surface.dim() {
        return Err(Error::InvalidInput(format!("start has dimension {}, surface {}", x.len(), surface.dim())));
    }
    let level = surface.level(x);
    if level > surface.surface_tol() {
        return Err(Error::InvalidInput(format!("start point lies outside the closed domain (level {level:e})")));
    }
    Ok(())
}

/// One Euler–Skorokhod step from `x` with increment `√h ξ`; returns the
/// local-time increment (0 unless the proposal left the open domain).
#[inline]
pub(super) fn reflect_step(surface: &Hypersurface, x: &mut Vector, xi: &[f64], sqrt_h: f64) -> Result<f64> {
    for (xi_i, x_i) in xi.iter().zip(x.iter_mut()) {
        *x_i += sqrt_h * xi_i;
    }
    if surface.level(x) < 0.0 {
        return Ok(0.0);
    }
    let y = surface.nearest_point(x)?;
    let push = (&*x - &y).norm();
    *x = y;
    Ok(push)
}

pub(super) fn radius_hint(x: &Vector) -> f64 {
    x.norm().max(1.0) * 2.0
}

/// Simulates `X_t = x₀ + B_t + ∫ n(X_s) dL_s` by projected Euler steps.
pub fn simulate_path(surface: &Hypersurface, x_start: &Vector, until: Until, opts: SimulationOptions) -> Result<RbmPath> {
    check_start(surface, x_start)?;
    check_step(surface, &opts, radius_hint(x_start))?;
    let h = opts.step;
    let dim = surface.dim();
    let max_steps = match until {
        Until::Time(t) => (t / h).round() as usize,
        Until::LocalTime { max_time, .. } => (max_time / h).round() as usize,
    };
    let target = match until {
        Until::LocalTime { r, .. } => Some(r),
        Until::Time(_) => None,
    };

    let mut noise = StepNoise::new(opts.seed, opts.replica, dim);
    let mut x = x_start.clone();
    let mut xi = vec![0.0; dim];
    let mut states = Vec::with_capacity((max_steps.min(1 << 22) + 1) * dim);
    let mut local_time = Vec::with_capacity(max_steps.min(1 << 22) + 1);
    let mut projected = Vec::with_capacity(max_steps.min(1 << 22) + 1);
    states.extend(x.iter());
    local_time.push(0.0);
    projected.push(false);
    let mut l = 0.0;
    let sqrt_h = h.sqrt();
    for _ in 0..max_steps {
        if target.is_some_and(|r| l >= r) {
            break;
        }
        noise.fill_next(&mut xi);
        let push = reflect_step(surface, &mut x, &xi, sqrt_h)
            .map_err(|e| Error::Replica { replica: opts.replica, source: Box::new(e) })?;
        l += push;
        states.extend(x.iter());
        local_time.push(l);
        projected.push(push > 0.0);
    }
    Ok(RbmPath { dim, step: h, seed: opts.seed, replica: opts.replica, states, local_time, projected })
}

/// Local time at `T` without storing the path.
pub fn simulate_local_time(surface: &Hypersurface, x_start: &Vector, horizon: f64, opts: SimulationOptions) -> Result<f64> {
    check_start(surface, x_start)?;
    check_step(surface, &opts, radius_hint(x_start))?;
    let steps = (horizon / opts.step).round() as usize;
    let mut noise = StepNoise::new(opts.seed, opts.replica, surface.dim());
    let mut x = x_start.clone();
    let mut xi = vec![0.0; surface.dim()];
    let sqrt_h = opts.step.sqrt();
    let mut l = 0.0;
    for _ in 0..steps {
        noise.fill_next(&mut xi);
        l += reflect_step(surface, &mut x, &xi, sqrt_h)
            .map_err(|e| Error::Replica { replica: opts.replica, source: Box::new(e) })?;
    }
    Ok(l)
}

/// A uniform point of the bounded domain, by rejection from its bounding box.
pub fn uniform_start(surface: &Hypersurface, seed: u64, replica: u64) -> Result<Vector> {
    let (lo, hi) = surface
        .level_set()
        .bounding_box()
        .ok_or_else(|| Error::InvalidInput(format!("{} has no bounding box for uniform starts", surface.label())))?;
    let mut rng = replica_rng(seed, replica, StreamPurpose::Start);
    for _ in 0..10_000 {
        let x = Vector::from_fn(surface.dim(), |i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
        if surface.contains(&x) {
            return Ok(x);
        }
    }
    Err(Error::NumericalBreakdown("rejection sampling of a uniform start failed".into()))
}

/// `σ_t = inf{s : L_s ≥ t}`, linearly interpolated inside the crossing
/// step. `σ_0` is the start of the step whose proposal first left `D`.
pub fn inverse_local_time(path: &RbmPath, t: f64) -> Result<f64> {
    let ladder = path.local_times();
    let k = ladder.partition_point(|&l| l < t || l <= 0.0);
    if k >= ladder.len() {
        return Err(Error::LocalTimeNotReached { requested: t, reached: path.final_local_time() });
    }
    if k == 0 {
        return Ok(0.0);
    }
    let (l0, l1) = (ladder[k - 1], ladder[k]);
    let frac = ((t - l0) / (l1 - l0)).clamp(0.0, 1.0);
    Ok(path.time(k - 1) + frac * path.step())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    fn opts(seed: u64) -> SimulationOptions {
        SimulationOptions { step: 1e-3, max_step: None, seed, replica: 0 }
    }

    #[test]
    fn zero_horizon_is_the_start() {
        let disk = Hypersurface::ball(2, 1.0);
        let x0 = from_slice(&[0.1, 0.2]);
        let p = simulate_path(&disk, &x0, Until::Time(0.0), opts(1)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.state(0), x0);
        assert_eq!(p.final_local_time(), 0.0);
    }

    #[test]
    fn path_stays_in_closed_disk_and_pushes_only_on_contact() {
        let disk = Hypersurface::ball(2, 1.0);
        let p = simulate_path(&disk, &from_slice(&[0.9, 0.0]), Until::Time(1.0), opts(5)).unwrap();
        for k in 1..p.len() {
            assert!(disk.level(&p.state(k)) <= disk.surface_tol());
            let dl = p.local_time(k) - p.local_time(k - 1);
            assert_eq!(dl > 0.0, p.projected(k));
        }
    }

    #[test]
    fn oversized_steps_are_refused() {
        let disk = Hypersurface::ball(2, 1.0);
        let o = SimulationOptions { step: 0.5, ..opts(1) };
        assert!(matches!(simulate_path(&disk, &from_slice(&[0.0, 0.0]), Until::Time(1.0), o), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn local_time_target_stops_the_run() {
        let disk = Hypersurface::ball(2, 1.0);
        let until = Until::LocalTime { r: 0.2, max_time: 50.0 };
        let p = simulate_path(&disk, &from_slice(&[0.0, 0.0]), until, opts(3)).unwrap();
        assert!(p.final_local_time() >= 0.2);
        assert!(p.local_time(p.len() - 2) < 0.2);
        let sigma = inverse_local_time(&p, 0.2).unwrap();
        assert!(sigma <= p.final_time() && sigma > p.final_time() - p.step() - 1e-12);
        assert!(matches!(inverse_local_time(&p, 5.0), Err(Error::LocalTimeNotReached { .. })));
    }

    #[test]
    fn streamed_local_time_matches_stored_path() {
        let disk = Hypersurface::ball(2, 1.0);
        let x0 = from_slice(&[0.3, -0.2]);
        let p = simulate_path(&disk, &x0, Until::Time(0.5), opts(8)).unwrap();
        assert_eq!(simulate_local_time(&disk, &x0, 0.5, opts(8)).unwrap(), p.final_local_time());
    }

    #[test]
    fn uniform_start_is_inside() {
        let disk = Hypersurface::ball(2, 1.0);
        for r in 0..50 {
            assert!(disk.contains(&uniform_start(&disk, 4, r).unwrap()));
        }
    }
}
