use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::{op_norm, singular_values_desc, Matrix, Vector};
use crate::rbm::{default_boundary_tol, simulate_skeleton, ExcursionSkeleton, SimulationOptions, Until};

use super::{assemble_a, default_rho1, projection_log_drop, rank_diagnostics, RankDiagnostics};

/// How the paths behind the rungs of a ladder are related.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// One path; each rung filters the same skeleton.
    #[default]
    Nested,
    /// A fresh path per rung.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderOptions {
    /// Local-time horizon.
    pub r: f64,
    pub j_min: u32,
    pub j_max: u32,
    pub step: f64,
    /// `None` uses [`default_boundary_tol`].
    pub boundary_tol: Option<f64>,
    /// Give up if local time `r` is not reached by this time.
    pub max_time: f64,
    pub max_step: Option<f64>,
    /// `None` uses [`default_rho1`].
    pub rho1: Option<f64>,
    pub coupling: Coupling,
}

impl LadderOptions {
    pub fn new(r: f64, j_min: u32, j_max: u32, step: f64) -> Self {
        Self {
            r,
            j_min,
            j_max,
            step,
            boundary_tol: None,
            max_time: 100.0 * r.max(1.0),
            max_step: None,
            rho1: None,
            coupling: Coupling::Nested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rung {
    pub j: u32,
    pub eps: f64,
    /// Excursions passing the filter.
    pub m_j: usize,
    /// `‖A_{ε_{j+1}} − A_{ε_j}‖` to the next rung; `None` on the last.
    pub gap: Option<f64>,
    pub singular_values: Vec<f64>,
    /// Small-gap endpoint sum `Σ|x_k − x_{k+1}|²`.
    pub quadratic_sum: f64,
    pub large_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonLadderReport {
    pub seed: u64,
    pub replica: u64,
    pub coupling: Coupling,
    pub r: f64,
    pub rungs: Vec<Rung>,
    /// Least-squares slope of `ln gap` against `j`, first gap dropped and
    /// zero gaps skipped; `None` with fewer than two usable gaps.
    pub slope: Option<f64>,
    /// Set when the slope is missing or not negative.
    pub slope_not_negative: bool,
    #[serde(skip)]
    pub matrices: Vec<Matrix>,
    /// First contact of the path behind the finest rung.
    pub x0: Vec<f64>,
    pub rank: RankDiagnostics,
    /// The shared skeleton of a nested ladder.
    #[serde(skip)]
    pub skeleton: Option<ExcursionSkeleton>,
}

impl EpsilonLadderReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.rungs.iter().filter_map(|r| r.gap).collect()
    }

    /// `A` at the finest rung.
    pub fn limit(&self) -> &Matrix {
        self.matrices.last().expect("nonempty ladder")
    }
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn ladder_slope(js: &[u32], gaps: &[f64]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        js.iter().zip(gaps).skip(1).filter(|(_, g)| **g > 0.0).map(|(&j, g)| (j as f64, g.ln())).unzip();
    fit_slope(&xs, &ys)
}

fn rung_skeleton(
    surface: &Hypersurface,
    x_start: &Vector,
    opts: &LadderOptions,
    seed: u64,
    replica: u64,
) -> Result<ExcursionSkeleton> {
    let sim = SimulationOptions { step: opts.step, max_step: opts.max_step, seed, replica };
    let tol = opts.boundary_tol.unwrap_or_else(|| default_boundary_tol(opts.step));
    let skeleton = simulate_skeleton(surface, x_start, Until::LocalTime { r: opts.r, max_time: opts.max_time }, sim, tol)?;
    if skeleton.final_local_time < opts.r {
        return Err(Error::Replica {
            replica,
            source: Box::new(Error::LocalTimeNotReached { requested: opts.r, reached: skeleton.final_local_time }),
        });
    }
    Ok(skeleton)
}

/// Assembles `A_{r,2^{-j}}` for `j_min ≤ j ≤ j_max` from simulated reflected
/// paths and reports the gaps between consecutive rungs.
pub fn epsilon_ladder(
    surface: &Hypersurface,
    x_start: &Vector,
    opts: &LadderOptions,
    seed: u64,
    replica: u64,
) -> Result<EpsilonLadderReport> {
    if opts.j_max < opts.j_min || opts.j_max > 52 {
        return Err(Error::InvalidInput(format!("bad j range {}..={}", opts.j_min, opts.j_max)));
    }
    let radius = x_start.norm().max(1.0) * 2.0;
    let rho1 = match opts.rho1 {
        Some(r) => r,
        None => default_rho1(surface, radius)?,
    };
    let js: Vec<u32> = (opts.j_min..=opts.j_max).collect();
    let shared = match opts.coupling {
        Coupling::Nested => Some(rung_skeleton(surface, x_start, opts, seed, replica)?),
        Coupling::Independent => None,
    };
    let mut matrices = Vec::with_capacity(js.len());
    let mut rungs = Vec::with_capacity(js.len());
    let mut x0 = Vector::zeros(surface.dim());
    for &j in &js {
        let eps = 0.5f64.powi(j as i32);
        let own;
        let skeleton = match &shared {
            Some(s) => s,
            None => {
                own = rung_skeleton(surface, x_start, opts, seed, (replica << 6) | j as u64)?;
                &own
            }
        };
        let a = assemble_a(skeleton, surface, opts.r, eps)?;
        let drop = projection_log_drop(skeleton, surface, opts.r, eps, rho1)?;
        x0 = skeleton.first_contact()?.point.clone();
        rungs.push(Rung {
            j,
            eps,
            m_j: skeleton.count_at_least(eps, opts.r),
            gap: None,
            singular_values: singular_values_desc(&a),
            quadratic_sum: drop.quadratic_sum,
            large_gaps: drop.large.len(),
        });
        matrices.push(a);
    }
    for k in 0..matrices.len().saturating_sub(1) {
        rungs[k].gap = Some(op_norm(&(&matrices[k + 1] - &matrices[k])));
    }
    let gaps: Vec<f64> = rungs.iter().filter_map(|r| r.gap).collect();
    let slope = ladder_slope(&js, &gaps);
    let rank = rank_diagnostics(matrices.last().expect("nonempty ladder"), surface, &x0)?;
    Ok(EpsilonLadderReport {
        seed,
        replica,
        coupling: opts.coupling,
        r: opts.r,
        rungs,
        slope,
        slope_not_negative: !slope.is_some_and(|s| s < 0.0),
        matrices,
        x0: x0.iter().copied().collect(),
        rank,
        skeleton: shared,
    })
}
