use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{stability_gap, stability_skorokhod};
use crate::functional::{assemble_a, counterexample_parabola, epsilon_ladder, fit_slope, LadderOptions};
use crate::geometry::{Hypersurface, Orientation, SurfaceSpec};
use crate::linalg::{from_slice, Vector};
use crate::nbv::FiniteTrajectory;
use crate::rbm::{
    default_boundary_tol, replica_rng, simulate_local_time, simulate_skeleton, uniform_start, ExcursionSkeleton,
    SimulationOptions, StreamPurpose, Until,
};

use super::output::{cell, Check, Outcome, Table};
use super::ExperimentConfig;

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn start_point(c: &ExperimentConfig, surface: &Hypersurface, replica: u64) -> Result<Vector> {
    match &c.start {
        Some(x) => Ok(from_slice(x)),
        None => uniform_start(surface, c.seed(), replica),
    }
}

fn sim_options(c: &ExperimentConfig, replica: u64) -> SimulationOptions {
    SimulationOptions { step: c.step.unwrap_or(0.0), max_step: None, seed: c.seed(), replica }
}

fn boundary_tol(c: &ExperimentConfig) -> f64 {
    c.boundary_tol.unwrap_or_else(|| default_boundary_tol(c.step.unwrap_or(0.0)))
}

fn local_time_until(c: &ExperimentConfig) -> Until {
    let r = c.local_time.unwrap_or(0.0);
    Until::LocalTime { r, max_time: c.max_time.unwrap_or(100.0 * r.max(1.0)) }
}

fn coords(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn header(fixed: &[&str], extra: Vec<String>, tail: &[&str]) -> Vec<String> {
    let mut h: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
    h.extend(extra);
    h.extend(tail.iter().map(|s| s.to_string()));
    h
}

fn skeleton_table(name: &str, s: &ExcursionSkeleton) -> Table {
    let mut t = Table {
        name: name.into(),
        header: header(&["s", "u"], [coords("e0_", s.dim), coords("eend_", s.dim)].concat(), &["jump", "ell"]),
        rows: Vec::new(),
    };
    for e in &s.records {
        let mut row = vec![cell(e.start_time), cell(e.end_time)];
        row.extend(e.start_point.iter().chain(e.end_point.iter()).map(|v| cell(*v)));
        row.push(cell(e.jump));
        row.push(cell(e.local_time));
        t.push(row);
    }
    t
}

#[derive(Serialize)]
struct RevuzResults {
    replicas: usize,
    time_horizon: f64,
    mean_local_time: f64,
    stderr: f64,
    expected: f64,
    relative_error: f64,
    first_replica_excursions: usize,
}

/// `E[L_T]` from uniform starts against `T·|∂D|/(2|D|)`.
pub fn rbm_revuz(c: &ExperimentConfig) -> Result<Outcome> {
    let surface = c.domain.build(c.dimension())?;
    let horizon = c.time_horizon.unwrap_or(0.0);
    let ls = surface.level_set();
    let (area, volume) = ls
        .boundary_area()
        .zip(ls.enclosed_volume())
        .ok_or_else(|| Error::InvalidInput(format!("{} has no closed-form area and volume", surface.label())))?;
    let expected = horizon * area / (2.0 * volume);
    let runs = (0..c.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let x0 = start_point(c, &surface, i)?;
            let l = simulate_local_time(&surface, &x0, horizon, sim_options(c, i))?;
            Ok((x0, l))
        })
        .collect::<Result<Vec<_>>>()?;
    let locals: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (mean, stderr) = mean_and_stderr(&locals);
    let relative_error = if expected > 0.0 { (mean - expected).abs() / expected } else { mean.abs() };

    let mut table = Table { name: "local_time".into(), header: header(&["replica"], coords("x0_", c.dimension()), &["L"]), rows: vec![] };
    for (i, (x0, l)) in runs.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(x0.iter().map(|v| cell(*v)));
        row.push(cell(*l));
        table.push(row);
    }
    let x0 = &runs[0].0;
    let skeleton = simulate_skeleton(&surface, x0, Until::Time(horizon), sim_options(c, 0), boundary_tol(c))?;
    let results = RevuzResults {
        replicas: c.replicas,
        time_horizon: horizon,
        mean_local_time: mean,
        stderr,
        expected,
        relative_error,
        first_replica_excursions: skeleton.len(),
    };
    let checks = vec![Check::at_most("revuz_relative_error", relative_error, c.tolerances.revuz_rel)];
    Outcome::new(c, checks, results, vec![table, skeleton_table("skeleton_0", &skeleton)])
}

#[derive(Serialize)]
struct ScalingRow {
    j: u32,
    eps: f64,
    mean_count: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct ScalingResults {
    replicas: usize,
    local_time: f64,
    boundary_tol: f64,
    rows: Vec<ScalingRow>,
    slope: Option<f64>,
}

/// `E[N_ε]` over `ε = 2^{-j}` and the log-log slope against `1/ε`.
pub fn excursion_scaling(c: &ExperimentConfig) -> Result<Outcome> {
    let surface = c.domain.build(c.dimension())?;
    let r = c.local_time.unwrap_or(0.0);
    let js: Vec<u32> = (c.j_min.unwrap_or(1)..=c.j_max.unwrap_or(1)).collect();
    let tol = boundary_tol(c);
    let counts = (0..c.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let x0 = start_point(c, &surface, i)?;
            let s = simulate_skeleton(&surface, &x0, local_time_until(c), sim_options(c, i), tol)?;
            if s.final_local_time < r {
                let source = Error::LocalTimeNotReached { requested: r, reached: s.final_local_time };
                return Err(Error::Replica { replica: i, source: Box::new(source) });
            }
            Ok(js.iter().map(|&j| s.count_at_least(0.5f64.powi(j as i32), r)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table {
        name: "counts".into(),
        header: header(&["replica"], js.iter().map(|j| format!("n_{j}")).collect(), &[]),
        rows: vec![],
    };
    for (i, row) in counts.iter().enumerate() {
        table.push(std::iter::once(i.to_string()).chain(row.iter().map(|n| n.to_string())).collect());
    }
    let rows: Vec<ScalingRow> = js
        .iter()
        .enumerate()
        .map(|(k, &j)| {
            let xs: Vec<f64> = counts.iter().map(|row| row[k] as f64).collect();
            let (mean_count, stderr) = mean_and_stderr(&xs);
            ScalingRow { j, eps: 0.5f64.powi(j as i32), mean_count, stderr }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.mean_count > 0.0).map(|r| ((1.0 / r.eps).ln(), r.mean_count.ln())).unzip();
    let slope = fit_slope(&xs, &ys);
    let mut summary = Table::new("scaling", &["j", "eps", "mean_count", "stderr"]);
    for r in &rows {
        summary.push(vec![r.j.to_string(), cell(r.eps), cell(r.mean_count), cell(r.stderr)]);
    }
    let deviation = slope.map_or(f64::INFINITY, |s| (s - 1.0).abs());
    let checks = vec![Check::at_most("slope_deviation_from_one", deviation, c.tolerances.scaling_slope)];
    let results = ScalingResults { replicas: c.replicas, local_time: r, boundary_tol: tol, rows, slope };
    Outcome::new(c, checks, results, vec![summary, table])
}

#[derive(Serialize)]
struct LadderSummaryRow {
    j: u32,
    eps: f64,
    median_m_j: f64,
    median_gap: Option<f64>,
    median_quadratic_sum: f64,
}

#[derive(Serialize)]
struct LadderResults {
    seeds: Vec<u64>,
    rungs: Vec<LadderSummaryRow>,
    decreasing_pairs: usize,
    gap_pairs: usize,
    slope: Option<f64>,
    slope_flags: usize,
    rank_summary: RankSummary,
    max_split_residual: f64,
    median_quadratic_growth: f64,
    reports: Vec<crate::functional::EpsilonLadderReport>,
}

#[derive(Serialize)]
struct RankSummary {
    max_relative_smallest: f64,
    fraction_second_above: f64,
    max_kernel_angle: f64,
    ranks: Vec<usize>,
}

/// The ε-ladder of `A_{r,ε}` over replicas, with the rank, split and
/// endpoint-sum checks.
pub fn ladder(c: &ExperimentConfig) -> Result<Outcome> {
    let surface = c.domain.build(c.dimension())?;
    let n = c.dimension();
    let r = c.local_time.unwrap_or(0.0);
    let mut opts = LadderOptions::new(r, c.j_min.unwrap_or(1), c.j_max.unwrap_or(1), c.step.unwrap_or(0.0));
    opts.boundary_tol = Some(boundary_tol(c));
    if let Until::LocalTime { max_time, .. } = local_time_until(c) {
        opts.max_time = max_time;
    }
    opts.coupling = c.coupling.unwrap_or_default();
    let reports = (0..c.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let x0 = start_point(c, &surface, i)?;
            epsilon_ladder(&surface, &x0, &opts, c.seed(), i)
        })
        .collect::<Result<Vec<_>>>()?;

    let js: Vec<u32> = reports[0].rungs.iter().map(|r| r.j).collect();
    let mut rows = Vec::new();
    for (k, &j) in js.iter().enumerate() {
        let mut m: Vec<f64> = reports.iter().map(|rep| rep.rungs[k].m_j as f64).collect();
        let mut q: Vec<f64> = reports.iter().map(|rep| rep.rungs[k].quadratic_sum).collect();
        let mut g: Vec<f64> = reports.iter().filter_map(|rep| rep.rungs[k].gap).collect();
        rows.push(LadderSummaryRow {
            j,
            eps: 0.5f64.powi(j as i32),
            median_m_j: median(&mut m),
            median_gap: (!g.is_empty()).then(|| median(&mut g)),
            median_quadratic_sum: median(&mut q),
        });
    }
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.median_gap).collect();
    let decreasing_pairs = gaps.windows(2).filter(|w| w[1] < w[0]).count();
    let gap_pairs = gaps.len().saturating_sub(1);
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        js.iter().zip(&gaps).skip(1).filter(|(_, g)| **g > 0.0).map(|(&j, g)| (j as f64, g.ln())).unzip();
    let slope = fit_slope(&xs, &ys);

    let max_relative_smallest = reports
        .iter()
        .map(|rep| rep.rank.singular_values[n - 1] / rep.rank.singular_values[0].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let above = reports.iter().filter(|rep| rep.rank.singular_values[n - 2] > c.tolerances.rank_sigma).count();
    let rank_summary = RankSummary {
        max_relative_smallest,
        fraction_second_above: above as f64 / reports.len() as f64,
        max_kernel_angle: reports.iter().map(|rep| rep.rank.kernel_angle).fold(0.0, f64::max),
        ranks: reports.iter().map(|rep| rep.rank.rank).collect(),
    };

    let finest = *opts_eps(&js).last().expect("nonempty ladder");
    let mut max_split_residual = 0.0f64;
    for rep in &reports {
        if let Some(s) = &rep.skeleton {
            max_split_residual = max_split_residual.max(split_residual(s, &surface, r, finest)?);
        }
    }

    let j_ref = js.iter().position(|&j| j >= 4).unwrap_or(0);
    let mut growth: Vec<f64> = reports
        .iter()
        .map(|rep| {
            let q0 = rep.rungs[j_ref].quadratic_sum;
            let qmax = rep.rungs[j_ref..].iter().map(|r| r.quadratic_sum).fold(0.0, f64::max);
            if q0 > 0.0 {
                qmax / q0
            } else if qmax == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let median_quadratic_growth = median(&mut growth);

    let t = &c.tolerances;
    let required = t.ladder_decreasing.unwrap_or(gap_pairs.saturating_sub(1));
    let mut checks = vec![
        Check::at_least("median_gap_decreasing_pairs", decreasing_pairs as f64, required as f64),
        Check::at_most("median_gap_slope", slope.unwrap_or(f64::INFINITY), 0.0),
        Check::at_most("relative_smallest_singular_value", max_relative_smallest, 1e-12),
        Check::at_least("fraction_second_singular_value_above", rank_summary.fraction_second_above, t.rank_fraction),
        Check::at_most("median_quadratic_growth", median_quadratic_growth, t.quadratic_growth),
    ];
    if opts.coupling == crate::functional::Coupling::Nested {
        checks.push(Check::at_most("split_residual", max_split_residual, t.split));
    }
    // a zero slope is not a pass
    if slope.is_some_and(|s| s == 0.0) {
        checks[1].passed = false;
    }

    let mut table = Table {
        name: "ladder".into(),
        header: header(&["replica", "j", "eps", "m_j", "gap", "quadratic_sum", "large_gaps"], coords("sv_", n), &[]),
        rows: vec![],
    };
    for rep in &reports {
        for rung in &rep.rungs {
            let mut row = vec![
                rep.replica.to_string(),
                rung.j.to_string(),
                cell(rung.eps),
                rung.m_j.to_string(),
                rung.gap.map(cell).unwrap_or_default(),
                cell(rung.quadratic_sum),
                rung.large_gaps.to_string(),
            ];
            row.extend(rung.singular_values.iter().map(|v| cell(*v)));
            table.push(row);
        }
    }
    let mut summary = Table::new("ladder_median", &["j", "eps", "median_m_j", "median_gap", "median_quadratic_sum"]);
    for row in &rows {
        summary.push(vec![
            row.j.to_string(),
            cell(row.eps),
            cell(row.median_m_j),
            row.median_gap.map(cell).unwrap_or_default(),
            cell(row.median_quadratic_sum),
        ]);
    }
    let slope_flags = reports.iter().filter(|r| r.slope_not_negative).count();
    let results = LadderResults {
        seeds: reports.iter().map(|r| r.replica).collect(),
        rungs: rows,
        decreasing_pairs,
        gap_pairs,
        slope,
        slope_flags,
        rank_summary,
        max_split_residual,
        median_quadratic_growth,
        reports,
    };
    Outcome::new(c, checks, results, vec![summary, table])
}

fn opts_eps(js: &[u32]) -> Vec<f64> {
    js.iter().map(|&j| 0.5f64.powi(j as i32)).collect()
}

/// `max |A_r − A^{(2)}_{r/2} A^{(1)}_{r/2}|` for the split at local time `r/2`.
pub fn split_residual(skeleton: &ExcursionSkeleton, surface: &Hypersurface, r: f64, eps: f64) -> Result<f64> {
    let r1 = 0.5 * r;
    let (head, tail) = skeleton.split(r1, eps)?;
    let full = assemble_a(skeleton, surface, r, eps)?;
    let product = assemble_a(&tail, surface, r - r1, eps)? * assemble_a(&head, surface, r1, eps)?;
    Ok((full - product).abs().max())
}

/// The parabola example on the configured scale.
pub fn counterexample(c: &ExperimentConfig) -> Result<Outcome> {
    let SurfaceSpec::Parabola { scale, upward } = c.domain else {
        return Err(Error::InvalidInput("the counterexample lives on a parabola".into()));
    };
    let js = c.j_list.clone().unwrap_or_else(|| (2..=8).map(|k| 2 * k).collect());
    let orientation = if upward { Orientation::AlongGradient } else { Orientation::AgainstGradient };
    let table = counterexample_parabola(&js, scale, orientation)?;
    let increases = table.rows.windows(2).filter(|w| w[0].j >= 4 && w[1].norm > w[0].norm).count();
    let t = &c.tolerances;
    let checks = vec![
        Check::at_most("slope", table.slope.unwrap_or(f64::INFINITY), t.counterexample_slope),
        Check::at_least("limit_norm", table.limit_norm, t.counterexample_limit),
        Check::at_most("increases", increases as f64, 0.0),
    ];
    let mut csv = Table::new("counterexample", &["j", "pairs", "total_variation", "contraction", "norm"]);
    for r in &table.rows {
        csv.push(vec![r.j.to_string(), r.pairs.to_string(), cell(r.total_variation), cell(r.contraction), cell(r.norm)]);
    }
    Outcome::new(c, checks, &table, vec![csv])
}

/// A random `pieces`-piece trajectory on `[0, 1]` walking over the surface.
pub fn random_trajectory<R: Rng + ?Sized>(surface: &Hypersurface, pieces: usize, rng: &mut R) -> Result<FiniteTrajectory> {
    let start = surface.sample_points(1.5, 1, rng)?.remove(0);
    let mut times: Vec<f64> = (1..pieces).map(|_| rng.random::<f64>()).collect();
    times.sort_by(f64::total_cmp);
    times.insert(0, 0.0);
    let mut points = vec![start];
    for _ in 1..pieces {
        let next = surface.perturb_on_surface(points.last().expect("nonempty"), 0.3, rng)?;
        points.push(next);
    }
    FiniteTrajectory::new(surface.clone(), 1.0, times, points).map(|g| g.merged())
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// `γ` with every point after the first moved by `delta` along `dirs`.
fn value_perturbed(gamma: &FiniteTrajectory, dirs: &[Vector], delta: f64) -> Result<FiniteTrajectory> {
    let surface = gamma.surface();
    let mut points = vec![gamma.start().clone()];
    for (x, u) in gamma.points().iter().zip(dirs).skip(1) {
        points.push(surface.nearest_point(&(x + u * delta))?);
    }
    FiniteTrajectory::new(surface.clone(), gamma.horizon(), gamma.times().to_vec(), points)
}

#[derive(Serialize)]
struct SkorokhodRow {
    replica: u64,
    calibration: bool,
    operator_distance: f64,
    path_distance: f64,
    ratio: f64,
    normalized: f64,
}

#[derive(Serialize)]
struct StabilityResults {
    deltas: Vec<f64>,
    min_halving_ratio: f64,
    max_halving_ratio: f64,
    calibrated_constant: f64,
    max_normalized_ratio: f64,
    skorokhod: Vec<SkorokhodRow>,
}

fn skorokhod_pair(surface: &Hypersurface, pieces: usize, delta: f64, seed: u64, replica: u64, calibration: bool) -> Result<SkorokhodRow> {
    let mut rng = replica_rng(seed, replica, StreamPurpose::Sampling);
    let gamma = random_trajectory(surface, pieces, &mut rng)?;
    let dirs: Vec<Vector> = gamma.points().iter().map(|_| random_unit(surface.dim(), &mut rng)).collect();
    let moved = value_perturbed(&gamma, &dirs, delta * rng.random::<f64>())?;
    let times = gamma.times();
    let spacing = times.windows(2).map(|w| w[1] - w[0]).chain([1.0 - times[times.len() - 1]]).fold(1.0, f64::min);
    let mut shifted = times.to_vec();
    for t in shifted.iter_mut().skip(1) {
        *t += 0.25 * spacing * rng.random_range(-1.0..=1.0);
    }
    let other = FiniteTrajectory::new(surface.clone(), 1.0, shifted, moved.points().to_vec())?;
    let s = stability_skorokhod(&gamma, &other)?;
    let ratio = s.ratio();
    Ok(SkorokhodRow {
        replica,
        calibration,
        operator_distance: s.operator_distance,
        path_distance: s.path_distance,
        ratio,
        normalized: ratio / (1.0 + gamma.total_variation() + other.total_variation()),
    })
}

/// Halving checks of the stability estimate and the calibrated Skorokhod
/// stability constant over random trajectory pairs.
pub fn deterministic_stability(c: &ExperimentConfig) -> Result<Outcome> {
    let surface = c.domain.build(c.dimension())?;
    let pieces = c.pieces.unwrap_or(10);
    let delta0 = c.delta.unwrap_or(0.05);
    let deltas: Vec<f64> = (0..c.delta_rungs.unwrap_or(4)).map(|k| delta0 * 0.5f64.powi(k as i32)).collect();
    let seed = c.seed();
    let halving = (0..c.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i, StreamPurpose::Sampling);
            let gamma = random_trajectory(&surface, pieces, &mut rng)?;
            let dirs: Vec<Vector> = gamma.points().iter().map(|_| random_unit(surface.dim(), &mut rng)).collect();
            let v0 = surface.tangent_project(gamma.start())?.apply(&random_unit(surface.dim(), &mut rng));
            deltas
                .iter()
                .map(|&d| stability_gap(&gamma, &value_perturbed(&gamma, &dirs, d)?, &v0, 1.0))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let calibration_offset = 1u64 << 32;
    let pairs: Vec<(u64, bool)> =
        (0..c.replicas as u64).map(|i| (calibration_offset + i, true)).chain((0..c.replicas as u64).map(|i| (i, false))).collect();
    let skorokhod = pairs
        .par_iter()
        .map(|&(i, cal)| skorokhod_pair(&surface, pieces, delta0, seed, i, cal))
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new("halving", &["replica", "rung", "delta", "sup_difference", "bound_rhs", "ratio"]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, gaps) in halving.iter().enumerate() {
        for (k, g) in gaps.iter().enumerate() {
            let ratio = if k == 0 { f64::NAN } else { g.sup_difference / gaps[k - 1].sup_difference };
            if k > 0 {
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            table.push(vec![i.to_string(), k.to_string(), cell(deltas[k]), cell(g.sup_difference), cell(g.bound_rhs), cell(ratio)]);
        }
    }
    let calibrated_constant = skorokhod.iter().filter(|r| r.calibration).map(|r| r.normalized).fold(0.0, f64::max);
    let max_normalized_ratio = skorokhod.iter().filter(|r| !r.calibration).map(|r| r.normalized).fold(0.0, f64::max);
    let mut sk = Table::new("skorokhod", &["replica", "calibration", "operator_distance", "path_distance", "ratio", "normalized"]);
    for r in &skorokhod {
        sk.push(vec![
            r.replica.to_string(),
            u8::from(r.calibration).to_string(),
            cell(r.operator_distance),
            cell(r.path_distance),
            cell(r.ratio),
            cell(r.normalized),
        ]);
    }
    let t = &c.tolerances;
    let checks = vec![
        Check::at_least("min_halving_ratio", lo, t.halving_low),
        Check::at_most("max_halving_ratio", hi, t.halving_high),
        Check::at_most("max_normalized_skorokhod_ratio", max_normalized_ratio, t.skorokhod_slack * calibrated_constant),
    ];
    let results = StabilityResults {
        deltas,
        min_halving_ratio: lo,
        max_halving_ratio: hi,
        calibrated_constant,
        max_normalized_ratio,
        skorokhod,
    };
    Outcome::new(c, checks, results, vec![table, sk])
}
