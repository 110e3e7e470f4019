//! Skorokhod distance between piecewise-constant paths by dynamic programming
//! over monotone matchings of interior jump times.
//!
//! A matching `(i_1, j_1), …, (i_q, j_q)` fixes the time change `λ` as the
//! piecewise-linear map through `(0,0), (t_{i_k}, s_{j_k}), (T,T)`. Its cost
//! `max(sup_t |γ(t) − γ̃(λ(t))|, ‖λ − Id‖)` splits over consecutive knots, so
//! the best matching ending at a given pair depends only on that pair. Up to
//! [`EXHAUSTIVE_MAX_JUMPS`] interior jumps per path every pair and predecessor
//! is tried; beyond that each row keeps [`BEAM_WIDTH`] states and looks back
//! over a bounded band. The result is always an upper bound on `d_S`.

use crate::error::Result;

use super::{FiniteTrajectory, TimeChange, TIME_EPS};

pub const EXHAUSTIVE_MAX_JUMPS: usize = 30;
pub const BEAM_WIDTH: usize = 256;
const BEAM_BAND: usize = 8;

#[derive(Debug, Clone)]
pub struct Alignment {
    /// `max(sup_term, ‖λ − Id‖_∞)`.
    pub distance: f64,
    pub sup_term: f64,
    pub lambda: TimeChange,
    /// Matched breakpoint indices `(i, j)` with `λ(t_i) = s_j`.
    pub matched: Vec<(usize, usize)>,
    pub exhaustive: bool,
}

struct Problem<'a> {
    horizon: f64,
    ta: &'a [f64],
    tb: &'a [f64],
    /// `dist[i][j] = |a_i − b_j|`.
    dist: Vec<Vec<f64>>,
    /// Breakpoints `1..end_a` of the first path lie strictly inside `(0, T)`.
    end_a: usize,
    end_b: usize,
    snap: f64,
}

impl Problem<'_> {
    /// Sup of the value distance on the knot-to-knot segment from
    /// `(i0, j0)` to `(i1, j1)`, excluding the far knot. `None` for the end
    /// knot `(T, T)`, which also counts the terminal values at `T`.
    fn segment(&self, i0: usize, j0: usize, next: Option<(usize, usize)>) -> f64 {
        let (t0, s0) = (self.ta[i0], self.tb[j0]);
        let (i1, j1, t1, s1) = match next {
            Some((i1, j1)) => (i1, j1, self.ta[i1], self.tb[j1]),
            None => (self.end_a, self.end_b, self.horizon, self.horizon),
        };
        let map = |s: f64| t0 + (s - s0) * (t1 - t0) / (s1 - s0);

        let (mut ia, mut jb) = (i0, j0);
        let mut worst = self.dist[ia][jb];
        let (mut pa, mut pb) = (i0 + 1, j0 + 1);
        while pa < i1 || pb < j1 {
            let xa = if pa < i1 { self.ta[pa] } else { f64::INFINITY };
            let xb = if pb < j1 { map(self.tb[pb]) } else { f64::INFINITY };
            let t = xa.min(xb);
            if (xa - xb).abs() <= self.snap {
                ia = pa;
                jb = pb;
                pa += 1;
                pb += 1;
            } else if xa < xb {
                ia = pa;
                pa += 1;
            } else {
                jb = pb;
                pb += 1;
            }
            if t >= t1 - self.snap {
                continue;
            }
            worst = worst.max(self.dist[ia][jb]);
        }
        if next.is_none() {
            worst = worst.max(self.dist[self.ta.len() - 1][self.tb.len() - 1]);
        }
        worst
    }
}

#[derive(Clone, Copy)]
struct State {
    cost: f64,
    parent: Option<(usize, usize)>,
}

/// Aligns two piecewise-constant paths given by their breakpoint times and
/// a distance between their values.
pub fn skorokhod_align(
    horizon: f64,
    times_a: &[f64],
    times_b: &[f64],
    dist: impl Fn(usize, usize) -> f64,
) -> Result<Alignment> {
    let snap = TIME_EPS * horizon.max(1.0);
    let interior = |ts: &[f64]| ts.iter().skip(1).take_while(|&&t| t < horizon - snap).count();
    let (na, nb) = (interior(times_a), interior(times_b));
    let p = Problem {
        horizon,
        ta: times_a,
        tb: times_b,
        dist: (0..times_a.len()).map(|i| (0..times_b.len()).map(|j| dist(i, j)).collect()).collect(),
        end_a: na + 1,
        end_b: nb + 1,
        snap,
    };
    let exhaustive = na <= EXHAUSTIVE_MAX_JUMPS && nb <= EXHAUSTIVE_MAX_JUMPS;

    // Row 0 holds only the origin knot; rows 1..=na hold interior breakpoints.
    let mut table: Vec<Vec<Option<State>>> = vec![vec![None; nb + 1]; na + 1];
    table[0][0] = Some(State { cost: 0.0, parent: None });
    let mut best_end = (p.segment(0, 0, None), (0usize, 0usize));

    for i in 1..=na {
        let row_lo = if exhaustive { 0 } else { i.saturating_sub(BEAM_BAND) };
        let mut row: Vec<(usize, State)> = Vec::new();
        for j in 1..=nb {
            let shift = (times_a[i] - times_b[j]).abs();
            if shift >= best_end.0 {
                continue;
            }
            let mut cell: Option<State> = None;
            let consider = |pi: usize, pj: usize, prev: State, cell: &mut Option<State>| {
                let bound = prev.cost.max(shift);
                if bound >= best_end.0 || cell.is_some_and(|c| bound >= c.cost) {
                    return;
                }
                let cost = bound.max(p.segment(pi, pj, Some((i, j))));
                if cell.is_none_or(|c| cost < c.cost) {
                    *cell = Some(State { cost, parent: Some((pi, pj)) });
                }
            };
            consider(0, 0, table[0][0].unwrap(), &mut cell);
            for pi in row_lo.max(1)..i {
                let col_lo = if exhaustive { 1 } else { j.saturating_sub(BEAM_BAND).max(1) };
                for pj in col_lo..j {
                    if let Some(prev) = table[pi][pj] {
                        consider(pi, pj, prev, &mut cell);
                    }
                }
            }
            if let Some(state) = cell {
                row.push((j, state));
            }
        }
        if !exhaustive && row.len() > BEAM_WIDTH {
            row.sort_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(a.0.cmp(&b.0)));
            row.truncate(BEAM_WIDTH);
        }
        for (j, state) in row {
            table[i][j] = Some(state);
            let total = state.cost.max(p.segment(i, j, None));
            if total < best_end.0 {
                best_end = (total, (i, j));
            }
        }
    }

    let mut matched = Vec::new();
    let mut at = best_end.1;
    while at != (0, 0) {
        matched.push(at);
        at = table[at.0][at.1].and_then(|s| s.parent).unwrap_or((0, 0));
    }
    matched.reverse();
    let lambda = TimeChange::new(horizon, matched.iter().map(|&(i, j)| (times_a[i], times_b[j])).collect())?;
    let deviation = lambda.sup_deviation();
    let sup_term = {
        let mut knots = vec![(0, 0)];
        knots.extend(matched.iter().copied());
        let mut worst = 0.0f64;
        for (k, &(i, j)) in knots.iter().enumerate() {
            worst = worst.max(p.segment(i, j, knots.get(k + 1).copied()));
        }
        worst
    };
    Ok(Alignment { distance: sup_term.max(deviation), sup_term, lambda, matched, exhaustive })
}

/// Upper bound on `d_S(γ, γ̃)` with its witness time change; `λ` maps the
/// time axis of `γ` to that of `γ̃`.
pub fn skorokhod_distance(gamma: &FiniteTrajectory, other: &FiniteTrajectory) -> Result<Alignment> {
    gamma.check_horizon(other)?;
    let (a, b) = (gamma.points(), other.points());
    skorokhod_align(gamma.horizon(), gamma.times(), other.times(), |i, j| (&a[i] - &b[j]).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Hypersurface;
    use crate::linalg::{from_slice, Vector};

    fn circle(theta: f64) -> Vector {
        from_slice(&[theta.cos(), theta.sin()])
    }

    fn traj(times: &[f64], angles: &[f64]) -> FiniteTrajectory {
        FiniteTrajectory::new(
            Hypersurface::ball(2, 1.0),
            1.0,
            times.to_vec(),
            angles.iter().map(|&a| circle(a)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identical_paths_are_at_distance_zero() {
        let g = traj(&[0.0, 0.3, 0.6], &[0.0, 1.0, 2.0]);
        let a = skorokhod_distance(&g, &g).unwrap();
        assert_eq!(a.distance, 0.0);
        assert_eq!(a.lambda.sup_deviation(), 0.0);
    }

    #[test]
    fn time_shift_costs_the_shift() {
        let g = traj(&[0.0, 0.3, 0.6], &[0.0, 1.0, 2.0]);
        let h = traj(&[0.0, 0.32, 0.61], &[0.0, 1.0, 2.0]);
        let a = skorokhod_distance(&g, &h).unwrap();
        assert!((a.distance - 0.02).abs() < 1e-12, "{}", a.distance);
        assert_eq!(a.matched, vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn constants_cost_their_distance() {
        let g = traj(&[0.0], &[0.0]);
        let h = traj(&[0.0], &[0.5]);
        let a = skorokhod_distance(&g, &h).unwrap();
        assert!((a.distance - (circle(0.0) - circle(0.5)).norm()).abs() < 1e-15);
    }

    #[test]
    fn unmatched_jump_is_paid_in_space() {
        // A tiny extra wiggle is cheaper to leave unmatched than to chase in time.
        let g = traj(&[0.0, 0.5], &[0.0, 1.0]);
        let h = traj(&[0.0, 0.5, 0.9], &[0.0, 1.0, 1.001]);
        let a = skorokhod_distance(&g, &h).unwrap();
        assert!((a.distance - (circle(1.0) - circle(1.001)).norm()).abs() < 1e-12);
    }

    #[test]
    fn horizon_mismatch_is_an_error() {
        let g = traj(&[0.0], &[0.0]);
        let h = FiniteTrajectory::constant(Hypersurface::ball(2, 1.0), 2.0, circle(0.0)).unwrap();
        assert!(skorokhod_distance(&g, &h).is_err());
    }
}
