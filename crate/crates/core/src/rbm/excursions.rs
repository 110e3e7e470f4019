use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Hypersurface;
use crate::linalg::Vector;
use crate::nbv::format_f64;

use super::path::{check_start, check_step, radius_hint, reflect_step};
use super::rng::StepNoise;
use super::{RbmPath, SimulationOptions, Until};

/// Default contact layer `2√h·log(1/h)` for step `h`.
pub fn default_boundary_tol(step: f64) -> f64 {
    2.0 * step.sqrt() * (1.0 / step).ln()
}

/// One excursion away from the boundary, between two contact steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionRecord {
    /// Time of the contact the excursion leaves from.
    pub start_time: f64,
    /// Time of the contact that ends it.
    pub end_time: f64,
    pub start_point: Vector,
    pub end_point: Vector,
    /// `|end_point − start_point|`.
    pub jump: f64,
    /// Local time at the start contact.
    pub local_time: f64,
}

/// First boundary contact of a path, projected onto the surface.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstContact {
    pub time: f64,
    pub point: Vector,
}

/// The excursions of one path, ordered by start time, together with the
/// first contact and the local time the path reached.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionSkeleton {
    pub dim: usize,
    pub first_contact: Option<FirstContact>,
    pub records: Vec<ExcursionRecord>,
    pub final_local_time: f64,
    pub final_time: f64,
}

impl ExcursionSkeleton {
    pub fn empty(dim: usize, final_time: f64, final_local_time: f64) -> Self {
        Self { dim, first_contact: None, records: Vec::new(), final_local_time, final_time }
    }

    /// Builds a skeleton from explicit records; they are sorted by start time.
    pub fn from_records(
        first_contact: FirstContact,
        mut records: Vec<ExcursionRecord>,
        final_time: f64,
        final_local_time: f64,
    ) -> Result<Self> {
        records.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
        if records.windows(2).any(|w| w[1].local_time < w[0].local_time) {
            return Err(Error::InvalidInput("excursion local times must be nondecreasing in start time".into()));
        }
        Ok(Self { dim: first_contact.point.len(), first_contact: Some(first_contact), records, final_local_time, final_time })
    }

    pub fn first_contact(&self) -> Result<&FirstContact> {
        self.first_contact.as_ref().ok_or(Error::NoBoundaryContact)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Excursions with jump at least `eps` that start before local time `r`.
    pub fn large(&self, eps: f64, r: f64) -> impl Iterator<Item = &ExcursionRecord> {
        self.records.iter().filter(move |e| e.jump >= eps && e.local_time < r)
    }

    /// `N_ε`: excursions with jump at least `eps` before local time `r`.
    pub fn count_at_least(&self, eps: f64, r: f64) -> usize {
        self.large(eps, r).count()
    }

    /// Splits at local time `r1` for threshold `eps`. The second part is
    /// re-based to start at local time 0 from the last large endpoint before
    /// `r1` (or the first contact if there is none).
    pub fn split(&self, r1: f64, eps: f64) -> Result<(ExcursionSkeleton, ExcursionSkeleton)> {
        let first = self.first_contact()?;
        if r1 > self.final_local_time {
            return Err(Error::LocalTimeNotReached { requested: r1, reached: self.final_local_time });
        }
        let (before, after): (Vec<_>, Vec<_>) = self.records.iter().cloned().partition(|e| e.local_time < r1);
        let handover = before
            .iter()
            .rev()
            .find(|e| e.jump >= eps)
            .map(|e| FirstContact { time: e.end_time, point: e.end_point.clone() })
            .unwrap_or_else(|| first.clone());
        let head = ExcursionSkeleton {
            dim: self.dim,
            first_contact: Some(first.clone()),
            records: before,
            final_local_time: r1,
            final_time: handover.time,
        };
        let tail = ExcursionSkeleton {
            dim: self.dim,
            first_contact: Some(handover),
            records: after
                .into_iter()
                .map(|mut e| {
                    e.local_time -= r1;
                    e
                })
                .collect(),
            final_local_time: self.final_local_time - r1,
            final_time: self.final_time,
        };
        Ok((head, tail))
    }

    /// CSV with header `s,u,e0_1..e0_n,eend_1..eend_n,jump,ell`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["s".to_string(), "u".to_string()];
        header.extend((1..=self.dim).map(|i| format!("e0_{i}")));
        header.extend((1..=self.dim).map(|i| format!("eend_{i}")));
        header.push("jump".into());
        header.push("ell".into());
        w.write_record(&header)?;
        for e in &self.records {
            let mut row = vec![format_f64(e.start_time), format_f64(e.end_time)];
            row.extend(e.start_point.iter().map(|v| format_f64(*v)));
            row.extend(e.end_point.iter().map(|v| format_f64(*v)));
            row.push(format_f64(e.jump));
            row.push(format_f64(e.local_time));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Contact bookkeeping shared by the stored and streamed extractors.
struct Tracker<'a> {
    surface: &'a Hypersurface,
    first: Option<FirstContact>,
    last: Option<(usize, Vector, f64)>,
    records: Vec<ExcursionRecord>,
}

impl<'a> Tracker<'a> {
    fn new(surface: &'a Hypersurface) -> Self {
        Self { surface, first: None, last: None, records: Vec::new() }
    }

    fn contact(&mut self, k: usize, h: f64, x: &Vector, local_time: f64) -> Result<()> {
        if self.first.is_none() {
            self.first = Some(FirstContact { time: k as f64 * h, point: self.surface.nearest_point(x)? });
        }
        if let Some((a, xa, la)) = self.last.take() {
            if k - a >= 2 {
                let start_point = self.surface.nearest_point(&xa)?;
                let end_point = self.surface.nearest_point(x)?;
                self.records.push(ExcursionRecord {
                    start_time: a as f64 * h,
                    end_time: k as f64 * h,
                    jump: (&end_point - &start_point).norm(),
                    start_point,
                    end_point,
                    local_time: la,
                });
            }
        }
        self.last = Some((k, x.clone(), local_time));
        Ok(())
    }

    fn is_contact(&self, x: &Vector, projected: bool, boundary_tol: f64) -> Result<bool> {
        Ok(projected || (boundary_tol > 0.0 && self.surface.distance_to_surface(x)? <= boundary_tol))
    }

    fn finish(self, final_time: f64, final_local_time: f64) -> ExcursionSkeleton {
        ExcursionSkeleton {
            dim: self.surface.dim(),
            first_contact: self.first,
            records: self.records,
            final_local_time,
            final_time,
        }
    }
}

/// Splits a path into excursions. A step is a boundary contact when it was
/// pushed back or lies within `boundary_tol` of the surface; maximal runs of
/// non-contact steps between two contacts are excursions, with the flanking
/// contacts projected onto the surface as endpoints. Excursions of a single
/// step are absorbed into boundary time.
pub fn extract_excursions(path: &RbmPath, surface: &Hypersurface, boundary_tol: f64) -> Result<ExcursionSkeleton> {
    let mut tracker = Tracker::new(surface);
    for k in 0..path.len() {
        let x = path.state(k);
        if tracker.is_contact(&x, path.projected(k), boundary_tol)? {
            tracker.contact(k, path.step(), &x, path.local_time(k))?;
        }
    }
    Ok(tracker.finish(path.final_time(), path.final_local_time()))
}

/// Simulates a path and extracts its excursions on the fly, without storing
/// the states. Agrees exactly with [`extract_excursions`] on the stored path.
pub fn simulate_skeleton(
    surface: &Hypersurface,
    x_start: &Vector,
    until: Until,
    opts: SimulationOptions,
    boundary_tol: f64,
) -> Result<ExcursionSkeleton> {
    check_start(surface, x_start)?;
    check_step(surface, &opts, radius_hint(x_start))?;
    let h = opts.step;
    let (max_steps, target) = match until {
        Until::Time(t) => ((t / h).round() as usize, None),
        Until::LocalTime { r, max_time } => ((max_time / h).round() as usize, Some(r)),
    };
    let wrap = |e: Error| Error::Replica { replica: opts.replica, source: Box::new(e) };
    let mut tracker = Tracker::new(surface);
    let mut noise = StepNoise::new(opts.seed, opts.replica, surface.dim());
    let mut x = x_start.clone();
    let mut xi = vec![0.0; surface.dim()];
    let sqrt_h = h.sqrt();
    let mut l = 0.0;
    if tracker.is_contact(&x, false, boundary_tol).map_err(wrap)? {
        tracker.contact(0, h, &x, l).map_err(wrap)?;
    }
    let mut k = 0;
    while k < max_steps && !target.is_some_and(|r| l >= r) {
        noise.fill_next(&mut xi);
        let push = reflect_step(surface, &mut x, &xi, sqrt_h).map_err(wrap)?;
        l += push;
        k += 1;
        if tracker.is_contact(&x, push > 0.0, boundary_tol).map_err(wrap)? {
            tracker.contact(k, h, &x, l).map_err(wrap)?;
        }
    }
    Ok(tracker.finish(k as f64 * h, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_slice;

    fn fixture() -> RbmPath {
        // Boundary, interior loop, boundary, boundary.
        let states = vec![
            from_slice(&[1.0, 0.0]),
            from_slice(&[0.5, 0.1]),
            from_slice(&[0.2, 0.5]),
            from_slice(&[0.0, 1.0]),
            from_slice(&[-0.6, 0.8]),
        ];
        RbmPath::from_states(0.1, states, vec![0.0, 0.0, 0.0, 0.3, 0.5], vec![true, false, false, true, true]).unwrap()
    }

    #[test]
    fn one_interior_loop_gives_one_excursion() {
        let disk = Hypersurface::ball(2, 1.0);
        let s = extract_excursions(&fixture(), &disk, 0.0).unwrap();
        assert_eq!(s.len(), 1);
        let e = &s.records[0];
        assert_eq!((e.start_time, e.end_time), (0.0, 0.30000000000000004));
        assert!((&e.start_point - from_slice(&[1.0, 0.0])).norm() < 1e-15);
        assert!((&e.end_point - from_slice(&[0.0, 1.0])).norm() < 1e-15);
        assert!((e.jump - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.first_contact().unwrap().time, 0.0);
    }

    #[test]
    fn interior_path_has_empty_skeleton() {
        let disk = Hypersurface::ball(2, 1.0);
        let p = RbmPath::from_states(
            0.1,
            vec![from_slice(&[0.0, 0.0]), from_slice(&[0.1, 0.0])],
            vec![0.0, 0.0],
            vec![false, false],
        )
        .unwrap();
        let s = extract_excursions(&p, &disk, 0.0).unwrap();
        assert!(s.is_empty());
        assert!(matches!(s.first_contact(), Err(Error::NoBoundaryContact)));
    }

    #[test]
    fn contact_layer_swallows_shallow_excursions() {
        let disk = Hypersurface::ball(2, 1.0);
        let s = extract_excursions(&fixture(), &disk, 0.6).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn streamed_skeleton_matches_stored_extraction() {
        let disk = Hypersurface::ball(2, 1.0);
        let x0 = from_slice(&[0.5, 0.0]);
        let opts = SimulationOptions { step: 1e-4, max_step: None, seed: 11, replica: 2 };
        let until = Until::LocalTime { r: 0.3, max_time: 20.0 };
        let path = super::super::simulate_path(&disk, &x0, until, opts).unwrap();
        for tol in [0.0, 0.01] {
            let stored = extract_excursions(&path, &disk, tol).unwrap();
            let streamed = simulate_skeleton(&disk, &x0, until, opts, tol).unwrap();
            assert_eq!(stored, streamed);
            assert!(!stored.is_empty());
        }
    }

    #[test]
    fn default_tolerance_formula() {
        assert!((default_boundary_tol(1e-4) - 2.0 * 0.01 * 1e4f64.ln()).abs() < 1e-15);
    }
}
