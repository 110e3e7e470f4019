use reflected_flow::experiment::split_residual;
use reflected_flow::functional::{
    assemble_a, counterexample_parabola, epsilon_ladder, excursion_factors, projection_log_drop, rank_diagnostics,
    LadderOptions,
};
use reflected_flow::linalg::{from_slice, op_norm};
use reflected_flow::rbm::{simulate_skeleton, ExcursionRecord, ExcursionSkeleton, FirstContact, SimulationOptions, Until};
use reflected_flow::{Hypersurface, Matrix, Orientation, Vector};

fn record(ell: f64, from: Vector, to: Vector) -> ExcursionRecord {
    ExcursionRecord {
        start_time: ell,
        end_time: ell + 0.1,
        jump: (&to - &from).norm(),
        start_point: from,
        end_point: to,
        local_time: ell,
    }
}

#[test]
fn two_excursions_on_the_sphere_match_hand_product() {
    let sphere = Hypersurface::ball(3, 1.0);
    let x0 = from_slice(&[1.0, 0.0, 0.0]);
    let x1 = from_slice(&[0.0, 1.0, 0.0]);
    let x2 = from_slice(&[0.0, 0.6, 0.8]);
    let skeleton = ExcursionSkeleton::from_records(
        FirstContact { time: 0.0, point: x0.clone() },
        vec![record(0.25, x0.clone(), x1.clone()), record(0.6, x1.clone(), x2.clone())],
        3.0,
        2.0,
    )
    .unwrap();
    let a = assemble_a(&skeleton, &sphere, 1.0, 0.5).unwrap();
    // On the unit sphere with inward normal, π_x = I − xxᵀ and S(x) = π_x.
    let pi = |x: &Vector| Matrix::identity(3, 3) - x * x.transpose();
    let f = |x: &Vector, l: f64| (pi(x) * l).exp() * pi(x);
    let oracle = f(&x2, 0.4) * f(&x1, 0.35) * f(&x0, 0.25);
    assert!((a - oracle).abs().max() < 1e-12);
}

fn disk_skeleton(seed: u64, r: f64) -> ExcursionSkeleton {
    let disk = Hypersurface::ball(2, 1.0);
    let opts = SimulationOptions { step: 1e-4, max_step: None, seed, replica: 0 };
    simulate_skeleton(&disk, &from_slice(&[0.1, -0.2]), Until::LocalTime { r, max_time: 100.0 }, opts, 0.0).unwrap()
}

#[test]
fn finer_thresholds_only_add_factors() {
    let s = disk_skeleton(3, 1.0);
    let mut prev: Vec<Vec<f64>> = Vec::new();
    for j in 2..=9 {
        let pts: Vec<Vec<f64>> =
            excursion_factors(&s, 1.0, 0.5f64.powi(j)).unwrap().iter().map(|f| f.point.iter().copied().collect()).collect();
        assert!(prev.iter().all(|p| pts.contains(p)));
        let total: f64 = excursion_factors(&s, 1.0, 0.5f64.powi(j)).unwrap().iter().map(|f| f.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        prev = pts;
    }
}

#[test]
fn assembled_matrices_kill_the_first_normal_and_obey_growth() {
    let disk = Hypersurface::ball(2, 1.0);
    for seed in 0..20 {
        let s = disk_skeleton(seed, 1.0);
        let x0 = s.first_contact().unwrap().point.clone();
        let a = assemble_a(&s, &disk, 1.0, 1.0 / 64.0).unwrap();
        let d = rank_diagnostics(&a, &disk, &x0).unwrap();
        assert!(d.kernel_angle <= 1e-6, "seed {seed}: {}", d.kernel_angle);
        assert!(op_norm(&a) <= 1f64.exp() * (1.0 + 1e-12));
        assert!(split_residual(&s, &disk, 1.0, 1.0 / 64.0).unwrap() <= 1e-10);
    }
}

#[test]
fn small_gaps_have_no_log_drop() {
    let disk = Hypersurface::ball(2, 1.0);
    let s = disk_skeleton(8, 1.0);
    let d = projection_log_drop(&s, &disk, 1.0, 1.0 / 16.0, 3.0).unwrap();
    assert!(d.large.is_empty());
    assert!(d.quadratic_sum > 0.0);
}

#[test]
fn nested_ladder_reports_rank_one_on_the_disk() {
    let disk = Hypersurface::ball(2, 1.0);
    let rep = epsilon_ladder(&disk, &from_slice(&[0.0, 0.3]), &LadderOptions::new(1.0, 3, 8, 1e-4), 2, 0).unwrap();
    assert_eq!(rep.rank.rank, 1);
    assert!(rep.rank.singular_values[1] <= 1e-15 * rep.rank.singular_values[0]);
    assert!(rep.rungs.windows(2).all(|w| w[0].m_j <= w[1].m_j));
    assert!(rep.rungs.windows(2).all(|w| w[0].eps > w[1].eps));
}

#[test]
fn counterexample_norms_shrink_while_the_limit_does_not() {
    let js: Vec<u32> = (2..=8).map(|k| 2 * k).collect();
    for (scale, orientation) in [(1.0, Orientation::AlongGradient), (0.25, Orientation::AlongGradient), (1.0, Orientation::AgainstGradient)] {
        let t = counterexample_parabola(&js, scale, orientation).unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].norm <= w[0].norm));
        assert!(t.limit_norm >= 0.1);
        for r in &t.rows {
            let j = r.j as f64;
            let q = 4.0 * scale * scale / (j * j);
            assert!((r.contraction - (1.0 - q).abs() / (1.0 + q)).abs() < 1e-14);
            assert!((r.total_variation - 2.0 * j * j).abs() < 1e-9 * j * j);
        }
    }
}
