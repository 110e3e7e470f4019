//! Skorokhod distance between a path and a time-shifted perturbation, and the
//! distance between the solution operators they drive.

use reflected_flow::flow::stability_skorokhod;
use reflected_flow::linalg::from_slice;
use reflected_flow::nbv::{skorokhod_distance, FiniteTrajectory};
use reflected_flow::Hypersurface;

fn path(sphere: &Hypersurface, times: Vec<f64>, tilt: f64) -> reflected_flow::Result<FiniteTrajectory> {
    let points = (0..times.len())
        .map(|k| {
            let a = 0.3 * k as f64 + tilt;
            from_slice(&[a.sin(), 0.0, a.cos()])
        })
        .collect();
    FiniteTrajectory::new(sphere.clone(), 1.0, times, points)
}

fn main() -> reflected_flow::Result<()> {
    let sphere = Hypersurface::ball(3, 1.0);
    let gamma = path(&sphere, vec![0.0, 0.2, 0.5, 0.7], 0.0)?;
    println!("{:>8} {:>12} {:>12} {:>8}", "shift", "d_S paths", "d_S ops", "ratio");
    for k in 0..=5 {
        let shift = 0.01 * k as f64;
        let times = vec![0.0, 0.2 + shift, 0.5 - shift, 0.7 + shift];
        let other = path(&sphere, times, 0.0)?;
        let align = skorokhod_distance(&gamma, &other)?;
        let stab = stability_skorokhod(&gamma, &other)?;
        println!("{shift:>8.3} {:>12.6} {:>12.6} {:>8.4}", align.distance, stab.operator_distance, stab.ratio());
    }
    Ok(())
}
