//! Counts boundary excursions with jump at least ε before local time 1 and
//! compares ε·m(ε) across a dyadic ladder.

use reflected_flow::functional::fit_slope;
use reflected_flow::linalg::from_slice;
use reflected_flow::rbm::{simulate_skeleton, SimulationOptions, Until};
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let disk = Hypersurface::ball(2, 1.0);
    let x0 = from_slice(&[0.0, 0.0]);
    let (step, replicas) = (1e-5, 40);
    let js: Vec<i32> = (3..=7).collect();
    let mut counts = vec![0usize; js.len()];
    for replica in 0..replicas {
        let opts = SimulationOptions { step, max_step: None, seed: 9, replica };
        let skel = simulate_skeleton(&disk, &x0, Until::LocalTime { r: 1.0, max_time: 50.0 }, opts, 0.0)?;
        for (c, &j) in counts.iter_mut().zip(&js) {
            *c += skel.count_at_least(0.5f64.powi(j), 1.0);
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&j, &c) in js.iter().zip(&counts) {
        let eps = 0.5f64.powi(j);
        let mean = c as f64 / replicas as f64;
        println!("eps = {eps:.5}  mean count {mean:>9.2}  eps*count {:.4}", eps * mean);
        xs.push(eps.ln());
        ys.push(mean.ln());
    }
    println!("log-log slope: {:.3}", fit_slope(&xs, &ys).unwrap_or(f64::NAN));
    Ok(())
}
