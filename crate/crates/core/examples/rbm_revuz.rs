//! Mean boundary local time of reflected Brownian motion in the unit disk.
//! The expected value at t = 1 is |∂D| / (2|D|) = 1.

use rayon::prelude::*;
use reflected_flow::rbm::{simulate_local_time, uniform_start, SimulationOptions};
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let disk = Hypersurface::ball(2, 1.0);
    let (seed, replicas, step) = (2024, 2000, 1e-3);
    let samples = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let x = uniform_start(&disk, seed, replica)?;
            simulate_local_time(&disk, &x, 1.0, SimulationOptions { step, max_step: None, seed, replica })
        })
        .collect::<reflected_flow::Result<Vec<_>>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    println!("replicas {replicas}, step {step}: mean L_1 = {mean:.4} ± {:.4}", (var / n).sqrt());
    Ok(())
}
