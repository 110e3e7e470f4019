//! Builds the excursion product A_{r,ε} on a dyadic ε-ladder for one reflected
//! path and reports the gaps between rungs and the rank of the limit.

use reflected_flow::functional::{epsilon_ladder, LadderOptions};
use reflected_flow::linalg::from_slice;
use reflected_flow::Hypersurface;

fn main() -> reflected_flow::Result<()> {
    let disk = Hypersurface::ball(2, 1.0);
    let x0 = from_slice(&[0.0, 0.0]);
    let opts = LadderOptions::new(1.0, 3, 10, 1e-4);
    let report = epsilon_ladder(&disk, &x0, &opts, 5, 0)?;
    println!("{:>4} {:>10} {:>8} {:>12} {:>14}", "j", "eps", "m_j", "gap", "quadratic sum");
    for r in &report.rungs {
        let gap = r.gap.map_or("-".to_string(), |g| format!("{g:.3e}"));
        println!("{:>4} {:>10.5} {:>8} {:>12} {:>14.4e}", r.j, r.eps, r.m_j, gap, r.quadratic_sum);
    }
    println!("slope of log gaps: {:?}", report.slope);
    let rank = &report.rank;
    println!("limit singular values {:?}, numerical rank {}, kernel angle {:.2e}", rank.singular_values, rank.rank, rank.kernel_angle);
    println!("A =\n{}", report.limit());
    Ok(())
}
