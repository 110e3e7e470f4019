//! Oscillating paths on a parabola whose total variation grows while the flow
//! collapses to zero, so the limit is not continuous in the path.

use reflected_flow::functional::counterexample_parabola;
use reflected_flow::Orientation;

fn main() -> reflected_flow::Result<()> {
    let js: Vec<u32> = (4..=16).step_by(2).collect();
    for scale in [1.0, 0.25] {
        let table = counterexample_parabola(&js, scale, Orientation::AlongGradient)?;
        println!("parabola({scale}), orientation {}", table.orientation);
        println!("{:>4} {:>8} {:>12} {:>12} {:>14}", "j", "pairs", "variation", "contraction", "|v(1)|");
        for r in &table.rows {
            println!("{:>4} {:>8} {:>12.4} {:>12.6} {:>14.6e}", r.j, r.pairs, r.total_variation, r.contraction, r.norm);
        }
        println!("limit |v| = {:.6}, slope of ln|v| in j = {:?}\n", table.limit_norm, table.slope);
    }
    Ok(())
}
