//! Box-counting fits on sets of known dimension.
//!
//! ```bash
//! cargo run --release --example dimension_calibration
//! ```

use beltrami_lab::geometry::{cantor_cloud, segment_cloud, similarity_dimension, square_cloud, CantorSpec};
use beltrami_lab::measure::{box_dimension, dyadic_content, geometric_scales, measure_function_content, MeasureFunction};

fn main() -> beltrami_lab::Result<()> {
    let seg = box_dimension(&segment_cloud(8192)?, &geometric_scales(2.0, 3, 9))?;
    println!("segment         slope {:.4}  r2 {:.5}", seg.slope, seg.r_squared);
    let sq = box_dimension(&square_cloud(512 * 512)?, &geometric_scales(2.0, 2, 8))?;
    println!("square          slope {:.4}  r2 {:.5}", sq.slope, sq.r_squared);

    for rho in [0.25, 1.0 / 3.0, 0.4] {
        let spec = CantorSpec::new(6, rho)?;
        let fit = box_dimension(&cantor_cloud(&spec)?, &geometric_scales(1.0 / rho, 1, 5))?;
        println!(
            "cantor rho={rho:.3} slope {:.4}  similarity dimension {:.4}",
            fit.slope,
            similarity_dimension(&spec)
        );
        for (delta, count) in &fit.counts {
            println!("    delta {delta:.3e}  boxes {count}");
        }
    }

    let quarter = cantor_cloud(&CantorSpec::quarter(6)?)?;
    println!("quarter-Cantor contents:");
    for k in 1..=6 {
        let delta = 0.25f64.powi(k);
        let t1 = dyadic_content(&quarter, 1.0, delta)?.content_t;
        let damped = measure_function_content(&quarter, |s| MeasureFunction::LogDamped.eval(s), delta)?;
        println!("    delta 4^-{k}: t=1 content {t1:.5}  s/log(1/s) content {damped:.5}");
    }
    Ok(())
}
