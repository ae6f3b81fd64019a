//! The Garnett displacement of the quarter-Cantor set: level-wise translations of
//! the NE and SW children toward the NW-SE diagonal.
//!
//! ```bash
//! cargo run --release --example garnett -- 6
//! ```

use beltrami_lab::geometry::{cantor_cloud, default_garnett_displacements, garnett_map, CantorSpec};
use beltrami_lab::measure::{box_dimension, geometric_scales};

fn main() -> beltrami_lab::Result<()> {
    let generation = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(6);
    let spec = CantorSpec::quarter(generation)?;
    let d = default_garnett_displacements(&spec);
    for (k, dk) in d.iter().enumerate() {
        println!("level {}: d' = {dk:.6}", k + 1);
    }
    let src = cantor_cloud(&spec)?;
    let img = garnett_map(&spec, &d)?;
    let moved = src.points().iter().zip(img.points()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("max displacement {moved:.6}, sum of d' {:.6}", d.iter().sum::<f64>());

    let scales = geometric_scales(4.0, 1, 5);
    println!(
        "box dimension: source {:.4}, image {:.4}",
        box_dimension(&src, &scales)?.slope,
        box_dimension(&img, &scales)?.slope
    );

    let halving: Vec<f64> = (1..=generation).map(|k| 0.1 * 0.5f64.powi(k as i32)).collect();
    match garnett_map(&spec, &halving) {
        Ok(_) => println!("halving schedule accepted"),
        Err(e) => println!("halving schedule rejected: {e}"),
    }
    Ok(())
}
