//! How solved maps distort the dimension of the quarter-Cantor set, for a
//! Sobolev-class coefficient and for the rough radial stretch.
//!
//! ```bash
//! cargo run --release --example distortion
//! ```

use beltrami_lab::coeff::{self, MollifierSpec};
use beltrami_lab::field::GridSpec;
use beltrami_lab::geometry::{cantor_cloud, CantorSpec};
use beltrami_lab::measure::{distortion_experiment, geometric_scales};

fn main() -> beltrami_lab::Result<()> {
    let grid = GridSpec::new(512, 2.0)?;
    let set = cantor_cloud(&CantorSpec::quarter(6)?)?;
    let scales = geometric_scales(4.0, 1, 5);

    let smooth = coeff::mollify(&coeff::make_log_example_coefficient(0.3, &grid)?, MollifierSpec::new(32)?)?;
    let radial = |k| coeff::make_radial_stretch_coefficient(k, 0.8, &grid);
    let coefficients = [smooth, radial(1.5)?, radial(2.0)?, radial(3.0)?];

    println!("{:<36} {:>7} {:>8} {:>8} {:>8} {:>5}", "coefficient", "K", "dim E", "dim phiE", "bound", "pass");
    for mu in &coefficients {
        let rep = distortion_experiment(mu, &set, &scales, 1e-10, 500)?;
        println!(
            "{:<36} {:7.3} {:8.4} {:8.4} {:8.4} {:>5}",
            rep.coefficient, rep.ellipticity, rep.source.slope, rep.image.slope, rep.bound, rep.pass
        );
    }
    Ok(())
}
