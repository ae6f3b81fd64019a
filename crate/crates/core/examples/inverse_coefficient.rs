//! Coefficient of the inverse map `ν = −(μ ∂φ/conj(∂φ)) ∘ φ⁻¹` for the radial
//! stretch, compared with the closed form `((K−1)/(K+1)) w/w̄`.
//!
//! ```bash
//! cargo run --release --example inverse_coefficient
//! ```

use beltrami_lab::coeff::{inverse_coefficient, make_radial_stretch_coefficient};
use beltrami_lab::field::GridSpec;
use beltrami_lab::{solver, Complex64};

fn main() -> beltrami_lab::Result<()> {
    let k = 2.0;
    let grid = GridSpec::new(512, 2.0)?;
    let mu = make_radial_stretch_coefficient(k, 0.8, &grid)?;
    let sol = solver::neumann_solve(&mu, 1e-10, 500)?;
    let nu = inverse_coefficient(&mu, &sol)?;
    println!("sup |mu| = {:.12}, sup |nu| = {:.12}", mu.sup_bound(), nu.sup_bound());

    let expected = |w: Complex64| (k - 1.0) / (k + 1.0) * w / w.conj();
    println!("{:>5} {:>12}", "|w|", "max error");
    for band in [(0.1, 0.2), (0.2, 0.4), (0.4, 0.6), (0.6, 0.7)] {
        let err = (0..grid.len())
            .filter(|&i| (band.0..band.1).contains(&grid.point_at(i).norm()))
            .map(|i| (nu.field().samples()[i] - expected(grid.point_at(i))).norm())
            .fold(0.0, f64::max);
        println!("{:.1}-{:.1} {err:12.3e}", band.0, band.1);
    }
    Ok(())
}
