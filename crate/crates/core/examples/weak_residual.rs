//! Distributional form of the equation: the pairing of the computed map with a
//! smooth bump shrinks as the grid is refined.
//!
//! ```bash
//! cargo run --release --example weak_residual
//! ```

use beltrami_lab::coeff::{self, MollifierSpec};
use beltrami_lab::field::GridSpec;
use beltrami_lab::{solver, Complex64};

fn main() -> beltrami_lab::Result<()> {
    let mut prev: Option<f64> = None;
    for n in [128, 256, 512, 1024] {
        let grid = GridSpec::new(n, 2.0)?;
        let mu = coeff::make_log_example_coefficient((-1.0f64).exp(), &grid)?;
        let mu = coeff::mollify(&mu, MollifierSpec::new(32)?)?;
        let sol = solver::neumann_solve(&mu, 1e-12, 500)?;
        let test = solver::bump_test_function(&grid, Complex64::new(0.3, 0.1), 0.5)?;
        let w = solver::weak_residual(&sol.phi(), &mu, &test)?.norm();
        let strong = solver::equation_residual(sol.dphi(), &sol.dzbar_phi(), &mu)?;
        let factor = prev.map(|p| format!("x{:.1}", p / w)).unwrap_or_default();
        println!("N={n:5}  |pairing| {w:.3e} {factor:>7}  strong residual {strong:.3e}");
        prev = Some(w);
    }
    Ok(())
}
