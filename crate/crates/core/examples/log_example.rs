//! The coefficient `μ(z) = (z/z̄)/(2 log|z| − 1)`: its Sobolev norm under grid
//! refinement, mollification, the log-derivative `g` with `∂φ = e^g` and the
//! `1/|z|` growth of `∂̄∂φ`.
//!
//! ```bash
//! cargo run --release --example log_example
//! ```

use beltrami_lab::coeff::{self, MollifierSpec};
use beltrami_lab::field::GridSpec;
use beltrami_lab::solver;

fn main() -> beltrami_lab::Result<()> {
    let r = 0.3;
    println!("W^(1,2) seminorm under refinement:");
    let mut prev = None;
    for n in [128, 256, 512] {
        let mu = coeff::make_log_example_coefficient(r, &GridSpec::new(n, 2.0)?)?;
        let (lp, grad) = coeff::sobolev_norms(&mu, 2.0)?;
        let ratio = prev.map(|p: f64| format!("{:.4}", grad / p)).unwrap_or_default();
        println!("  N={n:4}  ||mu||_2 = {lp:.5}  ||D mu||_2 = {grad:.5}  {ratio}");
        prev = Some(grad);
    }

    let grid = GridSpec::new(512, 2.0)?;
    let mu = coeff::make_log_example_coefficient(r, &grid)?;
    let smooth = coeff::mollify(&mu, MollifierSpec::new(32)?)?;
    println!("sup |mu| = {:.6}, after mollification {:.6}", mu.sup_bound(), smooth.sup_bound());

    let sol = solver::neumann_solve(&smooth, 1e-10, 500)?;
    let ld = solver::log_derivative_solve(&smooth, 1e-10, 500)?;
    let exp_g = ld.g.map(|_, g| g.exp());
    let mismatch = exp_g.sub(sol.dphi())?;
    let rel = mismatch.l2_norm_where(|_| true) / sol.dphi().l2_norm_where(|_| true);
    println!("||e^g - d phi|| / ||d phi|| = {rel:.3e}");

    let dd = solver::second_derivative(&sol, &ld.sigma)?;
    println!("ring averages of |dbar d phi| (expect ~ c/|z| away from the mollifier scale):");
    for t in [0.04, 0.08, 0.16] {
        let ring: Vec<f64> = (0..grid.len())
            .filter(|&i| (grid.point_at(i).norm() - t).abs() < grid.spacing())
            .map(|i| dd.samples()[i].norm())
            .collect();
        let avg = ring.iter().sum::<f64>() / ring.len() as f64;
        println!("  |z| = {t:.2}: {avg:9.4}   |z|·avg = {:.4}", t * avg);
    }
    Ok(())
}
