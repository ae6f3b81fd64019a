//! Solves the Beltrami equation for the radial stretch coefficient and compares
//! the result with the closed-form map `R^{1-1/K} z|z|^{1/K-1}` inside the disk.
//!
//! ```bash
//! cargo run --release --example radial_stretch -- 2.0 0.8 512
//! ```

use beltrami_lab::coeff::make_radial_stretch_coefficient;
use beltrami_lab::field::GridSpec;
use beltrami_lab::geometry::PointCloud;
use beltrami_lab::{solver, Complex64};

fn main() -> beltrami_lab::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(2.0);
    let r = args.get(1).copied().unwrap_or(0.8);
    let n = args.get(2).map(|&v| v as usize).unwrap_or(512);

    let grid = GridSpec::new(n, 2.0)?;
    let mu = make_radial_stretch_coefficient(k, r, &grid)?;
    let sol = solver::neumann_solve(&mu, 1e-10, 500)?;
    println!("{}: K = {:.4}, {} iterations", mu.label(), mu.ellipticity(), sol.iterations());
    for (i, inc) in sol.trace().iter().enumerate().take(8) {
        println!("  iteration {:2}: increment {inc:.3e}", i + 1);
    }

    let exact = |z: Complex64| {
        if z.norm() <= r {
            r.powf(1.0 - 1.0 / k) * z * z.norm().powf(1.0 / k - 1.0)
        } else {
            z
        }
    };
    let radii = [0.05, 0.1, 0.2, 0.4, 0.6, 0.79, 0.9];
    let pts = PointCloud::new(radii.iter().map(|&t| Complex64::from_polar(t, 0.3)).collect(), "probe")?;
    let img = solver::evaluate_map(&sol, &pts)?;
    println!("{:>6} {:>12} {:>12} {:>10}", "|z|", "|phi(z)|", "closed form", "error");
    for (z, w) in pts.points().iter().zip(img.points()) {
        println!("{:6.3} {:12.6} {:12.6} {:10.2e}", z.norm(), w.norm(), exact(*z).norm(), (w - exact(*z)).norm());
    }
    println!("median residual |dbar phi - mu d phi| / |d phi| = {:.3e}", sol.residual());
    Ok(())
}
