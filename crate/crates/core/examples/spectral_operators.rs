//! The periodic operators behind the solver: Wirtinger derivatives, the Cauchy
//! transform and the Beurling transform, checked on a Gaussian.
//!
//! ```bash
//! cargo run --release --example spectral_operators
//! ```

use beltrami_lab::field::{
    beurling_transform, cauchy_transform, lp_norm, spectral_derivative, ComplexField, GridSpec, Wirtinger,
};
use beltrami_lab::Complex64;

fn main() -> beltrami_lab::Result<()> {
    let grid = GridSpec::new(256, 2.0)?;
    let gauss = ComplexField::from_fn(grid, |z| Complex64::new((-z.norm_sqr() / 0.05).exp(), 0.0))?;

    // ∂̄ of a Gaussian is −z e^{−|z|²/a}/a.
    let dbar = spectral_derivative(&gauss, Wirtinger::Dzbar)?;
    let exact = ComplexField::from_fn(grid, |z| -z / 0.05 * (-z.norm_sqr() / 0.05).exp())?;
    println!("max |dbar f - exact|      = {:.3e}", dbar.sub(&exact)?.max_abs());

    let h = dbar;
    let bh = beurling_transform(&h);
    println!("||Bh||_2 / ||h||_2        = {:.15}", lp_norm(&bh, 2.0)? / lp_norm(&h, 2.0)?);

    let d = spectral_derivative(&gauss, Wirtinger::Dz)?;
    println!("max |B(dbar f) - d f|     = {:.3e}", bh.sub(&d)?.max_abs());

    let c = cauchy_transform(&gauss);
    let back = spectral_derivative(&c, Wirtinger::Dzbar)?;
    let centered = gauss.shift(-gauss.mean());
    println!("max |dbar C f - (f - <f>)| = {:.3e}", back.sub(&centered)?.max_abs());
    Ok(())
}
