//! Numerical laboratory for the planar Beltrami equation `∂̄φ = μ ∂φ`.
//!
//! The crate is organised bottom-up:
//!
//! - [`field`]: periodic complex grids and the spectral operators `∂`, `∂̄`,
//!   the Cauchy transform `C` and the Beurling transform `B`.
//! - [`coeff`]: Beltrami coefficients (closed-form examples, mollification,
//!   Sobolev norms, the inverse-map coefficient, critical exponents).
//! - [`solver`]: principal solutions by Neumann iteration `h = μBh + μ`,
//!   log-derivatives, second derivatives, map evaluation/inversion and residuals.
//! - [`geometry`]: Cantor-type point clouds, the Garnett displacement map and
//!   transport of clouds through solved maps.
//! - [`measure`]: dyadic Hausdorff contents, box-counting dimension and the
//!   dimension-distortion bounds.
//! - [`cli`]: the experiment runner behind the `beltrami-lab` binary.
//!
//! ```no_run
//! use beltrami_lab::{coeff, field::GridSpec, solver};
//!
//! let grid = GridSpec::new(256, 2.0)?;
//! let mu = coeff::make_radial_stretch_coefficient(2.0, 1.0, &grid)?;
//! let sol = solver::neumann_solve(&mu, 1e-10, 200)?;
//! println!("{} iterations", sol.iterations());
//! # Ok::<(), beltrami_lab::Error>(())
//! ```

pub mod cli;
pub mod coeff;
mod error;
mod io_util;
pub mod field;
pub mod geometry;
pub mod measure;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
