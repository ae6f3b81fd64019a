//! Periodic complex grids on `[-L, L)²` and the spectral operators built on them.
//!
//! Sample `(row, col)` sits at `z = (-L + col·h) + i(-L + row·h)` with `h = 2L/N`.
//! All operators act on the periodic torus; the zero mode of `C` and `B` is set
//! to zero so their outputs have mean zero.

mod interp;
pub mod io;
pub(crate) mod spectral;

use num_complex::Complex64;

use crate::{Error, Result};

pub use interp::Sample;
pub use spectral::{
    beurling_transform, cauchy_transform, spectral_derivative, Wirtinger,
};

const MODULE: &str = "field";

/// Resolution and extent of the periodic square `[-L, L)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    half_extent: f64,
}

impl GridSpec {
    pub const MIN_RESOLUTION: usize = 16;
    pub const MAX_RESOLUTION: usize = 1 << 14;

    pub fn new(n: usize, half_extent: f64) -> Result<Self> {
        if n < Self::MIN_RESOLUTION || n % 2 != 0 || n > Self::MAX_RESOLUTION {
            return Err(Error::invalid(
                MODULE,
                "GridSpec::new",
                "N",
                format!("resolution must be even and in [16, {}], got {n}", Self::MAX_RESOLUTION),
            ));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::invalid(
                MODULE,
                "GridSpec::new",
                "L",
                format!("half extent must be positive and finite, got {half_extent}"),
            ));
        }
        Ok(Self { n, half_extent })
    }

    #[inline]
    pub fn resolution(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.n as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    /// Coordinate of sample `(row, col)`.
    #[inline]
    pub fn point(&self, row: usize, col: usize) -> Complex64 {
        let h = self.spacing();
        Complex64::new(
            -self.half_extent + col as f64 * h,
            -self.half_extent + row as f64 * h,
        )
    }

    /// Coordinate of the sample with flat row-major index `idx`.
    #[inline]
    pub fn point_at(&self, idx: usize) -> Complex64 {
        self.point(idx / self.n, idx % self.n)
    }

    /// Angular wavenumber of lattice index `j` (symmetric integer lattice scaled by π/L).
    #[inline]
    pub fn wavenumber(&self, j: usize) -> f64 {
        let k = if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        };
        k as f64 * std::f64::consts::PI / self.half_extent
    }

    /// Whether `z` lies in the closed square `[-L/2, L/2]²`, the region where the torus
    /// model is trusted.
    #[inline]
    pub fn in_safe_region(&self, z: Complex64) -> bool {
        let s = 0.5 * self.half_extent;
        z.re.abs() <= s && z.im.abs() <= s
    }
}

/// Complex samples on a [`GridSpec`], row-major. Always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_samples(grid: GridSpec, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::invalid(
                MODULE,
                "ComplexField::from_samples",
                "samples",
                format!("expected {} samples, got {}", grid.len(), samples.len()),
            ));
        }
        if let Some(i) = samples.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite {
                module: MODULE,
                op: "ComplexField::from_samples",
                param: format!("samples[{i}]"),
            });
        }
        Ok(Self { grid, samples })
    }

    /// Builds a field by evaluating `f` at every sample point. Non-finite values are
    /// rejected.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        let samples = (0..grid.len()).map(|i| f(grid.point_at(i))).collect();
        Self::from_samples(grid, samples)
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        Self {
            grid,
            samples: vec![value; grid.len()],
        }
    }

    /// Internal constructor for results of finite arithmetic on finite fields.
    pub(crate) fn from_raw(grid: GridSpec, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, samples }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.samples[row * self.grid.n + col]
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() / self.samples.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Pointwise map with access to the sample coordinate.
    pub fn map(&self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.point_at(i), v))
            .collect();
        Self::from_raw(self.grid, samples)
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(
        &self,
        other: &ComplexField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.ensure_same_grid(other, "ComplexField::zip_with")?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_raw(self.grid, samples))
    }

    pub fn add(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ComplexField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(self.grid, self.samples.iter().map(|&v| v * c).collect())
    }

    pub fn shift(&self, c: Complex64) -> Self {
        Self::from_raw(self.grid, self.samples.iter().map(|&v| v + c).collect())
    }

    /// Discrete L² norm `(Σ|f|² h²)^{1/2}` over the samples selected by `keep`.
    pub fn l2_norm_where(&self, keep: impl Fn(Complex64) -> bool) -> f64 {
        let s: f64 = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(self.grid.point_at(*i)))
            .map(|(_, v)| v.norm_sqr())
            .sum();
        (s * self.grid.cell_area()).sqrt()
    }

    /// Riemann-sum integral `Σ f h²`.
    pub fn integral(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.grid.cell_area()
    }

    /// Bicubic (Catmull-Rom) periodic interpolation with its exact gradient.
    pub fn sample(&self, z: Complex64) -> Sample {
        interp::catmull_rom(self, z)
    }

    pub(crate) fn ensure_same_grid(&self, other: &ComplexField, op: &'static str) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch { module: MODULE, op });
        }
        Ok(())
    }

    pub(crate) fn ensure_finite(&self, op: &'static str, param: &str) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFinite {
                module: MODULE,
                op,
                param: param.to_string(),
            });
        }
        Ok(())
    }
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &ComplexField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(MODULE, "lp_norm", "p", format!("need p >= 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let sum: f64 = if p == 2.0 {
        f.samples().iter().map(|v| v.norm_sqr()).sum()
    } else {
        f.samples().iter().map(|v| v.norm().powf(p)).sum()
    };
    Ok((sum * f.grid().cell_area()).powf(1.0 / p))
}
