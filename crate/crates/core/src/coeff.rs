//! Beltrami coefficients: closed-form examples, mollification, Sobolev norms,
//! the coefficient of the inverse map and the critical integrability exponents.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::field::{self, spectral_derivative, ComplexField, GridSpec, Wirtinger};
use crate::solver::{self, PrincipalSolution};
use crate::{Error, Result};

const MODULE: &str = "coeff";

/// Closed-form evaluator for a coefficient, used for off-grid evaluation.
pub type Profile = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// Regularity class of a coefficient, used to pick the applicable distortion bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientClass {
    /// `μ ∈ W^{1,2}`: dimension is preserved.
    Sobolev12,
    /// Only `‖μ‖∞ < 1` is assumed.
    General,
}

/// A Beltrami coefficient on a grid, with its ellipticity data.
#[derive(Clone)]
pub struct BeltramiCoefficient {
    field: ComplexField,
    sup_bound: f64,
    ellipticity: f64,
    support_radius: f64,
    class: CoefficientClass,
    profile: Option<Profile>,
    label: String,
}

impl fmt::Debug for BeltramiCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BeltramiCoefficient")
            .field("label", &self.label)
            .field("grid", self.field.grid())
            .field("sup_bound", &self.sup_bound)
            .field("ellipticity", &self.ellipticity)
            .field("support_radius", &self.support_radius)
            .field("class", &self.class)
            .field("closed_form", &self.profile.is_some())
            .finish()
    }
}

impl BeltramiCoefficient {
    /// Wraps a field, checking that it vanishes outside `support_radius`, that
    /// `support_radius ≤ L/2` and that `max |μ| < 1`.
    pub fn from_field(field: ComplexField, support_radius: f64) -> Result<Self> {
        const OP: &str = "BeltramiCoefficient::from_field";
        let g = *field.grid();
        if !(support_radius >= 0.0 && support_radius <= 0.5 * g.half_extent() * (1.0 + 1e-12)) {
            return Err(Error::invalid(
                MODULE,
                OP,
                "support_radius",
                format!("need 0 <= R <= L/2 = {}, got {support_radius}", 0.5 * g.half_extent()),
            ));
        }
        if let Some(i) = field
            .samples()
            .iter()
            .enumerate()
            .position(|(i, v)| g.point_at(i).norm() > support_radius && *v != Complex64::new(0.0, 0.0))
        {
            return Err(Error::invalid(
                MODULE,
                OP,
                "field",
                format!("nonzero sample at {} outside |z| <= {support_radius}", g.point_at(i)),
            ));
        }
        let sup = field.max_abs();
        if sup >= 1.0 {
            return Err(Error::invalid(MODULE, OP, "field", format!("‖μ‖∞ = {sup} is not < 1")));
        }
        Ok(Self {
            field,
            sup_bound: sup,
            ellipticity: (1.0 + sup) / (1.0 - sup),
            support_radius,
            class: CoefficientClass::General,
            profile: None,
            label: "field".to_string(),
        })
    }

    /// Zeroes every sample outside `support_radius` and wraps the result.
    pub fn truncated(field: ComplexField, support_radius: f64) -> Result<Self> {
        let r = support_radius;
        let field = field.map(|z, v| if z.norm() <= r { v } else { Complex64::new(0.0, 0.0) });
        Self::from_field(field, r)
    }

    /// Builds a coefficient from a closed form, sampling it on `grid`.
    fn closed_form(
        grid: &GridSpec,
        support_radius: f64,
        profile: Profile,
        class: CoefficientClass,
        label: String,
    ) -> Result<Self> {
        let p = profile.clone();
        let field = ComplexField::from_fn(*grid, move |z| p(z))?;
        let mut mu = Self::truncated(field, support_radius)?;
        mu.profile = Some(profile);
        mu.class = class;
        mu.label = label;
        Ok(mu)
    }

    pub fn zero(grid: &GridSpec) -> Self {
        Self {
            field: ComplexField::zeros(*grid),
            sup_bound: 0.0,
            ellipticity: 1.0,
            support_radius: 0.0,
            class: CoefficientClass::Sobolev12,
            profile: Some(Arc::new(|_| Complex64::new(0.0, 0.0))),
            label: "zero".to_string(),
        }
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    /// `‖μ‖∞`, equal to the largest sample modulus.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// `K = (1 + ‖μ‖∞)/(1 − ‖μ‖∞)`.
    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn class(&self) -> CoefficientClass {
        self.class
    }

    pub fn with_class(mut self, class: CoefficientClass) -> Self {
        self.class = class;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn has_closed_form(&self) -> bool {
        self.profile.is_some()
    }

    /// Off-grid value: the closed form when known, bicubic interpolation otherwise.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        if z.norm() > self.support_radius {
            return Complex64::new(0.0, 0.0);
        }
        match &self.profile {
            Some(p) => p(z),
            None => self.field.sample(z).value,
        }
    }
}

/// `z/z̄` written as `z²/|z|²`, with the value 0 at the origin.
#[inline]
fn phase2(z: Complex64) -> Complex64 {
    let r2 = z.norm_sqr();
    if r2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        z * z / r2
    }
}

/// Coefficient of the radial stretch `z|z|^{1/K−1}`: `−(K−1)/(K+1)·z/z̄` on `0 < |z| ≤ R`.
pub fn make_radial_stretch_coefficient(k: f64, r: f64, grid: &GridSpec) -> Result<BeltramiCoefficient> {
    const OP: &str = "make_radial_stretch_coefficient";
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::invalid(MODULE, OP, "K", format!("need finite K >= 1, got {k}")));
    }
    check_radius(OP, r, r, grid)?;
    let a = (k - 1.0) / (k + 1.0);
    let profile: Profile = Arc::new(move |z: Complex64| {
        if z.norm() <= r {
            -a * phase2(z)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    BeltramiCoefficient::closed_form(
        grid,
        r,
        profile,
        CoefficientClass::General,
        format!("radial(K={k},R={r})"),
    )
}

fn check_radius(op: &'static str, r: f64, support: f64, grid: &GridSpec) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(MODULE, op, "R", format!("need R > 0, got {r}")));
    }
    if support > 0.5 * grid.half_extent() {
        return Err(Error::invalid(
            MODULE,
            op,
            "R",
            format!("support radius {support} exceeds L/2 = {}", 0.5 * grid.half_extent()),
        ));
    }
    Ok(())
}

/// Width of the taper band of the log example, relative to `R`.
pub const LOG_EXAMPLE_TAPER: f64 = 0.5;

fn smooth_step_down(x: f64) -> f64 {
    let e = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if x <= 0.0 {
        1.0
    } else if x >= 1.0 {
        0.0
    } else {
        e(1.0 - x) / (e(1.0 - x) + e(x))
    }
}

/// Radial profile `m(r)` of the log example including its taper, so that
/// `μ(z) = (z/z̄)·m(|z|)`.
fn log_example_modulus(r: f64, radius: f64) -> f64 {
    if r <= radius {
        if r == 0.0 {
            0.0
        } else {
            1.0 / (2.0 * r.ln() - 1.0)
        }
    } else {
        let s = (r - radius) / (LOG_EXAMPLE_TAPER * radius);
        let tau = smooth_step_down((s - 0.25) / 0.75);
        tau / (2.0 * radius.ln() - 1.0)
    }
}

/// The log example `μ(z) = (z/z̄)/(2 log|z| − 1)` on `0 < |z| ≤ R`.
///
/// Beyond `R` the coefficient keeps the modulus it has on `|z| = R` for a short
/// plateau and then decays smoothly to zero at `(1 + LOG_EXAMPLE_TAPER)·R`, which
/// is the support radius. A hard cut at `R` would put a jump into `μ` and take
/// it out of `W^{1,2}`.
pub fn make_log_example_coefficient(r: f64, grid: &GridSpec) -> Result<BeltramiCoefficient> {
    const OP: &str = "make_log_example_coefficient";
    if r >= 1.0 {
        return Err(Error::invalid(
            MODULE,
            OP,
            "R",
            format!("need R < 1 so that log|z| < 0 on the support, got {r}"),
        ));
    }
    let support = (1.0 + LOG_EXAMPLE_TAPER) * r;
    check_radius(OP, r, support, grid)?;
    let profile: Profile = Arc::new(move |z: Complex64| {
        let m = z.norm();
        if m > support {
            Complex64::new(0.0, 0.0)
        } else {
            phase2(z) * log_example_modulus(m, r)
        }
    });
    BeltramiCoefficient::closed_form(
        grid,
        support,
        profile,
        CoefficientClass::Sobolev12,
        format!("logexample(R={r})"),
    )
}

/// Mollifier `ψ_n(z) = n² ψ(nz)` with `ψ ∝ exp(−1/(1−|z|²))` on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MollifierSpec {
    pub index: u32,
}

impl MollifierSpec {
    pub fn new(index: u32) -> Result<Self> {
        if index == 0 {
            return Err(Error::invalid(MODULE, "MollifierSpec::new", "n", "index must be positive"));
        }
        Ok(Self { index })
    }

    /// Mollifier index with `1/n ≈ 4·spacing`, used before the log-derivative path.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let n = (1.0 / (4.0 * grid.spacing())).round().max(1.0) as u32;
        Self { index: n }
    }

    pub fn radius(&self) -> f64 {
        1.0 / self.index as f64
    }

    /// Kernel samples with origin at index `(0, 0)`, normalized to unit grid integral.
    pub fn kernel(&self, grid: &GridSpec) -> Vec<Complex64> {
        let n = grid.resolution();
        let h = grid.spacing();
        let idx = self.index as f64;
        let mut k: Vec<f64> = (0..n * n)
            .map(|i| {
                let (row, col) = (i / n, i % n);
                let wrap = |j: usize| if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                let z = Complex64::new(wrap(col) * h, wrap(row) * h) * idx;
                let r2 = z.norm_sqr();
                if r2 < 1.0 {
                    (-1.0 / (1.0 - r2)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = k.iter().sum::<f64>() * grid.cell_area();
        k.iter_mut().for_each(|v| *v /= total);
        k.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    }
}

/// `μ_n = μ ∗ ψ_n`, truncated to exact zero outside `R + 1/n`.
pub fn mollify(mu: &BeltramiCoefficient, spec: MollifierSpec) -> Result<BeltramiCoefficient> {
    const OP: &str = "mollify";
    let g = *mu.grid();
    let support = mu.support_radius + spec.radius();
    if support > 0.5 * g.half_extent() {
        return Err(Error::invalid(
            MODULE,
            OP,
            "n",
            format!(
                "support {} + 1/{} exceeds L/2 = {}",
                mu.support_radius,
                spec.index,
                0.5 * g.half_extent()
            ),
        ));
    }
    let smoothed = field::spectral::circular_convolve(mu.field(), &spec.kernel(&g));
    let out = BeltramiCoefficient::truncated(smoothed, support)?;
    Ok(out
        .with_class(mu.class)
        .with_label(format!("{}|mollify(n={})", mu.label, spec.index)))
}

/// `‖Df‖_p` with `|Df|² = |∂f|² + |∂̄f|²`.
pub fn gradient_norm(f: &ComplexField, p: f64) -> Result<f64> {
    check_sobolev_p("gradient_norm", p)?;
    let a = spectral_derivative(f, Wirtinger::Dz)?;
    let b = spectral_derivative(f, Wirtinger::Dzbar)?;
    let mag = a.zip_with(&b, |x, y| Complex64::new((x.norm_sqr() + y.norm_sqr()).sqrt(), 0.0))?;
    field::lp_norm(&mag, p)
}

/// Full `W^{1,p}` norm `(‖f‖_p^p + ‖Df‖_p^p)^{1/p}`.
pub fn w1p_norm(f: &ComplexField, p: f64) -> Result<f64> {
    let lp = field::lp_norm(f, p)?;
    let grad = gradient_norm(f, p)?;
    Ok((lp.powf(p) + grad.powf(p)).powf(1.0 / p))
}

fn check_sobolev_p(op: &'static str, p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(MODULE, op, "p", format!("need 1 < p < ∞, got {p}")));
    }
    Ok(())
}

/// `‖Dμ‖_p` from spectral derivatives.
pub fn sobolev_norm(mu: &BeltramiCoefficient, p: f64) -> Result<f64> {
    check_sobolev_p("sobolev_norm", p)?;
    gradient_norm(mu.field(), p)
}

/// `(‖μ‖_p, ‖Dμ‖_p)`.
pub fn sobolev_norms(mu: &BeltramiCoefficient, p: f64) -> Result<(f64, f64)> {
    check_sobolev_p("sobolev_norms", p)?;
    Ok((field::lp_norm(mu.field(), p)?, gradient_norm(mu.field(), p)?))
}

/// Coefficient `ν = −(μ ∂φ/conj(∂φ))∘φ⁻¹` of the inverse map, sampled on the grid.
///
/// `ν` is computed for grid points inside the disk enclosing `φ(supp μ)` (plus two
/// spacings); it is zero elsewhere.
pub fn inverse_coefficient(
    mu: &BeltramiCoefficient,
    sol: &PrincipalSolution,
) -> Result<BeltramiCoefficient> {
    const OP: &str = "inverse_coefficient";
    let g = *mu.grid();
    if g != *sol.mu().grid() {
        return Err(Error::GridMismatch { module: MODULE, op: OP });
    }
    if mu.support_radius == 0.0 || mu.sup_bound == 0.0 {
        return Ok(BeltramiCoefficient::zero(&g).with_class(mu.class));
    }
    let h = g.spacing();
    let phi = sol.phi();
    let image_radius = (0..g.len())
        .filter(|&i| g.point_at(i).norm() <= mu.support_radius + h)
        .map(|i| phi.samples()[i].norm())
        .fold(0.0, f64::max)
        + 2.0 * h;
    let targets: Vec<usize> = (0..g.len())
        .filter(|&i| g.point_at(i).norm() <= image_radius)
        .collect();
    let tol = 1e-12 * g.half_extent();
    let values: Vec<(usize, Complex64)> = targets
        .par_iter()
        .map(|&i| {
            let w = g.point_at(i);
            let z = solver::invert_point(sol, w, tol).map_err(|e| match e {
                Error::InversionFailed { .. } => Error::InversionFailed {
                    module: MODULE,
                    op: OP,
                    index: i,
                    target: w,
                },
                other => other,
            })?;
            let m = mu.evaluate(z);
            if m == Complex64::new(0.0, 0.0) {
                return Ok((i, m));
            }
            let d = sol.dphi().sample(z).value;
            if d.norm() < 1e-12 {
                return Err(Error::DegenerateJacobian {
                    module: MODULE,
                    op: OP,
                    point: z,
                    det: d.norm_sqr(),
                });
            }
            Ok((i, -m * d / d.conj()))
        })
        .collect::<Result<_>>()?;
    let mut samples = vec![Complex64::new(0.0, 0.0); g.len()];
    let mut support: f64 = 0.0;
    for (i, v) in values {
        if v != Complex64::new(0.0, 0.0) {
            support = support.max(g.point_at(i).norm());
        }
        samples[i] = v;
    }
    let field = ComplexField::from_samples(g, samples)?;
    let support = support.min(0.5 * g.half_extent());
    Ok(BeltramiCoefficient::truncated(field, support)?
        .with_class(mu.class)
        .with_label(format!("inverse({})", mu.label)))
}

/// Critical exponents attached to `μ ∈ W^{1,p}` with ellipticity `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentReport {
    pub p: f64,
    pub k: f64,
    /// `1/q₀ = 1/p + (K−1)/(2K)`.
    pub q0: f64,
    /// Conjugate exponent `q₀/(q₀−1)`; `None` when `q₀ ≤ 1`.
    pub p0: Option<f64>,
    /// Supremum `2p/(2K − (K−1)p)` of the Sobolev exponents of the inverse
    /// coefficient; `None` when the denominator is not positive or `p ≤ 2K/(K+1)`.
    pub r_sup: Option<f64>,
}

pub fn critical_exponents(p: f64, k: f64) -> Result<ExponentReport> {
    const OP: &str = "critical_exponents";
    if !(k.is_finite() && k >= 1.0) {
        return Err(Error::invalid(MODULE, OP, "K", format!("need K >= 1, got {k}")));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::invalid(MODULE, OP, "p", format!("need finite p > 1, got {p}")));
    }
    let q0 = 1.0 / (1.0 / p + (k - 1.0) / (2.0 * k));
    let p0 = (q0 > 1.0).then(|| q0 / (q0 - 1.0));
    let den = 2.0 * k - (k - 1.0) * p;
    let r_sup = (den > 0.0 && p > 2.0 * k / (k + 1.0)).then(|| 2.0 * p / den);
    Ok(ExponentReport { p, k, q0, p0, r_sup })
}
