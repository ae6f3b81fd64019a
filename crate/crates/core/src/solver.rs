//! Principal solutions `φ(z) = z + C h(z)` of `∂̄φ = μ ∂φ` by Neumann iteration
//! of `h = μ B h + μ`, together with the log-derivative `g` (`∂φ = e^g`), the
//! second derivative `∂̄∂φ`, evaluation and inversion of `φ`, and residuals.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeff::BeltramiCoefficient;
use crate::field::{
    self, beurling_transform, cauchy_transform, spectral_derivative, ComplexField, GridSpec,
    Sample, Wirtinger,
};
use crate::geometry::PointCloud;
use crate::io_util::{atomic_write, fmt17};
use crate::{Error, Result};

const MODULE: &str = "solver";

/// Newton steps allowed per point in [`invert_map`].
pub const MAX_NEWTON_STEPS: usize = 50;

/// A solved principal map.
#[derive(Debug, Clone)]
pub struct PrincipalSolution {
    mu: BeltramiCoefficient,
    h: ComplexField,
    dphi: ComplexField,
    displacement: ComplexField,
    log_deriv: Option<ComplexField>,
    trace: Vec<f64>,
    tol: f64,
}

impl PrincipalSolution {
    pub fn mu(&self) -> &BeltramiCoefficient {
        &self.mu
    }

    pub fn grid(&self) -> &GridSpec {
        self.mu.grid()
    }

    /// Fixed point of `h = μBh + μ`.
    pub fn h(&self) -> &ComplexField {
        &self.h
    }

    /// `∂φ = 1 + Bh`.
    pub fn dphi(&self) -> &ComplexField {
        &self.dphi
    }

    /// `∂̄φ = ∂̄(Ch) = h − mean(h)`.
    pub fn dzbar_phi(&self) -> ComplexField {
        self.h.shift(-self.h.mean())
    }

    /// `Ch`, so that `φ(z) = z + displacement(z)`.
    pub fn displacement(&self) -> &ComplexField {
        &self.displacement
    }

    /// On-grid values of `φ`.
    pub fn phi(&self) -> ComplexField {
        self.displacement.map(|z, d| z + d)
    }

    pub fn log_derivative(&self) -> Option<&ComplexField> {
        self.log_deriv.as_ref()
    }

    pub fn with_log_derivative(mut self, g: ComplexField) -> Result<Self> {
        self.h.ensure_same_grid(&g, "PrincipalSolution::with_log_derivative")?;
        self.log_deriv = Some(g);
        Ok(self)
    }

    /// Per-iteration L² increments `‖h⁽ᵏ⁺¹⁾ − h⁽ᵏ⁾‖₂`.
    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `J = |∂φ|² − |∂̄φ|²`.
    pub fn jacobian(&self) -> ComplexField {
        let dbar = self.dzbar_phi();
        self.dphi
            .zip_with(&dbar, |a, b| Complex64::new(a.norm_sqr() - b.norm_sqr(), 0.0))
            .expect("same grid")
    }

    /// Strong residual of the solved equation over `|z| ≤ L/2`.
    pub fn residual(&self) -> f64 {
        equation_residual(&self.dphi, &self.dzbar_phi(), &self.mu).unwrap_or(f64::NAN)
    }

    /// `φ` and its gradient at an off-grid point, from the interpolated displacement.
    pub fn sample(&self, z: Complex64) -> Sample {
        let d = self.displacement.sample(z);
        Sample {
            value: z + d.value,
            dx: d.dx + 1.0,
            dy: d.dy + Complex64::i(),
        }
    }

    /// Writes `h.qcbf`, `dphi.qcbf`, `displacement.qcbf` and `meta.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, f) in [("h", &self.h), ("dphi", &self.dphi), ("displacement", &self.displacement)] {
            atomic_write(&dir.join(format!("{name}.qcbf")), |w| field::io::write_qcbf1(f, w))?;
        }
        let meta = self.metadata();
        atomic_write(&dir.join("meta.txt"), |w| {
            use std::io::Write;
            for (k, v) in &meta {
                writeln!(w, "{k}={v}")?;
            }
            Ok(())
        })
    }

    /// The `key=value` sidecar contents.
    pub fn metadata(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("coefficient", self.mu.label().to_string());
        m.insert("K", fmt17(self.mu.ellipticity()));
        m.insert("sup_bound", fmt17(self.mu.sup_bound()));
        m.insert("tol", fmt17(self.tol));
        m.insert("iterations", self.iterations().to_string());
        m.insert("residual", fmt17(self.residual()));
        m.insert("N", self.grid().resolution().to_string());
        m.insert("L", fmt17(self.grid().half_extent()));
        m
    }
}

/// Reads a `key=value` sidecar written by [`PrincipalSolution::save`].
pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Format {
                    module: MODULE,
                    op: "read_metadata",
                    reason: format!("line without '=': {l}"),
                })
        })
        .collect()
}

fn check_solve_args(op: &'static str, mu: &BeltramiCoefficient, tol: f64, max_iter: usize) -> Result<()> {
    if mu.sup_bound() >= 1.0 {
        return Err(Error::invalid(MODULE, op, "mu", format!("‖μ‖∞ = {} is not < 1", mu.sup_bound())));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(MODULE, op, "tol", format!("need tol > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::invalid(MODULE, op, "max_iter", "must be at least 1"));
    }
    Ok(())
}

/// Fixed-point iteration `x ← μ·Bx + rhs` from `x⁽⁰⁾ = rhs`, stopping once the L²
/// increment drops to `tol`. Contracts by `‖μ‖∞` per step since `B` is an isometry.
fn neumann_iterate(
    op: &'static str,
    mu: &ComplexField,
    rhs: &ComplexField,
    tol: f64,
    max_iter: usize,
) -> Result<(ComplexField, Vec<f64>)> {
    let mut x = rhs.clone();
    let mut trace = Vec::new();
    for _ in 0..max_iter {
        let bx = beurling_transform(&x);
        let next = mu.zip_with(&bx, |m, b| m * b)?.add(rhs)?;
        let inc = field::lp_norm(&next.sub(&x)?, 2.0)?;
        trace.push(inc);
        x = next;
        if !inc.is_finite() {
            break;
        }
        if inc <= tol {
            return Ok((x, trace));
        }
    }
    Err(Error::NonConvergence { op, trace })
}

/// Principal solution for `μ` by Neumann iteration.
pub fn neumann_solve(mu: &BeltramiCoefficient, tol: f64, max_iter: usize) -> Result<PrincipalSolution> {
    check_solve_args("neumann_solve", mu, tol, max_iter)?;
    let (h, trace) = neumann_iterate("neumann_solve", mu.field(), mu.field(), tol, max_iter)?;
    let dphi = beurling_transform(&h).shift(Complex64::new(1.0, 0.0));
    let displacement = cauchy_transform(&h);
    Ok(PrincipalSolution {
        mu: mu.clone(),
        h,
        dphi,
        displacement,
        log_deriv: None,
        trace,
        tol,
    })
}

/// Output of [`log_derivative_solve`].
#[derive(Debug, Clone)]
pub struct LogDerivative {
    /// `g = C σ`, with `∂φ = e^g`.
    pub g: ComplexField,
    /// `σ = (I − μB)⁻¹(∂μ) = ∂̄g`.
    pub sigma: ComplexField,
    pub trace: Vec<f64>,
    /// `‖∂̄g − μ∂g − ∂μ‖₂`.
    pub residual: f64,
}

/// Solves `σ = μBσ + ∂μ` and returns `g = Cσ`, the solution of `∂̄g = μ∂g + ∂μ`.
pub fn log_derivative_solve(mu: &BeltramiCoefficient, tol: f64, max_iter: usize) -> Result<LogDerivative> {
    check_solve_args("log_derivative_solve", mu, tol, max_iter)?;
    let dmu = spectral_derivative(mu.field(), Wirtinger::Dz)?;
    let (sigma, trace) = neumann_iterate("log_derivative_solve", mu.field(), &dmu, tol, max_iter)?;
    let g = cauchy_transform(&sigma);
    let dbar_g = sigma.shift(-sigma.mean());
    let dg = beurling_transform(&sigma);
    let res = dbar_g
        .sub(&mu.field().mul(&dg)?)?
        .sub(&dmu)?;
    let residual = field::lp_norm(&res, 2.0)?;
    Ok(LogDerivative { g, sigma, trace, residual })
}

/// `∂̄∂φ = ∂φ · σ`.
pub fn second_derivative(sol: &PrincipalSolution, sigma: &ComplexField) -> Result<ComplexField> {
    sol.dphi.mul(sigma).map_err(|_| Error::GridMismatch {
        module: MODULE,
        op: "second_derivative",
    })
}

fn check_safe(op: &'static str, grid: &GridSpec, cloud: &PointCloud) -> Result<()> {
    if let Some((i, z)) = cloud
        .points()
        .iter()
        .enumerate()
        .find(|(_, z)| !grid.in_safe_region(**z))
    {
        return Err(Error::invalid(
            MODULE,
            op,
            format!("points[{i}]"),
            format!("{z} lies outside the safe region [-L/2, L/2]²"),
        ));
    }
    Ok(())
}

/// `φ(z) = z + displacement(z)` at every point, interpolated bicubically.
pub fn evaluate_map(sol: &PrincipalSolution, points: &PointCloud) -> Result<PointCloud> {
    check_safe("evaluate_map", sol.grid(), points)?;
    let out = points.points().par_iter().map(|&z| sol.sample(z).value).collect();
    PointCloud::new(out, format!("phi[{}]({})", sol.mu.label(), points.label()))
}

/// Solves `φ(z) = w` by damped Newton from `z₀ = w`, falling back to the nearest
/// grid sample if Newton stalls.
pub(crate) fn invert_point(sol: &PrincipalSolution, w: Complex64, tol: f64) -> Result<Complex64> {
    let failed = || Error::InversionFailed {
        module: MODULE,
        op: "invert_map",
        index: 0,
        target: w,
    };
    match newton(sol, w, w, tol)? {
        Some(z) => Ok(z),
        None => {
            let start = nearest_grid_preimage(sol, w);
            newton(sol, w, start, tol)?.ok_or_else(failed)
        }
    }
}

fn newton(sol: &PrincipalSolution, w: Complex64, start: Complex64, tol: f64) -> Result<Option<Complex64>> {
    let g = sol.grid();
    let mut z = start;
    let mut s = sol.sample(z);
    let mut f = s.value - w;
    for _ in 0..MAX_NEWTON_STEPS {
        if f.norm() <= tol {
            return Ok(g.in_safe_region(z).then_some(z));
        }
        let det = s.dx.re * s.dy.im - s.dy.re * s.dx.im;
        if det < 1e-12 {
            return Err(Error::DegenerateJacobian {
                module: MODULE,
                op: "invert_map",
                point: z,
                det,
            });
        }
        // Solve [[dx.re, dy.re], [dx.im, dy.im]] Δ = −F.
        let step = Complex64::new(
            (-f.re * s.dy.im + f.im * s.dy.re) / det,
            (-s.dx.re * f.im + s.dx.im * f.re) / det,
        );
        let mut t = 1.0;
        loop {
            let cand = z + step * t;
            let cs = sol.sample(cand);
            let cf = cs.value - w;
            if cf.norm() < f.norm() || t < 1.0 / 64.0 {
                z = cand;
                s = cs;
                f = cf;
                break;
            }
            t *= 0.5;
        }
    }
    Ok((f.norm() <= tol && g.in_safe_region(z)).then_some(z))
}

fn nearest_grid_preimage(sol: &PrincipalSolution, w: Complex64) -> Complex64 {
    let g = sol.grid();
    let phi = sol.displacement();
    (0..g.len())
        .map(|i| (g.point_at(i), g.point_at(i) + phi.samples()[i]))
        .filter(|(z, _)| g.in_safe_region(*z))
        .min_by(|a, b| (a.1 - w).norm().total_cmp(&(b.1 - w).norm()))
        .map(|(z, _)| z)
        .unwrap_or(w)
}

/// Preimages of `targets` with `|φ(z) − w| ≤ tol`.
pub fn invert_map(sol: &PrincipalSolution, targets: &PointCloud, tol: f64) -> Result<PointCloud> {
    if !(tol > 0.0) {
        return Err(Error::invalid(MODULE, "invert_map", "tol", format!("need tol > 0, got {tol}")));
    }
    let pts = targets
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, &w)| {
            invert_point(sol, w, tol).map_err(|e| match e {
                Error::InversionFailed { module, op, target, .. } => Error::InversionFailed {
                    module,
                    op,
                    index: i,
                    target,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PointCloud::new(pts, format!("phi^-1[{}]({})", sol.mu.label(), targets.label()))
}

/// Sample selection for residual statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `|z| ≤ r`
    Disk(f64),
    /// `r₀ ≤ |z| ≤ r₁`
    Annulus(f64, f64),
}

impl Region {
    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        match *self {
            Region::Disk(r1) => r <= r1,
            Region::Annulus(r0, r1) => r0 <= r && r <= r1,
        }
    }
}

/// Median over `|z| ≤ L/2` of `|∂̄φ − μ∂φ| / |∂φ|`.
pub fn equation_residual(
    phi_dz: &ComplexField,
    phi_dzbar: &ComplexField,
    mu: &BeltramiCoefficient,
) -> Result<f64> {
    let r = 0.5 * phi_dz.grid().half_extent();
    equation_residual_in(phi_dz, phi_dzbar, mu, Region::Disk(r))
}

/// [`equation_residual`] restricted to `region`.
pub fn equation_residual_in(
    phi_dz: &ComplexField,
    phi_dzbar: &ComplexField,
    mu: &BeltramiCoefficient,
    region: Region,
) -> Result<f64> {
    const OP: &str = "equation_residual";
    phi_dz.ensure_same_grid(phi_dzbar, OP)?;
    phi_dz.ensure_same_grid(mu.field(), OP)?;
    let g = phi_dz.grid();
    let mut r: Vec<f64> = (0..g.len())
        .filter(|&i| region.contains(g.point_at(i)))
        .map(|i| {
            let a = phi_dz.samples()[i];
            let b = phi_dzbar.samples()[i];
            (b - mu.field().samples()[i] * a).norm() / (a.norm() + 1e-300)
        })
        .collect();
    if r.is_empty() {
        return Err(Error::invalid(MODULE, OP, "region", "contains no samples"));
    }
    r.sort_by(f64::total_cmp);
    let m = r.len();
    Ok(if m % 2 == 1 {
        r[m / 2]
    } else {
        0.5 * (r[m / 2 - 1] + r[m / 2])
    })
}

/// Distributional pairing `∫ −f ∂̄ϕ + f ∂(μϕ) dA`; no derivative falls on `f`.
pub fn weak_residual(f: &ComplexField, mu: &BeltramiCoefficient, test: &ComplexField) -> Result<Complex64> {
    const OP: &str = "weak_residual";
    f.ensure_same_grid(test, OP)?;
    f.ensure_same_grid(mu.field(), OP)?;
    let g = test.grid();
    let r = 0.5 * g.half_extent();
    let scale = test.max_abs();
    if let Some(i) = (0..g.len()).find(|&i| g.point_at(i).norm() > r && test.samples()[i].norm() > 1e-14 * scale) {
        return Err(Error::invalid(
            MODULE,
            OP,
            "test",
            format!("test function is nonzero at {} outside |z| <= L/2", g.point_at(i)),
        ));
    }
    let dbar_test = spectral_derivative(test, Wirtinger::Dzbar)?;
    let d_mu_test = spectral_derivative(&mu.field().mul(test)?, Wirtinger::Dz)?;
    let integrand = f
        .samples()
        .iter()
        .zip(dbar_test.samples().iter().zip(d_mu_test.samples()))
        .map(|(&fv, (&a, &b))| fv * (b - a))
        .sum::<Complex64>();
    Ok(integrand * g.cell_area())
}

/// Smooth bump `exp(−1/(1 − |z−c|²/r²))` supported on the disk `|z − c| < r`.
pub fn bump_test_function(grid: &GridSpec, center: Complex64, radius: f64) -> Result<ComplexField> {
    ComplexField::from_fn(*grid, |z| {
        let s = (z - center).norm_sqr() / (radius * radius);
        Complex64::new(if s < 1.0 { (-1.0 / (1.0 - s)).exp() } else { 0.0 }, 0.0)
    })
}
