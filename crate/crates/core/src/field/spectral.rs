use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{ComplexField, GridSpec};
use crate::Result;

/// Which Wirtinger derivative to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wirtinger {
    /// `∂ = (∂x − i∂y)/2`
    Dz,
    /// `∂̄ = (∂x + i∂y)/2`
    Dzbar,
}

struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let plans = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut plans = plans.lock().unwrap_or_else(|e| e.into_inner());
    plans
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn fft_rows(data: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| fft.process_with_scratch(row, scratch),
    );
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    dst.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = src[j * n + i];
        }
    });
}

/// In-place 2-D DFT of an `n × n` row-major array. The inverse is normalized by `1/n²`.
fn fft2(data: &mut Vec<Complex64>, n: usize, inverse: bool) {
    let plan = plan(n);
    let fft = if inverse { &plan.inverse } else { &plan.forward };
    fft_rows(data, n, fft);
    let mut t = vec![Complex64::new(0.0, 0.0); n * n];
    transpose(data, &mut t, n);
    fft_rows(&mut t, n, fft);
    transpose(&t, data, n);
    if inverse {
        let s = 1.0 / (n * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= s);
    }
}

/// Multiplies every Fourier mode by `m(ξ₁, ξ₂)` (ξ₁ along columns/x, ξ₂ along rows/y).
pub(crate) fn apply_multiplier(
    f: &ComplexField,
    m: impl Fn(f64, f64) -> Complex64 + Sync,
) -> ComplexField {
    let grid: GridSpec = *f.grid();
    let n = grid.resolution();
    let mut data = f.samples().to_vec();
    fft2(&mut data, n, false);
    let kx: Vec<f64> = (0..n).map(|j| grid.wavenumber(j)).collect();
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let ky = grid.wavenumber(i);
        for (v, &k1) in row.iter_mut().zip(&kx) {
            *v *= m(k1, ky);
        }
    });
    fft2(&mut data, n, true);
    ComplexField::from_raw(grid, data)
}

/// Circular convolution `f ∗ kernel` on the torus, with `kernel` stored so that its
/// origin sits at sample index `(0, 0)`. The sum is weighted by the cell area.
pub(crate) fn circular_convolve(f: &ComplexField, kernel: &[Complex64]) -> ComplexField {
    let grid = *f.grid();
    let n = grid.resolution();
    debug_assert_eq!(kernel.len(), n * n);
    let mut a = f.samples().to_vec();
    let mut k = kernel.to_vec();
    fft2(&mut a, n, false);
    fft2(&mut k, n, false);
    let w = grid.cell_area();
    a.par_iter_mut().zip(k.par_iter()).for_each(|(x, y)| *x *= y * w);
    fft2(&mut a, n, true);
    ComplexField::from_raw(grid, a)
}

#[inline]
fn dz_symbol(k1: f64, k2: f64) -> Complex64 {
    Complex64::new(0.0, 0.5) * Complex64::new(k1, -k2)
}

#[inline]
fn dzbar_symbol(k1: f64, k2: f64) -> Complex64 {
    Complex64::new(0.0, 0.5) * Complex64::new(k1, k2)
}

/// `∂f` or `∂̄f` by Fourier multiplier; the zero mode maps to zero.
pub fn spectral_derivative(f: &ComplexField, which: Wirtinger) -> Result<ComplexField> {
    f.ensure_finite("spectral_derivative", "f")?;
    Ok(match which {
        Wirtinger::Dz => apply_multiplier(f, dz_symbol),
        Wirtinger::Dzbar => apply_multiplier(f, dzbar_symbol),
    })
}

/// Periodic Cauchy transform: the mean-zero `F` with `∂̄F = h − mean(h)`.
pub fn cauchy_transform(h: &ComplexField) -> ComplexField {
    apply_multiplier(h, |k1, k2| {
        if k1 == 0.0 && k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            dzbar_symbol(k1, k2).inv()
        }
    })
}

/// Periodic Beurling transform `B = ∂ ∘ ∂̄⁻¹`, multiplier `(ξ₁ − iξ₂)/(ξ₁ + iξ₂)`.
///
/// The multiplier has modulus one on every nonzero mode, Nyquist included, so `B`
/// is an isometry on mean-zero fields.
pub fn beurling_transform(h: &ComplexField) -> ComplexField {
    apply_multiplier(h, |k1, k2| {
        if k1 == 0.0 && k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(k1, -k2) / Complex64::new(k1, k2)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::lp_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 2.0).unwrap()
    }

    /// Random field whose spectrum is confined to |k| < n/6 on each axis.
    pub(crate) fn band_limited(g: GridSpec, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.resolution() as i64;
        let kmax = n / 6;
        let modes: Vec<(f64, f64, Complex64)> = (0..24)
            .map(|_| {
                let a = rng.gen_range(-kmax..kmax) as f64;
                let b = rng.gen_range(-kmax..kmax) as f64;
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                (a, b, c)
            })
            .collect();
        let w = std::f64::consts::PI / g.half_extent();
        ComplexField::from_fn(g, |z| {
            modes
                .iter()
                .map(|&(a, b, c)| c * Complex64::new(0.0, w * (a * z.re + b * z.im)).exp())
                .sum()
        })
        .unwrap()
    }

    fn rel_l2(a: &ComplexField, b: &ComplexField) -> f64 {
        let d = a.sub(b).unwrap();
        lp_norm(&d, 2.0).unwrap() / lp_norm(b, 2.0).unwrap().max(1e-300)
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let f = ComplexField::constant(grid(32), Complex64::new(3.0, -1.0));
        for w in [Wirtinger::Dz, Wirtinger::Dzbar] {
            assert!(spectral_derivative(&f, w).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn single_mode_multiplier() {
        let g = grid(64);
        let w = std::f64::consts::PI / g.half_extent();
        let (k1, k2) = (3.0 * w, -5.0 * w);
        let f = ComplexField::from_fn(g, |z| Complex64::new(0.0, k1 * z.re + k2 * z.im).exp())
            .unwrap();
        let expect_bar = f.scale(Complex64::new(0.0, 0.5) * Complex64::new(k1, k2));
        let expect = f.scale(Complex64::new(0.0, 0.5) * Complex64::new(k1, -k2));
        let dbar = spectral_derivative(&f, Wirtinger::Dzbar).unwrap();
        let d = spectral_derivative(&f, Wirtinger::Dz).unwrap();
        assert!(rel_l2(&dbar, &expect_bar) < 1e-12);
        assert!(rel_l2(&d, &expect) < 1e-12);
        // Cauchy transform divides the mode by the ∂̄ symbol.
        let c = cauchy_transform(&f);
        let expect_c = f.scale((Complex64::new(0.0, 0.5) * Complex64::new(k1, k2)).inv());
        assert!(rel_l2(&c, &expect_c) < 1e-12);
    }

    #[test]
    fn gaussian_matches_finite_differences() {
        // Centered differences on N=256 agree with the spectral derivative to O(h²).
        let g = grid(256);
        let h = g.spacing();
        let gauss = |z: Complex64| (-(z.norm_sqr()) / 0.1).exp() * Complex64::new(1.0, 0.5);
        let f = ComplexField::from_fn(g, gauss).unwrap();
        let d = spectral_derivative(&f, Wirtinger::Dzbar).unwrap();
        let dz = spectral_derivative(&f, Wirtinger::Dz).unwrap();
        let n = g.resolution();
        let errors = |step: f64| {
            let (mut bar, mut hol): (f64, f64) = (0.0, 0.0);
            for row in n / 4..3 * n / 4 {
                for col in n / 4..3 * n / 4 {
                    let z = g.point(row, col);
                    let iy = Complex64::new(0.0, step);
                    let fx = (gauss(z + step) - gauss(z - step)) / (2.0 * step);
                    let fy = (gauss(z + iy) - gauss(z - iy)) / (2.0 * step);
                    bar = bar.max((d.get(row, col) - 0.5 * (fx + Complex64::i() * fy)).norm());
                    hol = hol.max((dz.get(row, col) - 0.5 * (fx - Complex64::i() * fy)).norm());
                }
            }
            (bar, hol)
        };
        // |f'''| ≤ 3.8·0.1^{-3/2}·|1 + i/2| ≈ 135, so the truncation error is below 23h².
        let (bar, hol) = errors(h);
        assert!(bar < 25.0 * h * h && hol < 25.0 * h * h, "{bar} {hol}");
        let (bar2, hol2) = errors(h / 2.0);
        assert!(bar / bar2 > 3.5 && hol / hol2 > 3.5, "{} {}", bar / bar2, hol / hol2);
    }

    #[test]
    fn beurling_is_isometry_and_intertwines() {
        let g = grid(128);
        let f = band_limited(g, 7);
        let h = f.shift(-f.mean());
        let bh = beurling_transform(&h);
        let (a, b) = (lp_norm(&bh, 2.0).unwrap(), lp_norm(&h, 2.0).unwrap());
        assert!((a - b).abs() <= 1e-10 * b);
        let dbar = spectral_derivative(&f, Wirtinger::Dzbar).unwrap();
        let dz = spectral_derivative(&f, Wirtinger::Dz).unwrap();
        assert!(rel_l2(&beurling_transform(&dbar), &dz) < 1e-10);
        assert_eq!(beurling_transform(&ComplexField::zeros(g)).max_abs(), 0.0);
        assert_eq!(cauchy_transform(&ComplexField::zeros(g)).max_abs(), 0.0);
    }

    #[test]
    fn cauchy_inverts_dzbar() {
        let g = grid(64);
        let h = band_limited(g, 3).shift(Complex64::new(0.7, 0.2));
        let c = cauchy_transform(&h);
        assert!(c.mean().norm() < 1e-13);
        let back = spectral_derivative(&c, Wirtinger::Dzbar).unwrap();
        let target = h.shift(-h.mean());
        assert!(rel_l2(&back, &target) < 1e-12);
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = grid(16);
        let mut f = ComplexField::zeros(g);
        f.samples = vec![Complex64::new(f64::NAN, 0.0); g.len()];
        assert!(spectral_derivative(&f, Wirtinger::Dz).is_err());
    }
}
