use num_complex::Complex64;

use super::ComplexField;

/// Interpolated value and Cartesian gradient at an off-grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub value: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
}

impl Sample {
    #[inline]
    pub fn dz(&self) -> Complex64 {
        0.5 * (self.dx - Complex64::i() * self.dy)
    }

    #[inline]
    pub fn dzbar(&self) -> Complex64 {
        0.5 * (self.dx + Complex64::i() * self.dy)
    }
}

#[inline]
fn weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ],
        [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ],
    )
}

pub(super) fn catmull_rom(f: &ComplexField, z: Complex64) -> Sample {
    let g = f.grid();
    let n = g.resolution() as i64;
    let h = g.spacing();
    let u = (z.re + g.half_extent()) / h;
    let v = (z.im + g.half_extent()) / h;
    let (c0, r0) = (u.floor(), v.floor());
    let (wx, dwx) = weights(u - c0);
    let (wy, dwy) = weights(v - r0);
    let (c0, r0) = (c0 as i64, r0 as i64);

    let mut value = Complex64::new(0.0, 0.0);
    let mut dx = Complex64::new(0.0, 0.0);
    let mut dy = Complex64::new(0.0, 0.0);
    for (a, (&wyi, &dwyi)) in wy.iter().zip(&dwy).enumerate() {
        let row = (r0 + a as i64 - 1).rem_euclid(n) as usize;
        let mut line = Complex64::new(0.0, 0.0);
        let mut dline = Complex64::new(0.0, 0.0);
        for (b, (&wxj, &dwxj)) in wx.iter().zip(&dwx).enumerate() {
            let col = (c0 + b as i64 - 1).rem_euclid(n) as usize;
            let s = f.get(row, col);
            line += s * wxj;
            dline += s * dwxj;
        }
        value += line * wyi;
        dx += dline * wyi;
        dy += line * dwyi;
    }
    Sample {
        value,
        dx: dx / h,
        dy: dy / h,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    #[test]
    fn reproduces_nodes() {
        let g = GridSpec::new(32, 1.0).unwrap();
        let f = ComplexField::from_fn(g, |z| Complex64::new(z.re.sin(), z.im * z.re)).unwrap();
        for (row, col) in [(0, 0), (5, 17), (31, 31), (16, 3)] {
            let s = f.sample(g.point(row, col));
            assert!((s.value - f.get(row, col)).norm() < 1e-14);
        }
    }

    #[test]
    fn exact_on_quadratics_and_gradient_consistent() {
        // Catmull-Rom reproduces quadratics away from the periodic seam.
        let g = GridSpec::new(64, 2.0).unwrap();
        let q = |z: Complex64| Complex64::new(z.re * z.re - 0.5 * z.im, z.re * z.im);
        let f = ComplexField::from_fn(g, q).unwrap();
        let z = Complex64::new(0.123, -0.377);
        let s = f.sample(z);
        assert!((s.value - q(z)).norm() < 1e-12);
        let eps = 1e-6;
        let fx = (f.sample(z + eps).value - f.sample(z - eps).value) / (2.0 * eps);
        let fy = (f.sample(z + Complex64::new(0.0, eps)).value
            - f.sample(z - Complex64::new(0.0, eps)).value)
            / (2.0 * eps);
        assert!((fx - s.dx).norm() < 1e-6);
        assert!((fy - s.dy).norm() < 1e-6);
        // d/dz of z·z̄-free quadratic part checks the Wirtinger assembly.
        assert!((s.dx - Complex64::new(2.0 * z.re, z.im)).norm() < 1e-10);
    }
}
