//! Point clouds sampling the test sets: Cantor-type sets, segments, squares, the
//! Garnett displacement of the quarter-Cantor set, and images under solved maps.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::io_util::{atomic_write, fmt17};
use crate::solver::{self, PrincipalSolution};
use crate::{Error, Result};

const MODULE: &str = "geometry";

/// Largest cloud [`cantor_cloud`] will build.
pub const MAX_CANTOR_POINTS: u64 = 10_000_000;

/// A finite set of planar points with a provenance label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Complex64>,
    label: String,
}

impl PointCloud {
    pub fn new(points: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = points.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                module: MODULE,
                op: "PointCloud::new",
                param: format!("points[{i}]"),
            });
        }
        Ok(Self {
            points,
            label: label.into(),
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Four-corner self-similar Cantor set: every square keeps the four corner
/// sub-squares of relative side `contraction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSpec {
    pub generation: u32,
    pub contraction: f64,
    pub center: Complex64,
    pub side: f64,
}

impl CantorSpec {
    /// Generation `generation` on the unit square centered at the origin.
    pub fn new(generation: u32, contraction: f64) -> Result<Self> {
        Self {
            generation,
            contraction,
            center: Complex64::new(0.0, 0.0),
            side: 1.0,
        }
        .validated()
    }

    /// The quarter-Cantor set (`ρ = 1/4`).
    pub fn quarter(generation: u32) -> Result<Self> {
        Self::new(generation, 0.25)
    }

    pub fn with_anchor(mut self, center: Complex64, side: f64) -> Result<Self> {
        self.center = center;
        self.side = side;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        const OP: &str = "CantorSpec";
        if !(self.contraction > 0.0 && self.contraction <= 0.5) {
            return Err(Error::invalid(
                MODULE,
                OP,
                "rho",
                format!("contraction must lie in (0, 1/2], got {}", self.contraction),
            ));
        }
        if self.generation > 11 || 4u64.pow(self.generation) > MAX_CANTOR_POINTS {
            return Err(Error::invalid(
                MODULE,
                OP,
                "generation",
                format!("4^{} exceeds the cap {MAX_CANTOR_POINTS}", self.generation),
            ));
        }
        if !(self.side > 0.0 && self.side.is_finite()) || !(self.center.re.is_finite() && self.center.im.is_finite()) {
            return Err(Error::invalid(MODULE, OP, "anchor", "side must be positive and center finite"));
        }
        Ok(self)
    }

    pub fn count(&self) -> usize {
        4usize.pow(self.generation)
    }

    /// Side of a generation-`k` square.
    pub fn square_side(&self, k: u32) -> f64 {
        self.side * self.contraction.powi(k as i32)
    }
}

/// Corner directions in traversal order NW, NE, SW, SE.
const CORNERS: [(f64, f64); 4] = [(-1.0, 1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

fn visit(center: Complex64, side: f64, rho: f64, depth: u32, out: &mut Vec<Complex64>) {
    if depth == 0 {
        out.push(center);
        return;
    }
    let off = 0.5 * side * (1.0 - rho);
    for (sx, sy) in CORNERS {
        visit(center + Complex64::new(sx * off, sy * off), side * rho, rho, depth - 1, out);
    }
}

/// Centers of the `4^N` generation-`N` squares, depth-first in NW, NE, SW, SE order.
pub fn cantor_cloud(spec: &CantorSpec) -> Result<PointCloud> {
    let spec = spec.validated()?;
    let mut pts = Vec::with_capacity(spec.count());
    visit(spec.center, spec.side, spec.contraction, spec.generation, &mut pts);
    PointCloud::new(
        pts,
        format!("cantor(rho={},gen={})", spec.contraction, spec.generation),
    )
}

/// `log 4 / log(1/ρ)`.
pub fn similarity_dimension(spec: &CantorSpec) -> f64 {
    4f64.ln() / (1.0 / spec.contraction).ln()
}

fn check_count(op: &'static str, count: usize) -> Result<()> {
    if count < 2 {
        return Err(Error::invalid(MODULE, op, "count", format!("need at least 2 points, got {count}")));
    }
    Ok(())
}

/// `count` evenly spaced points on `[−1/2, 1/2]`, endpoints included.
pub fn segment_cloud(count: usize) -> Result<PointCloud> {
    check_count("segment_cloud", count)?;
    let pts = (0..count)
        .map(|i| Complex64::new(-0.5 + i as f64 / (count - 1) as f64, 0.0))
        .collect();
    PointCloud::new(pts, format!("segment(n={count})"))
}

/// Centers of an `m × m` cell lattice on `[−1/2, 1/2]²`, `m = max(⌊√count⌋, 2)`.
pub fn square_cloud(count: usize) -> Result<PointCloud> {
    check_count("square_cloud", count)?;
    let m = ((count as f64).sqrt().floor() as usize).max(2);
    let t = |i: usize| -0.5 + (i as f64 + 0.5) / m as f64;
    let pts = (0..m * m).map(|i| Complex64::new(t(i % m), t(i / m))).collect();
    PointCloud::new(pts, format!("square(n={count})"))
}

/// Total displacement `Σ d'_k` of the default Garnett schedule on the unit square.
pub const GARNETT_TOTAL: f64 = 0.1;

/// Default displacements `d'_k = (3/10)·side·4^{−k}`, `k = 1..=N`, summing to
/// `side/10` over all levels.
pub fn default_garnett_displacements(spec: &CantorSpec) -> Vec<f64> {
    (1..=spec.generation)
        .map(|k| 3.0 * GARNETT_TOTAL * spec.side * 0.25f64.powi(k as i32))
        .collect()
}

fn square_distance(a: Complex64, b: Complex64, side: f64) -> f64 {
    let gx = ((a.re - b.re).abs() - side).max(0.0);
    let gy = ((a.im - b.im).abs() - side).max(0.0);
    gx.hypot(gy)
}

/// Offsets of the children `Q₁..Q₄` (NW, NE, SW, SE) of a parent of side `s` after
/// moving `Q₂` and `Q₃` by `d` toward the line through `Q₁` and `Q₄`.
fn garnett_children(s: f64, d: f64) -> [Complex64; 4] {
    let off = 3.0 * s / 8.0;
    let m = d / std::f64::consts::SQRT_2;
    [
        Complex64::new(-off, off),
        Complex64::new(off - m, off - m),
        Complex64::new(-off + m, -off + m),
        Complex64::new(off, -off),
    ]
}

/// Image of [`cantor_cloud`] under the level-wise Garnett translations: at level
/// `k`, inside every parent square, `Q₂` (NE) and `Q₃` (SW) move by `d'_k` along the
/// parent's SW–NE diagonal toward the NW–SE line through `Q₁` and `Q₄`.
///
/// The output is in the same order as [`cantor_cloud`].
pub fn garnett_map(spec: &CantorSpec, displacements: &[f64]) -> Result<PointCloud> {
    const OP: &str = "garnett_map";
    let spec = spec.validated()?;
    if (spec.contraction - 0.25).abs() > 1e-15 {
        return Err(Error::invalid(MODULE, OP, "rho", "the Garnett map needs rho = 1/4"));
    }
    if displacements.len() != spec.generation as usize {
        return Err(Error::invalid(
            MODULE,
            OP,
            "displacements",
            format!("expected {} values, got {}", spec.generation, displacements.len()),
        ));
    }
    if let Some(d) = displacements.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::invalid(MODULE, OP, "displacements", format!("need finite d' >= 0, got {d}")));
    }
    for (k, &d) in displacements.iter().enumerate() {
        let s = spec.square_side(k as u32);
        let child = s / 4.0;
        let q = garnett_children(s, d);
        for a in 0..4 {
            for b in a + 1..4 {
                let dist = square_distance(q[a], q[b], child);
                let needed = if (a, b) == (1, 2) { 0.5 * d } else { 0.0 };
                if dist <= 0.0 || dist < needed {
                    return Err(Error::invalid(
                        MODULE,
                        OP,
                        format!("displacements[{k}]"),
                        format!(
                            "level {}: d' = {d} makes Q{} and Q{} collide (gap {dist:e})",
                            k + 1,
                            a + 1,
                            b + 1
                        ),
                    ));
                }
            }
        }
    }
    fn walk(center: Complex64, side: f64, disp: &[f64], out: &mut Vec<Complex64>) {
        match disp.split_first() {
            None => out.push(center),
            Some((&d, rest)) => {
                for off in garnett_children(side, d) {
                    walk(center + off, side / 4.0, rest, out);
                }
            }
        }
    }
    let mut pts = Vec::with_capacity(spec.count());
    walk(spec.center, spec.side, displacements, &mut pts);
    PointCloud::new(pts, format!("garnett(gen={})", spec.generation))
}

/// Image of `cloud` under the solved map.
pub fn map_cloud(sol: &PrincipalSolution, cloud: &PointCloud) -> Result<PointCloud> {
    let out = solver::evaluate_map(sol, cloud)?;
    let label = format!(
        "{} under phi[{}; K={}; iterations={}]",
        cloud.label(),
        sol.mu().label(),
        sol.mu().ellipticity(),
        sol.iterations()
    );
    Ok(out.with_label(label))
}

/// Writes `re,im` rows with 17 significant digits.
pub fn write_cloud_csv<W: Write>(cloud: &PointCloud, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["re", "im"])?;
    for z in cloud.points() {
        wtr.write_record([fmt17(z.re), fmt17(z.im)])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_cloud_csv<R: Read>(r: R, label: &str) -> Result<PointCloud> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "re" || &headers[1] != "im" {
        return Err(Error::Format {
            module: MODULE,
            op: "read_cloud_csv",
            reason: format!("expected header `re,im`, got {headers:?}"),
        });
    }
    let mut pts = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |j: usize| {
            rec.get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Format {
                    module: MODULE,
                    op: "read_cloud_csv",
                    reason: format!("row {}: bad number", i + 1),
                })
        };
        pts.push(Complex64::new(parse(0)?, parse(1)?));
    }
    PointCloud::new(pts, label)
}

pub fn save_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_cloud_csv(cloud, w))
}

pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    read_cloud_csv(std::fs::File::open(path)?, &path.display().to_string())
}
