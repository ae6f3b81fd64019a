//! Covering contents and box-counting dimension of point clouds, plus the
//! closed-form dimension distortion bounds they are compared against.
//!
//! Contents use the origin-aligned grid of boxes of side `δ`. Each box has
//! diameter `√2·δ`, so every content here is an upper bound for the true
//! `δ`-content; the gap is at most a factor `4^t`.

use std::io::Write;

use crate::coeff::{BeltramiCoefficient, CoefficientClass};
use crate::geometry::{self, PointCloud};
use crate::io_util::fmt17;
use crate::solver::{self, PrincipalSolution};
use crate::{Error, Result};

const MODULE: &str = "measure";

/// Minimum number of scales accepted by [`box_dimension`].
pub const MIN_SCALES: usize = 5;
/// Minimum ratio `δ_max/δ_min`, in decades.
pub const MIN_DECADES: f64 = 1.5;

/// Box count and content of a cloud at a single scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverEstimate {
    pub scale: f64,
    pub box_count: usize,
    pub content_t: f64,
}

fn check_scale(op: &'static str, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(MODULE, op, "delta", format!("need a finite delta > 0, got {delta}")));
    }
    Ok(())
}

fn check_nonempty(op: &'static str, cloud: &PointCloud) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::invalid(MODULE, op, "cloud", "empty point cloud"));
    }
    Ok(())
}

/// Number of occupied boxes `[iδ, (i+1)δ) × [jδ, (j+1)δ)`.
pub fn box_count(cloud: &PointCloud, delta: f64) -> Result<usize> {
    check_scale("box_count", delta)?;
    let mut keys: Vec<(i64, i64)> = cloud
        .points()
        .iter()
        .map(|z| ((z.re / delta).floor() as i64, (z.im / delta).floor() as i64))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len())
}

/// `N(δ)·(√2δ)^t` for the origin-aligned cover.
pub fn dyadic_content(cloud: &PointCloud, t: f64, delta: f64) -> Result<CoverEstimate> {
    const OP: &str = "dyadic_content";
    if !(t > 0.0 && t <= 2.0) {
        return Err(Error::invalid(MODULE, OP, "t", format!("need 0 < t <= 2, got {t}")));
    }
    check_nonempty(OP, cloud)?;
    let n = box_count(cloud, delta)?;
    Ok(CoverEstimate {
        scale: delta,
        box_count: n,
        content_t: n as f64 * (std::f64::consts::SQRT_2 * delta).powf(t),
    })
}

/// A gauge `h` for [`measure_function_content`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureFunction {
    /// `h(s) = s`
    Linear,
    /// `h(s) = s^t`
    Power(f64),
    /// `h(s) = s / max(log(1/s), 1)`
    LogDamped,
}

impl MeasureFunction {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            MeasureFunction::Linear => s,
            MeasureFunction::Power(t) => s.powf(t),
            MeasureFunction::LogDamped => s / (1.0 / s).ln().max(1.0),
        }
    }
}

fn check_gauge(h: &dyn Fn(f64) -> f64) -> Result<()> {
    const OP: &str = "measure_function_content";
    if h(0.0) != 0.0 {
        return Err(Error::invalid(MODULE, OP, "h", "gauge must vanish at 0"));
    }
    let mut prev = 0.0;
    for i in 0..=96 {
        let s = 10f64.powf(-12.0 + i as f64 / 8.0);
        let v = h(s);
        if !v.is_finite() || v < prev {
            return Err(Error::invalid(
                MODULE,
                OP,
                "h",
                format!("gauge is not nondecreasing near s = {s:e}"),
            ));
        }
        prev = v;
    }
    Ok(())
}

/// `Σ h(√2δ)` over occupied boxes. `h` is sampled on a log grid over
/// `[1e-12, 1e0]` and rejected unless it is nondecreasing with `h(0) = 0`.
pub fn measure_function_content(cloud: &PointCloud, h: impl Fn(f64) -> f64, delta: f64) -> Result<f64> {
    check_gauge(&h)?;
    check_nonempty("measure_function_content", cloud)?;
    let n = box_count(cloud, delta)?;
    Ok(n as f64 * h(std::f64::consts::SQRT_2 * delta))
}

/// Least-squares line through `(log 1/δ, log N(δ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub scale_range: (f64, f64),
    pub counts: Vec<(f64, usize)>,
}

impl DimensionFit {
    /// Whether the raw slope is a plausible planar dimension.
    pub fn in_range(&self) -> bool {
        (0.0..=2.0).contains(&self.slope)
    }
}

pub fn box_dimension(cloud: &PointCloud, scales: &[f64]) -> Result<DimensionFit> {
    const OP: &str = "box_dimension";
    check_nonempty(OP, cloud)?;
    if scales.len() < MIN_SCALES {
        return Err(Error::invalid(
            MODULE,
            OP,
            "scales",
            format!("need at least {MIN_SCALES} scales, got {}", scales.len()),
        ));
    }
    for &d in scales {
        check_scale(OP, d)?;
    }
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scales.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < MIN_DECADES - 1e-12 {
        return Err(Error::invalid(
            MODULE,
            OP,
            "scales",
            format!("scales span {:.3} decades, need {MIN_DECADES}", (hi / lo).log10()),
        ));
    }
    let counts = scales
        .iter()
        .map(|&d| box_count(cloud, d).map(|n| (d, n)))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = counts.iter().map(|&(d, _)| (1.0 / d).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::invalid(MODULE, OP, "scales", "all scales coincide; the fit is degenerate"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DimensionFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        scale_range: (lo, hi),
        counts,
    })
}

/// `base^{-first}, …, base^{-last}`.
pub fn geometric_scales(base: f64, first: i32, last: i32) -> Vec<f64> {
    (first..=last).map(|k| base.powi(-k)).collect()
}

/// Upper bound `2Kt / (2 + (K−1)t)` for the dimension of a `K`-quasiconformal
/// image of a set of dimension `t`.
pub fn astala_bound(t: f64, k: f64) -> Result<f64> {
    const OP: &str = "astala_bound";
    if !(0.0..=2.0).contains(&t) {
        return Err(Error::invalid(MODULE, OP, "t", format!("need 0 <= t <= 2, got {t}")));
    }
    check_k(OP, k)?;
    Ok(2.0 * k * t / (2.0 + (k - 1.0) * t))
}

/// `1 + K(t−1)` for `t ∈ (1, 1 + 1/K)`.
pub fn holder_dim_bound(t: f64, k: f64) -> Result<f64> {
    const OP: &str = "holder_dim_bound";
    check_k(OP, k)?;
    if !(t > 1.0 && t < 1.0 + 1.0 / k) {
        return Err(Error::invalid(
            MODULE,
            OP,
            "t",
            format!("need 1 < t < {}, got {t}", 1.0 + 1.0 / k),
        ));
    }
    Ok(1.0 + k * (t - 1.0))
}

fn check_k(op: &'static str, k: f64) -> Result<()> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::invalid(MODULE, op, "K", format!("need finite K >= 1, got {k}")));
    }
    Ok(())
}

/// Slack added to the theoretical bound before flagging a failure.
pub const BOUND_SLACK: f64 = 0.1;
/// Allowed dimension change for Sobolev-class coefficients.
pub const PRESERVATION_SLACK: f64 = 0.15;

/// Dimension of a set and of its image under a solved map.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub coefficient: String,
    pub ellipticity: f64,
    pub class: CoefficientClass,
    pub set: String,
    pub source: DimensionFit,
    pub image: DimensionFit,
    pub bound: f64,
    pub pass: bool,
}

/// Solves for `mu`, pushes `set` through the map and compares box dimensions.
pub fn distortion_experiment(
    mu: &BeltramiCoefficient,
    set: &PointCloud,
    scales: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<DistortionReport> {
    let sol = solver::neumann_solve(mu, tol, max_iter)?;
    distortion_with_solution(&sol, set, scales)
}

/// As [`distortion_experiment`] for an already solved map.
pub fn distortion_with_solution(
    sol: &PrincipalSolution,
    set: &PointCloud,
    scales: &[f64],
) -> Result<DistortionReport> {
    let mu = sol.mu();
    let image = geometry::map_cloud(sol, set)?;
    let source = box_dimension(set, scales)?;
    let image_fit = box_dimension(&image, scales)?;
    let t = source.slope.clamp(0.0, 2.0);
    let (bound, pass) = match mu.class() {
        CoefficientClass::Sobolev12 => {
            let ok = (image_fit.slope - source.slope).abs() <= PRESERVATION_SLACK
                && image_fit.slope <= t + BOUND_SLACK;
            (t, ok)
        }
        CoefficientClass::General => {
            let b = astala_bound(t, mu.ellipticity())?;
            (b, image_fit.slope <= b + BOUND_SLACK)
        }
    };
    Ok(DistortionReport {
        coefficient: mu.label().to_string(),
        ellipticity: mu.ellipticity(),
        class: mu.class(),
        set: set.label().to_string(),
        source,
        image: image_fit,
        bound,
        pass,
    })
}

/// One row of the experiment report CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub param: String,
    pub k: f64,
    /// Sobolev exponent of the coefficient class, when one applies.
    pub p: Option<f64>,
    pub set: String,
    pub generation: Option<u32>,
    pub dim_source: f64,
    pub dim_image: f64,
    pub bound: f64,
    pub pass: bool,
}

pub const REPORT_HEADER: [&str; 10] = [
    "experiment",
    "param",
    "K",
    "p",
    "set",
    "generation",
    "dim_source",
    "dim_image",
    "bound",
    "pass",
];

pub fn write_report_csv<W: Write>(rows: &[ReportRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(REPORT_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.experiment.clone(),
            r.param.clone(),
            fmt17(r.k),
            r.p.map(fmt17).unwrap_or_default(),
            r.set.clone(),
            r.generation.map(|g| g.to_string()).unwrap_or_default(),
            fmt17(r.dim_source),
            fmt17(r.dim_image),
            fmt17(r.bound),
            r.pass.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
