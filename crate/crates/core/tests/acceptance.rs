//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL line.

use std::io::Write;
use std::time::{Duration, Instant};

use beltrami_lab::coeff::{self, MollifierSpec};
use beltrami_lab::field::{
    beurling_transform, cauchy_transform, spectral_derivative, ComplexField, GridSpec, Wirtinger,
};
use beltrami_lab::geometry::{self, CantorSpec, PointCloud};
use beltrami_lab::measure::{self, geometric_scales};
use beltrami_lab::solver::{self, Region};
use beltrami_lab::Complex64;
use rand::{Rng, SeedableRng};

const L: f64 = 2.0;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, L).unwrap()
}

/// Writes past the test harness capture so every criterion line is visible.
fn report(id: &str, pass: bool, detail: String) {
    let line = format!("[acceptance {id:>3}] {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}

fn check(id: &str, pass: bool, detail: String) {
    report(id, pass, detail.clone());
    assert!(pass, "criterion {id}: {detail}");
}

fn l2(f: &ComplexField) -> f64 {
    f.l2_norm_where(|_| true)
}

fn in_time(start: Instant, limit: Duration) -> (bool, f64) {
    let t = start.elapsed();
    (t < limit, t.as_secs_f64())
}

/// Random mean-zero trigonometric polynomial with modes `|j|, |k| ≤ 8`.
fn band_limited(g: GridSpec, seed: u64) -> ComplexField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let w = std::f64::consts::PI / g.half_extent();
    let modes: Vec<(f64, f64, Complex64)> = (-8..=8)
        .flat_map(|j| (-8..=8).map(move |k| (j, k)))
        .filter(|&jk| jk != (0, 0))
        .map(|(j, k)| {
            let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (j as f64 * w, k as f64 * w, c)
        })
        .collect();
    ComplexField::from_fn(g, |z| {
        modes
            .iter()
            .map(|&(a, b, c)| c * Complex64::new(0.0, a * z.re + b * z.im).exp())
            .sum()
    })
    .unwrap()
}

#[test]
fn criterion_01_operator_identities() {
    let start = Instant::now();
    let g = grid(256);
    let mut worst = [0.0f64; 3];
    for seed in 0..3 {
        let h = band_limited(g, seed);
        let bh = beurling_transform(&h);
        worst[0] = worst[0].max((l2(&bh) - l2(&h)).abs() / l2(&h));

        let f = band_limited(g, 100 + seed);
        let dbar = spectral_derivative(&f, Wirtinger::Dzbar).unwrap();
        let d = spectral_derivative(&f, Wirtinger::Dz).unwrap();
        let diff = beurling_transform(&dbar).sub(&d).unwrap();
        worst[1] = worst[1].max(l2(&diff) / l2(&d));

        let c = cauchy_transform(&h);
        let back = spectral_derivative(&c, Wirtinger::Dzbar).unwrap();
        let centered = h.shift(-h.mean());
        worst[2] = worst[2].max(l2(&back.sub(&centered).unwrap()) / l2(&h));
    }
    let (fast, secs) = in_time(start, Duration::from_secs(5));
    let pass = worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-12 && fast;
    check(
        "1",
        pass,
        format!(
            "isometry {:.2e} intertwining {:.2e} cauchy {:.2e} in {secs:.2}s",
            worst[0], worst[1], worst[2]
        ),
    );
}

#[test]
fn criterion_02_neumann_contraction() {
    let start = Instant::now();
    let g = grid(256);
    let tol = 1e-10;
    let mut details = Vec::new();
    let mut pass = true;
    for k in [1.5, 2.0, 3.0] {
        let mu = coeff::make_radial_stretch_coefficient(k, 0.8, &g).unwrap();
        let sol = solver::neumann_solve(&mu, tol, 500).unwrap();
        let t = sol.trace();
        let limit = (k - 1.0) / (k + 1.0) + 0.05;
        let worst_ratio = (3..t.len()).map(|i| t[i] / t[i - 1]).fold(0.0, f64::max);
        let budget = (tol.ln() / mu.sup_bound().ln()).ceil() as usize + 10;
        pass &= worst_ratio <= limit && sol.iterations() <= budget;
        details.push(format!(
            "K={k}: ratio {worst_ratio:.3} <= {limit:.3}, {} <= {budget} iterations",
            sol.iterations()
        ));
    }
    let (fast, secs) = in_time(start, Duration::from_secs(30));
    check("2", pass && fast, format!("{} in {secs:.2}s", details.join("; ")));
}

/// Sup over grid points of the annulus `0.1 ≤ |z| ≤ 0.7` of `|φ(z) − target(z)|`.
fn radial_recovery_error(target: impl Fn(Complex64) -> Complex64) -> (f64, f64, f64) {
    let start = Instant::now();
    let g = grid(512);
    let mu = coeff::make_radial_stretch_coefficient(2.0, 0.8, &g).unwrap();
    let sol = solver::neumann_solve(&mu, 1e-10, 500).unwrap();
    let phi = sol.phi();
    let err = (0..g.len())
        .map(|i| (g.point_at(i), phi.samples()[i]))
        .filter(|(z, _)| (0.1..=0.7).contains(&z.norm()))
        .map(|(z, w)| (w - target(z)).norm())
        .fold(0.0, f64::max);
    (err, 5.0 * g.spacing(), start.elapsed().as_secs_f64())
}

#[test]
fn criterion_03_closed_form_recovery() {
    let (err, limit, secs) = radial_recovery_error(|z| z * z.norm().powf(-0.5));
    check(
        "3",
        err <= limit && secs < 60.0,
        format!("sup |phi - z|z|^(-1/2)| = {err:.3e} (limit {limit:.3e}) in {secs:.2}s"),
    );
}

#[test]
fn criterion_03_companion_normalized_stretch() {
    // The principal solution of the coefficient truncated at R is continuous across
    // |z| = R, which fixes the factor R^{1/2} in front of z|z|^{-1/2}.
    let (err, limit, secs) = radial_recovery_error(|z| 0.8f64.sqrt() * z * z.norm().powf(-0.5));
    check(
        "3b",
        err <= limit,
        format!("sup |phi - R^(1/2) z|z|^(-1/2)| = {err:.3e} (limit {limit:.3e}) in {secs:.2}s"),
    );
}

fn smooth_step(t: f64) -> f64 {
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let t = t.clamp(0.0, 1.0);
    f(t) / (f(t) + f(1.0 - t))
}

/// `z(1 − log|z|)` times a cutoff that is 1 on `|z| ≤ 0.6` and 0 beyond `0.95`.
fn exact_pair_map(g: GridSpec) -> ComplexField {
    ComplexField::from_fn(g, |z| {
        let r = z.norm();
        if r == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let cut = 1.0 - smooth_step((r - 0.6) / 0.35);
        z * (1.0 - r.ln()) * cut
    })
    .unwrap()
}

#[test]
fn criterion_04_exact_pair_residual() {
    let g = grid(1024);
    let e1 = (-1.0f64).exp();
    let mu = coeff::make_log_example_coefficient(e1, &g).unwrap();
    let phi = exact_pair_map(g);
    let d = spectral_derivative(&phi, Wirtinger::Dz).unwrap();
    let dbar = spectral_derivative(&phi, Wirtinger::Dzbar).unwrap();
    let res = solver::equation_residual_in(&d, &dbar, &mu, Region::Annulus(0.05, e1)).unwrap();
    check("4", res <= 1e-3, format!("median relative residual {res:.3e} on 0.05 <= |z| <= 1/e"));
}

/// Least-squares slope of log(mean |f|) against log r over log-spaced rings.
fn radial_profile_slope(f: &ComplexField, r0: f64, r1: f64, bins: usize) -> f64 {
    let g = f.grid();
    let (l0, l1) = (r0.ln(), r1.ln());
    let mut sum = vec![0.0; bins];
    let mut cnt = vec![0usize; bins];
    for i in 0..g.len() {
        let r = g.point_at(i).norm();
        if r < r0 || r > r1 {
            continue;
        }
        let b = (((r.ln() - l0) / (l1 - l0)) * bins as f64).min(bins as f64 - 1.0) as usize;
        sum[b] += f.samples()[i].norm();
        cnt[b] += 1;
    }
    let pts: Vec<(f64, f64)> = (0..bins)
        .filter(|&b| cnt[b] > 0)
        .map(|b| {
            let r = (l0 + (b as f64 + 0.5) / bins as f64 * (l1 - l0)).exp();
            (r.ln(), (sum[b] / cnt[b] as f64).ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn criterion_05_second_derivative_blow_up() {
    let g = grid(512);
    let mu = coeff::make_log_example_coefficient((-1.0f64).exp(), &g).unwrap();
    let sol = solver::neumann_solve(&mu, 1e-10, 500).unwrap();
    let ld = solver::log_derivative_solve(&mu, 1e-10, 500).unwrap();
    let dd = solver::second_derivative(&sol, &ld.sigma).unwrap();
    let solved = radial_profile_slope(&dd, 0.02, 0.2, 12);

    let phi = exact_pair_map(g);
    let d = spectral_derivative(&phi, Wirtinger::Dz).unwrap();
    let sampled = radial_profile_slope(&spectral_derivative(&d, Wirtinger::Dzbar).unwrap(), 0.02, 0.2, 12);

    let ok = |s: f64| (-1.25..=-0.75).contains(&s);
    check(
        "5",
        ok(solved) && ok(sampled),
        format!("log-log slope {solved:.4} (solver), {sampled:.4} (sampled closed form)"),
    );
}

#[test]
fn criterion_06_sobolev_classification() {
    let norms = |make: &dyn Fn(&GridSpec) -> coeff::BeltramiCoefficient| -> Vec<f64> {
        [256, 512, 1024]
            .into_iter()
            .map(|n| coeff::sobolev_norm(&make(&grid(n)), 2.0).unwrap())
            .collect()
    };
    let ratios = |v: &[f64]| [v[1] / v[0], v[2] / v[1]];
    let log = norms(&|g| coeff::make_log_example_coefficient(0.3, g).unwrap());
    let radial = norms(&|g| coeff::make_radial_stretch_coefficient(2.0, 0.8, g).unwrap());
    let (lr, rr) = (ratios(&log), ratios(&radial));
    let stable = lr.iter().all(|r| (0.9..=1.1).contains(r));
    let divergent = rr.iter().any(|&r| r > 1.25);
    check(
        "6",
        stable && divergent,
        format!(
            "log-example ratios {:.4}/{:.4} (stable: {stable}); radial ratios {:.4}/{:.4} (divergent: {divergent})",
            lr[0], lr[1], rr[0], rr[1]
        ),
    );
}

#[test]
fn criterion_07_exponent_arithmetic() {
    let mut worst: f64 = 0.0;
    for k in [1.5, 2.0, 3.0] {
        let q0 = coeff::critical_exponents(2.0, k).unwrap().q0;
        worst = worst.max((q0 - 2.0 * k / (2.0 * k - 1.0)).abs());
        let p = 2.0 * k * k / (k * k + 1.0);
        let r = coeff::critical_exponents(p, k).unwrap().r_sup.unwrap_or(f64::NAN);
        worst = worst.max((r - 2.0 * k / (k + 1.0)).abs());
        worst = worst.max((measure::astala_bound(2.0 / (k + 1.0), k).unwrap() - 1.0).abs());
        worst = worst.max((measure::astala_bound(2.0, k).unwrap() - 2.0).abs());
    }
    worst = worst.max((measure::holder_dim_bound(1.25, 2.0).unwrap() - 1.5).abs());
    check("7", worst <= 1e-12, format!("max deviation {worst:.3e}"));
}

#[test]
fn criterion_08_inverse_coefficient() {
    let g = grid(512);
    let k = 2.0;
    let mu = coeff::make_radial_stretch_coefficient(k, 0.8, &g).unwrap();
    let sol = solver::neumann_solve(&mu, 1e-10, 500).unwrap();
    let nu = coeff::inverse_coefficient(&mu, &sol).unwrap();

    let expected = |w: Complex64| (k - 1.0) / (k + 1.0) * w / w.conj();
    let annulus: Vec<usize> = (0..g.len()).filter(|&i| (0.1..=0.7).contains(&g.point_at(i).norm())).collect();
    let sup_err = annulus
        .iter()
        .map(|&i| (nu.field().samples()[i] - expected(g.point_at(i))).norm())
        .fold(0.0, f64::max);

    // |ν(φ(z))| against |μ(z)|, with z recovered independently by inversion.
    let ws: Vec<Complex64> = annulus.iter().step_by(7).map(|&i| g.point_at(i)).collect();
    let targets = PointCloud::new(ws, "annulus").unwrap();
    let pre = solver::invert_map(&sol, &targets, 1e-12).unwrap();
    let by_index: std::collections::HashMap<(u64, u64), Complex64> = (0..g.len())
        .map(|i| {
            let p = g.point_at(i);
            ((p.re.to_bits(), p.im.to_bits()), nu.field().samples()[i])
        })
        .collect();
    let modulus_gap = targets
        .points()
        .iter()
        .zip(pre.points())
        .map(|(w, z)| (by_index[&(w.re.to_bits(), w.im.to_bits())].norm() - mu.evaluate(*z).norm()).abs())
        .fold(0.0, f64::max);

    report(
        "8b",
        modulus_gap <= 1e-6,
        format!("sup ||nu o phi| - |mu|| = {modulus_gap:.3e} over {} samples", targets.len()),
    );
    check(
        "8",
        sup_err <= 1e-3 && modulus_gap <= 1e-6,
        format!("sup |nu - (K-1)/(K+1) w/conj(w)| = {sup_err:.3e} (limit 1e-3); modulus gap {modulus_gap:.3e}"),
    );
}

#[test]
fn criterion_09_dimension_calibration() {
    let start = Instant::now();
    let seg = measure::box_dimension(&geometry::segment_cloud(8192).unwrap(), &geometric_scales(2.0, 3, 9))
        .unwrap()
        .slope;
    let sq = measure::box_dimension(&geometry::square_cloud(512 * 512).unwrap(), &geometric_scales(2.0, 2, 8))
        .unwrap()
        .slope;
    let quarter = geometry::cantor_cloud(&CantorSpec::quarter(6).unwrap()).unwrap();
    let qc = measure::box_dimension(&quarter, &geometric_scales(4.0, 1, 5)).unwrap().slope;
    let third = geometry::cantor_cloud(&CantorSpec::new(6, 1.0 / 3.0).unwrap()).unwrap();
    let tc = measure::box_dimension(&third, &geometric_scales(3.0, 1, 5)).unwrap().slope;
    let target = 4f64.ln() / 3f64.ln();
    let (fast, secs) = in_time(start, Duration::from_secs(20));
    let pass = (seg - 1.0).abs() <= 0.05
        && (sq - 2.0).abs() <= 0.1
        && (qc - 1.0).abs() <= 0.1
        && (tc - target).abs() <= 0.1
        && fast;
    check(
        "9",
        pass,
        format!("segment {seg:.4}, square {sq:.4}, quarter-Cantor {qc:.4}, third-Cantor {tc:.4} (target {target:.4}) in {secs:.2}s"),
    );
}

fn quarter_cantor() -> PointCloud {
    geometry::cantor_cloud(&CantorSpec::quarter(6).unwrap()).unwrap()
}

#[test]
fn criterion_10a_sobolev_distortion() {
    let start = Instant::now();
    let g = grid(512);
    let mu = coeff::make_log_example_coefficient(0.3, &g).unwrap();
    let mu = coeff::mollify(&mu, MollifierSpec::new(32).unwrap()).unwrap();
    let rep = measure::distortion_experiment(&mu, &quarter_cantor(), &geometric_scales(4.0, 1, 5), 1e-10, 500)
        .unwrap();
    let gap = (rep.image.slope - rep.source.slope).abs();
    let (fast, secs) = in_time(start, Duration::from_secs(180));
    check(
        "10a",
        gap <= 0.15 && fast,
        format!(
            "dim E {:.4}, dim phi(E) {:.4}, gap {gap:.4} (limit 0.15) in {secs:.2}s",
            rep.source.slope, rep.image.slope
        ),
    );
}

#[test]
fn criterion_10b_radial_distortion() {
    let start = Instant::now();
    let g = grid(512);
    let mu = coeff::make_radial_stretch_coefficient(2.0, 0.8, &g).unwrap();
    let rep = measure::distortion_experiment(&mu, &quarter_cantor(), &geometric_scales(4.0, 1, 5), 1e-10, 500)
        .unwrap();
    let limit = measure::astala_bound(1.0, 2.0).unwrap() + 0.1;
    let (fast, secs) = in_time(start, Duration::from_secs(180));
    check(
        "10b",
        rep.image.slope <= limit && fast,
        format!("dim phi(E) {:.4} (limit {limit:.4}) in {secs:.2}s", rep.image.slope),
    );
}

#[test]
fn criterion_11_weak_residual_decay() {
    let mut values = Vec::new();
    for n in [256, 512, 1024] {
        let g = grid(n);
        let mu = coeff::make_log_example_coefficient((-1.0f64).exp(), &g).unwrap();
        let mu = coeff::mollify(&mu, MollifierSpec::new(32).unwrap()).unwrap();
        let sol = solver::neumann_solve(&mu, 1e-12, 500).unwrap();
        let test = solver::bump_test_function(&g, Complex64::new(0.3, 0.1), 0.5).unwrap();
        values.push(solver::weak_residual(&sol.phi(), &mu, &test).unwrap().norm());
    }
    let factors = [values[0] / values[1], values[1] / values[2]];
    check(
        "11",
        factors.iter().all(|&f| f >= 1.8),
        format!(
            "|pairing| {:.3e} -> {:.3e} -> {:.3e}, factors {:.2}/{:.2}",
            values[0], values[1], values[2], factors[0], factors[1]
        ),
    );
}

#[test]
fn criterion_12_garnett_map() {
    let spec = CantorSpec::quarter(6).unwrap();
    let d = geometry::default_garnett_displacements(&spec);
    let src = geometry::cantor_cloud(&spec).unwrap();
    let img = geometry::garnett_map(&spec, &d).unwrap();
    let mut keys: Vec<(u64, u64)> = img.points().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect();
    keys.sort_unstable();
    keys.dedup();
    let moved = src
        .points()
        .iter()
        .zip(img.points())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scales = geometric_scales(4.0, 1, 5);
    let ds = measure::box_dimension(&src, &scales).unwrap().slope;
    let di = measure::box_dimension(&img, &scales).unwrap().slope;
    let pass = keys.len() == 4096
        && moved <= geometry::GARNETT_TOTAL
        && moved <= d.iter().sum::<f64>()
        && (ds - 1.0).abs() <= 0.15
        && (di - 1.0).abs() <= 0.15;
    check(
        "12",
        pass,
        format!(
            "{} distinct images, max move {moved:.6} (sum d' {:.6}), dims {ds:.4}/{di:.4}",
            keys.len(),
            d.iter().sum::<f64>()
        ),
    );
}
