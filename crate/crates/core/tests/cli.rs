use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beltrami-lab"))
        .args(args)
        .env_remove("BELTRAMI_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().display().to_string());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn exponents_prints_q0() {
    let o = run(&["exponents", "--p", "2", "--K", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("q0=1.3333333333333333"), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let o = run(&["solve", "--coeff", "radial(K=2,R=0.8)", "--colour", "red"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("cli::config") && err.contains("colour"), "{err}");
    let o = run(&["solve", "--coeff", "radial(K=0.5,R=0.8)", "--grid", "64"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coeff.K"));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numeric_failures_exit_with_two() {
    let o = run(&["solve", "--coeff", "radial(K=3,R=0.8)", "--grid", "64", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("neumann_solve"));
    // A rough coefficient misses the default residual threshold of 10·tol.
    let o = run(&["residual", "--coeff", "radial(K=2,R=0.8)", "--grid", "256"]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn solve_writes_fields_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol");
    let o = run(&[
        "solve",
        "--coeff",
        "radial(K=2,R=0.8)",
        "--grid",
        "128",
        "--tol",
        "1e-10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("residual="));
    assert_eq!(
        files(&out),
        [
            "displacement.qcbf",
            "dphi.qcbf",
            "h.qcbf",
            "meta.txt",
            "plot/trace.gp",
            "plot/trace_neumann.csv"
        ]
    );
    let meta = beltrami_lab::solver::read_metadata(&out.join("meta.txt")).unwrap();
    for key in ["K", "sup_bound", "tol", "iterations", "residual"] {
        assert!(meta.contains_key(key), "missing {key}");
    }
    let h = beltrami_lab::field::io::load(out.join("h.qcbf")).unwrap();
    assert_eq!(h.grid().resolution(), 128);
}

#[test]
fn distort_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        vec![
            "distort".to_string(),
            "--coeff".into(),
            "logexample(R=0.3)|mollify(n=32)".into(),
            "--set".into(),
            "cantor(rho=0.25,gen=6)".into(),
            "--grid".into(),
            "512".into(),
            "--workers".into(),
            "2".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let v = args(d.to_str().unwrap());
        let o = run(&v.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let ra = std::fs::read(a.join("report.csv")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.csv")).unwrap());
    let text = String::from_utf8(ra).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,param,K,p,set,generation,dim_source,dim_image,bound,pass"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let dim_source: f64 = row[row.len() - 4].parse().unwrap();
    let dim_image: f64 = row[row.len() - 3].parse().unwrap();
    assert!((dim_source - 1.0).abs() < 0.05);
    assert!((dim_image - 1.0).abs() <= 0.15);
    assert!(!files(&a).iter().any(|f| f.ends_with(".tmp")));
}

#[test]
fn config_file_and_env_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("garnett.conf");
    std::fs::write(&cfg, "# default schedule\ngeneration = 5\nscales = geom(base=4,from=1,to=5)\n").unwrap();
    let out = dir.path().join("g");
    let o = Command::new(env!("CARGO_BIN_EXE_beltrami-lab"))
        .args(["garnett", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("BELTRAMI_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("garnett gen=5: injective=true"));
    let src = beltrami_lab::geometry::load_cloud(&out.join("source.csv")).unwrap();
    assert_eq!(src.len(), 1024);

    let o = Command::new(env!("CARGO_BIN_EXE_beltrami-lab"))
        .args(["exponents", "--p", "2", "--K", "2"])
        .env("BELTRAMI_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn file_coefficient_round_trip() {
    use beltrami_lab::{coeff, field::GridSpec};
    let dir = tempfile::tempdir().unwrap();
    let g = GridSpec::new(128, 2.0).unwrap();
    let mu = coeff::make_radial_stretch_coefficient(2.0, 0.8, &g).unwrap();
    let path = dir.path().join("mu.qcbf");
    beltrami_lab::field::io::save(mu.field(), &path).unwrap();
    let spec = format!("file:{}", path.display());
    let o = run(&["invert", "--coeff", &spec, "--grid", "128", "--set", "random(n=200)", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    let o = run(&["invert", "--coeff", &spec, "--grid", "256", "--set", "random(n=200)"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dimension_of_cloud_file() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = beltrami_lab::geometry::segment_cloud(4096).unwrap();
    let path = dir.path().join("seg.csv");
    beltrami_lab::geometry::save_cloud(&cloud, &path).unwrap();
    let set = format!("file:{}", path.display());
    let o = run(&["dimension", "--set", &set]);
    assert_eq!(o.status.code(), Some(1), "file sets need explicit scales");
    let o = run(&["dimension", "--set", &set, "--scales", "geom(base=2,from=3,to=9)"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("slope=0.9"), "{}", stdout(&o));
}
