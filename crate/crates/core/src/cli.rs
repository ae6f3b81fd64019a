//! Experiment runner behind the `beltrami-lab` binary.
//!
//! Every experiment is described by an [`ExperimentConfig`]: a command and a flat
//! `key = value` map assembled from `--key value` flags and an optional
//! `--config <file>` (flags win). The config is turned into a typed plan, and
//! every parameter is validated, before any numerical work starts.
//!
//! Exit codes: `0` when the experiment's numeric checks pass, `2` when they do not
//! (or the solver fails to converge), `1` on usage or other errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::coeff::{self, BeltramiCoefficient, CoefficientClass, MollifierSpec};
use crate::field::{self, ComplexField, GridSpec};
use crate::geometry::{self, CantorSpec, PointCloud};
use crate::io_util::{atomic_write, fmt17};
use crate::measure::{self, DimensionFit, ReportRow};
use crate::solver::{self, PrincipalSolution};
use crate::{Error, Result};

const MODULE: &str = "cli";

/// Environment variable overriding the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "BELTRAMI_WORKERS";

pub const DEFAULT_RESOLUTION: usize = 512;
pub const DEFAULT_HALF_EXTENT: f64 = 2.0;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;

pub const USAGE: &str = "\
usage: beltrami-lab <command> [--key value ...] [--config file]

commands:
  exponents  --p <real> --K <real>
  solve      --coeff <spec> [--grid N] [--L L] [--tol t] [--max-iter m] [--out dir]
  residual   --coeff <spec> [--grid N] [--L L] [--tol t] [--threshold r] [--out dir]
  invert     --coeff <spec> --set <set> [--grid N] [--tol t] [--seed s] [--out dir]
  dimension  --set <set> [--scales <scales>] [--seed s] [--out dir]
  distort    --coeff <spec> --set <set> [--scales <scales>] [--grid N] [--out dir]
  garnett    [--generation N] [--displacements d1,d2,...] [--scales <scales>] [--out dir]

coefficients: radial(K=..,R=..) | logexample(R=..) | file:<path.qcbf>, optional |mollify(n=..)
              (--K/--R without --coeff mean radial(K=..,R=..))
sets:         cantor(rho=..,gen=..) | segment(n=..) | square(n=..) | garnett(gen=..)
              | random(n=..) | file:<path.csv>
scales:       auto | geom(base=..,from=..,to=..) | comma-separated list of deltas
common:       --workers n (or BELTRAMI_WORKERS), --config file
";

/// The experiments the runner knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Exponents,
    Solve,
    Residual,
    Invert,
    Dimension,
    Distort,
    Garnett,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Exponents,
        Command::Solve,
        Command::Residual,
        Command::Invert,
        Command::Dimension,
        Command::Distort,
        Command::Garnett,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Exponents => "exponents",
            Command::Solve => "solve",
            Command::Residual => "residual",
            Command::Invert => "invert",
            Command::Dimension => "dimension",
            Command::Distort => "distort",
            Command::Garnett => "garnett",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        const SOLVE: &[&str] = &["coeff", "K", "R", "grid", "L", "tol", "max-iter", "out"];
        match self {
            Command::Exponents => &["p", "K", "out"],
            Command::Solve => SOLVE,
            Command::Residual => &["coeff", "K", "R", "grid", "L", "tol", "max-iter", "threshold", "out"],
            Command::Invert => &["coeff", "K", "R", "grid", "L", "tol", "max-iter", "set", "seed", "out"],
            Command::Dimension => &["set", "scales", "seed", "out"],
            Command::Distort => &[
                "coeff", "K", "R", "grid", "L", "tol", "max-iter", "set", "scales", "seed", "out",
            ],
            Command::Garnett => &["generation", "displacements", "scales", "out"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::invalid(MODULE, "parse", "command", format!("unknown command `{s}`")))
    }
}

fn canonical_key(key: &str) -> &str {
    match key {
        "N" => "grid",
        "out-path" => "out",
        "max_iter" => "max-iter",
        k => k,
    }
}

/// A command plus its raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    params: BTreeMap<String, String>,
    workers: Option<usize>,
}

impl ExperimentConfig {
    /// Builds a config, rejecting keys the command does not use.
    pub fn new<K, V>(command: Command, params: impl IntoIterator<Item = (K, V)>) -> Result<Self>
    where
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut cfg = Self {
            command,
            params: BTreeMap::new(),
            workers: None,
        };
        for (k, v) in params {
            cfg.set(k.as_ref(), v.into())?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: String) -> Result<()> {
        let key = canonical_key(key);
        if key == "workers" {
            let n = value
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::invalid(MODULE, "config", "workers", format!("not a positive integer: `{value}`")))?;
            self.workers = Some(n);
            return Ok(());
        }
        if !self.command.keys().contains(&key) {
            return Err(Error::invalid(
                MODULE,
                "config",
                key,
                format!("unknown key for `{}` (accepted: {})", self.command, self.command.keys().join(", ")),
            ));
        }
        self.params.insert(key.to_string(), value);
        Ok(())
    }

    /// Parses `<command> [--key value]...`, reading `--config` first so flags override it.
    pub fn from_args<S: AsRef<str>>(args: &[S]) -> Result<Self> {
        let usage = |reason: String| Error::invalid(MODULE, "parse", "args", reason);
        let (cmd, rest) = args.split_first().ok_or_else(|| usage("missing command".into()))?;
        let command: Command = cmd.as_ref().parse()?;
        let mut flags = Vec::new();
        let mut it = rest.iter().map(AsRef::as_ref);
        while let Some(flag) = it.next() {
            let key = flag
                .strip_prefix("--")
                .ok_or_else(|| usage(format!("expected --key, got `{flag}`")))?;
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (k, v.to_string()),
                None => (
                    key,
                    it.next()
                        .ok_or_else(|| usage(format!("flag --{key} needs a value")))?
                        .to_string(),
                ),
            };
            flags.push((key.to_string(), value));
        }
        let mut cfg = Self::new(command, Vec::<(String, String)>::new())?;
        for (_, path) in flags.iter().filter(|(k, _)| k == "config") {
            for (k, v) in read_config_file(Path::new(path))? {
                cfg.set(&k, v)?;
            }
        }
        for (k, v) in flags.into_iter().filter(|(k, _)| k != "config") {
            cfg.set(&k, v)?;
        }
        Ok(cfg)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(canonical_key(key)).map(String::as_str)
    }

    pub fn params(&self) -> &BTreeMap<String, String> {
        &self.params
    }

    /// Worker count: `--workers`, then the environment, then all cores.
    pub fn workers(&self) -> Result<Option<usize>> {
        if self.workers.is_some() {
            return Ok(self.workers);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .map(Some)
                .ok_or_else(|| Error::invalid(MODULE, "config", WORKERS_ENV, format!("not a positive integer: `{v}`"))),
            Err(_) => Ok(None),
        }
    }
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(j) => &line[..j],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Format {
            module: MODULE,
            op: "read_config_file",
            reason: format!("{}:{}: expected `key = value`", path.display(), i + 1),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits `name(k=v,...)` into its name and arguments.
fn parse_call(s: &str, what: &'static str) -> Result<(String, BTreeMap<String, String>)> {
    let bad = |reason: String| Error::invalid(MODULE, "parse", what, reason);
    let s = s.trim();
    let Some(open) = s.find('(') else {
        return Ok((s.to_string(), BTreeMap::new()));
    };
    let inner = s[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| bad(format!("missing `)` in `{s}`")))?;
    let mut args = BTreeMap::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
        if args.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(bad(format!("duplicate key `{}` in `{s}`", k.trim())));
        }
    }
    Ok((s[..open].trim().to_string(), args))
}

fn take<T: FromStr>(args: &mut BTreeMap<String, String>, key: &str, what: &'static str) -> Result<T> {
    let v = args
        .remove(key)
        .ok_or_else(|| Error::invalid(MODULE, "parse", what, format!("missing `{key}`")))?;
    v.parse()
        .map_err(|_| Error::invalid(MODULE, "parse", what, format!("cannot parse {key}=`{v}`")))
}

fn no_more(args: BTreeMap<String, String>, what: &'static str) -> Result<()> {
    match args.keys().next() {
        Some(k) => Err(Error::invalid(MODULE, "parse", what, format!("unknown argument `{k}`"))),
        None => Ok(()),
    }
}

/// Base coefficient of a [`CoeffSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffBase {
    Radial { k: f64, r: f64 },
    LogExample { r: f64 },
    File(PathBuf),
}

/// Parsed coefficient spec: `radial(K=..,R=..)`, `logexample(R=..)` or
/// `file:<path>`, with an optional `|mollify(n=..)` suffix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSpec {
    pub base: CoeffBase,
    pub mollify: Option<u32>,
}

impl FromStr for CoeffSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const W: &str = "coeff";
        let (base, suffix) = match s.split_once('|') {
            Some((b, m)) => (b.trim(), Some(m.trim())),
            None => (s.trim(), None),
        };
        let base = if let Some(path) = base.strip_prefix("file:") {
            CoeffBase::File(PathBuf::from(path))
        } else {
            let (name, mut args) = parse_call(base, W)?;
            let b = match name.as_str() {
                "radial" => CoeffBase::Radial {
                    k: take(&mut args, "K", W)?,
                    r: take(&mut args, "R", W)?,
                },
                "logexample" => CoeffBase::LogExample { r: take(&mut args, "R", W)? },
                other => {
                    return Err(Error::invalid(MODULE, "parse", W, format!("unknown coefficient `{other}`")))
                }
            };
            no_more(args, W)?;
            b
        };
        let mollify = match suffix {
            None => None,
            Some(m) => {
                let (name, mut args) = parse_call(m, W)?;
                if name != "mollify" {
                    return Err(Error::invalid(MODULE, "parse", W, format!("unknown modifier `{name}`")));
                }
                let n: u32 = take(&mut args, "n", W)?;
                no_more(args, W)?;
                MollifierSpec::new(n)?;
                Some(n)
            }
        };
        let spec = Self { base, mollify };
        spec.check()?;
        Ok(spec)
    }
}

impl CoeffSpec {
    fn check(&self) -> Result<()> {
        let bad = |p: &str, r: String| Err(Error::invalid(MODULE, "parse", format!("coeff.{p}"), r));
        match self.base {
            CoeffBase::Radial { k, r } => {
                if !(k.is_finite() && k >= 1.0) {
                    return bad("K", format!("need K >= 1, got {k}"));
                }
                if !(r.is_finite() && r > 0.0) {
                    return bad("R", format!("need R > 0, got {r}"));
                }
            }
            CoeffBase::LogExample { r } => {
                if !(r > 0.0 && r < 1.0) {
                    return bad("R", format!("need 0 < R < 1, got {r}"));
                }
            }
            CoeffBase::File(_) => {}
        }
        Ok(())
    }

    /// Samples the coefficient on `grid`, mollifying if requested.
    pub fn build(&self, grid: &GridSpec) -> Result<BeltramiCoefficient> {
        let mu = match &self.base {
            CoeffBase::Radial { k, r } => coeff::make_radial_stretch_coefficient(*k, *r, grid)?,
            CoeffBase::LogExample { r } => coeff::make_log_example_coefficient(*r, grid)?,
            CoeffBase::File(path) => {
                let f = field::io::load(path)?;
                if f.grid() != grid {
                    return Err(Error::invalid(
                        MODULE,
                        "CoeffSpec::build",
                        "coeff",
                        format!(
                            "{} holds an N={} L={} field, the experiment uses N={} L={}",
                            path.display(),
                            f.grid().resolution(),
                            f.grid().half_extent(),
                            grid.resolution(),
                            grid.half_extent()
                        ),
                    ));
                }
                let support = support_radius_of(&f);
                BeltramiCoefficient::from_field(f, support)?.with_label(format!("file:{}", path.display()))
            }
        };
        match self.mollify {
            Some(n) => coeff::mollify(&mu, MollifierSpec::new(n)?),
            None => Ok(mu),
        }
    }
}

/// Smallest radius outside which every sample vanishes, padded by one cell.
fn support_radius_of(f: &ComplexField) -> f64 {
    let g = f.grid();
    let r = (0..g.len())
        .filter(|&i| f.samples()[i] != Complex64::new(0.0, 0.0))
        .map(|i| g.point_at(i).norm())
        .fold(0.0, f64::max);
    if r == 0.0 {
        0.0
    } else {
        (r + g.spacing()).min(0.5 * g.half_extent())
    }
}

/// Parsed point-set spec.
#[derive(Debug, Clone, PartialEq)]
pub enum SetSpec {
    Cantor { rho: f64, generation: u32 },
    Segment { count: usize },
    Square { count: usize },
    Garnett { generation: u32 },
    Random { count: usize },
    File(PathBuf),
}

impl FromStr for SetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const W: &str = "set";
        if let Some(path) = s.trim().strip_prefix("file:") {
            return Ok(SetSpec::File(PathBuf::from(path)));
        }
        let (name, mut args) = parse_call(s, W)?;
        let spec = match name.as_str() {
            "cantor" => SetSpec::Cantor {
                rho: take(&mut args, "rho", W)?,
                generation: take(&mut args, "gen", W)?,
            },
            "segment" => SetSpec::Segment { count: take(&mut args, "n", W)? },
            "square" => SetSpec::Square { count: take(&mut args, "n", W)? },
            "garnett" => SetSpec::Garnett { generation: take(&mut args, "gen", W)? },
            "random" => SetSpec::Random { count: take(&mut args, "n", W)? },
            other => return Err(Error::invalid(MODULE, "parse", W, format!("unknown set `{other}`"))),
        };
        no_more(args, W)?;
        match spec {
            SetSpec::Cantor { rho, generation } => {
                CantorSpec::new(generation, rho)?;
            }
            SetSpec::Garnett { generation } => {
                CantorSpec::quarter(generation)?;
            }
            SetSpec::Segment { count } | SetSpec::Square { count } | SetSpec::Random { count } if count < 2 => {
                return Err(Error::invalid(MODULE, "parse", "set.n", format!("need n >= 2, got {count}")));
            }
            _ => {}
        }
        Ok(spec)
    }
}

impl SetSpec {
    pub fn build(&self, seed: u64) -> Result<PointCloud> {
        match self {
            SetSpec::Cantor { rho, generation } => geometry::cantor_cloud(&CantorSpec::new(*generation, *rho)?),
            SetSpec::Segment { count } => geometry::segment_cloud(*count),
            SetSpec::Square { count } => geometry::square_cloud(*count),
            SetSpec::Garnett { generation } => {
                let spec = CantorSpec::quarter(*generation)?;
                geometry::garnett_map(&spec, &geometry::default_garnett_displacements(&spec))
            }
            SetSpec::Random { count } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let pts = (0..*count)
                    .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                    .collect();
                PointCloud::new(pts, format!("random(n={count},seed={seed})"))
            }
            SetSpec::File(path) => geometry::load_cloud(path),
        }
    }

    pub fn generation(&self) -> Option<u32> {
        match self {
            SetSpec::Cantor { generation, .. } | SetSpec::Garnett { generation } => Some(*generation),
            _ => None,
        }
    }

    /// Dimension the set is expected to have, when known.
    pub fn expected_dimension(&self) -> Option<f64> {
        match self {
            SetSpec::Cantor { rho, .. } => Some(4f64.ln() / (1.0 / rho).ln()),
            SetSpec::Segment { .. } | SetSpec::Garnett { .. } => Some(1.0),
            SetSpec::Square { .. } => Some(2.0),
            _ => None,
        }
    }

    /// Scales matched to the set's construction.
    pub fn auto_scales(&self) -> Option<Vec<f64>> {
        match self {
            SetSpec::Cantor { rho, generation } => {
                let last = (*generation as i32 - 1).max(5);
                Some(measure::geometric_scales(1.0 / rho, 1, last))
            }
            SetSpec::Garnett { .. } => Some(measure::geometric_scales(4.0, 1, 5)),
            SetSpec::Segment { .. } => Some(measure::geometric_scales(2.0, 3, 9)),
            SetSpec::Square { .. } | SetSpec::Random { .. } => Some(measure::geometric_scales(2.0, 2, 7)),
            SetSpec::File(_) => None,
        }
    }
}

/// Scale list: `auto`, `geom(base=..,from=..,to=..)` or explicit deltas.
#[derive(Debug, Clone, PartialEq)]
pub enum ScaleSpec {
    Auto,
    List(Vec<f64>),
}

impl FromStr for ScaleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        const W: &str = "scales";
        let s = s.trim();
        if s == "auto" {
            return Ok(ScaleSpec::Auto);
        }
        if s.starts_with("geom") {
            let (_, mut args) = parse_call(s, W)?;
            let base: f64 = take(&mut args, "base", W)?;
            let from: i32 = take(&mut args, "from", W)?;
            let to: i32 = take(&mut args, "to", W)?;
            no_more(args, W)?;
            if !(base > 1.0) || to < from {
                return Err(Error::invalid(MODULE, "parse", W, "need base > 1 and from <= to"));
            }
            return Ok(ScaleSpec::List(measure::geometric_scales(base, from, to)));
        }
        let list = s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|d| *d > 0.0 && d.is_finite())
                    .ok_or_else(|| Error::invalid(MODULE, "parse", W, format!("bad scale `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScaleSpec::List(list))
    }
}

impl ScaleSpec {
    fn resolve(&self, set: &SetSpec) -> Result<Vec<f64>> {
        match self {
            ScaleSpec::List(v) => Ok(v.clone()),
            ScaleSpec::Auto => set.auto_scales().ok_or_else(|| {
                Error::invalid(MODULE, "plan", "scales", "no automatic scales for file sets; pass --scales")
            }),
        }
    }
}

#[derive(Debug, Clone)]
struct SolveParams {
    coeff: CoeffSpec,
    grid: GridSpec,
    tol: f64,
    max_iter: usize,
}

impl SolveParams {
    fn solve(&self) -> Result<PrincipalSolution> {
        let mu = self.coeff.build(&self.grid)?;
        solver::neumann_solve(&mu, self.tol, self.max_iter)
    }
}

/// A validated experiment.
#[derive(Debug, Clone)]
enum Plan {
    Exponents { p: f64, k: f64 },
    Solve(SolveParams),
    Residual { solve: SolveParams, threshold: f64 },
    Invert { solve: SolveParams, set: SetSpec, seed: u64 },
    Dimension { set: SetSpec, scales: Vec<f64>, seed: u64 },
    Distort { solve: SolveParams, set: SetSpec, scales: Vec<f64>, seed: u64 },
    Garnett { generation: u32, displacements: Option<Vec<f64>>, scales: Vec<f64> },
}

impl ExperimentConfig {
    fn num<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::invalid(MODULE, "plan", key, format!("cannot parse `{v}`")))
            })
            .transpose()
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(MODULE, "plan", key, format!("`{}` needs --{key}", self.command)))
    }

    fn solve_params(&self) -> Result<SolveParams> {
        let coeff: CoeffSpec = match (self.get("coeff"), self.num::<f64>("K")?) {
            (Some(c), None) if self.get("R").is_none() => c.parse()?,
            (None, Some(k)) => {
                let r = self.num::<f64>("R")?.unwrap_or(0.8);
                format!("radial(K={k},R={r})").parse()?
            }
            (Some(_), _) => {
                return Err(Error::invalid(MODULE, "plan", "coeff", "give either --coeff or --K/--R, not both"))
            }
            (None, None) => return Err(Error::invalid(MODULE, "plan", "coeff", "missing --coeff")),
        };
        let n = self.num::<usize>("grid")?.unwrap_or(DEFAULT_RESOLUTION);
        let l = self.num::<f64>("L")?.unwrap_or(DEFAULT_HALF_EXTENT);
        let grid = GridSpec::new(n, l)?;
        let tol = self.num::<f64>("tol")?.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid(MODULE, "plan", "tol", format!("need tol > 0, got {tol}")));
        }
        let max_iter = self.num::<usize>("max-iter")?.unwrap_or(DEFAULT_MAX_ITER);
        if max_iter == 0 {
            return Err(Error::invalid(MODULE, "plan", "max-iter", "need max-iter >= 1"));
        }
        if let CoeffBase::Radial { r, .. } = coeff.base {
            if r > 0.5 * l {
                return Err(Error::invalid(MODULE, "plan", "coeff.R", format!("support radius {r} exceeds L/2")));
            }
        }
        Ok(SolveParams { coeff, grid, tol, max_iter })
    }

    fn set_spec(&self) -> Result<SetSpec> {
        self.require("set")?.parse()
    }

    fn scales(&self, set: &SetSpec) -> Result<Vec<f64>> {
        let spec: ScaleSpec = self.get("scales").unwrap_or("auto").parse()?;
        let scales = spec.resolve(set)?;
        if scales.len() < measure::MIN_SCALES {
            return Err(Error::invalid(
                MODULE,
                "plan",
                "scales",
                format!("need at least {} scales, got {}", measure::MIN_SCALES, scales.len()),
            ));
        }
        Ok(scales)
    }

    fn seed(&self) -> Result<u64> {
        Ok(self.num::<u64>("seed")?.unwrap_or(0))
    }

    fn plan(&self) -> Result<Plan> {
        Ok(match self.command {
            Command::Exponents => {
                let p = self
                    .num::<f64>("p")?
                    .ok_or_else(|| Error::invalid(MODULE, "plan", "p", "missing --p"))?;
                let k = self
                    .num::<f64>("K")?
                    .ok_or_else(|| Error::invalid(MODULE, "plan", "K", "missing --K"))?;
                coeff::critical_exponents(p, k)?;
                Plan::Exponents { p, k }
            }
            Command::Solve => Plan::Solve(self.solve_params()?),
            Command::Residual => {
                let solve = self.solve_params()?;
                let threshold = self.num::<f64>("threshold")?.unwrap_or(10.0 * solve.tol);
                if !(threshold > 0.0) {
                    return Err(Error::invalid(MODULE, "plan", "threshold", "need threshold > 0"));
                }
                Plan::Residual { solve, threshold }
            }
            Command::Invert => Plan::Invert {
                solve: self.solve_params()?,
                set: self.set_spec()?,
                seed: self.seed()?,
            },
            Command::Dimension => {
                let set = self.set_spec()?;
                Plan::Dimension {
                    scales: self.scales(&set)?,
                    set,
                    seed: self.seed()?,
                }
            }
            Command::Distort => {
                let set = self.set_spec()?;
                Plan::Distort {
                    solve: self.solve_params()?,
                    scales: self.scales(&set)?,
                    set,
                    seed: self.seed()?,
                }
            }
            Command::Garnett => {
                let generation = self.num::<u32>("generation")?.unwrap_or(6);
                CantorSpec::quarter(generation)?;
                let displacements = self
                    .get("displacements")
                    .map(|s| {
                        s.split(',')
                            .map(|v| {
                                v.trim().parse::<f64>().map_err(|_| {
                                    Error::invalid(MODULE, "plan", "displacements", format!("bad value `{v}`"))
                                })
                            })
                            .collect::<Result<Vec<f64>>>()
                    })
                    .transpose()?;
                let set = SetSpec::Garnett { generation };
                Plan::Garnett {
                    generation,
                    displacements,
                    scales: self.scales(&set)?,
                }
            }
        })
    }

    fn out_dir(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }
}

/// Result of a finished experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    /// Whether the experiment's numeric checks held.
    pub pass: bool,
    /// One-line human summary.
    pub summary: String,
    /// Files written, in order.
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// Exit status for a finished or failed run.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(Error::NonConvergence { .. }) => 2,
        Err(_) => 1,
    }
}

/// Validates and executes the experiment, writing artifacts under `--out`.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    let plan = config.plan()?;
    let out = config.out_dir();
    let exec = || execute(config.command, plan, out.as_deref());
    match config.workers()? {
        None => exec(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(MODULE, "run", "workers", e.to_string()))?
            .install(exec),
    }
}

/// Entry point used by the binary: parse, run, print, return the exit code.
pub fn main_with_args<S: AsRef<str>>(args: &[S]) -> i32 {
    if args.is_empty() || matches!(args[0].as_ref(), "-h" | "--help" | "help") {
        print!("{USAGE}");
        return if args.is_empty() { 1 } else { 0 };
    }
    let result = ExperimentConfig::from_args(args).and_then(|cfg| run(&cfg));
    match &result {
        Ok(o) => println!("{}", o.summary),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::InvalidParameter { module: MODULE, op: "parse", .. }) {
                eprint!("{USAGE}");
            }
        }
    }
    exit_code(&result)
}

struct Artifacts<'a> {
    dir: Option<&'a Path>,
    written: Vec<PathBuf>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Self> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
        if let Some(d) = self.dir {
            let path = d.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            atomic_write(&path, f)?;
            self.written.push(path);
        }
        Ok(())
    }

    fn report(&mut self, rows: &[ReportRow]) -> Result<()> {
        self.write("report.csv", |w| measure::write_report_csv(rows, w))
    }

    fn cloud(&mut self, name: &str, cloud: &PointCloud) -> Result<()> {
        self.write(name, |w| geometry::write_cloud_csv(cloud, w))
    }

    /// Writes one CSV per curve under `plot/` plus a gnuplot script drawing them.
    fn plot(&mut self, name: &str, labels: (&str, &str), curves: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
        for (curve, pts) in curves {
            self.write(&format!("plot/{name}_{curve}.csv"), |w| {
                let mut wtr = csv::Writer::from_writer(w);
                wtr.write_record([labels.0, labels.1])?;
                for (x, y) in pts {
                    wtr.write_record([fmt17(*x), fmt17(*y)])?;
                }
                wtr.flush()?;
                Ok(())
            })?;
        }
        self.write(&format!("plot/{name}.gp"), |w| {
            use std::io::Write;
            writeln!(w, "set datafile separator ','")?;
            writeln!(w, "set key autotitle columnhead")?;
            writeln!(w, "set xlabel '{}'", labels.0)?;
            writeln!(w, "set ylabel '{}'", labels.1)?;
            let parts: Vec<String> = curves
                .iter()
                .map(|(c, _)| format!("'{name}_{c}.csv' using 1:2 with linespoints title '{c}'"))
                .collect();
            writeln!(w, "plot {}", parts.join(", \\\n     "))?;
            Ok(())
        })
    }
}

fn fit_points(fit: &DimensionFit) -> Vec<(f64, f64)> {
    fit.counts.iter().map(|&(d, n)| ((1.0 / d).ln(), (n as f64).ln())).collect()
}

fn min_jacobian_in_safe_disk(sol: &PrincipalSolution) -> f64 {
    let g = sol.grid();
    let r = 0.5 * g.half_extent();
    let jac = sol.jacobian();
    (0..g.len())
        .filter(|&i| g.point_at(i).norm() <= r)
        .map(|i| jac.samples()[i].re)
        .fold(f64::INFINITY, f64::min)
}

fn class_exponent(class: CoefficientClass) -> Option<f64> {
    match class {
        CoefficientClass::Sobolev12 => Some(2.0),
        CoefficientClass::General => None,
    }
}

fn execute(command: Command, plan: Plan, out: Option<&Path>) -> Result<Outcome> {
    let mut art = Artifacts::new(out)?;
    let (pass, summary) = match plan {
        Plan::Exponents { p, k } => {
            let r = coeff::critical_exponents(p, k)?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "none".into());
            art.write("exponents.csv", |w| {
                let mut wtr = csv::Writer::from_writer(w);
                wtr.write_record(["p", "K", "q0", "p0", "r_sup"])?;
                let o = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
                wtr.write_record([fmt17(p), fmt17(k), fmt17(r.q0), o(r.p0), o(r.r_sup)])?;
                wtr.flush()?;
                Ok(())
            })?;
            (
                true,
                format!("exponents p={p} K={k}: q0={} p0={} r_sup={}", r.q0, opt(r.p0), opt(r.r_sup)),
            )
        }
        Plan::Solve(sp) => {
            let sol = sp.solve()?;
            let jmin = min_jacobian_in_safe_disk(&sol);
            if let Some(d) = out {
                sol.save(d)?;
                for name in ["h.qcbf", "dphi.qcbf", "displacement.qcbf", "meta.txt"] {
                    art.written.push(d.join(name));
                }
            }
            let trace: Vec<(f64, f64)> = sol.trace().iter().enumerate().map(|(i, &r)| ((i + 1) as f64, r)).collect();
            art.plot("trace", ("iteration", "increment"), &[("neumann", trace)])?;
            (
                jmin > 0.0,
                format!(
                    "solve {} N={} K={:.6} iterations={} residual={:e} min_jacobian={:e}",
                    sol.mu().label(),
                    sp.grid.resolution(),
                    sol.mu().ellipticity(),
                    sol.iterations(),
                    sol.residual(),
                    jmin
                ),
            )
        }
        Plan::Residual { solve: sp, threshold } => {
            let sol = sp.solve()?;
            let mu = sol.mu();
            let strong = solver::equation_residual(sol.dphi(), &sol.dzbar_phi(), mu)?;
            let g = sp.grid;
            let test = solver::bump_test_function(&g, Complex64::new(0.0, 0.0), 0.45 * g.half_extent())?;
            let weak = solver::weak_residual(&sol.phi(), mu, &test)?.norm();
            let smooth = if sp.coeff.mollify.is_some() {
                mu.clone()
            } else {
                coeff::mollify(mu, MollifierSpec::for_grid(&g))?
            };
            let ld = solver::log_derivative_solve(&smooth, sp.tol, sp.max_iter)?;
            art.write("residual.csv", |w| {
                let mut wtr = csv::Writer::from_writer(w);
                wtr.write_record(["quantity", "value"])?;
                wtr.write_record(["strong".to_string(), fmt17(strong)])?;
                wtr.write_record(["weak".to_string(), fmt17(weak)])?;
                wtr.write_record(["log_derivative".to_string(), fmt17(ld.residual)])?;
                wtr.write_record(["iterations".to_string(), sol.iterations().to_string()])?;
                wtr.flush()?;
                Ok(())
            })?;
            (
                strong <= threshold,
                format!(
                    "residual {} N={}: strong={strong:e} (threshold {threshold:e}) weak={weak:e} log_derivative={:e}",
                    mu.label(),
                    g.resolution(),
                    ld.residual
                ),
            )
        }
        Plan::Invert { solve: sp, set, seed } => {
            let sol = sp.solve()?;
            let cloud = set.build(seed)?;
            let image = geometry::map_cloud(&sol, &cloud)?;
            let tol = sp.tol.max(1e-13);
            let back = solver::invert_map(&sol, &image, tol)?;
            let round_trip = cloud
                .points()
                .iter()
                .zip(back.points())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let nu = coeff::inverse_coefficient(sol.mu(), &sol)?;
            let sup_gap = (nu.sup_bound() - sol.mu().sup_bound()).abs();
            art.cloud("source.csv", &cloud)?;
            art.cloud("image.csv", &image)?;
            art.cloud("preimage.csv", &back)?;
            art.write("nu.qcbf", |w| field::io::write_qcbf1(nu.field(), w))?;
            let limit = 1e3 * tol;
            (
                round_trip <= limit,
                format!(
                    "invert {} on {} ({} points): round_trip={round_trip:e} (limit {limit:e}) sup|nu|-sup|mu|={sup_gap:e}",
                    sol.mu().label(),
                    cloud.label(),
                    cloud.len()
                ),
            )
        }
        Plan::Dimension { set, scales, seed } => {
            let cloud = set.build(seed)?;
            let fit = measure::box_dimension(&cloud, &scales)?;
            let expected = set.expected_dimension();
            let pass = fit.in_range() && expected.is_none_or(|e| (fit.slope - e).abs() <= measure::PRESERVATION_SLACK);
            art.report(&[ReportRow {
                experiment: "dimension".into(),
                param: cloud.label().to_string(),
                k: 1.0,
                p: None,
                set: cloud.label().to_string(),
                generation: set.generation(),
                dim_source: fit.slope,
                dim_image: fit.slope,
                bound: expected.unwrap_or(fit.slope),
                pass,
            }])?;
            art.plot("counts", ("log_inv_delta", "log_count"), &[("set", fit_points(&fit))])?;
            (
                pass,
                format!(
                    "dimension {}: slope={:.6} r2={:.6} expected={}",
                    cloud.label(),
                    fit.slope,
                    fit.r_squared,
                    expected.map(|e| format!("{e:.6}")).unwrap_or_else(|| "unknown".into())
                ),
            )
        }
        Plan::Distort { solve: sp, set, scales, seed } => {
            let sol = sp.solve()?;
            let cloud = set.build(seed)?;
            let rep = measure::distortion_with_solution(&sol, &cloud, &scales)?;
            art.report(&[ReportRow {
                experiment: "distort".into(),
                param: rep.coefficient.clone(),
                k: rep.ellipticity,
                p: class_exponent(rep.class),
                set: rep.set.clone(),
                generation: set.generation(),
                dim_source: rep.source.slope,
                dim_image: rep.image.slope,
                bound: rep.bound,
                pass: rep.pass,
            }])?;
            art.plot(
                "counts",
                ("log_inv_delta", "log_count"),
                &[("source", fit_points(&rep.source)), ("image", fit_points(&rep.image))],
            )?;
            (
                rep.pass,
                format!(
                    "distort {} on {}: dim_source={:.6} dim_image={:.6} bound={:.6} K={:.6}",
                    rep.coefficient, rep.set, rep.source.slope, rep.image.slope, rep.bound, rep.ellipticity
                ),
            )
        }
        Plan::Garnett { generation, displacements, scales } => {
            let spec = CantorSpec::quarter(generation)?;
            let d = displacements.unwrap_or_else(|| geometry::default_garnett_displacements(&spec));
            let src = geometry::cantor_cloud(&spec)?;
            let img = geometry::garnett_map(&spec, &d)?;
            let total: f64 = d.iter().sum();
            let moved = src
                .points()
                .iter()
                .zip(img.points())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            let mut keys: Vec<(u64, u64)> = img.points().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect();
            keys.sort_unstable();
            keys.dedup();
            let injective = keys.len() == img.len();
            let fs = measure::box_dimension(&src, &scales)?;
            let fi = measure::box_dimension(&img, &scales)?;
            let near_one = |f: &DimensionFit| (f.slope - 1.0).abs() <= measure::PRESERVATION_SLACK;
            let pass = injective && moved <= total && near_one(&fs) && near_one(&fi);
            art.cloud("source.csv", &src)?;
            art.cloud("image.csv", &img)?;
            art.report(&[ReportRow {
                experiment: "garnett".into(),
                param: format!("sum_d={}", fmt17(total)),
                k: 1.0,
                p: None,
                set: src.label().to_string(),
                generation: Some(generation),
                dim_source: fs.slope,
                dim_image: fi.slope,
                bound: 1.0,
                pass,
            }])?;
            art.plot(
                "counts",
                ("log_inv_delta", "log_count"),
                &[("source", fit_points(&fs)), ("image", fit_points(&fi))],
            )?;
            (
                pass,
                format!(
                    "garnett gen={generation}: injective={injective} max_move={moved:e} sum_d={total:e} dim_source={:.6} dim_image={:.6}",
                    fs.slope, fi.slope
                ),
            )
        }
    };
    Ok(Outcome {
        command,
        pass,
        summary,
        artifacts: art.written,
    })
}
