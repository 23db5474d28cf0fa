//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bezdek::{bezdek_scan, classify_plane, BezdekConfig};
use crate::body::{
    classify_body, direction_scan, fit_mirror, mvee, orthogonal_reflection_scan, sample_boundary,
    AffineHyperplane, BodyOracle, BodySpec, ClassifyConfig, DirectionScanConfig, OrthoScanConfig,
    ReflectionConfig,
};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::quadric::{ground, spectrum_partition, Ellipsoid, EllipsoidSpec, ProjHyperplane, ProjLine};
use crate::section::{chart_loop, cover_scan, fiber, track_fiber, CoverScanConfig, FiberTolerances, TrackConfig};

pub const VERSION: &str = concat!("reflecta ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "reflecta", version, about = "Reflection geometry of ellipsoids and convex bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Common {
    /// Spec file path, or inline JSON.
    #[arg(long, global = true)]
    input: Option<String>,
    /// Number of samples (command-specific default).
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Acceptance threshold for residuals.
    #[arg(long, global = true, default_value_t = 1e-3)]
    threshold: f64,
    /// Binormal tolerance (ellipsoid commands) or bisection tolerance (body
    /// commands); command-specific default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = crate::quadric::DEFAULT_GROUPING_TOL)]
    grouping_tol: f64,
    /// Enclosing-ellipsoid accuracy.
    #[arg(long, global = true, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; falls back to REFLECTA_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
enum Command {
    /// Eigenvalue groups and binormal lengths of an ellipsoid.
    Spectrum,
    /// Ground hyperplane of a diagonal line.
    Ground {
        /// Comma-separated direction.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        line: Vec<f64>,
    },
    /// Diagonal lines whose ground hyperplane is the given one.
    Fiber {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        normal: Vec<f64>,
    },
    /// Fiber-size histogram over random hyperplanes.
    CoverScan,
    /// Tracks the fiber around a loop of hyperplanes.
    Monodromy {
        /// Loop center (hyperplane normal).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        normal: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        steps: usize,
    },
    /// Midpoint hyperplane of chords parallel to a line.
    MirrorFit {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        line: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        grid: usize,
    },
    /// Reflection test over random directions.
    DirectionScan,
    /// Directions of orthogonal reflections.
    OrthoScan,
    /// Minimum-volume enclosing ellipsoid of points or of a body's boundary.
    Mvee,
    /// Ellipsoid / rotational / other verdict.
    Classify,
    /// Bezdek fractions over random planes (bodies in ℝ³).
    BezdekScan {
        #[arg(long)]
        include_empty: bool,
    },
    /// Bezdek verdict for one plane.
    ClassifyPlane {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        normal: Vec<f64>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset: f64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Ground { .. } => "ground",
            Command::Fiber { .. } => "fiber",
            Command::CoverScan => "cover-scan",
            Command::Monodromy { .. } => "monodromy",
            Command::MirrorFit { .. } => "mirror-fit",
            Command::DirectionScan => "direction-scan",
            Command::OrthoScan => "ortho-scan",
            Command::Mvee => "mvee",
            Command::Classify => "classify",
            Command::BezdekScan { .. } => "bezdek-scan",
            Command::ClassifyPlane { .. } => "classify-plane",
        }
    }

    fn default_samples(&self) -> usize {
        match self {
            Command::CoverScan => 1000,
            Command::DirectionScan => 500,
            Command::OrthoScan => 300,
            Command::Classify => 200,
            Command::BezdekScan { .. } => 200,
            _ => 1,
        }
    }

    fn is_ellipsoid_command(&self) -> bool {
        matches!(
            self,
            Command::Spectrum
                | Command::Ground { .. }
                | Command::Fiber { .. }
                | Command::CoverScan
                | Command::Monodromy { .. }
        )
    }
}

/// The resolved configuration, embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    command: Command,
    input: Option<String>,
    samples: usize,
    seed: u64,
    tol: f64,
    grouping_tol: f64,
    threshold: f64,
    eps: f64,
    output: Option<PathBuf>,
    format: Format,
    threads: Option<usize>,
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("--samples must be at least 1".into()));
        }
        for (name, v) in [
            ("tol", self.tol),
            ("grouping-tol", self.grouping_tol),
            ("threshold", self.threshold),
            ("eps", self.eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("--{name} must be positive, got {v}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// One CSV cell.
enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn with_vector(mut self, prefix: &str, n: usize) -> Self {
        self.header.extend((0..n).map(|i| format!("{prefix}{i}")));
        self
    }

    fn render(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn nums(v: &[f64]) -> impl Iterator<Item = Cell> + '_ {
    v.iter().map(|x| Cell::Num(*x))
}

fn read_input(input: &Option<String>) -> Result<String> {
    let Some(s) = input else {
        return Err(Error::InvalidArgument("--input is required".into()));
    };
    let t = s.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        Ok(s.clone())
    } else {
        fs::read_to_string(s).map_err(|e| Error::InvalidArgument(format!("cannot read {s}: {e}")))
    }
}

fn load_ellipsoid(cfg: &RunConfig) -> Result<Ellipsoid> {
    let text = read_input(&cfg.input)?;
    let bad = |e: serde_json::Error| Error::InvalidSpec(e.to_string());
    let mut value: Value = serde_json::from_str(&text).map_err(bad)?;
    // Body specs of kind "ellipsoid" are accepted as well.
    if let Some(obj) = value.as_object_mut() {
        if let Some(kind) = obj.remove("kind") {
            if kind != "ellipsoid" {
                return Err(Error::InvalidSpec(format!("expected an ellipsoid, got kind {kind}")));
            }
        }
    }
    let spec: EllipsoidSpec = serde_json::from_value(value).map_err(bad)?;
    spec.build()
}

fn load_body(cfg: &RunConfig) -> Result<BodyOracle> {
    BodySpec::from_json(&read_input(&cfg.input)?)?.build()
}

fn check_dim(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn reflection_config(cfg: &RunConfig) -> ReflectionConfig {
    ReflectionConfig {
        tol: cfg.tol,
        threshold: cfg.threshold,
        seed: cfg.seed,
        ..Default::default()
    }
}

fn fiber_tolerances(cfg: &RunConfig) -> FiberTolerances {
    FiberTolerances {
        binormal: cfg.tol,
        grouping: cfg.grouping_tol,
        ..FiberTolerances::scan()
    }
}

fn execute(cfg: &RunConfig) -> Result<(Value, Table)> {
    match &cfg.command {
        Command::Spectrum => {
            let e = load_ellipsoid(cfg)?;
            let p = spectrum_partition(&e, cfg.grouping_tol)?;
            let mut t = Table::new(&["group", "eigenvalue", "lambda", "dim"]);
            for (i, g) in p.groups.iter().enumerate() {
                t.rows.push(vec![i.into(), g.eigenvalue.into(), g.binormal_length.into(), g.dim().into()]);
            }
            let groups: Vec<Value> = p
                .groups
                .iter()
                .map(|g| {
                    json!({
                        "eigenvalue": g.eigenvalue,
                        "lambda": g.binormal_length,
                        "basis": g.basis.iter().map(|b| b.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok((
                json!({"k": p.k, "lambdas": p.lengths(), "dims": p.dims(), "groups": groups}),
                t,
            ))
        }
        Command::Ground { line } => {
            let e = load_ellipsoid(cfg)?;
            check_dim(line.len(), e.dim())?;
            let l = ProjLine::from_slice(line)?;
            let g = ground(&e, &l, cfg.tol)?;
            let t = Table {
                header: (0..e.dim()).map(|i| format!("n{i}")).collect(),
                rows: vec![nums(&g.to_vec()).collect()],
            };
            Ok((json!({"line": l, "ground": g}), t))
        }
        Command::Fiber { normal } => {
            let e = load_ellipsoid(cfg)?;
            check_dim(normal.len(), e.dim())?;
            let g = ProjHyperplane::from_slice(normal)?;
            let f = fiber(&e, &g, &fiber_tolerances(cfg))?;
            let mut t = Table::new(&["length"]).with_vector("d", e.dim());
            for fl in &f.lines {
                t.rows.push(std::iter::once(fl.length.into()).chain(nums(&fl.line.to_vec())).collect());
            }
            Ok((to_value(&f), t))
        }
        Command::CoverScan => {
            let e = load_ellipsoid(cfg)?;
            let config = CoverScanConfig {
                samples: cfg.samples,
                seed: cfg.seed,
                tol: fiber_tolerances(cfg),
                ..Default::default()
            };
            let r = cover_scan(&e, &config)?;
            let mut t = Table::new(&["index", "fiber_size", "min_margin"]).with_vector("n", e.dim());
            for row in &r.rows {
                let size = row.fiber_size.map_or(Cell::Text(String::new()), Cell::from);
                t.rows.push(
                    [row.index.into(), size, row.min_margin.into()]
                        .into_iter()
                        .chain(nums(&row.normal))
                        .collect(),
                );
            }
            Ok((to_value(&r), t))
        }
        Command::Monodromy {
            normal,
            radius,
            steps,
        } => {
            let e = load_ellipsoid(cfg)?;
            check_dim(normal.len(), e.dim())?;
            let g = ProjHyperplane::from_slice(normal)?;
            let path = chart_loop(&g, *radius, *steps, None)?;
            let config = TrackConfig {
                tol: fiber_tolerances(cfg),
                ..Default::default()
            };
            let r = track_fiber(&e, &path, &config)?;
            let mut t = Table::new(&["sheet", "image"]);
            for (i, j) in r.permutation.iter().enumerate() {
                t.rows.push(vec![(i + 1).into(), (*j).into()]);
            }
            Ok((to_value(&r), t))
        }
        Command::MirrorFit { line, grid } => {
            let k = load_body(cfg)?;
            check_dim(line.len(), k.dim())?;
            let l = ProjLine::from_slice(line)?;
            let f = fit_mirror(&k, &l, *grid, cfg.tol)?;
            let mut t = Table::new(&["residual_rms", "chords_used", "offset"]).with_vector("n", k.dim());
            t.rows.push(
                [f.residual_rms.into(), f.chords_used.into(), f.hyperplane.offset.into()]
                    .into_iter()
                    .chain(f.hyperplane.normal.iter().map(|x| Cell::Num(*x)))
                    .collect(),
            );
            Ok((to_value(&f), t))
        }
        Command::DirectionScan => {
            let k = load_body(cfg)?;
            let config = DirectionScanConfig {
                samples: cfg.samples,
                seed: cfg.seed,
                reflection: reflection_config(cfg),
                ..Default::default()
            };
            let r = direction_scan(&k, &config);
            let mut t = Table::new(&["index", "residual_rms", "invariance_error", "accepted"]).with_vector("d", k.dim());
            for row in &r.rows {
                t.rows.push(
                    [
                        row.index.into(),
                        row.residual_rms.into(),
                        row.invariance_error.into(),
                        row.accepted.into(),
                    ]
                    .into_iter()
                    .chain(nums(&row.line.to_vec()))
                    .collect(),
                );
            }
            Ok((to_value(&r), t))
        }
        Command::OrthoScan => {
            let k = load_body(cfg)?;
            let config = OrthoScanConfig {
                samples: cfg.samples,
                seed: cfg.seed,
                reflection: reflection_config(cfg),
                angle_threshold: cfg.threshold,
                ..Default::default()
            };
            let r = orthogonal_reflection_scan(&k, &config);
            let mut t = Table::new(&[
                "accepted",
                "residual_rms",
                "invariance_error",
                "orthogonality_angle",
            ])
            .with_vector("d", k.dim());
            for c in &r.candidates {
                t.rows.push(
                    [
                        c.accepted.into(),
                        c.residual_rms.into(),
                        c.invariance_error.into(),
                        c.orthogonality_angle.into(),
                    ]
                    .into_iter()
                    .chain(nums(&c.line.to_vec()))
                    .collect(),
                );
            }
            Ok((to_value(&r), t))
        }
        Command::Mvee => {
            let text = read_input(&cfg.input)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let points: Vec<Vector> = if let Some(pts) = value.get("points") {
                let raw: Vec<Vec<f64>> =
                    serde_json::from_value(pts.clone()).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                raw.into_iter().map(Vector::from_vec).collect()
            } else {
                let k = BodySpec::from_json(&text)?.build()?;
                sample_boundary(&k, 1000 * k.dim(), cfg.seed, cfg.tol)
            };
            let f = mvee(&points, cfg.eps)?;
            let n = f.ellipsoid.dim();
            let mut t = Table::new(&["row", "center"]).with_vector("a", n);
            for (i, row) in f.ellipsoid.form().to_rows().iter().enumerate() {
                t.rows.push(
                    [i.into(), f.ellipsoid.center()[i].into()]
                        .into_iter()
                        .chain(nums(row))
                        .collect(),
                );
            }
            Ok((to_value(&f), t))
        }
        Command::Classify => {
            let k = load_body(cfg)?;
            let mut config = ClassifyConfig {
                threshold: cfg.threshold,
                seed: cfg.seed,
                ..Default::default()
            };
            config.direction.samples = cfg.samples;
            config.direction.reflection.tol = cfg.tol;
            config.ortho.reflection.tol = cfg.tol;
            let r = classify_body(&k, &config);
            let mut t = Table::new(&["verdict", "margin", "threshold"]);
            t.rows.push(vec![
                to_value(&r.verdict).as_str().unwrap_or_default().into(),
                r.margin.into(),
                r.threshold.into(),
            ]);
            Ok((to_value(&r), t))
        }
        Command::BezdekScan { include_empty } => {
            let k = load_body(cfg)?;
            let config = BezdekConfig {
                threshold: cfg.threshold,
                angle_threshold: cfg.threshold,
                reflection: reflection_config(cfg),
                samples: cfg.samples,
                seed: cfg.seed,
                include_empty: *include_empty,
                ..Default::default()
            };
            let r = bezdek_scan(&k, &config)?;
            let mut t = Table::new(&["index", "empty", "bezdek", "strong_bezdek", "best_residual", "offset"])
                .with_vector("n", 3);
            for row in &r.rows {
                t.rows.push(
                    [
                        row.index.into(),
                        row.empty.into(),
                        row.bezdek.into(),
                        row.strong_bezdek.into(),
                        row.best_residual.unwrap_or(f64::NAN).into(),
                        row.offset.into(),
                    ]
                    .into_iter()
                    .chain(nums(&row.normal))
                    .collect(),
                );
            }
            Ok((to_value(&r), t))
        }
        Command::ClassifyPlane { normal, offset } => {
            let k = load_body(cfg)?;
            check_dim(normal.len(), k.dim())?;
            let n = Vector::from_column_slice(normal);
            let nrm = n.norm();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::ZeroVector);
            }
            let plane = AffineHyperplane::new(&n, &(&n * (offset / (nrm * nrm))))?;
            let config = BezdekConfig {
                threshold: cfg.threshold,
                angle_threshold: cfg.threshold,
                reflection: reflection_config(cfg),
                seed: cfg.seed,
                ..Default::default()
            };
            let r = classify_plane(&k, &plane, &config)?;
            let mut t = Table::new(&["angle", "residual", "bezdek", "strong_bezdek"]);
            for a in &r.section_axes {
                t.rows.push(vec![a.angle.into(), a.residual.into(), r.bezdek.into(), r.strong_bezdek.into()]);
            }
            Ok((to_value(&r), t))
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    json!({"error": kind, "message": message}).to_string()
}

fn resolve(cli: Cli) -> RunConfig {
    let c = cli.common;
    let default_tol = if cli.command.is_ellipsoid_command() {
        crate::section::FiberTolerances::scan().binormal
    } else {
        crate::body::DEFAULT_TOL
    };
    let threads = c.threads.or_else(|| {
        std::env::var("REFLECTA_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    RunConfig {
        samples: c.samples.unwrap_or_else(|| cli.command.default_samples()),
        command: cli.command,
        input: c.input,
        seed: c.seed,
        tol: c.tol.unwrap_or(default_tol),
        grouping_tol: c.grouping_tol,
        threshold: c.threshold,
        eps: c.eps,
        output: c.output,
        format: c.format,
        threads,
    }
}

fn render(cfg: &RunConfig, report: Value, table: Table) -> Result<String> {
    match cfg.format {
        Format::Json => {
            let doc = json!({
                "version": VERSION,
                "command": cfg.command.name(),
                "config": to_value(cfg),
                "report": report,
            });
            Ok(serde_json::to_string_pretty(&doc).expect("json") + "\n")
        }
        Format::Csv => {
            let config = serde_json::to_string(&to_value(cfg)).expect("json");
            Ok(format!("# {VERSION}\n# config {config}\n{}", table.render()?))
        }
    }
}

/// Runs the CLI on `args` (including the program name), writing the report
/// to `out` (or `--output`) and errors to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_line("usage", first));
            return 2;
        }
    };
    let cfg = resolve(cli);
    let result = cfg.validate().and_then(|_| {
        let work = || execute(&cfg).and_then(|(v, t)| render(&cfg, v, t));
        match cfg.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .install(work),
            None => work(),
        }
    });
    match result {
        Ok(text) => {
            let written = match &cfg.output {
                Some(path) => fs::write(path, text.as_bytes()),
                None => out.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "{}", error_line("io", &e.to_string()));
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(e.kind(), &e.to_string()));
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

/// Entry point used by the binary.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}
