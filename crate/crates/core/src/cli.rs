//! Command-line front end: argument parsing, config files, path files and
//! CSV/JSON serialization.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::exactdiag::{self, ExactDiagError, SectorOperator, SolverOptions};
use crate::model::{AnnealPoint, ModelError, ModelParams};
use crate::pathlab::{self, AnnealPath, PathError};
use crate::semiclassical::{self, Landscape, LargePLimit, SemiclassicalError, TransitionKind, TransitionLine};
use crate::spinwave;
use crate::statapprox::{self, Beta, StatApproxError};

pub const THREADS_ENV: &str = "PSPIN_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        invalid(e)
    }
}

impl From<PathError> for CliError {
    fn from(e: PathError) -> Self {
        invalid(e)
    }
}

impl From<StatApproxError> for CliError {
    fn from(e: StatApproxError) -> Self {
        invalid(e)
    }
}

impl From<SemiclassicalError> for CliError {
    fn from(e: SemiclassicalError) -> Self {
        match e {
            SemiclassicalError::NoDiscontinuity { .. } => CliError::Numerical(e.to_string()),
            other => invalid(other),
        }
    }
}

impl From<ExactDiagError> for CliError {
    fn from(e: ExactDiagError) -> Self {
        match e {
            ExactDiagError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            other => invalid(other),
        }
    }
}

/// `--p`: an odd integer ≥ 3 or `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PArg {
    Finite(u32),
    Infinite,
}

impl FromStr for PArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" => Ok(PArg::Infinite),
            t => t
                .parse()
                .map(PArg::Finite)
                .map_err(|_| format!("expected an odd integer or 'inf', got '{t}'")),
        }
    }
}

/// `--res`: `AxB` grid resolution (λ points × s points).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Resolution {
    pub lambda: usize,
    pub s: usize,
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || format!("expected AxB with A, B >= 2, got '{s}'");
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(err)?;
        let (lambda, s) = (a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?);
        if lambda < 2 || s < 2 {
            return Err(err());
        }
        Ok(Resolution { lambda, s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "pspin", version, about = "Mean-field analysis of p-spin quantum annealing")]
pub struct Cli {
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; PSPIN_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key=value file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Odd target exponent ≥ 3, or `inf`.
    #[arg(long)]
    pub p: PArg,
    /// Driver exponent ≥ 2.
    #[arg(long)]
    pub k: u32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Semi-classical ground state on a λ × s grid.
    PhaseDiagram {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "256x256")]
        res: Resolution,
    },
    /// First-order lines and the second-order line.
    TransitionLines {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Spin-wave gap along a line of constant λ.
    GapScan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lambda: f64,
        /// Number of s points on [0, 1].
        #[arg(long, default_value_t = 1001)]
        points: usize,
    },
    /// Lowest levels of the S = N/2 sector.
    ExactGap {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        count: usize,
        /// Gap to the first level not degenerate with the ground state.
        #[arg(long)]
        distinct_gap: bool,
    },
    /// Ground-state overlap of the k-body driver with the target.
    Overlap {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        k: u32,
    },
    /// Static-approximation solutions on a λ × s grid.
    StatApprox {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "64x64")]
        res: Resolution,
        /// Inverse temperature; infinite when absent.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Crossings and minimum gap along an annealing path.
    PathEval {
        #[command(flatten)]
        model: ModelArgs,
        /// Waypoint file: `lambda s` per line, `#` comments.
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 512)]
        samples: usize,
        /// Reject paths along which s decreases.
        #[arg(long)]
        strict: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PhaseDiagram { .. } => "phase-diagram",
            Command::TransitionLines { .. } => "transition-lines",
            Command::GapScan { .. } => "gap-scan",
            Command::ExactGap { .. } => "exact-gap",
            Command::Overlap { .. } => "overlap",
            Command::StatApprox { .. } => "stat-approx",
            Command::PathEval { .. } => "path-eval",
        }
    }

    /// Scalar commands print one JSON object by default.
    fn default_format(&self) -> Format {
        match self {
            Command::ExactGap { .. } | Command::Overlap { .. } | Command::PathEval { .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Parses a flat `key = value` config file. Blank lines and `#` comments are
/// ignored; a bare key is a boolean flag.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, Option<String>>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim().to_string())),
            None => (line, None),
        };
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(invalid(format!("config line {}: malformed entry '{raw}'", i + 1)));
        }
        out.insert(key.replace('_', "-"), value);
    }
    Ok(out)
}

/// Appends config entries as flags unless the same flag is already on the
/// command line.
pub fn merge_config(args: &[String], config: &BTreeMap<String, Option<String>>) -> Vec<String> {
    let mut merged = args.to_vec();
    for (key, value) in config {
        if key == "config" {
            continue;
        }
        let flag = format!("--{key}");
        let given = args
            .iter()
            .any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if !given {
            merged.push(flag);
            merged.extend(value.clone());
        }
    }
    merged
}

fn config_path(args: &[String]) -> Option<PathBuf> {
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).map(PathBuf::from)
        } else {
            a.strip_prefix("--config=").map(PathBuf::from)
        }
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a waypoint list: one `lambda s` pair per line, `#` comments.
pub fn parse_path(text: &str, strict: bool) -> Result<AnnealPath, CliError> {
    let mut points = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [l, s] = fields[..] else {
            return Err(invalid(format!("line {lineno}: expected 'lambda s', got '{body}'")));
        };
        let parse = |x: &str| {
            x.parse::<f64>()
                .map_err(|_| invalid(format!("line {lineno}: '{x}' is not a number")))
        };
        let pt = AnnealPoint::new(parse(l)?, parse(s)?).map_err(|e| invalid(format!("line {lineno}: {e}")))?;
        points.push(pt);
        lines.push(lineno);
    }
    AnnealPath::new(points, strict).map_err(|e| match e {
        PathError::DecreasingS { index } => invalid(format!("line {}: s decreases along the path", lines[index])),
        other => invalid(other),
    })
}

pub fn load_path_file(path: &Path, strict: bool) -> Result<AnnealPath, CliError> {
    parse_path(&read(path)?, strict)
}

/// `%.17g`: 17 significant digits, trailing zeros removed.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..17).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn finite_params(model: &ModelArgs, command: &str) -> Result<ModelParams, CliError> {
    match model.p {
        PArg::Finite(p) => Ok(ModelParams::new(p, model.k)?),
        PArg::Infinite => Err(invalid(format!("{command} needs a finite --p"))),
    }
}

fn check_unit(name: &str, v: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(format!("--{name} must lie in [0, 1], got {v}")))
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Result of one run, rendered in either format.
pub struct Output {
    table: Option<Table>,
    data: Value,
    meta: Value,
    flat: bool,
}

impl Output {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self
                .table
                .as_ref()
                .map(Table::to_csv)
                .ok_or_else(|| invalid("this command has no CSV form; use --format json")),
            Format::Json => {
                let v = if self.flat {
                    self.data.clone()
                } else {
                    json!({ "meta": self.meta, "data": self.data })
                };
                let mut s = serde_json::to_string(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }
}

fn meta(command: &str, model: Option<&ModelArgs>) -> Value {
    let mut params = serde_json::Map::new();
    if let Some(m) = model {
        params.insert(
            "p".into(),
            match m.p {
                PArg::Finite(p) => json!(p),
                PArg::Infinite => json!("inf"),
            },
        );
        params.insert("k".into(), json!(m.k));
    }
    json!({
        "command": command,
        "params": params,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn with_landscape<R>(model: &ModelArgs, f: impl FnOnce(&dyn DynLandscape) -> R) -> Result<R, CliError> {
    match model.p {
        PArg::Finite(p) => Ok(f(&ModelParams::new(p, model.k)?)),
        PArg::Infinite => Ok(f(&LargePLimit::new(model.k)?)),
    }
}

/// Object-safe adapter over the generic entry points.
trait DynLandscape {
    fn diagram(&self, res: Resolution) -> Result<semiclassical::PhaseDiagram, SemiclassicalError>;
    fn lines(&self) -> (Vec<TransitionLine>, TransitionLine);
    fn path(&self, path: &AnnealPath, samples: usize) -> Result<pathlab::PathReport, PathError>;
}

impl<L: Landscape> DynLandscape for L {
    fn diagram(&self, res: Resolution) -> Result<semiclassical::PhaseDiagram, SemiclassicalError> {
        semiclassical::scan_diagram(self, res.lambda, res.s)
    }

    fn lines(&self) -> (Vec<TransitionLine>, TransitionLine) {
        (semiclassical::first_order_lines(self), semiclassical::trace_second_order(self))
    }

    fn path(&self, path: &AnnealPath, samples: usize) -> Result<pathlab::PathReport, PathError> {
        pathlab::evaluate_path(path, self, samples)
    }
}

fn kind_label(kind: TransitionKind) -> &'static str {
    match kind {
        TransitionKind::FirstOrder => "first",
        TransitionKind::SecondOrder => "second",
    }
}

/// Runs one command and returns its rendered output.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    let name = command.name();
    match command {
        Command::PhaseDiagram { model, res } => {
            let diagram = with_landscape(model, |l| l.diagram(*res))??;
            let rows = diagram
                .cells
                .iter()
                .map(|c| {
                    let st = c.state;
                    vec![
                        fmt_float(c.point.lambda()),
                        fmt_float(c.point.s()),
                        fmt_float(st.theta0),
                        fmt_float(st.mx()),
                        fmt_float(st.mz()),
                        fmt_float(st.energy),
                        st.phase.label().to_string(),
                    ]
                })
                .collect();
            let data = diagram
                .cells
                .iter()
                .map(|c| {
                    json!({
                        "lambda": c.point.lambda(), "s": c.point.s(),
                        "theta0": c.state.theta0, "mx": c.state.mx(), "mz": c.state.mz(),
                        "energy": c.state.energy, "phase": c.state.phase,
                    })
                })
                .collect();
            Ok(Output {
                table: Some(Table {
                    header: vec!["lambda", "s", "theta0", "mx", "mz", "energy", "phase"],
                    rows,
                }),
                data: Value::Array(data),
                meta: meta(name, Some(model)),
                flat: false,
            })
        }
        Command::TransitionLines { model } => {
            let (first, second) = with_landscape(model, |l| l.lines())?;
            let mut rows = Vec::new();
            for (id, line) in first.iter().chain(std::iter::once(&second)).enumerate() {
                for p in &line.points {
                    rows.push(vec![
                        id.to_string(),
                        kind_label(line.kind).to_string(),
                        p.phase_below.label().to_string(),
                        p.phase_above.label().to_string(),
                        fmt_float(p.lambda),
                        fmt_float(p.s),
                        fmt_float(p.theta_below),
                        fmt_float(p.theta_above),
                    ]);
                }
            }
            let mut all = first;
            all.push(second);
            Ok(Output {
                table: Some(Table {
                    header: vec!["line", "kind", "phase_below", "phase_above", "lambda", "s", "theta_below", "theta_above"],
                    rows,
                }),
                data: to_value(&all),
                meta: meta(name, Some(model)),
                flat: false,
            })
        }
        Command::GapScan { model, lambda, points } => {
            let params = finite_params(model, name)?;
            let lambda = check_unit("lambda", *lambda)?;
            if *points < 2 {
                return Err(invalid("--points must be at least 2"));
            }
            let grid: Vec<f64> = (0..*points).map(|i| semiclassical::grid_value(i, *points)).collect();
            let profile = spinwave::gap_profile(params, lambda, &grid);
            let opt = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
            let rows = grid
                .iter()
                .zip(&profile)
                .map(|(s, g)| {
                    vec![
                        fmt_float(*s),
                        fmt_float(g.theta0),
                        fmt_float(g.delta),
                        fmt_float(g.gamma),
                        fmt_float(g.epsilon),
                        opt(g.gap),
                        g.is_valid().to_string(),
                    ]
                })
                .collect();
            let data = grid
                .iter()
                .zip(&profile)
                .map(|(s, g)| {
                    let mut v = to_value(g);
                    v["s"] = json!(s);
                    v
                })
                .collect();
            let mut m = meta(name, Some(model));
            m["lambda"] = json!(lambda);
            Ok(Output {
                table: Some(Table {
                    header: vec!["s", "theta0", "delta", "gamma", "epsilon", "gap", "valid"],
                    rows,
                }),
                data: Value::Array(data),
                meta: m,
                flat: false,
            })
        }
        Command::ExactGap {
            model,
            lambda,
            s,
            n,
            count,
            distinct_gap,
        } => {
            let params = finite_params(model, name)?;
            let pt = AnnealPoint::new(*lambda, *s)?;
            let op = SectorOperator::new(*n, params, pt)?;
            let opts = SolverOptions {
                distinct_gap: *distinct_gap,
                ..SolverOptions::default()
            };
            let spec = exactdiag::lowest_eigenpairs_with(&op, *count, opts)?;
            let gap = spec.gap_n;
            let data = json!({
                "n": n, "p": params.p(), "k": params.k(), "lambda": lambda, "s": s,
                "eigenvalues": spec.eigenvalues, "gap": gap, "degenerate": spec.degenerate,
            });
            let mut row = vec![n.to_string(), fmt_float(*lambda), fmt_float(*s), fmt_float(spec.eigenvalues[0])];
            row.push(gap.map(fmt_float).unwrap_or_default());
            Ok(Output {
                table: Some(Table {
                    header: vec!["n", "lambda", "s", "e0", "gap"],
                    rows: vec![row],
                }),
                data,
                meta: Value::Null,
                flat: true,
            })
        }
        Command::Overlap { n, k } => {
            if *n == 0 {
                return Err(invalid("--n must be at least 1"));
            }
            crate::model::validate_k(*k)?;
            let overlap = exactdiag::overlap_vk(*n, *k);
            Ok(Output {
                table: Some(Table {
                    header: vec!["n", "k", "overlap"],
                    rows: vec![vec![n.to_string(), k.to_string(), fmt_float(overlap)]],
                }),
                data: json!({ "n": n, "k": k, "overlap": overlap }),
                meta: Value::Null,
                flat: true,
            })
        }
        Command::StatApprox { model, res, beta } => {
            let params = finite_params(model, name)?;
            let beta = match beta {
                None => Beta::Infinite,
                Some(b) if *b > 0.0 => Beta::Finite(*b),
                Some(b) => return Err(invalid(format!("--beta must be positive, got {b}"))),
            };
            use rayon::prelude::*;
            let cells: Vec<(AnnealPoint, statapprox::SelfConsistentSolution)> = (0..res.lambda * res.s)
                .into_par_iter()
                .map(|idx| {
                    let pt = AnnealPoint::clamped(
                        semiclassical::grid_value(idx / res.s, res.lambda),
                        semiclassical::grid_value(idx % res.s, res.s),
                    );
                    statapprox::solve(pt, params, beta).map(|sol| (pt, sol))
                })
                .collect::<Result<_, _>>()?;
            let rows = cells
                .iter()
                .map(|(pt, sol)| {
                    vec![
                        fmt_float(pt.lambda()),
                        fmt_float(pt.s()),
                        fmt_float(sol.mx),
                        fmt_float(sol.mz),
                        fmt_float(sol.free_energy),
                        sol.phase.label().to_string(),
                        sol.converged.to_string(),
                        sol.iterations.to_string(),
                    ]
                })
                .collect();
            let data = cells
                .iter()
                .map(|(pt, sol)| {
                    let mut v = to_value(sol);
                    v["lambda"] = json!(pt.lambda());
                    v["s"] = json!(pt.s());
                    v
                })
                .collect();
            Ok(Output {
                table: Some(Table {
                    header: vec!["lambda", "s", "mx", "mz", "free_energy", "phase", "converged", "iterations"],
                    rows,
                }),
                data: Value::Array(data),
                meta: meta(name, Some(model)),
                flat: false,
            })
        }
        Command::PathEval {
            model,
            path,
            samples,
            strict,
        } => {
            let anneal = load_path_file(path, *strict)?;
            let report = with_landscape(model, |l| l.path(&anneal, *samples))??;
            let rows = report
                .crossings
                .iter()
                .map(|c| {
                    vec![
                        fmt_float(c.position),
                        fmt_float(c.point.lambda()),
                        fmt_float(c.point.s()),
                        kind_label(c.kind).to_string(),
                        fmt_float(c.theta_jump),
                        c.gap.map(fmt_float).unwrap_or_default(),
                    ]
                })
                .collect();
            Ok(Output {
                table: Some(Table {
                    header: vec!["position", "lambda", "s", "kind", "theta_jump", "gap"],
                    rows,
                }),
                data: to_value(&report),
                meta: meta(name, Some(model)),
                flat: false,
            })
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => flag,
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(invalid("thread count must be positive"));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full program: parses `args` (including the program name), runs the
/// command and writes the output. Returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    match try_run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn try_run(args: Vec<String>) -> Result<(), CliError> {
    let args = match config_path(&args) {
        Some(path) => merge_config(&args, &parse_config(&read(&path)?)?),
        None => args,
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(invalid(e.to_string().trim_end())),
    };
    configure_threads(cli.threads)?;
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    let text = execute(&cli.command)?.render(format)?;
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|source| CliError::Io { path: "stdout".into(), source })
        }
    }
}
