//! The `hdg-sweep` harness: one refinement sweep, one table row per level.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use crate::assembly::{self, DiscreteSpace, Mode, SolveOptions};
use crate::mesh::Mesh;
use crate::postproc::{self, ErrorReport};
use crate::problem;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: u32,
    pub kappa: f64,
    pub degree: usize,
    /// Degree of `q`, `k` or `k − 1`.
    pub q_degree: usize,
    pub levels: Vec<usize>,
    pub mode: Mode,
    pub tol: f64,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: 1,
            kappa: 1.0,
            degree: 1,
            q_degree: 1,
            levels: vec![2, 4, 8],
            mode: Mode::Monolithic,
            tol: 1e-10,
            workers: None,
            output: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Parser, Debug, Default)]
#[command(
    name = "hdg-sweep",
    about = "Convergence sweep of the HDG-CG Maxwell discretization on the unit cube",
    after_help = "Flags override values read from --config (lines of `key = value`)."
)]
struct Flags {
    /// Example problem: 1 (plane wave), 2 (interface), 3 (interface, discontinuous u)
    #[arg(long)]
    example: Option<String>,
    /// Wave number κ ≥ 0 (example 1 only; examples 2 and 3 fix κ = 1)
    #[arg(long)]
    kappa: Option<String>,
    /// Polynomial degree k of u and û (1..=3)
    #[arg(long)]
    degree: Option<String>,
    /// Polynomial degree of q: k or k-1 [default: k]
    #[arg(long = "q-degree")]
    q_degree: Option<String>,
    /// Comma-separated cells per axis, ascending, e.g. 2,4,8
    #[arg(long)]
    levels: Option<String>,
    /// monolithic or decoupled
    #[arg(long)]
    mode: Option<String>,
    /// Relative residual required from the linear solves
    #[arg(long)]
    tol: Option<String>,
    /// Assembly threads
    #[arg(long)]
    workers: Option<String>,
    /// Table file; standard output when absent
    #[arg(long)]
    output: Option<String>,
    /// csv or markdown
    #[arg(long)]
    format: Option<String>,
    /// Configuration file of `key = value` lines
    #[arg(long)]
    config: Option<PathBuf>,
}

const KEYS: [&str; 10] = [
    "example", "kappa", "degree", "q-degree", "levels", "mode", "tol", "workers", "output", "format",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| usage(format!("invalid value '{v}' for {key}")))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected `key = value`", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if !KEYS.contains(&k.as_str()) {
            return Err(usage(format!("config line {}: unknown key '{k}'", i + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

fn apply(cfg: &mut RunConfig, q_degree: &mut Option<String>, key: &str, v: &str) -> Result<(), CliError> {
    match key {
        "example" => cfg.example = parse_num(key, v)?,
        "kappa" => cfg.kappa = parse_num(key, v)?,
        "degree" => cfg.degree = parse_num(key, v)?,
        "q-degree" => *q_degree = Some(v.trim().to_string()),
        "levels" => {
            cfg.levels = v
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| parse_num("levels", t))
                .collect::<Result<_, _>>()?
        }
        "mode" => {
            cfg.mode = match v.trim().to_ascii_lowercase().as_str() {
                "monolithic" => Mode::Monolithic,
                "decoupled" => Mode::Decoupled,
                other => return Err(usage(format!("mode must be monolithic or decoupled, got '{other}'"))),
            }
        }
        "tol" => cfg.tol = parse_num(key, v)?,
        "workers" => cfg.workers = Some(parse_num(key, v)?),
        "output" => cfg.output = Some(PathBuf::from(v.trim())),
        "format" => {
            cfg.format = match v.trim().to_ascii_lowercase().as_str() {
                "csv" => Format::Csv,
                "markdown" | "md" => Format::Markdown,
                other => return Err(usage(format!("format must be csv or markdown, got '{other}'"))),
            }
        }
        _ => return Err(usage(format!("unknown key '{key}'"))),
    }
    Ok(())
}

fn resolve_q_degree(k: usize, v: Option<&str>) -> Result<usize, CliError> {
    match v.map(|s| s.trim().to_ascii_lowercase()) {
        None => Ok(k),
        Some(s) if s == "k" => Ok(k),
        Some(s) if s == "k-1" => Ok(k.saturating_sub(1)),
        Some(s) => parse_num("q-degree", &s),
    }
}

pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    if !(1..=3).contains(&cfg.example) {
        return Err(usage(format!("example must be 1, 2 or 3, got {}", cfg.example)));
    }
    if !(1..=3).contains(&cfg.degree) {
        return Err(usage(format!("degree must be 1, 2 or 3, got {}", cfg.degree)));
    }
    if !(cfg.q_degree == cfg.degree || cfg.q_degree + 1 == cfg.degree) {
        return Err(usage(format!(
            "q-degree must be k or k-1 (k = {}), got {}",
            cfg.degree, cfg.q_degree
        )));
    }
    if !(cfg.kappa >= 0.0 && cfg.kappa.is_finite()) {
        return Err(usage(format!("kappa must be finite and non-negative, got {}", cfg.kappa)));
    }
    if cfg.example != 1 && cfg.kappa != 1.0 {
        return Err(usage(format!("example {} is defined for kappa = 1 only", cfg.example)));
    }
    if cfg.levels.is_empty() {
        return Err(usage("at least one level is required"));
    }
    if cfg.levels.contains(&0) {
        return Err(usage("levels must be positive"));
    }
    if cfg.levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("levels must be strictly ascending"));
    }
    if cfg.example != 1 {
        if let Some(n) = cfg.levels.iter().find(|&&n| n % 2 == 1) {
            return Err(usage(format!(
                "example {} needs even levels so that the mesh resolves the interface x = 0.5, got {n}",
                cfg.example
            )));
        }
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return Err(usage(format!("tol must lie in (0, 1), got {}", cfg.tol)));
    }
    if cfg.workers == Some(0) {
        return Err(usage("workers must be at least 1"));
    }
    if cfg.mode == Mode::Decoupled && cfg.kappa == 0.0 {
        return Err(usage("decoupled mode needs kappa > 0"));
    }
    Ok(())
}

/// Builds a configuration from command-line arguments (without the program
/// name). Values from `--config` are read first; flags override them.
pub fn parse_config<I, S>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    if args.is_empty() {
        return Err(usage("no arguments given"));
    }
    let flags = Flags::try_parse_from(std::iter::once("hdg-sweep".to_string()).chain(args))
        .map_err(|e| usage(e.to_string()))?;
    let mut cfg = RunConfig::default();
    let mut q_degree = None;
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        for (k, v) in parse_config_text(&text)? {
            apply(&mut cfg, &mut q_degree, &k, &v)?;
        }
    }
    let given = [
        ("example", &flags.example),
        ("kappa", &flags.kappa),
        ("degree", &flags.degree),
        ("q-degree", &flags.q_degree),
        ("levels", &flags.levels),
        ("mode", &flags.mode),
        ("tol", &flags.tol),
        ("workers", &flags.workers),
        ("output", &flags.output),
        ("format", &flags.format),
    ];
    for (k, v) in given {
        if let Some(v) = v {
            apply(&mut cfg, &mut q_degree, k, v)?;
        }
    }
    cfg.q_degree = resolve_q_degree(cfg.degree, q_degree.as_deref())?;
    validate(&cfg)?;
    Ok(cfg)
}

pub const COLUMNS: [&str; 10] = [
    "n", "h", "global_dofs", "err_q_rel", "rate_q", "err_u_rel", "rate_u", "err_gradp", "residual", "time_ms",
];

/// One line of the convergence table, as printed.
#[derive(Debug, Clone, PartialEq)]
pub enum TableRow {
    Level {
        n: usize,
        h: f64,
        global_dofs: usize,
        err_q_rel: f64,
        rate_q: Option<f64>,
        err_u_rel: f64,
        rate_u: Option<f64>,
        err_gradp: f64,
        residual: f64,
        time_ms: u64,
    },
    /// The level at which the sweep stopped.
    Failed { n: usize },
}

/// Three significant digits, `1.23E-01`.
pub fn format_sci(x: f64) -> String {
    let s = format!("{x:.2E}");
    match s.split_once('E') {
        Some((m, e)) => {
            let (sign, digits) = match e.strip_prefix('-') {
                Some(d) => ("-", d),
                None => ("+", e),
            };
            format!("{m}E{sign}{digits:0>2}")
        }
        None => s,
    }
}

pub fn format_rate(r: Option<f64>) -> String {
    r.map_or(String::new(), |r| format!("{r:.2}"))
}

impl TableRow {
    pub fn from_report(r: &ErrorReport, n: usize, time_ms: u64) -> Self {
        let d = r.diagnostics.as_ref();
        TableRow::Level {
            n,
            h: r.h,
            global_dofs: r.global_dofs,
            err_q_rel: r.err_q_rel,
            rate_q: r.rate_q,
            err_u_rel: r.err_u_rel,
            rate_u: r.rate_u,
            err_gradp: r.err_gradp,
            residual: d.map_or(0.0, |d| d.relative_residual),
            time_ms,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            TableRow::Level { n, .. } | TableRow::Failed { n } => *n,
        }
    }

    pub fn cells(&self) -> Vec<String> {
        match self {
            TableRow::Level {
                n,
                h,
                global_dofs,
                err_q_rel,
                rate_q,
                err_u_rel,
                rate_u,
                err_gradp,
                residual,
                time_ms,
            } => vec![
                n.to_string(),
                format_sci(*h),
                global_dofs.to_string(),
                format_sci(*err_q_rel),
                format_rate(*rate_q),
                format_sci(*err_u_rel),
                format_rate(*rate_u),
                format_sci(*err_gradp),
                format_sci(*residual),
                time_ms.to_string(),
            ],
            TableRow::Failed { n } => {
                let mut c = vec![String::new(); COLUMNS.len()];
                c[0] = n.to_string();
                c[1] = "FAILED".into();
                c
            }
        }
    }
}

pub fn header(format: Format) -> String {
    match format {
        Format::Csv => format!("{}\n", COLUMNS.join(",")),
        Format::Markdown => format!(
            "| {} |\n|{}\n",
            COLUMNS.join(" | "),
            COLUMNS.iter().map(|_| "---|").collect::<String>()
        ),
    }
}

pub fn format_row(row: &TableRow, format: Format) -> String {
    let cells = row.cells();
    match format {
        Format::Csv => format!("{}\n", cells.join(",")),
        Format::Markdown => format!("| {} |\n", cells.join(" | ")),
    }
}

pub fn render(rows: &[TableRow], format: Format) -> String {
    let mut s = header(format);
    for r in rows {
        s.push_str(&format_row(r, format));
    }
    s
}

/// Parses a table written in the CSV format.
pub fn read_csv(text: &str) -> Result<Vec<TableRow>, CliError> {
    let bad = |i: usize, m: &str| usage(format!("csv line {}: {m}", i + 1));
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == COLUMNS.join(",") => {}
        _ => return Err(usage("csv: missing or unexpected header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != COLUMNS.len() {
            return Err(bad(i, "wrong number of fields"));
        }
        let num = |j: usize| -> Result<f64, CliError> { c[j].parse().map_err(|_| bad(i, COLUMNS[j])) };
        let int = |j: usize| -> Result<u64, CliError> { c[j].parse().map_err(|_| bad(i, COLUMNS[j])) };
        let opt = |j: usize| -> Result<Option<f64>, CliError> {
            if c[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        let n = int(0)? as usize;
        if c[1] == "FAILED" {
            rows.push(TableRow::Failed { n });
            continue;
        }
        rows.push(TableRow::Level {
            n,
            h: num(1)?,
            global_dofs: int(2)? as usize,
            err_q_rel: num(3)?,
            rate_q: opt(4)?,
            err_u_rel: num(5)?,
            rate_u: opt(6)?,
            err_gradp: num(7)?,
            residual: num(8)?,
            time_ms: int(9)?,
        });
    }
    Ok(rows)
}

/// Outcome of [`run_sweep`]: the rows written and the error that stopped it, if any.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub rows: Vec<TableRow>,
    pub reports: Vec<ErrorReport>,
    pub failure: Option<CliError>,
}

impl Sweep {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(EXIT_OK, CliError::exit_code)
    }
}

/// Solves every level in turn and writes one row per level to `out` as soon
/// as it is available. A failing level ends the sweep with a marker row.
pub fn run_sweep_to<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<Sweep, CliError> {
    validate(cfg)?;
    let io = |e: std::io::Error| CliError::Failure(format!("cannot write table: {e}"));
    let spec = problem::by_id(cfg.example, cfg.kappa).map_err(|e| usage(e.to_string()))?;
    let opts = SolveOptions {
        mode: cfg.mode,
        tol: cfg.tol,
        workers: cfg.workers,
        ..Default::default()
    };
    out.write_all(header(cfg.format).as_bytes()).map_err(io)?;
    let mut sweep = Sweep {
        rows: Vec::new(),
        reports: Vec::new(),
        failure: None,
    };
    for &n in &cfg.levels {
        let start = Instant::now();
        let level = || -> crate::Result<ErrorReport> {
            let mesh = Mesh::build_structured_cube(n)?;
            let space = DiscreteSpace::new(&mesh, cfg.degree, cfg.q_degree)?;
            let fields = assembly::solve(&spec, &mesh, &space, &opts)?;
            postproc::l2_errors(&spec, &mesh, &space, &fields)
        };
        match level() {
            Ok(report) => {
                sweep.reports.push(report);
                postproc::fill_rates(&mut sweep.reports);
                let r = sweep.reports.last().expect("just pushed");
                let row = TableRow::from_report(r, n, start.elapsed().as_millis() as u64);
                out.write_all(format_row(&row, cfg.format).as_bytes()).map_err(io)?;
                out.flush().map_err(io)?;
                sweep.rows.push(row);
            }
            Err(e) => {
                let row = TableRow::Failed { n };
                out.write_all(format_row(&row, cfg.format).as_bytes()).map_err(io)?;
                out.flush().map_err(io)?;
                sweep.rows.push(row);
                sweep.failure = Some(CliError::Failure(format!("level n = {n}: {e}")));
                break;
            }
        }
    }
    Ok(sweep)
}

/// Runs the sweep, writing to the configured output or standard output.
pub fn run_sweep(cfg: &RunConfig) -> Result<Sweep, CliError> {
    match &cfg.output {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Failure(format!("cannot create {}: {e}", path.display())))?;
            let mut w = std::io::BufWriter::new(file);
            run_sweep_to(cfg, &mut w)
        }
        None => run_sweep_to(cfg, &mut std::io::stdout().lock()),
    }
}

pub fn usage_text() -> String {
    use clap::CommandFactory;
    let mut s = String::new();
    let _ = write!(s, "{}", Flags::command().render_help());
    s
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args(args: Vec<String>) -> i32 {
    if args.is_empty() {
        eprintln!("{}", usage_text());
        return EXIT_USAGE;
    }
    if args.iter().any(|a| a == "--help" || a == "-h") {
        println!("{}", usage_text());
        return EXIT_OK;
    }
    let cfg = match parse_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match run_sweep(&cfg) {
        Ok(sweep) => {
            if let Some(e) = &sweep.failure {
                eprintln!("{e}");
            }
            sweep.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
