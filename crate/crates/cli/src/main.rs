//! `sveq`: merit, slope, increase and certificate reports for strong
//! vector equilibrium problems.

mod output;
mod reproduce;

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sveq_core::certify::{
    certify_auto, certify_via_gamma, certify_via_sigma, validate_bound, validation_points, BoundCertificate,
    CertifyOutcome,
};
use sveq_core::increase::{default_region, sigma_search};
use sveq_core::merit::nu;
use sveq_core::slope::{restricted_slope, ssinf_upper};
use sveq_core::solver::solve;
use sveq_core::subdiff::subdiff_report;
use sveq_core::{Config, Error, Point, ProblemInstance};

use output::{envelope, num, nums, write_csv, write_json, Format, Table};

const EXIT_REFUTED: u8 = 2;
const EXIT_NO_CERTIFICATE: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "sveq", version, about = "Merit functions, slopes and certified error bounds")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Problem description (JSON).
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    /// Comma-separated coordinates.
    #[arg(long, global = true, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Samples of K used for suprema over z.
    #[arg(long = "budget-z", global = true)]
    budget_z: Option<usize>,
    /// Slope directions per dimension and shell.
    #[arg(long = "budget-dirs", global = true)]
    budget_dirs: Option<usize>,
    /// Solver zero tolerance and validation tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Merit evaluations per solver start.
    #[arg(long, global = true)]
    evals: Option<usize>,
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Full configuration (JSON), applied before the other flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, value_enum, default_value_t = Route::Auto)]
    route: Route,
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Accept theta = 0.
    #[arg(long = "allow-degenerate", global = true)]
    allow_degenerate: bool,
    /// Certificate file (a certificate, or a `certify` report).
    #[arg(long, global = true)]
    certificate: Option<PathBuf>,
    /// Certificate constant used without any supporting argument.
    #[arg(long, global = true)]
    constant: Option<f64>,
    /// Number of validation points drawn from K.
    #[arg(long, global = true, default_value_t = 100)]
    points: usize,
    /// Use the sampled merit even where a closed form exists.
    #[arg(long, global = true)]
    sampled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Route {
    Sigma,
    Gamma,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Example {
    Example1,
    Example2,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ν(x) and ν_K(x) at --point.
    Merit,
    /// Restricted strong slope of ν at --point.
    Slope,
    /// Sampled upper bound of the infimum of restricted slopes.
    Ssinf,
    /// σ-search over the default probe region.
    Increase,
    /// Subdifferential hulls and γ-separation at --point.
    Subdiff,
    /// Error-bound certificate along --route.
    Certify,
    /// Checks a certificate against the known solutions.
    Validate,
    /// Multistart minimization of ν_K.
    Solve,
    /// Reproduces a catalog example.
    Reproduce {
        #[arg(value_enum)]
        example: Example,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Refuted(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AuditRefuted(_) => Failure::Refuted(e.to_string()),
            Error::DimensionMismatch { .. }
            | Error::InvalidPoint(_)
            | Error::InvalidCone(_)
            | Error::InvalidConstraints(_)
            | Error::InvalidProblem(_)
            | Error::Precondition(_)
            | Error::EmptyInput(_) => Failure::Input(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(m)) => {
            eprintln!("input error: {m}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Refuted(m)) => {
            eprintln!("{m}");
            ExitCode::from(EXIT_REFUTED)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn config(opts: &Opts) -> Result<Config, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = read(path)?;
            serde_json::from_str(&text).map_err(|e| {
                Failure::Input(format!("{}: {e}", path.display()))
            })?
        }
        None => Config::default(),
    };
    cfg.seed = opts.seed;
    if let Some(b) = opts.budget_z {
        cfg.merit.z_budget = b;
        cfg.increase.z_budget = b;
    }
    if let Some(d) = opts.budget_dirs {
        cfg.slope.dirs_per_dim = d;
    }
    if let Some(t) = opts.tol {
        cfg.solver.zero_tol = t;
        cfg.certify.validation_tol = t;
    }
    if let Some(e) = opts.evals {
        cfg.solver.max_evals = e;
    }
    if let Some(s) = opts.starts {
        cfg.solver.starts = s;
    }
    if opts.sampled {
        cfg.merit.use_closed_form = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn problem(opts: &Opts) -> Result<ProblemInstance, Failure> {
    let path = opts.problem.as_ref().ok_or_else(|| Failure::Input("--problem FILE is required".into()))?;
    let text = read(path)?;
    ProblemInstance::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn point(opts: &Opts, p: &ProblemInstance) -> Result<Point, Failure> {
    let raw = opts.point.as_ref().ok_or_else(|| Failure::Input("--point is required".into()))?;
    let coords = raw
        .split(',')
        .enumerate()
        .map(|(i, s)| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Input(format!("--point entry {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if coords.len() != p.dim_x {
        return Err(Failure::Input(format!("--point has {} entries, the problem needs {}", coords.len(), p.dim_x)));
    }
    Ok(Point::new(coords)?)
}

fn certificate(opts: &Opts) -> Result<Option<BoundCertificate>, Failure> {
    if let Some(c) = opts.constant {
        return Ok(Some(BoundCertificate::forced(c)?));
    }
    let Some(path) = &opts.certificate else {
        return Ok(None);
    };
    let text = read(path)?;
    let mut v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    if let Some(r) = v.get("report") {
        v = r.clone();
    }
    if let Some(c) = v.get("certificate") {
        v = c.clone();
    }
    if v.is_null() {
        return Err(Failure::Input(format!("{}: the report carries no certificate", path.display())));
    }
    serde_json::from_value(v)
        .map(Some)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn theta(opts: &Opts) -> Result<f64, Failure> {
    let t = opts.theta.unwrap_or(std::f64::consts::FRAC_PI_6);
    if t == 0.0 && opts.allow_degenerate {
        return Ok(t);
    }
    if !(t > 0.0 && t < FRAC_PI_4) {
        let hint = if t == 0.0 { " (theta = 0 needs --allow-degenerate)" } else { "" };
        return Err(Failure::Input(format!("--theta {t} outside (0, pi/4){hint}")));
    }
    Ok(t)
}

fn emit<T: Serialize>(opts: &Opts, command: &str, report: &T, table: impl FnOnce() -> Table) -> Result<(), Failure> {
    match opts.format {
        Format::Json => write_json(&envelope(command, opts.seed, report), opts.out.as_deref())?,
        Format::Csv => write_csv(&table(), opts.out.as_deref())?,
    }
    Ok(())
}

fn outcome_table(o: &CertifyOutcome) -> Table {
    let mut t = Table::new(&["item", "status", "detail"]);
    for c in &o.audit.checks {
        t.push(vec![c.name.clone(), format!("{:?}", c.status), c.evidence.clone()]);
    }
    match &o.certificate {
        Some(c) => t.push(vec![format!("{:?}", c.route), num(c.constant), format!("{:?}", c.bound_form)]),
        None => t.push(vec![
            "certificate".into(),
            format!("none ({})", o.failed_stage.as_deref().unwrap_or("")),
            o.detail.clone().unwrap_or_default(),
        ]),
    }
    t
}

fn run(cli: &Cli) -> Outcome {
    let opts = &cli.opts;
    let cfg = config(opts)?;
    match &cli.command {
        Command::Merit => {
            let p = problem(opts)?;
            let x = point(opts, &p)?;
            let r = nu(&p, &x, &cfg)?;
            emit(opts, "merit", &r, || {
                let mut t = Table::with_coords("x", p.dim_x, &["nu", "dist_x_K", "nu_ka", "nu_sampled", "used_closed_form"]);
                let mut row = nums(&r.x);
                row.extend([num(r.nu), num(r.dist_x_k), num(r.nu_ka), num(r.nu_sampled), r.used_closed_form.to_string()]);
                t.push(row);
                t
            })?;
            Ok(0)
        }
        Command::Slope => {
            let p = problem(opts)?;
            let x = point(opts, &p)?;
            let s = restricted_slope(&p, &x, &cfg)?;
            emit(opts, "slope", &s, || {
                let mut t = Table::new(&["radius", "max_quotient"]);
                for (r, q) in s.radii.iter().zip(&s.per_radius_max) {
                    t.push(vec![num(*r), num(*q)]);
                }
                t
            })?;
            Ok(0)
        }
        Command::Ssinf => {
            let p = problem(opts)?;
            let r = ssinf_upper(&p, &cfg)?;
            emit(opts, "ssinf", &r, || {
                let mut t = Table::new(&["upper_bound", "points_probed", "points_considered"]);
                t.push(vec![num(r.upper_bound), r.points_probed.to_string(), r.points_considered.to_string()]);
                t
            })?;
            Ok(0)
        }
        Command::Increase => {
            let p = problem(opts)?;
            let region = default_region(&p, &cfg)?;
            if region.is_empty() {
                return Err(Failure::Input("no probe point with positive merit".into()));
            }
            let s = sigma_search(&p, &region, &cfg)?;
            emit(opts, "increase", &s, || {
                let mut t = Table::with_coords("x", p.dim_x, &[]);
                t.header.extend((1..=p.dim_x).map(|i| format!("u{i}")));
                t.header.push("value".into());
                for w in &s.per_point {
                    let mut row = nums(&w.x0);
                    row.extend(nums(&w.u0));
                    row.push(num(w.value));
                    t.push(row);
                }
                t
            })?;
            Ok(if s.certificate.is_some() { 0 } else { EXIT_NO_CERTIFICATE })
        }
        Command::Subdiff => {
            let p = problem(opts)?;
            let x = point(opts, &p)?;
            let r = subdiff_report(&p, &x, &cfg)?;
            emit(opts, "subdiff", &r, || {
                let mut t = Table::new(&["set", "generator"]);
                for g in &r.nu_hull.generators {
                    t.push(vec!["nu".into(), nums(g).join(" ")]);
                }
                for g in &r.bk_hull.generators {
                    t.push(vec!["bK".into(), nums(g).join(" ")]);
                }
                t.push(vec!["gamma".into(), num(r.gamma_value)]);
                t
            })?;
            Ok(0)
        }
        Command::Certify => {
            let p = problem(opts)?;
            let o = match opts.route {
                Route::Sigma => certify_via_sigma(&p, &cfg)?,
                Route::Gamma => certify_via_gamma(&p, &cfg)?,
                Route::Auto => certify_auto(&p, &cfg)?,
            };
            emit(opts, "certify", &o, || outcome_table(&o))?;
            Ok(match (&o.certificate, o.audit.refuted()) {
                (Some(_), _) => 0,
                (None, true) => EXIT_REFUTED,
                (None, false) => EXIT_NO_CERTIFICATE,
            })
        }
        Command::Validate => {
            let p = problem(opts)?;
            let cert = certificate(opts)?
                .ok_or_else(|| Failure::Input("--certificate FILE or --constant is required".into()))?;
            let xs = match &opts.point {
                Some(_) => vec![point(opts, &p)?],
                None => validation_points(&p, opts.points, &cfg)?,
            };
            let t = validate_bound(&p, &cert, &xs, &cfg)?;
            emit(opts, "validate", &t, || {
                let mut table = Table::with_coords("x", p.dim_x, &["merit", "bound", "true_dist", "pass"]);
                for r in &t.rows {
                    let mut row = nums(&r.x);
                    row.extend([num(r.merit), num(r.bound), num(r.true_dist), r.pass.to_string()]);
                    table.push(row);
                }
                table
            })?;
            Ok(0)
        }
        Command::Solve => {
            let p = problem(opts)?;
            let mut cfg = cfg;
            if opts.point.is_some() {
                cfg.solver.start = Some(point(opts, &p)?.into_vec());
            }
            let cert = certificate(opts)?;
            let r = solve(&p, &cfg, cert.as_ref())?;
            emit(opts, "solve", &r, || {
                let mut t = Table::new(&["iter", "best_nu_ka"]);
                for tp in &r.trace {
                    t.push(vec![tp.iter.to_string(), num(tp.best_nu_ka)]);
                }
                t
            })?;
            Ok(0)
        }
        Command::Reproduce { example } => {
            let r = match example {
                Example::Example1 => reproduce::Reproduction::Example1(reproduce::example1(&cfg)?),
                Example::Example2 => reproduce::Reproduction::Example2(reproduce::example2(theta(opts)?, &cfg)?),
            };
            emit(opts, "reproduce", &r, || r.table())?;
            Ok(if r.confirmed() { 0 } else { 1 })
        }
    }
}
