use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use galbrun::forms::{assemble_method, Method};
use galbrun::functions::ExactSolution;
use galbrun::mesh::make_unit_disc_mesh;
use galbrun::problems::{convergence_problem, gradrob_problem, locking_problem};
use galbrun::study::{
    default_geom_order, fit_slope, run_convergence, run_diagnostics, run_gradrob, run_locking, DiagnosticsConfig, Metric, Penalty,
    StudyConfig, StudyKind, StudyReport,
};
use galbrun::Error;

#[derive(Parser)]
#[command(name = "galbrun", version, about = "Refinement studies for a Galbrun-type model problem on the unit disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// h-convergence on the manufactured rotating solution
    Convergence(Flags),
    /// Errors of a divergence-free solution for several c_s^2
    Locking(Flags),
    /// Solution norms under gradient forcing for several c_s^2
    Gradrob(Flags),
    /// Single solve on one mesh level
    Solve(SolveFlags),
    /// Dense stability constants of one method
    Diagnostics(DiagFlags),
}

#[derive(Args, Default)]
struct Flags {
    /// Polynomial degrees, e.g. "1,2,3" or "1-4"
    #[arg(long)]
    p: Option<String>,
    /// Refinement levels, e.g. "1-4"
    #[arg(long)]
    levels: Option<String>,
    /// Values of c_s^2, e.g. "1,10,100,1000"
    #[arg(long)]
    cs2: Option<String>,
    /// Methods, e.g. "M1,M3"
    #[arg(long)]
    methods: Option<String>,
    /// Penalty of the flow jumps, "40" or "10p^2"
    #[arg(long)]
    lambda_b: Option<String>,
    /// Penalty of the normal jumps, "400" or "100p^2"
    #[arg(long)]
    lambda_n: Option<String>,
    /// Geometry order (default: max(p, 2))
    #[arg(long)]
    geom_order: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file with defaults for the flags above
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SolveFlags {
    /// Problem: convergence, locking or gradrob
    #[arg(long, default_value = "convergence")]
    problem: String,
    #[arg(long, default_value = "M3")]
    method: String,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long, default_value_t = 1.0)]
    cs2: f64,
    #[arg(long)]
    lambda_b: Option<String>,
    #[arg(long)]
    lambda_n: Option<String>,
    #[arg(long)]
    geom_order: Option<usize>,
}

#[derive(Args)]
struct DiagFlags {
    #[arg(long, default_value = "M3")]
    method: String,
    #[arg(long, default_value_t = 1)]
    level: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 1.0)]
    cs2: f64,
    #[arg(long, default_value = "10p^2")]
    lambda_b: String,
    #[arg(long, default_value = "100p^2")]
    lambda_n: String,
    #[arg(long)]
    geom_order: Option<usize>,
    /// Factor applied to the background flow
    #[arg(long, default_value_t = 1.0)]
    flow_scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes 2 (usage) and 1 (run).
enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Precondition(_) | Error::UnsupportedDegree(_) | Error::InvalidMethod(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Convergence(f) => study(StudyKind::Convergence, f),
        Command::Locking(f) => study(StudyKind::Locking, f),
        Command::Gradrob(f) => study(StudyKind::Gradrob, f),
        Command::Solve(f) => solve(f),
        Command::Diagnostics(f) => diagnostics(f),
    }
}

/// Reads a `key=value` file; `#` starts a comment.
fn read_config(path: &Path) -> Result<BTreeMap<String, String>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| usage(format!("bad config line '{line}'")))?;
        let key = k.trim().replace('_', "-");
        const KEYS: [&str; 8] = ["p", "levels", "cs2", "methods", "lambda-b", "lambda-n", "geom-order", "out"];
        if !KEYS.contains(&key.as_str()) {
            return Err(usage(format!("unknown config key '{key}'")));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

/// Parses "1,2,5-7" into `[1, 2, 5, 6, 7]`.
fn parse_usize_list(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || usage(format!("bad integer list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, Failure> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(usage(format!("bad number list '{s}'"))),
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>, Failure> {
    s.split(',').map(|m| m.trim().parse::<Method>().map_err(Failure::from)).collect()
}

fn study(kind: StudyKind, flags: Flags) -> Result<(), Failure> {
    let file = match &flags.config {
        Some(path) => read_config(path)?,
        None => BTreeMap::new(),
    };
    let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
    let mut cfg = match kind {
        StudyKind::Convergence => StudyConfig::convergence(),
        StudyKind::Locking => StudyConfig::locking(),
        StudyKind::Gradrob => StudyConfig::gradrob(),
    };
    if let Some(v) = pick(&flags.p, "p") {
        cfg.degrees = parse_usize_list(&v)?;
    }
    if let Some(v) = pick(&flags.levels, "levels") {
        cfg.levels = Some(parse_usize_list(&v)?);
    }
    if let Some(v) = pick(&flags.cs2, "cs2") {
        cfg.cs2 = parse_f64_list(&v)?;
    }
    if let Some(v) = pick(&flags.methods, "methods") {
        cfg.methods = parse_methods(&v)?;
    }
    if let Some(v) = pick(&flags.lambda_b, "lambda-b") {
        cfg.lambda_b = Some(v.parse::<Penalty>()?);
    }
    if let Some(v) = pick(&flags.lambda_n, "lambda-n") {
        cfg.lambda_n = Some(v.parse::<Penalty>()?);
    }
    if let Some(v) = pick(&flags.geom_order, "geom-order") {
        cfg.geom_order = Some(v.parse().map_err(|_| usage(format!("bad geometry order '{v}'")))?);
    }
    let out = flags.out.clone().or_else(|| file.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    let report = match kind {
        StudyKind::Convergence => run_convergence(&cfg, Some(&out))?,
        StudyKind::Locking => run_locking(&cfg, Some(&out))?,
        StudyKind::Gradrob => run_gradrob(&cfg, Some(&out))?,
    };
    print_summary(&report);
    if report.metadata.warnings.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(format!("{} cell(s) failed, see {}.meta", report.metadata.warnings.len(), kind.name())))
    }
}

fn print_summary(report: &StudyReport) {
    let metric = match report.kind() {
        StudyKind::Gradrob => Metric::L2Norm,
        _ => Metric::L2Error,
    };
    let mut keys: Vec<(usize, f64, Method)> = report.rows.iter().map(|r| (r.p, r.cs2, r.method)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keys.dedup();
    for (p, cs2, m) in keys {
        let s = report.series(p, cs2, m, metric);
        let values: Vec<String> = s.iter().map(|(_, v)| format!("{v:.3e}")).collect();
        let slope = fit_slope(&s).map_or("-".to_string(), |r| format!("{r:.2}"));
        println!("p={p} cs2={cs2} {m}: {} [{}] slope={slope}", metric, values.join(" "));
    }
}

fn solve(f: SolveFlags) -> Result<(), Failure> {
    let method: Method = f.method.parse()?;
    let mut pb = match f.problem.as_str() {
        "convergence" => convergence_problem(f.p)?,
        "locking" => locking_problem(f.p, f.cs2)?,
        "gradrob" => gradrob_problem(f.p, f.cs2)?,
        other => return Err(usage(format!("unknown problem '{other}'"))),
    };
    if let Some(v) = &f.lambda_b {
        pb.coeffs.lambda_b = v.parse::<Penalty>()?.value(f.p);
    }
    if let Some(v) = &f.lambda_n {
        pb.coeffs.lambda_n = v.parse::<Penalty>()?.value(f.p);
    }
    let g = f.geom_order.unwrap_or_else(|| default_geom_order(f.p));
    if g == 0 {
        return Err(usage("geometry order must be positive"));
    }
    let mesh = Arc::new(make_unit_disc_mesh(f.level, g));
    let d = assemble_method(method, mesh.clone(), f.p, &pb.coeffs, &pb.forcing)?;
    let sol = d.solve()?;
    let exact = pb.exact.clone().unwrap_or_else(ExactSolution::zero);
    let n = sol.error_norms(&exact)?;
    println!("method={method}\nproblem={}\np={}\nlevel={}\nh={}", pb.name, f.p, f.level, mesh.mesh_size());
    println!("dofs={}\nl2_norm={}", d.system.dim(), n.l2_norm);
    if pb.exact.is_some() {
        println!("l2_error={}\nxh_error={}", n.l2_error, n.xh_error);
    }
    Ok(())
}

fn diagnostics(f: DiagFlags) -> Result<(), Failure> {
    let mut cfg = DiagnosticsConfig::new(f.method.parse()?, f.level, f.p);
    cfg.cs2 = f.cs2;
    cfg.lambda_b = f.lambda_b.parse()?;
    cfg.lambda_n = f.lambda_n.parse()?;
    cfg.geom_order = f.geom_order;
    cfg.flow_scale = f.flow_scale;
    let report = match run_diagnostics(&cfg, f.out.as_deref()) {
        Err(e @ Error::SizeLimit { .. }) => return Err(usage(e.to_string())),
        r => r?,
    };
    print!("{}", report.to_text());
    Ok(())
}
