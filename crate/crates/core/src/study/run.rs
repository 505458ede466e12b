use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use super::report::{Metadata, Metric, Row, StudyKind, StudyReport};
use super::svg::{loglog_svg, Series};
use crate::error::{Error, Result};
use crate::fespace::{build_space, FeSpace};
use crate::forms::{assemble_a_volume, assemble_bpp_dense, assemble_method, method_grams, CoefficientSet, Method};
use crate::functions::ExactSolution;
use crate::linalg::{estimate_control_constant, ControlConstant, KERNEL_TOL};
use crate::mesh::{make_unit_disc_mesh, Mesh};
use crate::problems::{convergence_problem, gradrob_problem, locking_problem, ManufacturedProblem};

/// A penalty parameter, either `factor * p^2` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    Scaled(f64),
    Fixed(f64),
}

impl Penalty {
    pub fn value(self, p: usize) -> f64 {
        match self {
            Penalty::Scaled(f) => f * (p * p) as f64,
            Penalty::Fixed(v) => v,
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Scaled(v) => write!(f, "{v}p^2"),
            Penalty::Fixed(v) => write!(f, "{v}"),
        }
    }
}

/// Accepts `40` or `10p^2` (also `10p2`).
impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad penalty '{s}'"));
        let (num, scaled) = match s.strip_suffix("p^2").or_else(|| s.strip_suffix("p2")) {
            Some(n) => (n, true),
            None => (s, false),
        };
        let v: f64 = num.trim_end_matches('*').parse().map_err(|_| bad())?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(bad());
        }
        Ok(if scaled { Penalty::Scaled(v) } else { Penalty::Fixed(v) })
    }
}

/// Parameters shared by the three studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Polynomial degrees; the locking and gradient studies use the first.
    pub degrees: Vec<usize>,
    /// Refinement levels; `None` picks the per-degree default.
    pub levels: Option<Vec<usize>>,
    /// Values of `c_s^2`; the convergence study uses the first.
    pub cs2: Vec<f64>,
    pub methods: Vec<Method>,
    /// Penalty overrides; `None` keeps the problem defaults.
    pub lambda_b: Option<Penalty>,
    pub lambda_n: Option<Penalty>,
    /// Geometry order; `None` means [`default_geom_order`].
    pub geom_order: Option<usize>,
    /// Factor applied to the forcing.
    pub forcing_scale: f64,
}

impl StudyConfig {
    pub fn convergence() -> Self {
        StudyConfig {
            degrees: vec![1, 2, 3, 4],
            levels: None,
            cs2: vec![1.0],
            methods: Method::ALL.to_vec(),
            lambda_b: None,
            lambda_n: None,
            geom_order: None,
            forcing_scale: 1.0,
        }
    }

    pub fn locking() -> Self {
        StudyConfig { degrees: vec![2], cs2: vec![1.0, 10.0, 100.0, 1000.0], ..Self::convergence() }
    }

    pub fn gradrob() -> Self {
        StudyConfig { degrees: vec![3], ..Self::locking() }
    }

    /// Levels 1..=4 for `p <= 2` and 1..=3 above.
    pub fn levels_for(&self, p: usize) -> Vec<usize> {
        match &self.levels {
            Some(l) => l.clone(),
            None if p <= 2 => (1..=4).collect(),
            None => (1..=3).collect(),
        }
    }

    pub fn geom_order_for(&self, p: usize) -> usize {
        self.geom_order.unwrap_or_else(|| default_geom_order(p))
    }

    fn validate(&self, kind: StudyKind) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if self.degrees.is_empty() || self.cs2.is_empty() || self.methods.is_empty() {
            return bad("degrees, cs2 and methods must be non-empty".into());
        }
        if let Some(&p) = self.degrees.iter().find(|&&p| !(1..=4).contains(&p)) {
            return Err(Error::UnsupportedDegree(p));
        }
        if let Some(l) = &self.levels {
            if l.len() < 2 {
                return bad(format!("a study needs at least 2 levels, got {}", l.len()));
            }
        }
        if self.geom_order == Some(0) {
            return bad("geometry order must be positive".into());
        }
        if let Some(c) = self.cs2.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return bad(format!("c_s^2 = {c} must be positive"));
        }
        if !self.forcing_scale.is_finite() {
            return bad("forcing scale must be finite".into());
        }
        if kind != StudyKind::Convergence && self.degrees.len() != 1 {
            return bad(format!("the {} study takes a single degree", kind.name()));
        }
        Ok(())
    }

    fn metadata(&self, kind: StudyKind) -> Metadata {
        let mut md = Metadata::new(kind);
        let default = |kind: StudyKind, which: &str| match (kind, which) {
            (StudyKind::Convergence, "n") => "100p^2",
            _ => "10p^2",
        };
        md.lambda_b = self.lambda_b.map_or(default(kind, "b").into(), |l| l.to_string());
        md.lambda_n = self.lambda_n.map_or(default(kind, "n").into(), |l| l.to_string());
        md.geom_order = self.geom_order.map_or("max(p,2)".into(), |g| g.to_string());
        md.levels = match &self.levels {
            Some(l) => join(l),
            None => "1-4 for p<=2, 1-3 for p>=3".into(),
        };
        if self.forcing_scale != 1.0 {
            md.coefficients.push_str(&format!(" forcing_scale={}", self.forcing_scale));
        }
        match kind {
            StudyKind::Convergence => md.cs2 = Some(1.0),
            _ => md.p = Some(self.degrees[0]),
        }
        md
    }
}

/// `g = max(p, 2)`. A polygonal boundary (`g = 1`) limits the L2 rate of
/// the tangential solutions to about `h^(1/2)` at `p = 1`.
pub fn default_geom_order(p: usize) -> usize {
    p.max(2)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Least-squares slope of `log value` against `log h` over the last three
/// points. `None` with fewer than two usable points.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let tail: Vec<(f64, f64)> = points
        .iter()
        .skip(points.len().saturating_sub(3))
        .filter(|(h, v)| *h > 0.0 && *v > 0.0)
        .map(|(h, v)| (h.ln(), v.ln()))
        .collect();
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    p: usize,
    level: usize,
    cs2: f64,
    method: Method,
}

fn problem_for(kind: StudyKind, cfg: &StudyConfig, p: usize, cs2: f64) -> Result<ManufacturedProblem> {
    let mut pb = match kind {
        StudyKind::Convergence => convergence_problem(p)?,
        StudyKind::Locking => locking_problem(p, cs2)?,
        StudyKind::Gradrob => gradrob_problem(p, cs2)?,
    };
    if let Some(l) = cfg.lambda_b {
        pb.coeffs.lambda_b = l.value(p);
    }
    if let Some(l) = cfg.lambda_n {
        pb.coeffs.lambda_n = l.value(p);
    }
    if cfg.forcing_scale != 1.0 {
        let (f, s) = (pb.forcing.clone(), cfg.forcing_scale);
        pb.forcing = Arc::new(move |x| {
            let v = f(x);
            [s * v[0], s * v[1]]
        });
    }
    Ok(pb)
}

fn solve_cell(kind: StudyKind, cfg: &StudyConfig, cell: Cell, mesh: &Arc<Mesh>) -> Result<Vec<Row>> {
    let pb = problem_for(kind, cfg, cell.p, cell.cs2)?;
    let d = assemble_method(cell.method, mesh.clone(), cell.p, &pb.coeffs, &pb.forcing)?;
    let sol = d.solve()?;
    let exact = pb.exact.clone().unwrap_or_else(ExactSolution::zero);
    let norms = sol.error_norms(&exact)?;
    let h = mesh.mesh_size();
    let row = |metric, value| Row { h, p: cell.p, cs2: cell.cs2, method: cell.method, metric, value };
    Ok(match kind {
        StudyKind::Convergence => vec![row(Metric::L2Error, norms.l2_error), row(Metric::XhError, norms.xh_error)],
        StudyKind::Locking => vec![row(Metric::L2Error, norms.l2_error)],
        StudyKind::Gradrob => vec![row(Metric::L2Norm, norms.l2_norm)],
    })
}

/// Runs every `(p, level, cs2, method)` cell in parallel. Solver failures
/// leave the cell empty and add a warning to the metadata.
fn run_study(kind: StudyKind, cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate(kind)?;
    let cs2_list = match kind {
        StudyKind::Convergence => vec![cfg.cs2[0]],
        _ => cfg.cs2.clone(),
    };
    let mut metadata = cfg.metadata(kind);
    let mut meshes: BTreeMap<(usize, usize), Arc<Mesh>> = BTreeMap::new();
    let mut cells = Vec::new();
    for &p in &cfg.degrees {
        let g = cfg.geom_order_for(p);
        for level in cfg.levels_for(p) {
            meshes.entry((level, g)).or_insert_with(|| Arc::new(make_unit_disc_mesh(level, g)));
            for &cs2 in &cs2_list {
                for &method in &cfg.methods {
                    if method.check_degree(p).is_err() {
                        continue;
                    }
                    cells.push(Cell { p, level, cs2, method });
                }
            }
        }
    }
    let results: Vec<(Cell, Result<Vec<Row>>)> = cells
        .par_iter()
        .map(|&cell| {
            let mesh = &meshes[&(cell.level, cfg.geom_order_for(cell.p))];
            (cell, solve_cell(kind, cfg, cell, mesh))
        })
        .collect();
    let mut rows = Vec::new();
    for (cell, res) in results {
        match res {
            Ok(r) => rows.extend(r.into_iter().filter(|r| r.value.is_finite())),
            Err(e) => {
                let msg = format!("p={} level={} cs2={} {}: {e}", cell.p, cell.level, cell.cs2, cell.method);
                log::warn!("{msg}");
                metadata.warnings.push(msg);
            }
        }
    }
    StudyReport::new(metadata, rows)
}

/// Convergence study on the manufactured rotating solution. Writes
/// `hconv.csv` (L2 errors), `hconv_xh.csv` (triple-norm errors),
/// `convergence.meta` and one `hconv_p<p>.svg` per degree.
pub fn run_convergence(cfg: &StudyConfig, out: Option<&Path>) -> Result<StudyReport> {
    let report = run_study(StudyKind::Convergence, cfg)?;
    if let Some(dir) = out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

/// Volume-locking study: L2 errors of the divergence-free solution for each
/// `c_s^2`. Writes `locking.csv`, `locking.meta` and one SVG per method.
pub fn run_locking(cfg: &StudyConfig, out: Option<&Path>) -> Result<StudyReport> {
    let report = run_study(StudyKind::Locking, cfg)?;
    if let Some(dir) = out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

/// Gradient-robustness study: `|u_h|_{L2}` under gradient forcing for each
/// `c_s^2`. Writes `gradrob.csv`, `gradrob.meta` and one SVG per method.
pub fn run_gradrob(cfg: &StudyConfig, out: Option<&Path>) -> Result<StudyReport> {
    let report = run_study(StudyKind::Gradrob, cfg)?;
    if let Some(dir) = out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

fn table_name(kind: StudyKind, metric: Metric) -> &'static str {
    match (kind, metric) {
        (StudyKind::Convergence, Metric::XhError) => "hconv_xh.csv",
        (StudyKind::Convergence, _) => "hconv.csv",
        (StudyKind::Locking, _) => "locking.csv",
        (StudyKind::Gradrob, _) => "gradrob.csv",
    }
}

/// Metric plotted in the SVG figures.
fn plot_metric(kind: StudyKind) -> Metric {
    match kind {
        StudyKind::Gradrob => Metric::L2Norm,
        _ => Metric::L2Error,
    }
}

/// Writes CSV tables, metadata and figures of a report into `dir`.
pub fn write_outputs(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let kind = report.kind();
    let mut written = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };
    let metrics = match kind {
        StudyKind::Convergence => vec![Metric::L2Error, Metric::XhError],
        _ => vec![plot_metric(kind)],
    };
    for metric in metrics {
        put(table_name(kind, metric).into(), report.csv_string(metric)?.as_bytes())?;
    }
    let mut meta = Vec::new();
    report.metadata.write(&mut meta)?;
    put(format!("{}.meta", kind.name()), &meta)?;
    for (name, svg) in figures(report) {
        put(name, svg.as_bytes())?;
    }
    Ok(written)
}

/// SVG figures of a report: one per degree for the convergence study, one
/// per method otherwise.
pub fn figures(report: &StudyReport) -> Vec<(String, String)> {
    let kind = report.kind();
    let metric = plot_metric(kind);
    let mut out = Vec::new();
    let mut degrees: Vec<usize> = report.rows.iter().map(|r| r.p).collect();
    degrees.dedup();
    let mut cs2s: Vec<f64> = report.rows.iter().map(|r| r.cs2).collect();
    cs2s.sort_by(f64::total_cmp);
    cs2s.dedup();
    let methods: Vec<Method> = Method::ALL.into_iter().filter(|m| report.rows.iter().any(|r| r.method == *m)).collect();
    match kind {
        StudyKind::Convergence => {
            for &p in &degrees {
                let cs2 = report.metadata.cs2.unwrap_or(1.0);
                let series: Vec<Series> = methods
                    .iter()
                    .map(|&m| Series { label: m.to_string(), points: report.series(p, cs2, m, metric) })
                    .filter(|s| !s.points.is_empty())
                    .collect();
                let title = format!("L2 error, p = {p}");
                out.push((format!("hconv_p{p}.svg"), loglog_svg(&title, &series, p as f64 + 0.5)));
            }
        }
        _ => {
            let p = report.metadata.p.unwrap_or(degrees.first().copied().unwrap_or(1));
            let slope = if kind == StudyKind::Gradrob { 0.0 } else { p as f64 + 0.5 };
            for &m in &methods {
                let series: Vec<Series> = cs2s
                    .iter()
                    .map(|&c| Series { label: format!("cs2 = {c}"), points: report.series(p, c, m, metric) })
                    .filter(|s| !s.points.is_empty())
                    .collect();
                let title = format!("{} {}, {m}, p = {p}", kind.name(), metric.name());
                out.push((format!("{}_{}.svg", kind.name(), m.label()), loglog_svg(&title, &series, slope)));
            }
        }
    }
    out
}

/// Stability constants of one method on one disc mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub method: Method,
    pub level: usize,
    pub p: usize,
    pub geom_order: usize,
    pub h: f64,
    /// Unconstrained dofs entering the dense eigenproblems.
    pub dim: usize,
    pub control: ControlConstant,
}

impl DiagnosticsReport {
    pub fn to_text(&self) -> String {
        let c_hat = self.control.c_hat.map_or("none".to_string(), |c| c.to_string());
        format!(
            "method={}\nlevel={}\np={}\ngeom_order={}\nh={}\ndim={}\nc_bh={}\nc_hat={}\nkernel_dim={}\ncomplement_dim={}\n",
            self.method,
            self.level,
            self.p,
            self.geom_order,
            self.h,
            self.dim,
            self.control.c_bh,
            c_hat,
            self.control.kernel_dim,
            self.control.complement_dim
        )
    }
}

/// Options of [`run_diagnostics`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    pub method: Method,
    pub level: usize,
    pub p: usize,
    pub cs2: f64,
    pub lambda_b: Penalty,
    pub lambda_n: Penalty,
    pub geom_order: Option<usize>,
    /// Factor applied to the background flow `b`.
    pub flow_scale: f64,
}

impl DiagnosticsConfig {
    pub fn new(method: Method, level: usize, p: usize) -> Self {
        DiagnosticsConfig {
            method,
            level,
            p,
            cs2: 1.0,
            lambda_b: Penalty::Scaled(10.0),
            lambda_n: Penalty::Scaled(100.0),
            geom_order: None,
            flow_scale: 1.0,
        }
    }

    pub fn coefficients(&self) -> CoefficientSet {
        let mut c = CoefficientSet::rotating_flow(self.cs2, self.lambda_b.value(self.p), self.lambda_n.value(self.p));
        let (b, s) = (c.b_flow.clone(), self.flow_scale);
        c.b_flow = Arc::new(move |x| {
            let v = b(x);
            [s * v[0], s * v[1]]
        });
        c.b_inf *= s.abs();
        c
    }
}

/// Dense estimate of `c_bh` and the kernel dimension of `b_h` on the
/// unconstrained dofs. Fails beyond the dense size limit.
pub fn run_diagnostics(cfg: &DiagnosticsConfig, out: Option<&Path>) -> Result<DiagnosticsReport> {
    cfg.method.check_degree(cfg.p)?;
    let g = cfg.geom_order.unwrap_or_else(|| default_geom_order(cfg.p));
    if g == 0 {
        return Err(Error::Precondition("geometry order must be positive".into()));
    }
    let mesh = Arc::new(make_unit_disc_mesh(cfg.level, g));
    let coeffs = cfg.coefficients();
    coeffs.validate(&mesh)?;
    let space = Arc::new(build_space(cfg.method.family(), mesh.clone(), cfg.p)?);
    let free: Vec<usize> = (0..space.ndof()).filter(|i| !space.constrained_dofs().contains(i)).collect();
    crate::linalg::check_dense_size(free.len())?;
    let (a, b) = if cfg.method == Method::M2 {
        let pp = Arc::new(FeSpace::pseudo_pressure(mesh.clone(), cfg.p)?);
        (assemble_a_volume(&space, &coeffs)?.dense_submatrix(&free), assemble_bpp_dense(&space, &pp, &coeffs)?)
    } else {
        let (a, b) = method_grams(cfg.method, &space, &coeffs)?;
        (a.dense_submatrix(&free), b.dense_submatrix(&free))
    };
    let control = estimate_control_constant(&a, &b, KERNEL_TOL)?;
    let report = DiagnosticsReport {
        method: cfg.method,
        level: cfg.level,
        p: cfg.p,
        geom_order: g,
        h: mesh.mesh_size(),
        dim: free.len(),
        control,
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("diagnostics_{}.txt", cfg.method.label())), report.to_text())?;
    }
    Ok(report)
}
