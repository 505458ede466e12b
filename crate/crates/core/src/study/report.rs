use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forms::Method;

/// Which study produced a report. Fixes the CSV layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StudyKind {
    Convergence,
    Locking,
    Gradrob,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Convergence => "convergence",
            StudyKind::Locking => "locking",
            StudyKind::Gradrob => "gradrob",
        }
    }

    /// Name of the second CSV column, which indexes the table blocks.
    fn key_column(self) -> &'static str {
        match self {
            StudyKind::Convergence => "p",
            StudyKind::Locking | StudyKind::Gradrob => "cs",
        }
    }

    fn column_prefix(self) -> &'static str {
        match self {
            StudyKind::Gradrob => "norm",
            _ => "error",
        }
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convergence" => Ok(StudyKind::Convergence),
            "locking" => Ok(StudyKind::Locking),
            "gradrob" => Ok(StudyKind::Gradrob),
            _ => Err(Error::Parse(format!("unknown study kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    /// `|u_h - u|_{L2}`
    L2Error,
    /// Triple norm of the error.
    XhError,
    /// `|u_h|_{L2}`
    L2Norm,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::L2Error => "l2_error",
            Metric::XhError => "xh_error",
            Metric::L2Norm => "l2_norm",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2_error" => Ok(Metric::L2Error),
            "xh_error" => Ok(Metric::XhError),
            "l2_norm" => Ok(Metric::L2Norm),
            _ => Err(Error::Parse(format!("unknown metric '{s}'"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub h: f64,
    pub p: usize,
    pub cs2: f64,
    pub method: Method,
    pub metric: Metric,
    pub value: f64,
}

/// Run parameters recorded alongside the tables as `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub kind: StudyKind,
    pub coefficients: String,
    pub lambda_b: String,
    pub lambda_n: String,
    pub geom_order: String,
    pub levels: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
    /// Degree of the locking and gradient studies.
    pub p: Option<usize>,
    /// `c_s^2` of the convergence study.
    pub cs2: Option<f64>,
    pub warnings: Vec<String>,
}

impl Metadata {
    pub fn new(kind: StudyKind) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Metadata {
            kind,
            coefficients: "rho=1 b=0.1(-y,x) |b|_inf=0.1".into(),
            lambda_b: String::new(),
            lambda_n: String::new(),
            geom_order: "max(p,2)".into(),
            levels: String::new(),
            timestamp,
            version: version_string(),
            p: None,
            cs2: None,
            warnings: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind={}", self.kind.name())?;
        writeln!(w, "coefficients={}", self.coefficients)?;
        writeln!(w, "lambda_b={}", self.lambda_b)?;
        writeln!(w, "lambda_n={}", self.lambda_n)?;
        writeln!(w, "geom_order={}", self.geom_order)?;
        writeln!(w, "levels={}", self.levels)?;
        writeln!(w, "timestamp={}", self.timestamp)?;
        writeln!(w, "version={}", self.version)?;
        if let Some(p) = self.p {
            writeln!(w, "p={p}")?;
        }
        if let Some(cs2) = self.cs2 {
            writeln!(w, "cs2={cs2}")?;
        }
        for warning in &self.warnings {
            writeln!(w, "warning={}", warning.replace('\n', " "))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut warnings = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse(format!("bad metadata line '{line}'")))?;
            if k == "warning" {
                warnings.push(v.to_string());
            } else {
                map.insert(k.to_string(), v.to_string());
            }
        }
        let mut take = |k: &str| map.remove(k).ok_or_else(|| Error::Parse(format!("metadata misses '{k}'")));
        let kind = take("kind")?.parse()?;
        let coefficients = take("coefficients")?;
        let lambda_b = take("lambda_b")?;
        let lambda_n = take("lambda_n")?;
        let geom_order = take("geom_order")?;
        let levels = take("levels")?;
        let timestamp = parse_num(&take("timestamp")?)?;
        let version = take("version")?;
        let p = map.remove("p").map(|v| parse_num(&v)).transpose()?;
        let cs2 = map.remove("cs2").map(|v| parse_num(&v)).transpose()?;
        if let Some(k) = map.keys().next() {
            return Err(Error::Parse(format!("unknown metadata key '{k}'")));
        }
        Ok(Metadata { kind, coefficients, lambda_b, lambda_n, geom_order, levels, timestamp, version, p, cs2, warnings })
    }
}

pub fn version_string() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

fn parse_num<T: FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse(format!("bad number '{s}'")))
}

/// Tabulated results of one study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

impl StudyReport {
    pub fn new(metadata: Metadata, mut rows: Vec<Row>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| !r.value.is_finite() || !r.h.is_finite()) {
            return Err(Error::Precondition(format!("non-finite value in row {r:?}")));
        }
        sort_rows(&mut rows);
        Ok(StudyReport { metadata, rows })
    }

    pub fn kind(&self) -> StudyKind {
        self.metadata.kind
    }

    /// Metrics present, in a fixed order.
    pub fn metrics(&self) -> Vec<Metric> {
        let mut m: Vec<Metric> = self.rows.iter().map(|r| r.metric).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn value(&self, p: usize, cs2: f64, h: f64, method: Method, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.p == p && r.cs2 == cs2 && r.h == h && r.method == method && r.metric == metric)
            .map(|r| r.value)
    }

    /// `(h, value)` pairs of one series, coarsest first.
    pub fn series(&self, p: usize, cs2: f64, method: Method, metric: Metric) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.p == p && r.cs2 == cs2 && r.method == method && r.metric == metric)
            .map(|r| (r.h, r.value))
            .collect()
    }

    fn csv_header(&self) -> Vec<String> {
        let kind = self.kind();
        let mut header = vec!["h".to_string(), kind.key_column().to_string()];
        header.extend(Method::ALL.iter().map(|m| format!("{}{}", kind.column_prefix(), m.label())));
        header
    }

    /// Writes the wide table of one metric: one line per `(p or cs, h)` and
    /// one column per method, empty where a method was skipped.
    pub fn write_csv<W: Write>(&self, metric: Metric, w: W) -> Result<()> {
        let kind = self.kind();
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(self.csv_header())?;
        let mut lines: Vec<(usize, f64, f64)> = Vec::new();
        for r in self.rows.iter().filter(|r| r.metric == metric) {
            let key = (r.p, r.cs2, r.h);
            if lines.last() != Some(&key) {
                lines.push(key);
            }
        }
        for (p, cs2, h) in lines {
            let mut rec = vec![h.to_string()];
            rec.push(match kind {
                StudyKind::Convergence => p.to_string(),
                _ => cs2.to_string(),
            });
            for m in Method::ALL {
                rec.push(self.value(p, cs2, h, m, metric).map(|v| v.to_string()).unwrap_or_default());
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn csv_string(&self, metric: Metric) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(metric, &mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Inverse of [`StudyReport::write_csv`] over all tables of a report.
    pub fn parse<R: Read>(metadata: Metadata, tables: Vec<(Metric, R)>) -> Result<Self> {
        let kind = metadata.kind;
        let mut rows = Vec::new();
        for (metric, reader) in tables {
            let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
            let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
            let report = StudyReport { metadata: metadata.clone(), rows: Vec::new() };
            if header != report.csv_header() {
                return Err(Error::Parse(format!("unexpected CSV header {header:?}")));
            }
            for rec in rdr.records() {
                let rec = rec?;
                let h: f64 = parse_num(&rec[0])?;
                let (p, cs2) = match kind {
                    StudyKind::Convergence => {
                        (parse_num(&rec[1])?, metadata.cs2.ok_or_else(|| Error::Parse("metadata misses 'cs2'".into()))?)
                    }
                    _ => (metadata.p.ok_or_else(|| Error::Parse("metadata misses 'p'".into()))?, parse_num(&rec[1])?),
                };
                for (k, method) in Method::ALL.into_iter().enumerate() {
                    let cell = &rec[2 + k];
                    if !cell.is_empty() {
                        rows.push(Row { h, p, cs2, method, metric, value: parse_num(cell)? });
                    }
                }
            }
        }
        StudyReport::new(metadata, rows)
    }
}

/// Sort by `(p, cs2, descending h, method, metric)`.
fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        a.p.cmp(&b.p)
            .then(a.cs2.total_cmp(&b.cs2))
            .then(b.h.total_cmp(&a.h))
            .then(a.method.cmp(&b.method))
            .then(a.metric.cmp(&b.metric))
    });
}
