//! Refinement studies, their CSV/SVG output and the stability diagnostics.

mod report;
mod run;
mod svg;

pub use report::{version_string, Metadata, Metric, Row, StudyKind, StudyReport};
pub use run::{
    default_geom_order, figures, fit_slope, run_convergence, run_diagnostics, run_gradrob, run_locking, write_outputs, DiagnosticsConfig,
    DiagnosticsReport, Penalty, StudyConfig,
};
pub use svg::{loglog_svg, Series};
