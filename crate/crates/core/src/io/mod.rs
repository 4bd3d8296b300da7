//! File formats: scenario JSON, trajectory CSV, metrics and run records, SVG charts.

pub mod record;
pub mod scenario;
pub mod svg;
pub mod trajectory_csv;
