use std::fs;
use std::path::{Path, PathBuf};

use super::{ExperimentResult, KpiSeries, PointResult};
use crate::error::Result;

fn file_safe(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '=' => '-',
            c if c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-' => c,
            _ => '_',
        })
        .collect()
}

/// `<experiment>_<sweep point>_<kpi>.csv`, e.g.
/// `e3_contact_rate-0.5_ever_experienced.csv`.
pub fn kpi_file_name(result: &ExperimentResult, point: &PointResult, kpi: &str) -> String {
    format!("{}_{}_{}.csv", result.id.short(), file_safe(&point.label), kpi)
}

fn series_csv(point: &PointResult, s: &KpiSeries) -> String {
    let mut out = format!("{},{} mean,{} std\n", s.index_name, point.label, point.label);
    for ((i, m), sd) in s.index.iter().zip(&s.mean).zip(&s.std) {
        out.push_str(&format!("{i},{m},{sd}\n"));
    }
    out
}

/// Writes one CSV per (sweep point, KPI) plus `<experiment>_summary.json`
/// and returns the paths written, summary last.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &result.points {
        for s in &p.series {
            let path = dir.join(kpi_file_name(result, p, &s.kpi));
            fs::write(&path, series_csv(p, s))?;
            written.push(path);
        }
    }
    let path = dir.join(format!("{}_summary.json", result.id.short()));
    let json = serde_json::to_string_pretty(result).map_err(|e| std::io::Error::other(e.to_string()))?;
    fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}
