//! Scenario configurations, runners and reports.
//!
//! A scenario file names a structure and a submanifold (inline or by path
//! relative to the file), a polar grid, solver tolerances and the settings of
//! one experiment. Every verdict of a report carries the measured value and
//! its threshold.

mod chart;
mod convergence;
mod levi_flat;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bishop::BishopConfig;
use crate::error::{Error, Result};
use crate::geometry::descriptor::{read_json, ManifoldDescriptor, StructureDescriptor};
use crate::geometry::manifold::GenericSubmanifold;
use crate::geometry::structure::Structure;
use crate::integral::DiscGrid;
use crate::report::{canonical_json, csv_table, float_or_string, fmt_float, heatmap_svg, loglog_svg, write_file, Series};

pub use chart::{run_chart, ChartParams};
pub use convergence::{run_convergence, ConvergenceParams};
pub use levi_flat::{max_levi_on_h, run_levi_flat, sample_on_manifold, Expectation, LeviFlatParams};
pub use sweep::{quadric_model_of, run_sweep, MemberSpec, SweepParams};

/// A descriptor given inline or as a path relative to the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path(String),
    Inline(T),
}

impl<T: for<'de> Deserialize<'de> + Clone> Source<T> {
    pub fn load(&self, base: &Path) -> Result<T> {
        match self {
            Source::Inline(t) => Ok(t.clone()),
            Source::Path(p) => read_json(&base.join(p)),
        }
    }
}

/// Polar grid counts, written `NθxNr` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_r: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_theta: 64, n_r: 16 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<DiscGrid>> {
        DiscGrid::new(self.n_theta, self.n_r)
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid must look like 64x16, got {s:?}"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(Self { n_theta: a.trim().parse().map_err(|_| bad())?, n_r: b.trim().parse().map_err(|_| bad())? })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n_theta, self.n_r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    LeviFlat(LeviFlatParams),
    Sweep(SweepParams),
    Convergence(ConvergenceParams),
    Chart(ChartParams),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::LeviFlat(_) => "levi_flat",
            Scenario::Sweep(_) => "sweep",
            Scenario::Convergence(_) => "convergence",
            Scenario::Chart(_) => "chart",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: BishopConfig,
    pub structure: Source<StructureDescriptor>,
    #[serde(default)]
    pub manifold: Option<Source<ManifoldDescriptor>>,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub out: Option<String>,
    pub scenario: Scenario,
    /// Directory against which descriptor paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = read_json(path)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.check()?;
        Ok(cfg)
    }

    /// Descriptors load and build, the grid is non-empty.
    pub fn check(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::Config(format!("scenario id {:?} is not a plain name", self.id)));
        }
        self.grid.build()?;
        let j = self.structure()?;
        if let Some(e) = self.manifold_descriptor()? {
            let e = e.build()?;
            if e.n() != j.dim_complex() {
                return Err(Error::Dimension(format!("structure on C^{} and manifold in C^{}", j.dim_complex(), e.n())));
            }
        }
        Ok(())
    }

    pub fn structure_descriptor(&self) -> Result<StructureDescriptor> {
        self.structure.load(&self.base_dir)
    }

    pub fn structure(&self) -> Result<Structure> {
        self.structure_descriptor()?.build()
    }

    pub fn manifold_descriptor(&self) -> Result<Option<ManifoldDescriptor>> {
        self.manifold.as_ref().map(|m| m.load(&self.base_dir)).transpose()
    }

    pub fn manifold(&self) -> Result<GenericSubmanifold> {
        self.manifold_descriptor()?
            .ok_or_else(|| Error::Config(format!("scenario {} needs a manifold", self.scenario.name())))?
            .build()
    }
}

/// A float written as a string when non-finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Real(#[serde(with = "float_or_string")] pub f64);

impl From<f64> for Real {
    fn from(x: f64) -> Self {
        Real(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Threshold {
    AtMost { value: f64 },
    AtLeast { value: f64 },
    Within { low: f64, high: f64 },
    Equals { value: f64 },
}

impl Threshold {
    pub fn accepts(&self, x: f64) -> bool {
        match *self {
            Threshold::AtMost { value } => x <= value,
            Threshold::AtLeast { value } => x >= value,
            Threshold::Within { low, high } => x >= low && x <= high,
            Threshold::Equals { value } => x == value,
        }
    }
}

/// A measured quantity against its threshold. NaN never passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    #[serde(with = "float_or_string")]
    pub measured: f64,
    pub threshold: Threshold,
    pub passed: bool,
}

impl Verdict {
    pub fn new(name: &str, measured: f64, threshold: Threshold) -> Self {
        Self { name: name.to_string(), measured, passed: threshold.accepts(measured), threshold }
    }

    pub fn line(&self) -> String {
        let t = match self.threshold {
            Threshold::AtMost { value } => format!("<= {value:.3e}"),
            Threshold::AtLeast { value } => format!(">= {value:.3e}"),
            Threshold::Within { low, high } => format!("in [{low:.3}, {high:.3}]"),
            Threshold::Equals { value } => format!("== {value}"),
        };
        format!("{} {}: {:.6e} {t}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.measured)
    }
}

/// One configured member: its parameters and measured values, or the error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub index: usize,
    pub label: String,
    pub params: Vec<Real>,
    pub values: BTreeMap<String, Real>,
    pub error: Option<String>,
}

impl MemberRecord {
    pub fn ok(index: usize, label: impl Into<String>, params: &[f64], values: &[(&str, f64)]) -> Self {
        Self {
            index,
            label: label.into(),
            params: params.iter().map(|&x| Real(x)).collect(),
            values: values.iter().map(|(k, v)| (k.to_string(), Real(*v))).collect(),
            error: None,
        }
    }

    pub fn failed(index: usize, label: impl Into<String>, params: &[f64], error: &Error) -> Self {
        Self {
            index,
            label: label.into(),
            params: params.iter().map(|&x| Real(x)).collect(),
            values: BTreeMap::new(),
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub label: String,
    pub points: Vec<[Real; 2]>,
}

impl SeriesRecord {
    pub fn new(label: impl Into<String>, points: &[(f64, f64)]) -> Self {
        Self { label: label.into(), points: points.iter().map(|&(x, y)| [Real(x), Real(y)]).collect() }
    }
}

/// A log-log plot of several series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRecord {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<SeriesRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRecord {
    pub name: String,
    pub title: String,
    pub values: Vec<Vec<Real>>,
}

/// Outcome of one scenario. Wall-clock time is kept out of it so that the
/// JSON export is reproducible; see [`TimedReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub id: String,
    pub scenario: String,
    pub seed: u64,
    pub grid: GridSpec,
    pub members: Vec<MemberRecord>,
    pub statistics: BTreeMap<String, Real>,
    pub flags: BTreeMap<String, bool>,
    pub plots: Vec<PlotRecord>,
    pub heatmaps: Vec<HeatmapRecord>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            id: cfg.id.clone(),
            scenario: cfg.scenario.name().to_string(),
            seed: cfg.seed,
            grid: cfg.grid,
            members: Vec::new(),
            statistics: BTreeMap::new(),
            flags: BTreeMap::new(),
            plots: Vec::new(),
            heatmaps: Vec::new(),
            verdicts: Vec::new(),
            passed: false,
        }
    }

    pub fn stat(&mut self, key: &str, value: f64) {
        self.statistics.insert(key.to_string(), Real(value));
    }

    pub fn verdict(&mut self, name: &str, measured: f64, threshold: Threshold) {
        self.verdicts.push(Verdict::new(name, measured, threshold));
    }

    /// Sets `passed` from the verdicts; a report without verdicts fails.
    pub fn finish(mut self) -> Self {
        self.passed = !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed);
        self
    }

    pub fn failures(&self) -> usize {
        self.members.iter().filter(|m| m.error.is_some()).count()
    }

    pub fn summary(&self) -> String {
        let mut out = format!("{} ({}): {}\n", self.id, self.scenario, if self.passed { "PASS" } else { "FAIL" });
        for v in &self.verdicts {
            out.push_str("  ");
            out.push_str(&v.line());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TimedReport {
    pub report: ScenarioReport,
    pub elapsed_seconds: f64,
}

pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    cfg.check()?;
    match &cfg.scenario {
        Scenario::LeviFlat(p) => run_levi_flat(cfg, p),
        Scenario::Sweep(p) => run_sweep(cfg, p),
        Scenario::Convergence(p) => run_convergence(cfg, p),
        Scenario::Chart(p) => run_chart(cfg, p).map(|(r, _)| r),
    }
}

pub fn run_timed(cfg: &ScenarioConfig) -> Result<TimedReport> {
    let start = Instant::now();
    let report = run(cfg)?;
    Ok(TimedReport { report, elapsed_seconds: start.elapsed().as_secs_f64() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
    Svg,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 3] = [ExportFormat::Json, ExportFormat::Csv, ExportFormat::Svg];
}

/// Per-member table: index, label, parameters, values (sorted keys), error.
pub fn members_csv(report: &ScenarioReport) -> Result<String> {
    let params = report.members.iter().map(|m| m.params.len()).max().unwrap_or(0);
    let mut keys: Vec<&String> = report.members.iter().flat_map(|m| m.values.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut header: Vec<String> = vec!["index".into(), "label".into()];
    header.extend((0..params).map(|k| format!("param_{k}")));
    header.extend(keys.iter().map(|k| k.to_string()));
    header.push("error".into());
    let rows: Vec<Vec<String>> = report
        .members
        .iter()
        .map(|m| {
            let mut row = vec![m.index.to_string(), m.label.clone()];
            row.extend((0..params).map(|k| m.params.get(k).map_or(String::new(), |x| fmt_float(x.0))));
            row.extend(keys.iter().map(|k| m.values.get(*k).map_or(String::new(), |x| fmt_float(x.0))));
            row.push(m.error.clone().unwrap_or_default());
            row
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    csv_table(&header, &rows)
}

/// SVG documents of the report's plots and heatmaps, keyed by file stem.
pub fn report_svgs(report: &ScenarioReport) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for p in &report.plots {
        let series: Vec<Series> = p
            .series
            .iter()
            .map(|s| Series { label: s.label.clone(), points: s.points.iter().map(|[x, y]| (x.0, y.0)).collect() })
            .collect();
        out.push((format!("{}_{}", report.id, p.name), loglog_svg(&p.title, &p.x_label, &p.y_label, &series)?));
    }
    for h in &report.heatmaps {
        let values: Vec<Vec<f64>> = h.values.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
        out.push((format!("{}_{}", report.id, h.name), heatmap_svg(&h.title, &values)?));
    }
    Ok(out)
}

/// Writes `<id>.json`, `<id>.csv` and `<id>_<plot>.svg` files into `dir`.
pub fn export_report(report: &ScenarioReport, dir: &Path, formats: &[ExportFormat]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for f in formats {
        match f {
            ExportFormat::Json => {
                let path = dir.join(format!("{}.json", report.id));
                write_file(&path, &canonical_json(report)?)?;
                written.push(path);
            }
            ExportFormat::Csv => {
                let path = dir.join(format!("{}.csv", report.id));
                write_file(&path, &members_csv(report)?)?;
                written.push(path);
            }
            ExportFormat::Svg => {
                for (stem, svg) in report_svgs(report)? {
                    let path = dir.join(format!("{stem}.svg"));
                    write_file(&path, &svg)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}

/// Timing sidecar `<id>.timing.json`.
pub fn export_timing(timed: &TimedReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("{}.timing.json", timed.report.id));
    let body = serde_json::json!({ "id": timed.report.id, "elapsed_seconds": timed.elapsed_seconds });
    write_file(&path, &canonical_json(&body)?)?;
    Ok(path)
}

pub fn load_report(path: &Path) -> Result<ScenarioReport> {
    read_json(path)
}

/// Values along one axis: `count` equispaced points in [-radius, radius].
pub(crate) fn symmetric_values(radius: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count).map(|k| -radius + 2.0 * radius * k as f64 / (count - 1) as f64).collect()
}

/// Fitted log-log slope, NaN with fewer than two usable points.
pub(crate) fn slope_of(points: &[(f64, f64)]) -> f64 {
    crate::report::loglog_fit(points).map_or(f64::NAN, |(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_config() -> ScenarioConfig {
        let text = r#"{
            "id": "flat",
            "grid": {"n_theta": 32, "n_r": 8},
            "structure": {"kind": "standard", "n": 2},
            "manifold": {"n": 2, "m": 1, "terms": []},
            "scenario": {"kind": "levi_flat", "p_count": 2, "v_count": 2, "c_count": 2, "levi_samples": 3}
        }"#;
        ScenarioConfig::from_json(text, Path::new(".")).unwrap()
    }

    #[test]
    fn grid_spec_parses() {
        assert_eq!("128x24".parse::<GridSpec>().unwrap(), GridSpec { n_theta: 128, n_r: 24 });
        assert!("128".parse::<GridSpec>().is_err());
        assert_eq!(GridSpec { n_theta: 64, n_r: 8 }.to_string(), "64x8");
    }

    #[test]
    fn flat_levi_scenario_is_exact_and_exports() {
        let cfg = flat_config();
        let report = run(&cfg).unwrap();
        assert!(report.passed, "{}", report.summary());
        assert_eq!(report.members.len(), 8);
        assert_eq!(report.statistics["max_interior_defining"].0, 0.0);
        let dir = std::env::temp_dir().join(format!("bishopdisc-export-{}", std::process::id()));
        let files = export_report(&report, &dir, &ExportFormat::ALL).unwrap();
        assert!(files.iter().any(|f| f.extension().is_some_and(|e| e == "svg")));
        let back = load_report(&dir.join("flat.json")).unwrap();
        assert_eq!(canonical_json(&back).unwrap(), canonical_json(&report).unwrap());
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn empty_report_exports_zero_rows() {
        let report = ScenarioReport::new(&flat_config()).finish();
        assert!(!report.passed);
        let csv = members_csv(&report).unwrap();
        assert_eq!(csv.lines().count(), 1);
        let back: ScenarioReport = serde_json::from_str(&canonical_json(&report).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn verdicts_reject_nan() {
        assert!(!Verdict::new("x", f64::NAN, Threshold::AtMost { value: 1.0 }).passed);
        assert!(Verdict::new("x", 0.5, Threshold::Within { low: 0.35, high: 0.65 }).passed);
        assert!(Verdict::new("x", f64::INFINITY, Threshold::AtLeast { value: 1e6 }).passed);
    }
}
