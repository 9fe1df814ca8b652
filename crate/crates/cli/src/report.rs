use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;

/// Seventeen significant digits, `.` decimal separator.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub series: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub scenario: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Relative to the output directory.
    pub results: Vec<PathBuf>,
    pub summary: Vec<(String, f64)>,
    pub plot: Vec<PlotPoint>,
    pub warnings: Vec<String>,
    /// Error text when the run failed.
    pub error: Option<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(scenario: &str, config_hash: &str, seed: Option<u64>) -> Self {
        Self {
            scenario: scenario.into(),
            config_hash: config_hash.into(),
            seed,
            started_unix: now(),
            ..Self::default()
        }
    }

    pub fn summary(&mut self, name: &str, value: f64) {
        self.summary.push((name.into(), value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// `key = value` text with sections, readable by the configuration parser.
    pub fn to_text(&self) -> String {
        let mut s = String::from("[manifest]\n");
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "config_sha256 = {}", self.config_hash);
        let _ = writeln!(s, "seed = {}", self.seed.map_or("none".into(), |x| x.to_string()));
        let _ = writeln!(s, "started_unix = {}", self.started_unix);
        let _ = writeln!(s, "finished_unix = {}", self.finished_unix);
        let _ = writeln!(s, "netsense_core = {}", netsense_version());
        let _ = writeln!(s, "netsense_cli = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "status = {}", if self.error.is_some() { "error" } else { "ok" });
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error = {}", e.replace('\n', " "));
        }
        s.push_str("\n[results]\n");
        for (i, p) in self.results.iter().enumerate() {
            let _ = writeln!(s, "file.{i} = {}", p.display());
        }
        s.push_str("\n[summary]\n");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} = {}", fmt_f64(*v));
        }
        s.push_str("\n[warnings]\n");
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning.{i} = {w}");
        }
        s
    }

    pub fn write(&mut self, out: &Path) -> Result<(), CliError> {
        self.finished_unix = now();
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("manifest.txt"), self.to_text())?;
        Ok(())
    }
}

fn netsense_version() -> &'static str {
    // Both crates share the workspace version.
    env!("CARGO_PKG_VERSION")
}

/// `x,y,series` rows for plotting; header only when the manifest has no plot data.
pub fn plot_csv(m: &RunManifest) -> String {
    let mut s = String::from("x,y,series\n");
    for p in &m.plot {
        let _ = writeln!(s, "{},{},{}", fmt_f64(p.x), fmt_f64(p.y), p.series);
    }
    s
}

/// Aligned summary table.
pub fn summary_table(m: &RunManifest) -> String {
    let width = m.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max("quantity".len());
    let mut s = format!("scenario: {}\n{:<width$}  value\n", m.scenario, "quantity");
    for (k, v) in &m.summary {
        let _ = writeln!(s, "{k:<width$}  {v:>24.12e}");
    }
    for w in &m.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

/// Write `plot.csv` next to the results and return the table for standard output.
pub fn emit_report(m: &RunManifest, out: &Path) -> Result<String, CliError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("plot.csv"), plot_csv(m))?;
    Ok(summary_table(m))
}
