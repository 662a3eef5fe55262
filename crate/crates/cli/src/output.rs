//! Results CSV and run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use crate::config::ExperimentConfig;

pub const CSV_HEADER: [&str; 10] =
    ["experiment", "model", "delta", "theta", "outcome", "qm_prob", "om_prob", "std_err", "n_samples", "seed"];

/// One line of the results CSV. Empty optional fields are written as empty
/// cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub experiment: &'static str,
    pub model: String,
    pub delta: Option<f64>,
    pub theta: Option<f64>,
    pub outcome: String,
    pub qm_prob: Option<f64>,
    pub om_prob: f64,
    pub std_err: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl CsvRow {
    fn fields(&self) -> [String; 10] {
        let opt = |x: Option<f64>| x.map(fmt_real).unwrap_or_default();
        [
            self.experiment.to_string(),
            self.model.clone(),
            opt(self.delta),
            opt(self.theta),
            self.outcome.clone(),
            opt(self.qm_prob),
            fmt_real(self.om_prob),
            fmt_real(self.std_err),
            self.n_samples.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros dropped,
/// exponent form outside `1e-5 ≤ |x| < 1e12`.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<(), csv::Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` → `results.manifest.txt`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "results".into());
    csv.with_file_name(format!("{stem}.manifest.txt"))
}

/// Writes the resolved config as a loadable config file, with provenance as
/// comment lines. The `# timestamp` line is the only one that differs
/// between identical runs, together with `# wall_time_s`.
pub fn write_manifest(path: &Path, config: &ExperimentConfig, wall: Duration) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# ontolab {}", env!("CARGO_PKG_VERSION"))?;
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    writeln!(f, "# timestamp = {stamp}")?;
    writeln!(f, "# wall_time_s = {:.3}", wall.as_secs_f64())?;
    for (k, v) in config.to_entries() {
        writeln!(f, "{k} = {v}")?;
    }
    Ok(())
}
