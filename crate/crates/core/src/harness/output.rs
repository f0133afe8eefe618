//! CSV output and the metadata sidecar.
//!
//! The CSV is comma-separated, LF-terminated UTF-8 with a mandatory header.
//! Floats use Rust's shortest round-trip formatting. Bound columns are left
//! empty for attackers without a bound (baselines, no attacker). The sidecar
//! `<csv>.meta.json` echoes the resolved config, the seed rule and wall time.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::runner::AggregateResult;
use super::HarnessError;

pub const CSV_HEADER: &str =
    "t,mean_regret,std_regret,mean_gain,mean_su_traffic,upper_bound,lower_bound";

/// Renders the CSV body.
pub fn to_csv(result: &AggregateResult) -> String {
    let mut out = String::with_capacity(64 * (result.checkpoints.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    let bound = |b: &Option<crate::metrics::BoundCurve>, i: usize| {
        b.as_ref()
            .map(|c| c.values[i].to_string())
            .unwrap_or_default()
    };
    for (i, t) in result.checkpoints.iter().enumerate() {
        // writing into a String cannot fail
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t,
            result.mean_regret[i],
            result.std_regret[i],
            result.mean_gain[i],
            result.mean_su_traffic[i],
            bound(&result.upper_bound, i),
            bound(&result.lower_bound, i),
        );
    }
    out
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `path` and its `.meta.json` sidecar, creating parent directories.
pub fn write_csv(result: &AggregateResult, path: &Path) -> Result<(), HarnessError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| HarnessError::Io { path: p, source }
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, to_csv(result)).map_err(io(path))?;
    let meta = serde_json::to_string_pretty(&result.metadata).expect("metadata serializes");
    let side = sidecar_path(path);
    fs::write(&side, meta + "\n").map_err(io(&side))?;
    Ok(())
}
