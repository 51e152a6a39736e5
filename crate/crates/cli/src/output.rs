//! Report and series files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nqmlab_core::{ComplexField, ResidualReport};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const SERIES_HEADER: &str = "t,x,re,im";
pub const DIVERGENCE_HEADER: &str = "t,divergence";
pub const BETA_HEADER: &str = "beta,beta_hat,abs_error";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub timestamp: String,
    pub config: RunConfig,
    pub checks: Vec<ResidualReport>,
    pub overall_pass: bool,
}

impl SuiteReport {
    pub fn new(config: RunConfig, checks: Vec<ResidualReport>) -> Self {
        let overall_pass = checks.iter().all(|c| c.pass);
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            checks,
            overall_pass,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Writes `contents` next to `path` under a temporary name, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,x,re,im` rows, snapshot-major.
pub fn series_csv(times: &[f64], snapshots: &[ComplexField]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for (t, snap) in times.iter().zip(snapshots) {
        for (x, v) in snap.grid().points().iter().zip(snap.values()) {
            let _ = writeln!(out, "{},{},{},{}", num(*t), num(*x), num(v.re), num(v.im));
        }
    }
    out
}

pub fn divergence_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from(DIVERGENCE_HEADER);
    out.push('\n');
    for (t, d) in rows {
        let _ = writeln!(out, "{},{}", num(*t), num(*d));
    }
    out
}

pub fn beta_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from(BETA_HEADER);
    out.push('\n');
    for (beta, beta_hat) in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            num(*beta),
            num(*beta_hat),
            num((beta - beta_hat).abs())
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nqmlab_core::{Complex64, Grid1D};

    #[test]
    fn series_rows_have_seventeen_significant_digits() {
        let g = Grid1D::new(0.0, 1.0, 8, true).unwrap();
        let f = ComplexField::constant(g, Complex64::new(1.0 / 3.0, -2.0)).unwrap();
        let csv = series_csv(&[0.0, 0.5], &[f.clone(), f]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x,re,im");
        assert_eq!(lines.len(), 1 + 16);
        let re = lines[1].split(',').nth(2).unwrap();
        assert_eq!(re, "3.3333333333333331e-1");
        assert_eq!(re.parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = std::env::temp_dir().join(format!("nqmlab-atomic-{}", std::process::id()));
        let path = dir.join("a.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn overall_pass_requires_every_check() {
        let meta = nqmlab_core::GridMeta {
            n: 8,
            x_min: 0.0,
            x_max: 1.0,
            periodic: true,
        };
        let ok = ResidualReport::new("a", meta, 0.0, 0.0, 1.0);
        let bad = ResidualReport::new("b", meta, 2.0, 0.0, 1.0);
        assert!(SuiteReport::new(RunConfig::default(), vec![ok.clone()]).overall_pass);
        assert!(!SuiteReport::new(RunConfig::default(), vec![ok, bad]).overall_pass);
        assert!(SuiteReport::new(RunConfig::default(), vec![]).overall_pass);
    }
}
