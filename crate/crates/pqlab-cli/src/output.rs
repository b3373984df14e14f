//! Report emission: run manifests and CSV tables.
//!
//! Every floating value is printed with 17 significant digits so outputs
//! round-trip exactly; files carry no timestamps or machine identifiers.
//! Identical resolved configurations therefore produce byte-identical files.

use std::path::{Path, PathBuf};

use crate::config::ConfigError;

/// 17 significant digits; parses back to the identical f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Not-applicable table entries are left empty rather than printed as NaN.
pub fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => fmt_f64(v),
        _ => String::new(),
    }
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, ConfigError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| ConfigError(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `manifest.txt`: the command plus every resolved parameter as
    /// `key = value` lines in sorted order. The file parses as a run
    /// configuration, so rerunning a manifest reproduces the run.
    pub fn write_manifest(
        &self,
        command: &str,
        params: &[(String, String)],
    ) -> Result<(), ConfigError> {
        let mut keys: Vec<&(String, String)> = params.iter().collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0));
        let mut text = String::from("# pqlab run manifest; rerunnable as a config file\n");
        text.push_str(&format!("command = {command}\n"));
        for (k, v) in keys {
            text.push_str(&format!("{k} = {v}\n"));
        }
        let path = self.path("manifest.txt");
        std::fs::write(&path, text)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
    }

    /// Writes an RFC-4180 CSV (LF line endings, UTF-8, quoting only where
    /// needed). Every row must match the header width.
    pub fn write_csv(
        &self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), ConfigError> {
        let path = self.path(name);
        let mut w = csv::WriterBuilder::new()
            .from_path(&path)
            .map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?;
        w.write_record(header)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for row in rows {
            assert_eq!(
                row.len(),
                header.len(),
                "row width {} does not match header width {} in {name}",
                row.len(),
                header.len()
            );
            w.write_record(row)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        }
        w.flush()
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }
}

/// Manifest fragment for a list value: explicit comma form.
pub fn list_value(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}
