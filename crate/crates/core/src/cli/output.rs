//! Deterministic CSV/JSON artifacts stamped with the toolkit version and a config digest.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use rayleigh_stokes::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOOLKIT: &str = env!("CARGO_PKG_NAME");

/// Overrides the directory of relative output paths.
pub const OUT_DIR_VAR: &str = "RAYLEIGH_STOKES_OUT_DIR";

/// The resolved configuration of a run and its SHA-256.
pub struct Provenance {
    config: Value,
    digest: String,
}

impl Provenance {
    pub fn new<T: Serialize>(config: &T) -> Self {
        let config = serde_json::to_value(config).expect("configs serialize");
        let canonical = serde_json::to_string(&config).expect("values serialize");
        let digest = Sha256::digest(canonical.as_bytes()).iter().fold(
            String::with_capacity(64),
            |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            },
        );
        Self { config, digest }
    }

    #[cfg(test)]
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| num(v)).collect());
    }

    /// `#`-prefixed provenance lines, then the header row and the data, LF-terminated.
    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {TOOLKIT} {VERSION}");
        let _ = writeln!(out, "# config_sha256: {}", prov.digest);
        let _ = writeln!(
            out,
            "# config: {}",
            serde_json::to_string(&prov.config).unwrap()
        );
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// A JSON document carrying the result fields next to the provenance fields.
pub fn json_document<T: Serialize>(prov: &Provenance, result: &T) -> String {
    let mut doc = Map::new();
    doc.insert("toolkit".into(), Value::from(TOOLKIT));
    doc.insert("version".into(), Value::from(VERSION));
    doc.insert("config_sha256".into(), Value::from(prov.digest.clone()));
    doc.insert("config".into(), prov.config.clone());
    match serde_json::to_value(result).expect("results serialize") {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).unwrap();
    s.push('\n');
    s
}

pub fn resolve_path(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p,
    }
}

/// Writes to the resolved path, or to standard output.
pub fn emit(text: &str, path: Option<&str>) -> Result<()> {
    match path {
        Some(p) => {
            let full = resolve_path(p);
            if let Some(parent) = full.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&full, text).map_err(|e| Error::Io(format!("{}: {e}", full.display())))
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Error::Io(format!("stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_width_numbers() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn digest_is_stable() {
        let a = Provenance::new(&serde_json::json!({"x": 1, "y": [1.5]}));
        let b = Provenance::new(&serde_json::json!({"y": [1.5], "x": 1}));
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn table_layout() {
        let prov = Provenance::new(&serde_json::json!({}));
        let mut t = Table::new(["t", "B"]);
        t.push_nums(&[0.0, 1.0]);
        let s = t.render(&prov);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# "));
        assert_eq!(lines[3], "t,B");
        assert_eq!(lines[4], "0.0000000000000000e0,1.0000000000000000e0");
        assert!(!s.contains('\r'));
    }
}
