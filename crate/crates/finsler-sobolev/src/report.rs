//! CSV tables with reproducibility metadata and atomic writes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered rows of (parameter, values) with a metadata preamble. Serialized
/// as CSV: leading `# key=value` comment lines, a header row, `,` separator,
/// `.` decimal, LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push_labeled_row(&mut self, label: &str, values: &[f64]) {
        let mut row = vec![label.to_string()];
        row.extend(values.iter().map(|v| fmt_f64(*v)));
        self.rows.push(row);
    }

    /// Numeric view of column `idx` (skips non-numeric cells).
    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.get(idx).and_then(|c| c.parse().ok()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Temp-then-rename so an interrupted run never leaves a truncated file.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("csv.tmp");
        fs::write(&tmp, self.to_csv())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Deterministic shortest round-trip formatting.
pub fn fmt_f64(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

pub fn ensure_monotone_params(params: &[f64], increasing: bool) -> Result<()> {
    let ok = params.windows(2).all(|w| {
        if increasing {
            w[0] < w[1]
        } else {
            w[0] > w[1]
        }
    });
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "parameters must be strictly {}: {params:?}",
            if increasing { "increasing" } else { "decreasing" }
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let mut t = Table::new(&["j", "value"]);
        t.meta("metric", "euclidean");
        t.push_row(&[1.0, 0.5]);
        t.push_row(&[2.0, 0.25]);
        let csv = t.to_csv();
        assert_eq!(
            csv,
            "# metric=euclidean\nj,value\n1.0,0.5\n2.0,0.25\n"
        );
    }

    #[test]
    fn atomic_write_round_trip() {
        let dir = std::env::temp_dir().join("fsob-report-test");
        let path = dir.join("out.csv");
        let mut t = Table::new(&["a"]);
        t.push_row(&[1.5]);
        t.write_atomic(&path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a\n1.5\n");
        fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn monotone_check() {
        assert!(ensure_monotone_params(&[0.5, 0.25, 0.125], false).is_ok());
        assert!(ensure_monotone_params(&[0.5, 0.5], false).is_err());
    }
}
