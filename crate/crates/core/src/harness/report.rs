//! Result rows, tail envelopes and CSV output.

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 10] = [
    "experiment_id",
    "x_index",
    "x_repr",
    "r_or_n",
    "k",
    "value_re",
    "value_im",
    "predicted_re",
    "predicted_im",
    "abs_error",
];

/// The spatial coordinate of a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Radius(f64),
    Level(usize),
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scale::Radius(r) => write!(f, "{r}"),
            Scale::Level(n) => write!(f, "{n}"),
        }
    }
}

impl Scale {
    /// Whether this scale is at least as fine as `other`.
    pub fn finer_or_equal(&self, other: &Scale) -> bool {
        match (self, other) {
            (Scale::Radius(a), Scale::Radius(b)) => a <= b,
            (Scale::Level(a), Scale::Level(b)) => a >= b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub x_index: usize,
    pub x_repr: String,
    pub scale: Option<Scale>,
    pub k: usize,
    pub value: Complex64,
    pub predicted: Complex64,
    pub abs_error: f64,
}

impl ReportRow {
    pub fn in_tail(&self, scale0: Option<Scale>, k0: usize) -> bool {
        let spatial = match (&self.scale, &scale0) {
            (Some(s), Some(s0)) => s.finer_or_equal(s0),
            (None, None) => true,
            (Some(_), None) => true,
            (None, Some(_)) => false,
        };
        spatial && self.k >= k0
    }
}

/// `sup |value - predicted|` over rows finer than `scale0` with `k >= k0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEnvelope {
    pub scale0: Option<Scale>,
    pub k0: usize,
    pub sup: f64,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpotCheck {
    pub checked: usize,
    pub mismatches: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceOutcome {
    pub envelope: TailEnvelope,
    pub max_envelope: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetadata {
    pub config_hash: String,
    pub version: String,
    pub wall_time_secs: f64,
    pub points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub experiment_id: String,
    pub rows: Vec<ReportRow>,
    pub envelopes: Vec<TailEnvelope>,
    /// `(tolerance, fraction of rows within it)`.
    pub pass_fractions: Vec<(f64, f64)>,
    pub acceptance: Option<AcceptanceOutcome>,
    pub spot_check: SpotCheck,
    pub metadata: RunMetadata,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.spot_check.mismatches == 0 && self.acceptance.as_ref().map_or(true, |a| a.passed)
    }

    pub fn envelope(&self, scale0: Option<Scale>, k0: usize) -> TailEnvelope {
        tail_envelope(&self.rows, scale0, k0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_rows(&self.experiment_id, &self.rows, out)
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Human-readable summary, including the run metadata kept out of the CSV.
    pub fn emit_summary(&self) -> String {
        let mut s = format!(
            "experiment {}: {} rows, config sha256 {}, version {}, {:.3}s\n",
            self.experiment_id,
            self.rows.len(),
            self.metadata.config_hash,
            self.metadata.version,
            self.metadata.wall_time_secs
        );
        for (tol, frac) in &self.pass_fractions {
            s.push_str(&format!("  within {tol}: {:.4}\n", frac));
        }
        s.push_str(&format!(
            "  spot checks: {} checked, {} mismatches\n",
            self.spot_check.checked, self.spot_check.mismatches
        ));
        if let Some(a) = &self.acceptance {
            let scale = a.envelope.scale0.map_or_else(|| "-".to_string(), |s| s.to_string());
            s.push_str(&format!(
                "  envelope(scale <= {scale}, k >= {}) = {:e} over {} rows, limit {:e}: {}\n",
                a.envelope.k0,
                a.envelope.sup,
                a.envelope.rows,
                a.max_envelope,
                if a.passed { "PASS" } else { "FAIL" }
            ));
        }
        s
    }
}

pub fn tail_envelope(rows: &[ReportRow], scale0: Option<Scale>, k0: usize) -> TailEnvelope {
    let mut sup = 0.0f64;
    let mut count = 0;
    for row in rows.iter().filter(|r| r.in_tail(scale0, k0)) {
        sup = sup.max(row.abs_error);
        count += 1;
    }
    TailEnvelope { scale0, k0, sup, rows: count }
}

pub fn write_rows<W: Write>(experiment_id: &str, rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            experiment_id.to_string(),
            row.x_index.to_string(),
            row.x_repr.clone(),
            row.scale.map_or_else(String::new, |s| s.to_string()),
            row.k.to_string(),
            row.value.re.to_string(),
            row.value.im.to_string(),
            row.predicted.re.to_string(),
            row.predicted.im.to_string(),
            row.abs_error.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scale: Option<Scale>, k: usize, err: f64) -> ReportRow {
        ReportRow {
            x_index: 0,
            x_repr: "0.5".into(),
            scale,
            k,
            value: Complex64::new(err, 0.0),
            predicted: Complex64::new(0.0, 0.0),
            abs_error: err,
        }
    }

    #[test]
    fn envelope_shrinks_with_tail() {
        let rows = vec![
            row(Some(Scale::Radius(0.1)), 10, 0.5),
            row(Some(Scale::Radius(0.01)), 10, 0.2),
            row(Some(Scale::Radius(0.01)), 100, 0.05),
        ];
        assert_eq!(tail_envelope(&rows, Some(Scale::Radius(0.1)), 10).sup, 0.5);
        assert_eq!(tail_envelope(&rows, Some(Scale::Radius(0.01)), 10).sup, 0.2);
        assert_eq!(tail_envelope(&rows, Some(Scale::Radius(0.01)), 100).sup, 0.05);
        let levels = vec![row(Some(Scale::Level(3)), 4, 0.3), row(Some(Scale::Level(5)), 4, 0.1)];
        assert_eq!(tail_envelope(&levels, Some(Scale::Level(4)), 1).sup, 0.1);
    }

    #[test]
    fn temporal_rows_have_empty_scale() {
        let mut buf = Vec::new();
        write_rows("t", &[row(None, 3, 0.25)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines[1], "t,0,0.5,,3,0.25,0,0,0,0.25");
    }
}
