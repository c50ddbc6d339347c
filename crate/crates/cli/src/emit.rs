use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::run::{Condition, RunReport};

pub const RECORDS_CSV: &str = "records.csv";
pub const KCURVE_CSV: &str = "kcurve.csv";
pub const CALIBRATION_CSV: &str = "calibration.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("serialization: {0}")]
    Serialize(String),
}

/// `x` in plain decimal notation with exactly nine significant digits.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if x == 0.0 {
        format!("0.{}", &digits[1..])
    } else if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let point = exp as usize + 1;
        format!("{}.{}", &digits[..point], &digits[point..])
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if x.is_sign_negative() && x != 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, EmitError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let ser = |e: csv::Error| EmitError::Serialize(e.to_string());
    w.write_record(header).map_err(ser)?;
    for row in rows {
        w.write_record(&row).map_err(ser)?;
    }
    w.into_inner().map_err(|e| EmitError::Serialize(e.to_string()))
}

pub fn records_csv(report: &RunReport) -> Result<Vec<u8>, EmitError> {
    let rows = [Condition::Baseline, Condition::Tta].into_iter().flat_map(|c| {
        report.records(c).iter().map(move |r| {
            vec![
                c.as_str().to_string(),
                r.fact.subject.clone(),
                r.fact.relation_id.clone(),
                r.final_text.clone(),
                format_sig9(r.confidence),
                r.correct.to_string(),
                r.k.to_string(),
                r.strategy.to_string(),
            ]
        })
    });
    csv_bytes(&["condition", "subject", "relation_id", "final_text", "confidence", "correct", "k", "strategy"], rows)
}

pub fn kcurve_csv(report: &RunReport) -> Result<Vec<u8>, EmitError> {
    let rows = report.kcurve.points.iter().map(|p| vec![p.k.to_string(), format_sig9(p.mean), format_sig9(p.stderr)]);
    csv_bytes(&["k", "mean", "stderr"], rows)
}

pub fn calibration_csv(report: &RunReport) -> Result<Vec<u8>, EmitError> {
    let tables = [(Condition::Baseline, &report.calibration.baseline), (Condition::Tta, &report.calibration.tta)];
    let rows = tables.into_iter().flat_map(|(c, bins)| {
        bins.iter().map(move |b| {
            vec![
                c.as_str().to_string(),
                b.index.to_string(),
                format_sig9(b.lower),
                format_sig9(b.upper),
                b.n.to_string(),
                b.accuracy.map_or_else(|| "NA".to_string(), format_sig9),
            ]
        })
    });
    csv_bytes(&["condition", "bin", "lower", "upper", "n", "accuracy"], rows)
}

pub fn report_json(report: &RunReport) -> Result<Vec<u8>, EmitError> {
    let mut bytes = serde_json::to_vec_pretty(report).map_err(|e| EmitError::Serialize(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn io_err(path: &Path, e: std::io::Error) -> EmitError {
    EmitError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Writes the requested artifacts into `dir`.
///
/// Files are staged under temporary names and renamed once all of them are
/// written; on failure, nothing staged is left behind.
pub fn emit_report(report: &RunReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, EmitError> {
    let mut outputs: Vec<(&str, Vec<u8>)> = Vec::new();
    if formats.contains(&Format::Csv) {
        outputs.push((RECORDS_CSV, records_csv(report)?));
        outputs.push((KCURVE_CSV, kcurve_csv(report)?));
        outputs.push((CALIBRATION_CSV, calibration_csv(report)?));
    }
    if formats.contains(&Format::Json) {
        outputs.push((REPORT_JSON, report_json(report)?));
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;

    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for (name, bytes) in &outputs {
        let tmp = dir.join(format!(".{name}.tmp"));
        let written = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        });
        staged.push((tmp.clone(), dir.join(name)));
        if let Err(e) = written {
            cleanup(&staged);
            return Err(io_err(&tmp, e));
        }
    }
    for (i, (tmp, target)) in staged.iter().enumerate() {
        if let Err(e) = fs::rename(tmp, target) {
            cleanup(&staged[i..]);
            for (_, done) in &staged[..i] {
                let _ = fs::remove_file(done);
            }
            return Err(io_err(target, e));
        }
    }
    Ok(staged.into_iter().map(|(_, target)| target).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(0.75), "0.750000000");
        assert_eq!(format_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(format_sig9(12.5), "12.5000000");
        assert_eq!(format_sig9(0.000123456789123), "0.000123456789");
        assert_eq!(format_sig9(123456789012.0), "123456789000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(-0.5), "-0.500000000");
        assert_eq!(format_sig9(0.30000000000000004), "0.300000000");
    }

    proptest::proptest! {
        #[test]
        fn sig9_matches_scientific_rounding(x in 1e-12f64..1e12) {
            let plain: f64 = format_sig9(x).parse().unwrap();
            let sci: f64 = format!("{x:.8e}").parse().unwrap();
            proptest::prop_assert_eq!(plain, sci);
        }
    }
}
