//! Dataset and report files: line-delimited JSON records with
//! line-numbered diagnostics, JSON reports, and flat CSV metrics.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::data::{PlantedMeta, Sample};
use super::run::{MetricsReport, PlantedReport};

fn classify_json_error(e: serde_json::Error, line: usize) -> Error {
    match e.classify() {
        serde_json::error::Category::Data => Error::Schema {
            line,
            msg: e.to_string(),
        },
        _ => Error::Parse {
            line,
            msg: e.to_string(),
        },
    }
}

/// Reads a line-delimited JSON dataset. Malformed lines abort with the
/// 1-based line number; an empty file yields an empty dataset with a
/// warning.
pub fn load_dataset(path: &Path) -> Result<Vec<Sample>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let sample: Sample =
            serde_json::from_str(line).map_err(|e| classify_json_error(e, lineno))?;
        sample.validate(lineno)?;
        out.push(sample);
    }
    if out.is_empty() {
        log::warn!("dataset {} contains no records", path.display());
    }
    Ok(out)
}

/// Writes one JSON record per line. Floats use shortest round-trip
/// encoding, so save → load reproduces every sample exactly.
pub fn save_dataset(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut text = String::new();
    for s in samples {
        text.push_str(&serde_json::to_string(s)?);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Sidecar path of the planted-filter ground truth:
/// `<data>.meta.json`.
pub fn meta_path(data_path: &Path) -> PathBuf {
    let mut os = data_path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

pub fn save_planted_meta(data_path: &Path, meta: &PlantedMeta) -> Result<()> {
    save_json(&meta_path(data_path), meta)
}

pub fn load_planted_meta(data_path: &Path) -> Result<PlantedMeta> {
    let p = meta_path(data_path);
    let text = std::fs::read_to_string(&p)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty JSON plus trailing newline.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn push_opt(row: &mut String, v: Option<f64>) {
    match v {
        Some(v) => {
            let _ = write!(row, ",{v}");
        }
        None => row.push(','),
    }
}

/// Flat per-fold, per-target metric rows.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("fold,seed,target,mae,mse,r2\n");
    for f in &report.folds {
        for j in 0..f.mae.len() {
            let mut row = format!("{},{},{},{},{}", f.fold, f.seed, j, f.mae[j], f.mse[j]);
            push_opt(&mut row, f.r2.as_ref().map(|r| r[j]));
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

/// Flat per-repeat rows of the planted-filter comparison.
pub fn planted_csv(report: &PlantedReport) -> String {
    let mut out = String::from("rep,seed,test_mse_tuple,test_mse_tied,improvement\n");
    for r in &report.runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.rep, r.seed, r.test_mse_tuple, r.test_mse_tied, r.improvement
        );
    }
    out
}

pub fn save_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::data::generate_synthetic_molecules;

    fn tmp(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("gtnn-io-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let samples = generate_synthetic_molecules(6, 3..=8, 99).unwrap();
        let path = tmp("roundtrip.ldjson");
        save_dataset(&path, &samples).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, samples);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let path = tmp("empty.ldjson");
        std::fs::write(&path, "").unwrap();
        assert!(load_dataset(&path).unwrap().is_empty());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn syntax_error_reports_line_number() {
        let path = tmp("syntax.ldjson");
        std::fs::write(
            &path,
            "{\"x\":[1.0],\"targets\":[0.5]}\n{not json}\n",
        )
        .unwrap();
        match load_dataset(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("expected parse error, got {e}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_targets_is_a_schema_error_naming_the_field() {
        let path = tmp("schema.ldjson");
        std::fs::write(&path, "{\"x\":[1.0,2.0]}\n").unwrap();
        match load_dataset(&path).unwrap_err() {
            Error::Schema { line, msg } => {
                assert_eq!(line, 1);
                assert!(msg.contains("targets"), "{msg}");
            }
            e => panic!("expected schema error, got {e}"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn non_finite_target_is_a_schema_error() {
        let path = tmp("nanfield.ldjson");
        std::fs::write(&path, "{\"x\":[1.0],\"targets\":[null]}\n").unwrap();
        // serde_json deserializes null into f64 as an error (Data).
        assert!(matches!(
            load_dataset(&path).unwrap_err(),
            Error::Schema { line: 1, .. }
        ));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn meta_sidecar_path() {
        assert_eq!(
            meta_path(Path::new("/tmp/planted.ldjson")),
            PathBuf::from("/tmp/planted.ldjson.meta.json")
        );
    }
}
