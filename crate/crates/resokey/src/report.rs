//! Trial records and deterministic report emission.
//!
//! One `TrialReport` per simulated touch trial; study runners aggregate them
//! into per-cell summaries. Files are byte-identical across runs with the
//! same inputs: fixed column order, fixed float formatting, aggregation in
//! seed order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-trial record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub posture: String,
    pub wearing_location: u8,
    pub object: String,
    pub duration_s: f64,
    /// Raw 24-bit sequences as 0/1 strings.
    pub wearable_bits: String,
    pub device_bits: String,
    pub attacker_bits: Option<String>,
    /// 12-bit reconciled keys from the first attempt.
    pub wearable_key: String,
    pub device_key: String,
    /// Fraction of disagreeing raw bits (the no-reconciliation mismatch).
    pub raw_bmr: f64,
    /// Fraction of disagreeing key bits after reconciliation.
    pub key_bmr: f64,
    pub keys_matched: bool,
    pub paired: bool,
    pub fallback: bool,
    pub attempts: u32,
    pub elapsed_s: f64,
}

/// Per-cell aggregate row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub study: String,
    pub cell: String,
    pub trials: usize,
    pub raw_bmr: f64,
    pub key_bmr: f64,
    pub first_attempt_match_rate: f64,
    pub success_rate: f64,
    pub mean_attempts: f64,
    pub raw_bits_per_s: Option<f64>,
    pub key_bits_per_s: Option<f64>,
    pub attacker_bmr: Option<f64>,
    pub mi_attacker_wearable: Option<f64>,
    pub mi_attacker_device: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Write per-trial rows; the seed column lets any single trial be replayed
/// in isolation.
pub fn write_trials_csv(path: &Path, trials: &[TrialReport]) -> Result<()> {
    if trials.is_empty() {
        return Err(Error::EmptyReports(format!(
            "no trial rows for {}",
            path.display()
        )));
    }
    let mut out = String::new();
    out.push_str(
        "seed,posture,wearing_location,object,duration_s,raw_bmr,key_bmr,keys_matched,paired,\
         fallback,attempts,elapsed_s,wearable_bits,device_bits,attacker_bits,wearable_key,device_key\n",
    );
    for t in trials {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            t.seed,
            t.posture,
            t.wearing_location,
            t.object,
            fmt_f64(t.duration_s),
            fmt_f64(t.raw_bmr),
            fmt_f64(t.key_bmr),
            t.keys_matched,
            t.paired,
            t.fallback,
            t.attempts,
            fmt_f64(t.elapsed_s),
            t.wearable_bits,
            t.device_bits,
            t.attacker_bits.clone().unwrap_or_default(),
            t.wearable_key,
            t.device_key,
        ));
    }
    write_file(path, out.as_bytes())
}

pub fn write_cells_csv(path: &Path, cells: &[CellSummary]) -> Result<()> {
    if cells.is_empty() {
        return Err(Error::EmptyReports(format!(
            "no aggregate rows for {}",
            path.display()
        )));
    }
    let mut out = String::new();
    out.push_str(
        "study,cell,trials,raw_bmr,key_bmr,first_attempt_match_rate,success_rate,mean_attempts,\
         raw_bits_per_s,key_bits_per_s,attacker_bmr,mi_attacker_wearable,mi_attacker_device\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.study,
            c.cell,
            c.trials,
            fmt_f64(c.raw_bmr),
            fmt_f64(c.key_bmr),
            fmt_f64(c.first_attempt_match_rate),
            fmt_f64(c.success_rate),
            fmt_f64(c.mean_attempts),
            fmt_opt(c.raw_bits_per_s),
            fmt_opt(c.key_bits_per_s),
            fmt_opt(c.attacker_bmr),
            fmt_opt(c.mi_attacker_wearable),
            fmt_opt(c.mi_attacker_device),
        ));
    }
    write_file(path, out.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("json encoding failed: {e}")))?;
    write_file(path, body.as_bytes())
}

/// Emit trial and aggregate files under `out_dir` in the requested format.
/// Returns the written paths.
pub fn emit_report(
    trials: &[TrialReport],
    cells: &[CellSummary],
    format: ReportFormat,
    out_dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    if trials.is_empty() {
        return Err(Error::EmptyReports("no trials to emit".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let trial_path = out_dir.join(format!("{stem}_trials.csv"));
            write_trials_csv(&trial_path, trials)?;
            written.push(trial_path);
            if !cells.is_empty() {
                let cell_path = out_dir.join(format!("{stem}_cells.csv"));
                write_cells_csv(&cell_path, cells)?;
                written.push(cell_path);
            }
        }
        ReportFormat::Json => {
            let trial_path = out_dir.join(format!("{stem}_trials.json"));
            write_json(&trial_path, &trials)?;
            written.push(trial_path);
            if !cells.is_empty() {
                let cell_path = out_dir.join(format!("{stem}_cells.json"));
                write_json(&cell_path, &cells)?;
                written.push(cell_path);
            }
        }
    }
    Ok(written)
}

/// Write a spectrum or trace as a two-column CSV.
pub fn write_xy_csv(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for (x, y) in rows {
        out.push_str(&format!("{},{}\n", fmt_f64(*x), fmt_f64(*y)));
    }
    write_file(path, out.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    let mut file =
        fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trial(seed: u64) -> TrialReport {
        TrialReport {
            seed,
            posture: "palm".into(),
            wearing_location: 1,
            object: "cubic".into(),
            duration_s: 1.75,
            wearable_bits: "0".repeat(24),
            device_bits: "0".repeat(24),
            attacker_bits: None,
            wearable_key: "0".repeat(12),
            device_key: "0".repeat(12),
            raw_bmr: 0.0,
            key_bmr: 0.0,
            keys_matched: true,
            paired: true,
            fallback: false,
            attempts: 1,
            elapsed_s: 2.3,
        }
    }

    #[test]
    fn empty_reports_error_instead_of_empty_files() {
        let dir = std::env::temp_dir().join("resokey_report_test_empty");
        let err = write_trials_csv(&dir.join("x.csv"), &[]).unwrap_err();
        assert!(matches!(err, Error::EmptyReports(_)));
        let err = emit_report(&[], &[], ReportFormat::Csv, &dir, "x").unwrap_err();
        assert!(matches!(err, Error::EmptyReports(_)));
    }

    #[test]
    fn emission_is_byte_identical_across_runs() {
        let dir = std::env::temp_dir().join("resokey_report_test_bytes");
        let trials: Vec<TrialReport> = (0..5).map(sample_trial).collect();
        let paths = emit_report(&trials, &[], ReportFormat::Csv, &dir, "run1").unwrap();
        let first = fs::read(&paths[0]).unwrap();
        let paths2 = emit_report(&trials, &[], ReportFormat::Csv, &dir, "run2").unwrap();
        let second = fs::read(&paths2[0]).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn json_round_trips() {
        let dir = std::env::temp_dir().join("resokey_report_test_json");
        let trials: Vec<TrialReport> = (0..3).map(sample_trial).collect();
        let paths = emit_report(&trials, &[], ReportFormat::Json, &dir, "t").unwrap();
        let body = fs::read_to_string(&paths[0]).unwrap();
        let back: Vec<TrialReport> = serde_json::from_str(&body).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[1].seed, 1);
    }
}
