//! CSV emission and the run manifest written next to it.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{MetricsRecord, Mode};

pub const CSV_COLUMNS: [&str; 15] = [
    "g",
    "k",
    "epsilon",
    "n",
    "dist",
    "frames",
    "users_total",
    "users_decoded",
    "plr",
    "plr_ci_low",
    "plr_ci_high",
    "plr_bound",
    "p_eps",
    "throughput",
    "eta",
];

/// Formats `x` with 9 significant digits, `%.9g` style: plain notation for
/// decimal exponents in `-5..9`, scientific otherwise, trailing zeros dropped.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();

    let body = if (-5..9).contains(&exp) {
        let point = exp + 1;
        let mut s = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else {
            let point = point as usize;
            format!("{}.{}", &digits[..point], &digits[point..])
        };
        trim_fraction(&mut s);
        s
    } else {
        let mut m = format!("{}.{}", &digits[..1], &digits[1..]);
        trim_fraction(&mut m);
        format!("{m}e{exp}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(s: &mut String) {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
}

/// Writes the CSV to any sink.
pub fn write_csv<W: Write>(records: &[MetricsRecord], sink: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            format_sig9(r.load),
            r.k.to_string(),
            format_sig9(r.epsilon),
            r.n_slots.to_string(),
            r.dist.clone(),
            r.frames.to_string(),
            r.users_total.to_string(),
            r.users_decoded.to_string(),
            format_sig9(r.plr),
            format_sig9(r.plr_ci_low),
            format_sig9(r.plr_ci_high),
            format_sig9(r.plr_bound),
            format_sig9(r.p_eps),
            format_sig9(r.throughput),
            format_sig9(r.eta),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `records` to `path`.
pub fn emit_csv(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let file = File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

/// Parses a CSV produced by [`write_csv`]. Rows with zero frames are
/// analysis rows.
pub fn read_csv<R: Read>(source: R) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Validation(format!(
            "unexpected CSV header: {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let f = |i: usize| -> Result<f64> {
            row[i].parse().map_err(|_| {
                Error::Validation(format!(
                    "column {}: bad number {:?}",
                    CSV_COLUMNS[i], &row[i]
                ))
            })
        };
        let u = |i: usize| -> Result<u64> {
            row[i].parse().map_err(|_| {
                Error::Validation(format!(
                    "column {}: bad integer {:?}",
                    CSV_COLUMNS[i], &row[i]
                ))
            })
        };
        let frames = u(5)?;
        out.push(MetricsRecord {
            mode: if frames == 0 {
                Mode::Analyze
            } else {
                Mode::Simulate
            },
            load: f(0)?,
            k: u(1)? as usize,
            epsilon: f(2)?,
            n_slots: u(3)? as usize,
            dist: row[4].to_string(),
            frames,
            users_total: u(6)?,
            users_decoded: u(7)?,
            plr: f(8)?,
            plr_ci_low: f(9)?,
            plr_ci_high: f(10)?,
            plr_bound: f(11)?,
            p_eps: f(12)?,
            throughput: f(13)?,
            eta: f(14)?,
            plr_bootstrap_ci: None,
        });
    }
    Ok(out)
}

/// Provenance for one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordProvenance {
    pub g: f64,
    pub k: usize,
    pub mode: Mode,
    pub frames: u64,
    /// Frame-level bootstrap interval; the CSV interval is per-packet nominal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plr_bootstrap_ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub master_seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub records: Vec<RecordProvenance>,
}

impl RunManifest {
    pub fn new(config_hash: String, master_seed: Option<u64>, records: &[MetricsRecord]) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            master_seed,
            timestamp,
            records: records
                .iter()
                .map(|r| RecordProvenance {
                    g: r.load,
                    k: r.k,
                    mode: r.mode,
                    frames: r.frames,
                    plr_bootstrap_ci: r.plr_bootstrap_ci,
                })
                .collect(),
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

/// `<out>.manifest.json` for a CSV at `out`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(mode: Mode, g: f64, k: usize, frames: u64) -> MetricsRecord {
        MetricsRecord {
            mode,
            load: g,
            k,
            epsilon: 0.05,
            n_slots: 200,
            dist: "x^2".into(),
            frames,
            users_total: frames * 40,
            users_decoded: frames * 38,
            plr: 0.05,
            plr_ci_low: 0.049_123_456_789,
            plr_ci_high: 0.051,
            plr_bound: 0.278_285_15,
            p_eps: 0.240_300_123_456,
            throughput: g * 0.95,
            eta: g * 0.95,
            plr_bootstrap_ci: None,
        }
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(1.2), "1.2");
        assert_eq!(format_sig9(0.240_300_123_456), "0.240300123");
        assert_eq!(format_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(format_sig9(1e-7), "1e-7");
        assert_eq!(format_sig9(1.234_567_891_23e-5), "0.0000123456789");
        assert_eq!(format_sig9(-0.5), "-0.5");
        assert_eq!(format_sig9(123_456_789.4), "123456789");
        assert_eq!(format_sig9(1.5e9), "1.5e9");
    }

    #[test]
    fn one_record_is_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[record(Mode::Analyze, 0.5, 1, 0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[1],
            "0.5,1,0.05,200,x^2,0,0,0,0.05,0.0491234568,0.051,0.27828515,0.240300123,0.475,0.475"
        );
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(
            write_csv(&[], Vec::new()),
            Err(Error::EmptyRecords)
        ));
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_csv(&[], dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn file_round_trip() {
        let recs = vec![
            record(Mode::Simulate, 0.4, 1, 100),
            record(Mode::Analyze, 0.4, 1, 0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_csv(&recs, &path).unwrap();
        let back = read_csv(File::open(&path).unwrap()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].mode, Mode::Simulate);
        assert_eq!(back[1].mode, Mode::Analyze);
        assert_eq!(back[0].users_total, 4000);
        assert_eq!(format_sig9(back[0].p_eps), format_sig9(recs[0].p_eps));
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("/tmp/run.csv")),
            PathBuf::from("/tmp/run.csv.manifest.json")
        );
    }

    proptest! {
        #[test]
        fn reparse_is_stable_at_nine_digits(x in prop::num::f64::NORMAL) {
            let text = format_sig9(x);
            let back: f64 = text.parse().unwrap();
            prop_assert_eq!(format_sig9(back), text.clone());
            let rel = ((back - x) / x).abs();
            prop_assert!(rel <= 5e-9, "{} -> {} ({})", x, text, rel);
        }
    }
}
