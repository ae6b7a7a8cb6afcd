//! Reader and writer for PAMAP2 `subjectNNN.dat` files.
//!
//! Each line holds 54 space-separated tokens: timestamp (s), activity id,
//! heart rate (bpm), then three 17-column IMU blocks (hand, chest, ankle):
//! temperature, ±16g accel xyz, ±6g accel xyz, gyro xyz, magnetometer xyz,
//! and four orientation columns. The literal token `NaN` marks a missing value.
//! Orientation columns are parsed for validity and dropped.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{is_known_activity, ImuReading, RawSample, SensorStream};
use crate::error::{Error, Result};

pub const COLUMN_COUNT: usize = 54;
const IMU_COLUMNS: usize = 17;
const IMU_OFFSET: usize = 3;
const ORIENTATION_COLUMNS: usize = 4;

/// `subject101.dat` for user 1, and so on.
pub fn subject_file_name(user_id: u8) -> String {
    format!("subject{}.dat", 100 + user_id as u32)
}

fn parse_value(token: &str, line: usize, column: usize) -> Result<f32> {
    if token == "NaN" {
        return Ok(f32::NAN);
    }
    match token.parse::<f32>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line,
            reason: format!("column {}: cannot parse {token:?}", column + 1),
        }),
    }
}

fn parse_line(text: &str, line: usize) -> Result<RawSample> {
    let tokens: Vec<&str> = text.split_ascii_whitespace().collect();
    if tokens.len() != COLUMN_COUNT {
        return Err(Error::Parse {
            line,
            reason: format!("expected {COLUMN_COUNT} columns, found {}", tokens.len()),
        });
    }

    let timestamp = match tokens[0].parse::<f64>() {
        Ok(t) if t.is_finite() => t,
        _ => {
            return Err(Error::Parse {
                line,
                reason: format!("bad timestamp {:?}", tokens[0]),
            })
        }
    };
    let activity_id = tokens[1]
        .parse::<u8>()
        .ok()
        .filter(|&a| is_known_activity(a))
        .ok_or_else(|| Error::Parse {
            line,
            reason: format!("bad activity id {:?}", tokens[1]),
        })?;
    let heart_rate = parse_value(tokens[2], line, 2)?;

    let mut imus = [ImuReading::MISSING; 3];
    for (device, imu) in imus.iter_mut().enumerate() {
        let base = IMU_OFFSET + device * IMU_COLUMNS;
        let mut values = [0f32; IMU_COLUMNS - ORIENTATION_COLUMNS];
        for (k, slot) in values.iter_mut().enumerate() {
            *slot = parse_value(tokens[base + k], line, base + k)?;
        }
        for k in IMU_COLUMNS - ORIENTATION_COLUMNS..IMU_COLUMNS {
            parse_value(tokens[base + k], line, base + k)?;
        }
        *imu = ImuReading {
            temperature: values[0],
            accel16: [values[1], values[2], values[3]],
            accel6: [values[4], values[5], values[6]],
            gyro: [values[7], values[8], values[9]],
            mag: [values[10], values[11], values[12]],
        };
    }

    Ok(RawSample {
        timestamp,
        activity_id,
        heart_rate,
        imus,
    })
}

/// Parses one subject file. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_subject_file<R: BufRead>(source: R, user_id: u8) -> Result<SensorStream> {
    let mut samples: Vec<RawSample> = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample = parse_line(&line, lineno)?;
        if let Some(prev) = samples.last() {
            if sample.timestamp <= prev.timestamp {
                return Err(Error::NonMonotoneTimestamp {
                    line: lineno,
                    timestamp: sample.timestamp,
                    previous: prev.timestamp,
                });
            }
        }
        samples.push(sample);
    }
    Ok(SensorStream::new(user_id, samples))
}

pub fn parse_subject_str(text: &str, user_id: u8) -> Result<SensorStream> {
    parse_subject_file(text.as_bytes(), user_id)
}

pub fn read_subject_file(path: &Path, user_id: u8) -> Result<SensorStream> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_subject_file(BufReader::new(file), user_id).map_err(|e| match e {
        Error::Io { .. } => e,
        other => Error::format(path, other),
    })
}

fn push_value(out: &mut String, v: f32) {
    use std::fmt::Write as _;
    if v.is_nan() {
        out.push_str("NaN");
    } else {
        let _ = write!(out, "{v}");
    }
}

/// Writes a stream in the 54-column layout. Orientation columns are emitted
/// as `NaN`.
pub fn write_subject_file<W: Write>(stream: &SensorStream, mut out: W) -> std::io::Result<()> {
    let mut line = String::with_capacity(512);
    for s in &stream.samples {
        line.clear();
        line.push_str(&format!("{} {} ", s.timestamp, s.activity_id));
        push_value(&mut line, s.heart_rate);
        for imu in &s.imus {
            for v in imu.fields() {
                line.push(' ');
                push_value(&mut line, v);
            }
            for _ in 0..ORIENTATION_COLUMNS {
                line.push_str(" NaN");
            }
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Raw (unfiltered) streams of a PAMAP2 directory.
#[derive(Debug, Default)]
pub struct LoadedDataset {
    pub streams: Vec<SensorStream>,
    /// Users whose subject file was not found.
    pub missing: Vec<u8>,
    /// Users whose subject file failed to parse.
    pub failed: Vec<(u8, Error)>,
}

/// Loads `subject101.dat` .. `subject109.dat` from `dir`, parsing files in
/// parallel. Absent or broken files are reported, not fatal.
pub fn load_pamap2_dir(dir: &Path) -> LoadedDataset {
    let results: Vec<(u8, PathBuf, Option<Result<SensorStream>>)> = (1..=9u8)
        .into_par_iter()
        .map(|user| {
            let path = dir.join(subject_file_name(user));
            if !path.is_file() {
                return (user, path, None);
            }
            let parsed = read_subject_file(&path, user);
            (user, path, Some(parsed))
        })
        .collect();

    let mut loaded = LoadedDataset::default();
    for (user, path, parsed) in results {
        match parsed {
            None => {
                log::warn!("{}: not found", path.display());
                loaded.missing.push(user);
            }
            Some(Ok(stream)) => loaded.streams.push(stream),
            Some(Err(e)) => loaded.failed.push((user, e)),
        }
    }
    loaded
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::testutil::constant_sample;

    fn line_with(activity: &str, heart_rate: &str) -> String {
        let mut tokens = vec!["8.38".to_string(), activity.to_string(), heart_rate.to_string()];
        for device in 0..3 {
            tokens.push("30.375".into());
            for k in 0..12 {
                tokens.push(format!("{}.5", device * 12 + k));
            }
            tokens.extend(["1", "0", "0", "0"].map(String::from));
        }
        tokens.join(" ")
    }

    #[test]
    fn maps_fields() {
        let stream = parse_subject_str(&line_with("1", "104"), 1).unwrap();
        let s = &stream.samples[0];
        assert_eq!(s.activity_id, 1);
        assert_eq!(s.timestamp, 8.38);
        assert_eq!(s.heart_rate(), Some(104.0));
        assert_eq!(s.imus[0].temperature, 30.375);
        assert_eq!(s.imus[0].accel16, [0.5, 1.5, 2.5]);
        assert_eq!(s.imus[0].accel6, [3.5, 4.5, 5.5]);
        assert_eq!(s.imus[1].gyro, [18.5, 19.5, 20.5]);
        assert_eq!(s.imus[2].mag, [33.5, 34.5, 35.5]);
        assert!((0..27).all(|i| s.signal(i).is_some()));
    }

    #[test]
    fn nan_heart_rate_is_missing() {
        let stream = parse_subject_str(&line_with("1", "NaN"), 1).unwrap();
        assert_eq!(stream.samples[0].heart_rate(), None);
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let text = format!("{}\n{} 7\n", line_with("1", "100"), line_with("1", "100"));
        match parse_subject_str(&text, 1) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_token_reports_line() {
        let text = line_with("1", "abc");
        assert!(matches!(
            parse_subject_str(&text, 1),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = line_with("1", "inf");
        assert!(matches!(parse_subject_str(&text, 1), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_activity_rejected() {
        assert!(parse_subject_str(&line_with("8", "1"), 1).is_err());
        assert!(parse_subject_str(&line_with("-1", "1"), 1).is_err());
    }

    #[test]
    fn non_monotone_timestamp_rejected() {
        let a = line_with("1", "100");
        let text = format!("{a}\n{a}\n");
        assert!(matches!(
            parse_subject_str(&text, 1),
            Err(Error::NonMonotoneTimestamp { line: 2, .. })
        ));
    }

    #[test]
    fn writer_emits_54_columns() {
        let mut s = constant_sample(0.01, 5, 1.25);
        s.heart_rate = f32::NAN;
        let stream = SensorStream::new(2, vec![s]);
        let mut buf = Vec::new();
        write_subject_file(&stream, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.split_ascii_whitespace().count(), COLUMN_COUNT);
        assert_eq!(parse_subject_str(&text, 2).unwrap(), stream);
    }

    #[test]
    fn subject_names() {
        assert_eq!(subject_file_name(1), "subject101.dat");
        assert_eq!(subject_file_name(9), "subject109.dat");
    }
}
