//! Reader and writer for SVC tablet recordings, angle normalization and
//! stroke segmentation.
//!
//! An SVC file is ASCII text: an optional line holding the point count,
//! followed by one row per sample with seven integer columns
//! `x y timestamp pen_status azimuth altitude pressure`. Columns may be
//! separated by any run of spaces or tabs and lines may end in LF or CRLF.
//! Output always uses single spaces and LF.

use std::fmt;

use thiserror::Error;

use crate::model::TaskId;
use crate::scalar::Scalar;

pub const AZIMUTH_MAX: u16 = 4095;
pub const ALTITUDE_MAX: u16 = 1023;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvcError {
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: timestamp {found} does not increase past {previous}")]
    TimestampViolation {
        line: usize,
        previous: i64,
        found: i64,
    },
    #[error("line {line}: {field} = {value} out of range")]
    RangeViolation {
        line: usize,
        field: &'static str,
        value: i64,
    },
    #[error("header declares {declared} points, file has {actual}")]
    CountMismatch { declared: usize, actual: usize },
    #[error("line {line}: pen down with zero pressure")]
    PenDownZeroPressure { line: usize },
}

/// Recoverable anomalies reported in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SvcWarning {
    CountMismatch {
        declared: usize,
        actual: usize,
    },
    PenDownZeroPressure {
        line: usize,
    },
    /// In-air sample carrying nonzero pressure; the sample is kept.
    InAirPressure {
        line: usize,
        pressure: u32,
    },
    /// Sample with the same timestamp as its predecessor; the sample was dropped.
    DuplicateTimestampDropped {
        line: usize,
        timestamp: i64,
    },
    /// Header declared zero points and no rows followed.
    EmptyRecording,
}

impl fmt::Display for SvcWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SvcWarning::CountMismatch { declared, actual } => {
                write!(f, "header declares {declared} points, file has {actual}")
            }
            SvcWarning::PenDownZeroPressure { line } => {
                write!(f, "line {line}: pen down with zero pressure")
            }
            SvcWarning::InAirPressure { line, pressure } => {
                write!(f, "line {line}: in-air sample with pressure {pressure}")
            }
            SvcWarning::DuplicateTimestampDropped { line, timestamp } => {
                write!(
                    f,
                    "line {line}: duplicate timestamp {timestamp}, sample dropped"
                )
            }
            SvcWarning::EmptyRecording => f.write_str("recording has no samples"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PenStatus {
    InAir = 0,
    OnPaper = 1,
}

impl PenStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// One tablet sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplePoint {
    pub x: i64,
    pub y: i64,
    /// Milliseconds.
    pub timestamp: i64,
    pub pen_status: PenStatus,
    pub azimuth_raw: u16,
    pub altitude_raw: u16,
    pub pressure: u32,
}

/// All samples recorded for one task of one participant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRecording {
    pub task: TaskId,
    pub points: Vec<SamplePoint>,
    /// Point count from the file header, if there was one.
    pub declared_count: Option<usize>,
}

impl TaskRecording {
    pub fn new(task: TaskId, points: Vec<SamplePoint>) -> Self {
        TaskRecording {
            task,
            points,
            declared_count: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks the invariants `parse_svc` enforces in strict mode.
    pub fn validate(&self) -> Result<(), SvcError> {
        let mut prev: Option<i64> = None;
        for (i, p) in self.points.iter().enumerate() {
            let line = i + 1;
            if p.azimuth_raw > AZIMUTH_MAX {
                return Err(SvcError::RangeViolation {
                    line,
                    field: "azimuth",
                    value: p.azimuth_raw.into(),
                });
            }
            if p.altitude_raw > ALTITUDE_MAX {
                return Err(SvcError::RangeViolation {
                    line,
                    field: "altitude",
                    value: p.altitude_raw.into(),
                });
            }
            if p.pen_status == PenStatus::InAir && p.pressure != 0 {
                return Err(SvcError::RangeViolation {
                    line,
                    field: "pressure",
                    value: p.pressure.into(),
                });
            }
            if let Some(previous) = prev {
                if p.timestamp <= previous {
                    return Err(SvcError::TimestampViolation {
                        line,
                        previous,
                        found: p.timestamp,
                    });
                }
            }
            prev = Some(p.timestamp);
        }
        Ok(())
    }
}

/// A parsed recording and the warnings collected while reading it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSvc {
    pub recording: TaskRecording,
    pub warnings: Vec<SvcWarning>,
}

fn parse_row(line_no: usize, tokens: &[&str]) -> Result<SamplePoint, SvcError> {
    if tokens.len() != 7 {
        return Err(SvcError::MalformedRow {
            line: line_no,
            reason: format!("expected 7 columns, found {}", tokens.len()),
        });
    }
    let mut v = [0i64; 7];
    for (slot, tok) in v.iter_mut().zip(tokens) {
        *slot = tok.parse().map_err(|_| SvcError::MalformedRow {
            line: line_no,
            reason: format!("`{tok}` is not an integer"),
        })?;
    }
    let [x, y, timestamp, status, azimuth, altitude, pressure] = v;
    let range = |field, value| SvcError::RangeViolation {
        line: line_no,
        field,
        value,
    };
    let pen_status = match status {
        0 => PenStatus::InAir,
        1 => PenStatus::OnPaper,
        other => return Err(range("pen_status", other)),
    };
    if !(0..=i64::from(AZIMUTH_MAX)).contains(&azimuth) {
        return Err(range("azimuth", azimuth));
    }
    if !(0..=i64::from(ALTITUDE_MAX)).contains(&altitude) {
        return Err(range("altitude", altitude));
    }
    let pressure = u32::try_from(pressure).map_err(|_| range("pressure", pressure))?;
    Ok(SamplePoint {
        x,
        y,
        timestamp,
        pen_status,
        azimuth_raw: azimuth as u16,
        altitude_raw: altitude as u16,
        pressure,
    })
}

/// Parses SVC text.
///
/// In strict mode a count mismatch, a pen-down sample with zero pressure, an
/// in-air sample with pressure, a duplicate timestamp or a header of zero
/// points with no rows are errors; lenient mode downgrades them to warnings
/// (duplicates are dropped). A decreasing timestamp is an error in both modes.
pub fn parse_svc(input: &[u8], task: TaskId, mode: ParseMode) -> Result<ParsedSvc, SvcError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let line = input[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        SvcError::MalformedRow {
            line,
            reason: "input is not text".into(),
        }
    })?;
    let strict = mode == ParseMode::Strict;
    let mut warnings = Vec::new();
    let mut declared_count = None;
    let mut points: Vec<SamplePoint> = Vec::new();
    let mut rows_seen = 0usize;
    let mut first = true;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let tokens: Vec<&str> = raw.split_ascii_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if first {
            first = false;
            if tokens.len() == 1 {
                let count = tokens[0]
                    .parse::<usize>()
                    .map_err(|_| SvcError::MalformedRow {
                        line: line_no,
                        reason: format!("`{}` is not a point count", tokens[0]),
                    })?;
                declared_count = Some(count);
                continue;
            }
        }
        let point = parse_row(line_no, &tokens)?;
        rows_seen += 1;
        if point.pen_status == PenStatus::OnPaper && point.pressure == 0 {
            if strict {
                return Err(SvcError::PenDownZeroPressure { line: line_no });
            }
            warnings.push(SvcWarning::PenDownZeroPressure { line: line_no });
        }
        if point.pen_status == PenStatus::InAir && point.pressure != 0 {
            if strict {
                return Err(SvcError::RangeViolation {
                    line: line_no,
                    field: "pressure",
                    value: point.pressure.into(),
                });
            }
            warnings.push(SvcWarning::InAirPressure {
                line: line_no,
                pressure: point.pressure,
            });
        }
        if let Some(prev) = points.last() {
            if point.timestamp < prev.timestamp || (strict && point.timestamp == prev.timestamp) {
                return Err(SvcError::TimestampViolation {
                    line: line_no,
                    previous: prev.timestamp,
                    found: point.timestamp,
                });
            }
            if point.timestamp == prev.timestamp {
                warnings.push(SvcWarning::DuplicateTimestampDropped {
                    line: line_no,
                    timestamp: point.timestamp,
                });
                continue;
            }
        }
        points.push(point);
    }

    if first {
        return Err(SvcError::EmptyInput);
    }
    if rows_seen == 0 {
        if strict {
            return Err(SvcError::EmptyInput);
        }
        warnings.push(SvcWarning::EmptyRecording);
    }
    if let Some(declared) = declared_count {
        if declared != rows_seen {
            if strict {
                return Err(SvcError::CountMismatch {
                    declared,
                    actual: rows_seen,
                });
            }
            warnings.push(SvcWarning::CountMismatch {
                declared,
                actual: rows_seen,
            });
        }
    }
    Ok(ParsedSvc {
        recording: TaskRecording {
            task,
            points,
            declared_count,
        },
        warnings,
    })
}

/// Writes the count header and one space-separated row per sample, LF-terminated.
pub fn serialize_svc(recording: &TaskRecording) -> Vec<u8> {
    use std::fmt::Write;
    let mut s = String::with_capacity(16 + recording.points.len() * 40);
    let _ = writeln!(s, "{}", recording.points.len());
    for p in &recording.points {
        let _ = writeln!(
            s,
            "{} {} {} {} {} {} {}",
            p.x,
            p.y,
            p.timestamp,
            p.pen_status.code(),
            p.azimuth_raw,
            p.altitude_raw,
            p.pressure
        );
    }
    s.into_bytes()
}

/// Converts raw azimuth and altitude readings to degrees.
pub fn normalize_angles<T: Scalar>(
    azimuth_raw: i64,
    altitude_raw: i64,
) -> Result<(T, T), SvcError> {
    if !(0..=i64::from(AZIMUTH_MAX)).contains(&azimuth_raw) {
        return Err(SvcError::RangeViolation {
            line: 0,
            field: "azimuth",
            value: azimuth_raw,
        });
    }
    if !(0..=i64::from(ALTITUDE_MAX)).contains(&altitude_raw) {
        return Err(SvcError::RangeViolation {
            line: 0,
            field: "altitude",
            value: altitude_raw,
        });
    }
    let c = |v: i64| T::from_i64(v).expect("in-range angle fits any float");
    Ok((
        c(azimuth_raw) * c(360) / c(AZIMUTH_MAX.into()),
        c(altitude_raw) * c(90) / c(ALTITUDE_MAX.into()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrokeKind {
    OnPaper,
    InAir,
}

/// Maximal run of samples sharing a pen status; indices are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stroke {
    pub kind: StrokeKind,
    pub start_index: usize,
    pub end_index: usize,
}

impl Stroke {
    pub fn sample_count(&self) -> usize {
        self.end_index - self.start_index + 1
    }
}

pub fn segment_strokes(recording: &TaskRecording) -> Vec<Stroke> {
    let kind = |s: PenStatus| match s {
        PenStatus::OnPaper => StrokeKind::OnPaper,
        PenStatus::InAir => StrokeKind::InAir,
    };
    let mut strokes: Vec<Stroke> = Vec::new();
    for (i, p) in recording.points.iter().enumerate() {
        let k = kind(p.pen_status);
        match strokes.last_mut() {
            Some(last) if last.kind == k => last.end_index = i,
            _ => strokes.push(Stroke {
                kind: k,
                start_index: i,
                end_index: i,
            }),
        }
    }
    strokes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FIG3_ROWS: &str = "\
49076 34584 17606448 1 1870 560 45
49025 34608 17606456 1 1870 560 81
49009 34613 17606463 1 1870 560 157
48995 34614 17606478 1 1870 560 193
48993 34614 17606486 1 1870 560 219
48993 34614 17606493 1 1860 560 246
48993 34614 17606501 1 1860 550 284
50786 33795 17606756 1 1900 550 305
50727 33808 17606764 1 1900 540 130
50727 33808 17606771 0 1900 540 0
50640 33840 17606779 0 1900 540 0
50621 33860 17606786 0 1900 540 0
50619 33878 17606794 0 1900 540 0
51032 33781 17607320 0 1940 510 0
51032 33781 17607328 1 1940 510 84
51056 33773 17607336 1 1940 510 118
";

    fn pt(t: i64, status: PenStatus) -> SamplePoint {
        SamplePoint {
            x: 0,
            y: 0,
            timestamp: t,
            pen_status: status,
            azimuth_raw: 0,
            altitude_raw: 0,
            pressure: if status == PenStatus::OnPaper { 10 } else { 0 },
        }
    }

    fn strict(s: &str) -> Result<ParsedSvc, SvcError> {
        parse_svc(s.as_bytes(), TaskId::Pentagons, ParseMode::Strict)
    }

    #[test]
    fn parses_the_reference_row() {
        let r = strict("49076 34584 17606448 1 1870 560 45\n").unwrap();
        assert_eq!(
            r.recording.points,
            vec![SamplePoint {
                x: 49076,
                y: 34584,
                timestamp: 17606448,
                pen_status: PenStatus::OnPaper,
                azimuth_raw: 1870,
                altitude_raw: 560,
                pressure: 45,
            }]
        );
        assert_eq!(r.recording.declared_count, None);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn reference_extract_round_trips_byte_identically() {
        let text = format!("16\n{FIG3_ROWS}");
        let r = strict(&text).unwrap().recording;
        assert_eq!(r.len(), 16);
        assert_eq!(String::from_utf8(serialize_svc(&r)).unwrap(), text);
    }

    #[test]
    fn tabs_and_crlf_are_accepted() {
        let text = "2\r\n49076\t34584\t17606448\t1\t1870\t560\t45\t\r\n1  2   17606456 0 0 0 0\r\n";
        let r = strict(text).unwrap().recording;
        assert_eq!(r.len(), 2);
        assert_eq!(r.declared_count, Some(2));
        assert_eq!(r.points[1].x, 1);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(strict("").unwrap_err(), SvcError::EmptyInput);
        assert_eq!(strict("\n \n").unwrap_err(), SvcError::EmptyInput);
    }

    #[test]
    fn decreasing_timestamps_are_rejected() {
        let err = strict("0 0 10 1 0 0 5\n0 0 5 1 0 0 5\n").unwrap_err();
        assert_eq!(
            err,
            SvcError::TimestampViolation {
                line: 2,
                previous: 10,
                found: 5
            }
        );
        let lenient = parse_svc(
            b"0 0 10 1 0 0 5\n0 0 5 1 0 0 5\n",
            TaskId::House,
            ParseMode::Lenient,
        );
        assert!(matches!(lenient, Err(SvcError::TimestampViolation { .. })));
    }

    #[test]
    fn duplicate_timestamps_strict_error_lenient_drop() {
        let text = "0 0 10 1 0 0 5\n1 1 10 1 0 0 6\n2 2 20 1 0 0 7\n";
        assert!(matches!(
            strict(text),
            Err(SvcError::TimestampViolation { .. })
        ));
        let r = parse_svc(text.as_bytes(), TaskId::House, ParseMode::Lenient).unwrap();
        assert_eq!(r.recording.len(), 2);
        assert_eq!(r.recording.points[1].x, 2);
        assert_eq!(
            r.warnings,
            vec![SvcWarning::DuplicateTimestampDropped {
                line: 2,
                timestamp: 10
            }]
        );
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(
            strict("1 2 3 1 0 0\n"),
            Err(SvcError::MalformedRow { line: 1, .. })
        ));
        assert!(matches!(
            strict("1 2 3 1 0 0 x\n"),
            Err(SvcError::MalformedRow { line: 1, .. })
        ));
        // Non-integer leading line: there is no comment syntax.
        assert!(matches!(
            strict("y position\n1\n1 2 3 1 0 0 4\n"),
            Err(SvcError::MalformedRow { line: 1, .. })
        ));
        assert!(matches!(
            strict("1 2 3 1 0 0 4\n1\n"),
            Err(SvcError::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            parse_svc(&[0xff, 0xfe, b'\n'], TaskId::Clock, ParseMode::Lenient),
            Err(SvcError::MalformedRow { .. })
        ));
    }

    #[test]
    fn range_violations() {
        let field = |s: &str| match strict(s) {
            Err(SvcError::RangeViolation { field, .. }) => field,
            other => panic!("{other:?}"),
        };
        assert_eq!(field("0 0 1 2 0 0 0\n"), "pen_status");
        assert_eq!(field("0 0 1 1 4096 0 3\n"), "azimuth");
        assert_eq!(field("0 0 1 1 0 1024 3\n"), "altitude");
        assert_eq!(field("0 0 1 1 0 0 -3\n"), "pressure");
        assert_eq!(field("0 0 1 0 0 0 3\n"), "pressure");
        // Negative coordinates are accepted.
        assert!(strict("-5 -7 1 1 0 0 3\n").is_ok());
    }

    #[test]
    fn lenient_warnings() {
        let text = "3\n0 0 1 1 0 0 0\n0 0 2 0 0 0 4\n";
        assert!(matches!(
            strict(text),
            Err(SvcError::PenDownZeroPressure { line: 2 })
        ));
        let r = parse_svc(text.as_bytes(), TaskId::House, ParseMode::Lenient).unwrap();
        assert_eq!(r.recording.len(), 2);
        assert_eq!(r.recording.declared_count, Some(3));
        assert_eq!(
            r.warnings,
            vec![
                SvcWarning::PenDownZeroPressure { line: 2 },
                SvcWarning::InAirPressure {
                    line: 3,
                    pressure: 4
                },
                SvcWarning::CountMismatch {
                    declared: 3,
                    actual: 2
                },
            ]
        );
        assert_eq!(
            strict("3\n0 0 1 1 0 0 2\n").unwrap_err(),
            SvcError::CountMismatch {
                declared: 3,
                actual: 1
            }
        );
    }

    #[test]
    fn empty_recording_serializes_to_zero_header() {
        let r = TaskRecording::new(TaskId::Clock, vec![]);
        let bytes = serialize_svc(&r);
        assert_eq!(bytes, b"0\n");
        assert_eq!(
            parse_svc(&bytes, TaskId::Clock, ParseMode::Strict).unwrap_err(),
            SvcError::EmptyInput
        );
        let back = parse_svc(&bytes, TaskId::Clock, ParseMode::Lenient).unwrap();
        assert!(back.recording.is_empty());
        assert_eq!(back.warnings, vec![SvcWarning::EmptyRecording]);
    }

    #[test]
    fn one_point_is_two_lines() {
        let r = TaskRecording::new(TaskId::Clock, vec![pt(5, PenStatus::OnPaper)]);
        let text = String::from_utf8(serialize_svc(&r)).unwrap();
        assert_eq!(text, "1\n0 0 5 1 0 0 10\n");
    }

    #[test]
    fn angle_normalization() {
        let (az, alt) = normalize_angles::<f64>(1900, 540).unwrap();
        assert!(
            (az - 167.0).abs() < 0.05 && (az - 167.033).abs() < 1e-3,
            "{az}"
        );
        assert!(
            (alt - 47.5).abs() < 0.05 && (alt - 47.507).abs() < 1e-3,
            "{alt}"
        );
        assert_eq!(normalize_angles::<f64>(0, 0).unwrap(), (0.0, 0.0));
        assert_eq!(normalize_angles::<f32>(4095, 1023).unwrap(), (360.0, 90.0));
        assert!(normalize_angles::<f64>(4096, 0).is_err());
        assert!(normalize_angles::<f64>(0, -1).is_err());
    }

    #[test]
    fn stroke_segmentation_examples() {
        let rec = |statuses: &[u8]| {
            TaskRecording::new(
                TaskId::House,
                statuses
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        pt(
                            i as i64 * 10,
                            if s == 1 {
                                PenStatus::OnPaper
                            } else {
                                PenStatus::InAir
                            },
                        )
                    })
                    .collect(),
            )
        };
        let s = |kind, a, b| Stroke {
            kind,
            start_index: a,
            end_index: b,
        };
        assert_eq!(
            segment_strokes(&rec(&[1, 1, 1])),
            vec![s(StrokeKind::OnPaper, 0, 2)]
        );
        assert_eq!(
            segment_strokes(&rec(&[1, 1, 0, 1])),
            vec![
                s(StrokeKind::OnPaper, 0, 1),
                s(StrokeKind::InAir, 2, 2),
                s(StrokeKind::OnPaper, 3, 3)
            ]
        );
        assert_eq!(
            segment_strokes(&rec(&[0, 0])),
            vec![s(StrokeKind::InAir, 0, 1)]
        );
        assert!(segment_strokes(&rec(&[])).is_empty());
    }

    fn arb_recording() -> impl Strategy<Value = TaskRecording> {
        (
            0usize..7,
            -1_000_000i64..1_000_000_000,
            proptest::collection::vec(
                (
                    any::<i32>(),
                    any::<i32>(),
                    1i64..500,
                    any::<bool>(),
                    0u16..=4095,
                    0u16..=1023,
                    1u32..5000,
                ),
                0..40,
            ),
        )
            .prop_map(|(task, t0, rows)| {
                let mut t = t0;
                let points = rows
                    .into_iter()
                    .map(|(x, y, dt, down, az, alt, p)| {
                        t += dt;
                        SamplePoint {
                            x: x.into(),
                            y: y.into(),
                            timestamp: t,
                            pen_status: if down {
                                PenStatus::OnPaper
                            } else {
                                PenStatus::InAir
                            },
                            azimuth_raw: az,
                            altitude_raw: alt,
                            pressure: if down { p } else { 0 },
                        }
                    })
                    .collect();
                TaskRecording::new(TaskId::ALL[task], points)
            })
    }

    proptest! {
        #[test]
        fn round_trip(rec in arb_recording()) {
            let bytes = serialize_svc(&rec);
            let back = parse_svc(&bytes, rec.task, ParseMode::Lenient).unwrap().recording;
            prop_assert_eq!(&back.points, &rec.points);
            prop_assert_eq!(back.declared_count, Some(rec.len()));
            if !rec.is_empty() {
                let strict = parse_svc(&bytes, rec.task, ParseMode::Strict).unwrap();
                prop_assert!(strict.warnings.is_empty());
                prop_assert_eq!(serialize_svc(&strict.recording), bytes);
            }
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = parse_svc(&bytes, TaskId::Clock, ParseMode::Strict);
            let _ = parse_svc(&bytes, TaskId::Clock, ParseMode::Lenient);
        }

        #[test]
        fn stroke_cover(rec in arb_recording()) {
            let strokes = segment_strokes(&rec);
            prop_assert_eq!(strokes.iter().map(Stroke::sample_count).sum::<usize>(), rec.len());
            for w in strokes.windows(2) {
                prop_assert_ne!(w[0].kind, w[1].kind);
                prop_assert_eq!(w[0].end_index + 1, w[1].start_index);
            }
        }

        #[test]
        fn normalization_is_linear(a in 0i64..=2047, b in 0i64..=511) {
            let (az1, alt1) = normalize_angles::<f64>(a, b).unwrap();
            let (az2, alt2) = normalize_angles::<f64>(2 * a, 2 * b).unwrap();
            prop_assert!((az2 - 2.0 * az1).abs() < 1e-9);
            prop_assert!((alt2 - 2.0 * alt1).abs() < 1e-9);
        }
    }
}
