//! Feature files: UTF-8 CSV with a `label,f0,...,f{w-1}` header, one sample
//! per LF-terminated line, floats in 17-significant-digit scientific notation.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use qtl_core::data::Dataset;

#[derive(Debug, thiserror::Error)]
pub enum FeatureFileError {
    #[error("{}: no such file", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("empty feature file")]
    Empty,
    #[error("line 1: bad header: {0}")]
    Header(String),
    #[error("feature file has a header but no samples")]
    NoSamples,
    #[error("line {line}: malformed row: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: label {value:?} is not a non-negative integer")]
    Label { line: usize, value: String },
    #[error("line {line}, column {column}: {value:?} is not a number")]
    Value {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("line {line}: expected {expected} features, found {got}")]
    Ragged {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Dataset(#[from] qtl_core::Error),
}

/// Scientific notation with 17 significant digits: exact on round trip.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_csv(dataset: &Dataset) -> String {
    let w = dataset.width();
    let mut out = String::from("label");
    for j in 0..w {
        write!(out, ",f{j}").unwrap();
    }
    out.push('\n');
    for (row, label) in dataset.rows() {
        write!(out, "{label}").unwrap();
        for &v in row {
            out.push(',');
            out.push_str(&format_float(v));
        }
        out.push('\n');
    }
    out
}

fn parse_header(line: &str) -> Result<usize, FeatureFileError> {
    let mut cols = line.split(',');
    if cols.next() != Some("label") {
        return Err(FeatureFileError::Header(
            "first column must be `label`".into(),
        ));
    }
    let mut width = 0;
    for (j, name) in cols.enumerate() {
        if name != format!("f{j}") {
            return Err(FeatureFileError::Header(format!(
                "column {} is {name:?}, expected \"f{j}\"",
                j + 2
            )));
        }
        width += 1;
    }
    if width == 0 {
        return Err(FeatureFileError::Header("no feature columns".into()));
    }
    Ok(width)
}

pub fn from_csv(text: &str) -> Result<Dataset, FeatureFileError> {
    if text.is_empty() {
        return Err(FeatureFileError::Empty);
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n');
    let header = lines.next().unwrap_or_default();
    if header.contains('\r') {
        return Err(FeatureFileError::Header("CR line ending".into()));
    }
    let width = parse_header(header)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.contains('\r') {
            return Err(FeatureFileError::Malformed {
                line: line_no,
                reason: "CR line ending".into(),
            });
        }
        if line.is_empty() {
            return Err(FeatureFileError::Malformed {
                line: line_no,
                reason: "blank line".into(),
            });
        }
        let mut cols = line.split(',');
        let label_text = cols.next().unwrap_or_default();
        let label: usize = label_text.parse().map_err(|_| FeatureFileError::Label {
            line: line_no,
            value: label_text.to_owned(),
        })?;
        let values: Vec<&str> = cols.collect();
        if values.len() != width {
            return Err(FeatureFileError::Ragged {
                line: line_no,
                expected: width,
                got: values.len(),
            });
        }
        for (j, v) in values.into_iter().enumerate() {
            let x: f64 = v.parse().map_err(|_| FeatureFileError::Value {
                line: line_no,
                column: j + 2,
                value: v.to_owned(),
            })?;
            features.push(x);
        }
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(FeatureFileError::NoSamples);
    }
    let n_classes = labels.iter().max().map_or(2, |m| (m + 1).max(2));
    Ok(Dataset::new(width, features, labels, n_classes)?)
}

pub fn load_feature_file(path: &Path) -> Result<Dataset, FeatureFileError> {
    let text = fs::read_to_string(path).map_err(|source| {
        if source.kind() == io::ErrorKind::NotFound {
            FeatureFileError::Missing(path.to_owned())
        } else {
            FeatureFileError::Io {
                path: path.to_owned(),
                source,
            }
        }
    })?;
    from_csv(&text)
}

pub fn save_feature_file(dataset: &Dataset, path: &Path) -> Result<(), FeatureFileError> {
    fs::write(path, to_csv(dataset)).map_err(|source| FeatureFileError::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dataset {
        Dataset::new(2, vec![0.1, -2.5e-300, 1.0 / 3.0, 7.0], vec![1, 0], 2).unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = to_csv(&sample());
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("label,f0,f1"));
        assert_eq!(
            lines.next(),
            Some("1,1.0000000000000001e-1,-2.5000000000000000e-300")
        );
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn round_trip_is_exact() {
        let ds = sample();
        assert_eq!(from_csv(&to_csv(&ds)).unwrap(), ds);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(from_csv(""), Err(FeatureFileError::Empty)));
        assert!(matches!(
            from_csv("label,f0\n"),
            Err(FeatureFileError::NoSamples)
        ));
        assert!(matches!(
            from_csv("lab,f0\n0,1\n"),
            Err(FeatureFileError::Header(_))
        ));
        assert!(matches!(
            from_csv("label,f0,f1\n0,1,2\n1,3\n"),
            Err(FeatureFileError::Ragged {
                line: 3,
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            from_csv("label,f0\n0.5,1\n"),
            Err(FeatureFileError::Label { line: 2, .. })
        ));
        assert!(matches!(
            from_csv("label,f0\n0,abc\n"),
            Err(FeatureFileError::Value {
                line: 2,
                column: 2,
                ..
            })
        ));
        assert!(matches!(
            from_csv("label,f0\r\n0,1\r\n"),
            Err(FeatureFileError::Header(_))
        ));
        assert!(matches!(
            from_csv("label,f0\n0,1\n\n1,2\n"),
            Err(FeatureFileError::Malformed { line: 3, .. })
        ));
    }

    #[test]
    fn ragged_error_names_the_line() {
        let err = from_csv("label,f0,f1,f2\n0,1,2,3\n1,1,2\n").unwrap_err();
        assert_eq!(err.to_string(), "line 3: expected 3 features, found 2");
    }
}
