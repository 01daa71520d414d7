//! File formats: labelled matrices as CSV and records as JSONL.
//!
//! Matrix CSVs have a header row of column ids and a first column of row
//! ids. Parse errors name the source, line and column of the first bad
//! cell.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::item::{Domain, Tone};
use crate::ratings::RatingMatrix;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{source_name}: line {line}, column {column:?}: {message}")]
    Cell {
        source_name: String,
        line: usize,
        column: String,
        message: String,
    },
    #[error("{source_name}: line {line}: {message}")]
    Line { source_name: String, line: usize, message: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

pub fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: DMatrix<f64>,
}

impl LabeledMatrix {
    pub fn new(corner: &str, row_labels: Vec<String>, col_labels: Vec<String>, values: DMatrix<f64>) -> Self {
        Self {
            corner: corner.to_string(),
            row_labels,
            col_labels,
            values,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), IoError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![self.corner.clone()];
        header.extend(self.col_labels.iter().cloned());
        out.write_record(&header)?;
        for (i, label) in self.row_labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(self.values.row(i).iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, source_name: &str) -> Result<Self, IoError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(r);
        let mut records = rdr.records();
        let cell = |line: usize, column: &str, message: String| IoError::Cell {
            source_name: source_name.to_string(),
            line,
            column: column.to_string(),
            message,
        };
        let header = match records.next() {
            Some(h) => h?,
            None => {
                return Err(IoError::Line {
                    source_name: source_name.into(),
                    line: 1,
                    message: "missing header row".into(),
                })
            }
        };
        if header.len() < 2 {
            return Err(cell(1, "", "header needs a corner cell and at least one column".into()));
        }
        let col_labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut row_labels = Vec::new();
        let mut data = Vec::new();
        for (k, rec) in records.enumerate() {
            let rec = rec?;
            let line = k + 2;
            if rec.len() != header.len() {
                return Err(IoError::Line {
                    source_name: source_name.into(),
                    line,
                    message: format!("expected {} cells, found {}", header.len(), rec.len()),
                });
            }
            let label = rec.get(0).unwrap_or_default();
            if label.trim().is_empty() {
                return Err(cell(line, &header[0], "empty row label".into()));
            }
            row_labels.push(label.to_string());
            for (j, raw) in rec.iter().enumerate().skip(1) {
                let v: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| cell(line, &col_labels[j - 1], format!("not a number: {raw:?}")))?;
                if !v.is_finite() {
                    return Err(cell(line, &col_labels[j - 1], format!("non-finite value {raw:?}")));
                }
                data.push(v);
            }
        }
        let values = DMatrix::from_row_slice(row_labels.len(), col_labels.len(), &data);
        Ok(Self {
            corner: header[0].to_string(),
            row_labels,
            col_labels,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        self.write_csv(create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::read_csv(open(path)?, &path.display().to_string())
    }

    /// Reorders rows and columns to the given label orders.
    pub fn reindex(&self, rows: &[String], cols: &[String]) -> Result<DMatrix<f64>, IoError> {
        let find = |labels: &[String], l: &String, what: &str| {
            labels.iter().position(|x| x == l).ok_or_else(|| IoError::Line {
                source_name: self.corner.clone(),
                line: 0,
                message: format!("{what} {l:?} not present"),
            })
        };
        let ri: Vec<usize> = rows.iter().map(|l| find(&self.row_labels, l, "row")).collect::<Result<_, _>>()?;
        let ci: Vec<usize> = cols.iter().map(|l| find(&self.col_labels, l, "column")).collect::<Result<_, _>>()?;
        Ok(DMatrix::from_fn(ri.len(), ci.len(), |i, j| self.values[(ri[i], ci[j])]))
    }
}

impl From<&RatingMatrix> for LabeledMatrix {
    fn from(rm: &RatingMatrix) -> Self {
        LabeledMatrix::new(
            "tone",
            rm.tones.iter().map(|t| t.to_string()).collect(),
            rm.sentences.clone(),
            rm.means.clone(),
        )
    }
}

/// Rating matrix from its CSV export. Counts are not stored, so every cell
/// is treated as observed once.
pub fn rating_matrix_from_csv(m: &LabeledMatrix, domain: Domain, source_name: &str) -> Result<RatingMatrix, IoError> {
    let tones = m
        .row_labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            Tone::new(l).map_err(|e| IoError::Cell {
                source_name: source_name.into(),
                line: i + 2,
                column: m.corner.clone(),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RatingMatrix {
        tones,
        sentences: m.col_labels.clone(),
        means: m.values.clone(),
        counts: DMatrix::from_element(m.values.nrows(), m.values.ncols(), 1),
        domain,
    })
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<(), IoError> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| IoError::Json(serde_json::Error::io(e)))?;
    }
    w.flush().map_err(|e| IoError::Json(serde_json::Error::io(e)))?;
    Ok(())
}

pub fn save_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    write_jsonl(create(path)?, items)
}

/// Reads one record per non-blank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(r: R, source_name: &str) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line.map_err(|e| IoError::Line {
            source_name: source_name.into(),
            line: k + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::Line {
            source_name: source_name.into(),
            line: k + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    read_jsonl(open(path)?, &path.display().to_string())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_reader(open(path)?)?)
}
