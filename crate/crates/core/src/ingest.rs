//! Ingestion of an externally released dataset through a column mapping.
//!
//! The dataset directory holds `dataset.toml`, which names the CSV files
//! and the columns to read:
//!
//! ```toml
//! [[tones]]
//! domain = "llm"
//! file = "sp_llm.csv"
//! tone_column = "tone"
//! sentence_column = "sentence"   # optional
//! filter_column = "status"       # optional
//! filter_value = "accepted"
//!
//! [[ratings]]
//! domain = "human"
//! file = "ratings_human.csv"
//! tone_column = "tone"
//! sentence_column = "sentence"
//! value_column = "rating"
//! rater_column = "participant"   # optional
//!
//! [published]
//! intra = { human = "pub/intra_human.csv", llm = "pub/intra_llm.csv" }
//! cross = "pub/cross.csv"
//! benchmark = "pub/benchmark.csv"  # columns: method, metric, value
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{open, IoError, LabeledMatrix};
use crate::item::{Domain, Tone};
use crate::ratings::{aggregate_matrix, MissingPolicy, RatingError, RatingMatrix, RatingRecord};

/// Environment variable naming the dataset directory.
pub const DATASET_ENV: &str = "SWP_DATASET_DIR";
pub const MAPPING_FILE: &str = "dataset.toml";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {message}")]
    Mapping { path: PathBuf, message: String },
    #[error("{file}: line {line}: column {column:?}: {message}")]
    Cell {
        file: String,
        line: usize,
        column: String,
        message: String,
    },
    #[error("{file}: missing column {column:?}")]
    MissingColumn { file: String, column: String },
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{domain}: {source}")]
    Ratings {
        domain: Domain,
        #[source]
        source: RatingError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneSource {
    pub domain: Domain,
    pub file: PathBuf,
    pub tone_column: String,
    pub sentence_column: Option<String>,
    pub filter_column: Option<String>,
    pub filter_value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingSource {
    pub domain: Domain,
    pub file: PathBuf,
    pub tone_column: String,
    pub sentence_column: String,
    pub value_column: String,
    pub rater_column: Option<String>,
    #[serde(default)]
    pub missing: MissingPolicy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PublishedFiles {
    pub intra: BTreeMap<Domain, PathBuf>,
    pub cross: Option<PathBuf>,
    pub benchmark: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetMapping {
    pub tones: Vec<ToneSource>,
    pub ratings: Vec<RatingSource>,
    pub published: PublishedFiles,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DomainData {
    pub tones: Vec<Tone>,
    pub sentences: Vec<String>,
    pub ratings: Option<RatingMatrix>,
    /// Tone rows that failed tone validation and were left out.
    pub skipped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedValue {
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Published {
    pub intra: BTreeMap<Domain, LabeledMatrix>,
    pub cross: Option<LabeledMatrix>,
    pub benchmark: Vec<PublishedValue>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dir: PathBuf,
    pub domains: BTreeMap<Domain, DomainData>,
    pub published: Published,
}

/// The dataset directory from [`DATASET_ENV`], if it is set and holds a
/// mapping file.
pub fn dataset_dir_from_env() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os(DATASET_ENV)?);
    dir.join(MAPPING_FILE).is_file().then_some(dir)
}

struct Table {
    name: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn load(dir: &Path, file: &Path) -> Result<Self, IngestError> {
        let path = dir.join(file);
        let mut rdr = csv::Reader::from_reader(open(&path)?);
        let headers = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            name: path.display().to_string(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize, IngestError> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| IngestError::MissingColumn {
            file: self.name.clone(),
            column: name.to_string(),
        })
    }

    fn cell<'a>(&self, row: &'a csv::StringRecord, k: usize, col: usize) -> Result<&'a str, IngestError> {
        row.get(col).ok_or_else(|| IngestError::Cell {
            file: self.name.clone(),
            line: k + 2,
            column: self.headers[col].clone(),
            message: "missing cell".into(),
        })
    }
}

fn load_tones(dir: &Path, src: &ToneSource, data: &mut DomainData) -> Result<(), IngestError> {
    let t = Table::load(dir, &src.file)?;
    let tc = t.column(&src.tone_column)?;
    let sc = src.sentence_column.as_deref().map(|c| t.column(c)).transpose()?;
    let filter = match (&src.filter_column, &src.filter_value) {
        (Some(c), Some(v)) => Some((t.column(c)?, v.as_str())),
        _ => None,
    };
    for (k, row) in t.rows.iter().enumerate() {
        if let Some((fc, v)) = filter {
            if t.cell(row, k, fc)?.trim() != v {
                continue;
            }
        }
        if let Some(sc) = sc {
            let s = t.cell(row, k, sc)?.trim();
            if !s.is_empty() {
                data.sentences.push(s.to_string());
            }
        }
        match Tone::new(t.cell(row, k, tc)?) {
            Ok(tone) => data.tones.push(tone),
            Err(_) => data.skipped_rows += 1,
        }
    }
    Ok(())
}

fn first_seen<T: Clone + Ord>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut seen = std::collections::BTreeSet::new();
    items.filter(|x| seen.insert(x.clone())).collect()
}

fn load_ratings(dir: &Path, src: &RatingSource) -> Result<RatingMatrix, IngestError> {
    let t = Table::load(dir, &src.file)?;
    let (tc, sc, vc) = (t.column(&src.tone_column)?, t.column(&src.sentence_column)?, t.column(&src.value_column)?);
    let rc = src.rater_column.as_deref().map(|c| t.column(c)).transpose()?;
    let mut records = Vec::with_capacity(t.rows.len());
    for (k, row) in t.rows.iter().enumerate() {
        let bad = |col: usize, message: String| IngestError::Cell {
            file: t.name.clone(),
            line: k + 2,
            column: t.headers[col].clone(),
            message,
        };
        let tone = Tone::new(t.cell(row, k, tc)?).map_err(|e| bad(tc, e.to_string()))?;
        let raw = t.cell(row, k, vc)?.trim();
        let value: f64 = raw.parse().map_err(|_| bad(vc, format!("not a number: {raw:?}")))?;
        if !(1.0..=5.0).contains(&value) || value.fract() != 0.0 {
            return Err(bad(vc, format!("rating {raw} is not an integer in 1..=5")));
        }
        records.push(RatingRecord {
            tone,
            sentence: t.cell(row, k, sc)?.trim().to_string(),
            rater_id: match rc {
                Some(c) => t.cell(row, k, c)?.to_string(),
                None => format!("row-{}", k + 2),
            },
            value: value as u8,
            experiment: "fit".into(),
        });
    }
    let tones = first_seen(records.iter().map(|r| r.tone.clone()));
    let sentences = first_seen(records.iter().map(|r| r.sentence.clone()));
    aggregate_matrix(&records, &tones, &sentences, src.missing, src.domain).map_err(|source| IngestError::Ratings {
        domain: src.domain,
        source,
    })
}

fn load_published_benchmark(dir: &Path, file: &Path) -> Result<Vec<PublishedValue>, IngestError> {
    let t = Table::load(dir, file)?;
    let (mc, kc, vc) = (t.column("method")?, t.column("metric")?, t.column("value")?);
    t.rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let raw = t.cell(row, k, vc)?.trim();
            Ok(PublishedValue {
                method: t.cell(row, k, mc)?.trim().to_lowercase(),
                metric: t.cell(row, k, kc)?.trim().to_string(),
                value: raw.parse().map_err(|_| IngestError::Cell {
                    file: t.name.clone(),
                    line: k + 2,
                    column: "value".into(),
                    message: format!("not a number: {raw:?}"),
                })?,
            })
        })
        .collect()
}

pub fn load_mapping(dir: &Path) -> Result<DatasetMapping, IngestError> {
    let path = dir.join(MAPPING_FILE);
    let text = std::fs::read_to_string(&path).map_err(|source| IoError::Io {
        path: path.clone(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| IngestError::Mapping {
        path,
        message: e.to_string(),
    })
}

pub fn load_dataset(dir: &Path) -> Result<Dataset, IngestError> {
    let mapping = load_mapping(dir)?;
    let mut domains: BTreeMap<Domain, DomainData> = BTreeMap::new();
    for src in &mapping.tones {
        load_tones(dir, src, domains.entry(src.domain).or_default())?;
    }
    for src in &mapping.ratings {
        let rm = load_ratings(dir, src)?;
        domains.entry(src.domain).or_default().ratings = Some(rm);
    }
    let mut published = Published::default();
    for (d, file) in &mapping.published.intra {
        published.intra.insert(*d, LabeledMatrix::load(&dir.join(file))?);
    }
    if let Some(f) = &mapping.published.cross {
        published.cross = Some(LabeledMatrix::load(&dir.join(f))?);
    }
    if let Some(f) = &mapping.published.benchmark {
        published.benchmark = load_published_benchmark(dir, f)?;
    }
    Ok(Dataset {
        dir: dir.to_path_buf(),
        domains,
        published,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        let p = dir.join(name);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }

    fn fixture() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        write(
            d.path(),
            MAPPING_FILE,
            r#"
[[tones]]
domain = "llm"
file = "sp.csv"
tone_column = "Tone"
sentence_column = "Sentence"
filter_column = "status"
filter_value = "ok"

[[ratings]]
domain = "llm"
file = "fit.csv"
tone_column = "tone"
sentence_column = "sentence"
value_column = "rating"

[published]
intra = { llm = "pub/intra.csv" }
benchmark = "pub/bench.csv"
"#,
        );
        write(d.path(), "sp.csv", "Tone,Sentence,status\nCalm,We sat by the quiet lake.,ok\n2bad,x,ok\nsad,skip me,no\n");
        write(d.path(), "fit.csv", "tone,sentence,rating\ncalm,s1,4\ncalm,s2,2\nsad,s1,1\nsad,s2,5\ncalm,s1,2\n");
        write(d.path(), "pub/intra.csv", "tone,calm,sad\ncalm,1,-1\nsad,-1,1\n");
        write(d.path(), "pub/bench.csv", "method,metric,value\nBLI,knn_1,0.657\n");
        d
    }

    #[test]
    fn loads_mapped_columns() {
        let d = fixture();
        let ds = load_dataset(d.path()).unwrap();
        let llm = &ds.domains[&Domain::Llm];
        assert_eq!(llm.tones, vec![Tone::new("calm").unwrap()]);
        assert_eq!(llm.skipped_rows, 1);
        assert_eq!(llm.sentences, vec!["We sat by the quiet lake.", "x"]);
        let rm = llm.ratings.as_ref().unwrap();
        assert_eq!(rm.means[(0, 0)], 3.0);
        assert_eq!(rm.counts[(0, 0)], 2);
        assert_eq!(ds.published.benchmark[0].method, "bli");
        assert_eq!(ds.published.intra[&Domain::Llm].values[(0, 1)], -1.0);
    }

    #[test]
    fn diagnostics_name_file_line_and_column() {
        let d = fixture();
        write(d.path(), "fit.csv", "tone,sentence,rating\ncalm,s1,4\ncalm,s2,seven\n");
        let err = load_dataset(d.path()).unwrap_err().to_string();
        assert!(err.contains("fit.csv") && err.contains("line 3") && err.contains("rating"), "{err}");
        write(d.path(), "fit.csv", "tone,sentence,score\ncalm,s1,4\n");
        assert!(matches!(load_dataset(d.path()), Err(IngestError::MissingColumn { .. })));
        write(d.path(), MAPPING_FILE, "[[tones]]\nbogus = 1\n");
        assert!(matches!(load_dataset(d.path()), Err(IngestError::Mapping { .. })));
    }
}
