//! The analysis report: one JSON document with every statistic and the
//! plot data behind it, plus CSV exports of the same tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::BenchmarkReport;
use crate::analysis::{
    biplot_arrows, bootstrap_ci, combined_matrix, corr_to_dissimilarity, cross_correlation, entropy_bits, intra_correlation, mds,
    nn_matching, same_tone_distances, select_taxonomy, split_half_histogram, split_half_matrix, split_half_similarity, tfidf,
    tone_histogram, top_terms, AnalysisError, ArrowFit, BootstrapResult, DissimilarityTransform, DomainDocument, FeatureArrow,
    MdsOptions, NnMatchGraph, NnSource, ToneDistance, DEFAULT_REPLICATES,
};
use crate::io::{IoError, LabeledMatrix};
use crate::item::{Domain, Tone};
use crate::par::{mix_seed, Execution};
use crate::ratings::{aggregate_similarity, FeatureRatingMatrix, RatingMatrix, SimilarityRecord};

pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

/// JSON schema of [`AnalysisReport`].
pub const REPORT_SCHEMA: &str = include_str!("../../../schemas/report.schema.json");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("missing or incomplete inputs: {}", .0.join("; "))]
    MissingInputs(Vec<String>),
    #[error("{section}: {source}")]
    Analysis {
        section: String,
        #[source]
        source: AnalysisError,
    },
    #[error(transparent)]
    Io(#[from] IoError),
}

fn at(section: impl Into<String>) -> impl FnOnce(AnalysisError) -> ReportError {
    let section = section.into();
    move |source| ReportError::Analysis { section, source }
}

/// Everything collected for one domain.
#[derive(Debug, Clone, Default)]
pub struct DomainInputs {
    pub domain: Option<Domain>,
    /// Accepted tone annotations from the chains.
    pub tones: Vec<Tone>,
    /// Accepted sentences from the chains.
    pub sentences: Vec<String>,
    pub ratings: Option<RatingMatrix>,
    pub similarity: Vec<SimilarityRecord>,
    pub features: Option<FeatureRatingMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub n_boot: usize,
    pub seed: u64,
    /// Tones taken from the top of each domain's histogram.
    pub taxonomy_k: usize,
    pub mds: MdsOptions,
    pub arrow_fit: ArrowFit,
    pub nn_source: NnSource,
    pub tfidf_top: usize,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            n_boot: DEFAULT_REPLICATES,
            seed: 0,
            taxonomy_k: 24,
            mds: MdsOptions::default(),
            arrow_fit: ArrowFit::default(),
            nn_source: NnSource::default(),
            tfidf_top: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major values.
    pub values: Vec<Vec<f64>>,
}

impl MatrixReport {
    pub fn new(rows: Vec<String>, cols: Vec<String>, m: &DMatrix<f64>) -> Self {
        let values = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        Self { rows, cols, values }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), self.cols.len(), |i, j| self.values[i][j])
    }

    fn labeled(&self, corner: &str) -> LabeledMatrix {
        LabeledMatrix::new(corner, self.rows.clone(), self.cols.clone(), self.to_matrix())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub tone: String,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainReport {
    pub domain: Domain,
    pub n_annotations: usize,
    pub histogram: Vec<HistogramEntry>,
    pub entropy: BootstrapResult,
    pub histogram_reliability: Option<BootstrapResult>,
    pub intra: Option<MatrixReport>,
    pub intra_reliability: Option<BootstrapResult>,
    pub similarity: Option<MatrixReport>,
    pub similarity_reliability: Option<BootstrapResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossReport {
    pub matrix: MatrixReport,
    pub reliability: BootstrapResult,
    /// Same-tone cross correlations, highest first.
    pub diagonal: Vec<ToneScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToneScore {
    pub tone: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsPoint {
    pub label: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdsReport {
    pub points: Vec<MdsPoint>,
    pub stress: f64,
    pub transform: DissimilarityTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScore {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainTerms {
    pub domain: String,
    pub terms: Vec<TermScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: String,
    pub config: ReportConfig,
    pub domains: Vec<DomainReport>,
    pub taxonomy: Vec<String>,
    pub cross: Option<CrossReport>,
    pub mds: Option<MdsReport>,
    pub arrows: Vec<FeatureArrow>,
    pub same_tone_distances: Vec<ToneDistance>,
    pub nn: Option<NnMatchGraph>,
    pub tfidf: Vec<DomainTerms>,
    pub benchmark: Option<BenchmarkReport>,
    /// Definitions of the derived quantities.
    pub metadata: BTreeMap<String, String>,
}

fn check_inputs(inputs: &[DomainInputs]) -> Result<Vec<Domain>, ReportError> {
    let mut missing = Vec::new();
    if inputs.is_empty() {
        missing.push("no domains supplied".to_string());
    }
    let mut domains = Vec::new();
    for (k, d) in inputs.iter().enumerate() {
        let Some(domain) = d.domain else {
            missing.push(format!("domain #{k}: domain tag"));
            continue;
        };
        if domains.contains(&domain) {
            missing.push(format!("{domain}: supplied twice"));
        }
        domains.push(domain);
        if d.tones.is_empty() {
            missing.push(format!("{domain}: tone annotations (elicit stage)"));
        }
        if d.ratings.is_none() {
            missing.push(format!("{domain}: quality-of-fit ratings (rate stage)"));
        }
    }
    if missing.is_empty() {
        Ok(domains)
    } else {
        Err(ReportError::MissingInputs(missing))
    }
}

fn labels_of(rm: &RatingMatrix) -> Vec<String> {
    rm.tones.iter().map(|t| t.to_string()).collect()
}

fn domain_report(d: &DomainInputs, domain: Domain, cfg: &ReportConfig, exec: Execution) -> Result<DomainReport, ReportError> {
    let key = domain as u64;
    let hist = tone_histogram(&d.tones);
    let name = |s: &str| format!("{domain}: {s}");
    let entropy = bootstrap_ci(
        &d.tones,
        |s: &[&Tone]| entropy_bits(&tone_histogram(s.iter().copied())).unwrap_or(f64::NAN),
        cfg.n_boot,
        mix_seed(&[cfg.seed, key, 1]),
        exec,
    )
    .map_err(at(name("entropy")))?;
    let histogram_reliability = split_half_histogram(&d.tones, cfg.n_boot, mix_seed(&[cfg.seed, key, 2]), exec).ok();
    let (intra, intra_reliability) = match &d.ratings {
        Some(rm) => {
            let c = intra_correlation(rm).map_err(at(name("intra correlation")))?;
            let rel = split_half_matrix(rm, None, cfg.n_boot, mix_seed(&[cfg.seed, key, 3]), exec).ok();
            (Some(MatrixReport::new(c.rows, c.cols, &c.values)), rel)
        }
        None => (None, None),
    };
    let (similarity, similarity_reliability) = if d.similarity.is_empty() {
        (None, None)
    } else {
        let tones: Vec<Tone> = match &d.ratings {
            Some(rm) => rm.tones.clone(),
            None => {
                let mut t: Vec<Tone> = d.similarity.iter().flat_map(|r| [r.tone_a.clone(), r.tone_b.clone()]).collect();
                t.sort();
                t.dedup();
                t
            }
        };
        let sm = aggregate_similarity(&d.similarity, &tones).map_err(|e| ReportError::MissingInputs(vec![name(&e.to_string())]))?;
        let l: Vec<String> = sm.tones.iter().map(|t| t.to_string()).collect();
        let rel = split_half_similarity(&d.similarity, cfg.n_boot, mix_seed(&[cfg.seed, key, 4]), exec).ok();
        (Some(MatrixReport::new(l.clone(), l, &sm.values)), rel)
    };
    Ok(DomainReport {
        domain,
        n_annotations: hist.total,
        histogram: hist
            .ranked()
            .into_iter()
            .map(|(t, c)| HistogramEntry {
                frequency: c as f64 / hist.total as f64,
                tone: t.to_string(),
                count: c,
            })
            .collect(),
        entropy,
        histogram_reliability,
        intra,
        intra_reliability,
        similarity,
        similarity_reliability,
    })
}

/// Builds the report. Cross-domain sections need exactly two domains with
/// rating matrices over the same sentences.
pub fn build_report(
    inputs: &[DomainInputs],
    cfg: &ReportConfig,
    benchmark: Option<BenchmarkReport>,
    exec: Execution,
) -> Result<AnalysisReport, ReportError> {
    let domains = check_inputs(inputs)?;
    let reports = inputs
        .iter()
        .zip(&domains)
        .map(|(d, &dom)| domain_report(d, dom, cfg, exec))
        .collect::<Result<Vec<_>, _>>()?;
    let mut report = AnalysisReport {
        schema_version: REPORT_SCHEMA_VERSION.to_string(),
        config: cfg.clone(),
        domains: reports,
        taxonomy: Vec::new(),
        cross: None,
        mds: None,
        arrows: Vec::new(),
        same_tone_distances: Vec::new(),
        nn: None,
        tfidf: Vec::new(),
        benchmark,
        metadata: BTreeMap::new(),
    };
    report.metadata.insert("ci_method".into(), "percentile, 95%".into());
    report.metadata.insert("dissimilarity".into(), "1 - pearson r".into());
    report.metadata.insert(
        "entropy".into(),
        "Shannon entropy in bits of the tone frequency distribution".into(),
    );
    report.metadata.insert("arrow_fit".into(), format!("{:?}", cfg.arrow_fit));
    report.metadata.insert("nn_source".into(), format!("{:?}", cfg.nn_source));

    let docs: Vec<DomainDocument> = inputs
        .iter()
        .zip(&domains)
        .map(|(d, dom)| DomainDocument {
            domain: dom.to_string(),
            sentences: d.sentences.clone(),
        })
        .collect();
    report.tfidf = tfidf(&docs)
        .into_iter()
        .map(|(domain, scores)| DomainTerms {
            domain,
            terms: top_terms(&scores, cfg.tfidf_top)
                .into_iter()
                .map(|(term, score)| TermScore { term, score })
                .collect(),
        })
        .collect();

    if let [a, b] = inputs {
        let (ha, hb) = (tone_histogram(&a.tones), tone_histogram(&b.tones));
        report.taxonomy = select_taxonomy(&ha, &hb, cfg.taxonomy_k).iter().map(|t| t.to_string()).collect();
        let (ra, rb) = (a.ratings.as_ref().expect("checked"), b.ratings.as_ref().expect("checked"));
        let (da, db) = (domains[0], domains[1]);
        if ra.sentences == rb.sentences && labels_of(ra) == labels_of(rb) {
            let cross = cross_correlation(ra, rb).map_err(at("cross correlation"))?;
            let reliability =
                split_half_matrix(ra, Some(rb), cfg.n_boot, mix_seed(&[cfg.seed, 10]), exec).map_err(at("cross reliability"))?;
            let mut diagonal: Vec<ToneScore> = ra
                .tones
                .iter()
                .enumerate()
                .map(|(i, t)| ToneScore {
                    tone: t.to_string(),
                    value: cross.values[(i, i)],
                })
                .collect();
            diagonal.sort_by(|x, y| y.value.total_cmp(&x.value).then_with(|| x.tone.cmp(&y.tone)));
            report.cross = Some(CrossReport {
                matrix: MatrixReport::new(cross.rows.clone(), cross.cols.clone(), &cross.values),
                reliability,
                diagonal,
            });
            let combined = combined_matrix(ra, rb).map_err(at("combined matrix"))?;
            let delta = corr_to_dissimilarity(&combined.values).map_err(at("dissimilarity"))?;
            let sol = mds(&delta, &combined.rows, &cfg.mds, DissimilarityTransform::OneMinusR).map_err(at("mds"))?;
            for (d, dom) in [(a, da), (b, db)] {
                if let Some(f) = &d.features {
                    report
                        .arrows
                        .extend(biplot_arrows(&sol, f, dom, cfg.arrow_fit).map_err(at(format!("{dom}: arrows")))?);
                }
            }
            report.same_tone_distances = same_tone_distances(&sol, da, db).map_err(at("same-tone distances"))?;
            report.nn = Some(
                nn_matching(ra, rb, cfg.n_boot, mix_seed(&[cfg.seed, 11]), exec, cfg.nn_source).map_err(at("nearest neighbours"))?,
            );
            report.mds = Some(MdsReport {
                points: sol
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| MdsPoint {
                        label: l.clone(),
                        coords: sol.points.row(i).iter().copied().collect(),
                    })
                    .collect(),
                stress: sol.stress,
                transform: sol.transform,
            });
        } else {
            report
                .metadata
                .insert("cross_domain".into(), "skipped: rating matrices differ in tones or sentences".into());
        }
    }
    Ok(report)
}

impl AnalysisReport {
    /// Writes the JSON document and one CSV per table into `dir`, returning
    /// the paths written.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
        let mut written = Vec::new();
        let json = dir.join("report.json");
        crate::io::save_json(&json, self)?;
        written.push(json);
        let mut csv = |name: String, m: LabeledMatrix| -> Result<(), IoError> {
            let p = dir.join(name);
            m.save(&p)?;
            written.push(p);
            Ok(())
        };
        for d in &self.domains {
            let counts = DMatrix::from_fn(d.histogram.len(), 2, |i, j| {
                if j == 0 {
                    d.histogram[i].count as f64
                } else {
                    d.histogram[i].frequency
                }
            });
            csv(
                format!("histogram_{}.csv", d.domain),
                LabeledMatrix::new(
                    "tone",
                    d.histogram.iter().map(|h| h.tone.clone()).collect(),
                    vec!["count".into(), "frequency".into()],
                    counts,
                ),
            )?;
            if let Some(m) = &d.intra {
                csv(format!("intra_{}.csv", d.domain), m.labeled("tone"))?;
            }
            if let Some(m) = &d.similarity {
                csv(format!("similarity_{}.csv", d.domain), m.labeled("tone"))?;
            }
        }
        if let Some(c) = &self.cross {
            csv("cross.csv".into(), c.matrix.labeled("tone"))?;
        }
        if let Some(m) = &self.mds {
            let dim = m.points.first().map_or(0, |p| p.coords.len());
            csv(
                "mds_points.csv".into(),
                LabeledMatrix::new(
                    "label",
                    m.points.iter().map(|p| p.label.clone()).collect(),
                    (0..dim).map(|a| format!("dim{}", a + 1)).collect(),
                    DMatrix::from_fn(m.points.len(), dim, |i, a| m.points[i].coords[a]),
                ),
            )?;
        }
        if !self.arrows.is_empty() {
            let dim = self.arrows[0].direction.len();
            let mut cols: Vec<String> = (0..dim).map(|a| format!("dim{}", a + 1)).collect();
            cols.push("explained_variance".into());
            csv(
                "arrows.csv".into(),
                LabeledMatrix::new(
                    "feature@domain",
                    self.arrows.iter().map(|a| format!("{}@{}", a.feature, a.domain)).collect(),
                    cols,
                    DMatrix::from_fn(self.arrows.len(), dim + 1, |i, j| {
                        if j < dim {
                            self.arrows[i].direction[j]
                        } else {
                            self.arrows[i].explained_variance
                        }
                    }),
                ),
            )?;
        }
        if !self.same_tone_distances.is_empty() {
            let d = &self.same_tone_distances;
            csv(
                "same_tone_distances.csv".into(),
                LabeledMatrix::new(
                    "tone",
                    d.iter().map(|t| t.tone.clone()).collect(),
                    vec!["distance".into()],
                    DMatrix::from_fn(d.len(), 1, |i, _| d[i].distance),
                ),
            )?;
        }
        if let Some(nn) = &self.nn {
            let edges: Vec<_> = nn.forward.iter().chain(&nn.backward).collect();
            let p = dir.join("nn_graph.csv");
            let mut w = ::csv::Writer::from_writer(crate::io::create(&p)?);
            w.write_record(["from", "to", "frequency"])?;
            for e in edges {
                w.write_record([e.from.as_str(), e.to.as_str(), &e.frequency.to_string()])?;
            }
            w.flush().map_err(::csv::Error::from)?;
            written.push(p);
        }
        if !self.tfidf.is_empty() {
            let p = dir.join("tfidf.csv");
            let mut w = ::csv::Writer::from_writer(crate::io::create(&p)?);
            w.write_record(["domain", "term", "score"])?;
            for d in &self.tfidf {
                for t in &d.terms {
                    w.write_record([d.domain.as_str(), t.term.as_str(), &t.score.to_string()])?;
                }
            }
            w.flush().map_err(::csv::Error::from)?;
            written.push(p);
        }
        if let Some(b) = &self.benchmark {
            let p = dir.join("benchmark.csv");
            b.write_csv(crate::io::create(&p)?)?;
            written.push(p);
        }
        Ok(written)
    }
}
