use std::path::{Path, PathBuf};

use swp_core::alignment::BenchmarkReport;
use swp_core::io::{load_json, load_jsonl, LabeledMatrix};
use swp_core::ratings::{aggregate_features, aggregate_matrix, FeatureRecord, RatingRecord, SimilarityRecord};
use swp_core::report::{build_report, DomainInputs, ReportError};
use swp_core::Domain;

use super::{ensure_dir, read_elicited, Stimuli, FEATURES_FILE, RATINGS_FILE, SIMILARITY_FILE, STIMULI_FILE, TRIALS_FILE};
use crate::config::Config;
use crate::error::{CliError, Classify};
use crate::manifest::{RunManifest, Stage};

#[derive(Debug, Clone, Default)]
pub struct AnalyzeArgs {
    /// Stage output directory per domain.
    pub inputs: Vec<(Domain, PathBuf)>,
    /// Benchmark JSON written by `align`, embedded when given.
    pub benchmark: Option<PathBuf>,
}

/// Loads whatever stage outputs exist under `dir`; absent files leave the
/// corresponding inputs empty so the report can enumerate them.
pub fn load_domain(cfg: &Config, domain: Domain, dir: &Path, used: &mut Vec<PathBuf>) -> Result<DomainInputs, CliError> {
    let mut d = DomainInputs {
        domain: Some(domain),
        ..DomainInputs::default()
    };
    let trials = dir.join(TRIALS_FILE);
    if trials.exists() {
        let e = read_elicited(&trials)?;
        d.tones = e.tones;
        d.sentences = e.sentences;
        used.push(trials);
    }
    let stimuli_path = dir.join(STIMULI_FILE);
    let stimuli: Option<Stimuli> = if stimuli_path.exists() {
        used.push(stimuli_path.clone());
        Some(load_json(&stimuli_path).input(stimuli_path.display())?)
    } else {
        None
    };
    let ratings = dir.join(RATINGS_FILE);
    if let (Some(s), true) = (&stimuli, ratings.exists()) {
        let recs: Vec<RatingRecord> = load_jsonl(&ratings).input(ratings.display())?;
        let rm = aggregate_matrix(&recs, &s.tones, &s.sentences, cfg.stimuli.missing, domain).input(ratings.display())?;
        d.ratings = Some(rm);
        used.push(ratings);
    }
    let similarity = dir.join(SIMILARITY_FILE);
    if similarity.exists() {
        let recs: Vec<SimilarityRecord> = load_jsonl(&similarity).input(similarity.display())?;
        d.similarity = recs;
        used.push(similarity);
    }
    let features = dir.join(FEATURES_FILE);
    if let (Some(s), true) = (&stimuli, features.exists()) {
        let recs: Vec<FeatureRecord> = load_jsonl(&features).input(features.display())?;
        d.features = Some(aggregate_features(&recs, &s.tones).input(features.display())?);
        used.push(features);
    }
    Ok(d)
}

pub fn run(cfg: &Config, args: &AnalyzeArgs, out: &Path) -> Result<PathBuf, CliError> {
    let mut manifest = RunManifest::start(cfg, Stage::Analyze);
    let mut inputs = Vec::new();
    for (domain, dir) in &args.inputs {
        inputs.push(load_domain(cfg, *domain, dir, &mut manifest.inputs)?);
    }
    let benchmark: Option<BenchmarkReport> = match &args.benchmark {
        Some(p) => {
            manifest.inputs.push(p.clone());
            Some(load_json(p).input(p.display())?)
        }
        None => None,
    };
    let report = build_report(&inputs, &cfg.analysis, benchmark, cfg.execution).map_err(|e| match e {
        ReportError::MissingInputs(items) => CliError::Input(format!("missing inputs:\n  - {}", items.join("\n  - "))),
        ReportError::Analysis { .. } => CliError::Input(e.to_string()),
        ReportError::Io(_) => CliError::Runtime(e.to_string()),
    })?;
    ensure_dir(out)?;
    manifest.outputs = report.write_all(out).runtime("writing report")?;
    for d in &inputs {
        if let (Some(domain), Some(rm)) = (d.domain, &d.ratings) {
            let p = out.join(format!("embedding_{domain}.csv"));
            LabeledMatrix::from(rm).save(&p).runtime(p.display())?;
            manifest.outputs.push(p);
        }
    }
    manifest.summary = serde_json::json!({
        "domains": report.domains.iter().map(|d| serde_json::json!({
            "domain": d.domain,
            "annotations": d.n_annotations,
            "entropy_bits": d.entropy.estimate,
        })).collect::<Vec<_>>(),
        "taxonomy": report.taxonomy.len(),
    });
    manifest.finish(out)?;
    Ok(out.join("report.json"))
}
