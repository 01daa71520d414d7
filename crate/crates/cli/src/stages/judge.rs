//! Quality-of-fit, similarity and feature judgment stages.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use swp_core::agents::llm::HttpTransport;
use swp_core::agents::synthetic::SyntheticRater;
use swp_core::agents::Rater;
use swp_core::analysis::{select_taxonomy, tone_histogram};
use swp_core::io::{load_json, save_json, save_jsonl};
use swp_core::par::Execution;
use swp_core::ratings::{
    collect_features, collect_ratings, collect_similarity, distinct_pairs, schedule_pairs, schedule_rating_plan,
    Feature, RatingError,
};
use swp_core::{Domain, Sentence};

use super::{ensure_dir, llm_agent, read_elicited, Stimuli, FEATURES_FILE, RATINGS_FILE, SIMILARITY_FILE, STIMULI_FILE};
use crate::config::{Backend, Config};
use crate::error::{CliError, Classify};
use crate::manifest::{RunManifest, Stage};

#[derive(Debug, Clone, Default)]
pub struct JudgeArgs {
    /// Trial logs the stimuli are derived from, one per domain.
    pub trials: Vec<PathBuf>,
    /// Previously written stimuli, which take precedence over `trials`.
    pub stimuli: Option<PathBuf>,
    pub domain: Option<Domain>,
    pub backend: Option<Backend>,
}

/// Taxonomy from the elicited histograms and a seeded sample of the
/// accepted sentences.
pub fn derive_stimuli(cfg: &Config, trials: &[PathBuf]) -> Result<Stimuli, CliError> {
    let logs = trials.iter().map(|p| read_elicited(p)).collect::<Result<Vec<_>, _>>()?;
    let k = cfg.stimuli.taxonomy_k;
    let tones = match logs.as_slice() {
        [] => return Err(CliError::Input("no trial logs given; pass --trials or --stimuli (elicit stage)".into())),
        [a] => tone_histogram(&a.tones).top(k),
        [a, b] => select_taxonomy(&tone_histogram(&a.tones), &tone_histogram(&b.tones), k),
        _ => return Err(CliError::Config("stimuli derive from at most two trial logs".into())),
    };
    if tones.len() < 2 {
        return Err(CliError::Input(format!("only {} distinct tones elicited; need at least 2", tones.len())));
    }
    let pool: BTreeSet<&String> = logs.iter().flat_map(|l| &l.sentences).collect();
    let mut sentences: Vec<String> = pool.into_iter().cloned().collect();
    if sentences.is_empty() {
        return Err(CliError::Input("no accepted sentences in the trial logs".into()));
    }
    if sentences.len() > cfg.stimuli.n_sentences {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.stage_seed("stimuli"));
        sentences.shuffle(&mut rng);
        sentences.truncate(cfg.stimuli.n_sentences);
        sentences.sort();
    }
    Ok(Stimuli { tones, sentences })
}

fn resolve_stimuli(cfg: &Config, args: &JudgeArgs, manifest: &mut RunManifest) -> Result<Stimuli, CliError> {
    match &args.stimuli {
        Some(p) => {
            manifest.inputs.push(p.clone());
            load_json(p).input(p.display())
        }
        None => {
            manifest.inputs.extend(args.trials.iter().cloned());
            derive_stimuli(cfg, &args.trials)
        }
    }
}

fn rater(cfg: &Config, domain: Domain, stage: Stage, out: &Path, transport: Option<Arc<dyn HttpTransport>>) -> Result<Box<dyn Rater>, CliError> {
    match cfg.backend {
        Backend::Synthetic => Ok(Box::new(SyntheticRater {
            domain: domain.to_string(),
            ..cfg.synthetic.rater.clone()
        })),
        Backend::Llm => Ok(Box::new(llm_agent(
            cfg,
            transport,
            &out.join(format!("llm-audit-{}.jsonl", stage.as_str())),
        )?)),
        Backend::Human => Err(CliError::Config("human judgments are collected through `swp serve`".into())),
    }
}

fn rating_error(e: RatingError) -> CliError {
    match e {
        RatingError::Agent(a) => a.into(),
        RatingError::ZeroRepeats | RatingError::ZeroSessionSize | RatingError::Infeasible { .. } => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Input(e.to_string()),
    }
}

/// Runs one judgment stage and returns the record file.
pub fn run(
    cfg: &Config,
    stage: Stage,
    args: &JudgeArgs,
    out: &Path,
    transport: Option<Arc<dyn HttpTransport>>,
) -> Result<PathBuf, CliError> {
    let mut cfg = cfg.clone();
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    cfg.validate()?;
    let domain = args.domain.unwrap_or(cfg.experiment.domain);
    let mut manifest = RunManifest::start(&cfg, stage);
    let stimuli = resolve_stimuli(&cfg, args, &mut manifest)?;
    ensure_dir(out)?;
    let rater = rater(&cfg, domain, stage, out, transport)?;
    let exec: Execution = cfg.execution;
    let prefix = format!("{domain}-rater");
    let tones = &stimuli.tones;
    let (file, count) = match stage {
        Stage::Rate => {
            let sentences = stimuli
                .sentences
                .iter()
                .map(|s| Sentence::new(s))
                .collect::<Result<Vec<_>, _>>()
                .input("stimulus sentence")?;
            let plan = schedule_rating_plan(tones, &sentences, &cfg.rating).map_err(rating_error)?;
            let recs = collect_ratings(rater.as_ref(), tones, &sentences, &plan, &prefix, exec).map_err(rating_error)?;
            let p = out.join(RATINGS_FILE);
            save_jsonl(&p, &recs).runtime(p.display())?;
            (p, recs.len())
        }
        Stage::Similarity => {
            let plan = schedule_pairs(distinct_pairs(tones.len()).len(), &cfg.similarity).map_err(rating_error)?;
            let recs = collect_similarity(rater.as_ref(), tones, &plan, &prefix, exec).map_err(rating_error)?;
            let p = out.join(SIMILARITY_FILE);
            save_jsonl(&p, &recs).runtime(p.display())?;
            (p, recs.len())
        }
        Stage::Features => {
            let plan = schedule_pairs(tones.len() * Feature::ALL.len(), &cfg.features).map_err(rating_error)?;
            let recs = collect_features(rater.as_ref(), tones, &plan, &prefix, exec).map_err(rating_error)?;
            let p = out.join(FEATURES_FILE);
            save_jsonl(&p, &recs).runtime(p.display())?;
            (p, recs.len())
        }
        other => return Err(CliError::Runtime(format!("{} is not a judgment stage", other.as_str()))),
    };
    let stimuli_path = out.join(STIMULI_FILE);
    save_json(&stimuli_path, &stimuli).runtime(stimuli_path.display())?;
    manifest.outputs = vec![file.clone(), stimuli_path];
    manifest.summary = serde_json::json!({
        "backend": cfg.backend.as_str(),
        "domain": domain,
        "tones": stimuli.tones.len(),
        "sentences": stimuli.sentences.len(),
        "records": count,
    });
    manifest.finish(out)?;
    Ok(file)
}
