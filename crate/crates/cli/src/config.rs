//! TOML configuration shared by all subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use swp_core::agents::llm::LlmParams;
use swp_core::agents::synthetic::SyntheticRater;
use swp_core::agents::PromptSet;
use swp_core::alignment::BenchmarkConfig;
use swp_core::engine::ExperimentConfig;
use swp_core::par::{hash_str, mix_seed, Execution};
use swp_core::ratings::{MissingPolicy, PlanOptions};
use swp_core::report::ReportConfig;
use swp_core::validation::{FilterConfig, Lexicons, Validator};

use crate::error::{CliError, Classify};
use crate::instructions::Instructions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Synthetic,
    Llm,
    Human,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Synthetic => "synthetic",
            Backend::Llm => "llm",
            Backend::Human => "human",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSettings {
    /// Size of the random joint used by the synthetic chain agent.
    pub tones: usize,
    pub sentences: usize,
    pub rater: SyntheticRater,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        Self {
            tones: 8,
            sentences: 12,
            rater: SyntheticRater::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimuliSettings {
    /// Tones taken from the top of each elicited histogram.
    pub taxonomy_k: usize,
    /// Sentences sampled from the accepted chain sentences.
    pub n_sentences: usize,
    pub missing: MissingPolicy,
}

impl Default for StimuliSettings {
    fn default() -> Self {
        Self {
            taxonomy_k: 24,
            n_sentences: 40,
            missing: MissingPolicy::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconPaths {
    pub adjectives: PathBuf,
    pub spelling: PathBuf,
    pub profanity: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub bind: String,
    /// Replaces the built-in instruction pages by kind.
    pub instructions: BTreeMap<String, Instructions>,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            instructions: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment_id: String,
    /// Master seed; every stage derives its RNG streams from it.
    pub seed: u64,
    pub backend: Backend,
    pub execution: Execution,
    pub experiment: ExperimentConfig,
    pub filters: FilterConfig,
    pub lexicons: Option<LexiconPaths>,
    pub prompts_dir: Option<PathBuf>,
    pub synthetic: SyntheticSettings,
    pub llm: LlmParams,
    pub stimuli: StimuliSettings,
    pub rating: PlanOptions,
    pub similarity: PlanOptions,
    pub features: PlanOptions,
    pub analysis: ReportConfig,
    pub benchmark: BenchmarkConfig,
    pub server: ServerSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            experiment_id: "swp".into(),
            seed: 0,
            backend: Backend::default(),
            execution: Execution::default(),
            experiment: ExperimentConfig::default(),
            filters: FilterConfig::default(),
            lexicons: None,
            prompts_dir: None,
            synthetic: SyntheticSettings::default(),
            llm: LlmParams::default(),
            stimuli: StimuliSettings::default(),
            rating: PlanOptions::default(),
            similarity: PlanOptions::default(),
            features: PlanOptions {
                repeats: 5,
                session_size: 12,
                ..PlanOptions::default()
            },
            analysis: ReportConfig::default(),
            benchmark: BenchmarkConfig::default(),
            server: ServerSettings::default(),
        }
    }
}

impl Config {
    /// Reads `path`, or returns the defaults when no path is given. Relative
    /// paths inside the file resolve against its directory.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).config(format!("cannot read {}", path.display()))?;
        let mut cfg: Config = toml::from_str(&text).config(path.display())?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(l) = &mut cfg.lexicons {
            rebase(&mut l.adjectives);
            rebase(&mut l.spelling);
            rebase(&mut l.profanity);
        }
        if let Some(p) = &mut cfg.prompts_dir {
            rebase(p);
        }
        Ok(cfg)
    }

    /// Sets the master seed and re-derives every stage seed from it.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.experiment.rng_seed = self.stage_seed("experiment");
        self.rating.seed = self.stage_seed("rating");
        self.similarity.seed = self.stage_seed("similarity");
        self.features.seed = self.stage_seed("features");
        self.synthetic.rater.seed = self.stage_seed("rater");
        self.analysis.seed = self.stage_seed("analysis");
        self.benchmark.base_seed = self.stage_seed("benchmark");
        self
    }

    pub fn stage_seed(&self, stage: &str) -> u64 {
        mix_seed(&[self.seed, hash_str(stage)])
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.experiment.validate()?;
        if self.stimuli.taxonomy_k == 0 || self.stimuli.n_sentences == 0 {
            return Err(CliError::Config("stimuli.taxonomy_k and stimuli.n_sentences must be positive".into()));
        }
        if !(self.llm.temperature >= 0.0) {
            return Err(CliError::Config(format!("llm.temperature must be >= 0, got {}", self.llm.temperature)));
        }
        Ok(())
    }

    pub fn validator(&self) -> Result<Validator, CliError> {
        let lex = match &self.lexicons {
            Some(p) => Lexicons::load(&p.adjectives, &p.spelling, &p.profanity).config("lexicons")?,
            None => Lexicons::builtin(),
        };
        let seeds: Vec<_> = self.experiment.seed_items.iter().filter_map(|i| i.as_tone().cloned()).collect();
        lex.check_seeds(&seeds).config("seed tones")?;
        Ok(Validator::new(lex).with_config(self.filters))
    }

    pub fn prompts(&self) -> Result<PromptSet, CliError> {
        match &self.prompts_dir {
            Some(dir) => PromptSet::load_dir(dir).config("prompts"),
            None => Ok(PromptSet::builtin()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn seed_derivation_is_stable() {
        let a = Config::default().with_seed(Some(5));
        let b = Config::default().with_seed(Some(5));
        let c = Config::default().with_seed(Some(6));
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_ne!(a.rating.seed, a.similarity.seed);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "experiment_id = \"x\"\nbogus = 1\n").unwrap();
        assert!(matches!(Config::load(Some(&p)), Err(CliError::Config(_))));
        std::fs::write(&p, "[experiment]\nn_chains = 3\n[lexicons]\nadjectives = \"a.txt\"\nspelling = \"s.txt\"\nprofanity = \"p.txt\"\n").unwrap();
        let cfg = Config::load(Some(&p)).unwrap();
        assert_eq!(cfg.experiment.n_chains, 3);
        assert_eq!(cfg.lexicons.unwrap().adjectives, dir.path().join("a.txt"));
    }
}
