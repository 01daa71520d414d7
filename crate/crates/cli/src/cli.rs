//! Argument parsing and dispatch for the `swp` binary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use swp_core::alignment::Method;
use swp_core::Domain;

use crate::config::{Backend, Config};
use crate::error::CliError;
use crate::manifest::Stage;
use crate::stages::align::AlignArgs;
use crate::stages::analyze::AnalyzeArgs;
use crate::stages::elicit::ElicitArgs;
use crate::stages::judge::JudgeArgs;
use crate::stages::report::ReportArgs;
use crate::{server, stages};

#[derive(Debug, Parser)]
#[command(name = "swp", version, about = "Sampling-with-people chains, judgments and cross-domain analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Master seed; every stage seed is derived from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct JudgeCli {
    #[command(flatten)]
    pub common: Common,
    /// Trial logs to derive stimuli from (one or two domains).
    #[arg(long)]
    pub trials: Vec<PathBuf>,
    /// Existing stimuli.json, used instead of --trials.
    #[arg(long)]
    pub stimuli: Option<PathBuf>,
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long, value_enum)]
    pub backend: Option<Backend>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tone/sentence chains.
    Elicit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long = "iters")]
        iterations: Option<usize>,
        #[arg(long)]
        domain: Option<Domain>,
    },
    /// Collect quality-of-fit ratings for tone and sentence pairs.
    Rate(JudgeCli),
    /// Collect pairwise tone similarity judgments.
    Similarity(JudgeCli),
    /// Collect interpretable feature ratings per tone.
    Features(JudgeCli),
    /// Build the analysis report from stage outputs.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Stage output directory of one domain, as DOMAIN=DIR.
        #[arg(long = "input", value_parser = parse_input)]
        inputs: Vec<(Domain, PathBuf)>,
        /// benchmark.json from `align`.
        #[arg(long)]
        benchmark: Option<PathBuf>,
    },
    /// Benchmark unsupervised alignment between two embedding sets.
    Align {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Use a built-in rotated, permuted fixture instead of files.
        #[arg(long)]
        fixture: bool,
        #[arg(long, default_value_t = 40)]
        fixture_rows: usize,
        #[arg(long, default_value_t = 80)]
        fixture_cols: usize,
        /// Seeds per stochastic method.
        #[arg(long)]
        seeds: Option<usize>,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// Re-render a report, optionally attaching a benchmark.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        analysis: PathBuf,
        #[arg(long)]
        benchmark: Option<PathBuf>,
    },
    /// Serve chains and judgment endpoints to human participants.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Listen address; overrides the config.
        #[arg(long)]
        bind: Option<String>,
    },
}

fn parse_input(s: &str) -> Result<(Domain, PathBuf), String> {
    let (d, dir) = s.split_once('=').ok_or_else(|| format!("expected DOMAIN=DIR, got {s:?}"))?;
    Ok((d.parse()?, PathBuf::from(dir)))
}

fn load(common: &Common) -> Result<Config, CliError> {
    Ok(Config::load(common.config.as_deref())?.with_seed(common.seed))
}

fn serve(cfg: &Config, common: &Common, bind: Option<&str>) -> Result<(), CliError> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(format!("starting runtime: {e}")))?;
    rt.block_on(server::serve(cfg, &common.out, bind))
}

fn judge(stage: Stage, a: &JudgeCli) -> Result<PathBuf, CliError> {
    let cfg = load(&a.common)?;
    let args = JudgeArgs {
        trials: a.trials.clone(),
        stimuli: a.stimuli.clone(),
        domain: a.domain,
        backend: a.backend,
    };
    stages::judge::run(&cfg, stage, &args, &a.common.out, None)
}

pub fn execute(cli: Cli) -> Result<Option<PathBuf>, CliError> {
    match cli.command {
        Command::Elicit {
            common,
            backend,
            chains,
            iterations,
            domain,
        } => {
            let mut cfg = load(&common)?;
            ElicitArgs {
                backend,
                chains,
                iterations,
                domain,
            }
            .apply(&mut cfg);
            if cfg.backend == Backend::Human {
                serve(&cfg, &common, None)?;
                return Ok(None);
            }
            stages::elicit::run(&cfg, &common.out, None).map(Some)
        }
        Command::Rate(a) => judge(Stage::Rate, &a).map(Some),
        Command::Similarity(a) => judge(Stage::Similarity, &a).map(Some),
        Command::Features(a) => judge(Stage::Features, &a).map(Some),
        Command::Analyze {
            common,
            inputs,
            benchmark,
        } => {
            let cfg = load(&common)?;
            stages::analyze::run(&cfg, &AnalyzeArgs { inputs, benchmark }, &common.out).map(Some)
        }
        Command::Align {
            common,
            source,
            target,
            truth,
            fixture,
            fixture_rows,
            fixture_cols,
            seeds,
            methods,
        } => {
            let cfg = load(&common)?;
            let args = AlignArgs {
                source,
                target,
                truth,
                fixture: fixture.then_some((fixture_rows, fixture_cols)),
                seeds,
                methods,
            };
            stages::align::run(&cfg, &args, &common.out).map(Some)
        }
        Command::Report {
            common,
            analysis,
            benchmark,
        } => {
            let cfg = load(&common)?;
            stages::report::run(&cfg, &ReportArgs { analysis, benchmark }, &common.out).map(Some)
        }
        Command::Serve { common, bind } => {
            let mut cfg = load(&common)?;
            cfg.backend = Backend::Human;
            serve(&cfg, &common, bind.as_deref())?;
            Ok(None)
        }
    }
}

/// Runs the command and maps failures to exit codes 2 (config), 3 (input)
/// and 4 (runtime).
pub fn run(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(Some(p)) => {
            println!("{}", p.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swp: {e}");
            e.into_exit()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_pairs_parse() {
        assert_eq!(parse_input("human=out/h").unwrap(), (Domain::Human, PathBuf::from("out/h")));
        assert!(parse_input("nodomain").is_err());
        assert!(parse_input("martian=x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
