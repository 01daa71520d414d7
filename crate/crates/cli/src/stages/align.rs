use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use swp_core::alignment::{row_cross_correlation, run_benchmark, synthetic_fixture, AlignmentError, Method};
use swp_core::io::{save_json, LabeledMatrix};

use super::ensure_dir;
use crate::config::Config;
use crate::error::{CliError, Classify};
use crate::manifest::{RunManifest, Stage};

#[derive(Debug, Clone, Default)]
pub struct AlignArgs {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    /// Ground-truth cross similarity, rows = source labels, columns =
    /// target labels. Defaults to the row cross-correlation of the inputs.
    pub truth: Option<PathBuf>,
    /// Use the built-in rotated and permuted fixture of this many rows and
    /// columns instead of input files.
    pub fixture: Option<(usize, usize)>,
    pub seeds: Option<usize>,
    pub methods: Option<Vec<Method>>,
}

struct Inputs {
    x: LabeledMatrix,
    y: LabeledMatrix,
    truth: DMatrix<f64>,
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    let w = n.to_string().len();
    (0..n).map(|i| format!("{prefix}{i:0w$}")).collect()
}

fn fixture(cfg: &Config, m: usize, n: usize, out: &Path, manifest: &mut RunManifest) -> Result<Inputs, CliError> {
    if m < 3 || n < 1 {
        return Err(CliError::Config(format!("fixture needs at least 3 rows and 1 column, got {m}x{n}")));
    }
    let f = synthetic_fixture(m, n, cfg.stage_seed("fixture"));
    let rows = labels("item", m);
    let cols = labels("dim", n);
    let x = LabeledMatrix::new("label", rows.clone(), cols.clone(), f.x);
    let y = LabeledMatrix::new("label", rows.clone(), cols, f.y);
    let truth = LabeledMatrix::new("label", rows.clone(), rows, f.truth.clone());
    for (name, m) in [("fixture_source.csv", &x), ("fixture_target.csv", &y), ("fixture_truth.csv", &truth)] {
        let p = out.join(name);
        m.save(&p).runtime(p.display())?;
        manifest.outputs.push(p);
    }
    Ok(Inputs { x, y, truth: f.truth })
}

fn from_files(args: &AlignArgs, manifest: &mut RunManifest) -> Result<Inputs, CliError> {
    let (Some(sp), Some(tp)) = (&args.source, &args.target) else {
        return Err(CliError::Input("align needs --source and --target embeddings (rate stage) or --fixture".into()));
    };
    let x = LabeledMatrix::load(sp).input("source embeddings")?;
    let y = LabeledMatrix::load(tp).input("target embeddings")?;
    manifest.inputs.extend([sp.clone(), tp.clone()]);
    let truth = match &args.truth {
        Some(p) => {
            manifest.inputs.push(p.clone());
            LabeledMatrix::load(p)
                .input("ground truth")?
                .reindex(&x.row_labels, &y.row_labels)
                .input(format!("ground truth {}", p.display()))?
        }
        None => {
            if x.col_labels != y.col_labels {
                return Err(CliError::Input(
                    "source and target columns differ; pass --truth or embeddings over the same sentences".into(),
                ));
            }
            row_cross_correlation(&x.values, &y.values)
        }
    };
    Ok(Inputs { x, y, truth })
}

fn align_error(e: AlignmentError) -> CliError {
    match e {
        AlignmentError::ShapeMismatch(..)
        | AlignmentError::TooFewPoints(_)
        | AlignmentError::DegenerateRow(_)
        | AlignmentError::DuplicateLabel(_)
        | AlignmentError::LabelCount { .. }
        | AlignmentError::InvalidK { .. } => CliError::Input(e.to_string()),
        AlignmentError::InvalidParameter(_) => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

pub fn run(cfg: &Config, args: &AlignArgs, out: &Path) -> Result<PathBuf, CliError> {
    let mut manifest = RunManifest::start(cfg, Stage::Align);
    ensure_dir(out)?;
    let inputs = match args.fixture {
        Some((m, n)) => fixture(cfg, m, n, out, &mut manifest)?,
        None => from_files(args, &mut manifest)?,
    };
    let mut bcfg = cfg.benchmark.clone();
    if let Some(s) = args.seeds {
        bcfg.seeds = s;
    }
    if let Some(m) = &args.methods {
        bcfg.methods = m.clone();
    }
    let report = run_benchmark(&inputs.x.values, &inputs.y.values, &inputs.truth, &bcfg, cfg.execution).map_err(align_error)?;
    let csv = out.join("benchmark.csv");
    report
        .write_csv(swp_core::io::create(&csv).runtime(csv.display())?)
        .runtime(csv.display())?;
    let json = out.join("benchmark.json");
    save_json(&json, &report).runtime(json.display())?;
    manifest.outputs.extend([csv, json.clone()]);
    manifest.summary = serde_json::json!(report
        .methods
        .iter()
        .map(|r| (r.method.to_string(), r.similarity_recovery.map(|s| s.mean)))
        .collect::<std::collections::BTreeMap<_, _>>());
    manifest.finish(out)?;
    Ok(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_labels_sort_numerically() {
        let l = labels("item", 12);
        assert_eq!(l[0], "item00");
        assert_eq!(l[11], "item11");
        let mut sorted = l.clone();
        sorted.sort();
        assert_eq!(sorted, l);
    }

    #[test]
    fn mismatched_columns_need_a_truth_file() {
        let dir = tempfile::tempdir().unwrap();
        let a = LabeledMatrix::new("t", vec!["x".into(), "y".into(), "z".into()], vec!["c1".into()], DMatrix::zeros(3, 1));
        let b = LabeledMatrix::new("t", vec!["x".into(), "y".into(), "z".into()], vec!["c2".into()], DMatrix::zeros(3, 1));
        let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        a.save(&pa).unwrap();
        b.save(&pb).unwrap();
        let args = AlignArgs {
            source: Some(pa),
            target: Some(pb),
            ..AlignArgs::default()
        };
        let err = run(&Config::default(), &args, &dir.path().join("o")).unwrap_err();
        assert!(matches!(err, CliError::Input(ref m) if m.contains("--truth")), "{err}");
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        let e = align_error(AlignmentError::InvalidParameter("eps".into()));
        assert_eq!(e.exit_code(), 2);
        assert_eq!(align_error(AlignmentError::TooFewPoints(1)).exit_code(), 3);
    }
}
