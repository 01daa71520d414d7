use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use swp_core::alignment::BenchmarkReport;
use swp_core::analysis::BootstrapResult;
use swp_core::io::load_json;
use swp_core::report::{AnalysisReport, REPORT_SCHEMA_VERSION};

use super::ensure_dir;
use crate::config::Config;
use crate::error::{CliError, Classify};
use crate::manifest::{RunManifest, Stage};

#[derive(Debug, Clone, Default)]
pub struct ReportArgs {
    /// `report.json` written by `analyze`.
    pub analysis: PathBuf,
    /// `benchmark.json` written by `align`; replaces any embedded benchmark.
    pub benchmark: Option<PathBuf>,
}

fn ci(b: &BootstrapResult) -> String {
    format!("{:.3} [{:.3}, {:.3}]", b.estimate, b.ci_low, b.ci_high)
}

/// Markdown overview of the headline numbers.
pub fn summary_markdown(r: &AnalysisReport) -> String {
    let mut s = String::from("# Analysis summary\n\n");
    s.push_str("| domain | annotations | tones | entropy (bits) | intra reliability |\n|---|---|---|---|---|\n");
    for d in &r.domains {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            d.domain,
            d.n_annotations,
            d.histogram.len(),
            ci(&d.entropy),
            d.intra_reliability.as_ref().map_or("n/a".into(), ci)
        );
    }
    if let Some(c) = &r.cross {
        let _ = writeln!(s, "\nCross-domain reliability: {}\n", ci(&c.reliability));
        s.push_str("Top same-tone correlations:\n\n");
        for t in c.diagonal.iter().take(10) {
            let _ = writeln!(s, "- {}: {:.3}", t.tone, t.value);
        }
    }
    if let Some(m) = &r.mds {
        let _ = writeln!(s, "\nMDS stress: {:.4} over {} points", m.stress, m.points.len());
    }
    if !r.arrows.is_empty() {
        s.push_str("\n| feature | domain | explained variance |\n|---|---|---|\n");
        for a in &r.arrows {
            let _ = writeln!(s, "| {} | {} | {:.3} |", a.feature, a.domain, a.explained_variance);
        }
    }
    if let Some(b) = &r.benchmark {
        let _ = writeln!(s, "\nAlignment benchmark over {} tones:\n", b.m);
        s.push_str("| method | similarity recovery | preservation (source) | preservation (target) |\n|---|---|---|---|\n");
        let fmt = |m: &Option<swp_core::alignment::MetricSummary>| {
            m.as_ref()
                .map_or("n/a".to_string(), |m| format!("{:.3} [{:.3}, {:.3}]", m.mean, m.ci_low, m.ci_high))
        };
        for m in &b.methods {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                m.method,
                fmt(&m.similarity_recovery),
                fmt(&m.preservation_source),
                fmt(&m.preservation_target)
            );
        }
    }
    s
}

pub fn run(cfg: &Config, args: &ReportArgs, out: &Path) -> Result<PathBuf, CliError> {
    let mut manifest = RunManifest::start(cfg, Stage::Report);
    if !args.analysis.exists() {
        return Err(CliError::Input(format!("{} not found (analyze stage)", args.analysis.display())));
    }
    let doc: serde_json::Value = load_json(&args.analysis).input(args.analysis.display())?;
    let version = doc.get("schema_version").and_then(|v| v.as_str()).unwrap_or("none");
    if version != REPORT_SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "{} has schema version {version}, expected {REPORT_SCHEMA_VERSION}",
            args.analysis.display()
        )));
    }
    let mut report: AnalysisReport = serde_json::from_value(doc).input(args.analysis.display())?;
    manifest.inputs.push(args.analysis.clone());
    if let Some(p) = &args.benchmark {
        let b: BenchmarkReport = load_json(p).input(p.display())?;
        report.benchmark = Some(b);
        manifest.inputs.push(p.clone());
    }
    ensure_dir(out)?;
    manifest.outputs = report.write_all(out).runtime("writing report")?;
    let md = out.join("summary.md");
    std::fs::write(&md, summary_markdown(&report)).runtime(md.display())?;
    manifest.outputs.push(md.clone());
    manifest.summary = serde_json::json!({
        "domains": report.domains.len(),
        "benchmark": report.benchmark.is_some(),
    });
    manifest.finish(out)?;
    Ok(md)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_mismatch_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("report.json");
        std::fs::write(&p, r#"{"schema_version": "0.1.0"}"#).unwrap();
        let args = ReportArgs {
            analysis: p,
            benchmark: None,
        };
        let err = run(&Config::default(), &args, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("schema version 0.1.0"), "{err}");
    }

    #[test]
    fn missing_analysis_points_at_analyze() {
        let dir = tempfile::tempdir().unwrap();
        let args = ReportArgs {
            analysis: dir.path().join("none.json"),
            benchmark: None,
        };
        let err = run(&Config::default(), &args, dir.path()).unwrap_err();
        assert!(err.to_string().contains("analyze stage"), "{err}");
    }

    #[test]
    fn confidence_interval_format() {
        let b = BootstrapResult {
            estimate: 0.5,
            ci_low: 0.25,
            ci_high: 0.75,
            n_replicates: 10,
            rng_seed: 1,
        };
        assert_eq!(ci(&b), "0.500 [0.250, 0.750]");
    }
}
