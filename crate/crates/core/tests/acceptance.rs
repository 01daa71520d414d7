//! Acceptance suite. Prints one line per criterion and exits nonzero when a
//! criterion fails that is not on the known-unattainable list.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal, StandardNormal};

use swp_core::agents::synthetic::{SyntheticAgent, SyntheticJoint};
use swp_core::alignment::{
    bli, gwot, procrustes, procrustes_noise_floor, procrustes_residual, row_cross_correlation, run_benchmark,
    synthetic_fixture, BenchmarkConfig, BenchmarkReport, BliParams, GwotParams, Method, MetricSummary,
};
use swp_core::analysis::{
    cross_correlation, entropy_bits, fit_arrows, gibbs_stationary_exact, intra_correlation, mds, projection_variance,
    split_half, tone_histogram, ArrowFit, DissimilarityTransform, MdsOptions,
};
use swp_core::engine::{run_autonomous, Experiment, ExperimentConfig, LogicalClock, NullSink};
use swp_core::ingest::{dataset_dir_from_env, load_dataset, Dataset};
use swp_core::linalg::{center_columns, distances, gaussian_matrix, orthogonality_defect, permute_rows, random_orthogonal};
use swp_core::par::{stream_rng, Execution};
use swp_core::stats::{pearson, upper_triangle, variance};
use swp_core::validation::{ErrorKind, FilterConfig, GrammarChecker, Lexicons, Validator, WordList};
use swp_core::{ChainItem, Domain, Tone};

/// Criteria that cannot hold as literally stated; a failure is reported but
/// does not fail the run.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "procrustes-exact-rotation",
    "a centred 40x80 source has rank 39, so XQ = XQ* fixes Q* only on a 39-dim subspace; \
     the remaining 41-dim block is unidentifiable from the data",
)];

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    name: &'static str,
    status: Status,
    detail: String,
}

fn check(name: &'static str, ok: bool, detail: String) -> Outcome {
    Outcome {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn skip(name: &'static str, detail: String) -> Outcome {
    Outcome {
        name,
        status: Status::Skip,
        detail,
    }
}

fn error(name: &'static str, e: impl std::fmt::Display) -> Outcome {
    check(name, false, format!("error: {e}"))
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn gibbs_stationarity() -> Outcome {
    const NAME: &str = "gibbs-stationarity";
    let start = Instant::now();
    let joint = Arc::new(SyntheticJoint::random(5, 8, 2024));
    let exact = match gibbs_stationary_exact(&joint) {
        Ok(s) => s,
        Err(e) => return error(NAME, e),
    };
    let cfg = ExperimentConfig {
        n_chains: 200,
        n_iterations: 200,
        seed_items: joint.tones().iter().cloned().map(ChainItem::Tone).collect(),
        rng_seed: 17,
        ..ExperimentConfig::default()
    };
    let mut exp = match Experiment::new(cfg, Validator::default(), Box::new(NullSink)) {
        Ok(e) => e,
        Err(e) => return error(NAME, e),
    };
    let agent = SyntheticAgent::new(joint.clone(), 99);
    let summary = match run_autonomous(&mut exp, &agent, &LogicalClock::default()) {
        Ok(s) => s,
        Err(e) => return error(NAME, e),
    };
    let mut counts = vec![0usize; joint.tones().len()];
    for chain in exp.chains() {
        for entry in chain.history.iter().skip(101) {
            if let ChainItem::Tone(t) = &entry.item {
                counts[joint.tone_index(t.as_str()).expect("tone from joint")] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    let tv = 0.5
        * counts
            .iter()
            .zip(&exact.tone)
            .map(|(&c, p)| (c as f64 / total as f64 - p).abs())
            .sum::<f64>();
    let elapsed = start.elapsed();
    check(
        NAME,
        tv < 0.05 && exact.residual < 1e-12 && elapsed < Duration::from_secs(30) && summary.rejected_attempts == 0,
        format!(
            "TV {tv:.4} over {total} late tone samples (< 0.05), oracle residual {:.1e} (< 1e-12), {} rejected, {} (< 30s)",
            exact.residual,
            summary.rejected_attempts,
            secs(elapsed)
        ),
    )
}

fn procrustes_exact() -> Outcome {
    const NAME: &str = "procrustes-exact-rotation";
    let mut rng = stream_rng(301, 0);
    let x = gaussian_matrix(40, 80, &mut rng);
    let qs = random_orthogonal(80, &mut rng);
    match procrustes(&x, &(&x * &qs)) {
        Ok(q) => {
            let err = (q - qs).norm();
            check(NAME, err < 1e-8, format!("||Q - Q*||_F = {err:.3e} at 40x80 (< 1e-8)"))
        }
        Err(e) => error(NAME, e),
    }
}

fn procrustes_identifiable() -> Outcome {
    const NAME: &str = "procrustes-identifiable";
    let start = Instant::now();
    let mut rng = stream_rng(302, 0);
    let x = gaussian_matrix(40, 80, &mut rng);
    let qs = random_orthogonal(80, &mut rng);
    let q = match procrustes(&x, &(&x * &qs)) {
        Ok(q) => q,
        Err(e) => return error(NAME, e),
    };
    let elapsed = start.elapsed();
    let xc = center_columns(&x);
    let row_space = (&xc * &q - &xc * &qs).norm();
    let defect = orthogonality_defect(&q);
    let tall = gaussian_matrix(120, 40, &mut rng);
    let qt = random_orthogonal(40, &mut rng);
    let square = match procrustes(&tall, &(&tall * &qt)) {
        Ok(q) => (q - qt).norm(),
        Err(e) => return error(NAME, e),
    };
    check(
        NAME,
        row_space < 1e-8 && defect < 1e-8 && square < 1e-8 && elapsed < Duration::from_secs(1),
        format!(
            "||XcQ - XcQ*|| {row_space:.2e}, ||QtQ - I|| {defect:.2e}, 120x40 ||Q - Q*|| {square:.2e} (all < 1e-8), {} (< 1s)",
            secs(elapsed)
        ),
    )
}

fn procrustes_noise() -> Outcome {
    const NAME: &str = "procrustes-noise-floor";
    let (m, n, sigma) = (40, 80, 0.01);
    let floor = procrustes_noise_floor(m, n, sigma);
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let mut rng = stream_rng(400 + seed, 0);
        let x = gaussian_matrix(m, n, &mut rng);
        let y = &x * random_orthogonal(n, &mut rng) + gaussian_matrix(m, n, &mut rng) * sigma;
        match procrustes_residual(&center_columns(&x), &center_columns(&y)) {
            Ok(r) => ratios.push(r / floor),
            Err(e) => return error(NAME, e),
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    check(
        NAME,
        worst < 0.05,
        format!(
            "residual/floor within {:.1}% on all 20 seeds (< 5%), mean {mean:.4}, floor {floor:.4}",
            100.0 * worst
        ),
    )
}

fn gwot_self() -> Outcome {
    const NAME: &str = "gwot-self-alignment";
    let start = Instant::now();
    let x = gaussian_matrix(40, 10, &mut stream_rng(501, 0));
    let s = match gwot(&x, &x, &GwotParams::default()) {
        Ok(s) => s,
        Err(e) => return error(NAME, e),
    };
    let elapsed = start.elapsed();
    let mass = s.coupling.trace();
    let worst_rise = s
        .objective_history
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    check(
        NAME,
        mass >= 0.9 && worst_rise <= 1e-10 && elapsed < Duration::from_secs(10),
        format!(
            "diagonal mass {mass:.4} (>= 0.9), largest objective increase {worst_rise:.2e} over {} steps (<= 1e-10), {} (< 10s)",
            s.objective_history.len().saturating_sub(1),
            secs(elapsed)
        ),
    )
}

fn bli_recovery() -> Outcome {
    const NAME: &str = "bli-permutation-recovery";
    let start = Instant::now();
    let (m, n) = (40, 80);
    let mut recovered = Vec::new();
    for seed in 0..10u64 {
        let mut rng = stream_rng(600 + seed, 0);
        let x = gaussian_matrix(m, n, &mut rng);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let y = permute_rows(&x, &perm) * random_orthogonal(n, &mut rng) + gaussian_matrix(m, n, &mut rng) * 0.05;
        let params = BliParams {
            seed,
            ..BliParams::default()
        };
        match bli(&x, &y, &params) {
            Ok(s) => recovered.push((0..m).filter(|&k| s.matching[perm[k]] == k).count()),
            Err(e) => return error(NAME, e),
        }
    }
    let elapsed = start.elapsed();
    let good = recovered.iter().filter(|&&c| c * 100 >= 95 * m).count();
    check(
        NAME,
        good >= 8 && elapsed < Duration::from_secs(30),
        format!("{good}/10 seeds recover >= 95% (need 8), per seed {recovered:?}/40, {} (< 30s)", secs(elapsed)),
    )
}

fn summary(s: Option<&MetricSummary>) -> String {
    match s {
        Some(s) => format!("{:.3} [{:.3}, {:.3}]", s.mean, s.ci_low, s.ci_high),
        None => "n/a".into(),
    }
}

fn recovery(report: &BenchmarkReport, method: Method) -> f64 {
    report
        .method(method)
        .and_then(|r| r.similarity_recovery)
        .map_or(f64::NAN, |s| s.mean)
}

fn benchmark_ordering() -> Outcome {
    const NAME: &str = "benchmark-ordering";
    let start = Instant::now();
    let f = synthetic_fixture(40, 80, 7);
    let cfg = BenchmarkConfig {
        seeds: 100,
        ..BenchmarkConfig::default()
    };
    let report = match run_benchmark(&f.x, &f.y, &f.truth, &cfg, Execution::Parallel) {
        Ok(r) => r,
        Err(e) => return error(NAME, e),
    };
    let elapsed = start.elapsed();
    let (b, p, r) = (
        recovery(&report, Method::Bli),
        recovery(&report, Method::Procrustes),
        recovery(&report, Method::Random),
    );
    let cis: Vec<String> = Method::ALL
        .iter()
        .map(|&m| format!("{m} {}", summary(report.method(m).and_then(|r| r.similarity_recovery.as_ref()))))
        .collect();
    check(
        NAME,
        b >= p && p > r && b > r && elapsed < Duration::from_secs(300),
        format!("similarity r: {} (BLI >= Procrustes > random), {} (< 5min)", cis.join(", "), secs(elapsed)),
    )
}

fn mds_fidelity() -> Outcome {
    const NAME: &str = "mds-fidelity";
    let pts = gaussian_matrix(40, 2, &mut stream_rng(701, 0));
    let labels: Vec<String> = (0..40).map(|i| format!("p{i}")).collect();
    let sol = match mds(&distances(&pts), &labels, &MdsOptions::default(), DissimilarityTransform::Raw) {
        Ok(s) => s,
        Err(e) => return error(NAME, e),
    };
    let residual = match procrustes_residual(&center_columns(&sol.points), &center_columns(&pts)) {
        Ok(r) => r,
        Err(e) => return error(NAME, e),
    };
    let tri = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
    let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let tri_err = match mds(&tri, &labels, &MdsOptions::default(), DissimilarityTransform::Raw) {
        Ok(s) => (distances(&s.points) - &tri).abs().max(),
        Err(e) => return error(NAME, e),
    };
    check(
        NAME,
        residual < 1e-6 && tri_err < 1e-9,
        format!("planar Procrustes residual {residual:.2e} (< 1e-6), triangle max distance error {tri_err:.2e} (< 1e-9)"),
    )
}

fn explained_variance_oracle() -> Outcome {
    const NAME: &str = "explained-variance";
    let mut rng = stream_rng(801, 0);
    let theta: f64 = 0.6;
    let rot = DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]);
    let pts = gaussian_matrix(500, 2, &mut rng) * DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0])) * rot;
    let c = center_columns(&pts);
    let cov = c.transpose() * &c / (c.nrows() as f64 - 1.0);
    let (a, b, d) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 1)]);
    let half = ((a - d) / 2.0).hypot(b);
    let (l1, l2) = ((a + d) / 2.0 + half, (a + d) / 2.0 - half);
    let expected = l1 / (l1 + l2);
    let axis = [b, l1 - a];
    let feature = DMatrix::from_fn(pts.nrows(), 1, |i, _| pts[(i, 0)] * axis[0] + pts[(i, 1)] * axis[1]);
    let got = match fit_arrows(&pts, &feature, ArrowFit::FeatureOnAxes)
        .and_then(|arrows| projection_variance(&pts, &[arrows[(0, 0)], arrows[(0, 1)]]))
    {
        Ok(v) => v,
        Err(e) => return error(NAME, e),
    };
    check(
        NAME,
        (got - expected).abs() <= 1e-6,
        format!("principal-axis arrow explains {got:.8}, lambda1/(lambda1+lambda2) = {expected:.8} (+/- 1e-6)"),
    )
}

fn tones(words: &[&str]) -> Vec<Tone> {
    words.iter().map(|w| Tone::new(w).expect("valid tone")).collect()
}

fn entropy_oracle() -> Outcome {
    const NAME: &str = "entropy";
    let eight = ["calm", "sad", "angry", "happy", "proud", "curious", "anxious", "polite"];
    let uniform: Vec<Tone> = (0..5).flat_map(|_| tones(&eight)).collect();
    let single = tones(&["calm"; 12]);
    match (entropy_bits(&tone_histogram(&uniform)), entropy_bits(&tone_histogram(&single))) {
        (Ok(u), Ok(s)) => check(
            NAME,
            u == 3.0 && s == 0.0,
            format!("uniform-8 {u} bits (= 3), single tone {s} bits (= 0)"),
        ),
        (Err(e), _) | (_, Err(e)) => error(NAME, e),
    }
}

/// Items with true means mu ~ N(0, tau^2) each observed by `n` units with
/// noise sigma. Given mu, each half-mean has noise variance 2 sigma^2 / n, so
/// the split-half correlation concentrates on v / (v + 2 sigma^2 / n) where v
/// is the sample variance of mu.
fn calibration_sim(sim: u64, n_boot: usize) -> Option<(f64, f64, f64)> {
    let (k, n, tau, sigma) = (40, 20, 1.0, 2.0);
    let mut rng = stream_rng(0xACCE, sim);
    let mu: Vec<f64> = (0..k).map(|_| Normal::new(0.0, tau).unwrap().sample(&mut rng)).collect();
    let units: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            mu.iter()
                .map(|m| m + sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect();
    let v = variance(&mu);
    let rho = v / (v + 2.0 * sigma * sigma / n as f64);
    let r = split_half(
        &[units],
        |half: &[&Vec<f64>]| Ok((0..k).map(|j| half.iter().map(|u| u[j]).sum::<f64>() / half.len() as f64).collect()),
        n_boot,
        sim,
        Execution::Parallel,
    )
    .ok()?;
    Some((rho, r.ci_low, r.ci_high))
}

fn bootstrap_calibration() -> Outcome {
    const NAME: &str = "bootstrap-calibration";
    let start = Instant::now();
    let sims: Vec<_> = (0..200).filter_map(|s| calibration_sim(s, 1000)).collect();
    let covered = sims.iter().filter(|(rho, lo, hi)| lo <= rho && rho <= hi).count();
    check(
        NAME,
        sims.len() == 200 && covered >= 180,
        format!("95% CI covers the attenuated correlation in {covered}/200 simulations (>= 180), {}", secs(start.elapsed())),
    )
}

struct Reject;

impl GrammarChecker for Reject {
    fn is_grammatical(&self, _: &str) -> bool {
        false
    }
}

#[derive(Clone, Copy)]
enum Filters {
    Default,
    StrictGrammar,
    ProfaneAdjective,
    NoAdjectiveRow,
}

enum Case {
    Sentence(&'static str, &'static str),
    Tone(&'static str, &'static str),
}

fn validator(f: Filters) -> Validator {
    match f {
        Filters::Default => Validator::default(),
        Filters::StrictGrammar => Validator::default().with_grammar(Arc::new(Reject)),
        Filters::ProfaneAdjective => {
            let mut lex = Lexicons::builtin();
            lex.adjectives = WordList::parse("adjectives", "calm\ncrappy\n").expect("list");
            lex.profanity = WordList::parse("profanity", "crappy\n").expect("list");
            Validator::new(lex)
        }
        Filters::NoAdjectiveRow => Validator::default().with_config(FilterConfig {
            adjective: false,
            ..FilterConfig::default()
        }),
    }
}

fn filter_table() -> Outcome {
    const NAME: &str = "validation-filter-table";
    use Case::{Sentence as S, Tone as T};
    use ErrorKind::*;
    use Filters::*;
    let table: Vec<(Filters, Case, Option<ErrorKind>)> = vec![
        (Default, S("Thank you so much for everything today", "grateful"), None),
        (Default, S("I cannot wait for the concert tonight", "excited"), None),
        (Default, S("We should assess the class schedule tomorrow", "calm"), None),
        (Default, S("The cockpit lights blinked on and off", "curious"), None),
        (Default, S("I am happy now", "sad"), Some(TooShort)),
        (Default, S("Hi there", "calm"), Some(TooShort)),
        (Default, S("", "calm"), Some(TooShort)),
        (Default, S("one two three four five", "calm"), Some(TooShort)),
        (StrictGrammar, S("one two three four five", "calm"), Some(TooShort)),
        (StrictGrammar, S("ideas green colorless sleep furiously tonight", "calm"), Some(NotGrammatical)),
        (Default, S("ideas green colorless sleep furiously tonight", "calm"), None),
        (Default, S("He spoke politely to everyone there", "polite"), Some(StemOverlap)),
        (Default, S("She sadly walked home alone tonight", "sad"), Some(StemOverlap)),
        (Default, S("They happily danced around the fire", "happy"), Some(StemOverlap)),
        (Default, S("Grateful hearts make the best friends", "grateful"), Some(StemOverlap)),
        (Default, S("Damn, I sadly missed the bus", "sad"), Some(StemOverlap)),
        (Default, S("What a shit day, honestly, my friend", "angry"), Some(Profanity)),
        (Default, S("DAMN! That was a close call", "calm"), Some(Profanity)),
        (Default, T("excited", "We won the game!"), None),
        (Default, T("grateful", "Thank you for the lovely gift"), None),
        (Default, T("gr8ful", "We won the game!"), Some(BadCharset)),
        (Default, T("happy sad", "We won the game!"), Some(BadCharset)),
        (Default, T("", "We won the game!"), Some(BadCharset)),
        (Default, T("happpy", "We won the game!"), Some(Misspelled)),
        (Default, T("the", "We won the game!"), Some(NotAdjective)),
        (Default, T("table", "We won the game!"), Some(NotAdjective)),
        (NoAdjectiveRow, T("table", "We won the game!"), None),
        (Default, T("excited", "She was excitedly waving"), Some(StemOverlap)),
        (Default, T("kind", "Be kind to your neighbours always"), Some(StemOverlap)),
        (ProfaneAdjective, T("crappy", "We lost the game again"), Some(Profanity)),
    ];
    let mut failures = Vec::new();
    for (i, (filters, case, expected)) in table.iter().enumerate() {
        let v = validator(*filters);
        let (got, text) = match case {
            S(text, tone) => (v.sentence(text, &Tone::new(tone).expect("tone")), *text),
            T(text, sentence) => (v.tone(text, sentence), *text),
        };
        let got = got.err().map(|e| e.kind);
        if got != *expected {
            failures.push(format!("#{i} {text:?}: expected {expected:?}, got {got:?}"));
        }
    }
    check(
        NAME,
        failures.is_empty(),
        if failures.is_empty() {
            format!("{}/{} cases", table.len(), table.len())
        } else {
            failures.join("; ")
        },
    )
}

const DATASET_ENTROPY: [(Domain, f64); 2] = [(Domain::Llm, 3.10), (Domain::Human, 5.48)];

fn dataset_entropy(ds: &Dataset) -> Outcome {
    const NAME: &str = "dataset-entropy";
    let mut parts = Vec::new();
    let mut ok = true;
    for (domain, target) in DATASET_ENTROPY {
        let Some(data) = ds.domains.get(&domain).filter(|d| !d.tones.is_empty()) else {
            return skip(NAME, format!("no {domain} tone annotations in the dataset"));
        };
        match entropy_bits(&tone_histogram(&data.tones)) {
            Ok(h) => {
                ok &= (h - target).abs() <= 0.05;
                parts.push(format!("{domain} {h:.3} bits (target {target} +/- 0.05)"));
            }
            Err(e) => return error(NAME, e),
        }
    }
    check(NAME, ok, parts.join(", "))
}

fn upper_r(ours: &DMatrix<f64>, published: &DMatrix<f64>, full: bool) -> Option<f64> {
    let (a, b) = if full {
        (ours.iter().copied().collect(), published.iter().copied().collect())
    } else {
        (upper_triangle(ours), upper_triangle(published))
    };
    pearson(&a, &b).ok()
}

fn dataset_matrices(ds: &Dataset) -> Outcome {
    const NAME: &str = "dataset-correlation-matrices";
    let mut parts = Vec::new();
    let mut ok = true;
    for (domain, published) in &ds.published.intra {
        let Some(rm) = ds.domains.get(domain).and_then(|d| d.ratings.as_ref()) else {
            return skip(NAME, format!("no {domain} ratings in the dataset"));
        };
        let ours = match intra_correlation(rm) {
            Ok(c) => c,
            Err(e) => return error(NAME, e),
        };
        let r = published
            .reindex(&ours.rows, &ours.cols)
            .ok()
            .and_then(|p| upper_r(&ours.values, &p, false));
        ok &= r.is_some_and(|r| r >= 0.95);
        parts.push(format!("intra {domain} r = {}", r.map_or("n/a".into(), |r| format!("{r:.3}"))));
    }
    if let Some(published) = &ds.published.cross {
        let rms = (
            ds.domains.get(&Domain::Llm).and_then(|d| d.ratings.as_ref()),
            ds.domains.get(&Domain::Human).and_then(|d| d.ratings.as_ref()),
        );
        if let (Some(a), Some(b)) = rms {
            let ours = match cross_correlation(a, b) {
                Ok(c) => c,
                Err(e) => return error(NAME, e),
            };
            let r = published
                .reindex(&ours.rows, &ours.cols)
                .map(|p| upper_r(&ours.values, &p, true))
                .or_else(|_| {
                    published
                        .reindex(&ours.cols, &ours.rows)
                        .map(|p| upper_r(&ours.values, &p.transpose(), true))
                })
                .ok()
                .flatten();
            ok &= r.is_some_and(|r| r >= 0.95);
            parts.push(format!("cross r = {}", r.map_or("n/a".into(), |r| format!("{r:.3}"))));
        }
    }
    if parts.is_empty() {
        return skip(NAME, "dataset publishes no correlation matrices".into());
    }
    check(NAME, ok, format!("{} (each >= 0.95)", parts.join(", ")))
}

fn metric(report: &BenchmarkReport, method: Method, name: &str) -> Option<f64> {
    let r = report.method(method)?;
    let s = match name {
        "similarity_recovery" | "r" => r.similarity_recovery.as_ref(),
        "preservation_source" => r.preservation_source.as_ref(),
        "preservation_target" => r.preservation_target.as_ref(),
        other => r.knn_at(other.strip_prefix("knn_")?.parse().ok()?),
    }?;
    Some(s.mean)
}

fn dataset_benchmark(ds: &Dataset) -> Outcome {
    const NAME: &str = "dataset-benchmark";
    if ds.published.benchmark.is_empty() {
        return skip(NAME, "dataset publishes no benchmark table".into());
    }
    let (Some(a), Some(b)) = (
        ds.domains.get(&Domain::Llm).and_then(|d| d.ratings.as_ref()),
        ds.domains.get(&Domain::Human).and_then(|d| d.ratings.as_ref()),
    ) else {
        return skip(NAME, "dataset lacks rating matrices for both domains".into());
    };
    if a.sentences != b.sentences {
        return error(NAME, "rating matrices do not share sentence columns");
    }
    let truth = row_cross_correlation(&a.means, &b.means);
    let report = match run_benchmark(&a.means, &b.means, &truth, &BenchmarkConfig::default(), Execution::Parallel) {
        Ok(r) => r,
        Err(e) => return error(NAME, e),
    };
    let mut misses = Vec::new();
    let mut compared = 0;
    for p in &ds.published.benchmark {
        let Ok(method) = p.method.parse::<Method>() else {
            misses.push(format!("unknown method {}", p.method));
            continue;
        };
        match metric(&report, method, &p.metric) {
            Some(v) => {
                compared += 1;
                if (v - p.value).abs() > 0.1 {
                    misses.push(format!("{method} {} = {v:.3} vs {:.3}", p.metric, p.value));
                }
            }
            None => misses.push(format!("{method} {} not computed", p.metric)),
        }
    }
    check(
        NAME,
        misses.is_empty(),
        format!("{compared} entries within +/- 0.1{}", if misses.is_empty() { String::new() } else { format!("; {}", misses.join("; ")) }),
    )
}

fn dataset_criteria() -> Vec<Outcome> {
    const NAMES: [&str; 3] = ["dataset-entropy", "dataset-correlation-matrices", "dataset-benchmark"];
    let Some(dir) = dataset_dir_from_env() else {
        return NAMES
            .iter()
            .map(|n| skip(n, "SWP_DATASET_DIR not set; released dataset absent".into()))
            .collect();
    };
    match load_dataset(&dir) {
        Ok(ds) => vec![dataset_entropy(&ds), dataset_matrices(&ds), dataset_benchmark(&ds)],
        Err(e) => NAMES.iter().map(|n| error(n, &e)).collect(),
    }
}

fn main() -> ExitCode {
    let known: BTreeMap<&str, &str> = KNOWN_UNATTAINABLE.iter().copied().collect();
    let criteria: Vec<fn() -> Outcome> = vec![
        gibbs_stationarity,
        procrustes_exact,
        procrustes_identifiable,
        procrustes_noise,
        gwot_self,
        bli_recovery,
        benchmark_ordering,
        mds_fidelity,
        explained_variance_oracle,
        entropy_oracle,
        bootstrap_calibration,
        filter_table,
    ];
    let mut outcomes: Vec<Outcome> = criteria.into_iter().map(|c| c()).collect();
    outcomes.extend(dataset_criteria());
    let mut unexpected = 0;
    for o in &outcomes {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Skip => "SKIP",
            Status::Fail => "FAIL",
        };
        println!("[{tag}] {}: {}", o.name, o.detail);
        if let Status::Fail = o.status {
            match known.get(o.name) {
                Some(reason) => println!("       known unattainable: {reason}"),
                None => unexpected += 1,
            }
        }
    }
    let count = |f: fn(&Status) -> bool| outcomes.iter().filter(|o| f(&o.status)).count();
    println!(
        "acceptance: {} passed, {} failed ({} known unattainable), {} skipped",
        count(|s| matches!(s, Status::Pass)),
        count(|s| matches!(s, Status::Fail)),
        count(|s| matches!(s, Status::Fail)) - unexpected,
        count(|s| matches!(s, Status::Skip)),
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
