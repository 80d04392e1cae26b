//! Command cores behind the `lossprobe` binary: campaigns, trace replay,
//! corpus generation and evaluation. The binary only parses flags and maps
//! results to the exit-code contract; everything testable lives here.
//!
//! Exit codes are a stable machine contract:
//! 0 success without findings, 1 runtime failure or replay mismatch,
//! 2 usage error, 3 setup failure, 4 manifest mismatch, 10 findings found.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bench::{evaluate_campaigns, generate_corpus, BenchError, CorpusManifest, PatternMix};
use crate::explorer::{run_campaign, CampaignError, ExplorerConfig};
use crate::model::Event;
use crate::oracles::OracleMode;
use crate::replay::{replay_trace, ReplayError, ReplayOutcome};
use crate::report::{
    write_run_bundle, Budget, BundleError, CampaignSummary, CaptureArtifacts, DataLossReport,
    RunBundle, RunConfigEcho,
};
use crate::sim::spec::{AppSpec, FaultPattern, SpecError};

pub mod exit_codes {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SETUP_FAILED: i32 = 3;
    pub const MANIFEST_MISMATCH: i32 = 4;
    pub const FINDINGS: i32 = 10;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("setup failed: {0}")]
    Setup(String),
    #[error("manifest mismatch: {0}")]
    Manifest(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit_codes::USAGE,
            CliError::Setup(_) => exit_codes::SETUP_FAILED,
            CliError::Manifest(_) => exit_codes::MANIFEST_MISMATCH,
            CliError::Failure(_) => exit_codes::FAILURE,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        match e {
            SpecError::SpecInvalid(_) | SpecError::Parse(_) => CliError::Usage(e.to_string()),
            SpecError::Io(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::BudgetInvalid(_) | CampaignError::EpsilonInvalid(_) => {
                CliError::Usage(e.to_string())
            }
            CampaignError::SetupFailed(_) => CliError::Setup(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<BundleError> for CliError {
    fn from(e: BundleError) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidMix(_) => CliError::Usage(e.to_string()),
            BenchError::ManifestMismatch(_) => CliError::Manifest(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

/// `LOSSPROBE_OUT` overrides any `--out` flag.
pub fn resolve_out_dir(flag: &Path) -> PathBuf {
    match std::env::var_os("LOSSPROBE_OUT") {
        Some(env) if !env.is_empty() => PathBuf::from(env),
        _ => flag.to_path_buf(),
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub app: PathBuf,
    pub budget: Budget,
    pub epsilon: f64,
    pub seed: u64,
    pub oracle: OracleMode,
    pub runs: u32,
    pub setup: Option<PathBuf>,
    pub settle_retries: u32,
    pub out: PathBuf,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunAggregate {
    pub app: String,
    pub runs: u32,
    pub findings_per_run: Vec<usize>,
    pub genuine_per_run: Vec<usize>,
    pub crash_per_run: Vec<u64>,
    pub coverage_per_run: Vec<f64>,
    pub union_finding_activities: Vec<String>,
}

/// Executes `runs` campaigns with seeds `seed, seed+1, ...`, writing one run
/// bundle per campaign plus an aggregate. Returns the summaries and the exit
/// code (0 without findings, 10 with findings).
pub fn cmd_run(opts: &RunOptions) -> Result<(Vec<CampaignSummary>, i32), CliError> {
    if !(0.0..=1.0).contains(&opts.epsilon) {
        return Err(CliError::Usage(format!(
            "epsilon must be within [0, 1], got {}",
            opts.epsilon
        )));
    }
    if opts.runs == 0 {
        return Err(CliError::Usage("runs must be >= 1".into()));
    }
    let spec = AppSpec::load_file(&opts.app)?;
    let setup_actions = match &opts.setup {
        None => Vec::new(),
        Some(path) => parse_event_script(path)?,
    };
    let out = resolve_out_dir(&opts.out);

    let mut summaries = Vec::new();
    for run in 0..opts.runs {
        let config = ExplorerConfig {
            epsilon: opts.epsilon,
            budget: opts.budget,
            seed: opts.seed + u64::from(run),
            oracle_mode: opts.oracle,
            setup_actions: setup_actions.clone(),
            settle_retries: opts.settle_retries,
        };
        let summary = run_campaign(&spec, config)?;
        let echo = RunConfigEcho {
            app_path: opts.app.display().to_string(),
            seed: opts.seed + u64::from(run),
            epsilon: opts.epsilon,
            budget: opts.budget,
            oracle_mode: opts.oracle,
            settle_retries: opts.settle_retries,
            run_index: run,
        };
        let (model_text, model_dot) = model_exports(&summary);
        write_run_bundle(
            &out.join(format!("run-{run}")),
            &echo,
            &summary,
            &model_text,
            &model_dot,
        )?;
        summaries.push(summary);
    }

    let aggregate = RunAggregate {
        app: spec.name.clone(),
        runs: opts.runs,
        findings_per_run: summaries.iter().map(|s| s.findings.len()).collect(),
        genuine_per_run: summaries
            .iter()
            .map(|s| s.genuine_findings().count())
            .collect(),
        crash_per_run: summaries.iter().map(|s| s.crash_count).collect(),
        coverage_per_run: summaries.iter().map(|s| s.activity_coverage()).collect(),
        union_finding_activities: {
            let set: std::collections::BTreeSet<String> = summaries
                .iter()
                .flat_map(|s| s.findings.iter().map(|f| f.activity.clone()))
                .collect();
            set.into_iter().collect()
        },
    };
    let cfg = ron::ser::PrettyConfig::new().indentor("  ".to_string());
    std::fs::write(
        out.join("aggregate.ron"),
        ron::ser::to_string_pretty(&aggregate, cfg).expect("aggregate serialization"),
    )
    .map_err(|e| CliError::Failure(e.to_string()))?;

    let any_findings = summaries.iter().any(|s| s.has_findings());
    let code = if any_findings {
        exit_codes::FINDINGS
    } else {
        exit_codes::OK
    };
    Ok((summaries, code))
}

/// Rebuilds the model exports from a summary's recorded transitions.
fn model_exports(summary: &CampaignSummary) -> (String, String) {
    let mut text = String::from("# states: id\tactivity\tenabled\n");
    for (id, state) in summary.abstract_states.iter().enumerate() {
        let enabled: Vec<String> = state.enabled.iter().map(|e| e.to_string()).collect();
        text.push_str(&format!(
            "{id}\t{}\t[{}]\n",
            state.activity,
            enabled.join(", ")
        ));
    }
    text.push_str("# transitions: from\tevent\tto\n");
    let mut dot = String::from("digraph gui_model {\n  rankdir=LR;\n");
    for (id, state) in summary.abstract_states.iter().enumerate() {
        let shape = if id == 0 { "doublecircle" } else { "circle" };
        dot.push_str(&format!(
            "  q{id} [shape={shape}, label=\"q{id}\\n{}\"];\n",
            state.activity
        ));
    }
    for (from, event, to) in &summary.transitions {
        text.push_str(&format!("{from}\t{event}\t{to}\n"));
        dot.push_str(&format!("  q{from} -> q{to} [label=\"{event}\"];\n"));
    }
    dot.push_str("}\n");
    (text, dot)
}

/// Event scripts are RON lists of events, used for setup sequences.
pub fn parse_event_script(path: &Path) -> Result<Vec<Event>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Failure(format!("cannot read {}: {e}", path.display())))?;
    ron::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad event script {}: {e}", path.display())))
}

/// Replays one recorded finding against a fresh instance. MATCH exits 0,
/// MISMATCH and trace divergence exit 1.
pub fn cmd_replay(bundle_dir: &Path, finding_id: &str) -> Result<(String, i32), CliError> {
    let bundle = RunBundle::read(bundle_dir)?;
    let finding = bundle.finding(finding_id)?;
    let spec = AppSpec::load_file(Path::new(&bundle.config.app_path))?;
    match replay_trace(
        &spec,
        &finding.trace,
        bundle.config.oracle_mode,
        bundle.config.settle_retries,
    ) {
        Ok(ReplayOutcome::Match) => Ok(("MATCH".to_string(), exit_codes::OK)),
        Ok(ReplayOutcome::Mismatch { step, detail }) => Ok((
            format!("MISMATCH at step {step}: {detail}"),
            exit_codes::FAILURE,
        )),
        Err(ReplayError::TraceDiverged { step, detail }) => Ok((
            format!("TRACE_DIVERGED at step {step}: {detail}"),
            exit_codes::FAILURE,
        )),
        Err(e) => Err(CliError::Failure(e.to_string())),
    }
}

/// Generates a corpus into `out`.
pub fn cmd_corpus(
    count: u32,
    seed: u64,
    mix: &PatternMix,
    out: &Path,
) -> Result<CorpusManifest, CliError> {
    let out = resolve_out_dir(out);
    Ok(generate_corpus(count, seed, mix, &out)?)
}

/// Evaluates per-app run bundles (layout: `<bundles>/<app-id>/run-<i>/`)
/// against a manifest; writes the table and the structured result next to
/// the bundles.
pub fn cmd_eval(
    manifest_path: &Path,
    bundles_dir: &Path,
    runs: u32,
) -> Result<(crate::bench::EvaluationResult, i32), CliError> {
    let manifest = CorpusManifest::load_file(manifest_path)?;
    let mut summaries: BTreeMap<String, Vec<CampaignSummary>> = BTreeMap::new();
    for app in &manifest.apps {
        let mut app_summaries = Vec::new();
        for run in 0..runs {
            let dir = bundles_dir.join(&app.id).join(format!("run-{run}"));
            if !dir.is_dir() {
                return Err(CliError::Manifest(format!(
                    "missing run bundle {}",
                    dir.display()
                )));
            }
            let bundle = RunBundle::read(&dir)?;
            app_summaries.push(bundle_to_summary(&bundle));
        }
        summaries.insert(app.id.clone(), app_summaries);
    }
    let result = evaluate_campaigns(&manifest, &summaries, runs)?;
    std::fs::write(bundles_dir.join("evaluation.txt"), result.to_table())
        .map_err(|e| CliError::Failure(e.to_string()))?;
    std::fs::write(bundles_dir.join("evaluation.ron"), result.to_ron_string())
        .map_err(|e| CliError::Failure(e.to_string()))?;
    Ok((result, exit_codes::OK))
}

/// Rehydrates the in-memory summary an evaluator needs from a disk bundle
/// (pixel artifacts stay on disk).
pub fn bundle_to_summary(bundle: &RunBundle) -> CampaignSummary {
    let findings = bundle
        .findings
        .iter()
        .map(|record| DataLossReport {
            id: record.id.clone(),
            activity: record.activity.clone(),
            category: record.category,
            fired: record.fired.clone(),
            snapshot_verdict: record.snapshot_verdict.clone(),
            property_verdict: record.property_verdict.clone(),
            crash: record.crash.clone(),
            step_index: record.step_index,
            trace: record.trace.clone(),
            before: None::<CaptureArtifacts>,
            after: None,
        })
        .collect();
    CampaignSummary {
        app_name: bundle.summary.app_name.clone(),
        seed: bundle.summary.seed,
        epsilon: bundle.summary.epsilon,
        oracle_mode: bundle.summary.oracle_mode,
        budget: bundle.summary.budget,
        actions_executed: bundle.summary.actions_executed,
        declared_activities: bundle.summary.declared_activities.clone(),
        visited_activities: bundle.summary.visited_activities.clone(),
        abstract_states: bundle.summary.abstract_states.clone(),
        transitions: bundle.summary.transitions.clone(),
        systematic_dlr_runs: bundle.summary.systematic_dlr_runs,
        probabilistic_dlr_runs: bundle.summary.probabilistic_dlr_runs,
        crash_count: bundle.summary.crash_count,
        findings,
    }
}

/// Parses a `pattern=weight,...` mix flag.
pub fn parse_mix(text: &str) -> Result<PatternMix, CliError> {
    let mut mix = PatternMix::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (name, weight) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("bad mix entry {part:?}")))?;
        let pattern = FaultPattern::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == name.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown fault pattern {name:?}")))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("bad weight in {part:?}")))?;
        mix.insert(pattern, weight);
    }
    if mix.is_empty() {
        return Err(CliError::Usage("empty pattern mix".into()));
    }
    Ok(mix)
}
