//! Finding and campaign reports, and their on-disk bundle layout.
//!
//! A run directory holds the config echo, the campaign summary, the GUI
//! model exports, and one directory per finding with the before/after
//! snapshots (PGM), the before/after property trees (canonical text) and
//! the reproducible trace. All content files are byte-deterministic for a
//! fixed campaign; wall-clock metadata goes to a sidecar `meta.ron` that is
//! excluded from that guarantee.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::trace::ActionTrace;
use crate::model::{AbstractState, EventId};
use crate::oracles::{OracleMode, OracleStrategy, Snapshot, Verdict};
use crate::proptree::PropertyTree;
use crate::sim::CrashRecord;

/// How a finding is classified.
///
/// `Crash` and `DataLoss` are genuine detections. `SlowRecreation` and
/// `TimeVarying` are self-classified spurious violations: after a failing
/// check the campaign takes one more settled capture — if the screen has
/// drifted back to the before-state the original read was taken too early
/// (slow recreation); if it keeps changing the content is inherently
/// time-varying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FindingCategory {
    Crash,
    DataLoss,
    SlowRecreation,
    TimeVarying,
}

impl FindingCategory {
    pub fn is_genuine(self) -> bool {
        matches!(self, FindingCategory::Crash | FindingCategory::DataLoss)
    }

    pub fn is_spurious(self) -> bool {
        !self.is_genuine()
    }
}

/// Captured oracle artifacts for one side of a comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureArtifacts {
    pub snapshot: Option<Snapshot>,
    pub tree: Option<PropertyTree>,
}

/// One finding with full evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataLossReport {
    pub id: String,
    pub activity: String,
    pub category: FindingCategory,
    /// Strategies that fired (empty for crashes).
    pub fired: BTreeSet<OracleStrategy>,
    pub snapshot_verdict: Option<Verdict>,
    pub property_verdict: Option<Verdict>,
    pub crash: Option<CrashRecord>,
    /// Campaign action index at which the finding was emitted.
    pub step_index: u64,
    pub trace: ActionTrace,
    pub before: Option<CaptureArtifacts>,
    pub after: Option<CaptureArtifacts>,
}

/// Budget for one campaign: action budgets are deterministic and used
/// everywhere determinism matters; time budgets are supported for parity
/// with interactive use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Budget {
    Actions(u64),
    Seconds(f64),
}

/// Aggregate outcome of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub app_name: String,
    pub seed: u64,
    pub epsilon: f64,
    pub oracle_mode: OracleMode,
    pub budget: Budget,
    pub actions_executed: u64,
    pub declared_activities: BTreeSet<String>,
    pub visited_activities: BTreeSet<String>,
    /// Abstract states in discovery order.
    pub abstract_states: Vec<AbstractState>,
    /// Model transitions as (from-id, event, to-id) triples.
    pub transitions: Vec<(u64, EventId, u64)>,
    pub systematic_dlr_runs: u64,
    pub probabilistic_dlr_runs: u64,
    pub crash_count: u64,
    pub findings: Vec<DataLossReport>,
}

impl CampaignSummary {
    /// Fraction of declared activities visited.
    pub fn activity_coverage(&self) -> f64 {
        if self.declared_activities.is_empty() {
            return 1.0;
        }
        self.visited_activities.len() as f64 / self.declared_activities.len() as f64
    }

    pub fn genuine_findings(&self) -> impl Iterator<Item = &DataLossReport> {
        self.findings.iter().filter(|f| f.category.is_genuine())
    }

    pub fn has_findings(&self) -> bool {
        !self.findings.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed bundle file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("finding {0} not present in bundle")]
    UnknownFinding(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Config echo stored at the root of every run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfigEcho {
    pub app_path: String,
    pub seed: u64,
    pub epsilon: f64,
    pub budget: Budget,
    pub oracle_mode: OracleMode,
    pub settle_retries: u32,
    pub run_index: u32,
}

/// Disk form of one finding: artifacts are split out to files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingRecord {
    pub id: String,
    pub activity: String,
    pub category: FindingCategory,
    pub fired: BTreeSet<OracleStrategy>,
    pub snapshot_verdict: Option<Verdict>,
    pub property_verdict: Option<Verdict>,
    pub crash: Option<CrashRecord>,
    pub step_index: u64,
    /// Paths relative to the finding directory.
    pub files: BTreeMap<String, String>,
    pub trace: ActionTrace,
}

/// Disk form of a campaign summary: findings are stored by id only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub app_name: String,
    pub seed: u64,
    pub epsilon: f64,
    pub oracle_mode: OracleMode,
    pub budget: Budget,
    pub actions_executed: u64,
    pub declared_activities: BTreeSet<String>,
    pub visited_activities: BTreeSet<String>,
    pub abstract_states: Vec<AbstractState>,
    pub transitions: Vec<(u64, EventId, u64)>,
    pub systematic_dlr_runs: u64,
    pub probabilistic_dlr_runs: u64,
    pub crash_count: u64,
    pub finding_ids: Vec<String>,
}

fn pretty<T: Serialize>(value: &T) -> String {
    let cfg = ron::ser::PrettyConfig::new().indentor("  ".to_string());
    ron::ser::to_string_pretty(value, cfg).expect("report serialization cannot fail")
}

fn read_ron<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, BundleError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    ron::from_str(&text).map_err(|e| BundleError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes one run's bundle under `dir` (created if needed).
pub fn write_run_bundle(
    dir: &Path,
    config: &RunConfigEcho,
    summary: &CampaignSummary,
    model_text: &str,
    model_dot: &str,
) -> Result<(), BundleError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    std::fs::write(dir.join("config.ron"), pretty(config)).map_err(io_err(dir))?;
    std::fs::write(dir.join("model.gm"), model_text).map_err(io_err(dir))?;
    std::fs::write(dir.join("model.dot"), model_dot).map_err(io_err(dir))?;

    let mut finding_ids = Vec::new();
    for finding in &summary.findings {
        finding_ids.push(finding.id.clone());
        let fdir = dir.join("findings").join(&finding.id);
        std::fs::create_dir_all(&fdir).map_err(io_err(&fdir))?;
        let mut files = BTreeMap::new();
        for (side, capture) in [("before", &finding.before), ("after", &finding.after)] {
            let Some(capture) = capture else { continue };
            if let Some(snapshot) = &capture.snapshot {
                let name = format!("{side}.pgm");
                snapshot
                    .to_image()
                    .save_pgm(&fdir.join(&name))
                    .map_err(|e| BundleError::Malformed {
                        path: fdir.join(&name),
                        message: e.to_string(),
                    })?;
                files.insert(format!("{side}_snapshot"), name);
            }
            if let Some(tree) = &capture.tree {
                let name = format!("{side}.tree");
                std::fs::write(fdir.join(&name), tree.to_canonical_text())
                    .map_err(io_err(&fdir))?;
                files.insert(format!("{side}_tree"), name);
            }
        }
        let record = FindingRecord {
            id: finding.id.clone(),
            activity: finding.activity.clone(),
            category: finding.category,
            fired: finding.fired.clone(),
            snapshot_verdict: finding.snapshot_verdict.clone(),
            property_verdict: finding.property_verdict.clone(),
            crash: finding.crash.clone(),
            step_index: finding.step_index,
            files,
            trace: finding.trace.clone(),
        };
        std::fs::write(fdir.join("finding.ron"), pretty(&record)).map_err(io_err(&fdir))?;
    }

    let record = SummaryRecord {
        app_name: summary.app_name.clone(),
        seed: summary.seed,
        epsilon: summary.epsilon,
        oracle_mode: summary.oracle_mode,
        budget: summary.budget,
        actions_executed: summary.actions_executed,
        declared_activities: summary.declared_activities.clone(),
        visited_activities: summary.visited_activities.clone(),
        abstract_states: summary.abstract_states.clone(),
        transitions: summary.transitions.clone(),
        systematic_dlr_runs: summary.systematic_dlr_runs,
        probabilistic_dlr_runs: summary.probabilistic_dlr_runs,
        crash_count: summary.crash_count,
        finding_ids,
    };
    std::fs::write(dir.join("summary.ron"), pretty(&record)).map_err(io_err(dir))?;

    // Sidecar metadata: the only file carrying wall-clock content.
    let meta = format!(
        "(written_unix_ms: {})\n",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0)
    );
    std::fs::write(dir.join("meta.ron"), meta).map_err(io_err(dir))?;
    Ok(())
}

/// A run bundle read back from disk (pixel artifacts stay on disk).
#[derive(Debug, Clone)]
pub struct RunBundle {
    pub dir: PathBuf,
    pub config: RunConfigEcho,
    pub summary: SummaryRecord,
    pub findings: Vec<FindingRecord>,
}

impl RunBundle {
    pub fn read(dir: &Path) -> Result<Self, BundleError> {
        let config: RunConfigEcho = read_ron(&dir.join("config.ron"))?;
        let summary: SummaryRecord = read_ron(&dir.join("summary.ron"))?;
        let mut findings = Vec::new();
        for id in &summary.finding_ids {
            let record: FindingRecord =
                read_ron(&dir.join("findings").join(id).join("finding.ron"))?;
            findings.push(record);
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            config,
            summary,
            findings,
        })
    }

    pub fn finding(&self, id: &str) -> Result<&FindingRecord, BundleError> {
        self.findings
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| BundleError::UnknownFinding(id.to_string()))
    }
}
