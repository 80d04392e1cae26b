//! Seeded synthetic-app corpus with ground-truth fault manifests, and the
//! evaluator that scores campaign reports against them.

pub mod evaluate;
pub mod generate;
pub mod ground_truth;

pub use evaluate::{evaluate_campaigns, AppEvaluation, Complementarity, EvaluationResult};
pub use generate::{generate_corpus, PatternMix};
pub use ground_truth::{evaluate_ground_truth, DetectableBy, GroundTruth, GroundTruthConfig};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::spec::FaultPattern;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFault {
    pub id: String,
    pub activity: String,
    pub pattern: FaultPattern,
    pub detectable_by: DetectableBy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusApp {
    pub id: String,
    /// Spec file path relative to the manifest.
    pub spec_path: String,
    pub activities: u32,
    pub faults: Vec<ManifestFault>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub count: u32,
    pub apps: Vec<CorpusApp>,
}

impl CorpusManifest {
    pub fn to_ron_string(&self) -> String {
        let cfg = ron::ser::PrettyConfig::new().indentor("  ".to_string());
        ron::ser::to_string_pretty(self, cfg).expect("manifest serialization cannot fail")
    }

    pub fn save_file(&self, path: &Path) -> Result<(), BenchError> {
        std::fs::write(path, self.to_ron_string()).map_err(BenchError::Io)?;
        Ok(())
    }

    pub fn load_file(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(BenchError::Io)?;
        ron::from_str(&text).map_err(|e| BenchError::ManifestMismatch(e.to_string()))
    }

    pub fn app(&self, id: &str) -> Option<&CorpusApp> {
        self.apps.iter().find(|a| a.id == id)
    }

    pub fn total_faults(&self) -> usize {
        self.apps.iter().map(|a| a.faults.len()).sum()
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid pattern mix: {0}")]
    InvalidMix(String),
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    GroundTruth(#[from] ground_truth::GroundTruthError),
    #[error(transparent)]
    Spec(#[from] crate::sim::spec::SpecError),
    #[error("corpus generation failed for app {index}: {reason}")]
    Generation { index: u32, reason: String },
}
