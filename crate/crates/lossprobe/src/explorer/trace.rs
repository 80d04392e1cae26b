//! Reproducible action traces.
//!
//! Every primitive event a campaign executes is appended to the trace of the
//! current app epoch (epochs reset when the app is reloaded after a crash).
//! Oracle checks ride on the second rotation of the double-rotation pair
//! that precedes them, so a recorded trace carries everything needed to
//! replay the finding: concrete payloads included, no generator state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{Event, EventKind};
use crate::oracles::{OracleStrategy, VerdictOutcome};

/// Oracle outcome recorded on a trace step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub outcome: VerdictOutcome,
    pub fired: BTreeSet<OracleStrategy>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Campaign-global action index (strictly increasing).
    pub index: u64,
    pub event: Event,
    /// Abstract state reached after the event; None when the event crashed.
    pub state_id: Option<u64>,
    /// True when the event crashed the app.
    pub crashed: bool,
    /// Set on the second rotation of a data-loss check pair.
    pub verdict: Option<TraceVerdict>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTrace {
    pub steps: Vec<TraceStep>,
}

impl ActionTrace {
    pub fn push(&mut self, step: TraceStep) {
        debug_assert!(
            self.steps.last().map_or(true, |s| s.index < step.index),
            "step indices must be strictly increasing"
        );
        self.steps.push(step);
    }

    /// Attaches a verdict to the most recent step, which must be the second
    /// rotation of a double-rotation pair.
    pub fn attach_verdict(&mut self, verdict: TraceVerdict) {
        let step = self.steps.last_mut().expect("verdict needs a step");
        debug_assert_eq!(step.event.kind, EventKind::Rotate);
        step.verdict = Some(verdict);
    }

    /// Structural invariant: every verdict-bearing step is the second of a
    /// consecutive ROTATE, ROTATE pair.
    pub fn check_verdict_placement(&self) -> bool {
        self.steps.iter().enumerate().all(|(i, step)| {
            step.verdict.is_none()
                || (step.event.kind == EventKind::Rotate
                    && i > 0
                    && self.steps[i - 1].event.kind == EventKind::Rotate)
        })
    }
}
