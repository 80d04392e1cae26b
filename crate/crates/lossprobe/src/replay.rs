//! Trace replay: re-executes a recorded action trace against a fresh
//! instance and re-evaluates every oracle check, reporting whether the
//! recorded verdicts reproduce.
//!
//! Traces carry concrete payloads, so replay does not depend on the
//! generator state that produced them.

use thiserror::Error;

use crate::explorer::trace::{ActionTrace, TraceStep};
use crate::explorer::{capture_settled, compare_captures};
use crate::model::EventKind;
use crate::oracles::{OracleError, OracleMode};
use crate::sim::spec::AppSpec;
use crate::sim::{Driver, SimDriver, SimError, StepOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    /// Every recorded verdict (and crash) reproduced.
    Match,
    /// The trace executed but some verdict differed.
    Mismatch { step: u64, detail: String },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("trace diverged at step {step}: {detail}")]
    TraceDiverged { step: u64, detail: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub fn replay_trace(
    spec: &AppSpec,
    trace: &ActionTrace,
    mode: OracleMode,
    settle_retries: u32,
) -> Result<ReplayOutcome, ReplayError> {
    let mut driver = SimDriver::load(std::sync::Arc::new(spec.clone()), 0)?;
    replay_trace_with_driver(&mut driver, trace, mode, settle_retries)
}

pub fn replay_trace_with_driver(
    driver: &mut dyn Driver,
    trace: &ActionTrace,
    mode: OracleMode,
    settle_retries: u32,
) -> Result<ReplayOutcome, ReplayError> {
    let steps = &trace.steps;
    let mut i = 0usize;
    while i < steps.len() {
        let is_check_pair = i + 1 < steps.len()
            && steps[i].event.kind == EventKind::Rotate
            && steps[i + 1].event.kind == EventKind::Rotate
            && steps[i + 1].verdict.is_some();
        if is_check_pair {
            let before = capture_settled(driver, mode, settle_retries)?;
            for pair_step in [&steps[i], &steps[i + 1]] {
                if let Some(outcome) = apply_step(driver, pair_step)? {
                    return Ok(outcome);
                }
            }
            let after = capture_settled(driver, mode, settle_retries)?;
            let (_, _, combined) = compare_captures(&before, &after, mode)?;
            let recorded = steps[i + 1].verdict.as_ref().expect("checked above");
            if combined.outcome != recorded.outcome || combined.fired != recorded.fired {
                return Ok(ReplayOutcome::Mismatch {
                    step: steps[i + 1].index,
                    detail: format!(
                        "recorded {:?} fired {:?}, replay {:?} fired {:?}",
                        recorded.outcome, recorded.fired, combined.outcome, combined.fired
                    ),
                });
            }
            i += 2;
        } else {
            if let Some(outcome) = apply_step(driver, &steps[i])? {
                return Ok(outcome);
            }
            i += 1;
        }
    }
    Ok(ReplayOutcome::Match)
}

/// Applies one recorded step. Returns Some(outcome) when the replay is
/// decided at this step (a crash that matches or mismatches the record).
fn apply_step(
    driver: &mut dyn Driver,
    step: &TraceStep,
) -> Result<Option<ReplayOutcome>, ReplayError> {
    let outcome = if step.event.kind == EventKind::Rotate {
        driver.rotate()?
    } else {
        let identity = step.event.identity();
        let enabled = driver.enabled_events();
        if !enabled.iter().any(|e| e.identity() == identity) {
            return Err(ReplayError::TraceDiverged {
                step: step.index,
                detail: format!("event {} not enabled", step.event),
            });
        }
        driver.apply_event(&step.event)?
    };
    match (outcome, step.crashed) {
        (StepOutcome::Ok, false) => Ok(None),
        (StepOutcome::Crashed(_), true) => Ok(Some(ReplayOutcome::Match)),
        (StepOutcome::Crashed(record), false) => Ok(Some(ReplayOutcome::Mismatch {
            step: step.index,
            detail: format!("unrecorded crash: {} ({})", record.activity, record.fault_id),
        })),
        (StepOutcome::Ok, true) => Ok(Some(ReplayOutcome::Mismatch {
            step: step.index,
            detail: "recorded crash did not reproduce".into(),
        })),
    }
}
