//! Activity lifecycle states and the legal transition graph.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lifecycle phase of an activity. Transitions follow the lifecycle graph
/// only: Created -> Started -> Resumed -> Paused -> Stopped -> Destroyed,
/// plus the restart edge Stopped -> Started and re-create
/// Destroyed -> Created.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifecycleState {
    Created,
    Started,
    Resumed,
    Paused,
    Stopped,
    Destroyed,
}

#[derive(Debug, Error)]
#[error("illegal lifecycle transition {from:?} -> {to:?}")]
pub struct LifecycleError {
    pub from: LifecycleState,
    pub to: LifecycleState,
}

impl LifecycleState {
    pub fn transition(self, to: LifecycleState) -> Result<LifecycleState, LifecycleError> {
        use LifecycleState::*;
        let ok = matches!(
            (self, to),
            (Created, Started)
                | (Started, Resumed)
                | (Resumed, Paused)
                | (Paused, Stopped)
                | (Stopped, Destroyed)
                | (Stopped, Started)
                | (Destroyed, Created)
        );
        if ok {
            Ok(to)
        } else {
            Err(LifecycleError { from: self, to })
        }
    }
}

/// Lifecycle bookkeeping entries logged by the instance; tests use the log
/// to check save-before-destroy / restore-after-create ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LifecycleEvent {
    Moved { activity: String, to: LifecycleState },
    Saved { activity: String },
    Restored { activity: String },
}
