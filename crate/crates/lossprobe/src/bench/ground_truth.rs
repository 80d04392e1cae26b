//! Brute-force ground truth for a spec: exhaustive reachability and
//! per-fault detectability labels.
//!
//! Reachability runs a breadth-first search over *concrete* instance
//! fingerprints with the enabled events plus rotation as the alphabet, so
//! states only reachable through fault side effects are included. Fault
//! labels are computed in isolation — every fault is evaluated on a spec
//! variant with all other faults stripped — by probing each reachable
//! concrete state of the fault's activity with a fill-in, capture, double
//! rotation, capture, compare sequence, one oracle strategy at a time.
//!
//! This evaluator is the independent oracle the rest of the test suite
//! checks the exploration engine against; it shares no code with the
//! campaign loop beyond the simulator itself.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explorer::{capture_settled, fill_in_events};
use crate::model::{abstract_state, AbstractState, Event};
use crate::oracles::{compare_properties, compare_snapshots, OracleError, OracleMode};
use crate::sim::spec::{AppSpec, SpecError};
use crate::sim::{enabled_events, AppInstance, Driver, SimDriver, SimError, StepOutcome};

/// Which oracle strategies can ever reveal a fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectableBy {
    SnapshotOnly,
    PropertyOnly,
    Both,
    Crash,
    Undetected,
}

#[derive(Debug, Clone, Copy)]
pub struct GroundTruthConfig {
    /// Bound on distinct concrete states per search before giving up.
    pub max_concrete_states: usize,
    /// Bound on distinct abstract states (corpus apps stay small so the
    /// evaluator always terminates quickly).
    pub max_abstract_states: usize,
    /// Seed for fill-in payloads. Any value yields the same abstract
    /// structure; fixed so labels are reproducible.
    pub fill_seed: u64,
}

impl Default for GroundTruthConfig {
    fn default() -> Self {
        Self {
            max_concrete_states: 20_000,
            max_abstract_states: 200,
            fill_seed: 0xf111_5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    /// All BFS-reachable abstract states (events plus rotation).
    pub abstract_states: BTreeSet<AbstractState>,
    /// Minimum number of activity changes from the initial activity.
    pub activity_hops: BTreeMap<String, u32>,
    /// Fault id -> label, each fault evaluated in isolation.
    pub fault_labels: BTreeMap<String, DetectableBy>,
}

#[derive(Debug, Error)]
pub enum GroundTruthError {
    #[error("state space too large: more than {bound} concrete states")]
    StateSpaceTooLarge { bound: usize },
    #[error("abstract state space too large: more than {bound} states")]
    AbstractSpaceTooLarge { bound: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Computes reachability over the full spec and a detectability label for
/// every injected fault.
pub fn evaluate_ground_truth(
    spec: &AppSpec,
    config: &GroundTruthConfig,
) -> Result<GroundTruth, GroundTruthError> {
    spec.validate()?;
    let faults: Vec<(String, String)> = spec
        .activities
        .iter()
        .flat_map(|a| {
            a.injected_faults
                .iter()
                .map(|f| (a.name.clone(), f.id_in(&a.name)))
        })
        .collect();

    // With a single fault the isolated variant equals the spec, so one walk
    // serves both reachability and labeling.
    if let [(activity, fault_id)] = faults.as_slice() {
        let walk = walk_states(spec, config, Some(activity))?;
        let label = label_from_walk(&walk, spec, fault_id, config)?;
        return Ok(GroundTruth {
            abstract_states: walk.abstract_states,
            activity_hops: walk.activity_hops,
            fault_labels: [(fault_id.clone(), label)].into_iter().collect(),
        });
    }

    let walk = walk_states(spec, config, None)?;
    let mut fault_labels = BTreeMap::new();
    for (activity, fault_id) in faults {
        let variant = isolate_fault(spec, &activity, &fault_id);
        let label = label_fault(&variant, &activity, &fault_id, config)?;
        fault_labels.insert(fault_id, label);
    }
    Ok(GroundTruth {
        abstract_states: walk.abstract_states,
        activity_hops: walk.activity_hops,
        fault_labels,
    })
}

/// Spec variant keeping only the named fault.
fn isolate_fault(spec: &AppSpec, activity: &str, fault_id: &str) -> AppSpec {
    let mut variant = spec.clone();
    for act in &mut variant.activities {
        if act.name == activity {
            act.injected_faults
                .retain(|f| f.id_in(activity) == fault_id);
        } else {
            act.injected_faults.clear();
        }
    }
    variant
}

struct Walk {
    abstract_states: BTreeSet<AbstractState>,
    activity_hops: BTreeMap<String, u32>,
    /// Representative instances of the probe activity, deduplicated by the
    /// reduced probe fingerprint (only collected when a target is given).
    probe_nodes: Vec<AppInstance>,
    /// Crash fault ids observed while expanding edges.
    crashes: BTreeSet<String>,
}

struct WalkAccumulator<'a> {
    abstract_states: BTreeSet<AbstractState>,
    activity_hops: BTreeMap<String, u32>,
    probe_nodes: Vec<AppInstance>,
    probe_seen: BTreeSet<(u64, u64)>,
    probe_activity: Option<&'a str>,
}

impl WalkAccumulator<'_> {
    fn record(&mut self, instance: &AppInstance, hops: u32) {
        self.abstract_states
            .insert(abstract_state(&instance.concrete_state()));
        let activity = instance.current_activity().to_string();
        self.activity_hops
            .entry(activity.clone())
            .and_modify(|h| *h = (*h).min(hops))
            .or_insert(hops);
        if self.probe_activity == Some(activity.as_str())
            && self.probe_seen.insert(instance.probe_digest())
        {
            self.probe_nodes.push(instance.clone());
        }
    }
}

/// BFS over concrete instance fingerprints. The alphabet is the enabled
/// event set of the current screen plus rotation.
fn walk_states(
    spec: &AppSpec,
    config: &GroundTruthConfig,
    probe_activity: Option<&str>,
) -> Result<Walk, GroundTruthError> {
    let arc = Arc::new(spec.clone());
    let initial = AppInstance::load(arc, config.fill_seed)?;

    let mut seen: BTreeSet<(u64, u64)> = BTreeSet::new();
    let mut acc = WalkAccumulator {
        abstract_states: BTreeSet::new(),
        activity_hops: BTreeMap::new(),
        probe_nodes: Vec::new(),
        probe_seen: BTreeSet::new(),
        probe_activity,
    };
    let mut crashes = BTreeSet::new();
    let mut queue: VecDeque<(AppInstance, u32)> = VecDeque::new();

    seen.insert(initial.state_digest());
    acc.record(&initial, 0);
    queue.push_back((initial, 0));

    while let Some((instance, hops)) = queue.pop_front() {
        let state = instance.concrete_state();
        let mut events: Vec<Event> = enabled_events(&state).into_iter().collect();
        events.push(Event::rotate());
        for event in events {
            let mut next = instance.clone();
            let event = materialize_set_text(event, config.fill_seed);
            match next.apply_enumerated_event(&event)? {
                StepOutcome::Crashed(record) => {
                    crashes.insert(record.fault_id);
                    continue;
                }
                StepOutcome::Ok => {}
            }
            if !seen.insert(next.state_digest()) {
                continue;
            }
            if seen.len() > config.max_concrete_states {
                return Err(GroundTruthError::StateSpaceTooLarge {
                    bound: config.max_concrete_states,
                });
            }
            let next_hops = hops
                + u32::from(next.current_activity() != instance.current_activity());
            acc.record(&next, next_hops);
            if acc.abstract_states.len() > config.max_abstract_states {
                return Err(GroundTruthError::AbstractSpaceTooLarge {
                    bound: config.max_abstract_states,
                });
            }
            queue.push_back((next, next_hops));
        }
    }

    Ok(Walk {
        abstract_states: acc.abstract_states,
        activity_hops: acc.activity_hops,
        probe_nodes: acc.probe_nodes,
        crashes,
    })
}

/// Walk payloads are a pure function of the locator so repeated set-text
/// edges converge to one filled state instead of oscillating variants.
fn materialize_set_text(event: Event, seed: u64) -> Event {
    use crate::model::EventKind;
    if event.kind != EventKind::SetText || event.payload.is_some() {
        return event;
    }
    let locator = event.locator.clone().expect("set-text carries a locator");
    Event::set_text(
        locator.clone(),
        crate::explorer::fill_value(&locator, seed, ""),
    )
}

/// Evaluates one isolated fault: walks the variant's state space and probes
/// every distinct concrete state of the fault's activity with fill-in,
/// capture, double rotation, capture, compare — each oracle strategy
/// separately.
fn label_fault(
    variant: &AppSpec,
    activity: &str,
    fault_id: &str,
    config: &GroundTruthConfig,
) -> Result<DetectableBy, GroundTruthError> {
    let walk = match walk_states(variant, config, Some(activity)) {
        Ok(walk) => walk,
        Err(GroundTruthError::Sim(SimError::StartCrash(record))) => {
            return Ok(if record.fault_id == fault_id {
                DetectableBy::Crash
            } else {
                DetectableBy::Undetected
            });
        }
        Err(e) => return Err(e),
    };
    label_from_walk(&walk, variant, fault_id, config)
}

fn label_from_walk(
    walk: &Walk,
    spec: &AppSpec,
    fault_id: &str,
    config: &GroundTruthConfig,
) -> Result<DetectableBy, GroundTruthError> {
    let arc = Arc::new(spec.clone());
    let mut snapshot_fires = false;
    let mut property_fires = false;
    let mut crash_fires = walk.crashes.contains(fault_id);

    for node in &walk.probe_nodes {
        let mut driver = SimDriver::from_instance(arc.clone(), node.clone());
        match probe(&mut driver, config.fill_seed)? {
            ProbeOutcome::Crashed(id) => crash_fires |= id == fault_id,
            ProbeOutcome::Fired {
                snapshot,
                property,
            } => {
                snapshot_fires |= snapshot;
                property_fires |= property;
            }
        }
        if snapshot_fires && property_fires {
            break;
        }
    }

    Ok(match (snapshot_fires, property_fires, crash_fires) {
        (true, true, _) => DetectableBy::Both,
        (true, false, _) => DetectableBy::SnapshotOnly,
        (false, true, _) => DetectableBy::PropertyOnly,
        (false, false, true) => DetectableBy::Crash,
        (false, false, false) => DetectableBy::Undetected,
    })
}

enum ProbeOutcome {
    Crashed(String),
    Fired { snapshot: bool, property: bool },
}

fn probe(driver: &mut SimDriver, fill_seed: u64) -> Result<ProbeOutcome, GroundTruthError> {
    let state = driver.concrete_state();
    for event in fill_in_events(&state, fill_seed) {
        let enabled = driver.enabled_events();
        if !enabled.iter().any(|e| e.identity() == event.identity()) {
            continue;
        }
        if let StepOutcome::Crashed(record) = driver.apply_event(&event)? {
            return Ok(ProbeOutcome::Crashed(record.fault_id));
        }
    }
    let before = capture_settled(driver, OracleMode::Both, 0)?;
    for _ in 0..2 {
        if let StepOutcome::Crashed(record) = driver.rotate()? {
            return Ok(ProbeOutcome::Crashed(record.fault_id));
        }
    }
    let after = capture_settled(driver, OracleMode::Both, 0)?;
    let vs = compare_snapshots(
        before.snapshot.as_ref().expect("mode captures snapshots"),
        after.snapshot.as_ref().expect("mode captures snapshots"),
    )?;
    let vp = compare_properties(
        before.tree.as_ref().expect("mode captures trees"),
        after.tree.as_ref().expect("mode captures trees"),
    );
    Ok(ProbeOutcome::Fired {
        snapshot: vs.failed(),
        property: vp.failed(),
    })
}
