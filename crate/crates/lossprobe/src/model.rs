//! Enabledness abstraction and the incrementally-built GUI model.
//!
//! The model is a non-deterministic finite automaton over abstract states.
//! An abstract state is the pair (activity name, set of enabled event
//! identities); concrete widget values are deliberately ignored so the state
//! space does not explode over input payloads, while still separating
//! screens of the same activity that enable different behavior.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sim::state::ConcreteState;

/// GUI/system action kinds. `DlrProbabilistic` is a selection marker for the
/// probabilistic data-loss-revealing action; it is never applied to a driver
/// and never enters the model alphabet.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum EventKind {
    Touch,
    LongTouch,
    SetText,
    Key,
    Scroll,
    Rotate,
    DlrProbabilistic,
}

pub const KEY_BACK: &str = "BACK";
pub const KEY_HOME: &str = "HOME";

/// A concrete action: kind, optional widget locator, optional payload
/// (the text for `SetText`, the key name for `Key`).
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Event {
    pub kind: EventKind,
    pub locator: Option<String>,
    pub payload: Option<String>,
}

/// Model identity of an event: the `SetText` payload is excluded so filling
/// a field with different strings is one event; key names are kept because
/// BACK and HOME have different behavioral consequences.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct EventId {
    pub kind: EventKind,
    pub locator: Option<String>,
    pub key: Option<String>,
}

impl Event {
    pub fn touch(locator: impl Into<String>) -> Self {
        Self {
            kind: EventKind::Touch,
            locator: Some(locator.into()),
            payload: None,
        }
    }

    pub fn long_touch(locator: impl Into<String>) -> Self {
        Self {
            kind: EventKind::LongTouch,
            locator: Some(locator.into()),
            payload: None,
        }
    }

    pub fn set_text(locator: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            kind: EventKind::SetText,
            locator: Some(locator.into()),
            payload: Some(text.into()),
        }
    }

    /// Enabled-set form of a set-text action, before a payload is chosen.
    pub fn set_text_slot(locator: impl Into<String>) -> Self {
        Self {
            kind: EventKind::SetText,
            locator: Some(locator.into()),
            payload: None,
        }
    }

    pub fn key_back() -> Self {
        Self {
            kind: EventKind::Key,
            locator: None,
            payload: Some(KEY_BACK.to_string()),
        }
    }

    pub fn key_home() -> Self {
        Self {
            kind: EventKind::Key,
            locator: None,
            payload: Some(KEY_HOME.to_string()),
        }
    }

    pub fn scroll() -> Self {
        Self {
            kind: EventKind::Scroll,
            locator: None,
            payload: None,
        }
    }

    pub fn rotate() -> Self {
        Self {
            kind: EventKind::Rotate,
            locator: None,
            payload: None,
        }
    }

    pub fn dlr_probabilistic() -> Self {
        Self {
            kind: EventKind::DlrProbabilistic,
            locator: None,
            payload: None,
        }
    }

    pub fn identity(&self) -> EventId {
        EventId {
            kind: self.kind,
            locator: self.locator.clone(),
            key: match self.kind {
                EventKind::Key => self.payload.clone(),
                _ => None,
            },
        }
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Touch => "touch",
            EventKind::LongTouch => "longtouch",
            EventKind::SetText => "settext",
            EventKind::Key => "key",
            EventKind::Scroll => "scroll",
            EventKind::Rotate => "rotate",
            EventKind::DlrProbabilistic => "dlr",
        };
        match (&self.locator, &self.key) {
            (Some(loc), _) => write!(f, "{kind}@{loc}"),
            (None, Some(key)) => write!(f, "{kind}@{key}"),
            (None, None) => write!(f, "{kind}"),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.payload, self.kind) {
            (Some(p), EventKind::SetText) => write!(f, "{}={p:?}", self.identity()),
            _ => write!(f, "{}", self.identity()),
        }
    }
}

/// Abstract state: activity name plus the enabled event identities.
/// Equality and hashing are exactly structural.
#[derive(
    Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct AbstractState {
    pub activity: String,
    pub enabled: BTreeSet<EventId>,
}

/// Computes the abstraction of a concrete screen. Concrete text values never
/// affect the result unless they change the enabled set (they do not in the
/// simulated runtime; a real driver could expose value-gated actions).
pub fn abstract_state(state: &ConcreteState) -> AbstractState {
    AbstractState {
        activity: state.activity_name.clone(),
        enabled: crate::sim::enabled_events(state)
            .iter()
            .map(Event::identity)
            .collect(),
    }
}

pub type StateId = u64;

/// The GUI model: a non-deterministic finite automaton accumulated over a
/// campaign. State ids are assigned in discovery order, which keeps every
/// export deterministic for a fixed campaign.
#[derive(Debug, Clone)]
pub struct GuiModel {
    states: Vec<AbstractState>,
    index: BTreeMap<AbstractState, StateId>,
    alphabet: BTreeSet<EventId>,
    initial: StateId,
    delta: BTreeMap<(StateId, EventId), BTreeSet<StateId>>,
    executed: BTreeMap<StateId, BTreeSet<EventId>>,
}

impl GuiModel {
    pub fn new(initial: AbstractState) -> Self {
        let mut model = Self {
            states: Vec::new(),
            index: BTreeMap::new(),
            alphabet: BTreeSet::new(),
            initial: 0,
            delta: BTreeMap::new(),
            executed: BTreeMap::new(),
        };
        model.initial = model.intern(initial);
        model
    }

    fn intern(&mut self, state: AbstractState) -> StateId {
        if let Some(&id) = self.index.get(&state) {
            return id;
        }
        let id = self.states.len() as StateId;
        self.index.insert(state.clone(), id);
        self.states.push(state);
        id
    }

    pub fn initial_id(&self) -> StateId {
        self.initial
    }

    pub fn state(&self, id: StateId) -> Option<&AbstractState> {
        self.states.get(id as usize)
    }

    pub fn id_of(&self, state: &AbstractState) -> Option<StateId> {
        self.index.get(state).copied()
    }

    pub fn states(&self) -> &[AbstractState] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &BTreeSet<EventId> {
        &self.alphabet
    }

    /// True iff the state has never been inserted into the model.
    pub fn is_new_state(&self, state: &AbstractState) -> bool {
        !self.index.contains_key(state)
    }

    /// Records one observed transition. Unknown states are inserted, the
    /// event enters the alphabet, and the target is added to delta(from, e).
    /// The executed set only admits events that are enabled in `from`, so
    /// rotations recorded from data-loss-revealing actions do not pollute
    /// the unexecuted-action bookkeeping. Idempotent for repeated triples.
    pub fn record_transition(&mut self, from: &AbstractState, event: &Event, to: &AbstractState) -> StateId {
        let from_id = self.intern(from.clone());
        let to_id = self.intern(to.clone());
        let id = event.identity();
        self.alphabet.insert(id.clone());
        self.delta
            .entry((from_id, id.clone()))
            .or_default()
            .insert(to_id);
        if from.enabled.contains(&id) {
            self.executed.entry(from_id).or_default().insert(id);
        }
        to_id
    }

    /// Ensures a state is present without recording any transition.
    pub fn observe_state(&mut self, state: &AbstractState) -> StateId {
        self.intern(state.clone())
    }

    pub fn successors(&self, from: StateId, event: &EventId) -> Option<&BTreeSet<StateId>> {
        self.delta.get(&(from, event.clone()))
    }

    /// Enabled events of `q` that have not been executed there yet. For a
    /// state not in the model, the full enabled set is returned.
    pub fn unexecuted_events(&self, q: &AbstractState) -> BTreeSet<EventId> {
        match self.index.get(q) {
            None => q.enabled.clone(),
            Some(id) => match self.executed.get(id) {
                None => q.enabled.clone(),
                Some(done) => q.enabled.difference(done).cloned().collect(),
            },
        }
    }

    pub fn executed_events(&self, q: &AbstractState) -> BTreeSet<EventId> {
        self.index
            .get(q)
            .and_then(|id| self.executed.get(id))
            .cloned()
            .unwrap_or_default()
    }

    /// All recorded transitions as (from, event, to) triples in
    /// deterministic order.
    pub fn transitions(&self) -> Vec<(StateId, EventId, StateId)> {
        let mut out = Vec::new();
        for ((from, event), targets) in &self.delta {
            for to in targets {
                out.push((*from, event.clone(), *to));
            }
        }
        out
    }

    /// Checks the automaton's structural invariants. Exercised by property
    /// tests; cheap enough to call after arbitrary mutation sequences.
    pub fn check_well_formed(&self) -> Result<(), String> {
        if self.states.is_empty() {
            return Err("no states".into());
        }
        if self.initial as usize >= self.states.len() {
            return Err("initial state out of range".into());
        }
        for ((from, event), targets) in &self.delta {
            if *from as usize >= self.states.len() {
                return Err(format!("delta source {from} not a state"));
            }
            if !self.alphabet.contains(event) {
                return Err(format!("delta event {event} not in alphabet"));
            }
            for to in targets {
                if *to as usize >= self.states.len() {
                    return Err(format!("delta target {to} not a state"));
                }
            }
        }
        for (id, done) in &self.executed {
            let Some(state) = self.states.get(*id as usize) else {
                return Err(format!("executed entry for unknown state {id}"));
            };
            if !done.is_subset(&state.enabled) {
                return Err(format!("executed set of state {id} not within enabled set"));
            }
        }
        Ok(())
    }

    /// Plain-text export: a state table (id, activity, enabled set) followed
    /// by one line per transition.
    pub fn export_text(&self) -> String {
        let mut out = String::from("# states: id\tactivity\tenabled\n");
        for (id, state) in self.states.iter().enumerate() {
            let enabled: Vec<String> = state.enabled.iter().map(|e| e.to_string()).collect();
            out.push_str(&format!("{id}\t{}\t[{}]\n", state.activity, enabled.join(", ")));
        }
        out.push_str("# transitions: from\tevent\tto\n");
        for (from, event, to) in self.transitions() {
            out.push_str(&format!("{from}\t{event}\t{to}\n"));
        }
        out
    }

    /// DOT-compatible export of the same graph.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph gui_model {\n  rankdir=LR;\n");
        for (id, state) in self.states.iter().enumerate() {
            let shape = if id as StateId == self.initial {
                "doublecircle"
            } else {
                "circle"
            };
            out.push_str(&format!(
                "  q{id} [shape={shape}, label=\"q{id}\\n{}\"];\n",
                state.activity
            ));
        }
        for (from, event, to) in self.transitions() {
            out.push_str(&format!("  q{from} -> q{to} [label=\"{event}\"];\n"));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(activity: &str, events: &[Event]) -> AbstractState {
        AbstractState {
            activity: activity.to_string(),
            enabled: events.iter().map(Event::identity).collect(),
        }
    }

    #[test]
    fn set_text_payload_excluded_from_identity() {
        let a = Event::set_text("0/1", "hello");
        let b = Event::set_text("0/1", "other");
        assert_eq!(a.identity(), b.identity());
        assert_ne!(a, b);
    }

    #[test]
    fn key_names_are_distinct_identities() {
        assert_ne!(Event::key_back().identity(), Event::key_home().identity());
    }

    #[test]
    fn record_transition_inserts_and_is_idempotent() {
        let q0 = state("Main", &[Event::touch("b"), Event::key_back(), Event::key_home()]);
        let q1 = state("Detail", &[Event::key_back(), Event::key_home()]);
        let mut model = GuiModel::new(q0.clone());
        model.record_transition(&q0, &Event::touch("b"), &q1);
        assert_eq!(model.state_count(), 2);
        assert_eq!(
            model.successors(0, &Event::touch("b").identity()).unwrap().len(),
            1
        );
        let before = model.transitions();
        model.record_transition(&q0, &Event::touch("b"), &q1);
        assert_eq!(model.transitions(), before);
        assert_eq!(model.state_count(), 2);
    }

    #[test]
    fn nondeterminism_is_kept() {
        let q0 = state("Main", &[Event::touch("b")]);
        let q1 = state("Detail", &[Event::key_back()]);
        let q2 = state("Detail", &[Event::key_back(), Event::key_home()]);
        let mut model = GuiModel::new(q0.clone());
        model.record_transition(&q0, &Event::touch("b"), &q1);
        model.record_transition(&q0, &Event::touch("b"), &q2);
        assert_eq!(
            model.successors(0, &Event::touch("b").identity()).unwrap().len(),
            2
        );
        model.check_well_formed().unwrap();
    }

    #[test]
    fn unexecuted_is_set_difference() {
        let e1 = Event::touch("a");
        let e2 = Event::touch("b");
        let e3 = Event::touch("c");
        let q = state("Main", &[e1.clone(), e2.clone(), e3.clone()]);
        let mut model = GuiModel::new(q.clone());
        model.record_transition(&q, &e2, &q);
        let rest = model.unexecuted_events(&q);
        assert_eq!(rest, [e1.identity(), e3.identity()].into_iter().collect());
    }

    #[test]
    fn fresh_state_has_all_events_unexecuted_and_is_new() {
        let q0 = state("Main", &[Event::touch("a")]);
        let fresh = state("Other", &[Event::touch("x"), Event::touch("y")]);
        let model = GuiModel::new(q0);
        assert!(model.is_new_state(&fresh));
        assert_eq!(model.unexecuted_events(&fresh), fresh.enabled);
    }

    #[test]
    fn fully_executed_state_has_empty_unexecuted() {
        let e = Event::touch("a");
        let q = state("Main", &[e.clone()]);
        let mut model = GuiModel::new(q.clone());
        model.record_transition(&q, &e, &q);
        assert!(model.unexecuted_events(&q).is_empty());
    }

    #[test]
    fn rotations_do_not_enter_executed_sets() {
        let q = state("Main", &[Event::touch("a")]);
        let mut model = GuiModel::new(q.clone());
        model.record_transition(&q, &Event::rotate(), &q);
        assert!(model.executed_events(&q).is_empty());
        assert!(model.alphabet().contains(&Event::rotate().identity()));
        model.check_well_formed().unwrap();
    }

    #[test]
    fn structurally_different_enabled_sets_are_new_states() {
        let q = state("Main", &[Event::touch("a")]);
        let mut bigger = q.clone();
        bigger.enabled.insert(Event::touch("b").identity());
        let model = GuiModel::new(q);
        assert!(model.is_new_state(&bigger));
    }

    #[test]
    fn exports_mention_states_and_transitions() {
        let q0 = state("Main", &[Event::touch("b")]);
        let q1 = state("Detail", &[Event::key_back()]);
        let mut model = GuiModel::new(q0.clone());
        model.record_transition(&q0, &Event::touch("b"), &q1);
        let text = model.export_text();
        assert!(text.contains("Main"));
        assert!(text.contains("touch@b"));
        let dot = model.export_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("q0 -> q1"));
    }
}

#[cfg(test)]
mod abstraction_tests {
    use super::*;
    use crate::sim::spec::{Effect, EventPattern, PatternKind, TransitionSpec, WidgetKind};
    use crate::sim::testutil::*;
    use crate::sim::AppInstance;
    use std::sync::Arc;

    #[test]
    fn concrete_text_values_do_not_change_the_abstraction() {
        let mut app = minimal_app();
        app.activities[0].widget_tree.children.push(edit_widget("field"));
        let mut a = AppInstance::load(Arc::new(app.clone()), 0).unwrap();
        let mut b = AppInstance::load(Arc::new(app), 0).unwrap();
        a.apply_event(&Event::set_text("field", "a")).unwrap();
        b.apply_event(&Event::set_text("field", "bbbb")).unwrap();
        assert_eq!(
            abstract_state(&a.concrete_state()),
            abstract_state(&b.concrete_state())
        );
    }

    #[test]
    fn open_dialog_changes_the_abstraction() {
        let mut app = minimal_app();
        let mut dialog = widget(WidgetKind::Dialog, (100, 80), (20, 40));
        let mut ok = widget(WidgetKind::Button, (40, 20), (30, 60));
        ok.resource_id = Some("ok".into());
        ok.flags.clickable = true;
        dialog.children.push(ok);
        app.activities[0].dialogs.push(dialog);
        app.activities[0].transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: "btn".into(),
            },
            effects: vec![Effect::ShowDialog { dialog: "d0".into() }],
        });
        let mut instance = AppInstance::load(Arc::new(app), 0).unwrap();
        let closed = abstract_state(&instance.concrete_state());
        instance.apply_event(&Event::touch("btn")).unwrap();
        let open = abstract_state(&instance.concrete_state());
        assert_ne!(closed, open);
        assert_eq!(open.activity, closed.activity);
    }

    #[test]
    fn initial_screen_is_the_initial_model_state() {
        let instance = AppInstance::load(Arc::new(minimal_app()), 0).unwrap();
        let q0 = abstract_state(&instance.concrete_state());
        let model = GuiModel::new(q0.clone());
        assert!(!model.is_new_state(&q0));
        assert_eq!(model.state(model.initial_id()), Some(&q0));
    }

    #[test]
    fn abstraction_is_idempotent_on_the_same_dump() {
        let instance = AppInstance::load(Arc::new(minimal_app()), 0).unwrap();
        let state = instance.concrete_state();
        assert_eq!(abstract_state(&state), abstract_state(&state));
    }
}
