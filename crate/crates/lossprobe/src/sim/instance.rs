//! The running app instance: lifecycle, save/restore, event dispatch and
//! fault injection.
//!
//! The runtime models a *correctly implemented* app by default: the complete
//! view state (widget texts, check states, open dialogs, scroll position)
//! survives stop-start cycles, and every variable with Saved/Restored policy
//! round-trips through the bundle. Data loss only ever enters through
//! non-default save/restore policies or injected faults, which is what makes
//! fault-free runs usable as a neutral baseline.
//!
//! Stop-start semantics are shared by rotations and the HOME key: HOME is
//! modeled as an immediate background/foreground cycle through the same
//! save/restore path, so one event suffices to exercise it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Event, EventKind, KEY_BACK, KEY_HOME};
use crate::sim::lifecycle::{LifecycleEvent, LifecycleState};
use crate::sim::spec::{
    corrupt_sentinel, wrong_value_sentinel, ActivitySpec, AppSpec, ArmingCondition,
    CompromisedOutcome, Effect, FaultPattern, FaultSpec, PatternKind, RestorePolicy, SavePolicy,
    SpecError, Value, WidgetKind,
};
use crate::sim::state::{Bundle, ConcreteState, ConcreteWidget, Orientation};

/// Evidence attached to a crash outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashRecord {
    pub activity: String,
    pub fault_id: String,
}

/// Result of applying one event to a live instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Ok,
    Crashed(CrashRecord),
}

impl StepOutcome {
    pub fn is_crash(&self) -> bool {
        matches!(self, StepOutcome::Crashed(_))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("start crash in {}: fault {}", .0.activity, .0.fault_id)]
    StartCrash(CrashRecord),
    #[error("event not enabled: {0}")]
    EventNotEnabled(String),
    #[error("set-text event without payload: {0}")]
    MissingPayload(String),
    #[error("instance is not live")]
    NotLive,
}

/// Per-activity mutable view state. Kept while the activity sits on the back
/// stack; discarded when the activity is finished via BACK.
#[derive(Debug, Clone)]
struct ActivityRuntime {
    tree: ConcreteWidget,
    dialog_stack: Vec<ConcreteWidget>,
    scroll_offset: u32,
    lifecycle: LifecycleState,
}

#[derive(Debug, Clone)]
struct FaultRuntime {
    crash_latched: bool,
    latency_left: u32,
    spent: bool,
}

/// A deterministic simulated app. For a fixed (spec, seed) and event
/// sequence, every observable output is identical across runs and platforms.
#[derive(Debug, Clone)]
pub struct AppInstance {
    spec: Arc<AppSpec>,
    seed: u64,
    variables: BTreeMap<String, Value>,
    runtimes: BTreeMap<String, ActivityRuntime>,
    fault_rt: BTreeMap<String, Vec<FaultRuntime>>,
    back_stack: Vec<String>,
    current: String,
    orientation: Orientation,
    frame: u64,
    crashed: Option<CrashRecord>,
    lifecycle_log: Vec<LifecycleEvent>,
    last_bundle: Option<Bundle>,
}

impl AppInstance {
    /// Loads and positions the app at its initial activity, resumed, in
    /// portrait, with all variables at their defaults.
    pub fn load(spec: Arc<AppSpec>, seed: u64) -> Result<Self, SimError> {
        spec.validate()?;
        let mut variables = BTreeMap::new();
        let mut fault_rt = BTreeMap::new();
        for activity in &spec.activities {
            for (name, default) in &activity.variables {
                variables.insert(name.clone(), default.clone());
            }
            fault_rt.insert(
                activity.name.clone(),
                activity
                    .injected_faults
                    .iter()
                    .map(|f| FaultRuntime {
                        crash_latched: false,
                        latency_left: f.latency,
                        spent: false,
                    })
                    .collect(),
            );
        }
        let mut instance = Self {
            current: spec.initial_activity.clone(),
            spec,
            seed,
            variables,
            runtimes: BTreeMap::new(),
            fault_rt,
            back_stack: Vec::new(),
            orientation: Orientation::Portrait,
            frame: 0,
            crashed: None,
            lifecycle_log: Vec::new(),
            last_bundle: None,
        };
        let initial = instance.current.clone();
        if let Some(record) = instance.create_runtime(&initial) {
            return Err(SimError::StartCrash(record));
        }
        Ok(instance)
    }

    pub fn spec(&self) -> &AppSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_live(&self) -> bool {
        self.crashed.is_none()
    }

    pub fn crash(&self) -> Option<&CrashRecord> {
        self.crashed.as_ref()
    }

    pub fn current_activity(&self) -> &str {
        &self.current
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn lifecycle_log(&self) -> &[LifecycleEvent] {
        &self.lifecycle_log
    }

    /// The bundle built by the most recent stop-start cycle.
    pub fn last_bundle(&self) -> Option<&Bundle> {
        self.last_bundle.as_ref()
    }

    /// Monotone frame counter; feeds the rendered header noise band.
    pub fn next_frame(&mut self) -> u64 {
        self.frame += 1;
        self.frame
    }

    /// Deterministic fingerprint of everything behaviorally relevant:
    /// foreground and back stack, variables, per-activity view state, fault
    /// countdowns and orientation. The frame counter is excluded. Two
    /// instances with equal fingerprints behave identically under any
    /// further event sequence (up to a 2^-128 collision chance, irrelevant
    /// at the state counts the bounds allow).
    pub fn state_digest(&self) -> (u64, u64) {
        let mut d = Digest::new();
        d.str(&self.current);
        for entry in &self.back_stack {
            d.str(entry);
        }
        d.u64(self.back_stack.len() as u64);
        for (name, value) in &self.variables {
            d.str(name);
            d.value(value);
        }
        for (name, rt) in &self.runtimes {
            d.str(name);
            d.runtime(rt);
        }
        for (name, faults) in &self.fault_rt {
            d.str(name);
            d.fault_runtimes(faults);
        }
        d.bool(self.orientation == Orientation::Landscape);
        d.finish()
    }

    /// Reduced fingerprint covering only what a capture/rotate/compare probe
    /// of the *current* activity can observe: its view state, the global
    /// variables, its fault countdowns and the orientation. Nodes that agree
    /// on this digest produce identical probe outcomes.
    pub fn probe_digest(&self) -> (u64, u64) {
        let mut d = Digest::new();
        d.str(&self.current);
        for (name, value) in &self.variables {
            d.str(name);
            d.value(value);
        }
        d.runtime(self.runtimes.get(&self.current).expect("current runtime"));
        d.fault_runtimes(self.fault_rt.get(&self.current).expect("fault runtime"));
        d.bool(self.orientation == Orientation::Landscape);
        d.finish()
    }

    fn activity_spec(&self, name: &str) -> &ActivitySpec {
        self.spec.activity(name).expect("activity validated at load")
    }

    fn body_height(&self) -> u32 {
        self.spec.screen.1 - self.spec.header_px() - self.spec.footer_px()
    }

    /// Default value of an app-global variable.
    fn default_of(&self, name: &str) -> Option<&Value> {
        self.spec
            .activities
            .iter()
            .find_map(|a| a.variables.get(name))
    }

    fn armed_now(&self, condition: &Option<ArmingCondition>) -> bool {
        match condition {
            None | Some(ArmingCondition::Always) => true,
            Some(ArmingCondition::AtLaunch) => false,
            Some(ArmingCondition::VarSet { name }) => {
                match (self.variables.get(name), self.default_of(name)) {
                    (Some(value), Some(default)) => value != default,
                    _ => false,
                }
            }
            Some(ArmingCondition::VarEquals { name, value }) => {
                self.variables.get(name) == Some(value)
            }
        }
    }

    /// Instantiates the runtime for an activity on first entry. Returns a
    /// crash record if an at-launch crash fault covers it.
    fn create_runtime(&mut self, name: &str) -> Option<CrashRecord> {
        let activity = self.activity_spec(name).clone();
        for fault in &activity.injected_faults {
            if fault.pattern == FaultPattern::Crash
                && fault.arming_condition == Some(ArmingCondition::AtLaunch)
            {
                let record = CrashRecord {
                    activity: name.to_string(),
                    fault_id: fault.id_in(name),
                };
                self.crashed = Some(record.clone());
                return Some(record);
            }
        }
        self.runtimes.insert(
            name.to_string(),
            ActivityRuntime {
                tree: ConcreteWidget::from_spec(&activity.widget_tree, "0"),
                dialog_stack: Vec::new(),
                scroll_offset: 0,
                lifecycle: LifecycleState::Created,
            },
        );
        self.log_move(name, LifecycleState::Created);
        self.move_lifecycle(name, LifecycleState::Started);
        self.move_lifecycle(name, LifecycleState::Resumed);
        None
    }

    fn log_move(&mut self, activity: &str, to: LifecycleState) {
        self.lifecycle_log.push(LifecycleEvent::Moved {
            activity: activity.to_string(),
            to,
        });
    }

    fn move_lifecycle(&mut self, activity: &str, to: LifecycleState) {
        let rt = self.runtimes.get_mut(activity).expect("runtime exists");
        rt.lifecycle = rt
            .lifecycle
            .transition(to)
            .expect("lifecycle transitions follow the graph");
        self.lifecycle_log.push(LifecycleEvent::Moved {
            activity: activity.to_string(),
            to,
        });
    }

    /// Builds the current concrete screen. Effective visibility (spec flag,
    /// parent visibility, scroll page) is baked into the returned tree so
    /// downstream consumers need no layout knowledge.
    pub fn concrete_state(&self) -> ConcreteState {
        let rt = self.runtimes.get(&self.current).expect("current runtime");
        let activity = self.activity_spec(&self.current);
        let body_h = self.body_height();
        let page = (
            u64::from(rt.scroll_offset) * u64::from(body_h),
            u64::from(rt.scroll_offset + 1) * u64::from(body_h),
        );

        let mut tree = rt.tree.clone();
        bake_visibility(&mut tree, true, Some(page));
        let mut dialogs = rt.dialog_stack.clone();
        for d in &mut dialogs {
            bake_visibility(d, true, None);
        }

        let valuation: BTreeMap<String, Value> = activity
            .variables
            .keys()
            .map(|name| {
                (
                    name.clone(),
                    self.variables.get(name).expect("declared variable").clone(),
                )
            })
            .collect();

        ConcreteState {
            activity_name: self.current.clone(),
            widget_tree: tree,
            variable_valuation: valuation,
            dialog_stack: dialogs,
            scroll_offset: rt.scroll_offset,
            scroll_extent: activity.scroll_extent,
            orientation: self.orientation,
        }
    }

    /// Applies one GUI/system event. Rotations are accepted here as well so
    /// recorded traces replay through a single entry point.
    pub fn apply_event(&mut self, event: &Event) -> Result<StepOutcome, SimError> {
        self.apply_event_impl(event, true)
    }

    /// Like [`apply_event`](Self::apply_event) but without the enabledness
    /// precondition check. For callers that already enumerated the event
    /// from the current screen (the exhaustive ground-truth walk applies
    /// millions of such edges; the check re-clones the widget tree).
    pub fn apply_enumerated_event(&mut self, event: &Event) -> Result<StepOutcome, SimError> {
        self.apply_event_impl(event, false)
    }

    fn apply_event_impl(
        &mut self,
        event: &Event,
        check_enabled: bool,
    ) -> Result<StepOutcome, SimError> {
        if !self.is_live() {
            return Err(SimError::NotLive);
        }
        if event.kind == EventKind::Rotate {
            return Ok(self.rotate_inner());
        }
        if event.kind == EventKind::DlrProbabilistic {
            return Err(SimError::EventNotEnabled(event.to_string()));
        }
        if check_enabled {
            let state = self.concrete_state();
            let enabled = crate::sim::enabled_events(&state);
            let identity = event.identity();
            if !enabled.iter().any(|e| e.identity() == identity) {
                return Err(SimError::EventNotEnabled(event.to_string()));
            }
        }
        if let Some(record) = self.fire_latched_crash() {
            return Ok(StepOutcome::Crashed(record));
        }

        match event.kind {
            EventKind::Touch | EventKind::LongTouch => {
                let locator = event.locator.clone().expect("touch carries a locator");
                if event.kind == EventKind::Touch {
                    if let Some(widget) = self.find_widget_mut(&locator) {
                        if widget.kind == WidgetKind::CheckBox {
                            widget.checked = !widget.checked;
                        }
                    }
                }
                let wanted = match event.kind {
                    EventKind::Touch => PatternKind::Touch,
                    _ => PatternKind::LongTouch,
                };
                let transitions: Vec<Vec<Effect>> = self
                    .activity_spec(&self.current)
                    .transitions
                    .iter()
                    .filter(|t| t.on.kind == wanted && t.on.locator == locator)
                    .map(|t| t.effects.clone())
                    .collect();
                for effects in transitions {
                    for effect in effects {
                        if let Some(record) = self.apply_effect(&effect) {
                            return Ok(StepOutcome::Crashed(record));
                        }
                    }
                }
            }
            EventKind::SetText => {
                let locator = event.locator.clone().expect("set-text carries a locator");
                let text = event
                    .payload
                    .clone()
                    .ok_or_else(|| SimError::MissingPayload(locator.clone()))?;
                if let Some(widget) = self.find_widget_mut(&locator) {
                    widget.text = text;
                }
            }
            EventKind::Scroll => {
                let extent = self.activity_spec(&self.current).scroll_extent;
                let rt = self.runtimes.get_mut(&self.current).expect("runtime");
                rt.scroll_offset = (rt.scroll_offset + 1) % (extent + 1);
            }
            EventKind::Key => match event.payload.as_deref() {
                Some(KEY_BACK) => {
                    let rt = self.runtimes.get_mut(&self.current).expect("runtime");
                    if rt.dialog_stack.pop().is_none() {
                        self.go_back();
                    }
                }
                Some(KEY_HOME) => {
                    if let Some(record) = self.stop_start() {
                        return Ok(StepOutcome::Crashed(record));
                    }
                }
                other => {
                    return Err(SimError::EventNotEnabled(format!("key {other:?}")));
                }
            },
            EventKind::Rotate | EventKind::DlrProbabilistic => unreachable!("handled above"),
        }
        Ok(StepOutcome::Ok)
    }

    /// Toggles the orientation and runs a full stop-start cycle of the
    /// foreground activity: save, destroy, recreate, restore, faults.
    pub fn rotate(&mut self) -> Result<StepOutcome, SimError> {
        if !self.is_live() {
            return Err(SimError::NotLive);
        }
        Ok(self.rotate_inner())
    }

    fn rotate_inner(&mut self) -> StepOutcome {
        if let Some(record) = self.fire_latched_crash() {
            return StepOutcome::Crashed(record);
        }
        self.orientation = self.orientation.toggled();
        match self.stop_start() {
            Some(record) => StepOutcome::Crashed(record),
            None => StepOutcome::Ok,
        }
    }

    /// A latched crash fault kills the app on the next event it handles.
    fn fire_latched_crash(&mut self) -> Option<CrashRecord> {
        let activity = self.activity_spec(&self.current).clone();
        let runtimes = self.fault_rt.get_mut(&self.current).expect("fault runtime");
        for (fault, rt) in activity.injected_faults.iter().zip(runtimes.iter_mut()) {
            if fault.pattern == FaultPattern::Crash && rt.crash_latched {
                let record = CrashRecord {
                    activity: self.current.clone(),
                    fault_id: fault.id_in(&self.current),
                };
                self.crashed = Some(record.clone());
                return Some(record);
            }
        }
        None
    }

    fn find_widget_mut(&mut self, locator: &str) -> Option<&mut ConcreteWidget> {
        let rt = self.runtimes.get_mut(&self.current)?;
        if let Some(dialog) = rt.dialog_stack.last_mut() {
            if let Some(w) = dialog.find_mut(locator) {
                return Some(w);
            }
        }
        rt.tree.find_mut(locator)
    }

    fn apply_effect(&mut self, effect: &Effect) -> Option<CrashRecord> {
        match effect {
            Effect::NavigateTo(target) => return self.navigate_to(target.clone()),
            Effect::NavigateBack => self.go_back(),
            Effect::SetVariable { name, value } => {
                self.variables.insert(name.clone(), value.clone());
            }
            Effect::ShowDialog { dialog } => self.show_dialog(dialog),
            Effect::DismissDialog => {
                let rt = self.runtimes.get_mut(&self.current).expect("runtime");
                rt.dialog_stack.pop();
            }
        }
        None
    }

    fn show_dialog(&mut self, dialog: &str) {
        let activity = self.activity_spec(&self.current).clone();
        let Some((index, template)) = activity.dialog_by_locator(dialog) else {
            return;
        };
        let instantiated = ConcreteWidget::from_spec(template, &format!("d{index}"));
        let rt = self.runtimes.get_mut(&self.current).expect("runtime");
        let already_open = rt.dialog_stack.iter().any(|d| d.locator == instantiated.locator);
        if !already_open {
            rt.dialog_stack.push(instantiated);
        }
    }

    fn navigate_to(&mut self, target: String) -> Option<CrashRecord> {
        if target == self.current {
            return None;
        }
        let leaving = self.current.clone();
        self.move_lifecycle(&leaving, LifecycleState::Paused);
        self.move_lifecycle(&leaving, LifecycleState::Stopped);
        self.back_stack.push(leaving);
        self.current = target.clone();
        if self.runtimes.contains_key(&target) {
            self.move_lifecycle(&target, LifecycleState::Started);
            self.move_lifecycle(&target, LifecycleState::Resumed);
            None
        } else {
            self.create_runtime(&target)
        }
    }

    /// BACK at the activity level finishes (destroys) the current activity;
    /// its view state is discarded and rebuilt fresh on a later visit.
    fn go_back(&mut self) {
        let Some(previous) = self.back_stack.pop() else {
            return;
        };
        let leaving = self.current.clone();
        self.move_lifecycle(&leaving, LifecycleState::Paused);
        self.move_lifecycle(&leaving, LifecycleState::Stopped);
        self.move_lifecycle(&leaving, LifecycleState::Destroyed);
        self.runtimes.remove(&leaving);
        self.current = previous.clone();
        self.move_lifecycle(&previous, LifecycleState::Started);
        self.move_lifecycle(&previous, LifecycleState::Resumed);
    }

    /// One save -> destroy -> recreate -> restore cycle of the foreground
    /// activity. Injected faults fire during the restore phase, after the
    /// bundle has been re-applied, so a faulty restore has the last word.
    fn stop_start(&mut self) -> Option<CrashRecord> {
        let name = self.current.clone();
        let activity = self.activity_spec(&name).clone();

        // Save after pausing, then tear down.
        self.move_lifecycle(&name, LifecycleState::Paused);
        let bundle = self.build_bundle(&activity);
        self.lifecycle_log.push(LifecycleEvent::Saved {
            activity: name.clone(),
        });
        self.move_lifecycle(&name, LifecycleState::Stopped);
        self.move_lifecycle(&name, LifecycleState::Destroyed);

        // Recreate. The view state carries over: a correct app restores
        // everything the user could observe.
        self.move_lifecycle(&name, LifecycleState::Created);

        // Variable restore per policy.
        for (var, default) in &activity.variables {
            let restored = match activity.restore_policy_of(var) {
                RestorePolicy::Restored => bundle
                    .get(var)
                    .cloned()
                    .unwrap_or_else(|| default.clone()),
                RestorePolicy::Defaulted => default.clone(),
                RestorePolicy::WrongValue => wrong_value_sentinel(var, default),
            };
            self.variables.insert(var.clone(), restored);
        }

        // Auto-restore of widget text keyed by resource id.
        {
            let rt = self.runtimes.get_mut(&name).expect("runtime");
            restore_view_text(&mut rt.tree, &bundle);
            for dialog in &mut rt.dialog_stack {
                restore_view_text(dialog, &bundle);
            }
        }
        self.lifecycle_log.push(LifecycleEvent::Restored {
            activity: name.clone(),
        });
        self.last_bundle = Some(bundle);

        let crash = self.fire_stop_start_faults(&name, &activity);

        if crash.is_none() {
            self.move_lifecycle(&name, LifecycleState::Started);
            self.move_lifecycle(&name, LifecycleState::Resumed);
        }
        crash
    }

    fn fire_stop_start_faults(
        &mut self,
        name: &str,
        activity: &ActivitySpec,
    ) -> Option<CrashRecord> {
        for (index, fault) in activity.injected_faults.iter().enumerate() {
            if !self.armed_now(&fault.arming_condition) {
                continue;
            }
            match fault.pattern {
                FaultPattern::Crash => {
                    let rt = &mut self.fault_rt.get_mut(name).expect("fault runtime")[index];
                    rt.crash_latched = true;
                }
                FaultPattern::DestroyedElement => self.destroy_element(name, &fault.target),
                FaultPattern::PhantomElement => self.show_dialog(&fault.target),
                FaultPattern::ModifiedValue => self.modify_value(name, fault),
                FaultPattern::CompromisedState => {
                    let rt = &mut self.fault_rt.get_mut(name).expect("fault runtime")[index];
                    if rt.spent {
                        continue;
                    }
                    rt.latency_left = rt.latency_left.saturating_sub(1);
                    if rt.latency_left > 0 {
                        continue;
                    }
                    rt.spent = true;
                    match fault.outcome.unwrap_or(CompromisedOutcome::Crash) {
                        CompromisedOutcome::Crash => {
                            let record = CrashRecord {
                                activity: name.to_string(),
                                fault_id: fault.id_in(name),
                            };
                            self.crashed = Some(record.clone());
                            return Some(record);
                        }
                        CompromisedOutcome::Corrupt => {
                            let default = self
                                .default_of(&fault.target)
                                .expect("validated variable")
                                .clone();
                            self.variables.insert(
                                fault.target.clone(),
                                corrupt_sentinel(&fault.target, &default),
                            );
                        }
                    }
                }
            }
        }
        None
    }

    fn destroy_element(&mut self, name: &str, target: &str) {
        let rt = self.runtimes.get_mut(name).expect("runtime");
        if let Some(pos) = rt.dialog_stack.iter().position(|d| d.locator == target) {
            rt.dialog_stack.remove(pos);
            return;
        }
        if !rt.tree.remove_descendant(target) {
            for dialog in &mut rt.dialog_stack {
                if dialog.remove_descendant(target) {
                    return;
                }
            }
        }
    }

    fn modify_value(&mut self, name: &str, fault: &FaultSpec) {
        let activity = self.activity_spec(name).clone();
        let defaults: BTreeMap<String, (String, bool)> = activity
            .tree_locators()
            .into_iter()
            .map(|(loc, _, w)| (loc, (w.default_text.clone(), false)))
            .collect();
        let rt = self.runtimes.get_mut(name).expect("runtime");
        let widget = rt
            .tree
            .find_mut(&fault.target)
            .or_else(|| {
                rt.dialog_stack
                    .iter_mut()
                    .find_map(|d| d.find_mut(&fault.target))
            });
        let Some(widget) = widget else { return };
        if let Some((default_text, default_checked)) = defaults.get(&fault.target) {
            widget.text = default_text.clone();
            widget.checked = *default_checked;
        } else {
            widget.text.clear();
            widget.checked = false;
        }
        if let Some(desc) = &fault.wrong_description {
            widget.content_description = Some(desc.clone());
        }
    }

    /// Bundle contents: exactly the Saved-policy variables of the saving
    /// activity plus the text of widgets with a nonempty resource id.
    fn build_bundle(&self, activity: &ActivitySpec) -> Bundle {
        let mut bundle = Bundle::default();
        for (var, _) in &activity.variables {
            if activity.save_policy_of(var) == SavePolicy::Saved {
                bundle.insert(
                    var.clone(),
                    self.variables.get(var).expect("declared variable").clone(),
                );
            }
        }
        let rt = self.runtimes.get(&activity.name).expect("runtime");
        save_view_text(&rt.tree, &mut bundle);
        for dialog in &rt.dialog_stack {
            save_view_text(dialog, &mut bundle);
        }
        bundle
    }
}

/// Two independent FNV-1a streams fed by hand-walking the runtime state.
/// Field tags keep adjacent strings from aliasing across field boundaries.
struct Digest {
    a: u64,
    b: u64,
}

impl Digest {
    fn new() -> Self {
        Self {
            a: 0xcbf2_9ce4_8422_2325,
            b: 0x6c62_272e_07bb_0142,
        }
    }

    fn bytes(&mut self, bytes: &[u8]) {
        for &byte in bytes {
            self.a = (self.a ^ u64::from(byte)).wrapping_mul(0x0000_0100_0000_01b3);
            self.b = (self.b ^ u64::from(byte)).wrapping_mul(0x0000_0100_0000_0193);
        }
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.bytes(s.as_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }

    fn bool(&mut self, v: bool) {
        self.bytes(&[u8::from(v)]);
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Text(s) => {
                self.bytes(&[1]);
                self.str(s);
            }
            Value::Int(i) => {
                self.bytes(&[2]);
                self.u64(*i as u64);
            }
            Value::Flag(f) => {
                self.bytes(&[3]);
                self.bool(*f);
            }
        }
    }

    fn widget(&mut self, w: &ConcreteWidget) {
        self.str(&w.locator);
        self.str(&w.text);
        match &w.content_description {
            None => self.bytes(&[0]),
            Some(desc) => {
                self.bytes(&[1]);
                self.str(desc);
            }
        }
        self.bool(w.checked);
        self.bool(w.selected);
        self.u64(w.children.len() as u64);
        for child in &w.children {
            self.widget(child);
        }
    }

    fn runtime(&mut self, rt: &ActivityRuntime) {
        self.widget(&rt.tree);
        self.u64(rt.dialog_stack.len() as u64);
        for dialog in &rt.dialog_stack {
            self.widget(dialog);
        }
        self.u64(u64::from(rt.scroll_offset));
    }

    fn fault_runtimes(&mut self, faults: &[FaultRuntime]) {
        for f in faults {
            self.bool(f.crash_latched);
            self.u64(u64::from(f.latency_left));
            self.bool(f.spent);
        }
    }

    fn finish(self) -> (u64, u64) {
        (self.a, self.b)
    }
}

fn save_view_text(widget: &ConcreteWidget, bundle: &mut Bundle) {
    if let Some(rid) = &widget.resource_id {
        if !rid.is_empty() {
            bundle.insert(rid.clone(), Value::Text(widget.text.clone()));
        }
    }
    for child in &widget.children {
        save_view_text(child, bundle);
    }
}

fn restore_view_text(widget: &mut ConcreteWidget, bundle: &Bundle) {
    if let Some(rid) = &widget.resource_id {
        if let Some(Value::Text(text)) = bundle.get(rid) {
            widget.text = text.clone();
        }
    }
    for child in &mut widget.children {
        restore_view_text(child, bundle);
    }
}

/// Recomputes effective visibility: own flag, parent visibility, and (for
/// activity content) intersection with the current scroll page. Containers
/// and lists are the scrolling viewport itself and are never paged out;
/// their leaves are.
fn bake_visibility(widget: &mut ConcreteWidget, parent_visible: bool, page: Option<(u64, u64)>) {
    let on_page = match page {
        _ if matches!(widget.kind, WidgetKind::Container | WidgetKind::List) => true,
        None => true,
        Some((top, bottom)) => {
            let y0 = u64::from(widget.position.1);
            let y1 = y0 + u64::from(widget.size.1);
            y0 < bottom && y1 > top
        }
    };
    let effective = parent_visible && widget.flags.visible && on_page;
    widget.flags.visible = effective;
    for child in &mut widget.children {
        bake_visibility(child, effective, page);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;
    use crate::sim::lifecycle::LifecycleEvent;
    use crate::sim::spec::{EventPattern, TransitionSpec};
    use crate::sim::testutil::*;
    use crate::sim::{dump_hierarchy, enabled_events, render_state};

    fn load(app: AppSpec, seed: u64) -> AppInstance {
        AppInstance::load(Arc::new(app), seed).unwrap()
    }

    fn two_screen_app() -> AppSpec {
        let mut app = minimal_app();
        app.activities.push(activity("Detail", vec![label_widget("d", "detail")]));
        app.activities[0].transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: "btn".into(),
            },
            effects: vec![Effect::NavigateTo("Detail".into())],
        });
        app
    }

    #[test]
    fn load_positions_at_initial_activity_resumed() {
        let instance = load(minimal_app(), 7);
        assert!(instance.is_live());
        assert_eq!(instance.current_activity(), "Main");
        assert_eq!(instance.orientation(), Orientation::Portrait);
        assert!(matches!(
            instance.lifecycle_log().last(),
            Some(LifecycleEvent::Moved { to: LifecycleState::Resumed, .. })
        ));
    }

    #[test]
    fn load_is_deterministic_byte_for_byte() {
        let a = load(minimal_app(), 7).concrete_state().to_ron_string();
        let b = load(minimal_app(), 7).concrete_state().to_ron_string();
        assert_eq!(a, b);
    }

    #[test]
    fn enabled_events_for_single_button_screen() {
        let instance = load(minimal_app(), 0);
        let events = enabled_events(&instance.concrete_state());
        let expected: std::collections::BTreeSet<Event> =
            [Event::touch("btn"), Event::key_back(), Event::key_home()]
                .into_iter()
                .collect();
        assert_eq!(events, expected);
    }

    #[test]
    fn edit_text_enables_set_text_and_touch_when_clickable() {
        let mut app = minimal_app();
        let mut edit = edit_widget("field");
        edit.flags.clickable = true;
        app.activities[0].widget_tree.children.push(edit);
        let instance = load(app, 0);
        let events = enabled_events(&instance.concrete_state());
        assert!(events.contains(&Event::set_text_slot("field")));
        assert!(events.contains(&Event::touch("field")));
    }

    #[test]
    fn topmost_dialog_restricts_events_to_its_widgets_plus_keys() {
        let mut app = minimal_app();
        // A busy screen: ten clickable widgets.
        for i in 0..9 {
            app.activities[0]
                .widget_tree
                .children
                .push(button_widget(&format!("b{i}"), "x"));
        }
        let mut dialog = widget(WidgetKind::Dialog, (100, 100), (20, 40));
        let mut yes = widget(WidgetKind::Button, (40, 20), (30, 60));
        yes.resource_id = Some("yes".into());
        yes.flags.clickable = true;
        let mut no = widget(WidgetKind::Button, (40, 20), (30, 90));
        no.resource_id = Some("no".into());
        no.flags.clickable = true;
        dialog.children = vec![yes, no];
        app.activities[0].dialogs.push(dialog);
        app.activities[0].transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: "btn".into(),
            },
            effects: vec![Effect::ShowDialog { dialog: "d0".into() }],
        });
        let mut instance = load(app, 0);
        instance.apply_event(&Event::touch("btn")).unwrap();
        let events = enabled_events(&instance.concrete_state());
        let expected: std::collections::BTreeSet<Event> = [
            Event::touch("yes"),
            Event::touch("no"),
            Event::key_back(),
            Event::key_home(),
        ]
        .into_iter()
        .collect();
        assert_eq!(events, expected);
    }

    #[test]
    fn declared_transition_navigates() {
        let mut instance = load(two_screen_app(), 0);
        let outcome = instance.apply_event(&Event::touch("btn")).unwrap();
        assert_eq!(outcome, StepOutcome::Ok);
        assert_eq!(instance.current_activity(), "Detail");
    }

    #[test]
    fn back_pops_dialog_then_navigates_back_then_noops() {
        let mut instance = load(two_screen_app(), 0);
        instance.apply_event(&Event::touch("btn")).unwrap();
        assert_eq!(instance.current_activity(), "Detail");
        instance.apply_event(&Event::key_back()).unwrap();
        assert_eq!(instance.current_activity(), "Main");
        instance.apply_event(&Event::key_back()).unwrap();
        assert_eq!(instance.current_activity(), "Main");
    }

    fn app_with_variable(save: SavePolicy, restore: RestorePolicy) -> AppSpec {
        let mut app = minimal_app();
        let act = &mut app.activities[0];
        act.variables.insert("v".into(), Value::Text("default".into()));
        act.save_policy.insert("v".into(), save);
        act.restore_policy.insert("v".into(), restore);
        act.transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: "btn".into(),
            },
            effects: vec![Effect::SetVariable {
                name: "v".into(),
                value: Value::Text("changed".into()),
            }],
        });
        app
    }

    #[test]
    fn home_resets_not_saved_variable_to_default() {
        let mut instance = load(
            app_with_variable(SavePolicy::NotSaved, RestorePolicy::Restored),
            0,
        );
        instance.apply_event(&Event::touch("btn")).unwrap();
        assert_eq!(
            instance.concrete_state().variable_valuation["v"],
            Value::Text("changed".into())
        );
        instance.apply_event(&Event::key_home()).unwrap();
        assert_eq!(instance.current_activity(), "Main");
        assert_eq!(
            instance.concrete_state().variable_valuation["v"],
            Value::Text("default".into())
        );
    }

    #[test]
    fn saved_restored_variable_survives_stop_start() {
        let mut instance = load(
            app_with_variable(SavePolicy::Saved, RestorePolicy::Restored),
            0,
        );
        instance.apply_event(&Event::touch("btn")).unwrap();
        instance.rotate().unwrap();
        assert_eq!(
            instance.concrete_state().variable_valuation["v"],
            Value::Text("changed".into())
        );
    }

    #[test]
    fn wrong_value_restore_writes_stable_sentinel() {
        let mut instance = load(
            app_with_variable(SavePolicy::Saved, RestorePolicy::WrongValue),
            0,
        );
        instance.rotate().unwrap();
        let got = instance.concrete_state().variable_valuation["v"].clone();
        assert_eq!(got, wrong_value_sentinel("v", &Value::Text("default".into())));
        let again = load(
            app_with_variable(SavePolicy::Saved, RestorePolicy::WrongValue),
            9,
        )
        .concrete_state();
        let _ = again;
    }

    #[test]
    fn bundle_holds_saved_variables_and_resource_id_texts() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0]
            .variables
            .insert("hidden".into(), Value::Int(3));
        app.activities[0]
            .save_policy
            .insert("hidden".into(), SavePolicy::NotSaved);
        app.activities[0].widget_tree.children.push(edit_widget("field"));
        let mut instance = load(app, 0);
        instance
            .apply_event(&Event::set_text("field", "abc"))
            .unwrap();
        instance.apply_event(&Event::key_home()).unwrap();
        let bundle = instance.last_bundle().unwrap();
        let keys: Vec<&str> = bundle.entries.keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["btn", "field", "v"]);
        assert_eq!(bundle.get("field"), Some(&Value::Text("abc".into())));
    }

    #[test]
    fn crash_fault_arms_on_stop_start_and_fires_on_next_event() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::Crash,
            target: "v".into(),
            arming_condition: None,
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        // Armed only after a stop-start breaks the restored state.
        assert_eq!(
            instance.apply_event(&Event::touch("btn")).unwrap(),
            StepOutcome::Ok
        );
        instance.rotate().unwrap();
        let outcome = instance.apply_event(&Event::touch("btn")).unwrap();
        match outcome {
            StepOutcome::Crashed(record) => {
                assert_eq!(record.activity, "Main");
                assert!(record.fault_id.contains("crash"));
            }
            StepOutcome::Ok => panic!("expected crash"),
        }
        assert!(!instance.is_live());
        assert!(matches!(
            instance.apply_event(&Event::key_back()),
            Err(SimError::NotLive)
        ));
    }

    #[test]
    fn at_launch_crash_fails_load() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::Crash,
            target: "v".into(),
            arming_condition: Some(ArmingCondition::AtLaunch),
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        match AppInstance::load(Arc::new(app), 0) {
            Err(SimError::StartCrash(record)) => assert_eq!(record.activity, "Main"),
            other => panic!("expected start crash, got {other:?}"),
        }
    }

    #[test]
    fn resource_id_text_survives_rotation() {
        let mut app = minimal_app();
        app.activities[0].widget_tree.children.push(edit_widget("field"));
        let mut instance = load(app, 0);
        instance
            .apply_event(&Event::set_text("field", "abc"))
            .unwrap();
        instance.rotate().unwrap();
        let state = instance.concrete_state();
        assert_eq!(state.widget_tree.find("field").unwrap().text, "abc");
        assert_eq!(state.orientation, Orientation::Landscape);
    }

    #[test]
    fn modified_value_fault_resets_widget_to_default_on_rotation() {
        let mut app = minimal_app();
        let mut counter = edit_widget("count");
        counter.resource_id = None; // path locator 0/1
        counter.default_text = "0".into();
        app.activities[0].widget_tree.children.push(counter);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::ModifiedValue,
            target: "0/1".into(),
            arming_condition: None,
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        instance.apply_event(&Event::set_text("0/1", "5")).unwrap();
        assert_eq!(
            instance.concrete_state().widget_tree.find("0/1").unwrap().text,
            "5"
        );
        instance.rotate().unwrap();
        assert_eq!(
            instance.concrete_state().widget_tree.find("0/1").unwrap().text,
            "0"
        );
    }

    #[test]
    fn compromised_state_fires_after_latency_stop_starts() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::CompromisedState,
            target: "v".into(),
            arming_condition: None,
            latency: 3,
            outcome: Some(CompromisedOutcome::Crash),
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        let visible_before = dump_hierarchy(&instance.concrete_state());
        assert_eq!(instance.rotate().unwrap(), StepOutcome::Ok);
        assert_eq!(instance.rotate().unwrap(), StepOutcome::Ok);
        // Two rotations later the screen is visibly unchanged.
        assert_eq!(dump_hierarchy(&instance.concrete_state()), visible_before);
        assert!(instance.rotate().unwrap().is_crash());
    }

    #[test]
    fn compromised_corrupt_writes_sentinel_variable() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::CompromisedState,
            target: "v".into(),
            arming_condition: None,
            latency: 1,
            outcome: Some(CompromisedOutcome::Corrupt),
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        instance.rotate().unwrap();
        assert_eq!(
            instance.concrete_state().variable_valuation["v"],
            corrupt_sentinel("v", &Value::Text("default".into()))
        );
        // Fires once; the corrupted value then persists.
        instance.rotate().unwrap();
        assert_eq!(
            instance.concrete_state().variable_valuation["v"],
            corrupt_sentinel("v", &Value::Text("default".into()))
        );
    }

    #[test]
    fn destroyed_element_fault_removes_widget() {
        let mut app = minimal_app();
        app.activities[0]
            .widget_tree
            .children
            .push(label_widget("status", "ready"));
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::DestroyedElement,
            target: "status".into(),
            arming_condition: None,
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        assert!(instance.concrete_state().widget_tree.find("status").is_some());
        instance.rotate().unwrap();
        assert!(instance.concrete_state().widget_tree.find("status").is_none());
        instance.rotate().unwrap();
        assert!(instance.is_live());
    }

    #[test]
    fn phantom_element_fault_pushes_dialog_once() {
        let mut app = minimal_app();
        let mut ghost = widget(WidgetKind::Dialog, (100, 80), (20, 40));
        ghost.children.push({
            let mut l = widget(WidgetKind::Label, (80, 20), (30, 50));
            l.default_text = "surprise".into();
            l
        });
        app.activities[0].dialogs.push(ghost);
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::PhantomElement,
            target: "d0".into(),
            arming_condition: None,
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        assert!(instance.concrete_state().dialog_stack.is_empty());
        instance.rotate().unwrap();
        assert_eq!(instance.concrete_state().dialog_stack.len(), 1);
        instance.rotate().unwrap();
        assert_eq!(instance.concrete_state().dialog_stack.len(), 1);
    }

    #[test]
    fn arming_condition_var_set_gates_fault() {
        let mut app = app_with_variable(SavePolicy::Saved, RestorePolicy::Restored);
        app.activities[0]
            .widget_tree
            .children
            .push(label_widget("status", "ready"));
        app.activities[0].injected_faults.push(FaultSpec {
            pattern: FaultPattern::DestroyedElement,
            target: "status".into(),
            arming_condition: Some(ArmingCondition::VarSet { name: "v".into() }),
            latency: 1,
            outcome: None,
            wrong_description: None,
        });
        let mut instance = load(app, 0);
        instance.rotate().unwrap();
        assert!(instance.concrete_state().widget_tree.find("status").is_some());
        instance.apply_event(&Event::touch("btn")).unwrap(); // sets v
        instance.rotate().unwrap();
        assert!(instance.concrete_state().widget_tree.find("status").is_none());
    }

    #[test]
    fn lifecycle_walks_save_before_destroy_and_restore_after_create() {
        let mut instance = load(minimal_app(), 0);
        let base = instance.lifecycle_log().len();
        instance.rotate().unwrap();
        let log = &instance.lifecycle_log()[base..];
        let position = |pred: &dyn Fn(&LifecycleEvent) -> bool| {
            log.iter().position(|e| pred(e)).unwrap()
        };
        let saved = position(&|e| matches!(e, LifecycleEvent::Saved { .. }));
        let destroyed = position(&|e| {
            matches!(e, LifecycleEvent::Moved { to: LifecycleState::Destroyed, .. })
        });
        let created = position(&|e| {
            matches!(e, LifecycleEvent::Moved { to: LifecycleState::Created, .. })
        });
        let restored = position(&|e| matches!(e, LifecycleEvent::Restored { .. }));
        assert!(saved < destroyed, "save must precede destroy");
        assert!(destroyed < created, "destroy precedes recreate");
        assert!(created < restored, "restore follows create");
        let saves = log
            .iter()
            .filter(|e| matches!(e, LifecycleEvent::Saved { .. }))
            .count();
        let restores = log
            .iter()
            .filter(|e| matches!(e, LifecycleEvent::Restored { .. }))
            .count();
        assert_eq!((saves, restores), (1, 1));
    }

    #[test]
    fn fault_free_double_rotation_is_identity_on_dump_and_cropped_render() {
        let mut app = minimal_app();
        app.activities[0].widget_tree.children.push(edit_widget("field"));
        app.activities[0]
            .variables
            .insert("v".into(), Value::Int(7));
        let mut instance = load(app.clone(), 3);
        instance
            .apply_event(&Event::set_text("field", "kept"))
            .unwrap();

        let header = app.header_px();
        let footer = app.footer_px();
        let before_tree = dump_hierarchy(&instance.concrete_state());
        let before_img = render_state(&instance.concrete_state(), app.screen, header, footer, 1);
        instance.rotate().unwrap();
        instance.rotate().unwrap();
        let after_tree = dump_hierarchy(&instance.concrete_state());
        let after_img = render_state(&instance.concrete_state(), app.screen, header, footer, 2);

        assert_eq!(before_tree, after_tree);
        let w = app.screen.0 as usize;
        let body_before = &before_img.pixels[header as usize * w..];
        let body_after = &after_img.pixels[header as usize * w..];
        assert_eq!(body_before, body_after);
    }

    #[test]
    fn scroll_wraps_and_changes_page_visibility() {
        let mut app = minimal_app();
        app.activities[0].scroll_extent = 1;
        let mut below = label_widget("below", "second page");
        below.position = (8, 240); // body height is 232
        app.activities[0].widget_tree.children.push(below);
        let mut instance = load(app, 0);

        let page0 = instance.concrete_state();
        assert!(!page0.widget_tree.find("below").unwrap().flags.visible);
        assert!(page0.widget_tree.find("btn").unwrap().flags.visible);
        assert!(enabled_events(&page0).contains(&Event::scroll()));

        instance.apply_event(&Event::scroll()).unwrap();
        let page1 = instance.concrete_state();
        assert_eq!(page1.scroll_offset, 1);
        assert!(page1.widget_tree.find("below").unwrap().flags.visible);
        assert!(!page1.widget_tree.find("btn").unwrap().flags.visible);

        instance.apply_event(&Event::scroll()).unwrap();
        assert_eq!(instance.concrete_state().scroll_offset, 0);
    }

    #[test]
    fn event_not_enabled_is_rejected() {
        let mut instance = load(minimal_app(), 0);
        let err = instance.apply_event(&Event::touch("ghost")).unwrap_err();
        assert!(matches!(err, SimError::EventNotEnabled(_)));
    }

    #[test]
    fn check_box_touch_toggles_state() {
        let mut app = minimal_app();
        let mut cb = widget(WidgetKind::CheckBox, (24, 24), (8, 120));
        cb.resource_id = Some("opt".into());
        cb.flags.clickable = true;
        app.activities[0].widget_tree.children.push(cb);
        let mut instance = load(app, 0);
        assert!(!instance.concrete_state().widget_tree.find("opt").unwrap().checked);
        instance.apply_event(&Event::touch("opt")).unwrap();
        assert!(instance.concrete_state().widget_tree.find("opt").unwrap().checked);
    }

    #[test]
    fn back_discards_finished_activity_state() {
        let mut app = two_screen_app();
        app.activities[1].widget_tree.children.push(edit_widget("note"));
        let mut instance = load(app, 0);
        instance.apply_event(&Event::touch("btn")).unwrap();
        instance
            .apply_event(&Event::set_text("note", "temp"))
            .unwrap();
        instance.apply_event(&Event::key_back()).unwrap();
        instance.apply_event(&Event::touch("btn")).unwrap();
        assert_eq!(
            instance.concrete_state().widget_tree.find("note").unwrap().text,
            ""
        );
    }
}
