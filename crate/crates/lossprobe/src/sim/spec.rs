//! Declarative description of a simulated lifecycle app.
//!
//! Specs are authored (and generated) as RON documents; see
//! `docs/app-spec-format.md` for the grammar and semantics. `AppSpec::validate`
//! enforces every structural invariant before an instance may be created.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::fnv1a_salted;

/// Runtime value of a state variable or bundle entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Text(String),
    Int(i64),
    Flag(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "{s}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WidgetKind {
    Button,
    Label,
    EditText,
    CheckBox,
    Dialog,
    List,
    Container,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetFlags {
    #[serde(default)]
    pub clickable: bool,
    #[serde(default)]
    pub long_clickable: bool,
    #[serde(default)]
    pub editable: bool,
    #[serde(default)]
    pub scrollable: bool,
    #[serde(default = "default_true")]
    pub visible: bool,
}

fn default_true() -> bool {
    true
}

impl Default for WidgetFlags {
    fn default() -> Self {
        Self {
            clickable: false,
            long_clickable: false,
            editable: false,
            scrollable: false,
            visible: true,
        }
    }
}

/// One widget in an activity (or dialog) tree. The locator is not authored:
/// it is the resource id when present, otherwise the root-to-node
/// child-index path (e.g. `0/2/1`), which is stable across recreation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub kind: WidgetKind,
    #[serde(default)]
    pub resource_id: Option<String>,
    #[serde(default)]
    pub default_text: String,
    #[serde(default)]
    pub content_description: Option<String>,
    pub size: (u32, u32),
    #[serde(default)]
    pub position: (u32, u32),
    #[serde(default)]
    pub flags: WidgetFlags,
    #[serde(default)]
    pub children: Vec<WidgetSpec>,
}

impl WidgetSpec {
    pub fn locator_at(&self, path: &str) -> String {
        self.resource_id.clone().unwrap_or_else(|| path.to_string())
    }

    /// Depth-first walk yielding `(locator, path, widget)`.
    pub fn walk<'a>(&'a self, base: &str, out: &mut Vec<(String, String, &'a WidgetSpec)>) {
        out.push((self.locator_at(base), base.to_string(), self));
        for (i, child) in self.children.iter().enumerate() {
            child.walk(&format!("{base}/{i}"), out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SavePolicy {
    Saved,
    NotSaved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RestorePolicy {
    Restored,
    Defaulted,
    WrongValue,
}

/// Event shape a transition matches on. Only touch interactions carry
/// app-defined behavior; text entry, scrolling and keys have fixed semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternKind {
    Touch,
    LongTouch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPattern {
    pub kind: PatternKind,
    pub locator: String,
}

/// What a matched transition does. Effects apply in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    NavigateTo(String),
    NavigateBack,
    SetVariable { name: String, value: Value },
    ShowDialog { dialog: String },
    DismissDialog,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub on: EventPattern,
    pub effects: Vec<Effect>,
}

/// The five injectable failure patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaultPattern {
    Crash,
    DestroyedElement,
    PhantomElement,
    ModifiedValue,
    CompromisedState,
}

impl FaultPattern {
    pub const ALL: [FaultPattern; 5] = [
        FaultPattern::Crash,
        FaultPattern::DestroyedElement,
        FaultPattern::PhantomElement,
        FaultPattern::ModifiedValue,
        FaultPattern::CompromisedState,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FaultPattern::Crash => "crash",
            FaultPattern::DestroyedElement => "destroyed_element",
            FaultPattern::PhantomElement => "phantom_element",
            FaultPattern::ModifiedValue => "modified_value",
            FaultPattern::CompromisedState => "compromised_state",
        }
    }
}

/// Predicate gating a fault. `AtLaunch` models apps broken from the first
/// create; loading such a spec fails with a start crash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArmingCondition {
    Always,
    AtLaunch,
    /// True once the variable differs from its declared default.
    VarSet { name: String },
    VarEquals { name: String, value: Value },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompromisedOutcome {
    Crash,
    Corrupt,
}

/// One injected fault. Crash and compromised-state faults target a variable;
/// the other three target a widget locator (phantom elements target a dialog
/// template).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub pattern: FaultPattern,
    pub target: String,
    #[serde(default)]
    pub arming_condition: Option<ArmingCondition>,
    /// Stop-start cycles of the owning activity before a compromised state
    /// becomes visible. Must be >= 1; meaningful only for CompromisedState.
    #[serde(default = "default_latency")]
    pub latency: u32,
    /// Whether a compromised state crashes or silently corrupts its target
    /// variable once the latency runs out.
    #[serde(default)]
    pub outcome: Option<CompromisedOutcome>,
    /// For ModifiedValue faults: a wrong content description written to the
    /// target widget on recreate (models mis-initialized accessibility
    /// state; pixels are unaffected).
    #[serde(default)]
    pub wrong_description: Option<String>,
}

fn default_latency() -> u32 {
    1
}

impl FaultSpec {
    /// Stable fault id derived from placement, used by corpus manifests.
    pub fn id_in(&self, activity: &str) -> String {
        format!("{activity}:{}:{}", self.pattern.as_str(), self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivitySpec {
    pub name: String,
    pub widget_tree: WidgetSpec,
    /// Dialog templates this activity can show; roots must be of kind Dialog.
    /// Template `i` gets locator `d{i}` unless it has a resource id.
    #[serde(default)]
    pub dialogs: Vec<WidgetSpec>,
    #[serde(default)]
    pub variables: BTreeMap<String, Value>,
    /// Unlisted variables default to Saved.
    #[serde(default)]
    pub save_policy: BTreeMap<String, SavePolicy>,
    /// Unlisted variables default to Restored.
    #[serde(default)]
    pub restore_policy: BTreeMap<String, RestorePolicy>,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub injected_faults: Vec<FaultSpec>,
    /// Number of additional scroll pages below the first screenful.
    #[serde(default)]
    pub scroll_extent: u32,
}

impl ActivitySpec {
    pub fn save_policy_of(&self, var: &str) -> SavePolicy {
        self.save_policy.get(var).copied().unwrap_or(SavePolicy::Saved)
    }

    pub fn restore_policy_of(&self, var: &str) -> RestorePolicy {
        self.restore_policy
            .get(var)
            .copied()
            .unwrap_or(RestorePolicy::Restored)
    }

    /// Locators of all widgets in the main tree.
    pub fn tree_locators(&self) -> Vec<(String, String, &WidgetSpec)> {
        let mut out = Vec::new();
        self.widget_tree.walk("0", &mut out);
        out
    }

    /// Locator of dialog template `i`.
    pub fn dialog_locator(&self, i: usize) -> String {
        self.dialogs[i].locator_at(&format!("d{i}"))
    }

    pub fn dialog_by_locator(&self, locator: &str) -> Option<(usize, &WidgetSpec)> {
        self.dialogs
            .iter()
            .enumerate()
            .find(|(i, d)| d.locator_at(&format!("d{i}")) == locator)
            .map(|(i, d)| (i, d))
    }
}

pub const FORMAT_VERSION: u32 = 1;

fn default_screen() -> (u32, u32) {
    (720, 1280)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppSpec {
    pub format_version: u32,
    pub name: String,
    /// Portrait screen size in pixels.
    #[serde(default = "default_screen")]
    pub screen: (u32, u32),
    /// Status-bar band height; defaults to 5% of the screen height.
    #[serde(default)]
    pub crop_header: Option<u32>,
    /// Navigation-bar band height; defaults to 5% of the screen height.
    #[serde(default)]
    pub crop_footer: Option<u32>,
    pub initial_activity: String,
    pub activities: Vec<ActivitySpec>,
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("spec invalid: {0}")]
    SpecInvalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl AppSpec {
    pub fn header_px(&self) -> u32 {
        self.crop_header.unwrap_or(self.screen.1 / 20)
    }

    pub fn footer_px(&self) -> u32 {
        self.crop_footer.unwrap_or(self.screen.1 / 20)
    }

    pub fn activity(&self, name: &str) -> Option<&ActivitySpec> {
        self.activities.iter().find(|a| a.name == name)
    }

    pub fn activity_names(&self) -> BTreeSet<String> {
        self.activities.iter().map(|a| a.name.clone()).collect()
    }

    /// Serializes to the canonical pretty RON form used for on-disk specs.
    /// Byte-stable for equal specs.
    pub fn to_ron_string(&self) -> String {
        let cfg = ron::ser::PrettyConfig::new()
            .struct_names(false)
            .indentor("  ".to_string());
        ron::ser::to_string_pretty(self, cfg).expect("spec serialization cannot fail")
    }

    pub fn from_ron_str(text: &str) -> Result<Self, SpecError> {
        ron::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))
    }

    pub fn save_file(&self, path: &Path) -> Result<(), SpecError> {
        std::fs::write(path, self.to_ron_string())?;
        Ok(())
    }

    pub fn load_file(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path)?;
        let spec = Self::from_ron_str(&text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks every structural invariant; returns the first violation.
    pub fn validate(&self) -> Result<(), SpecError> {
        let fail = |msg: String| Err(SpecError::SpecInvalid(msg));

        if self.format_version != FORMAT_VERSION {
            return fail(format!(
                "format_version {} unsupported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.screen.0 == 0 || self.screen.1 == 0 {
            return fail("screen dimensions must be positive".into());
        }
        if self.header_px() + self.footer_px() >= self.screen.1 {
            return fail("header and footer bands cover the whole screen".into());
        }
        if self.activities.is_empty() {
            return fail("no activities declared".into());
        }
        let names = self.activity_names();
        if names.len() != self.activities.len() {
            return fail("duplicate activity names".into());
        }
        if !names.contains(&self.initial_activity) {
            return fail(format!(
                "initial activity {:?} not declared",
                self.initial_activity
            ));
        }

        let mut seen_vars: BTreeMap<&str, &str> = BTreeMap::new();
        let mut all_resource_ids: BTreeSet<&str> = BTreeSet::new();
        for activity in &self.activities {
            validate_activity(self, activity)?;
            for (name, _) in &activity.variables {
                if let Some(other) = seen_vars.insert(name, &activity.name) {
                    return fail(format!(
                        "variable {name:?} declared by both {other:?} and {:?}; names are app-global",
                        activity.name
                    ));
                }
            }
            let mut widgets = activity.tree_locators();
            for (i, dialog) in activity.dialogs.iter().enumerate() {
                dialog.walk(&format!("d{i}"), &mut widgets);
            }
            for (_, _, w) in &widgets {
                if let Some(rid) = &w.resource_id {
                    all_resource_ids.insert(rid);
                }
            }
        }
        for (name, _) in &seen_vars {
            if all_resource_ids.contains(name) {
                return fail(format!(
                    "variable {name:?} collides with a widget resource id; the bundle keyspace must be unambiguous"
                ));
            }
        }
        Ok(())
    }
}

fn validate_activity(app: &AppSpec, activity: &ActivitySpec) -> Result<(), SpecError> {
    let fail = |msg: String| {
        Err(SpecError::SpecInvalid(format!(
            "activity {:?}: {msg}",
            activity.name
        )))
    };

    let mut widgets = activity.tree_locators();
    if widgets.iter().any(|(_, _, w)| w.kind == WidgetKind::Dialog) {
        return fail("dialog widgets belong in the dialogs list, not the main tree".into());
    }
    for (i, dialog) in activity.dialogs.iter().enumerate() {
        if dialog.kind != WidgetKind::Dialog {
            return fail(format!("dialog template {i} must have kind Dialog"));
        }
        dialog.walk(&format!("d{i}"), &mut widgets);
    }

    let mut locators = BTreeSet::new();
    for (locator, _, widget) in &widgets {
        if !locators.insert(locator.clone()) {
            return fail(format!("locator {locator:?} not unique"));
        }
        if widget.flags.editable && widget.kind != WidgetKind::EditText {
            return fail(format!("editable widget {locator:?} must be an edit_text"));
        }
        if !widget.children.is_empty()
            && !matches!(
                widget.kind,
                WidgetKind::Container | WidgetKind::List | WidgetKind::Dialog
            )
        {
            return fail(format!(
                "widget {locator:?} has children but is not a container, list or dialog"
            ));
        }
        if widget.flags.visible && (widget.size.0 == 0 || widget.size.1 == 0) {
            return fail(format!("visible widget {locator:?} must have positive size"));
        }
    }

    for var in activity.save_policy.keys() {
        if !activity.variables.contains_key(var) {
            return fail(format!("save_policy names unknown variable {var:?}"));
        }
    }
    for var in activity.restore_policy.keys() {
        if !activity.variables.contains_key(var) {
            return fail(format!("restore_policy names unknown variable {var:?}"));
        }
    }

    let dialog_locators: BTreeSet<String> = (0..activity.dialogs.len())
        .map(|i| activity.dialog_locator(i))
        .collect();

    for transition in &activity.transitions {
        if !locators.contains(&transition.on.locator) {
            return fail(format!(
                "transition matches unknown widget {:?}",
                transition.on.locator
            ));
        }
        for effect in &transition.effects {
            match effect {
                Effect::NavigateTo(target) => {
                    if app.activity(target).is_none() {
                        return fail(format!("effect navigates to unknown activity {target:?}"));
                    }
                }
                Effect::SetVariable { name, .. } => {
                    let declared = app
                        .activities
                        .iter()
                        .any(|a| a.variables.contains_key(name));
                    if !declared {
                        return fail(format!("effect sets undeclared variable {name:?}"));
                    }
                }
                Effect::ShowDialog { dialog } => {
                    if !dialog_locators.contains(dialog) {
                        return fail(format!("effect shows unknown dialog {dialog:?}"));
                    }
                }
                Effect::NavigateBack | Effect::DismissDialog => {}
            }
        }
    }

    for fault in &activity.injected_faults {
        if fault.latency < 1 {
            return fail(format!("fault {:?} latency must be >= 1", fault.target));
        }
        match fault.pattern {
            FaultPattern::Crash | FaultPattern::CompromisedState => {
                if !activity.variables.contains_key(&fault.target) {
                    return fail(format!(
                        "{} fault must target a variable of this activity, got {:?}",
                        fault.pattern.as_str(),
                        fault.target
                    ));
                }
            }
            FaultPattern::PhantomElement => {
                if !dialog_locators.contains(&fault.target) {
                    return fail(format!(
                        "phantom_element fault must target a dialog template, got {:?}",
                        fault.target
                    ));
                }
            }
            FaultPattern::DestroyedElement | FaultPattern::ModifiedValue => {
                if !locators.contains(&fault.target) {
                    return fail(format!(
                        "{} fault targets unknown widget {:?}",
                        fault.pattern.as_str(),
                        fault.target
                    ));
                }
            }
        }
        if fault.wrong_description.is_some() && fault.pattern != FaultPattern::ModifiedValue {
            return fail("wrong_description is only meaningful for modified_value faults".into());
        }
        if fault.outcome.is_some() && fault.pattern != FaultPattern::CompromisedState {
            return fail("outcome is only meaningful for compromised_state faults".into());
        }
        if let Some(cond) = &fault.arming_condition {
            match cond {
                ArmingCondition::VarSet { name } | ArmingCondition::VarEquals { name, .. } => {
                    let declared = app
                        .activities
                        .iter()
                        .any(|a| a.variables.contains_key(name));
                    if !declared {
                        return fail(format!(
                            "arming condition references undeclared variable {name:?}"
                        ));
                    }
                }
                ArmingCondition::Always | ArmingCondition::AtLaunch => {}
            }
        }
    }

    let mut fault_ids = BTreeSet::new();
    for fault in &activity.injected_faults {
        if !fault_ids.insert(fault.id_in(&activity.name)) {
            return fail(format!(
                "duplicate fault on target {:?} with pattern {}",
                fault.target,
                fault.pattern.as_str()
            ));
        }
    }
    Ok(())
}

/// Deterministic sentinel written by the WrongValue restore policy,
/// derived from the variable name so reruns are reproducible.
pub fn wrong_value_sentinel(name: &str, default: &Value) -> Value {
    let h = fnv1a_salted(name, 0x77726f_6e67);
    match default {
        Value::Text(_) => Value::Text(format!("wrong#{:04x}", h & 0xffff)),
        Value::Int(_) => Value::Int(1000 + (h % 9000) as i64),
        Value::Flag(_) => Value::Flag(h & 1 == 1),
    }
}

/// Deterministic sentinel written when a compromised state corrupts its
/// target variable.
pub fn corrupt_sentinel(name: &str, default: &Value) -> Value {
    let h = fnv1a_salted(name, 0x636f72_72);
    match default {
        Value::Text(_) => Value::Text(format!("corrupt#{:04x}", h & 0xffff)),
        Value::Int(_) => Value::Int(-(1000 + (h % 9000) as i64)),
        Value::Flag(_) => Value::Flag(h & 1 == 0),
    }
}
