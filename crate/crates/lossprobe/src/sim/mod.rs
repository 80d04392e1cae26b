//! Deterministic simulated app runtime: lifecycle, save/restore semantics,
//! fault injection, rendering and hierarchy dumping, exposed through the
//! same driver interface a real-device adapter would implement.

pub mod driver;
pub mod hierarchy;
pub mod instance;
pub mod lifecycle;
pub mod render;
pub mod spec;
pub mod state;

pub use driver::{Driver, NoisyDriver, SimDriver};
pub use hierarchy::dump_hierarchy;
pub use instance::{AppInstance, CrashRecord, SimError, StepOutcome};
pub use render::render_state;

use std::collections::BTreeSet;

use crate::model::Event;
use crate::sim::spec::WidgetKind;
use crate::sim::state::{ConcreteState, ConcreteWidget};

/// Enumerates the events permitted on a live screen:
///
/// - a touch per clickable visible widget, a long touch per long-clickable,
///   a set-text slot per editable,
/// - one scroll action if the activity has scroll pages or a list is
///   visible (suppressed while a dialog is open),
/// - BACK and HOME always.
///
/// The topmost dialog intercepts interaction, restricting widget events to
/// its own subtree.
pub fn enabled_events(state: &ConcreteState) -> BTreeSet<Event> {
    let mut events = BTreeSet::new();
    let scope: &ConcreteWidget = match state.top_dialog() {
        Some(dialog) => dialog,
        None => &state.widget_tree,
    };
    let mut widgets = Vec::new();
    scope.walk(&mut widgets);
    for widget in widgets {
        if !widget.flags.visible {
            continue;
        }
        if widget.flags.clickable {
            events.insert(Event::touch(widget.locator.clone()));
        }
        if widget.flags.long_clickable {
            events.insert(Event::long_touch(widget.locator.clone()));
        }
        if widget.flags.editable {
            events.insert(Event::set_text_slot(widget.locator.clone()));
        }
    }
    if state.top_dialog().is_none() {
        let mut all = Vec::new();
        state.widget_tree.walk(&mut all);
        let list_visible = all
            .iter()
            .any(|w| w.kind == WidgetKind::List && w.flags.visible);
        if state.scroll_extent > 0 || list_visible {
            events.insert(Event::scroll());
        }
    }
    events.insert(Event::key_back());
    events.insert(Event::key_home());
    events
}

pub mod testutil {
    //! Small spec builders shared across unit tests.

    use std::collections::BTreeMap;

    use crate::sim::spec::*;

    pub fn widget(kind: WidgetKind, size: (u32, u32), position: (u32, u32)) -> WidgetSpec {
        WidgetSpec {
            kind,
            resource_id: None,
            default_text: String::new(),
            content_description: None,
            size,
            position,
            flags: WidgetFlags::default(),
            children: Vec::new(),
        }
    }

    pub fn button_widget(resource_id: &str, text: &str) -> WidgetSpec {
        let mut w = widget(WidgetKind::Button, (100, 30), (10, 10));
        w.resource_id = Some(resource_id.to_string());
        w.default_text = text.to_string();
        w.flags.clickable = true;
        w
    }

    pub fn label_widget(resource_id: &str, text: &str) -> WidgetSpec {
        let mut w = widget(WidgetKind::Label, (100, 20), (10, 50));
        w.resource_id = Some(resource_id.to_string());
        w.default_text = text.to_string();
        w
    }

    pub fn edit_widget(resource_id: &str) -> WidgetSpec {
        let mut w = widget(WidgetKind::EditText, (120, 24), (10, 80));
        w.resource_id = Some(resource_id.to_string());
        w.flags.editable = true;
        w
    }

    pub fn root_container(children: Vec<WidgetSpec>) -> WidgetSpec {
        let mut root = widget(WidgetKind::Container, (144, 230), (0, 0));
        root.children = children;
        root
    }

    pub fn activity(name: &str, children: Vec<WidgetSpec>) -> ActivitySpec {
        ActivitySpec {
            name: name.to_string(),
            widget_tree: root_container(children),
            dialogs: Vec::new(),
            variables: BTreeMap::new(),
            save_policy: BTreeMap::new(),
            restore_policy: BTreeMap::new(),
            transitions: Vec::new(),
            injected_faults: Vec::new(),
            scroll_extent: 0,
        }
    }

    /// Smallest legal app: one activity with a single clickable button.
    pub fn minimal_app() -> AppSpec {
        AppSpec {
            format_version: FORMAT_VERSION,
            name: "minimal".to_string(),
            screen: (144, 256),
            crop_header: None,
            crop_footer: None,
            initial_activity: "Main".to_string(),
            activities: vec![activity("Main", vec![button_widget("btn", "Go")])],
        }
    }
}
