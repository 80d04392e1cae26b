//! Concrete screen state: the instantiated widget tree plus runtime values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::spec::{Value, WidgetFlags, WidgetKind, WidgetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Portrait,
    Landscape,
}

impl Orientation {
    pub fn toggled(self) -> Self {
        match self {
            Orientation::Portrait => Orientation::Landscape,
            Orientation::Landscape => Orientation::Portrait,
        }
    }
}

/// A widget with its concrete property values. `flags.visible` holds the
/// *effective* visibility: the spec flag combined with parent visibility and
/// the current scroll page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteWidget {
    pub locator: String,
    pub kind: WidgetKind,
    pub resource_id: Option<String>,
    pub text: String,
    pub content_description: Option<String>,
    pub size: (u32, u32),
    pub position: (u32, u32),
    pub flags: WidgetFlags,
    pub checked: bool,
    pub selected: bool,
    pub children: Vec<ConcreteWidget>,
}

impl ConcreteWidget {
    pub fn from_spec(spec: &WidgetSpec, path: &str) -> Self {
        Self {
            locator: spec.locator_at(path),
            kind: spec.kind,
            resource_id: spec.resource_id.clone(),
            text: spec.default_text.clone(),
            content_description: spec.content_description.clone(),
            size: spec.size,
            position: spec.position,
            flags: spec.flags,
            checked: false,
            selected: false,
            children: spec
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| Self::from_spec(c, &format!("{path}/{i}")))
                .collect(),
        }
    }

    pub fn find(&self, locator: &str) -> Option<&ConcreteWidget> {
        if self.locator == locator {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(locator))
    }

    pub fn find_mut(&mut self, locator: &str) -> Option<&mut ConcreteWidget> {
        if self.locator == locator {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(locator))
    }

    /// Removes the widget with the given locator from the subtree.
    /// Returns true if something was removed. The root itself cannot be
    /// removed this way.
    pub fn remove_descendant(&mut self, locator: &str) -> bool {
        if let Some(pos) = self.children.iter().position(|c| c.locator == locator) {
            self.children.remove(pos);
            return true;
        }
        self.children
            .iter_mut()
            .any(|c| c.remove_descendant(locator))
    }

    pub fn walk<'a>(&'a self, out: &mut Vec<&'a ConcreteWidget>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }
}

/// One fully instantiated screen: activity content, open dialogs (topmost
/// last; the topmost dialog intercepts events), scroll page, orientation and
/// the owning activity's variable valuation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcreteState {
    pub activity_name: String,
    pub widget_tree: ConcreteWidget,
    pub variable_valuation: BTreeMap<String, Value>,
    pub dialog_stack: Vec<ConcreteWidget>,
    pub scroll_offset: u32,
    /// Scroll pages past the first screenful; scroll_offset stays in
    /// [0, scroll_extent].
    pub scroll_extent: u32,
    pub orientation: Orientation,
}

impl ConcreteState {
    pub fn top_dialog(&self) -> Option<&ConcreteWidget> {
        self.dialog_stack.last()
    }

    /// Canonical serialized form, used by determinism checks.
    pub fn to_ron_string(&self) -> String {
        let cfg = ron::ser::PrettyConfig::new().indentor("  ".to_string());
        ron::ser::to_string_pretty(self, cfg).expect("state serialization cannot fail")
    }
}

/// The saved-state bundle built during a stop-start cycle: exactly the
/// Saved-policy variables of the saving activity plus the text of widgets
/// with a nonempty resource id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub entries: BTreeMap<String, Value>,
}

impl Bundle {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, value: Value) {
        self.entries.insert(key, value);
    }
}
