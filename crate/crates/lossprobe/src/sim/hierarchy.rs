//! View-hierarchy dumping: converts a concrete screen into the property
//! records the property-based oracle compares.

use crate::proptree::{PropertyNode, PropertyTree};
use crate::sim::spec::WidgetKind;
use crate::sim::state::{ConcreteState, ConcreteWidget};

/// Dumps the screen as a property tree. Child order is the deterministic
/// tree order; open dialogs are appended as the last children of the root,
/// mirroring their z-order above the activity content.
pub fn dump_hierarchy(state: &ConcreteState) -> PropertyTree {
    let mut root = node_of(&state.widget_tree);
    for dialog in &state.dialog_stack {
        root.children.push(node_of(dialog));
    }
    root.child_count = root.children.len();
    PropertyTree { root }
}

fn node_of(widget: &ConcreteWidget) -> PropertyNode {
    PropertyNode {
        content_description: widget.content_description.clone(),
        resource_id: widget.resource_id.clone(),
        text: widget.text.clone(),
        visible: widget.flags.visible,
        checkable: widget.kind == WidgetKind::CheckBox,
        checked: widget.checked,
        selected: widget.selected,
        size: widget.size,
        child_count: widget.children.len(),
        children: widget.children.iter().map(node_of).collect(),
    }
}
