//! Widget-hierarchy property records: the state representation used by the
//! property-based oracle.
//!
//! Every node carries the same fixed field set a device-side view dump
//! exposes (content description, resource id, text, visibility, check state,
//! selection, size and child count) plus the ordered child list. The
//! canonical text form is byte-stable so two dumps of the same state diff
//! cleanly with ordinary line tools.

use serde::{Deserialize, Serialize};

/// One view record. `child_count` is kept explicit (not derived) because it
/// is part of the captured payload and participates in comparison.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyNode {
    pub content_description: Option<String>,
    pub resource_id: Option<String>,
    pub text: String,
    pub visible: bool,
    pub checkable: bool,
    pub checked: bool,
    pub selected: bool,
    /// Width and height in pixels, serialized as `W*H`.
    pub size: (u32, u32),
    pub child_count: usize,
    pub children: Vec<PropertyNode>,
}

/// A captured view hierarchy. Overlays such as dialogs appear as the last
/// children of the root, mirroring their z-order above the activity content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyTree {
    pub root: PropertyNode,
}

impl PropertyNode {
    /// Invariant check: `child_count` matches the child list at every level.
    pub fn is_consistent(&self) -> bool {
        self.child_count == self.children.len() && self.children.iter().all(Self::is_consistent)
    }
}

impl PropertyTree {
    pub fn is_consistent(&self) -> bool {
        self.root.is_consistent()
    }

    /// Canonical text serialization: one node per line, children indented
    /// two spaces under their parent, fields always in the same order.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        write_node(&mut out, &self.root, 0);
        out
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        fn count(n: &PropertyNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }
}

fn write_node(out: &mut String, node: &PropertyNode, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push('{');
    push_field(out, "content_description", &opt_repr(&node.content_description));
    out.push_str(", ");
    push_field(out, "resource_id", &opt_repr(&node.resource_id));
    out.push_str(", ");
    push_field(out, "text", &str_repr(&node.text));
    out.push_str(", ");
    push_field(out, "visible", &bool_repr(node.visible));
    out.push_str(", ");
    push_field(out, "checkable", &bool_repr(node.checkable));
    out.push_str(", ");
    push_field(out, "size", &str_repr(&format!("{}*{}", node.size.0, node.size.1)));
    out.push_str(", ");
    push_field(out, "checked", &bool_repr(node.checked));
    out.push_str(", ");
    push_field(out, "selected", &bool_repr(node.selected));
    out.push_str(", ");
    push_field(out, "child_count", &node.child_count.to_string());
    out.push_str("}\n");
    for child in &node.children {
        write_node(out, child, depth + 1);
    }
}

fn push_field(out: &mut String, name: &str, value: &str) {
    out.push('\'');
    out.push_str(name);
    out.push_str("': ");
    out.push_str(value);
}

fn bool_repr(v: bool) -> String {
    if v { "True".into() } else { "False".into() }
}

fn opt_repr(v: &Option<String>) -> String {
    match v {
        None => "None".into(),
        Some(s) => str_repr(s),
    }
}

fn str_repr(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out.push('\'');
    out
}
