//! Deterministic rasterization of a concrete screen.
//!
//! The raster is synthetic but information-preserving where it matters for a
//! pixel oracle:
//!
//! - the header band carries the frame counter, so it changes on every call
//!   (the clock/battery noise a real status bar would show; oracles crop it),
//! - the footer band is a static navigation bar,
//! - widget text is hashed into a glyph block, so distinct strings produce
//!   distinct pixels without any font dependency,
//! - check state draws an inner mark, dialogs overdraw the activity content,
//! - a watermark stripe at the bottom of the body reflects the foreground
//!   activity's variable valuation: internal state an app surfaces visually
//!   (zoom levels, progress) that a view-property dump does not expose.
//!
//! Identical states always produce identical rasters outside the header.

use crate::hash::{fnv1a_salted, stream_byte};
use crate::image::GrayImage;
use crate::sim::spec::WidgetKind;
use crate::sim::state::{ConcreteState, ConcreteWidget};

pub const WATERMARK_ROWS: u32 = 8;

const BODY_BG: u8 = 255;
const FOOTER_BG: u8 = 64;
const BORDER: u8 = 32;

/// Renders the screen at a fixed raster size. `screen` is the portrait
/// (width, height); orientation only affects the header marker since the
/// simulated layout does not reflow.
pub fn render_state(
    state: &ConcreteState,
    screen: (u32, u32),
    header_px: u32,
    footer_px: u32,
    frame: u64,
) -> GrayImage {
    let (width, height) = screen;
    let mut img = GrayImage::new(width, height, BODY_BG);

    // Header: per-frame noise plus an orientation marker.
    let header_hash = fnv1a_salted("header", frame);
    for y in 0..header_px.min(height) {
        for x in 0..width {
            let i = u64::from(y) * u64::from(width) + u64::from(x);
            img.set(x, y, stream_byte(header_hash, i));
        }
    }
    if header_px > 0 {
        let marker = match state.orientation {
            crate::sim::state::Orientation::Portrait => 0u8,
            crate::sim::state::Orientation::Landscape => 255u8,
        };
        img.fill_rect(0, 0, 4.min(width), header_px.min(4), marker);
    }

    // Footer: static navigation band.
    let footer_top = height.saturating_sub(footer_px);
    img.fill_rect(0, i64::from(footer_top), width, footer_px, FOOTER_BG);

    let body_top = i64::from(header_px);
    let body_h = height - header_px - footer_px;
    let scroll_shift = i64::from(state.scroll_offset) * i64::from(body_h);

    draw_widget(&mut img, &state.widget_tree, body_top, scroll_shift, footer_top);
    for dialog in &state.dialog_stack {
        draw_widget(&mut img, dialog, body_top, 0, footer_top);
    }

    // Watermark stripe: deterministic pattern over the variable valuation.
    if body_h > WATERMARK_ROWS {
        let valuation = state
            .variable_valuation
            .iter()
            .map(|(k, v)| format!("{k}={v};"))
            .collect::<String>();
        let stripe_hash = fnv1a_salted(&valuation, 0x7761_7465_726d);
        let stripe_top = u64::from(footer_top - WATERMARK_ROWS);
        for y in 0..WATERMARK_ROWS {
            for x in 0..width {
                let i = u64::from(y) * u64::from(width) + u64::from(x);
                img.set(x, (stripe_top + u64::from(y)) as u32, stream_byte(stripe_hash, i));
            }
        }
    }

    img
}

fn kind_fill(kind: WidgetKind) -> u8 {
    match kind {
        WidgetKind::Button => 200,
        WidgetKind::Label => 240,
        WidgetKind::EditText => 250,
        WidgetKind::CheckBox => 230,
        WidgetKind::Dialog => 220,
        WidgetKind::List => 235,
        WidgetKind::Container => 245,
    }
}

fn draw_widget(
    img: &mut GrayImage,
    widget: &ConcreteWidget,
    body_top: i64,
    scroll_shift: i64,
    footer_top: u32,
) {
    // Effective visibility was baked into the state; invisible subtrees are
    // simply not drawn.
    if !widget.flags.visible {
        return;
    }
    let x = i64::from(widget.position.0);
    let y = body_top + i64::from(widget.position.1) - scroll_shift;
    let (w, h) = widget.size;

    draw_clipped(img, x, y, w, h, kind_fill(widget.kind), body_top, footer_top);
    draw_border(img, x, y, w, h, body_top, footer_top);

    if !widget.text.is_empty() && w > 4 && h > 4 {
        let text_hash = fnv1a_salted(&widget.text, 0x7465_7874);
        let tw = w - 4;
        let th = h - 4;
        for yy in 0..th {
            let row_y = y + 2 + i64::from(yy);
            if row_y < body_top || row_y >= i64::from(footer_top) || row_y < 0 {
                continue;
            }
            for xx in 0..tw {
                let px = x + 2 + i64::from(xx);
                if px < 0 || px >= i64::from(img.width) {
                    continue;
                }
                let i = u64::from(yy) * u64::from(tw) + u64::from(xx);
                img.set(px as u32, row_y as u32, stream_byte(text_hash, i));
            }
        }
    }

    if widget.kind == WidgetKind::CheckBox && widget.checked && w > 8 && h > 8 {
        draw_clipped(img, x + 4, y + 4, w - 8, h - 8, 16, body_top, footer_top);
    }

    for child in &widget.children {
        draw_widget(img, child, body_top, scroll_shift, footer_top);
    }
}

fn draw_clipped(
    img: &mut GrayImage,
    x: i64,
    y: i64,
    w: u32,
    h: u32,
    value: u8,
    body_top: i64,
    footer_top: u32,
) {
    let y0 = y.max(body_top);
    let y1 = (y + i64::from(h)).min(i64::from(footer_top));
    if y1 <= y0 {
        return;
    }
    img.fill_rect(x, y0, w, (y1 - y0) as u32, value);
}

fn draw_border(
    img: &mut GrayImage,
    x: i64,
    y: i64,
    w: u32,
    h: u32,
    body_top: i64,
    footer_top: u32,
) {
    draw_clipped(img, x, y, w, 1, BORDER, body_top, footer_top);
    draw_clipped(img, x, y + i64::from(h) - 1, w, 1, BORDER, body_top, footer_top);
    draw_clipped(img, x, y, 1, h, BORDER, body_top, footer_top);
    draw_clipped(img, x + i64::from(w) - 1, y, 1, h, BORDER, body_top, footer_top);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::testutil::*;
    use crate::sim::AppInstance;
    use std::sync::Arc;

    fn screen_setup() -> (crate::sim::spec::AppSpec, u32, u32) {
        let app = minimal_app();
        let header = app.header_px();
        let footer = app.footer_px();
        (app, header, footer)
    }

    fn diff_rows(a: &crate::image::GrayImage, b: &crate::image::GrayImage) -> Vec<u32> {
        let mut rows = Vec::new();
        for y in 0..a.height {
            for x in 0..a.width {
                if a.get(x, y) != b.get(x, y) {
                    rows.push(y);
                    break;
                }
            }
        }
        rows
    }

    #[test]
    fn repeated_renders_differ_only_inside_header_band() {
        let (app, header, footer) = screen_setup();
        let state = AppInstance::load(Arc::new(app.clone()), 0)
            .unwrap()
            .concrete_state();
        let a = render_state(&state, app.screen, header, footer, 1);
        let b = render_state(&state, app.screen, header, footer, 2);
        let rows = diff_rows(&a, &b);
        assert!(!rows.is_empty(), "frame counter must perturb the header");
        assert!(rows.iter().all(|&y| y < header));
    }

    #[test]
    fn identical_states_and_frames_render_identically() {
        let (app, header, footer) = screen_setup();
        let state = AppInstance::load(Arc::new(app.clone()), 0)
            .unwrap()
            .concrete_state();
        let a = render_state(&state, app.screen, header, footer, 5);
        let b = render_state(&state, app.screen, header, footer, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn label_text_change_is_visible_outside_the_bands() {
        let (mut app, header, footer) = screen_setup();
        app.activities[0]
            .widget_tree
            .children
            .push(label_widget("l", "hello"));
        let mut changed = app.clone();
        changed.activities[0].widget_tree.children[1].default_text = "world".into();

        let a_state = AppInstance::load(Arc::new(app.clone()), 0)
            .unwrap()
            .concrete_state();
        let b_state = AppInstance::load(Arc::new(changed), 0).unwrap().concrete_state();
        let a = render_state(&a_state, app.screen, header, footer, 1);
        let b = render_state(&b_state, app.screen, header, footer, 1);
        let rows = diff_rows(&a, &b);
        assert!(rows
            .iter()
            .any(|&y| y >= header && y < app.screen.1 - footer));
    }

    #[test]
    fn invisible_widgets_are_not_drawn() {
        let (mut app, header, footer) = screen_setup();
        let mut hidden = label_widget("h", "ghost");
        hidden.flags.visible = false;
        app.activities[0].widget_tree.children.push(hidden);
        let with_hidden = AppInstance::load(Arc::new(app.clone()), 0)
            .unwrap()
            .concrete_state();

        let mut bare = minimal_app();
        bare.activities[0] = app.activities[0].clone();
        bare.activities[0].widget_tree.children.pop();
        let without = AppInstance::load(Arc::new(bare), 0).unwrap().concrete_state();

        let a = render_state(&with_hidden, app.screen, header, footer, 1);
        let b = render_state(&without, app.screen, header, footer, 1);
        assert_eq!(a, b);
    }

    #[test]
    fn watermark_tracks_variable_valuation() {
        let (mut app, header, footer) = screen_setup();
        app.activities[0]
            .variables
            .insert("zoom".into(), crate::sim::spec::Value::Int(1));
        let mut other = app.clone();
        other.activities[0]
            .variables
            .insert("zoom".into(), crate::sim::spec::Value::Int(2));

        let a_state = AppInstance::load(Arc::new(app.clone()), 0)
            .unwrap()
            .concrete_state();
        let b_state = AppInstance::load(Arc::new(other), 0).unwrap().concrete_state();
        let a = render_state(&a_state, app.screen, header, footer, 1);
        let b = render_state(&b_state, app.screen, header, footer, 1);
        let footer_top = app.screen.1 - footer;
        let rows = diff_rows(&a, &b);
        assert!(!rows.is_empty());
        assert!(rows
            .iter()
            .all(|&y| y >= footer_top - WATERMARK_ROWS && y < footer_top));
    }
}
