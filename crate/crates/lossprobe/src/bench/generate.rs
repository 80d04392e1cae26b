//! Deterministic corpus generation.
//!
//! Every app is derived from (corpus seed, app index) alone, so repeated
//! generation produces byte-identical spec files. Apps are small lifecycle
//! apps — 2 to 15 activities connected by a random navigation tree, widget
//! rows, optional dialogs, variables and scroll pages — with faults drawn
//! from the requested pattern mix. Fault placement is constrained so every
//! injected fault is detectable in principle:
//!
//! - crash faults never sit on the initial activity (the app must load),
//! - destroyed elements target decorative widgets, never the navigation
//!   buttons the exploration needs,
//! - modified values target an edit field without a resource id (the
//!   classic unsaved-view case),
//! - compromised states keep latency <= 2 so a single double rotation can
//!   flush them out.
//!
//! The first two slots of a multi-app corpus are reserved for the two
//! oracle-complementarity exemplars when the mix allows them: a
//! content-description flip only the property oracle can see, and a
//! render-affecting variable corruption only the snapshot oracle can see.
//! Detectability labels in the manifest are computed by the brute-force
//! ground-truth evaluator, never asserted; apps whose state space exceeds
//! the evaluator bounds are regenerated with a new salt.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::ground_truth::{
    evaluate_ground_truth, DetectableBy, GroundTruthConfig, GroundTruthError,
};
use crate::bench::{BenchError, CorpusApp, CorpusManifest, ManifestFault};
use crate::hash::fnv1a_salted;
use crate::sim::spec::*;

pub type PatternMix = BTreeMap<FaultPattern, f64>;

/// Equal weight over all five failure patterns.
pub fn uniform_mix() -> PatternMix {
    FaultPattern::ALL.iter().map(|&p| (p, 1.0)).collect()
}

pub const SCREEN: (u32, u32) = (144, 256);
const BODY_H: u32 = 256 - 12 - 12;
const ROW_STEP: u32 = 28;
const ROW_H: u32 = 24;

fn row_y(page: u32, row: u32) -> u32 {
    page * BODY_H + 4 + row * ROW_STEP
}

fn row_widget(kind: WidgetKind, page: u32, row: u32) -> WidgetSpec {
    WidgetSpec {
        kind,
        resource_id: None,
        default_text: String::new(),
        content_description: None,
        size: (128, ROW_H),
        position: (8, row_y(page, row)),
        flags: WidgetFlags::default(),
        children: Vec::new(),
    }
}

struct ActivityBuilder {
    spec: ActivitySpec,
    rows: BTreeMap<u32, u32>,
    page: u32,
}

impl ActivityBuilder {
    fn new(name: &str, pages: u32) -> Self {
        let root = WidgetSpec {
            kind: WidgetKind::Container,
            resource_id: None,
            default_text: String::new(),
            content_description: None,
            size: (SCREEN.0, BODY_H * pages),
            position: (0, 0),
            flags: WidgetFlags::default(),
            children: Vec::new(),
        };
        Self {
            spec: ActivitySpec {
                name: name.to_string(),
                widget_tree: root,
                dialogs: Vec::new(),
                variables: BTreeMap::new(),
                save_policy: BTreeMap::new(),
                restore_policy: BTreeMap::new(),
                transitions: Vec::new(),
                injected_faults: Vec::new(),
                scroll_extent: pages - 1,
            },
            rows: BTreeMap::new(),
            page: 0,
        }
    }

    fn to_page(&mut self, page: u32) {
        self.page = page;
    }

    fn push(&mut self, mut widget: WidgetSpec) -> String {
        let row = self.rows.entry(self.page).or_insert(0);
        widget.position = (8, row_y(self.page, *row));
        *row += 1;
        let path = format!("0/{}", self.spec.widget_tree.children.len());
        let locator = widget.locator_at(&path);
        self.spec.widget_tree.children.push(widget);
        locator
    }

    fn push_button(&mut self, resource_id: &str, text: &str, effects: Vec<Effect>) -> String {
        let mut button = row_widget(WidgetKind::Button, 0, 0);
        button.resource_id = Some(resource_id.to_string());
        button.default_text = text.to_string();
        button.flags.clickable = true;
        let locator = self.push(button);
        if !effects.is_empty() {
            self.spec.transitions.push(TransitionSpec {
                on: EventPattern {
                    kind: PatternKind::Touch,
                    locator: locator.clone(),
                },
                effects,
            });
        }
        locator
    }

    fn push_label(&mut self, text: &str) -> String {
        let mut label = row_widget(WidgetKind::Label, 0, 0);
        label.default_text = text.to_string();
        self.push(label)
    }

    fn push_edit(&mut self, resource_id: Option<&str>) -> String {
        let mut edit = row_widget(WidgetKind::EditText, 0, 0);
        edit.resource_id = resource_id.map(str::to_string);
        edit.flags.editable = true;
        self.push(edit)
    }

    fn push_check_box(&mut self) -> String {
        let mut cb = row_widget(WidgetKind::CheckBox, 0, 0);
        cb.size = (24, ROW_H);
        cb.flags.clickable = true;
        self.push(cb)
    }

    fn add_variable(&mut self, name: &str, default: Value) {
        self.spec.variables.insert(name.to_string(), default);
    }

    /// Adds a dialog template with a label and a dismiss button; returns the
    /// template locator.
    fn add_dialog(&mut self, title: &str) -> String {
        let index = self.spec.dialogs.len();
        let locator = format!("d{index}");
        let mut root = WidgetSpec {
            kind: WidgetKind::Dialog,
            resource_id: None,
            default_text: String::new(),
            content_description: None,
            size: (120, 96),
            position: (12, 60),
            flags: WidgetFlags::default(),
            children: Vec::new(),
        };
        let mut label = row_widget(WidgetKind::Label, 0, 0);
        label.default_text = title.to_string();
        label.size = (100, 20);
        label.position = (20, 70);
        root.children.push(label);
        let mut ok = row_widget(WidgetKind::Button, 0, 0);
        ok.default_text = "ok".to_string();
        ok.size = (60, 20);
        ok.position = (20, 110);
        ok.flags.clickable = true;
        root.children.push(ok);
        self.spec.dialogs.push(root);
        self.spec.transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: format!("{locator}/1"),
            },
            effects: vec![Effect::DismissDialog],
        });
        locator
    }
}

fn weighted_pattern(mix: &PatternMix, rng: &mut ChaCha8Rng) -> FaultPattern {
    let total: f64 = mix.values().sum();
    let mut draw = rng.gen::<f64>() * total;
    for (&pattern, &weight) in mix {
        draw -= weight;
        if draw < 0.0 {
            return pattern;
        }
    }
    *mix.keys().next_back().expect("mix validated nonempty")
}

/// The app shape, before fault injection. Deterministic in `shape_seed`.
fn build_shape(name: &str, shape_seed: u64) -> AppSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(shape_seed);
    let n_activities = rng.gen_range(2..=15u32);
    let mut builders = Vec::new();

    for j in 0..n_activities {
        let pages = if rng.gen_bool(0.2) { 2 } else { 1 };
        let mut b = ActivityBuilder::new(&format!("a{j:02}"), pages);

        b.push_label(&format!("screen {j}"));
        if rng.gen_bool(0.6) {
            b.push_edit(Some(&format!("e{j:02}")));
        }
        if rng.gen_bool(0.4) {
            b.push_check_box();
        }
        if rng.gen_bool(0.5) {
            let var = format!("v{j:02}");
            b.add_variable(&var, Value::Text("v0".into()));
            b.push_button(
                &format!("set{j:02}"),
                "apply",
                vec![Effect::SetVariable {
                    name: var,
                    value: Value::Text("on".into()),
                }],
            );
        }
        if rng.gen_bool(0.3) {
            let dialog = b.add_dialog(&format!("info {j}"));
            b.push_button(
                &format!("dlg{j:02}"),
                "details",
                vec![Effect::ShowDialog { dialog }],
            );
        }
        if pages > 1 {
            b.to_page(1);
            b.push_label(&format!("more {j}"));
            if rng.gen_bool(0.5) {
                b.push_edit(Some(&format!("x{j:02}")));
            }
            b.to_page(0);
        }
        builders.push(b);
    }

    // Navigation tree: every activity hangs off a uniformly chosen earlier
    // one, which keeps the graph connected and shallow.
    for j in 1..n_activities {
        let parent = rng.gen_range(0..j);
        let target = format!("a{j:02}");
        builders[parent as usize].push_button(
            &format!("go{j:02}"),
            &format!("open {j}"),
            vec![Effect::NavigateTo(target)],
        );
    }

    AppSpec {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities: builders.into_iter().map(|b| b.spec).collect(),
    }
}

/// Injects one fault of the given pattern into activity `j`, adding a
/// suitable target when the shape lacks one.
fn inject_fault(spec: &mut AppSpec, j: usize, pattern: FaultPattern, rng: &mut ChaCha8Rng) {
    let name = spec.activities[j].name.clone();
    let activity = &mut spec.activities[j];
    let fault = match pattern {
        FaultPattern::Crash | FaultPattern::CompromisedState => {
            let var = format!("v{j:02}");
            activity
                .variables
                .entry(var.clone())
                .or_insert(Value::Text("v0".into()));
            if pattern == FaultPattern::Crash {
                FaultSpec {
                    pattern,
                    target: var,
                    arming_condition: None,
                    latency: 1,
                    outcome: None,
                    wrong_description: None,
                }
            } else {
                FaultSpec {
                    pattern,
                    target: var,
                    arming_condition: None,
                    latency: rng.gen_range(1..=2),
                    outcome: Some(if rng.gen_bool(0.5) {
                        CompromisedOutcome::Crash
                    } else {
                        CompromisedOutcome::Corrupt
                    }),
                    wrong_description: None,
                }
            }
        }
        FaultPattern::DestroyedElement => {
            let index = activity.widget_tree.children.len();
            let mut doomed = row_widget(WidgetKind::Label, 0, 0);
            doomed.default_text = format!("status {j}");
            doomed.position = (8, row_y(0, 6));
            activity.widget_tree.children.push(doomed);
            FaultSpec {
                pattern,
                target: format!("0/{index}"),
                arming_condition: None,
                latency: 1,
                outcome: None,
                wrong_description: None,
            }
        }
        FaultPattern::PhantomElement => {
            let index = activity.dialogs.len();
            let mut ghost = WidgetSpec {
                kind: WidgetKind::Dialog,
                resource_id: None,
                default_text: String::new(),
                content_description: None,
                size: (120, 80),
                position: (12, 40),
                flags: WidgetFlags::default(),
                children: Vec::new(),
            };
            let mut message = row_widget(WidgetKind::Label, 0, 0);
            message.default_text = "unexpected".to_string();
            message.size = (100, 20);
            message.position = (20, 50);
            ghost.children.push(message);
            activity.dialogs.push(ghost);
            FaultSpec {
                pattern,
                target: format!("d{index}"),
                arming_condition: None,
                latency: 1,
                outcome: None,
                wrong_description: None,
            }
        }
        FaultPattern::ModifiedValue => {
            let index = activity.widget_tree.children.len();
            let mut field = row_widget(WidgetKind::EditText, 0, 0);
            field.flags.editable = true;
            field.position = (8, row_y(0, 7));
            activity.widget_tree.children.push(field);
            FaultSpec {
                pattern,
                target: format!("0/{index}"),
                arming_condition: None,
                latency: 1,
                outcome: None,
                wrong_description: None,
            }
        }
    };
    let _ = name;
    activity.injected_faults.push(fault);
}

/// Fig-style exemplar: a drawer-toggle whose content description flips on
/// recreate while the pixels stay identical. Property oracle only.
pub fn property_exemplar_app(name: &str) -> AppSpec {
    let mut main = ActivityBuilder::new("a00", 1);
    main.push_label("home");
    let mut toggle = row_widget(WidgetKind::Button, 0, 1);
    toggle.resource_id = Some("drawer_toggle".to_string());
    toggle.content_description = Some("Close navigation drawer".to_string());
    toggle.flags.clickable = true;
    main.push(toggle);
    main.push_button("go01", "open 1", vec![Effect::NavigateTo("a01".into())]);
    main.spec.injected_faults.push(FaultSpec {
        pattern: FaultPattern::ModifiedValue,
        target: "drawer_toggle".to_string(),
        arming_condition: None,
        latency: 1,
        outcome: None,
        wrong_description: Some("Open navigation drawer".to_string()),
    });

    let mut detail = ActivityBuilder::new("a01", 1);
    detail.push_label("detail");

    AppSpec {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities: vec![main.spec, detail.spec],
    }
}

/// Fig-style exemplar: an internal zoom variable that renders into the
/// screen but appears in no view property; its corruption is visible to the
/// snapshot oracle only.
pub fn snapshot_exemplar_app(name: &str) -> AppSpec {
    let mut main = ActivityBuilder::new("a00", 1);
    main.push_label("map");
    main.add_variable("zoom", Value::Int(4));
    main.push_button("go01", "open 1", vec![Effect::NavigateTo("a01".into())]);
    main.spec.injected_faults.push(FaultSpec {
        pattern: FaultPattern::CompromisedState,
        target: "zoom".to_string(),
        arming_condition: None,
        latency: 1,
        outcome: Some(CompromisedOutcome::Corrupt),
        wrong_description: None,
    });

    let mut detail = ActivityBuilder::new("a01", 1);
    detail.push_label("detail");

    AppSpec {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities: vec![main.spec, detail.spec],
    }
}

/// An edit field without a resource id that resets to its default on
/// recreate: both oracles fire.
pub fn modified_value_app(name: &str) -> AppSpec {
    let mut main = ActivityBuilder::new("a00", 1);
    main.push_label("form");
    let field = main.push_edit(None);
    main.spec.injected_faults.push(FaultSpec {
        pattern: FaultPattern::ModifiedValue,
        target: field,
        arming_condition: None,
        latency: 1,
        outcome: None,
        wrong_description: None,
    });
    AppSpec {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities: vec![main.spec],
    }
}

/// A crash on recreate: the restore breaks the state and the next
/// interaction kills the app.
pub fn crash_app(name: &str) -> AppSpec {
    let mut main = ActivityBuilder::new("a00", 1);
    main.push_label("start");
    main.add_variable("session", Value::Text("fresh".into()));
    main.spec.injected_faults.push(FaultSpec {
        pattern: FaultPattern::Crash,
        target: "session".to_string(),
        arming_condition: None,
        latency: 1,
        outcome: None,
        wrong_description: None,
    });
    AppSpec {
        format_version: FORMAT_VERSION,
        name: name.to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities: vec![main.spec],
    }
}

/// A fault-free app derived from a seed; same shape family as the corpus.
pub fn fault_free_app(seed: u64) -> AppSpec {
    build_shape(
        &format!("neutral-{seed:04x}"),
        fnv1a_salted("fault-free", seed),
    )
}

/// A 13-activity app used to study the exploration bias: a hub navigates to
/// twelve leaves, and every leaf is padded with decoy buttons so that
/// re-entering an already-explored leaf wastes a long stretch of budget
/// before BACK is drawn again. Uniformly-random draws re-enter known leaves,
/// so coverage under a tight budget degrades measurably as the random
/// fraction of the selection policy grows.
pub fn epsilon_trend_app() -> AppSpec {
    let compact_button = |rid: &str, row: u32| WidgetSpec {
        kind: WidgetKind::Button,
        resource_id: Some(rid.to_string()),
        default_text: "b".into(),
        content_description: None,
        size: (128, 12),
        position: (8, 4 + row * 14),
        flags: WidgetFlags {
            clickable: true,
            ..WidgetFlags::default()
        },
        children: Vec::new(),
    };
    let root = |children: Vec<WidgetSpec>| WidgetSpec {
        kind: WidgetKind::Container,
        resource_id: None,
        default_text: String::new(),
        content_description: None,
        size: (SCREEN.0, BODY_H),
        position: (0, 0),
        flags: WidgetFlags::default(),
        children,
    };
    let bare_activity = |name: &str, tree: WidgetSpec, transitions: Vec<TransitionSpec>| {
        ActivitySpec {
            name: name.to_string(),
            widget_tree: tree,
            dialogs: Vec::new(),
            variables: BTreeMap::new(),
            save_policy: BTreeMap::new(),
            restore_policy: BTreeMap::new(),
            transitions,
            injected_faults: Vec::new(),
            scroll_extent: 0,
        }
    };

    let mut activities = Vec::new();
    let mut hub_children = Vec::new();
    let mut hub_transitions = Vec::new();
    for j in 1..13u32 {
        let rid = format!("go{j:02}");
        hub_children.push(compact_button(&rid, j - 1));
        hub_transitions.push(TransitionSpec {
            on: EventPattern {
                kind: PatternKind::Touch,
                locator: rid,
            },
            effects: vec![Effect::NavigateTo(format!("a{j:02}"))],
        });
    }
    for d in 0..2u32 {
        hub_children.push(compact_button(&format!("hd{d}"), 12 + d));
    }
    activities.push(bare_activity("a00", root(hub_children), hub_transitions));

    for j in 1..13u32 {
        let children = (0..10u32)
            .map(|d| compact_button(&format!("l{j:02}d{d}"), d))
            .collect();
        activities.push(bare_activity(&format!("a{j:02}"), root(children), Vec::new()));
    }

    AppSpec {
        format_version: FORMAT_VERSION,
        name: "hub13".to_string(),
        screen: SCREEN,
        crop_header: None,
        crop_footer: None,
        initial_activity: "a00".to_string(),
        activities,
    }
}

fn validate_mix(mix: &PatternMix) -> Result<(), BenchError> {
    if mix.is_empty() {
        return Err(BenchError::InvalidMix("empty pattern mix".into()));
    }
    if mix.values().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(BenchError::InvalidMix(
            "weights must be finite and non-negative".into(),
        ));
    }
    if mix.values().sum::<f64>() <= 0.0 {
        return Err(BenchError::InvalidMix("all weights are zero".into()));
    }
    Ok(())
}

/// One generated app with computed detectability labels.
fn generate_app(
    corpus_seed: u64,
    index: u32,
    mix: &PatternMix,
    gt_config: &GroundTruthConfig,
) -> Result<(AppSpec, Vec<ManifestFault>), BenchError> {
    let name = format!("app-{index:03}");
    let modified_weight = mix.get(&FaultPattern::ModifiedValue).copied().unwrap_or(0.0);
    let compromised_weight = mix
        .get(&FaultPattern::CompromisedState)
        .copied()
        .unwrap_or(0.0);

    for attempt in 0..32u64 {
        let salt = fnv1a_salted(&format!("app:{index}:{attempt}"), corpus_seed);
        let spec = if index == 0 && modified_weight > 0.0 {
            property_exemplar_app(&name)
        } else if index == 1 && compromised_weight > 0.0 {
            snapshot_exemplar_app(&name)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(salt);
            let mut spec = build_shape(&name, salt);
            let n_faults = rng.gen_range(1..=2usize).min(spec.activities.len() - 1);
            let mut used = Vec::new();
            for _ in 0..n_faults {
                let pattern = weighted_pattern(mix, &mut rng);
                let lo = usize::from(pattern == FaultPattern::Crash);
                let mut j = rng.gen_range(lo..spec.activities.len());
                let mut tries = 0;
                while used.contains(&j) && tries < 8 {
                    j = rng.gen_range(lo..spec.activities.len());
                    tries += 1;
                }
                if used.contains(&j) {
                    continue;
                }
                used.push(j);
                inject_fault(&mut spec, j, pattern, &mut rng);
            }
            spec
        };

        spec.validate()?;
        match evaluate_ground_truth(&spec, gt_config) {
            Ok(truth) => {
                let all_detectable = truth
                    .fault_labels
                    .values()
                    .all(|&label| label != DetectableBy::Undetected);
                if !all_detectable {
                    continue;
                }
                let mut faults = Vec::new();
                for activity in &spec.activities {
                    for fault in &activity.injected_faults {
                        let id = fault.id_in(&activity.name);
                        faults.push(ManifestFault {
                            id: id.clone(),
                            activity: activity.name.clone(),
                            pattern: fault.pattern,
                            detectable_by: truth.fault_labels[&id],
                        });
                    }
                }
                return Ok((spec, faults));
            }
            Err(
                GroundTruthError::StateSpaceTooLarge { .. }
                | GroundTruthError::AbstractSpaceTooLarge { .. },
            ) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(BenchError::Generation {
        index,
        reason: "no attempt produced a tractable, fully detectable app".into(),
    })
}

/// Generates `count` app specs plus the manifest into `out_dir`.
pub fn generate_corpus(
    count: u32,
    seed: u64,
    mix: &PatternMix,
    out_dir: &Path,
) -> Result<CorpusManifest, BenchError> {
    if count < 1 {
        return Err(BenchError::InvalidMix("count must be >= 1".into()));
    }
    validate_mix(mix)?;
    std::fs::create_dir_all(out_dir)?;

    let gt_config = GroundTruthConfig {
        max_concrete_states: 4_000,
        ..GroundTruthConfig::default()
    };
    let mut apps = Vec::new();
    for index in 0..count {
        let (spec, faults) = generate_app(seed, index, mix, &gt_config)?;
        let file = format!("{}.ron", spec.name);
        spec.save_file(&out_dir.join(&file))?;
        apps.push(CorpusApp {
            id: spec.name.clone(),
            spec_path: file,
            activities: spec.activities.len() as u32,
            faults,
        });
    }
    let manifest = CorpusManifest { seed, count, apps };
    manifest.save_file(&out_dir.join("manifest.ron"))?;
    Ok(manifest)
}
