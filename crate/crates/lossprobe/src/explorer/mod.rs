//! The campaign loop.
//!
//! Exploration visits as many abstract states as possible and tests each for
//! data loss. Newly reached states get the systematic data-loss-revealing
//! action (fill in inputs, capture, rotate twice, compare, scroll); on
//! revisits the next action is chosen with probability epsilon uniformly
//! from all enabled actions plus the probabilistic data-loss-revealing
//! action, and with probability 1 - epsilon from the not-yet-executed
//! actions plus the probabilistic action (falling back to the full set when
//! everything has been tried). Crashes are reported, the app is reloaded at
//! its initial state, and the campaign continues until the budget runs out.
//!
//! For a fixed (app, config) every campaign output is deterministic.

pub mod trace;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hash::fnv1a_salted;
use crate::image::Raster;
use crate::model::{abstract_state, AbstractState, Event, EventKind, GuiModel};
use crate::oracles::{
    capture_properties, capture_snapshot, combined_verdict, compare_properties,
    compare_snapshots, CombinedVerdict, OracleError, OracleMode, Verdict,
};
use crate::report::{
    Budget, CampaignSummary, CaptureArtifacts, DataLossReport, FindingCategory,
};
use crate::sim::{Driver, SimDriver, SimError, StepOutcome};
use crate::sim::spec::{AppSpec, WidgetKind};
use crate::sim::state::ConcreteState;
use trace::{ActionTrace, TraceStep, TraceVerdict};

#[derive(Debug, Clone)]
pub struct ExplorerConfig {
    /// Probability of taking the uniformly-random branch on revisits.
    pub epsilon: f64,
    pub budget: Budget,
    pub seed: u64,
    pub oracle_mode: OracleMode,
    /// Actions executed before testing starts (login flows, permissions).
    pub setup_actions: Vec<Event>,
    /// Extra state reads allowed after each rotation until two consecutive
    /// reads agree; absorbs slow activity recreation on noisy drivers.
    pub settle_retries: u32,
}

impl Default for ExplorerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            budget: Budget::Actions(1000),
            seed: 0,
            oracle_mode: OracleMode::Both,
            setup_actions: Vec::new(),
            settle_retries: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("budget invalid: {0}")]
    BudgetInvalid(String),
    #[error("epsilon must be within [0, 1], got {0}")]
    EpsilonInvalid(f64),
    #[error("setup failed: {0}")]
    SetupFailed(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Deterministic fill-in payload for an editable widget: a function of the
/// widget locator and the campaign seed, never empty, and nudged if it
/// would collide with the text currently shown.
pub fn fill_value(locator: &str, seed: u64, current: &str) -> String {
    let mut value = format!("w{:06x}", fnv1a_salted(locator, seed) & 0xff_ffff);
    if value == current {
        value.push('x');
    }
    value
}

/// Events the fill-in step performs on a screen: a set-text per visible
/// editable widget and a toggle per check box still at its default.
pub fn fill_in_events(state: &ConcreteState, seed: u64) -> Vec<Event> {
    let scope = match state.top_dialog() {
        Some(dialog) => dialog,
        None => &state.widget_tree,
    };
    let mut widgets = Vec::new();
    scope.walk(&mut widgets);
    let mut events = Vec::new();
    for widget in widgets {
        if !widget.flags.visible {
            continue;
        }
        if widget.flags.editable {
            events.push(Event::set_text(
                widget.locator.clone(),
                fill_value(&widget.locator, seed, &widget.text),
            ));
        }
        if widget.kind == WidgetKind::CheckBox && widget.flags.clickable && !widget.checked {
            events.push(Event::touch(widget.locator.clone()));
        }
    }
    events
}

/// Selects the next action on a revisited state. The returned event is one
/// of the enabled events or the probabilistic data-loss-revealing marker;
/// selection is uniform within the chosen set.
pub fn choose_action(
    model: &GuiModel,
    q: &AbstractState,
    enabled: &BTreeSet<Event>,
    rng: &mut impl Rng,
    epsilon: f64,
) -> Event {
    let all: Vec<&Event> = enabled.iter().collect();
    assert!(!all.is_empty(), "enabled set must be nonempty");
    let random_branch = rng.gen::<f64>() < epsilon;
    let pool: Vec<&Event> = if random_branch {
        all
    } else {
        let unexecuted = model.unexecuted_events(q);
        let fresh: Vec<&Event> = enabled
            .iter()
            .filter(|e| unexecuted.contains(&e.identity()))
            .collect();
        if fresh.is_empty() {
            // Every action tried already: fall back to the random branch's
            // set so the campaign keeps moving.
            all
        } else {
            fresh
        }
    };
    let idx = rng.gen_range(0..=pool.len());
    if idx == pool.len() {
        Event::dlr_probabilistic()
    } else {
        pool[idx].clone()
    }
}

/// Captured oracle state for the strategies selected by the mode.
pub fn capture_once(
    driver: &mut dyn Driver,
    mode: OracleMode,
) -> Result<CaptureArtifacts, OracleError> {
    let snapshot = if mode.uses_snapshot() {
        let raster = Raster::Gray(driver.render());
        Some(capture_snapshot(
            &raster,
            driver.crop_header(),
            driver.crop_footer(),
        )?)
    } else {
        None
    };
    let tree = mode
        .uses_property()
        .then(|| capture_properties(&driver.dump_hierarchy()));
    Ok(CaptureArtifacts { snapshot, tree })
}

/// Settle protocol: reads the state up to `retries` additional times until
/// two consecutive reads are equal, then returns the settled read. The
/// simulated driver settles immediately; the retries only matter for noisy
/// drivers that expose mid-recreation frames.
pub fn capture_settled(
    driver: &mut dyn Driver,
    mode: OracleMode,
    retries: u32,
) -> Result<CaptureArtifacts, OracleError> {
    let mut prev = capture_once(driver, mode)?;
    for _ in 0..retries {
        let next = capture_once(driver, mode)?;
        if next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}

/// Compares two captures under the configured mode.
pub fn compare_captures(
    before: &CaptureArtifacts,
    after: &CaptureArtifacts,
    mode: OracleMode,
) -> Result<(Option<Verdict>, Option<Verdict>, CombinedVerdict), OracleError> {
    let vs = match (&before.snapshot, &after.snapshot) {
        (Some(a), Some(b)) => Some(compare_snapshots(a, b)?),
        _ => None,
    };
    let vp = match (&before.tree, &after.tree) {
        (Some(a), Some(b)) => Some(compare_properties(a, b)),
        _ => None,
    };
    let combined = combined_verdict(vs.as_ref(), vp.as_ref(), mode)?;
    Ok((vs, vp, combined))
}

struct BudgetMeter {
    budget: Budget,
    used: u64,
    started: Instant,
}

impl BudgetMeter {
    fn new(budget: Budget) -> Self {
        Self {
            budget,
            used: 0,
            started: Instant::now(),
        }
    }

    fn exhausted(&self) -> bool {
        match self.budget {
            Budget::Actions(max) => self.used >= max,
            Budget::Seconds(max) => self.started.elapsed().as_secs_f64() >= max,
        }
    }

    fn tick(&mut self) {
        self.used += 1;
    }
}

enum StepResult {
    Ok,
    Crashed,
    BudgetUp,
}

enum DlrResult {
    Clean,
    Violation,
    Crashed,
    BudgetUp,
}

struct Campaign<'d> {
    driver: &'d mut dyn Driver,
    config: ExplorerConfig,
    model: GuiModel,
    rng: ChaCha8Rng,
    meter: BudgetMeter,
    trace: ActionTrace,
    tested: BTreeSet<AbstractState>,
    findings: Vec<DataLossReport>,
    visited: BTreeSet<String>,
    systematic_runs: u64,
    probabilistic_runs: u64,
    crash_count: u64,
    step_index: u64,
}

impl<'d> Campaign<'d> {
    fn new(driver: &'d mut dyn Driver, config: ExplorerConfig) -> Result<Self, CampaignError> {
        match config.budget {
            Budget::Actions(0) => {
                return Err(CampaignError::BudgetInvalid("zero action budget".into()))
            }
            Budget::Seconds(s) if !(s > 0.0) => {
                return Err(CampaignError::BudgetInvalid(format!(
                    "non-positive time budget {s}"
                )))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&config.epsilon) {
            return Err(CampaignError::EpsilonInvalid(config.epsilon));
        }
        let initial = abstract_state(&driver.concrete_state());
        let model = GuiModel::new(initial);
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let meter = BudgetMeter::new(config.budget);
        Ok(Self {
            driver,
            config,
            model,
            rng,
            meter,
            trace: ActionTrace::default(),
            tested: BTreeSet::new(),
            findings: Vec::new(),
            visited: BTreeSet::new(),
            systematic_runs: 0,
            probabilistic_runs: 0,
            crash_count: 0,
            step_index: 0,
        })
    }

    fn current_abstract(&self) -> AbstractState {
        abstract_state(&self.driver.concrete_state())
    }

    /// Applies one primitive event: budget, trace and model bookkeeping in
    /// one place. Crashes are turned into findings and recovered from.
    fn exec_event(&mut self, event: &Event, count_budget: bool) -> Result<StepResult, CampaignError> {
        if count_budget && self.meter.exhausted() {
            return Ok(StepResult::BudgetUp);
        }
        let from = self.current_abstract();
        let outcome = if event.kind == EventKind::Rotate {
            self.driver.rotate()?
        } else {
            self.driver.apply_event(event)?
        };
        if count_budget {
            self.meter.tick();
        }
        let index = self.step_index;
        self.step_index += 1;
        match outcome {
            StepOutcome::Ok => {
                let to = self.current_abstract();
                self.visited.insert(to.activity.clone());
                self.model.record_transition(&from, event, &to);
                let state_id = self.model.id_of(&to);
                self.trace.push(TraceStep {
                    index,
                    event: event.clone(),
                    state_id,
                    crashed: false,
                    verdict: None,
                });
                Ok(StepResult::Ok)
            }
            StepOutcome::Crashed(record) => {
                self.trace.push(TraceStep {
                    index,
                    event: event.clone(),
                    state_id: None,
                    crashed: true,
                    verdict: None,
                });
                self.crash_count += 1;
                let finding = DataLossReport {
                    id: format!("f-{:03}", self.findings.len()),
                    activity: record.activity.clone(),
                    category: FindingCategory::Crash,
                    fired: BTreeSet::new(),
                    snapshot_verdict: None,
                    property_verdict: None,
                    crash: Some(record),
                    step_index: index,
                    trace: self.trace.clone(),
                    before: None,
                    after: None,
                };
                self.findings.push(finding);
                // Recovery: reload at the initial state; history is not
                // replayed and the trace epoch starts over.
                self.driver.reload()?;
                self.trace = ActionTrace::default();
                self.visited.insert(self.driver.current_activity());
                Ok(StepResult::Crashed)
            }
        }
    }

    /// Capture, double rotation, check. Shared tail of both data-loss-
    /// revealing actions.
    fn dlr_check(&mut self) -> Result<DlrResult, CampaignError> {
        if self.meter.exhausted() {
            return Ok(DlrResult::BudgetUp);
        }
        let mode = self.config.oracle_mode;
        let retries = self.config.settle_retries;
        let before = capture_settled(self.driver, mode, retries)?;
        for _ in 0..2 {
            match self.exec_event(&Event::rotate(), true)? {
                StepResult::Ok => {}
                StepResult::Crashed => return Ok(DlrResult::Crashed),
                StepResult::BudgetUp => return Ok(DlrResult::BudgetUp),
            }
        }
        let after = capture_settled(self.driver, mode, retries)?;
        let (vs, vp, combined) = compare_captures(&before, &after, mode)?;
        self.trace.attach_verdict(TraceVerdict {
            outcome: combined.outcome,
            fired: combined.fired.clone(),
        });
        if combined.fired.is_empty() {
            return Ok(DlrResult::Clean);
        }

        // Violation: classify before reporting. One more settled capture
        // separates a genuine persistent difference from a read taken too
        // early (screen drifts back to the before-state) and from content
        // that never stops changing.
        let confirm = capture_settled(self.driver, mode, retries.max(1))?;
        let category = if confirm == after {
            FindingCategory::DataLoss
        } else if confirm == before {
            FindingCategory::SlowRecreation
        } else {
            FindingCategory::TimeVarying
        };
        let finding = DataLossReport {
            id: format!("f-{:03}", self.findings.len()),
            activity: self.driver.current_activity(),
            category,
            fired: combined.fired,
            snapshot_verdict: vs,
            property_verdict: vp,
            crash: None,
            step_index: self.step_index.saturating_sub(1),
            trace: self.trace.clone(),
            before: Some(before),
            after: Some(after),
        };
        self.findings.push(finding);
        Ok(DlrResult::Violation)
    }

    /// Systematic data-loss-revealing action, run once per abstract state at
    /// first encounter: fill in inputs, capture, rotate twice, check, and
    /// scroll down once if nothing was revealed and the screen scrolls.
    fn systematic_dlr(&mut self) -> Result<(), CampaignError> {
        self.systematic_runs += 1;
        let state = self.driver.concrete_state();
        for event in fill_in_events(&state, self.config.seed) {
            let enabled = self.driver.enabled_events();
            let identity = event.identity();
            if !enabled.iter().any(|e| e.identity() == identity) {
                // A previous fill-in interaction changed the screen; skip.
                continue;
            }
            match self.exec_event(&event, true)? {
                StepResult::Ok => {}
                StepResult::Crashed | StepResult::BudgetUp => return Ok(()),
            }
        }
        match self.dlr_check()? {
            DlrResult::Clean => {}
            DlrResult::Violation | DlrResult::Crashed | DlrResult::BudgetUp => return Ok(()),
        }
        let scroll = Event::scroll();
        let enabled = self.driver.enabled_events();
        if enabled.contains(&scroll) {
            self.exec_event(&scroll, true)?;
        }
        Ok(())
    }

    /// Probabilistic data-loss-revealing action: capture, rotate twice,
    /// check. No fill-in, no scroll.
    fn probabilistic_dlr(&mut self) -> Result<(), CampaignError> {
        self.probabilistic_runs += 1;
        self.dlr_check()?;
        Ok(())
    }

    fn run_setup(&mut self) -> Result<(), CampaignError> {
        let setup = self.config.setup_actions.clone();
        for event in setup {
            let enabled = self.driver.enabled_events();
            let identity = event.identity();
            let allowed = event.kind == EventKind::Rotate
                || enabled.iter().any(|e| e.identity() == identity);
            if !allowed {
                return Err(CampaignError::SetupFailed(format!(
                    "setup action {event} not enabled"
                )));
            }
            match self.exec_event(&event, false)? {
                StepResult::Ok => {}
                StepResult::Crashed => {
                    return Err(CampaignError::SetupFailed(format!(
                        "app crashed during setup action {event}"
                    )));
                }
                StepResult::BudgetUp => unreachable!("setup does not consume budget"),
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<CampaignSummary, CampaignError> {
        self.visited.insert(self.driver.current_activity());
        self.run_setup()?;
        while !self.meter.exhausted() {
            if !self.driver.is_live() {
                self.driver.reload()?;
                self.trace = ActionTrace::default();
            }
            let q = self.current_abstract();
            self.visited.insert(q.activity.clone());
            self.model.observe_state(&q);
            if !self.tested.contains(&q) {
                self.tested.insert(q.clone());
                self.systematic_dlr()?;
                continue;
            }
            let enabled = self.driver.enabled_events();
            let chosen = choose_action(
                &self.model,
                &q,
                &enabled,
                &mut self.rng,
                self.config.epsilon,
            );
            if chosen.kind == EventKind::DlrProbabilistic {
                self.probabilistic_dlr()?;
            } else {
                let event = self.materialize(chosen);
                self.exec_event(&event, true)?;
            }
        }

        let transitions = self
            .model
            .transitions()
            .into_iter()
            .map(|(from, event, to)| (from, event, to))
            .collect();
        Ok(CampaignSummary {
            app_name: self.driver.app_name(),
            seed: self.config.seed,
            epsilon: self.config.epsilon,
            oracle_mode: self.config.oracle_mode,
            budget: self.config.budget,
            actions_executed: self.meter.used,
            declared_activities: self.driver.declared_activities(),
            visited_activities: self.visited,
            abstract_states: self.model.states().to_vec(),
            transitions,
            systematic_dlr_runs: self.systematic_runs,
            probabilistic_dlr_runs: self.probabilistic_runs,
            crash_count: self.crash_count,
            findings: self.findings,
        })
    }

    /// Chooses the concrete payload for a selected set-text action.
    fn materialize(&self, event: Event) -> Event {
        if event.kind != EventKind::SetText || event.payload.is_some() {
            return event;
        }
        let locator = event.locator.clone().expect("set-text carries a locator");
        let state = self.driver.concrete_state();
        let current = state
            .top_dialog()
            .and_then(|d| d.find(&locator))
            .or_else(|| state.widget_tree.find(&locator))
            .map(|w| w.text.clone())
            .unwrap_or_default();
        Event::set_text(locator.clone(), fill_value(&locator, self.config.seed, &current))
    }
}

/// Runs one campaign against an arbitrary driver.
pub fn run_campaign_with_driver(
    driver: &mut dyn Driver,
    config: ExplorerConfig,
) -> Result<CampaignSummary, CampaignError> {
    Campaign::new(driver, config)?.run()
}

/// Runs one campaign against the simulated runtime.
pub fn run_campaign(
    spec: &AppSpec,
    config: ExplorerConfig,
) -> Result<CampaignSummary, CampaignError> {
    let mut driver = SimDriver::load(std::sync::Arc::new(spec.clone()), config.seed)?;
    run_campaign_with_driver(&mut driver, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::generate::{crash_app, modified_value_app};
    use crate::model::abstract_state;
    use crate::sim::testutil::*;

    fn abstract_of(spec: &AppSpec) -> AbstractState {
        let driver = SimDriver::load(std::sync::Arc::new(spec.clone()), 0).unwrap();
        abstract_state(&driver.concrete_state())
    }

    #[test]
    fn fill_values_are_nonempty_and_avoid_the_current_text() {
        let v = fill_value("0/1", 7, "");
        assert!(!v.is_empty());
        let clash = fill_value("0/1", 7, &v);
        assert_ne!(clash, v);
    }

    #[test]
    fn epsilon_one_is_uniform_over_enabled_plus_dlr() {
        let spec = minimal_app();
        let q = abstract_of(&spec);
        let driver = SimDriver::load(std::sync::Arc::new(spec), 0).unwrap();
        let enabled = driver.enabled_events();
        let model = GuiModel::new(q.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000u64;
        let options = enabled.len() as f64 + 1.0;
        let mut counts: std::collections::BTreeMap<String, u64> = Default::default();
        for _ in 0..n {
            let e = choose_action(&model, &q, &enabled, &mut rng, 1.0);
            *counts.entry(e.to_string()).or_default() += 1;
        }
        assert_eq!(counts.len(), enabled.len() + 1);
        let p = 1.0 / options;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (_, &count) in &counts {
            let freq = count as f64 / n as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "frequency {freq} deviates from {p} beyond 3 sigma"
            );
        }
    }

    #[test]
    fn epsilon_zero_with_one_unexecuted_action_splits_evenly_with_dlr() {
        let spec = minimal_app();
        let q = abstract_of(&spec);
        let driver = SimDriver::load(std::sync::Arc::new(spec), 0).unwrap();
        let enabled = driver.enabled_events();
        let mut model = GuiModel::new(q.clone());
        // Execute everything except the touch action.
        for event in &enabled {
            if event.kind != EventKind::Touch {
                model.record_transition(&q, event, &q);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50_000u64;
        let mut touch = 0u64;
        let mut dlr = 0u64;
        for _ in 0..n {
            match choose_action(&model, &q, &enabled, &mut rng, 0.0) {
                e if e.kind == EventKind::DlrProbabilistic => dlr += 1,
                e if e.kind == EventKind::Touch => touch += 1,
                other => panic!("unexpected action {other}"),
            }
        }
        let sigma = (0.25 / n as f64).sqrt();
        assert!((touch as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
        assert!((dlr as f64 / n as f64 - 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn exhausted_state_falls_back_to_the_full_enabled_set() {
        let spec = minimal_app();
        let q = abstract_of(&spec);
        let driver = SimDriver::load(std::sync::Arc::new(spec), 0).unwrap();
        let enabled = driver.enabled_events();
        let mut model = GuiModel::new(q.clone());
        for event in &enabled {
            model.record_transition(&q, event, &q);
        }
        assert!(model.unexecuted_events(&q).is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut kinds = std::collections::BTreeSet::new();
        for _ in 0..2_000 {
            // epsilon = 0 forces the 1-epsilon branch; its set is empty so
            // the full enabled set must be used.
            kinds.insert(choose_action(&model, &q, &enabled, &mut rng, 0.0).identity());
        }
        assert_eq!(kinds.len(), enabled.len() + 1);
    }

    #[test]
    fn epsilon_zero_only_draws_unexecuted_or_dlr_while_fresh_actions_remain() {
        let spec = minimal_app();
        let q = abstract_of(&spec);
        let driver = SimDriver::load(std::sync::Arc::new(spec), 0).unwrap();
        let enabled = driver.enabled_events();
        let mut model = GuiModel::new(q.clone());
        model.record_transition(&q, &Event::key_home(), &q);
        let fresh = model.unexecuted_events(&q);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2_000 {
            let e = choose_action(&model, &q, &enabled, &mut rng, 0.0);
            assert!(
                e.kind == EventKind::DlrProbabilistic || fresh.contains(&e.identity()),
                "epsilon=0 must stay within unexecuted actions, got {e}"
            );
        }
    }

    #[test]
    fn fault_free_campaign_reports_nothing_and_respects_budget() {
        let config = ExplorerConfig {
            budget: Budget::Actions(120),
            seed: 3,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&minimal_app(), config).unwrap();
        assert_eq!(summary.findings.len(), 0);
        assert_eq!(summary.actions_executed, 120);
        assert_eq!(summary.activity_coverage(), 1.0);
        assert!(summary.systematic_dlr_runs >= 1);
    }

    #[test]
    fn campaigns_are_deterministic() {
        let config = ExplorerConfig {
            budget: Budget::Actions(150),
            seed: 42,
            ..ExplorerConfig::default()
        };
        let a = run_campaign(&modified_value_app("m"), config.clone()).unwrap();
        let b = run_campaign(&modified_value_app("m"), config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn modified_value_fault_is_found_by_the_first_systematic_check() {
        let spec = modified_value_app("m");
        let widget_count = {
            let mut all = Vec::new();
            spec.activities[0].widget_tree.walk("0", &mut all);
            all.len() as u64
        };
        let config = ExplorerConfig {
            budget: Budget::Actions(50),
            seed: 1,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&spec, config).unwrap();
        let finding = summary
            .findings
            .iter()
            .find(|f| f.category == FindingCategory::DataLoss)
            .expect("data loss expected");
        assert!(finding.step_index <= widget_count + 4);
        assert_eq!(
            finding.fired,
            [
                crate::oracles::OracleStrategy::Snapshot,
                crate::oracles::OracleStrategy::Property
            ]
            .into_iter()
            .collect()
        );
        assert!(finding.trace.check_verdict_placement());
    }

    #[test]
    fn crash_campaign_reports_and_continues_to_budget_exhaustion() {
        let config = ExplorerConfig {
            budget: Budget::Actions(80),
            seed: 2,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&crash_app("c"), config).unwrap();
        assert!(summary.crash_count >= 1);
        assert!(summary
            .findings
            .iter()
            .any(|f| f.category == FindingCategory::Crash));
        assert_eq!(summary.actions_executed, 80);
    }

    #[test]
    fn invalid_budget_and_epsilon_are_rejected() {
        let bad_budget = ExplorerConfig {
            budget: Budget::Actions(0),
            ..ExplorerConfig::default()
        };
        assert!(matches!(
            run_campaign(&minimal_app(), bad_budget),
            Err(CampaignError::BudgetInvalid(_))
        ));
        let bad_eps = ExplorerConfig {
            epsilon: 1.5,
            ..ExplorerConfig::default()
        };
        assert!(matches!(
            run_campaign(&minimal_app(), bad_eps),
            Err(CampaignError::EpsilonInvalid(_))
        ));
    }

    #[test]
    fn setup_actions_run_before_testing_and_must_be_enabled() {
        let mut config = ExplorerConfig {
            budget: Budget::Actions(20),
            setup_actions: vec![Event::touch("nope")],
            ..ExplorerConfig::default()
        };
        assert!(matches!(
            run_campaign(&minimal_app(), config.clone()),
            Err(CampaignError::SetupFailed(_))
        ));
        config.setup_actions = vec![Event::touch("btn")];
        let summary = run_campaign(&minimal_app(), config).unwrap();
        assert_eq!(summary.actions_executed, 20);
    }

    #[test]
    fn every_violation_trace_ends_with_a_rotation_pair_before_the_check() {
        let config = ExplorerConfig {
            budget: Budget::Actions(200),
            seed: 9,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&modified_value_app("m"), config).unwrap();
        assert!(!summary.findings.is_empty());
        for finding in summary.genuine_findings() {
            if finding.category == FindingCategory::Crash {
                continue;
            }
            assert!(finding.trace.check_verdict_placement());
            let steps = &finding.trace.steps;
            let last = steps.last().unwrap();
            assert!(last.verdict.is_some());
            assert_eq!(last.event.kind, EventKind::Rotate);
            assert_eq!(steps[steps.len() - 2].event.kind, EventKind::Rotate);
        }
    }
}
