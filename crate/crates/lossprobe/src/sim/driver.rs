//! The driver seam between the campaign loop and a device.
//!
//! The exploration engine only ever talks to this trait; `SimDriver` backs
//! it with the deterministic simulated runtime, and `NoisyDriver` wraps any
//! driver to inject the capture hazards a real device exhibits (slow
//! activity recreation, clock-like spontaneous changes).

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::image::GrayImage;
use crate::model::Event;
use crate::proptree::PropertyTree;
use crate::sim::instance::{AppInstance, CrashRecord, SimError, StepOutcome};
use crate::sim::render::render_state;
use crate::sim::spec::AppSpec;
use crate::sim::state::ConcreteState;

pub trait Driver {
    fn app_name(&self) -> String;
    fn screen_size(&self) -> (u32, u32);
    /// Header rows the snapshot oracle must crop (status bar).
    fn crop_header(&self) -> u32;
    /// Footer rows the snapshot oracle must crop (navigation bar).
    fn crop_footer(&self) -> u32;
    fn declared_activities(&self) -> BTreeSet<String>;
    fn current_activity(&self) -> String;
    fn concrete_state(&self) -> ConcreteState;
    fn enabled_events(&self) -> BTreeSet<Event>;
    fn apply_event(&mut self, event: &Event) -> Result<StepOutcome, SimError>;
    fn rotate(&mut self) -> Result<StepOutcome, SimError>;
    fn render(&mut self) -> GrayImage;
    fn dump_hierarchy(&self) -> PropertyTree;
    fn is_live(&self) -> bool;
    fn crash(&self) -> Option<CrashRecord>;
    /// Crash recovery: reload the app at its initial state. History is not
    /// replayed.
    fn reload(&mut self) -> Result<(), SimError>;
}

/// Driver over the simulated runtime.
pub struct SimDriver {
    spec: Arc<AppSpec>,
    seed: u64,
    instance: AppInstance,
}

impl SimDriver {
    pub fn load(spec: Arc<AppSpec>, seed: u64) -> Result<Self, SimError> {
        let instance = AppInstance::load(spec.clone(), seed)?;
        Ok(Self {
            spec,
            seed,
            instance,
        })
    }

    /// Wraps an existing instance (used by the brute-force ground-truth
    /// evaluator to probe mid-exploration snapshots).
    pub fn from_instance(spec: Arc<AppSpec>, instance: AppInstance) -> Self {
        let seed = instance.seed();
        Self {
            spec,
            seed,
            instance,
        }
    }

    pub fn instance(&self) -> &AppInstance {
        &self.instance
    }

    pub fn instance_mut(&mut self) -> &mut AppInstance {
        &mut self.instance
    }
}

impl Driver for SimDriver {
    fn app_name(&self) -> String {
        self.spec.name.clone()
    }

    fn screen_size(&self) -> (u32, u32) {
        self.spec.screen
    }

    fn crop_header(&self) -> u32 {
        self.spec.header_px()
    }

    fn crop_footer(&self) -> u32 {
        self.spec.footer_px()
    }

    fn declared_activities(&self) -> BTreeSet<String> {
        self.spec.activity_names()
    }

    fn current_activity(&self) -> String {
        self.instance.current_activity().to_string()
    }

    fn concrete_state(&self) -> ConcreteState {
        self.instance.concrete_state()
    }

    fn enabled_events(&self) -> BTreeSet<Event> {
        crate::sim::enabled_events(&self.instance.concrete_state())
    }

    fn apply_event(&mut self, event: &Event) -> Result<StepOutcome, SimError> {
        self.instance.apply_event(event)
    }

    fn rotate(&mut self) -> Result<StepOutcome, SimError> {
        self.instance.rotate()
    }

    fn render(&mut self) -> GrayImage {
        let frame = self.instance.next_frame();
        render_state(
            &self.instance.concrete_state(),
            self.spec.screen,
            self.spec.header_px(),
            self.spec.footer_px(),
            frame,
        )
    }

    fn dump_hierarchy(&self) -> PropertyTree {
        crate::sim::dump_hierarchy(&self.instance.concrete_state())
    }

    fn is_live(&self) -> bool {
        self.instance.is_live()
    }

    fn crash(&self) -> Option<CrashRecord> {
        self.instance.crash().cloned()
    }

    fn reload(&mut self) -> Result<(), SimError> {
        self.instance = AppInstance::load(self.spec.clone(), self.seed)?;
        Ok(())
    }
}

/// Test double that perturbs captures the way a real device does.
///
/// With `unsettled_frames > 0`, the first N screenshots after a rotation
/// show a partially redrawn screen (slow activity recreation). With
/// `clock_noise`, a small screen region changes on every render regardless
/// of app state (inherently time-varying content).
pub struct NoisyDriver<D: Driver> {
    inner: D,
    unsettled_frames: u32,
    pending: u32,
    clock_noise: bool,
    tick: u64,
}

impl<D: Driver> NoisyDriver<D> {
    pub fn slow_recreation(inner: D, unsettled_frames: u32) -> Self {
        Self {
            inner,
            unsettled_frames,
            pending: 0,
            clock_noise: false,
            tick: 0,
        }
    }

    pub fn with_clock_noise(inner: D) -> Self {
        Self {
            inner,
            unsettled_frames: 0,
            pending: 0,
            clock_noise: true,
            tick: 0,
        }
    }
}

impl<D: Driver> Driver for NoisyDriver<D> {
    fn app_name(&self) -> String {
        self.inner.app_name()
    }

    fn screen_size(&self) -> (u32, u32) {
        self.inner.screen_size()
    }

    fn crop_header(&self) -> u32 {
        self.inner.crop_header()
    }

    fn crop_footer(&self) -> u32 {
        self.inner.crop_footer()
    }

    fn declared_activities(&self) -> BTreeSet<String> {
        self.inner.declared_activities()
    }

    fn current_activity(&self) -> String {
        self.inner.current_activity()
    }

    fn concrete_state(&self) -> ConcreteState {
        self.inner.concrete_state()
    }

    fn enabled_events(&self) -> BTreeSet<Event> {
        self.inner.enabled_events()
    }

    fn apply_event(&mut self, event: &Event) -> Result<StepOutcome, SimError> {
        self.inner.apply_event(event)
    }

    fn rotate(&mut self) -> Result<StepOutcome, SimError> {
        let outcome = self.inner.rotate()?;
        self.pending = self.unsettled_frames;
        Ok(outcome)
    }

    fn render(&mut self) -> GrayImage {
        let mut img = self.inner.render();
        if self.pending > 0 {
            self.pending -= 1;
            // Mid-recreation frame: the lower half of the body is blank.
            let body_top = self.crop_header();
            let footer_top = img.height - self.crop_footer();
            let half = body_top + (footer_top - body_top) / 2;
            img.fill_rect(
                0,
                i64::from(half),
                img.width,
                footer_top - half,
                255,
            );
        }
        if self.clock_noise {
            self.tick += 1;
            let body_top = self.crop_header();
            let h = crate::hash::fnv1a_salted("clock", self.tick);
            for y in 0..10u32 {
                for x in 0..30u32 {
                    let i = u64::from(y) * 30 + u64::from(x);
                    img.set(x + 2, body_top + 2 + y, crate::hash::stream_byte(h, i));
                }
            }
        }
        img
    }

    fn dump_hierarchy(&self) -> PropertyTree {
        self.inner.dump_hierarchy()
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }

    fn crash(&self) -> Option<CrashRecord> {
        self.inner.crash()
    }

    fn reload(&mut self) -> Result<(), SimError> {
        self.pending = 0;
        self.inner.reload()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explorer::{run_campaign_with_driver, ExplorerConfig};
    use crate::report::{Budget, FindingCategory};
    use crate::sim::testutil::minimal_app;

    fn noisy(unsettled: u32) -> NoisyDriver<SimDriver> {
        let sim = SimDriver::load(Arc::new(minimal_app()), 0).unwrap();
        NoisyDriver::slow_recreation(sim, unsettled)
    }

    #[test]
    fn settle_retries_absorb_slow_recreation() {
        let mut driver = noisy(1);
        let config = ExplorerConfig {
            budget: Budget::Actions(60),
            settle_retries: 3,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign_with_driver(&mut driver, config).unwrap();
        assert_eq!(summary.findings.len(), 0, "settled captures must be clean");
    }

    #[test]
    fn without_retries_slow_recreation_is_reported_as_spurious() {
        let mut driver = noisy(1);
        let config = ExplorerConfig {
            budget: Budget::Actions(60),
            settle_retries: 0,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign_with_driver(&mut driver, config).unwrap();
        assert!(!summary.findings.is_empty());
        assert!(summary
            .findings
            .iter()
            .all(|f| f.category == FindingCategory::SlowRecreation));
    }

    #[test]
    fn clock_noise_is_classified_as_time_varying() {
        let sim = SimDriver::load(Arc::new(minimal_app()), 0).unwrap();
        let mut driver = NoisyDriver::with_clock_noise(sim);
        let config = ExplorerConfig {
            budget: Budget::Actions(60),
            settle_retries: 3,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign_with_driver(&mut driver, config).unwrap();
        assert!(!summary.findings.is_empty());
        assert!(summary
            .findings
            .iter()
            .all(|f| f.category == FindingCategory::TimeVarying));
    }

    #[test]
    fn reload_restores_the_initial_state() {
        let mut driver = SimDriver::load(Arc::new(minimal_app()), 0).unwrap();
        driver.apply_event(&Event::key_home()).unwrap();
        driver.rotate().unwrap();
        let dirty = driver.concrete_state();
        assert_ne!(
            dirty.orientation,
            crate::sim::state::Orientation::Portrait
        );
        driver.reload().unwrap();
        let fresh = driver.concrete_state();
        assert_eq!(fresh.orientation, crate::sim::state::Orientation::Portrait);
    }
}
