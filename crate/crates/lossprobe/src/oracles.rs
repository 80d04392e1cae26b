//! The two state-comparison oracles.
//!
//! Both work on states captured before and after a neutral stop-start pair
//! (a double rotation): the snapshot oracle compares cropped grayscale
//! screenshots pixel by pixel and fails only when more than 15 pixels out of
//! every 10,000 differ; the property oracle compares the full view hierarchy
//! structurally and fails on the first divergent field. They can run
//! independently or jointly; jointly, one firing strategy is enough to
//! report a failure.
//!
//! All comparisons are pure functions over captured value types.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{GrayImage, Raster};
use crate::proptree::{PropertyNode, PropertyTree};

/// Differing pixels tolerated per [`PIXEL_RATIO_BASE`] compared pixels
/// before the snapshot oracle fails. Strict: exactly the threshold passes.
pub const PIXEL_FAIL_THRESHOLD: u64 = 15;
pub const PIXEL_RATIO_BASE: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OracleStrategy {
    Snapshot,
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    Snapshot,
    Property,
    Both,
}

impl OracleMode {
    pub fn uses_snapshot(self) -> bool {
        matches!(self, OracleMode::Snapshot | OracleMode::Both)
    }

    pub fn uses_property(self) -> bool {
        matches!(self, OracleMode::Property | OracleMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictOutcome {
    Pass,
    Fail,
}

/// What a comparison saw: the differing/total pixel counts for snapshots,
/// the first divergent node path and field for property trees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evidence {
    Pixels { differing: u64, total: u64 },
    Property { path: String, field: String },
    Clean,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: VerdictOutcome,
    pub strategy: OracleStrategy,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn failed(&self) -> bool {
        self.outcome == VerdictOutcome::Fail
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("crop too large: header {header} + footer {footer} >= height {height}")]
    CropTooLarge { header: u32, footer: u32, height: u32 },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("oracle mode requires a {0:?} verdict that was not supplied")]
    MissingVerdict(OracleStrategy),
}

/// The snapshot oracle's state representation: the cropped grayscale raster
/// plus the crop bookkeeping. `height` is the original raster height; the
/// pixel matrix holds `height - crop_header - crop_footer` rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub width: u32,
    pub height: u32,
    pub crop_header: u32,
    pub crop_footer: u32,
    pub pixels: Vec<u8>,
}

impl Snapshot {
    pub fn cropped_height(&self) -> u32 {
        self.height - self.crop_header - self.crop_footer
    }

    pub fn pixel_count(&self) -> u64 {
        u64::from(self.width) * u64::from(self.cropped_height())
    }

    /// The cropped raster as a standalone image (PGM persistence).
    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.cropped_height(),
            pixels: self.pixels.clone(),
        }
    }
}

/// Captures a snapshot: converts RGB input to grayscale (BT.601 luma,
/// rounded) and removes the header and footer rows, which carry content
/// that changes over time regardless of data loss.
pub fn capture_snapshot(
    raster: &Raster,
    crop_header: u32,
    crop_footer: u32,
) -> Result<Snapshot, OracleError> {
    let (width, height) = raster.dimensions();
    if crop_header + crop_footer >= height {
        return Err(OracleError::CropTooLarge {
            header: crop_header,
            footer: crop_footer,
            height,
        });
    }
    let gray = raster.to_gray();
    let start = crop_header as usize * width as usize;
    let end = (height - crop_footer) as usize * width as usize;
    Ok(Snapshot {
        width,
        height,
        crop_header,
        crop_footer,
        pixels: gray.pixels[start..end].to_vec(),
    })
}

/// Pixel-by-pixel comparison. Any inequality of gray values counts as a
/// differing pixel; there is no per-pixel tolerance — the 15-per-10,000
/// ratio is what absorbs noise. Fails iff `differing * 10000 > 15 * total`.
pub fn compare_snapshots(a: &Snapshot, b: &Snapshot) -> Result<Verdict, OracleError> {
    if a.width != b.width || a.cropped_height() != b.cropped_height() {
        return Err(OracleError::DimensionMismatch(
            a.width,
            a.cropped_height(),
            b.width,
            b.cropped_height(),
        ));
    }
    let differing = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .filter(|(x, y)| x != y)
        .count() as u64;
    let total = a.pixel_count();
    let fail = differing * PIXEL_RATIO_BASE > PIXEL_FAIL_THRESHOLD * total;
    Ok(Verdict {
        outcome: if fail {
            VerdictOutcome::Fail
        } else {
            VerdictOutcome::Pass
        },
        strategy: OracleStrategy::Snapshot,
        evidence: Evidence::Pixels { differing, total },
    })
}

/// Canonical deep copy of a captured hierarchy. Child order is already
/// deterministic; serialization of the result is byte-identical across
/// captures of the same state.
pub fn capture_properties(tree: &PropertyTree) -> PropertyTree {
    tree.clone()
}

/// Structural recursive equality over all captured fields and child lists.
/// The first divergence is reported with the node's root-to-node child-index
/// path and the offending field.
pub fn compare_properties(a: &PropertyTree, b: &PropertyTree) -> Verdict {
    match diff_nodes(&a.root, &b.root, "0") {
        None => Verdict {
            outcome: VerdictOutcome::Pass,
            strategy: OracleStrategy::Property,
            evidence: Evidence::Clean,
        },
        Some((path, field)) => Verdict {
            outcome: VerdictOutcome::Fail,
            strategy: OracleStrategy::Property,
            evidence: Evidence::Property { path, field },
        },
    }
}

fn diff_nodes(a: &PropertyNode, b: &PropertyNode, path: &str) -> Option<(String, String)> {
    macro_rules! check {
        ($field:ident) => {
            if a.$field != b.$field {
                return Some((path.to_string(), stringify!($field).to_string()));
            }
        };
    }
    check!(content_description);
    check!(resource_id);
    check!(text);
    check!(visible);
    check!(checkable);
    check!(size);
    check!(checked);
    check!(selected);
    check!(child_count);
    if a.children.len() != b.children.len() {
        return Some((path.to_string(), "child_count".to_string()));
    }
    for (i, (ca, cb)) in a.children.iter().zip(&b.children).enumerate() {
        if let Some(diff) = diff_nodes(ca, cb, &format!("{path}/{i}")) {
            return Some(diff);
        }
    }
    None
}

/// Joint verdict over the strategies selected by the mode: FAIL iff any
/// selected strategy fails; the set of firing strategies is recorded for
/// complementarity accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CombinedVerdict {
    pub outcome: VerdictOutcome,
    pub fired: BTreeSet<OracleStrategy>,
}

pub fn combined_verdict(
    snapshot: Option<&Verdict>,
    property: Option<&Verdict>,
    mode: OracleMode,
) -> Result<CombinedVerdict, OracleError> {
    let mut fired = BTreeSet::new();
    if mode.uses_snapshot() {
        let v = snapshot.ok_or(OracleError::MissingVerdict(OracleStrategy::Snapshot))?;
        if v.failed() {
            fired.insert(OracleStrategy::Snapshot);
        }
    }
    if mode.uses_property() {
        let v = property.ok_or(OracleError::MissingVerdict(OracleStrategy::Property))?;
        if v.failed() {
            fired.insert(OracleStrategy::Property);
        }
    }
    Ok(CombinedVerdict {
        outcome: if fired.is_empty() {
            VerdictOutcome::Pass
        } else {
            VerdictOutcome::Fail
        },
        fired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RgbImage;

    fn flat_snapshot(width: u32, rows: u32, value: u8) -> Snapshot {
        Snapshot {
            width,
            height: rows,
            crop_header: 0,
            crop_footer: 0,
            pixels: vec![value; (width * rows) as usize],
        }
    }

    #[test]
    fn all_black_rgb_converts_to_zero() {
        let img = RgbImage::new(4, 4, [0, 0, 0]);
        let snap = capture_snapshot(&Raster::from(img), 0, 0).unwrap();
        assert!(snap.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn pure_red_maps_to_luma_76() {
        let img = RgbImage::new(1, 1, [255, 0, 0]);
        let snap = capture_snapshot(&Raster::from(img), 0, 0).unwrap();
        assert_eq!(snap.pixels, vec![76]);
    }

    #[test]
    fn cropping_keeps_expected_rows() {
        let img = crate::image::GrayImage::new(10, 1280, 255);
        let snap = capture_snapshot(&Raster::from(img), 64, 64).unwrap();
        assert_eq!(snap.cropped_height(), 1152);
        assert_eq!(snap.pixels.len(), 10 * 1152);
    }

    #[test]
    fn crop_too_large_is_rejected() {
        let img = crate::image::GrayImage::new(10, 100, 255);
        assert!(matches!(
            capture_snapshot(&Raster::from(img), 60, 40),
            Err(OracleError::CropTooLarge { .. })
        ));
    }

    #[test]
    fn identical_snapshots_pass_with_zero_diff() {
        let a = flat_snapshot(100, 100, 7);
        let v = compare_snapshots(&a, &a.clone()).unwrap();
        assert_eq!(v.outcome, VerdictOutcome::Pass);
        assert_eq!(
            v.evidence,
            Evidence::Pixels {
                differing: 0,
                total: 10_000
            }
        );
    }

    #[test]
    fn threshold_boundary_is_strict() {
        // 100x100 = 10,000 pixels: exactly 15 differing passes, 16 fails.
        let a = flat_snapshot(100, 100, 0);
        let mut b = a.clone();
        for i in 0..15 {
            b.pixels[i] = 1;
        }
        assert_eq!(
            compare_snapshots(&a, &b).unwrap().outcome,
            VerdictOutcome::Pass
        );
        b.pixels[15] = 1;
        let v = compare_snapshots(&a, &b).unwrap();
        assert_eq!(v.outcome, VerdictOutcome::Fail);
        assert_eq!(
            v.evidence,
            Evidence::Pixels {
                differing: 16,
                total: 10_000
            }
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = flat_snapshot(10, 10, 0);
        let b = flat_snapshot(10, 11, 0);
        assert!(matches!(
            compare_snapshots(&a, &b),
            Err(OracleError::DimensionMismatch(..))
        ));
    }

    fn tree_with_description(desc: &str) -> PropertyTree {
        PropertyTree {
            root: PropertyNode {
                content_description: None,
                resource_id: None,
                text: String::new(),
                visible: true,
                checkable: false,
                checked: false,
                selected: false,
                size: (144, 230),
                child_count: 1,
                children: vec![PropertyNode {
                    content_description: Some(desc.to_string()),
                    resource_id: Some("drawer_toggle".into()),
                    text: String::new(),
                    visible: true,
                    checkable: false,
                    checked: false,
                    selected: false,
                    size: (40, 40),
                    child_count: 0,
                    children: Vec::new(),
                }],
            },
        }
    }

    #[test]
    fn equal_trees_pass() {
        let t = tree_with_description("Close navigation drawer");
        assert_eq!(compare_properties(&t, &t).outcome, VerdictOutcome::Pass);
    }

    #[test]
    fn description_flip_fails_at_that_field() {
        let a = tree_with_description("Close navigation drawer");
        let b = tree_with_description("Open navigation drawer");
        let v = compare_properties(&a, &b);
        assert_eq!(v.outcome, VerdictOutcome::Fail);
        assert_eq!(
            v.evidence,
            Evidence::Property {
                path: "0/0".into(),
                field: "content_description".into()
            }
        );
    }

    #[test]
    fn missing_leaf_diverges_at_parent_child_count() {
        let a = tree_with_description("x");
        let mut b = a.clone();
        b.root.children.clear();
        b.root.child_count = 0;
        let v = compare_properties(&a, &b);
        assert_eq!(v.outcome, VerdictOutcome::Fail);
        assert_eq!(
            v.evidence,
            Evidence::Property {
                path: "0".into(),
                field: "child_count".into()
            }
        );
    }

    #[test]
    fn capture_properties_is_canonical() {
        let t = tree_with_description("x");
        let a = capture_properties(&t);
        let b = capture_properties(&t);
        assert_eq!(a.to_canonical_text(), b.to_canonical_text());
    }

    fn verdict(strategy: OracleStrategy, fail: bool) -> Verdict {
        Verdict {
            outcome: if fail {
                VerdictOutcome::Fail
            } else {
                VerdictOutcome::Pass
            },
            strategy,
            evidence: Evidence::Clean,
        }
    }

    #[test]
    fn combined_is_a_disjunction_recording_firing_strategies() {
        let vs_pass = verdict(OracleStrategy::Snapshot, false);
        let vs_fail = verdict(OracleStrategy::Snapshot, true);
        let vp_pass = verdict(OracleStrategy::Property, false);
        let vp_fail = verdict(OracleStrategy::Property, true);

        let c = combined_verdict(Some(&vs_pass), Some(&vp_fail), OracleMode::Both).unwrap();
        assert_eq!(c.outcome, VerdictOutcome::Fail);
        assert_eq!(c.fired, [OracleStrategy::Property].into_iter().collect());

        let c = combined_verdict(Some(&vs_fail), Some(&vp_pass), OracleMode::Both).unwrap();
        assert_eq!(c.outcome, VerdictOutcome::Fail);
        assert_eq!(c.fired, [OracleStrategy::Snapshot].into_iter().collect());

        let c = combined_verdict(Some(&vs_pass), Some(&vp_pass), OracleMode::Both).unwrap();
        assert_eq!(c.outcome, VerdictOutcome::Pass);
        assert!(c.fired.is_empty());
    }

    #[test]
    fn mode_restricts_required_verdicts() {
        let vp_fail = verdict(OracleStrategy::Property, true);
        let c = combined_verdict(None, Some(&vp_fail), OracleMode::Property).unwrap();
        assert_eq!(c.outcome, VerdictOutcome::Fail);
        assert!(matches!(
            combined_verdict(None, Some(&vp_fail), OracleMode::Both),
            Err(OracleError::MissingVerdict(OracleStrategy::Snapshot))
        ));
    }

    #[test]
    fn threshold_monotonicity() {
        let a = flat_snapshot(100, 100, 0);
        let mut failing = 0;
        for d in [15u64, 16, 40, 10_000] {
            let mut b = a.clone();
            for i in 0..d as usize {
                b.pixels[i] = 9;
            }
            let v = compare_snapshots(&a, &b).unwrap();
            if v.failed() {
                failing += 1;
                assert!(d > 15);
            }
        }
        assert_eq!(failing, 3);
    }
}
