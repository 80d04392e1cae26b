//! Scores campaign summaries against a corpus manifest.
//!
//! Detection accounting is exact in the simulated world: a genuine finding
//! on an activity detects the manifest faults of that activity; a finding
//! that matches no manifest fault is spurious. Per-app numbers report the
//! per-run average alongside the union over runs (the `avg (total)/existing`
//! convention), activity coverage likewise. Globally, oracle-verdict
//! findings split into both / snapshot-only / property-only /
//! slow-recreation fractions, which quantifies how complementary the two
//! strategies are.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bench::{BenchError, CorpusManifest};
use crate::oracles::OracleStrategy;
use crate::report::{CampaignSummary, FindingCategory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppEvaluation {
    pub app_id: String,
    pub activities: u32,
    pub existing: u32,
    pub detected_avg: f64,
    pub detected_total: u32,
    pub detected_fault_ids: BTreeSet<String>,
    pub activities_with_data_loss: u32,
    pub spurious_avg: f64,
    pub spurious_total: u32,
    pub crash_activities: u32,
    pub coverage_avg: f64,
    pub coverage_total: f64,
}

/// Fractions over all oracle-verdict findings: the three fired-strategy
/// buckets for genuine data loss plus the transient bucket (reads taken
/// during slow recreation and inherently time-varying content).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Complementarity {
    pub both: f64,
    pub snapshot_only: f64,
    pub property_only: f64,
    pub slow_recreation: f64,
    pub both_count: u64,
    pub snapshot_only_count: u64,
    pub property_only_count: u64,
    pub slow_recreation_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub runs: u32,
    pub apps: Vec<AppEvaluation>,
    pub complementarity: Complementarity,
    pub total_existing: u32,
    pub total_detected: u32,
}

impl EvaluationResult {
    pub fn to_ron_string(&self) -> String {
        let cfg = ron::ser::PrettyConfig::new().indentor("  ".to_string());
        ron::ser::to_string_pretty(self, cfg).expect("evaluation serialization cannot fail")
    }

    /// Plain-text table in the usual benchmark layout, one row per app.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>5} {:>18} {:>8} {:>24} {:>16} {:>8}\n",
            "App", "#Act", "Coverage avg(tot)", "ActDL", "Detected avg(tot)/exist", "Spurious avg(tot)", "Crashes"
        ));
        for app in &self.apps {
            out.push_str(&format!(
                "{:<12} {:>5} {:>18} {:>8} {:>24} {:>16} {:>8}\n",
                app.app_id,
                app.activities,
                format!(
                    "{:.0}% ({:.0}%)",
                    app.coverage_avg * 100.0,
                    app.coverage_total * 100.0
                ),
                app.activities_with_data_loss,
                format!(
                    "{} ({})/{}",
                    app.detected_avg.round() as u64,
                    app.detected_total,
                    app.existing
                ),
                format!(
                    "{} ({})",
                    app.spurious_avg.round() as u64,
                    app.spurious_total
                ),
                app.crash_activities,
            ));
        }
        out.push_str(&format!(
            "TOTAL detected {} of {} ({:.1}%)\n",
            self.total_detected,
            self.total_existing,
            if self.total_existing > 0 {
                100.0 * f64::from(self.total_detected) / f64::from(self.total_existing)
            } else {
                100.0
            }
        ));
        let c = &self.complementarity;
        out.push_str(&format!(
            "oracle complementarity: both {:.1}% | snapshot-only {:.1}% | property-only {:.1}% | slow-recreation {:.1}%\n",
            c.both * 100.0,
            c.snapshot_only * 100.0,
            c.property_only * 100.0,
            c.slow_recreation * 100.0
        ));
        out
    }
}

/// Evaluates `runs` campaign summaries per manifest app.
pub fn evaluate_campaigns(
    manifest: &CorpusManifest,
    summaries: &BTreeMap<String, Vec<CampaignSummary>>,
    runs: u32,
) -> Result<EvaluationResult, BenchError> {
    for app_id in summaries.keys() {
        if manifest.app(app_id).is_none() {
            return Err(BenchError::ManifestMismatch(format!(
                "summaries contain unknown app {app_id}"
            )));
        }
    }

    let mut apps = Vec::new();
    let mut total_existing = 0u32;
    let mut total_detected = 0u32;
    let mut both_count = 0u64;
    let mut snapshot_only_count = 0u64;
    let mut property_only_count = 0u64;
    let mut slow_recreation_count = 0u64;

    for app in &manifest.apps {
        let app_runs = summaries.get(&app.id).ok_or_else(|| {
            BenchError::ManifestMismatch(format!("no summaries for app {}", app.id))
        })?;
        if app_runs.len() != runs as usize {
            return Err(BenchError::ManifestMismatch(format!(
                "app {} has {} runs, expected {runs}",
                app.id,
                app_runs.len()
            )));
        }

        let faults_by_activity: BTreeMap<&str, Vec<&str>> = {
            let mut map: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            for fault in &app.faults {
                map.entry(fault.activity.as_str())
                    .or_default()
                    .push(fault.id.as_str());
            }
            map
        };

        let mut union_detected: BTreeSet<String> = BTreeSet::new();
        let mut union_matched_activities: BTreeSet<String> = BTreeSet::new();
        let mut union_crash_activities: BTreeSet<String> = BTreeSet::new();
        let mut union_spurious_activities: BTreeSet<String> = BTreeSet::new();
        let mut union_visited: BTreeSet<String> = BTreeSet::new();
        let mut detected_sum = 0usize;
        let mut spurious_sum = 0usize;
        let mut coverage_sum = 0.0f64;
        let declared = app_runs[0].declared_activities.len().max(1);

        for summary in app_runs {
            let mut detected_run: BTreeSet<&str> = BTreeSet::new();
            let mut matched_activities_run: BTreeSet<&str> = BTreeSet::new();
            let mut flagged_activities_run: BTreeSet<&str> = BTreeSet::new();

            for finding in &summary.findings {
                let activity = finding.activity.as_str();
                let manifest_faults = faults_by_activity.get(activity);
                let genuine_match = finding.category.is_genuine() && manifest_faults.is_some();
                if genuine_match {
                    for id in manifest_faults.expect("checked") {
                        detected_run.insert(id);
                    }
                    matched_activities_run.insert(activity);
                } else {
                    flagged_activities_run.insert(activity);
                }
                if finding.category == FindingCategory::Crash {
                    union_crash_activities.insert(activity.to_string());
                }
                match finding.category {
                    FindingCategory::Crash => {}
                    FindingCategory::DataLoss => {
                        let fired_snapshot = finding.fired.contains(&OracleStrategy::Snapshot);
                        let fired_property = finding.fired.contains(&OracleStrategy::Property);
                        match (fired_snapshot, fired_property) {
                            (true, true) => both_count += 1,
                            (true, false) => snapshot_only_count += 1,
                            (false, true) => property_only_count += 1,
                            (false, false) => {}
                        }
                    }
                    FindingCategory::SlowRecreation | FindingCategory::TimeVarying => {
                        slow_recreation_count += 1;
                    }
                }
            }

            // Spurious accounting is per activity: only activities that
            // produced nothing but unmatched findings count.
            let spurious_run: BTreeSet<&str> = flagged_activities_run
                .difference(&matched_activities_run)
                .copied()
                .collect();

            detected_sum += detected_run.len();
            spurious_sum += spurious_run.len();
            coverage_sum += summary.visited_activities.len() as f64 / declared as f64;
            union_detected.extend(detected_run.iter().map(|s| s.to_string()));
            union_matched_activities
                .extend(matched_activities_run.iter().map(|s| s.to_string()));
            union_spurious_activities.extend(spurious_run.iter().map(|s| s.to_string()));
            union_visited.extend(summary.visited_activities.iter().cloned());
        }

        total_existing += app.faults.len() as u32;
        total_detected += union_detected.len() as u32;
        apps.push(AppEvaluation {
            app_id: app.id.clone(),
            activities: app.activities,
            existing: app.faults.len() as u32,
            detected_avg: detected_sum as f64 / f64::from(runs),
            detected_total: union_detected.len() as u32,
            detected_fault_ids: union_detected,
            activities_with_data_loss: union_matched_activities.len() as u32,
            spurious_avg: spurious_sum as f64 / f64::from(runs),
            spurious_total: union_spurious_activities.len() as u32,
            crash_activities: union_crash_activities.len() as u32,
            coverage_avg: coverage_sum / f64::from(runs),
            coverage_total: union_visited.len() as f64 / declared as f64,
        });
    }

    let oracle_total =
        both_count + snapshot_only_count + property_only_count + slow_recreation_count;
    let frac = |n: u64| {
        if oracle_total == 0 {
            0.0
        } else {
            n as f64 / oracle_total as f64
        }
    };
    Ok(EvaluationResult {
        runs,
        apps,
        complementarity: Complementarity {
            both: frac(both_count),
            snapshot_only: frac(snapshot_only_count),
            property_only: frac(property_only_count),
            slow_recreation: frac(slow_recreation_count),
            both_count,
            snapshot_only_count,
            property_only_count,
            slow_recreation_count,
        },
        total_existing,
        total_detected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{CorpusApp, DetectableBy, ManifestFault};
    use crate::explorer::trace::ActionTrace;
    use crate::oracles::OracleMode;
    use crate::report::{Budget, DataLossReport};
    use crate::sim::spec::FaultPattern;

    fn manifest_with_three_faults() -> CorpusManifest {
        let faults = ["f1", "f2", "f3"]
            .iter()
            .enumerate()
            .map(|(i, id)| ManifestFault {
                id: id.to_string(),
                activity: format!("act{i}"),
                pattern: FaultPattern::ModifiedValue,
                detectable_by: DetectableBy::Both,
            })
            .collect();
        CorpusManifest {
            seed: 0,
            count: 1,
            apps: vec![CorpusApp {
                id: "app-000".into(),
                spec_path: "app-000.ron".into(),
                activities: 4,
                faults,
            }],
        }
    }

    fn finding(activity: &str, category: FindingCategory) -> DataLossReport {
        DataLossReport {
            id: "f-000".into(),
            activity: activity.to_string(),
            category,
            fired: [OracleStrategy::Snapshot, OracleStrategy::Property]
                .into_iter()
                .collect(),
            snapshot_verdict: None,
            property_verdict: None,
            crash: None,
            step_index: 0,
            trace: ActionTrace::default(),
            before: None,
            after: None,
        }
    }

    fn summary(activities: &[&str], findings: Vec<DataLossReport>) -> CampaignSummary {
        CampaignSummary {
            app_name: "app-000".into(),
            seed: 0,
            epsilon: 0.1,
            oracle_mode: OracleMode::Both,
            budget: Budget::Actions(100),
            actions_executed: 100,
            declared_activities: ["act0", "act1", "act2", "act3"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            visited_activities: activities.iter().map(|s| s.to_string()).collect(),
            abstract_states: Vec::new(),
            transitions: Vec::new(),
            systematic_dlr_runs: 0,
            probabilistic_dlr_runs: 0,
            crash_count: 0,
            findings,
        }
    }

    #[test]
    fn avg_total_existing_follow_the_reporting_convention() {
        // Three runs detecting {f1}, {f1, f2}, {f1} of three existing
        // faults: average 1.33 (printed as 1), union 2, existing 3.
        let manifest = manifest_with_three_faults();
        let runs = vec![
            summary(&["act0"], vec![finding("act0", FindingCategory::DataLoss)]),
            summary(
                &["act0", "act1"],
                vec![
                    finding("act0", FindingCategory::DataLoss),
                    finding("act1", FindingCategory::DataLoss),
                ],
            ),
            summary(&["act0"], vec![finding("act0", FindingCategory::DataLoss)]),
        ];
        let summaries = [("app-000".to_string(), runs)].into_iter().collect();
        let result = evaluate_campaigns(&manifest, &summaries, 3).unwrap();
        let app = &result.apps[0];
        assert!((app.detected_avg - 4.0 / 3.0).abs() < 1e-9);
        assert_eq!(app.detected_total, 2);
        assert_eq!(app.existing, 3);
        let table = result.to_table();
        assert!(table.contains("1 (2)/3"), "table was:\n{table}");
    }

    #[test]
    fn findings_off_the_manifest_are_spurious() {
        let manifest = manifest_with_three_faults();
        let runs = vec![
            summary(
                &["act3"],
                vec![finding("act3", FindingCategory::DataLoss)],
            ),
            summary(&[], vec![]),
            summary(&[], vec![]),
        ];
        let summaries = [("app-000".to_string(), runs)].into_iter().collect();
        let result = evaluate_campaigns(&manifest, &summaries, 3).unwrap();
        let app = &result.apps[0];
        assert_eq!(app.detected_total, 0);
        assert_eq!(app.spurious_total, 1);
        assert!((app.spurious_avg - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn complementarity_fractions_partition_oracle_findings() {
        let manifest = manifest_with_three_faults();
        let mut both = finding("act0", FindingCategory::DataLoss);
        both.fired = [OracleStrategy::Snapshot, OracleStrategy::Property]
            .into_iter()
            .collect();
        let mut snap = finding("act1", FindingCategory::DataLoss);
        snap.fired = [OracleStrategy::Snapshot].into_iter().collect();
        let mut prop = finding("act2", FindingCategory::DataLoss);
        prop.fired = [OracleStrategy::Property].into_iter().collect();
        let mut slow = finding("act3", FindingCategory::SlowRecreation);
        slow.fired = [OracleStrategy::Snapshot].into_iter().collect();

        let runs = vec![
            summary(&["act0"], vec![both.clone(), both.clone(), snap]),
            summary(&["act1"], vec![prop]),
            summary(&["act2"], vec![slow]),
        ];
        let summaries = [("app-000".to_string(), runs)].into_iter().collect();
        let result = evaluate_campaigns(&manifest, &summaries, 3).unwrap();
        let c = &result.complementarity;
        assert_eq!(
            (
                c.both_count,
                c.snapshot_only_count,
                c.property_only_count,
                c.slow_recreation_count
            ),
            (2, 1, 1, 1)
        );
        let sum = c.both + c.snapshot_only + c.property_only + c.slow_recreation;
        assert!((sum - 1.0).abs() < 1e-9);
        assert!((c.both - 0.4).abs() < 1e-9);
    }

    #[test]
    fn union_dominates_per_run_average() {
        let manifest = manifest_with_three_faults();
        let runs = vec![
            summary(&["act0"], vec![finding("act0", FindingCategory::DataLoss)]),
            summary(&["act1"], vec![finding("act1", FindingCategory::DataLoss)]),
            summary(&["act2"], vec![finding("act2", FindingCategory::DataLoss)]),
        ];
        let summaries = [("app-000".to_string(), runs)].into_iter().collect();
        let result = evaluate_campaigns(&manifest, &summaries, 3).unwrap();
        let app = &result.apps[0];
        assert!(f64::from(app.detected_total) >= app.detected_avg);
    }

    #[test]
    fn wrong_run_count_is_a_manifest_mismatch() {
        let manifest = manifest_with_three_faults();
        let summaries = [("app-000".to_string(), vec![summary(&[], vec![])])]
            .into_iter()
            .collect();
        assert!(matches!(
            evaluate_campaigns(&manifest, &summaries, 3),
            Err(BenchError::ManifestMismatch(_))
        ));
    }
}
