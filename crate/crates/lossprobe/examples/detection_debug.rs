use lossprobe::bench::ground_truth::{evaluate_ground_truth, GroundTruthConfig};
use lossprobe::explorer::{run_campaign, ExplorerConfig};
use lossprobe::report::Budget;

fn main() {
    let dir = std::path::PathBuf::from("/tmp/corpus-50");
    let manifest = lossprobe::bench::CorpusManifest::load_file(&dir.join("manifest.ron")).unwrap();
    for app in &manifest.apps {
        let spec = lossprobe::sim::spec::AppSpec::load_file(&dir.join(&app.spec_path)).unwrap();
        let truth = evaluate_ground_truth(&spec, &GroundTruthConfig::default()).unwrap();
        let mut detected: std::collections::BTreeSet<String> = Default::default();
        let mut visited: std::collections::BTreeSet<String> = Default::default();
        for run in 0..3u64 {
            let config = ExplorerConfig {
                budget: Budget::Actions(500),
                seed: 100 + run,
                ..ExplorerConfig::default()
            };
            let summary = run_campaign(&spec, config).unwrap();
            visited.extend(summary.visited_activities.iter().cloned());
            for f in summary.findings.iter().filter(|f| f.category.is_genuine()) {
                for mf in &app.faults {
                    if mf.activity == f.activity {
                        detected.insert(mf.id.clone());
                    }
                }
            }
        }
        for mf in &app.faults {
            if !detected.contains(&mf.id) {
                let hops = truth.activity_hops.get(&mf.activity);
                println!(
                    "{}: MISSED {} ({:?}, {:?}) hops={:?} visited={} activities={}",
                    app.id, mf.id, mf.pattern, mf.detectable_by, hops,
                    visited.contains(&mf.activity),
                    app.activities,
                );
            }
        }
    }
}
