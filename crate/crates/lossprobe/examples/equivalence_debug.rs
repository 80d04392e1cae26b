use lossprobe::bench::ground_truth::{evaluate_ground_truth, GroundTruthConfig};
use lossprobe::explorer::{run_campaign, ExplorerConfig};
use lossprobe::report::Budget;
use std::collections::BTreeSet;

fn main() {
    let dir = std::path::PathBuf::from("/tmp/corpus-50");
    let manifest = lossprobe::bench::CorpusManifest::load_file(&dir.join("manifest.ron")).unwrap();
    let t0 = std::time::Instant::now();
    let mut checked = 0;
    for app in &manifest.apps {
        let spec = lossprobe::sim::spec::AppSpec::load_file(&dir.join(&app.spec_path)).unwrap();
        let truth = evaluate_ground_truth(&spec, &GroundTruthConfig::default()).unwrap();
        if truth.abstract_states.len() > 20 {
            continue;
        }
        checked += 1;
        let config = ExplorerConfig {
            budget: Budget::Actions(4000),
            seed: 7,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&spec, config).unwrap();
        let campaign: BTreeSet<_> = summary.abstract_states.iter().cloned().collect();
        if campaign != truth.abstract_states {
            let missing: Vec<_> = truth.abstract_states.difference(&campaign).collect();
            let extra: Vec<_> = campaign.difference(&truth.abstract_states).collect();
            println!(
                "{}: MISMATCH campaign={} truth={} missing={} extra={}",
                app.id, campaign.len(), truth.abstract_states.len(), missing.len(), extra.len()
            );
            for m in missing.iter().take(3) {
                println!("   missing: {} enabled={:?}", m.activity,
                    m.enabled.iter().map(|e| e.to_string()).collect::<Vec<_>>());
            }
            for m in extra.iter().take(3) {
                println!("   extra:   {} enabled={:?}", m.activity,
                    m.enabled.iter().map(|e| e.to_string()).collect::<Vec<_>>());
            }
        }
    }
    println!("checked {checked} apps (<=20 abstract states) in {:?}", t0.elapsed());
}
