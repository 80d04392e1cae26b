use lossprobe::explorer::{run_campaign, ExplorerConfig};
use lossprobe::report::Budget;

fn main() {
    let dir = std::path::PathBuf::from("/tmp/corpus-50");
    let manifest = lossprobe::bench::CorpusManifest::load_file(&dir.join("manifest.ron")).unwrap();
    let t0 = std::time::Instant::now();
    let mut detected_union: std::collections::BTreeSet<String> = Default::default();
    let mut total_findings = 0usize;
    for app in &manifest.apps {
        let spec = lossprobe::sim::spec::AppSpec::load_file(&dir.join(&app.spec_path)).unwrap();
        for run in 0..3u64 {
            let config = ExplorerConfig {
                budget: Budget::Actions(500),
                seed: 100 + run,
                ..ExplorerConfig::default()
            };
            let summary = run_campaign(&spec, config).unwrap();
            total_findings += summary.findings.len();
            for f in summary.findings.iter().filter(|f| f.category.is_genuine()) {
                for mf in &app.faults {
                    if mf.activity == f.activity {
                        detected_union.insert(mf.id.clone());
                    }
                }
            }
        }
    }
    println!(
        "150 campaigns in {:?}; findings={total_findings}; union detected {}/{}",
        t0.elapsed(),
        detected_union.len(),
        manifest.total_faults()
    );
}
