use lossprobe::bench::ground_truth::{evaluate_ground_truth, GroundTruthConfig};

fn main() {
    let mix = lossprobe::bench::generate::uniform_mix();
    let dir = std::path::PathBuf::from("/tmp/corpus-timing");
    let manifest = lossprobe::bench::CorpusManifest::load_file(&dir.join("manifest.ron")).unwrap();
    for app in &manifest.apps {
        let spec = lossprobe::sim::spec::AppSpec::load_file(&dir.join(&app.spec_path)).unwrap();
        let t0 = std::time::Instant::now();
        let truth = evaluate_ground_truth(&spec, &GroundTruthConfig::default()).unwrap();
        println!(
            "{}: {:?} abstract={} activities={}",
            app.id,
            t0.elapsed(),
            truth.abstract_states.len(),
            spec.activities.len()
        );
    }
    let _ = mix;
}
