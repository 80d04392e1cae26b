fn main() {
    let t0 = std::time::Instant::now();
    let dir = std::path::PathBuf::from("/tmp/corpus-50");
    let _ = std::fs::remove_dir_all(&dir);
    let mix = lossprobe::bench::generate::uniform_mix();
    let manifest = lossprobe::bench::generate_corpus(50, 1, &mix, &dir).unwrap();
    println!("50 apps in {:?}, total faults {}", t0.elapsed(), manifest.total_faults());
    let mut histogram = std::collections::BTreeMap::new();
    for app in &manifest.apps {
        for fault in &app.faults {
            *histogram.entry(format!("{:?}/{:?}", fault.pattern, fault.detectable_by)).or_insert(0u32) += 1;
        }
    }
    for (k, v) in histogram { println!("{k}: {v}"); }
}
