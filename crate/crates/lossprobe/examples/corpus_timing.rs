fn main() {
    let t0 = std::time::Instant::now();
    let dir = std::path::PathBuf::from("/tmp/corpus-timing");
    let _ = std::fs::remove_dir_all(&dir);
    let mix = lossprobe::bench::generate::uniform_mix();
    let manifest = lossprobe::bench::generate_corpus(10, 1, &mix, &dir).unwrap();
    println!("10 apps generated in {:?}", t0.elapsed());
    for app in &manifest.apps {
        println!("{}: {} activities, faults: {:?}", app.id, app.activities,
            app.faults.iter().map(|f| (f.pattern, f.detectable_by)).collect::<Vec<_>>());
    }
}
