use lossprobe::bench::generate::fault_free_app;
use lossprobe::explorer::{run_campaign, ExplorerConfig};
use lossprobe::report::Budget;

fn main() {
    let t0 = std::time::Instant::now();
    let mut findings = 0usize;
    for seed in 0..1000u64 {
        let spec = fault_free_app(seed);
        let config = ExplorerConfig {
            budget: Budget::Actions(200),
            seed,
            ..ExplorerConfig::default()
        };
        let summary = run_campaign(&spec, config).unwrap();
        findings += summary.findings.len();
        if !summary.findings.is_empty() {
            println!("seed {seed}: {} findings! first: {:?} {:?}", summary.findings.len(),
                summary.findings[0].category, summary.findings[0].fired);
        }
    }
    println!("1000 fault-free campaigns in {:?}, findings={findings}", t0.elapsed());
}
