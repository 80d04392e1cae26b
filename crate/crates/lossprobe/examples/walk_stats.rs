use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use lossprobe::model::Event;
use lossprobe::sim::{enabled_events, AppInstance, StepOutcome};

fn main() {
    let dir = std::path::PathBuf::from("/tmp/corpus-timing");
    let manifest = lossprobe::bench::CorpusManifest::load_file(&dir.join("manifest.ron")).unwrap();
    for app in &manifest.apps {
        let spec = lossprobe::sim::spec::AppSpec::load_file(&dir.join(&app.spec_path)).unwrap();
        let t0 = std::time::Instant::now();
        let initial = AppInstance::load(Arc::new(spec), 0).unwrap();
        let mut seen = BTreeSet::new();
        seen.insert(initial.state_digest());
        let mut queue = VecDeque::new();
        queue.push_back(initial);
        let mut edges = 0u64;
        while let Some(instance) = queue.pop_front() {
            let state = instance.concrete_state();
            let mut events: Vec<Event> = enabled_events(&state).into_iter().collect();
            events.push(Event::rotate());
            for event in events {
                let event = match event.kind {
                    lossprobe::model::EventKind::SetText => Event::set_text(event.locator.clone().unwrap(), "w123"),
                    _ => event,
                };
                let mut next = instance.clone();
                edges += 1;
                match next.apply_event(&event).unwrap() {
                    StepOutcome::Crashed(_) => continue,
                    StepOutcome::Ok => {}
                }
                if seen.insert(next.state_digest()) {
                    queue.push_back(next);
                }
            }
        }
        println!("{}: concrete={} edges={} in {:?}", app.id, seen.len(), edges, t0.elapsed());
    }
}
