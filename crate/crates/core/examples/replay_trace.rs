//! Re-runs one trial from its seed and prints the start of its event trace.

use asep_lab::harness::{run_trial_traced, ExperimentKind, ExperimentSpec};
use asep_lab::EventTrace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
    spec.p = 0.7;
    spec.l = 1;
    spec.t = 5.0;
    spec.master_seed = 42;

    let mut trace = EventTrace::new(Vec::new());
    let mut shown = 0;
    let record = run_trial_traced(&spec, 7, &mut |ev| {
        if ev.accepted && shown < 10 {
            trace.record(ev).expect("in-memory write");
            shown += 1;
        }
    })?;
    print!("{}", String::from_utf8(trace.finish()?)?);
    println!("... {} events in total", record.events);
    println!("{}", serde_json::to_string(&record.outcome)?);
    Ok(())
}
