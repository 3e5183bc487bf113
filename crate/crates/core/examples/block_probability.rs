//! Probability that L+1 consecutive sites around s*t are occupied, at
//! several times, against the large-time limit.

use asep_lab::harness::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions, Summary};

fn main() -> Result<(), asep_lab::Error> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Block);
    spec.p = 0.75;
    spec.l = 1;
    spec.block_s = 0.1;
    spec.t = 300.0;
    spec.t_grid = vec![50.0, 100.0, 200.0];
    spec.n_trials = 4000;
    spec.safety = 2.0;

    let report = run_experiment(&spec, RunOptions::default())?;
    let Summary::Block(s) = &report.summary else { unreachable!() };
    println!("limit {:.4}", s.target);
    for p in &s.points {
        println!("t={:>5} sites {}..={}: {:.4} ± {:.4}", p.t, p.position, p.position + 1, p.estimate, p.se);
    }
    Ok(())
}
