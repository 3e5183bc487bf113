//! Single-species and colored step ASEP estimates of the same probability.

use asep_lab::harness::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions, Summary};

fn main() -> Result<(), asep_lab::Error> {
    let mut spec = ExperimentSpec::new(ExperimentKind::Identity);
    spec.p = 0.7;
    spec.t = 2.0;
    spec.sites = vec![-2, -1];
    spec.colors = vec![1];
    spec.shift = 0;
    spec.n_trials = 50_000;

    let report = run_experiment(&spec, RunOptions::default())?;
    let Summary::Identity(s) = &report.summary else { unreachable!() };
    println!("I={:?} J={:?} P={} t={}", spec.sites, spec.colors, spec.shift, spec.t);
    println!("single-species {:.5} ± {:.5}", s.p_single, s.se_single);
    println!("colored        {:.5} ± {:.5}", s.p_colored, s.se_colored);
    println!("z = {:.2}", s.z);
    Ok(())
}
