//! Least-squares scale of the speed law for a lone second-class particle.

use asep_lab::harness::{emit_plot_data, run_experiment, ExperimentKind, ExperimentSpec, RunOptions, Summary};

fn main() -> Result<(), asep_lab::Error> {
    let mut spec = ExperimentSpec::new(ExperimentKind::FitAlpha);
    spec.p = 0.7;
    spec.l = 2;
    spec.t = 200.0;
    spec.n_trials = 2000;
    spec.safety = 2.0;

    let report = run_experiment(&spec, RunOptions::default())?;
    let Summary::FitAlpha(s) = &report.summary else { unreachable!() };
    println!("alpha_hat = {:.4} (2p-1 = {:.2})", s.alpha_hat, 2.0 * spec.p - 1.0);
    println!("KS to fitted law {:.4}, to alpha = 2p-1 {:.4}", s.ks_fitted, s.ks_gamma);

    let path = std::env::temp_dir().join("asep_fit_alpha_curve.csv");
    emit_plot_data(&report, &path)?;
    println!("CDF table written to {}", path.display());
    Ok(())
}
