//! Speed of the leftmost second-class particle against its limit law.
//!
//! cargo run --release --example speed_law -- [p] [L] [t] [n]

use asep_lab::harness::{run_experiment, ExperimentKind, ExperimentSpec, RunOptions, Summary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());

    let mut spec = ExperimentSpec::new(ExperimentKind::Speed);
    spec.set("p", &arg(0, "0.7"))?;
    spec.set("L", &arg(1, "2"))?;
    spec.set("t", &arg(2, "200"))?;
    spec.set("n", &arg(3, "2000"))?;
    spec.set("s-grid", "-1,1,11")?;
    spec.safety = 2.0;

    let report = run_experiment(&spec, RunOptions::default())?;
    let Summary::Speed(s) = &report.summary else { unreachable!() };
    println!("p={} L={} t={} n={}", spec.p, spec.l, spec.t, s.n);
    println!("KS distance {:.4} (threshold {:.4})", s.ks, s.ks_max);
    println!("median {:.4}, law {:.4}", s.median, s.theoretical_median);
    println!("mean   {:.4}, law {:.4}", s.mean, s.theoretical_mean);
    println!("{:>6} {:>10} {:>10}", "s", "empirical", "law");
    for c in &s.curve {
        println!("{:>6.2} {:>10.4} {:>10.4}", c.s, c.empirical_cdf, c.theoretical_cdf);
    }
    Ok(())
}
