//! Run the invariant battery on a small seeded ensemble: matrix sign
//! structure, diagonal dominance, spectral positivity, inverse positivity
//! and both landscape inequalities for every eigenpair.
//!
//! Run with: cargo run --release --example verify_battery

use subwave::capacitance::SolverOptions;
use subwave::verify::run_battery;

fn main() {
    let seeds: Vec<u64> = (0..4).collect();
    let sizes = [2usize, 5, 10, 18];
    let report = run_battery(&seeds, &sizes, &SolverOptions::with_order(6));
    println!(
        "checked {} configurations (planar + cube, N in {:?}, seeds {:?})",
        report.config_count, sizes, seeds
    );
    let mut worst_slack = f64::INFINITY;
    let mut worst_asym = 0.0f64;
    for check in &report.checks {
        worst_slack = worst_slack
            .min(check.min_slack_lower)
            .min(check.min_slack_upper);
        worst_asym = worst_asym.max(check.asymmetry);
    }
    println!("worst pre-symmetrization asymmetry: {worst_asym:.3e}");
    println!("worst landscape slack over all eigenpairs: {worst_slack:.3e}");
    for check in report.failures() {
        println!(
            "FAILED {} seed {} n {}: {:?}",
            check.kind, check.seed, check.n, check.failures
        );
    }
    println!("overall: {}", if report.passed { "all invariants hold" } else { "FAILURES" });
}
