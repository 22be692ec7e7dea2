//! A random planar array of 15 identical resonators: resonant spectrum plus
//! landscape and upper-landscape bounds per mode. The landscape pins down
//! the lowest modes; the upper landscape takes over at the top of the
//! spectrum.
//!
//! Run with: cargo run --release --example planar_ensemble

use subwave::capacitance::capacitance_matrix;
use subwave::geometry::{gen_random_planar, GeneratorOptions};
use subwave::landscape::{landscape, verify_inequalities};
use subwave::spectral::{eigendecompose, resonant_frequencies};

fn main() {
    let config = gen_random_planar(15, 1.0, 10.0, 3, 0.5, &GeneratorOptions::default())
        .expect("generate");
    let cap = capacitance_matrix(&config, 8).expect("solve");
    println!(
        "15 resonators on z = 0 (seed 3); boundary residual {:.2e}, asymmetry {:.2e}",
        cap.residual, cap.asymmetry
    );
    let spectrum = eigendecompose(&cap).expect("eigen");
    let freqs = resonant_frequencies(&spectrum, &config).expect("frequencies");
    let land = landscape(&cap).expect("landscape");
    let report = verify_inequalities(&spectrum, &land).expect("bounds hold");

    println!("mu = {:.6}", report.mu);
    println!(
        "{:>3} {:>10} {:>12} {:>12} {:>12} {:>8}",
        "n", "lambda", "omega", "slack_low", "slack_up", "argmax"
    );
    for mode in &report.modes {
        println!(
            "{:>3} {:>10.5} {:>12.5e} {:>12.4} {:>12.4} {:>8}",
            mode.n,
            mode.lambda,
            freqs.omegas[mode.n - 1],
            mode.min_slack_lower,
            mode.min_slack_upper,
            mode.argmax_index + 1,
        );
    }
    println!(
        "tightest landscape bound: mode {}; tightest upper-landscape bound: mode {}",
        report
            .modes
            .iter()
            .min_by(|a, b| a.min_slack_lower.total_cmp(&b.min_slack_lower))
            .map(|m| m.n)
            .unwrap(),
        report
            .modes
            .iter()
            .min_by(|a, b| a.min_slack_upper.total_cmp(&b.min_slack_upper))
            .map(|m| m.n)
            .unwrap(),
    );
}
