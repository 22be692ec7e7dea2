//! Analytic anchor: one sphere has capacitance 4 pi R, its single resonant
//! frequency is sqrt(delta lambda v^2 / |D|), and both landscape bounds are
//! exactly tight.
//!
//! Run with: cargo run --release --example single_sphere

use subwave::capacitance::capacitance_matrix;
use subwave::geometry::{Configuration, Sphere};
use subwave::landscape::{landscape, verify_inequalities};
use subwave::spectral::{eigendecompose, resonant_frequencies};

fn main() {
    for radius in [0.5, 1.0, 2.0] {
        let config = Configuration {
            background_speed: 1.0,
            contrast: 1e-3,
            min_gap: 0.0,
            spheres: vec![Sphere::new([0.0, 0.0, 0.0], radius, 1.0)],
        };
        let cap = capacitance_matrix(&config, 4).expect("solve");
        let analytic = 4.0 * std::f64::consts::PI * radius;
        let spectrum = eigendecompose(&cap).expect("eigen");
        let freqs = resonant_frequencies(&spectrum, &config).expect("frequencies");
        let land = landscape(&cap).expect("landscape");
        let slack = verify_inequalities(&spectrum, &land).expect("bounds hold");
        println!(
            "R = {radius}: C = {:.12} (4 pi R = {analytic:.12}), omega = {:.6e}, \
             bound slacks = ({:.1e}, {:.1e})",
            cap.entries[(0, 0)],
            freqs.omegas[0],
            slack.modes[0].min_slack_lower,
            slack.modes[0].min_slack_upper,
        );
    }
}
