//! The harmonic solver against the classical bispherical image-charge
//! series for two equal spheres, across a range of separations.
//!
//! Run with: cargo run --release --example two_spheres

use subwave::capacitance::{capacitance_matrix, two_sphere_capacitance_series, two_sphere_config};

fn main() {
    println!("two unit spheres, truncation order 8");
    println!("{:>6} {:>16} {:>16} {:>12} {:>12}", "d", "C11", "C12", "rel(C11)", "rel(C12)");
    for d in [2.5, 3.0, 4.0, 6.0, 10.0, 20.0] {
        let cap = capacitance_matrix(&two_sphere_config(1.0, d), 8).expect("solve");
        let series = two_sphere_capacitance_series(1.0, d, 60).expect("series");
        let rel = |i: usize, j: usize| {
            (cap.entries[(i, j)] - series[(i, j)]).abs() / series[(i, j)].abs()
        };
        println!(
            "{d:>6.1} {:>16.10} {:>16.10} {:>12.2e} {:>12.2e}",
            cap.entries[(0, 0)],
            cap.entries[(0, 1)],
            rel(0, 0),
            rel(0, 1),
        );
    }
    println!("(the isolated-sphere value is 4 pi = {:.10})", 4.0 * std::f64::consts::PI);
}
