//! Reconstruct the most focused resonant mode of a planar ensemble on the
//! z = 0 plane and export it as CSV plus an annotated SVG heatmap.
//!
//! Run with: cargo run --release --example mode_field
//! Outputs land in ./examples_out/.

use subwave::capacitance::{capacitance_from_densities, solve_densities_with, SolverOptions};
use subwave::export;
use subwave::field::{eval_mode, PlaneSpec};
use subwave::geometry::{gen_random_planar, GeneratorOptions};
use subwave::spectral::eigendecompose;

fn main() {
    let config = gen_random_planar(15, 1.0, 10.0, 3, 0.5, &GeneratorOptions::default())
        .expect("generate");
    let options = SolverOptions::with_order(8);
    let densities = solve_densities_with(&config, &options).expect("solve");
    let cap = capacitance_from_densities(&densities, options.probe_count);
    let spectrum = eigendecompose(&cap).expect("eigen");

    // The top mode of this arrangement is strongly focused.
    let n = spectrum.n();
    let plane = PlaneSpec::auto_z0(&config, 400).expect("plane");
    let slice = eval_mode(&spectrum, &densities, &config, n, &plane).expect("sample");

    std::fs::create_dir_all("examples_out").expect("mkdir");
    let csv = std::path::Path::new("examples_out/mode_field.csv");
    let svg = std::path::Path::new("examples_out/mode_field.svg");
    export::write_field_csv(csv, &slice).expect("csv");
    let title = format!("mode {n} (lambda = {:.4})", spectrum.eigenvalues[n - 1]);
    export::write_field_svg(svg, &slice, &config, &title).expect("svg");

    println!(
        "sampled mode {n} on a 400x400 window of half-extent {:.2}",
        plane.half_extent_u
    );
    println!("peak |field| = {:.4}", slice.max_abs());
    println!("wrote {} and {}", csv.display(), svg.display());
}
