//! Command-line front end: configuration generation, capacitance solves,
//! landscape analysis, mode-field export and the invariant battery, each
//! writing deterministic CSV/JSON outputs plus a run manifest.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
//! 3 landscape-theorem violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use subwave::capacitance::{capacitance_matrix_with, generalized_capacitance, SolverOptions};
use subwave::error::Error;
use subwave::export;
use subwave::field::{eval_mode, PlaneSpec, DEFAULT_RESOLUTION};
use subwave::geometry::{
    gen_lattice_defect, gen_random_cube, gen_random_planar, Configuration, GeneratorOptions,
    DEFAULT_CONTRAST, DEFAULT_MAX_ATTEMPTS,
};
use subwave::landscape::{
    landscape, landscape_generalized, predict_focus_sites_for_mode, verify_inequalities, Bound,
};
use subwave::manifest::RunManifest;
use subwave::spectral::{eigendecompose, eigendecompose_generalized, resonant_frequencies};
use subwave::verify::run_battery;

#[derive(Parser)]
#[command(
    name = "subwave",
    version,
    about = "Capacitance matrices, resonant spectra and landscape bounds for spherical resonator arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a resonator configuration JSON file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Solve for capacitance matrices and the resonant spectrum.
    Solve(SolveArgs),
    /// Compute landscape vectors, verify the bounds, and predict focus sites.
    Landscape(LandscapeArgs),
    /// Sample a resonant mode on a plane and export CSV + SVG.
    Field(FieldArgs),
    /// Run the invariant battery over seeded random configurations.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonGenerate {
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Minimum surface-to-surface clearance between spheres.
    #[arg(long = "min-gap", default_value_t = 0.5)]
    min_gap: f64,
    /// Material contrast written into the configuration.
    #[arg(long = "delta", default_value_t = DEFAULT_CONTRAST)]
    delta: f64,
    /// Background wave speed.
    #[arg(long = "background-speed", default_value_t = 1.0)]
    background_speed: f64,
    /// Resample budget for the gap constraint.
    #[arg(long = "max-attempts", default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: usize,
    /// Output configuration path (JSON).
    #[arg(long, default_value = "config.json")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Spheres on the z = 0 plane with normally distributed centers.
    Planar {
        #[arg(long)]
        n: usize,
        /// Standard deviation of the center coordinates.
        #[arg(long = "std", default_value_t = 10.0)]
        std_dev: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonGenerate,
    },
    /// Spheres uniform in a cube centered at the origin.
    Cube {
        #[arg(long)]
        n: usize,
        /// Cube side length.
        #[arg(long, default_value_t = 20.0)]
        side: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonGenerate,
    },
    /// Square lattice in the z = 0 plane with a central wave-speed defect.
    Lattice {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// Wave-speed factor on the central sphere.
        #[arg(long = "defect", default_value_t = 2.0)]
        defect: f64,
        /// Lattice spacing (center to center).
        #[arg(long, default_value_t = 5.0)]
        spacing: f64,
        #[command(flatten)]
        common: CommonGenerate,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Input configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Harmonic truncation degree.
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Also compute the generalised capacitance matrix and its spectrum.
    #[arg(long)]
    generalized: bool,
    /// Override the configuration's contrast for the frequency column.
    #[arg(long)]
    delta: Option<f64>,
    /// Also export the solved densities as JSON.
    #[arg(long)]
    densities: bool,
    /// Output directory.
    #[arg(long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Use the generalised capacitance matrix.
    #[arg(long)]
    generalized: bool,
    /// Focus-prediction threshold (1.0 = certified argmax superset).
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FieldArgs {
    #[arg(long)]
    config: PathBuf,
    /// Mode index (1-based, eigenvalues ascending).
    #[arg(long)]
    mode: usize,
    #[arg(long, default_value_t = 8)]
    order: usize,
    /// Use the generalised capacitance matrix for the spectrum.
    #[arg(long)]
    generalized: bool,
    /// Pixels per axis.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Plane origin "x,y,z".
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
    origin: [f64; 3],
    /// First in-plane axis "x,y,z".
    #[arg(long = "axis-u", value_parser = parse_vec3, default_value = "1,0,0")]
    axis_u: [f64; 3],
    /// Second in-plane axis "x,y,z".
    #[arg(long = "axis-v", value_parser = parse_vec3, default_value = "0,1,0")]
    axis_v: [f64; 3],
    /// Half window size; fitted to the configuration when omitted.
    #[arg(long = "half-extent")]
    half_extent: Option<f64>,
    /// Output path prefix (writes PREFIX.csv and PREFIX.svg).
    #[arg(long, default_value = "field")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of seeds (0..seeds-1).
    #[arg(long, default_value_t = 8)]
    seeds: u64,
    /// Comma-separated configuration sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2, 5, 10, 25])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 6)]
    order: usize,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_vec3(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated numbers, got {text:?}"
        ));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("bad component {part:?}: {e}"))?;
    }
    Ok(out)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::TheoremViolation { .. } | Error::DominanceFailure { .. } => 3,
        Error::IllConditioned { .. } | Error::EigenFailed | Error::PackingInfeasible { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are not usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Generate { kind } => cmd_generate(kind),
        Command::Solve(args) => cmd_solve(args),
        Command::Landscape(args) => cmd_landscape(args),
        Command::Field(args) => cmd_field(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn cmd_generate(kind: GenerateKind) -> Result<ExitCode, Error> {
    let start = Instant::now();
    let (config, common, seed, params, label) = match kind {
        GenerateKind::Planar {
            n,
            std_dev,
            seed,
            common,
        } => {
            let options = GeneratorOptions {
                background_speed: common.background_speed,
                contrast: common.delta,
                max_attempts: common.max_attempts,
            };
            let config =
                gen_random_planar(n, common.radius, std_dev, seed, common.min_gap, &options)?;
            let params = serde_json::json!({
                "kind": "planar", "n": n, "std": std_dev, "seed": seed,
                "radius": common.radius, "min_gap": common.min_gap,
                "delta": common.delta, "background_speed": common.background_speed,
            });
            (config, common, Some(seed), params, "planar")
        }
        GenerateKind::Cube {
            n,
            side,
            seed,
            common,
        } => {
            let options = GeneratorOptions {
                background_speed: common.background_speed,
                contrast: common.delta,
                max_attempts: common.max_attempts,
            };
            let config = gen_random_cube(n, common.radius, side, seed, common.min_gap, &options)?;
            let params = serde_json::json!({
                "kind": "cube", "n": n, "side": side, "seed": seed,
                "radius": common.radius, "min_gap": common.min_gap,
                "delta": common.delta, "background_speed": common.background_speed,
            });
            (config, common, Some(seed), params, "cube")
        }
        GenerateKind::Lattice {
            rows,
            cols,
            defect,
            spacing,
            common,
        } => {
            let options = GeneratorOptions {
                background_speed: common.background_speed,
                contrast: common.delta,
                max_attempts: common.max_attempts,
            };
            let config = gen_lattice_defect(rows, cols, spacing, common.radius, defect, &options)?;
            let params = serde_json::json!({
                "kind": "lattice", "rows": rows, "cols": cols, "defect": defect,
                "spacing": spacing, "radius": common.radius,
                "delta": common.delta, "background_speed": common.background_speed,
            });
            (config, common, None, params, "lattice")
        }
    };
    if let Some(dir) = common.out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    let json = config.to_json()?;
    std::fs::write(&common.out, &json)?;
    let mut manifest = RunManifest::new("generate", params);
    if let Some(seed) = seed {
        manifest = manifest.with_seed(seed);
    }
    manifest.set_input_hash(json.as_bytes());
    manifest.record_output(&common.out);
    manifest.record_timing("generate", start.elapsed());
    manifest.save(&manifest_path(&common.out))?;
    println!(
        "wrote {} ({} {} spheres)",
        common.out.display(),
        config.len(),
        label
    );
    Ok(ExitCode::SUCCESS)
}

/// Manifest next to an output file: `config.json` -> `config.manifest.json`.
fn manifest_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn load_config(path: &Path) -> Result<(Configuration, Vec<u8>), Error> {
    let bytes = std::fs::read(path)?;
    let config = Configuration::from_json(std::str::from_utf8(&bytes).map_err(|e| {
        Error::InvalidParams(format!("configuration file is not UTF-8: {e}"))
    })?)?;
    config.ensure_valid()?;
    Ok((config, bytes))
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let start = Instant::now();
    let (mut config, input_bytes) = load_config(&args.config)?;
    if let Some(delta) = args.delta {
        config.contrast = delta;
    }
    ensure_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(
        "solve",
        serde_json::json!({
            "config": args.config.display().to_string(),
            "order": args.order,
            "generalized": args.generalized,
            "delta": config.contrast,
        }),
    );
    manifest.set_input_hash(&input_bytes);

    let options = SolverOptions::with_order(args.order);
    let solve_start = Instant::now();
    let densities = subwave::capacitance::solve_densities_with(&config, &options)?;
    let cap = subwave::capacitance::capacitance_from_densities(&densities, options.probe_count);
    manifest.record_timing("solve", solve_start.elapsed());

    let cap_csv = args.out_dir.join("capacitance.csv");
    export::write_matrix_csv(&cap_csv, &cap.entries)?;
    manifest.record_output(&cap_csv);
    let cap_json = args.out_dir.join("capacitance.json");
    std::fs::write(&cap_json, export::cap_matrix_json(&cap)?)?;
    manifest.record_output(&cap_json);

    let spectrum = if args.generalized {
        let gen = generalized_capacitance(&cap, &config)?;
        let gen_csv = args.out_dir.join("gen_capacitance.csv");
        export::write_matrix_csv(&gen_csv, &gen.entries)?;
        manifest.record_output(&gen_csv);
        let gen_json = args.out_dir.join("gen_capacitance.json");
        std::fs::write(&gen_json, export::gen_cap_matrix_json(&gen)?)?;
        manifest.record_output(&gen_json);
        eigendecompose_generalized(&gen)?
    } else {
        eigendecompose(&cap)?
    };

    let freqs = match resonant_frequencies(&spectrum, &config) {
        Ok(freqs) => Some(freqs),
        Err(Error::NonIdenticalResonators(_)) => {
            eprintln!(
                "note: resonators are not identical; omega column omitted for the plain matrix \
                 (rerun with --generalized for frequencies)"
            );
            None
        }
        Err(other) => return Err(other),
    };
    let spectrum_csv = args.out_dir.join("spectrum.csv");
    export::write_spectrum_csv(&spectrum_csv, &spectrum, freqs.as_ref())?;
    manifest.record_output(&spectrum_csv);

    if args.densities {
        let densities_json = args.out_dir.join("densities.json");
        std::fs::write(
            &densities_json,
            export::densities_json(&densities, &config)?,
        )?;
        manifest.record_output(&densities_json);
    }
    manifest.record_timing("total", start.elapsed());
    manifest.save(&args.out_dir.join("manifest.json"))?;
    println!(
        "solved N={} at order {} (residual {:.3e}); outputs in {}",
        config.len(),
        args.order,
        cap.residual,
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_landscape(args: LandscapeArgs) -> Result<ExitCode, Error> {
    let start = Instant::now();
    let (config, input_bytes) = load_config(&args.config)?;
    ensure_dir(&args.out_dir)?;
    let mut manifest = RunManifest::new(
        "landscape",
        serde_json::json!({
            "config": args.config.display().to_string(),
            "order": args.order,
            "generalized": args.generalized,
            "threshold": args.threshold,
        }),
    );
    manifest.set_input_hash(&input_bytes);

    let options = SolverOptions::with_order(args.order);
    let cap = capacitance_matrix_with(&config, &options)?;
    let (spectrum, land) = if args.generalized {
        let gen = generalized_capacitance(&cap, &config)?;
        (
            eigendecompose_generalized(&gen)?,
            landscape_generalized(&gen)?,
        )
    } else {
        (eigendecompose(&cap)?, landscape(&cap)?)
    };

    let land_csv = args.out_dir.join("landscape.csv");
    export::write_landscape_csv(&land_csv, &land)?;
    manifest.record_output(&land_csv);
    let spectrum_csv = args.out_dir.join("spectrum.csv");
    export::write_spectrum_csv(&spectrum_csv, &spectrum, None)?;
    manifest.record_output(&spectrum_csv);

    // Verification is the exit gate; persist the manifest even on violation
    // so the partial outputs stay attributable.
    let report = match verify_inequalities(&spectrum, &land) {
        Ok(report) => report,
        Err(err) => {
            manifest.record_timing("total", start.elapsed());
            manifest.save(&args.out_dir.join("manifest.json"))?;
            return Err(err);
        }
    };
    let slack_csv = args.out_dir.join("slack.csv");
    export::write_slack_csv(&slack_csv, &report)?;
    manifest.record_output(&slack_csv);

    let mut predictions = Vec::with_capacity(spectrum.n());
    for n in 1..=spectrum.n() {
        for bound in [Bound::LowerSpectrum, Bound::UpperSpectrum] {
            predictions.push(predict_focus_sites_for_mode(
                &land,
                &spectrum,
                n,
                bound,
                args.threshold,
            )?);
        }
    }
    let focus_csv = args.out_dir.join("focus.csv");
    export::write_focus_csv(&focus_csv, &predictions)?;
    manifest.record_output(&focus_csv);

    let summary = serde_json::json!({
        "source": land.source,
        "mu": land.mu,
        "min_slack": report.min_slack(),
        "modes": report.modes,
    });
    let summary_path = args.out_dir.join("summary.json");
    std::fs::write(&summary_path, format!("{:#}\n", summary))?;
    manifest.record_output(&summary_path);

    manifest.record_timing("total", start.elapsed());
    manifest.save(&args.out_dir.join("manifest.json"))?;
    println!(
        "landscape for N={} ({}): mu = {:.6}, min slack {:.3e}; outputs in {}",
        config.len(),
        land.source,
        land.mu,
        report.min_slack(),
        args.out_dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_field(args: FieldArgs) -> Result<ExitCode, Error> {
    let start = Instant::now();
    let (config, input_bytes) = load_config(&args.config)?;
    let mut manifest = RunManifest::new(
        "field",
        serde_json::json!({
            "config": args.config.display().to_string(),
            "mode": args.mode,
            "order": args.order,
            "generalized": args.generalized,
            "resolution": args.resolution,
        }),
    );
    manifest.set_input_hash(&input_bytes);

    let options = SolverOptions::with_order(args.order);
    let densities = subwave::capacitance::solve_densities_with(&config, &options)?;
    let cap = subwave::capacitance::capacitance_from_densities(&densities, options.probe_count);
    let spectrum = if args.generalized {
        let gen = generalized_capacitance(&cap, &config)?;
        eigendecompose_generalized(&gen)?
    } else {
        eigendecompose(&cap)?
    };

    let plane = match args.half_extent {
        Some(extent) => PlaneSpec::new(
            args.origin,
            args.axis_u,
            args.axis_v,
            extent,
            extent,
            args.resolution,
            args.resolution,
        )?,
        None => {
            let mut plane = PlaneSpec::auto_z0(&config, args.resolution)?;
            plane.origin = args.origin;
            plane
        }
    };
    let slice = eval_mode(&spectrum, &densities, &config, args.mode, &plane)?;

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_dir(dir)?;
        }
    }
    let csv_path = args.out.with_extension("csv");
    export::write_field_csv(&csv_path, &slice)?;
    manifest.record_output(&csv_path);
    let svg_path = args.out.with_extension("svg");
    let title = format!(
        "mode {} (lambda = {:.6})",
        args.mode,
        spectrum.eigenvalues[args.mode - 1]
    );
    export::write_field_svg(&svg_path, &slice, &config, &title)?;
    manifest.record_output(&svg_path);

    manifest.record_timing("total", start.elapsed());
    manifest.save(&manifest_path(&csv_path))?;
    println!(
        "sampled mode {} on a {}x{} slice; wrote {} and {}",
        args.mode,
        args.resolution,
        args.resolution,
        csv_path.display(),
        svg_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let options = SolverOptions::with_order(args.order);
    let report = run_battery(&seeds, &args.sizes, &options);
    let json = report.to_json()?;
    match &args.out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    ensure_dir(dir)?;
                }
            }
            std::fs::write(path, &json)?;
            println!(
                "checked {} configurations at order {} in {:.1}s: {}",
                report.config_count,
                args.order,
                start.elapsed().as_secs_f64(),
                if report.passed { "all passed" } else { "FAILURES" }
            );
        }
        None => print!("{json}"),
    }
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else if report.any_violation() {
        eprintln!("error: invariant violations detected");
        Ok(ExitCode::from(3))
    } else {
        eprintln!("error: numerical failures detected");
        Ok(ExitCode::from(2))
    }
}
