//! CSV, JSON and SVG writers for solver outputs.
//!
//! CSV files carry a header row and full-precision floats (shortest
//! round-trip formatting, so re-parsing reproduces the exact f64). All
//! indices in exported files are 1-based; outputs are deterministic byte for
//! byte given identical inputs.

use std::fmt::Write as _;
use std::path::Path;

use base64::Engine;
use image::ImageEncoder;
use nalgebra::DMatrix;

use crate::capacitance::{CapMatrix, DensitySet, GenCapMatrix};
use crate::error::Result;
use crate::field::{FieldSlice, PixelMask};
use crate::geometry::Configuration;
use crate::landscape::{FocusPrediction, Landscape, SlackReport};
use crate::spectral::{ResonantFrequencies, Spectrum};

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Matrix CSV: header `i,1,...,N`, then one row per matrix row with its
/// 1-based index in the first column.
pub fn matrix_csv(entries: &DMatrix<f64>) -> String {
    let n = entries.nrows();
    let mut out = String::from("i");
    for j in 1..=entries.ncols() {
        let _ = write!(out, ",{j}");
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "{}", i + 1);
        for j in 0..entries.ncols() {
            let _ = write!(out, ",{}", entries[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, entries: &DMatrix<f64>) -> Result<()> {
    write_text(path, &matrix_csv(entries))
}

/// Spectrum CSV: `n,lambda,omega,v_1,...,v_N`. The omega column is left
/// empty when no frequencies apply (plain matrix with non-identical
/// resonators).
pub fn spectrum_csv(spectrum: &Spectrum, freqs: Option<&ResonantFrequencies>) -> String {
    let n = spectrum.n();
    let mut out = String::from("n,lambda,omega");
    for i in 1..=n {
        let _ = write!(out, ",v_{i}");
    }
    out.push('\n');
    for k in 0..n {
        let _ = write!(out, "{},{}", k + 1, spectrum.eigenvalues[k]);
        match freqs {
            Some(f) => {
                let _ = write!(out, ",{}", f.omegas[k]);
            }
            None => out.push(','),
        }
        for i in 0..n {
            let _ = write!(out, ",{}", spectrum.eigenvectors[(i, k)]);
        }
        out.push('\n');
    }
    out
}

pub fn write_spectrum_csv(
    path: &Path,
    spectrum: &Spectrum,
    freqs: Option<&ResonantFrequencies>,
) -> Result<()> {
    write_text(path, &spectrum_csv(spectrum, freqs))
}

/// Landscape CSV: `i,u,u_hat`.
pub fn landscape_csv(land: &Landscape) -> String {
    let mut out = String::from("i,u,u_hat\n");
    for i in 0..land.n() {
        let _ = writeln!(out, "{},{},{}", i + 1, land.u[i], land.u_hat[i]);
    }
    out
}

pub fn write_landscape_csv(path: &Path, land: &Landscape) -> Result<()> {
    write_text(path, &landscape_csv(land))
}

/// Slack CSV: `n,min_slack_lower,min_slack_upper`.
pub fn slack_csv(report: &SlackReport) -> String {
    let mut out = String::from("n,min_slack_lower,min_slack_upper\n");
    for mode in &report.modes {
        let _ = writeln!(
            out,
            "{},{},{}",
            mode.n, mode.min_slack_lower, mode.min_slack_upper
        );
    }
    out
}

pub fn write_slack_csv(path: &Path, report: &SlackReport) -> Result<()> {
    write_text(path, &slack_csv(report))
}

/// Focus CSV: `n,lambda,bound,threshold,certified,sites` with 1-based sites
/// joined by semicolons.
pub fn focus_csv(predictions: &[FocusPrediction]) -> String {
    let mut out = String::from("n,lambda,bound,threshold,certified,sites\n");
    for p in predictions {
        let sites: Vec<String> = p
            .candidate_sites
            .iter()
            .map(|i| (i + 1).to_string())
            .collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            p.eigen_index.map(|n| n.to_string()).unwrap_or_default(),
            p.lambda,
            p.which_bound,
            p.threshold,
            p.certified,
            sites.join(";")
        );
    }
    out
}

pub fn write_focus_csv(path: &Path, predictions: &[FocusPrediction]) -> Result<()> {
    write_text(path, &focus_csv(predictions))
}

/// Field CSV: `u,v,value,mask` with plane coordinates of pixel centers.
/// Mask entries are `exterior` or `sphere_<k>` (1-based).
pub fn field_csv(slice: &FieldSlice) -> String {
    let plane = &slice.plane;
    let du = 2.0 * plane.half_extent_u / plane.res_u as f64;
    let dv = 2.0 * plane.half_extent_v / plane.res_v as f64;
    let mut out = String::from("u,v,value,mask\n");
    for iv in 0..plane.res_v {
        let v = -plane.half_extent_v + (iv as f64 + 0.5) * dv;
        for iu in 0..plane.res_u {
            let u = -plane.half_extent_u + (iu as f64 + 0.5) * du;
            let mask = match slice.mask_at(iu, iv) {
                PixelMask::Exterior => "exterior".to_string(),
                PixelMask::Interior(k) => format!("sphere_{}", k + 1),
            };
            let _ = writeln!(out, "{},{},{},{}", u, v, slice.value(iu, iv), mask);
        }
    }
    out
}

pub fn write_field_csv(path: &Path, slice: &FieldSlice) -> Result<()> {
    write_text(path, &field_csv(slice))
}

/// JSON export of a capacitance matrix with its diagnostics.
pub fn cap_matrix_json(cap: &CapMatrix) -> Result<String> {
    let rows: Vec<Vec<f64>> = (0..cap.n())
        .map(|i| (0..cap.n()).map(|j| cap.entries[(i, j)]).collect())
        .collect();
    let value = serde_json::json!({
        "entries": rows,
        "order_used": cap.order_used,
        "residual": cap.residual,
        "asymmetry": cap.asymmetry,
    });
    Ok(format!("{:#}\n", value))
}

/// JSON export of a generalised capacitance matrix with its row weights.
pub fn gen_cap_matrix_json(gen: &GenCapMatrix) -> Result<String> {
    let rows: Vec<Vec<f64>> = (0..gen.n())
        .map(|i| (0..gen.n()).map(|j| gen.entries[(i, j)]).collect())
        .collect();
    let value = serde_json::json!({
        "entries": rows,
        "weights": gen.weights,
    });
    Ok(format!("{:#}\n", value))
}

/// JSON export of solved densities, consumable by the field evaluator in a
/// later session: order, sphere geometry, and the full coefficient tensor
/// indexed `[source_j][sphere_i][flat_lm]`.
pub fn densities_json(densities: &DensitySet, config: &Configuration) -> Result<String> {
    let n = densities.sphere_count();
    let order = densities.order();
    let mut tensor = Vec::with_capacity(n);
    for j in 0..n {
        let mut per_sphere = Vec::with_capacity(n);
        for i in 0..n {
            let mut coeffs = Vec::with_capacity(crate::sphharm::basis_len(order));
            for l in 0..=order {
                for m in -(l as i64)..=l as i64 {
                    coeffs.push(densities.coefficient(j, i, l, m));
                }
            }
            per_sphere.push(coeffs);
        }
        tensor.push(per_sphere);
    }
    let spheres: Vec<serde_json::Value> = config
        .spheres
        .iter()
        .map(|s| serde_json::json!({"center": s.center, "radius": s.radius}))
        .collect();
    let value = serde_json::json!({
        "order": order,
        "spheres": spheres,
        "coeffs": tensor,
        "cond_estimate": densities.cond_estimate(),
    });
    Ok(format!("{:#}\n", value))
}

// --- SVG heatmap ---

/// Diverging colormap, symmetric about zero: blue for negative, white for
/// zero, red for positive. `t` in [-1, 1].
fn diverging_color(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    let neg = [33.0, 102.0, 172.0]; // deep blue
    let mid = [247.0, 247.0, 247.0]; // near white
    let pos = [178.0, 24.0, 43.0]; // deep red
    let (a, b, s) = if t < 0.0 { (mid, neg, -t) } else { (mid, pos, t) };
    [
        (a[0] + (b[0] - a[0]) * s).round() as u8,
        (a[1] + (b[1] - a[1]) * s).round() as u8,
        (a[2] + (b[2] - a[2]) * s).round() as u8,
    ]
}

/// Render a field slice as an SVG heatmap: linear color map symmetric about
/// zero with the scale annotated, pixel data embedded as PNG, and circles
/// marking where spheres intersect the slice plane.
pub fn field_svg(slice: &FieldSlice, config: &Configuration, title: &str) -> Result<String> {
    let plane = &slice.plane;
    let vmax = slice.max_abs().max(f64::MIN_POSITIVE);

    // Pixel raster; PNG rows run top-down, our v axis runs bottom-up.
    let (w, h) = (plane.res_u as u32, plane.res_v as u32);
    let mut img = image::RgbImage::new(w, h);
    for iv in 0..plane.res_v {
        for iu in 0..plane.res_u {
            let t = slice.value(iu, iv) / vmax;
            let px = diverging_color(t);
            img.put_pixel(iu as u32, (plane.res_v - 1 - iv) as u32, image::Rgb(px));
        }
    }
    let mut png_bytes = Vec::new();
    image::codecs::png::PngEncoder::new(&mut png_bytes).write_image(
        img.as_raw(),
        w,
        h,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| crate::error::Error::InvalidPlane(format!("png encoding failed: {e}")))?;
    let png_b64 = base64::engine::general_purpose::STANDARD.encode(&png_bytes);

    // Layout.
    let plot = 460.0f64;
    let left = 60.0;
    let top = 46.0;
    let bottom = 54.0;
    let bar_gap = 26.0;
    let bar_w = 18.0;
    let right = bar_gap + bar_w + 66.0;
    let width = left + plot + right;
    let height = top + plot + bottom;

    let to_px = |u: f64, extent: f64| (u + extent) / (2.0 * extent) * plot;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"26\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        left + plot / 2.0,
        title
    );
    let _ = writeln!(
        svg,
        "<image x=\"{left}\" y=\"{top}\" width=\"{plot}\" height=\"{plot}\" preserveAspectRatio=\"none\" image-rendering=\"pixelated\" href=\"data:image/png;base64,{png_b64}\"/>"
    );
    // Sphere outlines where the plane cuts them.
    for s in &config.spheres {
        let rel = [
            s.center[0] - plane.origin[0],
            s.center[1] - plane.origin[1],
            s.center[2] - plane.origin[2],
        ];
        let cu = rel[0] * plane.axis_u[0] + rel[1] * plane.axis_u[1] + rel[2] * plane.axis_u[2];
        let cv = rel[0] * plane.axis_v[0] + rel[1] * plane.axis_v[1] + rel[2] * plane.axis_v[2];
        let in_plane_sq = cu * cu + cv * cv;
        let dist_sq = rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2] - in_plane_sq;
        if dist_sq < s.radius * s.radius {
            let ring = (s.radius * s.radius - dist_sq).sqrt();
            let cx = left + to_px(cu, plane.half_extent_u);
            let cy = top + plot - to_px(cv, plane.half_extent_v);
            let rx = ring / (2.0 * plane.half_extent_u) * plot;
            let _ = writeln!(
                svg,
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{rx:.2}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.8\"/>"
            );
        }
    }
    // Frame and axis labels.
    let _ = writeln!(
        svg,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot}\" height=\"{plot}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>"
    );
    for (frac, label_u, label_v) in [
        (0.0, -plane.half_extent_u, -plane.half_extent_v),
        (0.5, 0.0, 0.0),
        (1.0, plane.half_extent_u, plane.half_extent_v),
    ] {
        let x = left + frac * plot;
        let y = top + plot - frac * plot;
        let _ = writeln!(
            svg,
            "<text x=\"{x:.1}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label_u:.3}</text>",
            top + plot + 18.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{y:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\" dominant-baseline=\"middle\">{label_v:.3}</text>",
            left - 6.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">u</text>",
        left + plot / 2.0,
        top + plot + 40.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">v</text>",
        top + plot / 2.0
    );
    // Color bar: gradient top (+vmax) to bottom (-vmax).
    let bar_x = left + plot + bar_gap;
    let _ = writeln!(svg, "<defs><linearGradient id=\"cmap\" x1=\"0\" y1=\"0\" x2=\"0\" y2=\"1\">");
    for k in 0..=8 {
        let t = 1.0 - 2.0 * k as f64 / 8.0; // +1 at top
        let [r, g, b] = diverging_color(t);
        let _ = writeln!(
            svg,
            "<stop offset=\"{:.3}\" stop-color=\"rgb({r},{g},{b})\"/>",
            k as f64 / 8.0
        );
    }
    let _ = writeln!(svg, "</linearGradient></defs>");
    let _ = writeln!(
        svg,
        "<rect x=\"{bar_x}\" y=\"{top}\" width=\"{bar_w}\" height=\"{plot}\" fill=\"url(#cmap)\" stroke=\"black\" stroke-width=\"0.5\"/>"
    );
    for (frac, value) in [(0.0f64, vmax), (0.5, 0.0), (1.0, -vmax)] {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" dominant-baseline=\"middle\">{value:.4e}</text>",
            bar_x + bar_w + 6.0,
            top + frac * plot
        );
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

pub fn write_field_svg(
    path: &Path,
    slice: &FieldSlice,
    config: &Configuration,
    title: &str,
) -> Result<()> {
    write_text(path, &field_svg(slice, config, title)?)
}
