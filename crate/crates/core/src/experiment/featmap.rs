//! Input-feature strength maps: Σ|w| over each input's outgoing weights,
//! drawn as a grayscale image where white is zero and black is the maximum.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::network::Network;

pub fn feature_intensities(net: &Network) -> Vec<f64> {
    net.weights(0)
        .columns()
        .into_iter()
        .map(|col| col.iter().map(|w| w.abs()).sum())
        .collect()
}

/// Maps intensities linearly so 0 is white (255) and the maximum is black (0).
/// Nonzero intensities never render as pure white, so white pixels mark
/// exactly the deselected inputs.
pub fn feature_map_pixels(intensities: &[f64]) -> Vec<u8> {
    let max = intensities.iter().fold(0.0f64, |m, &v| m.max(v));
    intensities
        .iter()
        .map(|&v| {
            if v == 0.0 {
                255
            } else {
                (255.0 * (1.0 - v / max)).round().min(254.0) as u8
            }
        })
        .collect()
}

pub fn render_pgm(pixels: &[u8], rows: usize, cols: usize) -> String {
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for row in pixels.chunks(cols) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn render_intensity_csv(intensities: &[f64], cols: usize) -> String {
    let mut out = String::new();
    for row in intensities.chunks(cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(",")).unwrap();
    }
    out
}

/// Writes `<stem>.pgm` (ASCII P2) and `<stem>.csv` (raw intensities, one image row per line).
pub fn write_feature_map(net: &Network, image_shape: (usize, usize), stem: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let (rows, cols) = image_shape;
    if rows * cols != net.input_dim() {
        return Err(Error::ShapeMismatch(format!(
            "image shape {rows}x{cols} does not cover {} inputs",
            net.input_dim()
        )));
    }
    let intensities = feature_intensities(net);
    let pixels = feature_map_pixels(&intensities);
    let stem = stem.as_ref();
    let pgm = stem.with_extension("pgm");
    let csv = stem.with_extension("csv");
    fs::write(&pgm, render_pgm(&pixels, rows, cols)).map_err(|e| Error::io(&pgm, e))?;
    fs::write(&csv, render_intensity_csv(&intensities, cols)).map_err(|e| Error::io(&csv, e))?;
    Ok((pgm, csv))
}
