//! PNG figures derived from results files.
//!
//! Text needs a TrueType font; `COVERT_RIS_FONT` overrides the default
//! DejaVu Sans location. Without a font the figures are drawn unlabeled.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use plotters::prelude::*;

use crate::error::{Error, Result};

use super::beampattern::Beampattern;
use super::scenario::{ExperimentRecord, Status};
use super::sweep::read_records;

/// Lowest level drawn on beampattern plots.
pub const DB_FLOOR: f64 = -60.0;

const FONT_ENV: &str = "COVERT_RIS_FONT";
const FONT_PATHS: [&str; 2] = [
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/TTF/DejaVuSans.ttf",
];

fn fonts_ready() -> bool {
    static READY: OnceLock<bool> = OnceLock::new();
    *READY.get_or_init(|| {
        let candidates = std::env::var(FONT_ENV).into_iter().chain(FONT_PATHS.iter().map(|s| s.to_string()));
        for path in candidates {
            if let Ok(bytes) = std::fs::read(&path) {
                let bytes: &'static [u8] = Box::leak(bytes.into_boxed_slice());
                if plotters::style::register_font("sans-serif", FontStyle::Normal, bytes).is_ok() {
                    return true;
                }
            }
        }
        log::warn!("no usable font found, figures will carry no text");
        false
    })
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

/// 64-bit FNV-1a, stable across runs and platforms.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn draw_lines(path: &Path, title: &str, x_desc: &str, y_desc: &str, series: &[Series], y_floor: Option<f64>) -> Result<()> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if let Some(floor) = y_floor {
        y0 = floor;
    }
    if !(x0.is_finite() && x1.is_finite()) {
        (x0, x1) = (0.0, 1.0);
    }
    if !(y0.is_finite() && y1.is_finite()) {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9);
    let (y0, y1) = if y_floor.is_some() { (y0, y1 + pad) } else { (y0 - pad, y1 + pad) };

    let root = BitMapBackend::new(path, (900, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let labeled = fonts_ready();
    let mut builder = ChartBuilder::on(&root);
    builder.margin(15);
    if labeled {
        builder.caption(title, ("sans-serif", 24)).x_label_area_size(45).y_label_area_size(65);
    }
    let mut chart = builder.build_cartesian_2d(x0..x1, y0..y1).map_err(plot_err)?;
    if labeled {
        chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).draw().map_err(plot_err)?;
    }
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let clipped: Vec<(f64, f64)> = s.points.iter().map(|&(x, y)| (x, y.max(y0))).collect();
        let drawn = chart
            .draw_series(LineSeries::new(clipped.clone(), color.stroke_width(2)))
            .map_err(plot_err)?;
        if labeled {
            drawn
                .label(s.label.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(3)));
        }
        if clipped.len() <= 50 {
            chart
                .draw_series(clipped.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
    }
    if labeled {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

/// A written figure and the series it shows.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotFile {
    pub path: PathBuf,
    pub sweep: String,
    pub series: Vec<String>,
}

/// One covert-rate figure per sweep variable found in the results files,
/// with one series per scheme (mean over seeds with optimal status).
pub fn emit_plots(results: &[PathBuf], out_dir: &Path) -> Result<Vec<PlotFile>> {
    let mut records: Vec<ExperimentRecord> = Vec::new();
    for path in results {
        records.extend(read_records(path)?);
    }
    plot_records(&records, out_dir)
}

pub fn plot_records(records: &[ExperimentRecord], out_dir: &Path) -> Result<Vec<PlotFile>> {
    if records.is_empty() {
        log::warn!("no results to plot");
        return Ok(Vec::new());
    }
    std::fs::create_dir_all(out_dir)?;
    // sweep → scheme → value → rates
    let mut by_sweep: BTreeMap<String, BTreeMap<String, BTreeMap<u64, Vec<f64>>>> = BTreeMap::new();
    for r in records {
        let slot = by_sweep
            .entry(r.sweep_var.clone())
            .or_default()
            .entry(r.scheme().to_string())
            .or_default()
            .entry(r.sweep_value.to_bits())
            .or_default();
        if r.status == Status::Optimal {
            if let Some(rate) = r.covert_rate {
                slot.push(rate);
            }
        }
    }
    let mut files = Vec::new();
    for (sweep, schemes) in by_sweep {
        let mut series: Vec<Series> = schemes
            .into_iter()
            .map(|(label, values)| {
                let mut points: Vec<(f64, f64)> = values
                    .into_iter()
                    .filter(|(_, v)| !v.is_empty())
                    .map(|(bits, v)| (f64::from_bits(bits), v.iter().sum::<f64>() / v.len() as f64))
                    .collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { label, points }
            })
            .collect();
        series.sort_by(|a, b| a.label.cmp(&b.label));
        let mut key = sweep.clone();
        for s in &series {
            key.push_str(&s.label);
            for (x, y) in &s.points {
                key.push_str(&format!("{x:e}:{y:e};"));
            }
        }
        let path = out_dir.join(format!("fig_{sweep}_{:016x}.png", fnv1a(key.as_bytes())));
        draw_lines(&path, &format!("Covert rate versus {sweep}"), &sweep, "covert rate (bit/s/Hz)", &series, None)?;
        files.push(PlotFile { path, sweep, series: series.into_iter().map(|s| s.label).collect() });
    }
    Ok(files)
}

/// Beampattern figure in dB, clipped at [`DB_FLOOR`].
pub fn plot_beampattern(bp: &Beampattern, out_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let db = |p: f64| if p > 0.0 { (10.0 * p.log10()).max(DB_FLOOR) } else { DB_FLOOR };
    let curve = |label: &str, f: fn(&super::beampattern::BeamRow) -> f64| Series {
        label: label.to_string(),
        points: bp.rows.iter().map(|r| (r.theta.to_degrees(), db(f(r)))).collect(),
    };
    let series = vec![curve("total", |r| r.p_total), curve("bob", |r| r.p_bob), curve("carol", |r| r.p_carol)];
    let mut key = String::from("beampattern");
    for s in &series {
        for (x, y) in &s.points {
            key.push_str(&format!("{x:e}:{y:e};"));
        }
    }
    let path = out_dir.join(format!("fig_beampattern_{:016x}.png", fnv1a(key.as_bytes())));
    draw_lines(&path, "Normalized beampattern", "angle (deg)", "normalized power (dB)", &series, Some(DB_FLOOR))?;
    Ok(path)
}
