//! Transmit beampatterns of an extracted design.

use serde::{Deserialize, Serialize};

use crate::channel::steering_ula;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::optimizer::LiftedSolution;

/// Pattern values at one angle, each curve normalized to its own peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamRow {
    /// Radians.
    pub theta: f64,
    pub p_total: f64,
    pub p_bob: f64,
    pub p_carol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beampattern {
    pub rows: Vec<BeamRow>,
    /// Unnormalized peaks, so `row.p_x · peak_x` is `a^H W_x a`.
    pub peak_total: f64,
    pub peak_bob: f64,
    pub peak_carol: f64,
}

/// `n` evenly spaced angles over `[−90°, 90°]`, in radians.
pub fn default_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| (-90.0 + 180.0 * i as f64 / (n - 1) as f64).to_radians())
        .collect()
}

fn normalize(values: &[f64]) -> (Vec<f64>, f64) {
    let peak = values.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        (values.iter().map(|v| v / peak).collect(), peak)
    } else {
        (vec![0.0; values.len()], 0.0)
    }
}

/// `p_X(θ) = |a(θ)^H w_X|²` for the extracted beams.
pub fn beampattern(sol: &LiftedSolution, cfg: &SystemConfig, grid: &[f64]) -> Result<Beampattern> {
    let n = sol.wb_vec.len();
    if n == 0 || sol.wc_vec.len() != n {
        return Err(Error::invalid("solution carries no extracted beams"));
    }
    let gain = |a: &CVec, w: &CVec| a.dotc(w).norm_sqr();
    let mut bob = Vec::with_capacity(grid.len());
    let mut carol = Vec::with_capacity(grid.len());
    for &theta in grid {
        let a = steering_ula(theta, n, cfg.element_spacing, cfg.wavelength)?;
        bob.push(gain(&a, &sol.wb_vec));
        carol.push(gain(&a, &sol.wc_vec));
    }
    let total: Vec<f64> = bob.iter().zip(&carol).map(|(b, c)| b + c).collect();
    let (total, peak_total) = normalize(&total);
    let (bob, peak_bob) = normalize(&bob);
    let (carol, peak_carol) = normalize(&carol);
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| BeamRow { theta, p_total: total[i], p_bob: bob[i], p_carol: carol[i] })
        .collect();
    Ok(Beampattern { rows, peak_total, peak_bob, peak_carol })
}

/// Normalized power at one angle: `(bob, carol)` relative to their peaks.
pub fn pattern_at(bp: &Beampattern, sol: &LiftedSolution, cfg: &SystemConfig, theta: f64) -> Result<(f64, f64)> {
    let a = steering_ula(theta, sol.wb_vec.len(), cfg.element_spacing, cfg.wavelength)?;
    let rel = |w: &CVec, peak: f64| if peak > 0.0 { a.dotc(w).norm_sqr() / peak } else { 0.0 };
    Ok((rel(&sol.wb_vec, bp.peak_bob), rel(&sol.wc_vec, bp.peak_carol)))
}

pub fn write_beampattern(path: &std::path::Path, bp: &Beampattern) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta_deg", "p_total", "p_bob", "p_carol"])?;
    for r in &bp.rows {
        w.write_record(&[
            r.theta.to_degrees().to_string(),
            r.p_total.to_string(),
            r.p_bob.to_string(),
            r.p_carol.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
