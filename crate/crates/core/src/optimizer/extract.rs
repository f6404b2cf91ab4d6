//! Rank-one extraction and extracted-level evaluation.

use crate::channel::{gen_channel_aw, sinr_bob, sinr_carol, ChannelSet, User};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::linalg::{herm_eigen, outer, CMat, CVec, C64};
use crate::sensing::{crb, SensingModel};

/// `√λ₁·u₁`, or the per-element phases of `u₁` when `unit_modulus` is set.
/// A matrix without a positive eigenvalue yields the zero vector.
pub fn extract_rank_one(x: &CMat, unit_modulus: bool) -> CVec {
    let n = x.nrows();
    if n == 0 {
        return CVec::zeros(0);
    }
    let eig = herm_eigen(x);
    let top = eig.values[0];
    let u = eig.vectors.column(0).into_owned();
    if unit_modulus {
        return u.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) });
    }
    if !(top > 0.0) {
        log::warn!("rank-one extraction of a matrix without positive eigenvalue");
        return CVec::zeros(n);
    }
    u * C64::new(top.sqrt(), 0.0)
}

/// `λ₂/λ₁`, zero for rank ≤ 1 or the zero matrix.
pub fn eigen_ratio(x: &CMat) -> f64 {
    if x.nrows() < 2 {
        return 0.0;
    }
    let v = herm_eigen(x).values;
    if v[0] <= 0.0 {
        return 0.0;
    }
    v[1].max(0.0) / v[0]
}

/// `(λ₀, λ₁)` for beam vectors and a warden channel `h`.
pub fn willie_powers_vec(h: &CVec, w_b: &CVec, w_c: &CVec, sigma_w2: f64) -> (f64, f64) {
    let l0 = h.dotc(w_c).norm_sqr() + sigma_w2;
    (l0, l0 + h.dotc(w_b).norm_sqr())
}

/// Evenly spaced angle offsets over `[−r, r]` including both ends and zero.
pub fn offset_grid(half_width: f64, points: usize) -> Vec<f64> {
    let k = points.max(3) | 1;
    (0..k).map(|i| half_width * (2.0 * i as f64 / (k - 1) as f64 - 1.0)).collect()
}

/// Worst covert ratio over warden angles `θ̂ + Δ`, and the largest power
/// scale of `w_B` that keeps every angle within `x₂`.
pub fn worst_case_ratio(cfg: &SystemConfig, w_b: &CVec, w_c: &CVec, x2: f64, half_width: f64) -> Result<(f64, f64)> {
    let mut worst: f64 = 1.0;
    let mut scale: f64 = f64::INFINITY;
    for d in offset_grid(half_width, 401) {
        let h = gen_channel_aw(cfg, cfg.theta_w_hat + d)?;
        let (l0, l1) = willie_powers_vec(&h, w_b, w_c, cfg.sigma_w2);
        worst = worst.max(l1 / l0);
        let leak = l1 - l0;
        if leak > 0.0 {
            scale = scale.min((x2 - 1.0) * l0 / leak);
        }
    }
    Ok((worst, scale))
}

/// Warden knowledge used when checking extracted beams.
#[derive(Clone, Debug)]
pub(crate) enum WardenCheck {
    Known,
    /// Angle interval of ±3√CRB around the estimate.
    ThreeSigma(SensingModel),
    Fixed(f64),
}

/// Extracted beams after the covertness repair.
#[derive(Clone, Debug)]
pub(crate) struct Extracted {
    pub w_b: CVec,
    pub w_c: CVec,
    pub covert_ratio: f64,
    pub worst_ratio: f64,
    pub scale: f64,
    pub crb: Option<f64>,
}

fn transmit_cov(w_b: &CVec, w_c: &CVec) -> CMat {
    outer(w_b) + outer(w_c)
}

/// Relative slack on the warden ratio of extracted vectors before `w_B` is rescaled.
pub(crate) const EXTRACT_SLACK: f64 = 1e-3;

/// Applies the extracted-level covertness check to `(w_B, w_C)`, scaling
/// `w_B` down to `x₂` when the warden ratio exceeds it by more than
/// [`EXTRACT_SLACK`].
pub(crate) fn repair_covertness(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    check: &WardenCheck,
    mut w_b: CVec,
    w_c: CVec,
    x2: f64,
) -> Result<Extracted> {
    let model = match check {
        WardenCheck::ThreeSigma(m) => Some(m.clone()),
        _ => SensingModel::from_config(cfg).ok(),
    };
    let half_width = |w_b: &CVec| match check {
        WardenCheck::Known => 0.0,
        WardenCheck::ThreeSigma(m) => crb(m, &transmit_cov(w_b, &w_c)).map_or(0.0, |c| 3.0 * c.sqrt()),
        WardenCheck::Fixed(r) => *r,
    };
    let nominal_h = match check {
        WardenCheck::Known => ch.h_aw.clone(),
        _ => gen_channel_aw(cfg, cfg.theta_w_hat)?,
    };
    let check_ratio = |w_b: &CVec| -> Result<(f64, f64)> {
        match check {
            WardenCheck::Known => {
                let (l0, l1) = willie_powers_vec(&nominal_h, w_b, &w_c, cfg.sigma_w2);
                let leak = l1 - l0;
                Ok((l1 / l0, if leak > 0.0 { (x2 - 1.0) * l0 / leak } else { f64::INFINITY }))
            }
            _ => worst_case_ratio(cfg, w_b, &w_c, x2, half_width(w_b)),
        }
    };
    // shrinking w_B widens the sensing interval, so repeat until it holds
    let mut scale = 1.0;
    let (mut worst_ratio, mut max_scale) = check_ratio(&w_b)?;
    let violated = worst_ratio > x2 * (1.0 + EXTRACT_SLACK);
    for _ in 0..50 {
        if !violated || worst_ratio <= x2 {
            break;
        }
        let s = max_scale.min(1.0).sqrt() * (1.0 - 1e-9);
        scale *= s;
        w_b *= C64::new(s, 0.0);
        (worst_ratio, max_scale) = check_ratio(&w_b)?;
    }
    let (l0, l1) = willie_powers_vec(&nominal_h, &w_b, &w_c, cfg.sigma_w2);
    let crb = match (check, &model) {
        (WardenCheck::Known, _) | (_, None) => None,
        (_, Some(m)) => crb(m, &transmit_cov(&w_b, &w_c)).ok(),
    };
    Ok(Extracted { w_b, w_c, covert_ratio: l1 / l0, worst_ratio, scale, crb })
}

/// SINRs of extracted NOMA beams.
pub(crate) fn noma_sinrs(cfg: &SystemConfig, ch: &ChannelSet, v: &CVec, w_b: &CVec, w_c: &CVec) -> (f64, f64) {
    (
        sinr_bob(ch, v, w_b, cfg.sigma_b2),
        sinr_carol(ch, v, w_b, w_c, cfg.sigma_b2, cfg.sigma_c2),
    )
}

/// `‖g_B‖ > ‖g_C‖` at the given RIS setting.
pub(crate) fn sic_order_ok(ch: &ChannelSet, v: &CVec) -> bool {
    ch.effective(User::Bob, v).norm() > ch.effective(User::Carol, v).norm()
}
