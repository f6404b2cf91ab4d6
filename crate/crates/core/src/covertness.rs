//! Detection at the warden: hypothesis powers, KL divergence, the covertness
//! threshold `x₂(ε)` and the exact error probability of the optimal test.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::linalg::{check_psd, same_square, trace_prod, CMat};

const PSD_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;

/// Detection-side constants of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovertnessSpec {
    pub epsilon: f64,
    pub channel_uses: usize,
    pub x2: f64,
    pub x1: f64,
}

impl CovertnessSpec {
    pub fn new(epsilon: f64, channel_uses: usize) -> Result<Self> {
        Ok(CovertnessSpec {
            epsilon,
            channel_uses,
            x2: solve_x2(epsilon, channel_uses)?,
            x1: solve_x1(epsilon, channel_uses)?,
        })
    }
}

/// Mean received power at the warden without (`λ₀`) and with (`λ₁`) the
/// covert transmission.
pub fn willie_powers(h_outer: &CMat, w_b: &CMat, w_c: &CMat, sigma_w2: f64) -> Result<(f64, f64)> {
    same_square(h_outer, w_b, "willie_powers W_B")?;
    same_square(h_outer, w_c, "willie_powers W_C")?;
    check_psd(w_b, PSD_TOL, "W_B")?;
    check_psd(w_c, PSD_TOL, "W_C")?;
    let scale = h_outer.norm() * (w_b.norm() + w_c.norm());
    let leak_b = trace_prod(h_outer, w_b).re;
    let leak_c = trace_prod(h_outer, w_c).re;
    if leak_b < -PSD_TOL * scale || leak_c < -PSD_TOL * scale {
        return Err(Error::NumericalDomain(format!(
            "negative received power at the warden ({leak_b:e}, {leak_c:e})"
        )));
    }
    let lambda0 = leak_c.max(0.0) + sigma_w2;
    Ok((lambda0, lambda0 + leak_b.max(0.0)))
}

fn check_powers(lambda0: f64, lambda1: f64) -> Result<()> {
    if !(lambda0 > 0.0 && lambda1 > 0.0) || !lambda0.is_finite() || !lambda1.is_finite() {
        return Err(Error::invalid(format!(
            "hypothesis powers must be positive, got ({lambda0}, {lambda1})"
        )));
    }
    Ok(())
}

/// `D(P₀‖P₁) = ln(λ₁/λ₀) + λ₀/λ₁ − 1` per channel use.
pub fn kl_divergence(lambda0: f64, lambda1: f64) -> Result<f64> {
    check_powers(lambda0, lambda1)?;
    let r = lambda0 / lambda1;
    // −ln r + r − 1, written to keep precision for r near 1
    Ok((r - 1.0) - (r - 1.0).ln_1p())
}

/// `ln(1+δ) + 1/(1+δ) − 1` evaluated without cancellation near δ = 0.
fn root_residual(delta: f64) -> f64 {
    delta.ln_1p() - delta / (1.0 + delta)
}

fn check_domain(epsilon: f64, channel_uses: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    if channel_uses == 0 {
        return Err(Error::invalid("channel_uses must be at least 1"));
    }
    Ok(2.0 * epsilon * epsilon / channel_uses as f64)
}

/// Largest admissible `λ₁/λ₀`: the root above 1 of `ln x + 1/x = 1 + 2ε²/L`.
pub fn solve_x2(epsilon: f64, channel_uses: usize) -> Result<f64> {
    let target = check_domain(epsilon, channel_uses)?;
    if target == 0.0 {
        return Ok(1.0);
    }
    // bracket in δ = x − 1
    let mut hi = 1.0;
    while root_residual(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_residual(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 + 0.5 * (lo + hi))
}

/// The root in `(0, 1]` of the same equation.
pub fn solve_x1(epsilon: f64, channel_uses: usize) -> Result<f64> {
    let target = check_domain(epsilon, channel_uses)?;
    if target == 0.0 {
        return Ok(1.0);
    }
    // δ ∈ (−1, 0), residual decreases toward δ = 0
    let mut lo = -0.5;
    while root_residual(lo) < target {
        lo = -1.0 + 0.5 * (1.0 + lo);
    }
    let mut hi = 0.0;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_residual(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(1.0 + 0.5 * (lo + hi))
}

/// Outcome of the optimal energy test over `L` channel uses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionError {
    /// `P_FA + P_MD`
    pub dep: f64,
    /// Threshold on the received energy `Σ|y_l|²`.
    pub threshold: f64,
    pub p_fa: f64,
    pub p_md: f64,
}

/// Exact minimum detection error probability.
///
/// The likelihood-ratio test between `CN(0, λ₀)` and `CN(0, λ₁)` samples
/// compares the total energy against `τ* = L·ln(λ₁/λ₀)/(1/λ₀ − 1/λ₁)`; the
/// energy is Gamma(L, λ) distributed under each hypothesis.
pub fn dep_exact(lambda0: f64, lambda1: f64, channel_uses: usize) -> Result<DetectionError> {
    check_powers(lambda0, lambda1)?;
    if channel_uses == 0 {
        return Err(Error::invalid("channel_uses must be at least 1"));
    }
    if lambda1 < lambda0 {
        return Err(Error::invalid("the covert hypothesis cannot lower the warden power"));
    }
    if lambda1 == lambda0 {
        return Ok(DetectionError {
            dep: 1.0,
            threshold: f64::INFINITY,
            p_fa: 0.0,
            p_md: 1.0,
        });
    }
    let l = channel_uses as f64;
    let ratio = lambda1 / lambda0;
    // (1/λ₀ − 1/λ₁) = (r − 1)/λ₁
    let threshold = l * ratio.ln() * lambda1 / (ratio - 1.0);
    let p_fa = gamma_ur(l, threshold / lambda0);
    let p_md = gamma_lr(l, threshold / lambda1);
    Ok(DetectionError {
        dep: (p_fa + p_md).min(1.0),
        threshold,
        p_fa,
        p_md,
    })
}

/// Pinsker lower bound `1 − √(L·D/2)`, clipped at zero.
pub fn pinsker_bound(lambda0: f64, lambda1: f64, channel_uses: usize) -> Result<f64> {
    let d = kl_divergence(lambda0, lambda1)?;
    Ok((1.0 - (channel_uses as f64 * d / 2.0).sqrt()).max(0.0))
}

pub fn covert_ratio(lambda0: f64, lambda1: f64) -> f64 {
    lambda1 / lambda0
}
