#![allow(dead_code)]

use covert_ris::channel::ChannelSet;
use covert_ris::linalg::quad_form;
use covert_ris::{CMat, CVec, SystemConfig};

pub fn desk() -> SystemConfig {
    SystemConfig::desk()
}

pub fn channels(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    ChannelSet::generate(cfg, seed).expect("channel generation")
}

/// `Re Tr(V G W G^H)/σ²` evaluated directly.
pub fn lifted_sinr(g: &CMat, v: &CMat, w: &CMat, sigma2: f64) -> f64 {
    (v * g * w * g.adjoint()).trace().re / sigma2
}

/// `(λ₀, λ₁)` of lifted beams at channel `h`.
pub fn willie_lifted(h: &CVec, w_b: &CMat, w_c: &CMat, sigma_w2: f64) -> (f64, f64) {
    let l0 = quad_form(h, w_c) + sigma_w2;
    (l0, l0 + quad_form(h, w_b))
}

/// Fraction of consecutive pairs in `xs` with `ok(prev, next)`.
pub fn all_pairs(xs: &[f64], ok: impl Fn(f64, f64) -> bool) -> bool {
    xs.windows(2).all(|w| ok(w[0], w[1]))
}
