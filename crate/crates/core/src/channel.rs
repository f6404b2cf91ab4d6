//! Steering vectors, channel synthesis and NOMA SINRs.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum User {
    Bob,
    Carol,
}

fn check_geometry(n: usize, spacing: f64, wavelength: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("array needs at least one element"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::invalid(format!("element spacing must be positive, got {spacing}")));
    }
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
    }
    Ok(())
}

/// Uniform linear array response; element `k` is `exp(j·2π·d·k·sinθ/λ)`.
pub fn steering_ula(theta: f64, n: usize, spacing: f64, wavelength: f64) -> Result<CVec> {
    check_geometry(n, spacing, wavelength)?;
    Ok(ula_unchecked(theta.sin(), n, spacing, wavelength))
}

fn ula_unchecked(direction: f64, n: usize, spacing: f64, wavelength: f64) -> CVec {
    let step = 2.0 * PI * spacing * direction / wavelength;
    CVec::from_fn(n, |k, _| if k == 0 { C64::new(1.0, 0.0) } else { cis(step * k as f64) })
}

/// Uniform planar array response `a_h(γ,φ) ⊗ a_v(γ,φ)`.
pub fn steering_upa(
    gamma: f64,
    phi: f64,
    m1: usize,
    m2: usize,
    spacing: f64,
    wavelength: f64,
) -> Result<CVec> {
    check_geometry(m1, spacing, wavelength)?;
    check_geometry(m2, spacing, wavelength)?;
    let a_h = ula_unchecked(gamma.sin() * phi.cos(), m1, spacing, wavelength);
    let a_v = ula_unchecked(gamma.sin() * phi.sin(), m2, spacing, wavelength);
    Ok(a_h.kronecker(&a_v))
}

/// Rician Alice-RIS channel (M × n_tx) with NLoS entries drawn from `seed`.
pub fn gen_channel_ar(cfg: &SystemConfig, seed: u64) -> Result<CMat> {
    cfg.validate()?;
    let m = cfg.ris_elements();
    let a_r = steering_upa(
        cfg.gamma_a,
        cfg.phi_a,
        cfg.ris_rows,
        cfg.ris_cols,
        cfg.element_spacing,
        cfg.wavelength,
    )?;
    let a_a = steering_ula(cfg.theta_r, cfg.n_tx, cfg.element_spacing, cfg.wavelength)?;
    let los = &a_r * a_a.adjoint();

    let (w_los, w_nlos) = if cfg.rician_factor.is_infinite() {
        (1.0, 0.0)
    } else {
        let l = cfg.rician_factor;
        ((l / (l + 1.0)).sqrt(), (1.0 / (l + 1.0)).sqrt())
    };
    let nlos = complex_gaussian_matrix(m, cfg.n_tx, seed);
    let gain = (cfg.beta_r / cfg.d_ar.powf(cfg.alpha_r)).sqrt();
    Ok((los * C64::new(w_los, 0.0) + nlos * C64::new(w_nlos, 0.0)) * C64::new(gain, 0.0))
}

/// `rows × cols` i.i.d. CN(0, 1) entries filled row by row.
pub fn complex_gaussian_matrix(rows: usize, cols: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            out[(i, j)] = C64::new(re * scale, im * scale);
        }
    }
    out
}

/// LoS RIS-user channel.
pub fn gen_channel_ru(cfg: &SystemConfig, user: User) -> Result<CVec> {
    let (beta, d, alpha, gamma, phi) = match user {
        User::Bob => (cfg.beta_b, cfg.d_rb, cfg.alpha_b, cfg.gamma_b, cfg.phi_b),
        User::Carol => (cfg.beta_c, cfg.d_rc, cfg.alpha_c, cfg.gamma_c, cfg.phi_c),
    };
    let a = steering_upa(gamma, phi, cfg.ris_rows, cfg.ris_cols, cfg.element_spacing, cfg.wavelength)?;
    Ok(a * C64::new((beta / d.powf(alpha)).sqrt(), 0.0))
}

/// LoS Alice-Willie channel toward `theta_w`.
pub fn gen_channel_aw(cfg: &SystemConfig, theta_w: f64) -> Result<CVec> {
    let a = steering_ula(theta_w, cfg.n_tx, cfg.element_spacing, cfg.wavelength)?;
    Ok(a * C64::new(cfg.willie_path_gain().sqrt(), 0.0))
}

/// `diag(h^H) · H`
pub fn cascade(h_ru: &CVec, h_ar: &CMat) -> Result<CMat> {
    if h_ru.len() != h_ar.nrows() {
        return Err(Error::invalid(format!(
            "RIS-user channel has {} entries but the Alice-RIS channel has {} rows",
            h_ru.len(),
            h_ar.nrows()
        )));
    }
    let mut g = h_ar.clone();
    for (m, mut row) in g.row_iter_mut().enumerate() {
        row *= h_ru[m].conj();
    }
    Ok(g)
}

/// One realization of every channel used by a scenario point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSet {
    pub h_ar: CMat,
    pub h_rb: CVec,
    pub h_rc: CVec,
    /// Alice-Willie channel at the nominal warden angle.
    pub h_aw: CVec,
    pub g_b: CMat,
    pub g_c: CMat,
    pub seed: u64,
}

impl ChannelSet {
    pub fn generate(cfg: &SystemConfig, seed: u64) -> Result<Self> {
        let h_ar = gen_channel_ar(cfg, seed)?;
        let h_rb = gen_channel_ru(cfg, User::Bob)?;
        let h_rc = gen_channel_ru(cfg, User::Carol)?;
        let h_aw = gen_channel_aw(cfg, cfg.theta_w_hat)?;
        Self::from_parts(h_ar, h_rb, h_rc, h_aw, seed)
    }

    pub fn from_parts(h_ar: CMat, h_rb: CVec, h_rc: CVec, h_aw: CVec, seed: u64) -> Result<Self> {
        if h_aw.len() != h_ar.ncols() {
            return Err(Error::invalid("Alice-Willie channel length differs from n_tx"));
        }
        let g_b = cascade(&h_rb, &h_ar)?;
        let g_c = cascade(&h_rc, &h_ar)?;
        Ok(ChannelSet { h_ar, h_rb, h_rc, h_aw, g_b, g_c, seed })
    }

    pub fn n_tx(&self) -> usize {
        self.h_ar.ncols()
    }

    pub fn n_ris(&self) -> usize {
        self.h_ar.nrows()
    }

    /// Effective transmit-side channel `v^H G` of one user.
    pub fn effective(&self, user: User, v: &CVec) -> CVec {
        let g = match user {
            User::Bob => &self.g_b,
            User::Carol => &self.g_c,
        };
        (v.adjoint() * g).adjoint()
    }
}

pub fn effective_cascades(ch: &ChannelSet) -> Result<(CMat, CMat)> {
    Ok((cascade(&ch.h_rb, &ch.h_ar)?, cascade(&ch.h_rc, &ch.h_ar)?))
}

fn gain(g: &CVec, w: &CVec) -> f64 {
    g.dotc(w).norm_sqr()
}

pub fn sinr_bob(ch: &ChannelSet, v: &CVec, w_b: &CVec, sigma_b2: f64) -> f64 {
    gain(&ch.effective(User::Bob, v), w_b) / sigma_b2
}

/// Carol's SINR, the worse of her own decoding and Bob's SIC stage.
pub fn sinr_carol(
    ch: &ChannelSet,
    v: &CVec,
    w_b: &CVec,
    w_c: &CVec,
    sigma_b2: f64,
    sigma_c2: f64,
) -> f64 {
    let g_b = ch.effective(User::Bob, v);
    let g_c = ch.effective(User::Carol, v);
    let at_bob = gain(&g_b, w_c) / (gain(&g_b, w_b) + sigma_b2);
    let at_carol = gain(&g_c, w_c) / (gain(&g_c, w_b) + sigma_c2);
    at_bob.min(at_carol)
}
