//! System parameters and solver options.
//!
//! Everything is stored in SI units, radians and linear power; the text
//! loader in [`crate::experiments::config_io`] performs the dB and degree
//! conversions once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{db_to_linear, dbm_to_watts};

/// Options of the conic backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConicOptions {
    /// Feasibility and duality-gap tolerance handed to the interior-point solver.
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for ConicOptions {
    fn default() -> Self {
        ConicOptions {
            tol: 1e-8,
            max_iter: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub eta0: f64,
    pub omega: f64,
    /// Stop threshold on the rank-one gap of `V`.
    pub mu: f64,
    /// Relative objective change that ends an inner SCA loop or the AO loop.
    pub inner_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub max_ao: usize,
    pub zeta0: f64,
    pub conic: ConicOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eta0: 1e-4,
            omega: 10.0,
            mu: 1e-4,
            inner_tol: 1e-4,
            max_inner: 30,
            max_outer: 8,
            max_ao: 15,
            zeta0: 1.0,
            conic: ConicOptions { tol: 1e-10, ..ConicOptions::default() },
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eta0", self.eta0),
            ("mu", self.mu),
            ("inner_tol", self.inner_tol),
            ("conic_tol", self.conic.tol),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(range(key, "must be positive"));
            }
        }
        if !(self.omega.is_finite() && self.omega > 1.0) {
            return Err(range("omega", "must exceed 1"));
        }
        if !(self.zeta0.is_finite() && self.zeta0 >= 0.0) {
            return Err(range("zeta0", "must be non-negative"));
        }
        for (key, value) in [
            ("max_inner", self.max_inner),
            ("max_outer", self.max_outer),
            ("max_ao", self.max_ao),
        ] {
            if value == 0 {
                return Err(range(key, "must be at least 1"));
            }
        }
        Ok(())
    }
}

/// Problem-size profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    /// Full-scale array sizes (10 transmit, 12 receive antennas, 5×5 RIS).
    Full,
    /// 4 transmit, 6 receive antennas and a 2×2 RIS.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "desk" => Ok(Profile::Desk),
            other => Err(Error::invalid(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub wavelength: f64,
    pub element_spacing: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub ris_rows: usize,
    pub ris_cols: usize,
    /// Rician factor of the Alice-RIS link; `f64::INFINITY` drops the NLoS part.
    pub rician_factor: f64,

    pub beta_r: f64,
    pub beta_b: f64,
    pub beta_c: f64,
    pub beta_w: f64,
    pub alpha_r: f64,
    pub alpha_b: f64,
    pub alpha_c: f64,
    pub alpha_w: f64,

    pub d_ar: f64,
    pub d_rb: f64,
    pub d_rc: f64,
    pub d_aw: f64,

    pub theta_r: f64,
    pub theta_w_hat: f64,
    pub gamma_a: f64,
    pub phi_a: f64,
    pub gamma_b: f64,
    pub gamma_c: f64,
    pub phi_b: f64,
    pub phi_c: f64,

    pub sigma_b2: f64,
    pub sigma_c2: f64,
    pub sigma_a2: f64,
    pub sigma_w2: f64,

    pub power: f64,
    pub qos_rate: f64,
    pub epsilon: f64,
    pub channel_uses: usize,
    pub gamma_crb: f64,
    /// Worst-case angle error of the norm-bounded baseline.
    pub nb_max_angle: f64,
    pub rng_seed: u64,

    pub solver: SolveOptions,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl SystemConfig {
    /// Reference parameter set at full array size.
    pub fn full() -> Self {
        let noise = dbm_to_watts(-70.0);
        SystemConfig {
            wavelength: 0.06,
            element_spacing: 0.03,
            n_tx: 10,
            n_rx: 12,
            ris_rows: 5,
            ris_cols: 5,
            rician_factor: 10.0,
            beta_r: db_to_linear(-30.0),
            beta_b: db_to_linear(-30.0),
            beta_c: db_to_linear(-30.0),
            beta_w: db_to_linear(-20.0),
            alpha_r: 2.4,
            alpha_b: 2.4,
            alpha_c: 2.4,
            alpha_w: 2.0,
            d_ar: 50.0,
            d_rb: 5.0,
            d_rc: 8.0,
            d_aw: 5.0,
            theta_r: 3f64.to_radians(),
            theta_w_hat: 0.0,
            gamma_a: 0.0,
            phi_a: 0.0,
            gamma_b: 0.0,
            gamma_c: 0.0,
            phi_b: 60f64.to_radians(),
            phi_c: 150f64.to_radians(),
            sigma_b2: noise,
            sigma_c2: noise,
            sigma_a2: noise,
            sigma_w2: noise,
            power: dbm_to_watts(30.0),
            qos_rate: 1.0,
            epsilon: 0.1,
            channel_uses: 30,
            gamma_crb: 4e-6,
            nb_max_angle: 0.344f64.to_radians(),
            rng_seed: 0,
            solver: SolveOptions::default(),
        }
    }

    /// Reduced array sizes for fast runs, with Bob's and Carol's noise
    /// floors 20 dB lower. Warden and echo noise are unchanged.
    pub fn desk() -> Self {
        let mut cfg = Self::full();
        cfg.n_tx = 4;
        cfg.n_rx = 6;
        cfg.ris_rows = 2;
        cfg.ris_cols = 2;
        cfg.sigma_b2 = dbm_to_watts(-90.0);
        cfg.sigma_c2 = dbm_to_watts(-90.0);
        cfg
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Full => Self::full(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn ris_elements(&self) -> usize {
        self.ris_rows * self.ris_cols
    }

    /// Linear path gain `β / d^α` of the Alice-Willie link.
    pub fn willie_path_gain(&self) -> f64 {
        self.beta_w / self.d_aw.powf(self.alpha_w)
    }

    /// `ρ = 2^R₀ − 1`
    pub fn qos_sinr(&self) -> f64 {
        self.qos_rate.exp2() - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("element_spacing", self.element_spacing),
            ("beta_r", self.beta_r),
            ("beta_b", self.beta_b),
            ("beta_c", self.beta_c),
            ("beta_w", self.beta_w),
            ("d_ar", self.d_ar),
            ("d_rb", self.d_rb),
            ("d_rc", self.d_rc),
            ("d_aw", self.d_aw),
            ("sigma_b2", self.sigma_b2),
            ("sigma_c2", self.sigma_c2),
            ("sigma_a2", self.sigma_a2),
            ("sigma_w2", self.sigma_w2),
            ("power", self.power),
            ("gamma_crb", self.gamma_crb),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(range(key, format!("must be positive and finite, got {value}")));
            }
        }
        for (key, value) in [
            ("alpha_r", self.alpha_r),
            ("alpha_b", self.alpha_b),
            ("alpha_c", self.alpha_c),
            ("alpha_w", self.alpha_w),
        ] {
            if !value.is_finite() {
                return Err(range(key, "must be finite"));
            }
        }
        for (key, value) in [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("ris_rows", self.ris_rows),
            ("ris_cols", self.ris_cols),
            ("channel_uses", self.channel_uses),
        ] {
            if value == 0 {
                return Err(range(key, "must be at least 1"));
            }
        }
        if !(self.rician_factor >= 0.0) {
            return Err(range("rician_factor", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(range("epsilon", format!("must lie in [0, 1], got {}", self.epsilon)));
        }
        if !(self.qos_rate.is_finite() && self.qos_rate >= 0.0) {
            return Err(range("qos_rate", "must be non-negative"));
        }
        if !(self.nb_max_angle.is_finite() && self.nb_max_angle >= 0.0) {
            return Err(range("nb_max_angle", "must be non-negative"));
        }
        let angles = [
            ("theta_r", self.theta_r),
            ("theta_w_hat", self.theta_w_hat),
            ("gamma_a", self.gamma_a),
            ("phi_a", self.phi_a),
            ("gamma_b", self.gamma_b),
            ("gamma_c", self.gamma_c),
            ("phi_b", self.phi_b),
            ("phi_c", self.phi_c),
        ];
        for (key, value) in angles {
            if !value.is_finite() {
                return Err(range(key, "must be finite"));
            }
        }
        self.solver.validate()
    }
}

fn range(key: &str, msg: impl Into<String>) -> Error {
    Error::ConfigRange {
        key: key.to_string(),
        msg: msg.into(),
    }
}
