//! Echo model of the warden, the angle CRB and the CRB-bounded CSI error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::steering_ula;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::{check_psd, trace_prod, CMat, CVec, C64, J};

const UNIDENTIFIABLE_TOL: f64 = 1e-15;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SensingModel {
    pub theta_hat: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub spacing: f64,
    pub wavelength: f64,
    /// Echo coefficient `β_W / d_AW^α_W`.
    pub alpha_echo: f64,
    pub sigma_a2: f64,
    pub snapshots: usize,
    pub gamma_crb: f64,
    pub k: f64,
    pub a: CMat,
    pub a_dot: CMat,
}

/// Entries of the 2×2 Fisher block `U(W)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherTerms {
    /// `Tr(Ȧ^H Ȧ W)`
    pub dd: f64,
    /// `Tr(Ȧ^H A W)`
    pub da: C64,
    /// `Tr(A^H A W)`
    pub aa: f64,
}

impl FisherTerms {
    /// `Tr(Ȧ^HȦW) − |Tr(Ȧ^HAW)|²/Tr(A^HAW)`, the largest `t` that keeps
    /// `U(W) − diag(t, 0)` PSD.
    pub fn schur_value(&self) -> f64 {
        if self.aa <= 0.0 {
            return 0.0;
        }
        self.dd - self.da.norm_sqr() / self.aa
    }
}

impl SensingModel {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        Self::new(
            cfg.theta_w_hat,
            cfg.n_tx,
            cfg.n_rx,
            cfg.element_spacing,
            cfg.wavelength,
            cfg.willie_path_gain(),
            cfg.sigma_a2,
            cfg.channel_uses,
            cfg.gamma_crb,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta_hat: f64,
        n_tx: usize,
        n_rx: usize,
        spacing: f64,
        wavelength: f64,
        alpha_echo: f64,
        sigma_a2: f64,
        snapshots: usize,
        gamma_crb: f64,
    ) -> Result<Self> {
        if snapshots == 0 {
            return Err(Error::invalid("snapshots must be at least 1"));
        }
        if !(sigma_a2 > 0.0 && gamma_crb > 0.0 && alpha_echo != 0.0) {
            return Err(Error::invalid("sensing noise, CRB cap and echo gain must be positive"));
        }
        Ok(SensingModel {
            theta_hat,
            n_tx,
            n_rx,
            spacing,
            wavelength,
            alpha_echo,
            sigma_a2,
            snapshots,
            gamma_crb,
            k: k_constant(theta_hat, n_tx, spacing, wavelength),
            a: response_matrix(theta_hat, n_tx, n_rx, spacing, wavelength)?,
            a_dot: response_derivative(theta_hat, n_tx, n_rx, spacing, wavelength)?,
        })
    }

    /// Transmit steering vector at the nominal angle.
    pub fn a_hat(&self) -> CVec {
        steering_ula(self.theta_hat, self.n_tx, self.spacing, self.wavelength)
            .expect("geometry validated at construction")
    }

    /// `2|α|²L/σ_A²`
    pub fn fisher_scale(&self) -> f64 {
        2.0 * self.alpha_echo * self.alpha_echo * self.snapshots as f64 / self.sigma_a2
    }

    /// Lower bound `t₀` on the auxiliary variable that enforces the CRB cap.
    pub fn t0(&self) -> f64 {
        1.0 / (self.fisher_scale() * self.gamma_crb)
    }

    /// CRB implied by a value of the auxiliary variable.
    pub fn crb_of_t(&self, t: f64) -> f64 {
        1.0 / (self.fisher_scale() * t)
    }

    /// Weight matrices `Ȧ^HȦ`, `A^HȦ`, `A^HA` so that `Tr(M W)` gives the
    /// Fisher entries.
    pub fn fisher_weights(&self) -> (CMat, CMat, CMat) {
        let dd = self.a_dot.adjoint() * &self.a_dot;
        let da = self.a.adjoint() * &self.a_dot;
        let aa = self.a.adjoint() * &self.a;
        (dd, da, aa)
    }

    pub fn fisher_terms(&self, w: &CMat) -> Result<FisherTerms> {
        if w.shape() != (self.n_tx, self.n_tx) {
            return Err(Error::dims(format!("W has shape {:?}, expected {}×{}", w.shape(), self.n_tx, self.n_tx)));
        }
        let (dd, da, aa) = self.fisher_weights();
        // Tr(Ȧ^H A W) = Tr(A W Ȧ^H) = Tr((A^H Ȧ)^H W)
        Ok(FisherTerms {
            dd: trace_prod(&dd, w).re,
            da: trace_prod(&da.adjoint(), w),
            aa: trace_prod(&aa, w).re,
        })
    }
}

/// Rank-one echo response `b(θ) a(θ)^H`.
pub fn response_matrix(theta: f64, n_tx: usize, n_rx: usize, spacing: f64, wavelength: f64) -> Result<CMat> {
    let a = steering_ula(theta, n_tx, spacing, wavelength)?;
    let b = steering_ula(theta, n_rx, spacing, wavelength)?;
    Ok(&b * a.adjoint())
}

fn steering_derivative(theta: f64, n: usize, spacing: f64, wavelength: f64) -> Result<CVec> {
    let a = steering_ula(theta, n, spacing, wavelength)?;
    let rate = 2.0 * PI * spacing * theta.cos() / wavelength;
    Ok(CVec::from_fn(n, |k, _| J * (rate * k as f64) * a[k]))
}

/// `∂/∂θ [b(θ) a(θ)^H] = ḃ a^H + b ȧ^H`
pub fn response_derivative(theta: f64, n_tx: usize, n_rx: usize, spacing: f64, wavelength: f64) -> Result<CMat> {
    let a = steering_ula(theta, n_tx, spacing, wavelength)?;
    let b = steering_ula(theta, n_rx, spacing, wavelength)?;
    let a_dot = steering_derivative(theta, n_tx, spacing, wavelength)?;
    let b_dot = steering_derivative(theta, n_rx, spacing, wavelength)?;
    Ok(&b_dot * a.adjoint() + &b * a_dot.adjoint())
}

/// Cramér-Rao bound of the warden angle for transmit covariance `W`.
pub fn crb(model: &SensingModel, w: &CMat) -> Result<f64> {
    check_psd(w, 1e-9, "W")?;
    let f = model.fisher_terms(w)?;
    if !(f.aa > 0.0) {
        return Err(Error::Unidentifiable(f.aa));
    }
    let scale = f.dd * f.aa;
    let det = scale - f.da.norm_sqr();
    if !(det > UNIDENTIFIABLE_TOL * scale.abs()) || !(det > 0.0) {
        return Err(Error::Unidentifiable(det));
    }
    Ok(model.sigma_a2 * f.aa
        / (2.0 * model.alpha_echo * model.alpha_echo * model.snapshots as f64 * det))
}

/// `(6πd cosθ̂/λ)²·(N−1)N(2N−1)/6`
pub fn k_constant(theta_hat: f64, n_tx: usize, spacing: f64, wavelength: f64) -> f64 {
    let n = n_tx as f64;
    let c = 6.0 * PI * spacing * theta_hat.cos() / wavelength;
    c * c * (n - 1.0) * n * (2.0 * n - 1.0) / 6.0
}

/// `‖a(θ̂+Δθ) − a(θ̂)‖²` in closed form.
pub fn delta_a_exact(theta_hat: f64, dtheta: f64, n_tx: usize, spacing: f64, wavelength: f64) -> f64 {
    let shift = 2.0 * PI * spacing * ((theta_hat + dtheta).sin() - theta_hat.sin()) / wavelength;
    (0..n_tx).map(|k| 2.0 - 2.0 * (shift * k as f64).cos()).sum()
}

/// Small-angle form of [`delta_a_exact`].
pub fn delta_a_approx(theta_hat: f64, dtheta: f64, n_tx: usize, spacing: f64, wavelength: f64) -> f64 {
    let rate = 2.0 * PI * spacing * theta_hat.cos() * dtheta / wavelength;
    (0..n_tx).map(|k| (rate * k as f64).powi(2)).sum()
}

/// `K·CRB(W)`, the radius of the steering-error ball.
pub fn uncertainty_bound(model: &SensingModel, w: &CMat) -> Result<f64> {
    if model.k == 0.0 {
        return Ok(0.0);
    }
    Ok(model.k * crb(model, w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;
    use approx::assert_relative_eq;

    const LAM: f64 = 0.06;
    const D: f64 = 0.03;

    #[test]
    fn response_examples() {
        let a = response_matrix(0.0, 3, 4, D, LAM).unwrap();
        assert!(a.iter().all(|z| *z == C64::new(1.0, 0.0)));
        let a = response_matrix(0.7, 1, 1, D, LAM).unwrap();
        assert_eq!(a[(0, 0)], C64::new(1.0, 0.0));
        let a = response_matrix(0.4, 5, 3, D, LAM).unwrap();
        assert_relative_eq!(a.norm_squared(), 15.0, max_relative = 1e-12);
        assert!(a.singular_values()[1] < 1e-12);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(response_derivative(0.3, 1, 1, D, LAM).unwrap().norm(), 0.0);
        assert!(response_derivative(PI / 2.0, 4, 6, D, LAM).unwrap().norm() < 1e-12);
        for deg in [-80.0, -30.0, 0.0, 17.0, 80.0] {
            let th = f64::to_radians(deg);
            let h = 1e-6;
            let fd = (response_matrix(th + h, 4, 6, D, LAM).unwrap() - response_matrix(th - h, 4, 6, D, LAM).unwrap())
                / C64::new(2.0 * h, 0.0);
            let an = response_derivative(th, 4, 6, D, LAM).unwrap();
            assert!((fd - &an).norm() <= 1e-6 * an.norm(), "{deg}");
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(k_constant(0.3, 1, D, LAM), 0.0);
        assert!(k_constant(PI / 2.0, 4, D, LAM).abs() < 1e-25);
        assert_relative_eq!(k_constant(0.0, 2, D, LAM), 9.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn delta_a_examples() {
        let th = 0.2;
        assert_eq!(delta_a_exact(th, 0.0, 10, D, LAM), 0.0);
        assert_eq!(delta_a_approx(th, 0.0, 10, D, LAM), 0.0);
        let dth = 0.01;
        let direct = (steering_ula(th + dth, 10, D, LAM).unwrap() - steering_ula(th, 10, D, LAM).unwrap()).norm_squared();
        assert!((delta_a_exact(th, dth, 10, D, LAM) - direct).abs() < 1e-12);
        assert_relative_eq!(delta_a_exact(0.0, 0.02, 10, D, LAM), delta_a_exact(0.0, -0.02, 10, D, LAM), max_relative = 1e-12);
        assert_relative_eq!(
            delta_a_approx(th, 2.0 * dth, 10, D, LAM),
            4.0 * delta_a_approx(th, dth, 10, D, LAM),
            max_relative = 1e-12
        );
    }

    #[test]
    fn three_sigma_matches_k_crb() {
        let cfg = SystemConfig::full();
        let model = SensingModel::from_config(&cfg).unwrap();
        let w = CMat::identity(cfg.n_tx, cfg.n_tx) * C64::new(0.1, 0.0);
        let c = crb(&model, &w).unwrap();
        let approx = delta_a_approx(model.theta_hat, 3.0 * c.sqrt(), cfg.n_tx, D, LAM);
        assert_relative_eq!(approx, uncertainty_bound(&model, &w).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn crb_scalings_and_errors() {
        let cfg = SystemConfig::desk();
        let model = SensingModel::from_config(&cfg).unwrap();
        let w = CMat::identity(4, 4) * C64::new(0.25, 0.0);
        let base = crb(&model, &w).unwrap();
        assert!(base > 0.0 && base.is_finite());

        let mut m2 = model.clone();
        m2.snapshots *= 2;
        assert_relative_eq!(crb(&m2, &w).unwrap(), base / 2.0, max_relative = 1e-12);
        let mut m3 = model.clone();
        m3.sigma_a2 *= 2.0;
        assert_relative_eq!(crb(&m3, &w).unwrap(), base * 2.0, max_relative = 1e-12);

        let single = SensingModel::new(0.1, 1, 1, D, LAM, 4e-4, 1e-10, 30, 4e-6).unwrap();
        let one = CMat::identity(1, 1);
        assert!(matches!(crb(&single, &one), Err(Error::Unidentifiable(_))));
        assert!(crb(&model, &outer(&model.a_hat())).is_ok());
        assert!(matches!(crb(&model, &CMat::zeros(4, 4)), Err(Error::Unidentifiable(_))));
    }

    #[test]
    fn schur_value_matches_crb() {
        let cfg = SystemConfig::desk();
        let model = SensingModel::from_config(&cfg).unwrap();
        let w = CMat::identity(4, 4) * C64::new(0.25, 0.0);
        let f = model.fisher_terms(&w).unwrap();
        assert_relative_eq!(model.crb_of_t(f.schur_value()), crb(&model, &w).unwrap(), max_relative = 1e-10);
    }
}
