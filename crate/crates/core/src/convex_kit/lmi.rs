//! The sensing (Schur complement) and robust covertness (S-procedure) LMIs.

use crate::error::Result;
use crate::linalg::{CMat, CVec, C64};
use crate::sensing::SensingModel;

use super::model::{CExpr, HermExpr, LinExpr};

/// `U(W) − diag(t, 0) ⪰ 0`; together with `t ≥ t₀` it caps the CRB.
pub fn schur_sensing_lmi(model: &SensingModel, w: &HermExpr, t: &LinExpr) -> Result<HermExpr> {
    let (dd, da, aa) = model.fisher_weights();
    let u11 = w.real_trace_with(&dd)? - t.clone();
    let u12 = w.trace_with(&da.adjoint())?;
    let u22 = w.real_trace_with(&aa)?;
    Ok(HermExpr::from_upper(2, |i, j| match (i, j) {
        (0, 0) => CExpr::real(u11.clone()),
        (0, 1) => u12.clone(),
        _ => CExpr::real(u22.clone()),
    }))
}

/// Constants of the robust covertness constraint.
#[derive(Clone, Debug)]
pub struct CovertLmiParams {
    /// Nominal transmit steering vector toward the warden.
    pub a_hat: CVec,
    pub x2: f64,
    /// `d_AW^α_W·σ_W²·(x₂ − 1)/β_W`
    pub c0: f64,
}

impl CovertLmiParams {
    pub fn new(a_hat: CVec, x2: f64, sigma_w2: f64, beta_w: f64, d_aw: f64, alpha_w: f64) -> Self {
        let c0 = d_aw.powf(alpha_w) * sigma_w2 * (x2 - 1.0) / beta_w;
        CovertLmiParams { a_hat, x2, c0 }
    }
}

/// How the steering-error radius enters the LMI.
#[derive(Clone, Debug)]
pub enum Uncertainty {
    /// Radius `K/(fisher_scale·t)` from the auxiliary CRB variable, multiplier fixed.
    Sensing { zeta: f64, t: LinExpr, k: f64, fisher_scale: f64 },
    /// Fixed radius `δ`, multiplier affine.
    Radius { zeta: LinExpr, delta: f64 },
}

/// Either the robust LMI or, for a zero-radius uncertainty set, the affine
/// perfect-CSI constraint `e ≥ 0`.
#[derive(Clone, Debug)]
pub enum CovertLmi {
    Lmi(HermExpr),
    Perfect(LinExpr),
}

/// `W̄ = (x₂−1)W_C − W_B`
fn w_bar(params: &CovertLmiParams, wb: &HermExpr, wc: Option<&HermExpr>) -> Result<HermExpr> {
    match wc {
        Some(wc) => wc.scale(params.x2 - 1.0).sub(wb),
        None => Ok(wb.scale(-1.0)),
    }
}

/// Robust covertness over the steering-error ball, as one Hermitian LMI of
/// size `n_tx + 1`. `wc = None` stands for a silent cover user.
pub fn sprocedure_covert_lmi(
    params: &CovertLmiParams,
    wb: &HermExpr,
    wc: Option<&HermExpr>,
    uncertainty: &Uncertainty,
) -> Result<CovertLmi> {
    let wbar = w_bar(params, wb, wc)?;
    let nominal = wbar.quad_form(&params.a_hat)? + params.c0;
    let (top_left, zeta) = match uncertainty {
        Uncertainty::Sensing { zeta, t, k, fisher_scale } => {
            if *k == 0.0 {
                return Ok(CovertLmi::Perfect(nominal));
            }
            (t.scaled(zeta * fisher_scale / k), LinExpr::constant(*zeta))
        }
        Uncertainty::Radius { zeta, delta } => {
            if *delta == 0.0 {
                return Ok(CovertLmi::Perfect(nominal));
            }
            (zeta.scaled(1.0 / delta), zeta.clone())
        }
    };
    let col = wbar.mul_vec(&params.a_hat)?;
    let corner = nominal - zeta;
    Ok(CovertLmi::Lmi(wbar.add_identity(&top_left).bordered(&col, &corner)?))
}

/// Numeric LMI matrix for fixed beams: `J + diag(s·I, −ζ)` with `s` the
/// top-left multiplier.
pub fn covert_lmi_numeric(params: &CovertLmiParams, w_b: &CMat, w_c: &CMat, top_left: f64, zeta: f64) -> CMat {
    let n = w_b.nrows();
    let wbar = w_c * C64::new(params.x2 - 1.0, 0.0) - w_b;
    let col = &wbar * &params.a_hat;
    let corner = (params.a_hat.adjoint() * &col)[(0, 0)].re + params.c0 - zeta;
    let mut j = CMat::zeros(n + 1, n + 1);
    j.view_mut((0, 0), (n, n)).copy_from(&wbar);
    for i in 0..n {
        j[(i, i)] += top_left;
        j[(i, n)] = col[i];
        j[(n, i)] = col[i].conj();
    }
    j[(n, n)] = C64::new(corner, 0.0);
    j
}
