//! Time-division baseline: Carol and Bob each get their own slot with
//! independently optimized RIS phases.

use crate::channel::{ChannelSet, User};
use crate::config::{SolveOptions, SystemConfig};
use crate::convex_kit::dc::rank_one_gap;
use crate::covertness::solve_x2;
use crate::error::{Error, Result};
use crate::linalg::{outer, CMat, CVec, C64};
use crate::sensing::{crb, SensingModel};

use super::extract::{eigen_ratio, extract_rank_one, repair_covertness, WardenCheck};
use super::problem::{Covert, Radius, Role, SolveStats};
use super::{finish, norm_bounded_delta, problem, robust_params, CsiModel, Diagnostics, LiftedSolution, OmaDetails, RankResiduals};

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// `τ_B = 1 − R₀/log2(1+SINR_C)` clamped to `[0, 1]`; infeasible when
/// Carol's slot cannot carry `R₀` even with the whole frame.
pub fn bob_time_share(carol_slot_rate: f64, qos_rate: f64) -> Result<f64> {
    if qos_rate <= 0.0 {
        return Ok(1.0);
    }
    if carol_slot_rate < qos_rate {
        return Err(Error::Infeasible(format!(
            "Carol's slot carries {carol_slot_rate:.4} bit/s/Hz, below the QoS target {qos_rate}"
        )));
    }
    Ok((1.0 - qos_rate / carol_slot_rate).clamp(0.0, 1.0))
}

/// Rank-one `w = Wg/√(g^H W g)`: keeps the gain `g^H W g` while `ww^H ⪯ W`,
/// so every constraint that only limits `W` stays satisfied. Falls back to
/// the principal eigenvector when `W` has no energy along `g`.
pub fn aligned_beam(w: &CMat, g: &CVec) -> CVec {
    let gain = crate::linalg::quad_form(g, w);
    if gain > 1e-300 {
        (w * g) / C64::new(gain.sqrt(), 0.0)
    } else {
        extract_rank_one(w, false)
    }
}

/// Orthogonal-access baseline for the given warden CSI model.
pub fn solve_oma(cfg: &SystemConfig, ch: &ChannelSet, csi: CsiModel, opts: &SolveOptions) -> Result<LiftedSolution> {
    let sensing = match csi {
        CsiModel::SensingSbic => Some(SensingModel::from_config(cfg)?),
        _ => None,
    };
    let mut stats = SolveStats::default();
    let mut trajectory = Vec::new();

    // Carol's slot carries the sensing duty in the sensing-based scheme
    let carol = problem(cfg, ch, opts, Role::CarolSlot, Covert::None, sensing.clone())?;
    let start = carol.initial_point()?;
    let (pc, conv_c) = carol.penalty_loops(start, opts, None, 0, &mut trajectory, &mut stats)?;
    let v_carol = extract_rank_one(&pc.v, true);
    let w_c = extract_rank_one(&pc.w_c, false);
    let sinr_c_slot = ch.effective(User::Carol, &v_carol).dotc(&w_c).norm_sqr() / cfg.sigma_c2;
    let tau_b = bob_time_share(log2_1p(sinr_c_slot), cfg.qos_rate)?;

    let x2 = solve_x2(cfg.epsilon, cfg.channel_uses)?;
    let (covert, check) = match csi {
        CsiModel::KnownPc => (Covert::Perfect { h: ch.h_aw.clone(), sigma_w2: cfg.sigma_w2 }, WardenCheck::Known),
        CsiModel::SensingSbic => {
            let model = sensing.as_ref().unwrap();
            let c = crb(model, &outer(&w_c))?;
            let radius = Radius::Fixed { delta: model.k * c, joint: true };
            (Covert::Robust { params: robust_params(cfg, x2)?, radius }, WardenCheck::Fixed(3.0 * c.sqrt()))
        }
        CsiModel::NormNbic => {
            let radius = Radius::Fixed { delta: norm_bounded_delta(cfg), joint: true };
            (Covert::Robust { params: robust_params(cfg, x2)?, radius }, WardenCheck::Fixed(cfg.nb_max_angle))
        }
    };
    let bob = problem(cfg, ch, opts, Role::BobSlot, covert, None)?;
    let start = bob.initial_point()?;
    let start_obj = bob.objective(&start);
    let (pb, conv_b) = bob.penalty_loops(start, opts, None, 1, &mut trajectory, &mut stats)?;
    let v_vec = extract_rank_one(&pb.v, true);
    let silent = CVec::zeros(cfg.n_tx);
    let ext = repair_covertness(cfg, ch, &check, aligned_beam(&pb.w_b, &ch.effective(User::Bob, &v_vec)), silent, x2)?;
    let sinr_b_slot = ch.effective(User::Bob, &v_vec).dotc(&ext.w_b).norm_sqr() / cfg.sigma_b2;

    let carol_rate = (1.0 - tau_b) * log2_1p(sinr_c_slot);
    let achieved_crb = match &sensing {
        Some(model) => crb(model, &outer(&w_c)).ok(),
        None => None,
    };
    let gap = rank_one_gap(&pc.v).max(rank_one_gap(&pb.v));
    let sol = LiftedSolution {
        rank: RankResiduals { v_gap: gap, w_b_ratio: eigen_ratio(&pb.w_b), w_c_ratio: eigen_ratio(&pc.w_c) },
        diagnostics: Diagnostics {
            qos_slack: (cfg.qos_rate > 0.0).then_some(carol_rate - cfg.qos_rate),
            power_slack: cfg.power - ext.w_b.norm_squared().max(w_c.norm_squared()),
            sic_order_ok: true,
            covert_scale: ext.scale,
            stats,
            stall: None,
        },
        w_b: pb.w_b.clone(),
        w_c: pc.w_c.clone(),
        v: pb.v.clone(),
        sinr_b: sinr_b_slot,
        sinr_c: sinr_c_slot,
        covert_rate: tau_b * log2_1p(sinr_b_slot),
        carol_rate,
        covert_ratio: ext.covert_ratio,
        worst_covert_ratio: ext.worst_ratio,
        x2,
        achieved_crb,
        t: pc.t,
        zeta: pb.zeta,
        ao_objective: vec![start_obj, bob.objective(&pb)],
        trajectory,
        oma: Some(OmaDetails { tau_b, v_carol, sinr_b_slot, sinr_c_slot }),
        converged: conv_b && conv_c,
        wb_vec: ext.w_b,
        wc_vec: w_c,
        v_vec,
    };
    finish(sol)
}
