//! Known-location and unknown-location covert designs, rank-one
//! extraction and the OMA / norm-bounded baselines.
//!
//! Every scheme works on lifted matrices `V = vv^H`, `W_X = w_X w_X^H` with
//! cascades pre-divided by the receiver noise amplitude so the lifted gains
//! are SINRs. A scheme runs inner SCA loops under a growing rank-one penalty
//! and, when the warden angle is uncertain, alternates those loops with the
//! S-procedure multiplier update.

mod extract;
mod init;
mod oma;
mod problem;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::config::{SolveOptions, SystemConfig};
use crate::convex_kit::dc::{rank_one_gap, ExpansionPoint};
use crate::convex_kit::lmi::CovertLmiParams;
use crate::covertness::solve_x2;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use crate::sensing::{k_constant, SensingModel};

pub use extract::{eigen_ratio, extract_rank_one, offset_grid, willie_powers_vec, worst_case_ratio};
pub use oma::{aligned_beam, bob_time_share, solve_oma};
pub use problem::{IterRecord, SolveStats};

use extract::{noma_sinrs, repair_covertness, sic_order_ok, WardenCheck};
use problem::{lmi_holds, min_feasible_zeta, Covert, Point, Problem, Radius, Role, ASCENT_SLACK};

/// Warden CSI model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiModel {
    /// Warden channel known exactly.
    KnownPc,
    /// Angle error bounded through the achieved CRB.
    SensingSbic,
    /// Angle error bounded by a fixed constant.
    NormNbic,
}

impl CsiModel {
    pub const ALL: [CsiModel; 3] = [CsiModel::KnownPc, CsiModel::SensingSbic, CsiModel::NormNbic];

    pub fn as_str(&self) -> &'static str {
        match self {
            CsiModel::KnownPc => "known-pc",
            CsiModel::SensingSbic => "sensing-sbic",
            CsiModel::NormNbic => "norm-nbic",
        }
    }
}

impl fmt::Display for CsiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsiModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CsiModel::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scheme `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Noma,
    Oma,
}

impl Access {
    pub fn as_str(&self) -> &'static str {
        match self {
            Access::Noma => "noma",
            Access::Oma => "oma",
        }
    }
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Access {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noma" => Ok(Access::Noma),
            "oma" => Ok(Access::Oma),
            other => Err(Error::invalid(format!("unknown access `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankResiduals {
    /// `‖V‖_* − ‖V‖₂`
    pub v_gap: f64,
    /// `λ₂/λ₁` of `W_B`.
    pub w_b_ratio: f64,
    pub w_c_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `log2(1+SINR_C) − R₀` at the extracted beams, absent without QoS.
    pub qos_slack: Option<f64>,
    /// `P − ‖w_B‖² − ‖w_C‖²`
    pub power_slack: f64,
    /// Bob's effective channel is the stronger one.
    pub sic_order_ok: bool,
    /// Amplitude factor applied to `w_B` by the extracted-level covert repair.
    pub covert_scale: f64,
    pub stats: SolveStats,
    /// Why the alternating loop stopped early, if it did.
    pub stall: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmaDetails {
    /// Bob's time share.
    pub tau_b: f64,
    /// RIS phases used in Carol's slot.
    pub v_carol: CVec,
    pub sinr_b_slot: f64,
    pub sinr_c_slot: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftedSolution {
    pub w_b: CMat,
    pub w_c: CMat,
    pub v: CMat,
    pub wb_vec: CVec,
    pub wc_vec: CVec,
    /// Unit-modulus RIS phases.
    pub v_vec: CVec,
    pub sinr_b: f64,
    pub sinr_c: f64,
    /// bits/s/Hz
    pub covert_rate: f64,
    pub carol_rate: f64,
    /// `λ₁/λ₀` at the nominal warden channel.
    pub covert_ratio: f64,
    /// Largest `λ₁/λ₀` over the warden's angle uncertainty interval.
    pub worst_covert_ratio: f64,
    pub x2: f64,
    pub achieved_crb: Option<f64>,
    pub t: Option<f64>,
    pub zeta: Option<f64>,
    pub trajectory: Vec<IterRecord>,
    /// Objective after each accepted alternating round, starting with the initial point.
    pub ao_objective: Vec<f64>,
    pub rank: RankResiduals,
    pub diagnostics: Diagnostics,
    pub oma: Option<OmaDetails>,
    pub converged: bool,
}

impl LiftedSolution {
    /// Number of logged SCA iterates.
    pub fn iterations(&self) -> usize {
        self.trajectory.len()
    }
}

/// Outcome of a single convex surrogate solve.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub point: ExpansionPoint,
    pub t: Option<f64>,
    pub zeta: Option<f64>,
    /// Lifted objective (an SINR).
    pub objective: f64,
    pub penalized: f64,
    pub gap: f64,
}

fn check_dims(cfg: &SystemConfig, ch: &ChannelSet) -> Result<()> {
    if ch.n_tx() != cfg.n_tx || ch.n_ris() != cfg.ris_elements() {
        return Err(Error::dims(format!(
            "channel set is {}×{} but config expects {} RIS elements and {} antennas",
            ch.n_ris(),
            ch.n_tx(),
            cfg.ris_elements(),
            cfg.n_tx
        )));
    }
    Ok(())
}

pub(crate) fn robust_params(cfg: &SystemConfig, x2: f64) -> Result<CovertLmiParams> {
    let a_hat = crate::channel::steering_ula(cfg.theta_w_hat, cfg.n_tx, cfg.element_spacing, cfg.wavelength)?;
    Ok(CovertLmiParams::new(a_hat, x2, cfg.sigma_w2, cfg.beta_w, cfg.d_aw, cfg.alpha_w))
}

/// `δ = K·(Δθ_max/3)²`
pub fn norm_bounded_delta(cfg: &SystemConfig) -> f64 {
    let k = k_constant(cfg.theta_w_hat, cfg.n_tx, cfg.element_spacing, cfg.wavelength);
    k * (cfg.nb_max_angle / 3.0).powi(2)
}

pub(crate) fn problem(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    opts: &SolveOptions,
    role: Role,
    covert: Covert,
    sensing: Option<SensingModel>,
) -> Result<Problem> {
    cfg.validate()?;
    opts.validate()?;
    check_dims(cfg, ch)?;
    Ok(Problem {
        n_tx: cfg.n_tx,
        n_ris: cfg.ris_elements(),
        gb: &ch.g_b / C64::new(cfg.sigma_b2.sqrt(), 0.0),
        gc: &ch.g_c / C64::new(cfg.sigma_c2.sqrt(), 0.0),
        rho: cfg.qos_sinr(),
        power: cfg.power,
        x2: solve_x2(cfg.epsilon, cfg.channel_uses)?,
        role,
        covert,
        sensing,
        conic: opts.conic.clone(),
    })
}

fn known_problem(cfg: &SystemConfig, ch: &ChannelSet, opts: &SolveOptions) -> Result<Problem> {
    let covert = Covert::Perfect { h: ch.h_aw.clone(), sigma_w2: cfg.sigma_w2 };
    problem(cfg, ch, opts, Role::Noma, covert, None)
}

fn sbic_problem(cfg: &SystemConfig, ch: &ChannelSet, model: &SensingModel, opts: &SolveOptions) -> Result<Problem> {
    let x2 = solve_x2(cfg.epsilon, cfg.channel_uses)?;
    let covert = Covert::Robust {
        params: robust_params(cfg, x2)?,
        radius: Radius::Sensing { k: model.k, fisher_scale: model.fisher_scale() },
    };
    problem(cfg, ch, opts, Role::Noma, covert, Some(model.clone()))
}

fn nbic_problem(cfg: &SystemConfig, ch: &ChannelSet, opts: &SolveOptions) -> Result<Problem> {
    let x2 = solve_x2(cfg.epsilon, cfg.channel_uses)?;
    let covert = Covert::Robust {
        params: robust_params(cfg, x2)?,
        radius: Radius::Fixed { delta: norm_bounded_delta(cfg), joint: false },
    };
    problem(cfg, ch, opts, Role::Noma, covert, None)
}

fn to_expansion(p: &Point) -> ExpansionPoint {
    ExpansionPoint { v: p.v.clone(), w_b: p.w_b.clone(), w_c: p.w_c.clone() }
}

fn from_expansion(e: &ExpansionPoint, t: Option<f64>, zeta: Option<f64>) -> Point {
    Point { v: e.v.clone(), w_b: e.w_b.clone(), w_c: e.w_c.clone(), t, zeta }
}

fn step_result(prob: &Problem, p: Point, eta: f64) -> StepResult {
    StepResult {
        objective: prob.objective(&p),
        penalized: prob.penalized(&p, eta),
        gap: rank_one_gap(&p.v),
        t: p.t,
        zeta: p.zeta,
        point: to_expansion(&p),
    }
}

/// Feasible starting point for the known-location problem.
pub fn init_feasible(cfg: &SystemConfig, ch: &ChannelSet) -> Result<ExpansionPoint> {
    let prob = known_problem(cfg, ch, &cfg.solver)?;
    Ok(to_expansion(&prob.initial_point()?))
}

/// One convex surrogate solve of the known-location problem around `point`.
pub fn solve_p1_inner(cfg: &SystemConfig, ch: &ChannelSet, point: &ExpansionPoint, eta: f64) -> Result<StepResult> {
    let prob = known_problem(cfg, ch, &cfg.solver)?;
    point.validate(prob.n_ris, prob.n_tx)?;
    let mut stats = SolveStats::default();
    let p = prob.step(&from_expansion(point, None, None), eta, None, &mut stats)?;
    Ok(step_result(&prob, p, eta))
}

/// One surrogate solve of the unknown-location problem with the multiplier
/// frozen at `zeta`.
pub fn solve_p21a(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    model: &SensingModel,
    point: &ExpansionPoint,
    eta: f64,
    zeta: f64,
) -> Result<StepResult> {
    if !(zeta >= 0.0) {
        return Err(Error::invalid("multiplier must be non-negative"));
    }
    let prob = sbic_problem(cfg, ch, model, &cfg.solver)?;
    point.validate(prob.n_ris, prob.n_tx)?;
    let mut stats = SolveStats::default();
    let p = prob.step(&from_expansion(point, None, Some(zeta)), eta, Some(zeta), &mut stats)?;
    Ok(step_result(&prob, p, eta))
}

/// Minimal multiplier making the robust covertness LMI hold for fixed
/// beams and CRB variable `t`.
pub fn solve_p21b(cfg: &SystemConfig, model: &SensingModel, w_b: &CMat, w_c: &CMat, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid("CRB variable must be positive"));
    }
    let x2 = solve_x2(cfg.epsilon, cfg.channel_uses)?;
    let params = robust_params(cfg, x2)?;
    if model.k == 0.0 {
        return Ok(0.0);
    }
    min_feasible_zeta(&params, model.fisher_scale() * t / model.k, w_b, w_c)
}

/// Known-location design.
pub fn solve_p1(cfg: &SystemConfig, ch: &ChannelSet, opts: &SolveOptions) -> Result<LiftedSolution> {
    let prob = known_problem(cfg, ch, opts)?;
    let run = best_run(&prob, |start| {
        let mut stats = SolveStats::default();
        let mut trajectory = Vec::new();
        let start_obj = prob.objective(&start);
        let (p, converged) = prob.penalty_loops(start, opts, None, 0, &mut trajectory, &mut stats)?;
        Ok(Run { ao_objective: vec![start_obj, prob.objective(&p)], point: p, trajectory, stats, stall: None, converged })
    })?;
    finish(finalize_noma(cfg, ch, &prob, run, &WardenCheck::Known)?)
}

/// Unknown-location design with the sensing-based uncertainty model.
pub fn solve_p2(cfg: &SystemConfig, ch: &ChannelSet, model: &SensingModel, opts: &SolveOptions) -> Result<LiftedSolution> {
    let prob = sbic_problem(cfg, ch, model, opts)?;
    let run = alternate(&prob, opts)?;
    finish(finalize_noma(cfg, ch, &prob, run, &WardenCheck::ThreeSigma(model.clone()))?)
}

/// Unknown-location design with a fixed angle-error bound.
pub fn solve_nbic(cfg: &SystemConfig, ch: &ChannelSet, opts: &SolveOptions) -> Result<LiftedSolution> {
    let prob = nbic_problem(cfg, ch, opts)?;
    let run = alternate(&prob, opts)?;
    finish(finalize_noma(cfg, ch, &prob, run, &WardenCheck::Fixed(cfg.nb_max_angle))?)
}

/// Dispatches to the scheme's solver with `cfg.solver` options.
pub fn solve_scheme(cfg: &SystemConfig, ch: &ChannelSet, csi: CsiModel, access: Access) -> Result<LiftedSolution> {
    let opts = &cfg.solver;
    match (csi, access) {
        (_, Access::Oma) => solve_oma(cfg, ch, csi, opts),
        (CsiModel::KnownPc, Access::Noma) => solve_p1(cfg, ch, opts),
        (CsiModel::SensingSbic, Access::Noma) => solve_p2(cfg, ch, &SensingModel::from_config(cfg)?, opts),
        (CsiModel::NormNbic, Access::Noma) => solve_nbic(cfg, ch, opts),
    }
}

pub(crate) struct Run {
    pub point: Point,
    pub trajectory: Vec<IterRecord>,
    pub ao_objective: Vec<f64>,
    pub stats: SolveStats,
    pub stall: Option<String>,
    pub converged: bool,
}

/// Runs `solve` from every starting point and keeps the highest final objective.
fn best_run(prob: &Problem, solve: impl Fn(Point) -> Result<Run>) -> Result<Run> {
    let mut best: Option<Run> = None;
    let mut last_err = None;
    for start in prob.initial_points()? {
        match solve(start) {
            Ok(run) => {
                let better = best.as_ref().is_none_or(|b| prob.objective(&run.point) > prob.objective(&b.point));
                if better {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match (best, last_err) {
        (Some(run), _) => Ok(run),
        (None, Some(e)) => Err(e),
        (None, None) => Err(Error::Infeasible("no starting point".into())),
    }
}

/// Alternates penalty loops at a frozen multiplier with the multiplier update.
pub(crate) fn alternate(prob: &Problem, opts: &SolveOptions) -> Result<Run> {
    best_run(prob, |start| alternate_from(prob, opts, start))
}

fn alternate_from(prob: &Problem, opts: &SolveOptions, start: Point) -> Result<Run> {
    let Covert::Robust { params, .. } = &prob.covert else {
        return Err(Error::invalid("alternating design needs a robust covertness model"));
    };
    let mut stats = SolveStats::default();
    let mut trajectory = Vec::new();
    let mut best = start;
    let mut zeta = match prob.radius_coeff(best.t) {
        Some(c) if lmi_holds(params, c, &best.w_b, &best.w_c, opts.zeta0) => opts.zeta0,
        Some(_) => best.zeta.unwrap_or(opts.zeta0),
        None => 0.0,
    };
    let mut best_obj = prob.objective(&best);
    let mut ao_objective = vec![best_obj];
    let mut stall = None;
    for ao in 0..opts.max_ao {
        let (mut cand, _) = prob.penalty_loops(best.clone(), opts, Some(zeta), ao, &mut trajectory, &mut stats)?;
        let obj = prob.objective(&cand);
        if obj < best_obj - ASCENT_SLACK * best_obj.abs().max(1.0) {
            stats.rejected_ao_rounds += 1;
            stall = Some(format!("round {ao} lowered the objective ({obj:e} < {best_obj:e})"));
            break;
        }
        if let Some(model) = &prob.sensing {
            // the step may return t a hair above what its beams support
            if let Ok(f) = model.fisher_terms(&prob.sensing_w(&cand)) {
                cand.t = cand.t.map(|t| t.min(f.schur_value()).max(model.t0()));
            }
        }
        let change = (obj - best_obj).abs() / best_obj.abs().max(1e-12);
        best = cand;
        best_obj = obj;
        ao_objective.push(obj);
        if let Some(c) = prob.radius_coeff(best.t) {
            match min_feasible_zeta(params, c, &best.w_b, &best.w_c) {
                Ok(z) => zeta = z,
                Err(e) => {
                    stall = Some(format!("multiplier update failed: {e}"));
                    break;
                }
            }
        }
        best.zeta = Some(zeta);
        if change < opts.inner_tol {
            break;
        }
    }
    best.zeta = Some(zeta);
    let converged = rank_one_gap(&best.v) <= opts.mu;
    Ok(Run { point: best, trajectory, ao_objective, stats, stall, converged })
}

fn finalize_noma(cfg: &SystemConfig, ch: &ChannelSet, prob: &Problem, run: Run, check: &WardenCheck) -> Result<LiftedSolution> {
    let p = &run.point;
    let v_vec = extract_rank_one(&p.v, true);
    let ext = repair_covertness(
        cfg,
        ch,
        check,
        extract_rank_one(&p.w_b, false),
        extract_rank_one(&p.w_c, false),
        prob.x2,
    )?;
    let (sinr_b, sinr_c) = noma_sinrs(cfg, ch, &v_vec, &ext.w_b, &ext.w_c);
    let carol_rate = sinr_c.ln_1p() / std::f64::consts::LN_2;
    Ok(LiftedSolution {
        rank: RankResiduals { v_gap: rank_one_gap(&p.v), w_b_ratio: eigen_ratio(&p.w_b), w_c_ratio: eigen_ratio(&p.w_c) },
        diagnostics: Diagnostics {
            qos_slack: (cfg.qos_rate > 0.0).then_some(carol_rate - cfg.qos_rate),
            power_slack: cfg.power - ext.w_b.norm_squared() - ext.w_c.norm_squared(),
            sic_order_ok: sic_order_ok(ch, &v_vec),
            covert_scale: ext.scale,
            stats: run.stats,
            stall: run.stall,
        },
        w_b: p.w_b.clone(),
        w_c: p.w_c.clone(),
        v: p.v.clone(),
        sinr_b,
        sinr_c,
        covert_rate: sinr_b.ln_1p() / std::f64::consts::LN_2,
        carol_rate,
        covert_ratio: ext.covert_ratio,
        worst_covert_ratio: ext.worst_ratio,
        x2: prob.x2,
        achieved_crb: ext.crb,
        t: p.t,
        zeta: p.zeta,
        trajectory: run.trajectory,
        ao_objective: run.ao_objective,
        oma: None,
        converged: run.converged,
        wb_vec: ext.w_b,
        wc_vec: ext.w_c,
        v_vec,
    })
}

fn finish(sol: LiftedSolution) -> Result<LiftedSolution> {
    if sol.converged {
        Ok(sol)
    } else {
        Err(Error::NonConvergence {
            reason: format!("rank-one gap {:e} still above threshold", sol.rank.v_gap),
            best: Box::new(sol),
        })
    }
}
