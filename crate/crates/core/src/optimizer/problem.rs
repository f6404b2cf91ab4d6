//! The lifted problem shared by every scheme: one SCA step as a conic
//! program, the penalty loops around it and the multiplier subproblem.

use serde::{Deserialize, Serialize};

use crate::config::{ConicOptions, SolveOptions};
use crate::convex_kit::dc::{f_lb_expr, f_ub_expr, rank_one_gap, spectral_direction, ConcaveQuad, ConvexQuad};
use crate::convex_kit::lmi::{covert_lmi_numeric, schur_sensing_lmi, sprocedure_covert_lmi, CovertLmi, CovertLmiParams, Uncertainty};
use crate::convex_kit::model::{ConicProgram, HermExpr, HermVar, LinExpr, ScalarVar};
use crate::convex_kit::solve::solve_conic;
use crate::error::{Error, Result};
use crate::linalg::{frob_sq, herm_eigen, quad_form, trace_prod, CMat, CVec, C64};
use crate::sensing::SensingModel;

/// Relative slack below which an objective decrease counts as solver noise.
pub(crate) const ASCENT_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Role {
    /// Superposed Bob and Carol beams, Bob's SINR is the objective.
    Noma,
    /// Bob alone in his OMA slot.
    BobSlot,
    /// Carol alone in her OMA slot, her SINR is the objective.
    CarolSlot,
}

#[derive(Clone, Debug)]
pub(crate) enum Radius {
    /// Error radius `K/(fisher_scale·t)` tied to the CRB variable.
    Sensing { k: f64, fisher_scale: f64 },
    /// Fixed radius; `joint` makes the S-procedure multiplier a decision variable.
    Fixed { delta: f64, joint: bool },
}

#[derive(Clone, Debug)]
pub(crate) enum Covert {
    None,
    Perfect { h: CVec, sigma_w2: f64 },
    Robust { params: CovertLmiParams, radius: Radius },
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub n_tx: usize,
    pub n_ris: usize,
    /// Cascades divided by the receiver noise amplitude.
    pub gb: CMat,
    pub gc: CMat,
    pub rho: f64,
    pub power: f64,
    pub x2: f64,
    pub role: Role,
    pub covert: Covert,
    pub sensing: Option<SensingModel>,
    pub conic: ConicOptions,
}

/// Lifted iterate.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Point {
    pub v: CMat,
    pub w_b: CMat,
    pub w_c: CMat,
    pub t: Option<f64>,
    pub zeta: Option<f64>,
}

/// One logged SCA iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub ao: usize,
    pub outer: usize,
    pub inner: usize,
    pub eta: f64,
    /// Lifted objective `Tr(V G W G^H)` (an SINR).
    pub objective: f64,
    /// Objective minus `η·gap(V)`.
    pub penalized: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub conic_solves: usize,
    pub reduced_accuracy: usize,
    /// Steps whose true objective dropped and were discarded.
    pub rejected_steps: usize,
    /// Steps the backend could not solve to optimality.
    pub failed_steps: usize,
    pub rejected_ao_rounds: usize,
}

struct StepVars {
    v: HermVar,
    w_b: Option<HermVar>,
    w_c: Option<HermVar>,
    t: Option<ScalarVar>,
    zeta: Option<ScalarVar>,
}

pub(crate) fn lifted_gain(g: &CMat, v: &CMat, w: &CMat) -> f64 {
    trace_prod(v, &(g * w * g.adjoint())).re
}

impl Problem {
    pub fn has_b(&self) -> bool {
        self.role != Role::CarolSlot
    }

    pub fn has_c(&self) -> bool {
        self.role != Role::BobSlot
    }

    pub fn qos_active(&self) -> bool {
        self.role == Role::Noma && self.rho > 0.0
    }

    fn objective_cascade(&self) -> &CMat {
        match self.role {
            Role::CarolSlot => &self.gc,
            _ => &self.gb,
        }
    }

    pub fn objective(&self, p: &Point) -> f64 {
        match self.role {
            Role::CarolSlot => lifted_gain(&self.gc, &p.v, &p.w_c),
            _ => lifted_gain(&self.gb, &p.v, &p.w_b),
        }
    }

    pub fn penalized(&self, p: &Point, eta: f64) -> f64 {
        self.objective(p) - eta * rank_one_gap(&p.v)
    }

    /// Transmit covariance seen by the echo receiver.
    pub fn sensing_w(&self, p: &Point) -> CMat {
        match self.role {
            Role::Noma => &p.w_b + &p.w_c,
            Role::BobSlot => p.w_b.clone(),
            Role::CarolSlot => p.w_c.clone(),
        }
    }

    /// Multiplier of the identity block per unit `ζ` at auxiliary value `t`.
    pub fn radius_coeff(&self, t: Option<f64>) -> Option<f64> {
        match &self.covert {
            Covert::Robust { radius: Radius::Sensing { k, fisher_scale }, .. } => {
                if *k == 0.0 {
                    None
                } else {
                    t.map(|t| fisher_scale * t / k)
                }
            }
            Covert::Robust { radius: Radius::Fixed { delta, .. }, .. } => {
                if *delta == 0.0 {
                    None
                } else {
                    Some(1.0 / delta)
                }
            }
            _ => None,
        }
    }

    /// Checks the exact lifted constraints at `p`, filling in `t` and `ζ`.
    pub fn certify(&self, p: &mut Point) -> std::result::Result<(), String> {
        let total = p.w_b.trace().re + p.w_c.trace().re;
        if total > self.power * (1.0 + 1e-9) {
            return Err(format!("power {total:e} exceeds budget"));
        }
        if self.qos_active() {
            let c1 = lifted_gain(&self.gc, &p.v, &p.w_c) - self.rho * (lifted_gain(&self.gc, &p.v, &p.w_b) + 1.0);
            let c2 = lifted_gain(&self.gb, &p.v, &p.w_c) - self.rho * (lifted_gain(&self.gb, &p.v, &p.w_b) + 1.0);
            if c1 < -1e-9 * self.rho || c2 < -1e-9 * self.rho {
                return Err(format!("QoS violated ({c1:e}, {c2:e})"));
            }
        }
        if let Some(model) = &self.sensing {
            let f = model.fisher_terms(&self.sensing_w(p)).map_err(|e| e.to_string())?;
            let t_max = f.schur_value();
            if !(t_max >= model.t0() * (1.0 - 1e-9)) {
                return Err(format!("CRB cap violated (t {t_max:e} < t0 {:e})", model.t0()));
            }
            let t = p.t.unwrap_or(t_max).min(t_max).max(model.t0());
            p.t = Some(t);
        }
        match &self.covert {
            Covert::None => {}
            Covert::Perfect { h, sigma_w2 } => {
                let l0 = quad_form(h, &p.w_c) + sigma_w2;
                let leak = quad_form(h, &p.w_b);
                if leak > (self.x2 - 1.0) * l0 * (1.0 + 1e-9) + 1e-14 * h.norm_squared() * p.w_b.trace().re {
                    return Err(format!("covert ratio {:.9} above {:.9}", 1.0 + leak / l0, self.x2));
                }
            }
            Covert::Robust { params, .. } => match self.radius_coeff(p.t) {
                None => {
                    let wbar = &p.w_c * C64::new(self.x2 - 1.0, 0.0) - &p.w_b;
                    if quad_form(&params.a_hat, &wbar) + params.c0 < -1e-9 * params.c0.abs().max(1e-300) {
                        return Err("nominal covertness violated".into());
                    }
                }
                Some(coeff) => {
                    let zeta = min_feasible_zeta(params, coeff, &p.w_b, &p.w_c).map_err(|e| e.to_string())?;
                    p.zeta = Some(zeta);
                }
            },
        }
        Ok(())
    }

    /// Builds the convex surrogate around `p0`.
    fn build_step(&self, p0: &Point, eta: f64, zeta: Option<f64>) -> Result<(ConicProgram, StepVars)> {
        let mut prog = ConicProgram::new();
        let v = prog.add_herm("V", self.n_ris)?;
        let w_b = if self.has_b() { Some(prog.add_herm("W_B", self.n_tx)?) } else { None };
        let w_c = if self.has_c() { Some(prog.add_herm("W_C", self.n_tx)?) } else { None };

        prog.psd_var(&v);
        for m in 0..self.n_ris {
            prog.eq(v.entry(m, m).re, LinExpr::constant(1.0));
        }
        let mut power = LinExpr::zero();
        for w in [&w_b, &w_c].into_iter().flatten() {
            prog.psd_var(w);
            power.add_scaled(&w.trace(), 1.0);
        }
        prog.le(power, LinExpr::constant(self.power));

        let vx = v.expr();
        // objective: f_lb(V, G W G^H) − η(Tr V − u^H V u)
        let (obj_w, obj_w0) = match self.role {
            Role::CarolSlot => (w_c.as_ref().unwrap(), &p0.w_c),
            _ => (w_b.as_ref().unwrap(), &p0.w_b),
        };
        let lb = dc_lower(&mut prog, &vx, &p0.v, &obj_w.expr(), obj_w0, self.objective_cascade(), "obj")?;
        let (_, u) = spectral_direction(&p0.v);
        let mut objective = lb;
        objective.add_scaled(&v.trace(), -eta);
        objective.add_scaled(&vx.quad_form(&u)?, eta);
        prog.maximize(objective);

        if self.qos_active() {
            let (wb, wc) = (w_b.as_ref().unwrap(), w_c.as_ref().unwrap());
            for (g, tag) in [(&self.gc, "c1"), (&self.gb, "c2")] {
                // ρ·f_ub(V, G W_B G^H) + ρ ≤ f_lb(V, G W_C G^H)
                let rhs = dc_lower(&mut prog, &vx, &p0.v, &wc.expr(), &p0.w_c, g, tag)?;
                let lhs = dc_upper(&mut prog, &vx, &p0.v, &wb.expr(), &p0.w_b, g, tag)?;
                prog.le(lhs.scaled(self.rho) + self.rho, rhs);
            }
        }

        let t = if let Some(model) = &self.sensing {
            let t = prog.add_scalar("t")?;
            prog.ge(t.expr(), LinExpr::constant(model.t0()));
            let w_sense = match (&w_b, &w_c) {
                (Some(b), Some(c)) => b.expr().add(&c.expr())?,
                (Some(b), None) => b.expr(),
                (None, Some(c)) => c.expr(),
                (None, None) => unreachable!(),
            };
            prog.psd(schur_sensing_lmi(model, &w_sense, &t.expr())?);
            Some(t)
        } else {
            None
        };

        let mut zeta_var = None;
        match &self.covert {
            Covert::None => {}
            Covert::Perfect { h, sigma_w2 } => {
                let wb = w_b.as_ref().unwrap();
                let mut slack = LinExpr::constant((self.x2 - 1.0) * sigma_w2);
                if let Some(wc) = &w_c {
                    slack.add_scaled(&wc.expr().quad_form(h)?, self.x2 - 1.0);
                }
                slack.add_scaled(&wb.expr().quad_form(h)?, -1.0);
                prog.ge(slack, LinExpr::zero());
            }
            Covert::Robust { params, radius } => {
                let uncertainty = match radius {
                    Radius::Sensing { k, fisher_scale } => {
                        let t = t.as_ref().ok_or_else(|| Error::invalid("sensing radius needs the CRB variable"))?;
                        let zeta = zeta.ok_or_else(|| Error::invalid("sensing radius needs a fixed multiplier"))?;
                        Uncertainty::Sensing { zeta, t: t.expr(), k: *k, fisher_scale: *fisher_scale }
                    }
                    Radius::Fixed { delta, joint: true } => {
                        let z = prog.add_scalar("zeta")?;
                        prog.ge(z.expr(), LinExpr::zero());
                        zeta_var = Some(z);
                        Uncertainty::Radius { zeta: z.expr(), delta: *delta }
                    }
                    Radius::Fixed { delta, joint: false } => {
                        let zeta = zeta.ok_or_else(|| Error::invalid("fixed radius needs a multiplier"))?;
                        Uncertainty::Radius { zeta: LinExpr::constant(zeta), delta: *delta }
                    }
                };
                let wb = w_b.as_ref().unwrap().expr();
                let wc = w_c.as_ref().map(|w| w.expr());
                match sprocedure_covert_lmi(params, &wb, wc.as_ref(), &uncertainty)? {
                    CovertLmi::Lmi(m) => prog.psd(m),
                    CovertLmi::Perfect(e) => prog.ge(e, LinExpr::zero()),
                }
            }
        }
        Ok((prog, StepVars { v, w_b, w_c, t, zeta: zeta_var }))
    }

    /// One convex surrogate solve around `p0`.
    pub fn step(&self, p0: &Point, eta: f64, zeta: Option<f64>, stats: &mut SolveStats) -> Result<Point> {
        let (prog, vars) = self.build_step(p0, eta, zeta)?;
        let sol = solve_conic(&prog, &self.conic)?;
        stats.conic_solves += 1;
        if sol.reduced_accuracy {
            stats.reduced_accuracy += 1;
        }
        let sol = sol.require_optimal("SCA step")?;
        let zeros = CMat::zeros(self.n_tx, self.n_tx);
        Ok(Point {
            v: sol.herm(&vars.v),
            w_b: vars.w_b.as_ref().map_or_else(|| zeros.clone(), |w| sol.herm(w)),
            w_c: vars.w_c.as_ref().map_or(zeros, |w| sol.herm(w)),
            t: vars.t.as_ref().map(|t| sol.scalar(t)),
            zeta: vars.zeta.as_ref().map(|z| sol.scalar(z)).or(zeta),
        })
    }

    /// Inner SCA loops under a growing rank-one penalty. Returns the final
    /// iterate and whether the rank-one gap reached `μ`.
    pub fn penalty_loops(
        &self,
        start: Point,
        opts: &SolveOptions,
        zeta: Option<f64>,
        ao: usize,
        trajectory: &mut Vec<IterRecord>,
        stats: &mut SolveStats,
    ) -> Result<(Point, bool)> {
        let mut p = start;
        let mut eta = opts.eta0;
        for outer in 0..opts.max_outer {
            let mut current = self.penalized(&p, eta);
            trajectory.push(self.record(&p, ao, outer, 0, eta));
            for inner in 1..=opts.max_inner {
                let candidate = match self.step(&p, eta, zeta, stats) {
                    Ok(c) => c,
                    Err(Error::Solver { status, .. }) => {
                        log::debug!("SCA step stopped with {status:?}");
                        stats.failed_steps += 1;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let value = self.penalized(&candidate, eta);
                if value < current - ASCENT_SLACK * current.abs().max(1.0) {
                    stats.rejected_steps += 1;
                    break;
                }
                let change = (value - current).abs() / current.abs().max(1e-12);
                p = candidate;
                current = value;
                trajectory.push(self.record(&p, ao, outer, inner, eta));
                if change < opts.inner_tol {
                    break;
                }
            }
            if rank_one_gap(&p.v) <= opts.mu {
                return Ok((p, true));
            }
            eta *= opts.omega;
        }
        Ok((p, false))
    }

    fn record(&self, p: &Point, ao: usize, outer: usize, inner: usize, eta: f64) -> IterRecord {
        let gap = rank_one_gap(&p.v);
        let objective = self.objective(p);
        IterRecord { ao, outer, inner, eta, objective, penalized: objective - eta * gap, gap }
    }
}

/// `κ` with `κ² = ‖B0‖_F/‖A0‖_F`, so `(κA, B/κ)` have matching curvature.
fn balance(a0: &CMat, b0: &CMat) -> f64 {
    let (na, nb) = (frob_sq(a0).sqrt(), frob_sq(b0).sqrt());
    if na > 0.0 && nb > 0.0 {
        (nb / na).sqrt()
    } else {
        1.0
    }
}

/// Adds an epigraph for the squares of `f_lb(V, G W G^H)` and returns the
/// resulting affine lower bound.
fn dc_lower(prog: &mut ConicProgram, v: &HermExpr, v0: &CMat, w: &HermExpr, w0: &CMat, g: &CMat, tag: &str) -> Result<LinExpr> {
    let b0 = g * w0 * g.adjoint();
    let k = balance(v0, &b0);
    let b = w.congruence(g)?.scale(1.0 / k);
    let ConcaveQuad { linear, squares } = f_lb_expr(&v.scale(k), &b, &(v0 * C64::new(k, 0.0)), &(b0 / C64::new(k, 0.0)))?;
    let s = prog.add_scalar(&format!("{tag}_lb_epi"))?;
    prog.squared_norm_le(squares, s.expr());
    Ok(linear - s.expr())
}

/// Same for `f_ub`, returning an affine upper bound.
fn dc_upper(prog: &mut ConicProgram, v: &HermExpr, v0: &CMat, w: &HermExpr, w0: &CMat, g: &CMat, tag: &str) -> Result<LinExpr> {
    let b0 = g * w0 * g.adjoint();
    let k = balance(v0, &b0);
    let b = w.congruence(g)?.scale(1.0 / k);
    let ConvexQuad { linear, squares } = f_ub_expr(&v.scale(k), &b, &(v0 * C64::new(k, 0.0)), &(b0 / C64::new(k, 0.0)))?;
    let s = prog.add_scalar(&format!("{tag}_ub_epi"))?;
    prog.squared_norm_le(squares, s.expr());
    Ok(linear + s.expr())
}

fn min_eig(m: &CMat) -> f64 {
    *herm_eigen(m).values.last().unwrap()
}

/// Smallest `ζ ≥ 0` for which the robust covertness LMI holds at fixed
/// beams, with `coeff·ζ` on the identity block.
///
/// The minimum eigenvalue is concave in `ζ`; its peak is located by golden
/// section and the feasible boundary below the peak by bisection.
pub(crate) fn min_feasible_zeta(params: &CovertLmiParams, coeff: f64, w_b: &CMat, w_c: &CMat) -> Result<f64> {
    let f = |z: f64| min_eig(&covert_lmi_numeric(params, w_b, w_c, coeff * z, z));
    let j0 = covert_lmi_numeric(params, w_b, w_c, 0.0, 0.0);
    let tol = 1e-9 * j0.norm().max(params.c0.abs());
    if f(0.0) >= -tol {
        return Ok(0.0);
    }
    let n = w_b.nrows();
    let z_max = j0[(n, n)].re;
    if !(z_max > 0.0) {
        return Err(Error::Infeasible("robust covertness LMI has no admissible multiplier".into()));
    }
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, z_max);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * z_max {
            break;
        }
        if fc < fd {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        }
    }
    let (peak, f_peak) = if fc > fd { (c, fc) } else { (d, fd) };
    if f_peak < -tol {
        return Err(Error::Infeasible(format!(
            "robust covertness LMI infeasible for every multiplier (best min eigenvalue {f_peak:e})"
        )));
    }
    let (mut lo, mut hi) = (0.0, peak);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= -tol {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Whether the robust covertness LMI holds at multiplier `zeta`.
pub(crate) fn lmi_holds(params: &CovertLmiParams, coeff: f64, w_b: &CMat, w_c: &CMat, zeta: f64) -> bool {
    let j0 = covert_lmi_numeric(params, w_b, w_c, 0.0, 0.0);
    let tol = 1e-9 * j0.norm().max(params.c0.abs());
    min_eig(&covert_lmi_numeric(params, w_b, w_c, coeff * zeta, zeta)) >= -tol
}
