//! Feasible starting points.

use crate::convex_kit::lmi::{schur_sensing_lmi, sprocedure_covert_lmi, CovertLmi, Uncertainty};
use crate::convex_kit::model::{ConicProgram, LinExpr};
use crate::convex_kit::solve::solve_conic;
use crate::error::{Error, Result};
use crate::linalg::{herm_eigen, outer, CMat, CVec, C64};

use super::problem::{Covert, Point, Problem, Radius, Role};

/// Unit-modulus RIS vector co-phasing `v^H G w` for the best `w`, found by
/// a few alternations between phase alignment and maximum-ratio beams.
pub(crate) fn co_phase(g: &CMat) -> CVec {
    let gram = g.adjoint() * g;
    let mut w = herm_eigen(&gram).vectors.column(0).into_owned();
    let mut v = CVec::repeat(g.nrows(), C64::new(1.0, 0.0));
    for _ in 0..10 {
        let y = g * &w;
        v = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) });
        let eff = g.adjoint() * &v;
        let n = eff.norm();
        if n == 0.0 {
            break;
        }
        w = eff / C64::new(n, 0.0);
    }
    v
}

fn unit(x: CVec) -> Option<CVec> {
    let n = x.norm();
    (n > 1e-300).then(|| x / C64::new(n, 0.0))
}

/// Projects `x` onto the orthogonal complement of `d`.
fn project_out(x: &CVec, d: &CVec) -> CVec {
    let dn = d.norm_squared();
    if dn == 0.0 {
        return x.clone();
    }
    x - d * (d.dotc(x) / dn)
}

impl Problem {
    fn null_direction(&self) -> Option<CVec> {
        match &self.covert {
            Covert::None => None,
            Covert::Perfect { h, .. } => Some(h.clone()),
            Covert::Robust { params, .. } => Some(params.a_hat.clone()),
        }
    }

    /// Closed-form starting point; may violate constraints. Without a QoS
    /// constraint Carol's beam starts silent, or with the leftover budget
    /// when `fill_carol` is set.
    fn analytic_point(&self, fill_carol: bool) -> Point {
        let n = self.n_tx;
        let cascade = match self.role {
            Role::BobSlot => &self.gb,
            _ => &self.gc,
        };
        let v = co_phase(cascade);
        let g_b = self.gb.adjoint() * &v;
        let g_c = self.gc.adjoint() * &v;
        let zeros = CMat::zeros(n, n);

        let mut w_b = zeros.clone();
        let mut p_b = 0.0;
        if self.has_b() {
            let dir = match self.null_direction() {
                Some(d) => project_out(&g_b, &d),
                None => g_b.clone(),
            };
            if let Some(u) = unit(dir) {
                p_b = if self.role == Role::BobSlot { self.power } else { 1e-3 * self.power };
                w_b = outer(&u) * C64::new(p_b, 0.0);
            }
        }

        let mut w_c = zeros;
        if self.has_c() {
            if let Some(u) = unit(g_c.clone()) {
                let p_c = if self.role == Role::CarolSlot {
                    self.power
                } else if self.rho > 0.0 {
                    // 3 dB margin on both SIC branches
                    let need = |g: &CVec| {
                        let signal = g.dotc(&u).norm_sqr();
                        let interference = (g.adjoint() * &w_b * g)[(0, 0)].re;
                        2.0 * self.rho * (interference + 1.0) / signal.max(1e-300)
                    };
                    need(&g_c).max(need(&g_b)).min(self.power - p_b)
                } else if fill_carol {
                    self.power - p_b
                } else {
                    0.0
                };
                w_c = outer(&u) * C64::new(p_c, 0.0);
            }
        }
        let mut v = outer(&v);
        v.set_diagonal(&CVec::repeat(v.nrows(), C64::new(1.0, 0.0)));
        Point { v, w_b, w_c, t: None, zeta: None }
    }

    /// Feasible point: closed form when it certifies, otherwise the
    /// maximally-slack point of a feasibility program with `V` frozen.
    pub(crate) fn initial_point(&self) -> Result<Point> {
        self.initial_point_with(false)
    }

    /// Starting points worth a full run. Without QoS the power Carol's beam
    /// puts on the warden is unconstrained, so both extremes are tried.
    pub(crate) fn initial_points(&self) -> Result<Vec<Point>> {
        let mut out = vec![self.initial_point_with(false)?];
        if self.role == Role::Noma && !self.qos_active() && self.has_c() {
            match self.initial_point_with(true) {
                Ok(p) => out.push(p),
                Err(e) => log::debug!("filled Carol start rejected: {e}"),
            }
        }
        Ok(out)
    }

    fn initial_point_with(&self, fill_carol: bool) -> Result<Point> {
        let p = self.analytic_point(fill_carol);
        // shrink the covert beam until the start certifies
        for k in 0..8 {
            let mut q = p.clone();
            q.w_b *= C64::new(10f64.powi(-k), 0.0);
            match self.certify(&mut q) {
                Ok(()) => return Ok(q),
                Err(reason) => log::debug!("closed-form start rejected at scale 1e-{k}: {reason}"),
            }
        }
        let mut p = self.feasibility_point(&p.v)?;
        self.certify(&mut p).map_err(|reason| Error::Infeasible(format!("no feasible starting point: {reason}")))?;
        Ok(p)
    }

    fn feasibility_point(&self, v: &CMat) -> Result<Point> {
        let mut prog = ConicProgram::new();
        let w_b = if self.has_b() { Some(prog.add_herm("W_B", self.n_tx)?) } else { None };
        let w_c = if self.has_c() { Some(prog.add_herm("W_C", self.n_tx)?) } else { None };
        let s = prog.add_scalar("slack")?;
        let mut power = LinExpr::zero();
        for w in [&w_b, &w_c].into_iter().flatten() {
            prog.psd_var(w);
            power.add_scaled(&w.trace(), 1.0);
        }
        prog.le(power, LinExpr::constant(self.power));
        prog.le(s.expr(), LinExpr::constant(1.0));

        // with V fixed the lifted gains are g^H W g, g = G^H v
        let v_vec = herm_eigen(v).vectors.column(0).into_owned() * C64::new(herm_eigen(v).values[0].max(0.0).sqrt(), 0.0);
        if self.qos_active() {
            let (wb, wc) = (w_b.as_ref().unwrap(), w_c.as_ref().unwrap());
            for g in [&self.gc, &self.gb] {
                let eff = g.adjoint() * &v_vec;
                let margin = wc.expr().quad_form(&eff)? - wb.expr().quad_form(&eff)?.scaled(self.rho) - self.rho;
                prog.ge(margin, s.expr().scaled(self.rho));
            }
        } else {
            // slack measured as a fraction of the full-power gain
            let (w, g) = match self.role {
                Role::CarolSlot => (w_c.as_ref().unwrap(), &self.gc),
                _ => (w_b.as_ref().unwrap(), &self.gb),
            };
            let eff = g.adjoint() * &v_vec;
            let full = eff.norm_squared() * self.power;
            prog.le(s.expr(), w.expr().quad_form(&eff)?.scaled(1.0 / full.max(1e-300)));
        }

        if let Some(model) = &self.sensing {
            let w = match (&w_b, &w_c) {
                (Some(b), Some(c)) => b.expr().add(&c.expr())?,
                (Some(b), None) => b.expr(),
                (None, Some(c)) => c.expr(),
                (None, None) => unreachable!(),
            };
            prog.psd(schur_sensing_lmi(model, &w, &LinExpr::constant(model.t0() * (1.0 + 1e-6)))?);
        }

        match &self.covert {
            Covert::None => {}
            Covert::Perfect { h, sigma_w2 } => {
                let mut slack = LinExpr::constant((self.x2 - 1.0) * sigma_w2);
                if let Some(wc) = &w_c {
                    slack.add_scaled(&wc.expr().quad_form(h)?, self.x2 - 1.0);
                }
                slack.add_scaled(&w_b.as_ref().unwrap().expr().quad_form(h)?, -1.0);
                prog.ge(slack, LinExpr::zero());
            }
            Covert::Robust { params, radius } => {
                let delta = match radius {
                    // loosest radius the CRB cap allows
                    Radius::Sensing { k, fisher_scale } => k / (fisher_scale * self.sensing.as_ref().map_or(1.0, |m| m.t0())),
                    Radius::Fixed { delta, .. } => *delta,
                };
                let z = prog.add_scalar("zeta")?;
                prog.ge(z.expr(), LinExpr::zero());
                let wc = w_c.as_ref().map(|w| w.expr());
                let unc = Uncertainty::Radius { zeta: z.expr(), delta };
                match sprocedure_covert_lmi(params, &w_b.as_ref().unwrap().expr(), wc.as_ref(), &unc)? {
                    CovertLmi::Lmi(m) => prog.psd(m),
                    CovertLmi::Perfect(e) => prog.ge(e, LinExpr::zero()),
                }
            }
        }
        prog.maximize(s.expr());
        let sol = solve_conic(&prog, &self.conic)?;
        if !sol.is_optimal() {
            return Err(Error::Infeasible(format!("feasibility program ended with {:?}", sol.status)));
        }
        if sol.scalar(&s) < -1e-7 {
            return Err(Error::Infeasible(format!("QoS unreachable (best slack {:e})", sol.scalar(&s))));
        }
        let zeros = CMat::zeros(self.n_tx, self.n_tx);
        // small back-off on the covert beam
        Ok(Point {
            v: v.clone(),
            w_b: w_b.as_ref().map_or_else(|| zeros.clone(), |w| sol.herm(w) * C64::new(1.0 - 1e-6, 0.0)),
            w_c: w_c.as_ref().map_or(zeros, |w| sol.herm(w)),
            t: None,
            zeta: None,
        })
    }
}
