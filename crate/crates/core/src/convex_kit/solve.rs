//! Clarabel backend for [`ConicProgram`].

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use super::model::{ConicProgram, Constraint, HermVar, LinExpr, ScalarVar};
use crate::config::ConicOptions;
use crate::error::{Error, Result};
use crate::linalg::CMat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: ConicStatus,
    /// Set when the backend only reached its relaxed tolerances.
    pub reduced_accuracy: bool,
    /// Objective value; NaN unless optimal.
    pub objective: f64,
    /// Variable values; empty unless optimal.
    pub x: Vec<f64>,
    pub kkt: KktResiduals,
    pub iterations: u32,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == ConicStatus::Optimal
    }

    pub fn herm(&self, v: &HermVar) -> CMat {
        v.value(&self.x)
    }

    pub fn scalar(&self, v: &ScalarVar) -> f64 {
        self.x[v.idx]
    }

    pub fn value(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn require_optimal(self, context: &str) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver { status: self.status, context: context.to_string() })
        }
    }
}

struct Assembly {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Assembly {
    /// Appends the row `s = e(x)` scaled by `k`, i.e. `A = −k·c`, `b = k·d`.
    fn push_row(&mut self, e: &LinExpr, k: f64) {
        let r = self.b.len();
        for &(i, c) in &e.terms {
            self.rows.push(r);
            self.cols.push(i);
            self.vals.push(-c * k);
        }
        self.b.push(e.constant * k);
    }

    fn push_cone(&mut self, cone: SupportedConeT<f64>) {
        match (self.cones.last_mut(), &cone) {
            (Some(SupportedConeT::ZeroConeT(n)), SupportedConeT::ZeroConeT(m)) => *n += m,
            (Some(SupportedConeT::NonnegativeConeT(n)), SupportedConeT::NonnegativeConeT(m)) => *n += m,
            _ => self.cones.push(cone),
        }
    }
}

fn row_scale<'a>(exprs: impl Iterator<Item = &'a LinExpr>) -> f64 {
    let mut coeff: f64 = 0.0;
    let mut constant: f64 = 0.0;
    for e in exprs {
        coeff = coeff.max(e.max_abs_coeff());
        constant = constant.max(e.constant.abs());
    }
    let m = if coeff > 0.0 { coeff } else { constant };
    if m > 0.0 && m.is_finite() {
        1.0 / m
    } else {
        1.0
    }
}

fn embed_psd(asm: &mut Assembly, x: &super::model::HermExpr) {
    let n = x.dim();
    let is_real = (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let im = &x.get(i, j).im;
            im.terms.is_empty() && im.constant == 0.0
        })
    });
    let k = row_scale(
        (0..n).flat_map(|i| (i..n).flat_map(move |j| [&x.get(i, j).re, &x.get(i, j).im])),
    );
    let s2 = std::f64::consts::SQRT_2;
    if is_real {
        for j in 0..n {
            for i in 0..=j {
                let w = if i == j { k } else { k * s2 };
                asm.push_row(&x.get(i, j).re, w);
            }
        }
        asm.push_cone(SupportedConeT::PSDTriangleConeT(n));
        return;
    }
    // [[Re X, −Im X], [Im X, Re X]] in column-major upper-triangular order
    for j in 0..2 * n {
        for i in 0..=j {
            let w = if i == j { k } else { k * s2 };
            if j < n {
                asm.push_row(&x.get(i, j).re, w);
            } else if i < n {
                asm.push_row(&x.get(i, j - n).im, -w);
            } else {
                asm.push_row(&x.get(i - n, j - n).re, w);
            }
        }
    }
    asm.push_cone(SupportedConeT::PSDTriangleConeT(2 * n));
}

/// Solves `prog` with Clarabel after row-scaling every cone block.
pub fn solve_conic(prog: &ConicProgram, opts: &ConicOptions) -> Result<ConicSolution> {
    prog.check()?;
    let n = prog.n_vars();
    if n == 0 {
        return Err(Error::invalid("program has no variables"));
    }
    let mut asm = Assembly { rows: vec![], cols: vec![], vals: vec![], b: vec![], cones: vec![] };
    for c in &prog.constraints {
        match c {
            Constraint::Zero(e) => {
                asm.push_row(e, row_scale(std::iter::once(e)));
                asm.push_cone(SupportedConeT::ZeroConeT(1));
            }
            Constraint::Nonneg(e) => {
                asm.push_row(e, row_scale(std::iter::once(e)));
                asm.push_cone(SupportedConeT::NonnegativeConeT(1));
            }
            Constraint::Psd(x) => embed_psd(&mut asm, x),
            Constraint::SquaredNorm { parts, bound } => {
                // Σp² ≤ u  ⇔  ‖(2p, u − 1)‖ ≤ u + 1
                let k = row_scale(parts.iter().chain(std::iter::once(bound)));
                asm.push_row(&(bound.clone() + 1.0), k);
                asm.push_row(&(bound.clone() - 1.0), k);
                for p in parts {
                    asm.push_row(p, 2.0 * k);
                }
                asm.push_cone(SupportedConeT::SecondOrderConeT(parts.len() + 2));
            }
        }
    }

    let m = asm.b.len();
    let a = CscMatrix::new_from_triplets(m, n, asm.rows, asm.cols, asm.vals);
    let p = CscMatrix::zeros((n, n));
    let obj_scale = row_scale(std::iter::once(&prog.objective));
    let mut q = vec![0.0; n];
    for &(i, c) in &prog.objective.terms {
        q[i] -= c * obj_scale;
    }

    let settings = DefaultSettings {
        verbose: false,
        max_iter: opts.max_iter,
        tol_gap_abs: opts.tol,
        tol_gap_rel: opts.tol,
        tol_feas: opts.tol,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &q, &a, &asm.b, &asm.cones, settings)
        .map_err(|e| Error::invalid(format!("conic backend rejected the program: {e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let info = &solver.info;
    let (status, reduced) = match sol.status {
        SolverStatus::Solved => (ConicStatus::Optimal, false),
        SolverStatus::AlmostSolved => (ConicStatus::Optimal, true),
        SolverStatus::PrimalInfeasible => (ConicStatus::Infeasible, false),
        SolverStatus::AlmostPrimalInfeasible => (ConicStatus::Infeasible, true),
        SolverStatus::DualInfeasible => (ConicStatus::Unbounded, false),
        SolverStatus::AlmostDualInfeasible => (ConicStatus::Unbounded, true),
        _ => (ConicStatus::NumericalFailure, false),
    };
    let kkt = KktResiduals { primal: info.res_primal, dual: info.res_dual, gap: info.gap_rel };
    let (x, objective) = if status == ConicStatus::Optimal {
        let x = sol.x.clone();
        let obj = prog.objective.eval(&x);
        (x, obj)
    } else {
        (Vec::new(), f64::NAN)
    };
    Ok(ConicSolution { status, reduced_accuracy: reduced, objective, x, kkt, iterations: sol.iterations })
}
