//! Difference-of-convex bounds of `Tr(AB)` and the rank-one penalty pieces.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::linalg::{frob_sq, herm_eigen, same_square, trace_prod, CMat, CVec};

use super::model::{HermExpr, LinExpr};

/// Linearization point `(V₀, W_B0, W_C0)` of one SCA step.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionPoint {
    pub v: CMat,
    pub w_b: CMat,
    pub w_c: CMat,
}

impl ExpansionPoint {
    pub fn validate(&self, n_ris: usize, n_tx: usize) -> Result<()> {
        if self.v.shape() != (n_ris, n_ris) || self.w_b.shape() != (n_tx, n_tx) || self.w_c.shape() != (n_tx, n_tx) {
            return Err(Error::dims(format!(
                "expansion point shapes {:?}, {:?}, {:?} for M = {n_ris}, n_tx = {n_tx}",
                self.v.shape(),
                self.w_b.shape(),
                self.w_c.shape()
            )));
        }
        for m in 0..n_ris {
            if (self.v[(m, m)].re - 1.0).abs() > 1e-8 || self.v[(m, m)].im.abs() > 1e-8 {
                return Err(Error::NumericalDomain(format!("Diag(V)[{m}] = {} is not 1", self.v[(m, m)])));
            }
        }
        Ok(())
    }
}

fn check_quad(a: &CMat, b: &CMat, a0: &CMat, b0: &CMat) -> Result<()> {
    same_square(a, b, "A vs B")?;
    same_square(a, a0, "A vs A0")?;
    same_square(a, b0, "A vs B0")
}

/// Concave minorant of `Tr(AB)` that is tight at `(A0, B0)`.
pub fn f_lb(a: &CMat, b: &CMat, a0: &CMat, b0: &CMat) -> Result<f64> {
    check_quad(a, b, a0, b0)?;
    let s0 = a0 + b0;
    let step = (a - a0) + (b - b0);
    Ok(0.5 * frob_sq(&s0) + trace_prod(&s0, &step).re - 0.5 * frob_sq(a) - 0.5 * frob_sq(b))
}

/// Convex majorant of `Tr(AB)` that is tight at `(A0, B0)`.
pub fn f_ub(a: &CMat, b: &CMat, a0: &CMat, b0: &CMat) -> Result<f64> {
    check_quad(a, b, a0, b0)?;
    Ok(0.5 * frob_sq(&(a + b)) + 0.5 * frob_sq(a0) - trace_prod(a0, a).re + 0.5 * frob_sq(b0)
        - trace_prod(b0, b).re)
}

/// `‖V‖_* − ‖V‖₂`
pub fn rank_one_gap(v: &CMat) -> f64 {
    let values = herm_eigen(v).values;
    let nuclear: f64 = values.iter().map(|x| x.abs()).sum();
    let spectral = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    (nuclear - spectral).max(0.0)
}

/// Dominant eigenpair of a PSD matrix; on near-ties the eigenvector with
/// the larger index wins.
pub fn spectral_direction(v_n: &CMat) -> (f64, CVec) {
    let eig = herm_eigen(v_n);
    (eig.values[0], eig.vectors.column(0).into_owned())
}

/// `‖V_n‖₂ + Tr(u u^H (V − V_n))`
pub fn linearize_spectral(v: &CMat, v_n: &CMat) -> Result<f64> {
    same_square(v, v_n, "V vs V_n")?;
    let (top, u) = spectral_direction(v_n);
    let d = v - v_n;
    Ok(top + (u.adjoint() * d * &u)[(0, 0)].re)
}

/// `linear − Σ squares`
#[derive(Clone, Debug)]
pub struct ConcaveQuad {
    pub linear: LinExpr,
    pub squares: Vec<LinExpr>,
}

/// `linear + Σ squares`
#[derive(Clone, Debug)]
pub struct ConvexQuad {
    pub linear: LinExpr,
    pub squares: Vec<LinExpr>,
}

fn scaled_parts(x: &HermExpr, k: f64) -> impl Iterator<Item = LinExpr> {
    x.frob_parts().into_iter().map(move |p| p.scaled(k))
}

/// Symbolic form of [`f_lb`] for affine matrix expressions `A`, `B`.
pub fn f_lb_expr(a: &HermExpr, b: &HermExpr, a0: &CMat, b0: &CMat) -> Result<ConcaveQuad> {
    let s0 = a0 + b0;
    let mut linear = LinExpr::constant(-0.5 * frob_sq(&s0));
    linear.add_scaled(&a.real_trace_with(&s0)?, 1.0);
    linear.add_scaled(&b.real_trace_with(&s0)?, 1.0);
    let squares = scaled_parts(a, FRAC_1_SQRT_2).chain(scaled_parts(b, FRAC_1_SQRT_2)).collect();
    Ok(ConcaveQuad { linear: linear.compacted(), squares })
}

/// Symbolic form of [`f_ub`].
pub fn f_ub_expr(a: &HermExpr, b: &HermExpr, a0: &CMat, b0: &CMat) -> Result<ConvexQuad> {
    let mut linear = LinExpr::constant(0.5 * frob_sq(a0) + 0.5 * frob_sq(b0));
    linear.add_scaled(&a.real_trace_with(a0)?, -1.0);
    linear.add_scaled(&b.real_trace_with(b0)?, -1.0);
    let squares = scaled_parts(&a.add(b)?, FRAC_1_SQRT_2).collect();
    Ok(ConvexQuad { linear: linear.compacted(), squares })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_kit::model::ConicProgram;
    use crate::linalg::{outer, C64};

    fn psd(n: usize, seed: u64) -> CMat {
        let g = crate::channel::complex_gaussian_matrix(n, n, seed);
        &g * g.adjoint()
    }

    #[test]
    fn tight_at_expansion_point() {
        let (a, b) = (psd(3, 1), psd(3, 2));
        let exact = trace_prod(&a, &b).re;
        assert!((f_lb(&a, &b, &a, &b).unwrap() - exact).abs() < 1e-9 * exact);
        assert!((f_ub(&a, &b, &a, &b).unwrap() - exact).abs() < 1e-9 * exact);
        let i = CMat::identity(2, 2);
        assert_eq!(f_lb(&i, &i, &i, &i).unwrap(), 2.0);
        let z = CMat::zeros(2, 2);
        assert_eq!(f_ub(&z, &z, &z, &z).unwrap(), 0.0);
        assert!(f_lb(&i, &psd(3, 1), &i, &i).is_err());
    }

    #[test]
    fn sandwich_on_random_points() {
        for s in 0..50 {
            let (a, b, a0, b0) = (psd(4, s), psd(4, s + 100), psd(4, s + 200), psd(4, s + 300));
            let exact = trace_prod(&a, &b).re;
            assert!(f_lb(&a, &b, &a0, &b0).unwrap() <= exact + 1e-9);
            assert!(f_ub(&a, &b, &a0, &b0).unwrap() >= exact - 1e-9);
        }
    }

    #[test]
    fn gap_examples() {
        let v = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        assert!(rank_one_gap(&outer(&v)) < 1e-12);
        assert!((rank_one_gap(&CMat::identity(2, 2)) - 1.0).abs() < 1e-12);
        let x = psd(2, 9);
        let eig = herm_eigen(&x).values;
        assert!((rank_one_gap(&x) - eig[1]).abs() < 1e-10);
    }

    #[test]
    fn spectral_linearization() {
        let v_n = psd(3, 4);
        let top = herm_eigen(&v_n).values[0];
        assert!((linearize_spectral(&v_n, &v_n).unwrap() - top).abs() < 1e-10);
        for s in 0..20 {
            let v = psd(3, 40 + s);
            let top_v = herm_eigen(&v).values[0];
            assert!(linearize_spectral(&v, &v_n).unwrap() <= top_v + 1e-10);
        }
    }

    #[test]
    fn symbolic_bounds_match_numeric() {
        let mut p = ConicProgram::new();
        let av = p.add_herm("A", 3).unwrap();
        let bv = p.add_herm("B", 3).unwrap();
        let (a0, b0) = (psd(3, 11), psd(3, 12));
        let (a, b) = (psd(3, 13), psd(3, 14));
        let mut x = vec![0.0; p.n_vars()];
        for (var, m) in [(&av, &a), (&bv, &b)] {
            for i in 0..3 {
                x[var.offset + i] = m[(i, i)].re;
            }
            let mut k = 0;
            for i in 0..3 {
                for j in i + 1..3 {
                    x[var.offset + 3 + 2 * k] = m[(i, j)].re;
                    x[var.offset + 4 + 2 * k] = m[(i, j)].im;
                    k += 1;
                }
            }
        }
        assert!((av.value(&x) - &a).norm() < 1e-12);
        let lb = f_lb_expr(&av.expr(), &bv.expr(), &a0, &b0).unwrap();
        let lb_val = lb.linear.eval(&x) - lb.squares.iter().map(|s| s.eval(&x).powi(2)).sum::<f64>();
        assert!((lb_val - f_lb(&a, &b, &a0, &b0).unwrap()).abs() < 1e-9);
        let ub = f_ub_expr(&av.expr(), &bv.expr(), &a0, &b0).unwrap();
        let ub_val = ub.linear.eval(&x) + ub.squares.iter().map(|s| s.eval(&x).powi(2)).sum::<f64>();
        assert!((ub_val - f_ub(&a, &b, &a0, &b0).unwrap()).abs() < 1e-9);
    }
}
