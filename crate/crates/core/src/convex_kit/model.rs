//! Affine expressions over real decision variables, with Hermitian matrix
//! variables stored as their real parameters.

use std::collections::HashSet;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// `Σ cᵢ xᵢ + constant`
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn term(idx: usize, coeff: f64) -> Self {
        LinExpr { terms: vec![(idx, coeff)], constant: 0.0 }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, k: f64) {
        if k == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|&(i, c)| (i, c * k)));
        self.constant += other.constant * k;
    }

    pub fn scaled(&self, k: f64) -> LinExpr {
        let mut out = LinExpr::zero();
        out.add_scaled(self, k);
        out
    }

    /// Sorts terms by variable index, merges duplicates and drops zeros.
    pub fn compact(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        self.terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(i, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        self.terms = merged;
    }

    pub fn compacted(mut self) -> Self {
        self.compact();
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|t| t.0).max()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.1.abs()))
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, 1.0);
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: LinExpr) -> LinExpr {
        self.add_scaled(&rhs, -1.0);
        self
    }
}

impl Add<f64> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: f64) -> LinExpr {
        self.constant += rhs;
        self
    }
}

impl Sub<f64> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: f64) -> LinExpr {
        self.constant -= rhs;
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(self, rhs: f64) -> LinExpr {
        self.scaled(rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scaled(-1.0)
    }
}

/// Complex-valued affine expression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn real(re: LinExpr) -> Self {
        CExpr { re, im: LinExpr::zero() }
    }

    pub fn constant(z: C64) -> Self {
        CExpr { re: LinExpr::constant(z.re), im: LinExpr::constant(z.im) }
    }

    /// `self += k · other`
    pub fn add_scaled(&mut self, other: &CExpr, k: C64) {
        self.re.add_scaled(&other.re, k.re);
        self.re.add_scaled(&other.im, -k.im);
        self.im.add_scaled(&other.im, k.re);
        self.im.add_scaled(&other.re, k.im);
    }

    pub fn conj(&self) -> CExpr {
        CExpr { re: self.re.clone(), im: self.im.scaled(-1.0) }
    }

    pub fn compact(&mut self) {
        self.re.compact();
        self.im.compact();
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Hermitian `n × n` decision variable.
///
/// Parameters: `n` diagonal reals followed by (Re, Im) of each strictly upper
/// entry in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HermVar {
    pub offset: usize,
    pub n: usize,
}

impl HermVar {
    pub fn param_count(n: usize) -> usize {
        n * n
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        // position of (i, j), i < j, in row-major strict upper order
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn entry(&self, i: usize, j: usize) -> CExpr {
        if i == j {
            return CExpr::real(LinExpr::term(self.offset + i, 1.0));
        }
        let (a, b, sign) = if i < j { (i, j, 1.0) } else { (j, i, -1.0) };
        let base = self.offset + self.n + 2 * self.pair_index(a, b);
        CExpr { re: LinExpr::term(base, 1.0), im: LinExpr::term(base + 1, sign) }
    }

    /// `Tr(X)` as a real affine expression.
    pub fn trace(&self) -> LinExpr {
        LinExpr { terms: (0..self.n).map(|i| (self.offset + i, 1.0)).collect(), constant: 0.0 }
    }

    pub fn expr(&self) -> HermExpr {
        HermExpr::from_upper(self.n, |i, j| self.entry(i, j))
    }

    /// Reads the matrix value from a solution vector.
    pub fn value(&self, x: &[f64]) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.entry(i, j).eval(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalarVar {
    pub idx: usize,
}

impl ScalarVar {
    pub fn expr(&self) -> LinExpr {
        LinExpr::term(self.idx, 1.0)
    }
}

/// Square matrix of complex affine expressions, Hermitian by construction:
/// only the upper triangle is ever computed and the lower one mirrors it.
#[derive(Clone, Debug, PartialEq)]
pub struct HermExpr {
    n: usize,
    data: Vec<CExpr>,
}

impl HermExpr {
    /// Builds from the upper triangle; diagonal imaginary parts are dropped.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> CExpr) -> Self {
        let mut data = vec![CExpr::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let mut e = f(i, j);
                e.compact();
                if i == j {
                    e.im = LinExpr::zero();
                } else {
                    data[j * n + i] = e.conj();
                }
                data[i * n + j] = e;
            }
        }
        HermExpr { n, data }
    }

    pub fn constant(m: &CMat) -> Self {
        Self::from_upper(m.nrows(), |i, j| {
            let z = if i == j { C64::new(m[(i, i)].re, 0.0) } else { 0.5 * (m[(i, j)] + m[(j, i)].conj()) };
            CExpr::constant(z)
        })
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, |_, _| CExpr::zero())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &CExpr {
        &self.data[i * self.n + j]
    }

    pub fn add(&self, other: &HermExpr) -> Result<HermExpr> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &HermExpr) -> Result<HermExpr> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &HermExpr, k: f64) -> Result<HermExpr> {
        if self.n != other.n {
            return Err(Error::dims(format!("matrix expressions {} vs {}", self.n, other.n)));
        }
        Ok(Self::from_upper(self.n, |i, j| {
            let mut e = self.get(i, j).clone();
            e.add_scaled(other.get(i, j), C64::new(k, 0.0));
            e
        }))
    }

    pub fn scale(&self, k: f64) -> HermExpr {
        Self::from_upper(self.n, |i, j| {
            let mut e = CExpr::zero();
            e.add_scaled(self.get(i, j), C64::new(k, 0.0));
            e
        })
    }

    /// `X + s·I` for a real affine `s`.
    pub fn add_identity(&self, s: &LinExpr) -> HermExpr {
        Self::from_upper(self.n, |i, j| {
            let mut e = self.get(i, j).clone();
            if i == j {
                e.re.add_scaled(s, 1.0);
            }
            e
        })
    }

    /// `G X G^H` for a constant `k × n` matrix `G`.
    pub fn congruence(&self, g: &CMat) -> Result<HermExpr> {
        if g.ncols() != self.n {
            return Err(Error::dims(format!("congruence with {}×{} on {}", g.nrows(), g.ncols(), self.n)));
        }
        let k = g.nrows();
        // T = X G^H, column l of T is X conj(g_l)
        let mut t = vec![CExpr::zero(); self.n * k];
        for i in 0..self.n {
            for l in 0..k {
                let mut acc = CExpr::zero();
                for j in 0..self.n {
                    let c = g[(l, j)].conj();
                    if c != C64::new(0.0, 0.0) {
                        acc.add_scaled(self.get(i, j), c);
                    }
                }
                acc.compact();
                t[i * k + l] = acc;
            }
        }
        Ok(Self::from_upper(k, |r, l| {
            let mut acc = CExpr::zero();
            for i in 0..self.n {
                let c = g[(r, i)];
                if c != C64::new(0.0, 0.0) {
                    acc.add_scaled(&t[i * k + l], c);
                }
            }
            acc
        }))
    }

    /// `Tr(C X)`
    pub fn trace_with(&self, c: &CMat) -> Result<CExpr> {
        if c.shape() != (self.n, self.n) {
            return Err(Error::dims(format!("trace weight {:?} on {}", c.shape(), self.n)));
        }
        let mut acc = CExpr::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                let w = c[(j, i)];
                if w != C64::new(0.0, 0.0) {
                    acc.add_scaled(self.get(i, j), w);
                }
            }
        }
        acc.compact();
        Ok(acc)
    }

    /// `Re Tr(C X)`, exact for Hermitian `C`.
    pub fn real_trace_with(&self, c: &CMat) -> Result<LinExpr> {
        Ok(self.trace_with(c)?.re)
    }

    pub fn trace(&self) -> LinExpr {
        let mut acc = LinExpr::zero();
        for i in 0..self.n {
            acc.add_scaled(&self.get(i, i).re, 1.0);
        }
        acc.compacted()
    }

    /// `X a`
    pub fn mul_vec(&self, a: &CVec) -> Result<Vec<CExpr>> {
        if a.len() != self.n {
            return Err(Error::dims(format!("vector of length {} on {}", a.len(), self.n)));
        }
        Ok((0..self.n)
            .map(|i| {
                let mut acc = CExpr::zero();
                for j in 0..self.n {
                    acc.add_scaled(self.get(i, j), a[j]);
                }
                acc.compact();
                acc
            })
            .collect())
    }

    /// `a^H X a`
    pub fn quad_form(&self, a: &CVec) -> Result<LinExpr> {
        let xa = self.mul_vec(a)?;
        let mut acc = CExpr::zero();
        for (i, e) in xa.iter().enumerate() {
            acc.add_scaled(e, a[i].conj());
        }
        acc.compact();
        Ok(acc.re)
    }

    /// `[[X, c], [c^H, s]]`
    pub fn bordered(&self, col: &[CExpr], corner: &LinExpr) -> Result<HermExpr> {
        if col.len() != self.n {
            return Err(Error::dims("border column length"));
        }
        let n = self.n;
        Ok(Self::from_upper(n + 1, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if i < n {
                col[i].clone()
            } else {
                CExpr::real(corner.clone())
            }
        }))
    }

    /// Real parts whose squares sum to `‖X‖_F²`.
    pub fn frob_parts(&self) -> Vec<LinExpr> {
        let s2 = std::f64::consts::SQRT_2;
        let mut parts = Vec::with_capacity(self.n * self.n);
        for i in 0..self.n {
            parts.push(self.get(i, i).re.clone());
            for j in i + 1..self.n {
                let e = self.get(i, j);
                parts.push(e.re.scaled(s2));
                parts.push(e.im.scaled(s2));
            }
        }
        parts
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.get(i, j).eval(x))
    }

    /// Largest coefficient mismatch between `X` and `X^H`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let mut d = self.get(i, j).clone();
                d.add_scaled(&self.get(j, i).conj(), C64::new(-1.0, 0.0));
                d.compact();
                for part in [&d.re, &d.im] {
                    worst = worst.max(part.max_abs_coeff()).max(part.constant.abs());
                }
            }
        }
        worst
    }

    pub(crate) fn max_index(&self) -> Option<usize> {
        self.data.iter().flat_map(|e| [e.re.max_index(), e.im.max_index()]).flatten().max()
    }
}

#[derive(Clone, Debug)]
pub enum Constraint {
    /// `e = 0`
    Zero(LinExpr),
    /// `e ≥ 0`
    Nonneg(LinExpr),
    /// `X ⪰ 0`
    Psd(HermExpr),
    /// `Σ pᵢ² ≤ bound`
    SquaredNorm { parts: Vec<LinExpr>, bound: LinExpr },
}

/// Maximization problem with affine objective and conic constraints.
#[derive(Clone, Debug, Default)]
pub struct ConicProgram {
    n_vars: usize,
    names: HashSet<String>,
    pub(crate) objective: LinExpr,
    pub(crate) constraints: Vec<Constraint>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn declare(&mut self, name: &str, count: usize) -> Result<usize> {
        if !self.names.insert(name.to_string()) {
            return Err(Error::invalid(format!("variable `{name}` declared twice")));
        }
        let offset = self.n_vars;
        self.n_vars += count;
        Ok(offset)
    }

    pub fn add_herm(&mut self, name: &str, n: usize) -> Result<HermVar> {
        let offset = self.declare(name, HermVar::param_count(n))?;
        Ok(HermVar { offset, n })
    }

    pub fn add_scalar(&mut self, name: &str) -> Result<ScalarVar> {
        Ok(ScalarVar { idx: self.declare(name, 1)? })
    }

    pub fn maximize(&mut self, objective: LinExpr) {
        self.objective = objective.compacted();
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn eq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.constraints.push(Constraint::Zero((lhs - rhs).compacted()));
    }

    /// `lhs ≤ rhs`
    pub fn le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.constraints.push(Constraint::Nonneg((rhs - lhs).compacted()));
    }

    pub fn ge(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.le(rhs, lhs);
    }

    pub fn psd(&mut self, x: HermExpr) {
        self.constraints.push(Constraint::Psd(x));
    }

    pub fn psd_var(&mut self, v: &HermVar) {
        self.psd(v.expr());
    }

    /// `Σ parts² ≤ bound`
    pub fn squared_norm_le(&mut self, parts: Vec<LinExpr>, bound: LinExpr) {
        let parts = parts.into_iter().map(LinExpr::compacted).collect();
        self.constraints.push(Constraint::SquaredNorm { parts, bound: bound.compacted() });
    }

    /// Rejects expressions that reference undeclared variables.
    pub fn check(&self) -> Result<()> {
        let mut worst = self.objective.max_index();
        for c in &self.constraints {
            let m = match c {
                Constraint::Zero(e) | Constraint::Nonneg(e) => e.max_index(),
                Constraint::Psd(x) => x.max_index(),
                Constraint::SquaredNorm { parts, bound } => {
                    parts.iter().filter_map(|p| p.max_index()).chain(bound.max_index()).max()
                }
            };
            worst = worst.max(m);
        }
        match worst {
            Some(i) if i >= self.n_vars => Err(Error::invalid(format!(
                "expression references variable {i} but only {} are declared",
                self.n_vars
            ))),
            _ => Ok(()),
        }
    }
}
