//! Affine expressions over the scalar variables of a [`ConicProblem`](crate::ConicProblem).
//!
//! Every decision variable is a real scalar. Hermitian matrix variables are
//! bundles of `d²` scalars (diagonal, real and imaginary parts of the strict
//! upper triangle) and appear in constraints through [`HermExpr`].

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for Hermitian data.
pub type CMat = DMatrix<Complex64>;

/// Handle to a real scalar decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `constant + Σ coef·var`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub(crate) terms: Vec<(VarId, f64)>,
    pub(crate) constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        Self { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) {
        self.terms.push((var, coef));
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn constant_part(&self) -> f64 {
        self.constant
    }

    /// Terms with duplicate variables merged, in variable order.
    pub fn merged(&self) -> Vec<(VarId, f64)> {
        let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_insert(0.0) += c;
        }
        acc.into_iter().filter(|&(_, c)| c != 0.0).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>() + self.constant
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|(v, _)| v.0).max()
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self += rhs;
        self
    }
}

impl AddAssign for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, s: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= s;
        }
        self.constant *= s;
        self
    }
}

/// Hermitian-matrix-valued affine expression `C + Σ x_i·F_i`.
///
/// The coefficient matrices are assumed Hermitian; the problem builder checks
/// this when the expression enters a constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermExpr {
    pub(crate) dim: usize,
    pub(crate) constant: CMat,
    pub(crate) terms: Vec<(VarId, CMat)>,
}

impl HermExpr {
    pub fn zero(dim: usize) -> Self {
        Self { dim, constant: CMat::zeros(dim, dim), terms: Vec::new() }
    }

    pub fn constant(m: CMat) -> Self {
        assert!(m.is_square(), "Hermitian expression needs a square constant");
        Self { dim: m.nrows(), constant: m, terms: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `coef·var` where `coef` is a Hermitian matrix of matching size.
    pub fn add_term(&mut self, var: VarId, coef: CMat) {
        assert_eq!(coef.nrows(), self.dim, "coefficient dimension mismatch");
        self.terms.push((var, coef));
    }

    /// Adds `s·(scalar expression)·𝟙`.
    pub fn add_scaled_identity(&mut self, e: &LinExpr, s: f64) {
        let eye = CMat::identity(self.dim, self.dim);
        for &(v, c) in &e.terms {
            self.terms.push((v, eye.scale(c * s)));
        }
        self.constant += eye.scale(e.constant * s);
    }

    pub fn add_constant(&mut self, m: &CMat) {
        self.constant += m;
    }

    /// Real-valued trace as a scalar expression.
    pub fn trace(&self) -> LinExpr {
        LinExpr {
            terms: self.terms.iter().map(|(v, m)| (*v, m.trace().re)).collect(),
            constant: self.constant.trace().re,
        }
    }

    /// `Re tr(W·self)` for a fixed Hermitian `W`.
    pub fn inner(&self, w: &CMat) -> LinExpr {
        let ip = |m: &CMat| (w * m).trace().re;
        LinExpr {
            terms: self.terms.iter().map(|(v, m)| (*v, ip(m))).collect(),
            constant: ip(&self.constant),
        }
    }

    /// True when every coefficient is real, so the PSD constraint can be
    /// posed without the complex embedding.
    pub(crate) fn is_real(&self) -> bool {
        let real = |m: &CMat| m.iter().all(|z| z.im == 0.0);
        real(&self.constant) && self.terms.iter().all(|(_, m)| real(m))
    }

    /// Coefficient matrices with duplicate variables merged.
    pub(crate) fn merged(&self) -> Vec<(VarId, CMat)> {
        let mut acc: BTreeMap<VarId, CMat> = BTreeMap::new();
        for (v, m) in &self.terms {
            acc.entry(*v)
                .and_modify(|a| *a += m)
                .or_insert_with(|| m.clone());
        }
        acc.into_iter().collect()
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        let mut out = self.constant.clone();
        for (v, m) in &self.terms {
            out += m.scale(x[v.0]);
        }
        out
    }

    pub(crate) fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|(v, _)| v.0).max()
    }
}

impl Add for HermExpr {
    type Output = HermExpr;
    fn add(mut self, rhs: HermExpr) -> HermExpr {
        self += rhs;
        self
    }
}

impl AddAssign for HermExpr {
    fn add_assign(&mut self, rhs: HermExpr) {
        assert_eq!(self.dim, rhs.dim, "Hermitian expression dimension mismatch");
        self.constant += rhs.constant;
        self.terms.extend(rhs.terms);
    }
}

impl Sub for HermExpr {
    type Output = HermExpr;
    fn sub(self, rhs: HermExpr) -> HermExpr {
        self + rhs * -1.0
    }
}

impl Mul<f64> for HermExpr {
    type Output = HermExpr;
    fn mul(mut self, s: f64) -> HermExpr {
        self.constant = self.constant.scale(s);
        for t in &mut self.terms {
            t.1 = t.1.scale(s);
        }
        self
    }
}

/// A Hermitian matrix variable: `d` diagonal scalars followed by the real and
/// imaginary parts of each strict-upper entry, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermVar {
    pub(crate) dim: usize,
    pub(crate) vars: Vec<VarId>,
}

impl HermVar {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    /// Basis matrices paired with their scalar variables.
    fn basis(&self) -> Vec<(VarId, CMat)> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * d);
        let mut it = self.vars.iter().copied();
        for i in 0..d {
            let mut m = CMat::zeros(d, d);
            m[(i, i)] = Complex64::new(1.0, 0.0);
            out.push((it.next().unwrap(), m));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let mut re = CMat::zeros(d, d);
                re[(i, j)] = Complex64::new(1.0, 0.0);
                re[(j, i)] = Complex64::new(1.0, 0.0);
                out.push((it.next().unwrap(), re));
                let mut im = CMat::zeros(d, d);
                im[(i, j)] = Complex64::new(0.0, 1.0);
                im[(j, i)] = Complex64::new(0.0, -1.0);
                out.push((it.next().unwrap(), im));
            }
        }
        out
    }

    pub fn expr(&self) -> HermExpr {
        HermExpr { dim: self.dim, constant: CMat::zeros(self.dim, self.dim), terms: self.basis() }
    }

    /// Trace as a scalar expression (sum of the diagonal variables).
    pub fn trace(&self) -> LinExpr {
        LinExpr {
            terms: self.vars[..self.dim].iter().map(|&v| (v, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub(crate) fn assemble(&self, x: &[f64]) -> CMat {
        self.expr().eval(x)
    }
}
