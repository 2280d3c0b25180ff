use serde::{Deserialize, Serialize};

use crate::expr::{CMat, HermExpr, HermVar, LinExpr, VarId};
use crate::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    Nonnegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EqId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IneqId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PsdId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HermEqId(pub(crate) usize);

/// A linear/semidefinite program in builder form.
///
/// Constraint conventions:
/// * equalities `expr = 0`,
/// * inequalities `expr ≤ 0`,
/// * PSD constraints `expr ⪰ 0` for Hermitian affine `expr`,
/// * Hermitian equalities `expr = 0` (expanded into `d²` real equalities).
///
/// Duals are reported for the minimisation form (a maximisation is solved as
/// minimising the negated objective). With `y` the equality duals, `z ≥ 0` the
/// inequality duals and `W ⪰ 0` the PSD duals, stationarity reads
/// `c = Σ y·∇eq − Σ z·∇ineq + Σ ∇tr(W·psd)`.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub(crate) kinds: Vec<VarKind>,
    pub(crate) sense: Sense,
    pub(crate) objective: LinExpr,
    pub(crate) eqs: Vec<LinExpr>,
    pub(crate) ineqs: Vec<LinExpr>,
    pub(crate) psd: Vec<HermExpr>,
    pub(crate) herm_eqs: Vec<HermExpr>,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> Self {
        Self {
            kinds: Vec::new(),
            sense: Sense::Minimize,
            objective: LinExpr::zero(),
            eqs: Vec::new(),
            ineqs: Vec::new(),
            psd: Vec::new(),
            herm_eqs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn free_var(&mut self) -> VarId {
        self.kinds.push(VarKind::Free);
        VarId(self.kinds.len() - 1)
    }

    pub fn nonneg_var(&mut self) -> VarId {
        self.kinds.push(VarKind::Nonnegative);
        VarId(self.kinds.len() - 1)
    }

    pub fn free_vars(&mut self, n: usize) -> Vec<VarId> {
        (0..n).map(|_| self.free_var()).collect()
    }

    pub fn nonneg_vars(&mut self, n: usize) -> Vec<VarId> {
        (0..n).map(|_| self.nonneg_var()).collect()
    }

    /// Unconstrained Hermitian matrix variable.
    pub fn hermitian(&mut self, dim: usize) -> HermVar {
        HermVar { dim, vars: self.free_vars(dim * dim) }
    }

    /// Hermitian matrix variable constrained to the PSD cone.
    pub fn hermitian_psd(&mut self, dim: usize) -> (HermVar, PsdId) {
        let v = self.hermitian(dim);
        let id = self.psd.len();
        self.psd.push(v.expr());
        (v, PsdId(id))
    }

    pub fn set_objective(&mut self, sense: Sense, objective: LinExpr) {
        self.sense = sense;
        self.objective = objective;
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_eq(&mut self, lhs: LinExpr, rhs: f64) -> EqId {
        let mut e = lhs;
        e.add_constant(-rhs);
        self.eqs.push(e);
        EqId(self.eqs.len() - 1)
    }

    pub fn add_le(&mut self, lhs: LinExpr, rhs: f64) -> IneqId {
        let mut e = lhs;
        e.add_constant(-rhs);
        self.ineqs.push(e);
        IneqId(self.ineqs.len() - 1)
    }

    pub fn add_ge(&mut self, lhs: LinExpr, rhs: f64) -> IneqId {
        self.add_le(-lhs, -rhs)
    }

    pub fn add_psd(&mut self, expr: HermExpr) -> PsdId {
        self.psd.push(expr);
        PsdId(self.psd.len() - 1)
    }

    /// `expr = rhs` as Hermitian matrices.
    pub fn add_herm_eq(&mut self, expr: HermExpr, rhs: &CMat) -> HermEqId {
        let mut e = expr;
        e.add_constant(&rhs.scale(-1.0));
        self.herm_eqs.push(e);
        HermEqId(self.herm_eqs.len() - 1)
    }

    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        let check = |m: Option<usize>, what: &str| -> Result<(), SolverError> {
            match m {
                Some(i) if i >= n => Err(SolverError::Malformed(format!(
                    "{what} references undeclared variable {i} (have {n})"
                ))),
                _ => Ok(()),
            }
        };
        check(self.objective.max_var(), "objective")?;
        for e in self.eqs.iter().chain(&self.ineqs) {
            check(e.max_var(), "linear constraint")?;
        }
        for e in self.psd.iter().chain(&self.herm_eqs) {
            check(e.max_var(), "matrix constraint")?;
            if e.dim == 0 {
                return Err(SolverError::Malformed("zero-dimensional matrix constraint".into()));
            }
            let herm = |m: &CMat| {
                m.nrows() == e.dim
                    && m.ncols() == e.dim
                    && (m - m.adjoint()).iter().all(|z| z.norm() <= 1e-12 * (1.0 + m.norm()))
            };
            if !herm(&e.constant) || !e.terms.iter().all(|(_, m)| herm(m)) {
                return Err(SolverError::Malformed(
                    "matrix constraint with non-Hermitian or mis-sized coefficient".into(),
                ));
            }
        }
        Ok(())
    }
}
