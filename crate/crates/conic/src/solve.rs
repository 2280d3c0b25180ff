use std::collections::BTreeMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::expr::{CMat, HermExpr, HermVar, LinExpr, VarId};
use crate::problem::{ConicProblem, EqId, HermEqId, IneqId, PsdId, Sense, VarKind};
use crate::SolverError;

/// Tolerance knobs shared by every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Primal/dual feasibility tolerance handed to the backend.
    pub tol_feas: f64,
    /// Absolute and relative duality-gap tolerance handed to the backend.
    pub tol_gap: f64,
    /// Reduced-accuracy terminations are accepted as optimal when gap and
    /// residuals stay below this.
    pub reduced_tol: f64,
    pub max_iter: u32,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_feas: 1e-9, tol_gap: 1e-9, reduced_tol: 1e-6, max_iter: 200, verbose: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

/// Outcome of one solve. Dual values are indexed by the handles returned
/// while building the problem; see [`ConicProblem`] for sign conventions.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub status: Status,
    /// Objective in the problem's own sense.
    pub objective: f64,
    /// Dual objective in the problem's own sense.
    pub dual_objective: f64,
    pub gap: f64,
    /// Largest constraint violation of the returned primal point.
    pub max_residual: f64,
    pub iterations: u32,
    /// True when the backend stopped at reduced accuracy.
    pub reduced_accuracy: bool,
    pub backend_status: String,
    x: Vec<f64>,
    eq_duals: Vec<f64>,
    ineq_duals: Vec<f64>,
    psd_duals: Vec<CMat>,
    herm_eq_duals: Vec<CMat>,
}

impl SolverReport {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn primal(&self) -> &[f64] {
        &self.x
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.x[v.0]
    }

    pub fn eval(&self, e: &LinExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn eval_herm(&self, e: &HermExpr) -> CMat {
        e.eval(&self.x)
    }

    pub fn herm_value(&self, v: &HermVar) -> CMat {
        v.assemble(&self.x)
    }

    pub fn eq_dual(&self, id: EqId) -> f64 {
        self.eq_duals[id.0]
    }

    pub fn ineq_dual(&self, id: IneqId) -> f64 {
        self.ineq_duals[id.0]
    }

    pub fn psd_dual(&self, id: PsdId) -> &CMat {
        &self.psd_duals[id.0]
    }

    pub fn herm_eq_dual(&self, id: HermEqId) -> &CMat {
        &self.herm_eq_duals[id.0]
    }
}

fn svec_index(row: usize, col: usize) -> usize {
    debug_assert!(row <= col);
    col * (col + 1) / 2 + row
}

/// Real symmetric image of a Hermitian matrix: `[[Re, −Im], [Im, Re]]`,
/// or just `Re` when `real` is set.
fn embed(m: &CMat, real: bool) -> DMatrix<f64> {
    let d = m.nrows();
    if real {
        return DMatrix::from_fn(d, d, |i, j| m[(i, j)].re);
    }
    DMatrix::from_fn(2 * d, 2 * d, |i, j| {
        let z = m[(i % d, j % d)];
        match (i < d, j < d) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = vec![0.0; n * (n + 1) / 2];
    for col in 0..n {
        for row in 0..=col {
            let v = m[(row, col)];
            out[svec_index(row, col)] = if row == col { v } else { v * std::f64::consts::SQRT_2 };
        }
    }
    out
}

fn smat(z: &[f64], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for col in 0..n {
        for row in 0..=col {
            let v = z[svec_index(row, col)];
            if row == col {
                m[(row, col)] = v;
            } else {
                m[(row, col)] = v * std::f64::consts::FRAC_1_SQRT_2;
                m[(col, row)] = v * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
    }
    m
}

/// Hermitian `W` with `Re tr(W·H) = ⟨Y, embed(H)⟩` for every Hermitian `H`.
fn unembed_dual(y: &DMatrix<f64>, d: usize, real: bool) -> CMat {
    if real {
        return y.map(|v| Complex64::new(v, 0.0));
    }
    CMat::from_fn(d, d, |i, j| {
        let re = y[(i, j)] + y[(i + d, j + d)];
        let im = y[(i + d, j)] - y[(i, j + d)];
        Complex64::new(re, im)
    })
}

/// Real scalar components of a Hermitian equality: diagonal real parts,
/// then `(Re, Im)` of each strict-upper entry row-major.
fn herm_components(e: &HermExpr) -> Vec<LinExpr> {
    let d = e.dim;
    let merged = e.merged();
    let component = |pick: &dyn Fn(&CMat) -> f64| LinExpr {
        terms: merged.iter().map(|(v, m)| (*v, pick(m))).filter(|&(_, c)| c != 0.0).collect(),
        constant: pick(&e.constant),
    };
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(component(&|m: &CMat| m[(i, i)].re));
    }
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(component(&|m: &CMat| m[(i, j)].re));
            out.push(component(&|m: &CMat| m[(i, j)].im));
        }
    }
    out
}

fn min_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

struct Rows {
    entries: BTreeMap<(usize, usize), f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push_linear(&mut self, e: &LinExpr) {
        let row = self.b.len();
        for (v, c) in e.merged() {
            *self.entries.entry((v.0, row)).or_insert(0.0) += c;
        }
        self.b.push(-e.constant);
    }
}

/// Solves `problem`. Backend construction failures and malformed problems
/// are errors; everything the backend reports (including numerical trouble)
/// comes back as a [`SolverReport`] status.
pub fn solve(problem: &ConicProblem, settings: &SolverSettings) -> Result<SolverReport, SolverError> {
    problem.validate()?;
    let n = problem.num_vars();
    let mut rows = Rows { entries: BTreeMap::new(), b: Vec::new() };
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    // Zero cone: scalar equalities then expanded Hermitian equalities.
    for e in &problem.eqs {
        rows.push_linear(e);
    }
    let mut herm_eq_rows = Vec::with_capacity(problem.herm_eqs.len());
    for e in &problem.herm_eqs {
        let start = rows.b.len();
        for comp in herm_components(e) {
            rows.push_linear(&comp);
        }
        herm_eq_rows.push(start);
    }
    let n_zero = rows.b.len();
    if n_zero > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_zero));
    }

    // Nonnegative cone: s = −expr for `expr ≤ 0`, then variable bounds.
    let ineq_start = rows.b.len();
    for e in &problem.ineqs {
        rows.push_linear(e);
    }
    for (i, kind) in problem.kinds.iter().enumerate() {
        if *kind == VarKind::Nonnegative {
            rows.push_linear(&LinExpr::term(VarId(i), -1.0));
        }
    }
    let n_nonneg = rows.b.len() - ineq_start;
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }

    // PSD cones on the (possibly embedded) constraint matrices.
    let mut psd_layout = Vec::with_capacity(problem.psd.len());
    for e in &problem.psd {
        let real = e.is_real();
        let size = if real { e.dim } else { 2 * e.dim };
        let start = rows.b.len();
        rows.b.extend(svec(&embed(&e.constant, real)));
        for (v, m) in e.merged() {
            for (k, val) in svec(&embed(&m, real)).into_iter().enumerate() {
                if val != 0.0 {
                    *rows.entries.entry((v.0, start + k)).or_insert(0.0) -= val;
                }
            }
        }
        cones.push(SupportedConeT::PSDTriangleConeT(size));
        psd_layout.push((start, size, real));
    }

    let m = rows.b.len();
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(rows.entries.len());
    let mut nzval = Vec::with_capacity(rows.entries.len());
    for (&(col, row), &val) in &rows.entries {
        if val == 0.0 {
            continue;
        }
        colptr[col + 1] += 1;
        rowval.push(row);
        nzval.push(val);
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    let a = CscMatrix::new(m, n, colptr, rowval, nzval);
    let p = CscMatrix::zeros((n, n));

    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let offset = problem.objective.constant_part();
    let mut q = vec![0.0; n];
    for (v, c) in problem.objective.merged() {
        q[v.0] = sign * c;
    }

    let backend_settings = DefaultSettingsBuilder::default()
        .tol_feas(settings.tol_feas)
        .tol_gap_abs(settings.tol_gap)
        .tol_gap_rel(settings.tol_gap)
        .max_iter(settings.max_iter)
        .verbose(settings.verbose)
        .max_threads(1)
        .chordal_decomposition_enable(false)
        .build()
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;

    let mut solver = DefaultSolver::new(&p, &q, &a, &rows.b, &cones, backend_settings)
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let info = &solver.info;
    let x = sol.x.clone();
    let z = &sol.z;

    let eq_duals: Vec<f64> = (0..problem.eqs.len()).map(|i| -z[i]).collect();
    let herm_eq_duals = problem
        .herm_eqs
        .iter()
        .zip(&herm_eq_rows)
        .map(|(e, &start)| {
            let d = e.dim;
            let y = |k: usize| -z[start + k];
            let mut w = CMat::zeros(d, d);
            for i in 0..d {
                w[(i, i)] = Complex64::new(y(i), 0.0);
            }
            let mut k = d;
            for i in 0..d {
                for j in (i + 1)..d {
                    let val = Complex64::new(y(k) / 2.0, y(k + 1) / 2.0);
                    w[(i, j)] = val;
                    w[(j, i)] = val.conj();
                    k += 2;
                }
            }
            w
        })
        .collect();
    let ineq_duals: Vec<f64> =
        (0..problem.ineqs.len()).map(|i| z[ineq_start + i]).collect();
    let psd_duals = problem
        .psd
        .iter()
        .zip(&psd_layout)
        .map(|(e, &(start, size, real))| {
            let y = smat(&z[start..start + size * (size + 1) / 2], size);
            unembed_dual(&y, e.dim, real)
        })
        .collect();

    let max_residual = residual(problem, &x);
    let gap = (sol.obj_val - sol.obj_val_dual).abs();
    let (status, reduced) = match sol.status {
        SolverStatus::Solved => (Status::Optimal, false),
        SolverStatus::AlmostSolved
            if gap <= settings.reduced_tol * (1.0 + sol.obj_val.abs())
                && max_residual <= settings.reduced_tol
                && info.res_dual <= settings.reduced_tol =>
        {
            (Status::Optimal, true)
        }
        SolverStatus::PrimalInfeasible => (Status::Infeasible, false),
        SolverStatus::AlmostPrimalInfeasible => (Status::Infeasible, true),
        SolverStatus::DualInfeasible => (Status::Unbounded, false),
        SolverStatus::AlmostDualInfeasible => (Status::Unbounded, true),
        _ => (Status::NumericalFailure, true),
    };

    Ok(SolverReport {
        status,
        objective: sign * sol.obj_val + offset,
        dual_objective: sign * sol.obj_val_dual + offset,
        gap,
        max_residual,
        iterations: sol.iterations,
        reduced_accuracy: reduced,
        backend_status: format!("{:?} (res_primal {:.1e}, res_dual {:.1e})", sol.status, info.res_primal, info.res_dual),
        x,
        eq_duals,
        ineq_duals,
        psd_duals,
        herm_eq_duals,
    })
}

fn residual(problem: &ConicProblem, x: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for e in &problem.eqs {
        r = r.max(e.eval(x).abs());
    }
    for e in &problem.ineqs {
        r = r.max(e.eval(x));
    }
    for (i, kind) in problem.kinds.iter().enumerate() {
        if *kind == VarKind::Nonnegative {
            r = r.max(-x[i]);
        }
    }
    for e in &problem.herm_eqs {
        r = r.max(e.eval(x).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    for e in &problem.psd {
        r = r.max(-min_eigenvalue(&e.eval(x)));
    }
    r
}
