//! Signalling in assemblages: the guessing probability of Alice's setting
//! from Bob's reduced states.

use serde::{Deserialize, Serialize};
use sigcert_conic::{solve, ConicProblem, HermExpr, LinExpr, Sense, SolverSettings};

use crate::error::{Error, Result};
use crate::qlinalg::{trace_norm, Assemblage, CMat, HermitianOp};
use crate::require_optimal;

/// Primal and dual optima may differ by at most this much.
pub const MAX_GAP: f64 = 1e-5;
/// Input states must have unit trace within this tolerance.
pub const TRACE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GuessingResult {
    /// Guessing probability (dual optimum, clamped to `[1/m, 1]`).
    pub pg: f64,
    /// Optimal measurement `N_x`.
    pub povm: Vec<HermitianOp>,
    /// Optimal dual operator `Z ⪰ ρ_x/m`.
    #[serde(rename = "dualZ")]
    pub dual_z: HermitianOp,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

fn validate_states(states: &[HermitianOp]) -> Result<usize> {
    let d = states.first().map(HermitianOp::dim).ok_or_else(|| Error::InvalidArgs("no states given".into()))?;
    for (i, rho) in states.iter().enumerate() {
        if rho.dim() != d {
            return Err(Error::DimensionMismatch(format!("state {i} has dimension {}, expected {d}", rho.dim())));
        }
        if (rho.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgs(format!("state {i} has trace {}", rho.trace())));
        }
        let min = rho.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(d)
}

/// `max (1/m) Σ_x tr(N_x ρ_x)` over POVMs `{N_x}`, solved together with the
/// dual `min tr Z` s.t. `Z ⪰ ρ_x/m`.
pub fn guessing_probability(states: &[HermitianOp], settings: &SolverSettings) -> Result<GuessingResult> {
    let d = validate_states(states)?;
    let m = states.len() as f64;

    let mut primal = ConicProblem::new();
    let mut sum = HermExpr::zero(d);
    let mut objective = LinExpr::zero();
    let mut ns = Vec::with_capacity(states.len());
    for rho in states {
        let (n, _) = primal.hermitian_psd(d);
        sum += n.expr();
        objective += n.expr().inner(rho.matrix()) * (1.0 / m);
        ns.push(n);
    }
    primal.add_herm_eq(sum, &CMat::identity(d, d));
    primal.set_objective(Sense::Maximize, objective);
    let p_rep = solve(&primal, settings)?;
    require_optimal(&p_rep, "guessing probability (primal)")?;

    let mut dual = ConicProblem::new();
    let z = dual.hermitian(d);
    for rho in states {
        dual.add_psd(z.expr() - HermExpr::constant(rho.matrix().scale(1.0 / m)));
    }
    dual.set_objective(Sense::Minimize, z.trace());
    let d_rep = solve(&dual, settings)?;
    require_optimal(&d_rep, "guessing probability (dual)")?;

    let gap = (p_rep.objective - d_rep.objective).abs();
    if gap > MAX_GAP {
        return Err(Error::SolverFailure {
            status: p_rep.status,
            detail: format!(
                "guessing probability primal {} and dual {} differ by {gap:.3e}",
                p_rep.objective, d_rep.objective
            ),
        });
    }
    let povm = ns
        .iter()
        .map(|n| HermitianOp::with_tolerance(p_rep.herm_value(n), 1e-9))
        .collect::<Result<Vec<_>>>()?;
    let dual_z = HermitianOp::with_tolerance(d_rep.herm_value(&z), 1e-9)?;
    Ok(GuessingResult {
        pg: d_rep.objective.clamp(1.0 / m, 1.0),
        povm,
        dual_z,
        primal: p_rep.objective,
        dual: d_rep.objective,
        gap,
    })
}

/// `½ + ½‖½ρ₁ − ½ρ₂‖₁`.
pub fn helstrom(rho1: &HermitianOp, rho2: &HermitianOp) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(format!("dimensions {} and {} differ", rho1.dim(), rho2.dim())));
    }
    let diff = (rho1.matrix() - rho2.matrix()).scale(0.5);
    Ok(0.5 + 0.5 * trace_norm(&diff))
}

/// Guessing probability of the reduced states `μ_x = Σ_a σ_{a|x}`.
pub fn gamma_from_assemblage(assemblage: &Assemblage, settings: &SolverSettings) -> Result<f64> {
    Ok(guessing_probability(&assemblage.reduced_states(), settings)?.pg)
}

/// Guessing probability of reduced states, using the Helstrom closed form
/// for two settings and the SDP otherwise.
pub fn gamma_closed_form_or_sdp(assemblage: &Assemblage, settings: &SolverSettings) -> Result<f64> {
    let mus = assemblage.reduced_states();
    match mus.as_slice() {
        [m1, m2] => helstrom(m1, m2),
        _ => gamma_from_assemblage(assemblage, settings),
    }
}
