//! Signalling local hidden-state (SLHS_γ) models: membership, generalised
//! and white-noise robustness, and the decomposition of members into an
//! LHS part and a signalling part.
//!
//! Hidden states are indexed by the deterministic response functions
//! `λ: x ↦ a`. Every SDP shares the block
//! `σ̃_{λ,x} ⪰ 0`, `tr σ̃_{λ,x} = p_λ`, `Z_λ ⪰ σ̃_{λ,x}/mA`,
//! where `Σ_λ tr Z_λ` is the averaged guessing probability of the hidden
//! states.

use serde::{Deserialize, Serialize};
use sigcert_conic::{solve, ConicProblem, HermExpr, HermVar, LinExpr, Sense, SolverReport, SolverSettings, VarId};

use crate::error::{Error, Result};
use crate::qlinalg::{Assemblage, CMat, HermitianOp};
use crate::require_optimal;
use crate::signalling::gamma_from_assemblage;

/// Default cap on the number of response functions.
pub const DEFAULT_RESPONSE_CAP: u64 = 1 << 16;
/// Membership holds when the optimum is at most `γ + FEASIBILITY_TOL`.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Robustness values at or below this count as zero.
pub const ZERO_ROBUSTNESS_TOL: f64 = 1e-6;

/// All `nA^mA` maps `x ↦ a` in lexicographic order of `(λ(0), …, λ(mA−1))`.
pub fn enumerate_response_functions(m_a: usize, n_a: usize) -> Result<Vec<Vec<usize>>> {
    enumerate_response_functions_with_cap(m_a, n_a, DEFAULT_RESPONSE_CAP)
}

pub fn enumerate_response_functions_with_cap(m_a: usize, n_a: usize, cap: u64) -> Result<Vec<Vec<usize>>> {
    if m_a == 0 || n_a == 0 {
        return Err(Error::InvalidArgs("settings and outcomes must be positive".into()));
    }
    let count = u32::try_from(m_a)
        .ok()
        .and_then(|m| (n_a as u128).checked_pow(m))
        .ok_or(Error::TooLarge { count: u128::MAX, cap })?;
    if count > cap as u128 {
        return Err(Error::TooLarge { count, cap });
    }
    Ok((0..count as usize)
        .map(|mut l| {
            let mut f = vec![0; m_a];
            for x in (0..m_a).rev() {
                f[x] = l % n_a;
                l /= n_a;
            }
            f
        })
        .collect())
}

fn check_gamma(gamma: f64, m_a: usize) -> Result<()> {
    let lower = 1.0 / m_a as f64;
    if !(gamma >= lower - 1e-9 && gamma <= 1.0 + 1e-9) {
        return Err(Error::InvalidGamma { gamma, lower });
    }
    Ok(())
}

/// Hidden-state variables shared by every SLHS program.
struct HiddenModel {
    lambdas: Vec<Vec<usize>>,
    /// `[λ][x]`
    sigma: Vec<Vec<HermVar>>,
    z: Vec<HermVar>,
    p: Vec<VarId>,
}

impl HiddenModel {
    fn build(prob: &mut ConicProblem, m_a: usize, n_a: usize, dim: usize) -> Result<Self> {
        let lambdas = enumerate_response_functions(m_a, n_a)?;
        let mut sigma = Vec::with_capacity(lambdas.len());
        let mut z = Vec::with_capacity(lambdas.len());
        let mut p = Vec::with_capacity(lambdas.len());
        for _ in &lambdas {
            let zl = prob.hermitian(dim);
            let pl = prob.free_var();
            let mut row = Vec::with_capacity(m_a);
            for _ in 0..m_a {
                let (s, _) = prob.hermitian_psd(dim);
                prob.add_eq(s.trace() - pl.into(), 0.0);
                prob.add_psd(zl.expr() - s.expr() * (1.0 / m_a as f64));
                row.push(s);
            }
            sigma.push(row);
            z.push(zl);
            p.push(pl);
        }
        Ok(Self { lambdas, sigma, z, p })
    }

    /// `Σ_{λ: λ(x)=a} σ̃_{λ,x}`.
    fn marginal(&self, a: usize, x: usize, dim: usize) -> HermExpr {
        let mut e = HermExpr::zero(dim);
        for (l, f) in self.lambdas.iter().enumerate() {
            if f[x] == a {
                e += self.sigma[l][x].expr();
            }
        }
        e
    }

    fn total_z_trace(&self) -> LinExpr {
        self.z.iter().fold(LinExpr::zero(), |acc, z| acc + z.trace())
    }

    /// Reads the hidden model back, scaled by `scale`.
    fn extract(&self, rep: &SolverReport, scale: f64) -> Result<(Vec<Vec<HermitianOp>>, Vec<HermitianOp>, Vec<f64>)> {
        let herm = |v: &HermVar| HermitianOp::with_tolerance(rep.herm_value(v).scale(scale), 1e-9);
        let hidden = self
            .sigma
            .iter()
            .map(|row| row.iter().map(herm).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let z = self.z.iter().map(herm).collect::<Result<Vec<_>>>()?;
        let p = self.p.iter().map(|&v| rep.value(v) * scale).collect();
        Ok((hidden, z, p))
    }
}

/// Operators `F_{a|x}` with `Σ tr(F_{a|x} σ'_{a|x}) ≤ γ` for every SLHS_γ
/// assemblage `σ'`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlhsWitness {
    /// `[x][a]`
    pub operators: Vec<Vec<HermitianOp>>,
    /// Value on the tested assemblage.
    pub value: f64,
}

impl SlhsWitness {
    pub fn evaluate(&self, assemblage: &Assemblage) -> f64 {
        self.operators
            .iter()
            .enumerate()
            .map(|(x, row)| row.iter().enumerate().map(|(a, f)| f.inner(assemblage.sigma(a, x))).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlhsCertificate {
    pub feasible: bool,
    pub gamma: f64,
    /// `Σ_λ tr Z_λ` at the optimum.
    pub objective: f64,
    /// Response functions indexing the hidden states.
    pub lambdas: Vec<Vec<usize>>,
    /// `σ̃_{λ,x}`, `[λ][x]`
    #[serde(rename = "hiddenStates")]
    pub hidden_states: Vec<Vec<HermitianOp>>,
    /// `Z_λ`
    #[serde(rename = "zOps")]
    pub z_ops: Vec<HermitianOp>,
    #[serde(rename = "pLambda")]
    pub p_lambda: Vec<f64>,
    pub witness: Option<SlhsWitness>,
}

/// Residuals of a certificate against the invariants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    /// `max ‖Σ_λ D(a|x,λ) σ̃_{λ,x} − σ_{a|x}‖`
    pub reconstruction_error: f64,
    pub z_trace: f64,
    /// Smallest eigenvalue over all `Z_λ − σ̃_{λ,x}/mA`.
    pub min_z_gap_eigenvalue: f64,
    /// Smallest eigenvalue over all `σ̃_{λ,x}`.
    pub min_hidden_eigenvalue: f64,
    /// `max |tr σ̃_{λ,x} − p_λ|`
    pub weight_error: f64,
}

impl SlhsCertificate {
    /// `Σ_λ D(a|x,λ) σ̃_{λ,x}`, `[x][a]`.
    pub fn reconstruct(&self) -> Vec<Vec<CMat>> {
        let m_a = self.lambdas.first().map_or(0, Vec::len);
        let dim = self.z_ops.first().map_or(0, HermitianOp::dim);
        let n_a = self.lambdas.iter().flatten().max().map_or(0, |m| m + 1);
        (0..m_a)
            .map(|x| {
                (0..n_a)
                    .map(|a| {
                        self.lambdas
                            .iter()
                            .zip(&self.hidden_states)
                            .filter(|(f, _)| f[x] == a)
                            .fold(CMat::zeros(dim, dim), |acc, (_, h)| acc + h[x].matrix())
                    })
                    .collect()
            })
            .collect()
    }

    pub fn check(&self, assemblage: &Assemblage) -> CertificateCheck {
        let m_a = assemblage.m_a() as f64;
        let rec = self.reconstruct();
        let mut reconstruction_error: f64 = 0.0;
        for (x, row) in rec.iter().enumerate() {
            for a in 0..assemblage.n_a() {
                let target = assemblage.sigma(a, x).matrix();
                let got = row.get(a).cloned().unwrap_or_else(|| CMat::zeros(target.nrows(), target.ncols()));
                reconstruction_error = reconstruction_error.max((got - target).norm());
            }
        }
        let mut min_gap = f64::INFINITY;
        let mut min_hidden = f64::INFINITY;
        let mut weight_error: f64 = 0.0;
        for ((row, z), p) in self.hidden_states.iter().zip(&self.z_ops).zip(&self.p_lambda) {
            for h in row {
                min_gap = min_gap.min((z - &h.scale(1.0 / m_a)).min_eigenvalue());
                min_hidden = min_hidden.min(h.min_eigenvalue());
                weight_error = weight_error.max((h.trace() - p).abs());
            }
        }
        CertificateCheck {
            reconstruction_error,
            z_trace: self.z_ops.iter().map(HermitianOp::trace).sum(),
            min_z_gap_eigenvalue: min_gap,
            min_hidden_eigenvalue: min_hidden,
            weight_error,
        }
    }
}

/// `min Σ_λ tr Z_λ` subject to the hidden model reproducing `σ`; the
/// assemblage is in SLHS_γ iff the optimum is at most `γ`. The duals of the
/// reproduction constraints form an [`SlhsWitness`] whose value on `σ` equals
/// the optimum.
pub fn slhs_membership(assemblage: &Assemblage, gamma: f64, settings: &SolverSettings) -> Result<SlhsCertificate> {
    let (m_a, n_a, dim) = (assemblage.m_a(), assemblage.n_a(), assemblage.dim());
    check_gamma(gamma, m_a)?;
    let mut prob = ConicProblem::new();
    let model = HiddenModel::build(&mut prob, m_a, n_a, dim)?;
    let mut eqs = Vec::with_capacity(m_a);
    for x in 0..m_a {
        let row = (0..n_a)
            .map(|a| prob.add_herm_eq(model.marginal(a, x, dim), assemblage.sigma(a, x).matrix()))
            .collect::<Vec<_>>();
        eqs.push(row);
    }
    prob.set_objective(Sense::Minimize, model.total_z_trace());
    let rep = solve(&prob, settings)?;
    require_optimal(&rep, "SLHS membership SDP")?;

    let operators = eqs
        .iter()
        .map(|row| row.iter().map(|&id| HermitianOp::with_tolerance(rep.herm_eq_dual(id).clone(), 1e-8)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let mut witness = SlhsWitness { operators, value: 0.0 };
    witness.value = witness.evaluate(assemblage);

    let (hidden_states, z_ops, p_lambda) = model.extract(&rep, 1.0)?;
    Ok(SlhsCertificate {
        feasible: rep.objective <= gamma + FEASIBILITY_TOL,
        gamma,
        objective: rep.objective,
        lambdas: model.lambdas,
        hidden_states,
        z_ops,
        p_lambda,
        witness: Some(witness),
    })
}

/// `σ = (1+t)·σ^LHS − t·τ` built from a certificate: `t = mA·Σ tr Z_λ − 1`,
/// `σ^LHS_{a|x} = Σ_λ D(a|x,λ) Z_λ / Σ tr Z_λ` and
/// `τ_{a|x} = Σ_λ D(a|x,λ)(mA·Z_λ − σ̃_{λ,x})/t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub t: f64,
    pub lhs: Assemblage,
    /// Absent when `t` is numerically zero.
    pub tau: Option<Assemblage>,
}

pub fn decomposition(cert: &SlhsCertificate) -> Result<Decomposition> {
    let m_a = cert.lambdas.first().map_or(0, Vec::len);
    let n_a = cert.lambdas.iter().flatten().max().map_or(0, |m| m + 1);
    let dim = cert.z_ops.first().map_or(0, HermitianOp::dim);
    let z_trace: f64 = cert.z_ops.iter().map(HermitianOp::trace).sum();
    if !(z_trace > 0.0) {
        return Err(Error::InvalidAssemblage("certificate has vanishing hidden-state weight".into()));
    }
    let t = m_a as f64 * z_trace - 1.0;
    let mf = m_a as f64;
    let build = |f: &dyn Fn(usize, usize) -> CMat| -> Vec<Vec<HermitianOp>> {
        (0..m_a)
            .map(|x| {
                (0..n_a)
                    .map(|a| {
                        let m = cert
                            .lambdas
                            .iter()
                            .enumerate()
                            .filter(|(_, lam)| lam[x] == a)
                            .fold(CMat::zeros(dim, dim), |acc, (l, _)| acc + f(l, x));
                        HermitianOp::with_tolerance(m, 1e-9).expect("sums of Hermitian operators")
                    })
                    .collect()
            })
            .collect()
    };
    let lhs = Assemblage::with_tolerance(build(&|l, _| cert.z_ops[l].matrix().scale(1.0 / z_trace)), 1e-6)?;
    let tau = if t > 1e-7 {
        let table = build(&|l, x| (cert.z_ops[l].matrix().scale(mf) - cert.hidden_states[l][x].matrix()).scale(1.0 / t));
        Some(Assemblage::with_tolerance(table, 1e-5)?)
    } else {
        None
    };
    Ok(Decomposition { t, lhs, tau })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub value: f64,
    /// Normalised SLHS_γ model of `(σ + r·τ)/(1 + r)`.
    pub certificate: SlhsCertificate,
    /// Optimal noise `τ = (σ̄ − σ)/r`; absent when `r` is numerically zero.
    #[serde(rename = "noiseAssemblage")]
    pub noise_assemblage: Option<Assemblage>,
}

enum Noise<'a> {
    /// `σ̄_{a|x} − σ_{a|x} ⪰ 0`
    Arbitrary,
    /// `σ̄_{a|x} = σ_{a|x} + ε·𝟙/(d·nA)`
    White(&'a mut Option<VarId>),
}

/// Barred-variable program: `min (1/mA) Σ_{a,x} tr σ̄_{a|x} − 1` with
/// `Σ_λ tr Z̄_λ ≤ γ·(1/mA) Σ_{a,x} tr σ̄_{a|x}` and the chosen noise
/// constraint.
fn robustness_program(
    assemblage: &Assemblage,
    gamma: f64,
    noise: Noise<'_>,
) -> Result<(ConicProblem, HiddenModel)> {
    let (m_a, n_a, dim) = (assemblage.m_a(), assemblage.n_a(), assemblage.dim());
    check_gamma(gamma, m_a)?;
    let mut prob = ConicProblem::new();
    let model = HiddenModel::build(&mut prob, m_a, n_a, dim)?;
    let mut total_trace = LinExpr::zero();
    let eps = match noise {
        Noise::White(slot) => {
            let e = prob.nonneg_var();
            *slot = Some(e);
            Some(e)
        }
        Noise::Arbitrary => None,
    };
    let white = CMat::identity(dim, dim).scale(1.0 / (dim * n_a) as f64);
    for x in 0..m_a {
        for a in 0..n_a {
            let bar = model.marginal(a, x, dim);
            total_trace += bar.trace();
            match eps {
                Some(e) => {
                    let mut rhs = HermExpr::constant(assemblage.sigma(a, x).matrix().clone());
                    rhs.add_term(e, white.clone());
                    prob.add_herm_eq(bar - rhs, &CMat::zeros(dim, dim));
                }
                None => {
                    prob.add_psd(bar - HermExpr::constant(assemblage.sigma(a, x).matrix().clone()));
                }
            }
        }
    }
    let scaled = total_trace * (1.0 / m_a as f64);
    prob.add_le(model.total_z_trace() - scaled.clone() * gamma, 0.0);
    prob.set_objective(Sense::Minimize, scaled - LinExpr::constant(1.0));
    Ok((prob, model))
}

fn certificate_from(model: HiddenModel, rep: &SolverReport, gamma: f64, r: f64) -> Result<SlhsCertificate> {
    let scale = 1.0 / (1.0 + r);
    let (hidden_states, z_ops, p_lambda) = model.extract(rep, scale)?;
    let objective = z_ops.iter().map(HermitianOp::trace).sum();
    Ok(SlhsCertificate {
        feasible: true,
        gamma,
        objective,
        lambdas: model.lambdas,
        hidden_states,
        z_ops,
        p_lambda,
        witness: None,
    })
}

/// Smallest `r ≥ 0` such that `(σ + r·τ)/(1 + r)` is in SLHS_γ for some
/// assemblage `τ`.
pub fn slhs_robustness(assemblage: &Assemblage, gamma: f64, settings: &SolverSettings) -> Result<RobustnessResult> {
    let (prob, model) = robustness_program(assemblage, gamma, Noise::Arbitrary)?;
    let rep = solve(&prob, settings)?;
    require_optimal(&rep, "SLHS robustness SDP")?;
    let r = rep.objective.max(0.0);
    let dim = assemblage.dim();

    let noise_assemblage = if r > ZERO_ROBUSTNESS_TOL {
        let mut table = Vec::with_capacity(assemblage.m_a());
        for x in 0..assemblage.m_a() {
            let mut row = Vec::with_capacity(assemblage.n_a());
            for a in 0..assemblage.n_a() {
                let bar = rep.eval_herm(&model.marginal(a, x, dim));
                let tau = (bar - assemblage.sigma(a, x).matrix()).scale(1.0 / r);
                row.push(HermitianOp::with_tolerance(tau, 1e-6)?);
            }
            table.push(row);
        }
        Assemblage::with_tolerance(table, 1e-4).ok()
    } else {
        None
    };
    let certificate = certificate_from(model, &rep, gamma, r)?;
    Ok(RobustnessResult { value: r, certificate, noise_assemblage })
}

/// Smallest `ε ≥ 0` such that `(σ_{a|x} + ε·𝟙/(d·nA))/(1 + ε)` is in SLHS_γ.
pub fn slhs_white_noise_robustness(assemblage: &Assemblage, gamma: f64, settings: &SolverSettings) -> Result<f64> {
    let mut eps = None;
    let (prob, _) = robustness_program(assemblage, gamma, Noise::White(&mut eps))?;
    let rep = solve(&prob, settings)?;
    require_optimal(&rep, "SLHS white-noise robustness SDP")?;
    let e = eps.expect("white-noise variable is created");
    Ok(rep.value(e).max(0.0))
}

/// Bisection on `[0, 1]` for the largest `v` at which `robust(v)` is zero
/// (within [`ZERO_ROBUSTNESS_TOL`]), assuming monotonicity in `v`. Stops
/// after `max_iter` halvings or once the bracket is below `tol`.
pub fn critical_visibility(
    mut robust: impl FnMut(f64) -> Result<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, 1.0);
    if robust(hi)? <= ZERO_ROBUSTNESS_TOL {
        return Ok(1.0);
    }
    for _ in 0..max_iter {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if robust(mid)? <= ZERO_ROBUSTNESS_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Defaults for [`critical_visibility`].
pub const BISECTION_ITERATIONS: usize = 40;
pub const BISECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table1Report {
    #[serde(rename = "Pg")]
    pub pg: f64,
    #[serde(rename = "SR")]
    pub sr: f64,
    #[serde(rename = "SR_whitenoise")]
    pub sr_whitenoise: f64,
    pub gamma: f64,
    pub status: String,
}

/// Guessing probability, robustness and white-noise robustness with
/// `γ = P_g` of the assemblage's reduced states.
pub fn table1_pipeline(assemblage: &Assemblage, settings: &SolverSettings) -> Result<Table1Report> {
    let m_a = assemblage.m_a() as f64;
    let pg = gamma_from_assemblage(assemblage, settings)?;
    let gamma = pg.clamp(1.0 / m_a, 1.0);
    let sr = slhs_robustness(assemblage, gamma, settings)?.value;
    let sr_whitenoise = slhs_white_noise_robustness(assemblage, gamma, settings)?;
    Ok(Table1Report { pg, sr, sr_whitenoise, gamma, status: "optimal".into() })
}
