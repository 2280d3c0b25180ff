//! Linear steering witnesses `L = Σ_{a,x} tr(σ_{a|x} W_{a|x})`, their
//! signalling-adjusted bounds, and Schmidt-number certification with the
//! transposed-MUB witness.

use serde::{Deserialize, Serialize};
use sigcert_conic::SolverSettings;

use crate::error::{Error, Result};
use crate::qlinalg::{basis_measurement, computational_basis, fourier_basis, Assemblage, HermitianOp, PSD_TOL};
use crate::signalling::gamma_closed_form_or_sdp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WitnessFile", into = "WitnessFile")]
pub struct SteeringWitness {
    /// `W_{a|x}`, stored `[x][a]`
    operators: Vec<Vec<HermitianOp>>,
    pub lhs_bound: f64,
    /// `L_{SN≤n}` at index `n − 1`.
    pub schmidt_bounds: Option<Vec<f64>>,
}

impl SteeringWitness {
    pub fn new(operators: Vec<Vec<HermitianOp>>, lhs_bound: f64, schmidt_bounds: Option<Vec<f64>>) -> Result<Self> {
        let n_a = operators.first().map_or(0, Vec::len);
        let dim = operators.first().and_then(|r| r.first()).map_or(0, HermitianOp::dim);
        if operators.is_empty() || n_a == 0 {
            return Err(Error::InvalidArgs("witness has no operators".into()));
        }
        for (x, row) in operators.iter().enumerate() {
            if row.len() != n_a {
                return Err(Error::DimensionMismatch(format!("witness setting {x} has {} outcomes", row.len())));
            }
            for (a, w) in row.iter().enumerate() {
                if w.dim() != dim {
                    return Err(Error::DimensionMismatch(format!("W({a}|{x}) has dimension {}", w.dim())));
                }
                if !w.is_psd(PSD_TOL) {
                    return Err(Error::NotPsd(w.min_eigenvalue()));
                }
            }
        }
        Ok(Self { operators, lhs_bound, schmidt_bounds })
    }

    pub fn operator(&self, a: usize, x: usize) -> &HermitianOp {
        &self.operators[x][a]
    }

    pub fn m_a(&self) -> usize {
        self.operators.len()
    }

    pub fn n_a(&self) -> usize {
        self.operators[0].len()
    }

    pub fn dim(&self) -> usize {
        self.operators[0][0].dim()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct WitnessFile {
    #[serde(rename = "mA")]
    m_a: usize,
    #[serde(rename = "nA")]
    n_a: usize,
    dim: usize,
    operators: Vec<Vec<HermitianOp>>,
    #[serde(rename = "L_LHS")]
    lhs_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schmidt_bounds: Option<Vec<f64>>,
}

impl TryFrom<WitnessFile> for SteeringWitness {
    type Error = Error;
    fn try_from(f: WitnessFile) -> Result<Self> {
        let w = SteeringWitness::new(f.operators, f.lhs_bound, f.schmidt_bounds)?;
        if (w.m_a(), w.n_a(), w.dim()) != (f.m_a, f.n_a, f.dim) {
            return Err(Error::InvalidArgs("witness header disagrees with operator table".into()));
        }
        Ok(w)
    }
}

impl From<SteeringWitness> for WitnessFile {
    fn from(w: SteeringWitness) -> Self {
        WitnessFile {
            m_a: w.m_a(),
            n_a: w.n_a(),
            dim: w.dim(),
            operators: w.operators,
            lhs_bound: w.lhs_bound,
            schmidt_bounds: w.schmidt_bounds,
        }
    }
}

/// `Σ_{a,x} tr(σ_{a|x} W_{a|x})`.
pub fn evaluate_witness(assemblage: &Assemblage, witness: &SteeringWitness) -> Result<f64> {
    if (assemblage.m_a(), assemblage.n_a(), assemblage.dim()) != (witness.m_a(), witness.n_a(), witness.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "assemblage (mA={}, nA={}, d={}) and witness (mA={}, nA={}, d={}) differ",
            assemblage.m_a(),
            assemblage.n_a(),
            assemblage.dim(),
            witness.m_a(),
            witness.n_a(),
            witness.dim()
        )));
    }
    let mut total = 0.0;
    for x in 0..witness.m_a() {
        for a in 0..witness.n_a() {
            total += assemblage.sigma(a, x).inner(witness.operator(a, x));
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMode {
    /// `L·(1 + max(0, mA·γ − 1))`; reduces to `L` at `γ = 1/mA`.
    #[default]
    Tight,
    /// `L·(1 + mA·γ)`.
    Paper,
}

impl std::str::FromStr for AdjustMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight" => Ok(AdjustMode::Tight),
            "paper" => Ok(AdjustMode::Paper),
            other => Err(Error::InvalidArgs(format!("unknown adjustment mode {other:?}"))),
        }
    }
}

/// Bound of a witness over SLHS_γ assemblages given its LHS bound.
pub fn adjusted_bound(lhs_bound: f64, m_a: usize, gamma: f64, mode: AdjustMode) -> Result<f64> {
    if m_a == 0 {
        return Err(Error::InvalidArgs("mA must be positive".into()));
    }
    let lower = 1.0 / m_a as f64;
    if !(gamma >= lower - 1e-9 && gamma <= 1.0 + 1e-9) {
        return Err(Error::InvalidGamma { gamma, lower });
    }
    let mg = m_a as f64 * gamma;
    Ok(match mode {
        AdjustMode::Tight => lhs_bound * (1.0 + (mg - 1.0).max(0.0)),
        AdjustMode::Paper => lhs_bound * (1.0 + mg),
    })
}

/// `L_{SN≤n} = (1 + 1/√d)(1 + (√n − 1)/(√n + 1))`.
pub fn schmidt_bound(d: usize, n: usize) -> Result<f64> {
    if d == 0 || n == 0 || n > d {
        return Err(Error::InvalidArgs(format!("need 1 ≤ n ≤ d, got d={d}, n={n}")));
    }
    let (df, rn) = (d as f64, (n as f64).sqrt());
    Ok((1.0 + 1.0 / df.sqrt()) * (1.0 + (rn - 1.0) / (rn + 1.0)))
}

/// `W_{a|x}` = transposed projectors of the computational (x = 0) and
/// Fourier (x = 1) bases, with `L_LHS = L_{SN≤1}`.
pub fn mub_witness(d: usize) -> Result<SteeringWitness> {
    let operators = [computational_basis(d), fourier_basis(d)]
        .iter()
        .map(|b| basis_measurement(b).iter().map(HermitianOp::transpose).collect())
        .collect();
    let bounds = (1..=d).map(|n| schmidt_bound(d, n)).collect::<Result<Vec<_>>>()?;
    SteeringWitness::new(operators, bounds[0], Some(bounds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub value: f64,
    pub gamma: f64,
    pub mode: AdjustMode,
    /// Unadjusted `L_{SN≤n}`.
    pub bounds: Vec<f64>,
    pub adjusted_bounds: Vec<f64>,
    /// Largest Schmidt number certified, or `None` if not even entanglement
    /// is certified.
    #[serde(rename = "certifiedSN")]
    pub certified_sn: Option<usize>,
    #[serde(rename = "adjustedCertifiedSN")]
    pub adjusted_certified_sn: Option<usize>,
}

/// Schmidt number `n + 1` is certified when the value exceeds `L_{SN≤n}`.
fn certified(value: f64, bounds: &[f64]) -> Option<usize> {
    let beaten = bounds.iter().take_while(|&&b| value > b).count();
    (beaten > 0).then(|| (beaten + 1).min(bounds.len()))
}

/// Compares the witness value against `L_{SN≤n}` and against the same
/// bounds adjusted with `γ = P_g` of the assemblage's reduced states.
pub fn certification_report(
    assemblage: &Assemblage,
    witness: &SteeringWitness,
    mode: AdjustMode,
    settings: &SolverSettings,
) -> Result<CertificationReport> {
    let bounds = witness
        .schmidt_bounds
        .clone()
        .ok_or_else(|| Error::InvalidArgs("witness carries no Schmidt-number bounds".into()))?;
    let value = evaluate_witness(assemblage, witness)?;
    let gamma = gamma_closed_form_or_sdp(assemblage, settings)?.clamp(1.0 / assemblage.m_a() as f64, 1.0);
    let adjusted_bounds = bounds
        .iter()
        .map(|&b| adjusted_bound(b, assemblage.m_a(), gamma, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificationReport {
        value,
        gamma,
        mode,
        certified_sn: certified(value, &bounds),
        adjusted_certified_sn: certified(value, &adjusted_bounds),
        bounds,
        adjusted_bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{qutrit_signalling_assemblage, random_density_matrix, CMat};
    use crate::slhs::enumerate_response_functions;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st() -> SolverSettings {
        SolverSettings::default()
    }

    /// `σ_{a|x} = Σ_λ p_λ D(a|x,λ) ρ_λ` with random weights and states.
    fn random_lhs_assemblage(seed: u64, m_a: usize, n_a: usize, d: usize) -> Assemblage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lambdas = enumerate_response_functions(m_a, n_a).unwrap();
        let raw: Vec<f64> = lambdas.iter().map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let states: Vec<_> = lambdas.iter().map(|_| random_density_matrix(d, 1 + rng.gen_range(0..d), &mut rng)).collect();
        let table = (0..m_a)
            .map(|x| {
                (0..n_a)
                    .map(|a| {
                        let m = lambdas
                            .iter()
                            .zip(&raw)
                            .zip(&states)
                            .filter(|((f, _), _)| f[x] == a)
                            .fold(CMat::zeros(d, d), |acc, ((_, p), r)| acc + r.matrix().scale(p / total));
                        HermitianOp::with_tolerance(m, 1e-12).unwrap()
                    })
                    .collect()
            })
            .collect();
        Assemblage::with_tolerance(table, 1e-10).unwrap()
    }

    #[test]
    fn schmidt_bounds_for_qutrits() {
        assert_abs_diff_eq!(schmidt_bound(3, 1).unwrap(), 1.0 + 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(schmidt_bound(3, 3).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(schmidt_bound(3, 2).unwrap(), 1.8479808, epsilon = 1e-7);
        for d in 1..8 {
            assert_eq!(schmidt_bound(d, 1).unwrap(), 1.0 + 1.0 / (d as f64).sqrt());
        }
        assert!(schmidt_bound(3, 4).is_err());
        assert!(schmidt_bound(3, 0).is_err());
    }

    #[test]
    fn adjusted_bound_examples() {
        assert_eq!(adjusted_bound(1.7, 3, 1.0 / 3.0, AdjustMode::Tight).unwrap(), 1.7);
        assert_abs_diff_eq!(adjusted_bound(1.0, 3, 1.0 / 3.0, AdjustMode::Paper).unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(adjusted_bound(1.5774, 2, 0.7, AdjustMode::Tight).unwrap(), 1.5774 * 1.4, epsilon = 1e-12);
        assert!(matches!(adjusted_bound(1.0, 2, 0.3, AdjustMode::Tight), Err(Error::InvalidGamma { .. })));
    }

    #[test]
    fn mub_witness_structure_and_ideal_value() {
        let w = mub_witness(3).unwrap();
        for x in 0..2 {
            let sum = (0..3).fold(CMat::zeros(3, 3), |acc, a| acc + w.operator(a, x).matrix());
            assert!((sum - CMat::identity(3, 3)).norm() < 1e-14);
        }
        let ideal = qutrit_signalling_assemblage(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(evaluate_witness(&ideal, &w).unwrap(), 2.0, epsilon = 1e-12);
        let back = SteeringWitness::from_json(&w.to_json().unwrap()).unwrap();
        assert_abs_diff_eq!(back.lhs_bound, w.lhs_bound, epsilon = 1e-15);
    }

    #[test]
    fn witness_is_linear() {
        let w = mub_witness(3).unwrap();
        let a = qutrit_signalling_assemblage(0.9, 0.3).unwrap();
        let b = random_lhs_assemblage(4, 2, 3, 3);
        let mixed = a.mix(&b, 0.3).unwrap();
        let lhs = evaluate_witness(&mixed, &w).unwrap();
        let rhs = 0.3 * evaluate_witness(&a, &w).unwrap() + 0.7 * evaluate_witness(&b, &w).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        let wrong = random_lhs_assemblage(1, 3, 2, 2);
        assert!(matches!(evaluate_witness(&wrong, &w), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn certification_of_the_ideal_model() {
        let w = mub_witness(3).unwrap();
        let ideal = qutrit_signalling_assemblage(1.0, 0.0).unwrap();
        let r = certification_report(&ideal, &w, AdjustMode::Tight, &st()).unwrap();
        assert_eq!(r.certified_sn, Some(3));
        assert_eq!(r.adjusted_certified_sn, Some(3));
        for (a, b) in r.bounds.iter().zip(&r.adjusted_bounds) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn signalling_hides_entanglement_after_adjustment() {
        let w = mub_witness(3).unwrap();
        let a = qutrit_signalling_assemblage(1.0, 0.5).unwrap();
        let r = certification_report(&a, &w, AdjustMode::Tight, &st()).unwrap();
        assert_abs_diff_eq!(r.gamma, 0.75, epsilon = 1e-9);
        assert_eq!(r.certified_sn, Some(3));
        assert_eq!(r.adjusted_certified_sn, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lhs_models_respect_the_separable_bound(seed in any::<u64>()) {
            let w = mub_witness(3).unwrap();
            let a = random_lhs_assemblage(seed, 2, 3, 3);
            prop_assert!(evaluate_witness(&a, &w).unwrap() <= schmidt_bound(3, 1).unwrap() + 1e-6);
        }

        #[test]
        fn adjusted_bound_monotone_and_ordered(g1 in 0.5f64..1.0, g2 in 0.5f64..1.0, l in 0.1f64..3.0) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            for mode in [AdjustMode::Tight, AdjustMode::Paper] {
                prop_assert!(adjusted_bound(l, 2, lo, mode).unwrap() <= adjusted_bound(l, 2, hi, mode).unwrap());
            }
            prop_assert!(adjusted_bound(l, 2, g1, AdjustMode::Tight).unwrap() <= adjusted_bound(l, 2, g1, AdjustMode::Paper).unwrap());
        }

        #[test]
        fn schmidt_bound_strictly_increasing(d in 2usize..12) {
            for n in 1..d {
                prop_assert!(schmidt_bound(d, n).unwrap() < schmidt_bound(d, n + 1).unwrap());
            }
        }
    }
}
