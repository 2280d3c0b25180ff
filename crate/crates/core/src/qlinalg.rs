//! Dense complex linear algebra and the quantum models used throughout:
//! states, measurements, Born-rule behaviors and assemblages.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Behavior, Scenario};

pub use sigcert_conic::CMat;

/// Hermiticity tolerance (entrywise).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-9;
/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Hermitian matrix, symmetrised on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp(CMat);

impl HermitianOp {
    /// Accepts matrices that are Hermitian within `tol` and removes the
    /// anti-Hermitian residue.
    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!("{}x{} is not a square matrix", m.nrows(), m.ncols())));
        }
        if m.nrows() > MAX_DIM {
            return Err(Error::DimensionMismatch(format!("dimension {} exceeds cap {MAX_DIM}", m.nrows())));
        }
        let adj = m.adjoint();
        let dev = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(dev <= tol) {
            return Err(Error::DimensionMismatch(format!("matrix is not Hermitian (deviation {dev:e})")));
        }
        Ok(Self((m + adj).scale(0.5)))
    }

    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn identity(d: usize) -> Self {
        Self(CMat::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMat::zeros(d, d))
    }

    /// Rank-one projector onto the normalised `v`.
    pub fn projector(v: &DVector<Complex64>) -> Self {
        let n = v.norm();
        let u = v.unscale(n);
        Self(&u * u.adjoint())
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let mut m = CMat::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = c(*v, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// Elementwise transpose (complex conjugate for Hermitian input).
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `U·self·U†`.
    pub fn conjugate_by(&self, u: &CMat) -> Self {
        Self(u * &self.0 * u.adjoint())
    }

    pub fn eigs(&self) -> (Vec<f64>, CMat) {
        eigs_hermitian(&self.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigs().0.first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    /// `Re tr(self·other)`.
    pub fn inner(&self, other: &HermitianOp) -> f64 {
        self.0.iter().zip(other.0.transpose().iter()).map(|(a, b)| (a * b).re).sum()
    }
}

impl std::ops::Add for &HermitianOp {
    type Output = HermitianOp;
    fn add(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &HermitianOp {
    type Output = HermitianOp;
    fn sub(self, rhs: &HermitianOp) -> HermitianOp {
        HermitianOp(&self.0 - &rhs.0)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl Serialize for HermitianOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let rows = |f: fn(&Complex64) -> f64| (0..d).map(|i| (0..d).map(|j| f(&self.0[(i, j)])).collect()).collect();
        MatrixFile { re: rows(|z| z.re), im: rows(|z| z.im) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = MatrixFile::deserialize(d)?;
        let n = f.re.len();
        let square = |t: &Vec<Vec<f64>>| t.len() == n && t.iter().all(|r| r.len() == n);
        if !square(&f.re) || !square(&f.im) {
            return Err(D::Error::custom("re/im must be square tables of equal size"));
        }
        let m = CMat::from_fn(n, n, |i, j| c(f.re[i][j], f.im[i][j]));
        HermitianOp::with_tolerance(m, 1e-9).map_err(D::Error::custom)
    }
}

/// Ascending eigenvalues and the matching orthonormal eigenvectors (columns)
/// of a Hermitian matrix.
pub fn eigs_hermitian(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (vals, vecs)
}

/// `f(M)` through the spectral decomposition.
fn spectral_map(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigs_hermitian(m);
    let d = CMat::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(f(v), 0.0))));
    &vecs * d * vecs.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `tr_A` of an operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace_a(m: &CMat, d_a: usize, d_b: usize) -> Result<CMat> {
    if m.nrows() != d_a * d_b || m.ncols() != d_a * d_b {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator is not on a {d_a}x{d_b} bipartite space",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(CMat::from_fn(d_b, d_b, |i, j| (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()))
}

/// `tr_B` of an operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace_b(m: &CMat, d_a: usize, d_b: usize) -> Result<CMat> {
    if m.nrows() != d_a * d_b || m.ncols() != d_a * d_b {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator is not on a {d_a}x{d_b} bipartite space",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(CMat::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()))
}

/// PSD square root; eigenvalues in `[-PSD_TOL, 0)` are clamped to zero.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let min = eigs_hermitian(m).0.first().copied().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(spectral_map(m, |v| v.max(0.0).sqrt()))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &CMat) -> f64 {
    eigs_hermitian(m).0.iter().map(|v| v.abs()).sum()
}

fn ket(amps: &[Complex64]) -> DVector<Complex64> {
    DVector::from_column_slice(amps)
}

/// Eigenprojectors of X, Y and Z (settings 0, 1, 2); outcome 0 is the +1
/// eigenvalue.
pub fn pauli_measurements() -> Vec<Vec<HermitianOp>> {
    let s = FRAC_1_SQRT_2;
    let bases = [
        [ket(&[c(s, 0.0), c(s, 0.0)]), ket(&[c(s, 0.0), c(-s, 0.0)])],
        [ket(&[c(s, 0.0), c(0.0, s)]), ket(&[c(s, 0.0), c(0.0, -s)])],
        [ket(&[c(1.0, 0.0), c(0.0, 0.0)]), ket(&[c(0.0, 0.0), c(1.0, 0.0)])],
    ];
    bases.iter().map(|b| b.iter().map(HermitianOp::projector).collect()).collect()
}

/// Fourier basis `|f_a⟩ = d^{-1/2} Σ_j e^{2πi·aj/d} |j⟩`.
pub fn fourier_basis(d: usize) -> Vec<DVector<Complex64>> {
    let s = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|a| DVector::from_fn(d, |j, _| Complex64::from_polar(s, 2.0 * PI * (a * j) as f64 / d as f64)))
        .collect()
}

pub fn computational_basis(d: usize) -> Vec<DVector<Complex64>> {
    (0..d).map(|a| DVector::from_fn(d, |j, _| c(if j == a { 1.0 } else { 0.0 }, 0.0))).collect()
}

/// Rank-one projective measurement onto a basis.
pub fn basis_measurement(basis: &[DVector<Complex64>]) -> Vec<HermitianOp> {
    basis.iter().map(HermitianOp::projector).collect()
}

/// Projectors of a ±1 observable; outcome 0 is the +1 eigenspace.
pub fn observable_projectors(obs: &CMat) -> [HermitianOp; 2] {
    let id = CMat::identity(obs.nrows(), obs.ncols());
    [HermitianOp((&id + obs).scale(0.5)), HermitianOp((&id - obs).scale(0.5))]
}

/// Tsirelson-optimal CHSH measurements: Alice `Z`, `X`; Bob `(Z ± X)/√2`.
/// Returned as `([x][a], [y][b])`.
pub fn chsh_measurements() -> (Vec<Vec<HermitianOp>>, Vec<Vec<HermitianOp>>) {
    let z = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let x = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let b0 = (&z + &x).scale(FRAC_1_SQRT_2);
    let b1 = (&z - &x).scale(FRAC_1_SQRT_2);
    let alice = vec![observable_projectors(&z).to_vec(), observable_projectors(&x).to_vec()];
    let bob = vec![observable_projectors(&b0).to_vec(), observable_projectors(&b1).to_vec()];
    (alice, bob)
}

/// Projector onto `|Φ⁺_d⟩ = d^{-1/2} Σ_i |ii⟩`.
pub fn maximally_entangled(d: usize) -> HermitianOp {
    let s = 1.0 / (d as f64).sqrt();
    let v = DVector::from_fn(d * d, |k, _| c(if k / d == k % d { s } else { 0.0 }, 0.0));
    HermitianOp::projector(&v)
}

/// `v·Φ⁺_d + (1 − v)·𝟙/d²`.
pub fn isotropic_state(d: usize, v: f64) -> Result<HermitianOp> {
    if d == 0 || d * d > MAX_DIM {
        return Err(Error::InvalidArgs(format!("local dimension {d} unsupported")));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidArgs(format!("visibility {v} outside [0,1]")));
    }
    let phi = maximally_entangled(d);
    let noise = CMat::identity(d * d, d * d).scale((1.0 - v) / (d * d) as f64);
    Ok(HermitianOp(phi.0.scale(v) + noise))
}

/// Checks that each setting's operators are PSD, of dimension `d`, and sum
/// to the identity.
pub fn validate_povms(povms: &[Vec<HermitianOp>], d: usize) -> Result<()> {
    if povms.is_empty() || povms.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidPovm("empty measurement".into()));
    }
    for (x, setting) in povms.iter().enumerate() {
        let mut sum = CMat::zeros(d, d);
        for (a, m) in setting.iter().enumerate() {
            if m.dim() != d {
                return Err(Error::DimensionMismatch(format!("operator ({a}|{x}) has dimension {}, expected {d}", m.dim())));
            }
            if !m.is_psd(PSD_TOL) {
                return Err(Error::InvalidPovm(format!("operator ({a}|{x}) is not PSD")));
            }
            sum += &m.0;
        }
        let dev = (sum - CMat::identity(d, d)).norm();
        if dev > 1e-9 {
            return Err(Error::InvalidPovm(format!("setting {x} sums to identity only within {dev:e}")));
        }
    }
    Ok(())
}

fn validate_state(state: &HermitianOp) -> Result<()> {
    let tr = state.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgs(format!("state has trace {tr}")));
    }
    let min = state.min_eigenvalue();
    if min < -PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// Infers the local dimension `d_a` of a bipartite state from its size and
/// Alice's operators.
fn split_dims(state: &HermitianOp, d_a: usize) -> Result<usize> {
    if d_a == 0 || state.dim() % d_a != 0 {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {} is not a multiple of Alice's dimension {d_a}",
            state.dim()
        )));
    }
    Ok(state.dim() / d_a)
}

/// Family `σ_{a|x}` of positive operators on Bob's space, stored `[x][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AssemblageFile", into = "AssemblageFile")]
pub struct Assemblage {
    m_a: usize,
    n_a: usize,
    dim: usize,
    sigma: Vec<Vec<HermitianOp>>,
}

#[derive(Serialize, Deserialize)]
struct AssemblageFile {
    #[serde(rename = "mA")]
    m_a: usize,
    #[serde(rename = "nA")]
    n_a: usize,
    dim: usize,
    sigma: Vec<Vec<HermitianOp>>,
}

impl TryFrom<AssemblageFile> for Assemblage {
    type Error = Error;
    fn try_from(f: AssemblageFile) -> Result<Self> {
        let a = Assemblage::new(f.sigma)?;
        if a.m_a != f.m_a || a.n_a != f.n_a || a.dim != f.dim {
            return Err(Error::InvalidAssemblage("header disagrees with sigma table shape".into()));
        }
        Ok(a)
    }
}

impl From<Assemblage> for AssemblageFile {
    fn from(a: Assemblage) -> Self {
        AssemblageFile { m_a: a.m_a, n_a: a.n_a, dim: a.dim, sigma: a.sigma }
    }
}

/// Normalisation tolerance `|Σ_a tr σ_{a|x} − 1|`.
pub const ASSEMBLAGE_TOL: f64 = 1e-9;

impl Assemblage {
    /// Validates PSD-ness and per-setting normalisation (tolerance `1e-9`).
    pub fn new(sigma: Vec<Vec<HermitianOp>>) -> Result<Self> {
        Self::with_tolerance(sigma, ASSEMBLAGE_TOL)
    }

    /// As [`Assemblage::new`] with a custom tolerance, used for operators
    /// reconstructed from solver output.
    pub fn with_tolerance(sigma: Vec<Vec<HermitianOp>>, tol: f64) -> Result<Self> {
        let m_a = sigma.len();
        let n_a = sigma.first().map_or(0, |s| s.len());
        let dim = sigma.first().and_then(|s| s.first()).map_or(0, |m| m.dim());
        if m_a == 0 || n_a == 0 || dim == 0 {
            return Err(Error::InvalidAssemblage("empty assemblage".into()));
        }
        for (x, setting) in sigma.iter().enumerate() {
            if setting.len() != n_a {
                return Err(Error::InvalidAssemblage(format!("setting {x} has {} outcomes, expected {n_a}", setting.len())));
            }
            let mut total = 0.0;
            for (a, s) in setting.iter().enumerate() {
                if s.dim() != dim {
                    return Err(Error::DimensionMismatch(format!("sigma({a}|{x}) has dimension {}", s.dim())));
                }
                let min = s.min_eigenvalue();
                if min < -tol.max(PSD_TOL) {
                    return Err(Error::InvalidAssemblage(format!("sigma({a}|{x}) has eigenvalue {min:e}")));
                }
                total += s.trace();
            }
            if (total - 1.0).abs() > tol {
                return Err(Error::InvalidAssemblage(format!("setting {x} has total trace {total}")));
            }
        }
        Ok(Self { m_a, n_a, dim, sigma })
    }

    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `σ_{a|x}`.
    pub fn sigma(&self, a: usize, x: usize) -> &HermitianOp {
        &self.sigma[x][a]
    }

    /// Table in `[x][a]` order.
    pub fn table(&self) -> &[Vec<HermitianOp>] {
        &self.sigma
    }

    /// Reduced states `μ_x = Σ_a σ_{a|x}`.
    pub fn reduced_states(&self) -> Vec<HermitianOp> {
        self.sigma
            .iter()
            .map(|s| HermitianOp(s.iter().fold(CMat::zeros(self.dim, self.dim), |acc, m| acc + &m.0)))
            .collect()
    }

    /// `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Assemblage, w: f64) -> Result<Assemblage> {
        if (self.m_a, self.n_a, self.dim) != (other.m_a, other.n_a, other.dim) {
            return Err(Error::DimensionMismatch("mixing assemblages of different shape".into()));
        }
        let sigma = self
            .sigma
            .iter()
            .zip(&other.sigma)
            .map(|(s, t)| s.iter().zip(t).map(|(p, q)| HermitianOp(p.0.scale(w) + q.0.scale(1.0 - w))).collect())
            .collect();
        Assemblage::with_tolerance(sigma, 1e-8)
    }

    /// `U σ_{a|x} U†` for every element.
    pub fn conjugate_by(&self, u: &CMat) -> Result<Assemblage> {
        let sigma = self.sigma.iter().map(|s| s.iter().map(|m| m.conjugate_by(u)).collect()).collect();
        Assemblage::with_tolerance(sigma, 1e-8)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `σ_{a|x} = tr_A[(M_{a|x} ⊗ 𝟙) ρ]` with measurements given `[x][a]`.
pub fn assemblage_from(state: &HermitianOp, measurements: &[Vec<HermitianOp>]) -> Result<Assemblage> {
    let d_a = measurements.first().and_then(|s| s.first()).map_or(0, |m| m.dim());
    let d_b = split_dims(state, d_a)?;
    validate_state(state)?;
    validate_povms(measurements, d_a)?;
    let id_b = CMat::identity(d_b, d_b);
    let sigma = measurements
        .iter()
        .map(|setting| {
            setting
                .iter()
                .map(|m| {
                    let op = kron(&m.0, &id_b) * &state.0;
                    partial_trace_a(&op, d_a, d_b).and_then(|s| HermitianOp::with_tolerance(s, 1e-10))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(sigma)
}

/// Born-rule behavior `p(a,b|x,y) = tr[(A_{a|x} ⊗ B_{b|y}) ρ]`.
pub fn born_behavior(state: &HermitianOp, alice: &[Vec<HermitianOp>], bob: &[Vec<HermitianOp>]) -> Result<Behavior> {
    let d_a = alice.first().and_then(|s| s.first()).map_or(0, |m| m.dim());
    let d_b = split_dims(state, d_a)?;
    validate_state(state)?;
    validate_povms(alice, d_a)?;
    validate_povms(bob, d_b)?;
    let scenario = Scenario::new(alice.len(), bob.len(), alice[0].len(), bob[0].len())?;
    if alice.iter().any(|s| s.len() != scenario.n_a) || bob.iter().any(|s| s.len() != scenario.n_b) {
        return Err(Error::InvalidPovm("settings must share one outcome count".into()));
    }
    Behavior::from_fn(scenario, |x, y, a, b| {
        let op = kron(&alice[x][a].0, &bob[y][b].0);
        op.iter().zip(state.0.transpose().iter()).map(|(p, q)| (p * q).re).sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardBehavior {
    /// `¼(1 + (−1)^{a+b+xy}/√2)`
    IdealQuantumChsh,
    /// `½·δ(a⊕b = xy)`
    PrBox,
    /// `¼(1 + (−1)^{a+b+xy}/2)`, saturating the local CHSH bound
    LocalCorr,
    Uniform,
}

pub fn standard_behavior(kind: StandardBehavior) -> Behavior {
    let parity = |x: usize, y: usize, a: usize, b: usize| if (a + b + x * y) % 2 == 0 { 1.0 } else { -1.0 };
    let f: Box<dyn Fn(usize, usize, usize, usize) -> f64> = match kind {
        StandardBehavior::IdealQuantumChsh => Box::new(move |x, y, a, b| 0.25 * (1.0 + parity(x, y, a, b) * FRAC_1_SQRT_2)),
        StandardBehavior::PrBox => Box::new(move |x, y, a, b| 0.25 * (1.0 + parity(x, y, a, b))),
        StandardBehavior::LocalCorr => Box::new(move |x, y, a, b| 0.25 * (1.0 + parity(x, y, a, b) * 0.5)),
        StandardBehavior::Uniform => Box::new(|_, _, _, _| 0.25),
    };
    Behavior::from_fn(Scenario::chsh(), f).expect("closed-form tables are valid")
}

/// Alice's measurement bases for the qutrit model: computational (x = 0)
/// and Fourier (x = 1).
pub fn qutrit_alice_measurements() -> Vec<Vec<HermitianOp>> {
    vec![basis_measurement(&computational_basis(3)), basis_measurement(&fourier_basis(3))]
}

/// Reduced states `μ_0 = k|0⟩⟨0| + (1−k)𝟙/3` and
/// `μ_1 = k|+⟩⟨+| + (1−k)𝟙/3`, `|+⟩ = (|1⟩+|2⟩)/√2`.
pub fn qutrit_reduced_states(k: f64) -> [HermitianOp; 2] {
    let noise = CMat::identity(3, 3).scale((1.0 - k) / 3.0);
    let zero = ket(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let plus = ket(&[c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]);
    [
        HermitianOp(HermitianOp::projector(&zero).0.scale(k) + &noise),
        HermitianOp(HermitianOp::projector(&plus).0.scale(k) + &noise),
    ]
}

/// Signalling qutrit model `σ_{a|x} = √μ_x [v·P_{a|x}ᵀ + (1−v)𝟙/3] √μ_x`
/// where `P_{a|x}` are Alice's projectors; `Σ_a σ_{a|x} = μ_x`.
pub fn qutrit_signalling_assemblage(v: f64, k: f64) -> Result<Assemblage> {
    if !(0.0..=1.0).contains(&v) || !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidArgs(format!("v={v}, k={k} must lie in [0,1]")));
    }
    let mus = qutrit_reduced_states(k);
    let noise = CMat::identity(3, 3).scale((1.0 - v) / 3.0);
    let sigma = qutrit_alice_measurements()
        .iter()
        .zip(&mus)
        .map(|(setting, mu)| {
            let root = sqrt_psd(&mu.0)?;
            setting
                .iter()
                .map(|p| HermitianOp::with_tolerance(&root * (p.0.transpose().scale(v) + &noise) * &root, 1e-10))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Assemblage::new(sigma)
}

fn ginibre<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    use rand_distr::StandardNormal;
    CMat::from_fn(rows, cols, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-random unitary (QR of a Ginibre matrix with phase correction).
pub fn random_unitary<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_diagonal(&DVector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 { z / z.norm() } else { c(1.0, 0.0) }
    }));
    q * phases
}

/// Random density matrix of the given rank (Hilbert-Schmidt measure for
/// full rank).
pub fn random_density_matrix<R: rand::Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> HermitianOp {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    HermitianOp((&m + m.adjoint()).scale(0.5 / tr))
}

/// Random rank-one projective measurement: the columns of a Haar unitary.
pub fn random_basis_measurement<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<HermitianOp> {
    let u = random_unitary(d, rng);
    (0..d).map(|i| HermitianOp::projector(&u.column(i).into_owned())).collect()
}
