//! Bell tests with outcome-dependent detector efficiencies: the extended
//! POVMs with a no-click outcome, post-selection on joint clicks, the CHSH
//! and signalling closed forms, and efficiency grid scans.

use std::f64::consts::SQRT_2;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sigcert_conic::SolverSettings;

use crate::error::{Error, Result};
use crate::qlinalg::{born_behavior, chsh_measurements, maximally_entangled, standard_behavior, validate_povms};
use crate::qlinalg::{HermitianOp, StandardBehavior};
use crate::round_sig;
use crate::scenario::{bell_value, chsh_coefficients, estimate_budgets, Behavior, Scenario, SignallingBudget};
use crate::slhv::{enumerate_strategies, visibility_with, DeterministicStrategy};

/// Joint click probabilities at or below this are treated as zero.
pub const MIN_NORMALIZATION: f64 = 1e-12;

/// Detection efficiencies `η^A_{a|x}` and `η^B_{b|y}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// `[a][x]`
    #[serde(rename = "etaA")]
    pub eta_a: Vec<Vec<f64>>,
    /// `[b][y]`
    #[serde(rename = "etaB")]
    pub eta_b: Vec<Vec<f64>>,
}

impl DetectorModel {
    pub fn new(eta_a: Vec<Vec<f64>>, eta_b: Vec<Vec<f64>>) -> Result<Self> {
        for (name, t) in [("etaA", &eta_a), ("etaB", &eta_b)] {
            if t.is_empty() || t.iter().any(|r| r.len() != t[0].len() || r.is_empty()) {
                return Err(Error::InvalidArgs(format!("{name} must be a non-empty rectangular table")));
            }
            if let Some(v) = t.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidArgs(format!("{name} entry {v} is outside [0, 1]")));
            }
        }
        Ok(Self { eta_a, eta_b })
    }

    /// The same efficiency `η_k` for outcome `k` on both sides and every
    /// setting, with dichotomic outcomes.
    pub fn outcome_only(eta0: f64, eta1: f64, m_a: usize, m_b: usize) -> Result<Self> {
        Self::new(vec![vec![eta0; m_a], vec![eta1; m_a]], vec![vec![eta0; m_b], vec![eta1; m_b]])
    }

    fn check_shape(&self, s: &Scenario) -> Result<()> {
        let shape = |t: &[Vec<f64>]| (t.len(), t[0].len());
        if shape(&self.eta_a) != (s.n_a, s.m_a) || shape(&self.eta_b) != (s.n_b, s.m_b) {
            return Err(Error::DimensionMismatch(format!(
                "detector tables {:?}/{:?} do not fit scenario {s:?}",
                shape(&self.eta_a),
                shape(&self.eta_b)
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PostselectResult {
    pub behavior: Behavior,
    /// `N_{x,y}`, the probability that both parties click.
    pub normalization: Vec<Vec<f64>>,
    /// Budgets estimated from the post-selected behavior with zero slack.
    pub budgets: SignallingBudget,
}

/// `Ã_{a|x} = η_{a|x} A_{a|x}` followed by the no-click element
/// `Ã_{∅|x} = 𝟙 − Σ_a η_{a|x} A_{a|x}`. `povms` is `[x][a]`, `eta` is `[a][x]`.
pub fn inefficient_povms(povms: &[Vec<HermitianOp>], eta: &[Vec<f64>]) -> Result<Vec<Vec<HermitianOp>>> {
    let d = povms.first().and_then(|s| s.first()).map(HermitianOp::dim).unwrap_or(0);
    validate_povms(povms, d)?;
    let n = povms[0].len();
    if eta.len() != n || eta.iter().any(|r| r.len() != povms.len()) {
        return Err(Error::DimensionMismatch(format!("efficiency table must be {n}x{}", povms.len())));
    }
    if let Some(v) = eta.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgs(format!("efficiency {v} is outside [0, 1]")));
    }
    Ok(povms
        .iter()
        .enumerate()
        .map(|(x, setting)| {
            let mut ext: Vec<HermitianOp> = setting.iter().enumerate().map(|(a, m)| m.scale(eta[a][x])).collect();
            let clicked = ext.iter().fold(HermitianOp::zeros(d), |acc, m| &acc + m);
            ext.push(&HermitianOp::identity(d) - &clicked);
            ext
        })
        .collect())
}

/// Conditions an extended table `[x][y][ã][b̃]` (no-click last) on joint clicks.
fn condition_on_clicks(s: Scenario, extended: impl Fn(usize, usize, usize, usize) -> f64) -> Result<PostselectResult> {
    let mut normalization = vec![vec![0.0; s.m_b]; s.m_a];
    for (x, row) in normalization.iter_mut().enumerate() {
        for (y, n) in row.iter_mut().enumerate() {
            *n = (0..s.n_a).flat_map(|a| (0..s.n_b).map(move |b| (a, b))).map(|(a, b)| extended(x, y, a, b)).sum();
            if *n <= MIN_NORMALIZATION {
                return Err(Error::AllNoClick { x, y });
            }
        }
    }
    let behavior = Behavior::from_fn(s, |x, y, a, b| extended(x, y, a, b) / normalization[x][y])?;
    let budgets = estimate_budgets(&behavior, 0.0)?;
    Ok(PostselectResult { behavior, normalization, budgets })
}

/// Exact post-selected statistics of `state` measured with inefficient
/// detectors. `povms_a` is `[x][a]`, `povms_b` is `[y][b]`.
pub fn postselected_behavior(
    state: &HermitianOp,
    povms_a: &[Vec<HermitianOp>],
    povms_b: &[Vec<HermitianOp>],
    detector: &DetectorModel,
) -> Result<PostselectResult> {
    let ext_a = inefficient_povms(povms_a, &detector.eta_a)?;
    let ext_b = inefficient_povms(povms_b, &detector.eta_b)?;
    let extended = born_behavior(state, &ext_a, &ext_b)?;
    let ext_s = extended.scenario();
    let s = Scenario::new(ext_s.m_a, ext_s.m_b, ext_s.n_a - 1, ext_s.n_b - 1)?;
    condition_on_clicks(s, |x, y, a, b| extended.p(x, y, a, b))
}

/// Post-selection of a behavior given only as a table, assuming each click
/// pattern is `p̃(a,b|x,y) = η_{a|x} η_{b|y} p(a,b|x,y)`.
pub fn postselect_table(behavior: &Behavior, detector: &DetectorModel) -> Result<PostselectResult> {
    let s = behavior.scenario();
    detector.check_shape(&s)?;
    condition_on_clicks(s, |x, y, a, b| detector.eta_a[a][x] * detector.eta_b[b][y] * behavior.p(x, y, a, b))
}

/// Which CHSH behavior is fed through the detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Maximally entangled qubits with the Tsirelson measurements.
    Quantum,
    /// `¼(1 + (−1)^{a+b+xy}/2)`.
    Local,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantum" => Ok(Strategy::Quantum),
            "local" => Ok(Strategy::Local),
            other => Err(Error::InvalidArgs(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Post-selected CHSH statistics of `strategy` under outcome-only
/// efficiencies `(η₀, η₁)`.
pub fn simulate(strategy: Strategy, eta0: f64, eta1: f64) -> Result<PostselectResult> {
    let detector = DetectorModel::outcome_only(eta0, eta1, 2, 2)?;
    match strategy {
        Strategy::Quantum => {
            let (a, b) = chsh_measurements();
            postselected_behavior(&maximally_entangled(2), &a, &b, &detector)
        }
        Strategy::Local => postselect_table(&standard_behavior(StandardBehavior::LocalCorr), &detector),
    }
}

/// CHSH value of the post-selected Tsirelson statistics.
pub fn chsh_postselected(eta0: f64, eta1: f64) -> f64 {
    let (e0, e1) = (eta0, eta1);
    let r = 16.0 * SQRT_2;
    let num = e0.powi(4) + r * e1 * e0.powi(3) - 2.0 * e1 * e1 * e0 * e0 + r * e1.powi(3) * e0 + e1.powi(4);
    let den = e0.powi(4) + 12.0 * e1 * e0.powi(3) + 6.0 * e1 * e1 * e0 * e0 + 12.0 * e1.powi(3) * e0 + e1.powi(4);
    2.0 * num / den
}

/// The only nonzero signalling parameter `α = α^{11}_{01}` (equal to `β`)
/// after post-selection. The local variant replaces `√2` by `2`.
pub fn alpha_postselected(eta0: f64, eta1: f64, strategy: Strategy) -> f64 {
    let k = match strategy {
        Strategy::Quantum => SQRT_2,
        Strategy::Local => 2.0,
    };
    let (s, d) = (eta0 + eta1, eta0 - eta1);
    eta1 * ((s + d / k) / (s * s - d * d / k) - (s - d / k) / (s * s + d * d / k)).abs()
}

/// `(n points, min, max)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub min: f64,
    pub max: f64,
}

impl Default for GridSpec {
    /// 21×21 over `[0.1, 1]²`, which contains both the diagonal corridor and
    /// the asymmetric region where every point has a model.
    fn default() -> Self {
        Self { n: 21, min: 0.1, max: 1.0 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.n == 0 || !(self.min > 0.0 && self.min <= self.max && self.max <= 1.0) {
            return Err(Error::InvalidArgs(format!(
                "grid needs n ≥ 1 and 0 < min ≤ max ≤ 1, got n={}, [{}, {}]",
                self.n, self.min, self.max
            )));
        }
        if self.n == 1 {
            return Ok(vec![self.min]);
        }
        let step = (self.max - self.min) / (self.n - 1) as f64;
        Ok((0..self.n).map(|i| if i + 1 == self.n { self.max } else { self.min + i as f64 * step }).collect())
    }
}

/// Budget used for the visibility LP at each grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum BudgetMode {
    /// Estimated from the post-selected behavior.
    Data,
    Zero,
    Custom(SignallingBudget),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eta0: f64,
    pub eta1: f64,
    pub chsh: f64,
    pub visibility: f64,
    pub max_signalling: f64,
    /// Solver status, or the error that stopped this point.
    pub status: String,
}

fn scan_point(
    strategy: Strategy,
    eta0: f64,
    eta1: f64,
    mode: &BudgetMode,
    strategies: &[DeterministicStrategy],
    settings: &SolverSettings,
) -> ScanRow {
    let mut row = ScanRow { eta0, eta1, chsh: f64::NAN, visibility: f64::NAN, max_signalling: f64::NAN, status: String::new() };
    let outcome = (|| -> Result<()> {
        let ps = simulate(strategy, eta0, eta1)?;
        row.chsh = bell_value(&ps.behavior, &chsh_coefficients())?;
        row.max_signalling = ps.budgets.max_entry();
        let budget = match mode {
            BudgetMode::Data => ps.budgets,
            BudgetMode::Zero => SignallingBudget::zeros(ps.behavior.scenario()),
            BudgetMode::Custom(b) => b.clone(),
        };
        let v = visibility_with(strategies, &ps.behavior, &budget, settings)?;
        row.visibility = v.v;
        row.status = v.status.to_string();
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("scan point ({eta0}, {eta1}) failed: {e}");
        row.status = format!("error: {e}");
    }
    row
}

/// Visibility over an `(η₀, η₁)` grid, ordered by `η₀` then `η₁`. Points run
/// in parallel on the current rayon pool; failures are reported per row.
pub fn scan_grid(strategy: Strategy, grid: &GridSpec, mode: &BudgetMode, settings: &SolverSettings) -> Result<Vec<ScanRow>> {
    let pts = grid.points()?;
    let strategies = enumerate_strategies(Scenario::chsh())?;
    let pairs: Vec<(f64, f64)> = pts.iter().flat_map(|&e0| pts.iter().map(move |&e1| (e0, e1))).collect();
    Ok(pairs
        .par_iter()
        .map(|&(e0, e1)| scan_point(strategy, e0, e1, mode, &strategies, settings))
        .collect())
}

pub const SCAN_CSV_HEADER: &str = "eta0,eta1,chsh,visibility,max_signalling,status";

/// 12 significant digits, switching to exponent notation outside
/// `[1e-4, 1e15)` so tiny residuals stay short.
fn csv_number(x: f64) -> String {
    let r = round_sig(x, 12);
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

/// Writes scan rows with 12 significant digits.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SCAN_CSV_HEADER}")?;
    for r in rows {
        let status = r.status.replace([',', '\n'], ";");
        writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_number(r.eta0),
            csv_number(r.eta1),
            csv_number(r.chsh),
            csv_number(r.visibility),
            csv_number(r.max_signalling),
            status
        )?;
    }
    Ok(())
}
