//! Bell scenarios, behaviors, signalling budgets and raw count ingestion.
//!
//! All tables use the row-major layout `[x][y][a][b]` for behaviors and
//! `[a][x][y][y']` / `[b][y][x][x']` for budgets, both in memory and on disk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums may deviate from one by this much before a behavior is rejected.
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Entries in `[-CLAMP_TOL, 0)` are clamped to zero on ingestion.
pub const CLAMP_TOL: f64 = 1e-9;

/// Numbers of settings (`m`) and outcomes (`n`) for Alice and Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(rename = "mA")]
    pub m_a: usize,
    #[serde(rename = "mB")]
    pub m_b: usize,
    #[serde(rename = "nA")]
    pub n_a: usize,
    #[serde(rename = "nB")]
    pub n_b: usize,
}

impl Scenario {
    pub fn new(m_a: usize, m_b: usize, n_a: usize, n_b: usize) -> Result<Self> {
        let s = Self { m_a, m_b, n_a, n_b };
        s.validate()?;
        Ok(s)
    }

    /// The two-setting, two-outcome CHSH scenario.
    pub fn chsh() -> Self {
        Self { m_a: 2, m_b: 2, n_a: 2, n_b: 2 }
    }

    fn validate(&self) -> Result<()> {
        if self.m_a == 0 || self.m_b == 0 || self.n_a == 0 || self.n_b == 0 {
            return Err(Error::InvalidScenario(format!("all counts must be positive: {self:?}")));
        }
        if self.strategy_count().is_none() {
            return Err(Error::InvalidScenario(format!(
                "strategy space of {self:?} overflows 128-bit arithmetic"
            )));
        }
        Ok(())
    }

    /// Number of signalling deterministic strategies,
    /// `nA^(mA·mB) · nB^(mA·mB)`, or `None` on overflow.
    pub fn strategy_count(&self) -> Option<u128> {
        let pairs = u32::try_from(self.m_a.checked_mul(self.m_b)?).ok()?;
        let a = (self.n_a as u128).checked_pow(pairs)?;
        let b = (self.n_b as u128).checked_pow(pairs)?;
        a.checked_mul(b)
    }

    /// Length of a behavior table.
    pub fn table_len(&self) -> usize {
        self.m_a * self.m_b * self.n_a * self.n_b
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.m_b + y) * self.n_a + a) * self.n_b + b
    }

    pub fn is_dichotomic(&self) -> bool {
        self.n_a == 2 && self.n_b == 2
    }
}

/// Conditional probability table `p(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BehaviorFile", into = "BehaviorFile")]
pub struct Behavior {
    scenario: Scenario,
    p: Vec<f64>,
}

impl Behavior {
    /// Validates and normalises a flat `[x][y][a][b]` table. Slightly negative
    /// entries are clamped and their row renormalised.
    pub fn new(scenario: Scenario, mut p: Vec<f64>) -> Result<Self> {
        scenario.validate()?;
        if p.len() != scenario.table_len() {
            return Err(Error::InvalidBehavior(format!(
                "expected {} entries, got {}",
                scenario.table_len(),
                p.len()
            )));
        }
        let block = scenario.n_a * scenario.n_b;
        for (cell, row) in p.chunks_mut(block).enumerate() {
            let (x, y) = (cell / scenario.m_b, cell % scenario.m_b);
            let mut clamped = false;
            for v in row.iter_mut() {
                if !v.is_finite() || *v < -CLAMP_TOL || *v > 1.0 + NORMALIZATION_TOL {
                    return Err(Error::InvalidBehavior(format!(
                        "entry {v} out of range in cell (x={x}, y={y})"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                    clamped = true;
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidBehavior(format!(
                    "cell (x={x}, y={y}) sums to {sum}"
                )));
            }
            if clamped {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Ok(Self { scenario, p })
    }

    /// Builds a table from a closure `f(x, y, a, b)`.
    pub fn from_fn(scenario: Scenario, f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let mut p = vec![0.0; scenario.table_len()];
        for x in 0..scenario.m_a {
            for y in 0..scenario.m_b {
                for a in 0..scenario.n_a {
                    for b in 0..scenario.n_b {
                        p[scenario.index(x, y, a, b)] = f(x, y, a, b);
                    }
                }
            }
        }
        Self::new(scenario, p)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.scenario.index(x, y, a, b)]
    }

    /// Alice's marginal `p(a|x,y)`.
    pub fn marginal_a(&self, a: usize, x: usize, y: usize) -> f64 {
        (0..self.scenario.n_b).map(|b| self.p(x, y, a, b)).sum()
    }

    /// Bob's marginal `p(b|x,y)`.
    pub fn marginal_b(&self, b: usize, x: usize, y: usize) -> f64 {
        (0..self.scenario.n_a).map(|a| self.p(x, y, a, b)).sum()
    }

    /// Correlator `E_xy = Σ (−1)^{a+b} p(a,b|x,y)` for dichotomic scenarios.
    pub fn correlator(&self, x: usize, y: usize) -> Result<f64> {
        let s = self.scenario;
        if !s.is_dichotomic() {
            return Err(Error::NotDichotomic { n_a: s.n_a, n_b: s.n_b });
        }
        Ok(self.p(x, y, 0, 0) + self.p(x, y, 1, 1) - self.p(x, y, 0, 1) - self.p(x, y, 1, 0))
    }

    /// `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Behavior, w: f64) -> Result<Behavior> {
        if self.scenario != other.scenario {
            return Err(Error::InvalidBehavior("mixing behaviors of different scenarios".into()));
        }
        let p = self.p.iter().zip(&other.p).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        Behavior::new(self.scenario, p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct BehaviorFile {
    #[serde(flatten)]
    scenario: Scenario,
    p: Vec<Vec<Vec<Vec<f64>>>>,
}

impl TryFrom<BehaviorFile> for Behavior {
    type Error = Error;

    fn try_from(f: BehaviorFile) -> Result<Self> {
        let s = f.scenario;
        let shape_ok = f.p.len() == s.m_a
            && f.p.iter().all(|r| {
                r.len() == s.m_b
                    && r.iter().all(|c| c.len() == s.n_a && c.iter().all(|o| o.len() == s.n_b))
            });
        if !shape_ok {
            return Err(Error::InvalidBehavior(format!("table shape does not match {s:?}")));
        }
        Behavior::new(s, f.p.into_iter().flatten().flatten().flatten().collect())
    }
}

impl From<Behavior> for BehaviorFile {
    fn from(b: Behavior) -> Self {
        let s = b.scenario;
        let p = (0..s.m_a)
            .map(|x| {
                (0..s.m_b)
                    .map(|y| (0..s.n_a).map(|a| (0..s.n_b).map(|o| b.p(x, y, a, o)).collect()).collect())
                    .collect()
            })
            .collect();
        BehaviorFile { scenario: s, p }
    }
}

/// Bounds `α^{ax}_{yy'}` and `β^{by}_{xx'}` on the average ontological signalling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BudgetFile", into = "BudgetFile")]
pub struct SignallingBudget {
    scenario: Scenario,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl SignallingBudget {
    pub fn zeros(scenario: Scenario) -> Self {
        let s = scenario;
        Self {
            scenario,
            alpha: vec![0.0; s.n_a * s.m_a * s.m_b * s.m_b],
            beta: vec![0.0; s.n_b * s.m_b * s.m_a * s.m_a],
        }
    }

    /// Every off-diagonal entry set to `value`.
    pub fn uniform(scenario: Scenario, value: f64) -> Result<Self> {
        let mut b = Self::zeros(scenario);
        let s = scenario;
        for a in 0..s.n_a {
            for x in 0..s.m_a {
                for y in 0..s.m_b {
                    for y2 in 0..s.m_b {
                        if y != y2 {
                            let i = b.alpha_index(a, x, y, y2);
                            b.alpha[i] = value;
                        }
                    }
                }
            }
        }
        for o in 0..s.n_b {
            for y in 0..s.m_b {
                for x in 0..s.m_a {
                    for x2 in 0..s.m_a {
                        if x != x2 {
                            let i = b.beta_index(o, y, x, x2);
                            b.beta[i] = value;
                        }
                    }
                }
            }
        }
        b.validate()?;
        Ok(b)
    }

    /// Builds a budget from closures over unordered pairs; the symmetric
    /// partner and zero diagonal are filled in.
    pub fn from_fns(
        scenario: Scenario,
        alpha: impl Fn(usize, usize, usize, usize) -> f64,
        beta: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut b = Self::zeros(scenario);
        let s = scenario;
        for a in 0..s.n_a {
            for x in 0..s.m_a {
                for y in 0..s.m_b {
                    for y2 in (y + 1)..s.m_b {
                        let v = alpha(a, x, y, y2);
                        b.set_alpha(a, x, y, y2, v);
                    }
                }
            }
        }
        for o in 0..s.n_b {
            for y in 0..s.m_b {
                for x in 0..s.m_a {
                    for x2 in (x + 1)..s.m_a {
                        let v = beta(o, y, x, x2);
                        b.set_beta(o, y, x, x2, v);
                    }
                }
            }
        }
        b.validate()?;
        Ok(b)
    }

    fn validate(&self) -> Result<()> {
        let s = self.scenario;
        for a in 0..s.n_a {
            for x in 0..s.m_a {
                for y in 0..s.m_b {
                    for y2 in 0..s.m_b {
                        let v = self.alpha(a, x, y, y2);
                        check_entry(v, y == y2, v - self.alpha(a, x, y2, y), "alpha")?;
                    }
                }
            }
        }
        for o in 0..s.n_b {
            for y in 0..s.m_b {
                for x in 0..s.m_a {
                    for x2 in 0..s.m_a {
                        let v = self.beta(o, y, x, x2);
                        check_entry(v, x == x2, v - self.beta(o, y, x2, x), "beta")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    #[inline]
    fn alpha_index(&self, a: usize, x: usize, y: usize, y2: usize) -> usize {
        let s = self.scenario;
        ((a * s.m_a + x) * s.m_b + y) * s.m_b + y2
    }

    #[inline]
    fn beta_index(&self, b: usize, y: usize, x: usize, x2: usize) -> usize {
        let s = self.scenario;
        ((b * s.m_b + y) * s.m_a + x) * s.m_a + x2
    }

    pub fn alpha(&self, a: usize, x: usize, y: usize, y2: usize) -> f64 {
        self.alpha[self.alpha_index(a, x, y, y2)]
    }

    pub fn beta(&self, b: usize, y: usize, x: usize, x2: usize) -> f64 {
        self.beta[self.beta_index(b, y, x, x2)]
    }

    /// Sets `α^{ax}_{yy'}` and its symmetric partner.
    pub fn set_alpha(&mut self, a: usize, x: usize, y: usize, y2: usize, v: f64) {
        if y == y2 {
            return;
        }
        let (i, j) = (self.alpha_index(a, x, y, y2), self.alpha_index(a, x, y2, y));
        self.alpha[i] = v;
        self.alpha[j] = v;
    }

    pub fn set_beta(&mut self, b: usize, y: usize, x: usize, x2: usize, v: f64) {
        if x == x2 {
            return;
        }
        let (i, j) = (self.beta_index(b, y, x, x2), self.beta_index(b, y, x2, x));
        self.beta[i] = v;
        self.beta[j] = v;
    }

    pub fn alpha_table(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta_table(&self) -> &[f64] {
        &self.beta
    }

    pub fn max_entry(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).copied().fold(0.0, f64::max)
    }

    /// True when every entry of `self` is ≤ the matching entry of `other`.
    pub fn le(&self, other: &SignallingBudget) -> bool {
        self.scenario == other.scenario
            && self.alpha.iter().zip(&other.alpha).all(|(a, b)| a <= b)
            && self.beta.iter().zip(&other.beta).all(|(a, b)| a <= b)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_entry(v: f64, diagonal: bool, asym: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidBudget(format!("{name} entry {v} outside [0,1]")));
    }
    if diagonal && v != 0.0 {
        return Err(Error::InvalidBudget(format!("{name} diagonal entry {v} must be zero")));
    }
    if asym.abs() > 1e-12 {
        return Err(Error::InvalidBudget(format!("{name} table is not symmetric")));
    }
    Ok(())
}

type Table4 = Vec<Vec<Vec<Vec<f64>>>>;

#[derive(Serialize, Deserialize)]
struct BudgetFile {
    alpha: Table4,
    beta: Table4,
}

fn dims4(t: &Table4) -> Option<[usize; 4]> {
    let d0 = t.len();
    let d1 = t.first()?.len();
    let d2 = t.first()?.first()?.len();
    let d3 = t.first()?.first()?.first()?.len();
    let ok = t.iter().all(|a| {
        a.len() == d1 && a.iter().all(|b| b.len() == d2 && b.iter().all(|c| c.len() == d3))
    });
    ok.then_some([d0, d1, d2, d3])
}

impl TryFrom<BudgetFile> for SignallingBudget {
    type Error = Error;

    fn try_from(f: BudgetFile) -> Result<Self> {
        let [n_a, m_a, m_b, m_b2] =
            dims4(&f.alpha).ok_or_else(|| Error::InvalidBudget("ragged alpha table".into()))?;
        let [n_b, m_b3, m_a2, m_a3] =
            dims4(&f.beta).ok_or_else(|| Error::InvalidBudget("ragged beta table".into()))?;
        if m_b != m_b2 || m_b != m_b3 || m_a != m_a2 || m_a != m_a3 {
            return Err(Error::InvalidBudget("alpha/beta shapes disagree".into()));
        }
        let scenario = Scenario::new(m_a, m_b, n_a, n_b)?;
        let b = SignallingBudget {
            scenario,
            alpha: f.alpha.into_iter().flatten().flatten().flatten().collect(),
            beta: f.beta.into_iter().flatten().flatten().flatten().collect(),
        };
        b.validate()?;
        Ok(b)
    }
}

impl From<SignallingBudget> for BudgetFile {
    fn from(b: SignallingBudget) -> Self {
        let s = b.scenario;
        let alpha = (0..s.n_a)
            .map(|a| {
                (0..s.m_a)
                    .map(|x| (0..s.m_b).map(|y| (0..s.m_b).map(|y2| b.alpha(a, x, y, y2)).collect()).collect())
                    .collect()
            })
            .collect();
        let beta = (0..s.n_b)
            .map(|o| {
                (0..s.m_b)
                    .map(|y| (0..s.m_a).map(|x| (0..s.m_a).map(|x2| b.beta(o, y, x, x2)).collect()).collect())
                    .collect()
            })
            .collect();
        BudgetFile { alpha, beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// Location of the largest marginal difference: `party`'s outcome `outcome`
/// at own setting `own`, compared across the other party's settings
/// `other1`/`other2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignallingEntry {
    pub party: Party,
    pub outcome: usize,
    pub own: usize,
    pub other1: usize,
    pub other2: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignallingReport {
    pub max_deviation: f64,
    pub compliant: bool,
    pub worst_entry: Option<SignallingEntry>,
}

/// Largest marginal change of either party across the other party's settings.
pub fn check_no_signalling(behavior: &Behavior, tol: f64) -> NoSignallingReport {
    let s = behavior.scenario();
    let mut max_deviation = 0.0;
    let mut worst = None;
    for a in 0..s.n_a {
        for x in 0..s.m_a {
            for y in 0..s.m_b {
                for y2 in (y + 1)..s.m_b {
                    let dev = (behavior.marginal_a(a, x, y) - behavior.marginal_a(a, x, y2)).abs();
                    if dev > max_deviation {
                        max_deviation = dev;
                        worst = Some(SignallingEntry { party: Party::Alice, outcome: a, own: x, other1: y, other2: y2 });
                    }
                }
            }
        }
    }
    for b in 0..s.n_b {
        for y in 0..s.m_b {
            for x in 0..s.m_a {
                for x2 in (x + 1)..s.m_a {
                    let dev = (behavior.marginal_b(b, x, y) - behavior.marginal_b(b, x2, y)).abs();
                    if dev > max_deviation {
                        max_deviation = dev;
                        worst = Some(SignallingEntry { party: Party::Bob, outcome: b, own: y, other1: x, other2: x2 });
                    }
                }
            }
        }
    }
    NoSignallingReport { max_deviation, compliant: max_deviation <= tol, worst_entry: worst }
}

/// Data-driven budget: observed marginal differences plus a uniform `slack`,
/// clamped to `[0, 1]`.
pub fn estimate_budgets(behavior: &Behavior, slack: f64) -> Result<SignallingBudget> {
    if !(slack >= 0.0) {
        return Err(Error::InvalidArgs(format!("slack must be nonnegative, got {slack}")));
    }
    let clamp = |v: f64| (v + slack).clamp(0.0, 1.0);
    SignallingBudget::from_fns(
        behavior.scenario(),
        |a, x, y, y2| clamp((behavior.marginal_a(a, x, y) - behavior.marginal_a(a, x, y2)).abs()),
        |b, y, x, x2| clamp((behavior.marginal_b(b, x, y) - behavior.marginal_b(b, x2, y)).abs()),
    )
}

/// `Σ_{x,y} c[x][y]·E_xy`.
pub fn bell_value(behavior: &Behavior, coefficients: &[Vec<f64>]) -> Result<f64> {
    let s = behavior.scenario();
    if !s.is_dichotomic() {
        return Err(Error::NotDichotomic { n_a: s.n_a, n_b: s.n_b });
    }
    if coefficients.len() != s.m_a || coefficients.iter().any(|r| r.len() != s.m_b) {
        return Err(Error::InvalidArgs(format!(
            "coefficient table must be {}x{}",
            s.m_a, s.m_b
        )));
    }
    let mut w = 0.0;
    for (x, row) in coefficients.iter().enumerate() {
        for (y, c) in row.iter().enumerate() {
            w += c * behavior.correlator(x, y)?;
        }
    }
    Ok(w)
}

/// CHSH coefficients `c_xy = (−1)^{xy}`.
pub fn chsh_coefficients() -> Vec<Vec<f64>> {
    vec![vec![1.0, 1.0], vec![1.0, -1.0]]
}

/// Raw event counts `[x][y][ã][b̃]` where index `nA` (resp. `nB`) is the
/// no-click symbol ∅.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CountsFile", into = "CountsFile")]
pub struct CountsTable {
    scenario: Scenario,
    counts: Vec<u64>,
}

impl CountsTable {
    pub fn new(scenario: Scenario, counts: Vec<u64>) -> Result<Self> {
        scenario.validate()?;
        let len = scenario.m_a * scenario.m_b * (scenario.n_a + 1) * (scenario.n_b + 1);
        if counts.len() != len {
            return Err(Error::InvalidArgs(format!("expected {len} counts, got {}", counts.len())));
        }
        Ok(Self { scenario, counts })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `ã`, `b̃` range over `0..=n`; the last value is ∅.
    #[inline]
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> u64 {
        let s = self.scenario;
        self.counts[((x * s.m_b + y) * (s.n_a + 1) + a) * (s.n_b + 1) + b]
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CountsFile {
    #[serde(flatten)]
    scenario: Scenario,
    /// `[x][y]` → `{"ã,b̃": count}` with `"null"` for ∅; absent keys are zero.
    counts: Vec<Vec<BTreeMap<String, u64>>>,
}

fn parse_outcome(tok: &str, n: usize) -> Option<usize> {
    match tok.trim() {
        "null" => Some(n),
        t => t.parse::<usize>().ok().filter(|&v| v < n),
    }
}

fn outcome_label(v: usize, n: usize) -> String {
    if v == n {
        "null".to_string()
    } else {
        v.to_string()
    }
}

impl TryFrom<CountsFile> for CountsTable {
    type Error = Error;

    fn try_from(f: CountsFile) -> Result<Self> {
        let s = f.scenario;
        s.validate()?;
        if f.counts.len() != s.m_a || f.counts.iter().any(|r| r.len() != s.m_b) {
            return Err(Error::InvalidArgs(format!("counts must be an {}x{} table", s.m_a, s.m_b)));
        }
        let mut counts = vec![0u64; s.m_a * s.m_b * (s.n_a + 1) * (s.n_b + 1)];
        for (x, row) in f.counts.iter().enumerate() {
            for (y, cell) in row.iter().enumerate() {
                for (key, &n) in cell {
                    let parsed = key.split_once(',').and_then(|(ka, kb)| {
                        Some((parse_outcome(ka, s.n_a)?, parse_outcome(kb, s.n_b)?))
                    });
                    let (a, b) = parsed.ok_or_else(|| {
                        Error::InvalidArgs(format!("bad outcome key {key:?} in cell (x={x}, y={y})"))
                    })?;
                    counts[((x * s.m_b + y) * (s.n_a + 1) + a) * (s.n_b + 1) + b] += n;
                }
            }
        }
        CountsTable::new(s, counts)
    }
}

impl From<CountsTable> for CountsFile {
    fn from(t: CountsTable) -> Self {
        let s = t.scenario;
        let counts = (0..s.m_a)
            .map(|x| {
                (0..s.m_b)
                    .map(|y| {
                        let mut m = BTreeMap::new();
                        for a in 0..=s.n_a {
                            for b in 0..=s.n_b {
                                let n = t.get(x, y, a, b);
                                if n > 0 {
                                    m.insert(format!("{},{}", outcome_label(a, s.n_a), outcome_label(b, s.n_b)), n);
                                }
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect();
        CountsFile { scenario: s, counts }
    }
}

/// Post-selected behavior and per-party detection efficiencies estimated
/// from raw counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedCounts {
    pub behavior: Behavior,
    /// `[a][x]`
    #[serde(rename = "etaA")]
    pub eta_a: Vec<Vec<f64>>,
    /// `[b][y]`
    #[serde(rename = "etaB")]
    pub eta_b: Vec<Vec<f64>>,
}

/// Efficiency spread across the other party's settings above which a warning
/// is logged.
pub const EFFICIENCY_SPREAD_WARN: f64 = 1e-2;

/// Post-selects the joint click events and estimates
/// `η_{a|x} = n(a)/(n(a) + n(∅))` per cell, averaged over the other party's
/// setting. Outcomes that never occur in a cell (and no ∅ either) carry no
/// information there and are skipped; an efficiency with no information
/// anywhere defaults to one.
pub fn behavior_from_counts(counts: &CountsTable) -> Result<IngestedCounts> {
    let s = counts.scenario();
    let (na, nb) = (s.n_a, s.n_b);
    let mut p = vec![0.0; s.table_len()];
    for x in 0..s.m_a {
        for y in 0..s.m_b {
            let total: u64 = (0..na).flat_map(|a| (0..nb).map(move |b| (a, b))).map(|(a, b)| counts.get(x, y, a, b)).sum();
            if total == 0 {
                return Err(Error::EmptyCell { x, y });
            }
            for a in 0..na {
                for b in 0..nb {
                    p[s.index(x, y, a, b)] = counts.get(x, y, a, b) as f64 / total as f64;
                }
            }
        }
    }
    let behavior = Behavior::new(s, p)?;

    let row_a = |x: usize, y: usize, a: usize| -> u64 { (0..=nb).map(|b| counts.get(x, y, a, b)).sum() };
    let col_b = |x: usize, y: usize, b: usize| -> u64 { (0..=na).map(|a| counts.get(x, y, a, b)).sum() };

    let average = |samples: Vec<f64>, what: String| -> f64 {
        if samples.is_empty() {
            return 1.0;
        }
        let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if hi - lo > EFFICIENCY_SPREAD_WARN {
            log::warn!("{what}: efficiency varies by {:.3e} across the other party's settings", hi - lo);
        }
        samples.iter().sum::<f64>() / samples.len() as f64
    };

    let eta_a = (0..na)
        .map(|a| {
            (0..s.m_a)
                .map(|x| {
                    let samples = (0..s.m_b)
                        .filter_map(|y| {
                            let (hit, miss) = (row_a(x, y, a), row_a(x, y, na));
                            (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64)
                        })
                        .collect();
                    average(samples, format!("etaA[a={a}][x={x}]"))
                })
                .collect()
        })
        .collect();
    let eta_b = (0..nb)
        .map(|b| {
            (0..s.m_b)
                .map(|y| {
                    let samples = (0..s.m_a)
                        .filter_map(|x| {
                            let (hit, miss) = (col_b(x, y, b), col_b(x, y, nb));
                            (hit + miss > 0).then(|| hit as f64 / (hit + miss) as f64)
                        })
                        .collect();
                    average(samples, format!("etaB[b={b}][y={y}]"))
                })
                .collect()
        })
        .collect();

    Ok(IngestedCounts { behavior, eta_a, eta_b })
}
