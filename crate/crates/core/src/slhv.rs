//! Signalling local hidden-variable (SLHV) models: deterministic strategy
//! enumeration, the visibility LP, its explicit dual and inequality
//! extraction, and seeded sampling of SLHV behaviors.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sigcert_conic::{solve, ConicProblem, LinExpr, Sense, SolverSettings, Status, VarId};

use crate::error::{Error, Result};
use crate::require_optimal;
use crate::scenario::{Behavior, Scenario, SignallingBudget};

/// Default cap on the number of enumerated strategies.
pub const DEFAULT_STRATEGY_CAP: u64 = 1 << 20;

/// A deterministic signalling strategy `a = dA(x,y)`, `b = dB(x,y)` with its
/// precomputed signalling costs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    scenario: Scenario,
    /// `[x][y]`
    d_a: Vec<u8>,
    /// `[x][y]`
    d_b: Vec<u8>,
    /// `[a][x][y][y']`, entries in {0, 1}
    alpha_cost: Vec<u8>,
    /// `[b][y][x][x']`, entries in {0, 1}
    beta_cost: Vec<u8>,
}

impl DeterministicStrategy {
    fn new(scenario: Scenario, d_a: Vec<u8>, d_b: Vec<u8>) -> Self {
        let s = scenario;
        let mut alpha_cost = vec![0u8; s.n_a * s.m_a * s.m_b * s.m_b];
        let mut beta_cost = vec![0u8; s.n_b * s.m_b * s.m_a * s.m_a];
        for a in 0..s.n_a {
            for x in 0..s.m_a {
                for y in 0..s.m_b {
                    for y2 in 0..s.m_b {
                        let hit = |yy: usize| (d_a[x * s.m_b + yy] as usize == a) as u8;
                        alpha_cost[((a * s.m_a + x) * s.m_b + y) * s.m_b + y2] = hit(y) ^ hit(y2);
                    }
                }
            }
        }
        for b in 0..s.n_b {
            for y in 0..s.m_b {
                for x in 0..s.m_a {
                    for x2 in 0..s.m_a {
                        let hit = |xx: usize| (d_b[xx * s.m_b + y] as usize == b) as u8;
                        beta_cost[((b * s.m_b + y) * s.m_a + x) * s.m_a + x2] = hit(x) ^ hit(x2);
                    }
                }
            }
        }
        Self { scenario, d_a, d_b, alpha_cost, beta_cost }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn output_a(&self, x: usize, y: usize) -> usize {
        self.d_a[x * self.scenario.m_b + y] as usize
    }

    pub fn output_b(&self, x: usize, y: usize) -> usize {
        self.d_b[x * self.scenario.m_b + y] as usize
    }

    /// `|𝟙[dA(x,y)=a] − 𝟙[dA(x,y')=a]|`
    pub fn alpha_cost(&self, a: usize, x: usize, y: usize, y2: usize) -> u8 {
        let s = self.scenario;
        self.alpha_cost[((a * s.m_a + x) * s.m_b + y) * s.m_b + y2]
    }

    /// `|𝟙[dB(x,y)=b] − 𝟙[dB(x',y)=b]|`
    pub fn beta_cost(&self, b: usize, y: usize, x: usize, x2: usize) -> u8 {
        let s = self.scenario;
        self.beta_cost[((b * s.m_b + y) * s.m_a + x) * s.m_a + x2]
    }

    pub fn is_local(&self) -> bool {
        self.alpha_cost.iter().chain(&self.beta_cost).all(|&c| c == 0)
    }

    /// The deterministic behavior `D^A(a|x,y)·D^B(b|x,y)`.
    pub fn behavior(&self) -> Behavior {
        Behavior::from_fn(self.scenario, |x, y, a, b| {
            (self.output_a(x, y) == a && self.output_b(x, y) == b) as u8 as f64
        })
        .expect("deterministic tables are valid")
    }
}

/// Number of strategies, or `TooLarge` when above `cap`.
pub fn strategy_count(scenario: Scenario, cap: u64) -> Result<usize> {
    let count = scenario.strategy_count().ok_or(Error::TooLarge { count: u128::MAX, cap })?;
    if count > cap as u128 {
        return Err(Error::TooLarge { count, cap });
    }
    Ok(count as usize)
}

/// All `nA^(mA·mB)·nB^(mA·mB)` strategies. Index `λ = iA + nA^(mA·mB)·iB`
/// where `iA` lists `dA` in base `nA` over the pairs `(x,y)` in x-major
/// order, least significant digit first (so `dA` varies fastest).
pub fn enumerate_strategies(scenario: Scenario) -> Result<Vec<DeterministicStrategy>> {
    enumerate_strategies_with_cap(scenario, DEFAULT_STRATEGY_CAP)
}

pub fn enumerate_strategies_with_cap(scenario: Scenario, cap: u64) -> Result<Vec<DeterministicStrategy>> {
    let total = strategy_count(scenario, cap)?;
    let s = scenario;
    if s.n_a > 256 || s.n_b > 256 {
        return Err(Error::InvalidScenario("outcome counts above 256 are unsupported".into()));
    }
    let pairs = s.m_a * s.m_b;
    let count_a = s.n_a.pow(pairs as u32);
    let digits = |mut i: usize, base: usize| -> Vec<u8> {
        (0..pairs)
            .map(|_| {
                let d = (i % base) as u8;
                i /= base;
                d
            })
            .collect()
    };
    Ok((0..total)
        .map(|l| DeterministicStrategy::new(s, digits(l % count_a, s.n_a), digits(l / count_a, s.n_b)))
        .collect())
}

/// Budget rows: one per `(a, x, y<y')` and `(b, y, x<x')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BudgetRow {
    Alpha { a: usize, x: usize, y: usize, y2: usize },
    Beta { b: usize, y: usize, x: usize, x2: usize },
}

fn budget_rows(s: Scenario) -> Vec<BudgetRow> {
    let mut rows = Vec::new();
    for a in 0..s.n_a {
        for x in 0..s.m_a {
            for y in 0..s.m_b {
                for y2 in (y + 1)..s.m_b {
                    rows.push(BudgetRow::Alpha { a, x, y, y2 });
                }
            }
        }
    }
    for b in 0..s.n_b {
        for y in 0..s.m_b {
            for x in 0..s.m_a {
                for x2 in (x + 1)..s.m_a {
                    rows.push(BudgetRow::Beta { b, y, x, x2 });
                }
            }
        }
    }
    rows
}

impl BudgetRow {
    fn cost(&self, st: &DeterministicStrategy) -> u8 {
        match *self {
            BudgetRow::Alpha { a, x, y, y2 } => st.alpha_cost(a, x, y, y2),
            BudgetRow::Beta { b, y, x, x2 } => st.beta_cost(b, y, x, x2),
        }
    }

    fn limit(&self, budget: &SignallingBudget) -> f64 {
        match *self {
            BudgetRow::Alpha { a, x, y, y2 } => budget.alpha(a, x, y, y2),
            BudgetRow::Beta { b, y, x, x2 } => budget.beta(b, y, x, x2),
        }
    }
}

/// LP columns after merging strategies with identical behavior and costs.
struct Columns {
    /// representative strategy index per column
    reps: Vec<usize>,
    /// column of each strategy
    column_of: Vec<usize>,
}

fn dedup_columns(strategies: &[DeterministicStrategy]) -> Columns {
    let mut seen: HashMap<(&[u8], &[u8], &[u8], &[u8]), usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut column_of = Vec::with_capacity(strategies.len());
    for (l, st) in strategies.iter().enumerate() {
        let key = (st.d_a.as_slice(), st.d_b.as_slice(), st.alpha_cost.as_slice(), st.beta_cost.as_slice());
        let col = *seen.entry(key).or_insert_with(|| {
            reps.push(l);
            reps.len() - 1
        });
        column_of.push(col);
    }
    Columns { reps, column_of }
}

fn check_compatible(behavior: &Behavior, budget: &SignallingBudget) -> Result<()> {
    if behavior.scenario() != budget.scenario() {
        return Err(Error::InvalidBudget(format!(
            "budget scenario {:?} does not match behavior scenario {:?}",
            budget.scenario(),
            behavior.scenario()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub v: f64,
    /// Weight `q_λ` per enumerated strategy.
    pub weights: Vec<f64>,
    pub status: Status,
    pub gap: f64,
    pub max_residual: f64,
}

/// Largest `v` such that `v·p + (1−v)/(nA·nB)` is an SLHV behavior under
/// `budget`.
pub fn visibility(behavior: &Behavior, budget: &SignallingBudget, settings: &SolverSettings) -> Result<VisibilityResult> {
    let strategies = enumerate_strategies(behavior.scenario())?;
    visibility_with(&strategies, behavior, budget, settings)
}

/// As [`visibility`] with a precomputed strategy list.
pub fn visibility_with(
    strategies: &[DeterministicStrategy],
    behavior: &Behavior,
    budget: &SignallingBudget,
    settings: &SolverSettings,
) -> Result<VisibilityResult> {
    check_compatible(behavior, budget)?;
    let s = behavior.scenario();
    let cols = dedup_columns(strategies);
    let u = 1.0 / (s.n_a * s.n_b) as f64;

    let mut lp = ConicProblem::new();
    let v = lp.free_var();
    let q = lp.nonneg_vars(cols.reps.len());

    let mut rows: Vec<LinExpr> = (0..s.table_len()).map(|_| LinExpr::zero()).collect();
    for (k, &l) in cols.reps.iter().enumerate() {
        let st = &strategies[l];
        for x in 0..s.m_a {
            for y in 0..s.m_b {
                rows[s.index(x, y, st.output_a(x, y), st.output_b(x, y))].add_term(q[k], 1.0);
            }
        }
    }
    for (i, mut row) in rows.into_iter().enumerate() {
        row.add_term(v, u - behavior.table()[i]);
        lp.add_eq(row, u);
    }
    lp.add_eq(q.iter().fold(LinExpr::zero(), |acc, &qk| acc + qk.into()), 1.0);
    for row in budget_rows(s) {
        let mut e = LinExpr::zero();
        for (k, &l) in cols.reps.iter().enumerate() {
            if row.cost(&strategies[l]) != 0 {
                e.add_term(q[k], 1.0);
            }
        }
        lp.add_le(e, row.limit(budget));
    }
    lp.add_le(v.into(), 1.0);
    lp.set_objective(Sense::Maximize, v.into());

    let rep = solve(&lp, settings)?;
    require_optimal(&rep, "visibility LP")?;
    let col_weight: Vec<f64> = q.iter().map(|&qk| rep.value(qk)).collect();
    // Split merged weight evenly among duplicates.
    let mut multiplicity = vec![0usize; cols.reps.len()];
    cols.column_of.iter().for_each(|&c| multiplicity[c] += 1);
    let weights = cols.column_of.iter().map(|&c| col_weight[c] / multiplicity[c] as f64).collect();
    Ok(VisibilityResult {
        v: rep.value(v),
        weights,
        status: rep.status,
        gap: rep.gap,
        max_residual: rep.max_residual,
    })
}

/// Inequality `Σ c·p ≥ bound` satisfied by every SLHV behavior under the
/// budget it was derived against, with `bound = μ − Σ d·α − Σ e·β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InequalityFile", into = "InequalityFile")]
pub struct SignallingBellInequality {
    scenario: Scenario,
    /// `[x][y][a][b]`, the behavior layout
    pub c: Vec<f64>,
    pub mu: f64,
    /// `[a][x][y][y']`
    pub d: Vec<f64>,
    /// `[b][y][x][x']`
    pub e: Vec<f64>,
    pub bound: f64,
    pub budget_ref: Option<String>,
}

impl SignallingBellInequality {
    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// `Σ c·p`.
    pub fn evaluate(&self, behavior: &Behavior) -> f64 {
        self.c.iter().zip(behavior.table()).map(|(c, p)| c * p).sum()
    }

    /// `μ − Σ d·α − Σ e·β` for an arbitrary budget.
    pub fn bound_for(&self, budget: &SignallingBudget) -> f64 {
        let da: f64 = self.d.iter().zip(budget.alpha_table()).map(|(d, a)| d * a).sum();
        let eb: f64 = self.e.iter().zip(budget.beta_table()).map(|(e, b)| e * b).sum();
        self.mu - da - eb
    }

    /// True when `Σ c·p < bound − tol`.
    pub fn is_violated(&self, behavior: &Behavior, tol: f64) -> bool {
        self.evaluate(behavior) < self.bound - tol
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

type Nested4 = Vec<Vec<Vec<Vec<f64>>>>;

fn nest4(flat: &[f64], dims: [usize; 4]) -> Nested4 {
    let [_, d1, d2, d3] = dims;
    (0..dims[0])
        .map(|i| {
            (0..d1)
                .map(|j| (0..d2).map(|k| (0..d3).map(|l| flat[((i * d1 + j) * d2 + k) * d3 + l]).collect()).collect())
                .collect()
        })
        .collect()
}

fn flatten4(t: Nested4, dims: [usize; 4], what: &str) -> Result<Vec<f64>> {
    let ok = t.len() == dims[0]
        && t.iter().all(|a| {
            a.len() == dims[1] && a.iter().all(|b| b.len() == dims[2] && b.iter().all(|c| c.len() == dims[3]))
        });
    if !ok {
        return Err(Error::InvalidArgs(format!("{what} table has the wrong shape, expected {dims:?}")));
    }
    Ok(t.into_iter().flatten().flatten().flatten().collect())
}

#[derive(Serialize, Deserialize)]
struct InequalityFile {
    c: Nested4,
    mu: f64,
    d: Nested4,
    e: Nested4,
    bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    budget_ref: Option<String>,
}

impl TryFrom<InequalityFile> for SignallingBellInequality {
    type Error = Error;
    fn try_from(f: InequalityFile) -> Result<Self> {
        let m_a = f.c.len();
        let m_b = f.c.first().map_or(0, |r| r.len());
        let n_a = f.c.first().and_then(|r| r.first()).map_or(0, |r| r.len());
        let n_b = f.c.first().and_then(|r| r.first()).and_then(|r| r.first()).map_or(0, |r| r.len());
        let s = Scenario::new(m_a, m_b, n_a, n_b)?;
        Ok(Self {
            scenario: s,
            c: flatten4(f.c, [m_a, m_b, n_a, n_b], "c")?,
            mu: f.mu,
            d: flatten4(f.d, [n_a, m_a, m_b, m_b], "d")?,
            e: flatten4(f.e, [n_b, m_b, m_a, m_a], "e")?,
            bound: f.bound,
            budget_ref: f.budget_ref,
        })
    }
}

impl From<SignallingBellInequality> for InequalityFile {
    fn from(i: SignallingBellInequality) -> Self {
        let s = i.scenario;
        InequalityFile {
            c: nest4(&i.c, [s.m_a, s.m_b, s.n_a, s.n_b]),
            mu: i.mu,
            d: nest4(&i.d, [s.n_a, s.m_a, s.m_b, s.m_b]),
            e: nest4(&i.e, [s.n_b, s.m_b, s.m_a, s.m_a]),
            bound: i.bound,
            budget_ref: i.budget_ref,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualResult {
    pub objective: f64,
    pub inequality: SignallingBellInequality,
    pub gap: f64,
    pub max_residual: f64,
}

/// Solves the dual of the visibility LP directly:
///
/// `min 1 − μ + Σ c·p + Σ d·α + Σ e·β`
/// s.t. `1 + Σ c·(p − u) ≥ 0`, `Σ c·D_λ + Σ d·R_λ + Σ e·T_λ ≥ μ` for every
/// strategy `λ`, `d, e ≥ 0`.
pub fn dual_visibility(behavior: &Behavior, budget: &SignallingBudget, settings: &SolverSettings) -> Result<DualResult> {
    let strategies = enumerate_strategies(behavior.scenario())?;
    dual_visibility_with(&strategies, behavior, budget, settings)
}

pub fn dual_visibility_with(
    strategies: &[DeterministicStrategy],
    behavior: &Behavior,
    budget: &SignallingBudget,
    settings: &SolverSettings,
) -> Result<DualResult> {
    check_compatible(behavior, budget)?;
    let s = behavior.scenario();
    let cols = dedup_columns(strategies);
    let u = 1.0 / (s.n_a * s.n_b) as f64;
    let rows = budget_rows(s);

    let mut lp = ConicProblem::new();
    let c = lp.free_vars(s.table_len());
    let mu = lp.free_var();
    let w: Vec<VarId> = lp.nonneg_vars(rows.len());

    let mut objective = LinExpr::constant(1.0) - mu.into();
    let mut normalisation = LinExpr::constant(1.0);
    for (i, &ci) in c.iter().enumerate() {
        let p = behavior.table()[i];
        objective.add_term(ci, p);
        normalisation.add_term(ci, p - u);
    }
    for (row, &wr) in rows.iter().zip(&w) {
        objective.add_term(wr, row.limit(budget));
    }
    lp.add_ge(normalisation, 0.0);
    // Adding a constant to one (x, y) block of c changes neither the objective
    // nor any constraint; pinning each block sum removes that flat direction.
    for x in 0..s.m_a {
        for y in 0..s.m_b {
            let mut block = LinExpr::zero();
            for a in 0..s.n_a {
                for b in 0..s.n_b {
                    block.add_term(c[s.index(x, y, a, b)], 1.0);
                }
            }
            lp.add_eq(block, 0.0);
        }
    }
    for &l in &cols.reps {
        let st = &strategies[l];
        let mut e = LinExpr::term(mu, -1.0);
        for x in 0..s.m_a {
            for y in 0..s.m_b {
                e.add_term(c[s.index(x, y, st.output_a(x, y), st.output_b(x, y))], 1.0);
            }
        }
        for (row, &wr) in rows.iter().zip(&w) {
            if row.cost(st) != 0 {
                e.add_term(wr, 1.0);
            }
        }
        lp.add_ge(e, 0.0);
    }
    lp.set_objective(Sense::Minimize, objective);

    let rep = solve(&lp, settings)?;
    require_optimal(&rep, "dual visibility LP")?;

    let mut d = vec![0.0; s.n_a * s.m_a * s.m_b * s.m_b];
    let mut e = vec![0.0; s.n_b * s.m_b * s.m_a * s.m_a];
    for (row, &wr) in rows.iter().zip(&w) {
        let val = rep.value(wr).max(0.0);
        match *row {
            BudgetRow::Alpha { a, x, y, y2 } => d[((a * s.m_a + x) * s.m_b + y) * s.m_b + y2] = val,
            BudgetRow::Beta { b, y, x, x2 } => e[((b * s.m_b + y) * s.m_a + x) * s.m_a + x2] = val,
        }
    }
    let mut inequality = SignallingBellInequality {
        scenario: s,
        c: c.iter().map(|&v| rep.value(v)).collect(),
        mu: rep.value(mu),
        d,
        e,
        bound: 0.0,
        budget_ref: None,
    };
    inequality.bound = inequality.bound_for(budget);
    Ok(DualResult { objective: rep.objective, inequality, gap: rep.gap, max_residual: rep.max_residual })
}

/// SLHV behavior `Σ q_λ D^A_λ D^B_λ` at a vertex of the budget-feasible
/// weight set picked by a seeded random objective.
pub fn sample_slhv(scenario: Scenario, budget: &SignallingBudget, seed: u64, settings: &SolverSettings) -> Result<Behavior> {
    let strategies = enumerate_strategies(scenario)?;
    sample_slhv_with(&strategies, budget, seed, settings)
}

pub fn sample_slhv_with(
    strategies: &[DeterministicStrategy],
    budget: &SignallingBudget,
    seed: u64,
    settings: &SolverSettings,
) -> Result<Behavior> {
    let s = budget.scenario();
    if strategies.first().map(|st| st.scenario) != Some(s) {
        return Err(Error::InvalidBudget("strategy list does not match the budget scenario".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = budget_rows(s);

    let mut lp = ConicProblem::new();
    let q = lp.nonneg_vars(strategies.len());
    let mut objective = LinExpr::zero();
    for &ql in &q {
        objective.add_term(ql, rng.gen::<f64>());
    }
    lp.add_eq(q.iter().fold(LinExpr::zero(), |acc, &ql| acc + ql.into()), 1.0);
    for row in &rows {
        let mut e = LinExpr::zero();
        for (st, &ql) in strategies.iter().zip(&q) {
            if row.cost(st) != 0 {
                e.add_term(ql, 1.0);
            }
        }
        lp.add_le(e, row.limit(budget));
    }
    lp.set_objective(Sense::Maximize, objective);
    let rep = solve(&lp, settings)?;
    require_optimal(&rep, "SLHV sampling LP")?;

    let mut w: Vec<f64> = q.iter().map(|&ql| rep.value(ql).max(0.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    // Solver tolerance can leave budget rows marginally violated; mixing
    // with the zero-cost strategy λ = 0 restores them exactly.
    let zero = strategies.iter().position(DeterministicStrategy::is_local).unwrap_or(0);
    let mut t: f64 = 0.0;
    for row in &rows {
        let load: f64 = strategies.iter().zip(&w).filter(|(st, _)| row.cost(st) != 0).map(|(_, x)| x).sum();
        let lim = row.limit(budget);
        if load > lim {
            t = t.max(1.0 - lim / load);
        }
    }
    if t > 0.0 {
        w.iter_mut().for_each(|x| *x *= 1.0 - t);
        w[zero] += t;
    }

    let mut p = vec![0.0; s.table_len()];
    for (st, &ql) in strategies.iter().zip(&w) {
        if ql == 0.0 {
            continue;
        }
        for x in 0..s.m_a {
            for y in 0..s.m_b {
                p[s.index(x, y, st.output_a(x, y), st.output_b(x, y))] += ql;
            }
        }
    }
    Behavior::new(s, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::{standard_behavior, StandardBehavior};
    use crate::scenario::estimate_budgets;
    use approx::assert_abs_diff_eq;

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn chsh_has_256_strategies_and_cap_is_enforced() {
        let st = enumerate_strategies(Scenario::chsh()).unwrap();
        assert_eq!(st.len(), 256);
        assert_eq!(st.iter().filter(|s| s.is_local()).count(), 16);
        let big = Scenario::new(3, 3, 3, 3).unwrap();
        match enumerate_strategies(big) {
            Err(Error::TooLarge { count, cap }) => {
                assert_eq!(count, 3u128.pow(18));
                assert_eq!(cap, DEFAULT_STRATEGY_CAP);
            }
            other => panic!("expected TooLarge, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_order_has_alice_fastest() {
        let st = enumerate_strategies(Scenario::chsh()).unwrap();
        // λ = 1: dA digit (x=0,y=0) is 1, everything else 0.
        assert_eq!(st[1].output_a(0, 0), 1);
        assert_eq!(st[1].output_a(0, 1), 0);
        // λ = 2: digit k = x·mB + y = 1 → (x=0, y=1).
        assert_eq!(st[2].output_a(0, 1), 1);
        // λ = 16: first Bob digit.
        assert_eq!(st[16].output_b(0, 0), 1);
        assert_eq!(st[16].output_a(0, 0), 0);
    }

    #[test]
    fn cost_tables_follow_definition() {
        let st = enumerate_strategies(Scenario::chsh()).unwrap();
        // dA(x,y) = x: independent of y.
        let by_x = st.iter().find(|s| (0..2).all(|x| (0..2).all(|y| s.output_a(x, y) == x))).unwrap();
        assert!((0..2).all(|a| (0..2).all(|x| by_x.alpha_cost(a, x, 0, 1) == 0)));
        // dA(x,y) = y.
        let by_y = st.iter().find(|s| (0..2).all(|x| (0..2).all(|y| s.output_a(x, y) == y))).unwrap();
        assert!((0..2).all(|x| by_y.alpha_cost(0, x, 0, 1) == 1 && by_y.alpha_cost(0, x, 1, 0) == 1));
        assert!((0..2).all(|x| by_y.alpha_cost(0, x, 0, 0) == 0));
    }

    #[test]
    fn deterministic_local_behavior_has_unit_visibility() {
        let st = enumerate_strategies(Scenario::chsh()).unwrap();
        let zero = SignallingBudget::zeros(Scenario::chsh());
        for s in st.iter().filter(|s| s.is_local()).take(4) {
            let r = visibility_with(&st, &s.behavior(), &zero, &settings()).unwrap();
            assert_abs_diff_eq!(r.v, 1.0, epsilon = 1e-6);
            let d = dual_visibility_with(&st, &s.behavior(), &zero, &settings()).unwrap();
            assert!(d.objective >= 1.0 - 1e-6);
            assert!(!d.inequality.is_violated(&s.behavior(), 1e-6));
        }
    }

    #[test]
    fn pr_box_reference_values() {
        let pr = standard_behavior(StandardBehavior::PrBox);
        let zero = SignallingBudget::zeros(Scenario::chsh());
        assert_abs_diff_eq!(visibility(&pr, &zero, &settings()).unwrap().v, 0.5, epsilon = 1e-6);
        let full = SignallingBudget::uniform(Scenario::chsh(), 1.0).unwrap();
        assert!(visibility(&pr, &full, &settings()).unwrap().v >= 1.0 - 1e-6);
    }

    #[test]
    fn tsirelson_dual_is_a_chsh_facet() {
        let p = standard_behavior(StandardBehavior::IdealQuantumChsh);
        let zero = SignallingBudget::zeros(Scenario::chsh());
        let primal = visibility(&p, &zero, &settings()).unwrap();
        let dual = dual_visibility(&p, &zero, &settings()).unwrap();
        assert_abs_diff_eq!(primal.v, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
        assert!((dual.objective - primal.v).abs() < 1e-6);
        assert!(dual.inequality.is_violated(&p, 1e-6));
        let w: f64 = primal.weights.iter().sum();
        assert_abs_diff_eq!(w, 1.0, epsilon = 1e-7);
        assert!(primal.weights.iter().all(|&q| q > -1e-8));
    }

    #[test]
    fn weights_reproduce_the_mixed_behavior() {
        let p = standard_behavior(StandardBehavior::IdealQuantumChsh);
        let st = enumerate_strategies(Scenario::chsh()).unwrap();
        let zero = SignallingBudget::zeros(Scenario::chsh());
        let r = visibility_with(&st, &p, &zero, &settings()).unwrap();
        let s = p.scenario();
        let mut model = vec![0.0; s.table_len()];
        for (strat, &q) in st.iter().zip(&r.weights) {
            for (m, d) in model.iter_mut().zip(strat.behavior().table()) {
                *m += q * d;
            }
        }
        for (i, m) in model.iter().enumerate() {
            let target = r.v * p.table()[i] + (1.0 - r.v) * 0.25;
            assert_abs_diff_eq!(*m, target, epsilon = 1e-6);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_respects_budget() {
        let budget = SignallingBudget::uniform(Scenario::chsh(), 0.15).unwrap();
        let a = sample_slhv(Scenario::chsh(), &budget, 7, &settings()).unwrap();
        let b = sample_slhv(Scenario::chsh(), &budget, 7, &settings()).unwrap();
        assert_eq!(a, b);
        let observed = estimate_budgets(&a, 0.0).unwrap();
        assert!(observed.le(&budget));
        let zero = SignallingBudget::zeros(Scenario::chsh());
        let local = sample_slhv(Scenario::chsh(), &zero, 3, &settings()).unwrap();
        assert_abs_diff_eq!(visibility(&local, &zero, &settings()).unwrap().v, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn inequality_json_roundtrip() {
        let p = standard_behavior(StandardBehavior::IdealQuantumChsh);
        let budget = SignallingBudget::uniform(Scenario::chsh(), 0.02).unwrap();
        let d = dual_visibility(&p, &budget, &settings()).unwrap();
        let back = SignallingBellInequality::from_json(&d.inequality.to_json().unwrap()).unwrap();
        assert_eq!(back, d.inequality);
        assert_abs_diff_eq!(back.bound_for(&budget), back.bound, epsilon = 1e-12);
    }

    #[test]
    fn mismatched_budget_is_rejected() {
        let p = standard_behavior(StandardBehavior::Uniform);
        let other = SignallingBudget::zeros(Scenario::new(2, 3, 2, 2).unwrap());
        assert!(matches!(visibility(&p, &other, &settings()), Err(Error::InvalidBudget(_))));
    }
}
