//! Analytic signalling corrections to full-correlation dichotomic Bell
//! inequalities `Σ c_xy E_xy ≤ W_LHV`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::SignallingBudget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedBound {
    pub base: f64,
    pub correction: f64,
    pub total: f64,
    /// Minimising `ỹ_x` for each `x`.
    pub chosen_y: Vec<usize>,
    /// Minimising `x̃_y` for each `y`.
    pub chosen_x: Vec<usize>,
    /// `Σ |c_xy|`, the largest value any behavior can reach.
    pub algebraic_max: f64,
    /// The corrected bound is at or above the algebraic maximum.
    pub vacuous: bool,
}

/// `W_LHV + min over (ỹ_x), (x̃_y) of Σ_{x,y} |c_xy| (Σ_a α^{ax}_{y ỹ_x} + Σ_b β^{by}_{x x̃_y})`.
///
/// Each `ỹ_x` only enters the terms with that `x` (and each `x̃_y` only
/// those with that `y`), so the minimum is taken per entry. Ties go to the
/// smallest index.
pub fn corrected_full_correlation_bound(c: &[Vec<f64>], w_lhv: f64, budget: &SignallingBudget) -> Result<CorrectedBound> {
    let s = budget.scenario();
    if !s.is_dichotomic() {
        return Err(Error::NotDichotomic { n_a: s.n_a, n_b: s.n_b });
    }
    if c.len() != s.m_a || c.iter().any(|r| r.len() != s.m_b) {
        return Err(Error::InvalidArgs(format!("coefficient table must be {}x{}", s.m_a, s.m_b)));
    }

    let argmin = |n: usize, f: &dyn Fn(usize) -> f64| -> (usize, f64) {
        (0..n).map(|i| (i, f(i))).fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    };

    let mut alpha_part = 0.0;
    let mut chosen_y = Vec::with_capacity(s.m_a);
    for (x, row) in c.iter().enumerate() {
        let cost = |yt: usize| -> f64 {
            row.iter()
                .enumerate()
                .map(|(y, cxy)| cxy.abs() * (0..s.n_a).map(|a| budget.alpha(a, x, y, yt)).sum::<f64>())
                .sum()
        };
        let (best, val) = argmin(s.m_b, &cost);
        chosen_y.push(best);
        alpha_part += val;
    }
    let mut beta_part = 0.0;
    let mut chosen_x = Vec::with_capacity(s.m_b);
    for y in 0..s.m_b {
        let cost = |xt: usize| -> f64 {
            (0..s.m_a)
                .map(|x| c[x][y].abs() * (0..s.n_b).map(|b| budget.beta(b, y, x, xt)).sum::<f64>())
                .sum()
        };
        let (best, val) = argmin(s.m_a, &cost);
        chosen_x.push(best);
        beta_part += val;
    }

    let algebraic_max: f64 = c.iter().flatten().map(|v| v.abs()).sum();
    // Summed in the same order as the CHSH closed form so the two agree bitwise.
    let total = w_lhv + alpha_part + beta_part;
    let correction = alpha_part + beta_part;
    Ok(CorrectedBound {
        base: w_lhv,
        correction,
        total,
        chosen_y,
        chosen_x,
        algebraic_max,
        vacuous: total >= algebraic_max,
    })
}

/// `2 + 2Σ_x α^{0x}_{01} + 2Σ_y β^{0y}_{01}`.
pub fn corrected_chsh_bound(budget: &SignallingBudget) -> Result<f64> {
    let s = budget.scenario();
    if (s.m_a, s.m_b, s.n_a, s.n_b) != (2, 2, 2, 2) {
        return Err(Error::InvalidArgs(format!("CHSH bound needs a (2,2,2,2) budget, got {s:?}")));
    }
    let alpha: f64 = (0..2).map(|x| budget.alpha(0, x, 0, 1)).sum();
    let beta: f64 = (0..2).map(|y| budget.beta(0, y, 0, 1)).sum();
    Ok(2.0 + 2.0 * alpha + 2.0 * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{chsh_coefficients, Scenario};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn chsh_budget(a00: f64, a01: f64, b00: f64, b01: f64) -> SignallingBudget {
        SignallingBudget::from_fns(
            Scenario::chsh(),
            |_, x, _, _| if x == 0 { a00 } else { a01 },
            |_, y, _, _| if y == 0 { b00 } else { b01 },
        )
        .unwrap()
    }

    #[test]
    fn zero_budget_returns_base() {
        let b = SignallingBudget::zeros(Scenario::chsh());
        let r = corrected_full_correlation_bound(&chsh_coefficients(), 2.0, &b).unwrap();
        assert_eq!(r.total, 2.0);
        assert_eq!(r.correction, 0.0);
        assert!(!r.vacuous);
        assert_eq!(corrected_chsh_bound(&b).unwrap(), 2.0);
    }

    #[test]
    fn uniform_budget_matches_closed_form() {
        let b = SignallingBudget::uniform(Scenario::chsh(), 0.05).unwrap();
        assert_abs_diff_eq!(corrected_chsh_bound(&b).unwrap(), 2.4, epsilon = 1e-15);
        let r = corrected_full_correlation_bound(&chsh_coefficients(), 2.0, &b).unwrap();
        // ỹ_x = y makes one of the two terms per x vanish.
        assert_abs_diff_eq!(r.total, 2.4, epsilon = 1e-15);
    }

    #[test]
    fn single_alpha_entry() {
        let mut b = SignallingBudget::zeros(Scenario::chsh());
        b.set_alpha(0, 0, 0, 1, 0.2);
        assert_abs_diff_eq!(corrected_chsh_bound(&b).unwrap(), 2.4, epsilon = 1e-15);
    }

    #[test]
    fn vacuous_flag() {
        let b = SignallingBudget::uniform(Scenario::chsh(), 0.6).unwrap();
        let r = corrected_full_correlation_bound(&chsh_coefficients(), 2.0, &b).unwrap();
        assert!(r.vacuous);
    }

    #[test]
    fn separable_minimum_equals_brute_force_over_tuples() {
        let s = Scenario::new(3, 3, 2, 2).unwrap();
        let b = SignallingBudget::from_fns(
            s,
            |a, x, y, y2| 0.01 * (1 + a + 2 * x + 3 * y + 5 * y2) as f64 % 0.3,
            |o, y, x, x2| 0.013 * (2 + o + x + 4 * y + 7 * x2) as f64 % 0.25,
        )
        .unwrap();
        let c = vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 1.0], vec![-1.0, 0.3, 2.0]];
        let r = corrected_full_correlation_bound(&c, 1.0, &b).unwrap();
        let mut best = f64::INFINITY;
        for t in 0..27usize {
            let yt = [t % 3, (t / 3) % 3, t / 9];
            for u in 0..27usize {
                let xt = [u % 3, (u / 3) % 3, u / 9];
                let mut v = 0.0;
                for x in 0..3 {
                    for y in 0..3 {
                        let al: f64 = (0..2).map(|a| b.alpha(a, x, y, yt[x])).sum();
                        let be: f64 = (0..2).map(|o| b.beta(o, y, x, xt[y])).sum();
                        v += c[x][y].abs() * (al + be);
                    }
                }
                best = best.min(v);
            }
        }
        assert_abs_diff_eq!(r.correction, best, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn monotone_in_budget(a in prop::collection::vec(0.0f64..0.5, 4), extra in prop::collection::vec(0.0f64..0.5, 4)) {
            let lo = chsh_budget(a[0], a[1], a[2], a[3]);
            let hi = chsh_budget(a[0] + extra[0], a[1] + extra[1], a[2] + extra[2], a[3] + extra[3]);
            let c = chsh_coefficients();
            let r_lo = corrected_full_correlation_bound(&c, 2.0, &lo).unwrap();
            let r_hi = corrected_full_correlation_bound(&c, 2.0, &hi).unwrap();
            prop_assert!(r_lo.total <= r_hi.total + 1e-15);
            prop_assert!(corrected_chsh_bound(&lo).unwrap() <= corrected_chsh_bound(&hi).unwrap());
        }

        #[test]
        fn general_form_reduces_to_chsh(a in prop::collection::vec(0.0f64..1.0, 4)) {
            let b = chsh_budget(a[0], a[1], a[2], a[3]);
            let r = corrected_full_correlation_bound(&chsh_coefficients(), 2.0, &b).unwrap();
            prop_assert_eq!(r.total, corrected_chsh_bound(&b).unwrap());
        }
    }
}
