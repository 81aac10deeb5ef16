//! Budget-constrained multilingual data allocation.
//!
//! Maximizes the mean predicted score `(1/n) * sum_i S_i(x_i)` subject to
//! `sum_i x_i = C` and `0 <= x_i <= cap_i`. Every `S_i` is strictly
//! concave and increasing (`beta` in (-1, 0)), so the optimum equalizes
//! marginal gains: there is a multiplier `lambda > 0` with
//!
//! ```text
//! x_i(lambda) = min(cap_i, (lambda / k_i)^(1 / (beta_i - 1))),
//! k_i = -alpha_i * beta_i * gamma_i^beta_i
//! ```
//!
//! and `sum_i x_i(lambda)` continuous and decreasing in `lambda`, which a
//! bisection drives to the budget. The real solution is rounded to
//! integers by largest remainder (so the sum hits `C` exactly and no cap
//! is exceeded), then polished with single-unit transfers; for separable
//! concave objectives a transfer-stable integer point is a global integer
//! optimum.
//!
//! The objective of an integer vector scores amounts below one pair as one
//! pair (`S_i` diverges at zero); the same convention is used everywhere
//! amounts are compared.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::Lang;
use crate::scalelaw::{LawError, ScalingLaw};
use crate::simlang::LanguageProfile;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("no languages in the problem")]
    Empty,
    #[error("laws and caps differ in length: {laws} vs {caps}")]
    LengthMismatch { laws: usize, caps: usize },
    #[error("cap must be at least 1 (language index {0})")]
    ZeroCap(usize),
    #[error("infeasible: budget {budget} exceeds total availability {cap_total}")]
    Infeasible { budget: u64, cap_total: u64 },
    #[error("candidate has {got} amounts, problem has {expected} languages")]
    WrongLength { expected: usize, got: usize },
    #[error(transparent)]
    Law(#[from] LawError),
}

/// A data-allocation instance: one scaling law and one availability cap
/// per language, plus the total budget.
#[derive(Debug, Clone)]
pub struct AllocationProblem {
    pub laws: Vec<ScalingLaw>,
    pub budget: u64,
    pub caps: Vec<u64>,
}

impl AllocationProblem {
    pub fn new(laws: Vec<ScalingLaw>, budget: u64, caps: Vec<u64>) -> Result<Self, AllocError> {
        if laws.is_empty() {
            return Err(AllocError::Empty);
        }
        if laws.len() != caps.len() {
            return Err(AllocError::LengthMismatch {
                laws: laws.len(),
                caps: caps.len(),
            });
        }
        if let Some(i) = caps.iter().position(|&c| c == 0) {
            return Err(AllocError::ZeroCap(i));
        }
        let cap_total: u64 = caps.iter().sum();
        if budget > cap_total {
            return Err(AllocError::Infeasible {
                budget,
                cap_total,
            });
        }
        Ok(AllocationProblem { laws, budget, caps })
    }

    pub fn n(&self) -> usize {
        self.laws.len()
    }
}

/// A solved (or baseline) allocation.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationResult {
    /// Integer amounts; sums to the budget exactly.
    pub amounts: Vec<u64>,
    /// The pre-rounding real solution (for the solver) or the ideal real
    /// shares (for the uniform baseline).
    pub real_amounts: Vec<f64>,
    /// Mean predicted score over the integer amounts.
    pub objective: f64,
    /// Equalized marginal gain; `None` for baselines that do not solve
    /// the stationarity system.
    pub dual_lambda: Option<f64>,
    /// Indices whose availability cap binds in the real solution.
    pub binding_caps: Vec<usize>,
}

/// Mean predicted score of integer amounts. Amounts below one pair are
/// scored as one pair.
pub fn objective(laws: &[ScalingLaw], amounts: &[u64]) -> f64 {
    let sum: f64 = laws
        .iter()
        .zip(amounts)
        .map(|(law, &a)| {
            law.predict((a.max(1)) as f64)
                .expect("amount clamped to >= 1")
        })
        .sum();
    sum / laws.len() as f64
}

fn unclamped_amount(law: &ScalingLaw, lambda: f64) -> f64 {
    law.scale_at_marginal_gain(lambda)
}

fn water_fill_sum(problem: &AllocationProblem, lambda: f64) -> f64 {
    problem
        .laws
        .iter()
        .zip(&problem.caps)
        .map(|(law, &cap)| unclamped_amount(law, lambda).min(cap as f64))
        .sum()
}

/// Largest-remainder rounding of `real` to integers summing to `budget`,
/// never exceeding the caps.
fn round_to_budget(real: &[f64], caps: &[u64], budget: u64) -> Vec<u64> {
    let n = real.len();
    let mut amounts: Vec<u64> = Vec::with_capacity(n);
    let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(n);
    let mut floor_sum: u64 = 0;
    for (i, (&x, &cap)) in real.iter().zip(caps).enumerate() {
        let clamped = x.max(0.0).min(cap as f64);
        let fl = clamped.floor();
        let v = fl as u64;
        amounts.push(v);
        fracs.push((i, clamped - fl));
        floor_sum += v;
    }
    let mut deficit = budget.saturating_sub(floor_sum);
    fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    // first pass: spend the deficit on the largest fractional parts
    for &(i, _) in &fracs {
        if deficit == 0 {
            break;
        }
        if amounts[i] < caps[i] {
            amounts[i] += 1;
            deficit -= 1;
        }
    }
    // any residue (only when many caps bind at integers) goes to whatever
    // slack remains, lowest index first
    let mut i = 0;
    while deficit > 0 && i < n {
        let room = caps[i] - amounts[i];
        let add = room.min(deficit);
        amounts[i] += add;
        deficit -= add;
        i += 1;
    }
    amounts
}

/// Single-unit transfer polish. For a separable concave objective a point
/// admitting no improving one-unit move is a global integer optimum, so
/// this only has to clean up rounding noise around the real solution.
fn polish(laws: &[ScalingLaw], caps: &[u64], amounts: &mut [u64]) {
    let n = laws.len();
    let gain_up = |i: usize, a: &[u64]| -> f64 {
        let x = a[i];
        let s1 = laws[i].predict((x.max(1)) as f64).unwrap();
        let s2 = laws[i].predict(((x + 1).max(1)) as f64).unwrap();
        s2 - s1
    };
    let loss_down = |i: usize, a: &[u64]| -> f64 {
        let x = a[i];
        let s1 = laws[i].predict(((x - 1).max(1)) as f64).unwrap();
        let s2 = laws[i].predict((x.max(1)) as f64).unwrap();
        s2 - s1
    };
    for _ in 0..(10 * n + 100) {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_down: Option<(usize, f64)> = None;
        for i in 0..n {
            if amounts[i] < caps[i] {
                let g = gain_up(i, amounts);
                if best_up.map_or(true, |(_, bg)| g > bg) {
                    best_up = Some((i, g));
                }
            }
            if amounts[i] > 0 {
                let l = loss_down(i, amounts);
                if best_down.map_or(true, |(_, bl)| l < bl) {
                    best_down = Some((i, l));
                }
            }
        }
        match (best_up, best_down) {
            (Some((i, g)), Some((j, l))) if i != j && g > l => {
                amounts[i] += 1;
                amounts[j] -= 1;
            }
            _ => break,
        }
    }
}

/// Water-filling solve: bisection on the shared marginal gain, then
/// integerization.
pub fn solve(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    let n = problem.n();
    let cap_total: u64 = problem.caps.iter().sum();
    let budget = problem.budget;

    // every cap binds; no slack coordinate exists
    if budget == cap_total {
        let amounts = problem.caps.clone();
        let lambda = problem
            .laws
            .iter()
            .zip(&problem.caps)
            .map(|(law, &cap)| law.marginal_gain(cap as f64).unwrap())
            .fold(f64::INFINITY, f64::min);
        return Ok(AllocationResult {
            objective: objective(&problem.laws, &amounts),
            real_amounts: amounts.iter().map(|&a| a as f64).collect(),
            amounts,
            dual_lambda: Some(lambda),
            binding_caps: (0..n).collect(),
        });
    }

    // bracket: at lambda_lo every coordinate caps out (sum = cap_total > C);
    // at lambda_hi every unclamped amount is at most C/n (sum <= C)
    let lambda_lo = problem
        .laws
        .iter()
        .zip(&problem.caps)
        .map(|(law, &cap)| law.marginal_gain(cap as f64).unwrap())
        .fold(f64::INFINITY, f64::min);
    let share = (budget as f64 / n as f64).max(f64::MIN_POSITIVE);
    let lambda_hi = problem
        .laws
        .iter()
        .map(|law| law.marginal_gain(share).unwrap())
        .fold(0.0f64, f64::max);

    let mut lo = lambda_lo;
    let mut hi = lambda_hi.max(lambda_lo * (1.0 + 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if water_fill_sum(problem, mid) >= budget as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);

    let mut real = Vec::with_capacity(n);
    let mut binding = Vec::new();
    for (i, (law, &cap)) in problem.laws.iter().zip(&problem.caps).enumerate() {
        let unclamped = unclamped_amount(law, lambda);
        if unclamped >= cap as f64 {
            binding.push(i);
            real.push(cap as f64);
        } else {
            real.push(unclamped);
        }
    }

    let mut amounts = round_to_budget(&real, &problem.caps, budget);
    polish(&problem.laws, &problem.caps, &mut amounts);
    debug_assert_eq!(amounts.iter().sum::<u64>(), budget);

    Ok(AllocationResult {
        objective: objective(&problem.laws, &amounts),
        real_amounts: real,
        amounts,
        dual_lambda: Some(lambda),
        binding_caps: binding,
    })
}

/// Equal-share baseline: caps are honored by redistributing the residual
/// equally over uncapped languages until a fixpoint, then the remaining
/// real shares are integerized by largest remainder.
pub fn uniform_allocation(problem: &AllocationProblem) -> Result<AllocationResult, AllocError> {
    let n = problem.n();
    let mut capped = vec![false; n];
    let mut real = vec![0.0f64; n];
    let mut remaining = problem.budget as f64;
    loop {
        let active: Vec<usize> = (0..n).filter(|&i| !capped[i]).collect();
        if active.is_empty() {
            break;
        }
        let share = remaining / active.len() as f64;
        let mut newly_capped = false;
        for &i in &active {
            if (problem.caps[i] as f64) <= share {
                capped[i] = true;
                real[i] = problem.caps[i] as f64;
                remaining -= problem.caps[i] as f64;
                newly_capped = true;
            }
        }
        if !newly_capped {
            for &i in &active {
                real[i] = share;
            }
            break;
        }
    }

    let amounts = round_to_budget(&real, &problem.caps, problem.budget);
    debug_assert_eq!(amounts.iter().sum::<u64>(), problem.budget);
    let binding_caps = (0..n).filter(|&i| capped[i]).collect();
    Ok(AllocationResult {
        objective: objective(&problem.laws, &amounts),
        real_amounts: real,
        amounts,
        dual_lambda: None,
        binding_caps,
    })
}

/// Feasibility report for a candidate amounts vector.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub sum: u64,
    /// Absolute gap between the candidate sum and the budget.
    pub sum_gap: u64,
    pub cap_violations: Vec<usize>,
    pub objective: f64,
}

/// Check a candidate against the budget (within `tolerance`) and the
/// caps; never mutates, findings go in the report.
pub fn validate_result(
    problem: &AllocationProblem,
    candidate: &[u64],
    tolerance: u64,
) -> Result<ValidationReport, AllocError> {
    if candidate.len() != problem.n() {
        return Err(AllocError::WrongLength {
            expected: problem.n(),
            got: candidate.len(),
        });
    }
    let sum: u64 = candidate.iter().sum();
    let sum_gap = sum.abs_diff(problem.budget);
    let cap_violations: Vec<usize> = candidate
        .iter()
        .zip(&problem.caps)
        .enumerate()
        .filter(|(_, (&a, &cap))| a > cap)
        .map(|(i, _)| i)
        .collect();
    Ok(ValidationReport {
        feasible: sum_gap <= tolerance && cap_violations.is_empty(),
        sum,
        sum_gap,
        cap_violations,
        objective: objective(&problem.laws, candidate),
    })
}

/// JSON problem input: `{budget, languages: [{lang, alpha, beta, gamma, cap}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub budget: u64,
    pub languages: Vec<LanguageSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub lang: Lang,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub cap: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting_tag: Option<String>,
}

impl ProblemSpec {
    pub fn to_problem(&self) -> Result<AllocationProblem, AllocError> {
        let mut laws = Vec::with_capacity(self.languages.len());
        let mut caps = Vec::with_capacity(self.languages.len());
        for l in &self.languages {
            let profile = LanguageProfile {
                lang: l.lang.clone(),
                gamma: l.gamma,
                sample_count: 0,
                method_tag: "from-spec".to_string(),
            };
            let tag = l.setting_tag.clone().unwrap_or_else(|| "coit-translation".to_string());
            laws.push(ScalingLaw::new(profile, l.alpha, l.beta, &tag)?);
            caps.push(l.cap);
        }
        AllocationProblem::new(laws, self.budget, caps)
    }
}

/// One tab-separated comparison row: label, budget, per-language amounts,
/// objective.
pub fn table_row(label: &str, budget: u64, langs: &[Lang], amounts: &[u64], objective: f64) -> String {
    let mut cols = vec![label.to_string(), budget.to_string()];
    cols.extend(langs.iter().zip(amounts).map(|(l, a)| format!("{l}={a}")));
    cols.push(format!("{objective:.6}"));
    cols.join("\t")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn law(alpha: f64, beta: f64, gamma: f64) -> ScalingLaw {
        let profile = LanguageProfile::manual(Lang::new("zh").unwrap(), gamma).unwrap();
        ScalingLaw::new(profile, alpha, beta, "t").unwrap()
    }

    /// Exhaustive step-1 search over integer splits, same objective
    /// convention as the solver. Usable for n <= 3.
    fn grid_best(laws: &[ScalingLaw], caps: &[u64], budget: u64) -> f64 {
        // per-coordinate score tables so the n=3 double loop is adds only
        let tables: Vec<Vec<f64>> = laws
            .iter()
            .map(|l| {
                (0..=budget)
                    .map(|x| l.predict((x.max(1)) as f64).unwrap())
                    .collect()
            })
            .collect();
        let n = laws.len();
        let mut best = f64::NEG_INFINITY;
        match n {
            1 => {
                if budget <= caps[0] {
                    best = tables[0][budget as usize];
                }
            }
            2 => {
                for a in 0..=budget.min(caps[0]) {
                    let b = budget - a;
                    if b > caps[1] {
                        continue;
                    }
                    let v = (tables[0][a as usize] + tables[1][b as usize]) / 2.0;
                    if v > best {
                        best = v;
                    }
                }
            }
            3 => {
                for a in 0..=budget.min(caps[0]) {
                    for b in 0..=(budget - a).min(caps[1]) {
                        let c = budget - a - b;
                        if c > caps[2] {
                            continue;
                        }
                        let v = (tables[0][a as usize] + tables[1][b as usize] + tables[2][c as usize]) / 3.0;
                        if v > best {
                            best = v;
                        }
                    }
                }
            }
            _ => unreachable!("grid oracle only supports n <= 3"),
        }
        best
    }

    #[test]
    fn single_language_takes_the_whole_budget() {
        let p = AllocationProblem::new(vec![law(4.0, -0.5, 0.9)], 100, vec![500]).unwrap();
        let r = solve(&p).unwrap();
        assert_eq!(r.amounts, vec![100]);
        assert_eq!(r.amounts.iter().sum::<u64>(), 100);
    }

    #[test]
    fn identical_laws_split_evenly() {
        let p = AllocationProblem::new(
            vec![law(4.0, -0.5, 0.9), law(4.0, -0.5, 0.9)],
            200,
            vec![1000, 1000],
        )
        .unwrap();
        let r = solve(&p).unwrap();
        assert_eq!(r.amounts, vec![100, 100]);
    }

    #[test]
    fn two_language_solution_matches_grid_oracle() {
        let laws = vec![law(4.0, -0.5, 1.0 - 1e-12), law(12.0, -0.2, 0.6)];
        let caps = vec![1_000_000, 1_000_000];
        let p = AllocationProblem::new(laws.clone(), 10_000, caps.clone()).unwrap();
        let r = solve(&p).unwrap();
        let oracle = grid_best(&laws, &caps, 10_000);
        assert!(r.objective >= oracle - 1e-9, "{} vs {}", r.objective, oracle);
        assert_eq!(r.amounts.iter().sum::<u64>(), 10_000);
    }

    #[test]
    fn published_allocation_vectors_validate() {
        // six-language fixture: caps are the per-language corpus totals
        // (in pairs); amounts are published allocation rows
        let caps = vec![1_097_200, 620_800, 234_300, 477_700, 1_073_800, 912_500];
        let laws: Vec<ScalingLaw> = (0..6).map(|i| law(10.0 + i as f64, -0.3, 0.5)).collect();

        let p300 = AllocationProblem::new(laws.clone(), 300_000, caps.clone()).unwrap();
        let row_300k: Vec<u64> = vec![41_842, 44_953, 73_002, 59_652, 40_731, 39_816];
        let v = validate_result(&p300, &row_300k, 4).unwrap();
        assert!(v.feasible);
        assert_eq!(v.sum_gap, 4);
        assert!(v.cap_violations.is_empty());

        let p12 = AllocationProblem::new(laws, 1_200_000, caps).unwrap();
        let row_1m2: Vec<u64> = vec![183_539, 189_556, 234_233, 242_263, 175_985, 174_422];
        let v = validate_result(&p12, &row_1m2, 2).unwrap();
        assert!(v.feasible);
        assert_eq!(v.sum_gap, 2);
        assert!(v.cap_violations.is_empty());

        // cap check singles out violations
        let mut bad = row_1m2.clone();
        bad[2] = 234_301; // one above the availability cap
        let p12b = AllocationProblem::new(
            (0..6).map(|i| law(10.0 + i as f64, -0.3, 0.5)).collect(),
            1_200_000,
            vec![1_097_200, 620_800, 234_300, 477_700, 1_073_800, 912_500],
        )
        .unwrap();
        let v = validate_result(&p12b, &bad, 100).unwrap();
        assert!(!v.feasible);
        assert_eq!(v.cap_violations, vec![2]);
    }

    #[test]
    fn solve_output_validates_with_zero_tolerance() {
        let p = AllocationProblem::new(
            vec![law(4.0, -0.5, 0.9), law(9.0, -0.4, 0.3), law(20.0, -0.7, 0.6)],
            12_345,
            vec![8_000, 8_000, 8_000],
        )
        .unwrap();
        let r = solve(&p).unwrap();
        let v = validate_result(&p, &r.amounts, 0).unwrap();
        assert!(v.feasible);
        assert_eq!(v.sum_gap, 0);
        assert_relative_eq!(v.objective, r.objective);
    }

    #[test]
    fn uniform_splits_equally_with_large_caps() {
        let p = AllocationProblem::new(
            (0..6).map(|_| law(10.0, -0.3, 0.5)).collect(),
            300_000,
            vec![1_000_000; 6],
        )
        .unwrap();
        let r = uniform_allocation(&p).unwrap();
        assert_eq!(r.amounts, vec![50_000; 6]);
        assert!(r.dual_lambda.is_none());
    }

    #[test]
    fn uniform_largest_remainder() {
        let p = AllocationProblem::new(
            (0..3).map(|_| law(10.0, -0.3, 0.5)).collect(),
            10,
            vec![4, 4, 4],
        )
        .unwrap();
        let r = uniform_allocation(&p).unwrap();
        assert_eq!(r.amounts.iter().sum::<u64>(), 10);
        assert!(r.amounts.iter().all(|&a| a == 3 || a == 4));
    }

    #[test]
    fn uniform_redistributes_past_binding_caps() {
        let p = AllocationProblem::new(
            (0..3).map(|_| law(10.0, -0.3, 0.5)).collect(),
            300,
            vec![2, 1_000_000, 1_000_000],
        )
        .unwrap();
        let r = uniform_allocation(&p).unwrap();
        assert_eq!(r.amounts, vec![2, 149, 149]);
        assert_eq!(r.binding_caps, vec![0]);
    }

    #[test]
    fn infeasible_and_empty_problems_error() {
        assert!(matches!(
            AllocationProblem::new(vec![], 10, vec![]),
            Err(AllocError::Empty)
        ));
        assert!(matches!(
            AllocationProblem::new(vec![law(4.0, -0.5, 0.9)], 100, vec![50]),
            Err(AllocError::Infeasible { .. })
        ));
        assert!(matches!(
            AllocationProblem::new(vec![law(4.0, -0.5, 0.9)], 1, vec![0]),
            Err(AllocError::ZeroCap(0))
        ));
    }

    #[test]
    fn kkt_marginal_gains_equalize_on_slack_coordinates() {
        let laws = vec![
            law(4.0, -0.5, 0.9),
            law(9.0, -0.4, 0.3),
            law(20.0, -0.7, 0.6),
            law(15.0, -0.25, 0.45),
        ];
        let p = AllocationProblem::new(laws, 100_000, vec![1_000_000; 4]).unwrap();
        let r = solve(&p).unwrap();
        let lambda = r.dual_lambda.unwrap();
        assert!(lambda > 0.0);
        for (i, law) in p.laws.iter().enumerate() {
            if r.binding_caps.contains(&i) {
                continue;
            }
            let g = law.marginal_gain(r.real_amounts[i]).unwrap();
            assert_relative_eq!(g, lambda, max_relative = 1e-6);
        }
    }

    #[test]
    fn binding_cap_is_reported_and_respected() {
        let laws = vec![law(4.0, -0.5, 0.9), law(4.0, -0.5, 0.9)];
        let p = AllocationProblem::new(laws, 10_000, vec![100, 1_000_000]).unwrap();
        let r = solve(&p).unwrap();
        assert_eq!(r.amounts[0], 100);
        assert_eq!(r.amounts[1], 9_900);
        assert_eq!(r.binding_caps, vec![0]);
    }

    #[test]
    fn rounding_damage_is_bounded() {
        let laws = vec![law(4.0, -0.5, 0.9), law(9.0, -0.4, 0.3), law(20.0, -0.7, 0.6)];
        let p = AllocationProblem::new(laws, 9_999, vec![1_000_000; 3]).unwrap();
        let r = solve(&p).unwrap();
        let real_obj: f64 = p
            .laws
            .iter()
            .zip(&r.real_amounts)
            .map(|(l, &x)| l.predict(x.max(1.0)).unwrap())
            .sum::<f64>()
            / p.n() as f64;
        let bound = p.n() as f64
            * p.laws
                .iter()
                .map(|l| l.marginal_gain(1.0).unwrap())
                .fold(0.0f64, f64::max);
        assert!((r.objective - real_obj).abs() <= bound);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solve_beats_uniform_and_stays_feasible(
            seeds in proptest::collection::vec((1.0f64..50.0, -0.95f64..-0.05, 0.02f64..0.98, 100u64..50_000), 1..6),
            budget_frac in 0.1f64..0.95,
        ) {
            let laws: Vec<ScalingLaw> = seeds.iter().map(|&(a, b, g, _)| law(a, b, g)).collect();
            let caps: Vec<u64> = seeds.iter().map(|&(_, _, _, c)| c).collect();
            let cap_total: u64 = caps.iter().sum();
            let n = laws.len() as u64;
            let budget = ((cap_total as f64 * budget_frac) as u64).max(n);
            let p = AllocationProblem::new(laws, budget, caps).unwrap();

            let opt = solve(&p).unwrap();
            let uni = uniform_allocation(&p).unwrap();

            prop_assert_eq!(opt.amounts.iter().sum::<u64>(), budget);
            prop_assert_eq!(uni.amounts.iter().sum::<u64>(), budget);
            for (a, &cap) in opt.amounts.iter().zip(&p.caps) {
                prop_assert!(*a <= cap);
            }
            for (a, &cap) in uni.amounts.iter().zip(&p.caps) {
                prop_assert!(*a <= cap);
            }
            prop_assert!(opt.objective >= uni.objective - 1e-12,
                "optimized {} below uniform {}", opt.objective, uni.objective);
        }

        #[test]
        fn objective_is_monotone_in_budget(
            seeds in proptest::collection::vec((1.0f64..50.0, -0.95f64..-0.05, 0.02f64..0.98), 1..5),
            b1 in 0.2f64..0.5,
            b2 in 0.55f64..0.9,
        ) {
            let laws: Vec<ScalingLaw> = seeds.iter().map(|&(a, b, g)| law(a, b, g)).collect();
            let n = laws.len() as u64;
            let caps: Vec<u64> = vec![20_000; laws.len()];
            let cap_total: u64 = caps.iter().sum();
            let c1 = ((cap_total as f64 * b1) as u64).max(n);
            let c2 = ((cap_total as f64 * b2) as u64).max(c1 + n);
            let p1 = AllocationProblem::new(laws.clone(), c1, caps.clone()).unwrap();
            let p2 = AllocationProblem::new(laws, c2, caps).unwrap();
            let o1 = solve(&p1).unwrap().objective;
            let o2 = solve(&p2).unwrap().objective;
            prop_assert!(o2 >= o1 - 1e-12, "objective fell from {} to {}", o1, o2);
        }
    }
}
