//! Expected outcomes when the other `n - 1` ballots are i.i.d. draws from a
//! belief.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::{check_n, weighted_from_counts, Quantity, Z99};
use crate::beliefs::{Belief, BeliefSampler};
use crate::error::{Error, Result};
use crate::profile::{CandidateSet, PreferenceOrdering, UtilityFunction};
use crate::rational::{self, Rational};
use crate::rules::{eval_unchecked, VotingRuleSpec};
use crate::space::{all_orderings, composition_count, Compositions};
use crate::Budget;

/// Expected output lottery for each of a list of reports.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub reports: Vec<PreferenceOrdering>,
    /// `expected[r][x]` is the probability that `x` wins when the voter
    /// reports `reports[r]`.
    pub expected: Vec<Vec<Rational>>,
}

impl OutcomeTable {
    pub fn utility(&self, r: usize, u: &UtilityFunction) -> Rational {
        self.expected[r].iter().zip(u.values()).map(|(p, v)| p * v).sum()
    }

    pub fn index_of(&self, p: &PreferenceOrdering) -> Option<usize> {
        self.reports.iter().position(|r| r == p)
    }
}

fn check_setup(rule: &VotingRuleSpec, phi: &Belief, n: u64) -> Result<usize> {
    check_n(n)?;
    let m = phi.candidates().span();
    if phi.candidates() != CandidateSet::full(m) {
        return Err(Error::InvalidArgument("belief must range over every candidate".into()));
    }
    rule.validate(m)?;
    Ok(m)
}

/// Exact expected lotteries for every report in `reports`.
///
/// Sums over the count vectors of the belief's support that add up to
/// `n - 1`, each weighted by its multinomial probability.
pub fn expected_outcomes_exact(
    rule: &VotingRuleSpec,
    phi: &Belief,
    reports: &[PreferenceOrdering],
    n: u64,
    budget: &Budget,
) -> Result<OutcomeTable> {
    let m = check_setup(rule, phi, n)?;
    if let Some(bad) = reports.iter().find(|r| r.candidates() != phi.candidates()) {
        return Err(Error::InvalidOrdering(format!(
            "report {bad} does not rank every candidate"
        )));
    }
    let support = phi.support();
    let k = support.len();
    budget.check(composition_count(n - 1, k as u64).saturating_mul(reports.len().max(1) as u128))?;

    let types: Vec<PreferenceOrdering> = support.iter().map(|(p, _)| p.clone()).collect();
    // q_i = a_i / scale, so a composition c has probability
    // multinomial(c) * prod a_i^c_i / scale^(n-1).
    let scale = rational::lcm_of_denominators(support.iter().map(|(_, q)| q));
    let nums: Vec<BigInt> = support
        .iter()
        .map(|(_, q)| (q * Rational::from_integer(scale.clone())).to_integer())
        .collect();
    let top = (n - 1) as usize;
    let fact: Vec<BigInt> = rational::factorials(top).into_iter().map(BigInt::from).collect();
    let powers: Vec<Vec<BigInt>> = nums
        .iter()
        .map(|a| {
            let mut v = Vec::with_capacity(top + 1);
            let mut cur = BigInt::one();
            for _ in 0..=top {
                v.push(cur.clone());
                cur *= a;
            }
            v
        })
        .collect();

    let zero_table = || vec![vec![Rational::zero(); m]; reports.len()];
    let sums = Compositions::new(n - 1, k)
        .par_bridge()
        .fold(zero_table, |mut acc, counts| {
            let mut w = fact[top].clone();
            for (i, &c) in counts.iter().enumerate() {
                w = w * &powers[i][c as usize] / &fact[c as usize];
            }
            let w = Rational::from_integer(w);
            for (r, report) in reports.iter().enumerate() {
                let prof = weighted_from_counts(&types, &counts, Some(report));
                let out = eval_unchecked(rule, &prof);
                for (a, p) in acc[r].iter_mut().zip(out.masses()) {
                    if !p.is_zero() {
                        *a += &w * p;
                    }
                }
            }
            acc
        })
        .reduce(zero_table, |mut a, b| {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            a
        });
    let denom = Rational::from_integer(num_traits::pow(scale, top));
    let expected = sums
        .into_iter()
        .map(|row| row.into_iter().map(|x| x / &denom).collect())
        .collect();
    Ok(OutcomeTable {
        reports: reports.to_vec(),
        expected,
    })
}

/// Exact expected lottery when the voter reports `report`.
pub fn expected_outcome_exact(
    rule: &VotingRuleSpec,
    phi: &Belief,
    report: &PreferenceOrdering,
    n: u64,
    budget: &Budget,
) -> Result<Vec<Rational>> {
    let table = expected_outcomes_exact(rule, phi, std::slice::from_ref(report), n, budget)?;
    Ok(table.expected.into_iter().next().expect("one report"))
}

pub fn expected_utility_exact(
    rule: &VotingRuleSpec,
    phi: &Belief,
    report: &PreferenceOrdering,
    u: &UtilityFunction,
    n: u64,
    budget: &Budget,
) -> Result<Rational> {
    check_utility(u, phi)?;
    let table = expected_outcomes_exact(rule, phi, std::slice::from_ref(report), n, budget)?;
    Ok(table.utility(0, u))
}

fn check_utility(u: &UtilityFunction, phi: &Belief) -> Result<()> {
    if u.m() != phi.candidates().span() {
        return Err(Error::InvalidUtility(format!(
            "utility has {} values for {} candidates",
            u.m(),
            phi.candidates().span()
        )));
    }
    Ok(())
}

fn mean_and_ci(xs: &[f64]) -> (f64, f64) {
    let t = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / t;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, Z99 * (var / t).sqrt())
}

/// Monte Carlo estimate of the expected utility of reporting `report`, with
/// a 99% normal-approximation half-width. Trial `t` draws from stream `t` of
/// `seed`, so the result does not depend on scheduling.
pub fn expected_utility_mc(
    rule: &VotingRuleSpec,
    phi: &Belief,
    report: &PreferenceOrdering,
    u: &UtilityFunction,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_setup(rule, phi, n)?;
    check_utility(u, phi)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    if report.candidates() != phi.candidates() {
        return Err(Error::InvalidOrdering(format!(
            "report {report} does not rank every candidate"
        )));
    }
    let sampler = BeliefSampler::new(phi);
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = BeliefSampler::rng(seed, t);
            let prof = sampler.sample_weighted(n - 1, Some(report), &mut rng);
            u.expected_f64(&eval_unchecked(rule, &prof))
        })
        .collect();
    Ok(mean_and_ci(&samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    Exact(Budget),
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModeInfo {
    Exact,
    MonteCarlo { trials: u64, seed: u64, ci_halfwidth: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManipulationReport {
    pub truthful_eu: Quantity,
    pub best_lie: PreferenceOrdering,
    pub best_eu: Quantity,
    /// Best lie's expected utility minus the truthful one; negative when
    /// every lie does strictly worse.
    pub best_gain: Quantity,
    pub mode: ModeInfo,
}

/// Best misreport for a voter with true ordering `truth` and utility `u`.
/// Ties between lies go to the first in lexicographic order.
pub fn manipulation_gain(
    rule: &VotingRuleSpec,
    phi: &Belief,
    truth: &PreferenceOrdering,
    u: &UtilityFunction,
    n: u64,
    mode: GainMode,
) -> Result<ManipulationReport> {
    let m = check_setup(rule, phi, n)?;
    check_utility(u, phi)?;
    if !u.is_consistent(truth) {
        return Err(Error::InvalidUtility(format!("utility is not consistent with {truth}")));
    }
    if m < 2 {
        return Err(Error::InvalidArgument("a single candidate admits no lie".into()));
    }
    let reports = all_orderings(phi.candidates());
    let t = reports
        .iter()
        .position(|r| r == truth)
        .expect("truth ranks every candidate");
    match mode {
        GainMode::Exact(budget) => {
            let table = expected_outcomes_exact(rule, phi, &reports, n, &budget)?;
            let eus: Vec<Rational> = (0..reports.len()).map(|r| table.utility(r, u)).collect();
            let best = best_other(&eus, t, |a, b| a > b);
            Ok(ManipulationReport {
                best_gain: Quantity::Exact(&eus[best] - &eus[t]),
                truthful_eu: Quantity::Exact(eus[t].clone()),
                best_eu: Quantity::Exact(eus[best].clone()),
                best_lie: reports[best].clone(),
                mode: ModeInfo::Exact,
            })
        }
        GainMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::InvalidArgument("need at least one trial".into()));
            }
            let sampler = BeliefSampler::new(phi);
            // One shared draw of the others per trial; every report is
            // scored against it, so the differences are paired.
            let rows: Vec<Vec<f64>> = (0..trials)
                .into_par_iter()
                .map(|tr| {
                    let mut rng = BeliefSampler::rng(seed, tr);
                    let counts = sampler.sample_counts(n - 1, &mut rng);
                    reports
                        .iter()
                        .map(|r| {
                            let prof = weighted_from_counts(sampler.support(), &counts, Some(r));
                            u.expected_f64(&eval_unchecked(rule, &prof))
                        })
                        .collect()
                })
                .collect();
            let mut means = vec![0.0; reports.len()];
            for row in &rows {
                for (acc, x) in means.iter_mut().zip(row) {
                    *acc += x;
                }
            }
            for x in &mut means {
                *x /= trials as f64;
            }
            let best = best_other(&means, t, |a, b| a > b);
            let diffs: Vec<f64> = rows.iter().map(|row| row[best] - row[t]).collect();
            let (gain, ci) = mean_and_ci(&diffs);
            let truth_vals: Vec<f64> = rows.iter().map(|row| row[t]).collect();
            let best_vals: Vec<f64> = rows.iter().map(|row| row[best]).collect();
            let (teu, tci) = mean_and_ci(&truth_vals);
            let (beu, bci) = mean_and_ci(&best_vals);
            Ok(ManipulationReport {
                truthful_eu: Quantity::Estimate {
                    value: teu,
                    ci_halfwidth: tci,
                },
                best_eu: Quantity::Estimate {
                    value: beu,
                    ci_halfwidth: bci,
                },
                best_gain: Quantity::Estimate {
                    value: gain,
                    ci_halfwidth: ci,
                },
                best_lie: reports[best].clone(),
                mode: ModeInfo::MonteCarlo {
                    trials,
                    seed,
                    ci_halfwidth: ci,
                },
            })
        }
    }
}

fn best_other<T>(values: &[T], skip: usize, better: impl Fn(&T, &T) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if i == skip {
            continue;
        }
        if best.is_none_or(|b| better(v, &values[b])) {
            best = Some(i);
        }
    }
    best.expect("at least two reports")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::rational::{int, ratio};
    use crate::rules::evaluate;

    fn p(s: &str) -> PreferenceOrdering {
        s.parse().unwrap()
    }

    /// 1/2 (0>1>2) + 1/2 (1>0>2); u = (1/2, 0, 1).
    fn setup() -> (Belief, UtilityFunction) {
        let phi = Belief::from_pairs(3, &[(p("0>1>2"), ratio(1, 2)), (p("1>0>2"), ratio(1, 2))]).unwrap();
        let u = UtilityFunction::new(vec![ratio(1, 2), int(0), int(1)]).unwrap();
        (phi, u)
    }

    #[test]
    fn two_voter_plurality_values() {
        let (phi, u) = setup();
        let b = Budget::default();
        let rule = VotingRuleSpec::Plurality;
        assert_eq!(
            expected_utility_exact(&rule, &phi, &p("2>0>1"), &u, 2, &b).unwrap(),
            ratio(1, 4)
        );
        assert_eq!(
            expected_utility_exact(&rule, &phi, &p("0>2>1"), &u, 2, &b).unwrap(),
            ratio(1, 2)
        );
    }

    #[test]
    fn two_voter_plurality_gain() {
        let (phi, u) = setup();
        let rep = manipulation_gain(
            &VotingRuleSpec::Plurality,
            &phi,
            &p("2>0>1"),
            &u,
            2,
            GainMode::Exact(Budget::default()),
        )
        .unwrap();
        assert_eq!(rep.best_gain, Quantity::Exact(ratio(1, 4)));
        assert_eq!(rep.best_lie, p("0>1>2"));
        assert_eq!(rep.best_lie.top(), p("0>2>1").top());
    }

    #[test]
    fn point_belief_matches_direct_evaluation() {
        let others = p("1>2>0");
        let phi = Belief::point(&others);
        let u = UtilityFunction::new(vec![int(1), ratio(1, 3), int(0)]).unwrap();
        let report = p("0>2>1");
        let rule = VotingRuleSpec::Punishing;
        let prof = Profile::new(vec![others.clone(), others, report.clone()]).unwrap();
        let direct = u.expected(&evaluate(&rule, &prof).unwrap());
        let eu = expected_utility_exact(&rule, &phi, &report, &u, 3, &Budget::default()).unwrap();
        assert_eq!(eu, direct);
        let (est, ci) = expected_utility_mc(&rule, &phi, &report, &u, 3, 50, 7).unwrap();
        assert!((est - rational::to_f64(&direct)).abs() < 1e-12);
        assert!(ci < 1e-12);
    }

    #[test]
    fn exact_distribution_sums_to_one() {
        let phi = Belief::uniform(3);
        let out = expected_outcome_exact(&VotingRuleSpec::Borda, &phi, &p("2>1>0"), 4, &Budget::default()).unwrap();
        assert!(out.iter().sum::<Rational>().is_one());
    }

    #[test]
    fn mc_close_to_exact_and_deterministic() {
        let (phi, u) = setup();
        let rule = VotingRuleSpec::Plurality;
        let a = expected_utility_mc(&rule, &phi, &p("2>0>1"), &u, 2, 100_000, 3).unwrap();
        let b = expected_utility_mc(&rule, &phi, &p("2>0>1"), &u, 2, 100_000, 3).unwrap();
        assert_eq!(a, b);
        assert!((a.0 - 0.25).abs() <= 0.01, "{a:?}");
    }

    #[test]
    fn mc_gain_matches_exact_sign() {
        let (phi, u) = setup();
        let rep = manipulation_gain(
            &VotingRuleSpec::Plurality,
            &phi,
            &p("2>0>1"),
            &u,
            2,
            GainMode::MonteCarlo {
                trials: 20_000,
                seed: 1,
            },
        )
        .unwrap();
        match rep.best_gain {
            Quantity::Estimate { value, ci_halfwidth } => {
                assert!((value - 0.25).abs() <= ci_halfwidth + 0.01, "{value} {ci_halfwidth}");
            }
            _ => panic!("expected an estimate"),
        }
    }

    #[test]
    fn dictatorship_never_rewards_lies() {
        let b = Budget::default();
        for phi in crate::beliefs::enumerate_coarse_beliefs(&ratio(1, 2), 3, &b).unwrap() {
            for truth in all_orderings(CandidateSet::full(3)) {
                let u = super::super::utility_grid(&truth, &ratio(1, 4), &ratio(1, 4)).unwrap();
                for u in u {
                    for n in 1..=4 {
                        let rep = manipulation_gain(
                            &VotingRuleSpec::RandomDictatorship,
                            &phi,
                            &truth,
                            &u,
                            n,
                            GainMode::Exact(b),
                        )
                        .unwrap();
                        assert!(rep.best_gain.exact().unwrap() <= &Rational::zero());
                    }
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let phi = Belief::uniform(3);
        let err = expected_outcome_exact(&VotingRuleSpec::Plurality, &phi, &p("0>1>2"), 30, &Budget::new(100));
        assert!(matches!(err, Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn inconsistent_utility_rejected() {
        let (phi, u) = setup();
        let err = manipulation_gain(
            &VotingRuleSpec::Plurality,
            &phi,
            &p("0>1>2"),
            &u,
            2,
            GainMode::Exact(Budget::default()),
        );
        assert!(matches!(err, Err(Error::InvalidUtility(_))));
    }
}
