//! Probability that a single ballot changes the survivor set of an
//! elimination rule.

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use super::{check_n, weighted_from_counts, Z99};
use crate::beliefs::{Belief, BeliefSampler};
use crate::error::{Error, Result};
use crate::profile::{CandidateSet, PreferenceOrdering};
use crate::rational::{self, Rational};
use crate::rules::EliminationRuleSpec;
use crate::space::{all_orderings, composition_count, Compositions};
use crate::Budget;

fn setup(elim: &EliminationRuleSpec, phi: &Belief, n: u64) -> Result<Vec<PreferenceOrdering>> {
    check_n(n)?;
    let m = phi.candidates().span();
    if phi.candidates() != CandidateSet::full(m) {
        return Err(Error::InvalidArgument("belief must range over every candidate".into()));
    }
    elim.validate(m)?;
    Ok(all_orderings(phi.candidates()))
}

/// Whether some report changes the survivors, given the others' counts.
fn pivotal(
    elim: &EliminationRuleSpec,
    support: &[PreferenceOrdering],
    counts: &[u64],
    reports: &[PreferenceOrdering],
) -> bool {
    let mut first: Option<CandidateSet> = None;
    for r in reports {
        let alive = elim
            .survivors(&weighted_from_counts(support, counts, Some(r)))
            .expect("validated elimination rule");
        match first {
            None => first = Some(alive),
            Some(f) if f != alive => return true,
            Some(_) => {}
        }
    }
    false
}

/// Monte Carlo estimate of the pivot probability over `P_-i ~ phi^(n-1)`,
/// with a 99% normal-approximation half-width.
pub fn elimination_pivotality_mc(
    elim: &EliminationRuleSpec,
    phi: &Belief,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    let reports = setup(elim, phi, n)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let sampler = BeliefSampler::new(phi);
    let hits: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = BeliefSampler::rng(seed, t);
            let counts = sampler.sample_counts(n - 1, &mut rng);
            pivotal(elim, sampler.support(), &counts, &reports)
        })
        .collect();
    let p = hits.iter().filter(|h| **h).count() as f64 / trials as f64;
    let ci = Z99 * (p * (1.0 - p) / trials as f64).sqrt();
    Ok((p, ci))
}

/// Exact pivot probability, summing over count vectors of the belief's
/// support.
pub fn elimination_pivotality_exact(
    elim: &EliminationRuleSpec,
    phi: &Belief,
    n: u64,
    budget: &Budget,
) -> Result<Rational> {
    let reports = setup(elim, phi, n)?;
    let support = phi.support();
    let k = support.len();
    budget.check(composition_count(n - 1, k as u64).saturating_mul(reports.len() as u128))?;
    let types: Vec<PreferenceOrdering> = support.iter().map(|(p, _)| p.clone()).collect();
    let scale = rational::lcm_of_denominators(support.iter().map(|(_, q)| q));
    let nums: Vec<BigInt> = support
        .iter()
        .map(|(_, q)| (q * Rational::from_integer(scale.clone())).to_integer())
        .collect();
    let top = (n - 1) as usize;
    let fact: Vec<BigInt> = rational::factorials(top).into_iter().map(BigInt::from).collect();
    let total = Compositions::new(n - 1, k)
        .par_bridge()
        .filter(|counts| pivotal(elim, &types, counts, &reports))
        .map(|counts| {
            let mut w = fact[top].clone();
            for (a, &c) in nums.iter().zip(&counts) {
                w = w * num_traits::pow(a.clone(), c as usize) / &fact[c as usize];
            }
            w
        })
        .reduce(BigInt::zero, |a, b| a + b);
    let denom = num_traits::pow(scale, top);
    Ok(Rational::new(total, denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::rules::MarginPolicy;
    use num_traits::One;

    fn p(s: &str) -> PreferenceOrdering {
        s.parse().unwrap()
    }

    fn rp(t: i64) -> EliminationRuleSpec {
        EliminationRuleSpec::RepeatedPlurality {
            margin: MarginPolicy::explicit(int(t)),
        }
    }

    #[test]
    fn point_mass_leader_is_never_pivotal() {
        let phi = Belief::point(&p("0>1>2"));
        let (est, ci) = elimination_pivotality_mc(&rp(2), &phi, 50, 200, 1).unwrap();
        assert_eq!((est, ci), (0.0, 0.0));
        assert!(elimination_pivotality_exact(&rp(2), &phi, 50, &Budget::default())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn uniform_zero_margin_is_pivotal() {
        let phi = Belief::uniform(3);
        let exact = elimination_pivotality_exact(&rp(0), &phi, 3, &Budget::default()).unwrap();
        assert!(exact > Rational::zero());
        assert!(exact <= Rational::one());
        let (est, ci) = elimination_pivotality_mc(&rp(0), &phi, 3, 20_000, 5).unwrap();
        assert!((est - rational::to_f64(&exact)).abs() <= ci + 0.01, "{est} {exact}");
    }

    #[test]
    fn two_voter_exact_value() {
        // One other voter, a>b>c or b>a>c with probability 1/2 each, t = 0.
        // The report always decides between a tie and a lead, so the
        // survivors always depend on it.
        let phi = Belief::from_pairs(3, &[(p("0>1>2"), ratio(1, 2)), (p("1>0>2"), ratio(1, 2))]).unwrap();
        assert_eq!(
            elimination_pivotality_exact(&rp(0), &phi, 2, &Budget::default()).unwrap(),
            int(1)
        );
        // With t = 2 a gap of at most two never eliminates anyone.
        assert_eq!(
            elimination_pivotality_exact(&rp(2), &phi, 2, &Budget::default()).unwrap(),
            int(0)
        );
    }

    #[test]
    fn mc_is_deterministic() {
        let phi = Belief::from_pairs(3, &[(p("0>1>2"), ratio(1, 2)), (p("1>0>2"), ratio(1, 2))]).unwrap();
        let elim = EliminationRuleSpec::RepeatedPlurality {
            margin: MarginPolicy::asymptotic(ratio(1, 10)),
        };
        let a = elimination_pivotality_mc(&elim, &phi, 101, 500, 9).unwrap();
        let b = elimination_pivotality_mc(&elim, &phi, 101, 500, 9).unwrap();
        assert_eq!(a, b);
    }
}
