//! Rules that map a (restricted) profile straight to a lottery.

use num_traits::Zero;

use crate::error::Result;
use crate::profile::{CandidateDistribution, CandidateSet, Profile, WeightedProfile};
use crate::rational::{self, Rational};
use crate::rules::elimination::{argmax_lowest, scores};

/// Plurality over `set`: point mass on the most first choices among `set`,
/// ties to the lowest index. The lottery ranges over all of the profile's
/// candidates.
pub fn plurality_within(prof: &WeightedProfile, set: CandidateSet) -> CandidateDistribution {
    let counts = prof.top_counts_within(set);
    CandidateDistribution::point(prof.candidates().span(), argmax_lowest(&counts, set))
}

pub fn plurality_select(prof: &Profile) -> CandidateDistribution {
    let w = prof.weighted();
    plurality_within(&w, w.candidates())
}

pub fn scoring_winner(prof: &WeightedProfile, points: &[u64]) -> Result<CandidateDistribution> {
    let s = scores(prof, points)?;
    Ok(CandidateDistribution::point(
        prof.candidates().span(),
        argmax_lowest(&s, prof.candidates()),
    ))
}

pub fn borda_points(m: usize) -> Vec<u64> {
    (1..=m as u64).rev().collect()
}

/// Uniform voter, then their `j`-th choice with weight `m - j`.
pub fn punishing_weighted(prof: &WeightedProfile) -> CandidateDistribution {
    let span = prof.candidates().span();
    let m = prof.candidates().len() as i64;
    if m == 1 {
        let only = prof.candidates().iter().next().expect("one candidate");
        return CandidateDistribution::point(span, only);
    }
    let n = prof.n() as i64;
    let mut weight = vec![0i64; span];
    for (p, c) in prof.ballots() {
        for (pos, x) in p.ranking().iter().enumerate() {
            weight[x.0] += *c as i64 * (m - 1 - pos as i64);
        }
    }
    let denom = n * m * (m - 1) / 2;
    CandidateDistribution::from_masses_unchecked(weight.iter().map(|&w| rational::ratio(w, denom)).collect())
}

pub fn punishing_distribution(prof: &Profile) -> CandidateDistribution {
    punishing_weighted(&prof.weighted())
}

pub fn dictatorship_weighted(prof: &WeightedProfile) -> CandidateDistribution {
    let n = prof.n() as i64;
    let counts = prof.top_counts_within(prof.candidates());
    CandidateDistribution::from_masses_unchecked(counts.iter().map(|&c| rational::ratio(c as i64, n)).collect())
}

pub fn random_dictatorship_distribution(prof: &Profile) -> CandidateDistribution {
    dictatorship_weighted(&prof.weighted())
}

/// `weights` restricted to `set` and renormalised; uniform over `set` when the
/// weights give `set` no mass.
pub fn fixed_within(span: usize, weights: &[Rational], set: CandidateSet) -> CandidateDistribution {
    let total: Rational = set.iter().map(|c| &weights[c.0]).sum();
    let mut mass = vec![Rational::zero(); span];
    if total.is_zero() {
        let share = rational::ratio(1, set.len() as i64);
        for c in set.iter() {
            mass[c.0] = share.clone();
        }
    } else {
        for c in set.iter() {
            mass[c.0] = &weights[c.0] / &total;
        }
    }
    CandidateDistribution::from_masses_unchecked(mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Candidate;
    use crate::rational::ratio;

    fn masses(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(a, b)| ratio(a, b)).collect()
    }

    #[test]
    fn plurality_examples() {
        let prof = Profile::parse(&["0>1", "0>1", "1>0"]).unwrap();
        assert_eq!(plurality_select(&prof).winner(), Some(Candidate(0)));
        let prof = Profile::parse(&["0>1", "1>0"]).unwrap();
        assert_eq!(plurality_select(&prof).winner(), Some(Candidate(0)));
        let prof = Profile::parse(&["1>0", "0>1"]).unwrap();
        assert_eq!(plurality_select(&prof).winner(), Some(Candidate(0)));
        let prof = Profile::parse(&["2"]).unwrap();
        assert_eq!(
            plurality_select(&prof).masses(),
            masses(&[(0, 1), (0, 1), (1, 1)]).as_slice()
        );
    }

    #[test]
    fn punishing_examples() {
        let prof = Profile::parse(&["0>1>2"]).unwrap();
        assert_eq!(
            punishing_distribution(&prof).masses(),
            masses(&[(2, 3), (1, 3), (0, 1)]).as_slice()
        );
        let prof = Profile::parse(&["0>1>2", "1>0>2"]).unwrap();
        assert_eq!(
            punishing_distribution(&prof).masses(),
            masses(&[(1, 2), (1, 2), (0, 1)]).as_slice()
        );
        let prof = Profile::parse(&["0>1", "1>0"]).unwrap();
        assert_eq!(
            punishing_distribution(&prof).masses(),
            masses(&[(1, 2), (1, 2)]).as_slice()
        );
        let prof = Profile::parse(&["0", "0"]).unwrap();
        assert_eq!(punishing_distribution(&prof).winner(), Some(Candidate(0)));
    }

    #[test]
    fn dictatorship_examples() {
        let prof = Profile::parse(&["0>1", "0>1", "1>0", "0>1"]).unwrap();
        assert_eq!(
            random_dictatorship_distribution(&prof).masses(),
            masses(&[(3, 4), (1, 4)]).as_slice()
        );
        let prof = Profile::parse(&["1>0>2"; 3]).unwrap();
        assert_eq!(random_dictatorship_distribution(&prof).winner(), Some(Candidate(1)));
        let prof = Profile::parse(&["1>0", "0>1"]).unwrap();
        assert_eq!(
            random_dictatorship_distribution(&prof).masses(),
            masses(&[(1, 2), (1, 2)]).as_slice()
        );
    }

    #[test]
    fn fixed_selection_renormalises() {
        let w = masses(&[(1, 2), (1, 4), (1, 4)]);
        let set = CandidateSet::from_candidates([Candidate(1), Candidate(2)]);
        assert_eq!(
            fixed_within(3, &w, set).masses(),
            masses(&[(0, 1), (1, 2), (1, 2)]).as_slice()
        );
        let zero = masses(&[(1, 1), (0, 1), (0, 1)]);
        assert_eq!(
            fixed_within(3, &zero, set).masses(),
            masses(&[(0, 1), (1, 2), (1, 2)]).as_slice()
        );
    }

    #[test]
    fn borda_points_descend() {
        assert_eq!(borda_points(3), vec![3, 2, 1]);
    }
}
