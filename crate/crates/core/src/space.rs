//! Finite search spaces: the orderings of a candidate set in a fixed layout,
//! and count compositions (anonymous profiles, coarse grids).

use crate::profile::{Candidate, CandidateSet, PreferenceOrdering};
use crate::rational::binomial_u128;

/// All orderings of `set`, lexicographic in their index sequences. This layout
/// fixes the position of every ordering in a belief vector.
pub fn all_orderings(set: CandidateSet) -> Vec<PreferenceOrdering> {
    let members: Vec<Candidate> = set.iter().collect();
    let k = members.len();
    let total: usize = (1..=k).product();
    (0..total).map(|r| unrank(&members, r)).collect()
}

/// `|L(set)|`.
pub fn ordering_count(set: CandidateSet) -> usize {
    (1..=set.len()).product()
}

fn unrank(members: &[Candidate], mut r: usize) -> PreferenceOrdering {
    let mut pool = members.to_vec();
    let mut ranking = Vec::with_capacity(pool.len());
    let mut block: usize = (1..pool.len()).product();
    while !pool.is_empty() {
        let idx = r / block.max(1);
        r %= block.max(1);
        ranking.push(pool.remove(idx));
        if !pool.is_empty() {
            block /= pool.len();
        }
    }
    PreferenceOrdering::from_ranking_unchecked(ranking)
}

/// Position of `p` within [`all_orderings`] of its own candidate set.
pub fn ordering_index(p: &PreferenceOrdering) -> usize {
    let set = p.candidates();
    let mut pool: Vec<Candidate> = set.iter().collect();
    let mut block: usize = (1..pool.len()).product();
    let mut r = 0;
    for c in p.ranking() {
        let idx = pool.iter().position(|x| x == c).expect("member of own set");
        r += idx * block;
        pool.remove(idx);
        if !pool.is_empty() {
            block /= pool.len();
        }
    }
    r
}

/// Number of ways to write `total` as an ordered sum of `parts` nonnegative
/// integers, saturating.
pub fn composition_count(total: u64, parts: u64) -> u128 {
    if parts == 0 {
        return u128::from(total == 0);
    }
    binomial_u128(total + parts - 1, parts - 1)
}

/// Iterates over every vector of `parts` nonnegative integers summing to
/// `total`, in reverse lexicographic order (`[total, 0, ..]` first).
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u64>,
    done: bool,
}

impl Compositions {
    pub fn new(total: u64, parts: usize) -> Self {
        if parts == 0 {
            return Compositions {
                current: Vec::new(),
                done: total != 0,
            };
        }
        let mut current = vec![0; parts];
        current[0] = total;
        Compositions { current, done: false }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // Move one unit from the rightmost nonzero entry left of the tail to
        // its successor, collecting the tail into that successor.
        let pivot = (0..k.saturating_sub(1)).rev().find(|&i| self.current[i] > 0);
        match pivot {
            None => self.done = true,
            Some(i) => {
                let tail: u64 = self.current[i + 1..].iter().sum();
                self.current[i] -= 1;
                for v in &mut self.current[i + 1..] {
                    *v = 0;
                }
                self.current[i + 1] = tail + 1;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orderings_lexicographic() {
        let got: Vec<String> = all_orderings(CandidateSet::full(3))
            .iter()
            .map(|p| p.to_string())
            .collect();
        assert_eq!(got, ["0>1>2", "0>2>1", "1>0>2", "1>2>0", "2>0>1", "2>1>0"]);
    }

    #[test]
    fn orderings_of_subset() {
        let set = CandidateSet::from_candidates([Candidate(1), Candidate(3)]);
        let got: Vec<String> = all_orderings(set).iter().map(|p| p.to_string()).collect();
        assert_eq!(got, ["1>3", "3>1"]);
    }

    #[test]
    fn rank_round_trips() {
        for m in 1..=5 {
            for (i, p) in all_orderings(CandidateSet::full(m)).iter().enumerate() {
                assert_eq!(ordering_index(p), i);
            }
        }
    }

    #[test]
    fn compositions_are_complete_and_distinct() {
        for total in 0..6u64 {
            for parts in 1..5usize {
                let all: Vec<_> = Compositions::new(total, parts).collect();
                assert_eq!(all.len() as u128, composition_count(total, parts as u64));
                assert!(all.iter().all(|c| c.iter().sum::<u64>() == total));
                let mut dedup = all.clone();
                dedup.sort();
                dedup.dedup();
                assert_eq!(dedup.len(), all.len());
            }
        }
    }

    #[test]
    fn zero_parts() {
        assert_eq!(Compositions::new(0, 0).count(), 1);
        assert_eq!(Compositions::new(2, 0).count(), 0);
    }
}
