//! Structural axioms: pairwise responsiveness and isolation, the `v'` table,
//! and closeness between two rules.

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use super::{
    anonymous_profile_count, anonymous_profiles, ballot_strings, check_m, check_n, require_budget,
    weighted_from_counts, PropertyReport, Witness,
};
use crate::error::Result;
use crate::profile::{Candidate, CandidateSet, PreferenceOrdering, WeightedProfile};
use crate::rational::{self, Rational};
use crate::rules::{eval_unchecked, VotingRuleSpec};
use crate::space::{all_orderings, composition_count, Compositions};
use crate::Budget;

/// `prof` with one copy of `from` replaced by `to`.
fn replace_one(prof: &WeightedProfile, from: &PreferenceOrdering, to: &PreferenceOrdering) -> WeightedProfile {
    let mut ballots: Vec<(PreferenceOrdering, u64)> = prof.ballots().to_vec();
    let i = ballots.iter().position(|(p, _)| p == from).expect("ballot present");
    ballots[i].1 -= 1;
    match ballots.iter_mut().find(|(p, _)| p == to) {
        Some((_, c)) => *c += 1,
        None => ballots.push((to.clone(), 1)),
    }
    ballots.retain(|(_, c)| *c > 0);
    WeightedProfile::new(ballots).expect("n >= 1")
}

/// Swapping two adjacent candidates in one ballot moves probability only
/// between those two candidates.
pub fn check_pairwise_responsive(rule: &VotingRuleSpec, m: usize, n: u64, budget: &Budget) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    require_budget(budget, anonymous_profile_count(m, n))?;
    let mut witness = None;
    let mut checked = 0;
    'outer: for prof in anonymous_profiles(m, n) {
        let before = eval_unchecked(rule, &prof);
        for (ballot, _) in prof.ballots() {
            for pos in 0..m.saturating_sub(1) {
                checked += 1;
                let swapped = ballot.swap_adjacent(pos);
                let after = eval_unchecked(rule, &replace_one(&prof, ballot, &swapped));
                let (x, y) = (ballot.ranking()[pos], ballot.ranking()[pos + 1]);
                for z in (0..m).map(Candidate).filter(|z| *z != x && *z != y) {
                    if before.mass(z) != after.mass(z) {
                        witness = Some(Witness::Swap {
                            profile: ballot_strings(&prof),
                            ballot: ballot.to_string(),
                            position: pos,
                            candidate: z.0,
                            before: before.mass(z).clone(),
                            after: after.mass(z).clone(),
                        });
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(PropertyReport::exhaustive(
        "pairwise responsive",
        witness,
        None,
        checked,
    ))
}

/// The shift in the lower candidate's probability caused by swapping an
/// adjacent pair in one ballot depends only on that ballot and on how the
/// other voters order the pair.
pub fn check_pairwise_isolated(rule: &VotingRuleSpec, m: usize, n: u64, budget: &Budget) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    let types = all_orderings(CandidateSet::full(m));
    let k = types.len();
    require_budget(budget, composition_count(n - 1, k as u64).saturating_mul(k as u128))?;
    // Anonymity reduces "how the others order x and y" to a count.
    let mut seen: HashMap<(usize, usize, u64), (Rational, Vec<String>)> = HashMap::new();
    let mut witness = None;
    let mut checked = 0;
    'outer: for counts in Compositions::new(n - 1, k) {
        for (i, ballot) in types.iter().enumerate() {
            let prof = weighted_from_counts(&types, &counts, Some(ballot));
            let before = eval_unchecked(rule, &prof);
            for pos in 0..m.saturating_sub(1) {
                checked += 1;
                let (x, y) = (ballot.ranking()[pos], ballot.ranking()[pos + 1]);
                let swapped = ballot.swap_adjacent(pos);
                let after = eval_unchecked(rule, &weighted_from_counts(&types, &counts, Some(&swapped)));
                let shift = after.mass(y) - before.mass(y);
                let agree: u64 = types
                    .iter()
                    .zip(&counts)
                    .filter(|(p, _)| p.prefers(x, y))
                    .map(|(_, c)| c)
                    .sum();
                match seen.get(&(i, pos, agree)) {
                    Some((first, first_prof)) if *first != shift => {
                        witness = Some(Witness::Isolation {
                            first: first_prof.clone(),
                            second: ballot_strings(&prof),
                            ballot: ballot.to_string(),
                            position: pos,
                            first_shift: first.clone(),
                            second_shift: shift,
                        });
                        break 'outer;
                    }
                    Some(_) => {}
                    None => {
                        seen.insert((i, pos, agree), (shift, ballot_strings(&prof)));
                    }
                }
            }
        }
    }
    Ok(PropertyReport::exhaustive("pairwise isolated", witness, None, checked))
}

/// `entries[x][j]` is the probability of `x` on the profile where `j`
/// voters rank `x` first and the rest in index order, and the other `n - j`
/// rank in index order with `x` moved to the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct VPrimeTable {
    pub m: usize,
    pub n: u64,
    pub entries: Vec<Vec<Rational>>,
}

impl VPrimeTable {
    pub fn get(&self, x: Candidate, j: u64) -> &Rational {
        &self.entries[x.0][j as usize]
    }

    /// One row per candidate, one column per `j`, exact `p/q` cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("candidate");
        for j in 0..=self.n {
            out.push_str(&format!(",j{j}"));
        }
        out.push('\n');
        for (x, row) in self.entries.iter().enumerate() {
            out.push_str(&x.to_string());
            for v in row {
                out.push(',');
                out.push_str(&rational::format(v));
            }
            out.push('\n');
        }
        out
    }
}

impl Serialize for VPrimeTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            m: usize,
            n: u64,
            entries: Vec<Vec<String>>,
        }
        Repr {
            m: self.m,
            n: self.n,
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(rational::format).collect())
                .collect(),
        }
        .serialize(s)
    }
}

fn x_first(x: Candidate, m: usize) -> PreferenceOrdering {
    let mut ranking = vec![x];
    ranking.extend((0..m).map(Candidate).filter(|c| *c != x));
    PreferenceOrdering::new(ranking).expect("permutation")
}

fn x_last(x: Candidate, m: usize) -> PreferenceOrdering {
    let mut ranking: Vec<Candidate> = (0..m).map(Candidate).filter(|c| *c != x).collect();
    ranking.push(x);
    PreferenceOrdering::new(ranking).expect("permutation")
}

pub fn build_vprime(rule: &VotingRuleSpec, m: usize, n: u64) -> Result<VPrimeTable> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    let entries = (0..m)
        .map(Candidate)
        .map(|x| {
            let (top, bottom) = (x_first(x, m), x_last(x, m));
            (0..=n)
                .map(|j| {
                    let prof = WeightedProfile::new(vec![(top.clone(), j), (bottom.clone(), n - j)]).expect("n >= 1");
                    eval_unchecked(rule, &prof).mass(x).clone()
                })
                .collect()
        })
        .collect();
    Ok(VPrimeTable { m, n, entries })
}

/// Largest difference between the two rules' probabilities for any
/// candidate on any profile.
pub fn closeness(
    first: &VotingRuleSpec,
    second: &VotingRuleSpec,
    m: usize,
    n: u64,
    budget: &Budget,
) -> Result<Rational> {
    check_m(m)?;
    check_n(n)?;
    first.validate(m)?;
    second.validate(m)?;
    require_budget(budget, anonymous_profile_count(m, n))?;
    let mut worst = Rational::zero();
    for prof in anonymous_profiles(m, n) {
        let a = eval_unchecked(first, &prof);
        let b = eval_unchecked(second, &prof);
        for (p, q) in a.masses().iter().zip(b.masses()) {
            let d = (p - q).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use crate::rational::{int, ratio};
    use crate::rules::{compose_framework, evaluate, mix, EliminationRuleSpec, MarginPolicy, SelectionRuleSpec};

    fn b() -> Budget {
        Budget::default()
    }

    fn uniform_const() -> VotingRuleSpec {
        compose_framework(EliminationRuleSpec::KeepAll, SelectionRuleSpec::uniform(3))
    }

    #[test]
    fn responsive_examples() {
        for n in 1..=3 {
            assert!(
                check_pairwise_responsive(&VotingRuleSpec::RandomDictatorship, 3, n, &b())
                    .unwrap()
                    .pass
            );
            assert!(
                check_pairwise_responsive(&VotingRuleSpec::Punishing, 3, n, &b())
                    .unwrap()
                    .pass
            );
        }
        let vpl = VotingRuleSpec::RepeatedPluralityElim {
            margin: MarginPolicy::explicit(int(1)),
        };
        let rep = check_pairwise_responsive(&vpl, 3, 3, &b()).unwrap();
        assert!(!rep.pass);
        let Some(Witness::Swap {
            profile,
            ballot,
            position,
            candidate,
            before,
            after,
        }) = rep.witness
        else {
            panic!()
        };
        let refs: Vec<&str> = profile.iter().map(String::as_str).collect();
        let prof = Profile::parse(&refs).unwrap();
        let ballot: PreferenceOrdering = ballot.parse().unwrap();
        let i = prof.voters().iter().position(|p| *p == ballot).unwrap();
        let swapped = prof.replace_voter(i, ballot.swap_adjacent(position));
        assert_eq!(evaluate(&vpl, &prof).unwrap().mass(Candidate(candidate)), &before);
        assert_eq!(evaluate(&vpl, &swapped).unwrap().mass(Candidate(candidate)), &after);
        assert_ne!(before, after);
    }

    #[test]
    fn isolated_examples() {
        for n in 1..=3 {
            assert!(
                check_pairwise_isolated(&VotingRuleSpec::RandomDictatorship, 3, n, &b())
                    .unwrap()
                    .pass
            );
            assert!(
                check_pairwise_isolated(&VotingRuleSpec::Punishing, 3, n, &b())
                    .unwrap()
                    .pass
            );
        }
        let rep = check_pairwise_isolated(&VotingRuleSpec::Plurality, 3, 3, &b()).unwrap();
        assert!(!rep.pass);
        let Some(Witness::Isolation {
            first_shift,
            second_shift,
            ..
        }) = rep.witness
        else {
            panic!()
        };
        assert_ne!(first_shift, second_shift);
    }

    #[test]
    fn vprime_examples() {
        for n in 1..=6u64 {
            let t = build_vprime(&VotingRuleSpec::RandomDictatorship, 3, n).unwrap();
            for x in 0..3 {
                for j in 0..=n {
                    assert_eq!(t.get(Candidate(x), j), &ratio(j as i64, n as i64));
                }
            }
        }
        let t = build_vprime(&uniform_const(), 3, 4).unwrap();
        assert!(t.entries.iter().flatten().all(|v| *v == ratio(1, 3)));
        let vpl = VotingRuleSpec::RepeatedPluralityElim {
            margin: MarginPolicy::explicit(int(1)),
        };
        let t = build_vprime(&vpl, 3, 4).unwrap();
        for x in 0..3 {
            assert_eq!(t.get(Candidate(x), 0), &int(0));
            assert_eq!(t.get(Candidate(x), 4), &int(1));
        }
        assert!(t.to_csv().starts_with("candidate,j0,j1,j2,j3,j4\n0,0/1"));
    }

    #[test]
    fn closeness_examples() {
        let d = VotingRuleSpec::RandomDictatorship;
        assert_eq!(closeness(&d, &d, 3, 3, &b()).unwrap(), int(0));
        assert_eq!(closeness(&d, &uniform_const(), 3, 3, &b()).unwrap(), ratio(2, 3));
        let base = VotingRuleSpec::Plurality;
        for n in 1..=3 {
            let q = ratio(1, 7);
            assert!(closeness(&mix(base.clone(), q.clone()), &base, 3, n, &b()).unwrap() <= q);
        }
    }

    #[test]
    fn dictatorship_agrees_with_profile_view() {
        let prof = Profile::parse(&["0>1>2", "2>1>0"]).unwrap();
        let d = evaluate(&VotingRuleSpec::RandomDictatorship, &prof).unwrap();
        assert_eq!(d.mass(Candidate(2)), &ratio(1, 2));
    }
}
