//! Strategy-proofness, efficiency and unanimity checkers.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::expected::expected_outcomes_exact;
use super::{
    anonymous_profile_count, anonymous_profiles, ballot_strings, check_m, check_n, require_budget, utility_grid,
    weighted_from_counts, PropertyReport, Quantity, Verdict, Witness,
};
use crate::beliefs::{enumerate_coarse_beliefs, Belief, BeliefJson, BeliefSampler};
use crate::error::{Error, Result};
use crate::profile::{Candidate, CandidateDistribution, CandidateSet, PreferenceOrdering, WeightedProfile};
use crate::rational::{self, Rational};
use crate::rules::{eval_unchecked, GapLimit, VotingRuleSpec};
use crate::space::{all_orderings, composition_count, Compositions};
use crate::Budget;

/// Large-scale epsilon-strategy-proofness against every enumerated
/// `alpha`-coarse belief over `m` candidates.
pub fn check_eps_sp_coarse(
    rule: &VotingRuleSpec,
    alpha: &Rational,
    m: usize,
    n: u64,
    eps: &Rational,
    utility_grid_step: &Rational,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_m(m)?;
    let beliefs = enumerate_coarse_beliefs(alpha, m, budget)?;
    check_eps_sp_on_beliefs(rule, &beliefs, alpha, n, eps, utility_grid_step, budget)
}

struct SpOutcome {
    max_gain: Option<Rational>,
    witness: Option<Witness>,
    checked: u64,
}

/// The same check restricted to a given list of beliefs. For every belief,
/// true ordering and grid utility, the best lie may gain at most `eps`.
pub fn check_eps_sp_on_beliefs(
    rule: &VotingRuleSpec,
    beliefs: &[Belief],
    alpha: &Rational,
    n: u64,
    eps: &Rational,
    utility_grid_step: &Rational,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_n(n)?;
    let name = format!("{}-strategy-proof (coarse beliefs)", rational::format(eps));
    let Some(first) = beliefs.first() else {
        return Ok(PropertyReport::exhaustive(name, None, None, 0));
    };
    let set = first.candidates();
    let reports = all_orderings(set);
    let grids: Vec<_> = reports
        .iter()
        .map(|t| utility_grid(t, alpha, utility_grid_step))
        .collect::<Result<_>>()?;

    let outcomes: Vec<SpOutcome> = beliefs
        .par_iter()
        .map(|phi| -> Result<SpOutcome> {
            if phi.candidates() != set {
                return Err(Error::CandidateSetMismatch);
            }
            let table = expected_outcomes_exact(rule, phi, &reports, n, budget)?;
            let mut out = SpOutcome {
                max_gain: None,
                witness: None,
                checked: 0,
            };
            for (t, truth) in reports.iter().enumerate() {
                for u in &grids[t] {
                    let eus: Vec<Rational> = (0..reports.len()).map(|r| table.utility(r, u)).collect();
                    let Some((lie, best)) = eus.iter().enumerate().filter(|(r, _)| *r != t).fold(
                        None::<(usize, &Rational)>,
                        |acc, (r, v)| match acc {
                            Some((_, b)) if b >= v => acc,
                            _ => Some((r, v)),
                        },
                    ) else {
                        continue;
                    };
                    let gain = best - &eus[t];
                    out.checked += 1;
                    if out.witness.is_none() && gain > *eps {
                        out.witness = Some(Witness::Manipulation {
                            belief: BeliefJson::from(phi),
                            truth: truth.to_string(),
                            lie: reports[lie].to_string(),
                            utility: u.values().to_vec(),
                            gain: gain.clone(),
                        });
                    }
                    if out.max_gain.as_ref().is_none_or(|g| gain > *g) {
                        out.max_gain = Some(gain);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut max_gain: Option<Rational> = None;
    let mut witness = None;
    let mut checked = 0;
    for o in outcomes {
        checked += o.checked;
        if witness.is_none() {
            witness = o.witness;
        }
        if let Some(g) = o.max_gain {
            if max_gain.as_ref().is_none_or(|b| g > *b) {
                max_gain = Some(g);
            }
        }
    }
    Ok(PropertyReport::exhaustive(name, witness, max_gain, checked))
}

fn profiles_with_fallback<'a>(
    m: usize,
    n: u64,
    budget: &Budget,
) -> (bool, Box<dyn Iterator<Item = WeightedProfile> + Send + 'a>) {
    if budget.check(anonymous_profile_count(m, n)).is_ok() {
        return (true, Box::new(anonymous_profiles(m, n)));
    }
    // Too many to list: a fixed-seed sample of ordered profiles instead.
    let types = all_orderings(CandidateSet::full(m));
    let samples = budget.cap.min(100_000);
    let iter = (0..samples).map(move |s| {
        let mut rng = BeliefSampler::rng(0, s);
        let voters: Vec<PreferenceOrdering> = (0..n)
            .map(|_| types.choose(&mut rng).expect("m >= 1").clone())
            .collect();
        crate::profile::Profile::new(voters).expect("non-empty").weighted()
    });
    (false, Box::new(iter))
}

fn dominated_pairs(prof: &WeightedProfile, m: usize) -> Vec<(Candidate, Candidate)> {
    let mut out = Vec::new();
    for x in 0..m {
        for y in 0..m {
            if x != y
                && prof
                    .ballots()
                    .iter()
                    .all(|(p, _)| p.prefers(Candidate(x), Candidate(y)))
            {
                out.push((Candidate(x), Candidate(y)));
            }
        }
    }
    out
}

/// Epsilon-Pareto efficiency: a candidate that every voter ranks below some
/// other candidate wins with probability at most `eps`.
pub fn check_pareto(
    rule: &VotingRuleSpec,
    m: usize,
    n: u64,
    eps: &Rational,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    let (exhaustive, profiles) = profiles_with_fallback(m, n, budget);
    let mut worst = Rational::zero();
    let mut witness = None;
    let mut checked = 0;
    for prof in profiles {
        checked += 1;
        let out = eval_unchecked(rule, &prof);
        for (x, y) in dominated_pairs(&prof, m) {
            let mass = out.mass(y);
            if *mass > worst {
                worst = mass.clone();
            }
            if witness.is_none() && *mass > *eps {
                witness = Some(Witness::Dominated {
                    profile: ballot_strings(&prof),
                    dominant: x.0,
                    dominated: y.0,
                    mass: mass.clone(),
                });
            }
        }
    }
    let name = format!("{}-Pareto efficiency", rational::format(eps));
    Ok(if exhaustive || witness.is_some() {
        PropertyReport::exhaustive(name, witness, Some(worst), checked)
    } else {
        PropertyReport::new(name, Verdict::Inconclusive, None, Some(Quantity::Exact(worst)), checked)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnanimityKind {
    /// Every profile whose ballots all put `x` first gives `x` at least
    /// `1 - eps`.
    Strong,
    /// Every profile of identical ballots gives their top at least `1 - eps`.
    Weak,
    /// For each `x`, some profile with `x` first everywhere gives `x` at
    /// least `1 - eps`.
    SuperWeak,
}

fn profiles_topped_by(m: usize, n: u64, x: Candidate) -> impl Iterator<Item = WeightedProfile> {
    let types: Vec<PreferenceOrdering> = all_orderings(CandidateSet::full(m))
        .into_iter()
        .filter(|p| p.top() == x)
        .collect();
    let k = types.len();
    Compositions::new(n, k).map(move |c| weighted_from_counts(&types, &c, None))
}

pub fn check_unanimity(
    rule: &VotingRuleSpec,
    m: usize,
    n: u64,
    eps: &Rational,
    kind: UnanimityKind,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    let floor = Rational::one() - eps;
    let fact: u64 = (1..m as u64).product();
    let mut worst = Rational::zero();
    let mut witness = None;
    let mut checked = 0;
    let mut note = |prof: &WeightedProfile, x: Candidate, mass: &Rational, witness: &mut Option<Witness>| {
        let short = Rational::one() - mass;
        if short > worst {
            worst = short;
        }
        if witness.is_none() && *mass < floor {
            *witness = Some(Witness::Unanimity {
                profile: ballot_strings(prof),
                candidate: x.0,
                mass: mass.clone(),
            });
        }
    };
    match kind {
        UnanimityKind::Strong => {
            require_budget(budget, composition_count(n, fact).saturating_mul(m as u128))?;
            for x in (0..m).map(Candidate) {
                for prof in profiles_topped_by(m, n, x) {
                    checked += 1;
                    let out = eval_unchecked(rule, &prof);
                    note(&prof, x, out.mass(x), &mut witness);
                }
            }
        }
        UnanimityKind::Weak => {
            for p in all_orderings(CandidateSet::full(m)) {
                checked += 1;
                let prof = WeightedProfile::new(vec![(p.clone(), n)])?;
                let out = eval_unchecked(rule, &prof);
                note(&prof, p.top(), out.mass(p.top()), &mut witness);
            }
        }
        UnanimityKind::SuperWeak => {
            require_budget(budget, composition_count(n, fact).saturating_mul(m as u128))?;
            for x in (0..m).map(Candidate) {
                let mut best: Option<(Rational, WeightedProfile)> = None;
                for prof in profiles_topped_by(m, n, x) {
                    checked += 1;
                    let out = eval_unchecked(rule, &prof);
                    let mass = out.mass(x).clone();
                    if best.as_ref().is_none_or(|(b, _)| mass > *b) {
                        best = Some((mass, prof));
                    }
                }
                let (mass, prof) = best.expect("some profile has x on top");
                note(&prof, x, &mass, &mut witness);
            }
        }
    }
    let name = match kind {
        UnanimityKind::Strong => "strong unanimity",
        UnanimityKind::Weak => "weak unanimity",
        UnanimityKind::SuperWeak => "super-weak unanimity",
    };
    Ok(PropertyReport::exhaustive(
        format!("{}-{name}", rational::format(eps)),
        witness,
        Some(worst),
        checked,
    ))
}

/// Every candidate the rule can pick has a first-choice count within the
/// margin of the largest first-choice count.
pub fn check_close_to_optimal(
    rule: &VotingRuleSpec,
    m: usize,
    n: u64,
    limit: GapLimit,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    rule.validate(m)?;
    require_budget(budget, anonymous_profile_count(m, n))?;
    let mut witness = None;
    let mut worst = 0u64;
    let mut checked = 0;
    for prof in anonymous_profiles(m, n) {
        checked += 1;
        let counts = prof.top_counts_within(prof.candidates());
        let best = *counts.iter().max().expect("m >= 1");
        let out = eval_unchecked(rule, &prof);
        for (x, mass) in out.masses().iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            let gap = best - counts[x];
            worst = worst.max(gap);
            if witness.is_none() && !limit.admits(gap) {
                witness = Some(Witness::Optimality {
                    profile: ballot_strings(&prof),
                    winner: x,
                    gap,
                });
            }
        }
    }
    let name = match limit.0 {
        Some(t) => format!("first-choice count within {t} of the maximum"),
        None => "first-choice count within an unbounded margin".to_string(),
    };
    Ok(PropertyReport::exhaustive(
        name,
        witness,
        Some(Rational::from_integer(worst.into())),
        checked,
    ))
}

/// Strict truthfulness margin of the punishing rule: over every profile,
/// voter and misreport, and every `alpha`-coarse consistent utility on the
/// grid of step `alpha`, truth beats the lie by at least
/// `inversions * 2 alpha / (n m (m - 1))`. The measured quantity is the
/// smallest slack (loss minus bound).
pub fn strict_sp_margin_punishing(n: u64, m: usize, alpha: &Rational, budget: &Budget) -> Result<PropertyReport> {
    check_m(m)?;
    check_n(n)?;
    if m < 2 {
        return Err(Error::InvalidArgument("need two candidates for a misreport".into()));
    }
    let rule = VotingRuleSpec::Punishing;
    let types = all_orderings(CandidateSet::full(m));
    let k = types.len();
    require_budget(budget, composition_count(n - 1, k as u64).saturating_mul(k as u128))?;
    let grids: Vec<_> = types
        .iter()
        .map(|t| utility_grid(t, alpha, alpha))
        .collect::<Result<_>>()?;
    let per_inversion = rational::int(2) * alpha / Rational::from_integer((n * m as u64 * (m as u64 - 1)).into());
    let inversions: Vec<Vec<i128>> = types
        .iter()
        .map(|t| types.iter().map(|l| t.inversions(l) as i128).collect())
        .collect();

    // Everything below runs on integers: utilities scaled by `su`, lottery
    // masses by a per-profile `sm`, so `loss >= inv * p` becomes
    // `loss_int * p_den >= inv * p_num * su * sm`.
    let too_big = || Error::InvalidArgument("instance too large for the strictness check".into());
    let su = to_i128(&rational::lcm_of_denominators(
        grids.iter().flatten().flat_map(|u| u.values()),
    ))
    .ok_or_else(too_big)?;
    let grid_ints: Vec<Vec<Vec<i128>>> = grids
        .iter()
        .map(|g| g.iter().map(|u| scale_all(u.values(), su)).collect::<Option<_>>())
        .collect::<Option<_>>()
        .ok_or_else(too_big)?;
    let pnum = to_i128(per_inversion.numer()).ok_or_else(too_big)?;
    let pden = to_i128(per_inversion.denom()).ok_or_else(too_big)?;

    struct Part {
        slack: Option<Rational>,
        witness: Option<Witness>,
        checked: u64,
    }
    let others: Vec<Vec<u64>> = Compositions::new(n - 1, k).collect();
    let parts: Vec<Part> = others
        .par_iter()
        .map(|counts| -> Result<Part> {
            let outs: Vec<CandidateDistribution> = types
                .iter()
                .map(|r| eval_unchecked(&rule, &weighted_from_counts(&types, counts, Some(r))))
                .collect();
            let sm =
                to_i128(&rational::lcm_of_denominators(outs.iter().flat_map(|o| o.masses()))).ok_or_else(too_big)?;
            let mass_ints: Vec<Vec<i128>> = outs
                .iter()
                .map(|o| scale_all(o.masses(), sm))
                .collect::<Option<_>>()
                .ok_or_else(too_big)?;
            let unit = pnum
                .checked_mul(su)
                .and_then(|x| x.checked_mul(sm))
                .ok_or_else(too_big)?;
            let mut part = Part {
                slack: None,
                witness: None,
                checked: 0,
            };
            let mut min_slack: Option<i128> = None;
            for (t, truth) in types.iter().enumerate() {
                for (ui, g) in grid_ints[t].iter().enumerate() {
                    let eu: Vec<i128> = mass_ints
                        .iter()
                        .map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum())
                        .collect();
                    for (l, lie) in types.iter().enumerate() {
                        if l == t {
                            continue;
                        }
                        part.checked += 1;
                        let loss = eu[t] - eu[l];
                        let slack = loss * pden - inversions[t][l] * unit;
                        if part.witness.is_none() && slack < 0 {
                            let scale = Rational::from_integer((su * sm).into());
                            part.witness = Some(Witness::StrictLoss {
                                profile: ballot_strings(&weighted_from_counts(&types, counts, Some(truth))),
                                truth: truth.to_string(),
                                lie: lie.to_string(),
                                utility: grids[t][ui].values().to_vec(),
                                loss: Rational::from_integer(loss.into()) / scale,
                                bound: &per_inversion * Rational::from_integer(inversions[t][l].into()),
                            });
                        }
                        if min_slack.is_none_or(|s| slack < s) {
                            min_slack = Some(slack);
                        }
                    }
                }
            }
            part.slack = min_slack.map(|s| Rational::new(s.into(), (su * sm * pden).into()));
            Ok(part)
        })
        .collect::<Result<_>>()?;
    let mut slack: Option<Rational> = None;
    let mut witness = None;
    let mut checked = 0;
    for p in parts {
        checked += p.checked;
        if witness.is_none() {
            witness = p.witness;
        }
        if let Some(s) = p.slack {
            if slack.as_ref().is_none_or(|b| s < *b) {
                slack = Some(s);
            }
        }
    }
    Ok(PropertyReport::exhaustive(
        format!(
            "punishing rule strict truthfulness margin (alpha {})",
            rational::format(alpha)
        ),
        witness,
        slack,
        checked,
    ))
}

fn to_i128(x: &num_bigint::BigInt) -> Option<i128> {
    num_traits::ToPrimitive::to_i128(x)
}

/// `values * scale` as integers, when every product is whole and fits.
fn scale_all(values: &[Rational], scale: i128) -> Option<Vec<i128>> {
    values
        .iter()
        .map(|v| {
            let x = v * Rational::from_integer(scale.into());
            if x.is_integer() {
                to_i128(x.numer())
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{Profile, UtilityFunction};
    use crate::rational::{int, ratio};
    use crate::rules::{evaluate, lotteries::borda_points, MarginPolicy, SelectionRuleSpec};

    fn b() -> Budget {
        Budget::default()
    }

    fn vpl(t: i64) -> VotingRuleSpec {
        VotingRuleSpec::RepeatedPluralityElim {
            margin: MarginPolicy::explicit(int(t)),
        }
    }

    #[test]
    fn dictatorship_is_sp_on_coarse_beliefs() {
        let rep = check_eps_sp_coarse(
            &VotingRuleSpec::RandomDictatorship,
            &ratio(1, 2),
            3,
            3,
            &int(0),
            &ratio(1, 2),
            &b(),
        )
        .unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.checked > 0);
    }

    #[test]
    fn plurality_fails_with_recheckable_witness() {
        let rep = check_eps_sp_coarse(
            &VotingRuleSpec::Plurality,
            &ratio(1, 2),
            3,
            3,
            &ratio(1, 100),
            &ratio(1, 2),
            &b(),
        )
        .unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let Some(Witness::Manipulation {
            belief,
            truth,
            lie,
            utility,
            gain,
        }) = rep.witness
        else {
            panic!("expected a manipulation witness");
        };
        let phi = Belief::try_from(belief).unwrap();
        let truth: PreferenceOrdering = truth.parse().unwrap();
        let lie: PreferenceOrdering = lie.parse().unwrap();
        let u = UtilityFunction::new(utility).unwrap();
        let eu = |r: &PreferenceOrdering| {
            super::super::expected_utility_exact(&VotingRuleSpec::Plurality, &phi, r, &u, 3, &b()).unwrap()
        };
        assert_eq!(eu(&lie) - eu(&truth), gain);
        assert!(gain > ratio(1, 100));
    }

    #[test]
    fn vpl_without_elimination_on_symmetric_belief() {
        // A margin of n never eliminates, so this is plurality: it fails on
        // the coarse grid but the fully symmetric belief leaves no gain.
        for n in 2..=5u64 {
            let rule = vpl(n as i64);
            let sym = check_eps_sp_on_beliefs(
                &rule,
                &[Belief::uniform(3)],
                &ratio(1, 2),
                n,
                &int(0),
                &ratio(1, 2),
                &b(),
            )
            .unwrap();
            assert!(sym.pass, "n={n}: {sym:?}");
            assert!(sym.checked > 0);
        }
        let all = check_eps_sp_coarse(&vpl(3), &ratio(1, 2), 3, 3, &int(0), &ratio(1, 2), &b()).unwrap();
        assert!(!all.pass);
    }

    #[test]
    fn pareto_examples() {
        for t in [0, 1, 2] {
            assert!(check_pareto(&vpl(t), 3, 4, &int(0), &b()).unwrap().pass);
        }
        let constant = crate::rules::compose_framework(
            crate::rules::EliminationRuleSpec::KeepAll,
            SelectionRuleSpec::uniform(3),
        );
        let rep = check_pareto(&constant, 3, 3, &int(0), &b()).unwrap();
        assert!(!rep.pass);
        let Some(Witness::Dominated {
            profile,
            dominated,
            mass,
            ..
        }) = rep.witness
        else {
            panic!()
        };
        assert_eq!(mass, ratio(1, 3));
        let refs: Vec<&str> = profile.iter().map(String::as_str).collect();
        let out = evaluate(&constant, &Profile::parse(&refs).unwrap()).unwrap();
        assert_eq!(out.mass(Candidate(dominated)), &ratio(1, 3));
    }

    #[test]
    fn pareto_sampled_fallback_is_inconclusive() {
        let rep = check_pareto(&vpl(1), 3, 6, &int(0), &Budget::new(10)).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        let rep = check_pareto(&VotingRuleSpec::Punishing, 3, 6, &int(0), &Budget::new(10)).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
    }

    #[test]
    fn mixed_rule_is_q_pareto() {
        let q = (-1f64).exp();
        let q = rational::from_f64(q).unwrap();
        let rule = crate::rules::mix(vpl(1), q.clone());
        assert!(check_pareto(&rule, 3, 3, &q, &b()).unwrap().pass);
        assert!(!check_pareto(&rule, 3, 3, &int(0), &b()).unwrap().pass);
    }

    #[test]
    fn unanimity_examples() {
        for kind in [UnanimityKind::Strong, UnanimityKind::Weak, UnanimityKind::SuperWeak] {
            assert!(
                check_unanimity(&VotingRuleSpec::RandomDictatorship, 3, 3, &int(0), kind, &b())
                    .unwrap()
                    .pass
            );
        }
        let rep = check_unanimity(
            &VotingRuleSpec::Punishing,
            3,
            2,
            &ratio(1, 4),
            UnanimityKind::Strong,
            &b(),
        )
        .unwrap();
        assert!(!rep.pass);
        assert_eq!(rep.measured_eps, Some(Quantity::Exact(ratio(1, 3))));
        let virv = VotingRuleSpec::ApproxIrv {
            margin: MarginPolicy::explicit(int(1)),
        };
        for n in 1..=5 {
            assert!(
                check_unanimity(&virv, 3, n, &int(0), UnanimityKind::Strong, &b())
                    .unwrap()
                    .pass
            );
        }
    }

    #[test]
    fn optimality_of_vpl() {
        for t in 0..3u64 {
            let rep = check_close_to_optimal(&vpl(t as i64), 3, 5, GapLimit(Some(t)), &b()).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        // Borda can elect a candidate with no first choices at all.
        let rep = check_close_to_optimal(&VotingRuleSpec::Borda, 3, 5, GapLimit(Some(0)), &b()).unwrap();
        assert!(!rep.pass);
        assert_eq!(borda_points(3).len(), 3);
    }

    #[test]
    fn punishing_single_voter_loss() {
        // Truth 0>1>2, lie 1>0>2, u = (1, 1/2, 0): loss (1/2)(2/6) = 1/6.
        let truth = Profile::parse(&["0>1>2"]).unwrap();
        let lie = Profile::parse(&["1>0>2"]).unwrap();
        let u = UtilityFunction::new(vec![int(1), ratio(1, 2), int(0)]).unwrap();
        let rule = VotingRuleSpec::Punishing;
        let loss = u.expected(&evaluate(&rule, &truth).unwrap()) - u.expected(&evaluate(&rule, &lie).unwrap());
        assert_eq!(loss, ratio(1, 6));
        let rep = strict_sp_margin_punishing(1, 3, &ratio(1, 2), &b()).unwrap();
        assert!(rep.pass);
        // The single adjacent swap above meets the bound with equality.
        assert_eq!(rep.measured_eps, Some(Quantity::Exact(int(0))));
    }

    #[test]
    fn punishing_margin_small_cases() {
        for n in 1..=3 {
            for alpha in [ratio(1, 4), ratio(1, 2)] {
                assert!(strict_sp_margin_punishing(n, 3, &alpha, &b()).unwrap().pass);
            }
        }
    }
}
