//! Voting rules as exact-distribution evaluators.
//!
//! Every rule is described declaratively by a [`VotingRuleSpec`]; the set of
//! specs is closed under the elimination/selection composition and under
//! mixing with the punishing rule.

pub mod elimination;
pub mod lotteries;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{CandidateDistribution, CandidateSet, PreferenceOrdering, Profile, WeightedProfile};
use crate::rational::{self, Rational};

pub use elimination::{
    eliminate_approx_irv, eliminate_by_score, eliminate_repeated_plurality, margin, GapLimit, MarginPolicy,
};
pub use lotteries::{plurality_select, punishing_distribution, random_dictatorship_distribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "elimination", rename_all = "snake_case")]
pub enum EliminationRuleSpec {
    KeepAll,
    RepeatedPlurality { margin: MarginPolicy },
    ApproxIrv { margin: MarginPolicy },
    ScoreMargin { points: Vec<u64>, margin: MarginPolicy },
}

impl EliminationRuleSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            EliminationRuleSpec::KeepAll => Ok(()),
            EliminationRuleSpec::RepeatedPlurality { margin } | EliminationRuleSpec::ApproxIrv { margin } => {
                margin.validate()
            }
            EliminationRuleSpec::ScoreMargin { points, margin } => {
                check_points(points, m)?;
                margin.validate()
            }
        }
    }

    /// Survivor set `f(P)`.
    pub fn survivors(&self, prof: &WeightedProfile) -> Result<CandidateSet> {
        let n = prof.n();
        Ok(match self {
            EliminationRuleSpec::KeepAll => prof.candidates(),
            EliminationRuleSpec::RepeatedPlurality { margin } => {
                elimination::repeated_plurality_rounds(prof, margin.limit(n)).0
            }
            EliminationRuleSpec::ApproxIrv { margin } => elimination::approx_irv_rounds(prof, margin.limit(n)).0,
            EliminationRuleSpec::ScoreMargin { points, margin } => {
                elimination::score_margin_survivors(prof, points, margin.limit(n))?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "selection", rename_all = "snake_case")]
pub enum SelectionRuleSpec {
    Plurality,
    /// Input-independent: the weights restricted to the survivors,
    /// renormalised (uniform when they give the survivors no mass).
    Fixed {
        #[serde(with = "rational::serde_str_vec")]
        weights: Vec<Rational>,
    },
    /// Plurality when exactly two candidates survive, `Fixed` otherwise.
    PluralityWhenTwo {
        #[serde(with = "rational::serde_str_vec")]
        weights: Vec<Rational>,
    },
}

impl SelectionRuleSpec {
    pub fn uniform(m: usize) -> Self {
        SelectionRuleSpec::Fixed {
            weights: vec![Rational::one(); m],
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            SelectionRuleSpec::Plurality => Ok(()),
            SelectionRuleSpec::Fixed { weights } | SelectionRuleSpec::PluralityWhenTwo { weights } => {
                if weights.len() != m {
                    return Err(Error::InvalidSpec(format!(
                        "selection weights have length {}, expected {m}",
                        weights.len()
                    )));
                }
                if weights.iter().any(|w| *w < Rational::zero()) {
                    return Err(Error::InvalidSpec("negative selection weight".into()));
                }
                Ok(())
            }
        }
    }

    /// `s_A` applied to the profile restricted to `set`.
    pub fn select(&self, prof: &WeightedProfile, set: CandidateSet) -> CandidateDistribution {
        let span = prof.candidates().span();
        match self {
            SelectionRuleSpec::Plurality => lotteries::plurality_within(prof, set),
            SelectionRuleSpec::Fixed { weights } => lotteries::fixed_within(span, weights, set),
            SelectionRuleSpec::PluralityWhenTwo { weights } => {
                if set.len() == 2 {
                    lotteries::plurality_within(prof, set)
                } else {
                    lotteries::fixed_within(span, weights, set)
                }
            }
        }
    }
}

/// Probability of running the punishing rule inside a mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "weight", rename_all = "snake_case")]
pub enum MixWeight {
    Fixed {
        #[serde(with = "rational::serde_str")]
        q: Rational,
    },
    /// `q(n) = exp(-c * n^(2 delta))`, rounded to the nearest double and then
    /// used exactly.
    ExpDecay {
        c: f64,
        #[serde(with = "rational::serde_str")]
        delta: Rational,
    },
    /// `q(n) = min(1, n^3 * eps)` for a base rule that is `eps`-strategy-proof.
    CubicScaled {
        #[serde(with = "rational::serde_str")]
        eps: Rational,
    },
}

impl MixWeight {
    pub fn validate(&self) -> Result<()> {
        match self {
            MixWeight::Fixed { q } => {
                if *q < Rational::zero() || *q > Rational::one() {
                    return Err(Error::InvalidSpec(format!(
                        "mixing weight {} outside [0, 1]",
                        rational::format(q)
                    )));
                }
            }
            MixWeight::ExpDecay { c, delta } => {
                if !c.is_finite() || *c <= 0.0 {
                    return Err(Error::InvalidSpec("decay constant must be positive".into()));
                }
                MarginPolicy::asymptotic(delta.clone()).validate()?;
            }
            MixWeight::CubicScaled { eps } => {
                if *eps < Rational::zero() {
                    return Err(Error::InvalidSpec("negative eps".into()));
                }
            }
        }
        Ok(())
    }

    pub fn at(&self, n: u64) -> Rational {
        match self {
            MixWeight::Fixed { q } => q.clone(),
            MixWeight::ExpDecay { c, delta } => {
                let x = (-c * (n as f64).powf(2.0 * rational::to_f64(delta))).exp();
                rational::from_f64(x).unwrap_or_else(|_| Rational::zero())
            }
            MixWeight::CubicScaled { eps } => {
                let q = rational::int(n as i64).pow(3) * eps;
                if q > Rational::one() {
                    Rational::one()
                } else {
                    q
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum VotingRuleSpec {
    Plurality,
    Scoring {
        points: Vec<u64>,
    },
    Borda,
    RandomDictatorship,
    Punishing,
    /// Repeated plurality elimination followed by plurality.
    RepeatedPluralityElim {
        margin: MarginPolicy,
    },
    /// Approximate instant runoff followed by plurality.
    ApproxIrv {
        margin: MarginPolicy,
    },
    ScoreElim {
        points: Vec<u64>,
        margin: MarginPolicy,
        selection: SelectionRuleSpec,
    },
    Framework {
        elim: EliminationRuleSpec,
        sel: SelectionRuleSpec,
    },
    Mixed {
        base: Box<VotingRuleSpec>,
        weight: MixWeight,
    },
}

fn check_points(points: &[u64], m: usize) -> Result<()> {
    if points.len() != m {
        return Err(Error::InvalidSpec(format!(
            "points vector has length {}, expected {m}",
            points.len()
        )));
    }
    Ok(())
}

impl VotingRuleSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        match self {
            VotingRuleSpec::Plurality
            | VotingRuleSpec::Borda
            | VotingRuleSpec::RandomDictatorship
            | VotingRuleSpec::Punishing => Ok(()),
            VotingRuleSpec::Scoring { points } => check_points(points, m),
            VotingRuleSpec::RepeatedPluralityElim { margin } | VotingRuleSpec::ApproxIrv { margin } => {
                margin.validate()
            }
            VotingRuleSpec::ScoreElim {
                points,
                margin,
                selection,
            } => {
                check_points(points, m)?;
                margin.validate()?;
                selection.validate(m)
            }
            VotingRuleSpec::Framework { elim, sel } => {
                elim.validate(m)?;
                sel.validate(m)
            }
            VotingRuleSpec::Mixed { base, weight } => {
                base.validate(m)?;
                weight.validate()
            }
        }
    }

    /// Short human label, used in reports.
    pub fn label(&self) -> String {
        match self {
            VotingRuleSpec::Plurality => "plurality".into(),
            VotingRuleSpec::Scoring { points } => format!("scoring{points:?}"),
            VotingRuleSpec::Borda => "borda".into(),
            VotingRuleSpec::RandomDictatorship => "random-dictatorship".into(),
            VotingRuleSpec::Punishing => "punishing".into(),
            VotingRuleSpec::RepeatedPluralityElim { .. } => "repeated-plurality-elimination".into(),
            VotingRuleSpec::ApproxIrv { .. } => "approximate-irv".into(),
            VotingRuleSpec::ScoreElim { .. } => "score-elimination".into(),
            VotingRuleSpec::Framework { .. } => "framework".into(),
            VotingRuleSpec::Mixed { base, .. } => format!("mixed({})", base.label()),
        }
    }
}

/// `v(P) = s(P|_{f(P)})`.
pub fn compose_framework(elim: EliminationRuleSpec, sel: SelectionRuleSpec) -> VotingRuleSpec {
    VotingRuleSpec::Framework { elim, sel }
}

/// Runs `base` with probability `1 - q` and the punishing rule with
/// probability `q`.
pub fn mix(base: VotingRuleSpec, q: Rational) -> VotingRuleSpec {
    VotingRuleSpec::Mixed {
        base: Box::new(base),
        weight: MixWeight::Fixed { q },
    }
}

pub fn evaluate(rule: &VotingRuleSpec, prof: &Profile) -> Result<CandidateDistribution> {
    evaluate_weighted(rule, &prof.weighted())
}

/// Exact output lottery of `rule` on `prof`, which must range over all of
/// `0..m`.
pub fn evaluate_weighted(rule: &VotingRuleSpec, prof: &WeightedProfile) -> Result<CandidateDistribution> {
    let m = prof.candidates().span();
    if prof.candidates() != CandidateSet::full(m) {
        return Err(Error::InvalidArgument(format!(
            "profile ranges over {}, expected every candidate 0..{m}",
            prof.candidates()
        )));
    }
    rule.validate(m)?;
    Ok(eval_unchecked(rule, prof))
}

pub(crate) fn eval_unchecked(rule: &VotingRuleSpec, prof: &WeightedProfile) -> CandidateDistribution {
    let n = prof.n();
    match rule {
        VotingRuleSpec::Plurality => lotteries::plurality_within(prof, prof.candidates()),
        VotingRuleSpec::Scoring { points } => lotteries::scoring_winner(prof, points).expect("validated points"),
        VotingRuleSpec::Borda => {
            let points = lotteries::borda_points(prof.candidates().len());
            lotteries::scoring_winner(prof, &points).expect("borda points match m")
        }
        VotingRuleSpec::RandomDictatorship => lotteries::dictatorship_weighted(prof),
        VotingRuleSpec::Punishing => lotteries::punishing_weighted(prof),
        VotingRuleSpec::RepeatedPluralityElim { margin } => {
            staged_by_restriction(prof, margin.limit(n), Stage::Plurality)
        }
        VotingRuleSpec::ApproxIrv { margin } => staged_by_restriction(prof, margin.limit(n), Stage::Irv),
        VotingRuleSpec::ScoreElim {
            points,
            margin,
            selection,
        } => {
            let alive = elimination::score_margin_survivors(prof, points, margin.limit(n)).expect("validated points");
            selection.select(prof, alive)
        }
        VotingRuleSpec::Framework { elim, sel } => {
            let alive = elim.survivors(prof).expect("validated elimination");
            sel.select(prof, alive)
        }
        VotingRuleSpec::Mixed { base, weight } => {
            let q = weight.at(n);
            let b = eval_unchecked(base, prof);
            if q.is_zero() {
                return b;
            }
            b.mix(&lotteries::punishing_weighted(prof), &q)
        }
    }
}

#[derive(Clone, Copy)]
enum Stage {
    Plurality,
    Irv,
}

/// The two-stage rules computed the long way: the ballots themselves are
/// restricted after every round and counted by their first entry, and the
/// winner comes from plurality on the fully restricted ballots. Kept separate
/// from the survivor-set route used by `Framework` so the two can be checked
/// against each other.
fn staged_by_restriction(prof: &WeightedProfile, limit: GapLimit, stage: Stage) -> CandidateDistribution {
    let span = prof.candidates().span();
    let mut ballots: Vec<(PreferenceOrdering, u64)> = prof.ballots().to_vec();
    loop {
        let mut counts = vec![0u64; span];
        for (p, c) in &ballots {
            counts[p.top().0] += c;
        }
        let alive: Vec<_> = ballots[0].0.ranking().to_vec();
        let keep: Vec<_> = match stage {
            Stage::Plurality => {
                let best = alive.iter().map(|c| counts[c.0]).max().unwrap_or(0);
                alive
                    .iter()
                    .copied()
                    .filter(|c| limit.admits(best - counts[c.0]))
                    .collect()
            }
            Stage::Irv => {
                let low = alive.iter().map(|c| counts[c.0]).min().unwrap_or(0);
                let survivors: Vec<_> = alive
                    .iter()
                    .copied()
                    .filter(|c| !limit.admits(counts[c.0] - low))
                    .collect();
                if survivors.is_empty() {
                    alive.clone()
                } else {
                    survivors
                }
            }
        };
        if keep.len() == alive.len() {
            let winner = alive
                .iter()
                .copied()
                .min_by_key(|c| (std::cmp::Reverse(counts[c.0]), c.0))
                .expect("non-empty");
            return CandidateDistribution::point(span, winner);
        }
        let set = CandidateSet::from_candidates(keep);
        ballots = ballots
            .iter()
            .map(|(p, c)| (p.restrict(set).expect("subset of own candidates"), *c))
            .collect();
    }
}

/// Parameters for the named presets.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetParams {
    pub delta: Rational,
    /// Constant in `exp(-c n^(2 delta))` for the `-prime` presets.
    pub decay: f64,
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams {
            delta: rational::ratio(1, 10),
            decay: 1.0,
        }
    }
}

pub const PRESET_NAMES: &[&str] = &[
    "plurality",
    "borda",
    "vpl",
    "virv",
    "vscore",
    "vdict",
    "vpunish",
    "vpl-prime",
    "virv-prime",
    "uniform-const",
];

/// Named rule for `m` candidates.
pub fn preset(name: &str, m: usize, params: &PresetParams) -> Result<VotingRuleSpec> {
    let asym = MarginPolicy::asymptotic(params.delta.clone());
    let decay = MixWeight::ExpDecay {
        c: params.decay,
        delta: params.delta.clone(),
    };
    let spec = match name {
        "plurality" => VotingRuleSpec::Plurality,
        "borda" => VotingRuleSpec::Borda,
        "vpl" => VotingRuleSpec::RepeatedPluralityElim { margin: asym },
        "virv" => VotingRuleSpec::ApproxIrv { margin: asym },
        "vscore" => VotingRuleSpec::ScoreElim {
            points: lotteries::borda_points(m),
            margin: asym,
            selection: SelectionRuleSpec::PluralityWhenTwo {
                weights: vec![Rational::one(); m],
            },
        },
        "vdict" => VotingRuleSpec::RandomDictatorship,
        "vpunish" => VotingRuleSpec::Punishing,
        "vpl-prime" => VotingRuleSpec::Mixed {
            base: Box::new(VotingRuleSpec::RepeatedPluralityElim { margin: asym }),
            weight: decay,
        },
        "virv-prime" => VotingRuleSpec::Mixed {
            base: Box::new(VotingRuleSpec::ApproxIrv { margin: asym }),
            weight: decay,
        },
        "uniform-const" => compose_framework(EliminationRuleSpec::KeepAll, SelectionRuleSpec::uniform(m)),
        other => return Err(Error::InvalidSpec(format!("unknown preset `{other}`"))),
    };
    spec.validate(m)?;
    Ok(spec)
}

/// The polynomial `(3/alpha + 1)^ceil(1 / (1/2 - delta))` from the proofs'
/// rate argument. Advisory only: the constants are not claimed tight.
pub fn advisory_min_voters(alpha: &Rational, delta: &Rational) -> f64 {
    let x = rational::to_f64(&alpha.recip());
    let half = rational::ratio(1, 2);
    let exponent = (half - delta).recip().ceil().to_integer().to_i32().unwrap_or(i32::MAX);
    (3.0 * x + 1.0).powi(exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Candidate;
    use crate::rational::{int, ratio};

    fn traced() -> Profile {
        let mut ballots = vec!["0>1>2"; 5];
        ballots.extend(["1>2>0"; 3]);
        ballots.push("2>1>0");
        Profile::parse(&ballots).unwrap()
    }

    fn vpl(t: i64) -> VotingRuleSpec {
        VotingRuleSpec::RepeatedPluralityElim {
            margin: MarginPolicy::explicit(int(t)),
        }
    }

    #[test]
    fn vpl_on_traced_profile() {
        // Survivors {0, 1}; restricted plurality 0:5 vs 1:4.
        let d = evaluate(&vpl(3), &traced()).unwrap();
        assert_eq!(d.winner(), Some(Candidate(0)));
    }

    #[test]
    fn mixed_on_unanimous_profile() {
        let prof = Profile::parse(&["1>0>2"; 4]).unwrap();
        let q = ratio(1, 5);
        let d = evaluate(&mix(VotingRuleSpec::Plurality, q.clone()), &prof).unwrap();
        let expect = (int(1) - &q) + &q * ratio(2, 3);
        assert_eq!(d.mass(Candidate(1)), &expect);
    }

    #[test]
    fn mix_endpoints() {
        let prof = traced();
        let base = vpl(3);
        let b = evaluate(&base, &prof).unwrap();
        let p = punishing_distribution(&prof);
        assert_eq!(evaluate(&mix(base.clone(), int(0)), &prof).unwrap(), b);
        assert_eq!(evaluate(&mix(base, int(1)), &prof).unwrap(), p);
    }

    #[test]
    fn mix_example_five_sixths() {
        // Base puts everything on 0; punishing gives 0 two thirds.
        let prof = Profile::parse(&["0>1>2"]).unwrap();
        let d = evaluate(&mix(VotingRuleSpec::Plurality, ratio(1, 2)), &prof).unwrap();
        assert_eq!(d.mass(Candidate(0)), &ratio(5, 6));
    }

    #[test]
    fn dictatorship_delegates() {
        let prof = traced();
        assert_eq!(
            evaluate(&VotingRuleSpec::RandomDictatorship, &prof).unwrap(),
            random_dictatorship_distribution(&prof)
        );
    }

    #[test]
    fn keep_all_with_plurality_is_plurality() {
        let rule = compose_framework(EliminationRuleSpec::KeepAll, SelectionRuleSpec::Plurality);
        let prof = traced();
        assert_eq!(evaluate(&rule, &prof).unwrap(), plurality_select(&prof));
    }

    #[test]
    fn unbounded_score_margin_with_fixed_selection_is_constant() {
        let weights = vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)];
        let rule = compose_framework(
            EliminationRuleSpec::ScoreMargin {
                points: vec![3, 2, 1],
                margin: MarginPolicy::Unbounded,
            },
            SelectionRuleSpec::Fixed {
                weights: weights.clone(),
            },
        );
        for prof in [traced(), Profile::parse(&["2>1>0"]).unwrap()] {
            assert_eq!(evaluate(&rule, &prof).unwrap().masses(), weights.as_slice());
        }
    }

    #[test]
    fn plurality_when_two() {
        // Borda scores 0:5, 1:4, 2:3 with t = 1 leave {0, 1}; plurality on
        // the restricted ballots picks 1 (two first choices against one).
        let prof = Profile::parse(&["1>0>2", "1>2>0", "0>1>2"]).unwrap();
        let rule = VotingRuleSpec::ScoreElim {
            points: vec![3, 2, 1],
            margin: MarginPolicy::explicit(int(2)),
            selection: SelectionRuleSpec::PluralityWhenTwo {
                weights: vec![int(1); 3],
            },
        };
        let d = evaluate(&rule, &prof).unwrap();
        assert_eq!(d.winner(), Some(Candidate(1)));
        let rule = VotingRuleSpec::ScoreElim {
            points: vec![3, 2, 1],
            margin: MarginPolicy::explicit(int(9)),
            selection: SelectionRuleSpec::PluralityWhenTwo {
                weights: vec![int(1); 3],
            },
        };
        assert_eq!(evaluate(&rule, &prof).unwrap(), CandidateDistribution::uniform(3));
    }

    #[test]
    fn borda_winner() {
        let prof = Profile::parse(&["0>1>2", "1>2>0", "1>0>2"]).unwrap();
        assert_eq!(
            evaluate(&VotingRuleSpec::Borda, &prof).unwrap().winner(),
            Some(Candidate(1))
        );
    }

    #[test]
    fn invalid_specs_rejected() {
        let prof = traced();
        let bad = VotingRuleSpec::Scoring { points: vec![1, 0] };
        assert!(matches!(evaluate(&bad, &prof), Err(Error::InvalidSpec(_))));
        let bad = mix(VotingRuleSpec::Plurality, ratio(3, 2));
        assert!(matches!(evaluate(&bad, &prof), Err(Error::InvalidSpec(_))));
        let bad = VotingRuleSpec::RepeatedPluralityElim {
            margin: MarginPolicy::asymptotic(ratio(3, 4)),
        };
        assert!(matches!(evaluate(&bad, &prof), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn profile_must_cover_all_candidates() {
        let prof = Profile::parse(&["0>2", "2>0"]).unwrap();
        assert!(matches!(
            evaluate(&VotingRuleSpec::Plurality, &prof),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn presets_build_for_three_candidates() {
        for name in PRESET_NAMES {
            let rule = preset(name, 3, &PresetParams::default()).unwrap();
            let d = evaluate(&rule, &traced()).unwrap();
            assert!(d.masses().iter().sum::<Rational>().is_one(), "{name}");
        }
        assert!(preset("nope", 3, &PresetParams::default()).is_err());
    }

    #[test]
    fn decay_weight_is_exact_double() {
        let w = MixWeight::ExpDecay {
            c: 1.0,
            delta: ratio(1, 10),
        };
        let q = w.at(100);
        assert_eq!(rational::to_f64(&q), (-(100f64.powf(0.2))).exp());
        let w = MixWeight::CubicScaled { eps: ratio(1, 1000) };
        assert_eq!(w.at(5), ratio(1, 8));
        assert_eq!(w.at(20), int(1));
    }

    #[test]
    fn spec_json_round_trip() {
        let rule = mix(
            compose_framework(
                EliminationRuleSpec::ApproxIrv {
                    margin: MarginPolicy::asymptotic(ratio(1, 10)),
                },
                SelectionRuleSpec::Plurality,
            ),
            ratio(1, 100),
        );
        let text = serde_json::to_string(&rule).unwrap();
        assert!(text.contains("\"q\":\"1/100\""), "{text}");
        let back: VotingRuleSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rule);
        let raw = r#"{"rule":"repeated_plurality_elim","margin":{"policy":"explicit","t":"3"}}"#;
        assert_eq!(serde_json::from_str::<VotingRuleSpec>(raw).unwrap(), vpl(3));
    }

    #[test]
    fn advisory_rate() {
        // delta = 1/10: ceil(1 / 0.4) = 3; alpha = 1/2: (6 + 1)^3.
        assert_eq!(advisory_min_voters(&ratio(1, 2), &ratio(1, 10)), 343.0);
    }
}
