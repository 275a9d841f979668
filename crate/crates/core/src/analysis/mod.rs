//! Verification engine: expected utility under i.i.d. beliefs, manipulation
//! search, and decision procedures for the efficiency and structural axioms.
//!
//! Exhaustive checkers walk anonymous profiles (multisets of ballots). Every
//! rule in [`crate::rules`] is anonymous, so this covers every ordered
//! profile.

mod axioms;
mod checks;
mod expected;
mod pivotality;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::profile::{CandidateSet, PreferenceOrdering, UtilityFunction, WeightedProfile};
use crate::rational::{self, Rational};
use crate::space::{all_orderings, composition_count, Compositions};
use crate::Budget;

pub use axioms::{build_vprime, check_pairwise_isolated, check_pairwise_responsive, closeness, VPrimeTable};
pub use checks::{
    check_close_to_optimal, check_eps_sp_coarse, check_eps_sp_on_beliefs, check_pareto, check_unanimity,
    strict_sp_margin_punishing, UnanimityKind,
};
pub use expected::{
    expected_outcome_exact, expected_outcomes_exact, expected_utility_exact, expected_utility_mc, manipulation_gain,
    GainMode, ManipulationReport, OutcomeTable,
};
pub use pivotality::{elimination_pivotality_exact, elimination_pivotality_mc};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Sampling could not separate the estimate from the threshold, or an
    /// exhaustive search was replaced by a sample that found nothing.
    Inconclusive,
}

impl Verdict {
    /// Pass only when the whole interval clears the threshold, fail only
    /// when the whole interval exceeds it.
    pub fn from_estimate(estimate: f64, ci: f64, threshold: f64) -> Verdict {
        if estimate + ci <= threshold {
            Verdict::Pass
        } else if estimate - ci > threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }
}

/// A value that is either exact or a Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantity {
    Exact(Rational),
    Estimate { value: f64, ci_halfwidth: f64 },
}

impl Quantity {
    pub fn as_f64(&self) -> f64 {
        match self {
            Quantity::Exact(q) => rational::to_f64(q),
            Quantity::Estimate { value, .. } => *value,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Quantity::Exact(q) => Some(q),
            Quantity::Estimate { .. } => None,
        }
    }
}

impl Serialize for Quantity {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Quantity::Exact(q) => s.serialize_str(&rational::format(q)),
            Quantity::Estimate { value, .. } => s.serialize_f64(*value),
        }
    }
}

/// Counterexample attached to a failing report. Ballots are written as
/// `"2>0>1"`; a profile lists one entry per voter.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Manipulation {
        belief: crate::beliefs::BeliefJson,
        truth: String,
        lie: String,
        #[serde(with = "rational::serde_str_vec")]
        utility: Vec<Rational>,
        #[serde(with = "rational::serde_str")]
        gain: Rational,
    },
    Dominated {
        profile: Vec<String>,
        dominant: usize,
        dominated: usize,
        #[serde(with = "rational::serde_str")]
        mass: Rational,
    },
    Unanimity {
        profile: Vec<String>,
        candidate: usize,
        #[serde(with = "rational::serde_str")]
        mass: Rational,
    },
    Optimality {
        profile: Vec<String>,
        winner: usize,
        gap: u64,
    },
    Swap {
        profile: Vec<String>,
        ballot: String,
        position: usize,
        candidate: usize,
        #[serde(with = "rational::serde_str")]
        before: Rational,
        #[serde(with = "rational::serde_str")]
        after: Rational,
    },
    Isolation {
        first: Vec<String>,
        second: Vec<String>,
        ballot: String,
        position: usize,
        #[serde(with = "rational::serde_str")]
        first_shift: Rational,
        #[serde(with = "rational::serde_str")]
        second_shift: Rational,
    },
    StrictLoss {
        profile: Vec<String>,
        truth: String,
        lie: String,
        #[serde(with = "rational::serde_str_vec")]
        utility: Vec<Rational>,
        #[serde(with = "rational::serde_str")]
        loss: Rational,
        #[serde(with = "rational::serde_str")]
        bound: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub pass: bool,
    pub witness: Option<Witness>,
    /// The smallest epsilon for which the property would hold on everything
    /// that was examined.
    pub measured_eps: Option<Quantity>,
    /// Number of cases examined.
    pub checked: u64,
}

impl PropertyReport {
    pub(crate) fn new(
        property: impl Into<String>,
        verdict: Verdict,
        witness: Option<Witness>,
        measured_eps: Option<Quantity>,
        checked: u64,
    ) -> Self {
        PropertyReport {
            property: property.into(),
            verdict,
            pass: verdict == Verdict::Pass,
            witness,
            measured_eps,
            checked,
        }
    }

    /// Verdict from an exhaustive search: pass iff no witness turned up.
    pub(crate) fn exhaustive(
        property: impl Into<String>,
        witness: Option<Witness>,
        measured_eps: Option<Rational>,
        checked: u64,
    ) -> Self {
        let verdict = if witness.is_some() {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        PropertyReport::new(property, verdict, witness, measured_eps.map(Quantity::Exact), checked)
    }
}

/// Every utility whose values come from `{0, step, 2 step, .., 1}`, strictly
/// decreasing along `truth`, with distinct values at least `alpha` apart.
/// `1 / step` must be a positive integer.
pub fn utility_grid(truth: &PreferenceOrdering, alpha: &Rational, step: &Rational) -> Result<Vec<UtilityFunction>> {
    if *step <= Rational::zero() || *step > Rational::one() || !step.recip().is_integer() {
        return Err(Error::InvalidArgument(format!(
            "grid step {} must be 1/K for a positive integer K",
            rational::format(step)
        )));
    }
    let m = truth.candidates().span();
    if truth.candidates() != CandidateSet::full(m) {
        return Err(Error::InvalidArgument("truth must rank every candidate".into()));
    }
    let levels = step.recip().to_integer();
    let levels: usize = levels
        .try_into()
        .map_err(|_| Error::InvalidArgument("grid step too fine".into()))?;
    // Choose m of the levels 0..=levels in decreasing order.
    fn pick(hi: Option<usize>, m: usize, chosen: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if chosen.len() == m {
            out.push(chosen.clone());
            return;
        }
        let Some(hi) = hi else { return };
        for k in (0..=hi).rev() {
            chosen.push(k);
            pick(k.checked_sub(1), m, chosen, out);
            chosen.pop();
        }
    }
    let mut raw = Vec::new();
    pick(Some(levels), m, &mut Vec::with_capacity(m), &mut raw);
    let mut out = Vec::new();
    for pick in raw {
        let vals: Vec<Rational> = pick.iter().map(|&k| step * Rational::from_integer(k.into())).collect();
        if vals.windows(2).any(|w| &w[0] - &w[1] < *alpha) {
            continue;
        }
        let mut values = vec![Rational::zero(); m];
        for (c, v) in truth.ranking().iter().zip(vals) {
            values[c.0] = v;
        }
        out.push(UtilityFunction::new(values)?);
    }
    Ok(out)
}

/// Number of anonymous profiles of `n` voters over `m` candidates.
pub fn anonymous_profile_count(m: usize, n: u64) -> u128 {
    composition_count(n, all_orderings(CandidateSet::full(m)).len() as u64)
}

/// Every multiset of `n` ballots over `m` candidates.
pub fn anonymous_profiles(m: usize, n: u64) -> impl Iterator<Item = WeightedProfile> {
    let types = all_orderings(CandidateSet::full(m));
    let k = types.len();
    Compositions::new(n, k).map(move |counts| weighted_from_counts(&types, &counts, None))
}

pub(crate) fn weighted_from_counts(
    types: &[PreferenceOrdering],
    counts: &[u64],
    extra: Option<&PreferenceOrdering>,
) -> WeightedProfile {
    let mut ballots: Vec<(PreferenceOrdering, u64)> = types
        .iter()
        .zip(counts)
        .filter(|(_, c)| **c > 0)
        .map(|(p, c)| (p.clone(), *c))
        .collect();
    if let Some(p) = extra {
        match ballots.iter_mut().find(|(q, _)| q == p) {
            Some((_, c)) => *c += 1,
            None => ballots.push((p.clone(), 1)),
        }
    }
    let candidates = extra
        .map(|p| p.candidates())
        .or_else(|| types.first().map(|p| p.candidates()))
        .unwrap_or_else(CandidateSet::empty);
    WeightedProfile::from_parts_unchecked(candidates, ballots)
}

/// Ballot list of a profile, one string per voter.
pub(crate) fn ballot_strings(prof: &WeightedProfile) -> Vec<String> {
    prof.expand().voters().iter().map(|p| p.to_string()).collect()
}

pub(crate) fn check_m(m: usize) -> Result<()> {
    if m == 0 || m > 8 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive analysis supports 1 to 8 candidates, got {m}"
        )));
    }
    Ok(())
}

pub(crate) fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one voter".into()));
    }
    Ok(())
}

pub(crate) fn require_budget(budget: &Budget, needed: u128) -> Result<()> {
    budget.check(needed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn grid_for_three_candidates() {
        let truth: PreferenceOrdering = "2>0>1".parse().unwrap();
        let half = utility_grid(&truth, &ratio(1, 2), &ratio(1, 2)).unwrap();
        assert_eq!(half.len(), 1);
        assert_eq!(half[0].values(), &[ratio(1, 2), int(0), int(1)]);
        let quarter = utility_grid(&truth, &ratio(1, 4), &ratio(1, 4)).unwrap();
        assert_eq!(quarter.len(), 10);
        assert!(quarter
            .iter()
            .all(|u| u.is_consistent(&truth) && u.is_alpha_coarse(&ratio(1, 4))));
        let fine = utility_grid(&truth, &ratio(1, 2), &ratio(1, 4)).unwrap();
        // Values (1, 1/2, 0) only: any three quarter-levels with gaps >= 1/2.
        assert_eq!(fine.len(), 1);
    }

    #[test]
    fn grid_vacuous_when_too_coarse() {
        let truth = PreferenceOrdering::identity(4);
        assert!(utility_grid(&truth, &ratio(1, 2), &ratio(1, 2)).unwrap().is_empty());
        assert!(utility_grid(&truth, &ratio(1, 2), &ratio(2, 3)).is_err());
    }

    #[test]
    fn anonymous_profile_enumeration() {
        assert_eq!(anonymous_profile_count(3, 2), 21);
        let all: Vec<_> = anonymous_profiles(3, 2).collect();
        assert_eq!(all.len(), 21);
        assert!(all.iter().all(|p| p.n() == 2));
    }

    #[test]
    fn verdict_thresholds() {
        assert_eq!(Verdict::from_estimate(0.01, 0.005, 0.02), Verdict::Pass);
        assert_eq!(Verdict::from_estimate(0.018, 0.005, 0.02), Verdict::Inconclusive);
        assert_eq!(Verdict::from_estimate(0.03, 0.005, 0.02), Verdict::Fail);
    }
}
