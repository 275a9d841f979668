//! Stage one of the framework: prune the candidates to a survivor set.

use serde::{Deserialize, Serialize};

use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::profile::{Candidate, CandidateSet, Profile, WeightedProfile};
use crate::rational::{self, Rational};

/// `n^(1/2 + delta)`, the closeness margin for `n` voters.
pub fn margin(n: u64, delta: &Rational) -> f64 {
    (n as f64).powf(0.5 + rational::to_f64(delta))
}

/// How far below the leader (or above the trailer) a count may sit and still
/// count as "within" the margin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MarginPolicy {
    /// Threshold `n^(1/2 + delta)` with `0 < delta < 1/2`.
    Asymptotic {
        #[serde(with = "rational::serde_str")]
        delta: Rational,
    },
    /// Fixed threshold `t >= 0`, independent of `n`.
    Explicit {
        #[serde(with = "rational::serde_str")]
        t: Rational,
    },
    /// Nothing is ever outside the margin.
    Unbounded,
}

impl MarginPolicy {
    pub fn asymptotic(delta: Rational) -> Self {
        MarginPolicy::Asymptotic { delta }
    }

    pub fn explicit(t: Rational) -> Self {
        MarginPolicy::Explicit { t }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MarginPolicy::Asymptotic { delta } => {
                if *delta <= Rational::zero() || *delta >= rational::ratio(1, 2) {
                    return Err(Error::InvalidSpec(format!(
                        "delta {} outside (0, 1/2)",
                        rational::format(delta)
                    )));
                }
            }
            MarginPolicy::Explicit { t } => {
                if *t < Rational::zero() {
                    return Err(Error::InvalidSpec("negative explicit margin".into()));
                }
            }
            MarginPolicy::Unbounded => {}
        }
        Ok(())
    }

    /// Resolves the threshold for `n` voters. Counts and scores are integers,
    /// so `gap <= t` is the same test as `gap <= floor(t)`; the real threshold
    /// is compared without rounding it to the nearest integer first.
    pub fn limit(&self, n: u64) -> GapLimit {
        match self {
            MarginPolicy::Asymptotic { delta } => GapLimit::from_real(margin(n, delta)),
            MarginPolicy::Explicit { t } => GapLimit(Some(t.floor().to_integer().to_u64().unwrap_or(u64::MAX))),
            MarginPolicy::Unbounded => GapLimit(None),
        }
    }
}

/// Largest integer gap that is still "within" the margin; `None` admits all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GapLimit(pub Option<u64>);

impl GapLimit {
    pub fn from_real(t: f64) -> Self {
        if t.is_infinite() || t >= u64::MAX as f64 {
            GapLimit(None)
        } else {
            GapLimit(Some(t.max(0.0).floor() as u64))
        }
    }

    pub fn admits(self, gap: u64) -> bool {
        self.0.is_none_or(|t| gap <= t)
    }
}

fn max_over(counts: &[u64], set: CandidateSet) -> u64 {
    set.iter().map(|c| counts[c.0]).max().unwrap_or(0)
}

fn min_over(counts: &[u64], set: CandidateSet) -> u64 {
    set.iter().map(|c| counts[c.0]).min().unwrap_or(0)
}

/// Repeated plurality elimination, returning the survivors and the number of
/// rounds that removed at least one candidate.
pub fn repeated_plurality_rounds(prof: &WeightedProfile, limit: GapLimit) -> (CandidateSet, usize) {
    let mut alive = prof.candidates();
    let mut rounds = 0;
    loop {
        let counts = prof.top_counts_within(alive);
        let best = max_over(&counts, alive);
        let keep = CandidateSet::from_candidates(alive.iter().filter(|c| limit.admits(best - counts[c.0])));
        if keep == alive {
            return (alive, rounds);
        }
        alive = keep;
        rounds += 1;
    }
}

pub fn eliminate_repeated_plurality(prof: &Profile, limit: GapLimit) -> CandidateSet {
    repeated_plurality_rounds(&prof.weighted(), limit).0
}

/// Approximate instant runoff: drop everyone within the margin of the lowest
/// count, unless that would drop everyone.
pub fn approx_irv_rounds(prof: &WeightedProfile, limit: GapLimit) -> (CandidateSet, usize) {
    let mut alive = prof.candidates();
    let mut rounds = 0;
    loop {
        let counts = prof.top_counts_within(alive);
        let low = min_over(&counts, alive);
        let marked = CandidateSet::from_candidates(alive.iter().filter(|c| limit.admits(counts[c.0] - low)));
        if marked == alive {
            return (alive, rounds);
        }
        alive = CandidateSet::from_candidates(alive.iter().filter(|c| !marked.contains(*c)));
        rounds += 1;
    }
}

pub fn eliminate_approx_irv(prof: &Profile, limit: GapLimit) -> CandidateSet {
    approx_irv_rounds(&prof.weighted(), limit).0
}

/// Positional scores, indexed by candidate.
pub fn scores(prof: &WeightedProfile, points: &[u64]) -> Result<Vec<u64>> {
    let m = prof.candidates().len();
    if points.len() != m {
        return Err(Error::InvalidSpec(format!(
            "points vector has length {}, expected {m}",
            points.len()
        )));
    }
    let mut out = vec![0u64; prof.candidates().span()];
    for (p, c) in prof.ballots() {
        for (pos, x) in p.ranking().iter().enumerate() {
            out[x.0] += c * points[pos];
        }
    }
    Ok(out)
}

/// Single pass: keep every candidate whose score is within the margin of the
/// top score.
pub fn score_margin_survivors(prof: &WeightedProfile, points: &[u64], limit: GapLimit) -> Result<CandidateSet> {
    let s = scores(prof, points)?;
    let alive = prof.candidates();
    let best = max_over(&s, alive);
    Ok(CandidateSet::from_candidates(
        alive.iter().filter(|c| limit.admits(best - s[c.0])),
    ))
}

pub fn eliminate_by_score(prof: &Profile, points: &[u64], limit: GapLimit) -> Result<CandidateSet> {
    score_margin_survivors(&prof.weighted(), points, limit)
}

/// Lowest-index candidate among the maxima of `values` over `set`.
pub(crate) fn argmax_lowest(values: &[u64], set: CandidateSet) -> Candidate {
    let mut best: Option<Candidate> = None;
    for c in set.iter() {
        if best.is_none_or(|b| values[c.0] > values[b.0]) {
            best = Some(c);
        }
    }
    best.expect("non-empty candidate set")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn set(cs: &[usize]) -> CandidateSet {
        CandidateSet::from_candidates(cs.iter().map(|&i| Candidate(i)))
    }

    fn explicit(t: i64) -> GapLimit {
        MarginPolicy::explicit(int(t)).limit(0)
    }

    /// 5 x (0>1>2), 3 x (1>2>0), 1 x (2>1>0): counts 5, 3, 1.
    fn traced() -> Profile {
        let mut ballots = vec!["0>1>2"; 5];
        ballots.extend(["1>2>0"; 3]);
        ballots.push("2>1>0");
        Profile::parse(&ballots).unwrap()
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin(1, &ratio(1, 10)), 1.0);
        assert!((margin(10_000, &ratio(1, 10)) - 10_000f64.powf(0.6)).abs() < 1e-9);
        assert!((margin(10_000, &ratio(1, 10)) - 251.188_643_150_958).abs() < 1e-9);
        let near_half = ratio(499_999, 1_000_000);
        assert!((margin(100, &near_half) - 100.0).abs() < 0.01);
    }

    #[test]
    fn real_threshold_is_not_rounded_up() {
        // 101^0.6 = 15.95...: a gap of 16 is outside, 15 inside.
        let lim = MarginPolicy::asymptotic(ratio(1, 10)).limit(101);
        assert!(lim.admits(15));
        assert!(!lim.admits(16));
    }

    #[test]
    fn repeated_plurality_trace() {
        // Round 1 drops 2 (gap 4); recount 0:5, 1:4; gap 1 <= 3 keeps both.
        let prof = traced();
        let (alive, rounds) = repeated_plurality_rounds(&prof.weighted(), explicit(3));
        assert_eq!(alive, set(&[0, 1]));
        assert_eq!(rounds, 1);
    }

    #[test]
    fn repeated_plurality_edge_cases() {
        let prof = Profile::parse(&["1>0>2"; 4]).unwrap();
        assert_eq!(eliminate_repeated_plurality(&prof, explicit(3)), set(&[1]));
        let prof = traced();
        assert_eq!(eliminate_repeated_plurality(&prof, explicit(9)), set(&[0, 1, 2]));
        assert_eq!(eliminate_repeated_plurality(&prof, GapLimit(None)), set(&[0, 1, 2]));
    }

    #[test]
    fn approx_irv_trace() {
        // Marked: 2 (0 <= 3), 1 (2 <= 3); 0 has 4 > 3 and survives alone.
        assert_eq!(eliminate_approx_irv(&traced(), explicit(3)), set(&[0]));
    }

    #[test]
    fn approx_irv_all_marked_guard() {
        let prof = Profile::parse(&["0>1", "1>0"]).unwrap();
        for t in 0..4 {
            assert_eq!(eliminate_approx_irv(&prof, explicit(t)), set(&[0, 1]));
        }
        let mut ballots = vec!["0>1>2"; 4];
        ballots.extend(["1>0>2"; 3]);
        ballots.extend(["2>1>0"; 3]);
        let prof = Profile::parse(&ballots).unwrap();
        assert_eq!(eliminate_approx_irv(&prof, explicit(0)), set(&[0]));
    }

    #[test]
    fn score_examples() {
        let prof = Profile::parse(&["0>1>2", "0>2>1"]).unwrap();
        assert_eq!(scores(&prof.weighted(), &[3, 2, 1]).unwrap(), vec![6, 3, 3]);
        assert_eq!(eliminate_by_score(&prof, &[3, 2, 1], explicit(0)).unwrap(), set(&[0]));
        assert_eq!(
            eliminate_by_score(&prof, &[3, 2, 1], explicit(6)).unwrap(),
            set(&[0, 1, 2])
        );
        let prof = Profile::parse(&["0>1", "1>0"]).unwrap();
        assert_eq!(eliminate_by_score(&prof, &[1, 0], explicit(0)).unwrap(), set(&[0, 1]));
        assert!(eliminate_by_score(&prof, &[1, 0, 0], explicit(0)).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(MarginPolicy::asymptotic(ratio(1, 2)).validate().is_err());
        assert!(MarginPolicy::asymptotic(int(0)).validate().is_err());
        assert!(MarginPolicy::asymptotic(ratio(1, 10)).validate().is_ok());
        assert!(MarginPolicy::explicit(int(-1)).validate().is_err());
    }
}
