//! Candidates, preference orderings, profiles, utilities and distributions.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Largest number of candidates a [`CandidateSet`] can hold.
pub const MAX_CANDIDATES: usize = 16;

/// A candidate, identified by its index in `0..m`. Index order doubles as the
/// tie-breaking order: lower index wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Candidate(pub usize);

impl Candidate {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of candidates stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CandidateSet(u32);

impl CandidateSet {
    pub fn empty() -> Self {
        CandidateSet(0)
    }

    /// `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_CANDIDATES, "at most {MAX_CANDIDATES} candidates");
        CandidateSet(if m == 0 { 0 } else { (1u32 << m) - 1 })
    }

    pub fn from_candidates(cs: impl IntoIterator<Item = Candidate>) -> Self {
        cs.into_iter().fold(Self::empty(), |s, c| s.with(c))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn with(self, c: Candidate) -> Self {
        assert!(c.0 < MAX_CANDIDATES, "candidate index {} too large", c.0);
        CandidateSet(self.0 | (1 << c.0))
    }

    pub fn without(self, c: Candidate) -> Self {
        CandidateSet(self.0 & !(1 << c.0))
    }

    pub fn contains(self, c: Candidate) -> bool {
        c.0 < MAX_CANDIDATES && self.0 & (1 << c.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: CandidateSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing index order.
    pub fn iter(self) -> impl Iterator<Item = Candidate> {
        (0..MAX_CANDIDATES)
            .filter(move |&i| self.0 & (1 << i) != 0)
            .map(Candidate)
    }

    /// One past the largest member index, i.e. the `m` a distribution over
    /// this set needs.
    pub fn span(self) -> usize {
        (32 - self.0.leading_zeros()) as usize
    }
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// A strict total order over a candidate set, highest-ranked first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PreferenceOrdering {
    ranking: Vec<Candidate>,
}

impl PreferenceOrdering {
    pub fn new(ranking: Vec<Candidate>) -> Result<Self> {
        if ranking.is_empty() {
            return Err(Error::EmptyOrdering);
        }
        let mut seen = CandidateSet::empty();
        for &c in &ranking {
            if c.0 >= MAX_CANDIDATES || seen.contains(c) {
                return Err(Error::InvalidOrdering(display_ranking(&ranking)));
            }
            seen = seen.with(c);
        }
        Ok(PreferenceOrdering { ranking })
    }

    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| Candidate(i)).collect())
    }

    pub(crate) fn from_ranking_unchecked(ranking: Vec<Candidate>) -> Self {
        debug_assert!(Self::new(ranking.clone()).is_ok());
        PreferenceOrdering { ranking }
    }

    /// Index order `0 > 1 > .. > m-1`.
    pub fn identity(m: usize) -> Self {
        PreferenceOrdering {
            ranking: (0..m).map(Candidate).collect(),
        }
    }

    pub fn ranking(&self) -> &[Candidate] {
        &self.ranking
    }

    pub fn len(&self) -> usize {
        self.ranking.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranking.is_empty()
    }

    pub fn candidates(&self) -> CandidateSet {
        CandidateSet::from_candidates(self.ranking.iter().copied())
    }

    pub fn top(&self) -> Candidate {
        self.ranking[0]
    }

    /// Zero-based position of `c`, if ranked.
    pub fn position(&self, c: Candidate) -> Option<usize> {
        self.ranking.iter().position(|&x| x == c)
    }

    pub fn prefers(&self, x: Candidate, y: Candidate) -> bool {
        match (self.position(x), self.position(y)) {
            (Some(px), Some(py)) => px < py,
            _ => false,
        }
    }

    /// Highest-ranked member of `set`.
    pub fn top_within(&self, set: CandidateSet) -> Option<Candidate> {
        self.ranking.iter().copied().find(|&c| set.contains(c))
    }

    pub fn restrict(&self, set: CandidateSet) -> Result<PreferenceOrdering> {
        if set.is_empty() {
            return Err(Error::EmptyRestriction);
        }
        let own = self.candidates();
        if !set.is_subset(own) {
            return Err(Error::NotASubset {
                restrict: set.to_string(),
                of: own.to_string(),
            });
        }
        Ok(PreferenceOrdering {
            ranking: self.ranking.iter().copied().filter(|&c| set.contains(c)).collect(),
        })
    }

    /// The ordering with the candidate at `pos + 1` moved above the one at
    /// `pos`.
    pub fn swap_adjacent(&self, pos: usize) -> PreferenceOrdering {
        let mut ranking = self.ranking.clone();
        ranking.swap(pos, pos + 1);
        PreferenceOrdering { ranking }
    }

    /// Number of candidate pairs the two orderings rank differently.
    pub fn inversions(&self, other: &PreferenceOrdering) -> usize {
        let mut count = 0;
        for (i, &x) in self.ranking.iter().enumerate() {
            for &y in &self.ranking[i + 1..] {
                if other.prefers(y, x) {
                    count += 1;
                }
            }
        }
        count
    }
}

fn display_ranking(ranking: &[Candidate]) -> String {
    let parts: Vec<String> = ranking.iter().map(|c| c.to_string()).collect();
    parts.join(">")
}

impl fmt::Display for PreferenceOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&display_ranking(&self.ranking))
    }
}

impl FromStr for PreferenceOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::EmptyOrdering);
        }
        let ranking = t
            .split('>')
            .map(|p| p.trim().parse::<usize>().map(Candidate))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| Error::InvalidOrdering(s.to_string()))?;
        PreferenceOrdering::new(ranking)
    }
}

impl Serialize for PreferenceOrdering {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PreferenceOrdering {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub fn top(p: &PreferenceOrdering) -> Candidate {
    p.top()
}

pub fn restrict_ordering(p: &PreferenceOrdering, set: CandidateSet) -> Result<PreferenceOrdering> {
    p.restrict(set)
}

/// The submitted orderings of `n >= 1` voters over one candidate set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Profile {
    voters: Vec<PreferenceOrdering>,
}

impl Profile {
    pub fn new(voters: Vec<PreferenceOrdering>) -> Result<Self> {
        let first = voters.first().ok_or(Error::EmptyProfile)?.candidates();
        if voters.iter().any(|p| p.candidates() != first) {
            return Err(Error::CandidateSetMismatch);
        }
        Ok(Profile { voters })
    }

    pub fn parse(ballots: &[&str]) -> Result<Self> {
        let voters = ballots.iter().map(|b| b.parse()).collect::<Result<Vec<_>>>()?;
        Profile::new(voters)
    }

    pub fn voters(&self) -> &[PreferenceOrdering] {
        &self.voters
    }

    pub fn n(&self) -> usize {
        self.voters.len()
    }

    pub fn candidates(&self) -> CandidateSet {
        self.voters[0].candidates()
    }

    pub fn restrict(&self, set: CandidateSet) -> Result<Profile> {
        let voters = self
            .voters
            .iter()
            .map(|p| p.restrict(set))
            .collect::<Result<Vec<_>>>()?;
        Ok(Profile { voters })
    }

    /// Per-candidate first-choice counts, indexed by candidate.
    pub fn top_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.candidates().span()];
        for p in &self.voters {
            counts[p.top().0] += 1;
        }
        counts
    }

    pub fn replace_voter(&self, i: usize, p: PreferenceOrdering) -> Profile {
        let mut voters = self.voters.clone();
        voters[i] = p;
        Profile { voters }
    }

    /// Groups identical ballots; groups keep first-appearance order.
    pub fn weighted(&self) -> WeightedProfile {
        let mut ballots: Vec<(PreferenceOrdering, u64)> = Vec::new();
        for p in &self.voters {
            match ballots.iter_mut().find(|(q, _)| q == p) {
                Some((_, c)) => *c += 1,
                None => ballots.push((p.clone(), 1)),
            }
        }
        WeightedProfile {
            candidates: self.candidates(),
            ballots,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.voters.iter().map(|p| p.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub fn restrict_profile(prof: &Profile, set: CandidateSet) -> Result<Profile> {
    prof.restrict(set)
}

pub fn top_counts(prof: &Profile) -> Vec<u64> {
    prof.top_counts()
}

/// A profile stored as ballot multiplicities. Every rule in this crate is
/// anonymous, so this is the form they evaluate on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedProfile {
    candidates: CandidateSet,
    ballots: Vec<(PreferenceOrdering, u64)>,
}

impl WeightedProfile {
    /// Zero-weight entries are dropped. At least one ballot must remain.
    pub fn new(ballots: Vec<(PreferenceOrdering, u64)>) -> Result<Self> {
        let ballots: Vec<_> = ballots.into_iter().filter(|(_, c)| *c > 0).collect();
        let candidates = ballots.first().ok_or(Error::EmptyProfile)?.0.candidates();
        if ballots.iter().any(|(p, _)| p.candidates() != candidates) {
            return Err(Error::CandidateSetMismatch);
        }
        Ok(WeightedProfile { candidates, ballots })
    }

    pub(crate) fn from_parts_unchecked(candidates: CandidateSet, ballots: Vec<(PreferenceOrdering, u64)>) -> Self {
        WeightedProfile { candidates, ballots }
    }

    pub fn ballots(&self) -> &[(PreferenceOrdering, u64)] {
        &self.ballots
    }

    pub fn candidates(&self) -> CandidateSet {
        self.candidates
    }

    /// Number of voters.
    pub fn n(&self) -> u64 {
        self.ballots.iter().map(|(_, c)| c).sum()
    }

    /// First-choice counts among `set`, indexed by candidate (entries for
    /// candidates outside `set` stay zero).
    pub fn top_counts_within(&self, set: CandidateSet) -> Vec<u64> {
        let mut counts = vec![0u64; self.candidates.span()];
        for (p, c) in &self.ballots {
            if let Some(t) = p.top_within(set) {
                counts[t.0] += c;
            }
        }
        counts
    }

    pub fn expand(&self) -> Profile {
        let voters = self
            .ballots
            .iter()
            .flat_map(|(p, c)| std::iter::repeat_n(p.clone(), *c as usize))
            .collect();
        Profile { voters }
    }
}

/// `u: C -> [0, 1]`, indexed by candidate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UtilityFunction {
    #[serde(with = "rational::serde_str_vec")]
    values: Vec<Rational>,
}

impl UtilityFunction {
    pub fn new(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidUtility("no candidates".into()));
        }
        if let Some(v) = values.iter().find(|v| **v < Rational::zero() || **v > Rational::one()) {
            return Err(Error::InvalidUtility(format!(
                "value {} outside [0,1]",
                rational::format(v)
            )));
        }
        Ok(UtilityFunction { values })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, c: Candidate) -> &Rational {
        &self.values[c.0]
    }

    /// Expected utility of a lottery over candidates.
    pub fn expected(&self, dist: &CandidateDistribution) -> Rational {
        self.values
            .iter()
            .zip(dist.masses())
            .filter(|(_, p)| !p.is_zero())
            .fold(Rational::zero(), |acc, (u, p)| acc + u * p)
    }

    pub fn expected_f64(&self, dist: &CandidateDistribution) -> f64 {
        self.values
            .iter()
            .zip(dist.masses())
            .filter(|(_, p)| !p.is_zero())
            .map(|(u, p)| rational::to_f64(u) * rational::to_f64(p))
            .sum()
    }

    /// Strict order of the values equals `p` exactly.
    pub fn is_consistent(&self, p: &PreferenceOrdering) -> bool {
        if p.len() != self.values.len() || p.candidates() != CandidateSet::full(self.values.len()) {
            return false;
        }
        p.ranking()
            .windows(2)
            .all(|w| self.values[w[0].0] > self.values[w[1].0])
    }

    pub fn is_alpha_coarse(&self, alpha: &Rational) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, a)| self.values[i + 1..].iter().all(|b| a == b || abs_diff(a, b) >= *alpha))
    }

    /// Smallest nonzero gap between two values, if any two differ.
    pub fn min_gap(&self) -> Option<Rational> {
        let mut best: Option<Rational> = None;
        for (i, a) in self.values.iter().enumerate() {
            for b in &self.values[i + 1..] {
                if a != b {
                    let g = abs_diff(a, b);
                    if best.as_ref().is_none_or(|cur| g < *cur) {
                        best = Some(g);
                    }
                }
            }
        }
        best
    }
}

fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    if a > b {
        a - b
    } else {
        b - a
    }
}

pub fn is_consistent(u: &UtilityFunction, p: &PreferenceOrdering) -> bool {
    u.is_consistent(p)
}

pub fn is_alpha_coarse_utility(u: &UtilityFunction, alpha: &Rational) -> bool {
    u.is_alpha_coarse(alpha)
}

/// Exact lottery over candidates `0..m`. Masses are in `[0, 1]` and sum to 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CandidateDistribution {
    mass: Vec<Rational>,
}

impl CandidateDistribution {
    pub fn new(mass: Vec<Rational>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("no candidates".into()));
        }
        if mass.iter().any(|p| *p < Rational::zero() || *p > Rational::one()) {
            return Err(Error::InvalidDistribution("mass outside [0,1]".into()));
        }
        let total: Rational = mass.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {}",
                rational::format(&total)
            )));
        }
        Ok(CandidateDistribution { mass })
    }

    pub(crate) fn from_masses_unchecked(mass: Vec<Rational>) -> Self {
        debug_assert!(mass.iter().sum::<Rational>().is_one());
        CandidateDistribution { mass }
    }

    pub fn point(m: usize, c: Candidate) -> Self {
        let mut mass = vec![Rational::zero(); m];
        mass[c.0] = Rational::one();
        CandidateDistribution { mass }
    }

    pub fn uniform(m: usize) -> Self {
        let share = rational::ratio(1, m as i64);
        CandidateDistribution { mass: vec![share; m] }
    }

    pub fn masses(&self) -> &[Rational] {
        &self.mass
    }

    pub fn m(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self, c: Candidate) -> &Rational {
        &self.mass[c.0]
    }

    /// `(1 - q) * self + q * other`.
    pub fn mix(&self, other: &CandidateDistribution, q: &Rational) -> CandidateDistribution {
        let keep = Rational::one() - q;
        let mass = self
            .mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| &keep * a + q * b)
            .collect();
        CandidateDistribution { mass }
    }

    /// The candidate with mass 1, if the lottery is deterministic.
    pub fn winner(&self) -> Option<Candidate> {
        self.mass.iter().position(|p| p.is_one()).map(Candidate)
    }
}

impl Serialize for CandidateDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.mass.len()))?;
        for (i, p) in self.mass.iter().enumerate() {
            map.serialize_entry(&i.to_string(), &rational::format(p))?;
        }
        map.end()
    }
}
