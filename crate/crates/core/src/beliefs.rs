//! Coarse i.i.d. beliefs: a single distribution over orderings from which a
//! voter assumes every other ballot is drawn independently.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{CandidateSet, PreferenceOrdering, Profile, WeightedProfile};
use crate::rational::{self, Rational};
use crate::space::{all_orderings, composition_count, ordering_count, ordering_index, Compositions};
use crate::Budget;

/// Exact distribution over `L(A)` for a candidate set `A`, stored in the
/// lexicographic layout of [`all_orderings`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Belief {
    candidates: CandidateSet,
    mass: Vec<Rational>,
}

impl Belief {
    pub fn new(candidates: CandidateSet, mass: Vec<Rational>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::EmptyRestriction);
        }
        let k = ordering_count(candidates);
        if mass.len() != k {
            return Err(Error::InvalidDistribution(format!(
                "expected {k} masses, got {}",
                mass.len()
            )));
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
        Ok(Belief { candidates, mass })
    }

    /// Belief over all orderings of `0..m` from `(ordering, mass)` pairs;
    /// unlisted orderings get zero.
    pub fn from_pairs(m: usize, pairs: &[(PreferenceOrdering, Rational)]) -> Result<Self> {
        let candidates = CandidateSet::full(m);
        let mut mass = vec![Rational::zero(); ordering_count(candidates)];
        for (p, q) in pairs {
            if p.candidates() != candidates {
                return Err(Error::CandidateSetMismatch);
            }
            mass[ordering_index(p)] += q;
        }
        Belief::new(candidates, mass)
    }

    pub fn point(p: &PreferenceOrdering) -> Self {
        let candidates = p.candidates();
        let mut mass = vec![Rational::zero(); ordering_count(candidates)];
        mass[ordering_index(p)] = Rational::one();
        Belief { candidates, mass }
    }

    pub fn uniform(m: usize) -> Self {
        let candidates = CandidateSet::full(m);
        let k = ordering_count(candidates);
        Belief {
            candidates,
            mass: vec![rational::ratio(1, k as i64); k],
        }
    }

    pub fn candidates(&self) -> CandidateSet {
        self.candidates
    }

    pub fn masses(&self) -> &[Rational] {
        &self.mass
    }

    pub fn orderings(&self) -> Vec<PreferenceOrdering> {
        all_orderings(self.candidates)
    }

    pub fn mass_of(&self, p: &PreferenceOrdering) -> Rational {
        if p.candidates() != self.candidates {
            return Rational::zero();
        }
        self.mass[ordering_index(p)].clone()
    }

    /// Orderings with nonzero mass, in layout order.
    pub fn support(&self) -> Vec<(PreferenceOrdering, Rational)> {
        all_orderings(self.candidates)
            .into_iter()
            .zip(&self.mass)
            .filter(|(_, q)| !q.is_zero())
            .map(|(p, q)| (p, q.clone()))
            .collect()
    }

    pub fn coarseness(&self) -> CoarsenessCertificate {
        coarseness(self)
    }

    /// Probability that a ballot drawn from this belief has `c` on top among
    /// `within`.
    pub fn top_probability(&self, c: crate::profile::Candidate, within: CandidateSet) -> Rational {
        all_orderings(self.candidates)
            .iter()
            .zip(&self.mass)
            .filter(|(p, _)| p.top_within(within) == Some(c))
            .map(|(_, q)| q)
            .sum()
    }
}

/// Largest `beta` such that every mass is an integer multiple of it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoarsenessCertificate {
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
}

impl CoarsenessCertificate {
    /// The certified belief is alpha-coarse iff `beta >= alpha`.
    pub fn is_alpha_coarse(&self, alpha: &Rational) -> bool {
        self.beta >= *alpha
    }

    pub fn certifies(&self, phi: &Belief) -> bool {
        phi.masses().iter().all(|q| (q / &self.beta).is_integer())
    }
}

pub fn coarseness(phi: &Belief) -> CoarsenessCertificate {
    CoarsenessCertificate {
        beta: rational::gcd_all(phi.masses()),
    }
}

/// Distribution of `P|_A` for `P ~ phi`.
pub fn restrict_belief(phi: &Belief, set: CandidateSet) -> Result<Belief> {
    if set.is_empty() {
        return Err(Error::EmptyRestriction);
    }
    if !set.is_subset(phi.candidates) {
        return Err(Error::NotASubset {
            restrict: set.to_string(),
            of: phi.candidates.to_string(),
        });
    }
    let mut mass = vec![Rational::zero(); ordering_count(set)];
    for (p, q) in all_orderings(phi.candidates).iter().zip(&phi.mass) {
        if !q.is_zero() {
            mass[ordering_index(&p.restrict(set)?)] += q;
        }
    }
    Ok(Belief { candidates: set, mass })
}

fn observation_counts(observations: &[PreferenceOrdering], set: CandidateSet) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; ordering_count(set)];
    for p in observations {
        if p.candidates() != set {
            return Err(Error::CandidateSetMismatch);
        }
        counts[ordering_index(p)] += 1;
    }
    Ok(counts)
}

/// Relative frequencies; the result is `1/l`-coarse for `l` observations.
pub fn form_belief_empirical(observations: &[PreferenceOrdering]) -> Result<Belief> {
    let set = observations.first().ok_or(Error::EmptyObservations)?.candidates();
    let counts = observation_counts(observations, set)?;
    let total = observations.len() as i64;
    let mass = counts.iter().map(|&c| rational::ratio(c as i64, total)).collect();
    Belief::new(set, mass)
}

/// Mean of the `Dir(1 + c)` posterior after a uniform `Dir(1, .., 1)` prior:
/// `(1 + c_i) / (K + l)`, which is `1/(K+l)`-coarse.
pub fn form_belief_dirichlet(m: usize, observations: &[PreferenceOrdering]) -> Result<Belief> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let set = CandidateSet::full(m);
    let counts = observation_counts(observations, set)?;
    let denom = (counts.len() + observations.len()) as i64;
    let mass = counts.iter().map(|&c| rational::ratio(1 + c as i64, denom)).collect();
    Belief::new(set, mass)
}

/// Every belief over `L({0..m-1})` whose masses lie on a uniform grid
/// `{0, 1/d, .., 1}` for some `d <= floor(1/alpha)`, each exactly once.
///
/// A belief is emitted at the grid of its reduced common denominator, which
/// is why compositions whose parts share a factor are skipped.
pub fn enumerate_coarse_beliefs(alpha: &Rational, m: usize, budget: &Budget) -> Result<Vec<Belief>> {
    if *alpha <= Rational::zero() {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    let max_d = (alpha.recip()).floor().to_integer().to_u64().unwrap_or(u64::MAX);
    let set = CandidateSet::full(m);
    let k = ordering_count(set) as u64;
    let needed = (1..=max_d).fold(0u128, |acc, d| acc.saturating_add(composition_count(d, k)));
    budget.check(needed)?;

    let mut out = Vec::new();
    for d in 1..=max_d {
        for parts in Compositions::new(d, k as usize) {
            let g = parts.iter().fold(0u64, |g, &c| g.gcd(&c));
            if g != 1 {
                continue;
            }
            let mass = parts
                .iter()
                .map(|&c| Rational::new(BigInt::from(c), BigInt::from(d)))
                .collect();
            out.push(Belief { candidates: set, mass });
        }
    }
    Ok(out)
}

/// Seeded sampler of i.i.d. ballots. Draws for stream `s` under seed `x` are
/// a fixed function of `(x, s)`, independent of how streams are scheduled.
#[derive(Debug, Clone)]
pub struct BeliefSampler {
    support: Vec<PreferenceOrdering>,
    weights: WeightedIndex<u64>,
    candidates: CandidateSet,
}

impl BeliefSampler {
    pub fn new(phi: &Belief) -> Self {
        let support = phi.support();
        let scale = rational::lcm_of_denominators(support.iter().map(|(_, q)| q));
        let exact: Option<Vec<u64>> = support
            .iter()
            .map(|(_, q)| (q * Rational::from_integer(scale.clone())).to_integer().to_u64())
            .collect();
        let weights = match exact {
            Some(w) => WeightedIndex::new(w),
            // Denominators beyond u64: fall back to a 2^53 grid.
            None => WeightedIndex::new(
                support
                    .iter()
                    .map(|(_, q)| (rational::to_f64(q) * (1u64 << 53) as f64) as u64),
            ),
        }
        .expect("belief support has positive mass");
        BeliefSampler {
            support: support.into_iter().map(|(p, _)| p).collect(),
            weights,
            candidates: phi.candidates(),
        }
    }

    pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    pub fn support(&self) -> &[PreferenceOrdering] {
        &self.support
    }

    /// Counts per support ordering for `k` draws.
    pub fn sample_counts(&self, k: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
        let mut counts = vec![0u64; self.support.len()];
        for _ in 0..k {
            counts[self.weights.sample(rng)] += 1;
        }
        counts
    }

    pub fn sample_profile(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<PreferenceOrdering> {
        (0..k).map(|_| self.support[self.weights.sample(rng)].clone()).collect()
    }

    /// `k` draws plus an extra ballot, grouped for evaluation.
    pub fn sample_weighted(&self, k: u64, extra: Option<&PreferenceOrdering>, rng: &mut ChaCha8Rng) -> WeightedProfile {
        let counts = self.sample_counts(k, rng);
        let mut ballots: Vec<(PreferenceOrdering, u64)> = self
            .support
            .iter()
            .cloned()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .collect();
        if let Some(p) = extra {
            match ballots.iter_mut().find(|(q, _)| q == p) {
                Some((_, c)) => *c += 1,
                None => ballots.push((p.clone(), 1)),
            }
        }
        WeightedProfile::from_parts_unchecked(self.candidates, ballots)
    }
}

/// `k` i.i.d. draws from `phi`, deterministic in `seed`.
pub fn sample_profile(phi: &Belief, k: usize, seed: u64) -> Result<Profile> {
    if k == 0 {
        return Err(Error::EmptyProfile);
    }
    let sampler = BeliefSampler::new(phi);
    let mut rng = BeliefSampler::rng(seed, 0);
    Profile::new(sampler.sample_profile(k, &mut rng))
}

/// Wire form: `{"m": 3, "mass": {"0>1>2": "1/2", ..}}`, zero masses omitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefJson {
    pub m: usize,
    pub mass: BTreeMap<String, String>,
}

impl From<&Belief> for BeliefJson {
    fn from(phi: &Belief) -> Self {
        BeliefJson {
            m: phi.candidates.span(),
            mass: phi
                .support()
                .into_iter()
                .map(|(p, q)| (p.to_string(), rational::format(&q)))
                .collect(),
        }
    }
}

impl TryFrom<BeliefJson> for Belief {
    type Error = Error;

    fn try_from(raw: BeliefJson) -> Result<Belief> {
        let pairs = raw
            .mass
            .iter()
            .map(|(k, v)| Ok((k.parse::<PreferenceOrdering>()?, rational::parse(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Belief::from_pairs(raw.m, &pairs)
    }
}

impl Serialize for Belief {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BeliefJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Belief {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = BeliefJson::deserialize(d)?;
        Belief::try_from(raw).map_err(serde::de::Error::custom)
    }
}
