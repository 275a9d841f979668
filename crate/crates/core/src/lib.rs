//! Exact evaluation of voting rules under coarse beliefs.
//!
//! Candidates are indices `0..m`, orderings are rankings of those indices,
//! and every probability is an exact rational. Ties always break to the
//! lowest index.

pub mod analysis;
pub mod beliefs;
pub mod error;
pub mod profile;
pub mod rational;
pub mod rules;
pub mod space;

pub use beliefs::{Belief, CoarsenessCertificate};
pub use error::{Error, Result};
pub use profile::{
    Candidate, CandidateDistribution, CandidateSet, PreferenceOrdering, Profile, UtilityFunction, WeightedProfile,
};
pub use rational::Rational;
pub use rules::{EliminationRuleSpec, MarginPolicy, MixWeight, SelectionRuleSpec, VotingRuleSpec};

/// Environment variable overriding the default enumeration cap.
pub const BUDGET_ENV: &str = "COARSEVOTE_BUDGET";

/// Cap on the number of terms an exact enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { cap: 10_000_000 }
    }
}

impl Budget {
    pub fn new(cap: u64) -> Self {
        Budget { cap }
    }

    /// Default cap, or the value of `COARSEVOTE_BUDGET` when it parses.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(Budget::new)
            .unwrap_or_default()
    }

    pub fn check(&self, needed: u128) -> Result<()> {
        if needed > u128::from(self.cap) {
            Err(Error::BudgetExceeded { needed, cap: self.cap })
        } else {
            Ok(())
        }
    }
}
