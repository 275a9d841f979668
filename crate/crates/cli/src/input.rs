//! Reading and parsing command-line inputs.

use std::path::Path;

use serde::Deserialize;
use serde_json::error::Category;

use coarsevote::beliefs::{Belief, BeliefJson};
use coarsevote::rational::{self, Rational};
use coarsevote::rules::{self, PresetParams, PRESET_NAMES};
use coarsevote::{CandidateSet, Error, PreferenceOrdering, Profile, UtilityFunction, VotingRuleSpec};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSpec(_) => 3,
            Error::BudgetExceeded { .. } => 5,
            _ => 2,
        };
        CliError::new(code, e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(2, format!("cannot read {}: {e}", path.display())))
}

#[derive(Deserialize)]
struct BallotFile {
    m: usize,
    ballots: Vec<String>,
}

/// Ballot file `{"m": 3, "ballots": ["2>0>1", ..]}`; every ballot must rank
/// all of `0..m`.
pub fn ballots(path: &Path) -> Result<Profile, CliError> {
    let raw: BallotFile =
        serde_json::from_str(&read(path)?).map_err(|e| CliError::new(2, format!("{}: {e}", path.display())))?;
    let full = CandidateSet::full(raw.m);
    let voters = raw
        .ballots
        .iter()
        .map(|b| {
            let p: PreferenceOrdering = b.parse()?;
            if p.candidates() != full {
                return Err(CliError::new(
                    2,
                    format!("ballot `{b}` does not rank exactly the candidates 0..{}", raw.m),
                ));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Profile::new(voters)?)
}

/// Preset name, or a JSON spec file. Malformed JSON is a parse error; JSON
/// that is not a valid rule is an invalid spec.
pub fn rule(name: &str, m: usize, params: &PresetParams) -> Result<VotingRuleSpec, CliError> {
    if PRESET_NAMES.contains(&name) {
        return Ok(rules::preset(name, m, params)?);
    }
    let path = Path::new(name);
    if !path.exists() {
        return Err(CliError::new(
            2,
            format!(
                "`{name}` is neither a preset ({}) nor a readable file",
                PRESET_NAMES.join(", ")
            ),
        ));
    }
    let spec: VotingRuleSpec = serde_json::from_str(&read(path)?).map_err(|e| {
        let code = if e.classify() == Category::Data { 3 } else { 2 };
        CliError::new(code, format!("{name}: {e}"))
    })?;
    spec.validate(m)?;
    Ok(spec)
}

pub fn parse_rational(s: &str, flag: &str) -> Result<Rational, CliError> {
    rational::parse(s).map_err(|_| CliError::new(2, format!("{flag}: `{s}` is not a number")))
}

pub fn parse_ordering(s: &str) -> Result<PreferenceOrdering, CliError> {
    Ok(s.parse()?)
}

pub fn parse_utility(s: &str) -> Result<UtilityFunction, CliError> {
    let values = s
        .split(',')
        .map(|v| parse_rational(v.trim(), "--utility"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(UtilityFunction::new(values)?)
}

/// Belief from a JSON file or an inline `ordering=mass,..` list.
pub fn belief(file: Option<&Path>, inline: Option<&str>) -> Result<Belief, CliError> {
    match (file, inline) {
        (Some(path), _) => {
            let raw: BeliefJson =
                serde_json::from_str(&read(path)?).map_err(|e| CliError::new(2, format!("{}: {e}", path.display())))?;
            Ok(Belief::try_from(raw)?)
        }
        (None, Some(text)) => {
            let pairs = text
                .split(',')
                .map(|item| {
                    let (p, q) = item
                        .split_once('=')
                        .ok_or_else(|| CliError::new(2, format!("belief entry `{item}` needs `ordering=mass`")))?;
                    Ok((parse_ordering(p.trim())?, parse_rational(q.trim(), "--belief-inline")?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let m = pairs
                .first()
                .map(|(p, _)| p.len())
                .ok_or_else(|| CliError::new(2, "empty belief"))?;
            Ok(Belief::from_pairs(m, &pairs)?)
        }
        (None, None) => Err(CliError::new(2, "a belief is required (--belief or --belief-inline)")),
    }
}

/// Voter counts `N`, `A:B` or `A:B:STEP`, inclusive.
pub struct NRange {
    start: u64,
    end: u64,
    step: u64,
}

impl NRange {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::new(2, format!("--n: `{s}` is not N, A:B or A:B:STEP"));
        let parts: Vec<u64> = s
            .split(':')
            .map(|p| p.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let (start, end, step) = match parts.as_slice() {
            [n] => (*n, *n, 1),
            [a, b] => (*a, *b, 1),
            [a, b, c] => (*a, *b, *c),
            _ => return Err(bad()),
        };
        if start == 0 || start > end || step == 0 {
            return Err(bad());
        }
        Ok(NRange { start, end, step })
    }

    pub fn values(&self) -> impl Iterator<Item = u64> {
        (self.start..=self.end).step_by(self.step as usize)
    }
}
