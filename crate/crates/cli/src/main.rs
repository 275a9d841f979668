//! `coarsevote` command-line front end.
//!
//! Exit codes: 0 pass (or success), 1 check failed, 2 unreadable input or
//! parse error, 3 invalid rule spec, 4 inconclusive, 5 enumeration budget
//! exceeded.

mod input;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use coarsevote::analysis::{self, GainMode, PropertyReport, Quantity, UnanimityKind, Verdict};
use coarsevote::beliefs::{form_belief_dirichlet, form_belief_empirical, BeliefJson};
use coarsevote::rational::{self, Rational};
use coarsevote::rules::{self, EliminationRuleSpec, GapLimit, MarginPolicy};
use coarsevote::{Budget, VotingRuleSpec};

use input::{CliError, NRange};

#[derive(Parser)]
#[command(
    name = "coarsevote",
    version,
    about = "Exact voting rule evaluation and strategy-proofness checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a rule on a ballot file and print the exact lottery.
    Eval {
        #[command(flatten)]
        rule: RuleArgs,
        /// JSON file `{"m": 3, "ballots": ["2>0>1", ..]}`.
        #[arg(long)]
        ballots: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Form beliefs from observed ballots.
    Belief {
        #[command(subcommand)]
        command: BeliefCommand,
    },
    /// Run a property checker.
    Check {
        #[command(subcommand)]
        command: CheckCommand,
    },
    /// Table v'(x, j): probability of x when j voters rank it first.
    Vprime {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Largest probability difference between two rules over all profiles.
    Closeness {
        #[command(flatten)]
        rule: RuleArgs,
        /// The second rule (preset name or spec file).
        #[arg(long)]
        other: String,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One CSV row per voter count.
    Sweep {
        #[command(subcommand)]
        command: SweepCommand,
    },
}

#[derive(Subcommand)]
enum BeliefCommand {
    /// Build a belief over orderings from observed ballots.
    Form {
        #[arg(value_enum)]
        method: FormMethod,
        /// JSON file with the same shape as a ballot file.
        #[arg(long)]
        observations: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormMethod {
    Empirical,
    Dirichlet,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Strong,
    Weak,
    SuperWeak,
}

#[derive(Args)]
struct RuleArgs {
    /// Preset name (plurality, borda, vpl, virv, vscore, vdict, vpunish,
    /// vpl-prime, virv-prime, uniform-const) or a JSON spec file.
    #[arg(long)]
    rule: String,
    /// Number of candidates for presets and checks. Ballot files set it for
    /// `eval`.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Margin exponent for the presets: n^(1/2 + delta).
    #[arg(long, default_value = "1/10")]
    delta: String,
    /// Constant c in the mixing weight exp(-c n^(2 delta)).
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
}

#[derive(Args)]
struct OutArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Epsilon-strategy-proofness against every alpha-coarse belief.
    Sp {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "0")]
        eps: String,
        /// Utility grid step; defaults to alpha.
        #[arg(long)]
        step: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// No candidate that every voter ranks below another gets more than eps.
    Pareto {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// A unanimous first choice wins with probability at least 1 - eps.
    Unanimity {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value = "strong")]
        kind: Kind,
        #[arg(long, default_value = "0")]
        eps: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Raising a candidate on one ballot never lowers its probability.
    Responsive {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Swapping an adjacent pair on one ballot has an effect that depends only
    /// on that ballot and on how the others rank the pair.
    Isolated {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Winners' first-choice counts stay within the margin of the maximum.
    Optimality {
        #[command(flatten)]
        rule: RuleArgs,
        #[arg(long)]
        n: u64,
        /// Explicit margin; defaults to n^(1/2 + delta).
        #[arg(long)]
        t: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Truthfulness margin of the punishing rule.
    StrictPunish {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long)]
        alpha: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct BeliefArgs {
    /// Belief JSON file `{"m": 3, "mass": {"0>1>2": "1/2", ..}}`.
    #[arg(long, conflicts_with = "belief_inline")]
    belief: Option<PathBuf>,
    /// Inline belief, e.g. `0>1>2=1/2,1>0>2=1/2`.
    #[arg(long)]
    belief_inline: Option<String>,
}

#[derive(Args)]
struct SamplingArgs {
    /// Voter counts: `N`, `A:B` or `A:B:STEP`.
    #[arg(long)]
    n: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Best manipulation gain for a fixed belief, ordering and utility.
    Gain {
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        belief: BeliefArgs,
        /// True ordering, e.g. `2>1>0`.
        #[arg(long)]
        truth: String,
        /// Utility values by candidate index, e.g. `0,1/2,1`.
        #[arg(long)]
        utility: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Enumerate exactly instead of sampling.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Probability that one ballot changes the rule's survivor set.
    Pivotality {
        #[command(flatten)]
        rule: RuleArgs,
        #[command(flatten)]
        belief: BeliefArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// What a command produced: text to emit and the exit code it implies.
struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::new(2, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn resolve_rule(args: &RuleArgs, m: usize) -> Result<VotingRuleSpec, CliError> {
    let params = rules::PresetParams {
        delta: input::parse_rational(&args.delta, "--delta")?,
        decay: args.decay,
    };
    input::rule(&args.rule, m, &params)
}

fn report_output(report: &PropertyReport) -> Result<Output, CliError> {
    let code = match report.verdict {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Inconclusive => 4,
    };
    eprintln!(
        "{}: {}",
        report.property,
        match report.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    );
    Ok(Output {
        text: json(report)?,
        code,
    })
}

fn run_check(cmd: CheckCommand, budget: &Budget) -> Result<(Output, OutArgs), CliError> {
    Ok(match cmd {
        CheckCommand::Sp {
            rule,
            alpha,
            n,
            eps,
            step,
            out,
        } => {
            let spec = resolve_rule(&rule, rule.m)?;
            let alpha = input::parse_rational(&alpha, "--alpha")?;
            let eps = input::parse_rational(&eps, "--eps")?;
            let step = match step {
                Some(s) => input::parse_rational(&s, "--step")?,
                None => alpha.clone(),
            };
            let rep = analysis::check_eps_sp_coarse(&spec, &alpha, rule.m, n, &eps, &step, budget)?;
            (report_output(&rep)?, out)
        }
        CheckCommand::Pareto { rule, n, eps, out } => {
            let spec = resolve_rule(&rule, rule.m)?;
            let eps = input::parse_rational(&eps, "--eps")?;
            (
                report_output(&analysis::check_pareto(&spec, rule.m, n, &eps, budget)?)?,
                out,
            )
        }
        CheckCommand::Unanimity {
            rule,
            n,
            kind,
            eps,
            out,
        } => {
            let spec = resolve_rule(&rule, rule.m)?;
            let eps = input::parse_rational(&eps, "--eps")?;
            let kind = match kind {
                Kind::Strong => UnanimityKind::Strong,
                Kind::Weak => UnanimityKind::Weak,
                Kind::SuperWeak => UnanimityKind::SuperWeak,
            };
            (
                report_output(&analysis::check_unanimity(&spec, rule.m, n, &eps, kind, budget)?)?,
                out,
            )
        }
        CheckCommand::Responsive { rule, n, out } => {
            let spec = resolve_rule(&rule, rule.m)?;
            (
                report_output(&analysis::check_pairwise_responsive(&spec, rule.m, n, budget)?)?,
                out,
            )
        }
        CheckCommand::Isolated { rule, n, out } => {
            let spec = resolve_rule(&rule, rule.m)?;
            (
                report_output(&analysis::check_pairwise_isolated(&spec, rule.m, n, budget)?)?,
                out,
            )
        }
        CheckCommand::Optimality { rule, n, t, out } => {
            let spec = resolve_rule(&rule, rule.m)?;
            let margin = match t {
                Some(t) => MarginPolicy::explicit(input::parse_rational(&t, "--t")?),
                None => MarginPolicy::asymptotic(input::parse_rational(&rule.delta, "--delta")?),
            };
            margin.validate()?;
            let limit: GapLimit = margin.limit(n);
            (
                report_output(&analysis::check_close_to_optimal(&spec, rule.m, n, limit, budget)?)?,
                out,
            )
        }
        CheckCommand::StrictPunish { n, m, alpha, out } => {
            let alpha = input::parse_rational(&alpha, "--alpha")?;
            (
                report_output(&analysis::strict_sp_margin_punishing(n, m, &alpha, budget)?)?,
                out,
            )
        }
    })
}

/// The survivor stage of a two-stage rule.
fn elimination_of(spec: &VotingRuleSpec) -> Result<EliminationRuleSpec, CliError> {
    match spec {
        VotingRuleSpec::RepeatedPluralityElim { margin } => {
            Ok(EliminationRuleSpec::RepeatedPlurality { margin: margin.clone() })
        }
        VotingRuleSpec::ApproxIrv { margin } => Ok(EliminationRuleSpec::ApproxIrv { margin: margin.clone() }),
        VotingRuleSpec::ScoreElim { points, margin, .. } => Ok(EliminationRuleSpec::ScoreMargin {
            points: points.clone(),
            margin: margin.clone(),
        }),
        VotingRuleSpec::Framework { elim, .. } => Ok(elim.clone()),
        VotingRuleSpec::Mixed { base, .. } => elimination_of(base),
        other => Err(CliError::new(
            3,
            format!("rule `{}` has no elimination stage", other.label()),
        )),
    }
}

fn run_sweep(cmd: SweepCommand, budget: &Budget) -> Result<(Output, OutArgs), CliError> {
    let mut csv = String::from("n,estimate,ci\n");
    let out = match cmd {
        SweepCommand::Gain {
            rule,
            belief,
            truth,
            utility,
            sampling,
            exact,
            out,
        } => {
            let phi = input::belief(belief.belief.as_deref(), belief.belief_inline.as_deref())?;
            let m = phi.candidates().span();
            let spec = resolve_rule(&rule, m)?;
            let truth = input::parse_ordering(&truth)?;
            let u = input::parse_utility(&utility)?;
            for n in NRange::parse(&sampling.n)?.values() {
                let mode = if exact {
                    GainMode::Exact(*budget)
                } else {
                    GainMode::MonteCarlo {
                        trials: sampling.trials,
                        seed: sampling.seed,
                    }
                };
                let rep = analysis::manipulation_gain(&spec, &phi, &truth, &u, n, mode)?;
                match rep.best_gain {
                    Quantity::Exact(g) => writeln!(csv, "{n},{},0", rational::format(&g)),
                    Quantity::Estimate { value, ci_halfwidth } => writeln!(csv, "{n},{value},{ci_halfwidth}"),
                }
                .expect("write to string");
            }
            out
        }
        SweepCommand::Pivotality {
            rule,
            belief,
            sampling,
            out,
        } => {
            let phi = input::belief(belief.belief.as_deref(), belief.belief_inline.as_deref())?;
            let m = phi.candidates().span();
            let elim = elimination_of(&resolve_rule(&rule, m)?)?;
            for n in NRange::parse(&sampling.n)?.values() {
                let (est, ci) = analysis::elimination_pivotality_mc(&elim, &phi, n, sampling.trials, sampling.seed)?;
                writeln!(csv, "{n},{est},{ci}").expect("write to string");
            }
            out
        }
    };
    Ok((Output::ok(csv), out))
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let budget = Budget::from_env();
    let (output, out) = match cli.command {
        Command::Eval { rule, ballots, out } => {
            let prof = input::ballots(&ballots)?;
            let m = prof.candidates().span();
            let spec = resolve_rule(&rule, m)?;
            let dist = rules::evaluate(&spec, &prof)?;
            (Output::ok(json(&dist)?), out)
        }
        Command::Belief {
            command:
                BeliefCommand::Form {
                    method,
                    observations,
                    out,
                },
        } => {
            let prof = input::ballots(&observations)?;
            let m = prof.candidates().span();
            let phi = match method {
                FormMethod::Empirical => form_belief_empirical(prof.voters())?,
                FormMethod::Dirichlet => form_belief_dirichlet(m, prof.voters())?,
            };
            (Output::ok(json(&BeliefJson::from(&phi))?), out)
        }
        Command::Check { command } => run_check(command, &budget)?,
        Command::Vprime { rule, n, format, out } => {
            let spec = resolve_rule(&rule, rule.m)?;
            let table = analysis::build_vprime(&spec, rule.m, n)?;
            let text = match format {
                Format::Json => json(&table)?,
                Format::Csv => table.to_csv(),
            };
            (Output::ok(text), out)
        }
        Command::Closeness { rule, other, n, out } => {
            let first = resolve_rule(&rule, rule.m)?;
            let second = input::rule(
                &other,
                rule.m,
                &rules::PresetParams {
                    delta: input::parse_rational(&rule.delta, "--delta")?,
                    decay: rule.decay,
                },
            )?;
            let eps: Rational = analysis::closeness(&first, &second, rule.m, n, &budget)?;
            (
                Output::ok(json(&serde_json::json!({ "eps": rational::format(&eps) }))?),
                out,
            )
        }
        Command::Sweep { command } => run_sweep(command, &budget)?,
    };
    match out.out {
        Some(path) => {
            std::fs::write(&path, &output.text)
                .map_err(|e| CliError::new(2, format!("cannot write {}: {e}", path.display())))?;
            Ok(Output {
                text: String::new(),
                code: output.code,
            })
        }
        None => Ok(output),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(output) => {
            print!("{}", output.text);
            ExitCode::from(output.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
