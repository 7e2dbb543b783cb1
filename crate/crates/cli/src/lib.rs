//! Experiment harness over the core library.
//!
//! Everything here is plumbing: named schemes and adversaries, seeded
//! Monte-Carlo trial runs, rate sweeps rendered as CSV, and the attack
//! demonstrations. The statements being tested live in `icsim-core`;
//! this crate only arranges runs and counts outcomes.

use rayon::prelude::*;
use thiserror::Error;

use icsim_core::adversaries::{
    run_adaptive_list_attack, run_erasure_attack, run_list_block_attack, run_quarter_attack,
    run_third_attack, run_two_sevenths_attack, AttackError, AttackReport, OneSided,
    PersonalitySwap, PrefixBurst, Uniform,
};
use icsim_core::canonical::{ProtocolTree, Side};
use icsim_core::channel::{
    run_session, Adversary, ChannelSpec, Decoded, EngineError, NullAdversary, PartyFactory,
    PartyInput, Seeds, SessionSpec,
};
use icsim_core::exchange::{
    quarter_exchange, two_sevenths_exchange, two_thirds_exchange, ExchangeScheme,
};
use icsim_core::simulator::blocks::{block_adaptive, block_list, block_unique, BlockScheme};
use icsim_core::simulator::{sim_inputs, vote_adaptive, vote_list, vote_unique, SimScheme};
use icsim_core::util::derive_seed;

pub const SCHEME_NAMES: &[&str] = &[
    "exchange-quarter",
    "exchange-two-sevenths",
    "exchange-two-thirds",
    "vote-unique",
    "vote-list",
    "vote-adaptive",
    "block-unique",
    "block-list",
    "block-adaptive",
];

pub const ADVERSARY_NAMES: &[&str] = &["null", "uniform", "prefix-burst", "one-sided", "swap"];

pub const ATTACK_NAMES: &[&str] = &[
    "quarter",
    "third",
    "two-sevenths",
    "list-block",
    "adaptive-list",
    "erasure",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown scheme '{0}' (known: {})", SCHEME_NAMES.join(", "))]
    UnknownScheme(String),
    #[error("unknown adversary '{0}' (known: {})", ADVERSARY_NAMES.join(", "))]
    UnknownAdversary(String),
    #[error("unknown attack '{0}' (known: {})", ATTACK_NAMES.join(", "))]
    UnknownAttack(String),
    #[error("cannot build scheme: {0}")]
    Build(String),
    #[error("mode '{mode}' does not match scheme '{scheme}' ({actual})")]
    ModeMismatch {
        mode: String,
        scheme: String,
        actual: &'static str,
    },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("attacks target exchange schemes, not '{0}'")]
    NotAnExchange(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A named scheme from any of the three families, ready to run trials.
pub enum SchemeHandle {
    Exchange(ExchangeScheme),
    Sim(SimScheme),
    Block(BlockScheme),
}

impl SchemeHandle {
    /// Build a scheme by registry name. `n` is the exchange bit width or
    /// the tree depth; simulators run on binary trees. The two-thirds
    /// exchange is a fixed one-bit scheme and ignores `n`.
    pub fn build(name: &str, n: usize, eps: f64) -> Result<SchemeHandle, HarnessError> {
        let build = |e: String| HarnessError::Build(e);
        Ok(match name {
            "exchange-quarter" => {
                SchemeHandle::Exchange(quarter_exchange(n, eps).map_err(|e| build(e.to_string()))?)
            }
            "exchange-two-sevenths" => SchemeHandle::Exchange(
                two_sevenths_exchange(n, eps).map_err(|e| build(e.to_string()))?,
            ),
            "exchange-two-thirds" => {
                SchemeHandle::Exchange(two_thirds_exchange(eps).map_err(|e| build(e.to_string()))?)
            }
            "vote-unique" => {
                SchemeHandle::Sim(vote_unique(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            "vote-list" => {
                SchemeHandle::Sim(vote_list(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            "vote-adaptive" => {
                SchemeHandle::Sim(vote_adaptive(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            "block-unique" => {
                SchemeHandle::Block(block_unique(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            "block-list" => {
                SchemeHandle::Block(block_list(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            "block-adaptive" => {
                SchemeHandle::Block(block_adaptive(n, 2, eps).map_err(|e| build(e.to_string()))?)
            }
            other => return Err(HarnessError::UnknownScheme(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchemeHandle::Exchange(s) => s.name,
            SchemeHandle::Sim(s) => s.name,
            SchemeHandle::Block(s) => s.name,
        }
    }

    pub fn channel(&self) -> &ChannelSpec {
        match self {
            SchemeHandle::Exchange(s) => &s.channel,
            SchemeHandle::Sim(s) => &s.channel,
            SchemeHandle::Block(s) => &s.channel,
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            SchemeHandle::Exchange(s) => s.tolerance,
            SchemeHandle::Sim(s) => s.tolerance,
            SchemeHandle::Block(s) => s.tolerance,
        }
    }

    /// The mode word the `--mode` flag checks against.
    pub fn mode_word(&self) -> &'static str {
        match self.name() {
            "exchange-quarter" | "vote-unique" | "block-unique" => "unique",
            "vote-list" | "block-list" => "list",
            "exchange-two-sevenths" | "vote-adaptive" | "block-adaptive" => "adaptive",
            "exchange-two-thirds" => "shared-rand",
            _ => "unique",
        }
    }

    /// Validate an explicit `--mode` request against this scheme.
    pub fn check_mode(&self, mode: &str) -> Result<(), HarnessError> {
        let actual = self.mode_word();
        // The shared-randomness exchange runs on the erasure channel;
        // either word names it.
        let ok = mode == actual || (mode == "erasure" && self.name() == "exchange-two-thirds");
        if ok {
            Ok(())
        } else {
            Err(HarnessError::ModeMismatch {
                mode: mode.to_string(),
                scheme: self.name().to_string(),
                actual,
            })
        }
    }

    fn is_list(&self) -> bool {
        matches!(self.name(), "vote-list" | "block-list")
    }
}

/// Build a named adversary. The seed matters only to the randomized ones.
pub fn make_adversary(name: &str, seed: u64) -> Result<Box<dyn Adversary>, HarnessError> {
    Ok(match name {
        "null" => Box::new(NullAdversary),
        "uniform" => Box::new(Uniform::new(seed)),
        "prefix-burst" => Box::new(PrefixBurst::new(0)),
        "one-sided" => Box::new(OneSided::new(Side::Bob)),
        "swap" => Box::new(PersonalitySwap::new(Side::Alice, seed)),
        other => return Err(HarnessError::UnknownAdversary(other.to_string())),
    })
}

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TrialOutcome {
    pub success: bool,
    pub cost: u64,
}

fn trial_seeds(trial_seed: u64) -> Seeds {
    Seeds {
        alice: derive_seed(trial_seed, 1, 0),
        bob: derive_seed(trial_seed, 1, 1),
        adversary: derive_seed(trial_seed, 1, 2),
    }
}

fn decoded_matches(decoded: &Decoded, value: u64) -> bool {
    match decoded {
        Decoded::Bits { value: v, .. } => *v == value,
        Decoded::Symbol(v) => *v == value,
        _ => false,
    }
}

fn run_tree_trial(
    channel: &ChannelSpec,
    alice: &dyn PartyFactory,
    bob: &dyn PartyFactory,
    depth: usize,
    branching: usize,
    list: bool,
    rate: f64,
    trial_seed: u64,
    adversary: &mut dyn Adversary,
) -> Result<TrialOutcome, HarnessError> {
    let tree = ProtocolTree::random(depth, branching, derive_seed(trial_seed, 21, 0))
        .map_err(|e| HarnessError::Build(e.to_string()))?;
    let (alice_input, bob_input) = sim_inputs(&tree);
    let spec = SessionSpec {
        config: channel.config(rate)?,
        alice,
        alice_input,
        bob,
        bob_input,
        seeds: trial_seeds(trial_seed),
    };
    let result = run_session(&spec, adversary)?;
    let leaf = tree.common_leaf();
    let good = |d: &Decoded| {
        if list {
            matches!(d, Decoded::Leaves(ls) if ls.contains(&leaf))
        } else {
            matches!(d, Decoded::Leaf(l) if *l == leaf)
        }
    };
    Ok(TrialOutcome {
        success: good(&result.alice_output.decoded) && good(&result.bob_output.decoded),
        cost: result.cost_total,
    })
}

/// One seeded trial: fresh inputs, fresh adversary, one session.
///
/// Success means both parties decode what the scheme promises: the
/// counterpart's value for exchanges, the common leaf (in the list, for
/// list schemes) for simulators.
pub fn run_trial(
    scheme: &SchemeHandle,
    rate: f64,
    adversary_name: &str,
    trial_seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    let mut adversary = make_adversary(adversary_name, derive_seed(trial_seed, 31, 0))?;
    match scheme {
        SchemeHandle::Exchange(ex) => {
            let span = 1u64 << ex.bits.min(63);
            let x = derive_seed(trial_seed, 20, 0) % span;
            let y = derive_seed(trial_seed, 20, 1) % span;
            let spec = SessionSpec {
                config: ex.channel.config(rate)?,
                alice: ex.alice.as_ref(),
                alice_input: PartyInput::Bits { value: x, len: ex.bits },
                bob: ex.bob.as_ref(),
                bob_input: PartyInput::Bits { value: y, len: ex.bits },
                seeds: trial_seeds(trial_seed),
            };
            let result = run_session(&spec, adversary.as_mut())?;
            let success = decoded_matches(&result.alice_output.decoded, y)
                && decoded_matches(&result.bob_output.decoded, x);
            Ok(TrialOutcome {
                success,
                cost: result.cost_total,
            })
        }
        SchemeHandle::Sim(sim) => run_tree_trial(
            &sim.channel,
            sim.alice.as_ref(),
            sim.bob.as_ref(),
            sim.plan.depth,
            sim.plan.branching,
            scheme.is_list(),
            rate,
            trial_seed,
            adversary.as_mut(),
        ),
        SchemeHandle::Block(block) => run_tree_trial(
            &block.channel,
            block.alice.as_ref(),
            block.bob.as_ref(),
            block.plan.depth,
            block.plan.branching,
            scheme.is_list(),
            rate,
            trial_seed,
            adversary.as_mut(),
        ),
    }
}

/// One aggregated cell of a sweep.
#[derive(Clone, PartialEq, Debug)]
pub struct SweepRow {
    pub scheme: String,
    pub n: usize,
    pub eps: f64,
    pub rho: f64,
    pub adversary: String,
    pub trials: usize,
    pub successes: usize,
    pub failure_rate: f64,
    pub mean_cost: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "scheme,n,eps,rho,adversary,trials,successes,failure_rate,mean_cost,seed";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{},{},{},{:.6},{:.6},{}",
            self.scheme,
            self.n,
            self.eps,
            self.rho,
            self.adversary,
            self.trials,
            self.successes,
            self.failure_rate,
            self.mean_cost,
            self.seed
        )
    }
}

/// Run `trials` independent sessions and aggregate. Trial `t` uses seed
/// `derive_seed(base_seed, 30, t)`; trials run in parallel and the
/// aggregate is order-independent.
pub fn run_trials(
    scheme: &SchemeHandle,
    n: usize,
    eps: f64,
    rate: f64,
    adversary: &str,
    trials: usize,
    base_seed: u64,
) -> Result<SweepRow, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    make_adversary(adversary, 0)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(scheme, rate, adversary, derive_seed(base_seed, 30, t as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let successes = outcomes.iter().filter(|o| o.success).count();
    let mean_cost = outcomes.iter().map(|o| o.cost as f64).sum::<f64>() / trials as f64;
    Ok(SweepRow {
        scheme: scheme.name().to_string(),
        n,
        eps,
        rho: rate,
        adversary: adversary.to_string(),
        trials,
        successes,
        failure_rate: 1.0 - successes as f64 / trials as f64,
        mean_cost,
        seed: base_seed,
    })
}

/// Run the full (rate x adversary) grid and render it as CSV. Each cell
/// gets its own derived base seed, so the file is a pure function of the
/// arguments. An empty grid yields a header-only file.
pub fn run_sweep(
    scheme: &SchemeHandle,
    n: usize,
    eps: f64,
    rates: &[f64],
    adversaries: &[String],
    trials: usize,
    base_seed: u64,
) -> Result<String, HarnessError> {
    let mut out = String::with_capacity(64 * (1 + rates.len() * adversaries.len()));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (i, &rho) in rates.iter().enumerate() {
        for (j, adversary) in adversaries.iter().enumerate() {
            let cell = (i * adversaries.len() + j) as u64;
            let row = run_trials(
                scheme,
                n,
                eps,
                rho,
                adversary,
                trials,
                derive_seed(base_seed, 40, cell),
            )?;
            out.push_str(&row.csv_line());
            out.push('\n');
        }
    }
    Ok(out)
}

/// Dispatch a named attack against an exchange scheme.
pub fn run_attack(
    attack: &str,
    scheme: &SchemeHandle,
    x: u64,
    rate: f64,
    seed: u64,
    samples: usize,
) -> Result<AttackReport, HarnessError> {
    let SchemeHandle::Exchange(ex) = scheme else {
        return Err(HarnessError::NotAnExchange(scheme.name().to_string()));
    };
    Ok(match attack {
        "quarter" => run_quarter_attack(ex, x, rate, seed)?,
        "third" => run_third_attack(ex, x, rate, seed)?,
        "two-sevenths" => run_two_sevenths_attack(ex, rate, seed, samples)?,
        "list-block" => run_list_block_attack(ex, rate, seed)?,
        "adaptive-list" => run_adaptive_list_attack(ex, rate, seed, samples)?,
        "erasure" => run_erasure_attack(ex, rate, seed, samples)?,
        other => return Err(HarnessError::UnknownAttack(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_every_name() {
        for name in SCHEME_NAMES {
            let (n, eps) = match *name {
                "exchange-two-thirds" => (1, 1.0 / 6.0),
                "block-unique" | "block-list" | "block-adaptive" => (3, 0.25),
                _ => (2, 0.125),
            };
            let scheme = SchemeHandle::build(name, n, eps).unwrap();
            assert_eq!(scheme.name(), *name);
            assert!(scheme.tolerance() >= 0.0);
        }
        assert!(matches!(
            SchemeHandle::build("no-such-scheme", 2, 0.1),
            Err(HarnessError::UnknownScheme(_))
        ));
        for name in ADVERSARY_NAMES {
            make_adversary(name, 1).unwrap();
        }
        assert!(matches!(
            make_adversary("no-such-adversary", 1),
            Err(HarnessError::UnknownAdversary(_))
        ));
    }

    #[test]
    fn mode_flag_checks_the_scheme_family() {
        let scheme = SchemeHandle::build("vote-list", 2, 0.125).unwrap();
        scheme.check_mode("list").unwrap();
        assert!(scheme.check_mode("unique").is_err());

        let shared = SchemeHandle::build("exchange-two-thirds", 1, 1.0 / 6.0).unwrap();
        shared.check_mode("shared-rand").unwrap();
        shared.check_mode("erasure").unwrap();
        assert!(shared.check_mode("adaptive").is_err());
    }

    #[test]
    fn clean_runs_always_succeed() {
        for name in SCHEME_NAMES {
            let (n, eps) = match *name {
                "exchange-two-thirds" => (1, 1.0 / 6.0),
                "block-unique" | "block-list" | "block-adaptive" => (3, 0.25),
                _ => (2, 0.125),
            };
            let scheme = SchemeHandle::build(name, n, eps).unwrap();
            let row = run_trials(&scheme, n, eps, 0.0, "null", 8, 5).unwrap();
            assert_eq!(row.successes, 8, "{name} failed a clean trial");
            assert_eq!(row.failure_rate, 0.0);
            assert_eq!(row.mean_cost, 0.0);
        }
    }

    #[test]
    fn csv_is_deterministic_and_shaped() {
        let scheme = SchemeHandle::build("exchange-quarter", 2, 0.125).unwrap();
        let rates = [0.0, 0.2];
        let adversaries = vec!["uniform".to_string(), "prefix-burst".to_string()];
        let a = run_sweep(&scheme, 2, 0.125, &rates, &adversaries, 10, 99).unwrap();
        let b = run_sweep(&scheme, 2, 0.125, &rates, &adversaries, 10, 99).unwrap();
        assert_eq!(a, b);
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("exchange-quarter,2,0.125000,0.000000,uniform,10,10,0.000000,"));

        let c = run_sweep(&scheme, 2, 0.125, &rates, &adversaries, 10, 100).unwrap();
        assert_ne!(a, c);

        let empty = run_sweep(&scheme, 2, 0.125, &[], &adversaries, 10, 99).unwrap();
        assert_eq!(empty, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn attack_dispatch_reaches_every_runner() {
        let quarter = SchemeHandle::build("exchange-quarter", 1, 0.125).unwrap();
        let report = run_attack("quarter", &quarter, 0, 0.25, 7, 10).unwrap();
        assert!(report.ok());

        let adaptive = SchemeHandle::build("exchange-two-sevenths", 1, 0.2).unwrap();
        assert!(matches!(
            run_attack("quarter", &adaptive, 0, 0.25, 7, 10),
            Err(HarnessError::Attack(AttackError::NotNonAdaptive))
        ));
        assert!(matches!(
            run_attack("no-such-attack", &quarter, 0, 0.25, 7, 10),
            Err(HarnessError::UnknownAttack(_))
        ));
        let sim = SchemeHandle::build("vote-unique", 2, 0.125).unwrap();
        assert!(matches!(
            run_attack("quarter", &sim, 0, 0.25, 7, 10),
            Err(HarnessError::NotAnExchange(_))
        ));
    }
}
