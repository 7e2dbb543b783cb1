//! The round-based adversarial channel.
//!
//! Each round both parties independently either transmit a symbol or
//! listen. When exactly one party transmits, the listener receives that
//! symbol unless the adversary spends one unit of budget to replace it.
//! When both transmit, nothing is delivered to anyone. When both listen,
//! the adversary may feed each listener an arbitrary value free of charge;
//! that freedom is what makes silence expensive for protocols.
//!
//! The engine is deterministic: given the same config, party factories,
//! seeds, and adversary it reproduces the identical [`SessionResult`].

use std::fmt;
use std::fmt::Write as _;

use thiserror::Error;

use crate::canonical::{EdgeSet, NodeId, Side};
use crate::util::floor_guarded;

/// Whether corrupted deliveries carry forged symbols or visible erasures.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Corruption,
    Erasure,
}

/// One channel symbol: a word of values below the alphabet size. Scalar
/// schemes use single-element words; the tree simulators send whole
/// edge-set encodings as one word.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Symbol(pub Vec<u64>);

impl Symbol {
    pub fn scalar(v: u64) -> Symbol {
        Symbol(vec![v])
    }

    pub fn word(values: Vec<u64>) -> Symbol {
        Symbol(values)
    }

    pub fn as_scalar(&self) -> Option<u64> {
        match self.0.as_slice() {
            [v] => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Symbol {
    /// Values joined by hyphens; the empty word renders as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let mut first = true;
        for v in &self.0 {
            if !first {
                write!(f, "-")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        Ok(())
    }
}

/// What a listener's receiver reports: a symbol or the erasure mark.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Delivered {
    Sym(Symbol),
    Bottom,
}

impl Delivered {
    pub fn scalar(v: u64) -> Delivered {
        Delivered::Sym(Symbol::scalar(v))
    }

    pub fn as_scalar(&self) -> Option<u64> {
        match self {
            Delivered::Sym(s) => s.as_scalar(),
            Delivered::Bottom => None,
        }
    }
}

impl fmt::Display for Delivered {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delivered::Sym(s) => write!(f, "{s}"),
            Delivered::Bottom => write!(f, "bot"),
        }
    }
}

/// Bookkeeping attached to a delivery: where the value came from. Parties
/// never see this; a party's view is the value sequence alone. Block
/// receivers do see `sender_tag`/`Blend` metadata because there it models
/// codeword bookkeeping the decoder legitimately maintains.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Origin {
    /// The counterpart's transmitted symbol, untouched.
    Sender,
    /// Adversarial, declared to blend in the codeword with this message id.
    Blend(u64),
    /// Adversarial with no declared structure.
    Junk,
}

/// One delivery to a listening party.
#[derive(Clone, PartialEq, Debug)]
pub struct Reception {
    pub value: Delivered,
    pub origin: Origin,
    /// The message id the true sender attached to its transmission this
    /// round, if any. Survives replacement: it identifies which codeword
    /// the round belonged to, not what arrived.
    pub sender_tag: Option<u64>,
}

/// A transmitted symbol, optionally tagged with the message id of the
/// codeword it belongs to (block schemes tag every round of a block).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transmission {
    pub symbol: Symbol,
    pub tag: Option<u64>,
}

/// A party's choice for one round.
#[derive(Clone, PartialEq, Debug)]
pub enum RoundAction {
    Transmit(Transmission),
    Listen,
}

impl RoundAction {
    pub fn send(symbol: Symbol) -> RoundAction {
        RoundAction::Transmit(Transmission { symbol, tag: None })
    }

    pub fn send_scalar(v: u64) -> RoundAction {
        RoundAction::send(Symbol::scalar(v))
    }

    pub fn send_tagged(symbol: Symbol, tag: u64) -> RoundAction {
        RoundAction::Transmit(Transmission {
            symbol,
            tag: Some(tag),
        })
    }

    pub fn is_transmit(&self) -> bool {
        matches!(self, RoundAction::Transmit(_))
    }
}

/// A value the adversary wants a listener to receive, with an optional
/// declared blend id (meaningful to block receivers only).
#[derive(Clone, PartialEq, Debug)]
pub struct Feed {
    pub value: Delivered,
    pub declared: Option<u64>,
}

impl Feed {
    pub fn scalar(v: u64) -> Feed {
        Feed {
            value: Delivered::scalar(v),
            declared: None,
        }
    }

    pub fn erase() -> Feed {
        Feed {
            value: Delivered::Bottom,
            declared: None,
        }
    }

    pub fn blend(v: u64, msg: u64) -> Feed {
        Feed {
            value: Delivered::scalar(v),
            declared: Some(msg),
        }
    }
}

/// The adversary's move for one round.
#[derive(Clone, PartialEq, Debug, Default)]
pub enum Intervention {
    /// Leave the round alone.
    #[default]
    None,
    /// One party is transmitting: replace what the listener hears. Costs
    /// one budget unit; dropped (with a flag) once the budget is spent.
    /// In erasure mode the fed value must be the erasure mark.
    Replace(Feed),
    /// Both parties are listening: feed each of them, free of charge.
    FeedBoth { alice: Feed, bob: Feed },
}

/// What the engine actually did with the adversary's move.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Applied {
    None,
    Replaced(Side),
    FedBoth,
}

/// Full record of one round.
#[derive(Clone, PartialEq, Debug)]
pub struct RoundRecord {
    pub round: usize,
    pub alice: RoundAction,
    pub bob: RoundAction,
    pub applied: Applied,
    /// The adversary proposed something the engine discarded: over budget,
    /// or an intervention shape that does not fit the round.
    pub dropped: bool,
    pub to_alice: Option<Reception>,
    pub to_bob: Option<Reception>,
    /// Budget spent this round; replacements cost 1, everything else 0.
    pub cost: u8,
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid channel config: {0}")]
    InvalidConfig(String),
    #[error("round {round}: schedule expects {expected} to transmit alone")]
    ScheduleViolation { round: usize, expected: Side },
    #[error("round {round}: {side} transmitted outside the channel alphabet")]
    AlphabetViolation { round: usize, side: Side },
    #[error("round {round}: adversary fed a value outside the channel model")]
    BadFeed { round: usize },
}

/// Static description of a channel: everything but the error rate.
#[derive(Clone, PartialEq, Debug)]
pub struct ChannelSpec {
    pub rounds: usize,
    pub alphabet_size: u64,
    pub mode: Mode,
    /// For non-adaptive schemes: the unique transmitter of each round.
    /// Adaptive schemes leave this unset and choose per round.
    pub schedule: Option<Vec<Side>>,
    /// Longest word a transmission or feed may carry.
    pub message_size_limit: usize,
}

impl ChannelSpec {
    pub fn config(&self, error_rate: f64) -> Result<ChannelConfig, EngineError> {
        ChannelConfig::new(self.clone(), error_rate)
    }
}

/// A [`ChannelSpec`] bound to an error rate ρ. The adversary's budget is
/// `⌊ρ·rounds⌋`.
#[derive(Clone, PartialEq, Debug)]
pub struct ChannelConfig {
    pub spec: ChannelSpec,
    pub error_rate: f64,
}

impl ChannelConfig {
    pub fn new(spec: ChannelSpec, error_rate: f64) -> Result<ChannelConfig, EngineError> {
        if spec.rounds == 0 {
            return Err(EngineError::InvalidConfig("zero rounds".into()));
        }
        if spec.alphabet_size < 2 {
            return Err(EngineError::InvalidConfig(format!(
                "alphabet size {} below 2",
                spec.alphabet_size
            )));
        }
        if spec.message_size_limit == 0 {
            return Err(EngineError::InvalidConfig("zero message size limit".into()));
        }
        if let Some(s) = &spec.schedule {
            if s.len() != spec.rounds {
                return Err(EngineError::InvalidConfig(format!(
                    "schedule covers {} of {} rounds",
                    s.len(),
                    spec.rounds
                )));
            }
        }
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(EngineError::InvalidConfig(format!(
                "error rate {error_rate} outside [0, 1]"
            )));
        }
        Ok(ChannelConfig { spec, error_rate })
    }

    pub fn rounds(&self) -> usize {
        self.spec.rounds
    }

    pub fn budget(&self) -> u64 {
        floor_guarded(self.error_rate * self.spec.rounds as f64)
    }
}

/// What a party is told at spawn time.
#[derive(Clone, PartialEq, Debug)]
pub enum PartyInput {
    /// An n-bit string, value below `2^len`.
    Bits { value: u64, len: usize },
    /// A single alphabet symbol.
    Symbol(u64),
    /// A preferred-edge set plus the tree dimensions it lives in.
    Edges {
        set: EdgeSet,
        depth: usize,
        branching: usize,
    },
}

impl fmt::Display for PartyInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyInput::Bits { value, len } => {
                for i in (0..*len).rev() {
                    write!(f, "{}", (value >> i) & 1)?;
                }
                Ok(())
            }
            PartyInput::Symbol(v) => write!(f, "{v}"),
            PartyInput::Edges { set, .. } => write!(f, "{} edges", set.len()),
        }
    }
}

/// What a party announces after the last round.
#[derive(Clone, PartialEq, Debug)]
pub enum Decoded {
    Nothing,
    Bits { value: u64, len: usize },
    Symbol(u64),
    Leaf(NodeId),
    Leaves(Vec<NodeId>),
}

/// Diagnostic counters filled in by whichever scheme ran. Unused fields
/// stay at their defaults.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct DecodeStats {
    pub votes_total: u64,
    pub votes_top: u64,
    pub weight_top: f64,
    pub weight_second: f64,
    pub weight_empty: f64,
    /// Adaptive block schemes: the confidence the safety rule compared
    /// against its threshold.
    pub confidence: Option<f64>,
    /// Exchange schemes: distance of the received block to the nearest
    /// codeword.
    pub estimate: Option<u64>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct PartyOutput {
    pub decoded: Decoded,
    /// Whether the scheme's safety rule fired, where the scheme has one.
    pub rule_triggered: Option<bool>,
    pub stats: DecodeStats,
    /// Scheme-specific markers (detection codes report the block rounds
    /// where tampering was noticed).
    pub flags: Vec<usize>,
}

impl PartyOutput {
    pub fn plain(decoded: Decoded) -> PartyOutput {
        PartyOutput {
            decoded,
            rule_triggered: None,
            stats: DecodeStats::default(),
            flags: Vec::new(),
        }
    }
}

/// A live protocol participant. `act` is called once per round with the
/// previous round's reception (`None` when the party transmitted or no
/// round ran yet); `finish` is called after the last round with that
/// round's reception.
pub trait Party {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction;
    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput;
}

/// Builds fresh parties. Factories are cheap handles so adversaries can
/// rerun a party offline against hypothetical inputs; `spawn` must be
/// deterministic in `(input, seed)`.
pub trait PartyFactory: Send + Sync {
    fn spawn(&self, input: &PartyInput, seed: u64) -> Box<dyn Party>;
}

/// Convenience for adversaries that simulate parties offline.
pub fn spawn_simulated_party(
    factory: &dyn PartyFactory,
    input: &PartyInput,
    seed: u64,
) -> Box<dyn Party> {
    factory.spawn(input, seed)
}

/// Seeds for the three random streams of a session.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Seeds {
    pub alice: u64,
    pub bob: u64,
    pub adversary: u64,
}

/// Everything an adversary may inspect about a session before it starts:
/// the config, both inputs, and replayable party factories. Live party
/// randomness is deliberately absent.
#[derive(Clone, Copy)]
pub struct SessionInfo<'a> {
    pub config: &'a ChannelConfig,
    pub budget: u64,
    pub alice_input: &'a PartyInput,
    pub bob_input: &'a PartyInput,
    pub alice_factory: &'a dyn PartyFactory,
    pub bob_factory: &'a dyn PartyFactory,
}

/// Per-round view handed to the adversary: both committed actions, the
/// whole history so far, and the remaining budget.
pub struct RoundContext<'a> {
    pub info: SessionInfo<'a>,
    pub round: usize,
    pub alice_action: &'a RoundAction,
    pub bob_action: &'a RoundAction,
    pub history: &'a [RoundRecord],
    pub budget_left: u64,
}

impl RoundContext<'_> {
    /// The round's lone transmitter, if there is exactly one.
    pub fn lone_transmitter(&self) -> Option<(Side, &Transmission)> {
        match (self.alice_action, self.bob_action) {
            (RoundAction::Transmit(t), RoundAction::Listen) => Some((Side::Alice, t)),
            (RoundAction::Listen, RoundAction::Transmit(t)) => Some((Side::Bob, t)),
            _ => None,
        }
    }

    pub fn both_listen(&self) -> bool {
        !self.alice_action.is_transmit() && !self.bob_action.is_transmit()
    }
}

/// The adversary sees both parties' committed actions each round and moves
/// last.
pub trait Adversary {
    fn begin(&mut self, _info: &SessionInfo<'_>) {}
    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention;
}

/// The honest channel: never intervenes.
pub struct NullAdversary;

impl Adversary for NullAdversary {
    fn intervene(&mut self, _ctx: &RoundContext<'_>) -> Intervention {
        Intervention::None
    }
}

/// A complete session: configuration, party factories with their inputs,
/// and seeds.
pub struct SessionSpec<'a> {
    pub config: ChannelConfig,
    pub alice: &'a dyn PartyFactory,
    pub alice_input: PartyInput,
    pub bob: &'a dyn PartyFactory,
    pub bob_input: PartyInput,
    pub seeds: Seeds,
}

/// Everything a finished session produced.
#[derive(Clone, PartialEq, Debug)]
pub struct SessionResult {
    pub records: Vec<RoundRecord>,
    pub budget: u64,
    pub cost_total: u64,
    /// Interventions the engine discarded (over budget or ill-shaped).
    pub dropped_interventions: u64,
    pub alice_output: PartyOutput,
    pub bob_output: PartyOutput,
}

impl SessionResult {
    /// A party's view: the value of every delivery it received, in order.
    /// Two runs are indistinguishable to a party exactly when these value
    /// sequences match (origins and tags are bookkeeping, not evidence).
    pub fn view(&self, side: Side) -> Vec<Delivered> {
        self.records
            .iter()
            .filter_map(|r| match side {
                Side::Alice => r.to_alice.as_ref(),
                Side::Bob => r.to_bob.as_ref(),
            })
            .map(|rec| rec.value.clone())
            .collect()
    }

    pub fn output(&self, side: Side) -> &PartyOutput {
        match side {
            Side::Alice => &self.alice_output,
            Side::Bob => &self.bob_output,
        }
    }

    /// Tab-separated trace, one line per round:
    /// `round  alice  bob  intervention  to_alice  to_bob  cost`.
    /// Actions render as `T:<symbol>` or `L`; interventions as `-`,
    /// `replace>a`, `replace>b` or `feed-both`, with `(dropped)` appended
    /// when the engine discarded the move; deliveries as the symbol,
    /// `bot`, or `-` for none.
    pub fn trace(&self) -> String {
        let mut out = String::from("round\talice\tbob\tintervention\tto_alice\tto_bob\tcost\n");
        for r in &self.records {
            let act = |a: &RoundAction| match a {
                RoundAction::Transmit(t) => format!("T:{}", t.symbol),
                RoundAction::Listen => "L".to_string(),
            };
            let mut iv = match r.applied {
                Applied::None => "-".to_string(),
                Applied::Replaced(Side::Alice) => "replace>a".to_string(),
                Applied::Replaced(Side::Bob) => "replace>b".to_string(),
                Applied::FedBoth => "feed-both".to_string(),
            };
            if r.dropped {
                iv.push_str("(dropped)");
            }
            let rx = |d: &Option<Reception>| match d {
                Some(rec) => format!("{}", rec.value),
                None => "-".to_string(),
            };
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.round,
                act(&r.alice),
                act(&r.bob),
                iv,
                rx(&r.to_alice),
                rx(&r.to_bob),
                r.cost
            );
        }
        out
    }
}

fn check_symbol(
    config: &ChannelConfig,
    round: usize,
    side: Side,
    symbol: &Symbol,
) -> Result<(), EngineError> {
    if symbol.0.len() > config.spec.message_size_limit
        || symbol.0.iter().any(|&v| v >= config.spec.alphabet_size)
    {
        return Err(EngineError::AlphabetViolation { round, side });
    }
    Ok(())
}

fn check_feed(config: &ChannelConfig, round: usize, feed: &Feed) -> Result<(), EngineError> {
    match (&config.spec.mode, &feed.value) {
        (Mode::Erasure, Delivered::Bottom) => Ok(()),
        (Mode::Erasure, Delivered::Sym(_)) => Err(EngineError::BadFeed { round }),
        (Mode::Corruption, Delivered::Bottom) => Err(EngineError::BadFeed { round }),
        (Mode::Corruption, Delivered::Sym(s)) => {
            if s.0.len() > config.spec.message_size_limit
                || s.0.iter().any(|&v| v >= config.spec.alphabet_size)
            {
                Err(EngineError::BadFeed { round })
            } else {
                Ok(())
            }
        }
    }
}

/// What a silent round delivers when the adversary declines to feed: the
/// all-zero scalar under corruption, the erasure mark under erasure.
fn default_feed(mode: Mode) -> Reception {
    Reception {
        value: match mode {
            Mode::Corruption => Delivered::scalar(0),
            Mode::Erasure => Delivered::Bottom,
        },
        origin: Origin::Junk,
        sender_tag: None,
    }
}

/// Run one session to completion.
pub fn run_session(
    spec: &SessionSpec<'_>,
    adversary: &mut dyn Adversary,
) -> Result<SessionResult, EngineError> {
    let config = &spec.config;
    let budget = config.budget();
    let info = SessionInfo {
        config,
        budget,
        alice_input: &spec.alice_input,
        bob_input: &spec.bob_input,
        alice_factory: spec.alice,
        bob_factory: spec.bob,
    };
    let mut alice = spec.alice.spawn(&spec.alice_input, spec.seeds.alice);
    let mut bob = spec.bob.spawn(&spec.bob_input, spec.seeds.bob);
    adversary.begin(&info);

    let mut records: Vec<RoundRecord> = Vec::with_capacity(config.rounds());
    let mut spent: u64 = 0;
    let mut dropped_total: u64 = 0;
    let mut prev_alice: Option<Reception> = None;
    let mut prev_bob: Option<Reception> = None;

    for round in 0..config.rounds() {
        let a_act = alice.act(prev_alice.as_ref());
        let b_act = bob.act(prev_bob.as_ref());
        if let RoundAction::Transmit(t) = &a_act {
            check_symbol(config, round, Side::Alice, &t.symbol)?;
        }
        if let RoundAction::Transmit(t) = &b_act {
            check_symbol(config, round, Side::Bob, &t.symbol)?;
        }
        if let Some(schedule) = &config.spec.schedule {
            let expected = schedule[round];
            let ok = match expected {
                Side::Alice => a_act.is_transmit() && !b_act.is_transmit(),
                Side::Bob => !a_act.is_transmit() && b_act.is_transmit(),
            };
            if !ok {
                return Err(EngineError::ScheduleViolation { round, expected });
            }
        }

        let intervention = adversary.intervene(&RoundContext {
            info,
            round,
            alice_action: &a_act,
            bob_action: &b_act,
            history: &records,
            budget_left: budget - spent,
        });

        let mut applied = Applied::None;
        let mut dropped = false;
        let mut cost: u8 = 0;
        let mut to_alice: Option<Reception> = None;
        let mut to_bob: Option<Reception> = None;

        match (&a_act, &b_act) {
            (RoundAction::Transmit(_), RoundAction::Transmit(_)) => {
                // Nothing is delivered; any intervention is meaningless.
                dropped = !matches!(intervention, Intervention::None);
            }
            (RoundAction::Transmit(t), RoundAction::Listen)
            | (RoundAction::Listen, RoundAction::Transmit(t)) => {
                let listener = if a_act.is_transmit() {
                    Side::Bob
                } else {
                    Side::Alice
                };
                let mut delivery = Reception {
                    value: Delivered::Sym(t.symbol.clone()),
                    origin: Origin::Sender,
                    sender_tag: t.tag,
                };
                match intervention {
                    Intervention::None => {}
                    Intervention::Replace(feed) => {
                        if spent < budget {
                            check_feed(config, round, &feed)?;
                            delivery = Reception {
                                origin: match feed.declared {
                                    Some(m) => Origin::Blend(m),
                                    None => Origin::Junk,
                                },
                                value: feed.value,
                                sender_tag: t.tag,
                            };
                            spent += 1;
                            cost = 1;
                            applied = Applied::Replaced(listener);
                        } else {
                            dropped = true;
                        }
                    }
                    Intervention::FeedBoth { .. } => dropped = true,
                }
                match listener {
                    Side::Alice => to_alice = Some(delivery),
                    Side::Bob => to_bob = Some(delivery),
                }
            }
            (RoundAction::Listen, RoundAction::Listen) => match intervention {
                Intervention::FeedBoth { alice: fa, bob: fb } => {
                    check_feed(config, round, &fa)?;
                    check_feed(config, round, &fb)?;
                    let as_delivery = |f: Feed| Reception {
                        origin: match f.declared {
                            Some(m) => Origin::Blend(m),
                            None => Origin::Junk,
                        },
                        value: f.value,
                        sender_tag: None,
                    };
                    to_alice = Some(as_delivery(fa));
                    to_bob = Some(as_delivery(fb));
                    applied = Applied::FedBoth;
                }
                other => {
                    dropped = !matches!(other, Intervention::None);
                    to_alice = Some(default_feed(config.spec.mode));
                    to_bob = Some(default_feed(config.spec.mode));
                }
            },
        }

        if dropped {
            dropped_total += 1;
        }
        prev_alice = to_alice.clone();
        prev_bob = to_bob.clone();
        records.push(RoundRecord {
            round,
            alice: a_act,
            bob: b_act,
            applied,
            dropped,
            to_alice,
            to_bob,
            cost,
        });
    }

    let alice_output = alice.finish(prev_alice.as_ref());
    let bob_output = bob.finish(prev_bob.as_ref());
    Ok(SessionResult {
        records,
        budget,
        cost_total: spent,
        dropped_interventions: dropped_total,
        alice_output,
        bob_output,
    })
}
