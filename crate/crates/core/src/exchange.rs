//! The exchange problem: each party holds an n-bit input and both must
//! learn the other's. Three schemes live here, one per threshold.
//!
//! * [`quarter_exchange`]: the non-adaptive baseline. Alice repeats her
//!   input for the first half, Bob for the second half, and each decodes
//!   by majority. Tolerates error rates below 1/4.
//! * [`two_sevenths_exchange`]: the adaptive scheme. Repetition phases fill
//!   6/7 of the rounds; each party then estimates how corrupted its
//!   reception was and spends the last 1/7 either re-sending its own input
//!   (estimate small: the counterpart may be in trouble) or listening
//!   (estimate large: the party itself needs the extra redundancy). The
//!   corruption budget cannot push both estimates past the threshold, so
//!   the tail is never contended. Tolerates rates below 2/7.
//! * [`two_thirds_exchange`]: one-symbol exchange over an erasure channel.
//!   Three equal parts: Alice repeats her symbol, Bob repeats his, and in
//!   the third part exactly the parties that already heard something speak
//!   again. Tolerates erasure rates below 2/3.

use std::sync::Arc;

use thiserror::Error;

use crate::canonical::Side;
use crate::channel::{
    ChannelSpec, Decoded, DecodeStats, Mode, Party, PartyFactory, PartyInput, PartyOutput,
    Reception, RoundAction,
};
use crate::util::ceil_ratio;

#[derive(Debug, Error, PartialEq)]
pub enum ExchangeError {
    #[error("input width must be 1..=32 bits, got {0}")]
    BadWidth(usize),
    #[error("slack {0} is out of range for this scheme")]
    BadSlack(f64),
    #[error("slack {0} must divide 1 into a whole number of rounds")]
    NotUnitFraction(f64),
}

/// A ready-to-run exchange scheme: channel shape plus both party factories.
pub struct ExchangeScheme {
    pub name: &'static str,
    pub bits: usize,
    pub channel: ChannelSpec,
    pub alice: Arc<dyn PartyFactory>,
    pub bob: Arc<dyn PartyFactory>,
    /// The error rate the scheme is built to survive (exclusive).
    pub tolerance: f64,
}

impl ExchangeScheme {
    pub fn factory(&self, side: Side) -> &Arc<dyn PartyFactory> {
        match side {
            Side::Alice => &self.alice,
            Side::Bob => &self.bob,
        }
    }
}

fn read_bits(input: &PartyInput, bits: usize) -> u64 {
    match input {
        PartyInput::Bits { value, len } => {
            assert_eq!(*len, bits, "input width mismatch");
            assert!(*value < (1u64 << bits), "input exceeds its width");
            *value
        }
        _ => panic!("exchange parties take bit-string inputs"),
    }
}

/// Reception values fold to the transmitted scalar, or to a sentinel that
/// matches no codeword symbol (erasures, malformed words).
fn scalar_or_sentinel(r: &Reception) -> u64 {
    r.value.as_scalar().unwrap_or(u64::MAX)
}

fn hamming(word: &[u64], symbol: u64) -> u64 {
    word.iter().filter(|&&w| w != symbol).count() as u64
}

/// Distance of `word` to the nearest constant word, i.e. the repetition
/// codeword it best matches. Ties go to the smallest symbol.
fn nearest_constant(word: &[u64], alphabet: u64) -> (u64, u64) {
    let mut best = (0u64, u64::MAX);
    for sym in 0..alphabet {
        let d = hamming(word, sym);
        if d < best.1 {
            best = (sym, d);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Quarter baseline.

/// Phase layout of the non-adaptive baseline: `half` rounds of Alice
/// repeating her input, then `half` of Bob.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct QuarterPlan {
    pub bits: usize,
    pub half: usize,
    pub rounds: usize,
}

/// Non-adaptive exchange at rate budget 1/4 - slack.
pub fn quarter_exchange(bits: usize, slack: f64) -> Result<ExchangeScheme, ExchangeError> {
    if !(1..=32).contains(&bits) {
        return Err(ExchangeError::BadWidth(bits));
    }
    if !(slack > 0.0 && slack < 0.25) {
        return Err(ExchangeError::BadSlack(slack));
    }
    let half = ceil_ratio(bits as f64, slack);
    let plan = QuarterPlan {
        bits,
        half,
        rounds: 2 * half,
    };
    let mut schedule = vec![Side::Alice; half];
    schedule.extend(vec![Side::Bob; half]);
    Ok(ExchangeScheme {
        name: "exchange-quarter",
        bits,
        channel: ChannelSpec {
            rounds: plan.rounds,
            alphabet_size: 1 << bits,
            mode: Mode::Corruption,
            schedule: Some(schedule),
            message_size_limit: 1,
        },
        alice: Arc::new(QuarterFactory {
            plan,
            side: Side::Alice,
        }),
        bob: Arc::new(QuarterFactory {
            plan,
            side: Side::Bob,
        }),
        tolerance: 0.25 - slack,
    })
}

struct QuarterFactory {
    plan: QuarterPlan,
    side: Side,
}

impl PartyFactory for QuarterFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        Box::new(QuarterParty {
            plan: self.plan,
            side: self.side,
            value: read_bits(input, self.plan.bits),
            round: 0,
            heard: Vec::new(),
        })
    }
}

struct QuarterParty {
    plan: QuarterPlan,
    side: Side,
    value: u64,
    round: usize,
    heard: Vec<u64>,
}

impl QuarterParty {
    fn note(&mut self, prev: Option<&Reception>) {
        if let Some(r) = prev {
            self.heard.push(scalar_or_sentinel(r));
        }
    }
}

impl Party for QuarterParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.note(prev);
        let r = self.round;
        self.round += 1;
        let my_turn = match self.side {
            Side::Alice => r < self.plan.half,
            Side::Bob => r >= self.plan.half,
        };
        if my_turn {
            RoundAction::send_scalar(self.value)
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.note(last);
        let (sym, dist) = nearest_constant(&self.heard, 1 << self.plan.bits);
        PartyOutput {
            decoded: Decoded::Bits {
                value: sym,
                len: self.plan.bits,
            },
            rule_triggered: None,
            stats: DecodeStats {
                estimate: Some(dist),
                ..DecodeStats::default()
            },
            flags: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Two-sevenths scheme.

/// Phase layout of the adaptive exchange scheme. All boundaries are exact
/// multiples of `rounds / 7`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TwoSeventhsPlan {
    pub bits: usize,
    /// Rounds per seventh; also the estimate threshold.
    pub seventh: usize,
    pub rounds: usize,
    /// End of Alice's repetition phase: `3 * seventh`.
    pub alice_end: usize,
    /// End of Bob's repetition phase: `6 * seventh`.
    pub bob_end: usize,
}

impl TwoSeventhsPlan {
    pub fn new(bits: usize, slack: f64) -> Result<TwoSeventhsPlan, ExchangeError> {
        if !(1..=32).contains(&bits) {
            return Err(ExchangeError::BadWidth(bits));
        }
        if !(slack > 0.0 && slack < 2.0 / 7.0) {
            return Err(ExchangeError::BadSlack(slack));
        }
        let seventh = ceil_ratio(bits as f64, slack);
        Ok(TwoSeventhsPlan {
            bits,
            seventh,
            rounds: 7 * seventh,
            alice_end: 3 * seventh,
            bob_end: 6 * seventh,
        })
    }

    /// The estimate threshold: commit early iff the received repetition
    /// block sits strictly closer than one seventh of the rounds.
    pub fn threshold(&self) -> u64 {
        self.seventh as u64
    }
}

/// Adaptive exchange at rate budget 2/7 - slack.
pub fn two_sevenths_exchange(bits: usize, slack: f64) -> Result<ExchangeScheme, ExchangeError> {
    let plan = TwoSeventhsPlan::new(bits, slack)?;
    Ok(ExchangeScheme {
        name: "exchange-two-sevenths",
        bits,
        channel: ChannelSpec {
            rounds: plan.rounds,
            alphabet_size: 1 << bits,
            mode: Mode::Corruption,
            schedule: None,
            message_size_limit: 1,
        },
        alice: Arc::new(TwoSeventhsFactory {
            plan,
            side: Side::Alice,
        }),
        bob: Arc::new(TwoSeventhsFactory {
            plan,
            side: Side::Bob,
        }),
        tolerance: 2.0 / 7.0 - slack,
    })
}

struct TwoSeventhsFactory {
    plan: TwoSeventhsPlan,
    side: Side,
}

impl PartyFactory for TwoSeventhsFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        Box::new(TwoSeventhsParty {
            plan: self.plan,
            side: self.side,
            value: read_bits(input, self.plan.bits),
            round: 0,
            heard: Vec::new(),
            estimate: None,
            committed: None,
        })
    }
}

struct TwoSeventhsParty {
    plan: TwoSeventhsPlan,
    side: Side,
    value: u64,
    round: usize,
    /// Phase receptions first, then tail receptions appended.
    heard: Vec<u64>,
    estimate: Option<u64>,
    /// Early decode, fixed at the tail boundary when the estimate is small.
    committed: Option<u64>,
}

impl TwoSeventhsParty {
    fn note(&mut self, prev: Option<&Reception>) {
        if let Some(r) = prev {
            self.heard.push(scalar_or_sentinel(r));
        }
    }

    /// Runs once, at the first tail round: estimate the corruption of the
    /// repetition block and commit early iff it is under the threshold.
    fn decide(&mut self) {
        if self.estimate.is_some() {
            return;
        }
        let (sym, dist) = nearest_constant(&self.heard, 1 << self.plan.bits);
        self.estimate = Some(dist);
        if dist < self.plan.threshold() {
            self.committed = Some(sym);
        }
    }
}

impl Party for TwoSeventhsParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.note(prev);
        let r = self.round;
        self.round += 1;
        let (my_phase, other_phase) = match self.side {
            Side::Alice => (r < self.plan.alice_end, r >= self.plan.alice_end && r < self.plan.bob_end),
            Side::Bob => (
                r >= self.plan.alice_end && r < self.plan.bob_end,
                r < self.plan.alice_end,
            ),
        };
        if my_phase {
            return RoundAction::send_scalar(self.value);
        }
        if other_phase {
            return RoundAction::Listen;
        }
        // Tail.
        self.decide();
        if self.committed.is_some() {
            RoundAction::send_scalar(self.value)
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.note(last);
        self.decide();
        let value = match self.committed {
            Some(v) => v,
            // Tail listener: decode the repetition block stretched over
            // phase plus tail receptions.
            None => nearest_constant(&self.heard, 1 << self.plan.bits).0,
        };
        PartyOutput {
            decoded: Decoded::Bits {
                value,
                len: self.plan.bits,
            },
            rule_triggered: Some(self.committed.is_some()),
            stats: DecodeStats {
                estimate: self.estimate,
                ..DecodeStats::default()
            },
            flags: Vec::new(),
        }
    }
}

// ---------------------------------------------------------------------------
// Two-thirds erasure scheme.

/// Phase layout of the erasure exchange: three parts of `part` rounds.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TwoThirdsPlan {
    pub part: usize,
    pub rounds: usize,
}

/// One-symbol exchange over the erasure channel at rate budget
/// 2/3 - slack, where `slack` must be 1/k for a whole k.
pub fn two_thirds_exchange(slack: f64) -> Result<ExchangeScheme, ExchangeError> {
    if !(slack > 0.0 && slack < 2.0 / 3.0) {
        return Err(ExchangeError::BadSlack(slack));
    }
    let part_f = 1.0 / slack;
    let part = part_f.round() as usize;
    if part == 0 || (part_f - part as f64).abs() > 1e-6 {
        return Err(ExchangeError::NotUnitFraction(slack));
    }
    let plan = TwoThirdsPlan {
        part,
        rounds: 3 * part,
    };
    Ok(ExchangeScheme {
        name: "exchange-two-thirds",
        bits: 1,
        channel: ChannelSpec {
            rounds: plan.rounds,
            alphabet_size: 2,
            mode: Mode::Erasure,
            schedule: None,
            message_size_limit: 1,
        },
        alice: Arc::new(TwoThirdsFactory {
            plan,
            side: Side::Alice,
        }),
        bob: Arc::new(TwoThirdsFactory {
            plan,
            side: Side::Bob,
        }),
        tolerance: 2.0 / 3.0 - slack,
    })
}

struct TwoThirdsFactory {
    plan: TwoThirdsPlan,
    side: Side,
}

impl PartyFactory for TwoThirdsFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        let value = match input {
            PartyInput::Symbol(v) => {
                assert!(*v < 2, "two-thirds exchange swaps single bits");
                *v
            }
            PartyInput::Bits { value, len: 1 } => *value,
            _ => panic!("two-thirds exchange takes a one-bit input"),
        };
        Box::new(TwoThirdsParty {
            plan: self.plan,
            side: self.side,
            value,
            round: 0,
            heard: None,
            speaks_tail: None,
        })
    }
}

struct TwoThirdsParty {
    plan: TwoThirdsPlan,
    side: Side,
    value: u64,
    round: usize,
    /// First non-erased reception, if any.
    heard: Option<u64>,
    /// Frozen at the part-three boundary: speak iff something was heard in
    /// the first two parts.
    speaks_tail: Option<bool>,
}

impl TwoThirdsParty {
    fn note(&mut self, prev: Option<&Reception>) {
        if let Some(r) = prev {
            if self.heard.is_none() {
                if let Some(v) = r.value.as_scalar() {
                    self.heard = Some(v);
                }
            }
        }
    }
}

impl Party for TwoThirdsParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.note(prev);
        let r = self.round;
        self.round += 1;
        let part = r / self.plan.part;
        if part == 2 && self.speaks_tail.is_none() {
            self.speaks_tail = Some(self.heard.is_some());
        }
        let mine = match (self.side, part) {
            (Side::Alice, 0) | (Side::Bob, 1) => true,
            (_, 2) => self.speaks_tail == Some(true),
            _ => false,
        };
        if mine {
            RoundAction::send_scalar(self.value)
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.note(last);
        PartyOutput {
            decoded: match self.heard {
                Some(v) => Decoded::Symbol(v),
                None => Decoded::Nothing,
            },
            rule_triggered: Some(self.heard.is_some()),
            stats: DecodeStats::default(),
            flags: Vec::new(),
        }
    }
}
