//! Adversary strategies.
//!
//! The channel engine runs any [`Adversary`]; this module collects the
//! reusable ones. [`Uniform`] and [`PrefixBurst`] are budget-spending
//! noise for sweeps, [`OneSided`] and [`PersonalitySwap`] concentrate on
//! one party, [`Scripted`] replays explicit moves, and [`attacks`] holds
//! the rate-matched constructions that pin each scheme's tolerance from
//! above.
//!
//! Strategies learn everything they need in [`Adversary::begin`] from
//! the session info: config, inputs, and replayable party factories.
//! Live party randomness is out of reach by construction; anything a
//! strategy wants to know about behavior it measures on its own dummies
//! (see [`dummies`]).

pub mod attacks;
pub mod dummies;
pub mod report;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::{encode_edge_set, EdgeSet, Label, NodeId, Side};
use crate::channel::{
    Adversary, Delivered, Feed, Intervention, Mode, PartyInput, RoundAction, RoundContext,
    SessionInfo, Symbol, Transmission,
};

pub use attacks::{
    run_adaptive_list_attack, run_erasure_attack, run_list_block_attack, run_quarter_attack,
    run_third_attack, run_two_sevenths_attack, AdaptiveListAttack, AttackError, ErasureAttack,
    ListBlockAttack, QuarterAttack, ThirdAttack, TwoSeventhsAttack,
};
pub use report::{AttackReport, Claim, SettingRow};

/// The default way to ruin one delivery: erase it on erasure channels,
/// nudge scalars to the next symbol, and hand word channels a scalar
/// zero, which no well-formed word decodes from.
fn flip_feed(ctx: &RoundContext<'_>, t: &Transmission) -> Feed {
    match ctx.info.config.spec.mode {
        Mode::Erasure => Feed::erase(),
        Mode::Corruption => match t.symbol.as_scalar() {
            Some(v) => Feed::scalar((v + 1) % ctx.info.config.spec.alphabet_size),
            None => Feed::scalar(0),
        },
    }
}

/// Corrupts a uniformly random set of rounds, spending the whole budget
/// when the schedule gives it the chance.
///
/// Rounds are picked by a sequential draw (round `r` with probability
/// `needed / remaining`), which selects exactly `min(budget, rounds)`
/// rounds. A pick only turns into an intervention when the round has a
/// lone transmitter, so adaptive schemes that collide or idle make the
/// spend fall short; on fully scheduled sessions it is exact.
pub struct Uniform {
    rng: ChaCha8Rng,
    needed: u64,
    remaining: u64,
}

impl Uniform {
    pub fn new(seed: u64) -> Uniform {
        Uniform {
            rng: ChaCha8Rng::seed_from_u64(seed),
            needed: 0,
            remaining: 0,
        }
    }
}

impl Adversary for Uniform {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.needed = info.budget;
        self.remaining = info.config.spec.rounds as u64;
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        if self.remaining == 0 {
            return Intervention::None;
        }
        let picked = self.rng.gen_range(0..self.remaining) < self.needed;
        self.remaining -= 1;
        if !picked {
            return Intervention::None;
        }
        self.needed -= 1;
        match ctx.lone_transmitter() {
            Some((_, t)) => Intervention::Replace(flip_feed(ctx, t)),
            None => Intervention::None,
        }
    }
}

/// Spends the whole budget as early as possible from `from` on,
/// corrupting every lone transmission until the wallet is empty.
pub struct PrefixBurst {
    pub from: usize,
}

impl PrefixBurst {
    pub fn new(from: usize) -> PrefixBurst {
        PrefixBurst { from }
    }
}

impl Adversary for PrefixBurst {
    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        if ctx.round < self.from || ctx.budget_left == 0 {
            return Intervention::None;
        }
        match ctx.lone_transmitter() {
            Some((_, t)) => Intervention::Replace(flip_feed(ctx, t)),
            None => Intervention::None,
        }
    }
}

enum OneSidedFeed {
    Flip,
    Erase,
    Word(Vec<u64>),
}

/// Concentrates the whole budget on one party's receptions.
///
/// On edge-set channels the fed value is a fixed well-formed set walking
/// to a wrong leaf. It reproduces the target's own preferred edges, so
/// it merges without conflict and lands every corrupted round as a vote
/// for the same wrong leaf; scalar channels get the plain flip instead,
/// and erasure channels an erasure.
pub struct OneSided {
    target: Side,
    feed: OneSidedFeed,
}

impl OneSided {
    pub fn new(target: Side) -> OneSided {
        OneSided {
            target,
            feed: OneSidedFeed::Flip,
        }
    }

    pub fn target(&self) -> Side {
        self.target
    }
}

impl Adversary for OneSided {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        let spec = &info.config.spec;
        self.feed = if spec.mode == Mode::Erasure {
            OneSidedFeed::Erase
        } else if spec.message_size_limit > 1 {
            match wrong_leaf_word(
                info.alice_input,
                info.bob_input,
                self.target,
                spec.message_size_limit,
            ) {
                Some(word) => OneSidedFeed::Word(word),
                None => OneSidedFeed::Flip,
            }
        } else {
            OneSidedFeed::Flip
        };
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        if ctx.budget_left == 0 {
            return Intervention::None;
        }
        match ctx.lone_transmitter() {
            Some((sender, t)) if sender == self.target.other() => {
                let feed = match &self.feed {
                    OneSidedFeed::Flip => flip_feed(ctx, t),
                    OneSidedFeed::Erase => Feed::erase(),
                    OneSidedFeed::Word(w) => Feed {
                        value: Delivered::Sym(Symbol(w.clone())),
                        declared: None,
                    },
                };
                Intervention::Replace(feed)
            }
            _ => Intervention::None,
        }
    }
}

/// A complete root-to-leaf edge set that leaves the true path at the
/// first depth owned by the target's counterpart. Above the turn and at
/// every target-owned depth below it the set copies the inputs' own
/// preferred edges, so the target can merge it with everything it will
/// ever hold; the walk still ends at a wrong leaf because of the turn.
fn wrong_leaf_word(
    alice_input: &PartyInput,
    bob_input: &PartyInput,
    target: Side,
    limit: usize,
) -> Option<Vec<u64>> {
    let edges_of = |input: &PartyInput| match input {
        PartyInput::Edges {
            set,
            depth,
            branching,
        } => Some((set.clone(), *depth, *branching)),
        _ => None,
    };
    let (a_set, depth, branching) = edges_of(alice_input)?;
    let (b_set, b_depth, b_branching) = edges_of(bob_input)?;
    if b_depth != depth || b_branching != branching || branching < 2 {
        return None;
    }
    let union = a_set.union(&b_set)?;
    let target_set = match target {
        Side::Alice => &a_set,
        Side::Bob => &b_set,
    };
    let turn = if target.other() == Side::Alice { 0 } else { 1 };
    if turn >= depth {
        return None;
    }
    let mut fake = EdgeSet::new();
    let mut node = NodeId::root();
    for d in 0..depth {
        let label: Label = if d < turn {
            union.get(&node)?
        } else if d == turn {
            let truth = union.get(&node)?;
            ((truth as usize + 1) % branching) as Label
        } else if target.owns_depth(d) {
            target_set.get(&node)?
        } else {
            0
        };
        fake.insert(node.clone(), label);
        node = node.child(label);
    }
    let word = encode_edge_set(branching, &fake);
    if word.is_empty() || word.len() > limit {
        return None;
    }
    Some(word)
}

/// Replaces one party's world with a counterfeit counterpart.
///
/// A dummy counterpart is spawned from the real factory with a perturbed
/// input and kept in lockstep: it hears whatever the target transmits,
/// and whenever it speaks, the target hears it instead of the real
/// counterpart. With enough budget the target is talking to the dummy.
/// On erasure channels nothing can be forged, so the swap degenerates to
/// erasing the target's receptions.
pub struct PersonalitySwap {
    target: Side,
    seed: u64,
    dummy: Option<dummies::Dummy>,
    erase: bool,
}

impl PersonalitySwap {
    pub fn new(target: Side, seed: u64) -> PersonalitySwap {
        PersonalitySwap {
            target,
            seed,
            dummy: None,
            erase: false,
        }
    }
}

/// The nearest different input of the same shape: bit strings flip their
/// low bit, symbols step to the next one, edge sets rotate every label.
fn perturb_input(input: &PartyInput, alphabet: u64) -> PartyInput {
    match input {
        PartyInput::Bits { value, len } => PartyInput::Bits {
            value: value ^ 1,
            len: *len,
        },
        PartyInput::Symbol(v) => PartyInput::Symbol((v + 1) % alphabet),
        PartyInput::Edges {
            set,
            depth,
            branching,
        } => {
            let mut twisted = EdgeSet::new();
            for (node, label) in set.iter() {
                twisted.insert(node.clone(), ((*label as usize + 1) % *branching) as Label);
            }
            PartyInput::Edges {
                set: twisted,
                depth: *depth,
                branching: *branching,
            }
        }
    }
}

impl Adversary for PersonalitySwap {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.erase = info.config.spec.mode == Mode::Erasure;
        if self.erase {
            return;
        }
        let (factory, input) = match self.target {
            Side::Alice => (info.bob_factory, info.bob_input),
            Side::Bob => (info.alice_factory, info.alice_input),
        };
        let twisted = perturb_input(input, info.config.spec.alphabet_size);
        self.dummy = Some(dummies::Dummy::spawn(factory, &twisted, self.seed));
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        if self.erase {
            return match ctx.lone_transmitter() {
                Some((sender, _)) if sender == self.target.other() && ctx.budget_left > 0 => {
                    Intervention::Replace(Feed::erase())
                }
                _ => Intervention::None,
            };
        }
        let Some(dummy) = self.dummy.as_mut() else {
            return Intervention::None;
        };
        let dummy_action = dummy.act();
        let target_action = match self.target {
            Side::Alice => ctx.alice_action,
            Side::Bob => ctx.bob_action,
        };
        // The dummy's world: it hears the target's transmissions; when
        // both it and the target listen, its channel delivers junk.
        if let RoundAction::Transmit(t) = target_action {
            dummy.feed(Delivered::Sym(t.symbol.clone()), t.tag);
        } else if !dummy_action.is_transmit() {
            dummy.feed(Delivered::scalar(0), None);
        }
        let feed = match &dummy_action {
            RoundAction::Transmit(t) => Feed {
                value: Delivered::Sym(t.symbol.clone()),
                declared: t.tag,
            },
            RoundAction::Listen => return Intervention::None,
        };
        match ctx.lone_transmitter() {
            Some((sender, _)) if sender == self.target.other() && ctx.budget_left > 0 => {
                Intervention::Replace(feed)
            }
            None if ctx.both_listen() => {
                let zero = Feed::scalar(0);
                let (alice, bob) = match self.target {
                    Side::Alice => (feed, zero),
                    Side::Bob => (zero, feed),
                };
                Intervention::FeedBoth { alice, bob }
            }
            _ => Intervention::None,
        }
    }
}

/// Replays an explicit round-keyed script of moves. Moves that do not
/// fit their round are dropped by the engine like anyone else's.
pub struct Scripted {
    pub moves: BTreeMap<usize, Intervention>,
}

impl Scripted {
    pub fn new(moves: BTreeMap<usize, Intervention>) -> Scripted {
        Scripted { moves }
    }
}

impl Adversary for Scripted {
    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        self.moves.get(&ctx.round).cloned().unwrap_or_default()
    }
}
