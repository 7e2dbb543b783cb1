//! Offline cultivation of scheme parties.
//!
//! Attack strategies replay the scheme's own factories in private worlds
//! to learn how a party behaves before the live session starts. A
//! [`Dummy`] is one such party driven round by round; the helpers below
//! wire dummies together in the couplings the attacks need. Nothing here
//! touches live party state: everything is rebuilt from `(input, seed)`.

use crate::channel::{
    Delivered, Origin, PartyFactory, PartyInput, PartyOutput, Reception, RoundAction,
};
use crate::util::derive_seed;

/// One simulated party, driven outside any live session. The reception
/// queued by [`Dummy::feed`] is handed over at the next [`Dummy::act`],
/// mirroring the engine's delivery timing.
pub struct Dummy {
    party: Box<dyn crate::channel::Party>,
    pending: Option<Reception>,
    /// Every action the dummy has committed, in round order.
    pub actions: Vec<RoundAction>,
    /// How many of those actions were listens.
    pub listens: usize,
}

impl Dummy {
    pub fn spawn(factory: &dyn PartyFactory, input: &PartyInput, seed: u64) -> Dummy {
        Dummy {
            party: factory.spawn(input, seed),
            pending: None,
            actions: Vec::new(),
            listens: 0,
        }
    }

    /// Commit the next round's action.
    pub fn act(&mut self) -> RoundAction {
        let pending = self.pending.take();
        let action = self.party.act(pending.as_ref());
        if !action.is_transmit() {
            self.listens += 1;
        }
        self.actions.push(action.clone());
        action
    }

    /// Queue what the dummy receives this round; it sees it next act.
    pub fn feed(&mut self, value: Delivered, sender_tag: Option<u64>) {
        self.pending = Some(Reception {
            value,
            origin: Origin::Junk,
            sender_tag,
        });
    }

    /// Hand over the leftover reception and collect the output.
    pub fn finish(mut self) -> PartyOutput {
        let pending = self.pending.take();
        self.party.finish(pending.as_ref())
    }
}

/// The value a script put on the channel in `round`: its transmitted
/// symbol, or a scalar zero when it listened (the channel's own junk
/// default for rounds nobody fills).
pub fn script_symbol(script: &[RoundAction], round: usize) -> Delivered {
    match script.get(round) {
        Some(RoundAction::Transmit(t)) => Delivered::Sym(t.symbol.clone()),
        _ => Delivered::scalar(0),
    }
}

/// Drive one party for `rounds` rounds, feeding every listen the same
/// value. Returns the committed script and the listen count.
pub fn drive_alone(
    factory: &dyn PartyFactory,
    input: &PartyInput,
    seed: u64,
    rounds: usize,
    fill: Delivered,
) -> (Vec<RoundAction>, usize) {
    let mut dummy = Dummy::spawn(factory, input, seed);
    for _ in 0..rounds {
        let action = dummy.act();
        if !action.is_transmit() {
            dummy.feed(fill.clone(), None);
        }
    }
    (dummy.actions, dummy.listens)
}

/// The four coupled pattern worlds behind the two-sevenths attack.
///
/// `a0`/`b0` hold input 0 and live in their patterned worlds: the first
/// `boundary` symbols each hears alone come from the counterpart holding
/// 0, every later one from the counterpart holding 1. `a1`/`b1` hold
/// input 1 and face the patterned zero-holders directly. The `x_a`/`x_b`
/// totals are the zero-holders' listen counts, the quantity the attack
/// gambles on.
pub struct Quad {
    pub a0: Vec<RoundAction>,
    pub b0: Vec<RoundAction>,
    pub a1: Vec<RoundAction>,
    pub b1: Vec<RoundAction>,
    pub x_a: usize,
    pub x_b: usize,
}

/// Cultivate the four pattern worlds in lockstep. Feeds computed in
/// round `r` reference actions of the same round only, so there is no
/// circularity: actions depend on feeds from earlier rounds alone.
pub fn cultivate_quad(
    alice: &dyn PartyFactory,
    bob: &dyn PartyFactory,
    a_inputs: (&PartyInput, &PartyInput),
    b_inputs: (&PartyInput, &PartyInput),
    rounds: usize,
    boundary: usize,
    seed: u64,
) -> Quad {
    let mut a0 = Dummy::spawn(alice, a_inputs.0, derive_seed(seed, 10, 0));
    let mut b0 = Dummy::spawn(bob, b_inputs.0, derive_seed(seed, 10, 1));
    let mut a1 = Dummy::spawn(alice, a_inputs.1, derive_seed(seed, 10, 2));
    let mut b1 = Dummy::spawn(bob, b_inputs.1, derive_seed(seed, 10, 3));
    let mut k_a = 0usize;
    let mut k_b = 0usize;

    for r in 0..rounds {
        let t_a0 = a0.act().is_transmit();
        let t_b0 = b0.act().is_transmit();
        let t_a1 = a1.act().is_transmit();
        let t_b1 = b1.act().is_transmit();

        // a0 hears b0 for its first `boundary` lone receptions, b1 after;
        // when its world has nobody transmitting, the feed follows the
        // one-holder's script (or the junk default).
        if !t_a0 {
            if t_b0 {
                k_a += 1;
                let from = if k_a <= boundary { &b0 } else { &b1 };
                let v = script_symbol(&from.actions, r);
                a0.feed(v, None);
            } else {
                a0.feed(script_symbol(&b1.actions, r), None);
            }
        }
        if !t_b0 {
            if t_a0 {
                k_b += 1;
                let from = if k_b <= boundary { &a0 } else { &a1 };
                let v = script_symbol(&from.actions, r);
                b0.feed(v, None);
            } else {
                b0.feed(script_symbol(&a1.actions, r), None);
            }
        }
        // b1 faces the patterned a0; a1 faces the patterned b0. Their
        // receptions are untouched, so they hear whatever their world's
        // counterpart puts on the channel.
        if !t_b1 {
            if t_a0 {
                b1.feed(script_symbol(&a0.actions, r), None);
            } else {
                b1.feed(script_symbol(&a1.actions, r), None);
            }
        }
        if !t_a1 {
            if t_b0 {
                a1.feed(script_symbol(&b0.actions, r), None);
            } else {
                a1.feed(script_symbol(&b1.actions, r), None);
            }
        }
    }

    Quad {
        x_a: a0.listens,
        x_b: b0.listens,
        a0: a0.actions,
        b0: b0.actions,
        a1: a1.actions,
        b1: b1.actions,
    }
}
