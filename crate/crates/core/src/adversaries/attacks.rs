//! Rate-matched attack constructions.
//!
//! Each attack pins one scheme's tolerance from above: run at the budget
//! cap it makes two (or more) input settings produce the same reception
//! sequence for a targeted party, so no decoder can be right in all of
//! them. Everything a strategy needs it cultivates offline in `begin`
//! from the session info's replayable factories; the runner functions
//! pair the settings, compare the views value for value, and hand back
//! an [`AttackReport`] of what was measured rather than what was hoped.

use thiserror::Error;

use crate::canonical::Side;
use crate::channel::{
    run_session, Adversary, Delivered, EngineError, Feed, Intervention, Mode, NullAdversary,
    PartyInput, PartyOutput, RoundAction, RoundContext, Seeds, SessionInfo, SessionResult,
    SessionSpec,
};
use crate::channel::Decoded;
use crate::exchange::ExchangeScheme;
use crate::util::derive_seed;

use super::dummies::{cultivate_quad, drive_alone, script_symbol, Quad};
use super::report::{side_name, AttackReport, Claim, SettingRow};

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("attack needs a declared transmission schedule")]
    NotNonAdaptive,
    #[error("attack needs a scheme that chooses its rounds live")]
    NotAdaptive,
    #[error("attack runs on the erasure channel only")]
    NotErasure,
    #[error("attack does not fit this scheme: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn value_of(input: &PartyInput) -> Option<u64> {
    match input {
        PartyInput::Bits { value, .. } => Some(*value),
        PartyInput::Symbol(v) => Some(*v),
        PartyInput::Edges { .. } => None,
    }
}

/// The same input shape carrying a different value.
fn same_shape(input: &PartyInput, value: u64) -> Option<PartyInput> {
    match input {
        PartyInput::Bits { len, .. } => Some(PartyInput::Bits { value, len: *len }),
        PartyInput::Symbol(_) => Some(PartyInput::Symbol(value)),
        PartyInput::Edges { .. } => None,
    }
}

fn setting_label(x: u64, y: u64) -> String {
    format!("x={x} y={y}")
}

fn decoded_value(output: &PartyOutput) -> Option<u64> {
    match &output.decoded {
        Decoded::Bits { value, .. } => Some(*value),
        Decoded::Symbol(v) => Some(*v),
        _ => None,
    }
}

fn feed_from(script: &[RoundAction], round: usize) -> Feed {
    Feed {
        value: script_symbol(script, round),
        declared: None,
    }
}

fn side_script(result: &SessionResult, side: Side) -> Vec<RoundAction> {
    result
        .records
        .iter()
        .map(|r| match side {
            Side::Alice => r.alice.clone(),
            Side::Bob => r.bob.clone(),
        })
        .collect()
}

/// An offline session in the attacker's private world: same config and
/// factories as the live one, inputs of the attacker's choosing.
fn offline_session(
    info: &SessionInfo<'_>,
    alice_value: u64,
    bob_value: u64,
    seed: u64,
    adversary: &mut dyn Adversary,
) -> Option<SessionResult> {
    let spec = SessionSpec {
        config: info.config.clone(),
        alice: info.alice_factory,
        alice_input: same_shape(info.alice_input, alice_value)?,
        bob: info.bob_factory,
        bob_input: same_shape(info.bob_input, bob_value)?,
        seeds: Seeds {
            alice: derive_seed(seed, 2, 0),
            bob: derive_seed(seed, 2, 1),
            adversary: derive_seed(seed, 2, 2),
        },
    };
    run_session(&spec, adversary).ok()
}

/// One live setting. Party seeds are shared across a report's settings
/// so the only thing that varies between rows is the inputs.
fn run_setting(
    scheme: &ExchangeScheme,
    rate: f64,
    x: u64,
    y: u64,
    seed: u64,
    adversary: &mut dyn Adversary,
) -> Result<SessionResult, AttackError> {
    let spec = SessionSpec {
        config: scheme.channel.config(rate)?,
        alice: scheme.alice.as_ref(),
        alice_input: PartyInput::Bits {
            value: x,
            len: scheme.bits,
        },
        bob: scheme.bob.as_ref(),
        bob_input: PartyInput::Bits {
            value: y,
            len: scheme.bits,
        },
        seeds: Seeds {
            alice: derive_seed(seed, 1, 0),
            bob: derive_seed(seed, 1, 1),
            adversary: derive_seed(seed, 1, 2),
        },
    };
    Ok(run_session(&spec, adversary)?)
}

fn all_identical(views: &[Vec<Delivered>]) -> bool {
    views.windows(2).all(|w| w[0] == w[1])
}

// ---------------------------------------------------------------------
// Quarter: two counterfeit windows against a scheduled exchange.
// ---------------------------------------------------------------------

/// Replaces the target's lone receptions numbered `lo..=hi` (1-based)
/// with a script's round symbols.
struct CountWindow {
    target: Side,
    lo: usize,
    hi: usize,
    script: Vec<RoundAction>,
    count: usize,
}

impl CountWindow {
    fn step(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        let Some((sender, _)) = ctx.lone_transmitter() else {
            return Intervention::None;
        };
        if sender != self.target.other() {
            return Intervention::None;
        }
        self.count += 1;
        if self.count >= self.lo && self.count <= self.hi {
            Intervention::Replace(feed_from(&self.script, ctx.round))
        } else {
            Intervention::None
        }
    }
}

impl Adversary for CountWindow {
    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        self.step(ctx)
    }
}

/// The quarter-budget confusion against scheduled exchanges.
///
/// The target is a party scheduled to listen exactly half the rounds.
/// A quarter budget covers half its receptions, so the adversary can
/// counterfeit one of the two halves: against a counterpart holding 1 it
/// plays a cultivated holding-0 script over the first window; against a
/// counterpart holding 0 it plays a holding-1 script (cultivated with
/// its own first window counterfeited the same way) over the second.
/// Both settings land on the same view: first window looking like 0,
/// second looking like 1.
pub struct QuarterAttack {
    seed: u64,
    rule: Option<CountWindow>,
}

impl QuarterAttack {
    pub fn new(seed: u64) -> QuarterAttack {
        QuarterAttack { seed, rule: None }
    }

    fn target_of(schedule: &[Side]) -> (Side, usize) {
        let alice_listens = schedule.iter().filter(|s| **s == Side::Bob).count();
        if 2 * alice_listens >= schedule.len() {
            (Side::Alice, alice_listens)
        } else {
            (Side::Bob, schedule.len() - alice_listens)
        }
    }
}

impl Adversary for QuarterAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.rule = None;
        let spec = &info.config.spec;
        let Some(schedule) = &spec.schedule else {
            return;
        };
        if spec.mode != Mode::Corruption || spec.rounds == 0 || spec.rounds % 4 != 0 {
            return;
        }
        let window = spec.rounds / 4;
        let (target, listens) = Self::target_of(schedule);
        if listens != 2 * window {
            return;
        }
        let (x, y) = match target {
            Side::Alice => (value_of(info.alice_input), value_of(info.bob_input)),
            Side::Bob => (value_of(info.bob_input), value_of(info.alice_input)),
        };
        let (Some(x), Some(y)) = (x, y) else {
            return;
        };
        let worlds = |counterpart: u64| match target {
            Side::Alice => (x, counterpart),
            Side::Bob => (counterpart, x),
        };
        let (a0, b0) = worlds(0);
        let Some(run0) = offline_session(info, a0, b0, derive_seed(self.seed, 3, 0), &mut NullAdversary)
        else {
            return;
        };
        let script0 = side_script(&run0, target.other());
        if y != 0 {
            // Live counterpart holds 1: counterfeit the first window.
            self.rule = Some(CountWindow {
                target,
                lo: 1,
                hi: window,
                script: script0,
                count: 0,
            });
            return;
        }
        // Live counterpart holds 0: counterfeit the second window with a
        // holding-1 script whose own first window was already faked.
        let mut inner = CountWindow {
            target,
            lo: 1,
            hi: window,
            script: script0,
            count: 0,
        };
        let (a1, b1) = worlds(1);
        let Some(run1) = offline_session(info, a1, b1, derive_seed(self.seed, 3, 1), &mut inner)
        else {
            return;
        };
        self.rule = Some(CountWindow {
            target,
            lo: window + 1,
            hi: 2 * window,
            script: side_script(&run1, target.other()),
            count: 0,
        });
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        match self.rule.as_mut() {
            Some(rule) => rule.step(ctx),
            None => Intervention::None,
        }
    }
}

pub fn run_quarter_attack(
    scheme: &ExchangeScheme,
    x: u64,
    rate: f64,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    let schedule = spec.schedule.as_ref().ok_or(AttackError::NotNonAdaptive)?;
    if spec.mode != Mode::Corruption {
        return Err(AttackError::Mismatch("needs a corruption channel".into()));
    }
    if spec.rounds == 0 || spec.rounds % 4 != 0 {
        return Err(AttackError::Mismatch(format!(
            "{} rounds do not split into quarters",
            spec.rounds
        )));
    }
    let window = spec.rounds / 4;
    let (target, listens) = QuarterAttack::target_of(schedule);
    if listens != 2 * window {
        return Err(AttackError::Mismatch(
            "no party is scheduled to listen exactly half the rounds".into(),
        ));
    }

    let mut rows = Vec::new();
    let mut views = Vec::new();
    for (i, y) in [0u64, 1].into_iter().enumerate() {
        let (a, b) = match target {
            Side::Alice => (x, y),
            Side::Bob => (y, x),
        };
        let mut adversary = QuarterAttack::new(derive_seed(seed, 4, i as u64));
        let result = run_setting(scheme, rate, a, b, seed, &mut adversary)?;
        let decoded_ok = Some(decoded_value(result.output(target)) == Some(y));
        rows.push(SettingRow::from_session(
            setting_label(a, b),
            target,
            &result,
            decoded_ok,
        ));
        views.push(result.view(target));
    }
    let views_identical = all_identical(&views);
    Ok(AttackReport {
        attack: "quarter-attack",
        scheme: scheme.name.to_string(),
        rounds: spec.rounds,
        gamble: format!(
            "{} is scheduled to listen exactly half the rounds",
            side_name(target)
        ),
        gamble_holds: true,
        rows,
        claims: vec![Claim {
            target,
            settings: vec![0, 1],
            views_identical,
        }],
        notes: vec![format!(
            "counterfeit windows cover the target's lone receptions 1..={window} and {}..={}",
            window + 1,
            2 * window
        )],
    })
}

// ---------------------------------------------------------------------
// Third: connect counterfeit counterparts over two thirds of the run.
// ---------------------------------------------------------------------

/// Connects a scripted counterpart to the target over one stretch of the
/// session: early (rounds before `split`) or late (the rest). Lone
/// receptions are replaced; rounds where both parties listen feed the
/// target the script's symbol for free.
struct ThirdRule {
    target: Side,
    split: usize,
    early: bool,
    script: Vec<RoundAction>,
}

impl ThirdRule {
    fn step(&self, ctx: &RoundContext<'_>) -> Intervention {
        if (ctx.round < self.split) != self.early {
            return Intervention::None;
        }
        match ctx.lone_transmitter() {
            Some((sender, _)) if sender == self.target.other() => {
                Intervention::Replace(feed_from(&self.script, ctx.round))
            }
            None if ctx.both_listen() => {
                let mine = feed_from(&self.script, ctx.round);
                let zero = Feed::scalar(0);
                let (alice, bob) = match self.target {
                    Side::Alice => (mine, zero),
                    Side::Bob => (zero, mine),
                };
                Intervention::FeedBoth { alice, bob }
            }
            _ => Intervention::None,
        }
    }
}

impl Adversary for ThirdRule {
    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        self.step(ctx)
    }
}

/// The one-third confusion.
///
/// Against a counterpart holding 1, the adversary spends its budget on
/// the first two thirds of the session, connecting a cultivated
/// holding-0 script to the target. Against a counterpart holding 0 it
/// leaves the early stretch alone and connects a holding-1 script (whose
/// world had the same early counterfeit) over the final third, which a
/// third of the rounds always affords. Either way the target lives
/// through the same session: 0-ish early, 1-ish late.
pub struct ThirdAttack {
    seed: u64,
    rule: Option<ThirdRule>,
}

impl ThirdAttack {
    pub fn new(seed: u64) -> ThirdAttack {
        ThirdAttack { seed, rule: None }
    }
}

impl Adversary for ThirdAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.rule = None;
        if info.config.spec.mode != Mode::Corruption {
            return;
        }
        let rounds = info.config.spec.rounds;
        let split = (2 * rounds + 2) / 3;
        let target = Side::Alice;
        let (Some(x), Some(y)) = (value_of(info.alice_input), value_of(info.bob_input)) else {
            return;
        };
        let Some(run0) = offline_session(info, x, 0, derive_seed(self.seed, 3, 0), &mut NullAdversary)
        else {
            return;
        };
        let script0 = side_script(&run0, Side::Bob);
        if y != 0 {
            self.rule = Some(ThirdRule {
                target,
                split,
                early: true,
                script: script0,
            });
            return;
        }
        let mut inner = ThirdRule {
            target,
            split,
            early: true,
            script: script0,
        };
        let Some(run1) = offline_session(info, x, 1, derive_seed(self.seed, 3, 1), &mut inner)
        else {
            return;
        };
        self.rule = Some(ThirdRule {
            target,
            split,
            early: false,
            script: side_script(&run1, Side::Bob),
        });
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        match &self.rule {
            Some(rule) => rule.step(ctx),
            None => Intervention::None,
        }
    }
}

pub fn run_third_attack(
    scheme: &ExchangeScheme,
    x: u64,
    rate: f64,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    if spec.mode != Mode::Corruption {
        return Err(AttackError::Mismatch("needs a corruption channel".into()));
    }
    let rounds = spec.rounds;
    let split = (2 * rounds + 2) / 3;
    let target = Side::Alice;

    let mut rows = Vec::new();
    let mut views = Vec::new();
    let mut early_listens = 0usize;
    for (i, y) in [0u64, 1].into_iter().enumerate() {
        let mut adversary = ThirdAttack::new(derive_seed(seed, 4, i as u64));
        let result = run_setting(scheme, rate, x, y, seed, &mut adversary)?;
        if y == 1 {
            // The early counterfeit pays one unit per lone reception the
            // target takes before the split; that count is the gamble.
            early_listens = result
                .records
                .iter()
                .filter(|r| {
                    r.round < split && r.bob.is_transmit() && !r.alice.is_transmit()
                })
                .count();
        }
        let decoded_ok = Some(decoded_value(result.output(target)) == Some(y));
        rows.push(SettingRow::from_session(
            setting_label(x, y),
            target,
            &result,
            decoded_ok,
        ));
        views.push(result.view(target));
    }
    let views_identical = all_identical(&views);
    let design_budget = rounds / 3;
    Ok(AttackReport {
        attack: "third-attack",
        scheme: scheme.name.to_string(),
        rounds,
        gamble: format!(
            "alice takes at most {design_budget} lone receptions before round {split} (measured {early_listens})"
        ),
        gamble_holds: early_listens <= design_budget,
        rows,
        claims: vec![Claim {
            target,
            settings: vec![0, 1],
            views_identical,
        }],
        notes: vec![format!(
            "the final {} rounds never cost more than a third of the session",
            rounds - split
        )],
    })
}

// ---------------------------------------------------------------------
// Two sevenths: pattern worlds for adaptive exchanges.
// ---------------------------------------------------------------------

/// Holds every zero-holding live party to its pattern: the first
/// `boundary` symbols it hears alone look like a counterpart holding 0,
/// every later one like a counterpart holding 1. Matching symbols ride
/// for free; rounds where both parties listen feed the holding-1
/// scripts, also free.
struct PatternRule {
    boundary: usize,
    alice_value: u64,
    bob_value: u64,
    quad: Quad,
    k_a: usize,
    k_b: usize,
}

impl PatternRule {
    fn step(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        if let Some((sender, t)) = ctx.lone_transmitter() {
            let listener = sender.other();
            let (value, k, zero_script, one_script) = match listener {
                Side::Alice => (
                    self.alice_value,
                    &mut self.k_a,
                    &self.quad.b0,
                    &self.quad.b1,
                ),
                Side::Bob => (
                    self.bob_value,
                    &mut self.k_b,
                    &self.quad.a0,
                    &self.quad.a1,
                ),
            };
            if value != 0 {
                return Intervention::None;
            }
            *k += 1;
            let want = if *k <= self.boundary {
                script_symbol(zero_script, ctx.round)
            } else {
                script_symbol(one_script, ctx.round)
            };
            if Delivered::Sym(t.symbol.clone()) == want {
                Intervention::None
            } else {
                Intervention::Replace(Feed {
                    value: want,
                    declared: None,
                })
            }
        } else if ctx.both_listen() {
            if self.alice_value != 0 && self.bob_value != 0 {
                return Intervention::None;
            }
            let feed = |patterned: bool, one_script: &[RoundAction]| {
                if patterned {
                    Feed {
                        value: script_symbol(one_script, ctx.round),
                        declared: None,
                    }
                } else {
                    Feed::scalar(0)
                }
            };
            Intervention::FeedBoth {
                alice: feed(self.alice_value == 0, &self.quad.b1),
                bob: feed(self.bob_value == 0, &self.quad.a1),
            }
        } else {
            Intervention::None
        }
    }
}

/// The two-sevenths confusion against adaptive exchanges.
///
/// Four pattern worlds are cultivated in lockstep: each zero-holding
/// party hears a holding-0 counterpart for its first 2N/7 lone
/// receptions and a holding-1 counterpart afterwards. If such a party
/// listens at most 4N/7 rounds in its world (checked by sampling, taken
/// when it comes up in at least a third of the worlds), the live
/// enforcement of its pattern costs at most 2N/7 in every setting, and
/// the party cannot tell what its counterpart holds.
pub struct TwoSeventhsAttack {
    seed: u64,
    samples: usize,
    branch: Option<Side>,
    frac: f64,
    x_pattern: usize,
    rule: Option<PatternRule>,
}

impl TwoSeventhsAttack {
    pub fn new(seed: u64, samples: usize) -> TwoSeventhsAttack {
        TwoSeventhsAttack {
            seed,
            samples,
            branch: None,
            frac: 0.0,
            x_pattern: 0,
            rule: None,
        }
    }
}

impl Adversary for TwoSeventhsAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.rule = None;
        self.branch = None;
        let spec = &info.config.spec;
        if spec.mode != Mode::Corruption {
            return;
        }
        let rounds = spec.rounds;
        let boundary = 2 * rounds / 7;
        let cap = 4 * rounds / 7;
        let Some(a0_in) = same_shape(info.alice_input, 0) else {
            return;
        };
        let Some(a1_in) = same_shape(info.alice_input, 1) else {
            return;
        };
        let Some(b0_in) = same_shape(info.bob_input, 0) else {
            return;
        };
        let Some(b1_in) = same_shape(info.bob_input, 1) else {
            return;
        };
        let grow = |seed| {
            cultivate_quad(
                info.alice_factory,
                info.bob_factory,
                (&a0_in, &a1_in),
                (&b0_in, &b1_in),
                rounds,
                boundary,
                seed,
            )
        };
        let samples = self.samples.max(1);
        let mut hits_a = 0usize;
        let mut hits_b = 0usize;
        for s in 0..samples {
            let quad = grow(derive_seed(self.seed, 6, s as u64));
            if quad.x_a <= cap {
                hits_a += 1;
            }
            if quad.x_b <= cap {
                hits_b += 1;
            }
        }
        let frac_a = hits_a as f64 / samples as f64;
        let frac_b = hits_b as f64 / samples as f64;
        // When neither side's pattern is reliably light, press on with
        // alice anyway; the report will show whatever that yields.
        let branch = if frac_a >= 1.0 / 3.0 || frac_b < 1.0 / 3.0 {
            Side::Alice
        } else {
            Side::Bob
        };
        self.branch = Some(branch);
        self.frac = match branch {
            Side::Alice => frac_a,
            Side::Bob => frac_b,
        };
        let quad = grow(derive_seed(self.seed, 7, 0));
        self.x_pattern = match branch {
            Side::Alice => quad.x_a,
            Side::Bob => quad.x_b,
        };
        let (Some(alice_value), Some(bob_value)) =
            (value_of(info.alice_input), value_of(info.bob_input))
        else {
            return;
        };
        self.rule = Some(PatternRule {
            boundary,
            alice_value,
            bob_value,
            quad,
            k_a: 0,
            k_b: 0,
        });
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        match self.rule.as_mut() {
            Some(rule) => rule.step(ctx),
            None => Intervention::None,
        }
    }
}

pub fn run_two_sevenths_attack(
    scheme: &ExchangeScheme,
    rate: f64,
    seed: u64,
    samples: usize,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    if spec.schedule.is_some() {
        return Err(AttackError::NotAdaptive);
    }
    if spec.mode != Mode::Corruption {
        return Err(AttackError::Mismatch("needs a corruption channel".into()));
    }
    let rounds = spec.rounds;
    let config = spec.config(rate)?;
    let probe_a = PartyInput::Bits {
        value: 0,
        len: scheme.bits,
    };
    let probe_b = probe_a.clone();
    let info = SessionInfo {
        config: &config,
        budget: config.budget(),
        alice_input: &probe_a,
        bob_input: &probe_b,
        alice_factory: scheme.alice.as_ref(),
        bob_factory: scheme.bob.as_ref(),
    };
    let mut probe = TwoSeventhsAttack::new(seed, samples);
    probe.begin(&info);
    let target = probe
        .branch
        .ok_or_else(|| AttackError::Mismatch("pattern cultivation failed".into()))?;
    let cap = 4 * rounds / 7;

    let settings: [(u64, u64); 2] = match target {
        Side::Alice => [(0, 0), (0, 1)],
        Side::Bob => [(0, 0), (1, 0)],
    };
    let mut rows = Vec::new();
    let mut views = Vec::new();
    for (i, (x, y)) in settings.into_iter().enumerate() {
        let mut adversary = TwoSeventhsAttack::new(seed, samples);
        let result = run_setting(scheme, rate, x, y, derive_seed(seed, 8, i as u64), &mut adversary)?;
        let expected = match target {
            Side::Alice => y,
            Side::Bob => x,
        };
        let decoded_ok = Some(decoded_value(result.output(target)) == Some(expected));
        rows.push(SettingRow::from_session(
            setting_label(x, y),
            target,
            &result,
            decoded_ok,
        ));
        views.push(result.view(target));
    }
    let views_identical = all_identical(&views);
    Ok(AttackReport {
        attack: "two-sevenths-attack",
        scheme: scheme.name.to_string(),
        rounds,
        gamble: format!(
            "the patterned {} listens at most {} rounds (measured {}; light in {:.0}% of {} sampled worlds)",
            side_name(target),
            cap,
            probe.x_pattern,
            probe.frac * 100.0,
            samples.max(1),
        ),
        gamble_holds: probe.frac >= 1.0 / 3.0 && probe.x_pattern <= cap,
        rows,
        claims: vec![Claim {
            target,
            settings: vec![0, 1],
            views_identical,
        }],
        notes: vec![format!(
            "pattern boundary sits after {} lone receptions",
            2 * rounds / 7
        )],
    })
}

// ---------------------------------------------------------------------
// List block: silence the lesser speaker of a scheduled session.
// ---------------------------------------------------------------------

/// Replaces every lone transmission of one party with a constant.
struct BlankRule {
    speaker: Side,
    sigma: u64,
}

impl BlankRule {
    fn step(&self, ctx: &RoundContext<'_>) -> Intervention {
        match ctx.lone_transmitter() {
            Some((sender, _)) if sender == self.speaker => {
                Intervention::Replace(Feed::scalar(self.sigma))
            }
            _ => Intervention::None,
        }
    }
}

/// Blocks the lesser-scheduled speaker outright: with half the rounds as
/// budget, every one of its transmissions is replaced by the same
/// constant, so the other party's view carries no trace of its input.
pub struct ListBlockAttack {
    rule: Option<BlankRule>,
}

impl ListBlockAttack {
    pub fn new() -> ListBlockAttack {
        ListBlockAttack { rule: None }
    }

    fn speaker_of(schedule: &[Side]) -> Side {
        let alice_sends = schedule.iter().filter(|s| **s == Side::Alice).count();
        if 2 * alice_sends <= schedule.len() {
            Side::Alice
        } else {
            Side::Bob
        }
    }
}

impl Default for ListBlockAttack {
    fn default() -> Self {
        Self::new()
    }
}

impl Adversary for ListBlockAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.rule = None;
        let spec = &info.config.spec;
        if spec.mode != Mode::Corruption {
            return;
        }
        let Some(schedule) = &spec.schedule else {
            return;
        };
        self.rule = Some(BlankRule {
            speaker: Self::speaker_of(schedule),
            sigma: 0,
        });
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        match &self.rule {
            Some(rule) => rule.step(ctx),
            None => Intervention::None,
        }
    }
}

pub fn run_list_block_attack(
    scheme: &ExchangeScheme,
    rate: f64,
    seed: u64,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    let schedule = spec.schedule.as_ref().ok_or(AttackError::NotNonAdaptive)?;
    if spec.mode != Mode::Corruption {
        return Err(AttackError::Mismatch("needs a corruption channel".into()));
    }
    let speaker = ListBlockAttack::speaker_of(schedule);
    let observer = speaker.other();
    let speaks = schedule.iter().filter(|s| **s == speaker).count();

    let full = 1u64 << scheme.bits.min(32);
    let count = full.min(16);
    let mut rows = Vec::new();
    let mut views = Vec::new();
    for v in 0..count {
        let (x, y) = match speaker {
            Side::Alice => (v, 0),
            Side::Bob => (0, v),
        };
        let mut adversary = ListBlockAttack::new();
        let result = run_setting(scheme, rate, x, y, seed, &mut adversary)?;
        let decoded_ok = Some(decoded_value(result.output(observer)) == Some(v));
        rows.push(SettingRow::from_session(
            setting_label(x, y),
            observer,
            &result,
            decoded_ok,
        ));
        views.push(result.view(observer));
    }
    let views_identical = all_identical(&views);
    let mut notes = vec![format!(
        "every lone transmission of {} is replaced by the constant 0",
        side_name(speaker)
    )];
    if count < full {
        notes.push(format!("settings truncated to {count} of {full} inputs"));
    }
    Ok(AttackReport {
        attack: "list-block-attack",
        scheme: scheme.name.to_string(),
        rounds: spec.rounds,
        gamble: format!(
            "{} is scheduled to transmit at most half the rounds ({} of {})",
            side_name(speaker),
            speaks,
            spec.rounds
        ),
        gamble_holds: 2 * speaks <= spec.rounds,
        rows,
        claims: vec![Claim {
            target: observer,
            settings: (0..count as usize).collect(),
            views_identical,
        }],
        notes,
    })
}

// ---------------------------------------------------------------------
// Adaptive list: pin or blank, depending on who talks.
// ---------------------------------------------------------------------

enum AdaptiveListRule {
    /// The target talks a lot when fed a fixed string: feed it that
    /// string. Its receptions stop depending on the counterpart.
    Pin { target: Side, fill: u64 },
    /// The target talks little: replace its every lone transmission by a
    /// constant and deliver the same constant on shared silence. The
    /// counterpart's receptions stop depending on the target.
    Blank { target: Side, sigma: u64 },
}

impl AdaptiveListRule {
    fn step(&self, ctx: &RoundContext<'_>) -> Intervention {
        match self {
            AdaptiveListRule::Pin { target, fill } => match ctx.lone_transmitter() {
                Some((sender, t)) if sender == target.other() => {
                    if t.symbol.as_scalar() == Some(*fill) {
                        Intervention::None
                    } else {
                        Intervention::Replace(Feed::scalar(*fill))
                    }
                }
                None if ctx.both_listen() => {
                    let mine = Feed::scalar(*fill);
                    let zero = Feed::scalar(0);
                    let (alice, bob) = match target {
                        Side::Alice => (mine, zero),
                        Side::Bob => (zero, mine),
                    };
                    Intervention::FeedBoth { alice, bob }
                }
                _ => Intervention::None,
            },
            AdaptiveListRule::Blank { target, sigma } => match ctx.lone_transmitter() {
                Some((sender, _)) if sender == *target => {
                    Intervention::Replace(Feed::scalar(*sigma))
                }
                None if ctx.both_listen() => {
                    let mine = Feed::scalar(*sigma);
                    let zero = Feed::scalar(0);
                    // The observer gets sigma; the blanked target gets junk.
                    let (alice, bob) = match target {
                        Side::Alice => (zero, mine),
                        Side::Bob => (mine, zero),
                    };
                    Intervention::FeedBoth { alice, bob }
                }
                _ => Intervention::None,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum AdaptiveCase {
    Pin { input: u64, p: f64 },
    Blank { worst_p: f64 },
}

/// Half-budget confusion against adaptive schemes.
///
/// Measured against a fixed all-zero reception string, a party either
/// talks at least half the rounds for some input (then half a budget
/// pins its whole world to that string) or talks less than half for
/// every input (then half a budget blanks everything it says). Either
/// way somebody's view loses all dependence on one input.
pub struct AdaptiveListAttack {
    seed: u64,
    samples: usize,
    case: Option<AdaptiveCase>,
    rule: Option<AdaptiveListRule>,
}

impl AdaptiveListAttack {
    pub fn new(seed: u64, samples: usize) -> AdaptiveListAttack {
        AdaptiveListAttack {
            seed,
            samples,
            case: None,
            rule: None,
        }
    }

    const FILL: u64 = 0;

    fn probe(&self, info: &SessionInfo<'_>) -> Option<AdaptiveCase> {
        let rounds = info.config.spec.rounds;
        let samples = self.samples.max(1);
        let inputs = 1u64 << 2.min(63);
        let mut worst = 0.0f64;
        for x in 0..inputs.min(4) {
            let input = same_shape(info.alice_input, x)?;
            let mut sends = 0usize;
            for s in 0..samples {
                let (script, listens) = drive_alone(
                    info.alice_factory,
                    &input,
                    derive_seed(self.seed, 11, (x as u64) << 32 | s as u64),
                    rounds,
                    Delivered::scalar(Self::FILL),
                );
                sends += script.len() - listens;
            }
            let p = sends as f64 / (samples * rounds) as f64;
            if 2.0 * p >= 1.0 {
                return Some(AdaptiveCase::Pin { input: x, p });
            }
            worst = worst.max(p);
        }
        Some(AdaptiveCase::Blank { worst_p: worst })
    }
}

impl Adversary for AdaptiveListAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.rule = None;
        self.case = None;
        if info.config.spec.mode != Mode::Corruption {
            return;
        }
        let Some(case) = self.probe(info) else {
            return;
        };
        self.case = Some(case);
        self.rule = Some(match case {
            AdaptiveCase::Pin { .. } => AdaptiveListRule::Pin {
                target: Side::Alice,
                fill: Self::FILL,
            },
            AdaptiveCase::Blank { .. } => AdaptiveListRule::Blank {
                target: Side::Alice,
                sigma: 0,
            },
        });
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        match &self.rule {
            Some(rule) => rule.step(ctx),
            None => Intervention::None,
        }
    }
}

pub fn run_adaptive_list_attack(
    scheme: &ExchangeScheme,
    rate: f64,
    seed: u64,
    samples: usize,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    if spec.schedule.is_some() {
        return Err(AttackError::NotAdaptive);
    }
    if spec.mode != Mode::Corruption {
        return Err(AttackError::Mismatch("needs a corruption channel".into()));
    }
    let config = spec.config(rate)?;
    let probe_a = PartyInput::Bits {
        value: 0,
        len: scheme.bits,
    };
    let probe_b = probe_a.clone();
    let info = SessionInfo {
        config: &config,
        budget: config.budget(),
        alice_input: &probe_a,
        bob_input: &probe_b,
        alice_factory: scheme.alice.as_ref(),
        bob_factory: scheme.bob.as_ref(),
    };
    let mut probe = AdaptiveListAttack::new(seed, samples);
    probe.begin(&info);
    let case = probe
        .case
        .ok_or_else(|| AttackError::Mismatch("probe failed".into()))?;

    let (settings, target, gamble, gamble_holds): ([(u64, u64); 2], Side, String, bool) =
        match case {
            AdaptiveCase::Pin { input, p } => (
                [(input, 0), (input, 1)],
                Side::Alice,
                format!(
                    "holding {input} and fed a constant string, alice transmits {:.0}% of the rounds (at least half)",
                    p * 100.0
                ),
                2.0 * p >= 1.0,
            ),
            AdaptiveCase::Blank { worst_p } => (
                [(0, 0), (1, 0)],
                Side::Bob,
                format!(
                    "fed a constant string, alice transmits at most {:.0}% of the rounds for every probed input (under half)",
                    worst_p * 100.0
                ),
                2.0 * worst_p < 1.0,
            ),
        };

    let mut rows = Vec::new();
    let mut views = Vec::new();
    for (x, y) in settings {
        let mut adversary = AdaptiveListAttack::new(seed, samples);
        let result = run_setting(scheme, rate, x, y, seed, &mut adversary)?;
        let expected = match target {
            Side::Alice => y,
            Side::Bob => x,
        };
        let decoded_ok = Some(decoded_value(result.output(target)) == Some(expected));
        rows.push(SettingRow::from_session(
            setting_label(x, y),
            target,
            &result,
            decoded_ok,
        ));
        views.push(result.view(target));
    }
    let views_identical = all_identical(&views);
    let note = match case {
        AdaptiveCase::Pin { .. } => "the target's receptions are pinned to the probe string",
        AdaptiveCase::Blank { .. } => "the target's transmissions are blanked to a constant",
    };
    Ok(AttackReport {
        attack: "adaptive-list-attack",
        scheme: scheme.name.to_string(),
        rounds: spec.rounds,
        gamble,
        gamble_holds,
        rows,
        claims: vec![Claim {
            target,
            settings: vec![0, 1],
            views_identical,
        }],
        notes: vec![note.to_string()],
    })
}

// ---------------------------------------------------------------------
// Erasure: starve a light listener, or everyone.
// ---------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Debug)]
enum EraseBranch {
    One(Side),
    All,
}

/// The two-thirds erasure confusion.
///
/// Measured against an all-erased world, a party that listens at most
/// 2N/3 rounds can be starved completely: erasing its every lone
/// reception fits the budget, and shared silence is erased for free. If
/// both parties listen more than 2N/3 in their erased worlds, they
/// jointly transmit under 2N/3 lone rounds and everything is erased.
pub struct ErasureAttack {
    seed: u64,
    samples: usize,
    branch: Option<EraseBranch>,
    frac: f64,
    x_probe: usize,
}

impl ErasureAttack {
    pub fn new(seed: u64, samples: usize) -> ErasureAttack {
        ErasureAttack {
            seed,
            samples,
            branch: None,
            frac: 0.0,
            x_probe: 0,
        }
    }
}

impl Adversary for ErasureAttack {
    fn begin(&mut self, info: &SessionInfo<'_>) {
        self.branch = None;
        if info.config.spec.mode != Mode::Erasure {
            return;
        }
        let rounds = info.config.spec.rounds;
        let cap = 2 * rounds / 3;
        let samples = self.samples.max(1);
        let measure = |factory: &dyn crate::channel::PartyFactory,
                           input: &PartyInput,
                           tag: u64|
         -> Option<(f64, usize)> {
            let probe = same_shape(input, 0)?;
            let mut hits = 0usize;
            let mut last = 0usize;
            for s in 0..samples {
                let (_, listens) = drive_alone(
                    factory,
                    &probe,
                    derive_seed(self.seed, tag, s as u64),
                    rounds,
                    Delivered::Bottom,
                );
                if listens <= cap {
                    hits += 1;
                }
                last = listens;
            }
            Some((hits as f64 / samples as f64, last))
        };
        let Some((frac_a, x_a)) = measure(info.alice_factory, info.alice_input, 12) else {
            return;
        };
        let Some((frac_b, x_b)) = measure(info.bob_factory, info.bob_input, 13) else {
            return;
        };
        if frac_a >= 1.0 / 3.0 {
            self.branch = Some(EraseBranch::One(Side::Alice));
            self.frac = frac_a;
            self.x_probe = x_a;
        } else if frac_b >= 1.0 / 3.0 {
            self.branch = Some(EraseBranch::One(Side::Bob));
            self.frac = frac_b;
            self.x_probe = x_b;
        } else {
            self.branch = Some(EraseBranch::All);
            self.frac = frac_a.max(frac_b);
            self.x_probe = x_a.min(x_b);
        }
    }

    fn intervene(&mut self, ctx: &RoundContext<'_>) -> Intervention {
        let Some(branch) = self.branch else {
            return Intervention::None;
        };
        match (branch, ctx.lone_transmitter()) {
            (EraseBranch::One(target), Some((sender, _))) if sender == target.other() => {
                Intervention::Replace(Feed::erase())
            }
            (EraseBranch::All, Some(_)) => Intervention::Replace(Feed::erase()),
            // Shared silence already delivers the erasure mark for free.
            _ => Intervention::None,
        }
    }
}

pub fn run_erasure_attack(
    scheme: &ExchangeScheme,
    rate: f64,
    seed: u64,
    samples: usize,
) -> Result<AttackReport, AttackError> {
    let spec = &scheme.channel;
    if spec.mode != Mode::Erasure {
        return Err(AttackError::NotErasure);
    }
    let rounds = spec.rounds;
    let cap = 2 * rounds / 3;
    let config = spec.config(rate)?;
    let probe_a = PartyInput::Bits {
        value: 0,
        len: scheme.bits,
    };
    let probe_b = probe_a.clone();
    let info = SessionInfo {
        config: &config,
        budget: config.budget(),
        alice_input: &probe_a,
        bob_input: &probe_b,
        alice_factory: scheme.alice.as_ref(),
        bob_factory: scheme.bob.as_ref(),
    };
    let mut probe = ErasureAttack::new(seed, samples);
    probe.begin(&info);
    let branch = probe
        .branch
        .ok_or_else(|| AttackError::Mismatch("probe failed".into()))?;

    let (settings, claims_spec, gamble): (Vec<(u64, u64)>, Vec<(Side, Vec<usize>)>, String) =
        match branch {
            EraseBranch::One(target) => {
                let settings = match target {
                    Side::Alice => vec![(0, 0), (0, 1)],
                    Side::Bob => vec![(0, 0), (1, 0)],
                };
                let gamble = format!(
                    "{} listens at most {} rounds of its all-erased world (measured {}; light in {:.0}% of {} sampled worlds)",
                    side_name(target),
                    cap,
                    probe.x_probe,
                    probe.frac * 100.0,
                    samples.max(1),
                );
                (settings, vec![(target, vec![0, 1])], gamble)
            }
            EraseBranch::All => {
                let settings = vec![(0, 0), (0, 1), (1, 0)];
                let gamble = format!(
                    "both parties listen more than {} rounds of their all-erased worlds, so lone transmissions fit the budget",
                    cap
                );
                (
                    settings,
                    vec![(Side::Alice, vec![0, 1]), (Side::Bob, vec![0, 2])],
                    gamble,
                )
            }
        };

    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (x, y) in &settings {
        let mut adversary = ErasureAttack::new(seed, samples);
        let result = run_setting(scheme, rate, *x, *y, seed, &mut adversary)?;
        let row_target = match branch {
            EraseBranch::One(t) => t,
            EraseBranch::All => Side::Alice,
        };
        let expected = match row_target {
            Side::Alice => *y,
            Side::Bob => *x,
        };
        let decoded_ok = Some(decoded_value(result.output(row_target)) == Some(expected));
        rows.push(SettingRow::from_session(
            setting_label(*x, *y),
            row_target,
            &result,
            decoded_ok,
        ));
        results.push(result);
    }
    let claims = claims_spec
        .into_iter()
        .map(|(target, indices)| {
            let views: Vec<_> = indices.iter().map(|&i| results[i].view(target)).collect();
            Claim {
                target,
                settings: indices,
                views_identical: all_identical(&views),
            }
        })
        .collect();
    let gamble_holds = match branch {
        EraseBranch::One(_) => probe.frac >= 1.0 / 3.0 && probe.x_probe <= cap,
        EraseBranch::All => true,
    };
    Ok(AttackReport {
        attack: "erasure-attack",
        scheme: scheme.name.to_string(),
        rounds,
        gamble,
        gamble_holds,
        rows,
        claims,
        notes: vec!["every touched delivery is the erasure mark".to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSpec, Party, PartyFactory, Reception};
    use crate::exchange::{
        quarter_exchange, two_sevenths_exchange, two_thirds_exchange,
    };
    use std::sync::Arc;

    #[test]
    fn quarter_attack_aligns_views_at_the_cap() {
        let scheme = quarter_exchange(1, 0.125).unwrap();
        assert_eq!(scheme.channel.rounds, 16);
        let report = run_quarter_attack(&scheme, 0, 0.25, 11).unwrap();
        assert!(report.gamble_holds);
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.budget, 4);
            assert_eq!(row.cost, 4);
            assert_eq!(row.dropped, 0);
        }
        assert!(report.claims[0].views_identical);
        assert!(report.ok());
        // One view, two truths: some setting must decode wrong.
        assert!(report.rows.iter().any(|r| r.decoded_ok == Some(false)));
        assert_eq!(report.rows[0].view_digest, report.rows[1].view_digest);
    }

    #[test]
    fn quarter_attack_cannot_align_views_below_the_cap() {
        let scheme = quarter_exchange(1, 0.125).unwrap();
        let report = run_quarter_attack(&scheme, 0, 0.125, 11).unwrap();
        assert!(report.gamble_holds);
        assert!(!report.claims[0].views_identical);
        assert!(!report.ok());
        // With the attack truncated, the scheme pulls through.
        assert!(report.rows.iter().all(|r| r.decoded_ok == Some(true)));
        assert!(report.rows.iter().all(|r| r.dropped > 0));
    }

    #[test]
    fn quarter_attack_rejects_unfitting_schemes() {
        let adaptive = two_sevenths_exchange(1, 0.2).unwrap();
        assert_eq!(
            run_quarter_attack(&adaptive, 0, 0.25, 1),
            Err(AttackError::NotNonAdaptive)
        );

        let mut zero = quarter_exchange(1, 0.125).unwrap();
        zero.channel.rounds = 0;
        zero.channel.schedule = Some(Vec::new());
        assert!(matches!(
            run_quarter_attack(&zero, 0, 0.25, 1),
            Err(AttackError::Mismatch(_))
        ));
    }

    #[test]
    fn third_attack_confuses_the_two_sevenths_scheme() {
        let scheme = two_sevenths_exchange(1, 0.2).unwrap();
        assert_eq!(scheme.channel.rounds, 35);
        let report = run_third_attack(&scheme, 0, 1.0 / 3.0, 5).unwrap();
        assert!(report.gamble_holds, "{}", report.gamble);
        assert!(report.claims[0].views_identical);
        assert!(report.ok());
        for row in &report.rows {
            assert_eq!(row.budget, 11);
            assert!(row.cost <= row.budget);
            assert_eq!(row.dropped, 0);
        }
        // The early stretch costs 9, the late one the full third.
        assert_eq!(report.rows[0].cost, 11);
        assert_eq!(report.rows[1].cost, 9);
        assert_eq!(report.rows[0].decoded_ok, Some(false));
        assert_eq!(report.rows[1].decoded_ok, Some(true));
    }

    #[test]
    fn two_sevenths_attack_is_exact_at_the_cap() {
        let scheme = two_sevenths_exchange(1, 0.2).unwrap();
        let report = run_two_sevenths_attack(&scheme, 2.0 / 7.0, 9, 50).unwrap();
        assert!(report.gamble_holds, "{}", report.gamble);
        assert_eq!(report.claims[0].target, Side::Alice);
        assert!(report.claims[0].views_identical);
        assert!(report.ok());
        for row in &report.rows {
            assert_eq!(row.budget, 10);
            assert_eq!(row.cost, 10);
            assert_eq!(row.dropped, 0);
        }
        // The tie decode lands on 0 in both settings: right against a
        // counterpart holding 0, wrong against one holding 1.
        assert_eq!(report.rows[0].decoded_ok, Some(true));
        assert_eq!(report.rows[1].decoded_ok, Some(false));
    }

    #[test]
    fn two_sevenths_attack_runs_out_below_the_cap() {
        let scheme = two_sevenths_exchange(1, 0.2).unwrap();
        let report = run_two_sevenths_attack(&scheme, 2.0 / 7.0 - 0.2, 9, 50).unwrap();
        assert!(report.gamble_holds);
        assert!(!report.claims[0].views_identical);
        assert!(!report.ok());
        assert!(report.rows.iter().any(|r| r.dropped > 0));
        assert!(report.rows.iter().all(|r| r.decoded_ok == Some(true)));
    }

    struct Alternator {
        value: u64,
        offset: usize,
        round: usize,
    }

    impl Party for Alternator {
        fn act(&mut self, _prev: Option<&Reception>) -> RoundAction {
            let r = self.round;
            self.round += 1;
            if (r + self.offset) % 2 == 0 {
                RoundAction::send_scalar(self.value)
            } else {
                RoundAction::Listen
            }
        }

        fn finish(&mut self, _last: Option<&Reception>) -> PartyOutput {
            PartyOutput::plain(Decoded::Nothing)
        }
    }

    struct AlternatorFactory {
        offset: usize,
    }

    impl PartyFactory for AlternatorFactory {
        fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
            let value = value_of(input).unwrap_or(0);
            Box::new(Alternator {
                value,
                offset: self.offset,
                round: 0,
            })
        }
    }

    fn alternating_fixture() -> ExchangeScheme {
        ExchangeScheme {
            name: "fixture-alternator",
            bits: 1,
            channel: ChannelSpec {
                rounds: 14,
                alphabet_size: 2,
                mode: Mode::Corruption,
                schedule: None,
                message_size_limit: 1,
            },
            alice: Arc::new(AlternatorFactory { offset: 0 }),
            bob: Arc::new(AlternatorFactory { offset: 1 }),
            tolerance: 2.0 / 7.0,
        }
    }

    #[test]
    fn two_sevenths_attack_picks_one_target_on_an_alternator() {
        let scheme = alternating_fixture();
        let report = run_two_sevenths_attack(&scheme, 2.0 / 7.0, 21, 10).unwrap();
        // Each party listens half its world, comfortably under 4N/7, so
        // the first branch carries the claim.
        assert_eq!(report.claims[0].target, Side::Alice);
        assert!(report.gamble_holds, "{}", report.gamble);
    }

    #[test]
    fn list_block_attack_pins_every_speaker_input() {
        let scheme = quarter_exchange(3, 0.2).unwrap();
        assert_eq!(scheme.channel.rounds, 30);
        let report = run_list_block_attack(&scheme, 0.5, 3).unwrap();
        assert!(report.gamble_holds);
        assert_eq!(report.rows.len(), 8);
        for row in &report.rows {
            assert_eq!(row.budget, 15);
            assert_eq!(row.cost, 15);
            assert_eq!(row.dropped, 0);
        }
        let claim = &report.claims[0];
        assert_eq!(claim.target, Side::Bob);
        assert_eq!(claim.settings, (0..8).collect::<Vec<_>>());
        assert!(claim.views_identical);
        assert!(report.ok());
        // The observer's constant view reads as the all-zero input.
        for (v, row) in report.rows.iter().enumerate() {
            assert_eq!(row.decoded_ok, Some(v == 0));
        }
    }

    #[test]
    fn list_block_attack_requires_a_schedule() {
        let adaptive = two_sevenths_exchange(1, 0.2).unwrap();
        assert_eq!(
            run_list_block_attack(&adaptive, 0.5, 3),
            Err(AttackError::NotNonAdaptive)
        );
    }

    #[test]
    fn adaptive_list_attack_pins_the_talkative_party() {
        let scheme = two_sevenths_exchange(1, 0.2).unwrap();
        let report = run_adaptive_list_attack(&scheme, 0.5, 17, 10).unwrap();
        assert!(report.gamble_holds, "{}", report.gamble);
        assert_eq!(report.claims[0].target, Side::Alice);
        assert!(report.claims[0].views_identical);
        assert!(report.ok());
        // Against a counterpart already repeating the probe string the
        // pin costs nothing; against the other input it pays the phase.
        assert_eq!(report.rows[0].cost, 0);
        assert_eq!(report.rows[1].cost, 15);
        assert_eq!(report.rows[0].decoded_ok, Some(true));
        assert_eq!(report.rows[1].decoded_ok, Some(false));
    }

    struct PrefixTalker {
        value: u64,
        talk: usize,
        round: usize,
    }

    impl Party for PrefixTalker {
        fn act(&mut self, _prev: Option<&Reception>) -> RoundAction {
            let r = self.round;
            self.round += 1;
            if r < self.talk {
                RoundAction::send_scalar(self.value)
            } else {
                RoundAction::Listen
            }
        }

        fn finish(&mut self, _last: Option<&Reception>) -> PartyOutput {
            PartyOutput::plain(Decoded::Nothing)
        }
    }

    struct PrefixTalkerFactory {
        talk: usize,
    }

    impl PartyFactory for PrefixTalkerFactory {
        fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
            Box::new(PrefixTalker {
                value: value_of(input).unwrap_or(0),
                talk: self.talk,
                round: 0,
            })
        }
    }

    fn quiet_fixture() -> ExchangeScheme {
        ExchangeScheme {
            name: "fixture-quiet",
            bits: 1,
            channel: ChannelSpec {
                rounds: 12,
                alphabet_size: 4,
                mode: Mode::Corruption,
                schedule: None,
                message_size_limit: 1,
            },
            alice: Arc::new(PrefixTalkerFactory { talk: 4 }),
            bob: Arc::new(PrefixTalkerFactory { talk: 0 }),
            tolerance: 0.5,
        }
    }

    #[test]
    fn adaptive_list_attack_blanks_the_quiet_party() {
        let scheme = quiet_fixture();
        let report = run_adaptive_list_attack(&scheme, 0.5, 19, 4).unwrap();
        assert!(report.gamble_holds, "{}", report.gamble);
        let claim = &report.claims[0];
        assert_eq!(claim.target, Side::Bob);
        assert!(claim.views_identical);
        assert!(report.ok());
        for row in &report.rows {
            assert_eq!(row.cost, 4);
            assert_eq!(row.dropped, 0);
            assert_eq!(row.view_len, 12);
        }
    }

    #[test]
    fn adaptive_list_attack_rejects_scheduled_schemes() {
        let scheduled = quarter_exchange(1, 0.125).unwrap();
        assert_eq!(
            run_adaptive_list_attack(&scheduled, 0.5, 1, 4),
            Err(AttackError::NotAdaptive)
        );
    }

    #[test]
    fn erasure_attack_blanks_the_two_thirds_scheme() {
        let scheme = two_thirds_exchange(1.0 / 6.0).unwrap();
        assert_eq!(scheme.channel.rounds, 18);
        let report = run_erasure_attack(&scheme, 2.0 / 3.0, 13, 20).unwrap();
        assert!(report.gamble_holds, "{}", report.gamble);
        assert_eq!(report.claims[0].target, Side::Alice);
        assert!(report.claims[0].views_identical);
        assert!(report.ok());
        for row in &report.rows {
            assert_eq!(row.budget, 12);
            assert_eq!(row.cost, 12);
            assert_eq!(row.dropped, 0);
            assert_eq!(row.view_len, 12);
            assert_eq!(row.decoded_ok, Some(false));
        }
    }

    #[test]
    fn erasure_attack_fails_below_the_cap() {
        let scheme = two_thirds_exchange(1.0 / 6.0).unwrap();
        let report = run_erasure_attack(&scheme, 0.5, 13, 20).unwrap();
        assert!(report.gamble_holds);
        assert!(!report.claims[0].views_identical);
        assert!(!report.ok());
        for row in &report.rows {
            assert_eq!(row.budget, 9);
            assert_eq!(row.dropped, 3);
            assert_eq!(row.decoded_ok, Some(true));
        }
    }

    #[test]
    fn erasure_attack_requires_erasure_mode() {
        let scheme = quarter_exchange(1, 0.125).unwrap();
        assert_eq!(
            run_erasure_attack(&scheme, 2.0 / 3.0, 1, 4),
            Err(AttackError::NotErasure)
        );
    }

    #[test]
    fn attack_reports_render_for_reading() {
        let scheme = quarter_exchange(1, 0.125).unwrap();
        let report = run_quarter_attack(&scheme, 0, 0.25, 11).unwrap();
        let text = report.to_string();
        assert!(text.contains("quarter-attack vs exchange-quarter"));
        assert!(text.contains("views identical"));
        assert!(text.contains("verdict: attack stands"));
        assert!(text.contains("x=0 y=1"));
    }
}
