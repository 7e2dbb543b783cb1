//! Block-coded simulators: the per-round voting loop lifted onto
//! Reed-Solomon blocks over a small channel alphabet.
//!
//! Each edge-set transmission becomes one codeword spread over a block of
//! rounds: the move string is padded to a fixed digit capacity, packed into
//! a message id, Reed-Solomon encoded, and sent one field symbol per round,
//! every round tagged with the message id. A receiver reassembles the block
//! and list-decodes it by scoring the constituents it knows about: the
//! sender's id (from the tags) plus any ids the adversary declared its
//! forgeries to belong to. Candidates within the listing radius vote for
//! the leaf their merge reaches, weighted by how close they sit; malformed
//! candidates feed a separate "empty" weight that measures how much
//! corruption the receiver has absorbed.
//!
//! The adaptive variant applies a confidence rule at the six-sevenths
//! boundary: commit to the leading leaf when its weighted lead, plus all
//! the corruption mass visible as empty weight, clears one seventh of the
//! blocks.

use std::sync::Arc;

use thiserror::Error;

use crate::canonical::{decode_edge_set, encode_edge_set, EdgeSet, PathResult, Side};
use crate::channel::{
    ChannelSpec, Decoded, DecodeStats, Delivered, Mode, Origin, Party, PartyFactory, PartyInput,
    PartyOutput, Reception, RoundAction, Symbol,
};
use crate::ecc::{list_decode, make_rs_code, next_prime, vote_weight, BlockCode, ReceivedBlock};
use crate::simulator::{read_edges, tree_dims, SimState};
use crate::util::ceil_ratio;

/// Primes are found by trial division, so the field size is capped.
pub const MAX_FIELD: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum BlockError {
    #[error("slack {0} must be in (0, {1})")]
    BadSlack(f64, f64),
    #[error("move strings of {digits} digits over base {base} exceed the u64 message space")]
    PlanTooWide { digits: usize, base: u64 },
}

/// How the block simulator answers.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BlockMode {
    Unique,
    List,
    Adaptive,
}

/// Geometry of a block scheme.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct BlockPlan {
    pub depth: usize,
    pub branching: usize,
    pub slack: f64,
    /// Edge-set transmissions per session.
    pub blocks: usize,
    /// Adaptive runs: first tail block.
    pub boundary: Option<usize>,
    /// Rounds per block.
    pub block_len: usize,
    /// Reed-Solomon message symbols.
    pub k: usize,
    /// Field size.
    pub q: u64,
    /// Move-string digit capacity per codeword.
    pub digits: usize,
}

/// Smallest q with `q^k >= base^digits`, exact in u128. `None` when no
/// 63-bit q works.
fn min_field(base: u64, digits: usize, k: usize) -> Option<u64> {
    let fits = |q: u64| -> bool {
        // q^k >= base^digits, computed without overflow by cross-dividing.
        let mut lhs: u128 = 1;
        for _ in 0..k {
            lhs = lhs.saturating_mul(q as u128);
        }
        let mut rhs: u128 = 1;
        for _ in 0..digits {
            rhs = match rhs.checked_mul(base as u128) {
                Some(v) => v,
                None => return false,
            };
            if rhs > lhs {
                return false;
            }
        }
        true
    };
    let (mut lo, mut hi) = (2u64, 1u64 << 62);
    if !fits(hi) {
        return None;
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

impl BlockPlan {
    pub fn new(
        depth: usize,
        branching: usize,
        slack: f64,
        adaptive: bool,
    ) -> Result<BlockPlan, BlockError> {
        let cap = if adaptive { 2.0 / 7.0 } else { 0.5 };
        if !(slack > 0.0 && slack < cap) {
            return Err(BlockError::BadSlack(slack, cap));
        }
        // Digit capacity: enough for every honest set plus guarded growth.
        let digits = 4 * depth + 4;
        // Move alphabet 2b+1 plus the pad digit.
        let base = 2 * branching as u64 + 2;
        // Smallest symbol count whose field stays within the prime-search
        // cap while the message space still fits u64.
        let mut found = None;
        for k in 2..=24usize {
            let Some(q_cap) = min_field(base, digits, k) else {
                continue;
            };
            if q_cap > MAX_FIELD {
                continue;
            }
            let block_len = ceil_ratio(10.0 * (k as f64 - 1.0), slack)
                .max(ceil_ratio(2.0, slack))
                .max(k);
            let q = next_prime(q_cap.max(block_len as u64).max(base + 1));
            // The message space must fit a u64 id.
            if q.checked_pow(k as u32).is_none() {
                continue;
            }
            found = Some((k, block_len, q));
            break;
        }
        let Some((k, block_len, q)) = found else {
            return Err(BlockError::PlanTooWide { digits, base });
        };
        let unit = if adaptive {
            ceil_ratio(2.0 * depth as f64, slack)
        } else {
            0
        };
        let blocks = if adaptive {
            14 * unit
        } else {
            2 * ceil_ratio(depth as f64, slack)
        };
        Ok(BlockPlan {
            depth,
            branching,
            slack,
            blocks,
            boundary: adaptive.then_some(12 * unit),
            block_len,
            k,
            q,
            digits,
        })
    }

    pub fn rounds(&self) -> usize {
        self.blocks * self.block_len
    }

    pub fn code(&self) -> BlockCode {
        make_rs_code(self.k, self.block_len, self.q).expect("plan shapes are valid")
    }

    /// Listing radius for received blocks.
    pub fn radius(&self) -> f64 {
        1.0 - self.slack / 3.0
    }

    /// Output size of the list variant.
    pub fn list_cap(&self) -> usize {
        ceil_ratio(1.0, self.slack * self.slack)
    }

    fn base(&self) -> u64 {
        2 * self.branching as u64 + 2
    }

    /// The pad digit appended after the move string.
    fn pad(&self) -> u64 {
        2 * self.branching as u64 + 1
    }

    /// Blocks after `boundary`.
    pub fn tail_blocks(&self) -> usize {
        self.boundary.map_or(0, |b| self.blocks - b)
    }

    /// Pack a move string into a message id: pad to capacity, then fold in
    /// little-endian base `2b+2`. `None` when the string does not fit.
    pub fn pack_moves(&self, moves: &[u64]) -> Option<u64> {
        if moves.len() > self.digits || moves.iter().any(|&m| m >= self.pad()) {
            return None;
        }
        let mut id: u128 = 0;
        for i in (0..self.digits).rev() {
            let digit = moves.get(i).copied().unwrap_or(self.pad());
            id = id * self.base() as u128 + digit as u128;
        }
        u64::try_from(id).ok()
    }

    /// Inverse of [`BlockPlan::pack_moves`]. `None` for ids outside the
    /// packed range or with embedded padding.
    pub fn unpack_moves(&self, msg: u64) -> Option<Vec<u64>> {
        let mut rest = msg;
        let mut digitvec = Vec::with_capacity(self.digits);
        for _ in 0..self.digits {
            digitvec.push(rest % self.base());
            rest /= self.base();
        }
        if rest != 0 {
            return None;
        }
        // Strip the pad tail; a pad before a move digit is malformed.
        while digitvec.last() == Some(&self.pad()) {
            digitvec.pop();
        }
        if digitvec.iter().any(|&d| d == self.pad()) {
            return None;
        }
        Some(digitvec)
    }
}

/// A ready-to-run block scheme.
pub struct BlockScheme {
    pub name: &'static str,
    pub plan: BlockPlan,
    pub channel: ChannelSpec,
    pub alice: Arc<dyn PartyFactory>,
    pub bob: Arc<dyn PartyFactory>,
    pub tolerance: f64,
}

impl BlockScheme {
    pub fn factory(&self, side: Side) -> &Arc<dyn PartyFactory> {
        match side {
            Side::Alice => &self.alice,
            Side::Bob => &self.bob,
        }
    }
}

fn build(
    name: &'static str,
    plan: BlockPlan,
    mode: BlockMode,
    tolerance: f64,
) -> BlockScheme {
    let schedule = if plan.boundary.is_none() {
        Some(
            (0..plan.rounds())
                .map(|r| {
                    if (r / plan.block_len) % 2 == 0 {
                        Side::Alice
                    } else {
                        Side::Bob
                    }
                })
                .collect(),
        )
    } else {
        None
    };
    let channel = ChannelSpec {
        rounds: plan.rounds(),
        alphabet_size: plan.q,
        mode: Mode::Corruption,
        schedule,
        message_size_limit: 1,
    };
    BlockScheme {
        name,
        plan,
        channel,
        alice: Arc::new(BlockFactory {
            plan,
            side: Side::Alice,
            mode,
        }),
        bob: Arc::new(BlockFactory {
            plan,
            side: Side::Bob,
            mode,
        }),
        tolerance,
    }
}

/// Block simulator with majority decode; tolerates rates below 1/4 - slack.
pub fn block_unique(depth: usize, branching: usize, slack: f64) -> Result<BlockScheme, BlockError> {
    let plan = BlockPlan::new(depth, branching, slack, false)?;
    Ok(build("block-unique", plan, BlockMode::Unique, 0.25 - slack))
}

/// Block simulator with list decode; tolerates rates below 1/2 - slack.
pub fn block_list(depth: usize, branching: usize, slack: f64) -> Result<BlockScheme, BlockError> {
    let plan = BlockPlan::new(depth, branching, slack, false)?;
    Ok(build("block-list", plan, BlockMode::List, 0.5 - slack))
}

/// Adaptive block simulator; tolerates rates below 2/7 - slack.
pub fn block_adaptive(
    depth: usize,
    branching: usize,
    slack: f64,
) -> Result<BlockScheme, BlockError> {
    let plan = BlockPlan::new(depth, branching, slack, true)?;
    Ok(build(
        "block-adaptive",
        plan,
        BlockMode::Adaptive,
        2.0 / 7.0 - slack,
    ))
}

struct BlockFactory {
    plan: BlockPlan,
    side: Side,
    mode: BlockMode,
}

impl PartyFactory for BlockFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        let (preferred, depth, branching) = read_edges(input);
        assert_eq!((depth, branching), (self.plan.depth, self.plan.branching));
        let tree = tree_dims(depth, branching);
        Box::new(BlockParty {
            state: SimState::new(tree, self.side, &preferred),
            preferred,
            plan: self.plan,
            code: self.plan.code(),
            mode: self.mode,
            round: 0,
            outgoing: None,
            inbox: Vec::with_capacity(self.plan.block_len),
            safe: None,
        })
    }
}

struct BlockParty {
    state: SimState,
    preferred: EdgeSet,
    plan: BlockPlan,
    code: BlockCode,
    mode: BlockMode,
    round: usize,
    /// Message id and codeword currently being transmitted.
    outgoing: Option<(u64, Vec<u64>)>,
    /// Value, declared blend id, and sender tag per received round of the
    /// block in progress. The value sentinel `q` matches no codeword.
    inbox: Vec<(u64, Option<u64>, Option<u64>)>,
    safe: Option<bool>,
}

impl BlockParty {
    fn my_block(&self, block: usize) -> bool {
        (block % 2 == 0) == (self.state.side == Side::Alice)
    }

    fn note(&mut self, prev: Option<&Reception>) {
        let Some(r) = prev else { return };
        let value = match &r.value {
            Delivered::Sym(Symbol(w)) if w.len() == 1 && w[0] < self.plan.q => w[0],
            _ => self.plan.q,
        };
        let declared = match r.origin {
            Origin::Blend(m) => Some(m),
            _ => None,
        };
        self.inbox.push((value, declared, r.sender_tag));
        if self.inbox.len() == self.plan.block_len {
            self.ingest();
        }
    }

    /// Process one completed reception block: reassemble, list-decode by
    /// constituents, and feed every surviving candidate into the walk.
    fn ingest(&mut self) {
        let word: Vec<u64> = self.inbox.iter().map(|(v, _, _)| *v).collect();
        let mut constituents: Vec<u64> = Vec::new();
        if let Some(tag) = self.inbox.iter().find_map(|(_, _, t)| *t) {
            constituents.push(tag);
        }
        for (_, declared, _) in &self.inbox {
            if let Some(m) = declared {
                if !constituents.contains(m) && constituents.len() < 3 {
                    constituents.push(*m);
                }
            }
        }
        self.inbox.clear();
        let block = ReceivedBlock::new(word, constituents);
        let candidates =
            list_decode(&self.code, &block, self.plan.radius(), 3).expect("block length matches");
        let phase = self.safe.is_none();
        for (msg, delta) in candidates {
            let weight = vote_weight(delta);
            let set = self
                .plan
                .unpack_moves(msg)
                .and_then(|moves| {
                    decode_edge_set(self.plan.depth, self.plan.branching, self.plan.digits, &moves)
                        .ok()
                });
            match self.state.tree.merge_and_follow(&self.state.edges, set.as_ref()) {
                PathResult::Leaf(leaf) => {
                    *self.state.votes.entry(leaf.clone()).or_insert(0) += 1;
                    *self.state.weighted.entry(leaf).or_insert(0.0) += weight;
                }
                PathResult::Frontier(node) => {
                    if phase && self.state.side.owns_depth(node.depth()) {
                        if let Some(label) = self.preferred.get(&node) {
                            // Grow only while the set still fits a codeword.
                            self.state.edges.insert(node.clone(), label);
                            let moves =
                                encode_edge_set(self.plan.branching, &self.state.edges);
                            if self.plan.pack_moves(&moves).is_none() {
                                self.state.edges.remove(&node);
                            }
                        }
                    }
                }
                PathResult::Invalid => {
                    if phase {
                        self.state.weight_empty += weight;
                    }
                }
            }
        }
    }

    fn refresh_outgoing(&mut self) {
        let moves = encode_edge_set(self.plan.branching, &self.state.edges);
        let msg = self
            .plan
            .pack_moves(&moves)
            .expect("growth is capacity-guarded");
        let word = self.code.encode(msg);
        self.outgoing = Some((msg, word));
    }

    /// Weighted ranking; ties to the smaller leaf.
    fn ranked_weighted(&self) -> Vec<(crate::canonical::NodeId, f64)> {
        let mut rows: Vec<(crate::canonical::NodeId, f64)> = self
            .state
            .weighted
            .iter()
            .map(|(n, w)| (n.clone(), *w))
            .collect();
        rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        rows
    }

    /// The boundary confidence: weighted lead of the top leaf plus the
    /// empty weight, normalized by the total block count.
    fn confidence(&self) -> f64 {
        let ranked = self.ranked_weighted();
        let top = ranked.first().map(|r| r.1).unwrap_or(0.0);
        let second = ranked.get(1).map(|r| r.1).unwrap_or(0.0);
        (top + self.state.weight_empty - second) / self.plan.blocks as f64
    }
}

impl Party for BlockParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.note(prev);
        let r = self.round;
        self.round += 1;
        let block = r / self.plan.block_len;
        let pos = r % self.plan.block_len;
        let in_tail = self.plan.boundary.is_some_and(|b| block >= b);
        let transmitting = if in_tail {
            if self.safe.is_none() {
                self.safe = Some(self.confidence() > 1.0 / 7.0);
            }
            self.safe.unwrap()
        } else {
            self.my_block(block)
        };
        if transmitting {
            if pos == 0 || self.outgoing.is_none() {
                self.refresh_outgoing();
            }
            let (msg, word) = self.outgoing.as_ref().unwrap();
            RoundAction::send_tagged(Symbol::scalar(word[pos]), *msg)
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.note(last);
        let ranked = self.ranked_weighted();
        let decoded = match self.mode {
            BlockMode::Unique | BlockMode::Adaptive => Decoded::Leaf(
                ranked
                    .first()
                    .map(|(n, _)| n.clone())
                    .unwrap_or_else(|| self.state.tree.leaves_from().next().unwrap()),
            ),
            BlockMode::List => {
                let k = self.plan.list_cap();
                let mut leaves: Vec<crate::canonical::NodeId> =
                    ranked.iter().take(k).map(|(n, _)| n.clone()).collect();
                for filler in self.state.tree.leaves_from() {
                    if leaves.len() >= k {
                        break;
                    }
                    if !leaves.contains(&filler) {
                        leaves.push(filler);
                    }
                }
                Decoded::Leaves(leaves)
            }
        };
        let top_votes = self
            .state
            .votes
            .values()
            .max()
            .copied()
            .unwrap_or(0);
        PartyOutput {
            decoded,
            rule_triggered: self.safe,
            stats: DecodeStats {
                votes_total: self.state.total_votes(),
                votes_top: top_votes,
                weight_top: ranked.first().map(|r| r.1).unwrap_or(0.0),
                weight_second: ranked.get(1).map(|r| r.1).unwrap_or(0.0),
                weight_empty: self.state.weight_empty,
                confidence: match self.mode {
                    BlockMode::Adaptive => Some(self.confidence()),
                    _ => None,
                },
                estimate: None,
            },
            flags: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::ProtocolTree;
    use crate::channel::{run_session, NullAdversary, Seeds, SessionSpec};
    use crate::ecc::is_prime;
    use crate::simulator::sim_inputs;

    /// Independent route to the minimum field size: scan upward in u128.
    fn min_field_by_scan(base: u64, digits: usize, k: usize) -> u64 {
        let need: u128 = (0..digits).fold(1u128, |acc, _| acc * base as u128);
        let mut q = 2;
        loop {
            let cap = (0..k).fold(1u128, |acc, _| acc.saturating_mul(q as u128));
            if cap >= need {
                return q;
            }
            q += 1;
        }
    }

    #[test]
    fn plan_is_pinned_for_the_reference_dims() {
        let plan = BlockPlan::new(4, 2, 0.25, false).unwrap();
        assert_eq!(plan.digits, 20);
        assert_eq!(plan.k, 3);
        assert_eq!(plan.block_len, 80);
        assert_eq!(plan.blocks, 32);
        assert_eq!(plan.rounds(), 2560);
        // The field: smallest prime at least the exact capacity minimum.
        let qmin = min_field_by_scan(6, 20, 3);
        assert_eq!(plan.q, next_prime(qmin.max(80).max(7)));
        assert!(is_prime(plan.q));
        assert!(plan.q.checked_pow(3).is_some());
        // Relative distance honors the listing math.
        let code = plan.code();
        assert!(code.relative_distance() >= 1.0 - plan.slack / 10.0);

        let adaptive = BlockPlan::new(4, 2, 0.25, true).unwrap();
        assert_eq!(adaptive.blocks, 448);
        assert_eq!(adaptive.boundary, Some(384));
        assert_eq!(adaptive.tail_blocks(), 64);
        assert_eq!(adaptive.rounds(), 35840);

        assert!(BlockPlan::new(4, 2, 0.6, false).is_err());
        // Content too wide for u64 ids.
        assert!(matches!(
            BlockPlan::new(8, 16, 0.25, false),
            Err(BlockError::PlanTooWide { .. })
        ));
    }

    #[test]
    fn move_packing_roundtrips_and_rejects_junk() {
        let plan = BlockPlan::new(2, 2, 0.25, false).unwrap();
        let moves = vec![2u64, 1, 0, 0];
        let msg = plan.pack_moves(&moves).unwrap();
        assert_eq!(plan.unpack_moves(msg).unwrap(), moves);
        // The empty string packs to all-pad.
        let empty = plan.pack_moves(&[]).unwrap();
        assert_eq!(plan.unpack_moves(empty).unwrap(), Vec::<u64>::new());
        // Pad digits inside a move string are not encodable.
        assert_eq!(plan.pack_moves(&[5]), None);
        // Too long.
        assert_eq!(plan.pack_moves(&vec![0u64; plan.digits + 1]), None);
        // An id whose digits put a pad before a move unpacks to None.
        let embedded = 5 + 6 * 2; // little-endian digits [5, 2, 0, ...]
        assert_eq!(plan.unpack_moves(embedded), None);
        // Ids past the digit capacity unpack to None; the codeword message
        // space is strictly larger, so such ids do occur.
        let capacity = 6u64.pow(plan.digits as u32);
        assert!(plan.code().message_count() > capacity);
        assert_eq!(plan.unpack_moves(capacity), None);
    }

    fn run_clean(
        scheme: &BlockScheme,
        tree: &ProtocolTree,
        rate: f64,
    ) -> crate::channel::SessionResult {
        let (alice_input, bob_input) = sim_inputs(tree);
        let spec = SessionSpec {
            config: scheme.channel.config(rate).unwrap(),
            alice: scheme.alice.as_ref(),
            alice_input,
            bob: scheme.bob.as_ref(),
            bob_input,
            seeds: Seeds::default(),
        };
        run_session(&spec, &mut NullAdversary).unwrap()
    }

    #[test]
    fn clean_unique_run_finds_the_common_leaf() {
        let tree = ProtocolTree::random(2, 2, 21).unwrap();
        let scheme = block_unique(2, 2, 0.25).unwrap();
        assert_eq!(scheme.plan.blocks, 16);
        let out = run_clean(&scheme, &tree, 0.0);
        let leaf = tree.common_leaf();
        assert_eq!(out.alice_output.decoded, Decoded::Leaf(leaf.clone()));
        assert_eq!(out.bob_output.decoded, Decoded::Leaf(leaf));
        // Clean blocks decode at distance zero: weights equal votes.
        assert_eq!(
            out.alice_output.stats.weight_top,
            out.alice_output.stats.votes_top as f64
        );
        assert_eq!(out.alice_output.stats.weight_empty, 0.0);
    }

    #[test]
    fn clean_list_run_leads_with_the_common_leaf() {
        let tree = ProtocolTree::random(3, 2, 23).unwrap();
        // Slack 0.4 keeps the list cap (7) within the 8 leaves of the tree.
        let scheme = block_list(3, 2, 0.4).unwrap();
        assert_eq!(scheme.plan.list_cap(), 7);
        let out = run_clean(&scheme, &tree, 0.0);
        let Decoded::Leaves(leaves) = &out.alice_output.decoded else {
            panic!("expected list decode");
        };
        assert_eq!(leaves.len(), scheme.plan.list_cap());
        assert_eq!(leaves[0], tree.common_leaf());
    }

    #[test]
    fn clean_adaptive_run_is_safe_with_pinned_confidence() {
        let tree = ProtocolTree::random(4, 2, 29).unwrap();
        let scheme = block_adaptive(4, 2, 0.25).unwrap();
        let out = run_clean(&scheme, &tree, 0.0);
        let leaf = tree.common_leaf();
        assert_eq!(out.alice_output.decoded, Decoded::Leaf(leaf.clone()));
        assert_eq!(out.bob_output.decoded, Decoded::Leaf(leaf));
        assert_eq!(out.alice_output.rule_triggered, Some(true));
        assert_eq!(out.bob_output.rule_triggered, Some(true));
        // Mirrors the per-round rhythm: Alice banks 191 weighted votes in
        // 384 phase blocks, Bob 190, all for the common leaf.
        assert_eq!(out.alice_output.stats.votes_top, 191);
        assert_eq!(out.bob_output.stats.votes_top, 190);
        let conf_a = out.alice_output.stats.confidence.unwrap();
        assert!((conf_a - 191.0 / 448.0).abs() < 1e-9);
        assert!(conf_a > 1.0 / 7.0);
    }
}
