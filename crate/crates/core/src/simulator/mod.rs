//! Tree-search simulators. Both parties grow a private edge set over a
//! shared protocol tree, exchange the sets every round, and vote for the
//! leaf their merged walk reaches. The non-adaptive variant alternates
//! speaker by round parity for the whole run and decodes by majority (or by
//! top-k list). The adaptive variant runs the same loop for six sevenths of
//! the rounds, then applies a safety rule: a party whose leading leaf is
//! within one seventh of unanimity keeps transmitting through the tail,
//! anyone else spends the tail listening and counting extra votes.
//!
//! [`blocks`] lifts the same loop onto Reed-Solomon blocks.

pub mod blocks;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::canonical::{
    decode_edge_set, encode_edge_set, move_alphabet_size, EdgeSet, NodeId, PathResult,
    ProtocolTree, Side,
};
use crate::channel::{
    ChannelSpec, Decoded, DecodeStats, Delivered, Mode, Party, PartyFactory, PartyInput,
    PartyOutput, Reception, RoundAction, Symbol,
};
use crate::util::ceil_ratio;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("slack {0} must be in (0, {1})")]
    BadSlack(f64, f64),
    #[error("list caps need slack below 1, got {0}")]
    BadListSlack(f64),
}

/// How a simulator turns votes into an answer.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DecodeMode {
    /// The single leaf with the most votes.
    Unique,
    /// The `k` leaves with the most votes.
    List(usize),
}

/// Round layout shared by the per-round simulators.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SimPlan {
    pub depth: usize,
    pub branching: usize,
    pub slack: f64,
    pub rounds: usize,
    /// Adaptive runs only: first tail round (six sevenths in).
    pub boundary: Option<usize>,
}

impl SimPlan {
    /// Non-adaptive: `2 * ceil(depth / slack)` alternating rounds.
    pub fn alternating(depth: usize, branching: usize, slack: f64) -> Result<SimPlan, SimError> {
        if !(slack > 0.0 && slack < 0.5) {
            return Err(SimError::BadSlack(slack, 0.5));
        }
        Ok(SimPlan {
            depth,
            branching,
            slack,
            rounds: 2 * ceil_ratio(depth as f64, slack),
            boundary: None,
        })
    }

    /// Adaptive: `14 * ceil(2 * depth / slack)` rounds, the last seventh of
    /// which is the committed tail.
    pub fn adaptive(depth: usize, branching: usize, slack: f64) -> Result<SimPlan, SimError> {
        if !(slack > 0.0 && slack < 2.0 / 7.0) {
            return Err(SimError::BadSlack(slack, 2.0 / 7.0));
        }
        let unit = ceil_ratio(2.0 * depth as f64, slack);
        Ok(SimPlan {
            depth,
            branching,
            slack,
            rounds: 14 * unit,
            boundary: Some(12 * unit),
        })
    }

    /// List size for the list-decoded variant: `ceil(1 / slack)`.
    pub fn list_cap(&self) -> usize {
        ceil_ratio(1.0, self.slack)
    }

    /// Tail length of an adaptive plan.
    pub fn tail(&self) -> usize {
        self.boundary.map_or(0, |b| self.rounds - b)
    }
}

/// The evolving state every simulator variant shares: own edge set, vote
/// tallies, and the merge-extend-vote step.
pub struct SimState {
    pub tree: ProtocolTree,
    pub side: Side,
    pub edges: EdgeSet,
    pub votes: BTreeMap<NodeId, u64>,
    /// Weighted votes (block schemes); per-round schemes leave it empty.
    pub weighted: BTreeMap<NodeId, f64>,
    pub weight_empty: f64,
}

impl SimState {
    /// `preferred` is this side's protocol input: its preferred edges.
    pub fn new(tree: ProtocolTree, side: Side, preferred: &EdgeSet) -> SimState {
        let mut state = SimState {
            tree,
            side,
            edges: EdgeSet::new(),
            votes: BTreeMap::new(),
            weighted: BTreeMap::new(),
            weight_empty: 0.0,
        };
        // The walk on an empty set stops at the root; seed the set with the
        // first owned extension so round one transmits something real.
        state.absorb(Some(&EdgeSet::new()), true, preferred);
        state
    }

    /// One simulator step: merge a decoded counterpart set (None for a
    /// parse failure), then either vote for the reached leaf or extend own
    /// frontier with the preferred edge when allowed.
    pub fn absorb(
        &mut self,
        received: Option<&EdgeSet>,
        extend: bool,
        preferred: &EdgeSet,
    ) -> PathResult {
        let result = self.tree.merge_and_follow(&self.edges, received);
        match &result {
            PathResult::Leaf(leaf) => {
                *self.votes.entry(leaf.clone()).or_insert(0) += 1;
            }
            PathResult::Frontier(node) => {
                if extend && self.side.owns_depth(node.depth()) {
                    if let Some(label) = preferred.get(node) {
                        self.edges.insert(node.clone(), label);
                    }
                }
            }
            PathResult::Invalid => {}
        }
        result
    }

    /// Leaves ranked by votes, descending, ties to the smaller leaf.
    pub fn ranked(&self) -> Vec<(NodeId, u64)> {
        let mut rows: Vec<(NodeId, u64)> = self
            .votes
            .iter()
            .map(|(n, v)| (n.clone(), *v))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        rows
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.values().sum()
    }

    /// Decode to a leaf or a padded top-k list. Padding walks the tree's
    /// smallest leaves so a list always has exactly k distinct entries.
    pub fn decode(&self, mode: DecodeMode) -> Decoded {
        let ranked = self.ranked();
        match mode {
            DecodeMode::Unique => Decoded::Leaf(
                ranked
                    .first()
                    .map(|(n, _)| n.clone())
                    .unwrap_or_else(|| self.tree.leaves_from().next().unwrap()),
            ),
            DecodeMode::List(k) => {
                let mut leaves: Vec<NodeId> =
                    ranked.into_iter().take(k).map(|(n, _)| n).collect();
                for filler in self.tree.leaves_from() {
                    if leaves.len() >= k {
                        break;
                    }
                    if !leaves.contains(&filler) {
                        leaves.push(filler);
                    }
                }
                Decoded::Leaves(leaves)
            }
        }
    }

    pub fn stats(&self) -> DecodeStats {
        let ranked = self.ranked();
        DecodeStats {
            votes_total: self.total_votes(),
            votes_top: ranked.first().map(|r| r.1).unwrap_or(0),
            weight_top: 0.0,
            weight_second: 0.0,
            weight_empty: self.weight_empty,
            confidence: None,
            estimate: None,
        }
    }
}

fn read_edges(input: &PartyInput) -> (EdgeSet, usize, usize) {
    match input {
        PartyInput::Edges {
            set,
            depth,
            branching,
        } => (set.clone(), *depth, *branching),
        _ => panic!("simulator parties take edge-set inputs"),
    }
}

/// Parse a delivery into an edge set; anything malformed is None and will
/// be treated as Invalid by the merge.
fn parse_delivery(
    delivered: &Delivered,
    depth: usize,
    branching: usize,
    limit: usize,
) -> Option<EdgeSet> {
    match delivered {
        Delivered::Sym(Symbol(word)) => decode_edge_set(depth, branching, limit, word).ok(),
        Delivered::Bottom => None,
    }
}

/// Channel shape shared by the per-round simulators: one word per round
/// over the move alphabet, speakers alternating by parity for the
/// non-adaptive variant (adaptive runs leave the schedule open).
pub fn sim_channel(plan: &SimPlan) -> ChannelSpec {
    let schedule = if plan.boundary.is_none() {
        Some(
            (0..plan.rounds)
                .map(|r| if r % 2 == 0 { Side::Alice } else { Side::Bob })
                .collect(),
        )
    } else {
        None
    };
    ChannelSpec {
        rounds: plan.rounds,
        alphabet_size: move_alphabet_size(plan.branching),
        mode: Mode::Corruption,
        schedule,
        message_size_limit: 4 * plan.rounds,
    }
}

/// Factory for the alternating per-round simulator, decoding by majority
/// or by top-k list.
pub struct VoteFactory {
    pub plan: SimPlan,
    pub side: Side,
    pub mode: DecodeMode,
}

impl PartyFactory for VoteFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        let (preferred, depth, branching) = read_edges(input);
        assert_eq!((depth, branching), (self.plan.depth, self.plan.branching));
        let tree = tree_dims(depth, branching);
        Box::new(VoteParty {
            state: SimState::new(tree, self.side, &preferred),
            preferred,
            plan: self.plan,
            mode: self.mode,
            limit: 4 * self.plan.rounds,
            round: 0,
        })
    }
}

/// A preferred-map-free tree shell: parties only need dimensions for
/// walking and wire parsing; preferred edges come from their input set.
fn tree_dims(depth: usize, branching: usize) -> ProtocolTree {
    // A tree filled with label 0 everywhere serves as the dimension holder;
    // extensions never read its preferred map.
    let mut preferred = BTreeMap::new();
    let mut stack = vec![NodeId::root()];
    while let Some(node) = stack.pop() {
        if node.depth() >= depth {
            continue;
        }
        for l in 0..branching as u8 {
            stack.push(node.child(l));
        }
        preferred.insert(node, 0);
    }
    ProtocolTree::from_preferred(depth, branching, preferred).expect("dims are valid")
}

struct VoteParty {
    state: SimState,
    preferred: EdgeSet,
    plan: SimPlan,
    mode: DecodeMode,
    limit: usize,
    round: usize,
}

impl VoteParty {
    fn absorb_prev(&mut self, prev: Option<&Reception>) {
        if let Some(r) = prev {
            let parsed = parse_delivery(&r.value, self.plan.depth, self.plan.branching, self.limit);
            self.state.absorb(parsed.as_ref(), true, &self.preferred);
        }
    }

    fn my_turn(&self, round: usize) -> bool {
        match self.state.side {
            Side::Alice => round % 2 == 0,
            Side::Bob => round % 2 == 1,
        }
    }
}

impl Party for VoteParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.absorb_prev(prev);
        let r = self.round;
        self.round += 1;
        if self.my_turn(r) {
            RoundAction::send(Symbol::word(encode_edge_set(
                self.plan.branching,
                &self.state.edges,
            )))
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.absorb_prev(last);
        PartyOutput {
            decoded: self.state.decode(self.mode),
            rule_triggered: None,
            stats: self.state.stats(),
            flags: Vec::new(),
        }
    }
}

/// Factory for the adaptive per-round simulator with the committed tail.
pub struct AdaptiveVoteFactory {
    pub plan: SimPlan,
    pub side: Side,
}

impl PartyFactory for AdaptiveVoteFactory {
    fn spawn(&self, input: &PartyInput, _seed: u64) -> Box<dyn Party> {
        let (preferred, depth, branching) = read_edges(input);
        assert_eq!((depth, branching), (self.plan.depth, self.plan.branching));
        let boundary = self.plan.boundary.expect("adaptive plan");
        let tree = tree_dims(depth, branching);
        Box::new(AdaptiveVoteParty {
            state: SimState::new(tree, self.side, &preferred),
            preferred,
            plan: self.plan,
            boundary,
            limit: 4 * self.plan.rounds,
            round: 0,
            safe: None,
        })
    }
}

struct AdaptiveVoteParty {
    state: SimState,
    preferred: EdgeSet,
    plan: SimPlan,
    boundary: usize,
    limit: usize,
    round: usize,
    /// Decided at the boundary: Some(true) transmits the tail, Some(false)
    /// listens through it.
    safe: Option<bool>,
}

impl AdaptiveVoteParty {
    fn absorb_prev(&mut self, prev: Option<&Reception>) {
        if let Some(r) = prev {
            let parsed = parse_delivery(&r.value, self.plan.depth, self.plan.branching, self.limit);
            // Tail receptions only add votes; the set stops growing once
            // the safety rule has run.
            let extend = self.safe.is_none();
            self.state.absorb(parsed.as_ref(), extend, &self.preferred);
        }
    }
}

impl Party for AdaptiveVoteParty {
    fn act(&mut self, prev: Option<&Reception>) -> RoundAction {
        self.absorb_prev(prev);
        let r = self.round;
        self.round += 1;
        if r < self.boundary {
            let mine = match self.state.side {
                Side::Alice => r % 2 == 0,
                Side::Bob => r % 2 == 1,
            };
            return if mine {
                RoundAction::send(Symbol::word(encode_edge_set(
                    self.plan.branching,
                    &self.state.edges,
                )))
            } else {
                RoundAction::Listen
            };
        }
        let safe = *self.safe.get_or_insert_with(|| {
            // Safety rule: the top leaf must hold all but a tail's worth of
            // the votes. An adversary cannot fake that without outspending
            // its budget, and a party this confident can afford to give up
            // listening.
            let total = self.state.total_votes();
            let top = self.state.ranked().first().map(|x| x.1).unwrap_or(0);
            top + (self.plan.tail() as u64) >= total
        });
        if safe {
            RoundAction::send(Symbol::word(encode_edge_set(
                self.plan.branching,
                &self.state.edges,
            )))
        } else {
            RoundAction::Listen
        }
    }

    fn finish(&mut self, last: Option<&Reception>) -> PartyOutput {
        self.absorb_prev(last);
        PartyOutput {
            decoded: self.state.decode(DecodeMode::Unique),
            rule_triggered: self.safe,
            stats: self.state.stats(),
            flags: Vec::new(),
        }
    }
}

/// A ready-to-run simulator scheme: channel shape, factories, and the tree
/// the instance runs over.
pub struct SimScheme {
    pub name: &'static str,
    pub plan: SimPlan,
    pub channel: ChannelSpec,
    pub alice: std::sync::Arc<dyn PartyFactory>,
    pub bob: std::sync::Arc<dyn PartyFactory>,
    pub tolerance: f64,
}

impl SimScheme {
    pub fn factory(&self, side: Side) -> &std::sync::Arc<dyn PartyFactory> {
        match side {
            Side::Alice => &self.alice,
            Side::Bob => &self.bob,
        }
    }
}

/// Alternating simulator with majority decode; tolerates rates below
/// 1/4 - slack.
pub fn vote_unique(depth: usize, branching: usize, slack: f64) -> Result<SimScheme, SimError> {
    let plan = SimPlan::alternating(depth, branching, slack)?;
    Ok(SimScheme {
        name: "vote-unique",
        plan,
        channel: sim_channel(&plan),
        alice: std::sync::Arc::new(VoteFactory {
            plan,
            side: Side::Alice,
            mode: DecodeMode::Unique,
        }),
        bob: std::sync::Arc::new(VoteFactory {
            plan,
            side: Side::Bob,
            mode: DecodeMode::Unique,
        }),
        tolerance: 0.25 - slack,
    })
}

/// Alternating simulator with top-k list decode; tolerates rates below
/// 1/2 - slack.
pub fn vote_list(depth: usize, branching: usize, slack: f64) -> Result<SimScheme, SimError> {
    let plan = SimPlan::alternating(depth, branching, slack)?;
    let k = plan.list_cap();
    Ok(SimScheme {
        name: "vote-list",
        plan,
        channel: sim_channel(&plan),
        alice: std::sync::Arc::new(VoteFactory {
            plan,
            side: Side::Alice,
            mode: DecodeMode::List(k),
        }),
        bob: std::sync::Arc::new(VoteFactory {
            plan,
            side: Side::Bob,
            mode: DecodeMode::List(k),
        }),
        tolerance: 0.5 - slack,
    })
}

/// Adaptive simulator with the committed tail; tolerates rates below
/// 2/7 - slack.
pub fn vote_adaptive(depth: usize, branching: usize, slack: f64) -> Result<SimScheme, SimError> {
    let plan = SimPlan::adaptive(depth, branching, slack)?;
    Ok(SimScheme {
        name: "vote-adaptive",
        plan,
        channel: sim_channel(&plan),
        alice: std::sync::Arc::new(AdaptiveVoteFactory {
            plan,
            side: Side::Alice,
        }),
        bob: std::sync::Arc::new(AdaptiveVoteFactory {
            plan,
            side: Side::Bob,
        }),
        tolerance: 2.0 / 7.0 - slack,
    })
}

/// Build the session inputs for a simulator scheme over a concrete tree.
pub fn sim_inputs(tree: &ProtocolTree) -> (PartyInput, PartyInput) {
    let mk = |side| PartyInput::Edges {
        set: tree.side_edges(side),
        depth: tree.depth(),
        branching: tree.branching(),
    };
    (mk(Side::Alice), mk(Side::Bob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{run_session, NullAdversary, Seeds, SessionSpec};

    fn run_clean(scheme: &SimScheme, tree: &ProtocolTree, rate: f64) -> crate::channel::SessionResult {
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
    fn plans_are_pinned() {
        let p = SimPlan::alternating(6, 2, 0.125).unwrap();
        assert_eq!(p.rounds, 96);
        assert_eq!(p.list_cap(), 8);
        let a = SimPlan::adaptive(4, 2, 0.125).unwrap();
        assert_eq!(a.rounds, 896);
        assert_eq!(a.boundary, Some(768));
        assert_eq!(a.tail(), 128);
        assert!(SimPlan::alternating(4, 2, 0.5).is_err());
        assert!(SimPlan::adaptive(4, 2, 0.3).is_err());
    }

    /// Clean channel, depth 4, slack 1/8: 64 rounds. Alice's first vote
    /// lands after her second reception, Bob's after his third, so the
    /// counts are exactly 31 and 30, both at least rounds/2 - depth.
    #[test]
    fn clean_run_vote_counts_are_exact() {
        let tree = ProtocolTree::random(4, 2, 5).unwrap();
        let scheme = vote_unique(4, 2, 0.125).unwrap();
        assert_eq!(scheme.plan.rounds, 64);
        let out = run_clean(&scheme, &tree, 0.0);
        let leaf = tree.common_leaf();
        assert_eq!(out.alice_output.decoded, Decoded::Leaf(leaf.clone()));
        assert_eq!(out.bob_output.decoded, Decoded::Leaf(leaf));
        assert_eq!(out.alice_output.stats.votes_top, 31);
        assert_eq!(out.bob_output.stats.votes_top, 30);
        assert_eq!(out.alice_output.stats.votes_total, 31);
        assert_eq!(out.bob_output.stats.votes_total, 30);
        let floor = (scheme.plan.rounds / 2 - 4) as u64;
        assert!(out.alice_output.stats.votes_top >= floor);
        assert!(out.bob_output.stats.votes_top >= floor);
    }

    #[test]
    fn clean_run_works_across_dims_and_seeds() {
        for (n, b, seed) in [(1, 2, 0), (3, 2, 1), (4, 3, 2), (5, 2, 3), (2, 5, 4)] {
            let tree = ProtocolTree::random(n, b, seed).unwrap();
            let scheme = vote_unique(n, b, 0.2).unwrap();
            let out = run_clean(&scheme, &tree, 0.0);
            assert_eq!(
                out.alice_output.decoded,
                Decoded::Leaf(tree.common_leaf()),
                "n={n} b={b} seed={seed}"
            );
            assert_eq!(out.bob_output.decoded, Decoded::Leaf(tree.common_leaf()));
        }
    }

    #[test]
    fn list_decode_pads_to_exactly_k_distinct_leaves() {
        let tree = ProtocolTree::random(3, 2, 9).unwrap();
        let scheme = vote_list(3, 2, 0.25).unwrap();
        let k = scheme.plan.list_cap();
        assert_eq!(k, 4);
        let out = run_clean(&scheme, &tree, 0.0);
        let Decoded::Leaves(leaves) = &out.alice_output.decoded else {
            panic!("expected a list decode");
        };
        assert_eq!(leaves.len(), k);
        assert_eq!(leaves[0], tree.common_leaf());
        let mut distinct = leaves.clone();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), k);
    }

    #[test]
    fn adaptive_clean_run_is_safe_on_both_sides() {
        let tree = ProtocolTree::random(4, 2, 6).unwrap();
        let scheme = vote_adaptive(4, 2, 0.125).unwrap();
        let out = run_clean(&scheme, &tree, 0.0);
        let leaf = tree.common_leaf();
        assert_eq!(out.alice_output.decoded, Decoded::Leaf(leaf.clone()));
        assert_eq!(out.bob_output.decoded, Decoded::Leaf(leaf));
        assert_eq!(out.alice_output.rule_triggered, Some(true));
        assert_eq!(out.bob_output.rule_triggered, Some(true));
        // Phase votes: all receptions past the first two extensions vote,
        // and every vote is for the common leaf.
        assert_eq!(out.alice_output.stats.votes_top, 383);
        assert_eq!(out.bob_output.stats.votes_top, 382);
        assert_eq!(
            out.alice_output.stats.votes_top,
            out.alice_output.stats.votes_total
        );
        // Both safe: the tail is all both-transmit rounds.
        for rec in &out.records[768..] {
            assert!(rec.alice.is_transmit() && rec.bob.is_transmit());
        }
    }

    /// The first two rounds of a clean depth-2 run, walked by hand: Alice
    /// opens with her root edge, Bob merges it, extends below and answers
    /// with his depth-1 edge, and round three's merge reaches the leaf.
    #[test]
    fn early_rounds_walked_by_hand() {
        let tree = ProtocolTree::random(2, 2, 13).unwrap();
        let scheme = vote_unique(2, 2, 0.25).unwrap();
        let out = run_clean(&scheme, &tree, 0.0);
        let x0 = tree.preferred_child(&NodeId::root()).unwrap();
        let d1 = NodeId::root().child(x0);
        let y0 = tree.preferred_child(&d1).unwrap();
        // Round 0: Alice sends exactly her root edge.
        let expected: EdgeSet = [(NodeId::root(), x0)].into_iter().collect();
        match &out.records[0].alice {
            RoundAction::Transmit(t) => {
                assert_eq!(t.symbol.0, encode_edge_set(2, &expected));
            }
            _ => panic!("Alice transmits round 0"),
        }
        // Round 1: Bob answers with the union of nothing of his own below
        // the root plus his extension under Alice's edge.
        let expected_bob: EdgeSet = [(d1.clone(), y0)].into_iter().collect();
        match &out.records[1].bob {
            RoundAction::Transmit(t) => {
                assert_eq!(t.symbol.0, encode_edge_set(2, &expected_bob));
            }
            _ => panic!("Bob transmits round 1"),
        }
    }
}
