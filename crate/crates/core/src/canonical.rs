//! Conversation trees in canonical form: a complete b-ary tree where every
//! non-leaf node carries a preferred outgoing edge, plus the edge-set
//! machinery parties exchange while reconstructing the common path.
//!
//! Edges are identified by their parent node and child label. Alice owns the
//! edges leaving even-depth nodes, Bob the edges leaving odd-depth nodes, so
//! the two preferred-edge maps interleave along any root-to-leaf path.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Child index within a node, `0..branching`.
pub type Label = u8;

/// Largest supported branching factor; labels must fit in a byte.
pub const MAX_BRANCHING: usize = 255;

/// Node-count guard for [`ProtocolTree::random`]; keeps accidental
/// `depth=30` calls from allocating gigabytes.
const MAX_NODES: u64 = 1 << 22;

/// A node, addressed by the label path from the root. The root is the empty
/// path. Ordering is lexicographic on the path, so `BTreeMap<NodeId, _>`
/// iterates in preorder.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId(Vec<Label>);

impl NodeId {
    pub fn root() -> Self {
        NodeId(Vec::new())
    }

    pub fn from_labels(labels: impl Into<Vec<Label>>) -> Self {
        NodeId(labels.into())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    pub fn child(&self, label: Label) -> NodeId {
        let mut path = self.0.clone();
        path.push(label);
        NodeId(path)
    }

    pub fn parent(&self) -> Option<NodeId> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeId(self.0[..self.0.len() - 1].to_vec()))
        }
    }
}

impl fmt::Display for NodeId {
    /// Dotted label path; the root renders as the empty string.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for l in &self.0 {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            write!(f, "<root>")
        } else {
            write!(f, "{self}")
        }
    }
}

/// The two parties. Alice owns edges leaving even-depth nodes (she speaks
/// first), Bob the rest.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Side {
    Alice,
    Bob,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        }
    }

    /// Does this side own the edges leaving nodes at `depth`?
    pub fn owns_depth(self, depth: usize) -> bool {
        (depth % 2 == 0) == (self == Side::Alice)
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Alice => write!(f, "alice"),
            Side::Bob => write!(f, "bob"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree depth must be at least 1")]
    DepthZero,
    #[error("branching factor {0} out of range 2..={MAX_BRANCHING}")]
    BadBranching(usize),
    #[error("tree would have about {0} nodes, over the {MAX_NODES} cap")]
    TooLarge(u64),
    #[error("node {0:?} has no preferred edge")]
    MissingPreferred(NodeId),
    #[error("preferred map names node {0:?} outside the tree")]
    ForeignNode(NodeId),
    #[error("fixture line {line}: {reason}")]
    BadFixture { line: usize, reason: String },
}

/// Complete b-ary tree of the given depth with one preferred edge per
/// non-leaf node. Leaves all sit at `depth`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProtocolTree {
    depth: usize,
    branching: u8,
    preferred: BTreeMap<NodeId, Label>,
}

fn check_dims(depth: usize, branching: usize) -> Result<(), TreeError> {
    if depth == 0 {
        return Err(TreeError::DepthZero);
    }
    if !(2..=MAX_BRANCHING).contains(&branching) {
        return Err(TreeError::BadBranching(branching));
    }
    // Inner node count: 1 + b + ... + b^(depth-1).
    let mut nodes: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..depth {
        nodes = nodes.saturating_add(level);
        level = level.saturating_mul(branching as u64);
        if nodes > MAX_NODES {
            return Err(TreeError::TooLarge(nodes));
        }
    }
    Ok(())
}

impl ProtocolTree {
    /// Sample a tree with uniformly random preferred edges. Deterministic in
    /// `seed`: non-leaf nodes are visited in preorder and each draws one
    /// label from a ChaCha8 stream.
    pub fn random(depth: usize, branching: usize, seed: u64) -> Result<Self, TreeError> {
        check_dims(depth, branching)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut preferred = BTreeMap::new();
        let mut stack = vec![NodeId::root()];
        while let Some(node) = stack.pop() {
            if node.depth() >= depth {
                continue;
            }
            let pick = rng.gen_range(0..branching as u32) as Label;
            // Push children in reverse so the stack pops them in label order,
            // keeping the rng consumption order well defined.
            for l in (0..branching as u8).rev() {
                stack.push(node.child(l));
            }
            preferred.insert(node, pick);
        }
        Ok(ProtocolTree {
            depth,
            branching: branching as u8,
            preferred,
        })
    }

    /// Build from an explicit preferred map. Every non-leaf node must be
    /// covered and no key may fall outside the tree.
    pub fn from_preferred(
        depth: usize,
        branching: usize,
        preferred: BTreeMap<NodeId, Label>,
    ) -> Result<Self, TreeError> {
        check_dims(depth, branching)?;
        for (node, label) in &preferred {
            if node.depth() >= depth
                || node.labels().iter().any(|&l| l as usize >= branching)
                || *label as usize >= branching
            {
                return Err(TreeError::ForeignNode(node.clone()));
            }
        }
        let tree = ProtocolTree {
            depth,
            branching: branching as u8,
            preferred,
        };
        let mut stack = vec![NodeId::root()];
        while let Some(node) = stack.pop() {
            if node.depth() >= depth {
                continue;
            }
            if !tree.preferred.contains_key(&node) {
                return Err(TreeError::MissingPreferred(node));
            }
            for l in 0..branching as u8 {
                stack.push(node.child(l));
            }
        }
        Ok(tree)
    }

    /// Parse the plain-text map format: one `path:label` line per non-leaf
    /// node, where `path` is the dotted label path (empty for the root).
    /// `#` starts a comment; blank lines are skipped. Depth and branching
    /// are inferred from the entries.
    pub fn load(text: &str) -> Result<Self, TreeError> {
        let mut entries = BTreeMap::new();
        let mut max_label: u8 = 0;
        let mut max_depth = 0usize;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| TreeError::BadFixture {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let (path_part, label_part) =
                line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
            let path_part = path_part.trim();
            let mut labels = Vec::new();
            if !path_part.is_empty() {
                for piece in path_part.split('.') {
                    let l: u8 = piece
                        .trim()
                        .parse()
                        .map_err(|_| bad("path label is not a byte"))?;
                    max_label = max_label.max(l);
                    labels.push(l);
                }
            }
            let label: u8 = label_part
                .trim()
                .parse()
                .map_err(|_| bad("preferred label is not a byte"))?;
            max_label = max_label.max(label);
            let node = NodeId::from_labels(labels);
            max_depth = max_depth.max(node.depth() + 1);
            if entries.insert(node, label).is_some() {
                return Err(bad("duplicate node"));
            }
        }
        let branching = (max_label as usize + 1).max(2);
        Self::from_preferred(max_depth, branching, entries)
    }

    /// Inverse of [`ProtocolTree::load`], one preorder line per node.
    pub fn save(&self) -> String {
        let mut out = String::new();
        for (node, label) in &self.preferred {
            out.push_str(&format!("{node}:{label}\n"));
        }
        out
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branching(&self) -> usize {
        self.branching as usize
    }

    pub fn preferred_child(&self, node: &NodeId) -> Option<Label> {
        self.preferred.get(node).copied()
    }

    /// The preferred edges owned by one side, i.e. that side's protocol
    /// input.
    pub fn side_edges(&self, side: Side) -> EdgeSet {
        let mut set = EdgeSet::new();
        for (node, label) in &self.preferred {
            if side.owns_depth(node.depth()) {
                set.insert(node.clone(), *label);
            }
        }
        set
    }

    /// Follow preferred edges from the root all the way down.
    pub fn common_leaf(&self) -> NodeId {
        let mut node = NodeId::root();
        while node.depth() < self.depth {
            let l = self.preferred[&node];
            node = node.child(l);
        }
        node
    }

    /// Is `node` a valid node of this tree (root included)?
    pub fn contains(&self, node: &NodeId) -> bool {
        node.depth() <= self.depth
            && node.labels().iter().all(|&l| l < self.branching)
    }

    /// Union `mine` with a decoded counterpart set and walk from the root.
    ///
    /// `None` for `received` means the incoming word failed to parse, which
    /// is already Invalid. A union with two edges out of one node, or any
    /// edge outside the tree, is Invalid too. Otherwise the walk ends either
    /// at a leaf or at the first node with no outgoing edge.
    pub fn merge_and_follow(
        &self,
        mine: &EdgeSet,
        received: Option<&EdgeSet>,
    ) -> PathResult {
        let received = match received {
            Some(r) => r,
            None => return PathResult::Invalid,
        };
        let union = match mine.union(received) {
            Some(u) => u,
            None => return PathResult::Invalid,
        };
        for (node, label) in union.iter() {
            if node.depth() >= self.depth || !self.contains(&node.child(*label)) {
                return PathResult::Invalid;
            }
        }
        let mut node = NodeId::root();
        loop {
            if node.depth() == self.depth {
                return PathResult::Leaf(node);
            }
            match union.get(&node) {
                Some(l) => node = node.child(l),
                None => return PathResult::Frontier(node),
            }
        }
    }

    /// The edge a party should add when its walk stopped at `frontier`: the
    /// preferred edge there, provided the party owns that level and the
    /// frontier is not a leaf.
    pub fn next_preferred_extension(
        &self,
        side: Side,
        frontier: &NodeId,
    ) -> Option<(NodeId, Label)> {
        if frontier.depth() >= self.depth || !side.owns_depth(frontier.depth()) {
            return None;
        }
        self.preferred_child(frontier)
            .map(|l| (frontier.clone(), l))
    }

    /// Leaves in lexicographic order, starting after `from` (exclusive when
    /// `from` is a leaf). Used to pad list decodes deterministically.
    pub fn leaves_from(&self) -> LeafIter {
        LeafIter {
            next: Some(NodeId(vec![0; self.depth])),
            branching: self.branching,
        }
    }
}

/// Iterator over all leaves of a tree in lexicographic order.
pub struct LeafIter {
    next: Option<NodeId>,
    branching: u8,
}

impl Iterator for LeafIter {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let current = self.next.take()?;
        let mut succ = current.0.clone();
        // Increment the path as a base-b numeral.
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if succ[i] + 1 < self.branching {
                succ[i] += 1;
                for v in succ[i + 1..].iter_mut() {
                    *v = 0;
                }
                self.next = Some(NodeId(succ));
                break;
            }
        }
        Some(current)
    }
}

/// Outcome of walking a merged edge set from the root.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PathResult {
    /// The walk reached depth n.
    Leaf(NodeId),
    /// The walk stopped early at this node.
    Frontier(NodeId),
    /// The union was malformed (parse failure, branch conflict, or an edge
    /// outside the tree).
    Invalid,
}

/// A set of edges with at most one outgoing edge per node, stored as
/// `parent -> child label`. The map representation makes the one-edge-per-
/// node rule structural; cross-set conflicts surface in [`EdgeSet::union`].
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct EdgeSet {
    edges: BTreeMap<NodeId, Label>,
}

impl EdgeSet {
    pub fn new() -> Self {
        EdgeSet::default()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn get(&self, node: &NodeId) -> Option<Label> {
        self.edges.get(node).copied()
    }

    pub fn contains(&self, node: &NodeId, label: Label) -> bool {
        self.get(node) == Some(label)
    }

    /// Insert an edge. Returns false (and changes nothing) if the node
    /// already has a different outgoing edge.
    pub fn insert(&mut self, node: NodeId, label: Label) -> bool {
        match self.edges.get(&node) {
            Some(&existing) => existing == label,
            None => {
                self.edges.insert(node, label);
                true
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &Label)> {
        self.edges.iter()
    }

    /// Remove the outgoing edge of `node`, if present.
    pub fn remove(&mut self, node: &NodeId) -> Option<Label> {
        self.edges.remove(node)
    }

    /// Branch-free union: `None` if any node would get two outgoing edges.
    pub fn union(&self, other: &EdgeSet) -> Option<EdgeSet> {
        let mut out = self.clone();
        for (node, label) in other.iter() {
            if !out.insert(node.clone(), *label) {
                return None;
            }
        }
        Some(out)
    }
}

impl FromIterator<(NodeId, Label)> for EdgeSet {
    /// Collect edges; later conflicting inserts are dropped, so build from
    /// conflict-free iterators (tests and fixtures).
    fn from_iter<T: IntoIterator<Item = (NodeId, Label)>>(iter: T) -> Self {
        let mut set = EdgeSet::new();
        for (node, label) in iter {
            set.insert(node, label);
        }
        set
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("word of {len} symbols exceeds the {max}-symbol limit")]
    TooLong { len: usize, max: usize },
    #[error("symbol {value} at position {pos} is outside the move alphabet")]
    BadSymbol { pos: usize, value: u64 },
    #[error("descent at position {pos} is not in ascending label order")]
    NotAscending { pos: usize },
    #[error("descent at position {pos} goes below the leaves")]
    BelowLeaves { pos: usize },
    #[error("up-move at position {pos} climbs above the root")]
    AboveRoot { pos: usize },
    #[error("walk does not end at the root")]
    Unbalanced,
}

/// Number of distinct move symbols for branching `b`: one up-move plus a
/// carrying and a non-carrying descent per label.
pub fn move_alphabet_size(branching: usize) -> u64 {
    1 + 2 * branching as u64
}

const MOVE_UP: u64 = 0;

fn carry_move(label: Label) -> u64 {
    1 + label as u64
}

fn skip_move(branching: usize, label: Label) -> u64 {
    1 + branching as u64 + label as u64
}

/// Serialize an edge set as a depth-first walk over the minimal subtree
/// covering it. Symbols: `0` moves up; `1+l` descends label `l` and marks
/// the edge as part of the set; `1+b+l` descends label `l` without marking
/// (needed to reach deeper marked edges when the edge into a node is owned
/// by the other side). Children are visited in ascending label order and
/// the walk returns to the root, so a set whose edges form a rooted
/// connected subtree encodes in exactly `2 * len` symbols.
pub fn encode_edge_set(branching: usize, set: &EdgeSet) -> Vec<u64> {
    let mut trie: BTreeMap<NodeId, BTreeMap<Label, bool>> = BTreeMap::new();
    for (node, label) in set.iter() {
        // Ensure the path from the root down to `node` exists in the trie,
        // then mark the edge itself as carried.
        let mut prefix = NodeId::root();
        for &step in node.labels() {
            trie.entry(prefix.clone()).or_default().entry(step).or_insert(false);
            prefix = prefix.child(step);
        }
        *trie.entry(node.clone()).or_default().entry(*label).or_insert(false) = true;
    }
    let mut word = Vec::new();
    emit_walk(branching, &trie, &NodeId::root(), &mut word);
    word
}

fn emit_walk(
    branching: usize,
    trie: &BTreeMap<NodeId, BTreeMap<Label, bool>>,
    node: &NodeId,
    word: &mut Vec<u64>,
) {
    if let Some(children) = trie.get(node) {
        for (&label, &carries) in children {
            word.push(if carries {
                carry_move(label)
            } else {
                skip_move(branching, label)
            });
            emit_walk(branching, trie, &node.child(label), word);
            word.push(MOVE_UP);
        }
    }
}

/// Parse a wire word back into an edge set. Strict: any length, symbol,
/// ordering, or balance violation is an error, and callers treat errors as
/// an Invalid reception. `max_len` caps the accepted word length (the
/// channel's message size limit).
pub fn decode_edge_set(
    depth: usize,
    branching: usize,
    max_len: usize,
    word: &[u64],
) -> Result<EdgeSet, WireError> {
    if word.len() > max_len {
        return Err(WireError::TooLong {
            len: word.len(),
            max: max_len,
        });
    }
    let b = branching as u64;
    let mut set = EdgeSet::new();
    let mut path: Vec<Label> = Vec::new();
    // Last label descended from each node on the current path, root first;
    // descents from one node must be strictly ascending.
    let mut last_label: Vec<Option<Label>> = vec![None];
    for (pos, &sym) in word.iter().enumerate() {
        if sym == MOVE_UP {
            if path.pop().is_none() {
                return Err(WireError::AboveRoot { pos });
            }
            last_label.pop();
        } else if sym < 1 + 2 * b {
            let (label, carries) = if sym <= b {
                ((sym - 1) as Label, true)
            } else {
                ((sym - 1 - b) as Label, false)
            };
            if path.len() >= depth {
                return Err(WireError::BelowLeaves { pos });
            }
            if let Some(Some(prev)) = last_label.last() {
                if *prev >= label {
                    return Err(WireError::NotAscending { pos });
                }
            }
            *last_label.last_mut().unwrap() = Some(label);
            if carries {
                set.insert(NodeId::from_labels(path.clone()), label);
            }
            path.push(label);
            last_label.push(None);
        } else {
            return Err(WireError::BadSymbol { pos, value: sym });
        }
    }
    if !path.is_empty() {
        return Err(WireError::Unbalanced);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(labels: &[Label]) -> NodeId {
        NodeId::from_labels(labels.to_vec())
    }

    #[test]
    fn random_tree_is_deterministic_and_complete() {
        let a = ProtocolTree::random(3, 2, 7).unwrap();
        let b = ProtocolTree::random(3, 2, 7).unwrap();
        assert_eq!(a, b);
        // 1 + 2 + 4 non-leaf nodes.
        assert_eq!(a.preferred.len(), 7);
        for (n, l) in &a.preferred {
            assert!(n.depth() < 3);
            assert!((*l as usize) < 2);
        }
        let c = ProtocolTree::random(3, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn dims_are_validated() {
        assert_eq!(ProtocolTree::random(0, 2, 0), Err(TreeError::DepthZero));
        assert_eq!(ProtocolTree::random(3, 1, 0), Err(TreeError::BadBranching(1)));
        assert!(matches!(
            ProtocolTree::random(30, 4, 0),
            Err(TreeError::TooLarge(_))
        ));
    }

    #[test]
    fn common_leaf_matches_an_independent_walk() {
        let tree = ProtocolTree::random(6, 3, 42).unwrap();
        // Walk the preferred map by hand rather than through common_leaf.
        let mut path = Vec::new();
        let mut at = NodeId::root();
        for _ in 0..6 {
            let l = tree.preferred_child(&at).unwrap();
            path.push(l);
            at = at.child(l);
        }
        assert_eq!(tree.common_leaf(), NodeId::from_labels(path));
    }

    #[test]
    fn side_edges_partition_the_preferred_map() {
        let tree = ProtocolTree::random(5, 2, 3).unwrap();
        let x = tree.side_edges(Side::Alice);
        let y = tree.side_edges(Side::Bob);
        assert_eq!(x.len() + y.len(), tree.preferred.len());
        for (n, _) in x.iter() {
            assert_eq!(n.depth() % 2, 0);
        }
        for (n, _) in y.iter() {
            assert_eq!(n.depth() % 2, 1);
        }
        let union = x.union(&y).unwrap();
        assert_eq!(union.len(), tree.preferred.len());
        // The union of both sides walks to the common leaf.
        match tree.merge_and_follow(&x, Some(&y)) {
            PathResult::Leaf(leaf) => assert_eq!(leaf, tree.common_leaf()),
            other => panic!("expected leaf, got {other:?}"),
        }
    }

    /// Two-level tree walk examples checked by hand: mine = {root -> 0},
    /// received = {0 -> 1} walks root, 0, 0.1 and stops at depth 2.
    #[test]
    fn merge_and_follow_examples() {
        let tree = ProtocolTree::from_preferred(
            2,
            2,
            [(node(&[]), 0), (node(&[0]), 1), (node(&[1]), 0)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let mine: EdgeSet = [(node(&[]), 0)].into_iter().collect();
        let received: EdgeSet = [(node(&[0]), 1)].into_iter().collect();
        assert_eq!(
            tree.merge_and_follow(&mine, Some(&received)),
            PathResult::Leaf(node(&[0, 1]))
        );
        // Nothing from either side: the walk never leaves the root.
        assert_eq!(
            tree.merge_and_follow(&EdgeSet::new(), Some(&EdgeSet::new())),
            PathResult::Frontier(node(&[]))
        );
        // A parse failure upstream is already Invalid.
        assert_eq!(tree.merge_and_follow(&mine, None), PathResult::Invalid);
        // Conflicting edges out of the root.
        let clash: EdgeSet = [(node(&[]), 1)].into_iter().collect();
        assert_eq!(
            tree.merge_and_follow(&mine, Some(&clash)),
            PathResult::Invalid
        );
        // An edge outside the tree (depth 2 node is a leaf here).
        let deep: EdgeSet = [(node(&[0, 1]), 0)].into_iter().collect();
        assert_eq!(
            tree.merge_and_follow(&mine, Some(&deep)),
            PathResult::Invalid
        );
    }

    #[test]
    fn extension_respects_ownership_and_leaves() {
        let tree = ProtocolTree::random(4, 2, 11).unwrap();
        let root = NodeId::root();
        let expected = tree.preferred_child(&root).unwrap();
        assert_eq!(
            tree.next_preferred_extension(Side::Alice, &root),
            Some((root.clone(), expected))
        );
        assert_eq!(tree.next_preferred_extension(Side::Bob, &root), None);
        let depth1 = root.child(0);
        assert_eq!(
            tree.next_preferred_extension(Side::Bob, &depth1),
            Some((depth1.clone(), tree.preferred_child(&depth1).unwrap()))
        );
        assert_eq!(tree.next_preferred_extension(Side::Alice, &depth1), None);
        let leaf = node(&[0, 0, 0, 0]);
        assert_eq!(tree.next_preferred_extension(Side::Alice, &leaf), None);
        assert_eq!(tree.next_preferred_extension(Side::Bob, &leaf), None);
    }

    /// Frozen wire example: branching 2, set {(root, 1)} encodes as a
    /// carrying descent on label 1 followed by an up-move.
    #[test]
    fn wire_format_is_pinned() {
        let set: EdgeSet = [(node(&[]), 1)].into_iter().collect();
        assert_eq!(encode_edge_set(2, &set), vec![2, 0]);
        assert_eq!(decode_edge_set(4, 2, 16, &[2, 0]).unwrap(), set);
        assert_eq!(encode_edge_set(2, &EdgeSet::new()), Vec::<u64>::new());
        // Reaching a depth-1 edge without carrying the root edge uses a
        // skip descent: {(1, 0)} under branching 2 is skip-1, carry-0, up,
        // up.
        let deep: EdgeSet = [(node(&[1]), 0)].into_iter().collect();
        assert_eq!(encode_edge_set(2, &deep), vec![4, 1, 0, 0]);
        assert_eq!(decode_edge_set(4, 2, 16, &[4, 1, 0, 0]).unwrap(), deep);
    }

    #[test]
    fn rooted_paths_encode_in_two_symbols_per_edge() {
        let tree = ProtocolTree::random(7, 3, 19).unwrap();
        let mut set = EdgeSet::new();
        let mut at = NodeId::root();
        for _ in 0..7 {
            let l = tree.preferred_child(&at).unwrap();
            set.insert(at.clone(), l);
            at = at.child(l);
        }
        assert_eq!(encode_edge_set(3, &set).len(), 2 * set.len());
    }

    #[test]
    fn malformed_words_are_rejected() {
        // Up-move at the root.
        assert_eq!(
            decode_edge_set(3, 2, 16, &[0]),
            Err(WireError::AboveRoot { pos: 0 })
        );
        // Symbol outside the 2b+1 move alphabet.
        assert_eq!(
            decode_edge_set(3, 2, 16, &[5]),
            Err(WireError::BadSymbol { pos: 0, value: 5 })
        );
        // Second descent from the root with a non-ascending label.
        assert_eq!(
            decode_edge_set(3, 2, 16, &[2, 0, 1]),
            Err(WireError::NotAscending { pos: 2 })
        );
        // The same node descended twice.
        assert_eq!(
            decode_edge_set(3, 2, 16, &[1, 0, 1]),
            Err(WireError::NotAscending { pos: 2 })
        );
        // Descent below the leaves.
        assert_eq!(
            decode_edge_set(1, 2, 16, &[1, 1]),
            Err(WireError::BelowLeaves { pos: 1 })
        );
        // Walk that never returns to the root.
        assert_eq!(decode_edge_set(3, 2, 16, &[1]), Err(WireError::Unbalanced));
        // Over the channel's message size limit.
        assert_eq!(
            decode_edge_set(3, 2, 3, &[1, 0, 2, 0]),
            Err(WireError::TooLong { len: 4, max: 3 })
        );
    }

    #[test]
    fn fixture_roundtrip() {
        let text = "\
# depth-2 binary tree
:1
0:0
1:1 # comment after an entry
";
        let tree = ProtocolTree::load(text).unwrap();
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.branching(), 2);
        assert_eq!(tree.common_leaf(), node(&[1, 1]));
        let reloaded = ProtocolTree::load(&tree.save()).unwrap();
        assert_eq!(tree, reloaded);
    }

    #[test]
    fn fixture_errors_carry_line_numbers() {
        let missing_colon = ProtocolTree::load("0.1\n");
        assert!(matches!(
            missing_colon,
            Err(TreeError::BadFixture { line: 1, .. })
        ));
        let dup = ProtocolTree::load(":0\n:1\n");
        assert!(matches!(dup, Err(TreeError::BadFixture { line: 2, .. })));
        // Incomplete coverage: node 1 has no preferred edge.
        let incomplete = ProtocolTree::load(":0\n0:1\n0.1:0\n");
        assert!(matches!(incomplete, Err(TreeError::MissingPreferred(_))));
    }

    #[test]
    fn leaf_iterator_is_lexicographic_and_complete() {
        let tree = ProtocolTree::random(2, 3, 0).unwrap();
        let leaves: Vec<NodeId> = tree.leaves_from().collect();
        assert_eq!(leaves.len(), 9);
        assert_eq!(leaves[0], node(&[0, 0]));
        assert_eq!(leaves[1], node(&[0, 1]));
        assert_eq!(leaves[8], node(&[2, 2]));
        let mut sorted = leaves.clone();
        sorted.sort();
        assert_eq!(leaves, sorted);
    }

    fn arb_edge_set(depth: usize, branching: u8) -> impl Strategy<Value = EdgeSet> {
        proptest::collection::vec(
            (
                proptest::collection::vec(0..branching, 0..depth),
                0..branching,
            ),
            0..12,
        )
        .prop_map(|edges| {
            edges
                .into_iter()
                .map(|(path, label)| (NodeId::from_labels(path), label))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn wire_roundtrip(set in arb_edge_set(5, 3)) {
            let word = encode_edge_set(3, &set);
            prop_assert!(word.iter().all(|&s| s < move_alphabet_size(3)));
            let back = decode_edge_set(5, 3, 4 * 64, &word).unwrap();
            prop_assert_eq!(back, set);
        }

        #[test]
        fn union_is_commutative_and_conflict_safe(
            a in arb_edge_set(4, 2),
            b in arb_edge_set(4, 2),
        ) {
            let ab = a.union(&b);
            let ba = b.union(&a);
            prop_assert_eq!(ab.is_some(), ba.is_some());
            if let (Some(x), Some(y)) = (ab, ba) {
                prop_assert_eq!(&x, &y);
                for (n, l) in a.iter() {
                    prop_assert_eq!(x.get(n), Some(*l));
                }
                for (n, l) in b.iter() {
                    prop_assert_eq!(x.get(n), Some(*l));
                }
            }
        }

        #[test]
        fn merge_never_panics_and_leaves_are_real(
            seed in 0u64..1000,
            a in arb_edge_set(4, 2),
            b in arb_edge_set(4, 2),
        ) {
            let tree = ProtocolTree::random(4, 2, seed).unwrap();
            match tree.merge_and_follow(&a, Some(&b)) {
                PathResult::Leaf(leaf) => prop_assert_eq!(leaf.depth(), 4),
                PathResult::Frontier(f) => prop_assert!(f.depth() < 4),
                PathResult::Invalid => {}
            }
        }
    }
}
