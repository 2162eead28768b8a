//! Suffix-closed scored trie with Hamming-budget traversal.
//!
//! The child of node `s` under symbol `a` spells `a s`: the symbol is
//! prepended, so walking down from the root consumes the history from the
//! most recent symbol backwards. Strings passed in and returned by this
//! module are in chronological order (oldest first), the way they are
//! written: `[-, +, +]` is reached via root -> `+` -> `++` -> `-++`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sequences::{Alphabet, Symbol};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
struct Node {
    score: f64,
    depth: u32,
    parent: u32,
    symbol: Symbol,
    children: Box<[u32]>,
}

impl Node {
    fn new(alphabet_size: usize, depth: u32, parent: u32, symbol: Symbol) -> Self {
        Self {
            score: 0.0,
            depth,
            parent,
            symbol,
            children: vec![NONE; alphabet_size].into_boxed_slice(),
        }
    }
}

/// One tree node within the mismatch budget of a history suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Match {
    /// Suffix length `i` (equals the node depth).
    pub len: usize,
    /// Hamming distance `k` to the history suffix of length `len`.
    pub distance: usize,
    pub node: NodeId,
}

/// Counters from one traversal: every examined non-root node is either
/// returned as a match or pruned for exceeding the budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub visited: usize,
    pub pruned: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "TreeJson", from = "TreeJson")]
pub struct ApproxSuffixTree {
    alphabet_size: usize,
    nodes: Vec<Node>,
    max_depth: usize,
}

impl ApproxSuffixTree {
    pub fn new(alphabet: Alphabet) -> Self {
        Self::with_alphabet_size(alphabet.size())
    }

    fn with_alphabet_size(alphabet_size: usize) -> Self {
        Self {
            alphabet_size,
            nodes: vec![Node::new(alphabet_size, 0, NONE, 0)],
            max_depth: 0,
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Number of non-root nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn score(&self, id: NodeId) -> f64 {
        self.nodes[id.index()].score
    }

    pub fn set_score(&mut self, id: NodeId, g: f64) {
        self.nodes[id.index()].score = g;
    }

    pub fn add_score(&mut self, id: NodeId, delta: f64) {
        self.nodes[id.index()].score += delta;
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.nodes[id.index()].depth as usize
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        let p = self.nodes[id.index()].parent;
        (p != NONE).then_some(NodeId(p))
    }

    /// Edge symbol leading into `id` (its oldest symbol); `None` at the root.
    pub fn symbol(&self, id: NodeId) -> Option<Symbol> {
        (id != NodeId::ROOT).then(|| self.nodes[id.index()].symbol)
    }

    pub fn child(&self, id: NodeId, symbol: Symbol) -> Option<NodeId> {
        let c = self.nodes[id.index()].children[symbol as usize];
        (c != NONE).then_some(NodeId(c))
    }

    /// Non-root node ids in creation order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (1..self.nodes.len() as u32).map(NodeId)
    }

    /// The string a node spells, oldest symbol first.
    pub fn spelled(&self, id: NodeId) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.depth(id));
        let mut cur = id;
        while cur != NodeId::ROOT {
            let node = &self.nodes[cur.index()];
            out.push(node.symbol);
            cur = NodeId(node.parent);
        }
        out
    }

    /// Sum of squared scores over all nodes.
    pub fn score_norm_sq(&self) -> f64 {
        self.nodes[1..].iter().map(|n| n.score * n.score).sum()
    }

    pub fn find(&self, suffix: &[Symbol]) -> Option<NodeId> {
        let mut cur = NodeId::ROOT;
        for &s in suffix.iter().rev() {
            cur = self.child(cur, s)?;
        }
        Some(cur)
    }

    /// Returns the node spelling `suffix`, creating it together with any
    /// missing ancestors (score 0) when `create_missing` is set.
    pub fn upsert_path(&mut self, suffix: &[Symbol], create_missing: bool) -> Option<NodeId> {
        if create_missing {
            Some(self.get_or_insert(suffix).0)
        } else {
            self.find(suffix)
        }
    }

    /// Like [`upsert_path`](Self::upsert_path) with creation; the flag reports
    /// whether the terminal node was newly created.
    pub fn get_or_insert(&mut self, suffix: &[Symbol]) -> (NodeId, bool) {
        let mut cur = NodeId::ROOT;
        let mut created = false;
        for &s in suffix.iter().rev() {
            let (next, new) = self.get_or_insert_child(cur, s);
            cur = next;
            created = new;
        }
        (cur, created)
    }

    pub fn get_or_insert_child(&mut self, parent: NodeId, symbol: Symbol) -> (NodeId, bool) {
        if let Some(c) = self.child(parent, symbol) {
            return (c, false);
        }
        let id = self.nodes.len() as u32;
        let depth = self.nodes[parent.index()].depth + 1;
        self.nodes
            .push(Node::new(self.alphabet_size, depth, parent.0, symbol));
        self.nodes[parent.index()].children[symbol as usize] = id;
        self.max_depth = self.max_depth.max(depth as usize);
        (NodeId(id), true)
    }

    /// All nodes within Hamming distance `epsilon` of the history suffixes
    /// `y_{t-i} .. y_{t-1}` for `1 <= i <= min(t - 1, max_depth)`, where
    /// `history = y_1 .. y_{t-1}`.
    ///
    /// Ordered by increasing length, then distance, then the node's
    /// root-to-node symbol path.
    pub fn collect_matches(
        &self,
        history: &[Symbol],
        epsilon: usize,
        max_depth: Option<usize>,
    ) -> Vec<Match> {
        self.collect_matches_with_stats(history, epsilon, max_depth).0
    }

    pub fn collect_matches_with_stats(
        &self,
        history: &[Symbol],
        epsilon: usize,
        max_depth: Option<usize>,
    ) -> (Vec<Match>, TraversalStats) {
        let mut out = Vec::new();
        let mut stats = TraversalStats::default();
        let cap = max_depth.map_or(history.len(), |d| d.min(history.len()));
        // frontier entries stay in root-to-node lexicographic order
        let mut frontier: Vec<(u32, usize)> = vec![(0, 0)];
        let mut next: Vec<(u32, usize)> = Vec::new();
        for depth in 1..=cap {
            let expected = history[history.len() - depth];
            next.clear();
            for &(node, used) in &frontier {
                for (sym, &child) in self.nodes[node as usize].children.iter().enumerate() {
                    if child == NONE {
                        continue;
                    }
                    stats.visited += 1;
                    let k = used + usize::from(sym as Symbol != expected);
                    if k <= epsilon {
                        next.push((child, k));
                    } else {
                        stats.pruned += 1;
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            let level_start = out.len();
            out.extend(next.iter().map(|&(node, k)| Match {
                len: depth,
                distance: k,
                node: NodeId(node),
            }));
            out[level_start..].sort_by_key(|m| m.distance);
            std::mem::swap(&mut frontier, &mut next);
        }
        (out, stats)
    }

    /// Every node's parent spells its suffix one symbol shorter and depths
    /// agree with path lengths.
    pub fn is_suffix_closed(&self) -> bool {
        self.node_ids().all(|id| {
            let node = &self.nodes[id.index()];
            let parent = &self.nodes[node.parent as usize];
            parent.depth + 1 == node.depth
                && parent.children[node.symbol as usize] == id.0
                && self.spelled(id)[1..] == self.spelled(NodeId(node.parent))[..]
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::from_json_deep(text)
    }
}

/// Structural equality on (spelled string, score) sets, ignoring node ids.
impl PartialEq for ApproxSuffixTree {
    fn eq(&self, other: &Self) -> bool {
        if self.alphabet_size != other.alphabet_size || self.node_count() != other.node_count() {
            return false;
        }
        self.node_ids().all(|id| {
            other
                .find(&self.spelled(id))
                .is_some_and(|o| other.score(o).to_bits() == self.score(id).to_bits())
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeJson {
    symbol: Option<Symbol>,
    g: f64,
    children: Vec<NodeJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TreeJson {
    alphabet_size: usize,
    root: NodeJson,
}

impl From<ApproxSuffixTree> for TreeJson {
    fn from(tree: ApproxSuffixTree) -> Self {
        fn build(tree: &ApproxSuffixTree, id: NodeId) -> NodeJson {
            let node = &tree.nodes[id.index()];
            NodeJson {
                symbol: tree.symbol(id),
                g: node.score,
                children: node
                    .children
                    .iter()
                    .filter(|&&c| c != NONE)
                    .map(|&c| build(tree, NodeId(c)))
                    .collect(),
            }
        }
        TreeJson {
            alphabet_size: tree.alphabet_size,
            root: build(&tree, NodeId::ROOT),
        }
    }
}

impl From<TreeJson> for ApproxSuffixTree {
    fn from(json: TreeJson) -> Self {
        fn attach(tree: &mut ApproxSuffixTree, parent: NodeId, node: &NodeJson) {
            for child in &node.children {
                // out-of-range symbols are dropped rather than panicking on index
                let Some(sym) = child.symbol.filter(|&s| (s as usize) < tree.alphabet_size) else {
                    continue;
                };
                let (id, _) = tree.get_or_insert_child(parent, sym);
                tree.set_score(id, child.g);
                attach(tree, id, child);
            }
        }
        let mut tree = ApproxSuffixTree::with_alphabet_size(json.alphabet_size.max(2));
        tree.set_score(NodeId::ROOT, json.root.g);
        attach(&mut tree, NodeId::ROOT, &json.root);
        tree
    }
}

/// Hamming distance between equal-length strings.
pub fn hamming(a: &[Symbol], b: &[Symbol]) -> usize {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
