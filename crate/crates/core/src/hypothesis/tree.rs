//! The splitting tree over subpools `0..L`.
//!
//! Built bottom-up: adjacent nodes are paired level by level and an odd node
//! at the end of a level is carried up unchanged. For a power-of-two `L` this
//! is plain halving; for other `L` it keeps a full level of two-subpool pools
//! just above the leaves.

use serde::{Deserialize, Serialize};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    /// Subpools `start..end`.
    pub start: usize,
    pub end: usize,
    pub children: Option<(NodeId, NodeId)>,
}

impl Node {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTree {
    nodes: Vec<Node>,
    /// `levels[d]` lists the nodes at depth `d` from the root, left to right.
    levels: Vec<Vec<NodeId>>,
}

impl SplitTree {
    /// Tree over `l ≥ 1` subpools.
    pub fn new(l: usize) -> Self {
        assert!(l >= 1, "split tree needs at least one subpool");
        let mut nodes: Vec<Node> = (0..l)
            .map(|k| Node {
                start: k,
                end: k + 1,
                children: None,
            })
            .collect();
        let mut bottom_up = vec![(0..l).collect::<Vec<NodeId>>()];
        while bottom_up.last().is_some_and(|level| level.len() > 1) {
            let below = bottom_up.last().expect("nonempty");
            let mut level = Vec::with_capacity(below.len().div_ceil(2));
            for pair in below.chunks(2) {
                match *pair {
                    [left, right] => {
                        nodes.push(Node {
                            start: nodes[left].start,
                            end: nodes[right].end,
                            children: Some((left, right)),
                        });
                        level.push(nodes.len() - 1);
                    }
                    [carried] => level.push(carried),
                    _ => unreachable!(),
                }
            }
            bottom_up.push(level);
        }
        bottom_up.reverse();
        Self {
            nodes,
            levels: bottom_up,
        }
    }

    pub fn subpools(&self) -> usize {
        self.levels.last().map_or(0, Vec::len)
    }

    /// Number of splits from the root to the leaves, `⌈log2 L⌉`.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// The level whose pools hold (at most) two subpools.
    pub fn pair_level(&self) -> usize {
        self.depth().saturating_sub(1)
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.levels[0][0]
    }

    /// Pools tested first when testing starts at level `tau`.
    pub fn frontier(&self, tau: usize) -> &[NodeId] {
        &self.levels[tau.min(self.depth())]
    }
}

/// `⌈log2 l⌉`, the depth of the tree over `l` subpools.
pub fn tree_depth(l: usize) -> usize {
    if l <= 1 {
        0
    } else {
        (usize::BITS - (l - 1).leading_zeros()) as usize
    }
}
