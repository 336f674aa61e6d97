use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeShape {
    Balanced,
    Linear,
    Custom,
}

/// Tree node; serialises as a bare leaf index or a two-element array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Leaf(usize),
    Pair(Box<[TreeNode; 2]>),
}

impl TreeNode {
    pub fn pair(left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Pair(Box::new([left, right]))
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            TreeNode::Leaf(i) => out.push(*i),
            TreeNode::Pair(kids) => {
                kids[0].collect_leaves(out);
                kids[1].collect_leaves(out);
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Pair(kids) => 1 + kids[0].depth().max(kids[1].depth()),
        }
    }
}

/// Fixed binary tree whose leaves hold the variables `0..m`, each exactly once.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TournamentTree {
    root: TreeNode,
    leaves: usize,
    shape: TreeShape,
}

fn balanced_range(lo: usize, hi: usize) -> TreeNode {
    if hi - lo == 1 {
        return TreeNode::Leaf(lo);
    }
    let mid = lo + (hi - lo).div_ceil(2);
    TreeNode::pair(balanced_range(lo, mid), balanced_range(mid, hi))
}

impl TournamentTree {
    /// Minimum-depth tree over `0..m`, leaves in index order.
    pub fn balanced(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("tree needs at least one leaf".into()));
        }
        Ok(Self {
            root: balanced_range(0, m),
            leaves: m,
            shape: TreeShape::Balanced,
        })
    }

    /// Caterpillar `((((0,1),2),3),...)`: rounds in a predefined linear order.
    pub fn linear(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("tree needs at least one leaf".into()));
        }
        let root = (1..m).fold(TreeNode::Leaf(0), |acc, i| TreeNode::pair(acc, TreeNode::Leaf(i)));
        Ok(Self {
            root,
            leaves: m,
            shape: TreeShape::Linear,
        })
    }

    pub fn custom(root: TreeNode) -> Result<Self> {
        let mut leaves = Vec::new();
        root.collect_leaves(&mut leaves);
        let m = leaves.len();
        let mut seen = vec![false; m];
        for &i in &leaves {
            if i >= m || seen[i] {
                return Err(Error::Domain(format!(
                    "tree leaves must be a permutation of 0..{m}, found {i} out of place"
                )));
            }
            seen[i] = true;
        }
        Ok(Self {
            root,
            leaves: m,
            shape: TreeShape::Custom,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::custom(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.root).expect("tree serialises")
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves
    }

    pub fn shape(&self) -> TreeShape {
        self.shape
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.leaves);
        self.root.collect_leaves(&mut out);
        out
    }
}
