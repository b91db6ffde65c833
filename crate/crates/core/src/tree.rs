//! Finite trees of integer sequences and their embedding into ℓ¹.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{Metric, PointCloud, SparseVec};
use crate::regular::{search_regular, RegularFamily};

/// A finite prefix-closed set of sequences containing the empty sequence.
/// Nodes are kept shortest first and lexicographically within a length;
/// a node's position in that order is its `ord`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct FiniteTree {
    nodes: Vec<Vec<u32>>,
    ord: HashMap<Vec<u32>, usize>,
}

impl FiniteTree {
    /// Validates prefix-closure; repeated nodes are merged.
    pub fn new(mut nodes: Vec<Vec<u32>>) -> Result<Self> {
        nodes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        nodes.dedup();
        if nodes.first().is_none_or(|r| !r.is_empty()) {
            return Err(Error::InvalidTree("the empty sequence is missing".into()));
        }
        let ord: HashMap<Vec<u32>, usize> = nodes.iter().cloned().enumerate().map(|(i, u)| (u, i)).collect();
        for u in &nodes[1..] {
            if !ord.contains_key(&u[..u.len() - 1]) {
                return Err(Error::InvalidTree(format!("{u:?} is present but its parent is not")));
            }
        }
        Ok(FiniteTree { nodes, ord })
    }

    /// The root alone.
    pub fn root() -> Self {
        FiniteTree::new(vec![vec![]]).unwrap()
    }

    /// `{∅, (0), (0,0), …}` with longest node of length `len`.
    pub fn branch(len: usize) -> Self {
        FiniteTree::new((0..=len).map(|n| vec![0; n]).collect()).unwrap()
    }

    /// Every sequence over `{0, …, arity-1}` of length at most `depth`.
    pub fn full(depth: usize, arity: u32) -> Self {
        let mut nodes = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 0..depth {
            frontier = frontier
                .iter()
                .flat_map(|u: &Vec<u32>| {
                    (0..arity).map(move |c| {
                        let mut v = u.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
            nodes.extend(frontier.iter().cloned());
        }
        FiniteTree::new(nodes).unwrap()
    }

    pub fn nodes(&self) -> &[Vec<u32>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: the root is a node.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, u: &[u32]) -> bool {
        self.ord.contains_key(u)
    }

    pub fn ord(&self, u: &[u32]) -> Result<usize> {
        self.ord.get(u).copied().ok_or_else(|| Error::InvalidTree(format!("{u:?} is not a node")))
    }

    /// Length of the longest node.
    pub fn height(&self) -> usize {
        self.nodes.last().map_or(0, Vec::len)
    }

    /// A node of maximal length (the lexicographically first one).
    pub fn longest_node(&self) -> &[u32] {
        let h = self.height();
        self.nodes.iter().find(|u| u.len() == h).unwrap()
    }
}

impl TryFrom<Vec<Vec<u32>>> for FiniteTree {
    type Error = Error;

    fn try_from(nodes: Vec<Vec<u32>>) -> Result<Self> {
        FiniteTree::new(nodes)
    }
}

impl From<FiniteTree> for Vec<Vec<u32>> {
    fn from(t: FiniteTree) -> Self {
        t.nodes
    }
}

/// The coordinate `2·ord(u) + i` reserved for the pair `(u, i)`.
pub fn index_of(tree: &FiniteTree, u: &[u32], i: u32) -> Result<usize> {
    if i > 1 {
        return Err(Error::param(format!("bit must be 0 or 1, got {i}")));
    }
    Ok(2 * tree.ord(u)? + i as usize)
}

fn magnitude(n: usize) -> f64 {
    2f64.powi(-2 * n as i32 - 1)
}

/// `φ(∅) = {0}`, and for `v = u⌢j` at length `n + 1`,
/// `φ(v) = {x + 2^{-2n-1}·χ(index_of(v, i)) : x ∈ φ(u), i ∈ {0, 1}}`.
pub fn phi(tree: &FiniteTree, u: &[u32]) -> Result<Vec<SparseVec>> {
    tree.ord(u)?;
    let mut set = vec![SparseVec::zero()];
    for n in 0..u.len() {
        set = extend(tree, &set, &u[..=n])?;
    }
    Ok(set)
}

fn extend(tree: &FiniteTree, parent: &[SparseVec], v: &[u32]) -> Result<Vec<SparseVec>> {
    let step = magnitude(v.len() - 1);
    let a = index_of(tree, v, 0)?;
    let b = index_of(tree, v, 1)?;
    Ok(parent.iter().flat_map(|x| [x.plus_unit(a, step), x.plus_unit(b, step)]).collect())
}

/// `⋃_{u ∈ T} φ(u)` as an ℓ¹ cloud.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub tree: FiniteTree,
    pub cloud: PointCloud,
    /// `node_of[p]` is the ord of the node whose image contains point `p`.
    pub node_of: Vec<usize>,
    lookup: HashMap<Vec<(usize, u64)>, usize>,
}

impl Embedding {
    /// The cloud index of a vector, if it is a point of the embedding.
    pub fn find(&self, x: &SparseVec) -> Option<usize> {
        self.lookup.get(&x.key()).copied()
    }
}

/// Points are listed node by node in ord order.
pub fn phi_bar(tree: &FiniteTree) -> Result<Embedding> {
    let mut images: Vec<Vec<SparseVec>> = Vec::with_capacity(tree.len());
    let mut points = Vec::new();
    let mut node_of = Vec::new();
    let mut lookup = HashMap::new();
    for (ord, u) in tree.nodes().iter().enumerate() {
        let image = if u.is_empty() {
            vec![SparseVec::zero()]
        } else {
            let parent = tree.ord(&u[..u.len() - 1])?;
            extend(tree, &images[parent], u)?
        };
        for x in &image {
            if let std::collections::hash_map::Entry::Vacant(e) = lookup.entry(x.key()) {
                e.insert(points.len());
                points.push(x.clone());
                node_of.push(ord);
            }
        }
        images.push(image);
    }
    Ok(Embedding { tree: tree.clone(), cloud: PointCloud::from_sparse(Metric::L1, points)?, node_of, lookup })
}

/// The (2,2) family along the branch `z`: `y_∅ = 0` and
/// `y_{s⌢c} = y_s + 2^{-2n-1}·χ(index_of(z↾(n+1), c))` for `|s| = n`.
pub fn branch_family(embedding: &Embedding, z: &[u32], depth: u32) -> Result<RegularFamily> {
    let tree = &embedding.tree;
    tree.ord(z)?;
    if z.len() < depth as usize {
        return Err(Error::param(format!("branch of length {} is shorter than depth {depth}", z.len())));
    }
    let mut level = vec![SparseVec::zero()];
    let mut vectors = level.clone();
    for n in 0..depth as usize {
        level = extend(tree, &level, &z[..=n])?;
        vectors.extend(level.iter().cloned());
    }
    let assign = vectors
        .iter()
        .map(|x| embedding.find(x).ok_or_else(|| Error::InvalidTree("branch point missing from the embedding".into())))
        .collect::<Result<Vec<_>>>()?;
    RegularFamily::new(2, 2, depth, false, assign)
}

/// The largest `D ≤ cap` such that a (k,l) family of every depth up to `D`
/// was found, stopping at the first depth that fails. `exhausted` is set
/// when that failure was a budget stop, so the value is only a lower bound.
pub fn max_regular_depth(cloud: &PointCloud, k: u32, l: u32, cap: u32, budget: u64) -> Result<(u32, bool)> {
    if cloud.is_empty() {
        return Ok((0, false));
    }
    for d in 1..=cap {
        let out = search_regular(cloud, k, l, d, false, budget)?;
        if out.family.is_none() {
            return Ok((d - 1, out.exhausted));
        }
    }
    Ok((cap, false))
}
