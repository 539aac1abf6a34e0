//! Rooted, ordered fragment trees.

use serde::Serialize;

use crate::chem::BondOrder;

/// How a child node is joined to its parent: an atom on each side and the
/// order of the bond between them. For dummy-atom schemes the atoms are the
/// paired dummies; for the shared-atom scheme they are the shared atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct JoinRecord {
    pub parent_atom: usize,
    pub child_atom: usize,
    pub order: BondOrder,
}

/// Acyclic molecular tree: ordered children, a join record on every
/// non-root node (absent when the tree was read back from text).
#[derive(Debug, Clone, PartialEq)]
pub struct Amt<N> {
    nodes: Vec<N>,
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    joins: Vec<Option<JoinRecord>>,
}

impl<N> Amt<N> {
    pub fn new(root: N) -> Self {
        Amt { nodes: vec![root], root: 0, parent: vec![None], children: vec![Vec::new()], joins: vec![None] }
    }

    /// Builds a tree over `nodes` from a parent table. Children keep the
    /// order in which they appear in `order` (every non-root node once).
    pub(crate) fn from_parents(
        nodes: Vec<N>,
        root: usize,
        parent: Vec<Option<usize>>,
        joins: Vec<Option<JoinRecord>>,
        order: &[usize],
    ) -> Self {
        let mut children = vec![Vec::new(); nodes.len()];
        for &c in order {
            if let Some(p) = parent[c] {
                children[p].push(c);
            }
        }
        Amt { nodes, root, parent, children, joins }
    }

    pub fn add_child(&mut self, parent: usize, node: N, join: Option<JoinRecord>) -> usize {
        let id = self.nodes.len();
        self.nodes.push(node);
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.joins.push(join);
        self.children[parent].push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, i: usize) -> &N {
        &self.nodes[i]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut N {
        &mut self.nodes[i]
    }

    pub fn nodes(&self) -> &[N] {
        &self.nodes
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn join(&self, i: usize) -> Option<&JoinRecord> {
        self.joins[i].as_ref()
    }

    pub fn set_join(&mut self, i: usize, join: Option<JoinRecord>) {
        self.joins[i] = join;
    }

    /// Depth-first preorder from the root, children in order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![self.root];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u].iter().rev());
        }
        out
    }

    /// Breadth-first order from the root, children in order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        let mut i = 0;
        while i < out.len() {
            out.extend_from_slice(&self.children[out[i]]);
            i += 1;
        }
        out
    }

    /// Edges as sorted `(min, max)` node index pairs.
    pub fn undirected_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> =
            (0..self.len()).filter_map(|c| self.parent[c].map(|p| (p.min(c), p.max(c)))).collect();
        e.sort_unstable();
        e
    }

    pub fn map<M>(&self, mut f: impl FnMut(&N) -> M) -> Amt<M> {
        Amt {
            nodes: self.nodes.iter().map(&mut f).collect(),
            root: self.root,
            parent: self.parent.clone(),
            children: self.children.clone(),
            joins: self.joins.clone(),
        }
    }

    pub fn into_nodes(self) -> Vec<N> {
        self.nodes
    }

    /// Same ordered shape with pairwise-equal payloads, ignoring node
    /// numbering and join records.
    pub fn same_shape<M>(&self, other: &Amt<M>, eq: impl Fn(&N, &M) -> bool) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut stack = vec![(self.root, other.root)];
        while let Some((a, b)) = stack.pop() {
            if !eq(&self.nodes[a], &other.nodes[b]) {
                return false;
            }
            let (ca, cb) = (&self.children[a], &other.children[b]);
            if ca.len() != cb.len() {
                return false;
            }
            stack.extend(ca.iter().copied().zip(cb.iter().copied()));
        }
        true
    }
}
