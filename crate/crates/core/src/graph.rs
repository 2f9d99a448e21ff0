//! Causal graphs over observed, latent, selection-indicator and discrepancy
//! nodes.
//!
//! A [`CausalGraph`] is immutable once built. Bidirected edges are stored as
//! written and only expanded into an explicit latent parent (`U_a_b`) when a
//! consumer needs path semantics; see [`CausalGraph::expand`] and
//! [`IndexedDag`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Name of a graph node. Comparison is exact and case-sensitive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    /// Checked constructor: non-empty ASCII letters, digits and underscore.
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if is_valid_name(&name) {
            Ok(NodeId(name))
        } else {
            Err(Error::InvalidNodeName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl std::borrow::Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Ordered set of node names; iteration is lexicographic.
pub type NodeSet = BTreeSet<NodeId>;

/// Builds a [`NodeSet`] from string-like names.
pub fn node_set<I, S>(names: I) -> NodeSet
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    names.into_iter().map(|s| NodeId::from(s.as_ref())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Observed,
    Latent,
    SelectionIndicator,
    Discrepancy,
}

impl NodeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeKind::Observed => "node",
            NodeKind::Latent => "latent",
            NodeKind::SelectionIndicator => "selection",
            NodeKind::Discrepancy => "discrepancy",
        }
    }
}

/// Unvalidated node and edge lists, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct GraphDecl {
    nodes: Vec<(String, NodeKind)>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
}

impl GraphDecl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(mut self, name: &str, kind: NodeKind) -> Self {
        self.nodes.push((name.to_owned(), kind));
        self
    }

    pub fn observed(self, names: &[&str]) -> Self {
        names.iter().fold(self, |d, n| d.node(n, NodeKind::Observed))
    }

    pub fn latent(self, name: &str) -> Self {
        self.node(name, NodeKind::Latent)
    }

    pub fn selection(self, name: &str) -> Self {
        self.node(name, NodeKind::SelectionIndicator)
    }

    pub fn discrepancy(self, name: &str) -> Self {
        self.node(name, NodeKind::Discrepancy)
    }

    pub fn edge(mut self, from: &str, to: &str) -> Self {
        self.directed.push((from.to_owned(), to.to_owned()));
        self
    }

    pub fn edges(self, pairs: &[(&str, &str)]) -> Self {
        pairs.iter().fold(self, |d, (a, b)| d.edge(a, b))
    }

    pub fn bidirected(mut self, a: &str, b: &str) -> Self {
        self.bidirected.push((a.to_owned(), b.to_owned()));
        self
    }

    pub fn build(self) -> Result<CausalGraph> {
        let mut nodes = BTreeMap::new();
        for (name, kind) in self.nodes {
            let id = NodeId::new(name)?;
            if nodes.insert(id.clone(), kind).is_some() {
                return Err(Error::DuplicateNode(id.0));
            }
        }
        let resolve = |name: &str| -> Result<NodeId> {
            nodes
                .get_key_value(name)
                .map(|(k, _)| k.clone())
                .ok_or_else(|| Error::UnknownNode(name.to_owned()))
        };

        let mut directed = BTreeSet::new();
        for (a, b) in &self.directed {
            let (a, b) = (resolve(a)?, resolve(b)?);
            if a == b {
                return Err(Error::SelfLoop(a.0));
            }
            directed.insert((a, b));
        }
        let mut bidirected = BTreeSet::new();
        for (a, b) in &self.bidirected {
            let (a, b) = (resolve(a)?, resolve(b)?);
            if a == b {
                return Err(Error::SelfLoop(a.0));
            }
            bidirected.insert(if a < b { (a, b) } else { (b, a) });
        }

        let g = CausalGraph { nodes, directed, bidirected };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: BTreeMap<NodeId, NodeKind>,
    directed: BTreeSet<(NodeId, NodeId)>,
    /// Normalized so that the first endpoint sorts before the second.
    bidirected: BTreeSet<(NodeId, NodeId)>,
}

impl CausalGraph {
    fn validate(&self) -> Result<()> {
        for (a, b) in self.directed.iter() {
            if self.nodes[a] == NodeKind::SelectionIndicator {
                return Err(Error::SelectionHasChild(a.0.clone()));
            }
            if self.nodes[b] == NodeKind::Discrepancy {
                return Err(Error::DiscrepancyHasParent(b.0.clone()));
            }
        }
        for (a, b) in self.bidirected.iter() {
            for n in [a, b] {
                if self.nodes[n] == NodeKind::Discrepancy {
                    return Err(Error::DiscrepancyHasParent(n.0.clone()));
                }
            }
        }
        if let Some(cycle) = self.find_cycle() {
            return Err(Error::CycleDetected(cycle));
        }
        Ok(())
    }

    /// Returns one directed cycle as `[a, b, ..., a]`, if any exists.
    fn find_cycle(&self) -> Option<Vec<NodeId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&NodeId, Mark> = self.nodes.keys().map(|n| (n, Mark::New)).collect();
        let mut stack: Vec<&NodeId> = Vec::new();

        fn visit<'a>(
            g: &'a CausalGraph,
            n: &'a NodeId,
            marks: &mut BTreeMap<&'a NodeId, Mark>,
            stack: &mut Vec<&'a NodeId>,
        ) -> Option<Vec<NodeId>> {
            marks.insert(n, Mark::Active);
            stack.push(n);
            for c in g.children_iter(n) {
                match marks[c] {
                    Mark::Active => {
                        let start = stack.iter().position(|s| *s == c).unwrap_or(0);
                        let mut cycle: Vec<NodeId> = stack[start..].iter().map(|s| (*s).clone()).collect();
                        cycle.push(c.clone());
                        return Some(cycle);
                    }
                    Mark::New => {
                        if let Some(cycle) = visit(g, c, marks, stack) {
                            return Some(cycle);
                        }
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            marks.insert(n, Mark::Done);
            None
        }

        for n in self.nodes.keys() {
            if marks[n] == Mark::New {
                if let Some(cycle) = visit(self, n, &mut marks, &mut stack) {
                    return Some(cycle);
                }
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes with their kinds, in lexicographic order.
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> {
        self.nodes.iter().map(|(n, k)| (n, *k))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }

    pub fn kind(&self, name: &str) -> Result<NodeKind> {
        self.nodes
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    pub(crate) fn id(&self, name: &str) -> Result<NodeId> {
        self.nodes
            .get_key_value(name)
            .map(|(k, _)| k.clone())
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> NodeSet {
        self.nodes
            .iter()
            .filter(|(_, k)| **k == kind)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.directed.iter().map(|(a, b)| (a, b))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> {
        self.bidirected.iter().map(|(a, b)| (a, b))
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.directed.iter().any(|(a, b)| a.as_str() == from && b.as_str() == to)
    }

    fn children_iter<'a>(&'a self, n: &'a NodeId) -> impl Iterator<Item = &'a NodeId> + 'a {
        self.directed
            .range((n.clone(), NodeId(String::new()))..)
            .take_while(move |(a, _)| a == n)
            .map(|(_, b)| b)
    }

    pub fn children(&self, name: &str) -> Result<NodeSet> {
        let id = self.id(name)?;
        Ok(self.children_iter(&id).cloned().collect())
    }

    /// Directed parents only; bidirected partners are not parents.
    pub fn parents(&self, name: &str) -> Result<NodeSet> {
        let id = self.id(name)?;
        Ok(self
            .directed
            .iter()
            .filter(|(_, b)| *b == id)
            .map(|(a, _)| a.clone())
            .collect())
    }

    /// Proper descendants along directed edges.
    pub fn descendants(&self, name: &str) -> Result<NodeSet> {
        let id = self.id(name)?;
        let mut seen = NodeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(n) = stack.pop() {
            for c in self.children_iter(&n) {
                if seen.insert(c.clone()) {
                    stack.push(c.clone());
                }
            }
        }
        seen.remove(&id);
        Ok(seen)
    }

    /// Proper ancestors along directed edges.
    pub fn ancestors(&self, name: &str) -> Result<NodeSet> {
        let id = self.id(name)?;
        let mut seen = NodeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(n) = stack.pop() {
            for (a, _) in self.directed.iter().filter(|(_, b)| *b == n) {
                if seen.insert(a.clone()) {
                    stack.push(a.clone());
                }
            }
        }
        seen.remove(&id);
        Ok(seen)
    }

    pub(crate) fn check_known(&self, set: &NodeSet) -> Result<()> {
        match set.iter().find(|n| !self.nodes.contains_key(n.as_str())) {
            Some(n) => Err(Error::UnknownNode(n.0.clone())),
            None => Ok(()),
        }
    }

    /// Removes every edge into `cut_incoming` (including bidirected edges
    /// touching those nodes) and every directed edge out of `cut_outgoing`.
    pub fn mutilate(&self, cut_incoming: &NodeSet, cut_outgoing: &NodeSet) -> Result<CausalGraph> {
        self.check_known(cut_incoming)?;
        self.check_known(cut_outgoing)?;
        let directed = self
            .directed
            .iter()
            .filter(|(a, b)| !cut_incoming.contains(b) && !cut_outgoing.contains(a))
            .cloned()
            .collect();
        let bidirected = self
            .bidirected
            .iter()
            .filter(|(a, b)| !cut_incoming.contains(a) && !cut_incoming.contains(b))
            .cloned()
            .collect();
        Ok(CausalGraph { nodes: self.nodes.clone(), directed, bidirected })
    }

    /// Graph restricted to the nodes not in `drop`.
    pub fn without_nodes(&self, drop: &NodeSet) -> CausalGraph {
        CausalGraph {
            nodes: self
                .nodes
                .iter()
                .filter(|(n, _)| !drop.contains(*n))
                .map(|(n, k)| (n.clone(), *k))
                .collect(),
            directed: self
                .directed
                .iter()
                .filter(|(a, b)| !drop.contains(a) && !drop.contains(b))
                .cloned()
                .collect(),
            bidirected: self
                .bidirected
                .iter()
                .filter(|(a, b)| !drop.contains(a) && !drop.contains(b))
                .cloned()
                .collect(),
        }
    }

    /// Replaces each bidirected edge `a <-> b` by a fresh latent `U_a_b`
    /// with edges to `a` and `b`. Fresh names avoid collisions by appending
    /// underscores.
    pub fn expand(&self) -> Expansion {
        let mut nodes = self.nodes.clone();
        let mut directed = self.directed.clone();
        let mut fresh = BTreeMap::new();
        for (a, b) in &self.bidirected {
            let mut name = format!("U_{a}_{b}");
            while nodes.contains_key(name.as_str()) {
                name.push('_');
            }
            let u = NodeId(name);
            nodes.insert(u.clone(), NodeKind::Latent);
            directed.insert((u.clone(), a.clone()));
            directed.insert((u.clone(), b.clone()));
            fresh.insert(u, (a.clone(), b.clone()));
        }
        Expansion {
            graph: CausalGraph { nodes, directed, bidirected: BTreeSet::new() },
            fresh,
        }
    }

    /// Name of the latent that [`expand`](Self::expand) introduces for `a <-> b`.
    pub fn fresh_latent_name(&self, a: &str, b: &str) -> Option<NodeId> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.expand()
            .fresh
            .into_iter()
            .find(|(_, (x, y))| x.as_str() == key.0 && y.as_str() == key.1)
            .map(|(u, _)| u)
    }
}

/// Result of [`CausalGraph::expand`].
#[derive(Clone, Debug)]
pub struct Expansion {
    pub graph: CausalGraph,
    /// Fresh latent name mapped to the bidirected pair it stands for.
    pub fresh: BTreeMap<NodeId, (NodeId, NodeId)>,
}

impl Expansion {
    /// Folds fresh latents that still have exactly two children and no
    /// parents back into bidirected edges.
    pub fn contract(&self) -> CausalGraph {
        let g = &self.graph;
        let mut out = g.clone();
        for u in self.fresh.keys() {
            let kids: Vec<&NodeId> = g.children_iter(u).collect();
            let has_parent = g.directed.iter().any(|(_, b)| b == u);
            if kids.len() == 2 && !has_parent {
                out.nodes.remove(u);
                out.directed.retain(|(a, _)| a != u);
                out.bidirected.insert((kids[0].clone(), kids[1].clone()));
            }
        }
        out
    }
}

/// Index-based view of the bidirected-expanded graph. Node indices follow
/// lexicographic name order, and adjacency lists are sorted, so any
/// traversal that visits neighbors in list order is lexicographic.
#[derive(Clone, Debug)]
pub struct IndexedDag {
    names: Vec<NodeId>,
    kinds: Vec<NodeKind>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    index: HashMap<NodeId, usize>,
}

impl IndexedDag {
    pub fn new(g: &CausalGraph) -> Self {
        let expanded = g.expand().graph;
        let names: Vec<NodeId> = expanded.nodes.keys().cloned().collect();
        let kinds = expanded.nodes.values().copied().collect();
        let index: HashMap<NodeId, usize> = names.iter().cloned().enumerate().map(|(i, n)| (n, i)).collect();
        let mut parents = vec![Vec::new(); names.len()];
        let mut children = vec![Vec::new(); names.len()];
        for (a, b) in &expanded.directed {
            let (ia, ib) = (index[a], index[b]);
            children[ia].push(ib);
            parents[ib].push(ia);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        IndexedDag { names, kinds, parents, children, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &NodeId {
        &self.names[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_owned()))
    }

    pub fn indices(&self, set: &NodeSet) -> Result<Vec<usize>> {
        set.iter().map(|n| self.index_of(n.as_str())).collect()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    /// Neighbors in either direction, sorted by index.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.parents[i].iter().chain(&self.children[i]).copied().collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Marks `seeds` and all their ancestors.
    pub fn ancestor_mask(&self, seeds: &[bool]) -> Vec<bool> {
        let mut mask = seeds.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&i| seeds[i]).collect();
        while let Some(n) = stack.pop() {
            for &p in &self.parents[n] {
                if !mask[p] {
                    mask[p] = true;
                    stack.push(p);
                }
            }
        }
        mask
    }

    /// Marks `seeds` and all their descendants.
    pub fn descendant_mask(&self, seeds: &[bool]) -> Vec<bool> {
        let mut mask = seeds.to_vec();
        let mut stack: Vec<usize> = (0..self.len()).filter(|&i| seeds[i]).collect();
        while let Some(n) = stack.pop() {
            for &c in &self.children[n] {
                if !mask[c] {
                    mask[c] = true;
                    stack.push(c);
                }
            }
        }
        mask
    }

    pub fn mask(&self, members: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        for &i in members {
            m[i] = true;
        }
        m
    }
}
