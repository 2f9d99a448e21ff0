//! d-separation.
//!
//! Two routes to the same decision:
//!
//! * [`d_separated`] runs a linear-time reachability pass (ancestors of the
//!   conditioning set are marked first, then a ball is passed along
//!   `(node, direction)` states);
//! * [`enumerate_paths`] lists every simple path and applies the local
//!   chain / fork / collider rules to each one. It is exponential and is
//!   used as the oracle for the reachability pass.
//!
//! Both operate on the bidirected-expanded graph. A collider is open iff it
//! or one of its descendants is conditioned on.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{CausalGraph, IndexedDag, NodeId, NodeKind, NodeSet};

/// Largest expanded graph [`enumerate_paths`] will accept.
pub const PATH_ENUMERATION_LIMIT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRule {
    ChainConditioned,
    ForkConditioned,
    ColliderUnopened,
}

impl fmt::Display for BlockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockRule::ChainConditioned => "chain-conditioned",
            BlockRule::ForkConditioned => "fork-conditioned",
            BlockRule::ColliderUnopened => "collider-unopened",
        })
    }
}

/// Orientation of the edge between consecutive path nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// `nodes[i] -> nodes[i + 1]`
    Forward,
    /// `nodes[i] <- nodes[i + 1]`
    Backward,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathWitness {
    pub nodes: Vec<NodeId>,
    pub steps: Vec<Step>,
    pub blocked: bool,
    pub blocking_reason: Option<(NodeId, BlockRule)>,
}

impl fmt::Display for PathWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.nodes.iter().enumerate() {
            if i > 0 {
                f.write_str(match self.steps[i - 1] {
                    Step::Forward => " -> ",
                    Step::Backward => " <- ",
                })?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Separation {
    pub separated: bool,
    /// Lexicographically least unblocked path, present iff not separated.
    pub witness: Option<PathWitness>,
}

/// Conditioning context shared by both routes: `given[i]` marks the
/// conditioning set and `opens[i]` marks nodes that are in it or have a
/// descendant in it (the colliders that are open).
pub struct Conditioning {
    pub given: Vec<bool>,
    pub opens: Vec<bool>,
}

impl Conditioning {
    pub fn new(dag: &IndexedDag, given: &[bool]) -> Self {
        Conditioning { given: given.to_vec(), opens: dag.ancestor_mask(given) }
    }

    /// Whether `mid` lets a path through when entered from `prev` and left
    /// towards `next`. Returns the blocking rule otherwise.
    pub fn pass(&self, dag: &IndexedDag, prev: usize, mid: usize, next: usize) -> Option<BlockRule> {
        let into_from_prev = dag.has_edge(prev, mid);
        let into_from_next = dag.has_edge(next, mid);
        if into_from_prev && into_from_next {
            (!self.opens[mid]).then_some(BlockRule::ColliderUnopened)
        } else if self.given[mid] {
            if !into_from_prev && !into_from_next {
                Some(BlockRule::ForkConditioned)
            } else {
                Some(BlockRule::ChainConditioned)
            }
        } else {
            None
        }
    }
}

/// Nodes reachable from `sources` by an active trail given `given`.
///
/// `sources` themselves are included. `given` must be disjoint from
/// `sources`.
pub fn reachable(dag: &IndexedDag, sources: &[bool], given: &[bool]) -> Vec<bool> {
    let n = dag.len();
    let opens = dag.ancestor_mask(given);
    // visited[2 * v] for arriving from a child ("up"), visited[2 * v + 1]
    // for arriving from a parent ("down").
    let mut visited = vec![false; 2 * n];
    let mut reached = vec![false; n];
    let mut stack: Vec<(usize, bool)> = (0..n).filter(|&i| sources[i]).map(|i| (i, true)).collect();

    while let Some((v, up)) = stack.pop() {
        let slot = 2 * v + usize::from(!up);
        if visited[slot] {
            continue;
        }
        visited[slot] = true;
        if !given[v] {
            reached[v] = true;
        }
        if up {
            if !given[v] {
                stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
                stack.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
        } else {
            if !given[v] {
                stack.extend(dag.children(v).iter().map(|&c| (c, false)));
            }
            if opens[v] {
                stack.extend(dag.parents(v).iter().map(|&p| (p, true)));
            }
        }
    }
    reached
}

/// Reachability-based d-separation on index masks. No argument checks.
pub fn d_separated_masks(dag: &IndexedDag, xs: &[bool], zs: &[bool], ys: &[bool]) -> bool {
    let reached = reachable(dag, xs, ys);
    !reached.iter().zip(zs).any(|(r, z)| *r && *z)
}

/// Decides whether `xs` and `zs` are d-separated by `ys` in `g`.
pub fn d_separated(g: &CausalGraph, xs: &NodeSet, zs: &NodeSet, ys: &NodeSet) -> Result<Separation> {
    check_triple(g, xs, zs, ys)?;
    let dag = IndexedDag::new(g);
    separation_in(&dag, xs, zs, ys)
}

pub(crate) fn separation_in(dag: &IndexedDag, xs: &NodeSet, zs: &NodeSet, ys: &NodeSet) -> Result<Separation> {
    let x_idx = dag.indices(xs)?;
    let xm = dag.mask(&x_idx);
    let zm = dag.mask(&dag.indices(zs)?);
    let ym = dag.mask(&dag.indices(ys)?);
    if d_separated_masks(dag, &xm, &zm, &ym) {
        return Ok(Separation { separated: true, witness: None });
    }
    let cond = Conditioning::new(dag, &ym);
    let path = least_open_path(dag, &x_idx, &zm, &cond);
    Ok(Separation { separated: false, witness: path.map(|p| witness(dag, &p, &cond)) })
}

pub(crate) fn check_triple(g: &CausalGraph, xs: &NodeSet, zs: &NodeSet, ys: &NodeSet) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::EmptySet("first node set"));
    }
    if zs.is_empty() {
        return Err(Error::EmptySet("second node set"));
    }
    for set in [xs, zs, ys] {
        g.check_known(set)?;
    }
    if let Some(n) = xs.intersection(zs).chain(xs.intersection(ys)).chain(zs.intersection(ys)).next() {
        return Err(Error::OverlappingSets(n.to_string()));
    }
    for y in ys {
        if g.kind(y.as_str())? == NodeKind::Latent {
            return Err(Error::ConditionOnLatent(y.to_string()));
        }
    }
    Ok(())
}

/// Depth-first search over simple paths in lexicographic order; the first
/// open path that ends in `targets` is the least one. Partial paths whose
/// interior is already blocked are pruned.
fn least_open_path(dag: &IndexedDag, sources: &[usize], targets: &[bool], cond: &Conditioning) -> Option<Vec<usize>> {
    fn dfs(dag: &IndexedDag, path: &mut Vec<usize>, on_path: &mut [bool], targets: &[bool], cond: &Conditioning) -> bool {
        let cur = *path.last().expect("path is never empty");
        if path.len() > 1 && targets[cur] {
            return true;
        }
        for nb in dag.neighbors(cur) {
            if on_path[nb] {
                continue;
            }
            if path.len() >= 2 && cond.pass(dag, path[path.len() - 2], cur, nb).is_some() {
                continue;
            }
            path.push(nb);
            on_path[nb] = true;
            if dfs(dag, path, on_path, targets, cond) {
                return true;
            }
            on_path[nb] = false;
            path.pop();
        }
        false
    }

    let mut on_path = vec![false; dag.len()];
    for &s in sources {
        let mut path = vec![s];
        on_path[s] = true;
        if dfs(dag, &mut path, &mut on_path, targets, cond) {
            return Some(path);
        }
        on_path[s] = false;
    }
    None
}

/// Every simple path from `a` to `b`, in lexicographic order of node
/// indices.
pub fn all_simple_paths(dag: &IndexedDag, a: usize, b: usize) -> Vec<Vec<usize>> {
    fn dfs(dag: &IndexedDag, b: usize, path: &mut Vec<usize>, on_path: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let cur = *path.last().expect("path is never empty");
        if cur == b {
            out.push(path.clone());
            return;
        }
        for nb in dag.neighbors(cur) {
            if !on_path[nb] {
                on_path[nb] = true;
                path.push(nb);
                dfs(dag, b, path, on_path, out);
                path.pop();
                on_path[nb] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on_path = vec![false; dag.len()];
    on_path[a] = true;
    dfs(dag, b, &mut vec![a], &mut on_path, &mut out);
    out
}

/// First interior node (from the start of the path) that blocks it.
pub fn first_block(dag: &IndexedDag, path: &[usize], cond: &Conditioning) -> Option<(usize, BlockRule)> {
    path.windows(3)
        .find_map(|w| cond.pass(dag, w[0], w[1], w[2]).map(|rule| (w[1], rule)))
}

fn witness(dag: &IndexedDag, path: &[usize], cond: &Conditioning) -> PathWitness {
    let steps = path
        .windows(2)
        .map(|w| if dag.has_edge(w[0], w[1]) { Step::Forward } else { Step::Backward })
        .collect();
    let block = first_block(dag, path, cond);
    PathWitness {
        nodes: path.iter().map(|&i| dag.name(i).clone()).collect(),
        steps,
        blocked: block.is_some(),
        blocking_reason: block.map(|(i, rule)| (dag.name(i).clone(), rule)),
    }
}

/// Every simple path between `a` and `b` in the expanded graph, annotated
/// as blocked or open with respect to `given`.
pub fn enumerate_paths(g: &CausalGraph, a: &str, b: &str, given: &NodeSet) -> Result<Vec<PathWitness>> {
    let dag = IndexedDag::new(g);
    let (ia, ib) = (dag.index_of(a)?, dag.index_of(b)?);
    g.check_known(given)?;
    if ia == ib {
        return Err(Error::InvalidArgument(format!("path endpoints must differ (`{a}`)")));
    }
    if let Some(n) = given.iter().find(|n| n.as_str() == a || n.as_str() == b) {
        return Err(Error::OverlappingSets(n.to_string()));
    }
    if let Some(n) = given.iter().find(|n| g.kind(n.as_str()) == Ok(NodeKind::Latent)) {
        return Err(Error::ConditionOnLatent(n.to_string()));
    }
    if dag.len() > PATH_ENUMERATION_LIMIT {
        return Err(Error::GraphTooLarge { nodes: dag.len(), limit: PATH_ENUMERATION_LIMIT });
    }
    let cond = Conditioning::new(&dag, &dag.mask(&dag.indices(given)?));
    Ok(all_simple_paths(&dag, ia, ib)
        .iter()
        .map(|p| witness(&dag, p, &cond))
        .collect())
}

/// d-separation decided by enumerating every path between every pair.
pub fn d_separated_by_paths(g: &CausalGraph, xs: &NodeSet, zs: &NodeSet, ys: &NodeSet) -> Result<bool> {
    check_triple(g, xs, zs, ys)?;
    for x in xs {
        for z in zs {
            if enumerate_paths(g, x.as_str(), z.as_str(), ys)?.iter().any(|p| !p.blocked) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
