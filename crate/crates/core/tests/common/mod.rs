//! Shared helpers for integration tests: seeded random graphs and models,
//! and a brute-force joint-table oracle that shares no code with the
//! library's evaluator.

#![allow(dead_code)]

use causal_audit::graph::{CausalGraph, GraphDecl, NodeKind};
use causal_audit::scm::DiscreteScm;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Node names `A`, `B`, ... in order.
pub fn letters(n: usize) -> Vec<String> {
    (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
}

/// A random DAG skeleton over `names`: a random topological order and each
/// forward pair joined with probability `p`.
pub fn random_edges(rng: &mut TestRng, names: &[String], p: f64) -> Vec<(String, String)> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rng.gen_bool(p) {
                edges.push((names[order[i]].clone(), names[order[j]].clone()));
            }
        }
    }
    edges
}

pub fn build_graph(nodes: &[(String, NodeKind)], edges: &[(String, String)]) -> CausalGraph {
    let mut d = GraphDecl::new();
    for (n, k) in nodes {
        d = d.node(n, *k);
    }
    for (a, b) in edges {
        d = d.edge(a, b);
    }
    d.build().expect("generated graph is valid")
}

/// Random graph with `n` nodes; each non-source node is latent with
/// probability `latent_p`.
pub fn random_graph(rng: &mut TestRng, n: usize, p: f64, latent_p: f64) -> CausalGraph {
    let names = letters(n);
    let edges = random_edges(rng, &names, p);
    let nodes: Vec<(String, NodeKind)> = names
        .iter()
        .map(|n| (n.clone(), if rng.gen_bool(latent_p) { NodeKind::Latent } else { NodeKind::Observed }))
        .collect();
    build_graph(&nodes, &edges)
}

/// A discrete model held independently of the library: variables in a
/// fixed topological order, CPT rows indexed mixed-radix over the parent
/// list with the last parent varying fastest.
#[derive(Clone, Debug)]
pub struct Model {
    pub names: Vec<String>,
    pub card: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    pub cpt: Vec<Vec<Vec<f64>>>,
}

impl Model {
    pub fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap_or_else(|| panic!("no variable {name}"))
    }

    fn row_of(&self, v: usize, assignment: &[usize]) -> usize {
        self.parents[v].iter().fold(0, |acc, &p| acc * self.card[p] + assignment[p])
    }

    /// Every full assignment with its probability under `do(clamp)`.
    pub fn joint(&self, clamp: &[(usize, usize)]) -> Vec<(Vec<usize>, f64)> {
        let n = self.names.len();
        let mut out = Vec::new();
        let mut a = vec![0usize; n];
        self.extend(0, 1.0, &mut a, clamp, &mut out);
        out
    }

    fn extend(&self, v: usize, p: f64, a: &mut Vec<usize>, clamp: &[(usize, usize)], out: &mut Vec<(Vec<usize>, f64)>) {
        if v == self.names.len() {
            out.push((a.clone(), p));
            return;
        }
        if let Some(&(_, val)) = clamp.iter().find(|(c, _)| *c == v) {
            a[v] = val;
            self.extend(v + 1, p, a, clamp, out);
            return;
        }
        let row = self.row_of(v, a);
        for val in 0..self.card[v] {
            a[v] = val;
            self.extend(v + 1, p * self.cpt[v][row][val], a, clamp, out);
        }
    }

    pub fn prob(joint: &[(Vec<usize>, f64)], event: &[(usize, usize)]) -> f64 {
        joint.iter().filter(|(a, _)| event.iter().all(|&(v, x)| a[v] == x)).map(|(_, p)| p).sum()
    }

    /// `P(target | given)`, or `None` when the condition has probability 0.
    pub fn cond(joint: &[(Vec<usize>, f64)], target: &[(usize, usize)], given: &[(usize, usize)]) -> Option<f64> {
        let den = Self::prob(joint, given);
        if den <= 0.0 {
            return None;
        }
        let both: Vec<(usize, usize)> = target.iter().chain(given).copied().collect();
        Some(Self::prob(joint, &both) / den)
    }

    pub fn value_label(val: usize) -> String {
        val.to_string()
    }

    /// Converts to a library model over `graph`, which must have the same
    /// nodes (discrepancy nodes excepted) and matching parent sets.
    pub fn to_scm(&self, graph: &CausalGraph) -> DiscreteScm {
        let mut b = DiscreteScm::builder(graph);
        for (i, n) in self.names.iter().enumerate() {
            let values: Vec<String> = (0..self.card[i]).map(Self::value_label).collect();
            b = b.domain(n, &values);
        }
        for (i, n) in self.names.iter().enumerate() {
            let parents: Vec<&str> = self.parents[i].iter().map(|&p| self.names[p].as_str()).collect();
            b = b.cpt(n, &parents, self.cpt[i].clone());
        }
        b.build().expect("generated model is valid")
    }
}

/// A strictly positive random distribution over `k` values.
pub fn random_row(rng: &mut TestRng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Random positive CPTs for every non-discrepancy node of `g`, using the
/// graph's parent sets minus discrepancy nodes. Selection nodes are binary.
pub fn random_model(rng: &mut TestRng, g: &CausalGraph) -> Model {
    let vars: Vec<String> = topo_order(g)
        .into_iter()
        .filter(|n| g.kind(n).unwrap() != NodeKind::Discrepancy)
        .collect();
    let card: Vec<usize> = vars
        .iter()
        .map(|n| if g.kind(n).unwrap() == NodeKind::SelectionIndicator { 2 } else { rng.gen_range(2..=3) })
        .collect();
    let parents: Vec<Vec<usize>> = vars
        .iter()
        .map(|n| {
            g.parents(n)
                .unwrap()
                .iter()
                .filter(|p| g.kind(p.as_str()).unwrap() != NodeKind::Discrepancy)
                .map(|p| vars.iter().position(|v| v == p.as_str()).unwrap())
                .collect()
        })
        .collect();
    let cpt = (0..vars.len())
        .map(|i| {
            let rows: usize = parents[i].iter().map(|&p| card[p]).product();
            (0..rows).map(|_| random_row(rng, card[i])).collect()
        })
        .collect();
    Model { names: vars, card, parents, cpt }
}

/// Node names in a topological order (Kahn's algorithm, ties by name).
pub fn topo_order(g: &CausalGraph) -> Vec<String> {
    let names: Vec<String> = g.nodes().map(|(n, _)| n.to_string()).collect();
    let mut indeg: Vec<usize> = names.iter().map(|n| g.parents(n).unwrap().len()).collect();
    let mut out = Vec::new();
    let mut done = vec![false; names.len()];
    while out.len() < names.len() {
        let i = (0..names.len()).find(|&i| !done[i] && indeg[i] == 0).expect("acyclic");
        done[i] = true;
        out.push(names[i].clone());
        for c in g.children(&names[i]).unwrap() {
            let j = names.iter().position(|n| n == c.as_str()).unwrap();
            indeg[j] -= 1;
        }
    }
    out
}

/// Lists every assignment of values to `vars`, as `(var, value)` events.
pub fn assignments(model: &Model, vars: &[usize]) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for &v in vars {
        let mut next = Vec::new();
        for prefix in &out {
            for val in 0..model.card[v] {
                let mut e = prefix.clone();
                e.push((v, val));
                next.push(e);
            }
        }
        out = next;
    }
    out
}
